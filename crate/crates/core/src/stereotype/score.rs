use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::types::{indicator_values, IndicatorRecord};

/// Linear model over one-hot indicator values, min-max scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreModel {
    #[serde(default)]
    pub version: String,
    pub intercept: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// indicator -> value -> weight
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for ScoreModel {
    fn default() -> Self {
        serde_json::from_str(include_str!("../../data/score_model.json"))
            .expect("bundled score model parses")
    }
}

impl ScoreModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ScoreModel = serde_json::from_str(&raw)
            .map_err(|e| Error::InvalidScoreModel(format!("{}: {e}", path.display())))?;
        model.validate()?;
        Ok(model)
    }

    /// Requires a finite weight for every indicator value and a proper
    /// scaling interval.
    pub fn validate(&self) -> Result<()> {
        if !self.scale_min.is_finite() || !self.scale_max.is_finite() || self.scale_min >= self.scale_max {
            return Err(Error::InvalidScoreModel(format!(
                "scale_min {} must be below scale_max {}",
                self.scale_min, self.scale_max
            )));
        }
        if !self.intercept.is_finite() {
            return Err(Error::InvalidScoreModel("intercept is not finite".into()));
        }
        for (indicator, values) in indicator_values() {
            let Some(table) = self.weights.get(indicator) else {
                return Err(Error::InvalidScoreModel(format!("no weights for {indicator}")));
            };
            for v in values {
                match table.get(v) {
                    Some(w) if w.is_finite() => {}
                    Some(w) => {
                        return Err(Error::InvalidScoreModel(format!("{indicator}={v} has weight {w}")))
                    }
                    None => {
                        return Err(Error::InvalidScoreModel(format!("no weight for {indicator}={v}")))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn weight(&self, indicator: &str, value: &str) -> f64 {
        self.weights
            .get(indicator)
            .and_then(|t| t.get(value))
            .copied()
            .unwrap_or(0.0)
    }

    /// Intercept plus the weights of the record's indicator values.
    pub fn raw(&self, rec: &IndicatorRecord) -> f64 {
        self.intercept
            + rec
                .features()
                .iter()
                .map(|(ind, val)| self.weight(ind, val))
                .sum::<f64>()
    }

    /// Min-max scaled raw value, not clamped.
    pub fn unclamped(&self, rec: &IndicatorRecord) -> f64 {
        (self.raw(rec) - self.scale_min) / (self.scale_max - self.scale_min)
    }

    pub fn score(&self, rec: &IndicatorRecord) -> f64 {
        self.unclamped(rec).clamp(0.0, 1.0)
    }
}
