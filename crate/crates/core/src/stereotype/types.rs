use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Lowercases and strips the quoting and trailing punctuation models like
/// to add around one-word answers.
fn clean(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| c == '\'' || c == '"' || c == '.' || c == ',')
        .trim()
        .to_lowercase()
}

fn is_not_applicable(v: &str) -> bool {
    matches!(v, "not-applicable" | "not applicable" | "n/a" | "na" | "none" | "")
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident = $text:literal $(| $alias:literal)*),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant,)+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }

            pub fn parse(raw: &str) -> Option<Self> {
                let v = clean(raw);
                $(
                    if v == $text $(|| v == $alias)* {
                        return Some($name::$variant);
                    }
                )+
                None
            }
        }
    };
}

label_enum!(YesNo { Yes = "yes", No = "no" });

label_enum!(
    /// Yes/no answer that is not-applicable when no category label exists.
    Answer {
        Yes = "yes",
        No = "no",
        NotApplicable = "not-applicable" | "not applicable" | "n/a",
    }
);

label_enum!(TargetType {
    Specific = "specific" | "specific target",
    Generic = "generic" | "generic target",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

label_enum!(Polarity {
    Negative = "negative",
    Neutral = "neutral",
    Positive = "positive",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

label_enum!(GramForm {
    Noun = "noun",
    Other = "other",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

label_enum!(LingForm {
    Generic = "generic",
    Subset = "subset",
    Individual = "individual",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

label_enum!(Situation {
    Situational = "situational" | "situational behaviour" | "situational behavior",
    Enduring = "enduring" | "enduring characteristics" | "enduring characteristic",
    Other = "other",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

label_enum!(Generalization {
    Abstract = "abstract",
    Concrete = "concrete",
    NotApplicable = "not-applicable" | "not applicable" | "n/a",
});

pub const NOT_APPLICABLE: &str = "not-applicable";

/// Why a model answer could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Payload(#[from] crate::llm::PayloadError),
    #[error("field {field:?} has invalid value {value:?}")]
    InvalidValue { field: String, value: String },
}

fn field_str<'a>(map: &'a Map<String, Value>, field: &str) -> &'a str {
    map.get(field).and_then(Value::as_str).unwrap_or("")
}

fn parse_field<T>(map: &Map<String, Value>, field: &str, parse: fn(&str) -> Option<T>) -> Result<T, ParseError> {
    let raw = field_str(map, field);
    parse(raw).ok_or_else(|| ParseError::InvalidValue {
        field: field.to_string(),
        value: raw.to_string(),
    })
}

fn free_text(map: &Map<String, Value>, field: &str) -> String {
    let raw = field_str(map, field).trim();
    if is_not_applicable(&clean(raw)) {
        NOT_APPLICABLE.to_string()
    } else {
        raw.to_string()
    }
}

/// Answer of the detection step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub has_category_label: YesNo,
    pub full_label: String,
    pub beliefs_expectancies: Answer,
    pub information: String,
    pub behavior_features_traits: Answer,
    pub stereotype: YesNo,
}

impl DetectionResult {
    pub const FIELDS: [&'static str; 6] = [
        "has_category_label",
        "full_label",
        "beliefs_expectancies",
        "information",
        "behavior_features_traits",
        "stereotype",
    ];

    /// Parses the model's JSON answer. Without a category label every
    /// dependent field is forced to not-applicable and the answer to no.
    pub fn from_response(text: &str) -> Result<Self, ParseError> {
        let map = crate::llm::parse_json_payload(text, &Self::FIELDS)?;
        let mut r = DetectionResult {
            has_category_label: parse_field(&map, "has_category_label", YesNo::parse)?,
            full_label: free_text(&map, "full_label"),
            beliefs_expectancies: parse_field(&map, "beliefs_expectancies", Answer::parse)?,
            information: free_text(&map, "information"),
            behavior_features_traits: parse_field(&map, "behavior_features_traits", Answer::parse)?,
            stereotype: parse_field(&map, "stereotype", YesNo::parse)?,
        };
        if r.has_category_label == YesNo::No {
            r.full_label = NOT_APPLICABLE.into();
            r.beliefs_expectancies = Answer::NotApplicable;
            r.information = NOT_APPLICABLE.into();
            r.behavior_features_traits = Answer::NotApplicable;
            r.stereotype = YesNo::No;
        }
        Ok(r)
    }

    pub fn is_stereotype(&self) -> bool {
        self.stereotype == YesNo::Yes
    }
}

/// Linguistic indicators of a potential stereotype.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorRecord {
    pub has_category_label: YesNo,
    pub full_label: String,
    pub target_type: TargetType,
    pub connotation: Polarity,
    pub gram_form: GramForm,
    pub ling_form: LingForm,
    pub information: String,
    pub situation: Situation,
    pub situation_evaluation: Polarity,
    pub generalization: Generalization,
}

impl IndicatorRecord {
    pub const FIELDS: [&'static str; 10] = [
        "has_category_label",
        "full_label",
        "target_type",
        "connotation",
        "gram_form",
        "ling_form",
        "information",
        "situation",
        "situation_evaluation",
        "generalization",
    ];

    /// Parses and validates the model's JSON answer, then applies the
    /// not-applicable cascade (see [`IndicatorRecord::cascade`]).
    pub fn from_response(text: &str) -> Result<Self, ParseError> {
        let map = crate::llm::parse_json_payload(text, &Self::FIELDS)?;
        let mut r = IndicatorRecord {
            has_category_label: parse_field(&map, "has_category_label", YesNo::parse)?,
            full_label: free_text(&map, "full_label"),
            target_type: parse_field(&map, "target_type", TargetType::parse)?,
            connotation: parse_field(&map, "connotation", Polarity::parse)?,
            gram_form: parse_field(&map, "gram_form", GramForm::parse)?,
            ling_form: parse_field(&map, "ling_form", LingForm::parse)?,
            information: free_text(&map, "information"),
            situation: parse_field(&map, "situation", Situation::parse)?,
            situation_evaluation: parse_field(&map, "situation_evaluation", Polarity::parse)?,
            generalization: parse_field(&map, "generalization", Generalization::parse)?,
        };
        r.cascade();
        Ok(r)
    }

    /// No label makes everything not-applicable; no shared information
    /// makes the situation fields not-applicable; a situation that is
    /// neither behaviour nor characteristic leaves nothing to evaluate.
    pub fn cascade(&mut self) {
        if self.has_category_label == YesNo::No {
            self.full_label = NOT_APPLICABLE.into();
            self.target_type = TargetType::NotApplicable;
            self.connotation = Polarity::NotApplicable;
            self.gram_form = GramForm::NotApplicable;
            self.ling_form = LingForm::NotApplicable;
            self.information = NOT_APPLICABLE.into();
        }
        if self.information == NOT_APPLICABLE {
            self.situation = Situation::NotApplicable;
        }
        if matches!(self.situation, Situation::Other | Situation::NotApplicable) {
            self.situation_evaluation = Polarity::NotApplicable;
            self.generalization = Generalization::NotApplicable;
        }
    }

    /// `(indicator, value)` pairs that feed the score.
    pub fn features(&self) -> [(&'static str, &'static str); 8] {
        [
            ("has_category_label", self.has_category_label.as_str()),
            ("target_type", self.target_type.as_str()),
            ("connotation", self.connotation.as_str()),
            ("gram_form", self.gram_form.as_str()),
            ("ling_form", self.ling_form.as_str()),
            ("situation", self.situation.as_str()),
            ("situation_evaluation", self.situation_evaluation.as_str()),
            ("generalization", self.generalization.as_str()),
        ]
    }
}

/// Every scored indicator and its admissible values.
pub fn indicator_values() -> Vec<(&'static str, Vec<&'static str>)> {
    fn names<T: Copy>(all: &[T], f: fn(T) -> &'static str) -> Vec<&'static str> {
        all.iter().map(|v| f(*v)).collect()
    }
    vec![
        ("has_category_label", names(YesNo::ALL, YesNo::as_str)),
        ("target_type", names(TargetType::ALL, TargetType::as_str)),
        ("connotation", names(Polarity::ALL, Polarity::as_str)),
        ("gram_form", names(GramForm::ALL, GramForm::as_str)),
        ("ling_form", names(LingForm::ALL, LingForm::as_str)),
        ("situation", names(Situation::ALL, Situation::as_str)),
        ("situation_evaluation", names(Polarity::ALL, Polarity::as_str)),
        ("generalization", names(Generalization::ALL, Generalization::as_str)),
    ]
}
