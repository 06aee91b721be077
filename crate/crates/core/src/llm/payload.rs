//! Lenient extraction of JSON answers from model output.

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PayloadError {
    #[error("no JSON value found in response")]
    NoJson,
    #[error("response JSON lacks required field {0:?}")]
    MissingField(String),
}

/// Returns the body of the first fenced code block, or the input unchanged.
fn strip_fences(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    // skip an info string such as `json`
    let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

fn first_value(text: &str, opener: char) -> Option<Value> {
    let text = strip_fences(text);
    text.match_indices(opener).find_map(|(i, _)| {
        serde_json::Deserializer::from_str(&text[i..])
            .into_iter::<Value>()
            .next()
            .and_then(Result::ok)
    })
}

/// Finds the first JSON object in `text` (ignoring code fences and leading
/// prose) and checks that every field in `required` is present.
pub fn parse_json_payload(text: &str, required: &[&str]) -> Result<Map<String, Value>, PayloadError> {
    let Some(Value::Object(map)) = first_value(text, '{') else {
        return Err(PayloadError::NoJson);
    };
    if let Some(missing) = required.iter().find(|f| !map.contains_key(**f)) {
        return Err(PayloadError::MissingField(missing.to_string()));
    }
    Ok(map)
}

/// Finds the first JSON array in `text`.
pub fn parse_json_array(text: &str) -> Result<Vec<Value>, PayloadError> {
    match first_value(text, '[') {
        Some(Value::Array(items)) => Ok(items),
        _ => Err(PayloadError::NoJson),
    }
}
