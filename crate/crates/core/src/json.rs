//! Canonical JSON text: two-space indentation, declared field order, sorted
//! map keys and a trailing newline.

use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn to_canonical<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory values always serialize");
    text.push('\n');
    text
}

pub fn from_str<T: DeserializeOwned>(text: &str) -> serde_json::Result<T> {
    serde_json::from_str(text)
}
