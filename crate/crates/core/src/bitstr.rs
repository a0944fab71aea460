//! Serde helpers that write bit vectors as compact `"0110"` strings.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn from_str(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

pub fn serialize<S: Serializer>(bits: &[bool], ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&to_string(bits))
}

pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<bool>, D::Error> {
    let s = String::deserialize(de)?;
    from_str(&s).ok_or_else(|| de::Error::custom(format!("not a bit string: {s:?}")))
}
