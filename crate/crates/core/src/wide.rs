//! Serde adapter: `i128` as a JSON number when it fits in `i64`, otherwise
//! as a decimal string. Tagged enums buffer their fields and cannot carry
//! `i128` directly.

use serde::{Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &i128, s: S) -> Result<S::Ok, S::Error> {
    match i64::try_from(*v) {
        Ok(n) => s.serialize_i64(n),
        Err(_) => s.serialize_str(&v.to_string()),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(i64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<i128, D::Error> {
    match Repr::deserialize(d)? {
        Repr::Num(n) => Ok(n.into()),
        Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

#[cfg(test)]
mod tests {
    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    #[serde(tag = "kind")]
    enum Tagged {
        V {
            #[serde(with = "super")]
            x: i128,
        },
    }

    #[test]
    fn round_trips_inside_tagged_enum() {
        for x in [0, -15, i64::MIN as i128, i64::MAX as i128 + 1, -(u64::MAX as i128) * 2] {
            let json = serde_json::to_string(&Tagged::V { x }).unwrap();
            assert_eq!(serde_json::from_str::<Tagged>(&json).unwrap(), Tagged::V { x });
        }
        assert_eq!(serde_json::to_string(&Tagged::V { x: -3 }).unwrap(), r#"{"kind":"V","x":-3}"#);
    }
}
