use serde::{Deserialize, Serialize};

use crate::error::BridgeError;

/// Version string exchanged during the handshake.
pub const VERSION: &str = "xbridge/1";

/// One newline-terminated JSON record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    /// Client to server, first record of a session.
    Hello { version: String },
    /// Server to client, answer to `hello`.
    Declare {
        version: String,
        state: Vec<String>,
        output: Vec<String>,
        extended: Vec<String>,
        input: Vec<String>,
    },
    /// Client to server: advance from `x` under `u` with offsets `dz`.
    Step { index: u64, x: Vec<f64>, u: Vec<f64>, dz: Vec<f64> },
    /// Server to client: prediction for the step with the same index.
    Result { index: u64, x: Vec<f64>, y: Vec<f64>, z: Vec<f64> },
    /// Either side: fatal failure.
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<u64>,
        message: String,
    },
    /// Client to server: orderly end of the session.
    Bye {},
}

impl Record {
    /// One JSON line, newline included. Floats use the shortest exact form.
    pub fn encode(&self) -> Result<String, BridgeError> {
        let mut line = serde_json::to_string(self).map_err(|e| BridgeError::Malformed(e.to_string()))?;
        line.push('\n');
        Ok(line)
    }

    pub fn decode(line: &str) -> Result<Self, BridgeError> {
        serde_json::from_str(line.trim_end()).map_err(|e| BridgeError::Malformed(format!("{e}: `{}`", line.trim_end())))
    }

    /// Non-finite numbers cannot travel as JSON; reject them before sending.
    pub fn check_finite(&self) -> Result<(), BridgeError> {
        let vectors: Vec<(&str, &Vec<f64>)> = match self {
            Record::Step { x, u, dz, .. } => vec![("x", x), ("u", u), ("dz", dz)],
            Record::Result { x, y, z, .. } => vec![("x", x), ("y", y), ("z", z)],
            _ => vec![],
        };
        for (field, v) in vectors {
            if v.iter().any(|a| !a.is_finite()) {
                return Err(BridgeError::Malformed(format!("non-finite value in `{field}`")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn record_shapes() {
        let line = Record::Hello { version: VERSION.into() }.encode().unwrap();
        assert_eq!(line, "{\"type\":\"hello\",\"version\":\"xbridge/1\"}\n");
        let err = Record::Error {
            index: None,
            message: "boom".into(),
        };
        assert_eq!(Record::decode(&err.encode().unwrap()).unwrap(), err);
        assert!(Record::decode("{\"type\":\"step\",\"index\":1}").is_err());
        assert!(Record::decode("{\"type\":\"bye\",\"extra\":1}").is_err());
        assert!(Record::decode("not json").is_err());
    }

    #[test]
    fn non_finite_values_are_refused() {
        let r = Record::Result {
            index: 1,
            x: vec![f64::NAN],
            y: vec![],
            z: vec![],
        };
        assert!(r.check_finite().is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(x in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 0..20)) {
            let r = Record::Step { index: 7, x: x.clone(), u: vec![], dz: vec![] };
            let back = Record::decode(&r.encode().unwrap()).unwrap();
            match back {
                Record::Step { x: got, .. } => {
                    prop_assert_eq!(got.len(), x.len());
                    for (a, b) in got.iter().zip(&x) {
                        prop_assert_eq!(a.to_bits(), b.to_bits());
                    }
                }
                other => prop_assert!(false, "unexpected {:?}", other),
            }
        }
    }
}
