//! Flat `key=value` text encoding of key material, hex for all binary
//! fields. Used for reproducible fixtures.
//!
//! ```text
//! scheme=compact
//! lambda=16
//! m=4
//! mpk_bits=32
//! mpk=<hex>
//! msk=<hex>
//! sk.0=<bits>:<hex>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use super::{BitString, IbeKeyMaterial, MasterSecret, SchemeTag};

#[derive(Debug, Error, PartialEq)]
pub enum KeyFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}`: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: &str, msg: impl ToString) -> KeyFileError {
    KeyFileError::Invalid {
        field: field.to_string(),
        msg: msg.to_string(),
    }
}

impl IbeKeyMaterial {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scheme={}", self.scheme);
        let _ = writeln!(out, "lambda={}", self.lambda);
        let _ = writeln!(out, "m={}", self.m);
        let _ = writeln!(out, "mpk_bits={}", self.mpk.len());
        let _ = writeln!(out, "mpk={}", self.mpk.to_hex());
        let msk = match &self.msk {
            MasterSecret::Compact { seed } => hex::encode(seed),
            MasterSecret::Trivial { modulus, exponents } => {
                let mut bytes = modulus.to_le_bytes().to_vec();
                exponents
                    .iter()
                    .for_each(|x| bytes.extend_from_slice(&x.to_le_bytes()));
                hex::encode(bytes)
            }
        };
        let _ = writeln!(out, "msk={msk}");
        for (id, sk) in &self.identity_keys {
            let _ = writeln!(out, "sk.{id}={}:{}", sk.len(), sk.to_hex());
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, KeyFileError> {
        let mut fields = BTreeMap::new();
        let mut identity_keys = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| KeyFileError::Syntax {
                line: no + 1,
                msg: "expected key=value".into(),
            })?;
            if let Some(id) = key.strip_prefix("sk.") {
                let id: usize = id.parse().map_err(|e| invalid(key, e))?;
                let (bits, hex_str) = value
                    .split_once(':')
                    .ok_or_else(|| invalid(key, "expected <bits>:<hex>"))?;
                let bits: usize = bits.parse().map_err(|e| invalid(key, e))?;
                identity_keys.insert(
                    id,
                    BitString::from_hex(hex_str, bits).map_err(|e| invalid(key, e))?,
                );
            } else {
                fields.insert(key.to_string(), value.to_string());
            }
        }
        let get = |name: &'static str| fields.get(name).ok_or(KeyFileError::Missing(name));
        let scheme: SchemeTag = get("scheme")?.parse().map_err(|e| invalid("scheme", e))?;
        let lambda: usize = get("lambda")?.parse().map_err(|e| invalid("lambda", e))?;
        let m: usize = get("m")?.parse().map_err(|e| invalid("m", e))?;
        let mpk_bits: usize = get("mpk_bits")?
            .parse()
            .map_err(|e| invalid("mpk_bits", e))?;
        let mpk = BitString::from_hex(get("mpk")?, mpk_bits).map_err(|e| invalid("mpk", e))?;
        let msk_bytes = hex::decode(get("msk")?).map_err(|e| invalid("msk", e))?;
        let msk = match scheme {
            SchemeTag::Compact => MasterSecret::Compact {
                seed: msk_bytes
                    .try_into()
                    .map_err(|_| invalid("msk", "expected 32 bytes"))?,
            },
            SchemeTag::Trivial => {
                if msk_bytes.len() != 8 * (m + 1) {
                    return Err(invalid("msk", format!("expected {} bytes", 8 * (m + 1))));
                }
                let mut words = msk_bytes
                    .chunks_exact(8)
                    .map(|c| u64::from_le_bytes(c.try_into().unwrap()));
                let modulus = words.next().unwrap();
                MasterSecret::Trivial {
                    modulus,
                    exponents: words.collect(),
                }
            }
        };
        if let Some(&bad) = identity_keys.keys().find(|&&id| id >= m) {
            return Err(invalid(&format!("sk.{bad}"), "identity out of range"));
        }
        Ok(Self {
            scheme,
            lambda,
            m,
            mpk: Arc::new(mpk),
            msk,
            identity_keys,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibe::build_scheme;
    use crate::rng::stream;

    #[test]
    fn round_trip_both_schemes() {
        let mut rng = stream(1, "kf");
        for tag in [SchemeTag::Trivial, SchemeTag::Compact] {
            let scheme = build_scheme(tag, 16).unwrap();
            let mut keys = scheme.setup(5, &mut rng).unwrap();
            scheme.keygen_all(&mut keys).unwrap();
            let text = keys.to_text();
            assert_eq!(IbeKeyMaterial::from_text(&text).unwrap(), keys);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(
            IbeKeyMaterial::from_text("scheme=compact\n").unwrap_err(),
            KeyFileError::Missing("lambda")
        );
        assert!(matches!(
            IbeKeyMaterial::from_text("nonsense"),
            Err(KeyFileError::Syntax { line: 1, .. })
        ));
        let text = "scheme=compact\nlambda=8\nm=2\nmpk_bits=8\nmpk=zz\nmsk=00\n";
        assert!(matches!(
            IbeKeyMaterial::from_text(text),
            Err(KeyFileError::Invalid { .. })
        ));
    }
}
