use std::sync::Arc;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::domain::{DomainSpec, Element};
use crate::ibe::{decrypt, Ciphertext, IbeMessage};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("element does not belong to domain {0}")]
    WrongDomain(DomainSpec),
    #[error("{form} query cannot be evaluated on domain {domain}")]
    FormMismatch {
        form: &'static str,
        domain: DomainSpec,
    },
    #[error("query has {got} entries, domain needs {expected}")]
    Length { expected: usize, got: usize },
    #[error("bit index {index} outside key length {key_bits}")]
    BitIndex { index: usize, key_bits: usize },
    #[error("query value {value} at entry {entry} is outside [-1, 1]")]
    OutOfRange { entry: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum QueryForm {
    /// One value per index of an index domain.
    Table(Arc<[f64]>),
    /// `(j, mpk, sk) ↦ mpk_i`.
    BitProjection(usize),
    /// `(j, mpk, sk) ↦ Decrypt(sk, cts[j])`.
    CiphertextBundle(Arc<[Ciphertext]>),
}

/// A statistical query `X → [-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub domain: DomainSpec,
    pub form: QueryForm,
}

/// Query digests are SHA-256 over a canonical encoding.
pub type QueryDigest = [u8; 32];

impl Query {
    pub fn table(domain: DomainSpec, values: impl Into<Arc<[f64]>>) -> Result<Self, EvalError> {
        let q = Self::raw_table(domain, values);
        q.check()?;
        Ok(q)
    }

    /// Builds a table without range checks (linear combinations in tests).
    /// The referee still rejects it if a value leaves `[-1, 1]`.
    pub fn raw_table(domain: DomainSpec, values: impl Into<Arc<[f64]>>) -> Self {
        Self {
            domain,
            form: QueryForm::Table(values.into()),
        }
    }

    pub fn bit_projection(domain: DomainSpec, index: usize) -> Result<Self, EvalError> {
        let q = Self {
            domain,
            form: QueryForm::BitProjection(index),
        };
        q.check()?;
        Ok(q)
    }

    pub fn bundle(
        domain: DomainSpec,
        cts: impl Into<Arc<[Ciphertext]>>,
    ) -> Result<Self, EvalError> {
        let q = Self {
            domain,
            form: QueryForm::CiphertextBundle(cts.into()),
        };
        q.check()?;
        Ok(q)
    }

    pub fn form_name(&self) -> &'static str {
        match self.form {
            QueryForm::Table(_) => "table",
            QueryForm::BitProjection(_) => "bit-projection",
            QueryForm::CiphertextBundle(_) => "ciphertext-bundle",
        }
    }

    /// Structural and range validation.
    pub fn check(&self) -> Result<(), EvalError> {
        let m = self.domain.m();
        match (&self.form, self.domain) {
            (QueryForm::Table(values), DomainSpec::Index { .. }) => {
                if values.len() != m {
                    return Err(EvalError::Length {
                        expected: m,
                        got: values.len(),
                    });
                }
                if let Some((entry, &value)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(-1.0..=1.0).contains(*v))
                {
                    return Err(EvalError::OutOfRange { entry, value });
                }
                Ok(())
            }
            (QueryForm::BitProjection(i), DomainSpec::Triplet { key_bits, .. }) => {
                if *i < key_bits {
                    Ok(())
                } else {
                    Err(EvalError::BitIndex {
                        index: *i,
                        key_bits,
                    })
                }
            }
            (QueryForm::CiphertextBundle(cts), DomainSpec::Triplet { .. }) => {
                if cts.len() == m {
                    Ok(())
                } else {
                    Err(EvalError::Length {
                        expected: m,
                        got: cts.len(),
                    })
                }
            }
            _ => Err(EvalError::FormMismatch {
                form: self.form_name(),
                domain: self.domain,
            }),
        }
    }

    /// Evaluates the query at `x`. `Ok(None)` marks a ciphertext that failed
    /// to decrypt under the element's key.
    pub fn eval_checked(&self, x: &Element) -> Result<Option<f64>, EvalError> {
        match (&self.form, x) {
            (QueryForm::Table(values), Element::Index(j)) => values
                .get(*j as usize)
                .copied()
                .map(Some)
                .ok_or(EvalError::WrongDomain(self.domain)),
            (QueryForm::BitProjection(i), Element::Triplet(t)) => {
                if *i < t.mpk.len() {
                    Ok(Some(if t.mpk.get(*i) { 1.0 } else { 0.0 }))
                } else {
                    Err(EvalError::BitIndex {
                        index: *i,
                        key_bits: t.mpk.len(),
                    })
                }
            }
            (QueryForm::CiphertextBundle(cts), Element::Triplet(t)) => {
                let ct = cts
                    .get(t.j as usize)
                    .ok_or(EvalError::WrongDomain(self.domain))?;
                Ok(decrypt(&t.sk, ct)
                    .ok()
                    .map(|m: IbeMessage| f64::from(m.value())))
            }
            _ => Err(EvalError::WrongDomain(self.domain)),
        }
    }

    /// Like [`eval_checked`](Self::eval_checked) with a failed decryption
    /// read as 0.
    pub fn eval(&self, x: &Element) -> Result<f64, EvalError> {
        self.eval_checked(x).map(|v| v.unwrap_or(0.0))
    }

    pub fn digest(&self) -> QueryDigest {
        let mut h = Sha256::new();
        h.update(b"ada-arena/query");
        self.domain.write_digest(&mut |b| h.update(b));
        match &self.form {
            QueryForm::Table(values) => {
                h.update([0u8]);
                for v in values.iter() {
                    h.update(v.to_le_bytes());
                }
            }
            QueryForm::BitProjection(i) => {
                h.update([1u8]);
                h.update((*i as u64).to_le_bytes());
            }
            QueryForm::CiphertextBundle(cts) => {
                h.update([2u8]);
                for ct in cts.iter() {
                    h.update(ct.to_bytes());
                }
            }
        }
        h.finalize().into()
    }

    /// Table values, when the query is a table.
    pub fn table_values(&self) -> Option<&[f64]> {
        match &self.form {
            QueryForm::Table(v) => Some(v),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::domain::Triplet;
    use crate::ibe::{BitString, CompactIbe, IbeScheme};
    use crate::rng::stream;

    #[test]
    fn table_checks() {
        let d = DomainSpec::index(3);
        assert!(Query::table(d, vec![1.0, -1.0, 0.5]).is_ok());
        assert!(matches!(
            Query::table(d, vec![1.0, -1.5, 0.0]),
            Err(EvalError::OutOfRange { entry: 1, .. })
        ));
        assert!(matches!(
            Query::table(d, vec![1.0]),
            Err(EvalError::Length { .. })
        ));
        assert!(Query::table(DomainSpec::triplet(3, 4), vec![0.0; 3]).is_err());
        assert!(Query::table(d, vec![f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn bundle_evaluates_own_entry_only() {
        let scheme = CompactIbe::new(8).unwrap();
        let mut rng = stream(1, "t");
        let keys = scheme.setup(4, &mut rng).unwrap();
        let k = keys.key_bits();
        let d = DomainSpec::triplet(4, k);
        let mut cts: Vec<Ciphertext> = (0..4)
            .map(|j| {
                scheme
                    .encrypt(&keys.mpk, j, IbeMessage::POS, &mut rng)
                    .unwrap()
            })
            .collect();
        let x = Element::Triplet(Arc::new(Triplet {
            j: 2,
            mpk: keys.mpk.clone(),
            sk: scheme.keygen(&keys, 2).unwrap(),
        }));
        let q = Query::bundle(d, cts.clone()).unwrap();
        assert_eq!(q.eval(&x).unwrap(), 1.0);
        // Garbage everywhere else leaves the value unchanged.
        for j in [0, 1, 3] {
            cts[j] = Ciphertext::unbound(j, &mut rng);
        }
        let q2 = Query::bundle(d, cts.clone()).unwrap();
        assert_eq!(q2.eval(&x).unwrap(), 1.0);
        cts[2] = Ciphertext::unbound(2, &mut rng);
        let q3 = Query::bundle(d, cts).unwrap();
        assert_eq!(q3.eval_checked(&x).unwrap(), None);
        assert_eq!(q3.eval(&x).unwrap(), 0.0);
    }

    #[test]
    fn bit_projection_reads_mpk() {
        let mut mpk = BitString::zeros(5);
        mpk.set(3, true);
        let x = Element::Triplet(Arc::new(Triplet {
            j: 0,
            mpk: Arc::new(mpk),
            sk: BitString::zeros(5),
        }));
        let d = DomainSpec::triplet(1, 5);
        assert_eq!(Query::bit_projection(d, 3).unwrap().eval(&x).unwrap(), 1.0);
        assert_eq!(Query::bit_projection(d, 2).unwrap().eval(&x).unwrap(), 0.0);
        assert!(Query::bit_projection(d, 5).is_err());
    }

    #[test]
    fn digests_separate_queries() {
        let d = DomainSpec::index(2);
        let a = Query::table(d, vec![1.0, 0.0]).unwrap();
        let b = Query::table(d, vec![0.0, 1.0]).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(
            a.digest(),
            Query::table(DomainSpec::index(2), vec![1.0, -0.0])
                .unwrap()
                .digest()
        );
    }
}
