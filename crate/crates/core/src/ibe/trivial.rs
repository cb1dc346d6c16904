//! Folklore IBE from public-key encryption: identity `j` owns a hashed-ElGamal
//! key pair and the master public key is the concatenation of all `m` public
//! keys, `λ` bits each.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::group::SafePrimeGroup;
use super::{
    BitString, Ciphertext, CtBody, DecryptError, IbeError, IbeKeyMaterial, IbeMessage, IbeScheme,
    MasterSecret, SchemeTag,
};
use crate::rng::StreamRng;

#[derive(Debug, Clone)]
pub struct TrivialIbe {
    lambda: usize,
    group: SafePrimeGroup,
}

impl TrivialIbe {
    /// Uses the largest safe prime below `2^λ`; `8 ≤ λ ≤ 64`.
    pub fn new(lambda: usize) -> Result<Self, IbeError> {
        if !(8..=64).contains(&lambda) {
            return Err(IbeError::UnsupportedParameters(format!(
                "trivial scheme needs 8 <= lambda <= 64, got {lambda}"
            )));
        }
        let group = SafePrimeGroup::largest_below_pow2(lambda as u32)
            .ok_or_else(|| IbeError::UnsupportedParameters("no safe prime found".into()))?;
        Ok(Self { lambda, group })
    }

    /// Explicit safe-prime modulus; `λ` becomes its bit length.
    pub fn with_modulus(p: u64) -> Result<Self, IbeError> {
        let group = SafePrimeGroup::new(p)
            .ok_or_else(|| IbeError::UnsupportedParameters(format!("{p} is not a safe prime")))?;
        let lambda = (u64::BITS - p.leading_zeros()) as usize;
        if lambda < 8 {
            return Err(IbeError::UnsupportedParameters(
                "modulus below 8 bits".into(),
            ));
        }
        Ok(Self { lambda, group })
    }

    pub fn group(&self) -> SafePrimeGroup {
        self.group
    }

    fn public_key(&self, mpk: &BitString, id: usize) -> Result<u64, IbeError> {
        let m = mpk.len() / self.lambda;
        if mpk.len() % self.lambda != 0 {
            return Err(IbeError::UnsupportedParameters(
                "mpk length is not a multiple of lambda".into(),
            ));
        }
        if id >= m {
            return Err(IbeError::IdentityOutOfRange { id, m });
        }
        let pk = mpk.read_u64(id * self.lambda, self.lambda);
        if self.group.contains(pk) {
            Ok(pk)
        } else {
            Err(IbeError::InvalidPublicKey { id })
        }
    }
}

fn mask(modulus: u64, id: u32, c1: u64, shared: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ada-arena/elgamal");
    h.update(modulus.to_le_bytes());
    h.update(id.to_le_bytes());
    h.update(c1.to_le_bytes());
    h.update(shared.to_le_bytes());
    h.finalize().into()
}

pub(super) fn decrypt(sk: &BitString, ct: &Ciphertext) -> Result<IbeMessage, DecryptError> {
    let CtBody::ElGamal {
        modulus,
        c1,
        payload,
        tag,
    } = ct.body
    else {
        return Err(DecryptError::Malformed);
    };
    if sk.is_empty() || sk.len() > 64 {
        return Err(DecryptError::Malformed);
    }
    let group = SafePrimeGroup::new(modulus).ok_or(DecryptError::Malformed)?;
    let x = sk.read_u64(0, sk.len());
    let shared = group.pow(c1, x);
    let h = mask(modulus, ct.id, c1, shared);
    if h[1..9] != tag {
        return Err(DecryptError::WrongKey);
    }
    IbeMessage::decode(payload ^ h[0]).ok_or(DecryptError::Malformed)
}

impl IbeScheme for TrivialIbe {
    fn tag(&self) -> SchemeTag {
        SchemeTag::Trivial
    }

    fn mpk_bits(&self, m: usize) -> usize {
        m * self.lambda
    }

    fn lambda(&self) -> usize {
        self.lambda
    }

    fn setup(&self, m: usize, rng: &mut StreamRng) -> Result<IbeKeyMaterial, IbeError> {
        if m == 0 {
            return Err(IbeError::UnsupportedParameters(
                "need at least one identity".into(),
            ));
        }
        let g = self.group;
        let exponents: Vec<u64> = (0..m).map(|_| rng.random_range(1..g.q)).collect();
        let mut mpk = BitString::zeros(self.mpk_bits(m));
        for (j, &x) in exponents.iter().enumerate() {
            mpk.write_u64(j * self.lambda, self.lambda, g.pow(g.g, x));
        }
        Ok(IbeKeyMaterial {
            scheme: SchemeTag::Trivial,
            lambda: self.lambda,
            m,
            mpk: Arc::new(mpk),
            msk: MasterSecret::Trivial {
                modulus: g.p,
                exponents,
            },
            identity_keys: BTreeMap::new(),
        })
    }

    fn keygen(&self, keys: &IbeKeyMaterial, id: usize) -> Result<BitString, IbeError> {
        keys.check_id(id)?;
        match &keys.msk {
            MasterSecret::Trivial { exponents, .. } => {
                Ok(BitString::from_u64(exponents[id], self.lambda))
            }
            MasterSecret::Compact { .. } => Err(IbeError::SchemeMismatch(SchemeTag::Compact)),
        }
    }

    fn encrypt(
        &self,
        mpk: &BitString,
        id: usize,
        msg: IbeMessage,
        rng: &mut StreamRng,
    ) -> Result<Ciphertext, IbeError> {
        let pk = self.public_key(mpk, id)?;
        let g = self.group;
        let r = rng.random_range(1..g.q);
        let c1 = g.pow(g.g, r);
        let shared = g.pow(pk, r);
        let h = mask(g.p, id as u32, c1, shared);
        let mut tag = [0u8; 8];
        tag.copy_from_slice(&h[1..9]);
        Ok(Ciphertext {
            id: id as u32,
            body: CtBody::ElGamal {
                modulus: g.p,
                c1,
                payload: msg.encode() ^ h[0],
                tag,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn lambda_bounds() {
        assert!(TrivialIbe::new(7).is_err());
        assert!(TrivialIbe::new(65).is_err());
        assert_eq!(TrivialIbe::new(64).unwrap().lambda(), 64);
    }

    #[test]
    fn explicit_modulus() {
        let s = TrivialIbe::with_modulus(227).unwrap();
        assert_eq!(s.lambda(), 8);
        assert!(TrivialIbe::with_modulus(229).is_err()); // prime, (229-1)/2 = 114 not prime
        let mut rng = stream(9, "t");
        let mut keys = s.setup(5, &mut rng).unwrap();
        s.keygen_all(&mut keys).unwrap();
        let ct = s.encrypt(&keys.mpk, 4, IbeMessage::NEG, &mut rng).unwrap();
        assert_eq!(
            super::super::decrypt(&keys.identity_keys[&4], &ct),
            Ok(IbeMessage::NEG)
        );
    }

    #[test]
    fn garbled_public_key_is_rejected_or_fails_to_decrypt() {
        let s = TrivialIbe::new(16).unwrap();
        let mut rng = stream(10, "t");
        let mut keys = s.setup(4, &mut rng).unwrap();
        s.keygen_all(&mut keys).unwrap();
        let bad = keys.mpk.complement();
        for id in 0..4 {
            match s.encrypt(&bad, id, IbeMessage::POS, &mut rng) {
                Err(IbeError::InvalidPublicKey { id: got }) => assert_eq!(got, id),
                Ok(ct) => assert!(super::super::decrypt(&keys.identity_keys[&id], &ct).is_err()),
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }
}
