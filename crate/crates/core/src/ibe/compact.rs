//! Compact-key IBE simulation.
//!
//! The master public key is a pseudorandom string of `λ·⌈log₂ m⌉` bits and
//! identity keys have the same length. Encryption goes through a keystore
//! private to the scheme instance, which resolves a registered master public
//! key to its identity keys. An unregistered (e.g. garbled) master public key
//! cannot be used for encryption.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{
    identity_bits, BitString, Ciphertext, CtBody, DecryptError, IbeError, IbeKeyMaterial,
    IbeMessage, IbeScheme, MasterSecret, SchemeTag,
};
use crate::rng::StreamRng;

#[derive(Debug)]
pub struct CompactIbe {
    lambda: usize,
    keystore: RwLock<HashMap<BitString, Arc<Vec<BitString>>>>,
}

impl CompactIbe {
    pub fn new(lambda: usize) -> Result<Self, IbeError> {
        if lambda < 8 {
            return Err(IbeError::UnsupportedParameters(format!(
                "compact scheme needs lambda >= 8, got {lambda}"
            )));
        }
        Ok(Self {
            lambda,
            keystore: RwLock::new(HashMap::new()),
        })
    }

    fn lookup(&self, mpk: &BitString) -> Result<Arc<Vec<BitString>>, IbeError> {
        self.keystore
            .read()
            .expect("keystore lock poisoned")
            .get(mpk)
            .cloned()
            .ok_or(IbeError::UnknownMasterKey)
    }
}

/// Expands `(label, seed, index)` to `len` pseudorandom bits.
fn expand(label: &[u8], seed: &[u8; 32], index: u64, len: usize) -> BitString {
    let mut bytes = Vec::with_capacity(len.div_ceil(8) + 32);
    let mut counter = 0u32;
    while bytes.len() * 8 < len {
        let mut h = Sha256::new();
        h.update(label);
        h.update(seed);
        h.update(index.to_le_bytes());
        h.update(counter.to_le_bytes());
        bytes.extend_from_slice(&h.finalize());
        counter += 1;
    }
    BitString::from_bytes(&bytes, len)
}

fn pad(sk: &BitString, id: u32, nonce: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"ada-arena/compact-ct");
    h.update(sk.as_bytes());
    h.update(id.to_le_bytes());
    h.update(nonce.to_le_bytes());
    h.finalize().into()
}

fn seal(sk: &BitString, id: usize, msg: IbeMessage, rng: &mut StreamRng) -> Ciphertext {
    let nonce: u64 = rng.random();
    let h = pad(sk, id as u32, nonce);
    let mut tag = [0u8; 8];
    tag.copy_from_slice(&h[1..9]);
    Ciphertext {
        id: id as u32,
        body: CtBody::Compact {
            nonce,
            payload: msg.encode() ^ h[0],
            tag,
        },
    }
}

pub(super) fn decrypt(sk: &BitString, ct: &Ciphertext) -> Result<IbeMessage, DecryptError> {
    let CtBody::Compact {
        nonce,
        payload,
        tag,
    } = ct.body
    else {
        return Err(DecryptError::Malformed);
    };
    let h = pad(sk, ct.id, nonce);
    if h[1..9] != tag {
        return Err(DecryptError::WrongKey);
    }
    IbeMessage::decode(payload ^ h[0]).ok_or(DecryptError::Malformed)
}

impl IbeScheme for CompactIbe {
    fn tag(&self) -> SchemeTag {
        SchemeTag::Compact
    }

    fn mpk_bits(&self, m: usize) -> usize {
        self.lambda * identity_bits(m)
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
        let k = self.mpk_bits(m);
        let mut seed = [0u8; 32];
        rng.fill(&mut seed);
        let mpk = expand(b"mpk", &seed, 0, k);
        let keys: Vec<BitString> = (0..m as u64).map(|j| expand(b"sk", &seed, j, k)).collect();
        self.keystore
            .write()
            .expect("keystore lock poisoned")
            .insert(mpk.clone(), Arc::new(keys));
        Ok(IbeKeyMaterial {
            scheme: SchemeTag::Compact,
            lambda: self.lambda,
            m,
            mpk: Arc::new(mpk),
            msk: MasterSecret::Compact { seed },
            identity_keys: BTreeMap::new(),
        })
    }

    fn keygen(&self, keys: &IbeKeyMaterial, id: usize) -> Result<BitString, IbeError> {
        keys.check_id(id)?;
        match &keys.msk {
            MasterSecret::Compact { seed } => Ok(expand(b"sk", seed, id as u64, keys.key_bits())),
            MasterSecret::Trivial { .. } => Err(IbeError::SchemeMismatch(SchemeTag::Trivial)),
        }
    }

    fn encrypt(
        &self,
        mpk: &BitString,
        id: usize,
        msg: IbeMessage,
        rng: &mut StreamRng,
    ) -> Result<Ciphertext, IbeError> {
        let keys = self.lookup(mpk)?;
        let sk = keys
            .get(id)
            .ok_or(IbeError::IdentityOutOfRange { id, m: keys.len() })?;
        Ok(seal(sk, id, msg, rng))
    }

    fn encrypt_all(
        &self,
        mpk: &BitString,
        msgs: &[IbeMessage],
        rng: &mut StreamRng,
    ) -> Result<Vec<Ciphertext>, IbeError> {
        let keys = self.lookup(mpk)?;
        if msgs.len() > keys.len() {
            return Err(IbeError::IdentityOutOfRange {
                id: msgs.len() - 1,
                m: keys.len(),
            });
        }
        Ok(msgs
            .iter()
            .zip(keys.iter())
            .enumerate()
            .map(|(j, (&msg, sk))| seal(sk, j, msg, rng))
            .collect())
    }
}
