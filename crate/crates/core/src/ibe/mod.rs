//! Identity-based encryption: the four-algorithm interface, two
//! simulation-grade schemes and the IND-IBE experiment.
//!
//! **Neither scheme is secure.** [`TrivialIbe`] is the folklore construction
//! (one hashed-ElGamal key pair per identity, master public key = all public
//! keys) over a group of at most 64 bits. [`CompactIbe`] presents a master
//! public key of `λ·⌈log₂ m⌉` bits and honest interface semantics, but
//! encryption is served by an in-process keystore that maps the master public
//! key to the master secret. It models the key-size shape of a compact IBE,
//! nothing more.
//!
//! Identities are `0..m`. Messages are the ternary alphabet `{-1, 0, 1}`
//! encoded in two bits.

pub mod bits;
mod compact;
pub mod experiment;
pub mod group;
mod keyfile;
mod trivial;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::rng::StreamRng;
pub use bits::BitString;
pub use compact::CompactIbe;
pub use keyfile::KeyFileError;
pub use trivial::TrivialIbe;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    Trivial,
    Compact,
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeTag::Trivial => "trivial",
            SchemeTag::Compact => "compact",
        })
    }
}

impl FromStr for SchemeTag {
    type Err = IbeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trivial" => Ok(SchemeTag::Trivial),
            "compact" => Ok(SchemeTag::Compact),
            other => Err(IbeError::UnsupportedScheme(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IbeError {
    #[error("unsupported scheme `{0}`")]
    UnsupportedScheme(String),
    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
    #[error("identity {id} out of range for {m} identities")]
    IdentityOutOfRange { id: usize, m: usize },
    #[error("master public key is not registered with this scheme instance")]
    UnknownMasterKey,
    #[error("master public key has no valid public key for identity {id}")]
    InvalidPublicKey { id: usize },
    #[error("key material belongs to scheme `{0}`")]
    SchemeMismatch(SchemeTag),
    #[error("IND-IBE rule violated: {0}")]
    RuleViolation(String),
}

/// Decryption never yields a wrong plaintext silently: any mismatch between
/// key and ciphertext surfaces as one of these.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DecryptError {
    #[error("authentication failed (wrong identity key)")]
    WrongKey,
    #[error("malformed ciphertext or key")]
    Malformed,
    #[error("ciphertext was emitted without a usable master public key")]
    Unbound,
}

/// A plaintext from `{-1, 0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IbeMessage(i8);

impl IbeMessage {
    pub const NEG: Self = Self(-1);
    pub const ZERO: Self = Self(0);
    pub const POS: Self = Self(1);
    pub const ALL: [Self; 3] = [Self::NEG, Self::ZERO, Self::POS];

    pub fn new(value: i8) -> Option<Self> {
        (-1..=1).contains(&value).then_some(Self(value))
    }

    /// Exact conversion from a query value; anything but `-1.0`, `0.0`,
    /// `1.0` is rejected.
    pub fn from_f64(value: f64) -> Option<Self> {
        if value == 1.0 {
            Some(Self::POS)
        } else if value == 0.0 {
            Some(Self::ZERO)
        } else if value == -1.0 {
            Some(Self::NEG)
        } else {
            None
        }
    }

    pub fn value(self) -> i8 {
        self.0
    }

    /// Two-bit code: `00 → 0`, `01 → 1`, `10 → -1`; `11` is invalid.
    pub fn encode(self) -> u8 {
        match self.0 {
            0 => 0b00,
            1 => 0b01,
            _ => 0b10,
        }
    }

    pub fn decode(code: u8) -> Option<Self> {
        match code {
            0b00 => Some(Self::ZERO),
            0b01 => Some(Self::POS),
            0b10 => Some(Self::NEG),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CtBody {
    Compact {
        nonce: u64,
        payload: u8,
        tag: [u8; 8],
    },
    ElGamal {
        modulus: u64,
        c1: u64,
        payload: u8,
        tag: [u8; 8],
    },
    /// Placeholder emitted when encryption was impossible (e.g. an analyst
    /// holding a garbled master public key). Never decrypts.
    Unbound { nonce: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub id: u32,
    pub body: CtBody,
}

impl Ciphertext {
    pub fn unbound<R: Rng + ?Sized>(id: usize, rng: &mut R) -> Self {
        Self {
            id: id as u32,
            body: CtBody::Unbound {
                nonce: rng.random(),
            },
        }
    }

    pub fn scheme(&self) -> Option<SchemeTag> {
        match self.body {
            CtBody::Compact { .. } => Some(SchemeTag::Compact),
            CtBody::ElGamal { .. } => Some(SchemeTag::Trivial),
            CtBody::Unbound { .. } => None,
        }
    }

    /// Canonical byte encoding, used for digests and distinctness checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32);
        out.extend_from_slice(&self.id.to_le_bytes());
        match &self.body {
            CtBody::Compact {
                nonce,
                payload,
                tag,
            } => {
                out.push(1);
                out.extend_from_slice(&nonce.to_le_bytes());
                out.push(*payload);
                out.extend_from_slice(tag);
            }
            CtBody::ElGamal {
                modulus,
                c1,
                payload,
                tag,
            } => {
                out.push(2);
                out.extend_from_slice(&modulus.to_le_bytes());
                out.extend_from_slice(&c1.to_le_bytes());
                out.push(*payload);
                out.extend_from_slice(tag);
            }
            CtBody::Unbound { nonce } => {
                out.push(0);
                out.extend_from_slice(&nonce.to_le_bytes());
            }
        }
        out
    }
}

/// Decrypts `ct` under an identity key. The scheme is read from the
/// ciphertext; the key is interpreted accordingly.
pub fn decrypt(sk: &BitString, ct: &Ciphertext) -> Result<IbeMessage, DecryptError> {
    match &ct.body {
        CtBody::Compact { .. } => compact::decrypt(sk, ct),
        CtBody::ElGamal { .. } => trivial::decrypt(sk, ct),
        CtBody::Unbound { .. } => Err(DecryptError::Unbound),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MasterSecret {
    /// Per-identity secret exponents.
    Trivial {
        modulus: u64,
        exponents: Vec<u64>,
    },
    Compact {
        seed: [u8; 32],
    },
}

/// Output of setup plus any identity keys derived so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IbeKeyMaterial {
    pub scheme: SchemeTag,
    pub lambda: usize,
    pub m: usize,
    pub mpk: Arc<BitString>,
    pub msk: MasterSecret,
    pub identity_keys: BTreeMap<usize, BitString>,
}

impl IbeKeyMaterial {
    /// `k`, the declared master-public-key length.
    pub fn key_bits(&self) -> usize {
        self.mpk.len()
    }

    pub fn check_id(&self, id: usize) -> Result<(), IbeError> {
        if id < self.m {
            Ok(())
        } else {
            Err(IbeError::IdentityOutOfRange { id, m: self.m })
        }
    }
}

pub trait IbeScheme: Send + Sync + fmt::Debug {
    fn tag(&self) -> SchemeTag;

    /// Declared master-public-key length for `m` identities.
    fn mpk_bits(&self, m: usize) -> usize;

    fn lambda(&self) -> usize;

    fn setup(&self, m: usize, rng: &mut StreamRng) -> Result<IbeKeyMaterial, IbeError>;

    /// Deterministic in `(msk, id)`.
    fn keygen(&self, keys: &IbeKeyMaterial, id: usize) -> Result<BitString, IbeError>;

    fn encrypt(
        &self,
        mpk: &BitString,
        id: usize,
        msg: IbeMessage,
        rng: &mut StreamRng,
    ) -> Result<Ciphertext, IbeError>;

    /// Encrypts `msgs[j]` for identity `j`, for every `j`.
    fn encrypt_all(
        &self,
        mpk: &BitString,
        msgs: &[IbeMessage],
        rng: &mut StreamRng,
    ) -> Result<Vec<Ciphertext>, IbeError> {
        msgs.iter()
            .enumerate()
            .map(|(j, &msg)| self.encrypt(mpk, j, msg, rng))
            .collect()
    }

    /// Runs keygen for every identity and stores the results in `keys`.
    fn keygen_all(&self, keys: &mut IbeKeyMaterial) -> Result<(), IbeError> {
        for id in 0..keys.m {
            let sk = self.keygen(keys, id)?;
            keys.identity_keys.insert(id, sk);
        }
        Ok(())
    }
}

/// Builds a fresh scheme instance for security parameter `lambda`.
pub fn build_scheme(tag: SchemeTag, lambda: usize) -> Result<Arc<dyn IbeScheme>, IbeError> {
    Ok(match tag {
        SchemeTag::Trivial => Arc::new(TrivialIbe::new(lambda)?),
        SchemeTag::Compact => Arc::new(CompactIbe::new(lambda)?),
    })
}

/// `⌈log₂ m⌉`, at least 1.
pub fn identity_bits(m: usize) -> usize {
    (usize::BITS - (m.max(2) - 1).leading_zeros()) as usize
}
