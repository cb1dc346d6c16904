use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::ibe::{identity_bits, BitString};

/// Finite data domain shared by the sampler, the analyst and the mechanism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainSpec {
    /// Integers `0..m`.
    Index { m: usize },
    /// Triples `(j, mpk, sk)` with `j < m` and `k`-bit key strings.
    Triplet { m: usize, key_bits: usize },
}

impl DomainSpec {
    pub fn index(m: usize) -> Self {
        DomainSpec::Index { m }
    }

    pub fn triplet(m: usize, key_bits: usize) -> Self {
        DomainSpec::Triplet { m, key_bits }
    }

    pub fn m(&self) -> usize {
        match *self {
            DomainSpec::Index { m } | DomainSpec::Triplet { m, .. } => m,
        }
    }

    pub fn key_bits(&self) -> Option<usize> {
        match *self {
            DomainSpec::Index { .. } => None,
            DomainSpec::Triplet { key_bits, .. } => Some(key_bits),
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            DomainSpec::Index { m } => m >= 1,
            DomainSpec::Triplet { m, key_bits } => m >= 1 && key_bits >= 1,
        }
    }

    /// Bits needed to encode one element: `⌈log₂ m⌉`, plus `2k` for triples.
    pub fn encoding_bits(&self) -> usize {
        match *self {
            DomainSpec::Index { m } => identity_bits(m),
            DomainSpec::Triplet { m, key_bits } => identity_bits(m) + 2 * key_bits,
        }
    }

    /// Checks that `x` is a well-formed element of this domain. Identity
    /// keys shorter than `k` are accepted and treated as zero-padded.
    pub fn contains(&self, x: &Element) -> bool {
        match (self, x) {
            (DomainSpec::Index { m }, Element::Index(j)) => (*j as usize) < *m,
            (DomainSpec::Triplet { m, key_bits }, Element::Triplet(t)) => {
                (t.j as usize) < *m && t.mpk.len() == *key_bits && t.sk.len() <= *key_bits
            }
            _ => false,
        }
    }

    pub(crate) fn write_digest(&self, out: &mut impl FnMut(&[u8])) {
        match *self {
            DomainSpec::Index { m } => {
                out(&[0]);
                out(&(m as u64).to_le_bytes());
            }
            DomainSpec::Triplet { m, key_bits } => {
                out(&[1]);
                out(&(m as u64).to_le_bytes());
                out(&(key_bits as u64).to_le_bytes());
            }
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSpec::Index { m } => write!(f, "index:{m}"),
            DomainSpec::Triplet { m, key_bits } => write!(f, "triplet:{m}:{key_bits}"),
        }
    }
}

impl FromStr for DomainSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|e| format!("bad domain `{s}`: {e}"))
        };
        let d = match parts.as_slice() {
            ["index", m] => DomainSpec::Index { m: num(m)? },
            ["triplet", m, k] => DomainSpec::Triplet {
                m: num(m)?,
                key_bits: num(k)?,
            },
            _ => return Err(format!("bad domain `{s}`")),
        };
        if d.is_valid() {
            Ok(d)
        } else {
            Err(format!("degenerate domain `{s}`"))
        }
    }
}

/// `(j, mpk, sk_j)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub j: u32,
    pub mpk: Arc<BitString>,
    pub sk: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Index(u32),
    Triplet(Arc<Triplet>),
}

impl Element {
    /// Identity / index part of the element.
    pub fn index(&self) -> usize {
        match self {
            Element::Index(j) => *j as usize,
            Element::Triplet(t) => t.j as usize,
        }
    }
}

/// The mechanism's sample, in the order it was drawn.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SampleSet {
    pub elements: Vec<Element>,
}

impl SampleSet {
    pub fn new(elements: Vec<Element>) -> Self {
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Element> {
        self.elements.iter()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.elements.iter().map(Element::index).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encoding_bits_law() {
        for (m, k) in [(16usize, 64usize), (1000, 160), (800, 160), (2, 1)] {
            let d = DomainSpec::triplet(m, k);
            assert_eq!(d.encoding_bits(), 2 * k + identity_bits(m));
        }
        assert_eq!(DomainSpec::index(1000).encoding_bits(), 10);
    }

    #[test]
    fn display_round_trips() {
        for d in [DomainSpec::index(7), DomainSpec::triplet(9, 40)] {
            assert_eq!(d.to_string().parse::<DomainSpec>().unwrap(), d);
        }
        assert!("index:0".parse::<DomainSpec>().is_err());
        assert!("triplet:3".parse::<DomainSpec>().is_err());
    }

    #[test]
    fn membership() {
        let d = DomainSpec::index(4);
        assert!(d.contains(&Element::Index(3)));
        assert!(!d.contains(&Element::Index(4)));
        let mpk = Arc::new(BitString::zeros(8));
        let t = Element::Triplet(Arc::new(Triplet {
            j: 1,
            mpk: mpk.clone(),
            sk: BitString::zeros(8),
        }));
        assert!(!d.contains(&t));
        assert!(DomainSpec::triplet(2, 8).contains(&t));
        assert!(!DomainSpec::triplet(2, 9).contains(&t));
    }
}
