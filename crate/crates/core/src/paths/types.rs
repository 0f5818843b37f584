use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A 32-bit autonomous system number. Zero is reserved and never valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Asn(u32);

impl Asn {
    pub fn new(value: u32) -> Option<Asn> {
        (value > 0).then_some(Asn(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Asn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value: u32 = s.parse().map_err(|_| format!("invalid ASN token {s:?}"))?;
        Asn::new(value).ok_or_else(|| "ASN 0 is reserved".to_string())
    }
}

/// Business relationship of an ordered AS pair `(a, b)`.
///
/// `C2P` means `a` is a customer of `b`; `P2C` is the reverse orientation of
/// the same link. `S2S` only takes part in path validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relationship {
    C2P,
    P2P,
    P2C,
    S2S,
}

impl Relationship {
    /// The three labels the probabilistic step reasons about.
    pub const INFERABLE: [Relationship; 3] = [Relationship::C2P, Relationship::P2P, Relationship::P2C];

    /// Label of the same link seen from the other endpoint.
    pub fn reverse(self) -> Relationship {
        match self {
            Relationship::C2P => Relationship::P2C,
            Relationship::P2C => Relationship::C2P,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::C2P => "c2p",
            Relationship::P2P => "p2p",
            Relationship::P2C => "p2c",
            Relationship::S2S => "s2s",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relationship {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c2p" => Ok(Relationship::C2P),
            "p2p" => Ok(Relationship::P2P),
            "p2c" => Ok(Relationship::P2C),
            "s2s" => Ok(Relationship::S2S),
            _ => Err(format!("unknown relationship {s:?}")),
        }
    }
}

/// An AS path as received by one route collector. The first ASN is the
/// vantage point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AsPath {
    pub collector: String,
    pub asns: Vec<Asn>,
}

impl AsPath {
    pub fn new(collector: impl Into<String>, asns: Vec<Asn>) -> AsPath {
        AsPath { collector: collector.into(), asns }
    }

    /// Convenience constructor for tests and fixtures. Panics on ASN 0.
    pub fn from_u32s(collector: impl Into<String>, asns: &[u32]) -> AsPath {
        AsPath::new(collector, asns.iter().map(|&a| Asn::new(a).expect("ASN must be positive")).collect())
    }

    pub fn vantage_point(&self) -> Option<Asn> {
        self.asns.first().copied()
    }

    /// Adjacent ASN pairs in path order.
    pub fn hops(&self) -> impl Iterator<Item = (Asn, Asn)> + '_ {
        self.asns.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.hops().filter_map(|(a, b)| Link::new(a, b))
    }
}

/// An undirected AS adjacency, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    u: Asn,
    v: Asn,
}

impl Link {
    /// Returns `None` for a self-link.
    pub fn new(a: Asn, b: Asn) -> Option<Link> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Link { u: a, v: b }),
            std::cmp::Ordering::Greater => Some(Link { u: b, v: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn from_u32s(a: u32, b: u32) -> Link {
        Link::new(Asn::new(a).unwrap(), Asn::new(b).unwrap()).expect("self-link")
    }

    pub fn u(self) -> Asn {
        self.u
    }

    pub fn v(self) -> Asn {
        self.v
    }

    pub fn contains(self, a: Asn) -> bool {
        self.u == a || self.v == a
    }

    pub fn other(self, a: Asn) -> Option<Asn> {
        if a == self.u {
            Some(self.v)
        } else if a == self.v {
            Some(self.u)
        } else {
            None
        }
    }

    /// True when traversing `from -> other` follows the canonical `u -> v`
    /// orientation.
    pub fn is_forward_from(self, from: Asn) -> bool {
        from == self.u
    }

    /// Translate a label given for the ordered pair `(from, other)` into the
    /// canonical `(u, v)` orientation, and back (the map is an involution).
    pub fn orient(self, from: Asn, rel: Relationship) -> Relationship {
        if self.is_forward_from(from) {
            rel
        } else {
            rel.reverse()
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.u, self.v)
    }
}

/// Bit set over the three inferable relationships.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RelSet(u8);

impl RelSet {
    pub const EMPTY: RelSet = RelSet(0);
    pub const ALL: RelSet = RelSet(0b111);
    /// Domain of a link whose orientation is contested but which is not a peering.
    pub const TRANSIT: RelSet = RelSet(0b101);

    fn bit(rel: Relationship) -> u8 {
        match rel {
            Relationship::C2P => 0b001,
            Relationship::P2P => 0b010,
            Relationship::P2C => 0b100,
            Relationship::S2S => 0,
        }
    }

    pub fn only(rel: Relationship) -> RelSet {
        RelSet(Self::bit(rel))
    }

    pub fn of(rels: &[Relationship]) -> RelSet {
        RelSet(rels.iter().fold(0, |acc, &r| acc | Self::bit(r)))
    }

    pub fn from_bits(bits: u8) -> RelSet {
        RelSet(bits & 0b111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, rel: Relationship) -> bool {
        self.0 & Self::bit(rel) != 0
    }

    pub fn intersect(self, other: RelSet) -> RelSet {
        RelSet(self.0 & other.0)
    }

    pub fn union(self, other: RelSet) -> RelSet {
        RelSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn reverse(self) -> RelSet {
        RelSet::of(&self.iter().map(Relationship::reverse).collect::<Vec<_>>())
    }

    pub fn iter(self) -> impl Iterator<Item = Relationship> {
        Relationship::INFERABLE.into_iter().filter(move |&r| self.contains(r))
    }
}

impl fmt::Display for RelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Relationship::as_str).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}
