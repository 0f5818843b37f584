//! Confusion matrix of a labeling against validated relationships.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{GroundTruth, TruthLabel};
use crate::paths::{Link, Relationship};
use crate::principle::{LinkState, RelLabeling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TrueRel {
    P2C,
    P2P,
}

/// Inferred state relative to the validated orientation: `C2P` means the
/// inferred provider is the validated customer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Inferred {
    P2C,
    C2P,
    Conflict,
    P2P,
    Undecided,
}

impl TrueRel {
    pub const ALL: [TrueRel; 2] = [TrueRel::P2C, TrueRel::P2P];

    pub fn as_str(self) -> &'static str {
        match self {
            TrueRel::P2C => "p2c",
            TrueRel::P2P => "p2p",
        }
    }
}

impl Inferred {
    pub const ALL: [Inferred; 5] =
        [Inferred::P2C, Inferred::C2P, Inferred::Conflict, Inferred::P2P, Inferred::Undecided];

    pub fn as_str(self) -> &'static str {
        match self {
            Inferred::P2C => "p2c",
            Inferred::C2P => "c2p",
            Inferred::Conflict => "conflict",
            Inferred::P2P => "p2p",
            Inferred::Undecided => "undecided",
        }
    }
}

impl FromStr for TrueRel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrueRel::ALL.into_iter().find(|r| r.as_str() == s).ok_or_else(|| Error::Invalid(format!("true label {s:?}")))
    }
}

impl FromStr for Inferred {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Inferred::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("inferred label {s:?}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: BTreeMap<(TrueRel, Inferred), usize>,
}

impl ConfusionMatrix {
    pub fn get(&self, t: TrueRel, i: Inferred) -> usize {
        self.counts.get(&(t, i)).copied().unwrap_or(0)
    }

    pub fn add(&mut self, t: TrueRel, i: Inferred) {
        *self.counts.entry((t, i)).or_default() += 1;
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn correct(&self) -> usize {
        self.get(TrueRel::P2C, Inferred::P2C) + self.get(TrueRel::P2P, Inferred::P2P)
    }

    pub fn undecided(&self) -> usize {
        TrueRel::ALL.iter().map(|&t| self.get(t, Inferred::Undecided)).sum()
    }

    /// `true,inferred,count`, every cell listed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "true,inferred,count")?;
        for t in TrueRel::ALL {
            for i in Inferred::ALL {
                writeln!(out, "{},{},{}", t.as_str(), i.as_str(), self.get(t, i))?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(reader: R) -> Result<ConfusionMatrix> {
        let mut m = ConfusionMatrix::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })?;
            if n == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse { line: n + 1, msg: format!("expected true,inferred,count: {line:?}") };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad());
            }
            let c: usize = f[2].parse().map_err(|_| bad())?;
            if c > 0 {
                m.counts.insert((f[0].parse()?, f[1].parse()?), c);
            }
        }
        Ok(m)
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>6}", "")?;
        for i in Inferred::ALL {
            write!(f, " {:>10}", i.as_str())?;
        }
        writeln!(f)?;
        for t in TrueRel::ALL {
            write!(f, "{:>6}", t.as_str())?;
            for i in Inferred::ALL {
                write!(f, " {:>10}", self.get(t, i))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn cell(truth: TruthLabel, state: LinkState) -> (TrueRel, Inferred) {
    let t = match truth {
        TruthLabel::P2P => TrueRel::P2P,
        TruthLabel::P2C { .. } => TrueRel::P2C,
    };
    let i = match (truth, state) {
        (_, LinkState::Undecided) => Inferred::Undecided,
        (_, LinkState::Conflict) => Inferred::Conflict,
        (_, LinkState::P2P) => Inferred::P2P,
        (TruthLabel::P2C { provider: p }, LinkState::P2C { provider: q }) if p != q => Inferred::C2P,
        (_, LinkState::P2C { .. }) => Inferred::P2C,
    };
    (t, i)
}

/// Orientation-aware comparison over links present in both.
pub fn confusion(labeling: &RelLabeling, truth: &GroundTruth) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for (link, label) in &truth.labels {
        if let Some(state) = labeling.states.get(link) {
            let (t, i) = cell(*label, *state);
            m.add(t, i);
        }
    }
    m
}

/// Same as [`confusion`] for single-label predictions given in each link's
/// canonical orientation.
pub fn confusion_from_predictions(predictions: &BTreeMap<Link, Relationship>, truth: &GroundTruth) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for (link, label) in &truth.labels {
        if let Some(&rel) = predictions.get(link) {
            let state = match rel {
                Relationship::P2P => LinkState::P2P,
                Relationship::P2C => LinkState::P2C { provider: link.u() },
                Relationship::C2P => LinkState::P2C { provider: link.v() },
                Relationship::S2S => LinkState::Undecided,
            };
            let (t, i) = cell(*label, state);
            m.add(t, i);
        }
    }
    m
}

/// Links on either side missing from the other: `(only labeled, only validated)`.
pub fn universe_mismatch(labeled: &BTreeSet<Link>, truth: &GroundTruth) -> (usize, usize) {
    let only_labeled = labeled.iter().filter(|l| !truth.labels.contains_key(l)).count();
    let only_truth = truth.labels.keys().filter(|l| !labeled.contains(l)).count();
    (only_labeled, only_truth)
}

/// Correct over evaluated links; undecided links are not evaluated and
/// conflicts count as wrong.
pub fn accuracy(matrix: &ConfusionMatrix) -> Result<f64> {
    let evaluated = matrix.total() - matrix.undecided();
    if evaluated == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(matrix.correct() as f64 / evaluated as f64)
}
