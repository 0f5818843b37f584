//! Shrinking experiment: how many inferred relationships change when route
//! collectors are progressively excluded.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::baseline::ucla_baseline;
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::ingest::{CollectorSet, ShrinkSeries};
use crate::paths::{preprocess, AsPath, Asn, Link};
use crate::principle::{run_principle, LinkState, PrincipleConfig, RelLabeling};

/// `from_to` categories, state under the full set first.
pub const TRANSITION_CATEGORIES: [&str; 13] = [
    "p2c_c2p",
    "p2c_p2p",
    "p2c_conflict",
    "p2c_undecided",
    "p2p_p2c",
    "p2p_conflict",
    "p2p_undecided",
    "conflict_p2c",
    "conflict_p2p",
    "conflict_undecided",
    "undecided_p2c",
    "undecided_p2p",
    "undecided_conflict",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Pari,
    PariStar,
    Ucla,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Pari => "pari",
            Algorithm::PariStar => "pari-star",
            Algorithm::Ucla => "ucla",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pari" => Ok(Algorithm::Pari),
            "pari-star" | "pari*" => Ok(Algorithm::PariStar),
            "ucla" => Ok(Algorithm::Ucla),
            other => Err(Error::Invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

pub fn run_algorithm(paths: &[AsPath], tier1: &BTreeSet<Asn>, algorithm: Algorithm) -> Result<RelLabeling> {
    Ok(match algorithm {
        Algorithm::Pari => run_principle(paths, tier1, &PrincipleConfig::default())?.labeling,
        Algorithm::PariStar => run_principle(paths, tier1, &PrincipleConfig::pari_star())?.labeling,
        Algorithm::Ucla => ucla_baseline(paths, tier1),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionCount {
    pub counts: BTreeMap<&'static str, usize>,
}

impl Default for TransitionCount {
    fn default() -> Self {
        TransitionCount { counts: TRANSITION_CATEGORIES.iter().map(|c| (*c, 0)).collect() }
    }
}

impl TransitionCount {
    pub fn get(&self, category: &str) -> usize {
        self.counts.get(category).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Category of a change from `full` to `shrunk`, `None` if unchanged.
pub fn transition(full: LinkState, shrunk: LinkState) -> Option<&'static str> {
    use LinkState::*;
    let name = match (full, shrunk) {
        (P2C { provider: a }, P2C { provider: b }) if a != b => "p2c_c2p",
        (P2C { .. }, P2P) => "p2c_p2p",
        (P2C { .. }, Conflict) => "p2c_conflict",
        (P2C { .. }, Undecided) => "p2c_undecided",
        (P2P, P2C { .. }) => "p2p_p2c",
        (P2P, Conflict) => "p2p_conflict",
        (P2P, Undecided) => "p2p_undecided",
        (Conflict, P2C { .. }) => "conflict_p2c",
        (Conflict, P2P) => "conflict_p2p",
        (Conflict, Undecided) => "conflict_undecided",
        (Undecided, P2C { .. }) => "undecided_p2c",
        (Undecided, P2P) => "undecided_p2p",
        (Undecided, Conflict) => "undecided_conflict",
        _ => return None,
    };
    Some(name)
}

/// Transitions over links present in both labelings.
pub fn compare(full: &RelLabeling, shrunk: &RelLabeling) -> TransitionCount {
    let mut t = TransitionCount::default();
    for (link, s) in &shrunk.states {
        if let Some(f) = full.states.get(link) {
            if let Some(cat) = transition(*f, *s) {
                *t.counts.get_mut(cat).expect("known category") += 1;
            }
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub step: usize,
    pub collectors_remaining: usize,
    pub links_removed: usize,
    pub ases_removed: usize,
    pub transitions: TransitionCount,
}

/// Inputs shared by every step of a shrinking experiment.
pub struct StabilityInput<'a> {
    pub collectors: &'a CollectorSet,
    pub tier1: &'a BTreeSet<Asn>,
    pub route_servers: &'a BTreeSet<Asn>,
    pub assigned: &'a (dyn Fn(Asn) -> bool + Sync),
}

fn infer_step(
    input: &StabilityInput,
    ids: &BTreeSet<String>,
    algorithm: Algorithm,
) -> Result<(RelLabeling, BTreeSet<Asn>)> {
    let raw = input.collectors.restricted_to(ids);
    let (clean, _) = preprocess(&raw, input.tier1, input.route_servers, input.assigned);
    let ases: BTreeSet<Asn> = clean.iter().flat_map(|p| p.asns.iter().copied()).collect();
    Ok((run_algorithm(&clean, input.tier1, algorithm)?, ases))
}

/// One row per step of `series`, step 0 being the full set.
pub fn stability_experiment(
    input: &StabilityInput,
    series: &ShrinkSeries,
    algorithm: Algorithm,
) -> Result<Vec<StepResult>> {
    let Some(full_ids) = series.steps.first() else { return Ok(Vec::new()) };
    let (full, full_ases) = infer_step(input, full_ids, algorithm)?;
    let full_links: BTreeSet<&Link> = full.states.keys().collect();
    let mut rows = Vec::with_capacity(series.steps.len());
    for (step, ids) in series.steps.iter().enumerate() {
        let (lab, ases) =
            if step == 0 { (full.clone(), full_ases.clone()) } else { infer_step(input, ids, algorithm)? };
        rows.push(StepResult {
            step,
            collectors_remaining: ids.len(),
            links_removed: full_links.iter().filter(|l| !lab.states.contains_key(l)).count(),
            ases_removed: full_ases.difference(&ases).count(),
            transitions: compare(&full, &lab),
        });
    }
    Ok(rows)
}

fn header() -> String {
    let mut h = "step,collectors_remaining,links_removed,ases_removed".to_string();
    for c in TRANSITION_CATEGORIES {
        h.push(',');
        h.push_str(c);
    }
    h
}

/// `step,collectors_remaining,links_removed,ases_removed,<categories>`.
pub fn write_stability_csv<W: Write>(mut out: W, rows: &[StepResult]) -> io::Result<()> {
    writeln!(out, "{}", header())?;
    for r in rows {
        write!(out, "{},{},{},{}", r.step, r.collectors_remaining, r.links_removed, r.ases_removed)?;
        for c in TRANSITION_CATEGORIES {
            write!(out, ",{}", r.transitions.get(c))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Arithmetic mean per step across series of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub step: usize,
    pub values: Vec<f64>,
}

pub fn mean_rows(series: &[Vec<StepResult>]) -> Result<Vec<MeanRow>> {
    let Some(first) = series.first() else { return Ok(Vec::new()) };
    if series.iter().any(|s| s.len() != first.len()) {
        return Err(Error::Invalid("series differ in step count".into()));
    }
    let n = series.len() as f64;
    Ok((0..first.len())
        .map(|step| {
            let mut values = vec![0.0; 3 + TRANSITION_CATEGORIES.len()];
            for s in series {
                let r = &s[step];
                values[0] += r.collectors_remaining as f64;
                values[1] += r.links_removed as f64;
                values[2] += r.ases_removed as f64;
                for (k, c) in TRANSITION_CATEGORIES.iter().enumerate() {
                    values[3 + k] += r.transitions.get(c) as f64;
                }
            }
            MeanRow { step, values: values.into_iter().map(|v| v / n).collect() }
        })
        .collect())
}

pub fn write_mean_csv<W: Write>(mut out: W, rows: &[MeanRow]) -> io::Result<()> {
    writeln!(out, "{}", header())?;
    for r in rows {
        write!(out, "{}", r.step)?;
        for v in &r.values {
            write!(out, ",{}", sig12(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::make_shrink_series;
    use crate::paths::default_assigned;

    fn asn(v: u32) -> Asn {
        Asn::new(v).unwrap()
    }

    fn corpus() -> CollectorSet {
        CollectorSet::from_paths(vec![
            AsPath::from_u32s("rc0", &[10, 100, 20, 21]),
            AsPath::from_u32s("rc1", &[11, 200, 100, 20]),
            AsPath::from_u32s("rc2", &[12, 11, 200, 30]),
            AsPath::from_u32s("rc3", &[13, 12, 11]),
        ])
    }

    #[test]
    fn transition_names() {
        let a = LinkState::P2C { provider: asn(1) };
        let b = LinkState::P2C { provider: asn(2) };
        assert_eq!(transition(a, b), Some("p2c_c2p"));
        assert_eq!(transition(a, a), None);
        assert_eq!(transition(LinkState::Conflict, LinkState::Conflict), None);
        assert_eq!(transition(LinkState::Undecided, LinkState::P2P), Some("undecided_p2p"));
    }

    #[test]
    fn full_set_step_is_zero() {
        let cs = corpus();
        let tier1 = BTreeSet::from([asn(100), asn(200)]);
        let rs = BTreeSet::new();
        let input = StabilityInput { collectors: &cs, tier1: &tier1, route_servers: &rs, assigned: &default_assigned };
        let series = ShrinkSeries { seed: 0, steps: vec![cs.ids()] };
        let rows = stability_experiment(&input, &series, Algorithm::Pari).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].transitions.total(), 0);
        assert_eq!(rows[0].links_removed, 0);
    }

    #[test]
    fn shrinking_series_rows() {
        let cs = corpus();
        let tier1 = BTreeSet::from([asn(100), asn(200)]);
        let rs = BTreeSet::new();
        let input = StabilityInput { collectors: &cs, tier1: &tier1, route_servers: &rs, assigned: &default_assigned };
        let series = make_shrink_series(&cs.ids(), 2, 5).unwrap();
        for alg in [Algorithm::Pari, Algorithm::PariStar, Algorithm::Ucla] {
            let rows = stability_experiment(&input, &series, alg).unwrap();
            assert_eq!(rows.len(), 3);
            assert!(rows.windows(2).all(|w| w[1].links_removed >= w[0].links_removed));
            if alg != Algorithm::Ucla {
                assert!(rows.iter().all(|r| r.transitions.get("p2c_c2p") == 0));
            }
            let mut buf = Vec::new();
            write_stability_csv(&mut buf, &rows).unwrap();
            let text = String::from_utf8(buf).unwrap();
            assert_eq!(text.lines().count(), 4);
            assert_eq!(text.lines().next().unwrap().split(',').count(), 17);
        }
    }

    #[test]
    fn means() {
        let row = |step, x| StepResult {
            step,
            collectors_remaining: x,
            links_removed: x,
            ases_removed: 0,
            transitions: TransitionCount::default(),
        };
        let m = mean_rows(&[vec![row(0, 1), row(1, 2)], vec![row(0, 3), row(1, 5)]]).unwrap();
        assert_eq!(m[1].values[0], 3.5);
        assert!(mean_rows(&[vec![row(0, 1)], vec![]]).is_err());
        let mut buf = Vec::new();
        write_mean_csv(&mut buf, &m).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(2).unwrap().starts_with("1,3.5,3.5,0,"));
    }
}
