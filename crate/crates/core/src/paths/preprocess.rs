use std::collections::{BTreeSet, HashSet};
use std::fmt;

use super::{AsPath, Asn};

/// Reserved and private ranges treated as unassigned when no registry
/// snapshot is supplied.
pub fn default_assigned(asn: Asn) -> bool {
    let v = asn.get();
    !(v == 0 || v == 23456 || (64496..=131071).contains(&v) || v >= 4_200_000_000)
}

/// Per-reason counters from [`preprocess`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreprocessReport {
    pub input_paths: usize,
    pub kept_paths: usize,
    pub prepends_collapsed: usize,
    pub route_servers_removed: usize,
    pub dropped_empty: usize,
    pub dropped_unassigned: usize,
    pub dropped_loop: usize,
    pub dropped_tier1_separated: usize,
}

impl fmt::Display for PreprocessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_paths: {}", self.input_paths)?;
        writeln!(f, "kept_paths: {}", self.kept_paths)?;
        writeln!(f, "prepends_collapsed: {}", self.prepends_collapsed)?;
        writeln!(f, "route_servers_removed: {}", self.route_servers_removed)?;
        writeln!(f, "dropped_empty: {}", self.dropped_empty)?;
        writeln!(f, "dropped_unassigned: {}", self.dropped_unassigned)?;
        writeln!(f, "dropped_loop: {}", self.dropped_loop)?;
        writeln!(f, "dropped_tier1_separated: {}", self.dropped_tier1_separated)
    }
}

fn collapse_prepends(asns: &mut Vec<Asn>) -> usize {
    let before = asns.len();
    asns.dedup();
    before - asns.len()
}

fn has_loop(asns: &[Asn]) -> bool {
    let mut seen = HashSet::with_capacity(asns.len());
    !asns.iter().all(|a| seen.insert(*a))
}

/// Tier-1 ASes must form one contiguous run; any non-Tier-1 AS between two
/// Tier-1 ASes is a sign of poisoning.
fn tier1_separated(asns: &[Asn], tier1: &BTreeSet<Asn>) -> bool {
    let positions: Vec<usize> = asns.iter().enumerate().filter(|(_, a)| tier1.contains(a)).map(|(i, _)| i).collect();
    match (positions.first(), positions.last()) {
        (Some(&first), Some(&last)) => last - first + 1 != positions.len(),
        _ => false,
    }
}

/// Sanitize raw paths.
///
/// Order of steps: collapse prepending, splice out IXP route servers (joining
/// their neighbours), collapse again, then drop empty paths, paths with
/// unassigned ASNs, paths with loops and paths whose Tier-1 ASes are split by
/// a non-Tier-1 AS. The output is a fixpoint: running it again changes nothing.
pub fn preprocess(
    paths: &[AsPath],
    tier1: &BTreeSet<Asn>,
    route_servers: &BTreeSet<Asn>,
    assigned: &dyn Fn(Asn) -> bool,
) -> (Vec<AsPath>, PreprocessReport) {
    let mut report = PreprocessReport { input_paths: paths.len(), ..Default::default() };
    let mut out = Vec::with_capacity(paths.len());

    for path in paths {
        let mut asns = path.asns.clone();
        report.prepends_collapsed += collapse_prepends(&mut asns);

        let before = asns.len();
        asns.retain(|a| !route_servers.contains(a));
        report.route_servers_removed += before - asns.len();
        report.prepends_collapsed += collapse_prepends(&mut asns);

        if asns.is_empty() {
            report.dropped_empty += 1;
        } else if !asns.iter().all(|&a| assigned(a)) {
            report.dropped_unassigned += 1;
        } else if has_loop(&asns) {
            report.dropped_loop += 1;
        } else if tier1_separated(&asns, tier1) {
            report.dropped_tier1_separated += 1;
        } else {
            out.push(AsPath::new(path.collector.clone(), asns));
        }
    }
    report.kept_paths = out.len();
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[u32]) -> BTreeSet<Asn> {
        v.iter().map(|&a| Asn::new(a).unwrap()).collect()
    }

    fn run(paths: &[AsPath], tier1: &[u32], rs: &[u32]) -> (Vec<AsPath>, PreprocessReport) {
        preprocess(paths, &set(tier1), &set(rs), &default_assigned)
    }

    #[test]
    fn tier1_separation_drops_path() {
        let (out, rep) = run(&[AsPath::from_u32s("c", &[10, 1, 20, 2])], &[1, 2], &[]);
        assert!(out.is_empty());
        assert_eq!(rep.dropped_tier1_separated, 1);

        let (out, _) = run(&[AsPath::from_u32s("c", &[10, 1, 2, 20])], &[1, 2], &[]);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn route_server_spliced_out() {
        let (out, rep) = run(&[AsPath::from_u32s("c", &[10, 99, 20])], &[1], &[99]);
        assert_eq!(out, vec![AsPath::from_u32s("c", &[10, 20])]);
        assert_eq!(rep.route_servers_removed, 1);
    }

    #[test]
    fn prepend_is_not_a_loop() {
        let (out, rep) = run(&[AsPath::from_u32s("c", &[10, 10, 20])], &[1], &[]);
        assert_eq!(out, vec![AsPath::from_u32s("c", &[10, 20])]);
        assert_eq!(rep.prepends_collapsed, 1);
        assert_eq!(rep.dropped_loop, 0);

        let (out, rep) = run(&[AsPath::from_u32s("c", &[10, 20, 10])], &[1], &[]);
        assert!(out.is_empty());
        assert_eq!(rep.dropped_loop, 1);
    }

    #[test]
    fn unassigned_and_empty() {
        let (out, rep) = run(
            &[AsPath::from_u32s("c", &[10, 64512]), AsPath::from_u32s("c", &[99]), AsPath::new("c", vec![])],
            &[1],
            &[99],
        );
        assert!(out.is_empty());
        assert_eq!(rep.dropped_unassigned, 1);
        assert_eq!(rep.dropped_empty, 2);
    }

    #[test]
    fn default_ranges() {
        for v in [23456u32, 64496, 65535, 131071, 4_200_000_000, u32::MAX] {
            assert!(!default_assigned(Asn::new(v).unwrap()), "{v}");
        }
        for v in [1u32, 3356, 64495, 131072, 399999] {
            assert!(default_assigned(Asn::new(v).unwrap()), "{v}");
        }
    }

    proptest! {
        #[test]
        fn idempotent(raw in prop::collection::vec(prop::collection::vec(1u32..12, 0..7), 0..12)) {
            let paths: Vec<AsPath> = raw.iter().map(|p| AsPath::from_u32s("c", p)).collect();
            let tier1 = set(&[1, 2, 3]);
            let rs = set(&[9]);
            let (once, _) = preprocess(&paths, &tier1, &rs, &default_assigned);
            let (twice, rep) = preprocess(&once, &tier1, &rs, &default_assigned);
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(rep.kept_paths, once.len());
        }
    }
}
