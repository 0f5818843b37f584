//! Share vectors for every open link of a labeling.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_traits::Zero;
use rayon::prelude::*;

use super::relax::{relax, RelaxationReport};
use super::{component_shares, count_models, ShareVector};
use crate::error::Result;
use crate::format::sig12;
use crate::interdep::{encoded_components, Component, InterdepGraph};
use crate::paths::{AsPath, Link};
use crate::principle::RelLabeling;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShareConfig {
    /// Components with more nodes get uniform shares instead of exact counts.
    pub budget: usize,
    pub seed: u64,
}

impl Default for ShareConfig {
    fn default() -> Self {
        ShareConfig { budget: 2000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkShare {
    pub shares: ShareVector,
    pub component_id: usize,
    pub component_size: usize,
    /// Shares come from a relaxed component.
    pub relaxed: bool,
    /// Component exceeded the size budget; shares are uniform over the domain.
    pub over_budget: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SharesOutput {
    pub shares: BTreeMap<Link, LinkShare>,
    /// Final components, ids assigned in order.
    pub components: Vec<Component>,
    pub report: RelaxationReport,
    pub over_budget: Vec<usize>,
}

struct Piece {
    component: Component,
    shares: Vec<ShareVector>,
    relaxed: bool,
    over_budget: bool,
}

fn solve(component: Component, config: &ShareConfig) -> Result<(Vec<Piece>, RelaxationReport)> {
    if component.size() > config.budget {
        let shares = component.constraints.base.iter().map(|d| ShareVector::uniform(*d)).collect();
        return Ok((vec![Piece { component, shares, relaxed: false, over_budget: true }], RelaxationReport::default()));
    }
    if !count_models(&component).is_zero() {
        let shares = component_shares(&component)?;
        return Ok((
            vec![Piece { component, shares, relaxed: false, over_budget: false }],
            RelaxationReport::default(),
        ));
    }
    let seed = config.seed ^ (component.id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let (pieces, report) = relax(&component, seed)?;
    let out = pieces
        .into_iter()
        .map(|p| {
            let shares = component_shares(&p)?;
            Ok(Piece { component: p, shares, relaxed: true, over_budget: false })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, report))
}

/// Encodes, relaxes where needed and counts every component of `graph`.
pub fn compute_all_shares(
    graph: &InterdepGraph,
    paths: &[AsPath],
    labeling: &RelLabeling,
    config: &ShareConfig,
) -> Result<SharesOutput> {
    let comps = encoded_components(graph, paths, labeling);
    let solved: Vec<(Vec<Piece>, RelaxationReport)> =
        comps.into_par_iter().map(|c| solve(c, config)).collect::<Result<Vec<_>>>()?;

    let mut out = SharesOutput::default();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for (pieces, report) in solved {
        let mut report = report;
        report.size_histogram.clear();
        out.report.merge(report);
        for mut piece in pieces {
            let id = out.components.len();
            piece.component.id = id;
            *histogram.entry(piece.component.size()).or_default() += 1;
            if piece.over_budget {
                out.over_budget.push(id);
            }
            for (link, s) in piece.component.links.iter().zip(piece.shares) {
                out.shares.insert(
                    *link,
                    LinkShare {
                        shares: s,
                        component_id: id,
                        component_size: piece.component.size(),
                        relaxed: piece.relaxed,
                        over_budget: piece.over_budget,
                    },
                );
            }
            out.components.push(piece.component);
        }
    }
    out.report.size_histogram = histogram;
    Ok(out)
}

/// `u,v,s_c2p,s_p2p,s_p2c,component_id,component_size,relaxed_flag`.
/// The flag is `0`, `1` (relaxed) or `budget` (uniform fallback).
pub fn write_shares_csv<W: Write>(mut out: W, shares: &BTreeMap<Link, LinkShare>) -> io::Result<()> {
    writeln!(out, "u,v,s_c2p,s_p2p,s_p2c,component_id,component_size,relaxed_flag")?;
    for (link, s) in shares {
        let [c, p, d] = s.shares.to_f64();
        let flag = if s.over_budget {
            "budget"
        } else if s.relaxed {
            "1"
        } else {
            "0"
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            link.u(),
            link.v(),
            sig12(c),
            sig12(p),
            sig12(d),
            s.component_id,
            s.component_size,
            flag
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_path_example;
    use crate::interdep::build_graph;

    #[test]
    fn two_path_example_shares() {
        let (paths, labeling) = two_path_example();
        let g = build_graph(&paths, &labeling);
        let out = compute_all_shares(&g, &paths, &labeling, &ShareConfig::default()).unwrap();
        assert_eq!(out.shares.len(), 4);
        assert!(out.shares.values().all(|s| s.shares.is_normalised() && !s.relaxed));
        let mut buf = Vec::new();
        write_shares_csv(&mut buf, &out.shares).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,v,s_c2p,s_p2p,s_p2c,component_id,component_size,relaxed_flag\n1,2,0.647058823529,"));
    }

    #[test]
    fn budget_fallback() {
        let (paths, labeling) = two_path_example();
        let g = build_graph(&paths, &labeling);
        let out = compute_all_shares(&g, &paths, &labeling, &ShareConfig { budget: 3, seed: 0 }).unwrap();
        assert_eq!(out.over_budget, vec![0]);
        assert!(out.shares.values().all(|s| s.over_budget && s.shares.is_normalised()));
    }
}
