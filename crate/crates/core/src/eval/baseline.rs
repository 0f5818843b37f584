//! UCLA-style baseline: links from the last Tier-1 AS onward are p2c,
//! everything else p2p.

use std::collections::{BTreeMap, BTreeSet};

use crate::paths::{AsPath, Asn, Link};
use crate::principle::{LinkState, RelLabeling};

/// Each path votes p2c for every hop starting at its last Tier-1 AS; a link
/// takes its majority orientation, ties and unvoted links become p2p.
pub fn ucla_baseline(paths: &[AsPath], tier1: &BTreeSet<Asn>) -> RelLabeling {
    let mut votes: BTreeMap<Link, BTreeMap<Asn, usize>> = BTreeMap::new();
    let mut labeling = RelLabeling::undecided(paths.iter().flat_map(AsPath::links));
    for path in paths {
        let Some(h) = path.asns.iter().rposition(|a| tier1.contains(a)) else { continue };
        for w in path.asns[h..].windows(2) {
            if let Some(link) = Link::new(w[0], w[1]) {
                *votes.entry(link).or_default().entry(w[0]).or_default() += 1;
            }
        }
    }
    for (link, state) in labeling.states.iter_mut() {
        *state = LinkState::P2P;
        if let Some(v) = votes.get(link) {
            let mut ranked: Vec<(usize, Asn)> = v.iter().map(|(a, c)| (*c, *a)).collect();
            ranked.sort_unstable_by(|a, b| b.cmp(a));
            if ranked.len() == 1 || ranked[0].0 > ranked[1].0 {
                *state = LinkState::P2C { provider: ranked[0].1 };
            }
        }
    }
    labeling
}
