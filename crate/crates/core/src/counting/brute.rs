//! Enumeration oracle. Substitutes every candidate assignment into the
//! supporting paths and runs the plain valley-free predicate on each; it
//! never looks at the encoded constraints.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::interdep::Component;
use crate::paths::{is_valley_free, AsPath, Link, RelSet, Relationship};
use crate::principle::{LinkState, RelLabeling};

pub const BRUTE_FORCE_LIMIT: usize = 20;

/// All valley-free assignments of the component's links, in canonical
/// orientation, in lexicographic order of [`Relationship::INFERABLE`].
pub fn enumerate_models(
    component: &Component,
    paths: &[AsPath],
    labeling: &RelLabeling,
) -> Result<Vec<Vec<Relationship>>> {
    let n = component.size();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { nodes: n, limit: BRUTE_FORCE_LIMIT });
    }
    let domains: Vec<Vec<Relationship>> = component
        .links
        .iter()
        .map(|l| {
            let d = if labeling.state(l) == LinkState::Conflict { RelSet::TRANSIT } else { RelSet::ALL };
            d.iter().collect()
        })
        .collect();

    // For every supporting path: per hop either a node index (with the hop's
    // origin) or a fixed label.
    enum Hop {
        Node(usize, crate::paths::Asn),
        Fixed(Relationship),
    }
    let mut checks: Vec<Vec<Hop>> = Vec::new();
    for &pi in &component.paths {
        let mut hops = Vec::new();
        for (a, b) in paths[pi].hops() {
            let link = Link::new(a, b).ok_or_else(|| Error::Invalid("self-link in path".into()))?;
            if let Some(i) = component.local(&link) {
                hops.push(Hop::Node(i, a));
            } else if let Some(rel) = labeling.hop(a, b) {
                hops.push(Hop::Fixed(rel));
            } else {
                return Err(Error::Invalid(format!("open link {link} outside the component")));
            }
        }
        checks.push(hops);
    }

    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    let mut seq = Vec::new();
    'outer: loop {
        let assignment: Vec<Relationship> = idx.iter().zip(&domains).map(|(&i, d)| d[i]).collect();
        let ok = checks.iter().all(|hops| {
            seq.clear();
            seq.extend(hops.iter().map(|h| match *h {
                Hop::Node(i, from) => component.links[i].orient(from, assignment[i]),
                Hop::Fixed(r) => r,
            }));
            is_valley_free(&seq)
        });
        if ok {
            out.push(assignment);
        }
        // odometer, last position fastest
        for pos in (0..n).rev() {
            idx[pos] += 1;
            if idx[pos] < domains[pos].len() {
                continue 'outer;
            }
            idx[pos] = 0;
        }
        break;
    }
    Ok(out)
}

pub fn brute_force_count(component: &Component, paths: &[AsPath], labeling: &RelLabeling) -> Result<BigUint> {
    enumerate_models(component, paths, labeling).map(|m| BigUint::from(m.len()))
}
