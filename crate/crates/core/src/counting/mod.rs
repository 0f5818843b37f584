//! Model counting over interdependence components and the share vectors
//! derived from it.

mod brute;
mod exact;
mod maxsat;
mod relax;
mod shares;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub use brute::{brute_force_count, enumerate_models, BRUTE_FORCE_LIMIT};
pub use exact::{Counter, Csp};
pub use maxsat::{exhaustive_min_cost, max_sat, MaxSatResult, SoftClause, EXACT_LIMIT};
pub use relax::{relax, DroppedRestriction, RelaxationReport, RemovedArc};
pub use shares::{compute_all_shares, write_shares_csv, LinkShare, ShareConfig, SharesOutput};

use crate::error::{Error, Result};
use crate::interdep::Component;
use crate::paths::{RelSet, Relationship};

pub type ModelCount = BigUint;

/// Fraction of valley-free models taking each label, in the link's
/// canonical orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector {
    pub c2p: BigRational,
    pub p2p: BigRational,
    pub p2c: BigRational,
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

impl ShareVector {
    /// Shares from the total model count and the per-label conditioned counts
    /// (ordered c2p, p2p, p2c).
    pub fn from_counts(total: &BigUint, by_label: [&BigUint; 3]) -> Result<ShareVector> {
        if total.is_zero() {
            return Err(Error::Unsatisfiable);
        }
        Ok(ShareVector {
            c2p: ratio(by_label[0], total),
            p2p: ratio(by_label[1], total),
            p2c: ratio(by_label[2], total),
        })
    }

    /// Equal mass on every label of `domain`.
    pub fn uniform(domain: RelSet) -> ShareVector {
        let n = domain.len().max(1) as i64;
        let part = |r| {
            if domain.contains(r) {
                BigRational::new(BigInt::one(), BigInt::from(n))
            } else {
                BigRational::zero()
            }
        };
        ShareVector { c2p: part(Relationship::C2P), p2p: part(Relationship::P2P), p2c: part(Relationship::P2C) }
    }

    pub fn get(&self, rel: Relationship) -> &BigRational {
        match rel {
            Relationship::C2P => &self.c2p,
            Relationship::P2P => &self.p2p,
            Relationship::P2C => &self.p2c,
            Relationship::S2S => panic!("s2s has no share"),
        }
    }

    pub fn sum(&self) -> BigRational {
        &self.c2p + &self.p2p + &self.p2c
    }

    /// Exactly one.
    pub fn is_normalised(&self) -> bool {
        self.sum().is_one()
    }

    /// `[c2p, p2p, p2c]` as floats.
    pub fn to_f64(&self) -> [f64; 3] {
        let f = |r: &BigRational| r.to_f64().unwrap_or(f64::NAN);
        [f(&self.c2p), f(&self.p2p), f(&self.p2c)]
    }

    /// Same vector for the reversed link orientation.
    pub fn reverse(&self) -> ShareVector {
        ShareVector { c2p: self.p2c.clone(), p2p: self.p2p.clone(), p2c: self.c2p.clone() }
    }
}

pub fn count_models(component: &Component) -> ModelCount {
    let csp = Csp::compile(&component.constraints);
    Counter::new(&csp).count()
}

/// Models with `node` labeled `rel`; zero if `rel` is outside its domain.
pub fn count_conditioned(component: &Component, node: usize, rel: Relationship) -> ModelCount {
    if !component.constraints.base.get(node).is_some_and(|d| d.contains(rel)) {
        return BigUint::zero();
    }
    let csp = Csp::compile(&component.constraints);
    Counter::new(&csp).count_with(node, rel)
}

/// Share vectors of every node, sharing one memo table.
pub fn component_shares(component: &Component) -> Result<Vec<ShareVector>> {
    let csp = Csp::compile(&component.constraints);
    let mut counter = Counter::new(&csp);
    let total = counter.count();
    if total.is_zero() {
        return Err(Error::Unsatisfiable);
    }
    (0..component.size())
        .map(|node| {
            let by: Vec<BigUint> = Relationship::INFERABLE
                .iter()
                .map(|&r| {
                    if component.constraints.base[node].contains(r) {
                        counter.count_with(node, r)
                    } else {
                        BigUint::zero()
                    }
                })
                .collect();
            ShareVector::from_counts(&total, [&by[0], &by[1], &by[2]])
        })
        .collect()
}

pub fn share_vector(component: &Component, node: usize) -> Result<ShareVector> {
    let csp = Csp::compile(&component.constraints);
    let mut counter = Counter::new(&csp);
    let total = counter.count();
    let by: Vec<BigUint> =
        Relationship::INFERABLE
            .iter()
            .map(|&r| {
                if component.constraints.base[node].contains(r) {
                    counter.count_with(node, r)
                } else {
                    BigUint::zero()
                }
            })
            .collect();
    ShareVector::from_counts(&total, [&by[0], &by[1], &by[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_path_example;
    use crate::interdep::{build_graph, encoded_components};

    #[test]
    fn two_path_example_counts() {
        let (paths, labeling) = two_path_example();
        let comp = &encoded_components(&build_graph(&paths, &labeling), &paths, &labeling)[0];
        assert_eq!(count_models(comp), BigUint::from(17u32));
        assert_eq!(count_conditioned(comp, 0, Relationship::C2P), BigUint::from(11u32));
        let s = share_vector(comp, 0).unwrap();
        assert!(s.is_normalised());
        assert_eq!(s.c2p, BigRational::new(11.into(), 17.into()));
        let all = component_shares(comp).unwrap();
        assert_eq!(all[0], s);
        assert!(all.iter().all(ShareVector::is_normalised));
    }

    #[test]
    fn conditioned_outside_domain_is_zero() {
        let mut comp = Component { links: vec![crate::paths::Link::from_u32s(1, 2)], ..Default::default() };
        comp.constraints.base = vec![RelSet::TRANSIT];
        assert!(count_conditioned(&comp, 0, Relationship::P2P).is_zero());
        let s = share_vector(&comp, 0).unwrap();
        assert_eq!(s.to_f64(), [0.5, 0.0, 0.5]);
    }

    #[test]
    fn unsatisfiable_has_no_shares() {
        let total = BigUint::zero();
        let z = BigUint::zero();
        assert!(matches!(ShareVector::from_counts(&total, [&z, &z, &z]), Err(Error::Unsatisfiable)));
    }

    #[test]
    fn uniform_and_reverse() {
        let u = ShareVector::uniform(RelSet::ALL);
        assert!(u.is_normalised());
        let t = ShareVector::uniform(RelSet::TRANSIT);
        assert!(t.p2p.is_zero());
        let s = ShareVector {
            c2p: BigRational::new(1.into(), 2.into()),
            p2p: BigRational::new(1.into(), 3.into()),
            p2c: BigRational::new(1.into(), 6.into()),
        };
        assert_eq!(s.reverse().c2p, s.p2c);
    }
}
