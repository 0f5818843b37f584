//! Per-link feature vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::counting::ShareVector;
use crate::error::{Error, Result};
use crate::paths::{Asn, Topology};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSchema {
    /// `(s_c2p, s_p2p, s_p2c)`
    Shares,
    /// `log1p` of node and transit degree of both endpoints.
    Degrees,
    /// Shares followed by degrees.
    Hybrid,
}

impl FeatureSchema {
    pub const ALL: [FeatureSchema; 3] = [FeatureSchema::Shares, FeatureSchema::Degrees, FeatureSchema::Hybrid];

    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            FeatureSchema::Shares => 3,
            FeatureSchema::Degrees => 4,
            FeatureSchema::Hybrid => 7,
        }
    }

    pub fn needs_shares(self) -> bool {
        self != FeatureSchema::Degrees
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSchema::Shares => "shares",
            FeatureSchema::Degrees => "degrees",
            FeatureSchema::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shares" => Ok(FeatureSchema::Shares),
            "degrees" => Ok(FeatureSchema::Degrees),
            "hybrid" => Ok(FeatureSchema::Hybrid),
            other => Err(Error::Invalid(format!("unknown feature schema {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub schema: FeatureSchema,
    pub values: Vec<T>,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn new(schema: FeatureSchema, values: Vec<T>) -> Result<FeatureVector<T>> {
        if values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{schema} ({} values)", schema.len()),
                got: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FeatureVector { schema, values })
    }
}

/// Features of the link `u -> v`. `shares` must be given in that orientation.
pub fn build_features<T: Scalar>(
    u: Asn,
    v: Asn,
    shares: Option<&ShareVector>,
    topology: &Topology,
    schema: FeatureSchema,
) -> Result<FeatureVector<T>> {
    let mut values = Vec::with_capacity(schema.len());
    if schema.needs_shares() {
        let s = shares.ok_or_else(|| Error::MissingShares(schema.to_string()))?;
        values.extend(s.to_f64().iter().map(|&x| T::lit(x)));
    }
    if schema != FeatureSchema::Shares {
        for a in [u, v] {
            values.push(T::lit(topology.node_degree_of(a) as f64).ln_1p());
            values.push(T::lit(topology.transit_degree_of(a) as f64).ln_1p());
        }
    }
    FeatureVector::new(schema, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{build_topology, AsPath, RelSet};
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn asn(v: u32) -> Asn {
        Asn::new(v).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn shares_features() {
        let s = ShareVector { c2p: r(8, 14), p2p: r(3, 14), p2c: r(3, 14) };
        let topo = Topology::default();
        let f: FeatureVector<f64> = build_features(asn(1), asn(2), Some(&s), &topo, FeatureSchema::Shares).unwrap();
        assert!((f.values[0] - 8.0 / 14.0).abs() < 1e-15);
        assert!((f.values[1] - 3.0 / 14.0).abs() < 1e-15);
        let iso: FeatureVector<f32> =
            build_features(asn(1), asn(2), Some(&ShareVector::uniform(RelSet::ALL)), &topo, FeatureSchema::Shares)
                .unwrap();
        assert!(iso.values.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-6));
    }

    #[test]
    fn degree_features_for_two_stubs() {
        let topo = build_topology(&[AsPath::from_u32s("c", &[1, 2])]);
        let f: FeatureVector<f64> = build_features(asn(1), asn(2), None, &topo, FeatureSchema::Degrees).unwrap();
        let l2 = 2f64.ln();
        assert_eq!(f.values, vec![l2, 0.0, l2, 0.0]);
    }

    #[test]
    fn hybrid_concatenates_and_requires_shares() {
        let topo = build_topology(&[AsPath::from_u32s("c", &[1, 2])]);
        let s = ShareVector::uniform(RelSet::ALL);
        let f: FeatureVector<f64> = build_features(asn(1), asn(2), Some(&s), &topo, FeatureSchema::Hybrid).unwrap();
        assert_eq!(f.values.len(), 7);
        assert!(matches!(
            build_features::<f64>(asn(1), asn(2), None, &topo, FeatureSchema::Hybrid),
            Err(Error::MissingShares(_))
        ));
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        assert!(matches!(FeatureVector::new(FeatureSchema::Shares, vec![f64::NAN, 0.0, 1.0]), Err(Error::NonFinite)));
        assert!(matches!(
            FeatureVector::new(FeatureSchema::Shares, vec![0.0f64; 4]),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn schema_names() {
        for s in FeatureSchema::ALL {
            assert_eq!(s.as_str().parse::<FeatureSchema>().unwrap(), s);
        }
    }
}
