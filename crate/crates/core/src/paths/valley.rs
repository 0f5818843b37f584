use super::Relationship;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Segment {
    Uphill,
    Downhill,
}

/// Checks the valley-free shape of a per-hop label sequence oriented in
/// traversal direction: `(c2p|s2s)* p2p? (p2c|s2s)*`.
pub fn is_valley_free(labels: &[Relationship]) -> bool {
    let mut seg = Segment::Uphill;
    for &rel in labels {
        seg = match (seg, rel) {
            (Segment::Uphill, Relationship::C2P | Relationship::S2S) => Segment::Uphill,
            (Segment::Uphill, Relationship::P2P | Relationship::P2C) => Segment::Downhill,
            (Segment::Downhill, Relationship::P2C | Relationship::S2S) => Segment::Downhill,
            (Segment::Downhill, Relationship::C2P | Relationship::P2P) => return false,
        };
    }
    true
}

/// Valley-free condition on two consecutive hops over the three inferable
/// labels: once a hop is p2p or p2c, the next one must be p2c. Applied to
/// every consecutive pair it is equivalent to [`is_valley_free`].
pub fn hop_pair_ok(first: Relationship, second: Relationship) -> bool {
    match first {
        Relationship::P2P | Relationship::P2C => second == Relationship::P2C,
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Relationship::*;

    #[test]
    fn canonical_shapes() {
        assert!(is_valley_free(&[C2P, P2P, P2C]));
        assert!(!is_valley_free(&[P2C, C2P]));
        assert!(!is_valley_free(&[P2P, P2P]));
        assert!(is_valley_free(&[]));
        assert!(is_valley_free(&[S2S, P2P, S2S, P2C]));
        assert!(!is_valley_free(&[P2C, S2S, P2P]));
    }

    #[test]
    fn pairwise_rule_matches_full_predicate() {
        fn all(len: usize) -> Vec<Vec<Relationship>> {
            (0..len).fold(vec![vec![]], |acc, _| {
                acc.into_iter()
                    .flat_map(|s| {
                        Relationship::INFERABLE.into_iter().map(move |r| {
                            let mut n = s.clone();
                            n.push(r);
                            n
                        })
                    })
                    .collect()
            })
        }
        for len in 0..=6 {
            for seq in all(len) {
                let pairwise = seq.windows(2).all(|w| hop_pair_ok(w[0], w[1]));
                assert_eq!(pairwise, is_valley_free(&seq), "{seq:?}");
            }
        }
    }
}
