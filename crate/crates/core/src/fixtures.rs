//! Small hand-built inputs shared by tests, the acceptance suite and docs.

use crate::paths::{AsPath, Asn, Link};
use crate::principle::{LinkState, RelLabeling};

/// Two paths sharing the open link 3-4:
///
/// * path I  `1 2 3 4 5`, with 4-5 known p2c (4 provides transit to 5)
/// * path II `4 3 6 7`,   with 6-7 known p2c (6 provides transit to 7)
///
/// Links 1-2, 2-3, 3-4 and 3-6 are left open.
pub fn two_path_example() -> (Vec<AsPath>, RelLabeling) {
    let paths = vec![AsPath::from_u32s("rc0", &[1, 2, 3, 4, 5]), AsPath::from_u32s("rc0", &[4, 3, 6, 7])];
    let mut labeling = RelLabeling::undecided(paths.iter().flat_map(AsPath::links));
    labeling.states.insert(Link::from_u32s(4, 5), LinkState::P2C { provider: Asn::new(4).unwrap() });
    labeling.states.insert(Link::from_u32s(6, 7), LinkState::P2C { provider: Asn::new(6).unwrap() });
    (paths, labeling)
}

/// Paths and Tier-1 file contents whose principle step reproduces the
/// [`two_path_example`] labeling: Tier-1 AS 100 reaches 4 and 6, so phase I decides
/// 4-5 and 6-7 and leaves everything else open.
pub fn two_path_files() -> (&'static str, &'static str) {
    ("rc0|1 2 3 4 5\nrc0|4 3 6 7\nrc1|100 4 5\nrc1|100 6 7\n", "100\n")
}
