use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;

use num_rational::BigRational;

use pari_core::counting::ShareConfig;
use pari_core::eval::{accuracy, confusion, stability_experiment, Algorithm, ConfusionMatrix, StabilityInput};
use pari_core::fixtures::two_path_files;
use pari_core::ingest::{
    make_shrink_series, parse_ground_truth, parse_paths_file, parse_tier1_file, write_ground_truth, ShrinkSeries,
};
use pari_core::paths::{default_assigned, preprocess, Link};
use pari_core::pipeline::infer;
use pari_core::principle::PrincipleConfig;
use pari_core::synth::{generate_corpus, SynthConfig};

#[test]
fn two_path_files_give_the_component_shares() {
    let dir = tempfile::tempdir().unwrap();
    let (paths_text, tier1_text) = two_path_files();
    fs::write(dir.path().join("paths.txt"), paths_text).unwrap();
    fs::write(dir.path().join("tier1.txt"), tier1_text).unwrap();
    let (set, _) = parse_paths_file(&dir.path().join("paths.txt")).unwrap();
    let tier1 = parse_tier1_file(&dir.path().join("tier1.txt")).unwrap();
    let (paths, _) = preprocess(&set.aggregate(), &tier1, &BTreeSet::new(), &default_assigned);
    let out = infer(&paths, &tier1, &PrincipleConfig::default(), &ShareConfig::default()).unwrap();
    let n12 = &out.shares.shares[&Link::from_u32s(1, 2)];
    assert_eq!(n12.shares.c2p, BigRational::new(11.into(), 17.into()));
    assert_eq!(n12.component_size, 4);
    assert!(!n12.relaxed);
}

#[test]
fn confusion_round_trips_through_csv() {
    let corpus = generate_corpus(&SynthConfig::small(4));
    let (paths, _) =
        preprocess(&corpus.collectors.aggregate(), &corpus.tier1, &corpus.route_servers, &default_assigned);
    let out = infer(&paths, &corpus.tier1, &PrincipleConfig::default(), &ShareConfig::default()).unwrap();
    let m = confusion(&out.principle.labeling, &corpus.truth);
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let back = ConfusionMatrix::read_csv(BufReader::new(&buf[..])).unwrap();
    assert_eq!(back, m);
    assert_eq!(accuracy(&back).unwrap(), accuracy(&m).unwrap());
    assert!((accuracy(&m).unwrap() - 1.0).abs() < 1e-12, "clean synthetic corpus is labeled correctly");
}

#[test]
fn ground_truth_round_trips_through_file() {
    let corpus = generate_corpus(&SynthConfig::small(5));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("truth.txt");
    let mut buf = Vec::new();
    write_ground_truth(&mut buf, &corpus.truth).unwrap();
    fs::write(&file, buf).unwrap();
    assert_eq!(parse_ground_truth(&file).unwrap(), corpus.truth);
}

#[test]
fn stability_without_removals_has_no_transitions() {
    let corpus = generate_corpus(&SynthConfig::small(6));
    let input = StabilityInput {
        collectors: &corpus.collectors,
        tier1: &corpus.tier1,
        route_servers: &corpus.route_servers,
        assigned: &default_assigned,
    };
    let still = ShrinkSeries { seed: 0, steps: vec![corpus.collectors.ids()] };
    for alg in [Algorithm::Pari, Algorithm::PariStar, Algorithm::Ucla] {
        let rows = stability_experiment(&input, &still, alg).unwrap();
        assert!(rows.iter().all(|r| r.transitions.total() == 0 && r.links_removed == 0));
    }
    let series = make_shrink_series(&corpus.collectors.ids(), 2, 1).unwrap();
    let rows = stability_experiment(&input, &series, Algorithm::PariStar).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.transitions.get("p2c_c2p") == 0));
}
