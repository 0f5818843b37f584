//! `pari`: file-based stages of the relationship inference pipeline.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pari_core::counting::{write_shares_csv, ShareConfig};
use pari_core::eval::{
    accuracy, confusion, confusion_from_predictions, mean_rows, stability_experiment, universe_mismatch,
    write_mean_csv, write_stability_csv, Algorithm, StabilityInput,
};
use pari_core::format::sig12;
use pari_core::ingest::{
    make_shrink_series, make_shrink_series_to, parse_asn_file, parse_ground_truth, parse_paths_file, parse_tier1_file,
    write_ground_truth, write_paths, CollectorSet, GroundTruth,
};
use pari_core::model::{train, write_predictions_csv, FeatureSchema, TrainConfig};
use pari_core::paths::{default_assigned, preprocess, AsPath, Asn, PreprocessReport};
use pari_core::pipeline::{build_examples, evaluate_schemas, infer, predictions, InferOutput};
use pari_core::principle::PrincipleConfig;
use pari_core::synth::{generate_corpus, SynthConfig};
use pari_core::Error;

#[derive(Parser)]
#[command(name = "pari", version, about = "Infer AS business relationships from BGP paths")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sanitize paths: prepending, route servers, unassigned ASNs, loops, Tier-1 separation.
    Preprocess(Inputs),
    /// Principle labels, share vectors, model and predictions.
    Infer(InferArgs),
    /// Confusion matrix, accuracy and per-schema cross-entropy against ground truth.
    Evaluate(EvaluateArgs),
    /// Shrinking experiment over random collector removal series.
    Stability(StabilityArgs),
    /// Write a synthetic corpus with ground truth.
    GenSynthetic(SynthArgs),
}

#[derive(Args)]
struct Inputs {
    /// Paths file, `collector|asn asn ...` per line.
    #[arg(long)]
    paths: PathBuf,
    /// Tier-1 ASNs, one per line.
    #[arg(long)]
    tier1: PathBuf,
    /// IXP route-server ASNs, one per line.
    #[arg(long)]
    route_servers: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    Shares,
    Degrees,
    Hybrid,
}

impl From<SchemaArg> for FeatureSchema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Shares => FeatureSchema::Shares,
            SchemaArg::Degrees => FeatureSchema::Degrees,
            SchemaArg::Hybrid => FeatureSchema::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pari,
    PariStar,
    Ucla,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Pari => Algorithm::Pari,
            AlgorithmArg::PariStar => Algorithm::PariStar,
            AlgorithmArg::Ucla => Algorithm::Ucla,
        }
    }
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Validated relationships; enables the model stage.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "shares")]
    schema: SchemaArg,
    /// Components above this many links get uniform shares.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    /// Principle variant; pari-star skips phase II.
    #[arg(long, value_enum, default_value = "pari")]
    algorithm: AlgorithmArg,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    /// Predictions CSV from `infer`; adds its single-relationship confusion matrix.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value = "pari")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random removal series.
    #[arg(long, default_value_t = 20)]
    series: usize,
    /// Removal steps per series.
    #[arg(long, default_value_t = 5)]
    steps: usize,
    /// Collectors left after the last step.
    #[arg(long)]
    final_size: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "synthetic")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    collectors: usize,
    #[arg(long, default_value_t = 20)]
    tier2: usize,
    #[arg(long, default_value_t = 80)]
    tier3: usize,
    /// Share of paths given an uphill hop after going downhill.
    #[arg(long, default_value_t = 0.0)]
    valley_prob: f64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. } | Error::EmptyTier1 | Error::ShrinkSteps { .. }) => 2,
        _ => 1,
    }
}

/// Error chain joined with `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PARI_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Preprocess(a) => cmd_preprocess(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Stability(a) => cmd_stability(&a),
        Command::GenSynthetic(a) => cmd_gen_synthetic(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Loaded {
    collectors: CollectorSet,
    tier1: BTreeSet<Asn>,
    route_servers: BTreeSet<Asn>,
}

fn load(inputs: &Inputs) -> Result<Loaded> {
    let tier1 = parse_tier1_file(&inputs.tier1)?;
    let route_servers = match &inputs.route_servers {
        Some(p) => parse_asn_file(p)?,
        None => BTreeSet::new(),
    };
    let (collectors, stats) = parse_paths_file(&inputs.paths)?;
    if stats.lines_skipped > 0 {
        log::warn!("{} malformed path lines skipped", stats.lines_skipped);
    }
    if collectors.path_count() == 0 {
        log::warn!("no paths in {}", inputs.paths.display());
    }
    Ok(Loaded { collectors, tier1, route_servers })
}

fn clean(l: &Loaded) -> (Vec<AsPath>, PreprocessReport) {
    preprocess(&l.collectors.aggregate(), &l.tier1, &l.route_servers, &default_assigned)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    let path = dir.join(name);
    let f = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(dir, name)?;
    f(&mut w).with_context(|| format!("writing {name}"))?;
    w.flush()?;
    Ok(())
}

fn out_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("cannot create {}", p.display()))
}

fn cmd_preprocess(a: &Inputs) -> Result<()> {
    let loaded = load(a)?;
    out_dir(&a.out)?;
    let (paths, report) = clean(&loaded);
    write_file(&a.out, "clean_paths.txt", |w| write_paths(w, &paths))?;
    write_file(&a.out, "preprocess_report.txt", |w| write!(w, "{report}"))?;
    log::info!("{} of {} paths kept", report.kept_paths, report.input_paths);
    Ok(())
}

fn run_infer(loaded: &Loaded, algorithm: Algorithm, seed: u64, budget: usize) -> Result<InferOutput> {
    let (paths, _) = clean(loaded);
    let principle = match algorithm {
        Algorithm::PariStar => PrincipleConfig::pari_star(),
        Algorithm::Pari => PrincipleConfig::default(),
        Algorithm::Ucla => bail!("the ucla baseline has no share stage; use `stability --algorithm ucla`"),
    };
    Ok(infer(&paths, &loaded.tier1, &principle, &ShareConfig { budget, seed })?)
}

fn cmd_infer(a: &InferArgs) -> Result<()> {
    let loaded = load(&a.inputs)?;
    let truth = a.ground_truth.as_deref().map(parse_ground_truth).transpose()?;
    out_dir(&a.inputs.out)?;
    let out = run_infer(&loaded, a.algorithm.into(), a.seed, a.budget)?;
    let dir = &a.inputs.out;

    write_file(dir, "labels.csv", |w| out.principle.labeling.write_csv(w))?;
    write_file(dir, "shares.csv", |w| write_shares_csv(w, &out.shares.shares))?;
    write_file(dir, "relaxation_report.txt", |w| write!(w, "{}", out.shares.report))?;

    let schema: FeatureSchema = a.schema.into();
    let model = match &truth {
        Some(t) => {
            let data: Vec<_> = build_examples::<f64>(&out, Some(t), schema)?
                .into_iter()
                .filter_map(|e| e.label.map(|l| (e.features, l)))
                .collect();
            if data.is_empty() {
                log::warn!("no validated open links; model stage skipped");
                None
            } else {
                let m = train(&data, &TrainConfig { seed: a.seed, ..Default::default() })?;
                if m.degenerate {
                    log::warn!("training labels hold a single class");
                }
                write_file(dir, "model.json", |w| writeln!(w, "{}", m.to_json()))?;
                Some(m)
            }
        }
        None => {
            log::warn!("no ground truth supplied; model stage skipped");
            None
        }
    };
    let preds = predictions(&out, model.as_ref())?;
    let rows: Vec<_> = preds.into_iter().collect();
    write_file(dir, "predictions.csv", |w| write_predictions_csv(w, &rows))?;

    let lab = &out.principle.labeling;
    write_file(dir, "summary.txt", |w| {
        writeln!(w, "links: {}", lab.states.len())?;
        for label in ["p2p", "p2c", "conflict", "undecided"] {
            writeln!(w, "{label}: {}", lab.count(|s| s.label() == label))?;
        }
        writeln!(w, "phase2_iterations: {}", out.principle.phase2_iterations)?;
        writeln!(w, "components: {}", out.shares.components.len())?;
        writeln!(w, "over_budget_components: {}", out.shares.over_budget.len())?;
        match &model {
            Some(m) => writeln!(w, "model: {} lambda {}", m.schema, sig12(m.lambda)),
            None => writeln!(w, "model: skipped"),
        }
    })?;
    Ok(())
}

fn read_prediction_labels(
    path: &Path,
) -> Result<std::collections::BTreeMap<pari_core::paths::Link, pari_core::paths::Relationship>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut out = std::collections::BTreeMap::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            bail!("{}:{}: expected u,v,p_c2p,p_p2c,p_p2p,argmax", path.display(), n + 1);
        }
        let u: Asn = f[0].parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        let v: Asn = f[1].parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        let link = pari_core::paths::Link::new(u, v).context("self-link in predictions")?;
        let rel: pari_core::paths::Relationship = f[5].parse().map_err(|e| anyhow::anyhow!("{e}"))?;
        let rel = if u == link.u() { rel } else { rel.reverse() };
        out.insert(link, rel);
    }
    Ok(out)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let loaded = load(&a.inputs)?;
    let truth: GroundTruth = parse_ground_truth(&a.ground_truth)?;
    out_dir(&a.inputs.out)?;
    let dir = &a.inputs.out;
    let out = run_infer(&loaded, Algorithm::Pari, a.seed, a.budget)?;

    let labeled: BTreeSet<_> = out.principle.labeling.states.keys().copied().collect();
    let (only_labeled, only_truth) = universe_mismatch(&labeled, &truth);
    if only_truth > 0 {
        log::warn!("{only_truth} validated links are not in the topology; {only_labeled} links have no validation");
    }

    let matrix = confusion(&out.principle.labeling, &truth);
    write_file(dir, "confusion.csv", |w| matrix.write_csv(w))?;

    let rows =
        evaluate_schemas(&out, &truth, &FeatureSchema::ALL, &TrainConfig { seed: a.seed, ..Default::default() })?;
    write_file(dir, "evaluation.csv", |w| {
        writeln!(w, "name,train_size,test_size,cross_entropy,accuracy")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.name,
                r.train_size,
                r.test_size,
                sig12(r.cross_entropy),
                sig12(r.accuracy)
            )?;
        }
        Ok(())
    })?;

    let pred_matrix = match &a.predictions {
        Some(p) => {
            let m = confusion_from_predictions(&read_prediction_labels(p)?, &truth);
            write_file(dir, "prediction_confusion.csv", |w| m.write_csv(w))?;
            Some(m)
        }
        None => None,
    };

    write_file(dir, "evaluation_report.txt", |w| {
        writeln!(w, "validated_links: {}", truth.len())?;
        writeln!(w, "links_without_validation: {only_labeled}")?;
        writeln!(w, "validated_links_not_observed: {only_truth}")?;
        writeln!(w, "principle_confusion:")?;
        write!(w, "{matrix}")?;
        match accuracy(&matrix) {
            Ok(acc) => writeln!(w, "principle_accuracy: {}", sig12(acc))?,
            Err(e) => writeln!(w, "principle_accuracy: n/a ({e})")?,
        }
        if let Some(m) = &pred_matrix {
            writeln!(w, "prediction_confusion:")?;
            write!(w, "{m}")?;
            match accuracy(m) {
                Ok(acc) => writeln!(w, "prediction_accuracy: {}", sig12(acc))?,
                Err(e) => writeln!(w, "prediction_accuracy: n/a ({e})")?,
            }
        }
        for r in &rows {
            writeln!(w, "cross_entropy_{}: {}", r.name, sig12(r.cross_entropy))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn cmd_stability(a: &StabilityArgs) -> Result<()> {
    let loaded = load(&a.inputs)?;
    out_dir(&a.inputs.out)?;
    let ids = loaded.collectors.ids();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let seeds: Vec<u64> = (0..a.series).map(|_| rng.gen()).collect();
    let series = seeds
        .iter()
        .map(|&s| match a.final_size {
            Some(f) => make_shrink_series_to(&ids, a.steps, f, s),
            None => make_shrink_series(&ids, a.steps, s),
        })
        .collect::<pari_core::Result<Vec<_>>>()?;

    let input = StabilityInput {
        collectors: &loaded.collectors,
        tier1: &loaded.tier1,
        route_servers: &loaded.route_servers,
        assigned: &default_assigned,
    };
    let algorithm: Algorithm = a.algorithm.into();
    let results =
        series.par_iter().map(|s| stability_experiment(&input, s, algorithm)).collect::<pari_core::Result<Vec<_>>>()?;

    for (i, rows) in results.iter().enumerate() {
        write_file(&a.inputs.out, &format!("series_{i:02}.csv"), |w| write_stability_csv(w, rows))?;
    }
    let mean = mean_rows(&results)?;
    write_file(&a.inputs.out, "mean.csv", |w| write_mean_csv(w, &mean))?;
    Ok(())
}

fn cmd_gen_synthetic(a: &SynthArgs) -> Result<()> {
    let config = SynthConfig {
        collectors: a.collectors,
        tier2: a.tier2,
        tier3: a.tier3,
        valley_prob: a.valley_prob,
        seed: a.seed,
        ..Default::default()
    };
    let corpus = generate_corpus(&config);
    out_dir(&a.out)?;
    write_file(&a.out, "paths.txt", |w| write_paths(w, &corpus.collectors.aggregate()))?;
    let asn_list = |w: &mut BufWriter<fs::File>, set: &BTreeSet<Asn>| -> std::io::Result<()> {
        for x in set {
            writeln!(w, "{x}")?;
        }
        Ok(())
    };
    write_file(&a.out, "tier1.txt", |w| asn_list(w, &corpus.tier1))?;
    write_file(&a.out, "route_servers.txt", |w| asn_list(w, &corpus.route_servers))?;
    write_file(&a.out, "ground_truth.txt", |w| write_ground_truth(w, &corpus.truth))?;
    Ok(())
}
