//! Plain-text input formats and collector bookkeeping.
//!
//! * paths file: `<collector-id>|<space separated ASNs>` per line
//! * ASN list (tier-1, IXP route servers): one ASN per line
//! * ground truth: `A|B|-1` (A provides transit to B) or `A|B|0` (peering)
//!
//! `#` starts a comment line; CR before LF is tolerated.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::paths::{AsPath, Asn, Link, Relationship};

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = io::Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(l) => {
            let t = l.trim_end_matches('\r').trim();
            if t.is_empty() || t.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, t.to_string())))
            }
        }
    })
}

/// Paths grouped by the collector that received them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CollectorSet {
    pub collectors: BTreeMap<String, Vec<AsPath>>,
}

impl CollectorSet {
    pub fn from_paths(paths: impl IntoIterator<Item = AsPath>) -> CollectorSet {
        let mut set = CollectorSet::default();
        for p in paths {
            set.collectors.entry(p.collector.clone()).or_default().push(p);
        }
        set
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.collectors.keys().cloned().collect()
    }

    /// The aggregate path set over all collectors.
    pub fn aggregate(&self) -> Vec<AsPath> {
        self.collectors.values().flatten().cloned().collect()
    }

    /// Paths received by the given collectors only.
    pub fn restricted_to(&self, ids: &BTreeSet<String>) -> Vec<AsPath> {
        self.collectors
            .iter()
            .filter(|(id, _)| ids.contains(*id))
            .flat_map(|(_, paths)| paths.iter().cloned())
            .collect()
    }

    pub fn path_count(&self) -> usize {
        self.collectors.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub lines_ok: usize,
    pub lines_skipped: usize,
}

fn parse_path_line(line: &str) -> std::result::Result<AsPath, String> {
    let (collector, asns) = line.split_once('|').ok_or("missing '|' separator")?;
    let collector = collector.trim();
    if collector.is_empty() {
        return Err("empty collector id".into());
    }
    let asns = asns.split_whitespace().map(str::parse::<Asn>).collect::<std::result::Result<Vec<_>, _>>()?;
    if asns.is_empty() {
        return Err("empty path".into());
    }
    Ok(AsPath::new(collector, asns))
}

pub fn read_paths<R: BufRead>(reader: R) -> io::Result<(CollectorSet, ParseStats)> {
    let mut stats = ParseStats::default();
    let mut paths = Vec::new();
    for item in content_lines(reader) {
        let (lineno, line) = item?;
        match parse_path_line(&line) {
            Ok(p) => {
                stats.lines_ok += 1;
                paths.push(p);
            }
            Err(msg) => {
                log::debug!("paths line {lineno} skipped: {msg}");
                stats.lines_skipped += 1;
            }
        }
    }
    Ok((CollectorSet::from_paths(paths), stats))
}

pub fn parse_paths_file(path: &Path) -> Result<(CollectorSet, ParseStats)> {
    read_paths(open(path)?).map_err(io_err(path))
}

pub fn write_paths<W: Write>(mut out: W, paths: &[AsPath]) -> io::Result<()> {
    for p in paths {
        let asns: Vec<String> = p.asns.iter().map(Asn::to_string).collect();
        writeln!(out, "{}|{}", p.collector, asns.join(" "))?;
    }
    Ok(())
}

pub fn read_asn_list<R: BufRead>(reader: R) -> Result<BTreeSet<Asn>> {
    let mut set = BTreeSet::new();
    for item in content_lines(reader) {
        let (line, text) = item.map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let asn = text.parse::<Asn>().map_err(|msg| Error::Parse { line, msg })?;
        set.insert(asn);
    }
    Ok(set)
}

/// One ASN per line; may be empty (used for IXP route servers).
pub fn parse_asn_file(path: &Path) -> Result<BTreeSet<Asn>> {
    read_asn_list(open(path)?)
}

pub fn parse_tier1_file(path: &Path) -> Result<BTreeSet<Asn>> {
    let set = parse_asn_file(path)?;
    if set.is_empty() {
        return Err(Error::EmptyTier1);
    }
    Ok(set)
}

/// Validated relationship of one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TruthLabel {
    P2P,
    P2C { provider: Asn },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: BTreeMap<Link, TruthLabel>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, link: &Link) -> Option<TruthLabel> {
        self.labels.get(link).copied()
    }

    /// Relationship of the ordered pair `(a, b)`.
    pub fn lookup(&self, a: Asn, b: Asn) -> Option<Relationship> {
        let link = Link::new(a, b)?;
        Some(match self.labels.get(&link)? {
            TruthLabel::P2P => Relationship::P2P,
            TruthLabel::P2C { provider } if *provider == a => Relationship::P2C,
            TruthLabel::P2C { .. } => Relationship::C2P,
        })
    }

    /// Relationship in the link's canonical `(u, v)` orientation.
    pub fn canonical(&self, link: &Link) -> Option<Relationship> {
        self.lookup(link.u(), link.v())
    }

    /// Insert, rejecting a label that contradicts an existing one.
    pub fn insert(&mut self, link: Link, label: TruthLabel) -> std::result::Result<(), TruthLabel> {
        match self.labels.get(&link) {
            Some(existing) if *existing != label => Err(*existing),
            _ => {
                self.labels.insert(link, label);
                Ok(())
            }
        }
    }
}

pub fn read_ground_truth<R: BufRead>(reader: R) -> Result<GroundTruth> {
    let mut gt = GroundTruth::default();
    for item in content_lines(reader) {
        let (line, text) = item.map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let bad = |msg: &str| Error::Parse { line, msg: format!("{msg}: {text:?}") };
        let fields: Vec<&str> = text.split('|').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(bad("expected A|B|rel"));
        }
        let a: Asn = fields[0].parse().map_err(|_| bad("invalid ASN"))?;
        let b: Asn = fields[1].parse().map_err(|_| bad("invalid ASN"))?;
        let link = Link::new(a, b).ok_or_else(|| bad("self-link"))?;
        let label = match fields[2] {
            "-1" => TruthLabel::P2C { provider: a },
            "0" => TruthLabel::P2P,
            _ => return Err(bad("relationship must be -1 or 0")),
        };
        gt.insert(link, label).map_err(|_| Error::ConflictingGroundTruth { line, text: text.clone() })?;
    }
    Ok(gt)
}

pub fn parse_ground_truth(path: &Path) -> Result<GroundTruth> {
    read_ground_truth(open(path)?)
}

pub fn write_ground_truth<W: Write>(mut out: W, gt: &GroundTruth) -> io::Result<()> {
    for (link, label) in &gt.labels {
        match label {
            TruthLabel::P2P => writeln!(out, "{}|{}|0", link.u(), link.v())?,
            TruthLabel::P2C { provider } => {
                let customer = link.other(*provider).expect("provider is an endpoint");
                writeln!(out, "{provider}|{customer}|-1")?
            }
        }
    }
    Ok(())
}

/// Nested collector sets produced by progressively excluding collectors.
/// `steps[0]` is the full set; every later step is a strict subset of the
/// one before it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShrinkSeries {
    pub seed: u64,
    pub steps: Vec<BTreeSet<String>>,
}

impl ShrinkSeries {
    pub fn sizes(&self) -> Vec<usize> {
        self.steps.iter().map(BTreeSet::len).collect()
    }
}

fn apply_batches(ids: &BTreeSet<String>, batches: &[usize], rng: &mut ChaCha8Rng, seed: u64) -> ShrinkSeries {
    let mut remaining: Vec<String> = ids.iter().cloned().collect();
    let mut steps = vec![ids.clone()];
    for &batch in batches {
        remaining.shuffle(rng);
        remaining.truncate(remaining.len() - batch);
        remaining.sort();
        steps.push(remaining.iter().cloned().collect());
    }
    ShrinkSeries { seed, steps }
}

/// Random shrinking series with `num_steps` removal batches. Each batch size
/// is uniform in `[1, ceil(remaining / 4)]`, clamped so every later step can
/// still remove at least one collector and one collector survives.
pub fn make_shrink_series(ids: &BTreeSet<String>, num_steps: usize, seed: u64) -> Result<ShrinkSeries> {
    if num_steps == 0 || ids.len() <= num_steps {
        return Err(Error::ShrinkSteps { collectors: ids.len(), steps: num_steps });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = ids.len();
    let mut batches = Vec::with_capacity(num_steps);
    for step in 0..num_steps {
        let later = num_steps - step - 1;
        let cap = remaining.div_ceil(4).min(remaining - later - 1).max(1);
        let batch = rng.gen_range(1..=cap);
        batches.push(batch);
        remaining -= batch;
    }
    Ok(apply_batches(ids, &batches, &mut rng, seed))
}

/// Like [`make_shrink_series`] but the last step leaves exactly
/// `final_size` collectors; batch sizes are a uniformly random composition of
/// the total removal count.
pub fn make_shrink_series_to(
    ids: &BTreeSet<String>,
    num_steps: usize,
    final_size: usize,
    seed: u64,
) -> Result<ShrinkSeries> {
    let total = ids.len().saturating_sub(final_size);
    if num_steps == 0 || final_size == 0 || total < num_steps {
        return Err(Error::ShrinkSteps { collectors: ids.len(), steps: num_steps });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts: Vec<usize> =
        rand::seq::index::sample(&mut rng, total - 1, num_steps - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    let batches: Vec<usize> = cuts
        .into_iter()
        .map(|c| {
            let b = c - prev;
            prev = c;
            b
        })
        .collect();
    Ok(apply_batches(ids, &batches, &mut rng, seed))
}
