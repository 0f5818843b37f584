//! End-to-end stages over already sanitized paths.

use std::collections::{BTreeMap, BTreeSet};

use crate::counting::{compute_all_shares, ShareConfig, SharesOutput};
use crate::error::{Error, Result};
use crate::ingest::GroundTruth;
use crate::interdep::{build_graph, InterdepGraph};
use crate::model::{
    argmax_label, build_features, mean_cross_entropy, naive_baseline, one_hot, predict, train, train_test_split,
    FeatureSchema, FeatureVector, ProbabilityEstimate, TrainConfig, TrainedModel,
};
use crate::paths::{build_topology, AsPath, Asn, Link, Relationship, Topology};
use crate::principle::{run_principle, LinkState, PrincipleConfig, PrincipleOutput};
use crate::scalar::Scalar;

pub struct InferOutput {
    pub topology: Topology,
    pub principle: PrincipleOutput,
    pub graph: InterdepGraph,
    pub shares: SharesOutput,
}

/// Principle step followed by share computation for the open links.
pub fn infer(
    paths: &[AsPath],
    tier1: &BTreeSet<Asn>,
    principle: &PrincipleConfig,
    shares: &ShareConfig,
) -> Result<InferOutput> {
    let topology = build_topology(paths);
    let principle = run_principle(paths, tier1, principle)?;
    let graph = build_graph(paths, &principle.labeling);
    let shares = compute_all_shares(&graph, paths, &principle.labeling, shares)?;
    Ok(InferOutput { topology, principle, graph, shares })
}

/// One open link with its features and, if validated, its label, both in
/// the link's canonical orientation.
#[derive(Debug, Clone)]
pub struct Example<T> {
    pub link: Link,
    pub features: FeatureVector<T>,
    pub label: Option<Relationship>,
}

/// Examples for every link that has a share vector.
pub fn build_examples<T: Scalar>(
    out: &InferOutput,
    truth: Option<&GroundTruth>,
    schema: FeatureSchema,
) -> Result<Vec<Example<T>>> {
    out.shares
        .shares
        .iter()
        .map(|(link, s)| {
            Ok(Example {
                link: *link,
                features: build_features(link.u(), link.v(), Some(&s.shares), &out.topology, schema)?,
                label: truth.and_then(|t| t.canonical(link)),
            })
        })
        .collect()
}

/// Model estimate for open links, one-hot principle label for decided ones,
/// share vector for open links when there is no model.
pub fn predictions<T: Scalar>(
    out: &InferOutput,
    model: Option<&TrainedModel<T>>,
) -> Result<BTreeMap<Link, ProbabilityEstimate<T>>> {
    let mut preds = BTreeMap::new();
    for (link, state) in &out.principle.labeling.states {
        let est = match state {
            LinkState::P2P => one_hot(Relationship::P2P),
            LinkState::P2C { provider } if *provider == link.u() => one_hot(Relationship::P2C),
            LinkState::P2C { .. } => one_hot(Relationship::C2P),
            LinkState::Undecided | LinkState::Conflict => {
                let Some(s) = out.shares.shares.get(link) else { continue };
                match model {
                    Some(m) => {
                        predict(m, &build_features(link.u(), link.v(), Some(&s.shares), &out.topology, m.schema)?)?
                    }
                    None => {
                        let [c2p, p2p, p2c] = s.shares.to_f64();
                        ProbabilityEstimate::from_array([T::lit(c2p), T::lit(p2c), T::lit(p2p)])
                    }
                }
            }
        };
        preds.insert(*link, est);
    }
    Ok(preds)
}

/// Test-set metrics of one predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    pub train_size: usize,
    pub test_size: usize,
    pub cross_entropy: f64,
    pub accuracy: f64,
}

/// Labeled examples split 70/30 with one shared split; Naive plus one model
/// per schema, trained on the training part and scored on the test part.
pub fn evaluate_schemas(
    out: &InferOutput,
    truth: &GroundTruth,
    schemas: &[FeatureSchema],
    config: &TrainConfig,
) -> Result<Vec<EvalRow>> {
    let base: Vec<Example<f64>> =
        build_examples(out, Some(truth), FeatureSchema::Shares)?.into_iter().filter(|e| e.label.is_some()).collect();
    evaluate_examples(out, &base.iter().map(|e| (e.link, e.label.unwrap())).collect::<Vec<_>>(), schemas, config)
}

/// Same as [`evaluate_schemas`] for an explicit labeled link list.
pub fn evaluate_examples(
    out: &InferOutput,
    labeled: &[(Link, Relationship)],
    schemas: &[FeatureSchema],
    config: &TrainConfig,
) -> Result<Vec<EvalRow>> {
    if labeled.len() < 2 {
        return Err(Error::EmptyDataset);
    }
    let (train_idx, test_idx) = train_test_split(labeled.len(), 0.7, config.seed);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let train_labels: Vec<Relationship> = train_idx.iter().map(|&i| labeled[i].1).collect();
    let test_labels: Vec<Relationship> = test_idx.iter().map(|&i| labeled[i].1).collect();

    let naive: ProbabilityEstimate<f64> = naive_baseline(&train_labels)?;
    let naive_preds = vec![naive; test_labels.len()];
    let mut rows = vec![score("naive", train_idx.len(), &test_labels, &naive_preds)?];

    for &schema in schemas {
        let feats: Vec<FeatureVector<f64>> = labeled
            .iter()
            .map(|(link, _)| {
                let s = out.shares.shares.get(link).map(|s| &s.shares);
                build_features(link.u(), link.v(), s, &out.topology, schema)
            })
            .collect::<Result<_>>()?;
        let data: Vec<(FeatureVector<f64>, Relationship)> =
            train_idx.iter().map(|&i| (feats[i].clone(), labeled[i].1)).collect();
        let model = train(&data, config)?;
        let preds: Vec<ProbabilityEstimate<f64>> =
            test_idx.iter().map(|&i| predict(&model, &feats[i])).collect::<Result<_>>()?;
        rows.push(score(schema.as_str(), train_idx.len(), &test_labels, &preds)?);
    }
    Ok(rows)
}

fn score(
    name: &str,
    train_size: usize,
    labels: &[Relationship],
    preds: &[ProbabilityEstimate<f64>],
) -> Result<EvalRow> {
    let correct = labels.iter().zip(preds).filter(|(l, p)| argmax_label(p) == **l).count();
    Ok(EvalRow {
        name: name.to_string(),
        train_size,
        test_size: labels.len(),
        cross_entropy: mean_cross_entropy(labels, preds)?,
        accuracy: correct as f64 / labels.len() as f64,
    })
}
