//! Multinomial logistic regression over link features.
//!
//! Weights form a `3 x (d + 1)` matrix, one row per class in
//! [`CLASS_ORDER`], bias in the last column. Training minimises mean
//! cross-entropy plus `lambda / 2 * ||W||^2` (bias excluded) by full-batch
//! gradient descent with Armijo backtracking; `lambda` is chosen by k-fold
//! cross-validation loss.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSchema, FeatureVector};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::paths::{Link, Relationship};
use crate::scalar::Scalar;

/// Class order of weight rows and probability vectors.
pub const CLASS_ORDER: [Relationship; 3] = [Relationship::C2P, Relationship::P2C, Relationship::P2P];

/// Tie-break order for [`argmax_label`].
const TIE_ORDER: [Relationship; 3] = [Relationship::C2P, Relationship::P2P, Relationship::P2C];

const ARMIJO: f64 = 1e-4;
const CLAMP: f64 = 1e-12;

pub fn class_index(rel: Relationship) -> Option<usize> {
    CLASS_ORDER.iter().position(|&r| r == rel)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate<T> {
    pub p_c2p: T,
    pub p_p2c: T,
    pub p_p2p: T,
}

impl<T: Scalar> ProbabilityEstimate<T> {
    /// From a vector in [`CLASS_ORDER`].
    pub fn from_array(p: [T; 3]) -> Self {
        ProbabilityEstimate { p_c2p: p[0], p_p2c: p[1], p_p2p: p[2] }
    }

    /// Probabilities in [`CLASS_ORDER`].
    pub fn to_array(&self) -> [T; 3] {
        [self.p_c2p, self.p_p2c, self.p_p2p]
    }

    pub fn get(&self, rel: Relationship) -> T {
        match rel {
            Relationship::C2P => self.p_c2p,
            Relationship::P2C => self.p_p2c,
            Relationship::P2P => self.p_p2p,
            Relationship::S2S => T::zero(),
        }
    }

    pub fn uniform() -> Self {
        let third = T::one() / T::lit(3.0);
        Self::from_array([third; 3])
    }

    pub fn sum(&self) -> T {
        self.p_c2p + self.p_p2c + self.p_p2p
    }

    /// Same estimate for the reversed link orientation.
    pub fn reverse(&self) -> Self {
        ProbabilityEstimate { p_c2p: self.p_p2c, p_p2c: self.p_c2p, p_p2p: self.p_p2p }
    }
}

pub fn softmax<T: Scalar>(scores: [T; 3]) -> [T; 3] {
    let m = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let e = scores.map(|s| (s - m).exp());
    let z = e[0] + e[1] + e[2];
    e.map(|x| x / z)
}

pub fn argmax_label<T: Scalar>(estimate: &ProbabilityEstimate<T>) -> Relationship {
    let mut best = TIE_ORDER[0];
    for &r in &TIE_ORDER[1..] {
        if estimate.get(r) > estimate.get(best) {
            best = r;
        }
    }
    best
}

/// Degenerate distribution on `rel`.
pub fn one_hot<T: Scalar>(rel: Relationship) -> ProbabilityEstimate<T> {
    let mut p = [T::zero(); 3];
    if let Some(i) = class_index(rel) {
        p[i] = T::one();
    }
    ProbabilityEstimate::from_array(p)
}

/// `-sum true * ln(predicted)`, predictions clamped below at 1e-12.
pub fn cross_entropy<T: Scalar>(truth: &ProbabilityEstimate<T>, predicted: &ProbabilityEstimate<T>) -> T {
    let eps = T::lit(CLAMP);
    truth
        .to_array()
        .iter()
        .zip(predicted.to_array())
        .filter(|(t, _)| **t > T::zero())
        .fold(T::zero(), |acc, (&t, p)| acc - t * p.max(eps).ln())
}

/// Mean cross-entropy of predictions against single labels.
pub fn mean_cross_entropy<T: Scalar>(labels: &[Relationship], predicted: &[ProbabilityEstimate<T>]) -> Result<T> {
    if labels.is_empty() || labels.len() != predicted.len() {
        return Err(Error::EmptyDataset);
    }
    let total = labels.iter().zip(predicted).fold(T::zero(), |acc, (&l, p)| acc + cross_entropy(&one_hot(l), p));
    Ok(total / T::lit(labels.len() as f64))
}

/// Relative frequencies of the training labels.
pub fn naive_baseline<T: Scalar>(train_labels: &[Relationship]) -> Result<ProbabilityEstimate<T>> {
    if train_labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = [0usize; 3];
    for &l in train_labels {
        let i = class_index(l).ok_or_else(|| Error::Invalid(format!("label {l} is not inferable")))?;
        counts[i] += 1;
    }
    let n = T::lit(train_labels.len() as f64);
    Ok(ProbabilityEstimate::from_array(counts.map(|c| T::lit(c as f64) / n)))
}

fn scores<T: Scalar>(w: &[Vec<T>], x: &[T]) -> [T; 3] {
    let mut s = [T::zero(); 3];
    for (k, row) in w.iter().enumerate() {
        let d = x.len();
        s[k] = x.iter().zip(&row[..d]).fold(row[d], |acc, (&xi, &wi)| acc + xi * wi);
    }
    s
}

/// Mean cross-entropy plus `lambda / 2 * ||W||^2`, bias excluded.
pub fn loss<T: Scalar>(w: &[Vec<T>], x: &[Vec<T>], y: &[usize], lambda: T) -> T {
    let n = T::lit(x.len() as f64);
    let eps = T::lit(CLAMP);
    let ce = x.iter().zip(y).fold(T::zero(), |acc, (xi, &yi)| acc - softmax(scores(w, xi))[yi].max(eps).ln()) / n;
    let d = x.first().map_or(0, Vec::len);
    let penalty = w.iter().flat_map(|row| &row[..d]).fold(T::zero(), |acc, &v| acc + v * v);
    ce + lambda * penalty / T::lit(2.0)
}

/// Gradient of [`loss`] with respect to every weight.
pub fn gradient<T: Scalar>(w: &[Vec<T>], x: &[Vec<T>], y: &[usize], lambda: T) -> Vec<Vec<T>> {
    let d = x.first().map_or(0, Vec::len);
    let n = T::lit(x.len() as f64);
    let mut g = vec![vec![T::zero(); d + 1]; 3];
    for (xi, &yi) in x.iter().zip(y) {
        let p = softmax(scores(w, xi));
        for k in 0..3 {
            let r = p[k] - if k == yi { T::one() } else { T::zero() };
            for j in 0..d {
                g[k][j] = g[k][j] + r * xi[j];
            }
            g[k][d] = g[k][d] + r;
        }
    }
    for k in 0..3 {
        for j in 0..=d {
            g[k][j] = g[k][j] / n;
            if j < d {
                g[k][j] = g[k][j] + lambda * w[k][j];
            }
        }
    }
    g
}

/// Gradient descent with Armijo backtracking. Returns the weights and the
/// loss after every accepted step (first entry: the starting loss).
pub fn fit<T: Scalar>(x: &[Vec<T>], y: &[usize], lambda: T, max_iter: usize) -> (Vec<Vec<T>>, Vec<T>) {
    let d = x.first().map_or(0, Vec::len);
    let mut w = vec![vec![T::zero(); d + 1]; 3];
    let mut f = loss(&w, x, y, lambda);
    let mut trace = vec![f];
    let tol = T::epsilon().sqrt();
    let c = T::lit(ARMIJO);
    let mut t = T::one();
    for _ in 0..max_iter {
        let g = gradient(&w, x, y, lambda);
        let gn2 = g.iter().flatten().fold(T::zero(), |acc, &v| acc + v * v);
        if gn2.sqrt() < tol {
            break;
        }
        t = (t * T::lit(2.0)).min(T::lit(1e3));
        let accepted = loop {
            let cand: Vec<Vec<T>> =
                w.iter().zip(&g).map(|(wr, gr)| wr.iter().zip(gr).map(|(&a, &b)| a - t * b).collect()).collect();
            let fc = loss(&cand, x, y, lambda);
            if fc <= f - c * t * gn2 {
                break Some((cand, fc));
            }
            t = t / T::lit(2.0);
            if t < T::lit(1e-20) {
                break None;
            }
        };
        let Some((cand, fc)) = accepted else { break };
        let improvement = f - fc;
        w = cand;
        f = fc;
        trace.push(f);
        if improvement <= T::epsilon() * f.abs().max(T::one()) {
            break;
        }
    }
    (w, trace)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub folds: usize,
    pub reg_grid: Vec<f64>,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { folds: 5, reg_grid: vec![0.01, 0.1, 1.0, 10.0], seed: 0, max_iter: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<T> {
    pub schema: FeatureSchema,
    pub class_order: Vec<String>,
    /// One row per class, bias last.
    pub weights: Vec<Vec<T>>,
    pub lambda: T,
    pub seed: u64,
    pub folds: usize,
    /// `(lambda, mean validation cross-entropy)` per grid point.
    pub cv_loss: Vec<(T, T)>,
    pub loss_trace: Vec<T>,
    /// Training labels held a single class.
    pub degenerate: bool,
}

impl<T: Scalar> TrainedModel<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("model file: {e}")))
    }
}

fn check_dataset<T: Scalar>(
    data: &[(FeatureVector<T>, Relationship)],
) -> Result<(FeatureSchema, Vec<Vec<T>>, Vec<usize>)> {
    let first = data.first().ok_or(Error::EmptyDataset)?;
    let schema = first.0.schema;
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for (f, l) in data {
        if f.schema != schema || f.values.len() != schema.len() {
            return Err(Error::SchemaMismatch { expected: schema.to_string(), got: f.schema.to_string() });
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        y.push(class_index(*l).ok_or_else(|| Error::Invalid(format!("label {l} is not inferable")))?);
        x.push(f.values.clone());
    }
    Ok((schema, x, y))
}

fn mean_ce<T: Scalar>(w: &[Vec<T>], x: &[Vec<T>], y: &[usize]) -> T {
    loss(w, x, y, T::zero())
}

pub fn train<T: Scalar>(data: &[(FeatureVector<T>, Relationship)], config: &TrainConfig) -> Result<TrainedModel<T>> {
    let (schema, x, y) = check_dataset(data)?;
    if config.reg_grid.is_empty() {
        return Err(Error::Invalid("empty regularisation grid".into()));
    }
    let degenerate = y.iter().all(|&c| c == y[0]);
    let n = x.len();
    let folds = config.folds.min(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let fold_of: Vec<usize> = {
        let mut f = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            f[i] = if folds > 0 { pos % folds } else { 0 };
        }
        f
    };

    let cv_loss: Vec<(T, T)> = if folds >= 2 {
        let jobs: Vec<(usize, usize)> =
            (0..config.reg_grid.len()).flat_map(|g| (0..folds).map(move |k| (g, k))).collect();
        let losses: Vec<T> = jobs
            .par_iter()
            .map(|&(g, k)| {
                let pick = |held: bool| -> (Vec<Vec<T>>, Vec<usize>) {
                    (0..n).filter(|&i| (fold_of[i] == k) == held).map(|i| (x[i].clone(), y[i])).unzip()
                };
                let (tx, ty) = pick(false);
                let (vx, vy) = pick(true);
                let (w, _) = fit(&tx, &ty, T::lit(config.reg_grid[g]), config.max_iter);
                mean_ce(&w, &vx, &vy)
            })
            .collect();
        config
            .reg_grid
            .iter()
            .enumerate()
            .map(|(g, &lam)| {
                let s = losses[g * folds..(g + 1) * folds].iter().fold(T::zero(), |a, &b| a + b);
                (T::lit(lam), s / T::lit(folds as f64))
            })
            .collect()
    } else {
        Vec::new()
    };

    let lambda = cv_loss
        .iter()
        .fold(None, |best: Option<(T, T)>, &(lam, l)| match best {
            Some((_, bl)) if bl <= l => best,
            _ => Some((lam, l)),
        })
        .map_or(T::lit(config.reg_grid[0]), |(lam, _)| lam);

    let (weights, loss_trace) = fit(&x, &y, lambda, config.max_iter);
    if weights.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(TrainedModel {
        schema,
        class_order: CLASS_ORDER.iter().map(|r| r.as_str().to_string()).collect(),
        weights,
        lambda,
        seed: config.seed,
        folds,
        cv_loss,
        loss_trace,
        degenerate,
    })
}

pub fn predict<T: Scalar>(model: &TrainedModel<T>, features: &FeatureVector<T>) -> Result<ProbabilityEstimate<T>> {
    if features.schema != model.schema || features.values.len() + 1 != model.weights[0].len() {
        return Err(Error::SchemaMismatch { expected: model.schema.to_string(), got: features.schema.to_string() });
    }
    Ok(ProbabilityEstimate::from_array(softmax(scores(&model.weights, &features.values))))
}

/// Seeded shuffle of `0..n` split into training and test index sets.
pub fn train_test_split(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((n as f64) * train_fraction).round() as usize;
    let test = idx.split_off(cut.min(n));
    let (mut train, mut test) = (idx, test);
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// `u,v,p_c2p,p_p2c,p_p2p,argmax`.
pub fn write_predictions_csv<W: Write, T: Scalar>(
    mut out: W,
    rows: &[(Link, ProbabilityEstimate<T>)],
) -> io::Result<()> {
    writeln!(out, "u,v,p_c2p,p_p2c,p_p2p,argmax")?;
    for (link, p) in rows {
        let f = |x: T| sig12(x.to_f64().unwrap_or(f64::NAN));
        writeln!(out, "{},{},{},{},{},{}", link.u(), link.v(), f(p.p_c2p), f(p.p_p2c), f(p.p_p2p), argmax_label(p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use Relationship::*;

    fn dataset(n: usize, seed: u64) -> Vec<(FeatureVector<f64>, Relationship)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = CLASS_ORDER[i % 3];
                let mut v = [0.0; 3];
                v[class_index(label).unwrap()] = 1.0;
                let v = v.map(|x: f64| x + rng.gen_range(-0.05..0.05));
                (FeatureVector::new(FeatureSchema::Shares, v.to_vec()).unwrap(), label)
            })
            .collect()
    }

    #[test]
    fn softmax_of_zeros_and_shift() {
        let p = softmax([0.0f64; 3]);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        let a = softmax([0.3f64, -1.2, 2.0]);
        let b = softmax([100.3f64, 98.8, 102.0]);
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
        let big = softmax([1000.0f64, 0.0, -1000.0]);
        assert!((big.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_and_ties() {
        // class order (c2p, p2c, p2p) = (0.06, 0.04, 0.9)
        assert_eq!(argmax_label(&ProbabilityEstimate::from_array([0.06, 0.04, 0.9])), P2P);
        assert_eq!(argmax_label(&ProbabilityEstimate::<f64>::uniform()), C2P);
        assert_eq!(argmax_label(&ProbabilityEstimate::from_array([0.0, 1.0, 0.0])), P2C);
        assert_eq!(argmax_label(&ProbabilityEstimate::from_array([0.0, 0.5, 0.5])), P2P);
    }

    #[test]
    fn one_hot_order() {
        assert_eq!(one_hot::<f64>(P2P).to_array(), [0.0, 0.0, 1.0]);
        assert_eq!(one_hot::<f64>(C2P).to_array(), [1.0, 0.0, 0.0]);
        assert_eq!(one_hot::<f64>(P2C).to_array(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn cross_entropy_values() {
        let h = one_hot::<f64>(P2P);
        assert_eq!(cross_entropy(&h, &h), 0.0);
        assert!((cross_entropy(&h, &ProbabilityEstimate::uniform()) - 3f64.ln()).abs() < 1e-12);
        let zero = ProbabilityEstimate::from_array([1.0, 0.0, 0.0]);
        assert!((cross_entropy(&h, &zero) - (-(1e-12f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn naive_frequencies() {
        let mut labels = vec![P2P; 92];
        labels.extend(vec![P2C; 8]);
        let p: ProbabilityEstimate<f64> = naive_baseline(&labels).unwrap();
        assert!((p.p_p2p - 0.92).abs() < 1e-15);
        let u: ProbabilityEstimate<f64> = naive_baseline(&[C2P, P2C, P2P]).unwrap();
        assert!((u.p_c2p - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(naive_baseline::<f64>(&[P2C]).unwrap(), one_hot(P2C));
        assert!(naive_baseline::<f64>(&[]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = dataset(30, 1);
        let (_, x, y) = check_dataset(&data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let g = gradient(&w, &x, &y, 0.3);
        let h = 1e-5;
        for k in 0..3 {
            for j in 0..4 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[k][j] += h;
                wm[k][j] -= h;
                let fd = (loss(&wp, &x, &y, 0.3) - loss(&wm, &x, &y, 0.3)) / (2.0 * h);
                let rel = (fd - g[k][j]).abs() / fd.abs().max(g[k][j].abs()).max(1e-8);
                assert!(rel <= 1e-4, "k={k} j={j} fd={fd} g={}", g[k][j]);
            }
        }
    }

    #[test]
    fn separable_training() {
        let data = dataset(150, 2);
        // the default grid's smallest penalty caps prototype confidence near 0.93
        let config = TrainConfig { seed: 4, reg_grid: vec![1e-4, 1e-3, 0.01], ..Default::default() };
        let model = train(&data, &config).unwrap();
        assert!(!model.degenerate);
        assert!(model.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        let correct = data.iter().filter(|(f, l)| argmax_label(&predict(&model, f).unwrap()) == *l).count();
        assert_eq!(correct, data.len());
        let proto = FeatureVector::new(FeatureSchema::Shares, vec![0.0, 1.0, 0.0]).unwrap();
        assert!(predict(&model, &proto).unwrap().p_p2c >= 0.99);
        assert_eq!(model.cv_loss.len(), 3);
    }

    #[test]
    fn single_class_is_flagged() {
        let data: Vec<_> = dataset(30, 3).into_iter().map(|(f, _)| (f, P2P)).collect();
        let model = train(&data, &TrainConfig::default()).unwrap();
        assert!(model.degenerate);
        for (f, _) in &data {
            assert!(predict(&model, f).unwrap().p_p2p >= 0.99);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(train::<f64>(&[], &TrainConfig::default()), Err(Error::EmptyDataset)));
        let bad = vec![(FeatureVector { schema: FeatureSchema::Shares, values: vec![f64::INFINITY, 0.0, 0.0] }, P2P)];
        assert!(matches!(train(&bad, &TrainConfig::default()), Err(Error::NonFinite)));
        let model = train(&dataset(9, 0), &TrainConfig::default()).unwrap();
        let wrong = FeatureVector::new(FeatureSchema::Degrees, vec![0.0; 4]).unwrap();
        assert!(matches!(predict(&model, &wrong), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn zero_weights_and_json_roundtrip() {
        let mut model = train(&dataset(9, 0), &TrainConfig::default()).unwrap();
        let json = model.to_json();
        assert_eq!(TrainedModel::<f64>::from_json(&json).unwrap(), model);
        for row in &mut model.weights {
            row.iter_mut().for_each(|w| *w = 0.0);
        }
        let p = predict(&model, &FeatureVector::new(FeatureSchema::Shares, vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        assert_eq!(p, ProbabilityEstimate::uniform());
    }

    #[test]
    fn f32_training() {
        let data: Vec<(FeatureVector<f32>, Relationship)> = dataset(60, 5)
            .into_iter()
            .map(|(f, l)| (FeatureVector::new(f.schema, f.values.iter().map(|&v| v as f32).collect()).unwrap(), l))
            .collect();
        let model = train(&data, &TrainConfig::default()).unwrap();
        let correct = data.iter().filter(|(f, l)| argmax_label(&predict(&model, f).unwrap()) == *l).count();
        assert_eq!(correct, data.len());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let (a, b) = train_test_split(100, 0.7, 11);
        assert_eq!((a.len(), b.len()), (70, 30));
        assert_eq!(train_test_split(100, 0.7, 11), (a.clone(), b.clone()));
        let mut all: Vec<usize> = a.into_iter().chain(b).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn predictions_csv() {
        let mut buf = Vec::new();
        write_predictions_csv(
            &mut buf,
            &[(Link::from_u32s(1, 2), ProbabilityEstimate::from_array([0.06f64, 0.04, 0.9]))],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "u,v,p_c2p,p_p2c,p_p2p,argmax\n1,2,0.06,0.04,0.9,p2p\n");
    }
}
