//! Linear support vector classifier for template centres.
//!
//! Training minimises the L2-regularised hinge loss with Pegasos-style
//! stochastic subgradient steps (`λ = 1/(C·n)`, step `1/(λt)`, projection onto
//! the `1/√λ` ball, tail averaging over the second half of the steps). The bias
//! is learned as the weight of a constant augmented feature.
//!
//! Raw margins have no natural scale, so after training the decision function
//! is rescaled affinely on a held-out calibration split: the median score of
//! background rows maps to 0 and the median score of target rows maps to 1.
//! The operating threshold then defaults to 0.5.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_DIM, FEATURE_ORDER_TAG};
use crate::rng;

pub const MODEL_MAGIC: &str = "STREAKLITE-LSVC v1";
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const MIN_TRAINING_ROWS: usize = 1000;

/// Value of the constant feature that carries the bias during training.
const BIAS_FEATURE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledRow {
    pub features: FeatureVector,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    pub threshold: f64,
    pub feature_order_tag: String,
}

impl LinearModel {
    pub fn new(weights: [f64; FEATURE_DIM], bias: f64) -> Self {
        Self {
            weights,
            bias,
            threshold: DEFAULT_THRESHOLD,
            feature_order_tag: FEATURE_ORDER_TAG.to_string(),
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// The 25 tile weights as a 5×5 grid in template layout.
    pub fn weight_grid(&self) -> [[f64; 5]; 5] {
        let mut g = [[0.0; 5]; 5];
        for (i, w) in self.weights.iter().take(25).enumerate() {
            g[i / 5][i % 5] = *w;
        }
        g
    }
}

/// `ω·x + b`.
#[inline]
pub fn decision_value(model: &LinearModel, fv: &FeatureVector) -> f64 {
    model.weights.iter().zip(fv.values()).map(|(w, x)| w * x).sum::<f64>() + model.bias
}

#[inline]
pub fn predict(model: &LinearModel, fv: &FeatureVector) -> bool {
    decision_value(model, fv) >= model.threshold
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Inverse regularisation strength; `λ = 1/(C·n)`.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Share of rows held out for margin calibration.
    pub calibration_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { c: 0.01, epochs: 20, seed: 0, calibration_fraction: 0.2 }
    }
}

fn validate_rows(rows: &[LabeledRow]) -> Result<()> {
    if rows.len() < MIN_TRAINING_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} rows, at least {MIN_TRAINING_ROWS} required",
            rows.len()
        )));
    }
    if let Some(i) = rows.iter().position(|r| r.features.values().iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite(i));
    }
    let positives = rows.iter().filter(|r| r.label).count();
    if positives == 0 || positives == rows.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub fn train(rows: &[LabeledRow], config: &TrainConfig) -> Result<LinearModel> {
    validate_rows(rows)?;
    if !(config.c > 0.0) || config.epochs == 0 {
        return Err(Error::InvalidParameter("C must be > 0 and epochs >= 1".into()));
    }
    if !(0.0..1.0).contains(&config.calibration_fraction) {
        return Err(Error::InvalidParameter("calibration fraction must be in [0, 1)".into()));
    }
    let mut rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng);
    let n_cal = (rows.len() as f64 * config.calibration_fraction).round() as usize;
    let (cal_idx, fit_idx) = order.split_at(n_cal);
    let cal_idx = if cal_idx.is_empty() { fit_idx } else { cal_idx };

    let raw = pegasos(rows, fit_idx, config, &mut rng);
    calibrate(raw, rows, cal_idx)
}

/// Returns `(weights, bias)` of the averaged Pegasos iterate.
fn pegasos(
    rows: &[LabeledRow],
    fit_idx: &[usize],
    config: &TrainConfig,
    rng: &mut rng::ChaCha8Rng,
) -> ([f64; FEATURE_DIM], f64) {
    const D: usize = FEATURE_DIM + 1;
    let n = fit_idx.len();
    let lambda = 1.0 / (config.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let total = config.epochs * n;
    let average_from = total / 2;

    let mut w = [0.0f64; D];
    let mut avg = [0.0f64; D];
    let mut averaged = 0usize;
    let mut order = fit_idx.to_vec();
    let mut t = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let row = &rows[i];
            let y = if row.label { 1.0 } else { -1.0 };
            let x = row.features.values();
            let margin = y * (w[..FEATURE_DIM].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[FEATURE_DIM] * BIAS_FEATURE);
            let eta = 1.0 / (lambda * t as f64);
            let shrink = 1.0 - 1.0 / t as f64;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += eta * y * xj;
                }
                w[FEATURE_DIM] += eta * y * BIAS_FEATURE;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let k = radius / norm;
                w.iter_mut().for_each(|v| *v *= k);
            }
            if t > average_from {
                averaged += 1;
                let k = 1.0 / averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) * k;
                }
            }
        }
    }
    let mut weights = [0.0; FEATURE_DIM];
    weights.copy_from_slice(&avg[..FEATURE_DIM]);
    (weights, avg[FEATURE_DIM] * BIAS_FEATURE)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn calibrate(raw: ([f64; FEATURE_DIM], f64), rows: &[LabeledRow], cal_idx: &[usize]) -> Result<LinearModel> {
    let uncal = LinearModel::new(raw.0, raw.1);
    let (mut neg, mut pos) = (Vec::new(), Vec::new());
    for &i in cal_idx {
        let s = decision_value(&uncal, &rows[i].features);
        if rows[i].label {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::SingleClass);
    }
    let m0 = median(&mut neg);
    let m1 = median(&mut pos);
    if !(m1 > m0) {
        return Err(Error::InsufficientData(format!(
            "class medians not separated after training ({m0} vs {m1})"
        )));
    }
    let k = 1.0 / (m1 - m0);
    let mut weights = raw.0;
    weights.iter_mut().for_each(|w| *w *= k);
    Ok(LinearModel::new(weights, (raw.1 - m0) * k))
}

pub fn accuracy(model: &LinearModel, rows: &[LabeledRow]) -> f64 {
    let correct = rows.iter().filter(|r| predict(model, &r.features) == r.label).count();
    correct as f64 / rows.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct KFoldReport {
    pub accuracies: Vec<f64>,
    pub mean: f64,
}

/// Stratified k-fold cross-validation; fold membership is drawn from `config.seed`.
pub fn kfold_validate(rows: &[LabeledRow], k: usize, config: &TrainConfig) -> Result<KFoldReport> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k}, need at least 2")));
    }
    if rows.len() < k {
        return Err(Error::InsufficientData(format!("{} rows for {k} folds", rows.len())));
    }
    let mut rng = rng::seeded(rng::sub_seed(config.seed, u64::MAX));
    let mut fold_of = vec![0usize; rows.len()];
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].label == class).collect();
        idx.shuffle(&mut rng);
        for (j, i) in idx.into_iter().enumerate() {
            fold_of[i] = j % k;
        }
    }
    let mut accuracies = Vec::with_capacity(k);
    for fold in 0..k {
        let (mut test, mut fit) = (Vec::new(), Vec::new());
        for (row, f) in rows.iter().zip(&fold_of) {
            if *f == fold {
                test.push(*row);
            } else {
                fit.push(*row);
            }
        }
        let model = train(&fit, config)?;
        accuracies.push(accuracy(&model, &test));
    }
    let mean = accuracies.iter().sum::<f64>() / k as f64;
    Ok(KFoldReport { accuracies, mean })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC sweep over the model's decision values, from the strictest threshold
/// (`+∞`, nothing accepted) down to the loosest.
pub fn roc_curve(model: &LinearModel, rows: &[LabeledRow]) -> Result<Vec<RocPoint>> {
    let positives = rows.iter().filter(|r| r.label).count();
    let negatives = rows.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut scored: Vec<(f64, bool)> = rows
        .iter()
        .map(|r| (decision_value(model, &r.features), r.label))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let s = scored[i].0;
        while i < scored.len() && scored[i].0 == s {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under an ROC curve.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].fpr - p[0].fpr) * 0.5 * (p[1].tpr + p[0].tpr))
        .sum()
}

/// `(FPR, TPR)` of the rule `score >= threshold`.
pub fn rates_at(model: &LinearModel, rows: &[LabeledRow], threshold: f64) -> (f64, f64) {
    let (mut tp, mut fp, mut p, mut n) = (0usize, 0usize, 0usize, 0usize);
    for r in rows {
        let hit = decision_value(model, &r.features) >= threshold;
        if r.label {
            p += 1;
            tp += hit as usize;
        } else {
            n += 1;
            fp += hit as usize;
        }
    }
    (fp as f64 / n.max(1) as f64, tp as f64 / p.max(1) as f64)
}

pub fn format_model(model: &LinearModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MODEL_MAGIC}").unwrap();
    writeln!(s, "{}", model.feature_order_tag).unwrap();
    writeln!(s, "{:.16e}", model.threshold).unwrap();
    for w in &model.weights {
        writeln!(s, "{w:.16e}").unwrap();
    }
    writeln!(s, "{:.16e}", model.bias).unwrap();
    s
}

pub fn parse_model(text: &str) -> Result<LinearModel> {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    if lines.first() != Some(&MODEL_MAGIC) {
        return Err(Error::BadModel(format!("expected magic line {MODEL_MAGIC:?}")));
    }
    if lines.len() < 30 {
        return Err(Error::BadModel(format!("{} lines, expected 30", lines.len())));
    }
    if lines[1] != FEATURE_ORDER_TAG {
        return Err(Error::BadModel(format!("unknown feature order {:?}", lines[1])));
    }
    let num = |i: usize| -> Result<f64> {
        lines[i]
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::BadModel(format!("line {}: {:?}", i + 1, lines[i])))
    };
    let threshold = num(2)?;
    let mut weights = [0.0; FEATURE_DIM];
    for (j, w) in weights.iter_mut().enumerate() {
        *w = num(3 + j)?;
    }
    let bias = num(29)?;
    Ok(LinearModel { weights, bias, threshold, feature_order_tag: lines[1].to_string() })
}

pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_model(model)).map_err(|e| Error::file(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_model(&text)
}

/// Weight heatmap of the 25 tile weights as a 5×5 CSV block.
pub fn heatmap_csv(model: &LinearModel) -> String {
    let mut s = String::new();
    for row in model.weight_grid() {
        let cells: Vec<String> = row.iter().map(|w| format!("{w:.9}")).collect();
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_rows(n: usize, seed: u64) -> Vec<LabeledRow> {
        let mut rng = rng::seeded(seed);
        (0..n)
            .map(|i| {
                let label = i % 2 == 0;
                let base = if label { 10.0 } else { 0.0 };
                let mut v = [0.0; FEATURE_DIM];
                v[0] = base + rng.random_range(-0.5..0.5);
                v[1] = base + rng.random_range(-0.5..0.5);
                LabeledRow { features: FeatureVector(v), label }
            })
            .collect()
    }

    #[test]
    fn separable_toy_set() {
        let rows = toy_rows(2000, 1);
        let model = train(&rows, &TrainConfig::default()).unwrap();
        assert_eq!(accuracy(&model, &rows), 1.0);
    }

    #[test]
    fn decision_value_basics() {
        let mut w = [0.0; FEATURE_DIM];
        w.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 0.1 - 1.0);
        let m = LinearModel::new(w, 0.3);
        assert_eq!(decision_value(&m, &FeatureVector::zeros()), 0.3);
        let mut x = [0.0; FEATURE_DIM];
        x.iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64).sin());
        let fv = FeatureVector(x);
        let a = decision_value(&m, &fv) - 0.3;
        let b = decision_value(&m, &fv.scaled(2.0)) - 0.3;
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(!predict(&m, &FeatureVector::zeros()));
        assert!(predict(&m.clone().with_threshold(0.3), &FeatureVector::zeros()));
    }

    #[test]
    fn training_errors() {
        let rows = toy_rows(2000, 2);
        assert!(matches!(train(&rows[..500], &TrainConfig::default()), Err(Error::InsufficientData(_))));
        let single: Vec<_> = rows.iter().map(|r| LabeledRow { label: true, ..*r }).collect();
        assert!(matches!(train(&single, &TrainConfig::default()), Err(Error::SingleClass)));
        let mut nan = rows.clone();
        nan[17].features.0[3] = f64::NAN;
        assert!(matches!(train(&nan, &TrainConfig::default()), Err(Error::NonFinite(17))));
    }

    #[test]
    fn deterministic_model_bytes() {
        let rows = toy_rows(3000, 3);
        let cfg = TrainConfig { seed: 9, ..Default::default() };
        let a = format_model(&train(&rows, &cfg).unwrap());
        let b = format_model(&train(&rows, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_rows_give_equal_folds() {
        let mut rows = Vec::new();
        for i in 0..2000 {
            let mut v = [0.0; FEATURE_DIM];
            let label = i % 2 == 1;
            v[12] = if label { 8.0 } else { 3.0 };
            rows.push(LabeledRow { features: FeatureVector(v), label });
        }
        let r = kfold_validate(&rows, 5, &TrainConfig::default()).unwrap();
        assert!(r.accuracies.iter().all(|a| *a == r.accuracies[0]));
        assert!(kfold_validate(&rows[..3], 5, &TrainConfig::default()).is_err());
        assert!(kfold_validate(&rows, 1, &TrainConfig::default()).is_err());
    }

    #[test]
    fn roc_perfect_and_random() {
        let rows = toy_rows(2000, 4);
        let model = train(&rows, &TrainConfig::default()).unwrap();
        let roc = roc_curve(&model, &rows).unwrap();
        assert!((auc(&roc) - 1.0).abs() < 1e-12);
        assert!(roc.windows(2).all(|p| p[1].fpr >= p[0].fpr && p[1].tpr >= p[0].tpr));

        let mut rng = rng::seeded(5);
        let random: Vec<_> = (0..10_000)
            .map(|_| {
                let mut v = [0.0; FEATURE_DIM];
                v[0] = rng.random();
                LabeledRow { features: FeatureVector(v), label: rng.random_bool(0.5) }
            })
            .collect();
        let a = auc(&roc_curve(&model, &random).unwrap());
        assert!((a - 0.5).abs() < 0.05, "auc {a}");
        let single: Vec<_> = random.iter().map(|r| LabeledRow { label: false, ..*r }).collect();
        assert!(roc_curve(&model, &single).is_err());
    }

    #[test]
    fn model_text_round_trip() {
        let rows = toy_rows(2000, 6);
        let m = train(&rows, &TrainConfig::default()).unwrap();
        let back = parse_model(&format_model(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(format_model(&m).lines().count(), 30);
        let mut rng = rng::seeded(8);
        for _ in 0..100 {
            let mut v = [0.0; FEATURE_DIM];
            v.iter_mut().for_each(|x| *x = rng.random_range(-50.0..50.0));
            let fv = FeatureVector(v);
            assert_eq!(decision_value(&m, &fv), decision_value(&back, &fv));
        }
        let bad = format_model(&m).replacen(MODEL_MAGIC, "SOMETHING-ELSE v1", 1);
        assert!(matches!(parse_model(&bad), Err(Error::BadModel(_))));
    }

    #[test]
    fn raising_threshold_never_adds_positives() {
        let rows = toy_rows(2000, 7);
        let m = train(&rows, &TrainConfig::default()).unwrap();
        for r in &rows {
            let lo = predict(&m, &r.features);
            let hi = predict(&m.clone().with_threshold(0.9), &r.features);
            assert!(!hi || lo);
        }
    }
}
