//! Stratified splits and the end-to-end LDA, neural network and transfer runs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Filter};
use crate::error::{Error, Result};
use crate::features::{feature_matrix, Normalization};
use crate::lda::{fit_lda_with, Classifier};
use crate::linalg::DenseMatrix;
use crate::metrics::Evaluation;
use crate::nn::{
    self, Arch, CnnConfig, Curves, EvalSet, FnnConfig, Head, Loss, NnModel, TrainConfig,
};
use crate::pca::{fit_pca, PcaModel};

/// `train:test`, both positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub test: u32,
}

impl Default for SplitRatio {
    fn default() -> Self {
        SplitRatio {
            train: 80,
            test: 20,
        }
    }
}

impl SplitRatio {
    pub fn new(train: u32, test: u32) -> Result<Self> {
        if train == 0 || test == 0 {
            return Err(Error::Config("split ratio parts must be positive".into()));
        }
        Ok(SplitRatio { train, test })
    }

    pub fn test_fraction(&self) -> f64 {
        self.test as f64 / (self.train + self.test) as f64
    }
}

impl FromStr for SplitRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("ratio {s:?} is not of the form TRAIN:TEST"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        SplitRatio::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )
    }
}

impl fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.train, self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    /// Ascending positions.
    pub train: Vec<usize>,
    /// Ascending positions.
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: SplitRatio,
    /// Classes with a single member, placed wholly in train.
    pub flagged_classes: Vec<u32>,
}

/// Per-class seeded partition.
///
/// The overall test size is `ceil(n * test / (train + test))` over the
/// splittable classes. Each class first gets the floor of its exact share;
/// the remaining slots go to the largest fractional remainders, ties to the
/// smaller label. Every class therefore lands within one item of its exact
/// share.
pub fn stratified_split(labels: &[u32], ratio: SplitRatio, seed: u64) -> Result<SplitIndices> {
    if labels.is_empty() {
        return Err(Error::Empty);
    }
    let mut by_class: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let flagged_classes: Vec<u32> = by_class
        .iter()
        .filter(|(_, v)| v.len() < 2)
        .map(|(&c, _)| c)
        .collect();
    for c in &flagged_classes {
        log::warn!("class {c} has a single member; it is kept in the training split");
    }
    let total = u64::from(ratio.train + ratio.test);
    let share = |n: usize| n as u64 * u64::from(ratio.test);
    let eligible: Vec<(u32, usize)> = by_class
        .iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(&c, v)| (c, v.len()))
        .collect();
    let n_eligible: usize = eligible.iter().map(|e| e.1).sum();
    let n_test = share(n_eligible).div_ceil(total) as usize;
    let mut quota: BTreeMap<u32, usize> = eligible
        .iter()
        .map(|&(c, n)| (c, (share(n) / total) as usize))
        .collect();
    let mut remainders: Vec<(u64, u32)> = eligible
        .iter()
        .map(|&(c, n)| (share(n) % total, c))
        .collect();
    // Largest remainder first, then smaller label.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = n_test - quota.values().sum::<usize>();
    for &(rem, c) in &remainders {
        if left == 0 || rem == 0 {
            break;
        }
        *quota.get_mut(&c).expect("eligible class") += 1;
        left -= 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(labels.len() - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (c, mut idx) in by_class {
        let q = quota.get(&c).copied().unwrap_or(0);
        idx.shuffle(&mut rng);
        test.extend_from_slice(&idx[..q]);
        train.extend_from_slice(&idx[q..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        seed,
        ratio,
        flagged_classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "CNN")]
    Cnn,
    #[serde(rename = "FNN")]
    Fnn,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(Method::Lda),
            "cnn" => Ok(Method::Cnn),
            "fnn" => Ok(Method::Fnn),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lda => "LDA",
            Method::Cnn => "CNN",
            Method::Fnn => "FNN",
        })
    }
}

/// Raw normalized coefficient vectors, or their first `k` principal components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureMode {
    #[serde(rename = "VL")]
    Vl,
    #[serde(rename = "PC")]
    Pc(usize),
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if lower == "vl" {
            return Ok(FeatureMode::Vl);
        }
        let k = lower
            .strip_prefix("pc")
            .map(|r| r.trim_start_matches(['_', ':']))
            .and_then(|r| r.parse::<usize>().ok())
            .filter(|&k| k > 0);
        k.map(FeatureMode::Pc).ok_or_else(|| {
            Error::Config(format!(
                "unknown feature mode {s:?} (expected VL or PC_<k>)"
            ))
        })
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureMode::Vl => f.write_str("VL"),
            FeatureMode::Pc(k) => write!(f, "PC_{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub order: u32,
    pub total: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetAccuracy {
    pub name: String,
    pub n: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub method: Method,
    pub features: FeatureMode,
    pub normalization: Normalization,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    /// Micro accuracy over all test rows.
    pub accuracy: f64,
    pub subset_accuracy: Vec<SubsetAccuracy>,
    /// Unweighted mean over subsets that have test rows.
    pub subset_mean_accuracy: Option<f64>,
    /// LDA axis ratios, largest first.
    pub explained_variance: Option<Vec<f64>>,
    pub class_counts: Vec<ClassCount>,
    pub evaluation: Evaluation,
    pub curves: Option<Curves>,
    /// Where the PCA in `PC_k` mode was fitted.
    pub pca_fit: Option<String>,
    /// Largest coordinate gap between the fitted PCA mean and the mean of
    /// every row.
    pub pca_mean_shift: Option<f64>,
    /// Test-side records dropped because they also appear in the training side.
    pub overlap_removed: Option<usize>,
    pub flagged_classes: Vec<u32>,
    /// Reserved; always null.
    pub conductor_window: Option<(u64, u64)>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Renders reports in the layout of a results table: one block per dataset
/// with per-order counts stacked in the last column.
pub struct ReportTable<'a>(pub &'a [ExperimentReport]);

impl fmt::Display for ReportTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>14} {:>16} {:>9} {:>19}  Counts",
            "Dataset", "Training obs.", "Validation obs.", "Accuracy", "Explained Variance"
        )?;
        for r in self.0 {
            let ev = r
                .explained_variance
                .as_ref()
                .and_then(|v| v.first())
                .map_or("-".to_string(), |v| format!("{v:.3}"));
            let mut counts = r.class_counts.iter();
            let first = counts
                .next()
                .map_or(String::new(), |c| format!("{:<3} {}", c.order, c.total));
            writeln!(
                f,
                "{:<12} {:>14} {:>16} {:>9.3} {:>19}  {}",
                r.dataset, r.n_train, r.n_test, r.accuracy, ev, first
            )?;
            for c in counts {
                writeln!(
                    f,
                    "{:<12} {:>14} {:>16} {:>9} {:>19}  {:<3} {}",
                    "", "", "", "", "", c.order, c.total
                )?;
            }
        }
        Ok(())
    }
}

/// A labelled subset definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedFilter {
    pub name: String,
    pub filter: Filter,
}

impl NamedFilter {
    pub fn new(name: impl Into<String>, filter: Filter) -> Self {
        NamedFilter {
            name: name.into(),
            filter,
        }
    }
}

/// PRAT★ and its four largest origin subsets.
pub fn standard_subsets() -> Vec<NamedFilter> {
    use crate::record::Origin;
    let star = Filter::prat_star();
    let mut out = vec![NamedFilter::new("PRAT*", star)];
    for o in [Origin::Bmf, Origin::Ecnf, Origin::G2q, Origin::Hmf] {
        let f = star.merge(&Filter::origin(o)).expect("disjoint clauses");
        out.push(NamedFilter::new(o.tag(), f));
    }
    out
}

fn class_counts(labels: &[u32], split: &SplitIndices) -> Vec<ClassCount> {
    let mut map: BTreeMap<u32, ClassCount> = BTreeMap::new();
    for (side, idx) in [(0, &split.train), (1, &split.test)] {
        for &i in idx.iter() {
            let l = labels[i];
            let c = map.entry(l).or_insert(ClassCount {
                order: l,
                total: 0,
                train: 0,
                test: 0,
            });
            c.total += 1;
            if side == 0 {
                c.train += 1;
            } else {
                c.test += 1;
            }
        }
    }
    map.into_values().collect()
}

fn pick(labels: &[u32], idx: &[usize]) -> Vec<u32> {
    idx.iter().map(|&i| labels[i]).collect()
}

/// Filter, split, fit and evaluate LDA once per subset.
pub fn run_lda(
    ds: &Dataset,
    subsets: &[NamedFilter],
    normalization: Normalization,
    ratio: SplitRatio,
    seed: u64,
) -> Result<Vec<ExperimentReport>> {
    if ds.is_empty() {
        return Err(Error::Empty);
    }
    subsets
        .par_iter()
        .map(|s| lda_one(&s.name, &ds.filter(&s.filter), normalization, ratio, seed))
        .collect()
}

pub fn lda_one(
    name: &str,
    ds: &Dataset,
    normalization: Normalization,
    ratio: SplitRatio,
    seed: u64,
) -> Result<ExperimentReport> {
    if ds.is_empty() {
        return Err(Error::Config(format!("subset {name} is empty")));
    }
    let labels = ds.orders();
    let split = stratified_split(&labels, ratio, seed)?;
    let x = feature_matrix(ds, normalization);
    let model = fit_lda_with(
        &x.select_rows(&split.train),
        &pick(&labels, &split.train),
        Classifier::Gaussian,
    )?;
    let test_y = pick(&labels, &split.test);
    let evaluation = model.evaluate(&x.select_rows(&split.test), &test_y)?;
    Ok(ExperimentReport {
        dataset: name.to_string(),
        method: Method::Lda,
        features: FeatureMode::Vl,
        normalization,
        seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        accuracy: evaluation.accuracy,
        subset_accuracy: Vec::new(),
        subset_mean_accuracy: None,
        explained_variance: model.explained_variance().ok(),
        class_counts: class_counts(&labels, &split),
        evaluation,
        curves: None,
        pca_fit: None,
        pca_mean_shift: None,
        overlap_removed: None,
        flagged_classes: split.flagged_classes,
        conductor_window: None,
    })
}

/// Settings for a neural network experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NnSettings {
    pub method: Method,
    pub features: FeatureMode,
    pub normalization: Normalization,
    pub loss: Loss,
    pub train: TrainConfig,
    pub ratio: SplitRatio,
    /// FNN hidden widths; ignored for the CNN.
    pub fnn_hidden: Vec<usize>,
}

impl NnSettings {
    pub fn new(method: Method, features: FeatureMode) -> Self {
        NnSettings {
            method,
            features,
            normalization: Normalization::Atilde,
            loss: Loss::CrossEntropy,
            train: TrainConfig::default(),
            ratio: SplitRatio::default(),
            fnn_hidden: FnnConfig::new(2).hidden_widths,
        }
    }

    pub fn arch(&self, input_length: usize, classes: usize) -> Result<Arch> {
        let out = match self.loss {
            Loss::CrossEntropy => classes,
            Loss::MseScalar => 1,
        };
        match self.method {
            Method::Cnn => Ok(Arch::Cnn(
                CnnConfig::new(out).with_input_length(input_length),
            )),
            Method::Fnn => {
                let mut c = FnnConfig::new(out).with_input_length(input_length);
                c.hidden_widths = self.fnn_hidden.clone();
                Ok(Arch::Fnn(c))
            }
            Method::Lda => Err(Error::Config("LDA is not a network architecture".into())),
        }
    }

    pub fn new_model(&self, input_length: usize, classes: Vec<u32>) -> Result<NnModel> {
        let arch = self.arch(input_length, classes.len())?;
        NnModel::new(arch, classes, Head::from(self.loss), self.train.seed)
    }
}

fn distinct(labels: &[u32]) -> Vec<u32> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

/// Normalization, optional train-fitted projection, and network: everything
/// needed to score a dataset with a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnPipeline {
    pub normalization: Normalization,
    pub pca: Option<PcaModel>,
    pub network: NnModel,
}

impl NnPipeline {
    pub fn features(&self, ds: &Dataset) -> Result<DenseMatrix> {
        let x = feature_matrix(ds, self.normalization);
        match &self.pca {
            Some(p) => p.project_rows(&x),
            None => Ok(x),
        }
    }

    pub fn evaluate(&self, ds: &Dataset) -> Result<Evaluation> {
        if ds.is_empty() {
            return Err(Error::Empty);
        }
        self.network.evaluate(&self.features(ds)?, &ds.orders())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses and re-validates the embedded network.
    pub fn from_json(s: &str) -> Result<Self> {
        let p: NnPipeline = serde_json::from_str(s)?;
        let network = NnModel::from_json(&serde_json::to_string(&p.network)?)?;
        let width = p
            .pca
            .as_ref()
            .map_or(crate::record::NUM_PRIMES, PcaModel::k);
        if network.input_length() != width {
            return Err(Error::Dimension {
                expected: width,
                got: network.input_length(),
            });
        }
        Ok(NnPipeline { network, ..p })
    }
}

/// Features for train and test rows. In `PC_k` mode the projection is fitted
/// on the training rows only.
fn prepare_features(
    x_train: DenseMatrix,
    x_test: DenseMatrix,
    x_all_mean: Vec<f64>,
    mode: FeatureMode,
) -> Result<(DenseMatrix, DenseMatrix, Option<PcaModel>, Option<f64>)> {
    match mode {
        FeatureMode::Vl => Ok((x_train, x_test, None, None)),
        FeatureMode::Pc(k) => {
            let pca = fit_pca(&x_train, k)?;
            let shift = pca
                .mean
                .iter()
                .zip(&x_all_mean)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            Ok((
                pca.project_rows(&x_train)?,
                pca.project_rows(&x_test)?,
                Some(pca),
                Some(shift),
            ))
        }
    }
}

fn mean_of_rows(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
    let n = (a.rows() + b.rows()) as f64;
    let mut mean = vec![0.0; a.cols()];
    for m in [a, b] {
        for i in 0..m.rows() {
            for (s, v) in mean.iter_mut().zip(m.row(i)) {
                *s += v;
            }
        }
    }
    mean.iter_mut().for_each(|s| *s /= n);
    mean
}

/// Trains on the split's training rows; curves track every named subset of
/// the test rows plus `overall`.
pub fn run_nn(
    ds: &Dataset,
    name: &str,
    subsets: &[NamedFilter],
    settings: &NnSettings,
) -> Result<(ExperimentReport, NnPipeline)> {
    if ds.is_empty() {
        return Err(Error::Empty);
    }
    let labels = ds.orders();
    let split = stratified_split(&labels, settings.ratio, settings.train.seed)?;
    let x = feature_matrix(ds, settings.normalization);
    let (x_train, x_test) = (x.select_rows(&split.train), x.select_rows(&split.test));
    let all_mean = x.column_means();
    let (x_train, x_test, pca, shift) =
        prepare_features(x_train, x_test, all_mean, settings.features)?;
    let y_train = pick(&labels, &split.train);
    let y_test = pick(&labels, &split.test);

    let subset_rows: Vec<(String, Vec<usize>)> = subsets
        .iter()
        .map(|s| {
            let rows = split
                .test
                .iter()
                .enumerate()
                .filter(|(_, &i)| s.filter.matches(ds.record(i)))
                .map(|(j, _)| j)
                .collect();
            (s.name.clone(), rows)
        })
        .collect();
    let subset_data: Vec<(String, DenseMatrix, Vec<u32>)> = subset_rows
        .iter()
        .map(|(n, rows)| (n.clone(), x_test.select_rows(rows), pick(&y_test, rows)))
        .collect();

    let mut model = settings.new_model(x_train.cols(), distinct(&y_train))?;
    let mut evals = Vec::new();
    if x_test.rows() > 0 {
        evals.push(EvalSet {
            name: "overall",
            x: &x_test,
            y: &y_test,
        });
    }
    evals.extend(
        subset_data
            .iter()
            .filter(|(_, m, _)| m.rows() > 0)
            .map(|(n, m, y)| EvalSet { name: n, x: m, y }),
    );
    let curves = nn::train(&mut model, &x_train, &y_train, &evals, &settings.train)?;
    let evaluation = model.evaluate(&x_test, &y_test)?;

    let subset_accuracy: Vec<SubsetAccuracy> = subset_data
        .iter()
        .map(|(n, m, y)| {
            let accuracy = if m.rows() > 0 {
                Some(model.evaluate(m, y)?.accuracy)
            } else {
                None
            };
            Ok(SubsetAccuracy {
                name: n.clone(),
                n: m.rows(),
                accuracy,
            })
        })
        .collect::<Result<_>>()?;
    let present: Vec<f64> = subset_accuracy.iter().filter_map(|s| s.accuracy).collect();
    let report = ExperimentReport {
        dataset: name.to_string(),
        method: settings.method,
        features: settings.features,
        normalization: settings.normalization,
        seed: settings.train.seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        accuracy: evaluation.accuracy,
        subset_mean_accuracy: (!present.is_empty())
            .then(|| present.iter().sum::<f64>() / present.len() as f64),
        subset_accuracy,
        explained_variance: None,
        class_counts: class_counts(&labels, &split),
        evaluation,
        curves: Some(curves),
        pca_fit: shift.map(|_| "train".to_string()),
        pca_mean_shift: shift,
        overlap_removed: None,
        flagged_classes: split.flagged_classes,
        conductor_window: None,
    };
    let pipeline = NnPipeline {
        normalization: settings.normalization,
        pca,
        network: model,
    };
    Ok((report, pipeline))
}

/// Trains on every record of `from` and evaluates on `to`, after removing
/// from `to` any record that is also in `from`.
pub fn transfer_one(
    ds: &Dataset,
    from: &NamedFilter,
    to: &NamedFilter,
    settings: &NnSettings,
) -> Result<(ExperimentReport, NnPipeline)> {
    let train_ds = ds.filter(&from.filter);
    let full_test = ds.filter(&to.filter);
    let test_ds = full_test.without_labels_of(&train_ds);
    if train_ds.is_empty() || test_ds.is_empty() {
        return Err(Error::Config(format!(
            "transfer {} -> {} has an empty side after overlap removal",
            from.name, to.name
        )));
    }
    let x_train = feature_matrix(&train_ds, settings.normalization);
    let x_test = feature_matrix(&test_ds, settings.normalization);
    let all_mean = mean_of_rows(&x_train, &x_test);
    let (x_train, x_test, pca, shift) =
        prepare_features(x_train, x_test, all_mean, settings.features)?;
    let y_train = train_ds.orders();
    let y_test = test_ds.orders();
    let mut model = settings.new_model(x_train.cols(), distinct(&y_train))?;
    let evals = [EvalSet {
        name: &to.name,
        x: &x_test,
        y: &y_test,
    }];
    let curves = nn::train(&mut model, &x_train, &y_train, &evals, &settings.train)?;
    let evaluation = model.evaluate(&x_test, &y_test)?;

    let joint: Vec<u32> = y_train.iter().chain(&y_test).copied().collect();
    let sides = SplitIndices {
        train: (0..y_train.len()).collect(),
        test: (y_train.len()..joint.len()).collect(),
        seed: settings.train.seed,
        ratio: settings.ratio,
        flagged_classes: Vec::new(),
    };
    let report = ExperimentReport {
        dataset: format!("{} -> {}", from.name, to.name),
        method: settings.method,
        features: settings.features,
        normalization: settings.normalization,
        seed: settings.train.seed,
        n_train: train_ds.len(),
        n_test: test_ds.len(),
        accuracy: evaluation.accuracy,
        subset_accuracy: vec![SubsetAccuracy {
            name: to.name.clone(),
            n: test_ds.len(),
            accuracy: Some(evaluation.accuracy),
        }],
        subset_mean_accuracy: Some(evaluation.accuracy),
        explained_variance: None,
        class_counts: class_counts(&joint, &sides),
        evaluation,
        curves: Some(curves),
        pca_fit: shift.map(|_| "train".to_string()),
        pca_mean_shift: shift,
        overlap_removed: Some(full_test.len() - test_ds.len()),
        flagged_classes: Vec::new(),
        conductor_window: None,
    };
    let pipeline = NnPipeline {
        normalization: settings.normalization,
        pca,
        network: model,
    };
    Ok((report, pipeline))
}

/// Both directions: `a -> b`, then `b -> a`.
pub fn run_transfer(
    ds: &Dataset,
    a: &NamedFilter,
    b: &NamedFilter,
    settings: &NnSettings,
) -> Result<[(ExperimentReport, NnPipeline); 2]> {
    Ok([
        transfer_one(ds, a, b, settings)?,
        transfer_one(ds, b, a, settings)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_records_two_classes() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let s = stratified_split(&labels, SplitRatio::default(), 3).unwrap();
        assert_eq!(s.test.len(), 2);
        assert_eq!(
            pick(&labels, &s.test).iter().filter(|&&l| l == 0).count(),
            1
        );
        assert_eq!(
            s,
            stratified_split(&labels, SplitRatio::default(), 3).unwrap()
        );
    }

    #[test]
    fn singleton_goes_to_train() {
        let labels = [0, 0, 0, 0, 0, 7];
        let s = stratified_split(&labels, SplitRatio::default(), 1).unwrap();
        assert_eq!(s.flagged_classes, vec![7]);
        assert!(s.train.contains(&5));
        assert_eq!(s.test.len(), 1);
    }

    #[test]
    fn table_totals() {
        // Totals and validation sizes from the published LDA table.
        for (n, n_test) in [
            (176156usize, 35232usize),
            (81803, 16361),
            (113489, 22698),
            (62780, 12556),
        ] {
            let labels: Vec<u32> = (0..n as u32).map(|i| i % 4).collect();
            let s = stratified_split(&labels, SplitRatio::default(), 0).unwrap();
            assert_eq!(s.test.len(), n_test);
        }
    }

    #[test]
    fn ratio_and_mode_parsing() {
        assert_eq!(
            "70:30".parse::<SplitRatio>().unwrap(),
            SplitRatio {
                train: 70,
                test: 30
            }
        );
        assert!("0:1".parse::<SplitRatio>().is_err());
        assert!("80".parse::<SplitRatio>().is_err());
        assert_eq!("pc_2".parse::<FeatureMode>().unwrap(), FeatureMode::Pc(2));
        assert_eq!("PC3".parse::<FeatureMode>().unwrap(), FeatureMode::Pc(3));
        assert_eq!("vl".parse::<FeatureMode>().unwrap(), FeatureMode::Vl);
        assert!("pc0".parse::<FeatureMode>().is_err());
        assert_eq!(FeatureMode::Pc(2).to_string(), "PC_2");
    }

    #[test]
    fn standard_subset_names() {
        let names: Vec<String> = standard_subsets().into_iter().map(|s| s.name).collect();
        assert_eq!(names, ["PRAT*", "BMF", "ECNF", "G2Q", "HMF"]);
    }
}
