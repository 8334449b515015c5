//! Multiclass linear discriminant analysis.
//!
//! Discriminant axes solve the generalized eigenproblem `S_B a = λ (S_W + ρI) a`
//! by Cholesky whitening: with `S_W + ρI = L Lᵀ`, the symmetric matrix
//! `L⁻¹ S_B L⁻ᵀ` is diagonalized and its eigenvectors mapped back through
//! `L⁻ᵀ`. The ridge is `ρ = 1e-8 · trace(S_W) / m`.
//!
//! Classification uses the shared-covariance Gaussian score
//! `δ_c(v) = vᵀΣ⁻¹μ_c − ½ μ_cᵀΣ⁻¹μ_c + log π_c` with the pooled covariance
//! `Σ = (S_W + ρI) / (n − k)`.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, cholesky_solve, dot, solve_lower, solve_lower_transpose, sym_eigen, DenseMatrix,
};
use crate::metrics::Evaluation;

pub const RIDGE_SCALE: f64 = 1e-8;
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    #[default]
    Gaussian,
    /// Nearest class centroid after projecting onto the discriminant axes.
    NearestCentroid,
}

impl FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Classifier::Gaussian),
            "nearest-centroid" | "nearest_centroid" => Ok(Classifier::NearestCentroid),
            _ => Err(Error::Config(format!("unknown classifier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub format_version: u32,
    pub classes: Vec<u32>,
    pub class_means: Vec<Vec<f64>>,
    pub global_mean: Vec<f64>,
    pub priors: Vec<f64>,
    pub ridge: f64,
    /// Discriminant directions as rows, `(S_W + ρI)`-orthonormal.
    pub axes: DenseMatrix,
    pub axis_eigenvalues: Vec<f64>,
    /// Cholesky factor of `S_W + ρI`.
    pub whitener: DenseMatrix,
    pub classifier: Classifier,
    score_weights: Vec<Vec<f64>>,
    score_offsets: Vec<f64>,
    projected_means: Vec<Vec<f64>>,
}

pub fn fit_lda(x: &DenseMatrix, y: &[u32]) -> Result<LdaModel> {
    fit_lda_with(x, y, Classifier::Gaussian)
}

pub fn fit_lda_with(x: &DenseMatrix, y: &[u32], classifier: Classifier) -> Result<LdaModel> {
    let (n, m) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in y.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::Config(format!(
            "LDA needs at least 2 classes, got {}",
            groups.len()
        )));
    }
    if let Some((&class, rows)) = groups.iter().find(|(_, r)| r.len() < 2) {
        return Err(Error::SmallClass {
            class,
            count: rows.len(),
        });
    }
    let k = groups.len();
    let classes: Vec<u32> = groups.keys().copied().collect();

    let class_means: Vec<Vec<f64>> = groups
        .values()
        .map(|rows| x.select_rows(rows).column_means())
        .collect();
    let counts: Vec<usize> = groups.values().map(Vec::len).collect();
    let mut global_mean = vec![0.0; m];
    for (mu, &nc) in class_means.iter().zip(&counts) {
        for (g, v) in global_mean.iter_mut().zip(mu) {
            *g += nc as f64 * v;
        }
    }
    global_mean.iter_mut().for_each(|g| *g /= n as f64);

    let mut within = DenseMatrix::zeros(m, m);
    let mut d = vec![0.0; m];
    for (rows, mu) in groups.values().zip(&class_means) {
        for &i in rows {
            for ((dj, xj), mj) in d.iter_mut().zip(x.row(i)).zip(mu) {
                *dj = xj - mj;
            }
            add_outer(&mut within, &d, 1.0);
        }
    }
    let mut between = DenseMatrix::zeros(m, m);
    for (mu, &nc) in class_means.iter().zip(&counts) {
        for ((dj, mj), gj) in d.iter_mut().zip(mu).zip(&global_mean) {
            *dj = mj - gj;
        }
        add_outer(&mut between, &d, nc as f64);
    }
    mirror_upper(&mut within);
    mirror_upper(&mut between);

    let ridge = RIDGE_SCALE * within.trace() / m as f64;
    let l = cholesky(&within, ridge)?;

    // M = L⁻¹ S_B L⁻ᵀ, built column by column.
    let mut a = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let col = solve_lower(&l, &between.column(j));
        for (i, v) in col.into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let mut whitened = DenseMatrix::zeros(m, m);
    for j in 0..m {
        let col = solve_lower(&l, a.row(j));
        for (i, v) in col.into_iter().enumerate() {
            whitened[(i, j)] = v;
        }
    }
    mirror_average(&mut whitened);
    let eig = sym_eigen(&whitened)?;

    let n_axes = (k - 1).min(m);
    let mut axes = DenseMatrix::zeros(n_axes, m);
    for i in 0..n_axes {
        axes.row_mut(i)
            .copy_from_slice(&solve_lower_transpose(&l, &eig.vector(i)));
    }
    let axis_eigenvalues = eig.eigenvalues[..n_axes].to_vec();

    let dof = (n - k) as f64;
    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let score_weights: Vec<Vec<f64>> = class_means
        .iter()
        .map(|mu| {
            cholesky_solve(&l, mu)
                .into_iter()
                .map(|v| v * dof)
                .collect()
        })
        .collect();
    let score_offsets = class_means
        .iter()
        .zip(&score_weights)
        .zip(&priors)
        .map(|((mu, w), p)| -0.5 * dot(mu, w) + p.ln())
        .collect();
    let projected_means = class_means
        .iter()
        .map(|mu| (0..n_axes).map(|i| dot(axes.row(i), mu)).collect())
        .collect();

    Ok(LdaModel {
        format_version: MODEL_VERSION,
        classes,
        class_means,
        global_mean,
        priors,
        ridge,
        axes,
        axis_eigenvalues,
        whitener: l,
        classifier,
        score_weights,
        score_offsets,
        projected_means,
    })
}

fn add_outer(s: &mut DenseMatrix, d: &[f64], w: f64) {
    let m = d.len();
    for a in 0..m {
        let da = w * d[a];
        if da == 0.0 {
            continue;
        }
        for b in a..m {
            s[(a, b)] += da * d[b];
        }
    }
}

fn mirror_upper(s: &mut DenseMatrix) {
    for a in 0..s.rows() {
        for b in 0..a {
            s[(a, b)] = s[(b, a)];
        }
    }
}

fn mirror_average(s: &mut DenseMatrix) {
    for a in 0..s.rows() {
        for b in 0..a {
            let v = 0.5 * (s[(a, b)] + s[(b, a)]);
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
}

impl LdaModel {
    pub fn dim(&self) -> usize {
        self.global_mean.len()
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Linear discriminant score per class.
    pub fn scores(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(self
            .score_weights
            .iter()
            .zip(&self.score_offsets)
            .map(|(w, b)| dot(v, w) + b)
            .collect())
    }

    /// Coordinates of `v` on the discriminant axes.
    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok((0..self.axes.rows())
            .map(|i| dot(self.axes.row(i), v))
            .collect())
    }

    /// Highest-scoring class; ties go to the smaller label.
    pub fn predict(&self, v: &[f64]) -> Result<u32> {
        let best = match self.classifier {
            Classifier::Gaussian => argmax(&self.scores(v)?),
            Classifier::NearestCentroid => {
                let z = self.transform(v)?;
                let neg_dist: Vec<f64> = self
                    .projected_means
                    .iter()
                    .map(|c| {
                        -c.iter()
                            .zip(&z)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .collect();
                argmax(&neg_dist)
            }
        };
        Ok(self.classes[best])
    }

    pub fn predict_rows(&self, x: &DenseMatrix) -> Result<Vec<u32>> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }

    /// `axis_eigenvalue_i / sum_j axis_eigenvalue_j`.
    pub fn explained_variance(&self) -> Result<Vec<f64>> {
        let total: f64 = self.axis_eigenvalues.iter().sum();
        if total == 0.0 || !total.is_finite() {
            return Err(Error::Config(
                "all discriminant eigenvalues are zero".into(),
            ));
        }
        Ok(self.axis_eigenvalues.iter().map(|l| l / total).collect())
    }

    pub fn evaluate(&self, x: &DenseMatrix, y: &[u32]) -> Result<Evaluation> {
        if x.rows() == 0 {
            return Err(Error::Empty);
        }
        if let Some(&l) = y.iter().find(|l| self.classes.binary_search(l).is_err()) {
            return Err(Error::UnseenLabel(l));
        }
        Evaluation::from_predictions(&self.classes, y, &self.predict_rows(x)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: LdaModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_VERSION {
            return Err(Error::Version(m.format_version.to_string()));
        }
        Ok(m)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
