//! Losses, mini-batch Adam training and evaluation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::{AdamState, Gradients, Head, NnModel, GRAD_CHUNK};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::metrics::Evaluation;

/// A named evaluation subset.
#[derive(Debug, Clone, Copy)]
pub struct EvalSet<'a> {
    pub name: &'a str,
    pub x: &'a DenseMatrix,
    pub y: &'a [u32],
}

/// Per-epoch training loss and accuracy for each named evaluation subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    pub loss: Vec<f64>,
    pub accuracy: Vec<(String, Vec<f64>)>,
}

impl Curves {
    pub fn epochs(&self) -> usize {
        self.loss.len()
    }

    pub fn last(&self, subset: &str) -> Option<f64> {
        self.accuracy
            .iter()
            .find(|(n, _)| n == subset)
            .and_then(|(_, v)| v.last().copied())
    }

    /// `epoch,subset,accuracy` with 1-based epochs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,subset,accuracy")?;
        for epoch in 0..self.epochs() {
            for (name, acc) in &self.accuracy {
                writeln!(w, "{},{},{:?}", epoch + 1, name, acc[epoch])?;
            }
        }
        Ok(())
    }
}

fn targets(model: &NnModel, labels: &[u32]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|&l| match model.head {
            Head::Classification => model
                .classes
                .binary_search(&l)
                .map(|i| i as f64)
                .map_err(|_| Error::UnseenLabel(l)),
            Head::Regression => Ok(l as f64),
        })
        .collect()
}

/// Per-sample loss and its gradient with respect to the outputs.
fn sample_loss(head: Head, out: &[f64], target: f64) -> (f64, Vec<f64>) {
    match head {
        Head::Classification => {
            let t = target as usize;
            let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = out.iter().map(|z| (z - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let loss = sum.ln() - (out[t] - max);
            let grad = exps
                .iter()
                .enumerate()
                .map(|(i, e)| e / sum - if i == t { 1.0 } else { 0.0 })
                .collect();
            (loss, grad)
        }
        Head::Regression => {
            let d = out[0] - target;
            (d * d, vec![2.0 * d])
        }
    }
}

fn check_batch(model: &NnModel, x: &DenseMatrix, labels: &[u32]) -> Result<()> {
    if x.cols() != model.input_length() {
        return Err(Error::Dimension {
            expected: model.input_length(),
            got: x.cols(),
        });
    }
    if labels.len() != x.rows() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: labels.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Mean loss over the batch and its exact gradient. With an `rng`, dropout
/// is active and one mask seed is drawn per sample in row order.
pub fn loss_and_grad(
    model: &NnModel,
    x: &DenseMatrix,
    labels: &[u32],
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Gradients)> {
    check_batch(model, x, labels)?;
    let t = targets(model, labels)?;
    let seeds: Option<Vec<u64>> = rng.map(|r| (0..x.rows()).map(|_| r.gen()).collect());
    let b = x.rows() as f64;
    let rows: Vec<usize> = (0..x.rows()).collect();
    let partials: Vec<Result<(f64, Gradients)>> = rows
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = model.zero_grads();
            let mut loss = 0.0;
            for &i in chunk {
                let mut sample_rng = seeds.as_ref().map(|s| ChaCha8Rng::seed_from_u64(s[i]));
                let trace = model.sample_trace(x.row(i), sample_rng.as_mut())?;
                let (l, mut g) = sample_loss(model.head, trace.output(), t[i]);
                g.iter_mut().for_each(|v| *v /= b);
                loss += l;
                model.sample_backward(&trace, &g, &mut grads);
            }
            Ok((loss, grads))
        })
        .collect();
    let mut total = 0.0;
    let mut grads = model.zero_grads();
    for p in partials {
        let (l, g) = p?;
        total += l;
        for (a, b) in grads.iter_mut().zip(&g) {
            a.add_assign(b);
        }
    }
    Ok((total / b, grads))
}

/// Mean loss only, with dropout disabled.
pub fn loss(model: &NnModel, x: &DenseMatrix, labels: &[u32]) -> Result<f64> {
    check_batch(model, x, labels)?;
    let t = targets(model, labels)?;
    let out = model.predict_logits(x)?;
    let total: f64 = (0..x.rows())
        .map(|i| sample_loss(model.head, out.row(i), t[i]).0)
        .sum();
    Ok(total / x.rows() as f64)
}

impl NnModel {
    /// Argmax of the logits (first maximum wins), or the class nearest the
    /// scalar output for regression heads (ties to the smaller label).
    pub fn predict(&self, x: &DenseMatrix) -> Result<Vec<u32>> {
        let out = self.predict_logits(x)?;
        Ok((0..out.rows())
            .map(|i| {
                let row = out.row(i);
                match self.head {
                    Head::Classification => {
                        let mut best = 0;
                        for (j, v) in row.iter().enumerate() {
                            if *v > row[best] {
                                best = j;
                            }
                        }
                        self.classes[best]
                    }
                    Head::Regression => {
                        let mut best = self.classes[0];
                        for &c in &self.classes {
                            if (c as f64 - row[0]).abs() < (best as f64 - row[0]).abs() {
                                best = c;
                            }
                        }
                        best
                    }
                }
            })
            .collect())
    }

    pub fn evaluate(&self, x: &DenseMatrix, y: &[u32]) -> Result<Evaluation> {
        let pred = self.predict(x)?;
        let mut classes = self.classes.clone();
        classes.extend(y.iter().copied());
        classes.sort_unstable();
        classes.dedup();
        Evaluation::from_predictions(&classes, y, &pred)
    }

    fn adam_step(&mut self, grads: &Gradients, cfg: &TrainConfig) {
        let adam = self.adam.get_or_insert_with(|| AdamState {
            step: 0,
            m: self.params.iter().map(|g| g.zeros_like()).collect(),
            v: self.params.iter().map(|g| g.zeros_like()).collect(),
        });
        adam.step += 1;
        let t = adam.step as i32;
        let c1 = 1.0 - cfg.adam_beta1.powi(t);
        let c2 = 1.0 - cfg.adam_beta2.powi(t);
        for (gi, g) in grads.iter().enumerate() {
            let (m, v, p) = (&mut adam.m[gi], &mut adam.v[gi], &mut self.params[gi]);
            for j in 0..g.len() {
                let gj = g.get(j);
                let mj = m.get_mut(j);
                *mj = cfg.adam_beta1 * *mj + (1.0 - cfg.adam_beta1) * gj;
                let mhat = *mj / c1;
                let vj = v.get_mut(j);
                *vj = cfg.adam_beta2 * *vj + (1.0 - cfg.adam_beta2) * gj * gj;
                let vhat = *vj / c2;
                *p.get_mut(j) -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Trains in place. On a non-finite loss or gradient the offending step is
/// not applied, so `model` keeps its last finite parameters.
pub fn train(
    model: &mut NnModel,
    x: &DenseMatrix,
    y: &[u32],
    evals: &[EvalSet<'_>],
    cfg: &TrainConfig,
) -> Result<Curves> {
    cfg.validate()?;
    check_batch(model, x, y)?;
    targets(model, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut curves = Curves {
        loss: Vec::with_capacity(cfg.epochs),
        accuracy: evals
            .iter()
            .map(|e| (e.name.to_string(), Vec::with_capacity(cfg.epochs)))
            .collect(),
    };
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let xb = x.select_rows(idx);
            let yb: Vec<u32> = idx.iter().map(|&i| y[i]).collect();
            let diverged = Error::Diverged { epoch, batch };
            let (l, grads) = match loss_and_grad(model, &xb, &yb, Some(&mut rng)) {
                Ok(r) => r,
                Err(Error::NonFinite) => return Err(diverged),
                Err(e) => return Err(e),
            };
            let finite = grads
                .iter()
                .all(|g| g.weight.iter().chain(&g.bias).all(|v| v.is_finite()));
            if !l.is_finite() || !finite {
                return Err(diverged);
            }
            model.adam_step(&grads, cfg);
            epoch_loss += l * idx.len() as f64;
        }
        curves.loss.push(epoch_loss / x.rows() as f64);
        for (e, (_, acc)) in evals.iter().zip(curves.accuracy.iter_mut()) {
            acc.push(model.evaluate(e.x, e.y)?.accuracy);
        }
    }
    Ok(curves)
}
