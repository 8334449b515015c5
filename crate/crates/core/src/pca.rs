//! Principal component analysis by diagonalizing the sample covariance.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{covariance, dot, sym_eigen, DenseMatrix};
use crate::record::{PrimeBasis, NUM_PRIMES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x m`, orthonormal rows.
    pub components: DenseMatrix,
    /// Top `k` covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalue_i / sum of all m eigenvalues`.
    pub explained_ratio: Vec<f64>,
}

pub fn fit_pca(x: &DenseMatrix, k: usize) -> Result<PcaModel> {
    let m = x.cols();
    if k == 0 || k > m {
        return Err(Error::Config(format!(
            "component count {k} outside 1..={m}"
        )));
    }
    let s = covariance(x)?;
    let eig = sym_eigen(&s)?;
    let total: f64 = eig.eigenvalues.iter().sum();
    let mut components = DenseMatrix::zeros(k, m);
    for i in 0..k {
        components.row_mut(i).copy_from_slice(&eig.vector(i));
    }
    let eigenvalues = eig.eigenvalues[..k].to_vec();
    let explained_ratio = eigenvalues
        .iter()
        .map(|l| if total > 0.0 { l / total } else { 0.0 })
        .collect();
    Ok(PcaModel {
        mean: x.column_means(),
        components,
        eigenvalues,
        explained_ratio,
    })
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `out_i = sum_p components[i][p] * (v[p] - mean[p])`
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: v.len(),
            });
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        Ok((0..self.k())
            .map(|i| dot(self.components.row(i), &centered))
            .collect())
    }

    pub fn project_rows(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(x.rows() * self.k());
        for i in 0..x.rows() {
            data.extend(self.project(x.row(i))?);
        }
        DenseMatrix::from_vec(x.rows(), self.k(), data)
    }

    /// `mean + sum_i z_i * components[i]`
    pub fn reconstruct(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.k() {
            return Err(Error::Dimension {
                expected: self.k(),
                got: z.len(),
            });
        }
        let mut out = self.mean.clone();
        for (i, zi) in z.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(self.components.row(i)) {
                *o += zi * c;
            }
        }
        Ok(out)
    }

    /// Per-prime weights of component `i`. Only defined for models fitted on
    /// the 168-prime feature space.
    pub fn component_weights(&self, i: usize) -> Result<Vec<(u32, f64)>> {
        if i >= self.k() {
            return Err(Error::Config(format!(
                "component {i} out of range (k = {})",
                self.k()
            )));
        }
        if self.dim() != NUM_PRIMES {
            return Err(Error::Dimension {
                expected: NUM_PRIMES,
                got: self.dim(),
            });
        }
        Ok(PrimeBasis
            .iter()
            .zip(self.components.row(i).iter().copied())
            .collect())
    }

    /// `p,pc1,...,pck`, one row per prime.
    pub fn write_weights_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let per: Vec<Vec<(u32, f64)>> = (0..self.k())
            .map(|i| self.component_weights(i))
            .collect::<Result<_>>()?;
        let header: Vec<String> = (1..=self.k()).map(|i| format!("pc{i}")).collect();
        writeln!(w, "p,{}", header.join(","))?;
        for (j, p) in PrimeBasis.iter().enumerate() {
            let vals: Vec<String> = per.iter().map(|c| format!("{:?}", c[j].1)).collect();
            writeln!(w, "{p},{}", vals.join(","))?;
        }
        Ok(())
    }
}

/// Parses a weights CSV into one `(prime, weight)` list per component.
pub fn read_weights_csv<R: Read>(reader: R) -> Result<Vec<Vec<(u32, f64)>>> {
    let bad = |row: usize, msg: &str| Error::Parse {
        row,
        column: "*".into(),
        message: msg.into(),
    };
    let mut lines = BufReader::new(reader).lines();
    let header = lines.next().transpose()?.ok_or_else(|| bad(0, "empty"))?;
    let k = header.split(',').count().saturating_sub(1);
    if !header.starts_with("p,") || k == 0 {
        return Err(bad(0, "expected p,pc1,..."));
    }
    let mut out = vec![Vec::with_capacity(NUM_PRIMES); k];
    for (row, line) in lines.enumerate() {
        let line = line?;
        let mut cells = line.split(',');
        let p = cells
            .next()
            .and_then(|c| c.parse::<u32>().ok())
            .ok_or_else(|| bad(row + 1, "bad prime"))?;
        let vals: Vec<f64> = cells
            .map(|c| c.parse::<f64>().map_err(|_| bad(row + 1, "bad weight")))
            .collect::<Result<_>>()?;
        if vals.len() != k {
            return Err(bad(row + 1, "wrong number of weights"));
        }
        for (c, v) in out.iter_mut().zip(vals) {
            c.push((p, v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffgen::{synth_pointcloud, SynthSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_axis(m: usize, axis: usize) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let mut r = vec![0.25; m];
                r[axis] = i as f64 - 1.5;
                r
            })
            .collect();
        DenseMatrix::from_rows(&rows, m).unwrap()
    }

    #[test]
    fn single_axis_fixture() {
        let model = fit_pca(&single_axis(168, 7), 2).unwrap();
        assert_eq!(model.explained_ratio[0], 1.0);
        let w = model.component_weights(0).unwrap();
        assert_eq!(w[7], (19, 1.0));
        assert!(w.iter().enumerate().all(|(j, &(_, v))| j == 7 || v == 0.0));
        let sumsq: f64 = w.iter().map(|(_, v)| v * v).sum();
        assert!((sumsq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let x = DenseMatrix::from_rows(&rows, 5).unwrap();
        let model = fit_pca(&x, 3).unwrap();
        assert!(model
            .project(&model.mean)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let shifted: Vec<f64> = model
            .mean
            .iter()
            .zip(model.components.row(0))
            .map(|(a, b)| a + b)
            .collect();
        let z = model.project(&shifted).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-12 && z[1].abs() < 1e-12 && z[2].abs() < 1e-12);
        let batch = model.project_rows(&x).unwrap();
        for i in 0..x.rows() {
            assert_eq!(batch.row(i), &model.project(x.row(i)).unwrap()[..]);
        }
        assert!(model.project(&[0.0; 4]).is_err());
        assert!(model.component_weights(0).is_err());
        assert!(fit_pca(&x, 0).is_err() && fit_pca(&x, 6).is_err());
    }

    #[test]
    fn full_rank_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let x = DenseMatrix::from_rows(&rows, 6).unwrap();
        let model = fit_pca(&x, 6).unwrap();
        assert!((model.explained_ratio.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for r in &rows {
            let back = model.reconstruct(&model.project(r).unwrap()).unwrap();
            assert!(back.iter().zip(r).all(|(a, b)| (a - b).abs() <= 1e-8));
        }
    }

    #[test]
    fn stretched_axis_dominates() {
        let spec = SynthSpec {
            means: vec![vec![0.0; 4], vec![0.0; 4]],
            sigma: 1.0,
            per_class: 500,
            seed: 7,
        };
        let (x, _) = synth_pointcloud(&spec).unwrap();
        let mut x = x;
        for i in 0..x.rows() {
            x.row_mut(i)[2] *= 1e4;
        }
        let model = fit_pca(&x, 1).unwrap();
        let c = model.components.row(0);
        let angle = c[2].abs().min(1.0).acos();
        assert!(angle < 1e-3, "{angle}");
    }

    #[test]
    fn weights_csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..168).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let model = fit_pca(&DenseMatrix::from_rows(&rows, 168).unwrap(), 2).unwrap();
        let mut out = Vec::new();
        model.write_weights_csv(&mut out).unwrap();
        let back = read_weights_csv(out.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (i, w) in back.iter().enumerate() {
            assert_eq!(w, &model.component_weights(i).unwrap());
        }
    }
}
