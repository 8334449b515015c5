//! Small dense linear algebra: row-major matrices, covariance, cyclic Jacobi
//! eigendecomposition of symmetric matrices, and Cholesky factorization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Rows must share a length; an empty slice gives a `0 x cols` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    pub fn scale(&self, c: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (i + 1..self.cols).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Pairwise (tree) summation; the result depends only on the slice contents
/// and order, with error growth O(log n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Unbiased sample covariance `(X - mean)^T (X - mean) / (n - 1)`.
pub fn covariance(x: &DenseMatrix) -> Result<DenseMatrix> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let m = x.cols();
    let mean = x.column_means();
    let mut s = DenseMatrix::zeros(m, m);
    let mut centered = vec![0.0; m];
    for i in 0..n {
        for ((c, v), mu) in centered.iter_mut().zip(x.row(i)).zip(&mean) {
            *c = v - mu;
        }
        for a in 0..m {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            let row = &mut s.data[a * m..(a + 1) * m];
            for b in a..m {
                row[b] += ca * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..m {
        for b in a..m {
            let v = s[(a, b)] / denom;
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    Ok(s)
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, eigenvectors as
/// the matching columns of an orthonormal matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the largest off-diagonal entry is at most
/// `1e-12 * ||S||_F`, or `JACOBI_MAX_SWEEPS` sweeps.
///
/// Eigenpairs are sorted by descending eigenvalue (stable, so ties keep
/// diagonal order), and each eigenvector is flipped so that its
/// largest-magnitude entry (first on ties) is positive.
pub fn sym_eigen(s: &DenseMatrix) -> Result<SymEigen> {
    if s.rows() != s.cols() {
        return Err(Error::NotSymmetric);
    }
    if s.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !s.is_symmetric(1e-10 * (1.0 + s.max_abs())) {
        return Err(Error::NotSymmetric);
    }
    let n = s.rows();
    let mut a = s.clone();
    // Work on the exactly symmetric part.
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let tol = 1e-12 * s.frobenius();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max(a[(i, j)].abs()));
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let np = c * arp - sn * arq;
                    let nq = sn * arp + c * arq;
                    a[(r, p)] = np;
                    a[(p, r)] = np;
                    a[(r, q)] = nq;
                    a[(q, r)] = nq;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - sn * vrq;
                    v[(r, q)] = sn * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        let mut lead = 0;
        for (k, x) in col.iter().enumerate() {
            if x.abs() > col[lead].abs() {
                lead = k;
            }
        }
        if col.get(lead).is_some_and(|&x| x < 0.0) {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in col.into_iter().enumerate() {
            vectors[(r, dst)] = x;
        }
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Lower-triangular `L` with `S + ridge * I = L L^T`.
pub fn cholesky(s: &DenseMatrix, ridge: f64) -> Result<DenseMatrix> {
    if s.rows() != s.cols() || !s.is_symmetric(1e-10 * (1.0 + s.max_abs())) {
        return Err(Error::NotSymmetric);
    }
    if ridge.is_nan() || ridge < 0.0 {
        return Err(Error::Config("ridge must be non-negative".into()));
    }
    let n = s.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = s[(j, j)] + ridge;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d.is_nan() || d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut x = s[(i, j)];
            for k in 0..j {
                x -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = x / d;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut x = y[i];
        for k in 0..i {
            x -= l[(i, k)] * y[k];
        }
        y[i] = x / l[(i, i)];
    }
    y
}

/// Solves `L^T x = y` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        let mut v = x[i];
        for k in i + 1..n {
            v -= l[(k, i)] * x[k];
        }
        x[i] = v / l[(i, i)];
    }
    x
}

/// Solves `(L L^T) x = b`.
pub fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    solve_lower_transpose(l, &solve_lower(l, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows, rows[0].len()).unwrap()
    }

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    #[test]
    fn covariance_by_hand() {
        let s = covariance(&m(&[&[0.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(s, m(&[&[2.0, 0.0], &[0.0, 0.0]]));
        let same = covariance(&m(&[&[1.0, 3.0], &[1.0, 3.0], &[1.0, 3.0]])).unwrap();
        assert!(same.data().iter().all(|&v| v == 0.0));
        assert!(covariance(&m(&[&[1.0]])).is_err());
    }

    #[test]
    fn covariance_duplicate_column() {
        let x = m(&[
            &[1.0, 1.0, 0.5],
            &[2.0, 2.0, -1.0],
            &[4.0, 4.0, 3.0],
            &[0.0, 0.0, 1.0],
        ]);
        let s = covariance(&x).unwrap();
        for j in 0..3 {
            assert_eq!(s[(0, j)], s[(1, j)]);
            assert_eq!(s[(j, 0)], s[(j, 1)]);
        }
        let e = sym_eigen(&s).unwrap();
        assert!(e.eigenvalues[2].abs() < 1e-12);
    }

    #[test]
    fn eigen_diagonal() {
        let s = m(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let e = sym_eigen(&s).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vector(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vector(1), vec![0.0, 0.0, 1.0]);
        assert_eq!(e.vector(2), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn eigen_two_by_two_closed_form() {
        let e = sym_eigen(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        // (tr ± sqrt(tr^2 - 4 det)) / 2 with tr = 4, det = 3
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        assert!((v0[0] - h).abs() < 1e-14 && (v0[1] - h).abs() < 1e-14);
    }

    #[test]
    fn eigen_invariants_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 5, 8, 13] {
            let s = random_symmetric(n, &mut rng);
            let e = sym_eigen(&s).unwrap();
            let fro = s.frobenius();
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            let q = &e.eigenvectors;
            let qtq = q.transpose().matmul(q).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq[(i, j)] - want).abs() <= 1e-10);
                }
                let qi = e.vector(i);
                let sq = s.matvec(&qi).unwrap();
                let r: Vec<f64> = sq
                    .iter()
                    .zip(&qi)
                    .map(|(a, b)| a - e.eigenvalues[i] * b)
                    .collect();
                assert!(norm(&r) <= 1e-8 * (1.0 + fro));
            }
            let tr = s.trace();
            assert!((e.eigenvalues.iter().sum::<f64>() - tr).abs() <= 1e-8 * (1.0 + tr.abs()));
        }
    }

    #[test]
    fn eigen_rejects_bad_input() {
        assert!(matches!(
            sym_eigen(&m(&[&[1.0, 2.0], &[0.0, 1.0]])),
            Err(Error::NotSymmetric)
        ));
        let mut s = DenseMatrix::identity(2);
        s[(0, 0)] = f64::NAN;
        assert!(matches!(sym_eigen(&s), Err(Error::NonFinite)));
        assert!(sym_eigen(&DenseMatrix::zeros(2, 3)).is_err());
        let z = sym_eigen(&DenseMatrix::zeros(3, 3)).unwrap();
        assert_eq!(z.eigenvalues, vec![0.0; 3]);
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(
            cholesky(&DenseMatrix::identity(3), 0.0).unwrap(),
            DenseMatrix::identity(3)
        );
        assert_eq!(
            cholesky(&DenseMatrix::zeros(2, 2), 1.0).unwrap(),
            DenseMatrix::identity(2)
        );
        let l = cholesky(&m(&[&[4.0, 2.0], &[2.0, 3.0]]), 0.0).unwrap();
        assert_eq!(l[(0, 0)], 2.0);
        assert_eq!(l[(1, 0)], 1.0);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            cholesky(&m(&[&[1.0, 2.0], &[2.0, 1.0]]), 0.0),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_reconstructs_and_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 12;
        let mut b = DenseMatrix::zeros(n, n);
        b.data
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-1.0..1.0));
        let s = b.transpose().matmul(&b).unwrap();
        let ridge = 0.25;
        let l = cholesky(&s, ridge).unwrap();
        let llt = l.matmul(&l.transpose()).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = s[(i, j)] + if i == j { ridge } else { 0.0 };
                assert!((llt[(i, j)] - want).abs() <= 1e-10 * (1.0 + s.frobenius()));
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x = cholesky_solve(&l, &rhs);
        let mut sr = s.clone();
        for i in 0..n {
            sr[(i, i)] += ridge;
        }
        let back = sr.matvec(&x).unwrap();
        let r: Vec<f64> = back.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        assert!(norm(&r) <= 1e-8 * norm(&rhs));
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1001).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
