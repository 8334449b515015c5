//! Desk-scale coefficient data: elliptic curves over Q by point counting,
//! quadratic Dirichlet characters by Kronecker symbol, and seeded Gaussian
//! pointclouds for exercising the learners.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::record::{is_prime, within_bound, LFunctionRecord, Origin, OriginSet, PrimeBasis};

/// Long Weierstrass model `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeierstrassCurve {
    pub label: String,
    /// `[a1, a2, a3, a4, a6]`
    pub a: [i64; 5],
}

impl WeierstrassCurve {
    pub fn new(label: impl Into<String>, a: [i64; 5]) -> Result<Self> {
        let c = WeierstrassCurve {
            label: label.into(),
            a,
        };
        if c.discriminant() == 0 {
            return Err(Error::SingularCurve);
        }
        Ok(c)
    }

    pub fn discriminant(&self) -> i128 {
        let [a1, a2, a3, a4, a6] = self.a.map(|v| v as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    pub fn has_good_reduction(&self, p: u64) -> bool {
        self.discriminant().rem_euclid(p as i128) != 0
    }

    fn reduced(&self, p: u64) -> [u64; 5] {
        self.a.map(|v| v.rem_euclid(p as i64) as u64)
    }
}

/// Minimal models with their conductor and rank, used as fixtures.
pub fn known_curves() -> Vec<(WeierstrassCurve, u64, u32)> {
    [
        ("11a1", [0, -1, 1, -10, -20], 11, 0),
        ("14a1", [1, 0, 1, 4, -6], 14, 0),
        ("32a2", [0, 0, 0, -1, 0], 32, 0),
        ("37a1", [0, 0, 1, -1, 0], 37, 1),
        ("43a1", [0, 1, 1, 0, 0], 43, 1),
        ("53a1", [1, -1, 1, 0, 0], 53, 1),
        ("389a1", [0, 1, 1, -2, 0], 389, 2),
        ("5077a1", [0, 0, 1, -7, 6], 5077, 3),
    ]
    .into_iter()
    .map(|(l, a, n, r)| (WeierstrassCurve::new(l, a).expect("nonsingular"), n, r))
    .collect()
}

/// `a_p` of the curve at prime `p`.
///
/// Good reduction: `p + 1 - #E(F_p)`. Bad reduction: `p - #E_ns(F_p)`, where
/// `E_ns` is the nonsingular locus of the reduction (including infinity), so
/// the result is 1, -1 or 0 for split, nonsplit and additive reduction.
/// The model must be minimal at `p`.
pub fn ec_ap(curve: &WeierstrassCurve, p: u64) -> Result<i64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let c = curve.reduced(p);
    if !curve.has_good_reduction(p) {
        let ns = 1 + count_affine(&c, p, true);
        return Ok(p as i64 - ns as i64);
    }
    let n = if p <= 3 {
        1 + count_affine(&c, p, false)
    } else {
        1 + count_by_completing_square(&c, p)
    };
    Ok(p as i64 + 1 - n as i64)
}

/// Exhaustive count of affine solutions, optionally skipping singular points.
fn count_affine(c: &[u64; 5], p: u64, nonsingular_only: bool) -> u64 {
    let [a1, a2, a3, a4, a6] = *c;
    let m = |x: u64| x % p;
    let mut n = 0;
    for x in 0..p {
        let rhs = m(m(m(x * x) * x) + m(a2 * m(x * x)) + m(a4 * x) + a6);
        for y in 0..p {
            let lhs = m(m(y * y) + m(a1 * m(x * y)) + m(a3 * y));
            if lhs != rhs {
                continue;
            }
            if nonsingular_only {
                // F = lhs - rhs; F_y = 2y + a1 x + a3, F_x = a1 y - 3x^2 - 2 a2 x - a4.
                let fy = m(2 * y + m(a1 * x) + a3);
                let fx = m(m(a1 * y) + 3 * p * p - m(3 * m(x * x)) - m(2 * m(a2 * x)) - a4 + p);
                if fx == 0 && fy == 0 {
                    continue;
                }
            }
            n += 1;
        }
    }
    n
}

/// Affine count for odd `p`: `(2y + a1 x + a3)^2 = 4(x^3 + a2 x^2 + a4 x + a6) + (a1 x + a3)^2`,
/// summing the number of square roots of the right side over all `x`.
fn count_by_completing_square(c: &[u64; 5], p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = *c;
    let mut roots = vec![0u64; p as usize];
    for y in 0..p {
        roots[(y * y % p) as usize] += 1;
    }
    let mut n = 0;
    for x in 0..p {
        let cubic = (x * x % p * x + a2 * (x * x % p) + a4 * x + a6) % p;
        let lin = (a1 * x + a3) % p;
        let f = (4 * cubic + lin * lin) % p;
        n += roots[f as usize];
    }
    n
}

pub fn ec_record(curve: &WeierstrassCurve, conductor: u64, order: u32) -> Result<LFunctionRecord> {
    if conductor == 0 {
        return Err(Error::Config("conductor must be positive".into()));
    }
    let ap = PrimeBasis
        .iter()
        .map(|p| ec_ap(curve, p as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(LFunctionRecord {
        label: curve.label.clone(),
        degree: 2,
        weight: 1,
        conductor,
        order,
        origins: OriginSet::EMPTY.with(Origin::Cmf).with(Origin::Ecq),
        ap,
    })
}

fn is_squarefree(mut n: u64) -> bool {
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d * d) {
            return false;
        }
        if n.is_multiple_of(d) {
            n /= d;
        }
        d += 1;
    }
    true
}

/// `D = 1`, or `D ≡ 1 (mod 4)` squarefree, or `D = 4m` with `m ≡ 2, 3 (mod 4)` squarefree.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 0 {
        return false;
    }
    match d.rem_euclid(4) {
        1 => is_squarefree(d.unsigned_abs()),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// Jacobi symbol `(a | n)` for odd positive `n`.
fn jacobi(a: i64, n: u64) -> i64 {
    debug_assert!(n % 2 == 1);
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol `(D | p)`: the `a_p` of the quadratic character of discriminant `D`.
pub fn kronecker_ap(d: i64, p: u64) -> Result<i64> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::NotFundamental(d));
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Ok(match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        });
    }
    Ok(jacobi(d, p))
}

pub fn dirichlet_record(d: i64, order: u32) -> Result<LFunctionRecord> {
    let ap = PrimeBasis
        .iter()
        .map(|p| kronecker_ap(d, p as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(LFunctionRecord {
        label: format!("dir.{d}"),
        degree: 1,
        weight: 0,
        conductor: d.unsigned_abs(),
        order,
        origins: OriginSet::EMPTY.with(Origin::Dir),
        ap,
    })
}

/// Parameters of an isotropic Gaussian mixture with one component per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
    pub per_class: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Class `c` centred at `separation * e_(c mod dim)`.
    pub fn axis_means(classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
        (0..classes)
            .map(|c| {
                let mut m = vec![0.0; dim];
                m[c % dim] = separation;
                m
            })
            .collect()
    }

    pub fn classes(&self) -> usize {
        self.means.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn check(&self) -> Result<()> {
        if self.means.is_empty() || self.per_class == 0 {
            return Err(Error::Config(
                "need at least one class and one sample per class".into(),
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("sigma must be positive".into()));
        }
        let dim = self.dim();
        if dim == 0 || self.means.iter().any(|m| m.len() != dim) {
            return Err(Error::Config(
                "class means must share a positive dimension".into(),
            ));
        }
        Ok(())
    }
}

/// Standard normal pairs by the Box–Muller transform over a seeded ChaCha8 stream.
///
/// Each pair consumes two `f64` draws (`u1` mapped into `(0, 1]`) and yields
/// `r cos θ` then `r sin θ`.
pub struct BoxMuller {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn new(seed: u64) -> Self {
        BoxMuller {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// `classes * per_class` rows, class by class, with labels `0..classes`.
pub fn synth_pointcloud(spec: &SynthSpec) -> Result<(DenseMatrix, Vec<u32>)> {
    spec.check()?;
    let dim = spec.dim();
    let n = spec.classes() * spec.per_class;
    let mut normals = BoxMuller::new(spec.seed);
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (c, mean) in spec.means.iter().enumerate() {
        for _ in 0..spec.per_class {
            data.extend(mean.iter().map(|m| m + spec.sigma * normals.next_normal()));
            labels.push(c as u32);
        }
    }
    Ok((DenseMatrix::from_vec(n, dim, data)?, labels))
}

/// Quantizes a synthetic pointcloud in normalized-coefficient space into
/// degree-4, weight-1 records whose order is the class label.
///
/// Row values are clamped to `[-1, 1]` and scaled by `4 sqrt(p)`, truncating
/// toward zero so every coefficient respects the bound. Rows shorter than the
/// basis are zero-padded.
pub fn synth_records(spec: &SynthSpec, origins: &[OriginSet]) -> Result<Dataset> {
    let (x, labels) = synth_pointcloud(spec)?;
    let mut records = Vec::with_capacity(x.rows());
    for (i, &label) in labels.iter().enumerate() {
        let row = x.row(i);
        let ap = PrimeBasis
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let v = row.get(j).copied().unwrap_or(0.0).clamp(-1.0, 1.0);
                let mut a = (v * 4.0 * (p as f64).sqrt()).trunc() as i64;
                while !within_bound(a, 4, 1, p) {
                    a -= a.signum();
                }
                a
            })
            .collect();
        records.push(LFunctionRecord {
            label: format!("synth.{label}.{i}"),
            degree: 4,
            weight: 1,
            conductor: 1,
            order: label,
            origins: if origins.is_empty() {
                OriginSet::EMPTY
            } else {
                origins[i % origins.len()]
            },
            ap,
        });
    }
    Dataset::new(records)
}
