//! Coefficient normalizations, feature vectors, Mestre–Nagao sums, and
//! per-order average tables ("murmurations").

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{pairwise_sum, DenseMatrix};
use crate::record::{LFunctionRecord, PrimeBasis, NUM_PRIMES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `a_p / p^((w-1)/2)`, bounded by `d sqrt(p)`.
    Atilde,
    /// `a_p / (d p^(w/2))`, bounded by 1.
    Abar,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atilde" => Ok(Normalization::Atilde),
            "abar" => Ok(Normalization::Abar),
            _ => Err(Error::Config(format!(
                "unknown normalization {s:?} (atilde|abar)"
            ))),
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Atilde => "atilde",
            Normalization::Abar => "abar",
        })
    }
}

/// `p^(k/2)`. Integer powers are exact and odd exponents go through a single
/// correctly rounded `sqrt`, so bound-saturating coefficients normalize to
/// exactly 1.
pub fn half_power(p: u32, k: i32) -> f64 {
    let p = p as f64;
    let whole = p.powi(k.div_euclid(2));
    if k.rem_euclid(2) == 1 {
        whole * p.sqrt()
    } else {
        whole
    }
}

/// Per-prime divisors for one `(normalization, d, w)` triple.
fn divisors(norm: Normalization, degree: u32, weight: u32) -> Vec<f64> {
    PrimeBasis
        .iter()
        .map(|p| match norm {
            Normalization::Atilde => half_power(p, weight as i32 - 1),
            Normalization::Abar => degree as f64 * half_power(p, weight as i32),
        })
        .collect()
}

/// Memoizes divisor rows keyed by `(normalization, d, w)`.
#[derive(Debug, Default)]
pub struct ScaleCache {
    rows: HashMap<(Normalization, u32, u32), Vec<f64>>,
}

impl ScaleCache {
    pub fn normalize(&mut self, norm: Normalization, r: &LFunctionRecord) -> Vec<f64> {
        let div = self
            .rows
            .entry((norm, r.degree, r.weight))
            .or_insert_with(|| divisors(norm, r.degree, r.weight));
        r.ap.iter()
            .zip(div.iter())
            .map(|(&a, d)| a as f64 / d)
            .collect()
    }
}

/// 168 reals aligned with [`PrimeBasis`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl std::ops::Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn normalize(r: &LFunctionRecord, norm: Normalization) -> FeatureVector {
    let div = divisors(norm, r.degree, r.weight);
    FeatureVector(r.ap.iter().zip(&div).map(|(&a, d)| a as f64 / d).collect())
}

pub fn atilde(r: &LFunctionRecord) -> FeatureVector {
    normalize(r, Normalization::Atilde)
}

pub fn abar(r: &LFunctionRecord) -> FeatureVector {
    normalize(r, Normalization::Abar)
}

/// Rows are the normalized coefficient vectors of the records, in order.
pub fn feature_matrix(ds: &Dataset, norm: Normalization) -> DenseMatrix {
    let mut cache = ScaleCache::default();
    let mut data = Vec::with_capacity(ds.len() * NUM_PRIMES);
    for r in ds.iter() {
        data.extend(cache.normalize(norm, r));
    }
    DenseMatrix::from_vec(ds.len(), NUM_PRIMES, data).expect("normalized coefficients are finite")
}

/// The `n x 168` pointcloud of `abar` vectors.
pub fn pointcloud(ds: &Dataset) -> DenseMatrix {
    feature_matrix(ds, Normalization::Abar)
}

/// `S(B) = (1 / log B) * sum_{p < B} a_p log(p) / p` over basis primes, with
/// arithmetically normalized `a_p`. Requires `2 < B <= 1000`.
pub fn mestre_nagao(r: &LFunctionRecord, bound: f64) -> Result<f64> {
    if !(bound > 2.0 && bound <= 1000.0) {
        return Err(Error::Config(format!(
            "Mestre-Nagao bound {bound} outside (2, 1000]"
        )));
    }
    let mut sum = 0.0;
    for (p, &a) in PrimeBasis.iter().zip(&r.ap) {
        if (p as f64) >= bound {
            break;
        }
        let p = p as f64;
        sum += a as f64 * p.ln() / p;
    }
    Ok(sum / bound.ln())
}

/// Mean normalized coefficient per prime and vanishing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MurmurationTable {
    pub normalization: Normalization,
    /// Ascending orders present in the input.
    pub classes: Vec<u32>,
    pub counts: Vec<usize>,
    /// `means[prime_index][class_index]`.
    pub means: Vec<Vec<f64>>,
}

impl MurmurationTable {
    pub fn build(ds: &Dataset, norm: Normalization) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::Empty);
        }
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in ds.iter().enumerate() {
            groups.entry(r.order).or_default().push(i);
        }
        let x = feature_matrix(ds, norm);
        let classes: Vec<u32> = groups.keys().copied().collect();
        let counts: Vec<usize> = groups.values().map(Vec::len).collect();
        let mut means = vec![vec![0.0; classes.len()]; NUM_PRIMES];
        let mut column = Vec::new();
        for (c, rows) in groups.values().enumerate() {
            for (j, row) in means.iter_mut().enumerate() {
                column.clear();
                column.extend(rows.iter().map(|&i| x[(i, j)]));
                row[c] = pairwise_sum(&column) / rows.len() as f64;
            }
        }
        Ok(MurmurationTable {
            normalization: norm,
            classes,
            counts,
            means,
        })
    }

    pub fn class_index(&self, order: u32) -> Option<usize> {
        self.classes.binary_search(&order).ok()
    }

    /// The mean curve of one order across all primes.
    pub fn series(&self, order: u32) -> Option<Vec<f64>> {
        let c = self.class_index(order)?;
        Some(self.means.iter().map(|row| row[c]).collect())
    }

    /// CSV: header `p,order_<r>,...`, one row per basis prime, then
    /// `# counts: r<r>=<n>,...`. Values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("p");
        for r in &self.classes {
            header.push_str(&format!(",order_{r}"));
        }
        writeln!(w, "{header}")?;
        for (p, row) in PrimeBasis.iter().zip(&self.means) {
            let mut line = p.to_string();
            for v in row {
                line.push_str(&format!(",{v:?}"));
            }
            writeln!(w, "{line}")?;
        }
        let counts: Vec<String> = self
            .classes
            .iter()
            .zip(&self.counts)
            .map(|(r, n)| format!("r{r}={n}"))
            .collect();
        writeln!(w, "# counts: {}", counts.join(","))?;
        Ok(())
    }

    /// Parses the layout written by [`write_csv`](Self::write_csv). The
    /// normalization is not stored in the file and must be supplied.
    pub fn read_csv<R: Read>(reader: R, norm: Normalization) -> Result<Self> {
        let err = |row: usize, col: &str, msg: String| Error::Parse {
            row,
            column: col.to_string(),
            message: msg,
        };
        let mut lines = BufReader::new(reader).lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| err(0, "p", "empty file".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("p") {
            return Err(err(0, "p", "header must start with p".into()));
        }
        let classes = cols
            .map(|c| {
                c.strip_prefix("order_")
                    .and_then(|r| r.parse::<u32>().ok())
                    .ok_or_else(|| err(0, c, "expected order_<int>".into()))
            })
            .collect::<Result<Vec<u32>>>()?;
        if classes.is_empty() || !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(err(
                0,
                "*",
                "order columns must be nonempty and ascending".into(),
            ));
        }
        let mut means = Vec::with_capacity(NUM_PRIMES);
        for (i, p) in PrimeBasis.iter().enumerate() {
            let row = i + 1;
            let line = lines
                .next()
                .transpose()?
                .ok_or_else(|| err(row, "p", format!("missing row for p={p}")))?;
            let mut cells = line.split(',');
            if cells.next() != Some(p.to_string().as_str()) {
                return Err(err(row, "p", format!("expected p={p}")));
            }
            let vals = cells
                .map(|c| {
                    c.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(row, "*", format!("{c:?} is not a finite number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != classes.len() {
                return Err(err(row, "*", format!("expected {} values", classes.len())));
            }
            means.push(vals);
        }
        let row = NUM_PRIMES + 1;
        let trailer = lines
            .next()
            .transpose()?
            .ok_or_else(|| err(row, "counts", "missing counts line".into()))?;
        let body = trailer
            .strip_prefix("# counts: ")
            .ok_or_else(|| err(row, "counts", "expected '# counts: '".into()))?;
        let mut counts = Vec::with_capacity(classes.len());
        for (item, &r) in body.split(',').zip(&classes) {
            let n = item
                .strip_prefix(&format!("r{r}="))
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| err(row, "counts", format!("bad count entry {item:?}")))?;
            counts.push(n);
        }
        if counts.len() != classes.len() || body.split(',').count() != classes.len() {
            return Err(err(
                row,
                "counts",
                "count entries do not match order columns".into(),
            ));
        }
        if lines.next().transpose()?.is_some_and(|l| !l.is_empty()) {
            return Err(err(row + 1, "*", "trailing content".into()));
        }
        Ok(MurmurationTable {
            normalization: norm,
            classes,
            counts,
            means,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::OriginSet;

    fn rec(label: &str, d: u32, w: u32, order: u32, ap: Vec<i64>) -> LFunctionRecord {
        LFunctionRecord {
            label: label.into(),
            degree: d,
            weight: w,
            conductor: 1,
            order,
            origins: OriginSet::EMPTY,
            ap,
        }
    }

    fn alternating(scale: i64) -> Vec<i64> {
        (0..168)
            .map(|i| if i % 2 == 0 { scale } else { -scale })
            .collect()
    }

    #[test]
    fn atilde_weight_one_is_identity() {
        let r = rec("a", 4, 1, 0, alternating(3));
        assert_eq!(
            atilde(&r).0,
            alternating(3).iter().map(|&a| a as f64).collect::<Vec<_>>()
        );
    }

    #[test]
    fn atilde_weight_zero_scales_by_sqrt_p() {
        let ap: Vec<i64> = (0..168).map(|i| [1, 0, -1][i % 3]).collect();
        let r = rec("a", 1, 0, 0, ap.clone());
        for ((p, &a), v) in PrimeBasis.iter().zip(&ap).zip(atilde(&r).iter()) {
            let want = a as f64 * (p as f64).sqrt();
            assert!((v - want).abs() <= 1e-15 * want.abs(), "{p}: {v} vs {want}");
        }
        assert!(atilde(&rec("z", 2, 3, 0, vec![0; 168]))
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn abar_divides_by_d_sqrt_p() {
        let r = rec("a", 4, 1, 0, alternating(2));
        for ((p, &a), v) in PrimeBasis.iter().zip(&r.ap).zip(abar(&r).iter()) {
            assert!((v - a as f64 / (4.0 * (p as f64).sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn abar_saturates_at_bound() {
        for (d, w) in [(1, 0), (2, 2), (3, 4), (1, 6)] {
            let ap = PrimeBasis
                .iter()
                .map(|p| d as i64 * (p as i64).pow(w / 2))
                .collect();
            let r = rec("s", d, w, 0, ap);
            assert!(abar(&r).iter().all(|&v| v == 1.0), "d={d} w={w}");
        }
    }

    #[test]
    fn abar_is_scaled_atilde() {
        let r = rec(
            "a",
            2,
            3,
            0,
            PrimeBasis.iter().map(|p| p as i64 - 40).collect(),
        );
        let t = atilde(&r);
        for ((p, x), y) in PrimeBasis.iter().zip(abar(&r).iter()).zip(t.iter()) {
            let want = y / (2.0 * (p as f64).sqrt());
            assert!((x - want).abs() <= 1e-15 * want.abs().max(1.0));
        }
    }

    #[test]
    fn pointcloud_shapes() {
        assert_eq!(pointcloud(&Dataset::empty()).rows(), 0);
        let r = rec("a", 4, 1, 2, alternating(1));
        let ds = Dataset::new(vec![r.clone()]).unwrap();
        let x = pointcloud(&ds);
        assert_eq!((x.rows(), x.cols()), (1, 168));
        assert_eq!(x.row(0), &abar(&r).0[..]);
    }

    #[test]
    fn mestre_nagao_examples() {
        let zero = rec("z", 4, 1, 0, vec![0; 168]);
        assert_eq!(mestre_nagao(&zero, 500.0).unwrap(), 0.0);
        let mut ap = vec![0; 168];
        ap[0] = 3;
        let one = rec("o", 4, 1, 0, ap);
        let want = 3.0 * 2f64.ln() / (2.0 * 3f64.ln());
        assert!((mestre_nagao(&one, 3.0).unwrap() - want).abs() < 1e-15);
        assert!(mestre_nagao(&one, 2.0).is_err());
        assert!(mestre_nagao(&one, 1000.5).is_err());
        assert!(mestre_nagao(&one, f64::NAN).is_err());
        assert!(mestre_nagao(&one, 1000.0).is_ok());
    }

    #[test]
    fn table_single_and_pair() {
        let a = rec("a", 4, 1, 0, alternating(2));
        let b = rec("b", 4, 1, 1, alternating(-1));
        let t = MurmurationTable::build(
            &Dataset::new(vec![a.clone()]).unwrap(),
            Normalization::Atilde,
        )
        .unwrap();
        assert_eq!(t.classes, vec![0]);
        assert_eq!(t.series(0).unwrap(), atilde(&a).0);
        let t = MurmurationTable::build(
            &Dataset::new(vec![b.clone(), a.clone()]).unwrap(),
            Normalization::Abar,
        )
        .unwrap();
        assert_eq!(t.classes, vec![0, 1]);
        assert_eq!(t.counts, vec![1, 1]);
        assert_eq!(t.series(0).unwrap(), abar(&a).0);
        assert_eq!(t.series(1).unwrap(), abar(&b).0);
        assert!(MurmurationTable::build(&Dataset::empty(), Normalization::Abar).is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let ds = Dataset::new(vec![
            rec("a", 4, 1, 0, alternating(2)),
            rec("b", 4, 1, 3, alternating(-1)),
            rec("c", 4, 1, 3, alternating(1)),
        ])
        .unwrap();
        let t = MurmurationTable::build(&ds, Normalization::Atilde).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.starts_with("p,order_0,order_3\n2,"));
        assert!(text.ends_with("# counts: r0=1,r3=2\n"));
        assert_eq!(text.lines().count(), 170);
        assert_eq!(
            MurmurationTable::read_csv(out.as_slice(), Normalization::Atilde).unwrap(),
            t
        );
        assert!(MurmurationTable::read_csv(&out[..out.len() - 5], Normalization::Atilde).is_err());
        assert!(MurmurationTable::read_csv(&b"p\n"[..], Normalization::Atilde).is_err());
    }
}
