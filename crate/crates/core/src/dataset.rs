//! Validated collections of records, subset filters, and count summaries.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{validate, LFunctionRecord, Origin, OriginSet, PrimeBasis, Violation};

/// An ordered, immutable collection of records with unique labels.
///
/// Records are reference counted so filtered views share storage with the
/// dataset they came from.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    basis: PrimeBasis,
    records: Vec<Arc<LFunctionRecord>>,
}

/// A non-fatal problem found while ingesting external data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub label: String,
    pub violation: Violation,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.violation)
    }
}

impl Dataset {
    /// Builds a dataset, rejecting any record with a violation.
    pub fn new(records: Vec<LFunctionRecord>) -> Result<Self> {
        let (ds, warnings) = Self::from_external(records)?;
        if let Some(w) = warnings.into_iter().next() {
            let violations = ds
                .get(&w.label)
                .map(|r| validate(r, &ds.basis))
                .unwrap_or_else(|| vec![w.violation]);
            return Err(Error::Invalid {
                label: w.label,
                violations,
            });
        }
        Ok(ds)
    }

    /// Builds a dataset from externally sourced records. Structural violations
    /// and duplicate labels are errors; coefficient-bound violations are
    /// returned as warnings and the record is kept.
    pub fn from_external(records: Vec<LFunctionRecord>) -> Result<(Self, Vec<Warning>)> {
        let basis = PrimeBasis;
        let mut seen = HashSet::with_capacity(records.len());
        let mut warnings = Vec::new();
        let mut out = Vec::with_capacity(records.len());
        for r in records {
            let violations = validate(&r, &basis);
            if violations.iter().any(Violation::is_structural) {
                return Err(Error::Invalid {
                    label: r.label,
                    violations,
                });
            }
            if !seen.insert(r.label.clone()) {
                return Err(Error::DuplicateLabel(r.label));
            }
            warnings.extend(violations.into_iter().map(|violation| Warning {
                label: r.label.clone(),
                violation,
            }));
            out.push(Arc::new(r));
        }
        Ok((
            Dataset {
                basis,
                records: out,
            },
            warnings,
        ))
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &LFunctionRecord> + '_ {
        self.records.iter().map(|r| r.as_ref())
    }

    pub fn record(&self, i: usize) -> &LFunctionRecord {
        &self.records[i]
    }

    pub fn get(&self, label: &str) -> Option<&LFunctionRecord> {
        self.iter().find(|r| r.label == label)
    }

    pub fn orders(&self) -> Vec<u32> {
        self.iter().map(|r| r.order).collect()
    }

    pub fn filter(&self, pred: &Filter) -> Dataset {
        Dataset {
            basis: self.basis,
            records: self
                .records
                .iter()
                .filter(|r| pred.matches(r))
                .cloned()
                .collect(),
        }
    }

    /// Rows at the given positions, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            basis: self.basis,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Records whose label does not occur in `other`.
    pub fn without_labels_of(&self, other: &Dataset) -> Dataset {
        let labels: HashSet<&str> = other.iter().map(|r| r.label.as_str()).collect();
        Dataset {
            basis: self.basis,
            records: self
                .records
                .iter()
                .filter(|r| !labels.contains(r.label.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Concatenation; fails on a label present in both.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut seen: HashSet<&str> = self.iter().map(|r| r.label.as_str()).collect();
        for r in other.iter() {
            if !seen.insert(&r.label) {
                return Err(Error::DuplicateLabel(r.label.clone()));
            }
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Ok(Dataset {
            basis: self.basis,
            records,
        })
    }

    pub fn summarize(&self) -> Summary {
        Summary::of(self)
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other.iter()).all(|(a, b)| a == b)
    }
}

/// Conjunction of optional clauses. An empty filter matches everything.
///
/// Text form is a comma-separated `key=value` list:
///
/// | key          | meaning                                  |
/// |--------------|------------------------------------------|
/// | `d`          | degree equals                            |
/// | `w`          | weight equals                            |
/// | `rmax`       | order at most                            |
/// | `r`          | order equals                             |
/// | `origin`     | has any of the `\|`-separated tags       |
/// | `origin_all` | has all of the `+`-separated tags        |
///
/// e.g. `d=4,w=1,rmax=3,origin=ECNF|G2Q`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Filter {
    pub degree: Option<u32>,
    pub weight: Option<u32>,
    pub max_order: Option<u32>,
    pub exact_order: Option<u32>,
    pub origins_any: Option<OriginSet>,
    pub origins_all: Option<OriginSet>,
}

impl Filter {
    /// The degree-4, weight-1, order <= 3 subset used for every learning experiment.
    pub fn prat_star() -> Self {
        Filter {
            degree: Some(4),
            weight: Some(1),
            max_order: Some(3),
            ..Filter::default()
        }
    }

    pub fn origin(o: Origin) -> Self {
        Filter {
            origins_any: Some(OriginSet::EMPTY.with(o)),
            ..Filter::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Filter::default()
    }

    pub fn matches(&self, r: &LFunctionRecord) -> bool {
        self.degree.is_none_or(|d| r.degree == d)
            && self.weight.is_none_or(|w| r.weight == w)
            && self.max_order.is_none_or(|m| r.order <= m)
            && self.exact_order.is_none_or(|k| r.order == k)
            && self.origins_any.is_none_or(|s| r.origins.intersects(s))
            && self.origins_all.is_none_or(|s| r.origins.is_superset(s))
    }

    /// Union of clauses, or `None` when both filters constrain the same key.
    pub fn merge(&self, other: &Filter) -> Option<Filter> {
        fn pick<T: Copy>(a: Option<T>, b: Option<T>) -> Option<Option<T>> {
            match (a, b) {
                (Some(_), Some(_)) => None,
                (x, None) | (None, x) => Some(x),
            }
        }
        Some(Filter {
            degree: pick(self.degree, other.degree)?,
            weight: pick(self.weight, other.weight)?,
            max_order: pick(self.max_order, other.max_order)?,
            exact_order: pick(self.exact_order, other.exact_order)?,
            origins_any: pick(self.origins_any, other.origins_any)?,
            origins_all: pick(self.origins_all, other.origins_all)?,
        })
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut f = Filter::default();
        if s.trim().is_empty() {
            return Ok(f);
        }
        for clause in s.split(',') {
            let (key, value) = clause
                .split_once('=')
                .ok_or_else(|| Error::Filter(format!("clause {clause:?} is not key=value")))?;
            let key = key.trim();
            let value = value.trim();
            let int = || {
                value
                    .parse::<u32>()
                    .map_err(|_| Error::Filter(format!("{key}: {value:?} is not an integer")))
            };
            let tags = |sep: char| -> Result<OriginSet> {
                value
                    .split(sep)
                    .map(|t| Origin::from_str(t.trim()).map_err(|e| Error::Filter(e.to_string())))
                    .collect()
            };
            let slot_taken = match key {
                "d" => f.degree.replace(int()?).is_some(),
                "w" => f.weight.replace(int()?).is_some(),
                "rmax" => f.max_order.replace(int()?).is_some(),
                "r" => f.exact_order.replace(int()?).is_some(),
                "origin" => f.origins_any.replace(tags('|')?).is_some(),
                "origin_all" => f.origins_all.replace(tags('+')?).is_some(),
                _ => return Err(Error::Filter(format!("unknown key {key:?}"))),
            };
            if slot_taken {
                return Err(Error::Filter(format!("key {key:?} given twice")));
            }
        }
        Ok(f)
    }
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(d) = self.degree {
            parts.push(format!("d={d}"));
        }
        if let Some(w) = self.weight {
            parts.push(format!("w={w}"));
        }
        if let Some(m) = self.max_order {
            parts.push(format!("rmax={m}"));
        }
        if let Some(k) = self.exact_order {
            parts.push(format!("r={k}"));
        }
        let join =
            |s: OriginSet, sep: &str| s.iter().map(Origin::tag).collect::<Vec<_>>().join(sep);
        if let Some(s) = self.origins_any {
            parts.push(format!("origin={}", join(s, "|")));
        }
        if let Some(s) = self.origins_all {
            parts.push(format!("origin_all={}", join(s, "+")));
        }
        f.write_str(&parts.join(","))
    }
}

/// Record counts along every axis of the dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub by_order: BTreeMap<u32, usize>,
    pub by_degree: BTreeMap<u32, usize>,
    pub by_weight: BTreeMap<u32, usize>,
    pub by_origin: BTreeMap<Origin, usize>,
    /// Order counts restricted to each origin.
    pub order_by_origin: BTreeMap<Origin, BTreeMap<u32, usize>>,
    /// `intersections[a][b]` = records tagged with both `a` and `b`; diagonal
    /// equals `by_origin`. Indexed in [`Origin::ALL`] order.
    pub intersections: [[usize; 8]; 8],
    /// Exclusive intersection sizes keyed by the exact tag set.
    pub by_origin_set: BTreeMap<String, usize>,
}

impl Summary {
    pub fn of(ds: &Dataset) -> Summary {
        let mut s = Summary {
            total: ds.len(),
            ..Summary::default()
        };
        for o in Origin::ALL {
            s.by_origin.insert(o, 0);
        }
        for r in ds.iter() {
            *s.by_order.entry(r.order).or_default() += 1;
            *s.by_degree.entry(r.degree).or_default() += 1;
            *s.by_weight.entry(r.weight).or_default() += 1;
            *s.by_origin_set.entry(r.origins.to_string()).or_default() += 1;
            for a in r.origins.iter() {
                *s.by_origin.entry(a).or_default() += 1;
                *s.order_by_origin
                    .entry(a)
                    .or_default()
                    .entry(r.order)
                    .or_default() += 1;
                for b in r.origins.iter() {
                    s.intersections[a as usize][b as usize] += 1;
                }
            }
        }
        s
    }

    pub fn intersection(&self, a: Origin, b: Origin) -> usize {
        self.intersections[a as usize][b as usize]
    }

    pub fn order_count(&self, order: u32) -> usize {
        self.by_order.get(&order).copied().unwrap_or(0)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orders: Vec<u32> = self.by_order.keys().copied().collect();
        writeln!(f, "total: {}", self.total)?;
        write!(f, "{:<12}", "sub-dataset")?;
        for r in &orders {
            write!(f, "{:>10}", format!("r={r}"))?;
        }
        writeln!(f)?;
        write!(f, "{:<12}", "all")?;
        for r in &orders {
            write!(f, "{:>10}", self.by_order[r])?;
        }
        writeln!(f)?;
        for o in Origin::ALL {
            let Some(counts) = self.order_by_origin.get(&o) else {
                continue;
            };
            write!(f, "{:<12}", o.tag())?;
            for r in &orders {
                match counts.get(r) {
                    Some(c) => write!(f, "{c:>10}")?,
                    None => write!(f, "{:>10}", "")?,
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "intersections:")?;
        for (i, a) in Origin::ALL.into_iter().enumerate() {
            for b in Origin::ALL.into_iter().skip(i + 1) {
                let n = self.intersection(a, b);
                if n > 0 {
                    writeln!(f, "  {a} & {b}: {n}")?;
                }
            }
        }
        Ok(())
    }
}
