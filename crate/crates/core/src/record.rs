//! The per-L-function data model: the fixed prime index set, origin tags,
//! and a single record with its integer Dirichlet coefficients.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Number of primes below 1000.
pub const NUM_PRIMES: usize = 168;

/// The ascending primes `2, 3, 5, ..., 997` that index every coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrimeBasis;

impl PrimeBasis {
    pub fn primes(&self) -> &'static [u32; NUM_PRIMES] {
        static PRIMES: OnceLock<[u32; NUM_PRIMES]> = OnceLock::new();
        PRIMES.get_or_init(|| {
            let mut out = [0u32; NUM_PRIMES];
            let mut n = 0;
            for p in 2..1000u32 {
                if is_prime(p as u64) {
                    out[n] = p;
                    n += 1;
                }
            }
            assert_eq!(n, NUM_PRIMES);
            out
        })
    }

    pub fn len(&self) -> usize {
        NUM_PRIMES
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of `p` in the basis, if it is a prime below 1000.
    pub fn index_of(&self, p: u32) -> Option<usize> {
        self.primes().binary_search(&p).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.primes().iter().copied()
    }
}

/// Trial division; only ever called on small integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Object type in the source database that gives rise to an L-function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    #[serde(rename = "CMF")]
    Cmf,
    #[serde(rename = "ECQ")]
    Ecq,
    #[serde(rename = "ART")]
    Art,
    #[serde(rename = "ECNF")]
    Ecnf,
    #[serde(rename = "BMF")]
    Bmf,
    #[serde(rename = "HMF")]
    Hmf,
    #[serde(rename = "DIR")]
    Dir,
    #[serde(rename = "G2Q")]
    G2q,
}

impl Origin {
    pub const ALL: [Origin; 8] = [
        Origin::Cmf,
        Origin::Ecq,
        Origin::Art,
        Origin::Ecnf,
        Origin::Bmf,
        Origin::Hmf,
        Origin::Dir,
        Origin::G2q,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Origin::Cmf => "CMF",
            Origin::Ecq => "ECQ",
            Origin::Art => "ART",
            Origin::Ecnf => "ECNF",
            Origin::Bmf => "BMF",
            Origin::Hmf => "HMF",
            Origin::Dir => "DIR",
            Origin::G2q => "G2Q",
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownOrigin(pub String);

impl fmt::Display for UnknownOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown origin tag {:?}", self.0)
    }
}

impl std::error::Error for UnknownOrigin {}

impl FromStr for Origin {
    type Err = UnknownOrigin;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Origin::ALL
            .into_iter()
            .find(|o| o.tag() == s)
            .ok_or_else(|| UnknownOrigin(s.to_string()))
    }
}

/// A subset of [`Origin`] tags, iterated in canonical tag order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct OriginSet(u8);

impl OriginSet {
    pub const EMPTY: OriginSet = OriginSet(0);

    pub fn contains(self, o: Origin) -> bool {
        self.0 & o.bit() != 0
    }

    pub fn insert(&mut self, o: Origin) {
        self.0 |= o.bit();
    }

    pub fn with(mut self, o: Origin) -> Self {
        self.insert(o);
        self
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn intersects(self, other: OriginSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_superset(self, other: OriginSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn iter(self) -> impl Iterator<Item = Origin> {
        Origin::ALL.into_iter().filter(move |o| self.contains(*o))
    }
}

impl FromIterator<Origin> for OriginSet {
    fn from_iter<I: IntoIterator<Item = Origin>>(iter: I) -> Self {
        let mut s = OriginSet::EMPTY;
        for o in iter {
            s.insert(o);
        }
        s
    }
}

/// Semicolon-joined tags, e.g. `CMF;ECQ`. Empty set is the empty string.
impl fmt::Display for OriginSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, o) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            f.write_str(o.tag())?;
        }
        Ok(())
    }
}

impl FromStr for OriginSet {
    type Err = UnknownOrigin;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Ok(OriginSet::EMPTY);
        }
        s.split(';').map(Origin::from_str).collect()
    }
}

impl Serialize for OriginSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for OriginSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let tags = Vec::<String>::deserialize(deserializer)?;
        tags.iter()
            .map(|t| Origin::from_str(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// One rational L-function: metadata plus `a_p` for every prime below 1000,
/// in the arithmetic normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LFunctionRecord {
    pub label: String,
    pub degree: u32,
    pub weight: u32,
    pub conductor: u64,
    pub order: u32,
    pub origins: OriginSet,
    pub ap: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// Coefficient vector has the wrong number of entries.
    Length {
        got: usize,
    },
    /// `|a_p| > d * p^(w/2)` at this prime.
    Bound {
        prime: u32,
        value: i64,
    },
    Degree,
    Conductor,
    Label,
}

impl Violation {
    /// Bound violations can be legitimate oddities in external exports; every
    /// other violation makes the record unusable.
    pub fn is_structural(&self) -> bool {
        !matches!(self, Violation::Bound { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { got } => {
                write!(f, "length: expected {NUM_PRIMES} coefficients, got {got}")
            }
            Violation::Bound { prime, value } => {
                write!(f, "bound: a_{prime} = {value} exceeds d*p^(w/2)")
            }
            Violation::Degree => f.write_str("degree: must be positive"),
            Violation::Conductor => f.write_str("conductor: must be positive"),
            Violation::Label => f.write_str("label: must be nonempty [A-Za-z0-9._-]"),
        }
    }
}

pub fn is_valid_label(label: &str) -> bool {
    !label.is_empty()
        && label
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'))
}

/// Exact test of `a^2 <= d^2 * p^w`. Overflowing bounds are treated as satisfied.
pub fn within_bound(a: i64, degree: u32, weight: u32, p: u32) -> bool {
    let lhs = (a as i128 * a as i128) as u128;
    let rhs = (p as u128)
        .checked_pow(weight)
        .and_then(|pw| pw.checked_mul(degree as u128 * degree as u128));
    match rhs {
        Some(rhs) => lhs <= rhs,
        None => true,
    }
}

/// All invariant violations of `record` against the basis. Empty means valid.
pub fn validate(record: &LFunctionRecord, basis: &PrimeBasis) -> Vec<Violation> {
    let mut out = Vec::new();
    if !is_valid_label(&record.label) {
        out.push(Violation::Label);
    }
    if record.degree == 0 {
        out.push(Violation::Degree);
    }
    if record.conductor == 0 {
        out.push(Violation::Conductor);
    }
    if record.ap.len() != basis.len() {
        out.push(Violation::Length {
            got: record.ap.len(),
        });
        return out;
    }
    for (p, &a) in basis.iter().zip(record.ap.iter()) {
        if !within_bound(a, record.degree, record.weight, p) {
            out.push(Violation::Bound { prime: p, value: a });
        }
    }
    out
}

impl LFunctionRecord {
    pub fn validate(&self) -> Vec<Violation> {
        validate(self, &PrimeBasis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(degree: u32, weight: u32, ap: Vec<i64>) -> LFunctionRecord {
        LFunctionRecord {
            label: "t.1".into(),
            degree,
            weight,
            conductor: 1,
            order: 0,
            origins: OriginSet::EMPTY,
            ap,
        }
    }

    #[test]
    fn basis_shape() {
        let p = PrimeBasis.primes();
        assert_eq!(p.len(), 168);
        assert_eq!(p[0], 2);
        assert_eq!(p[167], 997);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.iter().all(|&q| is_prime(q as u64)));
        assert_eq!(PrimeBasis.index_of(11), Some(4));
        assert_eq!(PrimeBasis.index_of(12), None);
    }

    #[test]
    fn dirichlet_character_is_valid() {
        let ap = (0..168).map(|i| [-1, 0, 1][i % 3]).collect();
        assert!(validate(&record(1, 0, ap), &PrimeBasis).is_empty());
    }

    #[test]
    fn bound_violation_names_prime() {
        // 4 * sqrt(2) ~ 5.66
        let mut ap = vec![0; 168];
        ap[0] = 12;
        let v = validate(&record(4, 1, ap.clone()), &PrimeBasis);
        assert_eq!(
            v,
            vec![Violation::Bound {
                prime: 2,
                value: 12
            }]
        );
        ap[0] = 5;
        assert!(validate(&record(4, 1, ap.clone()), &PrimeBasis).is_empty());
        ap[0] = -6;
        assert_eq!(validate(&record(4, 1, ap), &PrimeBasis).len(), 1);
    }

    #[test]
    fn saturated_bound_is_valid() {
        // d = 2, w = 2: bound is exactly 2p.
        let ap = PrimeBasis.iter().map(|p| 2 * p as i64).collect();
        assert!(validate(&record(2, 2, ap), &PrimeBasis).is_empty());
    }

    #[test]
    fn short_coefficients() {
        let v = validate(&record(1, 0, vec![0; 167]), &PrimeBasis);
        assert_eq!(v, vec![Violation::Length { got: 167 }]);
        assert!(v[0].to_string().starts_with("length"));
    }

    #[test]
    fn origin_set_text() {
        let s: OriginSet = "ECQ;CMF".parse().unwrap();
        assert_eq!(s.to_string(), "CMF;ECQ");
        assert_eq!("".parse::<OriginSet>().unwrap(), OriginSet::EMPTY);
        assert!("CMF;XYZ".parse::<OriginSet>().is_err());
        assert!("CMF;".parse::<OriginSet>().is_err());
    }

    #[test]
    fn labels() {
        assert!(is_valid_label("2-11-11.10-c1-0-0"));
        assert!(!is_valid_label("a,b"));
        assert!(!is_valid_label(""));
    }
}
