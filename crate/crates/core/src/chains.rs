//! Singular chains with exact rational coefficients: boundary, face
//! incidence, ℓ¹ norm and the chain-level χ bound.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::gaussbonnet::{TheoremBudget, BUDGET_EPS};

pub type Coeff = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbstractSimplex {
    pub id: String,
    pub labels: Vec<String>,
}

impl AbstractSimplex {
    pub fn new(id: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() || labels.is_empty() {
            return Err(GeomError::InvalidInput(format!("vertex labels must be distinct and nonempty: {labels:?}")));
        }
        Ok(Self { id: id.into(), labels })
    }

    /// Simplex named after its labels, e.g. `[a,b,c]`.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        Self::new(format!("[{}]", labels.join(",")), labels)
    }

    pub fn dim(&self) -> usize {
        self.labels.len() - 1
    }

    /// Sorted labels and the sign of the sorting permutation.
    pub fn canonical(&self) -> (Vec<String>, i8) {
        let mut idx: Vec<usize> = (0..self.labels.len()).collect();
        idx.sort_by(|&a, &b| self.labels[a].cmp(&self.labels[b]));
        (idx.iter().map(|&i| self.labels[i].clone()).collect(), permutation_sign(&idx))
    }

    /// Faces with their boundary signs `(-1)^i`, face `i` omitting vertex `i`.
    pub fn boundary_faces(&self) -> Vec<(i8, AbstractSimplex)> {
        if self.labels.len() < 2 {
            return Vec::new();
        }
        (0..self.labels.len())
            .map(|i| {
                let mut l = self.labels.clone();
                l.remove(i);
                let sign = if i % 2 == 0 { 1 } else { -1 };
                (sign, AbstractSimplex::from_labels(&l).expect("subset of distinct labels"))
            })
            .collect()
    }
}

pub fn permutation_sign(p: &[usize]) -> i8 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1i8;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SingularChain {
    pub terms: Vec<(Coeff, AbstractSimplex)>,
}

impl SingularChain {
    pub fn new(terms: Vec<(Coeff, AbstractSimplex)>) -> Self {
        Self { terms }.normalized()
    }

    pub fn single(c: Coeff, s: AbstractSimplex) -> Self {
        Self::new(vec![(c, s)])
    }

    /// Merge terms with equal ids (first occurrence fixes the order) and drop zeros.
    pub fn normalized(&self) -> Self {
        let mut order: Vec<AbstractSimplex> = Vec::new();
        let mut acc: HashMap<String, Coeff> = HashMap::new();
        for (c, s) in &self.terms {
            match acc.get_mut(&s.id) {
                Some(a) => *a += c,
                None => {
                    acc.insert(s.id.clone(), c.clone());
                    order.push(s.clone());
                }
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|s| {
                let c = acc.remove(&s.id).expect("inserted above");
                (!c.is_zero()).then_some((c, s))
            })
            .collect();
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.normalized().terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Alternating face expansion; faces are stored with sorted labels and the
/// permutation sign folded into the coefficient.
pub fn boundary(c: &SingularChain) -> SingularChain {
    let mut terms = Vec::new();
    for (a, s) in &c.terms {
        for (sign, f) in s.boundary_faces() {
            let (labels, parity) = f.canonical();
            let face = AbstractSimplex::from_labels(&labels).expect("distinct labels");
            let k = BigRational::from_integer(BigInt::from(sign * parity));
            terms.push((a * k, face));
        }
    }
    SingularChain::new(terms)
}

pub fn l1_norm(c: &SingularChain) -> Coeff {
    c.normalized().terms.iter().fold(Coeff::zero(), |acc, (a, _)| acc + a.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceIncidence {
    /// `epsilon[j][i]`: +1 if `τ_j` is a face of `σ_i` with the induced
    /// orientation, -1 if with the opposite one, 0 if not a face.
    pub epsilon: Vec<Vec<i8>>,
    /// Codimension-one faces in sorted-label orientation, in first-seen order.
    pub distinct_faces: Vec<AbstractSimplex>,
    pub b: Vec<Coeff>,
}

pub fn face_incidence(c: &SingularChain) -> FaceIncidence {
    let c = c.normalized();
    let mut index: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut faces = Vec::new();
    let mut entries: Vec<(usize, usize, i8)> = Vec::new();
    for (i, (_, s)) in c.terms.iter().enumerate() {
        for (sign, f) in s.boundary_faces() {
            let (labels, parity) = f.canonical();
            let j = *index.entry(labels.clone()).or_insert_with(|| {
                faces.push(AbstractSimplex::from_labels(&labels).expect("distinct labels"));
                faces.len() - 1
            });
            entries.push((j, i, sign * parity));
        }
    }
    let mut epsilon = vec![vec![0i8; c.terms.len()]; faces.len()];
    for (j, i, e) in entries {
        epsilon[j][i] = e;
    }
    let b = epsilon
        .iter()
        .map(|row| {
            row.iter()
                .zip(&c.terms)
                .fold(Coeff::zero(), |acc, (&e, (a, _))| acc + a * BigRational::from_integer(BigInt::from(e)))
        })
        .collect();
    FaceIncidence { epsilon, distinct_faces: faces, b }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiBound {
    pub chi_abs_upper: f64,
    pub eleven_times_l1: f64,
    pub l1: f64,
    pub within: bool,
}

/// `Σ |a_i| (1 + vertex_i + two_face_i)` against `11 ‖c‖`.
///
/// The products are formed exactly (every `f64` is a rational) and only
/// the final sums are rounded.
pub fn chi_bound(c: &SingularChain, budgets: &HashMap<String, TheoremBudget>) -> Result<ChiBound> {
    let c = c.normalized();
    let mut upper = Coeff::zero();
    for (a, s) in &c.terms {
        let b = budgets.get(&s.id).ok_or_else(|| GeomError::MissingBudget(s.id.clone()))?;
        let factor = 1.0 + b.vertex_term + b.two_face_term;
        let factor = BigRational::from_float(factor)
            .ok_or_else(|| GeomError::InvalidInput(format!("non-finite budget for {}", s.id)))?;
        upper += a.abs() * factor;
    }
    let l1 = l1_norm(&c);
    let eleven = &l1 * BigRational::from_integer(BigInt::from(11));
    let to_f = |q: &Coeff| q.to_f64().unwrap_or(f64::NAN);
    let chi_abs_upper = to_f(&upper);
    let eleven_times_l1 = to_f(&eleven);
    Ok(ChiBound {
        chi_abs_upper,
        eleven_times_l1,
        l1: to_f(&l1),
        within: chi_abs_upper <= eleven_times_l1 + BUDGET_EPS * to_f(&l1).max(1.0),
    })
}

/// Parse `3`, `-1/2` or a finite decimal such as `0.25` into an exact rational.
pub fn parse_coeff(s: &str) -> Result<Coeff> {
    let s = s.trim();
    let bad = || GeomError::InvalidInput(format!("bad coefficient {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(n));
    }
    // decimal: shift the point out exactly
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if !frac.chars().all(|ch| ch.is_ascii_digit()) || !int.chars().all(|ch| ch.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let q = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    Ok(if neg { -q } else { q })
}

/// Two copies of one 4-simplex with coefficients 1 and -1; a cycle whose
/// terms stay distinct under normalization.
pub fn double_simplex() -> SingularChain {
    let labels: Vec<String> = (0..5).map(|i| format!("v{i}")).collect();
    SingularChain::new(vec![
        (Coeff::from_integer(1.into()), AbstractSimplex::new("upper", labels.clone()).unwrap()),
        (Coeff::from_integer((-1).into()), AbstractSimplex::new("lower", labels).unwrap()),
    ])
}

/// Boundary of the `(k+1)`-simplex on the given labels: a `k`-cycle.
pub fn sphere_cycle<S: AsRef<str>>(labels: &[S]) -> Result<SingularChain> {
    let top = AbstractSimplex::from_labels(labels)?;
    Ok(boundary(&SingularChain::single(Coeff::from_integer(1.into()), top)))
}
