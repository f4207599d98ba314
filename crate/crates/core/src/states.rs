//! Complex vector kernel: scalar products, rank-1 projectors and the unique
//! completion of `d-1` orthonormal vectors to a basis.

use std::ops::Index;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64, MAX_DIM};

/// Tolerance on orthonormality of inputs to [`complete_basis`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Components below this modulus are treated as zero when fixing the phase.
pub const PHASE_ZERO_TOL: f64 = 1e-10;

/// A vector in `C^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVector(Vec<C64>);

impl CVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        check_dim(entries.len())?;
        Ok(Self(entries))
    }

    /// Standard basis vector `e_k` (zero-based `k`).
    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); d];
        v[k] = C64::new(1.0, 0.0);
        Self(v)
    }

    /// The all-ones vector scaled to unit norm.
    pub fn uniform(d: usize) -> Self {
        let a = 1.0 / (d as f64).sqrt();
        Self(vec![C64::new(a, 0.0); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < 1e-12
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    /// `U v` for a `d×d` matrix `U`.
    pub fn transformed(&self, u: &DMatrix<C64>) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(u.nrows(), self.dim()));
        }
        let d = self.dim();
        let out = (0..d)
            .map(|r| (0..d).map(|c| u[(r, c)] * self.0[c]).sum())
            .collect();
        Ok(Self(out))
    }

    /// Multiplies by the phase that makes the first non-negligible component
    /// real and positive.
    pub fn phase_normalized(&self) -> Self {
        match self.0.iter().find(|z| z.norm() > PHASE_ZERO_TOL) {
            Some(z) => self.scaled(z.conj() / z.norm()),
            None => self.clone(),
        }
    }
}

impl Index<usize> for CVector {
    type Output = C64;

    fn index(&self, k: usize) -> &C64 {
        &self.0[k]
    }
}

fn check_dim(d: usize) -> Result<()> {
    if (2..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// `⟨a|b⟩ = Σ conj(a_k) b_k`.
pub fn inner(a: &CVector, b: &CVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(inner_unchecked(a.entries(), b.entries()))
}

#[inline]
pub(crate) fn inner_unchecked(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Hermitian `d×d` matrix, typically a projector.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector(DMatrix<C64>);

impl Projector {
    /// `|v⟩⟨v|`.
    pub fn rank_one(v: &CVector) -> Self {
        let d = v.dim();
        Self(DMatrix::from_fn(d, d, |r, c| v[r] * v[c].conj()))
    }

    /// `I - Σ |v_j⟩⟨v_j|`.
    pub fn complement(vs: &[CVector], d: usize) -> Self {
        let mut m = DMatrix::<C64>::identity(d, d);
        for v in vs {
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] -= v[r] * v[c].conj();
                }
            }
        }
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let diff = &self.0 - self.0.adjoint();
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry of `P² - P`.
    pub fn idempotency_error(&self) -> f64 {
        let diff = &self.0 * &self.0 - &self.0;
        diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Largest entry of `G - I` where `G` is the Gram matrix of `vs`.
pub fn gram_deviation(vs: &[CVector]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in vs.iter().enumerate() {
        for (j, b) in vs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            let g = inner_unchecked(a.entries(), b.entries());
            worst = worst.max((g - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Completes `d-1` orthonormal vectors in `C^d` to a basis.
///
/// The missing vector spans the range of `I - Σ|v_j⟩⟨v_j|`; we normalize the
/// largest-norm column of that projector and make its first non-negligible
/// component real positive.
pub fn complete_basis(vs: &[CVector]) -> Result<CVector> {
    let d = vs.first().map(CVector::dim).unwrap_or(0);
    check_dim(d)?;
    if let Some(v) = vs.iter().find(|v| v.dim() != d) {
        return Err(Error::DimensionMismatch(d, v.dim()));
    }
    if vs.len() != d - 1 {
        return Err(Error::InvalidSpec(format!(
            "basis completion needs {} vectors in C^{d}, got {}",
            d - 1,
            vs.len()
        )));
    }
    let dev = gram_deviation(vs);
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }

    let p = Projector::complement(vs, d);
    let m = p.matrix();
    let (best, norm) = (0..d)
        .map(|c| (c, m.column(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if norm < 1e-8 {
        return Err(Error::RankDeficient);
    }
    let col: Vec<C64> = m.column(best).iter().map(|z| z / norm).collect();
    Ok(CVector(col).phase_normalized())
}
