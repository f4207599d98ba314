//! Known sets of mutually unbiased bases: complete sets in prime dimension,
//! the qubit triple, and tensor products of triples.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::constellation::{ConstellationSpec, StateSet};
use crate::states::CVector;
use crate::{Error, Result, C64, MAX_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct MuBasesSet {
    pub d: usize,
    /// Each basis holds `d` orthonormal vectors.
    pub bases: Vec<Vec<CVector>>,
    pub provenance: String,
}

impl MuBasesSet {
    /// All bases as full groups of `d` vectors.
    pub fn to_state_set(&self) -> StateSet {
        StateSet::from_parts_unchecked(self.d, self.bases.clone())
    }

    /// Spec of the largest constellation the set contains, `{(d-1)^k}_d`.
    pub fn full_spec(&self) -> Result<ConstellationSpec> {
        ConstellationSpec::new(self.d, vec![self.d - 1; self.bases.len()])
    }
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
}

fn standard_basis(d: usize) -> Vec<CVector> {
    (0..d).map(|k| CVector::basis(d, k)).collect()
}

/// Basis `a` of the prime family: `v_j[k] = ω^{a k² + j k}/√p`.
fn quadratic_basis(p: usize, a: usize) -> Vec<CVector> {
    let amp = 1.0 / (p as f64).sqrt();
    (0..p)
        .map(|j| {
            let entries = (0..p)
                .map(|k| {
                    let e = (a * k * k + j * k) % p;
                    C64::from_polar(amp, TAU * e as f64 / p as f64)
                })
                .collect();
            CVector::new(entries).expect("p within supported range")
        })
        .collect()
}

/// The `p+1` bases of an odd prime dimension: the standard basis followed by
/// the `p` quadratic-phase bases.
pub fn prime_complete_set(p: usize) -> Result<MuBasesSet> {
    if p.is_multiple_of(2) || !is_prime(p) || p > 13 {
        return Err(Error::Unsupported(format!(
            "complete set needs an odd prime ≤ 13, got {p}"
        )));
    }
    let mut bases = vec![standard_basis(p)];
    bases.extend((0..p).map(|a| quadratic_basis(p, a)));
    Ok(MuBasesSet {
        d: p,
        bases,
        provenance: format!("prime:{p}"),
    })
}

/// Eigenbases of Z, X and Y.
pub fn qubit_complete_set() -> MuBasesSet {
    let h = FRAC_1_SQRT_2;
    let v = |a: C64, b: C64| CVector::new(vec![a, b]).expect("d = 2");
    let r = |x: f64| C64::new(x, 0.0);
    let i = |x: f64| C64::new(0.0, x);
    MuBasesSet {
        d: 2,
        bases: vec![
            standard_basis(2),
            vec![v(r(h), r(h)), v(r(h), r(-h))],
            vec![v(r(h), i(h)), v(r(h), i(-h))],
        ],
        provenance: "qubit".into(),
    }
}

fn triple_of(d: usize) -> Result<Vec<Vec<CVector>>> {
    if d == 2 {
        Ok(qubit_complete_set().bases)
    } else {
        let mut set = prime_complete_set(d)?;
        set.bases.truncate(3);
        Ok(set.bases)
    }
}

fn kron(a: &CVector, b: &CVector) -> CVector {
    let entries = a
        .entries()
        .iter()
        .flat_map(|x| b.entries().iter().map(move |y| x * y))
        .collect();
    CVector::new(entries).expect("product dimension checked by caller")
}

/// Three MU bases in `d1·d2` from the first three bases of each factor.
pub fn tensor_triple(d1: usize, d2: usize) -> Result<MuBasesSet> {
    for f in [d1, d2] {
        if !(f == 2 || (is_prime(f) && f <= 13)) {
            return Err(Error::Unsupported(format!(
                "tensor factor {f} is neither 2 nor an odd prime"
            )));
        }
    }
    let d = d1 * d2;
    if d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    let (ta, tb) = (triple_of(d1)?, triple_of(d2)?);
    let bases = ta
        .iter()
        .zip(&tb)
        .map(|(ba, bb)| {
            ba.iter()
                .flat_map(|u| bb.iter().map(move |w| kron(u, w)))
                .collect()
        })
        .collect();
    Ok(MuBasesSet {
        d,
        bases,
        provenance: format!("tensor:{d1}x{d2}"),
    })
}

/// Keeps the first `x_b` vectors of basis `b` for each group of `spec`.
pub fn subconstellation(set: &MuBasesSet, spec: &ConstellationSpec) -> Result<StateSet> {
    if spec.d() != set.d {
        return Err(Error::DimensionMismatch(spec.d(), set.d));
    }
    if !spec.is_restricted() {
        return Err(Error::NotRestricted(spec.to_string()));
    }
    if spec.counts().len() > set.bases.len() {
        return Err(Error::InvalidSpec(format!(
            "{spec} needs {} bases, the set has {}",
            spec.counts().len(),
            set.bases.len()
        )));
    }
    let groups = spec
        .counts()
        .iter()
        .zip(&set.bases)
        .map(|(&x, basis)| basis[..x].to_vec())
        .collect();
    Ok(StateSet::from_parts_unchecked(set.d, groups))
}
