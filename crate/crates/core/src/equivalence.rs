//! Transformations that preserve every scalar-product modulus of a state
//! set, and the dephasing procedure built from them.

use nalgebra::DMatrix;

use crate::constellation::{ParameterPoint, StateSet};
use crate::states::{complete_basis, gram_deviation, inner_unchecked, CVector, ORTHONORMAL_TOL};
use crate::{Error, Result, C64};

pub const UNITARY_TOL: f64 = 1e-10;

/// Largest deviation of a component modulus from `1/√d` tolerated when
/// dephasing, loose enough for numerically found minima.
pub const DEPHASE_MODULUS_TOL: f64 = 1e-6;

pub fn unitarity_error(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let prod = u.adjoint() * u;
    (prod - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `v → U v` on every state.
pub fn apply_global_unitary(states: &StateSet, u: &DMatrix<C64>) -> Result<StateSet> {
    let d = states.d();
    if u.nrows() != d || u.ncols() != d {
        return Err(Error::DimensionMismatch(u.nrows(), d));
    }
    let err = unitarity_error(u);
    if err > UNITARY_TOL {
        return Err(Error::NotUnitary(err));
    }
    let groups = states
        .groups()
        .iter()
        .map(|g| g.iter().map(|v| v.transformed(u)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(StateSet::from_parts_unchecked(d, groups))
}

fn check_shape<T>(states: &StateSet, per_vector: &[Vec<T>]) -> Result<()> {
    if per_vector.len() != states.groups().len() {
        return Err(Error::GroupOutOfRange(per_vector.len()));
    }
    for (b, (g, p)) in states.groups().iter().zip(per_vector).enumerate() {
        if g.len() != p.len() {
            return Err(Error::InvalidSpec(format!(
                "group {b} has {} states but {} entries were given",
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// `v → e^{iθ} v`, one angle per state.
pub fn apply_vector_phases(states: &StateSet, phases: &[Vec<f64>]) -> Result<StateSet> {
    check_shape(states, phases)?;
    let groups = states
        .groups()
        .iter()
        .zip(phases)
        .map(|(g, th)| {
            g.iter()
                .zip(th)
                .map(|(v, &t)| v.scaled(C64::from_polar(1.0, t)))
                .collect()
        })
        .collect();
    Ok(StateSet::from_parts_unchecked(states.d(), groups))
}

pub fn swap_groups(states: &StateSet, b: usize, b2: usize) -> Result<StateSet> {
    let n = states.groups().len();
    for i in [b, b2] {
        if i >= n {
            return Err(Error::GroupOutOfRange(i));
        }
    }
    let mut groups = states.groups().to_vec();
    groups.swap(b, b2);
    Ok(StateSet::from_parts_unchecked(states.d(), groups))
}

/// Reorders group `b` so that new member `j` is old member `perms[b][j]`.
pub fn permute_within(states: &StateSet, perms: &[Vec<usize>]) -> Result<StateSet> {
    check_shape(states, perms)?;
    let mut groups = Vec::with_capacity(perms.len());
    for (b, (g, perm)) in states.groups().iter().zip(perms).enumerate() {
        let mut seen = vec![false; g.len()];
        for &i in perm {
            if i >= g.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::NotPermutation(format!("group {b}: {perm:?}")));
            }
        }
        groups.push(perm.iter().map(|&i| g[i].clone()).collect());
    }
    Ok(StateSet::from_parts_unchecked(states.d(), groups))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dephased {
    pub states: StateSet,
    /// Present when the dephased set has a restricted constellation type.
    pub point: Option<ParameterPoint>,
}

/// Brings a state set into dephased form.
///
/// 1. A global unitary maps group 0 (completed to a basis if it holds `d-1`
///    states) onto the standard basis.
/// 2. A diagonal unitary makes the first state of group 1 uniform.
/// 3. Per-state phases restore group 0 and make the first component of
///    every other state real positive.
///
/// Groups `1..` are first reordered by decreasing size (a relabeling) so the
/// result matches the canonical template layout.
pub fn dephase(states: &StateSet) -> Result<Dephased> {
    let d = states.d();
    let groups = states.groups();
    let first = groups
        .first()
        .ok_or_else(|| Error::InvalidSpec("state set has no groups".into()))?;
    if first.len() + 1 < d {
        return Err(Error::InvalidSpec(format!(
            "group 0 holds {} states, dephasing needs at least {}",
            first.len(),
            d - 1
        )));
    }
    let dev = gram_deviation(first);
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut basis = first.clone();
    if basis.len() == d - 1 {
        basis.push(complete_basis(first)?);
    }

    let mut rest: Vec<&Vec<CVector>> = groups[1..].iter().collect();
    rest.sort_by_key(|g| std::cmp::Reverse(g.len()));

    // step 1: components in the group-0 basis
    let amp = 1.0 / (d as f64).sqrt();
    let mut changed: Vec<Vec<Vec<C64>>> = Vec::with_capacity(rest.len());
    for (gi, g) in rest.iter().enumerate() {
        let mut out = Vec::with_capacity(g.len());
        for (j, v) in g.iter().enumerate() {
            let comps: Vec<C64> = basis
                .iter()
                .map(|bk| inner_unchecked(bk.entries(), v.entries()))
                .collect();
            let deviation = comps
                .iter()
                .map(|z| (z.norm() - amp).abs())
                .fold(0.0, f64::max);
            if deviation > DEPHASE_MODULUS_TOL {
                return Err(Error::NotUnbiased {
                    group: gi + 1,
                    member: j,
                    deviation,
                });
            }
            out.push(comps);
        }
        changed.push(out);
    }

    // step 2: flatten the anchor
    let flatten: Vec<C64> = match changed.iter().find(|g| !g.is_empty()) {
        Some(g) => g[0].iter().map(|z| z.conj() / z.norm()).collect(),
        None => vec![C64::new(1.0, 0.0); d],
    };

    // step 3: fix per-state phases
    let mut out_groups = Vec::with_capacity(groups.len());
    out_groups.push((0..first.len()).map(|k| CVector::basis(d, k)).collect::<Vec<_>>());
    for g in changed {
        let mut out = Vec::with_capacity(g.len());
        for comps in g {
            let mut e: Vec<C64> = comps.iter().zip(&flatten).map(|(z, f)| z * f).collect();
            let phase = e[0].conj() / e[0].norm();
            for z in &mut e {
                *z *= phase;
            }
            out.push(CVector::new(e)?);
        }
        out_groups.push(out);
    }

    let states = StateSet::from_parts_unchecked(d, out_groups);
    let point = match states.spec() {
        Ok(spec) if spec.is_restricted() && first.len() == d - 1 && spec.s() > 0 => {
            Some(states.dephased_angles()?)
        }
        _ => None,
    };
    Ok(Dephased { states, point })
}
