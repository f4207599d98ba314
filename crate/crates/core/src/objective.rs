//! Sum-of-squares objective whose zeros are exactly the MU constellations of
//! a restricted spec, with an analytic Jacobian.
//!
//! For every unordered pair of distinct states in groups `1..` there is one
//! residual `|⟨ψ|ψ'⟩| - χ`, where `χ` is 0 inside a group and `1/√d` across
//! groups. Pairs involving group 0 hold by construction of the template and
//! are omitted, so the residual count equals the constraint count
//! `c = s(s-1)/2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constellation::{self, ConstellationSpec, ParameterPoint, StateSet};
use crate::states::inner_unchecked;
use crate::{Error, Result, C64};

/// Below this modulus the gradient of `|z|` is taken as zero.
pub const MODULUS_GUARD: f64 = 1e-12;

/// Which quantity of a scalar product is compared with its target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualForm {
    /// `|⟨ψ|ψ'⟩| - χ`.
    #[default]
    Abs,
    /// `|⟨ψ|ψ'⟩|² - χ²`; smooth everywhere.
    Squared,
}

impl std::str::FromStr for ResidualForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abs" => Ok(Self::Abs),
            "squared" => Ok(Self::Squared),
            other => Err(Error::InvalidSpec(format!("unknown objective {other:?}"))),
        }
    }
}

/// Target modulus for the pair `(b, j)`, `(b', j')`.
pub fn chi(d: usize, b: usize, j: usize, b2: usize, j2: usize) -> f64 {
    if b == b2 {
        if j == j2 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 / (d as f64).sqrt()
    }
}

/// One residual: the states `(b, j)` and `(b', j')` with `b ≤ b'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairIndex {
    pub b: usize,
    pub j: usize,
    pub b2: usize,
    pub j2: usize,
}

#[derive(Clone, Copy, Debug)]
struct Pair {
    u: usize,
    v: usize,
    target: f64,
}

/// Residual system of one restricted spec.
#[derive(Clone, Debug)]
pub struct ResidualSystem {
    spec: ConstellationSpec,
    form: ResidualForm,
    d: usize,
    /// Angle offset per state of groups `1..`, `None` for the anchor.
    offsets: Vec<Option<usize>>,
    index: Vec<PairIndex>,
    pairs: Vec<Pair>,
    p: usize,
}

/// Residuals, value and optionally the dense Jacobian at one point.
#[derive(Clone, Debug)]
pub struct ObjectiveEval {
    pub value: f64,
    pub residuals: Vec<f64>,
    pub jacobian: Option<DMatrix<f64>>,
}

/// Normal equations `JᵀJ` and `Jᵀr` at one point.
#[derive(Clone, Debug)]
pub(crate) struct NormalEquations {
    pub value: f64,
    pub jtj: DMatrix<f64>,
    pub jtr: DVector<f64>,
}

impl ResidualSystem {
    pub fn new(spec: &ConstellationSpec, form: ResidualForm) -> Result<Self> {
        constellation::classify(spec)?;
        let slots = constellation::vector_slots(spec);
        let d = spec.d();
        let mut index = Vec::new();
        let mut pairs = Vec::new();
        for (a, sa) in slots.iter().enumerate() {
            for (b, sb) in slots.iter().enumerate().skip(a + 1) {
                index.push(PairIndex {
                    b: sa.group,
                    j: sa.member,
                    b2: sb.group,
                    j2: sb.member,
                });
                pairs.push(Pair {
                    u: a,
                    v: b,
                    target: chi(d, sa.group, sa.member, sb.group, sb.member),
                });
            }
        }
        Ok(Self {
            spec: spec.clone(),
            form,
            d,
            offsets: slots.iter().map(|s| s.angle_offset).collect(),
            index,
            pairs,
            p: spec.parameter_count(),
        })
    }

    pub fn spec(&self) -> &ConstellationSpec {
        &self.spec
    }

    pub fn form(&self) -> ResidualForm {
        self.form
    }

    pub fn num_residuals(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.p
    }

    pub fn pair_index(&self) -> &[PairIndex] {
        &self.index
    }

    fn check(&self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.p {
            return Err(Error::AngleCount {
                expected: self.p,
                got: angles.len(),
            });
        }
        Ok(())
    }

    /// Flat `s×d` array of the states of groups `1..`.
    fn states(&self, angles: &[f64]) -> Vec<C64> {
        let d = self.d;
        let amp = 1.0 / (d as f64).sqrt();
        let mut out = Vec::with_capacity(self.offsets.len() * d);
        for off in &self.offsets {
            out.push(C64::new(amp, 0.0));
            match off {
                None => out.extend(std::iter::repeat_n(C64::new(amp, 0.0), d - 1)),
                Some(o) => out.extend(angles[*o..*o + d - 1].iter().map(|&a| C64::from_polar(amp, a))),
            }
        }
        out
    }

    #[inline]
    fn residual(&self, z: C64, target: f64) -> f64 {
        match self.form {
            ResidualForm::Abs => z.norm() - target,
            ResidualForm::Squared => z.norm_sqr() - target * target,
        }
    }

    /// Calls `f(k, r_k, gradient entries)` for every residual. Each residual
    /// depends on at most `2(d-1)` angles.
    ///
    /// With `split_orthogonal` (absolute form only), a pair with target 0
    /// is reported as the two rows `Re z` and `Im z` instead of `|z|`. Their
    /// squares sum to the same contribution and their gradient term `Jᵀr` is
    /// identical, but unlike `|z|` they are smooth at `z = 0`, so the
    /// Gauss-Newton model stays accurate near orthogonality.
    fn for_each_row(
        &self,
        angles: &[f64],
        split_orthogonal: bool,
        mut f: impl FnMut(usize, f64, &[(usize, f64)]),
    ) {
        let d = self.d;
        let states = self.states(angles);
        let split = split_orthogonal && self.form == ResidualForm::Abs;
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * (d - 1));
        let mut terms = vec![C64::new(0.0, 0.0); d];
        for (k, pair) in self.pairs.iter().enumerate() {
            let u = &states[pair.u * d..(pair.u + 1) * d];
            let v = &states[pair.v * d..(pair.v + 1) * d];
            let mut z = C64::new(0.0, 0.0);
            for c in 0..d {
                terms[c] = u[c].conj() * v[c];
                z += terms[c];
            }
            let (ou, ov) = (self.offsets[pair.u], self.offsets[pair.v]);
            // ∂z/∂θ_u,c = -i·t_c and ∂z/∂θ_v,c = i·t_c with t_c = conj(u_c)·v_c.
            if split && pair.target == 0.0 {
                for part in [0, 1] {
                    row.clear();
                    // (∂Re z, ∂Im z) is (Im t, -Re t) on the u side, negated on v
                    let du = |t: C64| if part == 0 { t.im } else { -t.re };
                    for (off, sign) in [(ou, 1.0), (ov, -1.0)] {
                        if let Some(o) = off {
                            for c in 1..d {
                                row.push((o + c - 1, sign * du(terms[c])));
                            }
                        }
                    }
                    f(k, if part == 0 { z.re } else { z.im }, &row);
                }
                continue;
            }
            let r = self.residual(z, pair.target);
            row.clear();
            let modulus = z.norm();
            // ∂|z|/∂θ_u,c = Im(conj(z)·t_c)/|z| = -∂|z|/∂θ_v,c.
            let scale = match self.form {
                ResidualForm::Abs if modulus < MODULUS_GUARD => 0.0,
                ResidualForm::Abs => 1.0 / modulus,
                ResidualForm::Squared => 2.0,
            };
            if scale != 0.0 {
                let zc = z.conj();
                if let Some(o) = ou {
                    for c in 1..d {
                        row.push((o + c - 1, scale * (zc * terms[c]).im));
                    }
                }
                if let Some(o) = ov {
                    for c in 1..d {
                        row.push((o + c - 1, -scale * (zc * terms[c]).im));
                    }
                }
            }
            f(k, r, &row);
        }
    }

    /// `F = Σ r_k²` without the Jacobian.
    pub fn value(&self, angles: &[f64]) -> Result<f64> {
        self.check(angles)?;
        Ok(self.value_unchecked(angles))
    }

    pub(crate) fn value_unchecked(&self, angles: &[f64]) -> f64 {
        let d = self.d;
        let states = self.states(angles);
        self.pairs
            .iter()
            .map(|pair| {
                let z = inner_unchecked(
                    &states[pair.u * d..(pair.u + 1) * d],
                    &states[pair.v * d..(pair.v + 1) * d],
                );
                let r = self.residual(z, pair.target);
                r * r
            })
            .sum()
    }

    pub fn evaluate_angles(&self, angles: &[f64], with_jacobian: bool) -> Result<ObjectiveEval> {
        self.check(angles)?;
        let m = self.pairs.len();
        let mut residuals = vec![0.0; m];
        let mut jac = with_jacobian.then(|| DMatrix::zeros(m, self.p));
        self.for_each_row(angles, false, |k, r, row| {
            residuals[k] = r;
            if let Some(j) = jac.as_mut() {
                for &(col, g) in row {
                    j[(k, col)] = g;
                }
            }
        });
        Ok(ObjectiveEval {
            value: residuals.iter().map(|r| r * r).sum(),
            residuals,
            jacobian: jac,
        })
    }

    pub(crate) fn normal_equations(&self, angles: &[f64]) -> NormalEquations {
        let p = self.p;
        let mut jtj = DMatrix::zeros(p, p);
        let mut jtr = DVector::zeros(p);
        let mut value = 0.0;
        self.for_each_row(angles, true, |_, r, row| {
            value += r * r;
            for &(a, ga) in row {
                jtr[a] += ga * r;
                for &(b, gb) in row {
                    jtj[(a, b)] += ga * gb;
                }
            }
        });
        NormalEquations { value, jtj, jtr }
    }
}

/// Residuals, `F` and optionally the Jacobian at a parameter point, using
/// the absolute-value form.
pub fn evaluate(point: &ParameterPoint, with_jacobian: bool) -> Result<ObjectiveEval> {
    ResidualSystem::new(point.spec(), ResidualForm::Abs)?.evaluate_angles(point.angles(), with_jacobian)
}

/// `F` at the configuration where every state of groups `1..` is the uniform
/// vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FUpperBound {
    /// `½Σ x_b(x_b-1) + (1 - 1/√d)² Σ_{b<b'} x_b x_b'`, the actual value.
    pub coincident: f64,
    /// Same expression with the linear coefficient `(√d-1)/√d`; this variant
    /// reproduces the commonly quoted figures (33.2 for `{5^2,4,1}_6`).
    pub linear_coefficient: f64,
}

pub fn f_upper_bound(spec: &ConstellationSpec) -> Result<FUpperBound> {
    constellation::classify(spec)?;
    let x = spec.extra();
    let within: f64 = x.iter().map(|&n| (n * (n - 1)) as f64 / 2.0).sum();
    let mut across = 0.0;
    for (i, &a) in x.iter().enumerate() {
        for &b in &x[i + 1..] {
            across += (a * b) as f64;
        }
    }
    let coef = 1.0 - 1.0 / (spec.d() as f64).sqrt();
    Ok(FUpperBound {
        coincident: within + coef * coef * across,
        linear_coefficient: within + coef * across,
    })
}

/// Location of one state inside a [`StateSet`]: `(group, member)`.
pub type StateRef = (usize, usize);

/// Outcome of checking every pair of a state set against the MU conditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuVerification {
    pub passed: bool,
    pub max_deviation: f64,
    pub worst_pair: Option<(StateRef, StateRef)>,
}

/// Checks `|⟨ψ_j^b|ψ_j'^b'⟩| = χ` for every pair, including each state with
/// itself (normalization) and all pairs involving group 0.
pub fn verify_mu(states: &StateSet, tol: f64) -> MuVerification {
    let d = states.d();
    let flat: Vec<(StateRef, &[C64])> = states
        .groups()
        .iter()
        .enumerate()
        .flat_map(|(b, g)| g.iter().enumerate().map(move |(j, v)| ((b, j), v.entries())))
        .collect();
    let mut worst = 0.0f64;
    let mut worst_pair = None;
    for (i, &(ra, a)) in flat.iter().enumerate() {
        for &(rb, b) in &flat[i..] {
            let target = chi(d, ra.0, ra.1, rb.0, rb.1);
            let dev = (inner_unchecked(a, b).norm() - target).abs();
            if dev > worst {
                worst = dev;
                worst_pair = Some((ra, rb));
            }
        }
    }
    MuVerification {
        passed: worst <= tol,
        max_deviation: worst,
        worst_pair,
    }
}

/// Sum of squared deviations over all pairs of distinct states of a state
/// set, group 0 included. On realized template points this equals `F`.
pub fn state_set_objective(states: &StateSet, form: ResidualForm) -> f64 {
    let d = states.d();
    let flat: Vec<(StateRef, &[C64])> = states
        .groups()
        .iter()
        .enumerate()
        .flat_map(|(b, g)| g.iter().enumerate().map(move |(j, v)| ((b, j), v.entries())))
        .collect();
    let mut total = 0.0;
    for (i, &(ra, a)) in flat.iter().enumerate() {
        for &(rb, b) in &flat[i + 1..] {
            let t = chi(d, ra.0, ra.1, rb.0, rb.1);
            let z = inner_unchecked(a, b);
            let r = match form {
                ResidualForm::Abs => z.norm() - t,
                ResidualForm::Squared => z.norm_sqr() - t * t,
            };
            total += r * r;
        }
    }
    total
}
