//! Levenberg-Marquardt minimization of the residual system.
//!
//! Each iteration solves `(JᵀJ + λ·diag(JᵀJ)) δ = -Jᵀr` by Cholesky. A step
//! is accepted only if it lowers `F`; then `λ` shrinks, otherwise it grows
//! and the solve is repeated. Angles are never wrapped: `F` is periodic.

use std::fmt;

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::constellation::ParameterPoint;
use crate::objective::{ResidualForm, ResidualSystem};
use crate::Result;

/// `F` below this counts as a found constellation.
pub const SUCCESS_THRESHOLD: f64 = 1e-7;

const LAMBDA_MAX: f64 = 1e16;
const LAMBDA_MIN: f64 = 1e-15;
/// Floor on the Marquardt scaling so zero columns of `J` stay regularized.
const DIAG_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmConfig {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_up: f64,
    pub damping_down: f64,
    /// Stop when `‖Jᵀr‖∞` falls below this.
    pub gradient_tol: f64,
    /// Stop when `‖δ‖∞` falls below this.
    pub step_tol: f64,
    pub success_threshold: f64,
    pub residual_form: ResidualForm,
    pub record_trace: bool,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            initial_damping: 1e-3,
            damping_up: 10.0,
            damping_down: 0.1,
            gradient_tol: 1e-12,
            step_tol: 1e-14,
            success_threshold: SUCCESS_THRESHOLD,
            residual_form: ResidualForm::Abs,
            record_trace: false,
        }
    }
}

impl LmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(crate::Error::InvalidSpec(format!("LM config: {why}")));
        if self.damping_up <= 1.0 {
            return bad("damping_up must exceed 1");
        }
        if !(self.damping_down > 0.0 && self.damping_down < 1.0) {
            return bad("damping_down must lie in (0, 1)");
        }
        if self.initial_damping <= 0.0 {
            return bad("initial_damping must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    GradientSmall,
    StepSmall,
    MaxIter,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Success => "success",
            Termination::GradientSmall => "gradient_small",
            Termination::StepSmall => "step_small",
            Termination::MaxIter => "max_iter",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeResult {
    pub final_point: ParameterPoint,
    pub final_f: f64,
    pub initial_f: f64,
    pub iterations: usize,
    /// `Success` whenever `final_f` is below the threshold, regardless of
    /// which stopping rule fired.
    pub termination: Termination,
    /// Accepted `F` values, starting with the initial one.
    pub trace: Option<Vec<f64>>,
}

impl MinimizeResult {
    pub fn is_success(&self) -> bool {
        self.termination == Termination::Success
    }
}

/// Minimizes from `start` using the residual form in `cfg`.
pub fn minimize(start: &ParameterPoint, cfg: &LmConfig) -> Result<MinimizeResult> {
    let system = ResidualSystem::new(start.spec(), cfg.residual_form)?;
    minimize_system(&system, start, cfg)
}

pub fn minimize_system(
    system: &ResidualSystem,
    start: &ParameterPoint,
    cfg: &LmConfig,
) -> Result<MinimizeResult> {
    cfg.validate()?;
    let p = system.num_parameters();
    let mut x = start.angles().to_vec();
    let mut ne = system.normal_equations(&x);
    let initial_f = ne.value;
    let mut trace = cfg.record_trace.then(|| vec![initial_f]);
    let mut lambda = cfg.initial_damping;
    let mut iterations = 0;
    let mut stop = Termination::MaxIter;
    let mut trial = vec![0.0; p];

    'outer: while iterations < cfg.max_iterations {
        if p == 0 || ne.jtr.amax() < cfg.gradient_tol {
            stop = Termination::GradientSmall;
            break;
        }
        iterations += 1;
        let scale: Vec<f64> = (0..p).map(|i| ne.jtj[(i, i)].max(DIAG_FLOOR)).collect();
        loop {
            let mut a: DMatrix<f64> = ne.jtj.clone();
            for (i, s) in scale.iter().enumerate() {
                a[(i, i)] += lambda * s;
            }
            let step = match Cholesky::new(a) {
                Some(ch) => ch.solve(&(-&ne.jtr)),
                None => {
                    lambda *= cfg.damping_up;
                    if lambda > LAMBDA_MAX {
                        stop = Termination::StepSmall;
                        break 'outer;
                    }
                    continue;
                }
            };
            if step.amax() < cfg.step_tol {
                stop = Termination::StepSmall;
                break 'outer;
            }
            for i in 0..p {
                trial[i] = x[i] + step[i];
            }
            let f_trial = system.value_unchecked(&trial);
            if f_trial < ne.value {
                std::mem::swap(&mut x, &mut trial);
                ne = system.normal_equations(&x);
                lambda = (lambda * cfg.damping_down).max(LAMBDA_MIN);
                if let Some(t) = trace.as_mut() {
                    t.push(ne.value);
                }
                break;
            }
            lambda *= cfg.damping_up;
            if lambda > LAMBDA_MAX {
                stop = Termination::StepSmall;
                break 'outer;
            }
        }
    }

    let final_f = ne.value;
    let termination = if final_f < cfg.success_threshold {
        Termination::Success
    } else {
        stop
    };
    Ok(MinimizeResult {
        final_point: ParameterPoint::new(start.spec().clone(), x)?,
        final_f,
        initial_f,
        iterations,
        termination,
        trace,
    })
}
