//! The boundary-distance iteration with adaptive radius.
//!
//! Each iteration:
//! 1. stops if `N(Xᵏ) < eps`;
//! 2. minimizes `q(α) = f(Xᵏ) − α⟨G|S⟩ + ½α²⟨S|∇²f|S⟩` over
//!    `0 ≤ α ≤ min(‖D‖_F/γ_max, Δₖ)`;
//! 3. evaluates the trial point `Xᵏ − αₖS` and the ratio of actual to
//!    predicted decrease `rₖ`;
//! 4. accepts the trial iff `rₖ ≥ μ₁`, and scales the radius by `η₁`, `1`
//!    or `η₂` depending on where `rₖ` falls relative to `μ₁, μ₂`.
//!
//! A rejected iteration leaves `Xᵏ` unchanged, so its gradient, direction
//! and curvature are reused by the next iteration.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::direction::{direction_matrix, f_lower_from_split, grad_split, Direction, GradSplit};
use crate::error::{Error, Result};
use crate::objective::{Counted, EvalCounts, Objective};
use crate::symmat::SymMat;

/// Ratio denominators at or below this (relative to `max(1, |f|)`) are
/// treated as a failed model.
pub const RATIO_DENOM_FLOOR: f64 = 1e-16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Initial radius `Δ₀`.
    pub delta0: f64,
    /// Stop when `N(X) < eps`.
    pub eps: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub max_iter: usize,
    /// Wall-clock limit in seconds, checked between iterations.
    pub max_time: f64,
    /// Stop after an accepted step whose relative objective change is
    /// below this. Zero disables the test.
    pub rel_f_tol: f64,
    pub feas_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta0: 1.0,
            eps: 1e-7,
            mu1: 0.25,
            mu2: 0.75,
            eta1: 0.5,
            eta2: 2.0,
            max_iter: 10_000,
            max_time: 600.0,
            rel_f_tol: 1e-6,
            feas_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return bad("delta0 must be positive");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(0.0 < self.mu1 && self.mu1 < self.mu2) {
            return bad("need 0 < mu1 < mu2");
        }
        if !(0.0 < self.eta1 && self.eta1 < 1.0 && 1.0 < self.eta2) {
            return bad("need 0 < eta1 < 1 < eta2");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if !(self.max_time > 0.0) {
            return bad("max_time must be positive");
        }
        if !(self.rel_f_tol >= 0.0) {
            return bad("rel_f_tol must be non-negative");
        }
        if !(self.feas_tol > 0.0) {
            return bad("feas_tol must be positive");
        }
        Ok(())
    }
}

/// One row of the iteration trace. Describes the iterate `Xᵏ` at the start
/// of iteration `k` and the step decision taken from it.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// `f(Xᵏ)`.
    pub f: f64,
    /// `N(Xᵏ)`.
    pub n_merit: f64,
    /// `Δₖ`, before the update.
    pub delta: f64,
    pub alpha: f64,
    pub ratio: f64,
    pub accepted: bool,
    pub min_eig: f64,
    pub max_eig: f64,
    /// Seconds since the solve started, at the end of this iteration.
    pub time_s: f64,
    /// `‖D(Xᵏ)‖_F`.
    pub d_norm: f64,
    /// `γ_max(Xᵏ)`.
    pub gamma_max: f64,
    /// `⟨S|∇²f(Xᵏ)|S⟩`.
    pub curvature: f64,
    /// `f(Xᵏ) − q(αₖ, Xᵏ)`.
    pub model_decrease: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    ConvergedN,
    #[serde(rename = "converged-relf")]
    ConvergedRelF,
    IterLimit,
    TimeLimit,
    NumericError,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, Self::ConvergedN | Self::ConvergedRelF)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConvergedN => "converged-n",
            Self::ConvergedRelF => "converged-relf",
            Self::IterLimit => "iter-limit",
            Self::TimeLimit => "time-limit",
            Self::NumericError => "numeric-error",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "converged-n" => Self::ConvergedN,
            "converged-relf" => Self::ConvergedRelF,
            "iter-limit" => Self::IterLimit,
            "time-limit" => Self::TimeLimit,
            "numeric-error" => Self::NumericError,
            _ => return Err(Error::Parse(format!("unknown status {s:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub x: SymMat,
    pub f: f64,
    /// `N` at the final iterate; `NaN` if it could not be evaluated.
    pub n_merit: f64,
    /// Optimality certificate at the final iterate; `NaN` if unavailable.
    pub f_lower: f64,
    pub status: SolveStatus,
    /// Number of step attempts (trace rows).
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
    pub counts: EvalCounts,
    pub elapsed_s: f64,
    /// Details for [`SolveStatus::NumericError`].
    pub message: Option<String>,
}

/// Minimizer of `φ(α) = −aα + ½cα²` over `[0, alpha_max]`.
pub fn solve_subproblem(a: f64, c: f64, alpha_max: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "model slope must be positive, got {a:e}"
        )));
    }
    if !(alpha_max > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step bound must be positive, got {alpha_max:e}"
        )));
    }
    if c > 0.0 {
        let stationary = a / c;
        if stationary <= alpha_max {
            return Ok(stationary);
        }
    }
    Ok(alpha_max)
}

/// `(f_old − f_trial) / (f_old − q_val)`; returns `−∞` when the predicted
/// decrease is not meaningfully positive or the ratio is not finite.
pub fn acceptance_ratio(f_old: f64, f_trial: f64, q_val: f64) -> f64 {
    let denom = f_old - q_val;
    if !(denom > RATIO_DENOM_FLOOR * f_old.abs().max(1.0)) {
        return f64::NEG_INFINITY;
    }
    let r = (f_old - f_trial) / denom;
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r
    }
}

pub fn radius_update(delta: f64, r: f64, cfg: &SolverConfig) -> f64 {
    if r < cfg.mu1 {
        cfg.eta1 * delta
    } else if r <= cfg.mu2 {
        delta
    } else {
        cfg.eta2 * delta
    }
}

struct Local {
    split: GradSplit,
    dir: Direction,
    curvature: Option<f64>,
}

fn local_model(obj: &dyn Objective, x: &SymMat) -> Result<Local> {
    let g = obj.gradient(x)?;
    let split = grad_split(&g)?;
    let dir = direction_matrix(x, &split)?;
    Ok(Local {
        split,
        dir,
        curvature: None,
    })
}

fn spectrum_bounds(x: &SymMat) -> Result<(f64, f64)> {
    let v = x.eigenvalues()?;
    Ok((v[v.len() - 1], v[0]))
}

/// Runs the iteration from `x0`.
pub fn solve(obj: &dyn Objective, x0: &SymMat, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_with_observer(obj, x0, cfg, |_| {})
}

/// Like [`solve`], invoking `observer` after every iteration.
pub fn solve_with_observer(
    obj: &dyn Objective,
    x0: &SymMat,
    cfg: &SolverConfig,
    mut observer: impl FnMut(&IterRecord),
) -> Result<SolveResult> {
    cfg.validate()?;
    if x0.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: x0.dim(),
        });
    }
    let (lo, hi) = spectrum_bounds(x0)?;
    if lo < -cfg.feas_tol || hi > 1.0 + cfg.feas_tol {
        return Err(Error::Infeasible {
            min_eig: lo,
            max_eig: hi,
        });
    }

    let start = Instant::now();
    let counted = Counted::new(obj);
    let obj = &counted;

    let mut x = x0.clone();
    let mut bounds = (lo, hi);
    let mut f = obj.value(&x)?;
    let mut delta = cfg.delta0;
    let mut local: Option<Local> = None;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut message = None;

    let status = loop {
        let model = match local.take() {
            Some(m) => m,
            None => match local_model(obj, &x) {
                Ok(m) => m,
                Err(e) => {
                    message = Some(e.to_string());
                    break SolveStatus::NumericError;
                }
            },
        };
        let model = local.insert(model);
        let dir = &model.dir;

        if dir.n_merit < cfg.eps {
            break SolveStatus::ConvergedN;
        }
        if trace.len() >= cfg.max_iter {
            break SolveStatus::IterLimit;
        }
        if start.elapsed().as_secs_f64() >= cfg.max_time {
            break SolveStatus::TimeLimit;
        }

        let s = dir.s.as_ref().expect("N > 0 forces D ≠ O");
        let c = match model.curvature {
            Some(c) => c,
            None => match obj.hess_quad(&x, s) {
                Ok(c) if c.is_finite() => *model.curvature.insert(c),
                Ok(c) => {
                    message = Some(format!("non-finite curvature {c}"));
                    break SolveStatus::NumericError;
                }
                Err(e) => {
                    message = Some(e.to_string());
                    break SolveStatus::NumericError;
                }
            },
        };

        let a = dir.n_merit / dir.d_norm;
        let alpha_max = dir.alpha_max_feasible.min(delta);
        let alpha = match solve_subproblem(a, c, alpha_max) {
            Ok(alpha) => alpha,
            Err(e) => {
                message = Some(e.to_string());
                break SolveStatus::NumericError;
            }
        };
        let q = f - a * alpha + 0.5 * c * alpha * alpha;

        // X − αS of two symmetric matrices is symmetric entrywise.
        let mut trial = x.axpy(-alpha, s)?;
        let mut trial_bounds = match spectrum_bounds(&trial) {
            Ok(b) => b,
            Err(e) => {
                message = Some(e.to_string());
                break SolveStatus::NumericError;
            }
        };
        let within = |(lo, hi): (f64, f64), tol: f64| lo >= -tol && hi <= 1.0 + tol;
        if !within(trial_bounds, cfg.feas_tol) {
            if !within(trial_bounds, 10.0 * cfg.feas_tol) {
                message = Some(format!(
                    "trial point left the box: eigenvalues in [{:e}, {:e}]",
                    trial_bounds.0, trial_bounds.1
                ));
                break SolveStatus::NumericError;
            }
            trial = match trial.clamp_spectrum(0.0, 1.0) {
                Ok(t) => t,
                Err(e) => {
                    message = Some(e.to_string());
                    break SolveStatus::NumericError;
                }
            };
            trial_bounds = (trial_bounds.0.max(0.0), trial_bounds.1.min(1.0));
        }

        let f_trial = match obj.value(&trial) {
            Ok(v) => v,
            Err(e) => {
                message = Some(e.to_string());
                break SolveStatus::NumericError;
            }
        };
        let ratio = acceptance_ratio(f, f_trial, q);
        let accepted = ratio >= cfg.mu1;
        let new_delta = radius_update(delta, ratio, cfg);

        let record = IterRecord {
            iter: trace.len(),
            f,
            n_merit: dir.n_merit,
            delta,
            alpha,
            ratio,
            accepted,
            min_eig: bounds.0,
            max_eig: bounds.1,
            time_s: start.elapsed().as_secs_f64(),
            d_norm: dir.d_norm,
            gamma_max: dir.gamma_max,
            curvature: c,
            model_decrease: f - q,
        };
        observer(&record);
        trace.push(record);
        delta = new_delta;

        if accepted {
            let rel_change = (f_trial - f).abs() / f_trial.abs().max(1.0);
            x = trial;
            f = f_trial;
            bounds = trial_bounds;
            local = None;
            if rel_change < cfg.rel_f_tol {
                break SolveStatus::ConvergedRelF;
            }
        }
    };

    // Merit and certificate at the final iterate.
    let (n_merit, f_lower) = if status == SolveStatus::NumericError {
        (f64::NAN, f64::NAN)
    } else {
        let model = match local.take() {
            Some(m) => Ok(m),
            None => local_model(obj, &x),
        };
        match model {
            Ok(m) => {
                let fl = f_lower_from_split(&x, m.split.gradient(), &m.split).unwrap_or(f64::NAN);
                (m.dir.n_merit, fl)
            }
            Err(_) => (f64::NAN, f64::NAN),
        }
    };

    Ok(SolveResult {
        x,
        f,
        n_merit,
        f_lower,
        status,
        iterations: trace.len(),
        trace,
        counts: counted.counts(),
        elapsed_s: start.elapsed().as_secs_f64(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::basic::{Linear, SquaredNorm};

    #[test]
    fn subproblem_examples() {
        assert_eq!(solve_subproblem(2.0, 4.0, 1.0).unwrap(), 0.5);
        assert_eq!(solve_subproblem(1.0, -2.0, 0.7).unwrap(), 0.7);
        assert_eq!(solve_subproblem(1.0, 0.0, 0.3).unwrap(), 0.3);
        assert_eq!(solve_subproblem(2.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(solve_subproblem(0.0, 1.0, 1.0).is_err());
        assert!(solve_subproblem(-1.0, 1.0, 1.0).is_err());
        assert!(solve_subproblem(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn subproblem_minimizes_by_grid_search() {
        for &(a, c, m) in &[(1.0, 3.0, 2.0), (0.5, 0.1, 1.0), (2.0, -1.0, 0.4), (1.0, 10.0, 0.05)] {
            let alpha = solve_subproblem(a, c, m).unwrap();
            let phi = |t: f64| -a * t + 0.5 * c * t * t;
            let best = (0..=10_000)
                .map(|k| phi(m * k as f64 / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(phi(alpha) <= best + 1e-12);
        }
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(acceptance_ratio(10.0, 9.0, 9.0), 1.0);
        assert_eq!(acceptance_ratio(10.0, 10.0, 9.0), 0.0);
        assert_eq!(acceptance_ratio(10.0, 8.0, 9.0), 2.0);
        assert_eq!(acceptance_ratio(10.0, 9.0, 10.0), f64::NEG_INFINITY);
        assert_eq!(acceptance_ratio(1.0, 0.5, 1.0 - 1e-17), f64::NEG_INFINITY);
    }

    #[test]
    fn radius_examples() {
        let cfg = SolverConfig::default();
        assert_eq!(radius_update(1.0, 0.1, &cfg), 0.5);
        assert_eq!(radius_update(1.0, 0.5, &cfg), 1.0);
        assert_eq!(radius_update(1.0, 0.25, &cfg), 1.0);
        assert_eq!(radius_update(1.0, 0.75, &cfg), 1.0);
        assert_eq!(radius_update(1.0, 0.9, &cfg), 2.0);
        assert_eq!(radius_update(1.0, f64::NEG_INFINITY, &cfg), 0.5);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let d = SolverConfig::default;
        assert!(SolverConfig { mu1: 0.8, ..d() }.validate().is_err());
        assert!(SolverConfig { eta2: 1.0, ..d() }.validate().is_err());
        assert!(SolverConfig { delta0: 0.0, ..d() }.validate().is_err());
        assert!(SolverConfig { eps: f64::NAN, ..d() }.validate().is_err());
    }

    #[test]
    fn status_strings_round_trip() {
        for s in [
            SolveStatus::ConvergedN,
            SolveStatus::ConvergedRelF,
            SolveStatus::IterLimit,
            SolveStatus::TimeLimit,
            SolveStatus::NumericError,
        ] {
            assert_eq!(s.as_str().parse::<SolveStatus>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let obj = SquaredNorm { n: 2 };
        let x0 = SymMat::from_diagonal(&[1.5, 0.5]);
        let err = solve(&obj, &x0, &SolverConfig::default());
        assert!(matches!(err, Err(Error::Infeasible { .. })));
    }

    #[test]
    fn squared_norm_goes_to_origin() {
        let obj = SquaredNorm { n: 4 };
        let cfg = SolverConfig {
            rel_f_tol: 0.0,
            ..Default::default()
        };
        let r = solve(&obj, &SymMat::scaled_identity(4, 0.5), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::ConvergedN);
        assert!(r.n_merit < cfg.eps);
        assert!(r.f < 1e-4, "f = {}", r.f);
    }

    #[test]
    fn linear_objective_reaches_closed_form_optimum() {
        let g = SymMat::from_diagonal(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let obj = Linear { g: g.clone() };
        let cfg = SolverConfig {
            rel_f_tol: 0.0,
            ..Default::default()
        };
        let r = solve(&obj, &SymMat::scaled_identity(6, 0.5), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::ConvergedN);
        assert!((r.f + 3.0).abs() < 1e-3, "f = {}", r.f);
        let target = SymMat::from_diagonal(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!((&r.x - &target).frob_norm() < 1e-2);
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let obj = SquaredNorm { n: 3 };
        let r = solve(&obj, &SymMat::zeros(3), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::ConvergedN);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.counts.value, 1);
        assert_eq!(r.counts.gradient, 1);
        assert_eq!(r.counts.hess_quad, 0);
    }

    #[test]
    fn observer_sees_every_record() {
        let obj = SquaredNorm { n: 3 };
        let mut seen = Vec::new();
        let r = solve_with_observer(
            &obj,
            &SymMat::scaled_identity(3, 0.5),
            &SolverConfig::default(),
            |rec| seen.push(rec.clone()),
        )
        .unwrap();
        assert_eq!(seen, r.trace);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let obj = crate::problems::F6::new(4);
        let cfg = SolverConfig {
            max_iter: 2,
            rel_f_tol: 0.0,
            ..Default::default()
        };
        let r = solve(&obj, &SymMat::scaled_identity(4, 0.5), &cfg).unwrap();
        assert_eq!(r.status, SolveStatus::IterLimit);
        assert_eq!(r.iterations, 2);
    }
}
