//! Spectral quantities of the current iterate.
//!
//! For a feasible `X` with gradient `G = P Γ Pᵀ` (eigenvalues descending),
//! the eigenvectors are split into `P₊` (eigenvalue `> 0`) and `P₋`
//! (eigenvalue `≤ 0`). The boundary matrices
//!
//! ```text
//! V₊ = P₊ᵀ X P₊        (distance to the lower boundary O along P₊)
//! V₋ = P₋ᵀ (I − X) P₋  (distance to the upper boundary I along P₋)
//! ```
//!
//! give the search direction
//!
//! ```text
//! D = P [ V₊^½ Γ₊ V₊^½      γ P₊ᵀ X P₋ ] Pᵀ,    γ = ‖G‖₂
//!       [ γ P₋ᵀ X P₊        V₋^½ Γ₋ V₋^½ ]
//! ```
//!
//! and the merit value `N = ⟨G|D⟩ = ‖V₊^¼Γ₊V₊^¼‖² + ‖V₋^¼Γ₋V₋^¼‖² ≥ 0`,
//! which vanishes exactly at first-order stationary points.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::symmat::{eig_dense, psd_powers_dense, SymMat};

/// Relative tolerance for the two independent formulas of `N` and `‖D‖²`.
pub const DUAL_FORMULA_TOL: f64 = 1e-8;

/// Eigendecomposition of a gradient, partitioned by sign.
#[derive(Clone, Debug)]
pub struct GradSplit {
    g: SymMat,
    /// All eigenvectors `[P₊ P₋]`, columns ordered by descending eigenvalue.
    p: DMatrix<f64>,
    gammas: Vec<f64>,
    n_plus: usize,
    pub gamma_max: f64,
}

impl GradSplit {
    pub fn dim(&self) -> usize {
        self.gammas.len()
    }

    pub fn n_plus(&self) -> usize {
        self.n_plus
    }

    pub fn n_minus(&self) -> usize {
        self.dim() - self.n_plus
    }

    pub fn gradient(&self) -> &SymMat {
        &self.g
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn p_plus(&self) -> DMatrixView<'_, f64> {
        self.p.columns(0, self.n_plus)
    }

    pub fn p_minus(&self) -> DMatrixView<'_, f64> {
        self.p.columns(self.n_plus, self.n_minus())
    }

    pub fn gamma_plus(&self) -> &[f64] {
        &self.gammas[..self.n_plus]
    }

    pub fn gamma_minus(&self) -> &[f64] {
        &self.gammas[self.n_plus..]
    }

    /// `P₋P₋ᵀ`, the minimizer of `⟨G|X'⟩` over the unit box.
    pub fn linear_minimizer(&self) -> SymMat {
        let pm = self.p_minus();
        SymMat::symmetrize_unchecked(pm * pm.transpose())
    }
}

/// Splits `G` into strictly positive and non-positive eigen-blocks.
pub fn grad_split(g: &SymMat) -> Result<GradSplit> {
    let (gammas, p) = eig_dense(g.as_matrix())?;
    let n_plus = gammas.iter().take_while(|&&v| v > 0.0).count();
    let gamma_max = gammas[0].abs().max(gammas[gammas.len() - 1].abs());
    Ok(GradSplit {
        g: g.clone(),
        p,
        gammas,
        n_plus,
        gamma_max,
    })
}

/// `V₊ = P₊ᵀXP₊` and `V₋ = P₋ᵀ(I−X)P₋`; either may be `0 × 0`.
#[derive(Clone, Debug)]
pub struct BoundaryMats {
    pub v_plus: DMatrix<f64>,
    pub v_minus: DMatrix<f64>,
}

fn check_split(x: &SymMat, split: &GradSplit) -> Result<()> {
    if x.dim() != split.dim() {
        return Err(Error::DimensionMismatch {
            expected: split.dim(),
            found: x.dim(),
        });
    }
    Ok(())
}

/// `X` expressed in the gradient's eigenbasis, `PᵀXP`.
fn rotated(x: &SymMat, split: &GradSplit) -> DMatrix<f64> {
    let y = split.p.transpose() * x.as_matrix() * &split.p;
    (&y + y.transpose()) * 0.5
}

fn blocks_of(y: &DMatrix<f64>, n_plus: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = y.nrows();
    let n_minus = n - n_plus;
    let v_plus = y.view((0, 0), (n_plus, n_plus)).into_owned();
    let cross = y.view((0, n_plus), (n_plus, n_minus)).into_owned();
    let v_minus =
        DMatrix::identity(n_minus, n_minus) - y.view((n_plus, n_plus), (n_minus, n_minus));
    (v_plus, cross, v_minus)
}

pub fn boundary_mats(x: &SymMat, split: &GradSplit) -> Result<BoundaryMats> {
    check_split(x, split)?;
    let (v_plus, _, v_minus) = blocks_of(&rotated(x, split), split.n_plus);
    Ok(BoundaryMats { v_plus, v_minus })
}

/// Search direction and merit value at one iterate.
#[derive(Clone, Debug)]
pub struct Direction {
    /// `D(X)`.
    pub d: SymMat,
    /// `N(X)` from the quarter-power formula; never negative.
    pub n_merit: f64,
    /// `N(X)` as `⟨G|D⟩`, kept for diagnostics.
    pub n_inner: f64,
    /// `‖D‖_F` computed directly from `d`.
    pub d_norm: f64,
    /// `‖D‖_F²` from the block expansion.
    pub d_norm_sq_blocks: f64,
    /// `S = D/‖D‖_F`, present only when `d_norm > 0`.
    pub s: Option<SymMat>,
    pub gamma_max: f64,
    /// `‖D‖_F / γ_max`, `+∞` when `γ_max = 0`.
    pub alpha_max_feasible: f64,
}

impl Direction {
    pub fn is_stationary(&self) -> bool {
        self.d_norm == 0.0
    }
}

fn scale_sandwich(h: &DMatrix<f64>, gamma: &[f64]) -> DMatrix<f64> {
    // h·diag(gamma)·h
    let mut hg = h.clone();
    for (j, &g) in gamma.iter().enumerate() {
        hg.column_mut(j).scale_mut(g);
    }
    let b = hg * h;
    (&b + b.transpose()) * 0.5
}

/// Assembles `D(X)`, `N(X)` and the feasible step bound, cross-checking
/// `N` and `‖D‖²` against their alternative closed forms.
pub fn direction_matrix(x: &SymMat, split: &GradSplit) -> Result<Direction> {
    check_split(x, split)?;
    let n = x.dim();
    let gamma_max = split.gamma_max;
    if gamma_max == 0.0 {
        return Ok(Direction {
            d: SymMat::zeros(n),
            n_merit: 0.0,
            n_inner: 0.0,
            d_norm: 0.0,
            d_norm_sq_blocks: 0.0,
            s: None,
            gamma_max,
            alpha_max_feasible: f64::INFINITY,
        });
    }

    let np = split.n_plus;
    let (v_plus, cross, v_minus) = blocks_of(&rotated(x, split), np);

    let pow_plus = psd_powers_dense(&v_plus, &[0.5, 0.25], 1.0)?;
    let pow_minus = psd_powers_dense(&v_minus, &[0.5, 0.25], 1.0)?;

    let b_plus = scale_sandwich(&pow_plus[0], split.gamma_plus());
    let b_minus = scale_sandwich(&pow_minus[0], split.gamma_minus());
    let n_merit = scale_sandwich(&pow_plus[1], split.gamma_plus()).norm_squared()
        + scale_sandwich(&pow_minus[1], split.gamma_minus()).norm_squared();

    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (np, np)).copy_from(&b_plus);
    m.view_mut((np, np), (n - np, n - np)).copy_from(&b_minus);
    m.view_mut((0, np), (np, n - np)).copy_from(&(&cross * gamma_max));
    m.view_mut((np, 0), (n - np, np))
        .copy_from(&(cross.transpose() * gamma_max));

    let d = SymMat::symmetrize_unchecked(&split.p * m * split.p.transpose());
    let d_norm = d.frob_norm();
    let d_norm_sq_blocks = b_plus.norm_squared()
        + b_minus.norm_squared()
        + 2.0 * gamma_max * gamma_max * cross.norm_squared();

    let n_inner = split.g.dot(&d);

    let n_scale = n_merit.max(1.0);
    if (n_inner - n_merit).abs() > DUAL_FORMULA_TOL * n_scale {
        return Err(Error::Inconsistent(format!(
            "merit formulas disagree: <G|D> = {n_inner:e}, quarter-power = {n_merit:e}"
        )));
    }
    let dsq = d_norm * d_norm;
    if (dsq - d_norm_sq_blocks).abs() > DUAL_FORMULA_TOL * dsq.max(1.0) {
        return Err(Error::Inconsistent(format!(
            "direction norm formulas disagree: direct {dsq:e}, blocks {d_norm_sq_blocks:e}"
        )));
    }

    let s = (d_norm > 0.0).then(|| &d * d_norm.recip());
    Ok(Direction {
        d,
        n_merit,
        n_inner,
        d_norm,
        d_norm_sq_blocks,
        s,
        gamma_max,
        alpha_max_feasible: d_norm / gamma_max,
    })
}

/// Convenience: split `g` and build the direction at `x`.
pub fn direction_at(x: &SymMat, g: &SymMat) -> Result<(GradSplit, Direction)> {
    let split = grad_split(g)?;
    let dir = direction_matrix(x, &split)?;
    Ok((split, dir))
}

/// `‖D‖_F / γ_max`: every step `X − αS` with `α` up to this bound is feasible.
pub fn max_feasible_step(dir: &Direction) -> Result<f64> {
    if !(dir.d_norm > 0.0) {
        return Err(Error::InvalidArgument(
            "feasible step requested for a zero direction".into(),
        ));
    }
    if dir.gamma_max == 0.0 {
        return Err(Error::Inconsistent(
            "non-zero direction with zero gradient".into(),
        ));
    }
    Ok(dir.d_norm / dir.gamma_max)
}

/// Optimality certificate `min over the box of ⟨G|X' − X⟩`
/// `= Trace(Γ₋) − ⟨G|X⟩ ≤ 0`, zero exactly at first-order points.
pub fn f_lower(x: &SymMat, g: &SymMat) -> Result<f64> {
    let split = grad_split(g)?;
    f_lower_from_split(x, g, &split)
}

pub fn f_lower_from_split(x: &SymMat, g: &SymMat, split: &GradSplit) -> Result<f64> {
    check_split(x, split)?;
    let trace_minus: f64 = split.gamma_minus().iter().sum();
    Ok(trace_minus - g.frob_inner(x)?)
}
