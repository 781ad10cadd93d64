//! Benchmark objectives and the general box transform.
//!
//! Functions 1–7:
//!
//! | id | `f(X)` |
//! |----|--------|
//! | 1 | `−2⟨C₁|X⟩ + ⟨X|X⟩` |
//! | 2 | `3 cos⟨X|X⟩ + sin⟨X+C₁|X+C₁⟩` |
//! | 3 | `log(⟨X|X⟩ + 1) + 5⟨C₁|X⟩` |
//! | 4 | `1 + 2 ⟨X−C₁|X−C₁⟩³ / n³` |
//! | 5 | generalized Rosenbrock over the upper triangle, data `A` |
//! | 6 | row-balance residuals and cosine wells around `A` |
//! | 7 | `⟨C₁|X⟩ − log det(X + ε̄I) − log det((1+ε̄)I − X)` |
//!
//! `C₁ = Q diag(κ) Qᵀ` with `κᵢ ~ U[−1, 2]` and Haar `Q`, seeded.
//! `A` has `½` on the diagonal and `1/(2(n−1))` elsewhere.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::sampling::{random_orthogonal, rng};
use crate::symmat::SymMat;

pub const DEFAULT_EPSILON_BAR: f64 = 0.02;

/// One benchmark instance: which function, its size and the instance seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub function: u8,
    pub n: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon_bar")]
    pub epsilon_bar: f64,
}

fn default_epsilon_bar() -> f64 {
    DEFAULT_EPSILON_BAR
}

impl ProblemSpec {
    pub fn new(function: u8, n: usize, seed: u64) -> Self {
        Self {
            function,
            n,
            seed,
            epsilon_bar: DEFAULT_EPSILON_BAR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=7).contains(&self.function) {
            return Err(Error::InvalidArgument(format!(
                "function id must be in 1..=7, got {}",
                self.function
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "n must be at least 2, got {}",
                self.n
            )));
        }
        if !(self.epsilon_bar > 0.0 && self.epsilon_bar.is_finite()) {
            return Err(Error::InvalidArgument("epsilon_bar must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct serializes")
    }
}

/// Seeded `C₁ = Q diag(κ) Qᵀ`, `κᵢ` uniform on `[−1, 2]`.
///
/// The orthogonal factor is drawn first (`n²` normals, row-major), then the
/// `n` eigenvalues.
pub fn random_c1(n: usize, seed: u64) -> SymMat {
    let (q, kappa) = random_c1_factors(n, seed);
    SymMat::from_spectrum(&q, &kappa).expect("matching sizes")
}

/// The orthogonal factor and eigenvalues behind [`random_c1`].
pub fn random_c1_factors(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let q = random_orthogonal(n, &mut r);
    let kappa = (0..n).map(|_| r.random_range(-1.0..=2.0)).collect();
    (q, kappa)
}

/// `Aᵢᵢ = ½`, `Aᵢⱼ = 1/(2(n−1))` for `i ≠ j`.
pub fn matrix_a(n: usize) -> SymMat {
    assert!(n >= 2, "matrix A needs n >= 2");
    let off = 1.0 / (2.0 * (n as f64 - 1.0));
    SymMat::from_upper_fn(n, |i, j| if i == j { 0.5 } else { off })
}

/// Spectral projection of `c` onto the unit box.
pub fn spectral_clamp(c: &SymMat) -> Result<SymMat> {
    c.clamp_spectrum(0.0, 1.0)
}

/// Builds the objective for a benchmark instance.
pub fn make_objective(spec: &ProblemSpec) -> Result<Box<dyn Objective>> {
    make_objective_with_c1(spec, None)
}

/// Like [`make_objective`], with `C₁` supplied instead of drawn from the
/// seed. Functions 5 and 6 do not use `C₁` and ignore it.
pub fn make_objective_with_c1(spec: &ProblemSpec, c1: Option<SymMat>) -> Result<Box<dyn Objective>> {
    spec.validate()?;
    let n = spec.n;
    if let Some(c) = &c1 {
        check_dim(n, c)?;
    }
    let c = || c1.clone().unwrap_or_else(|| random_c1(n, spec.seed));
    Ok(match spec.function {
        1 => Box::new(F1 { c: c() }),
        2 => Box::new(F2 { c: c() }),
        3 => Box::new(F3 { c: c() }),
        4 => Box::new(F4 { c: c() }),
        5 => Box::new(F5::new(n)),
        6 => Box::new(F6::new(n)),
        7 => Box::new(F7 {
            c: c(),
            eps_bar: spec.epsilon_bar,
        }),
        _ => unreachable!("validated"),
    })
}

fn check_dim(n: usize, x: &SymMat) -> Result<()> {
    if x.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Function 1: `−2⟨C₁|X⟩ + ⟨X|X⟩ = ‖X − C₁‖² − ‖C₁‖²`.
#[derive(Clone, Debug)]
pub struct F1 {
    pub c: SymMat,
}

impl Objective for F1 {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(-2.0 * self.c.dot(x) + x.frob_norm_sq())
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        check_dim(self.dim(), x)?;
        Ok(&(x - &self.c) * 2.0)
    }
    fn hess_quad(&self, _x: &SymMat, s: &SymMat) -> Result<f64> {
        Ok(2.0 * s.frob_norm_sq())
    }
}

/// Function 2: `3 cos⟨X|X⟩ + sin⟨X+C₁|X+C₁⟩`.
#[derive(Clone, Debug)]
pub struct F2 {
    pub c: SymMat,
}

impl Objective for F2 {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let u = x.frob_norm_sq();
        let w = (x + &self.c).frob_norm_sq();
        Ok(3.0 * u.cos() + w.sin())
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        check_dim(self.dim(), x)?;
        let u = x.frob_norm_sq();
        let xc = x + &self.c;
        let w = xc.frob_norm_sq();
        Ok(&(x * (-6.0 * u.sin())) + &(&xc * (2.0 * w.cos())))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let u = x.frob_norm_sq();
        let xc = x + &self.c;
        let w = xc.frob_norm_sq();
        let ss = s.frob_norm_sq();
        let xs = x.dot(s);
        let xcs = xc.dot(s);
        Ok(3.0 * (-2.0 * u.sin() * ss - 4.0 * u.cos() * xs * xs)
            + (2.0 * w.cos() * ss - 4.0 * w.sin() * xcs * xcs))
    }
}

/// Function 3: `log(⟨X|X⟩ + 1) + 5⟨C₁|X⟩`.
#[derive(Clone, Debug)]
pub struct F3 {
    pub c: SymMat,
}

impl Objective for F3 {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        Ok(x.frob_norm_sq().ln_1p() + 5.0 * self.c.dot(x))
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        check_dim(self.dim(), x)?;
        let u1 = x.frob_norm_sq() + 1.0;
        Ok(&(x * (2.0 / u1)) + &(&self.c * 5.0))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let u1 = x.frob_norm_sq() + 1.0;
        let xs = x.dot(s);
        Ok(2.0 * s.frob_norm_sq() / u1 - 4.0 * xs * xs / (u1 * u1))
    }
}

/// Function 4: `1 + 2 w³ / n³`, `w = ‖X − C₁‖²`.
#[derive(Clone, Debug)]
pub struct F4 {
    pub c: SymMat,
}

impl F4 {
    fn n3(&self) -> f64 {
        (self.c.dim() as f64).powi(3)
    }
}

impl Objective for F4 {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let w = (x - &self.c).frob_norm_sq();
        Ok(1.0 + 2.0 * w.powi(3) / self.n3())
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        check_dim(self.dim(), x)?;
        let r = x - &self.c;
        let w = r.frob_norm_sq();
        Ok(&r * (12.0 * w * w / self.n3()))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        check_dim(self.dim(), x)?;
        let r = x - &self.c;
        let w = r.frob_norm_sq();
        let rs = r.dot(s);
        Ok(2.0 / self.n3() * (24.0 * w * rs * rs + 6.0 * w * w * s.frob_norm_sq()))
    }
}

/// Residual `coef·X[p] − X[q]²` over upper-triangle entries.
#[derive(Clone, Copy, Debug)]
struct RosenTerm {
    coef: f64,
    p: (usize, usize),
    q: (usize, usize),
}

/// Function 5: over upper-triangle unknowns,
///
/// ```text
/// 1 + Σ_{i≤j} (Aᵢⱼ − Xᵢⱼ)²
///   + 100 Σ_{i<n} Σ_{i≤j<n} (Aᵢⱼ²/Aᵢ,ⱼ₊₁ · Xᵢ,ⱼ₊₁ − Xᵢⱼ²)²
///   + 100 Σ_{i<n} (Aᵢₙ²/Aᵢ₊₁,ᵢ₊₁ · Xᵢ₊₁,ᵢ₊₁ − Xᵢₙ²)²
/// ```
///
/// (1-based indices). The last sum pairs column `n` with the next
/// diagonal entry, exactly as the benchmark defines it.
#[derive(Clone, Debug)]
pub struct F5 {
    a: SymMat,
    terms: Vec<RosenTerm>,
}

impl F5 {
    pub fn new(n: usize) -> Self {
        let a = matrix_a(n);
        let mut terms = Vec::new();
        for i in 0..n - 1 {
            for j in i..n - 1 {
                terms.push(RosenTerm {
                    coef: a.get(i, j).powi(2) / a.get(i, j + 1),
                    p: (i, j + 1),
                    q: (i, j),
                });
            }
        }
        for i in 0..n - 1 {
            terms.push(RosenTerm {
                coef: a.get(i, n - 1).powi(2) / a.get(i + 1, i + 1),
                p: (i + 1, i + 1),
                q: (i, n - 1),
            });
        }
        Self { a, terms }
    }

    fn at(x: &SymMat, (i, j): (usize, usize)) -> f64 {
        x.get(i, j)
    }
}

impl Objective for F5 {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        let n = self.dim();
        check_dim(n, x)?;
        let mut f = 1.0;
        for j in 0..n {
            for i in 0..=j {
                f += (self.a.get(i, j) - x.get(i, j)).powi(2);
            }
        }
        for t in &self.terms {
            let r = t.coef * Self::at(x, t.p) - Self::at(x, t.q).powi(2);
            f += 100.0 * r * r;
        }
        Ok(f)
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        let n = self.dim();
        check_dim(n, x)?;
        // partials with respect to the upper-triangle unknowns
        let mut raw = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                raw[(i, j)] += 2.0 * (x.get(i, j) - self.a.get(i, j));
            }
        }
        for t in &self.terms {
            let xq = Self::at(x, t.q);
            let r = t.coef * Self::at(x, t.p) - xq * xq;
            raw[t.p] += 200.0 * r * t.coef;
            raw[t.q] += 200.0 * r * (-2.0 * xq);
        }
        Ok(symmetric_from_upper_partials(&raw))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        let n = self.dim();
        check_dim(n, x)?;
        let mut h = 0.0;
        for j in 0..n {
            for i in 0..=j {
                h += 2.0 * s.get(i, j).powi(2);
            }
        }
        for t in &self.terms {
            let xq = Self::at(x, t.q);
            let sq = Self::at(s, t.q);
            let r = t.coef * Self::at(x, t.p) - xq * xq;
            let dr = t.coef * Self::at(s, t.p) - 2.0 * xq * sq;
            let ddr = -2.0 * sq * sq;
            h += 100.0 * (2.0 * dr * dr + 2.0 * r * ddr);
        }
        Ok(h)
    }
}

/// Maps partials with respect to upper-triangle unknowns to the symmetric
/// gradient: diagonal kept, off-diagonal halved and mirrored.
fn symmetric_from_upper_partials(raw: &DMatrix<f64>) -> SymMat {
    let n = raw.nrows();
    SymMat::from_upper_fn(n, |i, j| {
        if i == j {
            raw[(i, i)]
        } else {
            0.5 * raw[(i, j)]
        }
    })
}

/// Function 6:
///
/// ```text
/// (1/n²) Σᵢ (Σ_{j≠i} Xᵢⱼ/Aᵢⱼ − (n−1) Xᵢᵢ²/Aᵢᵢ²)²  −  (1/n²) Σᵢⱼ cos((Xᵢⱼ − Aᵢⱼ)²)
/// ```
///
/// Minimum `−1` at `X = A`.
#[derive(Clone, Debug)]
pub struct F6 {
    a: SymMat,
}

impl F6 {
    pub fn new(n: usize) -> Self {
        Self { a: matrix_a(n) }
    }

    fn row_residuals(&self, x: &SymMat) -> Vec<f64> {
        let n = self.dim();
        let nm1 = n as f64 - 1.0;
        (0..n)
            .map(|i| {
                let mut r = 0.0;
                for j in 0..n {
                    if j != i {
                        r += x.get(i, j) / self.a.get(i, j);
                    }
                }
                r - nm1 * x.get(i, i).powi(2) / self.a.get(i, i).powi(2)
            })
            .collect()
    }
}

impl Objective for F6 {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        let n = self.dim();
        check_dim(n, x)?;
        let inv_n2 = 1.0 / (n as f64).powi(2);
        let balance: f64 = self.row_residuals(x).iter().map(|r| r * r).sum();
        let mut wells = 0.0;
        for i in 0..n {
            for j in 0..n {
                wells += (x.get(i, j) - self.a.get(i, j)).powi(2).cos();
            }
        }
        Ok(inv_n2 * balance - inv_n2 * wells)
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        let n = self.dim();
        check_dim(n, x)?;
        let inv_n2 = 1.0 / (n as f64).powi(2);
        let nm1 = n as f64 - 1.0;
        let res = self.row_residuals(x);
        // partials treating all n² entries as independent
        let mut raw = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let e = x.get(i, j) - self.a.get(i, j);
                let mut v = inv_n2 * 2.0 * e * (e * e).sin();
                if i == j {
                    v += inv_n2
                        * 2.0
                        * res[i]
                        * (-2.0 * nm1 * x.get(i, i) / self.a.get(i, i).powi(2));
                } else {
                    v += inv_n2 * 2.0 * res[i] / self.a.get(i, j);
                }
                raw[(i, j)] = v;
            }
        }
        Ok(SymMat::symmetrize_unchecked(raw))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        let n = self.dim();
        check_dim(n, x)?;
        let inv_n2 = 1.0 / (n as f64).powi(2);
        let nm1 = n as f64 - 1.0;
        let res = self.row_residuals(x);
        let mut h = 0.0;
        for (i, &ri) in res.iter().enumerate() {
            let aii2 = self.a.get(i, i).powi(2);
            let mut dr = -2.0 * nm1 * x.get(i, i) * s.get(i, i) / aii2;
            for j in 0..n {
                if j != i {
                    dr += s.get(i, j) / self.a.get(i, j);
                }
            }
            let ddr = -2.0 * nm1 * s.get(i, i).powi(2) / aii2;
            h += 2.0 * dr * dr + 2.0 * ri * ddr;
        }
        for i in 0..n {
            for j in 0..n {
                let e = x.get(i, j) - self.a.get(i, j);
                let e2 = e * e;
                let sij2 = s.get(i, j).powi(2);
                h += 4.0 * e2 * sij2 * e2.cos() + 2.0 * sij2 * e2.sin();
            }
        }
        Ok(inv_n2 * h)
    }
}

/// Function 7: `⟨C₁|X⟩ − log det(X + ε̄I) − log det((1+ε̄)I − X)`.
///
/// Defined only where both shifted matrices are positive definite; points
/// of the unit box have margin `ε̄`.
#[derive(Clone, Debug)]
pub struct F7 {
    pub c: SymMat,
    pub eps_bar: f64,
}

impl F7 {
    /// Cholesky factors of `X + ε̄I` and `(1+ε̄)I − X`.
    fn factors(&self, x: &SymMat) -> Result<[Cholesky<f64, Dyn>; 2]> {
        check_dim(self.dim(), x)?;
        let n = self.dim();
        let eye = DMatrix::<f64>::identity(n, n);
        let lower = x.as_matrix() + &eye * self.eps_bar;
        let upper = &eye * (1.0 + self.eps_bar) - x.as_matrix();
        let chol = |m: DMatrix<f64>, which: &str| {
            Cholesky::new(m).ok_or_else(|| {
                Error::Domain(format!("log-det argument {which} is not positive definite"))
            })
        };
        Ok([chol(lower, "X + eps*I")?, chol(upper, "(1+eps)*I - X")?])
    }
}

fn log_det(ch: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

impl Objective for F7 {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        let [lo, up] = self.factors(x)?;
        Ok(self.c.dot(x) - log_det(&lo) - log_det(&up))
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        let [lo, up] = self.factors(x)?;
        let g = self.c.as_matrix() - lo.inverse() + up.inverse();
        Ok(SymMat::symmetrize_unchecked(g))
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        // d²/dt² [−log det(M ± tS)] = ‖L⁻¹ S L⁻ᵀ‖_F² with M = LLᵀ
        let [lo, up] = self.factors(x)?;
        let whitened = |ch: &Cholesky<f64, Dyn>| {
            let l = ch.l();
            let w = l
                .solve_lower_triangular(s.as_matrix())
                .expect("Cholesky factor has a positive diagonal");
            let v = l
                .solve_lower_triangular(&w.transpose())
                .expect("Cholesky factor has a positive diagonal");
            v.norm_squared()
        };
        Ok(whitened(&lo) + whitened(&up))
    }
}

/// Objective on the unit box equivalent to `inner` on `L ⪯ X ⪯ U`, via
/// `X = C X̄ Cᵀ + L` with `U − L = CCᵀ`.
pub struct BoxTransform<O> {
    inner: O,
    lower: SymMat,
    c: DMatrix<f64>,
}

impl<O: Objective> BoxTransform<O> {
    pub fn new(lower: SymMat, upper: SymMat, inner: O) -> Result<Self> {
        if lower.dim() != upper.dim() || lower.dim() != inner.dim() {
            return Err(Error::DimensionMismatch {
                expected: inner.dim(),
                found: if lower.dim() != inner.dim() {
                    lower.dim()
                } else {
                    upper.dim()
                },
            });
        }
        let gap = upper.as_matrix() - lower.as_matrix();
        let c = Cholesky::new(gap)
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        Ok(Self { inner, lower, c })
    }

    /// The lower-triangular factor `C`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    /// `X = C X̄ Cᵀ + L`.
    pub fn back_map(&self, xbar: &SymMat) -> Result<SymMat> {
        Ok(&xbar.congruence(&self.c)? + &self.lower)
    }

    /// `X̄ = C⁻¹ (X − L) C⁻ᵀ`.
    pub fn forward_map(&self, x: &SymMat) -> Result<SymMat> {
        let shifted = x - &self.lower;
        let w = self
            .c
            .solve_lower_triangular(shifted.as_matrix())
            .ok_or(Error::NotPositiveDefinite)?;
        let v = self
            .c
            .solve_lower_triangular(&w.transpose())
            .ok_or(Error::NotPositiveDefinite)?;
        SymMat::symmetrized(v)
    }
}

impl<O: Objective> Objective for BoxTransform<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, xbar: &SymMat) -> Result<f64> {
        self.inner.value(&self.back_map(xbar)?)
    }
    fn gradient(&self, xbar: &SymMat) -> Result<SymMat> {
        let g = self.inner.gradient(&self.back_map(xbar)?)?;
        g.congruence(&self.c.transpose())
    }
    fn hess_quad(&self, xbar: &SymMat, s: &SymMat) -> Result<f64> {
        self.inner
            .hess_quad(&self.back_map(xbar)?, &s.congruence(&self.c)?)
    }
}

/// Free-function form of [`BoxTransform::new`].
pub fn box_transform<O: Objective>(lower: SymMat, upper: SymMat, inner: O) -> Result<BoxTransform<O>> {
    BoxTransform::new(lower, upper, inner)
}
