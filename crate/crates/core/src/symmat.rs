//! Dense real symmetric matrices.
//!
//! [`SymMat`] is the value type used for iterates, gradients, directions and
//! problem data. Symmetry is enforced at construction: every constructor
//! either checks it exactly or builds the matrix from one triangle.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this are rejected by [`SymMat::frac_power`].
pub const PSD_REJECT_TOL: f64 = 1e-8;

/// Iteration cap handed to the implicit QR sweep, per unit of dimension.
const EIG_ITERS_PER_DIM: usize = 100;

/// Dense real symmetric `n × n` matrix with `n ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat {
    m: DMatrix<f64>,
}

/// Spectral decomposition `A = V diag(values) Vᵀ` with values sorted in
/// descending order and column `j` of `vectors` paired with `values[j]`.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuild `V diag(g(values)) Vᵀ`.
    pub fn recompose(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        recompose(&self.vectors, &self.values, g)
    }
}

impl SymMat {
    /// Wraps a square matrix, checking that it is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square_nonempty(&m)?;
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self { m })
    }

    /// Wraps `(m + mᵀ)/2`.
    pub fn symmetrized(m: DMatrix<f64>) -> Result<Self> {
        check_square_nonempty(&m)?;
        Ok(Self::symmetrize_unchecked(m))
    }

    pub(crate) fn symmetrize_unchecked(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    /// Builds the matrix from `f(i, j)` evaluated on the upper triangle (`i ≤ j`).
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "SymMat dimension must be at least 1");
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "SymMat dimension must be at least 1");
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        assert!(n >= 1, "SymMat dimension must be at least 1");
        Self {
            m: DMatrix::from_diagonal_element(n, n, s),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        assert!(!d.is_empty(), "SymMat dimension must be at least 1");
        let mut m = DMatrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        Self { m }
    }

    /// `Q diag(values) Qᵀ`, symmetrized.
    pub fn from_spectrum(q: &DMatrix<f64>, values: &[f64]) -> Result<Self> {
        if q.ncols() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: q.ncols(),
                found: values.len(),
            });
        }
        Self::symmetrized(recompose(q, values, |v| v))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    fn check_dim(&self, other: &SymMat) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Frobenius inner product `⟨A|B⟩ = Trace(AᵀB) = Σᵢⱼ AᵢⱼBᵢⱼ`.
    pub fn frob_inner(&self, other: &SymMat) -> Result<f64> {
        self.check_dim(other)?;
        Ok(self.dot(other))
    }

    /// Unchecked inner product for internal callers that already agree on size.
    pub(crate) fn dot(&self, other: &SymMat) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.m.dot(&other.m)
    }

    pub fn frob_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.m.norm_squared()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Full eigendecomposition with descending eigenvalues.
    pub fn eig(&self) -> Result<EigenPair> {
        let (values, vectors) = eig_dense(&self.m)?;
        Ok(EigenPair { values, vectors })
    }

    /// Eigenvalues only, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let mut values = SymmetricEigen::try_new(
            self.m.clone(),
            f64::EPSILON,
            EIG_ITERS_PER_DIM * n.max(10),
        )
        .ok_or(Error::EigenNoConvergence(n))?
        .eigenvalues
        .iter()
        .copied()
        .collect::<Vec<_>>();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenNoConvergence(n));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(values)
    }

    /// Spectral 2-norm `max(|γ₁|, |γₙ|)`.
    pub fn norm2(&self) -> Result<f64> {
        let v = self.eigenvalues()?;
        Ok(v[0].abs().max(v[v.len() - 1].abs()))
    }

    /// `A^r = Q diag(κᵢ^r) Qᵀ` for positive semidefinite `A`.
    ///
    /// Eigenvalues in `[-1e-8, 0)` are clamped to zero first.
    pub fn frac_power(&self, r: f64) -> Result<SymMat> {
        let p = psd_power_dense(&self.m, r, f64::INFINITY)?;
        Ok(Self::symmetrize_unchecked(p))
    }

    /// `true` iff every eigenvalue lies in `[-tol, 1 + tol]`.
    pub fn box_feasible(&self, tol: f64) -> Result<bool> {
        let v = self.eigenvalues()?;
        Ok(v[v.len() - 1] >= -tol && v[0] <= 1.0 + tol)
    }

    /// Projects the spectrum into `[lo, hi]`, keeping the eigenvectors.
    pub fn clamp_spectrum(&self, lo: f64, hi: f64) -> Result<SymMat> {
        let e = self.eig()?;
        Ok(Self::symmetrize_unchecked(e.recompose(|v| v.clamp(lo, hi))))
    }

    /// Congruence `C·A·Cᵀ` with a square `C` of matching size.
    pub fn congruence(&self, c: &DMatrix<f64>) -> Result<SymMat> {
        if c.nrows() != self.dim() || c.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: c.nrows(),
            });
        }
        Ok(Self::symmetrize_unchecked(c * &self.m * c.transpose()))
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &SymMat) -> Result<SymMat> {
        self.check_dim(other)?;
        Ok(Self {
            m: &self.m + &other.m * alpha,
        })
    }

    /// Serializes to the plain-text matrix format: first line `n`, then `n`
    /// rows of `n` space-separated decimals.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut s = String::with_capacity(n * n * 24);
        let _ = writeln!(s, "{n}");
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{:?}", self.m[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    /// Parses the plain-text matrix format.
    ///
    /// Off-diagonal pairs may differ by `1e-12` relative (decimal rounding in
    /// hand-written files); the stored matrix is their average.
    pub fn from_text(text: &str) -> Result<SymMat> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad dimension line {header:?}")))?;
        if n == 0 {
            return Err(Error::Parse("dimension must be at least 1".into()));
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {n} rows, found {i}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {t:?} in row {i}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Parse(format!("non-finite entry at ({i}, {j})")));
                }
                m[(i, j)] = v;
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("trailing data after {n} rows")));
        }
        for j in 0..n {
            for i in (j + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self::symmetrize_unchecked(m))
    }

    pub fn read_from(path: &Path) -> Result<SymMat> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Free-function form of [`SymMat::frob_inner`].
pub fn frob_inner(a: &SymMat, b: &SymMat) -> Result<f64> {
    a.frob_inner(b)
}

/// Free-function form of [`SymMat::eig`].
pub fn eig_sym(a: &SymMat) -> Result<EigenPair> {
    a.eig()
}

/// Free-function form of [`SymMat::frac_power`].
pub fn frac_power(a: &SymMat, r: f64) -> Result<SymMat> {
    a.frac_power(r)
}

/// Free-function form of [`SymMat::box_feasible`].
pub fn box_feasible(x: &SymMat, tol: f64) -> Result<bool> {
    x.box_feasible(tol)
}

fn check_square_nonempty(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("matrix dimension must be at least 1".into()));
    }
    Ok(())
}

/// Eigendecomposition of a symmetric dense matrix (possibly 0×0), values
/// descending.
pub(crate) fn eig_dense(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIG_ITERS_PER_DIM * n.max(10))
        .ok_or(Error::EigenNoConvergence(n))?;
    if se.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNoConvergence(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].total_cmp(&se.eigenvalues[a]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

/// `Q diag(g(values)) Qᵀ` where `Q` may be rectangular (`n × k`).
pub(crate) fn recompose(q: &DMatrix<f64>, values: &[f64], g: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut scaled = q.clone();
    for (j, &v) in values.iter().enumerate() {
        let s = g(v);
        scaled.column_mut(j).scale_mut(s);
    }
    scaled * q.transpose()
}

/// Fractional power of a symmetric PSD dense matrix (possibly 0×0).
///
/// Eigenvalues are clamped into `[0, upper]`; any eigenvalue below
/// `-PSD_REJECT_TOL` or above `upper + PSD_REJECT_TOL` is an error.
pub(crate) fn psd_power_dense(m: &DMatrix<f64>, r: f64, upper: f64) -> Result<DMatrix<f64>> {
    Ok(psd_powers_dense(m, &[r], upper)?.pop().expect("one power requested"))
}

/// Several fractional powers sharing one decomposition.
pub(crate) fn psd_powers_dense(
    m: &DMatrix<f64>,
    powers: &[f64],
    upper: f64,
) -> Result<Vec<DMatrix<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(powers.iter().map(|_| DMatrix::zeros(0, 0)).collect());
    }
    let (values, vectors) = eig_dense(m)?;
    let lo = values[n - 1];
    if lo < -PSD_REJECT_TOL {
        return Err(Error::NotPsd(lo));
    }
    if values[0] > upper + PSD_REJECT_TOL {
        return Err(Error::Inconsistent(format!(
            "eigenvalue {:e} exceeds upper bound {upper}",
            values[0]
        )));
    }
    Ok(powers
        .iter()
        .map(|&r| {
            recompose(&vectors, &values, |v| {
                let v = v.clamp(0.0, upper);
                if v == 0.0 {
                    0.0
                } else {
                    v.powf(r)
                }
            })
        })
        .collect())
}

impl Add for &SymMat {
    type Output = SymMat;
    fn add(self, rhs: &SymMat) -> SymMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMat {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub for &SymMat {
    type Output = SymMat;
    fn sub(self, rhs: &SymMat) -> SymMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        SymMat {
            m: &self.m - &rhs.m,
        }
    }
}

impl Mul<f64> for &SymMat {
    type Output = SymMat;
    fn mul(self, rhs: f64) -> SymMat {
        SymMat { m: &self.m * rhs }
    }
}

impl Neg for &SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        SymMat { m: -&self.m }
    }
}
