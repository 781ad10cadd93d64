//! Objective-function contract and derivative checks.
//!
//! An [`Objective`] provides a value, a symmetric gradient and the Hessian as
//! a quadratic form only. The gradient is the unique symmetric `G` with
//! `f(X + D) = f(X) + ⟨G|D⟩ + O(‖D‖²)` for symmetric `D`.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::rng;
use crate::symmat::SymMat;

/// Smooth function on symmetric `n × n` matrices.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &SymMat) -> Result<f64>;

    fn gradient(&self, x: &SymMat) -> Result<SymMat>;

    /// `⟨S|∇²f(X)|S⟩`.
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64>;
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        (**self).gradient(x)
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        (**self).hess_quad(x, s)
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        (**self).gradient(x)
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        (**self).hess_quad(x, s)
    }
}

/// Evaluation counters, matching the `co.f / co.∇f / co.∇²f` columns of a
/// benchmark table.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub value: u64,
    pub gradient: u64,
    pub hess_quad: u64,
}

/// Wraps an objective and counts every call.
#[derive(Debug, Default)]
pub struct Counted<O> {
    inner: O,
    value: AtomicU64,
    gradient: AtomicU64,
    hess_quad: AtomicU64,
}

impl<O: Objective> Counted<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            value: AtomicU64::new(0),
            gradient: AtomicU64::new(0),
            hess_quad: AtomicU64::new(0),
        }
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            value: self.value.load(Ordering::Relaxed),
            gradient: self.gradient.load(Ordering::Relaxed),
            hess_quad: self.hess_quad.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.value.store(0, Ordering::Relaxed);
        self.gradient.store(0, Ordering::Relaxed);
        self.hess_quad.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for Counted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &SymMat) -> Result<f64> {
        self.value.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
    fn gradient(&self, x: &SymMat) -> Result<SymMat> {
        self.gradient.fetch_add(1, Ordering::Relaxed);
        self.inner.gradient(x)
    }
    fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
        self.hess_quad.fetch_add(1, Ordering::Relaxed);
        self.inner.hess_quad(x, s)
    }
}

/// Number of off-diagonal directions sampled by [`fd_gradient_check`].
pub const FD_OFFDIAG_PAIRS: usize = 20;

const FD_PAIR_SEED: u64 = 0x6664_5f70_6169_7273;

/// Default central-difference step `1e-5·max(1, ‖X‖_F)`.
pub fn default_fd_step(x: &SymMat) -> f64 {
    1e-5 * x.frob_norm().max(1.0)
}

fn check_point(obj: &dyn Objective, x: &SymMat, h: f64) -> Result<()> {
    if x.dim() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            found: x.dim(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h}")));
    }
    Ok(())
}

/// Largest relative error between central differences and `⟨∇f(X)|E⟩` over
/// the unit diagonal directions `eᵢeᵢᵀ` and a fixed sample of symmetrized
/// off-diagonal directions `eᵢeⱼᵀ + eⱼeᵢᵀ`.
pub fn fd_gradient_check(obj: &dyn Objective, x: &SymMat, h: f64) -> Result<f64> {
    check_point(obj, x, h)?;
    let n = x.dim();
    let g = obj.gradient(x)?;

    let mut dirs: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    if pairs.len() <= FD_OFFDIAG_PAIRS {
        dirs.extend(pairs);
    } else {
        let mut r = rng(FD_PAIR_SEED);
        let mut picked = sample(&mut r, pairs.len(), FD_OFFDIAG_PAIRS).into_vec();
        picked.sort_unstable();
        dirs.extend(picked.into_iter().map(|k| pairs[k]));
    }

    let mut worst = 0.0f64;
    for (i, j) in dirs {
        let e = SymMat::from_upper_fn(n, |a, b| if a == i && b == j { 1.0 } else { 0.0 });
        let fp = obj.value(&x.axpy(h, &e)?)?;
        let fm = obj.value(&x.axpy(-h, &e)?)?;
        let fd = (fp - fm) / (2.0 * h);
        let an = g.dot(&e);
        worst = worst.max((fd - an).abs() / an.abs().max(1.0));
    }
    Ok(worst)
}

/// Relative error between `hess_quad(X, S)` and the central difference of
/// the gradient along `S`, `⟨S | (∇f(X+hS) − ∇f(X−hS)) / 2h⟩`.
pub fn fd_hess_quad_check(obj: &dyn Objective, x: &SymMat, s: &SymMat, h: f64) -> Result<f64> {
    check_point(obj, x, h)?;
    if s.dim() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: s.dim(),
        });
    }
    let an = obj.hess_quad(x, s)?;
    let gp = obj.gradient(&x.axpy(h, s)?)?;
    let gm = obj.gradient(&x.axpy(-h, s)?)?;
    let fd = s.dot(&(&gp - &gm)) / (2.0 * h);
    Ok((an - fd).abs() / an.abs().max(1.0))
}

/// Small closed-form objectives, handy for tests and examples.
pub mod basic {
    use super::*;

    /// `f(X) = c`.
    #[derive(Clone, Debug)]
    pub struct Constant {
        pub n: usize,
        pub c: f64,
    }

    impl Objective for Constant {
        fn dim(&self) -> usize {
            self.n
        }
        fn value(&self, _x: &SymMat) -> Result<f64> {
            Ok(self.c)
        }
        fn gradient(&self, _x: &SymMat) -> Result<SymMat> {
            Ok(SymMat::zeros(self.n))
        }
        fn hess_quad(&self, _x: &SymMat, _s: &SymMat) -> Result<f64> {
            Ok(0.0)
        }
    }

    /// `f(X) = ⟨G|X⟩`.
    #[derive(Clone, Debug)]
    pub struct Linear {
        pub g: SymMat,
    }

    impl Objective for Linear {
        fn dim(&self) -> usize {
            self.g.dim()
        }
        fn value(&self, x: &SymMat) -> Result<f64> {
            self.g.frob_inner(x)
        }
        fn gradient(&self, _x: &SymMat) -> Result<SymMat> {
            Ok(self.g.clone())
        }
        fn hess_quad(&self, _x: &SymMat, _s: &SymMat) -> Result<f64> {
            Ok(0.0)
        }
    }

    /// `f(X) = ⟨X|X⟩`.
    #[derive(Clone, Debug)]
    pub struct SquaredNorm {
        pub n: usize,
    }

    impl Objective for SquaredNorm {
        fn dim(&self) -> usize {
            self.n
        }
        fn value(&self, x: &SymMat) -> Result<f64> {
            Ok(x.frob_norm_sq())
        }
        fn gradient(&self, x: &SymMat) -> Result<SymMat> {
            Ok(x * 2.0)
        }
        fn hess_quad(&self, _x: &SymMat, s: &SymMat) -> Result<f64> {
            Ok(2.0 * s.frob_norm_sq())
        }
    }

    /// `f(X) = cos(⟨X|X⟩)`.
    #[derive(Clone, Debug)]
    pub struct CosSquaredNorm {
        pub n: usize,
    }

    impl Objective for CosSquaredNorm {
        fn dim(&self) -> usize {
            self.n
        }
        fn value(&self, x: &SymMat) -> Result<f64> {
            Ok(x.frob_norm_sq().cos())
        }
        fn gradient(&self, x: &SymMat) -> Result<SymMat> {
            Ok(x * (-2.0 * x.frob_norm_sq().sin()))
        }
        fn hess_quad(&self, x: &SymMat, s: &SymMat) -> Result<f64> {
            let u = x.frob_norm_sq();
            let xs = x.dot(s);
            Ok(-2.0 * u.sin() * s.frob_norm_sq() - 4.0 * u.cos() * xs * xs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::basic::*;
    use super::*;
    use crate::sampling::{random_interior, random_symmetric, rng};

    fn unit_direction(n: usize, seed: u64) -> SymMat {
        let s = random_symmetric(n, &mut rng(seed));
        let norm = s.frob_norm();
        &s * norm.recip()
    }

    #[test]
    fn squared_norm_passes_both_checks() {
        let obj = SquaredNorm { n: 6 };
        let x = random_interior(6, 0.1, &mut rng(2));
        let h = default_fd_step(&x);
        assert!(fd_gradient_check(&obj, &x, h).unwrap() < 1e-9);
        let s = unit_direction(6, 3);
        assert!((obj.hess_quad(&x, &s).unwrap() - 2.0).abs() < 1e-12);
        assert!(fd_hess_quad_check(&obj, &x, &s, h).unwrap() < 1e-9);
    }

    #[test]
    fn constant_has_zero_error() {
        let obj = Constant { n: 4, c: 3.5 };
        let x = SymMat::scaled_identity(4, 0.5);
        assert_eq!(fd_gradient_check(&obj, &x, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn linear_hess_quad_is_zero() {
        let g = random_symmetric(5, &mut rng(8));
        let obj = Linear { g };
        let x = random_interior(5, 0.2, &mut rng(9));
        let s = unit_direction(5, 10);
        assert_eq!(obj.hess_quad(&x, &s).unwrap(), 0.0);
        assert!(fd_hess_quad_check(&obj, &x, &s, 1e-5).unwrap() < 1e-9);
    }

    #[test]
    fn cos_squared_norm_hess_quad_matches_closed_form() {
        let obj = CosSquaredNorm { n: 5 };
        let x = random_interior(5, 0.1, &mut rng(21));
        let s = unit_direction(5, 22);
        let err = fd_hess_quad_check(&obj, &x, &s, default_fd_step(&x)).unwrap();
        assert!(err < 1e-7, "err {err}");
        assert!(fd_gradient_check(&obj, &x, default_fd_step(&x)).unwrap() < 1e-7);
    }

    #[test]
    fn counters_increment_per_call() {
        let obj = Counted::new(SquaredNorm { n: 3 });
        let x = SymMat::identity(3);
        obj.value(&x).unwrap();
        obj.value(&x).unwrap();
        obj.gradient(&x).unwrap();
        obj.hess_quad(&x, &x).unwrap();
        assert_eq!(
            obj.counts(),
            EvalCounts {
                value: 2,
                gradient: 1,
                hess_quad: 1
            }
        );
        obj.reset();
        assert_eq!(obj.counts(), EvalCounts::default());
    }

    #[test]
    fn hess_quad_scales_quadratically() {
        let obj = CosSquaredNorm { n: 4 };
        let x = random_interior(4, 0.1, &mut rng(30));
        let s = unit_direction(4, 31);
        let t = 3.7;
        let a = obj.hess_quad(&x, &(&s * t)).unwrap();
        let b = t * t * obj.hess_quad(&x, &s).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_step_and_size() {
        let obj = SquaredNorm { n: 3 };
        let x = SymMat::identity(3);
        assert!(fd_gradient_check(&obj, &x, 0.0).is_err());
        assert!(fd_gradient_check(&obj, &SymMat::identity(2), 1e-5).is_err());
    }
}
