//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. The process exits non-zero only
//! when a criterion cannot be evaluated at all (a panic or an I/O error);
//! a criterion that is evaluated and missed is reported as FAIL with the
//! measured numbers.

use std::process::Command;
use std::time::Instant;

use boxsdp::bench::run_single;
use boxsdp::direction::{direction_at, f_lower};
use boxsdp::objective::{default_fd_step, fd_gradient_check, fd_hess_quad_check};
use boxsdp::problems::{make_objective, random_c1, spectral_clamp, ProblemSpec};
use boxsdp::sampling::{random_feasible, random_interior, random_symmetric, rng};
use boxsdp::{solve, SolveResult, SolverConfig, SymMat};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn half_identity(n: usize) -> SymMat {
    SymMat::scaled_identity(n, 0.5)
}

fn solve_default(function: u8, n: usize, seed: u64, cfg: &SolverConfig) -> SolveResult {
    let obj = make_objective(&ProblemSpec::new(function, n, seed)).unwrap();
    solve(obj.as_ref(), &half_identity(n), cfg).unwrap()
}

fn clamp_oracle(function: u8, n: usize, seed: u64) -> (SymMat, f64) {
    let obj = make_objective(&ProblemSpec::new(function, n, seed)).unwrap();
    let x = spectral_clamp(&random_c1(n, seed)).unwrap();
    let f = obj.value(&x).unwrap();
    (x, f)
}

/// Runs to `N < eps` without the relative-change stop, so the final
/// objective reflects the merit tolerance rather than a stalled decrease.
fn tight_config() -> SolverConfig {
    SolverConfig {
        rel_f_tol: 0.0,
        ..SolverConfig::default()
    }
}

fn known_optimum(function: u8, target: f64, max_iter: usize, max_secs: Option<f64>) -> Outcome {
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [50, 100] {
        let t = Instant::now();
        let row = run_single(&ProblemSpec::new(function, n, 1), &cfg, None).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let ok = (row.obj - target).abs() <= 1e-3
            && row.iter <= max_iter
            && max_secs.is_none_or(|m| secs < m);
        pass &= ok;
        parts.push(format!("n={n}: obj={:.6} iter={} {:.2}s", row.obj, row.iter, secs));
    }
    outcome(pass, parts.join("; "))
}

fn c1_function2() -> Outcome {
    known_optimum(2, -4.0, 200, Some(10.0))
}

fn c2_function6() -> Outcome {
    known_optimum(6, -1.0, 200, None)
}

fn c3_function1_oracle() -> Outcome {
    let cfg = tight_config();
    let mut worst_ratio = 0.0f64;
    let mut pass = true;
    for n in [20usize, 50] {
        for seed in 1..=5 {
            let r = solve_default(1, n, seed, &cfg);
            let (_, oracle) = clamp_oracle(1, n, seed);
            let gap = (r.f - oracle).abs();
            worst_ratio = worst_ratio.max(gap / (1e-4 * n as f64));
            pass &= gap <= 1e-4 * n as f64;
        }
    }
    outcome(pass, format!("worst |f - oracle| / (1e-4 n) = {worst_ratio:.3}"))
}

fn c4_function4_oracle() -> Outcome {
    let n = 50;
    let cfg = SolverConfig::default();
    let mut worst = 0.0f64;
    for seed in 1..=5 {
        let r = solve_default(4, n, seed, &cfg);
        let c = random_c1(n, seed);
        let d2 = (&spectral_clamp(&c).unwrap() - &c).frob_norm_sq();
        let oracle = 1.0 + 2.0 * d2.powi(3) / (n as f64).powi(3);
        worst = worst.max((r.f - oracle).abs() / oracle.abs());
    }
    outcome(worst <= 1e-3, format!("worst relative error {worst:.2e}"))
}

fn c5_all_functions() -> Outcome {
    let n = 50;
    let cfg = SolverConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for function in 1..=7u8 {
        let t = Instant::now();
        let r = solve_default(function, n, 1, &cfg);
        let secs = t.elapsed().as_secs_f64();
        let monotone = r.trace.windows(2).all(|w| w[1].f <= w[0].f)
            && r.trace.last().is_none_or(|t| r.f <= t.f);
        let feasible = r
            .trace
            .iter()
            .all(|t| t.min_eig >= -1e-8 && t.max_eig <= 1.0 + 1e-8)
            && r.x.box_feasible(1e-8).unwrap();
        let ok = r.status.is_converged() && r.iterations <= 1000 && secs < 60.0 && monotone && feasible;
        pass &= ok;
        if !ok {
            parts.push(format!(
                "f{function}: status={} iter={} {:.1}s monotone={monotone} feasible={feasible}",
                r.status, r.iterations, secs
            ));
        }
    }
    let detail = if parts.is_empty() {
        "all 7 converged within budget, monotone and feasible".to_string()
    } else {
        parts.join("; ")
    };
    outcome(pass, detail)
}

fn c6_derivatives() -> Outcome {
    let mut worst_g = 0.0f64;
    let mut worst_h = 0.0f64;
    for function in 1..=7u8 {
        for n in [10usize, 50] {
            let obj = make_objective(&ProblemSpec::new(function, n, 3)).unwrap();
            let mut r = rng(1000 * function as u64 + n as u64);
            for _ in 0..10 {
                let x = random_interior(n, 0.01, &mut r);
                let s0 = random_symmetric(n, &mut r);
                let s = &s0 * s0.frob_norm().recip();
                let h = default_fd_step(&x);
                worst_g = worst_g.max(fd_gradient_check(obj.as_ref(), &x, h).unwrap());
                worst_h = worst_h.max(fd_hess_quad_check(obj.as_ref(), &x, &s, h).unwrap());
            }
        }
    }
    outcome(
        worst_g < 1e-5 && worst_h < 1e-4,
        format!("worst gradient error {worst_g:.2e}, worst hess-quad error {worst_h:.2e}"),
    )
}

/// The 1000 `(X, G)` pairs shared by the direction criteria.
fn sampled_pairs() -> Vec<(SymMat, SymMat)> {
    let n = 10;
    let mut r = rng(2024);
    (0..1000)
        .map(|k| {
            let x = random_feasible(n, &mut r);
            let g = random_symmetric(n, &mut r);
            // vary the gradient scale over several orders of magnitude
            let scale = 10f64.powi((k % 7) - 3);
            (x, &g * scale)
        })
        .collect()
}

fn c7_feasible_steps(pairs: &[(SymMat, SymMat)]) -> Outcome {
    let mut r = rng(77);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, g) in pairs {
        let (_, dir) = direction_at(x, g).unwrap();
        let Some(s) = &dir.s else { continue };
        let amax = dir.alpha_max_feasible;
        for k in 0..10 {
            let alpha = if k == 0 { amax } else { amax * rand::Rng::random::<f64>(&mut r) };
            let e = x.axpy(-alpha, s).unwrap().eigenvalues().unwrap();
            lo = lo.min(e[e.len() - 1]);
            hi = hi.max(e[0]);
        }
    }
    outcome(
        lo >= -1e-9 && hi <= 1.0 + 1e-9,
        format!("eigenvalues of X - aS within [{lo:.3e}, 1 + {:.3e}]", hi - 1.0),
    )
}

fn c8_dual_formulas(pairs: &[(SymMat, SymMat)]) -> Outcome {
    let mut worst_n = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut errors = 0;
    for (x, g) in pairs {
        match direction_at(x, g) {
            Ok((_, dir)) => {
                worst_n = worst_n.max((dir.n_merit - dir.n_inner).abs() / dir.n_merit.max(1.0));
                let direct = dir.d_norm * dir.d_norm;
                if direct > 0.0 {
                    worst_d = worst_d.max((dir.d_norm_sq_blocks - direct).abs() / direct);
                }
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && worst_n <= 1e-8 && worst_d <= 1e-8,
        format!("worst N mismatch {worst_n:.2e}, worst |D|^2 mismatch {worst_d:.2e}, errors {errors}"),
    )
}

fn c9_bounds(pairs: &[(SymMat, SymMat)]) -> Outcome {
    let mut worst_l4 = f64::NEG_INFINITY;
    let mut worst_l6 = f64::NEG_INFINITY;
    for (x, g) in pairs {
        let n = x.dim() as f64;
        let (_, dir) = direction_at(x, g).unwrap();
        let bound = dir.n_merit + 0.5 * dir.gamma_max.powi(2) * n.powi(3) + 1e-8;
        worst_l4 = worst_l4.max(dir.d_norm.powi(2) - bound);
        let fl = f_lower(x, g).unwrap();
        worst_l6 = worst_l6.max(-n * dir.n_merit.sqrt() - 1e-8 - fl);
    }
    outcome(
        worst_l4 <= 0.0 && worst_l6 <= 0.0,
        format!("max violation: |D|^2 bound {worst_l4:.3e}, f_lower bound {worst_l6:.3e}"),
    )
}

fn c10_strong_convexity() -> Outcome {
    let n = 10;
    let obj = make_objective(&ProblemSpec::new(1, n, 1)).unwrap();
    let (oracle, _) = clamp_oracle(1, n, 1);
    let cfg = tight_config();
    let mut r = rng(10);
    let finals: Vec<SymMat> = (0..5)
        .map(|_| {
            let x0 = random_feasible(n, &mut r);
            solve(obj.as_ref(), &x0, &cfg).unwrap().x
        })
        .collect();
    let to_oracle = finals
        .iter()
        .map(|x| (x - &oracle).frob_norm())
        .fold(0.0, f64::max);
    let mut spread = 0.0f64;
    for i in 0..finals.len() {
        for j in 0..i {
            spread = spread.max((&finals[i] - &finals[j]).frob_norm());
        }
    }
    outcome(
        to_oracle <= 1e-3 && spread <= 1e-3,
        format!("max distance to oracle {to_oracle:.2e}, max pairwise distance {spread:.2e}"),
    )
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_boxsdp"))
            .args(["sweep", "--functions", "1-7", "--sizes", "50", "--seeds", "1", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        (status.code(), std::fs::read(&path).unwrap())
    };
    let (code_a, a) = run("a.csv");
    let (code_b, b) = run("b.csv");
    let rows = a.iter().filter(|&&c| c == b'\n').count().saturating_sub(1);
    outcome(
        a == b && rows == 7,
        format!("{} bytes, {rows} rows, identical={}, exit codes {code_a:?}/{code_b:?}", a.len(), a == b),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let pairs = sampled_pairs();
    let criteria: Vec<(&str, Check)> = vec![
        ("function 2 reaches -4 at n=50,100", Box::new(c1_function2)),
        ("function 6 reaches -1 at n=50,100", Box::new(c2_function6)),
        ("function 1 matches the clamp oracle", Box::new(c3_function1_oracle)),
        ("function 4 matches its closed-form oracle", Box::new(c4_function4_oracle)),
        ("functions 1-7 converge at n=50", Box::new(c5_all_functions)),
        ("analytic derivatives match finite differences", Box::new(c6_derivatives)),
        ("steps up to |D|/gamma_max stay in the box", Box::new(|| c7_feasible_steps(&pairs))),
        ("merit and |D|^2 agree across formulas", Box::new(|| c8_dual_formulas(&pairs))),
        ("|D|^2 and f_lower bounds hold", Box::new(|| c9_bounds(&pairs))),
        ("function 1 from 5 starts reaches one point", Box::new(c10_strong_convexity)),
        ("sweep output is byte-identical", Box::new(c11_determinism)),
    ];

    let mut passed = 0;
    let total = criteria.len();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if o.pass {
            passed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{total} criteria passed");
}
