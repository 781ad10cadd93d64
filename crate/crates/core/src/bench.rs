//! Single solves and benchmark sweeps with CSV / JSON-lines output.
//!
//! Every run starts from `X⁰ = ½I`. The aggregate table has one row per
//! `(function, n, seed)` and is sorted by that key. Wall time is the only
//! non-reproducible column, so it is written only on request.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::problems::{make_objective_with_c1, BoxTransform, ProblemSpec};
use crate::solver::{solve, IterRecord, SolveResult, SolveStatus, SolverConfig};
use crate::symmat::SymMat;

pub const TRACE_HEADER: [&str; 10] = [
    "iter", "f", "N", "delta", "alpha", "ratio", "accepted", "min_eig", "max_eig", "time_s",
];

/// One line of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub function: u8,
    pub n: usize,
    pub seed: u64,
    #[serde(with = "lossless")]
    pub obj: f64,
    pub iter: usize,
    /// Wall seconds of the solve; absent unless timing was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu: Option<f64>,
    pub co_f: u64,
    pub co_grad: u64,
    pub co_hessquad: u64,
    pub status: SolveStatus,
}

impl BenchRow {
    fn key(&self) -> (u8, usize, u64) {
        (self.function, self.n, self.seed)
    }

    fn from_result(spec: &ProblemSpec, res: &SolveResult) -> Self {
        Self {
            function: spec.function,
            n: spec.n,
            seed: spec.seed,
            obj: res.f,
            iter: res.iterations,
            cpu: Some(res.elapsed_s),
            co_f: res.counts.value,
            co_grad: res.counts.gradient,
            co_hessquad: res.counts.hess_quad,
            status: res.status,
        }
    }

    fn failed(spec: &ProblemSpec) -> Self {
        Self {
            function: spec.function,
            n: spec.n,
            seed: spec.seed,
            obj: f64::NAN,
            iter: 0,
            cpu: None,
            co_f: 0,
            co_grad: 0,
            co_hessquad: 0,
            status: SolveStatus::NumericError,
        }
    }
}

/// Floats as 17-significant-digit scientific strings, so that parsing
/// recovers the exact bits.
mod lossless {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::fmt_f64(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        text.trim().parse().map_err(serde::de::Error::custom)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Optional inputs for a single solve beyond the problem spec.
#[derive(Clone, Debug, Default)]
pub struct SingleOptions {
    /// Replaces the seeded `C₁`.
    pub c1: Option<SymMat>,
    /// General box `L ⪯ X ⪯ U`; both or neither.
    pub bounds: Option<(SymMat, SymMat)>,
    pub trace_path: Option<PathBuf>,
}

/// Outcome of [`run_single_with`]: the summary row and the full result.
/// With a general box, `result.x` is already mapped back to `[L, U]`.
#[derive(Clone, Debug)]
pub struct SingleRun {
    pub row: BenchRow,
    pub result: SolveResult,
}

/// Solves one instance from `½I`, writing the trace when a path is given.
pub fn run_single(spec: &ProblemSpec, cfg: &SolverConfig, trace_path: Option<&Path>) -> Result<BenchRow> {
    let opts = SingleOptions {
        trace_path: trace_path.map(Path::to_path_buf),
        ..Default::default()
    };
    Ok(run_single_with(spec, cfg, &opts)?.row)
}

pub fn run_single_with(spec: &ProblemSpec, cfg: &SolverConfig, opts: &SingleOptions) -> Result<SingleRun> {
    cfg.validate()?;
    let obj = make_objective_with_c1(spec, opts.c1.clone())?;
    let x0 = SymMat::scaled_identity(spec.n, 0.5);
    let mut result = match &opts.bounds {
        None => solve(obj.as_ref(), &x0, cfg)?,
        Some((lower, upper)) => {
            let boxed = BoxTransform::new(lower.clone(), upper.clone(), obj)?;
            let mut res = solve(&boxed as &dyn Objective, &x0, cfg)?;
            res.x = boxed.back_map(&res.x)?;
            res
        }
    };
    if let Some(path) = &opts.trace_path {
        write_trace_file(path, &result.trace)?;
    }
    if result.status == SolveStatus::NumericError && result.message.is_none() {
        result.message = Some("numeric error".into());
    }
    Ok(SingleRun {
        row: BenchRow::from_result(spec, &result),
        result,
    })
}

/// Grid of instances for [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepPlan {
    pub functions: Vec<u8>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub epsilon_bar: f64,
    /// Directory for per-run traces named `trace_f{k}_n{n}_s{seed}.csv`.
    pub trace_dir: Option<PathBuf>,
}

impl SweepPlan {
    pub fn specs(&self) -> Result<Vec<ProblemSpec>> {
        if self.functions.is_empty() || self.sizes.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep needs at least one function, size and seed".into(),
            ));
        }
        let mut specs = Vec::new();
        for &function in &self.functions {
            for &n in &self.sizes {
                for &seed in &self.seeds {
                    let spec = ProblemSpec {
                        function,
                        n,
                        seed,
                        epsilon_bar: self.epsilon_bar,
                    };
                    spec.validate()?;
                    specs.push(spec);
                }
            }
        }
        specs.sort_by_key(|s| (s.function, s.n, s.seed));
        specs.dedup();
        Ok(specs)
    }
}

pub fn trace_file_name(spec: &ProblemSpec) -> String {
    format!("trace_f{}_n{}_s{}.csv", spec.function, spec.n, spec.seed)
}

/// Runs every instance of the plan, in parallel on the current rayon pool.
///
/// A failing instance yields a `numeric-error` row and the sweep goes on.
/// Rows come back sorted by `(function, n, seed)`.
pub fn run_sweep(plan: &SweepPlan, cfg: &SolverConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let specs = plan.specs()?;
    if let Some(dir) = &plan.trace_dir {
        fs::create_dir_all(dir)?;
    }
    let mut rows: Vec<BenchRow> = specs
        .par_iter()
        .map(|spec| {
            let trace = plan.trace_dir.as_ref().map(|d| d.join(trace_file_name(spec)));
            run_single(spec, cfg, trace.as_deref()).unwrap_or_else(|_| BenchRow::failed(spec))
        })
        .collect();
    rows.sort_by_key(BenchRow::key);
    Ok(rows)
}

/// Writes the summary table. The `cpu` column appears only with `with_timing`.
pub fn write_aggregate_csv<W: Write>(rows: &[BenchRow], out: W, with_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["function", "n", "seed", "obj", "iter"];
    if with_timing {
        header.push("cpu");
    }
    header.extend(["co_f", "co_grad", "co_hessquad", "status"]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.function.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
            fmt_f64(r.obj),
            r.iter.to_string(),
        ];
        if with_timing {
            rec.push(r.cpu.map(fmt_f64).unwrap_or_default());
        }
        rec.extend([
            r.co_f.to_string(),
            r.co_grad.to_string(),
            r.co_hessquad.to_string(),
            r.status.as_str().to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn aggregate_csv_string(rows: &[BenchRow], with_timing: bool) -> String {
    let mut buf = Vec::new();
    write_aggregate_csv(rows, &mut buf, with_timing).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

/// Parses a summary table written by [`write_aggregate_csv`].
pub fn read_aggregate_csv<R: Read>(input: R) -> Result<Vec<BenchRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let mut row: BenchRow = rec?;
        if row.cpu.is_some_and(f64::is_nan) {
            row.cpu = None;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One JSON object per row, newline-terminated.
pub fn write_json_lines<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_trace<W: Write>(trace: &[IterRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.iter.to_string(),
            fmt_f64(r.f),
            fmt_f64(r.n_merit),
            fmt_f64(r.delta),
            fmt_f64(r.alpha),
            fmt_f64(r.ratio),
            u8::from(r.accepted).to_string(),
            fmt_f64(r.min_eig),
            fmt_f64(r.max_eig),
            fmt_f64(r.time_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &[IterRecord]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_trace(trace, BufWriter::new(File::create(path)?))
}

/// Writes to `path`, or stdout when it is `-`.
pub fn open_output(path: &Path) -> io::Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

/// Parses lists like `1-7`, `1,3,5` or `1-3,6`.
pub fn parse_list<T>(text: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr + Copy + PartialOrd + TryFrom<u64> + Into<u64>,
{
    let bad = |msg: String| Error::Parse(msg);
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad(format!("empty item in list {text:?}")));
        }
        match part.split_once('-') {
            Some((a, b)) => {
                let lo: T = a.trim().parse().map_err(|_| bad(format!("bad range start {a:?}")))?;
                let hi: T = b.trim().parse().map_err(|_| bad(format!("bad range end {b:?}")))?;
                if lo > hi {
                    return Err(bad(format!("descending range {part:?}")));
                }
                for v in lo.into()..=hi.into() {
                    out.push(T::try_from(v).map_err(|_| bad(format!("value {v} out of range")))?);
                }
            }
            None => out.push(part.parse().map_err(|_| bad(format!("bad value {part:?}")))?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(function: u8, obj: f64) -> BenchRow {
        BenchRow {
            function,
            n: 10,
            seed: 3,
            obj,
            iter: 12,
            cpu: None,
            co_f: 13,
            co_grad: 9,
            co_hessquad: 12,
            status: SolveStatus::ConvergedN,
        }
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<u8>("1-7").unwrap(), vec![1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(parse_list::<u64>("1,3, 5").unwrap(), vec![1, 3, 5]);
        assert_eq!(parse_list::<u8>("1-2,6").unwrap(), vec![1, 2, 6]);
        assert!(parse_list::<u8>("3-1").is_err());
        assert!(parse_list::<u8>("1,,2").is_err());
        assert!(parse_list::<u8>("x").is_err());
    }

    #[test]
    fn aggregate_round_trip_with_and_without_timing() {
        let mut rows = vec![row(1, -1.0 / 3.0), row(2, 0.1 + 0.2)];
        let text = aggregate_csv_string(&rows, false);
        assert!(text.starts_with("function,n,seed,obj,iter,co_f,co_grad,co_hessquad,status\n"));
        assert_eq!(read_aggregate_csv(text.as_bytes()).unwrap(), rows);

        rows[0].cpu = Some(0.125);
        rows[1].cpu = Some(1e-3 / 7.0);
        let text = aggregate_csv_string(&rows, true);
        assert_eq!(read_aggregate_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn float_format_is_lossless() {
        for v in [1.0 / 3.0, -4.0, 1e-300, 123456.789e10, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_lines_one_per_row() {
        let rows = vec![row(1, 2.0), row(3, -1.5)];
        let mut buf = Vec::new();
        write_json_lines(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<BenchRow> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(parsed, rows);
    }

    #[test]
    fn sweep_plan_rejects_empty_lists() {
        let plan = SweepPlan {
            functions: vec![],
            sizes: vec![5],
            seeds: vec![1],
            epsilon_bar: 0.02,
            trace_dir: None,
        };
        assert!(plan.specs().is_err());
    }
}
