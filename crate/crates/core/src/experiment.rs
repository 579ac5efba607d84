//! Experiment harness: run recommendation methods on synthetic markets and
//! emit one CSV row per (method, cell, trial).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{default_depth, iter_lp_policy, naive_policy, prod_policy};
use crate::datagen::{synth_instance, SynthSpec};
use crate::policy::ensure_valid;
use crate::{
    envy_audit, social_welfare, solve, uniform_policy, Error, ExamKind, Instance, Objective, Policy,
    Result, SolverConfig, DEFAULT_ENVY_TOLERANCE,
};

pub const CSV_HEADER: &str = "method,n,m,lambda,exam,trial,expected_matches,envy_left,envy_right,max_envy_left,max_envy_right,runtime_ms,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Uniform,
    Naive,
    Prod,
    #[serde(rename = "iterlp")]
    IterLp,
    Sw,
    Nsw,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Uniform, Method::Naive, Method::Prod, Method::IterLp, Method::Sw, Method::Nsw];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Naive => "naive",
            Method::Prod => "prod",
            Method::IterLp => "iterlp",
            Method::Sw => "sw",
            Method::Nsw => "nsw",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Knobs shared by every method run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunOptions {
    /// Objective is overridden per method; the rest applies to SW and NSW.
    pub solver: SolverConfig,
    /// IterLP depth; `None` means `min(n, m)`.
    pub iterlp_depth: Option<usize>,
    pub tau: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), iterlp_depth: None, tau: DEFAULT_ENVY_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub exam: ExamKind,
    pub trial: usize,
    pub expected_matches: f64,
    pub envy_left: f64,
    pub envy_right: f64,
    pub max_envy_left: f64,
    pub max_envy_right: f64,
    pub runtime_ms: f64,
    pub seed: u64,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Produces the method's policy.
pub fn method_policy(inst: &Instance, method: Method, opts: &RunOptions) -> Result<Policy> {
    let solver = |objective| SolverConfig { objective, ..opts.solver.clone() };
    match method {
        Method::Uniform => Ok(uniform_policy(inst.n(), inst.m())),
        Method::Naive => Ok(naive_policy(inst)),
        Method::Prod => Ok(prod_policy(inst)),
        Method::IterLp => iter_lp_policy(inst, opts.iterlp_depth.unwrap_or_else(|| default_depth(inst))),
        Method::Sw => solve(inst, &solver(Objective::Sw)).map(|r| r.0),
        Method::Nsw => solve(inst, &solver(Objective::Nsw)).map(|r| r.0),
    }
}

/// Runs one method on one instance and measures it. Failures come back as a
/// record with NaN metrics and `error` set. `lambda`, `trial` and `seed` are
/// left at zero for the caller to fill in.
pub fn run_single(inst: &Instance, method: Method, opts: &RunOptions) -> (Option<Policy>, ExperimentRecord) {
    let start = Instant::now();
    let outcome = method_policy(inst, method, opts).and_then(|pol| {
        ensure_valid(inst, &pol)?;
        let report = envy_audit(inst, &pol, opts.tau)?;
        let sw = social_welfare(inst, &pol)?;
        Ok((pol, report, sw))
    });
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut rec = ExperimentRecord {
        method,
        n: inst.n(),
        m: inst.m(),
        lambda: 0.0,
        exam: inst.exam().kind,
        trial: 0,
        expected_matches: f64::NAN,
        envy_left: f64::NAN,
        envy_right: f64::NAN,
        max_envy_left: f64::NAN,
        max_envy_right: f64::NAN,
        runtime_ms,
        seed: 0,
        error: None,
    };
    match outcome {
        Ok((pol, report, sw)) => {
            rec.expected_matches = sw;
            rec.envy_left = report.left_envy_pairs as f64;
            rec.envy_right = report.right_envy_pairs as f64;
            rec.max_envy_left = report.max_left_envy;
            rec.max_envy_right = report.max_right_envy;
            (Some(pol), rec)
        }
        Err(e) => {
            rec.error = Some(e.to_string());
            (None, rec)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub m: usize,
    pub lambdas: Vec<f64>,
    pub exams: Vec<ExamKind>,
    pub methods: Vec<Method>,
    pub trials: usize,
    /// Trial `t` of every cell uses seed `base_seed + t`.
    pub base_seed: u64,
    pub solver: SolverConfig,
    pub iterlp_depth: Option<usize>,
    pub tau: f64,
    pub output: Option<PathBuf>,
    /// Write wall-clock times; otherwise `runtime_ms` is 0 so reruns are
    /// byte-identical.
    pub record_runtime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_values: vec![20],
            m: 20,
            lambdas: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            exams: vec![ExamKind::Inverse, ExamKind::Logarithmic],
            methods: Method::ALL.to_vec(),
            trials: 10,
            base_seed: 0,
            solver: SolverConfig::default(),
            iterlp_depth: None,
            tau: DEFAULT_ENVY_TOLERANCE,
            output: None,
            record_runtime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::InvalidConfig(format!("{field}: {why}")));
        if self.n_values.is_empty() {
            return bad("n_values", "must be non-empty");
        }
        if self.n_values.iter().any(|&n| n < 2) || self.m < 2 {
            return bad("n_values/m", "side sizes must be >= 2");
        }
        if self.lambdas.is_empty() {
            return bad("lambdas", "must be non-empty");
        }
        if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("lambdas", "values must lie in [0, 1]");
        }
        if self.exams.is_empty() {
            return bad("exams", "must be non-empty");
        }
        if self.methods.is_empty() {
            return bad("methods", "must be non-empty");
        }
        if self.trials == 0 {
            return bad("trials", "must be >= 1");
        }
        if !(self.tau >= 0.0) {
            return bad("tau", "must be >= 0");
        }
        if self.iterlp_depth == Some(0) {
            return bad("iterlp_depth", "must be >= 1");
        }
        self.solver.validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn options(&self) -> RunOptions {
        RunOptions { solver: self.solver.clone(), iterlp_depth: self.iterlp_depth, tau: self.tau }
    }
}

/// Runs the full grid. Every method in a cell sees the same instance for a
/// given trial. Rows come back sorted by (n, exam, lambda, method, trial).
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let opts = cfg.options();
    let mut cells = Vec::new();
    for &n in &cfg.n_values {
        for &exam in &cfg.exams {
            for &lambda in &cfg.lambdas {
                for trial in 0..cfg.trials {
                    cells.push((n, exam, lambda, trial));
                }
            }
        }
    }
    let rows: Vec<Vec<ExperimentRecord>> = cells
        .par_iter()
        .map(|&(n, exam, lambda, trial)| {
            let seed = cfg.base_seed.wrapping_add(trial as u64);
            let inst = synth_instance(&SynthSpec { n, m: cfg.m, lambda, exam, seed })?;
            Ok(cfg
                .methods
                .iter()
                .map(|&method| {
                    let (_, mut rec) = run_single(&inst, method, &opts);
                    rec.lambda = lambda;
                    rec.trial = trial;
                    rec.seed = seed;
                    rec
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<ExperimentRecord> = rows.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.n, a.exam)
            .cmp(&(b.n, b.exam))
            .then(a.lambda.total_cmp(&b.lambda))
            .then((a.method, a.trial).cmp(&(b.method, b.trial)))
    });
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ExperimentRecord], out: W, record_runtime: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        let runtime = if record_runtime { r.runtime_ms } else { 0.0 };
        w.write_record([
            r.method.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.lambda.to_string(),
            r.exam.to_string(),
            r.trial.to_string(),
            r.expected_matches.to_string(),
            r.envy_left.to_string(),
            r.envy_right.to_string(),
            r.max_envy_left.to_string(),
            r.max_envy_right.to_string(),
            runtime.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ExperimentRecord>, _>>()?;
    Ok(rows)
}

/// Sidecar path for failed rows: `<output>.errors.log`.
pub fn error_log_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".errors.log");
    PathBuf::from(s)
}

/// Runs the grid and writes the CSV (plus an error sidecar when any row
/// failed) to `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let output = cfg
        .output
        .clone()
        .ok_or_else(|| Error::InvalidConfig("output: path required".into()))?;
    let rows = run_grid(cfg)?;
    let file = std::fs::File::create(&output)?;
    write_csv(&rows, std::io::BufWriter::new(file), cfg.record_runtime)?;
    let failures: Vec<String> = rows
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!("{},{},{},{},{},{}: {e}", r.method, r.n, r.m, r.lambda, r.exam, r.trial)
            })
        })
        .collect();
    if !failures.is_empty() {
        std::fs::write(error_log_path(&output), failures.join("\n") + "\n")?;
    }
    Ok(rows)
}
