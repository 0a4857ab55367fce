//! Experiment configuration, presets and the run/sweep drivers.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use serde::Serialize;

use crate::basis::{sh_degree_for_stencil, KernelKind, KernelSpec};
use crate::diagnostics::{fit_convergence_rate, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::geometry::{
    fibonacci_nodes, icosahedral_frequency_for, icosahedral_frequency_nodes, icosahedral_nodes,
    load_nodes, NodeSet,
};
use crate::interp::{
    build_global, patch_count, GlobalInterpolant, GlobalSystem, Interpolator, LocalInterpolant,
    PuInterpolant,
};
use crate::testcases::{TestCase, TestCaseName};
use crate::transport::{sl_advect, Method, ScalarField, SlConfig};

pub const DEFAULT_PATCH_MULTIPLICITY: f64 = 2.5;
pub const DEFAULT_STENCIL_SIZE: usize = 31;

/// Where the Eulerian nodes come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeSource {
    /// Icosahedral nodes after `level` bisections.
    Level(u32),
    /// `N` nodes: icosahedral when `N = 10k² + 2`, a Fibonacci spiral otherwise.
    Count(usize),
    File(PathBuf),
}

impl NodeSource {
    pub fn build(&self) -> Result<NodeSet> {
        match self {
            NodeSource::Level(l) => icosahedral_nodes(*l),
            NodeSource::Count(n) => match icosahedral_frequency_for(*n) {
                Some(k) => icosahedral_frequency_nodes(k),
                None => {
                    log::info!("{n} is not an icosahedral count; using a Fibonacci spiral");
                    fibonacci_nodes(*n)
                }
            },
            NodeSource::File(p) => load_nodes(p),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            NodeSource::Level(l) => format!("icosahedral level {l}"),
            NodeSource::Count(n) => match icosahedral_frequency_for(*n) {
                Some(k) => format!("icosahedral frequency {k}"),
                None => format!("fibonacci spiral {n}"),
            },
            NodeSource::File(p) => format!("file {}", p.display()),
        }
    }

    /// Node count without building the set (unknown for files).
    pub fn count_hint(&self) -> Option<usize> {
        match self {
            NodeSource::Level(l) => Some(10 * 4usize.pow(*l) + 2),
            NodeSource::Count(n) => Some(*n),
            NodeSource::File(_) => None,
        }
    }
}

/// Fully validated experiment description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub testcase: TestCaseName,
    pub method: Method,
    pub nodes: NodeSource,
    pub n: usize,
    pub a: f64,
    pub dt: f64,
    pub dt_expr: String,
    pub t_final: f64,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub checkpoint_every: usize,
    pub patch_centers: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Parses a time-step expression such as `pi/10`, `5/80`, `2pi/40` or `0.1`.
pub fn parse_dt(expr: &str) -> Result<f64> {
    let bad = || Error::Config(format!("dt: cannot parse '{expr}'"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.to_ascii_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), Some(b.to_string())),
        None => (s.clone(), None),
    };
    let num = if let Some(k) = num.strip_suffix("pi") {
        let k = k.strip_suffix('*').unwrap_or(k);
        let k: f64 = if k.is_empty() { 1.0 } else { k.parse().map_err(|_| bad())? };
        k * PI
    } else {
        num.parse::<f64>().map_err(|_| bad())?
    };
    let v = match den {
        Some(d) => num / d.parse::<f64>().map_err(|_| bad())?,
        None => num,
    };
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got '{expr}'")));
    }
    Ok(v)
}

const LOCAL_PU_SIZES: [usize; 6] = [2562, 5762, 10242, 23042, 40962, 92162];
const LOCAL_PU_CB: [u32; 6] = [20, 25, 30, 35, 40, 45];
const LOCAL_PU_GB: [u32; 6] = [20, 40, 60, 80, 100, 120];
const GLOBAL_SIZES: [usize; 10] = [3136, 4096, 5041, 6084, 7744, 9025, 10000, 11881, 13689, 15129];
const GLOBAL_CB: [u32; 10] = [20, 20, 25, 25, 30, 35, 35, 40, 40, 45];
const GLOBAL_GB: [u32; 10] = [20, 40, 60, 80, 100, 120, 140, 160, 180, 200];

/// Time-step preset for a deformational test as `(dt, expression)`.
///
/// The table entry whose node count is nearest to `n_nodes` is used.
pub fn preset_dt(testcase: TestCaseName, method: Method, n_nodes: usize) -> (f64, String) {
    let (sizes, steps): (&[usize], &[u32]) = match (method, testcase) {
        (Method::Global, TestCaseName::DeformGauss) => (&GLOBAL_SIZES, &GLOBAL_GB),
        (Method::Global, _) => (&GLOBAL_SIZES, &GLOBAL_CB),
        (_, TestCaseName::DeformGauss) => (&LOCAL_PU_SIZES, &LOCAL_PU_GB),
        _ => (&LOCAL_PU_SIZES, &LOCAL_PU_CB),
    };
    match testcase {
        TestCaseName::SolidBodyCosine | TestCaseName::Constant => (PI / 10.0, "pi/10".into()),
        _ => {
            let i = (0..sizes.len())
                .min_by_key(|&i| (sizes[i] as i64 - n_nodes as i64).abs())
                .unwrap_or(0);
            (5.0 / steps[i] as f64, format!("5/{}", steps[i]))
        }
    }
}

/// Raw key/value settings from a config file and command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

const KNOWN_KEYS: [&str; 16] = [
    "testcase",
    "method",
    "N",
    "level",
    "n",
    "a",
    "dt",
    "tfinal",
    "revolutions",
    "alpha",
    "epsilon",
    "checkpoint_every",
    "nodes_file",
    "patch_centers_file",
    "out",
    "threads",
];

impl RawConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = RawConfig::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            cfg.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = normalize_key(key);
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown setting '{key}'")));
        }
        self.entries.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn validate(&self) -> Result<ExperimentConfig> {
        let field = |k: &str, msg: String| Error::Config(format!("{k}: {msg}"));
        let parse_num = |k: &str| -> Result<Option<f64>> {
            self.get(k)
                .map(|v| v.parse::<f64>().map_err(|_| field(k, format!("not a number: '{v}'"))))
                .transpose()
        };
        let parse_int = |k: &str| -> Result<Option<usize>> {
            self.get(k)
                .map(|v| v.parse::<usize>().map_err(|_| field(k, format!("not a count: '{v}'"))))
                .transpose()
        };

        let testcase = match self.get("testcase") {
            Some(v) => TestCaseName::parse(v).ok_or_else(|| field("testcase", format!("unknown '{v}'")))?,
            None => return Err(field("testcase", "required".into())),
        };
        let method = match self.get("method") {
            Some(v) => Method::parse(v).ok_or_else(|| field("method", format!("unknown '{v}'")))?,
            None => return Err(field("method", "required".into())),
        };

        let nodes = match (self.get("nodes_file"), parse_int("N")?, parse_int("level")?) {
            (Some(p), None, None) => NodeSource::File(PathBuf::from(p)),
            (None, Some(n), None) => NodeSource::Count(n),
            (None, None, Some(l)) => NodeSource::Level(l as u32),
            (None, None, None) => {
                return Err(field("N", "one of N, level or nodes_file is required".into()))
            }
            _ => {
                return Err(field(
                    "N",
                    "give only one of N, level and nodes_file".into(),
                ))
            }
        };

        let n_given = parse_int("n")?;
        let a_given = parse_num("a")?;
        let eps_given = parse_num("epsilon")?;
        let (n, a) = match method {
            Method::Global => {
                if a_given.is_some() {
                    return Err(field("a", "patch multiplicity does not apply to the global method".into()));
                }
                if n_given.is_some() {
                    log::warn!("n is ignored by the global method");
                }
                (0, 0.0)
            }
            Method::Local => {
                if a_given.is_some() {
                    return Err(field("a", "patch multiplicity applies only to the pu method".into()));
                }
                (n_given.unwrap_or(DEFAULT_STENCIL_SIZE), 0.0)
            }
            Method::Pu => {
                let a = a_given.unwrap_or(DEFAULT_PATCH_MULTIPLICITY);
                if !(a >= 1.5) {
                    return Err(field("a", format!("must be at least 1.5, got {a}")));
                }
                (n_given.unwrap_or(DEFAULT_STENCIL_SIZE), a)
            }
        };
        if method != Method::Global {
            if eps_given.is_some() {
                return Err(field("epsilon", "shape parameter applies only to the global method".into()));
            }
            let (sh, _) = sh_degree_for_stencil(n);
            if n <= sh.dim() {
                return Err(field("n", format!("must exceed {} for this degree", sh.dim())));
            }
        }
        if let Some(e) = eps_given {
            if !(e > 0.0) {
                return Err(field("epsilon", format!("must be positive, got {e}")));
            }
        }
        if self.get("patch_centers_file").is_some() && method != Method::Pu {
            return Err(field("patch_centers_file", "applies only to the pu method".into()));
        }

        let (dt, dt_expr) = match self.get("dt") {
            Some(v) => (parse_dt(v)?, v.to_string()),
            None => {
                let hint = nodes.count_hint().ok_or_else(|| {
                    field("dt", "required when nodes come from a file".into())
                })?;
                preset_dt(testcase, method, hint)
            }
        };

        let revolutions = parse_int("revolutions")?;
        let tfinal = self.get("tfinal").map(parse_dt).transpose()?;
        let t_final = match (revolutions, tfinal) {
            (Some(_), Some(_)) => {
                return Err(field("revolutions", "give either revolutions or tfinal".into()))
            }
            (Some(r), None) => {
                if testcase.is_deformational() {
                    return Err(field("revolutions", "only the solid-body tests rotate".into()));
                }
                if r == 0 {
                    return Err(field("revolutions", "must be at least 1".into()));
                }
                2.0 * PI * r as f64
            }
            (None, Some(t)) => t,
            (None, None) => TestCase::new(testcase, 0.0).t_final_default,
        };
        let alpha = match self.get("alpha") {
            Some(v) => parse_angle(v).ok_or_else(|| field("alpha", format!("cannot parse '{v}'")))?,
            None => PI / 2.0,
        };
        let checkpoint_every = parse_int("checkpoint_every")?.unwrap_or(1);
        if checkpoint_every == 0 {
            return Err(field("checkpoint_every", "must be at least 1".into()));
        }
        let cfg = ExperimentConfig {
            testcase,
            method,
            nodes,
            n,
            a,
            dt,
            dt_expr,
            t_final,
            alpha,
            epsilon: eps_given,
            checkpoint_every,
            patch_centers: self.get("patch_centers_file").map(PathBuf::from),
            out: self.get("out").map(PathBuf::from),
        };
        cfg.sl_config().num_steps().map_err(|e| field("tfinal", e.to_string()))?;
        Ok(cfg)
    }
}

fn normalize_key(k: &str) -> String {
    let k = k.trim().trim_start_matches('-').replace('-', "_");
    match k.as_str() {
        "N" | "n" => k,
        _ => k.to_ascii_lowercase(),
    }
}

fn parse_angle(v: &str) -> Option<f64> {
    if v.trim() == "0" {
        return Some(0.0);
    }
    parse_dt(v).ok().or_else(|| v.parse().ok())
}

impl ExperimentConfig {
    pub fn sl_config(&self) -> SlConfig {
        SlConfig {
            dt: self.dt,
            t_final: self.t_final,
            method: self.method,
            n: self.n,
            a: self.a,
            epsilon: self.epsilon,
            checkpoint_every: self.checkpoint_every,
        }
    }

    pub fn test_case(&self) -> TestCase {
        TestCase::new(self.testcase, self.alpha)
    }
}

/// Keeps factorized global systems between runs on the same nodes.
#[derive(Default)]
pub struct SystemCache {
    global: Mutex<Vec<(String, Option<u64>, Arc<GlobalSystem>)>>,
}

impl SystemCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn global(&self, key: &str, nodes: &NodeSet, eps: Option<f64>) -> Result<Arc<GlobalSystem>> {
        let eps_key = eps.map(f64::to_bits);
        let mut g = self.global.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, _, s)) = g.iter().find(|(k, e, _)| k == key && *e == eps_key) {
            return Ok(s.clone());
        }
        let sys = match eps {
            Some(e) => build_global(nodes, KernelSpec::imq(e)?)?.system().clone(),
            None => Arc::new(crate::interp::select_epsilon(nodes)?),
        };
        g.push((key.to_string(), eps_key, sys.clone()));
        Ok(sys)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub kind: KernelKind,
    pub epsilon: Option<f64>,
    pub phs_order: Option<u32>,
    pub sh_degree: Option<u32>,
    pub condition_estimate: Option<f64>,
    pub patch_count: Option<usize>,
    pub patch_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeReport {
    pub count: usize,
    pub source: String,
    pub spacing_h: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub nodes: f64,
    pub factorize: f64,
    pub step_loop: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Warnings {
    pub uncovered_departure_points: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub nodes: NodeReport,
    pub kernel: KernelReport,
    pub steps: usize,
    pub final_diagnostics: Option<DiagnosticsRecord>,
    pub warnings: Warnings,
    pub timings: Timings,
}

/// Everything produced by one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    pub final_field: Vec<f64>,
}

impl RunOutcome {
    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("a run always records its initial state")
    }
}

/// Builds the interpolation backend for `cfg` on `nodes`.
pub fn build_backend(
    cfg: &ExperimentConfig,
    nodes: &NodeSet,
    cache: &SystemCache,
) -> Result<(Box<dyn Interpolator>, KernelReport)> {
    match cfg.method {
        Method::Global => {
            let sys = cache.global(&cfg.nodes.describe(), nodes, cfg.epsilon)?;
            let report = KernelReport {
                kind: KernelKind::Imq,
                epsilon: Some(sys.kernel().epsilon),
                phs_order: None,
                sh_degree: None,
                condition_estimate: Some(sys.cond_estimate()),
                patch_count: None,
                patch_radius: None,
            };
            Ok((Box::new(GlobalInterpolant::from_system(sys)), report))
        }
        Method::Local => {
            let (sh, k) = sh_degree_for_stencil(cfg.n);
            let li = LocalInterpolant::new(nodes, cfg.n)?;
            let report = KernelReport {
                kind: KernelKind::Phs,
                epsilon: None,
                phs_order: Some(k),
                sh_degree: Some(sh.degree()),
                condition_estimate: None,
                patch_count: None,
                patch_radius: None,
            };
            Ok((Box::new(li), report))
        }
        Method::Pu => {
            let (sh, k) = sh_degree_for_stencil(cfg.n);
            let centers = match &cfg.patch_centers {
                Some(p) => load_nodes(p)?,
                None => fibonacci_nodes(patch_count(nodes.len(), cfg.n, cfg.a))?,
            };
            let pu = PuInterpolant::new(nodes, &centers, cfg.n, cfg.a)?;
            let report = KernelReport {
                kind: KernelKind::Phs,
                epsilon: None,
                phs_order: Some(k),
                sh_degree: Some(sh.degree()),
                condition_estimate: None,
                patch_count: Some(pu.cover().patches().len()),
                patch_radius: Some(pu.cover().radius()),
            };
            Ok((Box::new(pu), report))
        }
    }
}

/// Runs one experiment and writes `run.csv` and `summary.json` when an
/// output directory is configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_experiment_cached(cfg, &SystemCache::new())
}

pub fn run_experiment_cached(cfg: &ExperimentConfig, cache: &SystemCache) -> Result<RunOutcome> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let nodes = cfg.nodes.build()?;
    timings.nodes = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (mut backend, kernel) = build_backend(cfg, &nodes, cache)?;
    timings.factorize = t.elapsed().as_secs_f64();

    let tc = cfg.test_case();
    let sl = cfg.sl_config();
    let steps = sl.num_steps()?;
    let q0 = ScalarField::new(tc.initial_values(nodes.nodes()), 0.0);
    let reference = |time: f64| Some(tc.exact_values(nodes.nodes(), time));
    let mut records = Vec::new();
    let mut hook = |_step: usize, _t: f64, _q: &ScalarField, rec: &DiagnosticsRecord| {
        records.push(*rec);
    };
    let t = Instant::now();
    let q = sl_advect(
        &sl,
        tc.velocity.as_ref(),
        &nodes,
        backend.as_mut(),
        q0,
        Some(&reference),
        &mut hook,
    )?;
    timings.step_loop = t.elapsed().as_secs_f64();

    let summary = RunSummary {
        schema: 1,
        config: cfg.clone(),
        nodes: NodeReport {
            count: nodes.len(),
            source: cfg.nodes.describe(),
            spacing_h: nodes.spacing_h(),
        },
        kernel,
        steps,
        final_diagnostics: records.last().copied(),
        warnings: Warnings {
            uncovered_departure_points: backend.warnings(),
        },
        timings,
    };
    let outcome = RunOutcome {
        summary,
        records,
        final_field: q.values,
    };
    if let Some(dir) = &cfg.out {
        write_run(dir, &outcome)?;
    }
    Ok(outcome)
}

pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("run.csv");
    let mut f = fs::File::create(&csv).map_err(|e| Error::io(&csv, e))?;
    let mut text = String::from(DiagnosticsRecord::CSV_HEADER);
    text.push('\n');
    for r in &outcome.records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| Error::io(&csv, e))?;
    write_json(&dir.join("summary.json"), &outcome.summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n_nodes: usize,
    pub rel_l2: f64,
    pub rel_linf: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub schema: u32,
    pub rows: Vec<ConvergenceRow>,
    pub rate_l2: Option<f64>,
    pub rate_linf: Option<f64>,
    pub notice: Option<String>,
}

/// Errors at or below this level are treated as roundoff; no rate is fitted.
const ROUNDOFF_ERROR: f64 = 1e-12;

/// Runs configurations that differ only in node count and fits rates.
pub fn run_convergence(sweep: &[ExperimentConfig], out: Option<&Path>) -> Result<ConvergenceSummary> {
    if sweep.len() < 3 {
        return Err(Error::Argument(format!(
            "a convergence sweep needs at least 3 sizes, got {}",
            sweep.len()
        )));
    }
    let cache = SystemCache::new();
    let mut rows = Vec::new();
    for cfg in sweep {
        let mut cfg = cfg.clone();
        cfg.out = None;
        let outcome = run_experiment_cached(&cfg, &cache)?;
        if let Some(dir) = out {
            write_run(&dir.join(format!("N{}", outcome.summary.nodes.count)), &outcome)?;
        }
        let r = outcome.final_record();
        rows.push(ConvergenceRow {
            n_nodes: outcome.summary.nodes.count,
            rel_l2: r.rel_l2,
            rel_linf: r.rel_linf,
        });
    }
    let at_roundoff = rows
        .iter()
        .any(|r| r.rel_l2 <= ROUNDOFF_ERROR || r.rel_linf <= ROUNDOFF_ERROR);
    let (rate_l2, rate_linf, notice) = if at_roundoff {
        (
            None,
            None,
            Some("errors are at roundoff level; rate fit skipped".to_string()),
        )
    } else {
        let l2: Vec<(usize, f64)> = rows.iter().map(|r| (r.n_nodes, r.rel_l2)).collect();
        let li: Vec<(usize, f64)> = rows.iter().map(|r| (r.n_nodes, r.rel_linf)).collect();
        (
            Some(fit_convergence_rate(&l2)?),
            Some(fit_convergence_rate(&li)?),
            None,
        )
    };
    if let Some(n) = &notice {
        log::warn!("{n}");
    }
    let summary = ConvergenceSummary {
        schema: 1,
        rows,
        rate_l2,
        rate_linf,
        notice,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join("sweep.csv");
        let mut text = String::from("N,rel_l2,rel_linf\n");
        for r in &summary.rows {
            text.push_str(&format!("{},{:.12e},{:.12e}\n", r.n_nodes, r.rel_l2, r.rel_linf));
        }
        fs::write(&csv, text).map_err(|e| Error::io(&csv, e))?;
        write_json(&dir.join("sweep.json"), &summary)?;
    }
    Ok(summary)
}
