//! Batch front end: reads a configuration, runs one experiment and writes
//! its summary and detail tables as CSV.
//!
//! Every command writes `<out>/<command>_summary.csv` (one row per search
//! level) and `<out>/<command>_detail.csv` (`key,value` rows). Floats carry
//! 17 significant digits and words use the text form `f g^-1`, so the same
//! configuration produces byte-identical files at any thread count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use lab_core::action::{probe_ball, GridSpec, ProbeKind, ProbeReport, ProbeStatus, DEFAULT_BALL_CAP};
use lab_core::certify::{check_endpoint_slopes, check_pingpong, find_endpoint_zone, Interval, Side};
use lab_core::config::Config;
use lab_core::diffeo::presets::{PP_I, PP_J};
use lab_core::diffeo::GeneratorSet;
use lab_core::numeric::fmt17;
use lab_core::words::{free_ball_stats, Word};
use lab_core::zassenhaus::collision::CollisionParams;
use lab_core::zassenhaus::flatten::FlattenParams;
use lab_core::zassenhaus::transport::TransportParams;
use lab_core::zassenhaus::{
    derivative_collision_search, flatten, interval_transport_search, wreath_normal_form, wreath_sphere_sizes, Caps,
    SearchStatus,
};
use log::info;
use thiserror::Error;

pub const STATUS_OK: i32 = 0;
pub const STATUS_NOT_FOUND: i32 = 2;
pub const STATUS_PRECONDITION: i32 = 3;
pub const STATUS_CONFIG: i32 = 4;

pub const DEFAULT_TIME_BUDGET: f64 = 120.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("CSV error on {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error(transparent)]
    Core(#[from] lab_core::Error),
}

impl CliError {
    pub fn status(&self) -> i32 {
        use lab_core::Error as E;
        match self {
            CliError::UnknownCommand(_) | CliError::Config(_) | CliError::Io { .. } | CliError::Csv { .. } => {
                STATUS_CONFIG
            }
            CliError::Core(E::Config(_) | E::UnknownGenerator(_) | E::WordSyntax(_)) => STATUS_CONFIG,
            CliError::Core(E::CapExhausted(_)) => STATUS_NOT_FOUND,
            CliError::Core(_) => STATUS_PRECONDITION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Flatten,
    Transport,
    Collision,
    Wreath,
    Probe,
    Growth,
    Certify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Flatten,
        Command::Transport,
        Command::Collision,
        Command::Wreath,
        Command::Probe,
        Command::Growth,
        Command::Certify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Flatten => "flatten",
            Command::Transport => "transport",
            Command::Collision => "collision",
            Command::Wreath => "wreath",
            Command::Probe => "probe",
            Command::Growth => "growth",
            Command::Certify => "certify",
        }
    }

    fn default_n_max(self) -> usize {
        match self {
            Command::Flatten => 22,
            Command::Transport => 12,
            Command::Collision => 14,
            Command::Wreath | Command::Probe => 6,
            Command::Growth => 8,
            Command::Certify => 0,
        }
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| CliError::UnknownCommand(s.to_string()))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub config: Config,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub n_max: usize,
    pub node_cap: usize,
    pub time_budget: Duration,
}

impl ExperimentConfig {
    /// Reads `[caps]` (`n_max`, `node_cap`, `time_budget` seconds),
    /// `[output] dir` and `[run] threads`; `out` and `threads` override them.
    pub fn from_text(
        command: &str,
        text: &str,
        out: Option<PathBuf>,
        threads: Option<usize>,
    ) -> Result<Self, CliError> {
        let command: Command = command.parse()?;
        let config = Config::parse(text)?;
        let n_max = config.get_or("caps", "n_max", command.default_n_max())?;
        let node_cap = config.get_or("caps", "node_cap", 20_000_000usize)?;
        let budget: f64 = config.get_or("caps", "time_budget", DEFAULT_TIME_BUDGET)?;
        if budget.is_nan() || budget <= 0.0 || node_cap == 0 {
            return Err(CliError::Config("caps must be positive".into()));
        }
        let out_dir = match out {
            Some(p) => p,
            None => PathBuf::from(config.get_str("output", "dir").unwrap_or("out")),
        };
        let threads = match threads {
            Some(t) => t,
            None => config.get_or("run", "threads", 0usize)?,
        };
        Ok(Self { command, config, out_dir, threads, n_max, node_cap, time_budget: Duration::from_secs_f64(budget) })
    }

    pub fn from_file(
        command: &str,
        path: &Path,
        out: Option<PathBuf>,
        threads: Option<usize>,
    ) -> Result<Self, CliError> {
        // The command is checked first so that `lab foo` reports the command.
        command.parse::<Command>()?;
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_text(command, &text, out, threads)
    }

    fn caps(&self, start: Instant) -> Caps {
        Caps { n_max: self.n_max, node_cap: self.node_cap, deadline: Some(start + self.time_budget) }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: i32,
    pub paths: Vec<PathBuf>,
    pub wall_time: Duration,
    pub summary: String,
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn kv(&mut self, key: &str, value: impl Into<String>) {
        self.push(vec![key.to_string(), value.into()]);
    }
}

/// Writes `table` to `path`, creating parent directories.
pub fn emit_report(table: &Table, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

fn f(x: f64) -> String {
    fmt17(x)
}

fn word(w: &Word, set: &GeneratorSet) -> String {
    w.display(set).to_string()
}

/// Positive words in the two flattening letters, written `alpha beta`.
fn ab_word(w: &Word) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.letters().iter().map(|l| if l.gen() == 0 { "alpha" } else { "beta" }).collect::<Vec<_>>().join(" ")
}

fn status_code(s: SearchStatus) -> i32 {
    match s {
        SearchStatus::Success => STATUS_OK,
        _ => STATUS_NOT_FOUND,
    }
}

struct Output {
    status: i32,
    summary: Table,
    detail: Table,
    line: String,
}

fn kv_table() -> Table {
    Table::new(&["key", "value"])
}

/// Runs one experiment inside a worker pool of the configured size and
/// writes its tables. Errors become status codes; tables are still written
/// whenever the search itself ran.
pub fn run_experiment(cfg: &ExperimentConfig) -> RunResult {
    let start = Instant::now();
    let outcome = with_pool(cfg.threads, || dispatch(cfg, start));
    let (status, paths, summary) = match outcome.and_then(|out| {
        let s = cfg.out_dir.join(format!("{}_summary.csv", cfg.command));
        let d = cfg.out_dir.join(format!("{}_detail.csv", cfg.command));
        emit_report(&out.summary, &s)?;
        emit_report(&out.detail, &d)?;
        Ok((out.status, vec![s, d], out.line))
    }) {
        Ok(r) => r,
        Err(e) => (e.status(), Vec::new(), e.to_string()),
    };
    RunResult { status, paths, wall_time: start.elapsed(), summary }
}

#[cfg(feature = "parallel")]
fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(job)
}

#[cfg(not(feature = "parallel"))]
fn with_pool<T: Send>(_threads: usize, job: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    job()
}

fn dispatch(cfg: &ExperimentConfig, start: Instant) -> Result<Output, CliError> {
    info!("running {} with {} worker threads", cfg.command, lab_core::par::current_threads());
    match cfg.command {
        Command::Flatten => run_flatten(cfg, start),
        Command::Transport => run_transport(cfg, start),
        Command::Collision => run_collision(cfg, start),
        Command::Wreath => run_wreath(cfg),
        Command::Probe => run_probe(cfg),
        Command::Growth => run_growth(cfg),
        Command::Certify => run_certify(cfg),
    }
}

fn pingpong_sets(c: &Config) -> Result<(Interval, Interval), CliError> {
    let i = c.get_pair("pingpong", "i")?.unwrap_or(PP_I);
    let j = c.get_pair("pingpong", "j")?.unwrap_or(PP_J);
    Ok((Interval::new(i.0, i.1)?, Interval::new(j.0, j.1)?))
}

fn run_flatten(cfg: &ExperimentConfig, start: Instant) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    if set.len() != 2 {
        return Err(lab_core::Error::Precondition("flatten needs exactly two generators".into()).into());
    }
    let mut params = FlattenParams::new(c.get_or("params", "epsilon", 0.5)?)?;
    if let Some(n) = c.get("params", "n_grid")? {
        params.n_grid = n;
        params.bucket_base = 2f64.powf(0.5 / n as f64);
        params.theta = 0.5 * (1.0 + params.bucket_base);
    }
    params.theta = c.get_or("params", "theta", params.theta)?;
    params.cert_grid = c.get_or("params", "cert_grid", params.cert_grid)?;
    params.pair_window = c.get_or("params", "pair_window", params.pair_window)?;
    params.exact_pairs = c.get_or("params", "exact_pairs", params.exact_pairs)?;
    params.escape_len = c.get_or("params", "escape_len", params.escape_len)?;
    let (i, j) = pingpong_sets(c)?;
    let cert = check_pingpong(set.generator(0), set.generator(1), i, j)?;
    let r = flatten(&set, &cert, &params, &cfg.caps(start))?;

    let mut summary =
        Table::new(&["n", "candidates", "buckets", "colliding_buckets", "pairs_certified", "best_cert", "status", "v"]);
    for l in &r.levels {
        let v = match &r.accepted {
            Some(a) if a.n == l.n => word(&a.v, &set),
            _ => String::new(),
        };
        summary.push(vec![
            l.n.to_string(),
            l.candidates.to_string(),
            l.buckets.to_string(),
            l.colliding_buckets.to_string(),
            l.pairs_certified.to_string(),
            f(l.best_cert),
            l.status.name().into(),
            v,
        ]);
    }
    let mut d = kv_table();
    d.kv("status", r.status.name());
    d.kv("epsilon", f(params.epsilon));
    d.kv("grid_n", params.n_grid.to_string());
    d.kv("theta_n", f(params.theta));
    d.kv("bucket_base", f(params.bucket_base));
    d.kv("delta", f(r.slope_check.delta));
    d.kv("endpoint_precondition", "derivative within (1/theta_n, theta_n) on [1-delta, 1] for all four letters");
    d.kv("pingpong_min_margin", f(cert.min_margin()));
    d.kv("swapped_to_inverses", r.swapped.to_string());
    d.kv("escape_word", word(&r.escape_word, &set));
    d.kv("z", f(r.z));
    d.kv("case", r.case.case.to_string());
    d.kv("alpha", word(&r.case.alpha, &set));
    d.kv("beta", word(&r.case.beta, &set));
    d.kv("z0", f(r.case.z0));
    d.kv("base_word", word(&r.base_word, &set));
    d.kv(
        "search_set",
        "P_n = {U beta alpha : U positive in alpha, beta, 1 <= |U| <= n}; candidates h = (U beta alpha) W0",
    );
    for (label, pair) in [("accepted", &r.accepted), ("best", &r.best)] {
        if let Some(p) = pair {
            d.kv(&format!("{label}_n"), p.n.to_string());
            d.kv(&format!("{label}_u1"), ab_word(&p.u1));
            d.kv(&format!("{label}_u2"), ab_word(&p.u2));
            d.kv(&format!("{label}_h1"), word(&p.h1, &set));
            d.kv(&format!("{label}_h2"), word(&p.h2, &set));
            d.kv(&format!("{label}_v"), word(&p.v, &set));
            d.kv(&format!("{label}_v_len"), p.v.len().to_string());
            d.kv(&format!("{label}_grid_max"), f(p.c0.grid_max));
            d.kv(&format!("{label}_certified_bound"), f(p.c0.certified_bound));
        }
    }
    if let Some(o) = r.oracle_max {
        d.kv("oracle_grid", lab_core::zassenhaus::flatten::ORACLE_GRID.to_string());
        d.kv("oracle_max", f(o));
        d.kv(
            "nontrivial_witness",
            r.witness.map_or_else(|| "numerically indistinguishable from identity".to_string(), f),
        );
    }
    let a = &r.audit;
    for (k, v) in [
        ("basepoint_checked", a.basepoint_checked),
        ("basepoint_violations", a.basepoint_violations),
        ("suffix_checked", a.suffix_checked),
        ("suffix_violations", a.suffix_violations),
        ("pullback_points", a.pullback_points),
        ("pullback_below_y1", a.pullback_below_y1),
        ("zone_letters", a.zone_letters),
        ("zone_violations", a.zone_violations),
    ] {
        d.kv(k, v.to_string());
    }
    d.kv("m_const", f(r.m_const));
    d.kv("m_len", r.m_len.to_string());
    d.kv("theoretical_n", r.theoretical_n.map_or("none".into(), |n| n.to_string()));
    d.kv("empirical_n", r.empirical_n.map_or("none".into(), |n| n.to_string()));
    let line = format!(
        "flatten: {} (empirical n = {}, theoretical n = {}, best certified bound = {})",
        r.status.name(),
        r.empirical_n.map_or("none".into(), |n| n.to_string()),
        r.theoretical_n.map_or("none".into(), |n| n.to_string()),
        r.best.as_ref().map_or("none".into(), |b| f(b.c0.certified_bound)),
    );
    Ok(Output { status: status_code(r.status), summary, detail: d, line })
}

fn run_transport(cfg: &ExperimentConfig, start: Instant) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    let params = TransportParams {
        x0: c.get_or("params", "x0", 0.405)?,
        delta_len: c.get_or("params", "delta_len", 0.05)?,
        epsilon: c.get_or("params", "epsilon", 0.1)?,
        lambda: c.get_or("params", "lambda", 1.1)?,
    };
    let r = interval_transport_search(&set, &params, &cfg.caps(start))?;
    let mut summary = Table::new(&[
        "n",
        "sphere_size",
        "sum",
        "lower_bound",
        "bound_applies",
        "bound_holds",
        "transitions",
        "violations",
        "sharp_violations",
    ]);
    for l in &r.levels {
        summary.push(vec![
            l.n.to_string(),
            l.sphere_size.to_string(),
            f(l.sum),
            f(l.lower_bound),
            l.bound_applies.to_string(),
            l.bound_holds.to_string(),
            l.transitions.to_string(),
            l.violations.to_string(),
            l.sharp_violations.to_string(),
        ]);
    }
    let mut d = kv_table();
    d.kv("status", r.status.name());
    d.kv("x0", f(params.x0));
    d.kv("delta_hi", f(params.x0 + params.delta_len));
    d.kv("epsilon", f(params.epsilon));
    d.kv("lambda", f(params.lambda));
    d.kv("sums_diverge", params.sums_diverge().to_string());
    for (g, est) in set.generators().iter().zip(&r.d1) {
        d.kv(&format!("d1_{}", g.id()), f(est.certified_bound));
    }
    if let Some(o) = &r.overlap {
        d.kv("overlap_n", o.n.to_string());
        d.kv("g1", word(&o.g1, &set));
        d.kv("g2", word(&o.g2, &set));
        d.kv("g2_x0", f(o.g2_x0));
        d.kv("delta_g1_lo", f(o.delta_g1.lo));
        d.kv("delta_g1_hi", f(o.delta_g1.hi));
        d.kv("pullback", f(o.pullback));
        d.kv("pullback_in_delta", o.in_delta.to_string());
        d.kv("distinctness", o.distinct.name());
    }
    let line = format!(
        "transport: {} ({} levels, overlap {})",
        r.status.name(),
        r.levels.len(),
        r.overlap.as_ref().map_or("none".into(), |o| format!("at n = {}", o.n))
    );
    Ok(Output { status: status_code(r.status), summary, detail: d, line })
}

fn run_collision(cfg: &ExperimentConfig, start: Instant) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    let mut params = CollisionParams::new(
        c.get_or("params", "x0", 0.5)?,
        c.get_or("params", "lambda", 1.1)?,
        c.get_or("params", "c", 0.5)?,
        c.get_or("params", "epsilon", 0.09)?,
    )?;
    params.eta = c.get_or("params", "eta", params.eta)?;
    params.lambda1 = c.get_or("params", "lambda1", params.lambda1)?;
    params.lambda2 = c.get_or("params", "lambda2", params.lambda2)?;
    params.c1 = c.get_or("params", "c1", params.c1)?;
    let r = derivative_collision_search(&set, &params, &cfg.caps(start))?;
    let mut summary =
        Table::new(&["n", "sphere_size", "occupied_buckets", "max_occupancy", "dense_buckets", "pairs_tested"]);
    for l in &r.levels {
        summary.push(vec![
            l.n.to_string(),
            l.sphere_size.to_string(),
            l.occupied_buckets.to_string(),
            l.max_occupancy.to_string(),
            l.dense_buckets.to_string(),
            l.pairs_tested.to_string(),
        ]);
    }
    let mut d = kv_table();
    d.kv("status", r.status.name());
    for (k, v) in [
        ("x0", params.x0),
        ("c", params.c),
        ("c1", params.c1),
        ("lambda", params.lambda),
        ("lambda1", params.lambda1),
        ("lambda2", params.lambda2),
        ("eta", params.eta),
        ("epsilon", params.epsilon),
        ("l", params.l()),
        ("m_lip", set.alphabet_lip()),
    ] {
        d.kv(k, f(v));
    }
    d.kv("n1", r.n1.map_or("none".into(), |n| n.to_string()));
    for (g, est) in set.generators().iter().zip(&r.d1) {
        d.kv(&format!("d1_{}", g.id()), f(est.certified_bound));
    }
    if let Some(p) = &r.pair {
        d.kv("pair_n", p.n.to_string());
        d.kv("bucket", p.bucket.to_string());
        d.kv("g1", word(&p.g1, &set));
        d.kv("g2", word(&p.g2, &set));
        d.kv("g1_x0", f(p.g1_x0));
        d.kv("g2_x0", f(p.g2_x0));
        d.kv("deriv_ratio", f(p.deriv_ratio));
        d.kv("v", word(&p.v, &set));
        d.kv("v_deriv_x0", f(p.v_deriv));
        d.kv("distinctness", p.distinct.name());
        let a = &p.audit;
        d.kv("chain_steps", a.steps.to_string());
        d.kv("distance_violations", a.distance_violations.to_string());
        d.kv("ratio_violations", a.ratio_violations.to_string());
        d.kv("worst_ratio_use", f(a.worst_ratio_use));
        d.kv("product_identity_err", f(a.product_identity_err));
        d.kv("v_identity_err", f(a.v_identity_err));
        d.kv("chain_audit_passed", a.passed().to_string());
    }
    let line = format!(
        "collision: {}{}",
        r.status.name(),
        r.pair.as_ref().map_or(String::new(), |p| format!(" at n = {} with V'(x0) = {}", p.n, f(p.v_deriv)))
    );
    Ok(Output { status: status_code(r.status), summary, detail: d, line })
}

fn probe_rows(t: &mut Table, r: &ProbeReport, set: &GeneratorSet, label: &str) {
    for l in &r.levels {
        let x0 = if r.points.len() == 1 { f(r.x0()) } else { String::new() };
        t.push(vec![label.to_string(), l.n.to_string(), f(l.minimum), word(&l.argmin, set), x0]);
    }
}

fn run_wreath(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let c = &cfg.config;
    let pair = c.wreath_pair()?;
    let set = &pair.set;
    let radius = c.get_or("params", "probe_radius", cfg.n_max)?;
    let x0 = c.get_or("params", "probe_x0", 0.5 * (pair.core.lo + pair.core.hi))?;
    let grid = GridSpec::new(c.get_or("params", "probe_grid", 1000usize)?)?;

    let single = probe_ball(set, radius, &[x0], ProbeKind::DerivGap, DEFAULT_BALL_CAP)?;
    let points: Vec<f64> = grid.points().collect();
    let multi = probe_ball(set, radius, &points, ProbeKind::DerivGap, DEFAULT_BALL_CAP)?;
    let identity_words = count_identity_words(set, radius)?;

    let mut summary = Table::new(&["probe", "n", "min_deriv_gap", "argmin", "x0"]);
    probe_rows(&mut summary, &single, set, "single_point");
    probe_rows(&mut summary, &multi, set, "grid_max");

    let mut d = kv_table();
    let u = pair.u();
    let v = pair.v();
    d.kv("epsilon", f(c.get_or("wreath", "epsilon", lab_core::config::DEFAULT_WREATH_EPSILON)?));
    d.kv("core_lo", f(pair.core.lo));
    d.kv("core_hi", f(pair.core.hi));
    d.kv("k", pair.k.to_string());
    for (name, g) in [("u", u), ("v", v)] {
        if let lab_core::diffeo::Family::PolyBump(b) = g.family() {
            d.kv(&format!("{name}_c"), f(b.c));
            d.kv(&format!("{name}_support_lo"), f(b.lo));
            d.kv(&format!("{name}_support_hi"), f(b.hi));
        }
    }
    d.kv("d1_u_grid", f(pair.d1_u.grid_max));
    d.kv("d1_u_certified", f(pair.d1_u.certified_bound));
    d.kv("d1_v_grid", f(pair.d1_v.grid_max));
    d.kv("d1_v_certified", f(pair.d1_v.certified_bound));
    let kk = pair.k as i64;
    for (t, k) in pair.translates.iter().zip(-kk..=kk) {
        d.kv(&format!("translate_{k}_lo"), f(t.lo));
        d.kv(&format!("translate_{k}_hi"), f(t.hi));
    }
    d.kv("translates_disjoint", pair.disjoint.to_string());
    d.kv("commutator_max", f(pair.commutator_max));
    d.kv("probe_radius", radius.to_string());
    d.kv("single_point_min", f(single.minimum()));
    d.kv("single_point_degenerate", single.degenerate.to_string());
    d.kv("grid_probe_points", points.len().to_string());
    d.kv("grid_probe_floor", f(multi.minimum()));
    d.kv("identity_words_in_ball", identity_words.to_string());
    d.kv(
        "evidence",
        "numerical evidence of discreteness only: the floor is a minimum over words of length <= n, not a proof",
    );
    let complete = single.status == ProbeStatus::Complete && multi.status == ProbeStatus::Complete;
    let positive = !multi.degenerate && identity_words == 0;
    let line = format!(
        "wreath: d1(u) <= {}, d1(v) <= {}, commutators <= {}, derivative-gap floor {} over n <= {}",
        f(pair.d1_u.certified_bound),
        f(pair.d1_v.certified_bound),
        f(pair.commutator_max),
        f(multi.minimum()),
        radius
    );
    let status = if complete && positive { STATUS_OK } else { STATUS_NOT_FOUND };
    Ok(Output { status, summary, detail: d, line })
}

/// Nonempty reduced words of length `<= n` whose normal form is trivial.
fn count_identity_words(set: &GeneratorSet, n: usize) -> Result<u64, CliError> {
    let mut count = 0;
    for k in 1..=n {
        for w in lab_core::words::enumerate_sphere(set.len(), k) {
            if wreath_normal_form(&w, set)?.is_identity() {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn run_probe(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    let x0 = c.get_or("params", "x0", 0.5)?;
    let radius = c.get_or("params", "n", cfg.n_max)?;
    let kind = c.get_str("params", "kind").unwrap_or("both");
    let kinds: Vec<ProbeKind> = match kind {
        "displacement" => vec![ProbeKind::Displacement],
        "deriv_gap" => vec![ProbeKind::DerivGap],
        "both" => vec![ProbeKind::Displacement, ProbeKind::DerivGap],
        other => return Err(CliError::Config(format!("unknown probe kind `{other}`"))),
    };
    let mut summary = Table::new(&["kind", "n", "value", "word", "x0"]);
    let mut d = kv_table();
    let mut status = STATUS_OK;
    for k in kinds {
        let r = match k {
            ProbeKind::Displacement => lab_core::action::min_displacement_ball(&set, radius, x0)?,
            ProbeKind::DerivGap => lab_core::action::min_deriv_gap_ball(&set, radius, x0)?,
        };
        probe_rows(&mut summary, &r, &set, k.name());
        d.kv(&format!("{}_minimum", k.name()), f(r.minimum()));
        d.kv(&format!("{}_degenerate", k.name()), r.degenerate.to_string());
        d.kv(
            &format!("{}_status", k.name()),
            if r.status == ProbeStatus::Complete { "complete" } else { "cap_exceeded" },
        );
        if r.status != ProbeStatus::Complete {
            status = STATUS_NOT_FOUND;
        }
    }
    let line = format!("probe: radius {radius} at x0 = {}", f(x0));
    Ok(Output { status, summary, detail: d, line })
}

fn run_growth(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    let n = c.get_or("params", "n", cfg.n_max)?;
    let free = free_ball_stats(set.len(), n);
    let elements = set.wreath_roles().map(|_| wreath_sphere_sizes(n));
    let mut summary =
        Table::new(&["n", "sphere_words", "ball_words", "positive_words", "sphere_elements", "ball_elements"]);
    let mut ball = 0u64;
    let mut ball_el = 0u64;
    for k in 0..=n {
        ball += free.sphere_sizes[k];
        let (se, be) = match &elements {
            Some(e) => {
                ball_el += e[k];
                (e[k].to_string(), ball_el.to_string())
            }
            None => (String::new(), String::new()),
        };
        let positive = if k < 63 { ((1u64 << (k + 1)) - 2).to_string() } else { String::new() };
        summary.push(vec![k.to_string(), free.sphere_sizes[k].to_string(), ball.to_string(), positive, se, be]);
    }
    let mut d = kv_table();
    d.kv("generators", set.names().join(" "));
    d.kv("word_growth_estimate", f(free.omega_estimate));
    if let Some(e) = &elements {
        let s = lab_core::words::BallStats::from_sphere_sizes(e.clone());
        d.kv("element_growth_estimate", f(s.omega_estimate));
    }
    let line = format!("growth: radius {n}, word growth estimate {}", f(free.omega_estimate));
    Ok(Output { status: STATUS_OK, summary, detail: d, line })
}

fn run_certify(cfg: &ExperimentConfig) -> Result<Output, CliError> {
    let c = &cfg.config;
    let set = c.generator_set()?;
    if set.len() < 2 {
        return Err(lab_core::Error::Precondition("certify needs two generators".into()).into());
    }
    let (i, j) = pingpong_sets(c)?;
    let cert = check_pingpong(set.generator(0), set.generator(1), i, j)?;
    let theta = c.get_or("params", "theta", 1.05)?;
    let side = Side::from_index(c.get_or("params", "side", 1u8)?)?;
    let slope = match c.get::<f64>("params", "delta")? {
        Some(delta) => Some(check_endpoint_slopes(&set, side, delta, theta)?),
        None => find_endpoint_zone(&set, side, theta).ok(),
    };
    let mut summary = Table::new(&[
        "f",
        "g",
        "i_lo",
        "i_hi",
        "j_lo",
        "j_hi",
        "margin_f_lo",
        "margin_f_hi",
        "margin_g_lo",
        "margin_g_hi",
        "valid",
    ]);
    let mut row = vec![cert.f.clone(), cert.g.clone(), f(i.lo), f(i.hi), f(j.lo), f(j.hi)];
    row.extend(cert.margins.iter().map(|&m| f(m)));
    row.push(cert.valid.to_string());
    summary.push(row);
    let mut d = kv_table();
    d.kv("pingpong_valid", cert.valid.to_string());
    if let Some(v) = &cert.violation {
        d.kv("violation_generator", v.generator.clone());
        d.kv("violation_endpoint", f(v.endpoint));
        d.kv("violation_image", f(v.image));
    }
    d.kv("side", side.index().to_string());
    d.kv("theta", f(theta));
    match &slope {
        Some(s) => {
            d.kv("delta", f(s.delta));
            d.kv("sampled_min", f(s.sampled_min));
            d.kv("sampled_max", f(s.sampled_max));
            d.kv("bound_min", f(s.bound_min));
            d.kv("bound_max", f(s.bound_max));
            d.kv("slope_check", if s.passed { "pass" } else { "fail" });
        }
        None => d.kv("slope_check", "fail"),
    }
    let passed = slope.is_some_and(|s| s.passed);
    let line = format!(
        "certify: ping-pong {}, endpoint slopes {}",
        if cert.valid { "valid" } else { "invalid" },
        if passed { "pass" } else { "fail" }
    );
    let status = if cert.valid && passed { STATUS_OK } else { STATUS_NOT_FOUND };
    Ok(Output { status, summary, detail: d, line })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commands_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert_eq!("foo".parse::<Command>().unwrap_err().status(), STATUS_CONFIG);
    }

    #[test]
    fn error_statuses() {
        use lab_core::Error as E;
        assert_eq!(CliError::from(E::Precondition("x".into())).status(), STATUS_PRECONDITION);
        assert_eq!(CliError::from(E::CapExhausted("x".into())).status(), STATUS_NOT_FOUND);
        assert_eq!(CliError::from(E::Config("x".into())).status(), STATUS_CONFIG);
    }

    #[test]
    fn caps_are_read_and_overridden() {
        let text = "[caps]\nn_max = 5\ntime_budget = 3\n[output]\ndir = here\n[run]\nthreads = 2\n";
        let cfg = ExperimentConfig::from_text("probe", text, None, None).unwrap();
        assert_eq!((cfg.n_max, cfg.threads), (5, 2));
        assert_eq!(cfg.out_dir, PathBuf::from("here"));
        let cfg = ExperimentConfig::from_text("probe", text, Some("there".into()), Some(8)).unwrap();
        assert_eq!((cfg.out_dir, cfg.threads), (PathBuf::from("there"), 8));
        assert!(ExperimentConfig::from_text("probe", "[caps]\ntime_budget = 0\n", None, None).is_err());
    }

    #[test]
    fn alpha_beta_words() {
        assert_eq!(ab_word(&lab_core::words::positive_word(3, 0b011)), "alpha beta beta");
        assert_eq!(ab_word(&Word::empty()), "1");
    }
}
