//! The `riskdyn` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid data, 3 numerical
//! failure. Every command that writes files also writes `manifest.json`
//! into its output directory.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::io::{self, cell, write_csv, write_json, DataPaths, Dataset};
use crate::likelihood::{
    compare_models, fit_variants, likelihood_surface, perturbation_study, Axis, ModelVariant,
    Param, PerturbConfig, SearchConfig,
};
use crate::manifest::RunManifest;
use crate::meanfield::{integrate_ode, stationary_point, MeanFieldRates, MeanFieldState};
use crate::model::{derive_rates, ModelParams, TimeUnit};
use crate::netstats::{contagion_potential, degree_stats, estimate_block_probabilities, BlockMatrix, PairConvention};
use crate::sim::{self, InitialState, SimConfig, TailWindow};
use crate::synth::{synth_dataset, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "riskdyn", version, about = "Failure dynamics on expert-assessed risk networks")]
pub struct Cli {
    /// Worker threads; results do not depend on it [default: all cores]
    #[arg(long, global = true, env = "RISKDYN_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Maximum-likelihood fit of one model variant
    Fit(FitCmd),
    /// Log-likelihood on a two-parameter grid
    Surface(SurfaceCmd),
    /// Fit several variants and compare them by likelihood ratio
    Compare(CompareCmd),
    /// Refit on likelihoods perturbed within one standard deviation
    Perturb(PerturbCmd),
    /// Long-run persistence and activity by Monte-Carlo
    Simulate(SimulateCmd),
    /// Survival of cascades started by one risk
    Cascade(CascadeCmd),
    /// Probability that one risk's cascade reaches others
    Targets(TargetsCmd),
    /// Contagion potential of every risk
    Contagion(ContagionCmd),
    /// Mean-field trajectory and stable point
    Meanfield(MeanfieldCmd),
    /// Block edge densities and degree statistics
    Blocks(BlocksCmd),
    /// Generate a synthetic dataset
    Synth(SynthCmd),
    /// Check input files and report their dimensions
    Validate(ValidateCmd),
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Directory holding risks.csv, edges.csv and history.csv
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub risks: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamArgs {
    /// params.json [default: params.json in --data-dir]
    #[arg(long, conflicts_with_all = ["alpha", "beta", "gamma"])]
    pub params: Option<PathBuf>,
    #[arg(long, requires_all = ["beta", "gamma"])]
    pub alpha: Option<f64>,
    #[arg(long, requires_all = ["alpha", "gamma"])]
    pub beta: Option<f64>,
    #[arg(long, requires_all = ["alpha", "beta"])]
    pub gamma: Option<f64>,
    /// Unit of --alpha/--beta/--gamma
    #[arg(long, default_value = "decade")]
    pub time_unit: TimeUnit,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Grid points per axis and pass
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    /// Relative grid spacing at which refinement stops
    #[arg(long, default_value_t = 1e-3)]
    pub precision: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            points: self.points,
            rel_precision: self.precision,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "network")]
    pub variant: ModelVariant,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Keep every evaluated grid point in the output
    #[arg(long)]
    pub trace: bool,
    /// Output file [default: <out-dir>/fit.json]
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

/// `param:lo:hi:points[:log]`
#[derive(Debug, Clone, Serialize)]
pub struct AxisSpec {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log: bool,
}

impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("axis '{s}' must look like alpha:0.1:1:21 or alpha:0.1:1:21:log");
        if !(4..=5).contains(&parts.len()) {
            return Err(bad());
        }
        let log = match parts.get(4) {
            None | Some(&"lin") | Some(&"linear") => false,
            Some(&"log") => true,
            Some(_) => return Err(bad()),
        };
        Ok(Self {
            param: parts[0].parse().map_err(|e: Error| e.to_string())?,
            lo: parts[1].parse().map_err(|_| bad())?,
            hi: parts[2].parse().map_err(|_| bad())?,
            points: parts[3].parse().map_err(|_| bad())?,
            log,
        })
    }
}

/// `param=value`
#[derive(Debug, Clone, Serialize)]
pub struct FixSpec {
    pub param: Param,
    pub value: f64,
}

impl FromStr for FixSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (p, v) = s
            .split_once('=')
            .ok_or_else(|| format!("'{s}' must look like gamma=427"))?;
        Ok(Self {
            param: p.parse().map_err(|e: Error| e.to_string())?,
            value: v.parse().map_err(|_| format!("invalid value '{v}'"))?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SurfaceCmd {
    #[command(flatten)]
    pub data: DataArgs,
    /// Pinned parameter, e.g. gamma=427
    #[arg(long)]
    pub fix: FixSpec,
    /// Outer axis, e.g. alpha:0.05:1:40:log
    #[arg(long)]
    pub x: AxisSpec,
    /// Inner axis, e.g. beta:0:0.5:40
    #[arg(long)]
    pub y: AxisSpec,
    /// Unit of all parameter values
    #[arg(long, default_value = "decade")]
    pub time_unit: TimeUnit,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "network,disconnected,expert_based,uniform"
    )]
    pub variants: Vec<ModelVariant>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct PerturbCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub sets: usize,
    /// Replicas for each activity estimate
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    /// All risks inactive
    Inactive,
    /// First month of the history file
    FirstMonth,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 2200)]
    pub steps: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, value_enum, default_value = "inactive")]
    pub initial: Start,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CascadeCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub seed: u64,
    /// Risk id (1-based) active at month 0
    #[arg(long)]
    pub initiator: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
    /// Decay fit stops where fewer replicas than this are alive
    #[arg(long, default_value_t = 30)]
    pub min_alive: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TargetsCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub initiator: usize,
    /// Target ids [default: every other risk]
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ContagionCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Pair term used for the potential: lagged (alias eq3) or synchronous
    #[arg(long, default_value = "lagged")]
    pub convention: PairConvention,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MeanfieldCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Months to integrate
    #[arg(long, default_value_t = 2200.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    /// Months between recorded rows
    #[arg(long, default_value_t = 1.0)]
    pub record_every: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlocksCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthCmd {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 156)]
    pub months: usize,
    #[arg(long, default_value_t = 240)]
    pub burn_in: usize,
    /// First recorded month
    #[arg(long, default_value = "2000-01")]
    pub start: String,
    #[arg(long, default_value_t = 5)]
    pub groups: usize,
    #[arg(long, default_value_t = 10)]
    pub group_size: usize,
    /// Edge probability within a group
    #[arg(long, default_value_t = 0.6)]
    pub p_in: f64,
    /// Edge probability between groups
    #[arg(long, default_value_t = 0.38)]
    pub p_out: f64,
    #[arg(long, default_value_t = 2.0)]
    pub likelihood_min: f64,
    #[arg(long, default_value_t = 4.5)]
    pub likelihood_max: f64,
    #[arg(long, default_value_t = 0.015)]
    pub stddev_fraction: f64,
    #[arg(long, default_value_t = 0.365)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.14)]
    pub beta: f64,
    #[arg(long, default_value_t = 427.0)]
    pub gamma: f64,
    #[arg(long, default_value = "decade")]
    pub time_unit: TimeUnit,
    #[command(flatten)]
    #[serde(skip)]
    pub out_dir: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateCmd {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CmdResult<T = ()> = std::result::Result<T, Failure>;

impl DataArgs {
    fn paths(&self, need_history: bool) -> CmdResult<DataPaths> {
        let pick = |explicit: &Option<PathBuf>, file: &str, flag: &str| -> CmdResult<PathBuf> {
            match (explicit, &self.data_dir) {
                (Some(p), _) => Ok(p.clone()),
                (None, Some(d)) => Ok(d.join(file)),
                (None, None) => Err(Failure::Usage(format!("--{flag} or --data-dir is required"))),
            }
        };
        let history = if need_history {
            Some(pick(&self.history, io::HISTORY_FILE, "history")?)
        } else {
            self.history.clone()
        };
        Ok(DataPaths {
            risks: pick(&self.risks, io::RISKS_FILE, "risks")?,
            edges: pick(&self.edges, io::EDGES_FILE, "edges")?,
            history,
        })
    }

    fn load(&self, need_history: bool, manifest: &mut RunManifest) -> CmdResult<Dataset> {
        let paths = self.paths(need_history)?;
        let data = Dataset::load(&paths)?;
        manifest.add_input(&paths.risks)?;
        manifest.add_input(&paths.edges)?;
        if let Some(h) = &paths.history {
            manifest.add_input(h)?;
        }
        Ok(data)
    }
}

impl ParamArgs {
    fn resolve(&self, data: &DataArgs, manifest: &mut RunManifest) -> CmdResult<ModelParams> {
        if let (Some(a), Some(b), Some(g)) = (self.alpha, self.beta, self.gamma) {
            return Ok(ModelParams::new(a, b, g, self.time_unit)?);
        }
        let path = match (&self.params, &data.data_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(d)) if d.join(io::PARAMS_FILE).exists() => d.join(io::PARAMS_FILE),
            _ => {
                return Err(Failure::Usage(
                    "model parameters required: --params or --alpha/--beta/--gamma".into(),
                ))
            }
        };
        let p = io::load_params(&path)?;
        manifest.add_input(&path)?;
        Ok(p)
    }
}

fn risk_index(id: usize, n: usize, flag: &str) -> CmdResult<usize> {
    if id == 0 || id > n {
        return Err(Failure::Run(Error::Validation(format!(
            "--{flag} {id} is not a risk id in 1..={n}"
        ))));
    }
    Ok(id - 1)
}

fn fmt<T: Display>(v: T) -> String {
    v.to_string()
}

/// Arguments that shape results: everything except worker count and
/// output locations.
fn canonical_args(argv: &[String]) -> Vec<String> {
    const DROP: [&str; 3] = ["--workers", "--out-dir", "--out"];
    let mut out = Vec::new();
    let mut skip_next = false;
    for a in argv.iter().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if let Some(flag) = DROP.iter().find(|f| a == *f || a.starts_with(&format!("{f}="))) {
            skip_next = a == flag;
            continue;
        }
        out.push(a.clone());
    }
    out
}

struct Ctx {
    manifest: RunManifest,
    dir: PathBuf,
}

impl Ctx {
    fn new(name: &str, argv: &[String], config: &impl Serialize, dir: &Path) -> CmdResult<Self> {
        let config = serde_json::to_value(config).map_err(Error::from)?;
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        Ok(Self {
            manifest: RunManifest::new(name, canonical_args(argv), config),
            dir: dir.to_path_buf(),
        })
    }

    fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn finish(mut self, outputs: &[PathBuf]) -> CmdResult {
        for p in outputs {
            self.manifest.add_output(p)?;
        }
        self.manifest.write(&self.dir)?;
        Ok(())
    }
}

fn cmd_fit(c: &FitCmd, argv: &[String]) -> CmdResult {
    let out = c.out.clone().unwrap_or_else(|| c.out_dir.out_dir.join("fit.json"));
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut ctx = Ctx::new("fit", argv, c, dir)?;
    let d = c.data.load(true, &mut ctx.manifest)?;
    let mut search = c.search.config();
    search.keep_trace = c.trace;
    let f = fit_variants(&d.catalog, &d.graph, d.history()?, &[c.variant], &search)?.remove(0);
    write_json(&f, &out)?;
    println!(
        "{}: alpha={} beta={} gamma={} (per decade), log-likelihood {}",
        f.variant, f.decade.alpha, f.decade.beta, f.decade.gamma, f.log_likelihood
    );
    if f.boundary_hit {
        println!("warning: optimum on the search boundary for {:?}", f.boundary_params);
    }
    ctx.finish(&[out])
}

fn axis(spec: &AxisSpec, to_monthly: f64) -> Axis {
    let (lo, hi) = (spec.lo * to_monthly, spec.hi * to_monthly);
    if spec.log {
        Axis::log(spec.param, lo, hi, spec.points)
    } else {
        Axis::linear(spec.param, lo, hi, spec.points)
    }
}

fn cmd_surface(c: &SurfaceCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("surface", argv, c, &c.out_dir.out_dir)?;
    let d = c.data.load(true, &mut ctx.manifest)?;
    let m = c.time_unit.months();
    let to_monthly = 1.0 / m;
    let rows = likelihood_surface(
        &d.catalog,
        &d.graph,
        d.history()?,
        (c.fix.param, c.fix.value * to_monthly),
        &axis(&c.x, to_monthly),
        &axis(&c.y, to_monthly),
    )?;
    let out = ctx.path("surface.csv");
    write_csv(
        &out,
        &[c.x.param.name(), c.y.param.name(), "log_likelihood"],
        rows.iter().map(|p| [fmt(p.x * m), fmt(p.y * m), fmt(p.log_likelihood)]),
    )?;
    ctx.finish(&[out])
}

fn cmd_compare(c: &CompareCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("compare", argv, c, &c.out_dir.out_dir)?;
    let d = c.data.load(true, &mut ctx.manifest)?;
    let mut variants = c.variants.clone();
    variants.dedup();
    let fits = fit_variants(&d.catalog, &d.graph, d.history()?, &variants, &c.search.config())?;
    let rows = compare_models(&fits);
    let out = ctx.path("compare.csv");
    write_csv(
        &out,
        &["full", "restricted", "ll_full", "ll_restricted", "statistic", "df", "p_value", "nested"],
        rows.iter().map(|r| {
            [
                fmt(r.full),
                fmt(r.restricted),
                fmt(r.ll_full),
                fmt(r.ll_restricted),
                fmt(r.statistic),
                fmt(r.degrees_of_freedom),
                cell(r.p_value),
                fmt(r.nested),
            ]
        }),
    )?;
    let fits_out = ctx.path("fits.json");
    write_json(&fits, &fits_out)?;
    for f in &fits {
        println!("{:<13} log-likelihood {}", f.variant.name(), f.log_likelihood);
    }
    for r in &rows {
        let p = r.p_value.map_or("-".to_string(), |p| format!("{p:.3e}"));
        println!("{} vs {}: D={:.4} df={} p={p}", r.full, r.restricted, r.statistic, r.degrees_of_freedom);
    }
    ctx.finish(&[out, fits_out])
}

fn cmd_perturb(c: &PerturbCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("perturb", argv, c, &c.out_dir.out_dir)?;
    ctx.manifest.seeds.push(c.seed);
    let d = c.data.load(true, &mut ctx.manifest)?;
    let cfg = PerturbConfig {
        sets: c.sets,
        seed: c.seed,
        search: c.search.config(),
        replicas: c.replicas,
    };
    let r = perturbation_study(&d.catalog, &d.graph, d.history()?, &cfg)?;
    let out = ctx.path("perturb.json");
    write_json(&r, &out)?;
    println!(
        "max relative deviation: alpha {:.4} beta {:.4} gamma {:.4} activity {:.4} log-likelihood {:.4}",
        r.max_param_deviation.alpha,
        r.max_param_deviation.beta,
        r.max_param_deviation.gamma,
        r.max_activity_deviation,
        r.max_loglik_deviation
    );
    ctx.finish(&[out])
}

fn cmd_simulate(c: &SimulateCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("simulate", argv, c, &c.out_dir.out_dir)?;
    ctx.manifest.seeds.push(c.seed);
    let d = c.data.load(c.initial == Start::FirstMonth, &mut ctx.manifest)?;
    let params = c.params.resolve(&c.data, &mut ctx.manifest)?;
    let initial_state = match c.initial {
        Start::Inactive => InitialState::Inactive,
        Start::FirstMonth => InitialState::State(
            d.history()?
                .first_state()
                .cloned()
                .ok_or_else(|| Error::validation("history is empty"))?,
        ),
    };
    let cfg = SimConfig {
        steps: c.steps,
        burn_in: c.burn_in,
        replicas: c.replicas,
        master_seed: c.seed,
        initial_state,
        ..SimConfig::default()
    };
    let r = sim::run_persistence(&d.catalog, &d.graph, &params, &cfg)?;
    let out = ctx.path("persistence.csv");
    write_csv(
        &out,
        &["id", "name", "persistence", "standard_error"],
        d.catalog
            .records()
            .iter()
            .zip(r.fractions.iter().zip(&r.fraction_se))
            .map(|(rec, (f, se))| [fmt(rec.id), rec.name.clone(), fmt(f), fmt(se)]),
    )?;
    let hist = ctx.path("activity.csv");
    write_csv(
        &hist,
        &["active_risks", "samples"],
        r.activity_histogram.iter().enumerate().map(|(k, n)| [fmt(k), fmt(n)]),
    )?;
    println!("mean activity {:.4} (sd {:.4})", r.mean_activity, r.activity_std);
    for (p, k) in &r.percentiles {
        println!("p{p}: {k} active risks");
    }
    ctx.finish(&[out, hist])
}

fn cmd_cascade(c: &CascadeCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("cascade", argv, c, &c.out_dir.out_dir)?;
    ctx.manifest.seeds.push(c.seed);
    let d = c.data.load(false, &mut ctx.manifest)?;
    let params = c.params.resolve(&c.data, &mut ctx.manifest)?;
    let i = risk_index(c.initiator, d.catalog.len(), "initiator")?;
    let rates = derive_rates(&d.catalog, &d.graph, &params)?;
    let mut r = sim::cascade(&rates, i, c.max_steps, c.replicas, c.seed)?;
    r.decay = sim::fit_exponential_decay(&r.survival, TailWindow::auto(&r.survival, c.min_alive)).ok();
    let out = ctx.path("survival.csv");
    let se = r.survival.standard_errors();
    write_csv(
        &out,
        &["t", "survival", "standard_error"],
        r.survival
            .times
            .iter()
            .zip(r.survival.survival.iter().zip(&se))
            .map(|(t, (s, e))| [fmt(t), fmt(s), fmt(e)]),
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        initiator: usize,
        replicas: usize,
        max_steps: usize,
        mean_lifetime: f64,
        censored: usize,
        decay: Option<sim::DecayFit>,
        lifetime_fraction: &'a [f64],
    }
    let json = ctx.path("cascade.json");
    write_json(
        &Summary {
            initiator: c.initiator,
            replicas: c.replicas,
            max_steps: c.max_steps,
            mean_lifetime: r.mean_lifetime,
            censored: r.censored,
            decay: r.decay,
            lifetime_fraction: &r.lifetime_fraction,
        },
        &json,
    )?;
    println!("mean lifetime {:.2} months, {} censored", r.mean_lifetime, r.censored);
    if let Some(fit) = r.decay {
        println!("decay rate {:.5} per month, R^2 {}", fit.rate, cell(fit.r_squared));
    }
    ctx.finish(&[out, json])
}

fn cmd_targets(c: &TargetsCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("targets", argv, c, &c.out_dir.out_dir)?;
    ctx.manifest.seeds.push(c.seed);
    let d = c.data.load(false, &mut ctx.manifest)?;
    let params = c.params.resolve(&c.data, &mut ctx.manifest)?;
    let n = d.catalog.len();
    let i = risk_index(c.initiator, n, "initiator")?;
    let targets: Vec<usize> = if c.target.is_empty() {
        (0..n).filter(|&j| j != i).collect()
    } else {
        c.target
            .iter()
            .map(|&t| risk_index(t, n, "target"))
            .collect::<CmdResult<_>>()?
    };
    let rates = derive_rates(&d.catalog, &d.graph, &params)?;
    let mut rows = Vec::with_capacity(targets.len());
    for j in targets {
        let r = sim::target_hit(&rates, i, j, c.max_steps, c.replicas, c.seed)?;
        rows.push([
            fmt(c.initiator),
            fmt(j + 1),
            fmt(r.probability),
            fmt(r.standard_error),
            fmt(r.censored),
            fmt(r.replicas),
        ]);
    }
    let out = ctx.path("targets.csv");
    write_csv(
        &out,
        &["initiator", "target", "probability", "standard_error", "censored", "replicas"],
        rows,
    )?;
    ctx.finish(&[out])
}

fn cmd_contagion(c: &ContagionCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("contagion", argv, c, &c.out_dir.out_dir)?;
    let d = c.data.load(false, &mut ctx.manifest)?;
    let params = c.params.resolve(&c.data, &mut ctx.manifest)?;
    let rates = derive_rates(&d.catalog, &d.graph, &params)?;
    let r = contagion_potential(&rates);
    let values = match c.convention {
        PairConvention::Lagged => &r.potential,
        PairConvention::Synchronous => &r.potential_synchronous,
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos + 1;
    }
    let out = ctx.path("contagion.csv");
    write_csv(
        &out,
        &["id", "c_i", "rank"],
        values.iter().enumerate().map(|(i, v)| [fmt(i + 1), fmt(v), fmt(rank[i])]),
    )?;
    for &i in order.iter().take(5) {
        println!("{:>2} {:<55} {:.4}", i + 1, d.catalog.records()[i].name, values[i]);
    }
    ctx.finish(&[out])
}

fn cmd_meanfield(c: &MeanfieldCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("meanfield", argv, c, &c.out_dir.out_dir)?;
    let d = c.data.load(false, &mut ctx.manifest)?;
    let params = c.params.resolve(&c.data, &mut ctx.manifest)?;
    if !(c.record_every > 0.0) {
        return Err(Failure::Run(Error::Validation("--record-every must be positive".into())));
    }
    let rates = MeanFieldRates::from_rates(&derive_rates(&d.catalog, &d.graph, &params)?)?;
    let n = rates.len();
    let traj = integrate_ode(&rates, &MeanFieldState::zeros(n), c.dt, c.horizon)?;
    let stride = ((c.record_every / c.dt).round() as usize).max(1);
    let mut header = vec!["t".to_string(), "activity".to_string()];
    header.extend((1..=n).map(|i| format!("s{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let out = ctx.path("meanfield.csv");
    let last = traj.times.len() - 1;
    write_csv(
        &out,
        &header,
        (0..traj.times.len())
            .filter(|k| k % stride == 0 || *k == last)
            .map(|k| {
                let mut row = vec![fmt(traj.times[k]), fmt(traj.activity[k])];
                row.extend(traj.states[k].iter().map(fmt));
                row
            }),
    )?;
    let fixed = stationary_point(&rates, c.tol)?;
    let st = ctx.path("stationary.csv");
    write_csv(
        &st,
        &["id", "s_star"],
        fixed.s.iter().enumerate().map(|(i, s)| [fmt(i + 1), fmt(s)]),
    )?;
    println!(
        "stable activity {:.4} after {} iterations (residual {:.1e})",
        fixed.activity(),
        fixed.iterations,
        fixed.residual
    );
    ctx.finish(&[out, st])
}

fn cmd_blocks(c: &BlocksCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("blocks", argv, c, &c.out_dir.out_dir)?;
    let d = c.data.load(false, &mut ctx.manifest)?;
    let labels: Vec<usize> = d.catalog.groups().iter().map(|g| g.index() as usize - 1).collect();
    let b = estimate_block_probabilities(&d.graph, &labels)?;
    let names: Vec<String> = (0..b.groups())
        .map(|g| {
            crate::model::RiskGroup::from_index(g as u8 + 1)
                .map_or_else(|| format!("g{}", g + 1), |x| x.name().to_string())
        })
        .collect();
    let mut header = vec!["group"];
    header.extend(names.iter().map(String::as_str));
    let out = ctx.path("blocks.csv");
    write_csv(
        &out,
        &header,
        b.probabilities.iter().zip(&names).map(|(row, name)| {
            let mut r = vec![name.clone()];
            r.extend(row.iter().map(|p| cell(*p)));
            r
        }),
    )?;
    let s = degree_stats(&d.graph, &labels);
    println!("{} edges, mean degree {:.2}", s.edges, s.mean_degree);
    for (name, deg) in names.iter().zip(&s.group_mean_degree) {
        println!("{name:<14} mean degree {deg:.2}");
    }
    ctx.finish(&[out])
}

fn cmd_synth(c: &SynthCmd, argv: &[String]) -> CmdResult {
    let mut ctx = Ctx::new("synth", argv, c, &c.out_dir.out_dir)?;
    ctx.manifest.seeds.push(c.seed);
    if c.groups == 0 {
        return Err(Failure::Usage("--groups must be at least 1".into()));
    }
    let probs = (0..c.groups)
        .map(|a| (0..c.groups).map(|b| if a == b { c.p_in } else { c.p_out }).collect())
        .collect();
    let cfg = SynthConfig {
        blocks: BlockMatrix::new(vec![c.group_size; c.groups], probs)?,
        likelihood_range: (c.likelihood_min, c.likelihood_max),
        stddev_fraction: c.stddev_fraction,
        params: ModelParams::new(c.alpha, c.beta, c.gamma, c.time_unit)?,
        months: c.months,
        burn_in: c.burn_in,
        start: c.start.parse()?,
        seed: c.seed,
    };
    let data = synth_dataset(&cfg)?;
    let files = data.save_dir(&ctx.dir)?;
    println!(
        "{} risks, {} edges, {} months, mean activity {:.3}",
        data.catalog.len(),
        data.graph.edge_count(),
        data.history.len(),
        data.history.mean_activity()
    );
    ctx.finish(&files)
}

fn cmd_validate(c: &ValidateCmd) -> CmdResult {
    let mut paths = c.data.paths(false)?;
    if paths.history.is_none() {
        paths.history = c
            .data
            .data_dir
            .as_ref()
            .map(|d| d.join(io::HISTORY_FILE))
            .filter(|p| p.exists());
    }
    let d = Dataset::load(&paths)?;
    print!("{} risks, {} edges", d.catalog.len(), d.graph.edge_count());
    match &d.history {
        Some(h) => println!(
            ", {} months ({} to {})",
            h.len(),
            h.months().first().map(fmt).unwrap_or_default(),
            h.months().last().map(fmt).unwrap_or_default()
        ),
        None => println!(),
    }
    Ok(())
}

fn dispatch(cmd: &Command, argv: &[String]) -> CmdResult {
    match cmd {
        Command::Fit(c) => cmd_fit(c, argv),
        Command::Surface(c) => cmd_surface(c, argv),
        Command::Compare(c) => cmd_compare(c, argv),
        Command::Perturb(c) => cmd_perturb(c, argv),
        Command::Simulate(c) => cmd_simulate(c, argv),
        Command::Cascade(c) => cmd_cascade(c, argv),
        Command::Targets(c) => cmd_targets(c, argv),
        Command::Contagion(c) => cmd_contagion(c, argv),
        Command::Meanfield(c) => cmd_meanfield(c, argv),
        Command::Blocks(c) => cmd_blocks(c, argv),
        Command::Synth(c) => cmd_synth(c, argv),
        Command::Validate(c) => cmd_validate(c),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli.command, &argv)) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
