//! The `lonchar` command line: `simulate`, `characterize`, `metrics`, `sweep`
//! and `oracle-check`.
//!
//! Every subcommand reads one JSON config, applies flag overrides on top and
//! echoes the resolved config into what it writes.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cc::{cc_magnitudes_from, CcVariant};
use crate::error::{Error, Result};
use crate::estimate::{
    reconstruct_from, AccumulatorOptions, CountSums, Flag, Method, ModeLosses, MomentAccumulator,
    ReconstructionReport, JACKKNIFE_BLOCKS,
};
use crate::fock::{ORACLE_MAX_MODES, ORACLE_MAX_PHOTONS};
use crate::linalg::CMatrix;
use crate::metrics::{compare_networks, truncated_chain, uniform_loss_sweep, write_sweep_csv, NetworkComparison, TruncatedChain, CHAIN_TOL};
use crate::network::{haar_random_unitary, MatrixFile, TransferMatrix, UnitaryMatrix};
use crate::simulate::{parse_line, write_record, ExperimentConfig, InputKind, RunRecord, Simulator, StreamHeader, StreamLine};
use crate::squeezing::{ChiSqRule, SqueezeParam};

/// Default worker-thread count when `--threads` is not given.
pub const THREADS_ENV: &str = "LONCHAR_THREADS";

/// Seed offset for the right-hand unitary of a `lossy` network.
const RIGHT_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// How the transfer matrix of the simulated network is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkSpec {
    Identity,
    /// Haar-random unitary.
    Haar { seed: u64 },
    /// `t U` with `U` Haar-random and power transmission `t_sq`.
    Uniform { seed: u64, t_sq: f64 },
    /// `U diag(t) V` with independent Haar-random `U`, `V`.
    Lossy { seed: u64, transmissions: Vec<f64> },
    /// Matrix JSON; relative paths are taken from the config file's directory.
    File { path: PathBuf },
}

impl NetworkSpec {
    fn unitaries(seed: u64, modes: usize) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
        Ok((
            haar_random_unitary(modes, seed)?,
            haar_random_unitary(modes, seed.wrapping_add(RIGHT_SEED_OFFSET))?,
        ))
    }

    pub fn build(&self, modes: usize, base: &Path) -> Result<TransferMatrix> {
        let l = match self {
            NetworkSpec::Identity => UnitaryMatrix::identity(modes).to_transfer(),
            NetworkSpec::Haar { seed } => haar_random_unitary(modes, *seed)?.to_transfer(),
            NetworkSpec::Uniform { seed, t_sq } => {
                if !(0.0..=1.0).contains(t_sq) {
                    return Err(Error::Config(format!("t_sq = {t_sq} outside [0, 1]")));
                }
                TransferMatrix::uniform(&haar_random_unitary(modes, *seed)?, t_sq.sqrt())?
            }
            NetworkSpec::Lossy { seed, transmissions } => {
                let (u, v) = Self::unitaries(*seed, modes)?;
                TransferMatrix::from_parts(&u, transmissions, &v)?
            }
            NetworkSpec::File { path } => {
                let text = std::fs::read_to_string(base.join(path))
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let file: MatrixFile = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                TransferMatrix::new(file.to_matrix()?)?
            }
        };
        if l.dim() != modes {
            return Err(Error::Config(format!("network has {} modes, experiment has {modes}", l.dim())));
        }
        Ok(l)
    }

    /// The lossless network this one is meant to implement.
    pub fn ideal(&self, modes: usize, base: &Path) -> Result<UnitaryMatrix> {
        match self {
            NetworkSpec::Identity => Ok(UnitaryMatrix::identity(modes)),
            NetworkSpec::Haar { seed } | NetworkSpec::Uniform { seed, .. } => haar_random_unitary(modes, *seed),
            NetworkSpec::Lossy { seed, .. } => {
                let (u, v) = Self::unitaries(*seed, modes)?;
                UnitaryMatrix::new(u.matrix() * v.matrix())
            }
            NetworkSpec::File { .. } => UnitaryMatrix::new(self.build(modes, base)?.into_inner())
                .map_err(|_| Error::Config("matrix file is not unitary; give an explicit `ideal` network".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub method: Method,
    pub cc_variant: CcVariant,
    pub blocks: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            method: Method::Exact,
            cc_variant: CcVariant::Exact,
            blocks: JACKKNIFE_BLOCKS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Distance tolerance; without it no verdict is given.
    pub epsilon: Option<f64>,
    pub max_sector: u32,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_sector: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub modes: Vec<usize>,
    pub t_sq: Vec<f64>,
    pub chi_sq: ChiSqRule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            modes: vec![10, 50, 100, 200, 500, 1000, 1500],
            t_sq: vec![0.8, 0.85, 0.9, 0.95, 1.0],
            chi_sq: ChiSqRule::InverseSqrtModes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub n_max: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { n_max: 4 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ideal: Option<NetworkSpec>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn experiment(&self) -> Result<&ExperimentConfig> {
        self.experiment
            .as_ref()
            .ok_or_else(|| Error::Config("missing `experiment` section".into()))
    }

    fn experiment_mut(&mut self) -> Result<&mut ExperimentConfig> {
        self.experiment
            .as_mut()
            .ok_or_else(|| Error::Config("missing `experiment` section".into()))
    }

    pub fn network(&self, base: &Path) -> Result<TransferMatrix> {
        let spec = self
            .network
            .as_ref()
            .ok_or_else(|| Error::Config("missing `network` section".into()))?;
        spec.build(self.experiment()?.modes, base)
    }

    pub fn ideal(&self, base: &Path) -> Result<UnitaryMatrix> {
        let modes = self.experiment()?.modes;
        match (&self.ideal, &self.network) {
            (Some(spec), _) => UnitaryMatrix::new(spec.build(modes, base)?.into_inner()),
            (None, Some(spec)) => spec.ideal(modes, base),
            (None, None) => Err(Error::Config("need an `ideal` or `network` section".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "lonchar", version, about = "Lossy linear-optical network simulation and in-situ characterization")]
pub struct Cli {
    /// Worker threads (default: $LONCHAR_THREADS, else one per core)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON config file
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Output file (stdout if absent)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Override the experiment seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an NDJSON run stream
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long)]
        chi_sq: Option<f64>,
        #[arg(long)]
        run_mix: Option<f64>,
        /// Where to write the run summary (stderr if absent)
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Reconstruct the transfer matrix from a run stream
    Characterize {
        #[command(flatten)]
        common: Common,
        /// Run stream written by `simulate`
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Error bars and flags (default: `<output>.sigma.json`)
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Score an estimated transfer matrix against the ideal network
    Metrics {
        #[command(flatten)]
        common: Common,
        /// Matrix JSON of the estimate
        #[arg(short, long)]
        estimate: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_sector: Option<u32>,
    },
    /// Uniform-loss fidelity over a grid of mode counts and transmissions
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        t_sq: Option<Vec<f64>>,
    },
    /// Check the distance inequalities on exact truncated photocount tables
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_max: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    FirstOrder,
    Exact,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::FirstOrder => Method::FirstOrder,
            MethodArg::Exact => Method::Exact,
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cli.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Simulate {
            common,
            runs,
            modes,
            chi_sq,
            run_mix,
            summary,
        } => {
            let (mut cfg, base) = resolve(&common, None)?;
            let exp = cfg.experiment_mut()?;
            if let Some(v) = runs {
                exp.runs = v;
            }
            if let Some(v) = modes {
                exp.modes = v;
            }
            if let Some(v) = chi_sq {
                exp.chi_sq = ChiSqRule::Fixed(v);
            }
            if let Some(v) = run_mix {
                exp.run_mix = v;
            }
            json_only(&common, "simulate")?;
            simulate(&cfg, &base, common.output.as_deref(), summary.as_deref())
        }
        Command::Characterize {
            common,
            input,
            method,
            sidecar,
        } => {
            json_only(&common, "characterize")?;
            characterize(&common, &input, method.map(Method::from), sidecar.as_deref())
        }
        Command::Metrics {
            common,
            estimate,
            epsilon,
            max_sector,
        } => {
            let (mut cfg, base) = resolve(&common, None)?;
            if epsilon.is_some() {
                cfg.metrics.epsilon = epsilon;
            }
            if let Some(v) = max_sector {
                cfg.metrics.max_sector = v;
            }
            json_only(&common, "metrics")?;
            metrics(&cfg, &base, &estimate, common.output.as_deref())
        }
        Command::Sweep { common, modes, t_sq } => {
            let (mut cfg, _) = resolve(&common, None)?;
            if let Some(v) = modes {
                cfg.sweep.modes = v;
            }
            if let Some(v) = t_sq {
                cfg.sweep.t_sq = v;
            }
            sweep(&cfg, common.format.unwrap_or(Format::Csv), common.output.as_deref())
        }
        Command::OracleCheck { common, n_max } => {
            let (mut cfg, base) = resolve(&common, None)?;
            if let Some(v) = n_max {
                cfg.oracle.n_max = v;
            }
            json_only(&common, "oracle-check")?;
            oracle_check(&cfg, &base, common.output.as_deref())
        }
    })
}

fn json_only(common: &Common, name: &str) -> Result<()> {
    match common.format {
        Some(Format::Csv) => Err(Error::Config(format!("{name} only writes JSON"))),
        _ => Ok(()),
    }
}

/// Config from `--config` (or `fallback`), with the seed override applied.
/// The second value is the directory relative paths are resolved against.
fn resolve(common: &Common, fallback: Option<AppConfig>) -> Result<(AppConfig, PathBuf)> {
    let (mut cfg, base) = match &common.config {
        Some(p) => (
            AppConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (fallback.unwrap_or_default(), PathBuf::new()),
    };
    if let Some(seed) = common.seed {
        cfg.experiment_mut()?.seed = seed;
    }
    Ok((cfg, base))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary<'a> {
    pub config: &'a AppConfig,
    pub runs: u64,
    pub characterization_runs: u64,
    pub rbs_runs: u64,
    pub cutoff_overflows: u64,
    pub bob_count_means: Vec<f64>,
}

fn simulate(cfg: &AppConfig, base: &Path, out_path: Option<&Path>, summary_path: Option<&Path>) -> Result<()> {
    let exp = cfg.experiment()?.clone();
    exp.validate()?;
    let network = cfg.network(base)?;
    let sim = Simulator::new(exp, network)?;
    let mut out = output(out_path)?;
    serde_json::to_writer(&mut out, &StreamHeader { config: serde_json::to_value(cfg)? })?;
    out.write_all(b"\n")?;
    let mut counts = CountSums::default();
    let s = sim.stream(|r| {
        counts.add(&r.bob_counts)?;
        write_record(&mut out, r)
    })?;
    out.flush()?;
    let summary = SimulationSummary {
        config: cfg,
        runs: s.runs,
        characterization_runs: s.characterization_runs,
        rbs_runs: s.rbs_runs,
        cutoff_overflows: s.cutoff_overflows,
        bob_count_means: counts.means(),
    };
    match summary_path {
        Some(p) => write_json(Some(p), &summary),
        None => {
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(())
        }
    }
}

/// Everything `characterize` reports besides the matrix itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacterizeReport {
    pub config: AppConfig,
    pub characterization_runs: u64,
    pub ignored_rbs: u64,
    pub mode_losses: ModeLosses,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitudes: Option<MagnitudeReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MagnitudeReport {
    pub variant: CcVariant,
    pub magnitude: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jackknife_sigma: Option<Vec<Vec<f64>>>,
    pub flags: Vec<Flag>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn default_sidecar(out: &Path) -> PathBuf {
    out.with_extension("sigma.json")
}

fn characterize(common: &Common, input: &Path, method: Option<Method>, sidecar: Option<&Path>) -> Result<()> {
    let file = File::open(input).map_err(|e| Error::Format(format!("{}: {e}", input.display())))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut pending = None;
    let mut header = None;
    for (k, line) in lines.by_ref() {
        match parse_line(&line?).map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))? {
            Some(StreamLine::Header(h)) => {
                header = Some(h);
                break;
            }
            Some(StreamLine::Record(r)) => {
                pending = Some(r);
                break;
            }
            None => {}
        }
    }
    let fallback = match header {
        Some(h) => Some(serde_json::from_value::<AppConfig>(h.config).map_err(|e| Error::Format(format!("stream header: {e}")))?),
        None => None,
    };
    let (mut cfg, _) = resolve(common, fallback)?;
    if let Some(m) = method {
        cfg.estimator.method = m;
    }
    let exp = cfg.experiment()?.clone();
    let sq = exp.squeeze()?;
    let cc = exp.input_kind == InputKind::ClassicalClassical;
    let opts = AccumulatorOptions {
        full_covariance: !cc && cfg.estimator.method == Method::Exact,
        pairs: Vec::new(),
        blocks: cfg.estimator.blocks,
    };
    let mut acc = MomentAccumulator::new(exp.modes, opts)?;
    let mut counts = CountSums::default();
    let mut absorb = |r: &RunRecord| -> Result<()> {
        if r.bob_counts.len() != exp.modes {
            return Err(Error::Format(format!("record has {} modes, expected {}", r.bob_counts.len(), exp.modes)));
        }
        counts.add(&r.bob_counts)?;
        acc.accumulate(r)
    };
    if let Some(r) = pending {
        absorb(&r)?;
    }
    for (k, line) in lines {
        match parse_line(&line?).map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))? {
            Some(StreamLine::Record(r)) => absorb(&r)?,
            Some(StreamLine::Header(_)) => return Err(Error::Format(format!("line {}: second header", k + 1))),
            None => {}
        }
    }
    if acc.characterization_runs() == 0 {
        return Err(Error::InsufficientData("no characterization runs in stream".into()));
    }
    let mode_losses = counts.mode_losses(sq)?;
    let mut report = CharacterizeReport {
        config: cfg.clone(),
        characterization_runs: acc.characterization_runs(),
        ignored_rbs: acc.ignored_rbs(),
        mode_losses,
        reconstruction: None,
        magnitudes: None,
    };
    let (matrix, flags, conditioned): (CMatrix, Vec<Flag>, Vec<u64>) = if cc {
        let est = cc_magnitudes_from(sq, &acc, cfg.estimator.cc_variant)?;
        let conditioned = acc.total().columns.iter().map(|c| c.count).collect();
        report.magnitudes = Some(MagnitudeReport {
            variant: est.variant,
            magnitude: rows(&est.magnitude),
            sigma: rows(&est.sigma),
            jackknife_sigma: est.jackknife_sigma.as_ref().map(rows),
            flags: est.flags.clone(),
        });
        (est.magnitude.map(|v| crate::linalg::c(v, 0.0)), est.flags, conditioned)
    } else {
        let est = reconstruct_from(sq, &acc, cfg.estimator.method)?;
        report.reconstruction = Some(ReconstructionReport::from(&est));
        (est.estimate, est.flags, est.conditioned_counts)
    };
    write_json(common.output.as_deref(), &MatrixFile::from_matrix(&matrix))?;
    let sidecar = sidecar.map(Path::to_path_buf).or_else(|| common.output.as_deref().map(default_sidecar));
    if let Some(p) = sidecar {
        write_json(Some(&p), &report)?;
    }
    eprintln!("E(L_hat) = {:.6}", report.mode_losses.average_loss);
    eprintln!("T_i = {conditioned:?}");
    eprintln!("flags = {}", serde_json::to_string(&flags)?);
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MetricsReport<'a> {
    pub config: &'a AppConfig,
    /// Largest singular value of the estimate before clipping to one.
    pub estimate_top_singular_value: f64,
    pub estimate: NetworkComparison,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_network: Option<NetworkComparison>,
}

fn metrics(cfg: &AppConfig, base: &Path, estimate: &Path, out: Option<&Path>) -> Result<()> {
    let exp = cfg.experiment()?;
    let sq = exp.squeeze()?;
    let u = cfg.ideal(base)?;
    let text = std::fs::read_to_string(estimate).map_err(|e| Error::Format(format!("{}: {e}", estimate.display())))?;
    let file: MatrixFile = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", estimate.display())))?;
    let m = file.to_matrix()?;
    if m.nrows() != exp.modes {
        return Err(Error::Format(format!("estimate has {} modes, experiment has {}", m.nrows(), exp.modes)));
    }
    let (l_hat, top) = TransferMatrix::clip(&m)?;
    let comparison = compare_networks(sq, &u, &l_hat, cfg.metrics.max_sector)?;
    let true_network = match cfg.network {
        Some(_) => Some(compare_networks(sq, &u, &cfg.network(base)?, cfg.metrics.max_sector)?),
        None => None,
    };
    let acceptable = cfg.metrics.epsilon.map(|eps| comparison.acceptable(eps));
    let report = MetricsReport {
        config: cfg,
        estimate_top_singular_value: top,
        estimate: comparison,
        acceptable,
        true_network,
    };
    write_json(out, &report)
}

fn sweep(cfg: &AppConfig, format: Format, out: Option<&Path>) -> Result<()> {
    let rows = uniform_loss_sweep(&cfg.sweep.modes, &cfg.sweep.t_sq, cfg.sweep.chi_sq)?;
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct SweepReport<'a> {
                config: &'a AppConfig,
                rows: &'a [crate::metrics::SweepRow],
            }
            write_json(out, &SweepReport { config: cfg, rows: &rows })
        }
        Format::Csv => {
            let mut w = output(out)?;
            writeln!(w, "# {}", serde_json::to_string(cfg)?)?;
            write_sweep_csv(&rows, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleReport<'a> {
    pub config: &'a AppConfig,
    pub result: TruncatedChain,
    pub min_slack: f64,
    pub holds: bool,
}

fn oracle_check(cfg: &AppConfig, base: &Path, out: Option<&Path>) -> Result<()> {
    let exp = cfg.experiment()?;
    if exp.modes > ORACLE_MAX_MODES || cfg.oracle.n_max > ORACLE_MAX_PHOTONS {
        return Err(Error::UnsupportedScale(format!(
            "oracle limited to {ORACLE_MAX_MODES} modes and {ORACLE_MAX_PHOTONS} photons"
        )));
    }
    let sq: SqueezeParam = exp.squeeze()?;
    let result = truncated_chain(sq, &cfg.ideal(base)?, &cfg.network(base)?, cfg.oracle.n_max)?;
    let min_slack = result.min_slack();
    let holds = min_slack >= -CHAIN_TOL;
    write_json(out, &OracleReport { config: cfg, result, min_slack, holds })?;
    if !holds {
        return Err(Error::InequalityViolated(format!("minimum slack {min_slack:.3e}")));
    }
    Ok(())
}
