//! Monte Carlo generation of protocol runs.
//!
//! In a characterization run Alice heterodynes her modes and Bob counts
//! photons; in an RBS run both sides count photons. Every run draws from its
//! own ChaCha stream keyed by `(seed, run index)`, so streams are reproducible
//! and can be generated out of order or in parallel.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{lossy_conditional_distribution, FockDistribution, ORACLE_MAX_MODES, ORACLE_MAX_PHOTONS};
use crate::linalg::{c, C64};
use crate::network::TransferMatrix;
use crate::squeezing::{ChiSqRule, SqueezeParam};

/// Resampling an over-cutoff RBS record gives up after this many tries.
const MAX_RESAMPLES: u32 = 1_000_000;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    TwoModeSqueezed,
    /// Two-mode squeezed vacuum with an independent uniform phase on each of Bob's modes per run.
    ClassicalClassical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffPolicy {
    #[default]
    Resample,
    Error,
}

/// Which runs are characterization runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunSchedule {
    /// Each run independently, with probability `run_mix`.
    #[default]
    Interleaved,
    /// The first `round(run_mix * runs)` runs, then RBS runs.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub modes: usize,
    pub chi_sq: ChiSqRule,
    pub runs: u64,
    /// Fraction of characterization runs.
    pub run_mix: f64,
    pub seed: u64,
    /// Largest total photon number allowed in an RBS record.
    pub photon_cutoff: u32,
    #[serde(default)]
    pub input_kind: InputKind,
    #[serde(default)]
    pub cutoff_policy: CutoffPolicy,
    #[serde(default)]
    pub schedule: RunSchedule,
}

impl ExperimentConfig {
    pub fn squeeze(&self) -> Result<SqueezeParam> {
        self.chi_sq.resolve(self.modes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::Config("modes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.run_mix) {
            return Err(Error::Config(format!("run_mix = {} outside [0, 1]", self.run_mix)));
        }
        self.squeeze()?;
        if self.run_mix < 1.0 && self.runs > 0 {
            if self.modes > ORACLE_MAX_MODES {
                return Err(Error::UnsupportedScale(format!(
                    "RBS runs need the Fock oracle, limited to {ORACLE_MAX_MODES} modes"
                )));
            }
            if self.photon_cutoff > ORACLE_MAX_PHOTONS {
                return Err(Error::UnsupportedScale(format!(
                    "photon cutoff {} exceeds the oracle limit of {ORACLE_MAX_PHOTONS}",
                    self.photon_cutoff
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Rbs,
    Characterization,
}

/// One protocol run. Characterization runs carry Alice's heterodyne outcome,
/// RBS runs her photocounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_counts: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alice_re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alice_im: Vec<f64>,
    pub bob_counts: Vec<u32>,
}

impl RunRecord {
    pub fn alice_amplitudes(&self) -> impl Iterator<Item = C64> + '_ {
        self.alice_re.iter().zip(&self.alice_im).map(|(&re, &im)| c(re, im))
    }
}

/// RNG for run `index`: the seed picks the key, the index picks the stream.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Poisson draw; inversion for small means, library sampler for large ones.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u: f64 = rng.random();
        let mut p = (-mean).exp();
        let mut cdf = p;
        let mut k = 0u32;
        while u > cdf && k < 1000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    } else {
        Poisson::new(mean).map_or(0, |d| d.sample(rng) as u32)
    }
}

fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re * s, im * s)
}

/// Bob's counts when coherent amplitude `beta` (a row vector) enters the network.
fn count_coherent_output<R: Rng + ?Sized>(beta: &[C64], l: &TransferMatrix, rng: &mut R) -> Vec<u32> {
    let m = l.dim();
    (0..m)
        .map(|i| {
            let g: C64 = beta.iter().enumerate().map(|(j, b)| b * l.matrix()[(j, i)]).sum();
            sample_poisson(g.norm_sqr(), rng)
        })
        .collect()
}

/// Alice heterodynes `alpha` (circular Gaussian, `E|alpha_j|^2 = 1/(1 - chi^2)`);
/// Bob's modes then hold the coherent state `chi alpha* L`.
pub fn sample_characterization_run<R: Rng + ?Sized>(sq: SqueezeParam, l: &TransferMatrix, rng: &mut R) -> RunRecord {
    characterization(sq, l, rng, false)
}

/// As [`sample_characterization_run`], with a fresh uniform phase on each of
/// Bob's input amplitudes. Alice's recorded outcome is the unrotated one.
pub fn sample_cc_characterization_run<R: Rng + ?Sized>(sq: SqueezeParam, l: &TransferMatrix, rng: &mut R) -> RunRecord {
    characterization(sq, l, rng, true)
}

fn characterization<R: Rng + ?Sized>(sq: SqueezeParam, l: &TransferMatrix, rng: &mut R, dephase: bool) -> RunRecord {
    let m = l.dim();
    let var = sq.heterodyne_variance();
    let alpha: Vec<C64> = (0..m).map(|_| complex_gaussian(var, rng)).collect();
    let chi = sq.chi_sq().sqrt();
    let beta: Vec<C64> = alpha
        .iter()
        .map(|a| {
            let b = a.conj() * chi;
            if dephase {
                let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                b * C64::from_polar(1.0, phi)
            } else {
                b
            }
        })
        .collect();
    let bob_counts = count_coherent_output(&beta, l, rng);
    RunRecord {
        kind: RunKind::Characterization,
        alice_counts: None,
        alice_re: alpha.iter().map(|a| a.re).collect(),
        alice_im: alpha.iter().map(|a| a.im).collect(),
        bob_counts,
    }
}

/// Bob's counts with Alice ignored: thermal light of mean `nbar` per input mode.
pub fn sample_marginal_output_counts<R: Rng + ?Sized>(sq: SqueezeParam, l: &TransferMatrix, rng: &mut R) -> Vec<u32> {
    let nbar = sq.mean_photon();
    let beta: Vec<C64> = (0..l.dim()).map(|_| complex_gaussian(nbar, rng)).collect();
    count_coherent_output(&beta, l, rng)
}

/// Alice's photocounts: independent geometric laws `(1 - chi^2) chi^(2n)` by inversion.
pub fn sample_heralding_counts<R: Rng + ?Sized>(sq: SqueezeParam, modes: usize, rng: &mut R) -> Vec<u32> {
    let x = sq.chi_sq();
    (0..modes)
        .map(|_| {
            if x == 0.0 {
                return 0;
            }
            let u = 1.0 - rng.random::<f64>();
            (u.ln() / x.ln()).floor().min(u32::MAX as f64) as u32
        })
        .collect()
}

/// Simulates a configured experiment on a fixed network.
/// Conditional output tables for RBS runs are computed once per input pattern and cached.
pub struct Simulator {
    config: ExperimentConfig,
    sq: SqueezeParam,
    network: TransferMatrix,
    tables: Mutex<HashMap<Vec<u32>, Arc<FockDistribution>>>,
}

/// One generated run and how many over-cutoff RBS records were thrown away to get it.
#[derive(Debug, Clone)]
pub struct SampledRun {
    pub record: RunRecord,
    pub overflows: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub runs: u64,
    pub characterization_runs: u64,
    pub rbs_runs: u64,
    pub cutoff_overflows: u64,
}

impl Simulator {
    pub fn new(config: ExperimentConfig, network: TransferMatrix) -> Result<Self> {
        config.validate()?;
        if network.dim() != config.modes {
            return Err(Error::Config(format!(
                "network has {} modes, config says {}",
                network.dim(),
                config.modes
            )));
        }
        Ok(Self {
            sq: config.squeeze()?,
            config,
            network,
            tables: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn squeeze(&self) -> SqueezeParam {
        self.sq
    }

    pub fn network(&self) -> &TransferMatrix {
        &self.network
    }

    fn kind_of(&self, index: u64, rng: &mut ChaCha8Rng) -> RunKind {
        let is_char = match self.config.schedule {
            RunSchedule::Interleaved => rng.random::<f64>() < self.config.run_mix,
            RunSchedule::Blocked => {
                let n_char = (self.config.run_mix * self.config.runs as f64).round() as u64;
                index < n_char
            }
        };
        if is_char {
            RunKind::Characterization
        } else {
            RunKind::Rbs
        }
    }

    fn table(&self, n_a: &[u32]) -> Result<Arc<FockDistribution>> {
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(n_a) {
            return Ok(t.clone());
        }
        let t = Arc::new(lossy_conditional_distribution(&self.network, n_a)?);
        self.tables
            .lock()
            .expect("table cache poisoned")
            .insert(n_a.to_vec(), t.clone());
        Ok(t)
    }

    /// Alice counts photons; Bob's counts follow the exact conditional law for that input.
    pub fn sample_rbs_run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SampledRun> {
        let m = self.config.modes;
        let mut overflows = 0u32;
        let n_a = loop {
            let n_a = sample_heralding_counts(self.sq, m, rng);
            if n_a.iter().sum::<u32>() <= self.config.photon_cutoff {
                break n_a;
            }
            if self.config.cutoff_policy == CutoffPolicy::Error {
                return Err(Error::CutoffExceeded {
                    cutoff: self.config.photon_cutoff,
                });
            }
            overflows += 1;
            if overflows >= MAX_RESAMPLES {
                return Err(Error::CutoffExceeded {
                    cutoff: self.config.photon_cutoff,
                });
            }
        };
        let table = self.table(&n_a)?;
        let bob = table
            .sample_with(rng.random::<f64>())
            .cloned()
            .ok_or_else(|| Error::InvalidDistribution("conditional table lost mass".into()))?;
        Ok(SampledRun {
            record: RunRecord {
                kind: RunKind::Rbs,
                alice_counts: Some(n_a),
                alice_re: Vec::new(),
                alice_im: Vec::new(),
                bob_counts: bob,
            },
            overflows,
        })
    }

    pub fn run(&self, index: u64) -> Result<SampledRun> {
        let mut rng = run_rng(self.config.seed, index);
        match self.kind_of(index, &mut rng) {
            RunKind::Characterization => {
                let record = match self.config.input_kind {
                    InputKind::TwoModeSqueezed => sample_characterization_run(self.sq, &self.network, &mut rng),
                    InputKind::ClassicalClassical => sample_cc_characterization_run(self.sq, &self.network, &mut rng),
                };
                Ok(SampledRun { record, overflows: 0 })
            }
            RunKind::Rbs => self.sample_rbs_run(&mut rng),
        }
    }

    /// Generate all configured runs in index order, handing each to `sink`.
    /// Runs inside a chunk are produced in parallel.
    pub fn stream(&self, mut sink: impl FnMut(&RunRecord) -> Result<()>) -> Result<StreamSummary> {
        let mut summary = StreamSummary::default();
        let mut start = 0u64;
        while start < self.config.runs {
            let end = (start + CHUNK).min(self.config.runs);
            let chunk: Vec<SampledRun> = (start..end)
                .into_par_iter()
                .map(|k| self.run(k))
                .collect::<Result<_>>()?;
            for s in &chunk {
                summary.runs += 1;
                summary.cutoff_overflows += s.overflows as u64;
                match s.record.kind {
                    RunKind::Characterization => summary.characterization_runs += 1,
                    RunKind::Rbs => summary.rbs_runs += 1,
                }
                sink(&s.record)?;
            }
            start = end;
        }
        Ok(summary)
    }

    pub fn generate(&self) -> Result<(Vec<RunRecord>, StreamSummary)> {
        let mut out = Vec::new();
        let summary = self.stream(|r| {
            out.push(r.clone());
            Ok(())
        })?;
        Ok((out, summary))
    }
}

/// First line of a run stream: the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamHeader {
    pub config: serde_json::Value,
}

pub fn write_record<W: Write>(out: &mut W, r: &RunRecord) -> Result<()> {
    serde_json::to_writer(&mut *out, r)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// One parsed line of a run stream.
pub enum StreamLine {
    Header(StreamHeader),
    Record(RunRecord),
}

pub fn parse_line(line: &str) -> Result<Option<StreamLine>> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(None);
    }
    let v: serde_json::Value = serde_json::from_str(line)?;
    if v.get("config").is_some() && v.get("kind").is_none() {
        return Ok(Some(StreamLine::Header(serde_json::from_value(v)?)));
    }
    Ok(Some(StreamLine::Record(serde_json::from_value(v)?)))
}

/// Read a whole stream, returning its header (if any) and records.
pub fn read_stream<R: BufRead>(input: R) -> Result<(Option<StreamHeader>, Vec<RunRecord>)> {
    let mut header = None;
    let mut records = Vec::new();
    for (k, line) in input.lines().enumerate() {
        match parse_line(&line?).map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))? {
            Some(StreamLine::Header(h)) => header = Some(h),
            Some(StreamLine::Record(r)) => records.push(r),
            None => {}
        }
    }
    Ok((header, records))
}
