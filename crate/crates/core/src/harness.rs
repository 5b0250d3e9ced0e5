//! Seeded Monte Carlo sweeps and their CSV / JSON output.
//!
//! Every trial owns a seed derived from the master seed and its index alone,
//! so results do not depend on scheduling or thread count. Channels of a
//! trial come from the trial seed; every scheme at a sweep point runs on the
//! same channel draw.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bd::{algorithm1, bd_beamformer};
use crate::channel::{synth_trial, ChannelSet};
use crate::config::{Scenario, ScenarioFile, SchemeKind, SweepAxis};
use crate::error::{Error, Result};
use crate::mtzf::{algorithm2, mtzf_beamformer, representative_channels};
use crate::system::{min_rates, PhaseInit, RisPhaseVector, SystemConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

/// Outcome of one scheme on one channel draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: SchemeKind,
    pub sweep_value: f64,
    pub trial: usize,
    /// `None` for skipped points.
    pub sum_rate: Option<f64>,
    /// Per-group minimum rates; empty for skipped points.
    pub min_rates: Vec<f64>,
    /// Outer iterations of the design loop (0 for random-phase baselines).
    pub iters: usize,
    /// `true` when the design loop stopped through its tolerance test.
    pub converged: bool,
    pub seed: u64,
    pub channel_fingerprint: u64,
    /// Why the point was skipped.
    pub skipped: Option<String>,
}

/// Statistics of one (scheme, sweep value) point over its completed trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub scheme: SchemeKind,
    pub sweep_value: f64,
    pub completed: usize,
    pub skipped: usize,
    pub mean_sum_rate: Option<f64>,
    /// Sample standard error of the mean; needs two completed trials.
    pub std_error_sum_rate: Option<f64>,
    pub mean_min_rates: Vec<f64>,
    pub mean_iters: Option<f64>,
    /// Fraction of completed trials whose design loop met its tolerance.
    pub converged_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub scenario: ScenarioFile,
    pub sweep_axis: SweepAxis,
    pub num_groups: usize,
    /// Ordered by sweep value, then trial, then scheme as listed.
    pub records: Vec<TrialRecord>,
    /// Ordered by sweep value, then scheme as listed.
    pub summary: Vec<PointSummary>,
}

/// Seed of trial `trial` under `master`.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial as u64);
    rng.next_u64()
}

/// Channel stream of a trial.
pub fn channel_rng(trial_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed)
}

/// Stream of one scheme at one sweep point of a trial.
pub fn scheme_rng(trial_seed: u64, scheme: SchemeKind, value_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(1 + scheme.index() + 4 * value_index as u64);
    rng
}

/// The channel draw of `trial` at sweep value `value`.
pub fn trial_channels(scenario: &Scenario, value: f64, trial: usize) -> Result<(SystemConfig, ChannelSet)> {
    let cfg = scenario.config_at(value)?;
    let channels = synth_trial(&cfg, &mut channel_rng(trial_seed(scenario.seed, trial)))?;
    Ok((cfg, channels))
}

/// Result of running one scheme on one channel draw.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub min_rates: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub phases: Vec<RisPhaseVector>,
}

pub fn run_scheme<R: rand::Rng + ?Sized>(
    scheme: SchemeKind,
    cfg: &SystemConfig,
    channels: &ChannelSet,
    rng: &mut R,
) -> Result<SchemeRun> {
    let power = cfg.equal_power();
    let noise = cfg.noise_powers();
    let elements: Vec<usize> = (0..cfg.num_groups()).map(|g| cfg.ris_elements(g)).collect();
    let (beamformer, phases, iters, converged) = match scheme {
        SchemeKind::Bd => {
            let initial = cfg.bd.init.phases(&elements, rng);
            let out = algorithm1(channels, initial, &power, &noise, &cfg.bd, &cfg.sdr, rng)?;
            (out.beamformer, out.phases, out.trace.iterations(), out.trace.converged)
        }
        SchemeKind::Mtzf => {
            let initial = cfg.mtzf.init.phases(&elements, rng);
            let out = algorithm2(channels, initial, &power, &cfg.mtzf)?;
            (out.beamformer, out.phases, out.trace.iterations(), out.trace.converged)
        }
        SchemeKind::BdRandom => {
            let phases = PhaseInit::Random.phases(&elements, rng);
            (bd_beamformer(channels, &phases, &power)?, phases, 0, true)
        }
        SchemeKind::MtzfRandom => {
            let phases = PhaseInit::Random.phases(&elements, rng);
            let rcs = representative_channels(channels, &phases)?;
            (mtzf_beamformer(&rcs, &power)?, phases, 0, true)
        }
    };
    Ok(SchemeRun {
        min_rates: min_rates(channels, &phases, &beamformer, &noise)?,
        iters,
        converged,
        phases,
    })
}

/// Errors that turn a point into a skip record instead of failing the run.
fn skip_reason(err: &Error) -> Option<String> {
    match err {
        Error::BdInfeasible { .. } | Error::RcsDependent { .. } | Error::SdrNotConverged(_) => Some(err.to_string()),
        _ => None,
    }
}

fn run_point(scenario: &Scenario, value_index: usize, trial: usize) -> Result<Vec<TrialRecord>> {
    let value = scenario.sweep.values[value_index];
    let seed = trial_seed(scenario.seed, trial);
    let (cfg, channels) = trial_channels(scenario, value, trial)?;
    let fingerprint = channels.fingerprint();
    scenario
        .schemes
        .iter()
        .map(|&scheme| {
            let mut rng = scheme_rng(seed, scheme, value_index);
            let mut record = TrialRecord {
                scheme,
                sweep_value: value,
                trial,
                sum_rate: None,
                min_rates: Vec::new(),
                iters: 0,
                converged: false,
                seed,
                channel_fingerprint: fingerprint,
                skipped: None,
            };
            match run_scheme(scheme, &cfg, &channels, &mut rng) {
                Ok(run) => {
                    record.sum_rate = Some(run.min_rates.iter().sum());
                    record.min_rates = run.min_rates;
                    record.iters = run.iters;
                    record.converged = run.converged;
                }
                Err(e) => record.skipped = Some(skip_reason(&e).ok_or(e)?),
            }
            Ok(record)
        })
        .collect()
}

/// Runs every (sweep value, trial) point on the current rayon pool.
pub fn run_scenario(scenario: &Scenario) -> Result<SweepResult> {
    scenario.validate()?;
    let jobs: Vec<(usize, usize)> = (0..scenario.sweep.values.len())
        .flat_map(|v| (0..scenario.trials).map(move |t| (v, t)))
        .collect();
    let chunks: Vec<Vec<TrialRecord>> = jobs
        .par_iter()
        .map(|&(v, t)| run_point(scenario, v, t))
        .collect::<Result<_>>()?;
    let records: Vec<TrialRecord> = chunks.into_iter().flatten().collect();
    Ok(SweepResult {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.source.clone(),
        sweep_axis: scenario.sweep.axis,
        num_groups: scenario.base.num_groups(),
        summary: summarize(scenario, &records),
        records,
    })
}

/// [`run_scenario`] on a dedicated pool of `threads` workers.
pub fn run_scenario_with_threads(scenario: &Scenario, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run_scenario(scenario))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(scenario: &Scenario, records: &[TrialRecord]) -> Vec<PointSummary> {
    let groups = scenario.base.num_groups();
    let mut out = Vec::new();
    for &value in &scenario.sweep.values {
        for &scheme in &scenario.schemes {
            let point: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.scheme == scheme && r.sweep_value == value)
                .collect();
            let done: Vec<&TrialRecord> = point.iter().copied().filter(|r| r.skipped.is_none()).collect();
            let rates: Vec<f64> = done.iter().filter_map(|r| r.sum_rate).collect();
            let mean_sum_rate = mean(rates.iter().copied());
            let std_error_sum_rate = mean_sum_rate.filter(|_| rates.len() >= 2).map(|m| {
                let n = rates.len() as f64;
                let var = rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            });
            let mean_min_rates = if done.is_empty() {
                Vec::new()
            } else {
                (0..groups)
                    .map(|g| mean(done.iter().map(|r| r.min_rates[g])).unwrap_or(0.0))
                    .collect()
            };
            out.push(PointSummary {
                scheme,
                sweep_value: value,
                completed: done.len(),
                skipped: point.len() - done.len(),
                mean_sum_rate,
                std_error_sum_rate,
                mean_min_rates,
                mean_iters: mean(done.iter().map(|r| r.iters as f64)),
                converged_fraction: mean(done.iter().map(|r| if r.converged { 1.0 } else { 0.0 })),
            });
        }
    }
    out
}

impl SweepResult {
    pub fn point(&self, scheme: SchemeKind, value: f64) -> Option<&PointSummary> {
        self.summary
            .iter()
            .find(|p| p.scheme == scheme && p.sweep_value == value)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut header: Vec<String> = ["scheme", "sweep_value", "trial", "sum_rate"]
            .map(String::from)
            .to_vec();
        header.extend((1..=self.num_groups).map(|g| format!("min_rate_g{g}")));
        header.extend(["iters", "seed", "status"].map(String::from));
        header
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for r in &self.records {
            let mut row = vec![r.scheme.to_string(), r.sweep_value.to_string(), r.trial.to_string()];
            row.push(r.sum_rate.map(|v| v.to_string()).unwrap_or_default());
            for g in 0..self.num_groups {
                row.push(r.min_rates.get(g).map(|v| v.to_string()).unwrap_or_default());
            }
            row.push(r.iters.to_string());
            row.push(r.seed.to_string());
            row.push(match &r.skipped {
                None => "ok".into(),
                Some(reason) => format!("skipped: {reason}"),
            });
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes the result to `path` in `format`.
    pub fn emit(&self, format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = match format {
            OutputFormat::Csv => self.to_csv_string()?,
            OutputFormat::Json => self.to_json_string()?,
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
