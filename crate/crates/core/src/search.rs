//! Random-restart campaigns: seeded starting points, parallel trials with a
//! resumable NDJSON record sink, aggregated success statistics, sweeps over
//! every sub-constellation of a top spec and the lattice tally.
//!
//! Trial `t` of a campaign with master seed `m` always starts from the same
//! point: a ChaCha20 stream keyed by SplitMix64(`m`) with stream id `t`.
//! Results therefore do not depend on the worker count or on trial order.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{self, Classification, ConstellationSpec, ParameterPoint, SpecKind};
use crate::objective::ResidualSystem;
use crate::optimizer::{self, LmConfig, MinimizeResult, Termination};
use crate::{Error, Result};

/// Identifies the start-point generator; bump when its output changes.
pub const PRNG_NAME: &str = "chacha20-splitmix64-v1";

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut state = master_seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Uniform on `[0, 2π)` from the top 53 bits of one output word.
fn uniform_angle(rng: &mut ChaCha20Rng) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let a = u * std::f64::consts::TAU;
    if a >= std::f64::consts::TAU {
        0.0
    } else {
        a
    }
}

pub fn random_point(spec: &ConstellationSpec, master_seed: u64, trial: u64) -> Result<ParameterPoint> {
    let mut rng = trial_rng(master_seed, trial);
    let angles = (0..spec.parameter_count()).map(|_| uniform_angle(&mut rng)).collect();
    ParameterPoint::new(spec.clone(), angles)
}

pub fn seed_label(master_seed: u64, trial: u64) -> String {
    format!("{master_seed}:{trial}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub spec: ConstellationSpec,
    pub trials: usize,
    pub master_seed: u64,
    pub lm: LmConfig,
    pub workers: usize,
}

impl CampaignConfig {
    pub fn new(spec: ConstellationSpec, trials: usize, master_seed: u64) -> Self {
        Self {
            spec,
            trials,
            master_seed,
            lm: LmConfig::default(),
            workers: 1,
        }
    }
}

/// Outcome of one minimization, one NDJSON line in the record stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: String,
    pub final_f: f64,
    pub iters: usize,
    pub term: Termination,
    pub ms: f64,
}

impl TrialRecord {
    pub fn is_success(&self) -> bool {
        self.term == Termination::Success
    }
}

/// Runs trial `trial` and returns both its record and the full result.
pub fn run_trial(
    system: &ResidualSystem,
    lm: &LmConfig,
    master_seed: u64,
    trial: u64,
) -> Result<(TrialRecord, MinimizeResult)> {
    let started = Instant::now();
    let start = random_point(system.spec(), master_seed, trial)?;
    let res = optimizer::minimize_system(system, &start, lm)?;
    let record = TrialRecord {
        trial,
        seed: seed_label(master_seed, trial),
        final_f: res.final_f,
        iters: res.iterations,
        term: res.termination,
        ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok((record, res))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Runs the given trial indices in parallel, passing each finished record to
/// `sink` (called from worker threads). Records come back in input order.
pub fn run_trials(
    cfg: &CampaignConfig,
    trials: &[u64],
    sink: impl Fn(&TrialRecord) -> Result<()> + Sync,
) -> Result<Vec<TrialRecord>> {
    let system = ResidualSystem::new(&cfg.spec, cfg.lm.residual_form)?;
    cfg.lm.validate()?;
    pool(cfg.workers)?.install(|| {
        trials
            .par_iter()
            .map(|&t| {
                let (rec, _) = run_trial(&system, &cfg.lm, cfg.master_seed, t)?;
                sink(&rec)?;
                Ok(rec)
            })
            .collect()
    })
}

/// Runs all trials in memory.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    let ids: Vec<u64> = (0..cfg.trials as u64).collect();
    let records = run_trials(cfg, &ids, |_| Ok(()))?;
    aggregate(&cfg.spec, &records)
}

/// Runs a campaign streaming records to `path` as they finish. Trials
/// already present in the file are not rerun; a torn last line is dropped.
pub fn run_campaign_to(cfg: &CampaignConfig, path: &Path) -> Result<CampaignReport> {
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    let mut done: BTreeMap<u64, TrialRecord> = BTreeMap::new();
    if path.exists() {
        for rec in read_records_lenient(path)? {
            if (rec.trial as usize) < cfg.trials {
                done.entry(rec.trial).or_insert(rec);
            }
        }
        let mut f = File::create(path)?;
        for rec in done.values() {
            writeln!(f, "{}", serde_json::to_string(rec)?)?;
        }
        f.sync_data()?;
    }
    let todo: Vec<u64> = (0..cfg.trials as u64).filter(|t| !done.contains_key(t)).collect();
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let file = Mutex::new(file);
    let fresh = run_trials(cfg, &todo, |rec| {
        let line = serde_json::to_string(rec)?;
        let mut f = file.lock().expect("record sink poisoned");
        writeln!(f, "{line}")?;
        f.flush()?;
        Ok(())
    })?;
    for rec in fresh {
        done.insert(rec.trial, rec);
    }
    let records: Vec<TrialRecord> = done.into_values().collect();
    aggregate(&cfg.spec, &records)
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn read_records_lenient(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path)?;
    Ok(text
        .lines()
        .filter_map(|l| serde_json::from_str(l).ok())
        .collect())
}

pub const HIST_LOW_EXP: i32 = -20;
pub const HIST_HIGH_EXP: i32 = 2;

/// Decade histogram over `[1e-20, 1e2)` plus underflow and overflow bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Exponent of the lower edge of each regular bin.
    pub low_exponents: Vec<i32>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new()
    }
}

impl Histogram {
    pub fn new() -> Self {
        let low_exponents: Vec<i32> = (HIST_LOW_EXP..HIST_HIGH_EXP).collect();
        let counts = vec![0; low_exponents.len()];
        Self {
            low_exponents,
            counts,
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::new();
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn add(&mut self, v: f64) {
        if !(v >= 10f64.powi(HIST_LOW_EXP)) {
            self.underflow += 1;
            return;
        }
        if v >= 10f64.powi(HIST_HIGH_EXP) {
            self.overflow += 1;
            return;
        }
        let mut e = v.log10().floor() as i32;
        // log10 can land one decade off right at a power of ten
        if v < 10f64.powi(e) {
            e -= 1;
        } else if v >= 10f64.powi(e + 1) {
            e += 1;
        }
        let e = e.clamp(HIST_LOW_EXP, HIST_HIGH_EXP - 1);
        self.counts[(e - HIST_LOW_EXP) as usize] += 1;
    }

    pub fn total(&self) -> u64 {
        self.underflow + self.overflow + self.counts.iter().sum::<u64>()
    }

    /// `(lower, upper, count)` for every bin, underflow first.
    pub fn bins(&self) -> Vec<(f64, f64, u64)> {
        let mut out = vec![(0.0, 10f64.powi(HIST_LOW_EXP), self.underflow)];
        for (e, &c) in self.low_exponents.iter().zip(&self.counts) {
            out.push((10f64.powi(*e), 10f64.powi(e + 1), c));
        }
        out.push((10f64.powi(HIST_HIGH_EXP), f64::INFINITY, self.overflow));
        out
    }

    /// Number of values in `[lo, hi)`, counting only whole bins.
    pub fn count_between(&self, lo: f64, hi: f64) -> u64 {
        self.bins()
            .into_iter()
            .filter(|&(a, b, _)| a >= lo && b <= hi)
            .map(|(_, _, c)| c)
            .sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(File::create(path)?)
    }

    /// Bin edges in exponent form (`1e-20`), the overflow edge as `inf`.
    pub fn write_csv_to(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lo", "hi", "count"])?;
        for (lo, hi, c) in self.bins() {
            w.write_record([format!("{lo:e}"), format!("{hi:e}"), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub spec: ConstellationSpec,
    pub classification: Classification,
    pub trials: usize,
    pub successes: usize,
    /// Percent.
    pub success_rate: f64,
    pub min_f: f64,
    pub histogram: Histogram,
}

/// Folds trial records into a report. Wall times are ignored.
pub fn aggregate(spec: &ConstellationSpec, records: &[TrialRecord]) -> Result<CampaignReport> {
    let classification = constellation::classify(spec)?;
    let trials = records.len();
    let successes = records.iter().filter(|r| r.is_success()).count();
    let min_f = records.iter().map(|r| r.final_f).fold(f64::INFINITY, f64::min);
    Ok(CampaignReport {
        spec: spec.clone(),
        classification,
        trials,
        successes,
        success_rate: if trials == 0 {
            0.0
        } else {
            100.0 * successes as f64 / trials as f64
        },
        min_f,
        histogram: Histogram::from_values(records.iter().map(|r| r.final_f)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub top: ConstellationSpec,
    pub trials: usize,
    pub master_seed: u64,
    pub lm: LmConfig,
    pub workers: usize,
}

/// File-name friendly form of a spec, e.g. `d6_5-4-4-2`.
pub fn spec_slug(spec: &ConstellationSpec) -> String {
    let counts: Vec<String> = spec.counts().iter().map(usize::to_string).collect();
    format!("d{}_{}", spec.d(), counts.join("-"))
}

/// Runs a campaign on every spec of [`constellation::enumerate_subspecs`].
/// With `out`, records go to `out/records/<slug>.ndjson` and reruns resume.
pub fn sweep(cfg: &SweepConfig, out: Option<&Path>) -> Result<Vec<CampaignReport>> {
    let specs = constellation::enumerate_subspecs(&cfg.top)?;
    let record_dir: Option<PathBuf> = match out {
        Some(dir) => {
            let rd = dir.join("records");
            fs::create_dir_all(&rd)?;
            Some(rd)
        }
        None => None,
    };
    specs
        .into_iter()
        .map(|spec| {
            let campaign = CampaignConfig {
                spec,
                trials: cfg.trials,
                master_seed: cfg.master_seed,
                lm: cfg.lm.clone(),
                workers: cfg.workers,
            };
            match &record_dir {
                Some(rd) => run_campaign_to(&campaign, &rd.join(format!("{}.ndjson", spec_slug(&campaign.spec)))),
                None => run_campaign(&campaign),
            }
        })
        .collect()
}

/// One row of the sweep table. Missing extra groups are written as 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub p: usize,
    pub kind: SpecKind,
    pub rate: f64,
    pub min_f: f64,
}

impl TableRow {
    pub fn from_report(report: &CampaignReport) -> Result<Self> {
        let extra = report.spec.extra();
        if extra.len() > 3 {
            return Err(Error::Unsupported(format!(
                "{} has more than three extra groups",
                report.spec
            )));
        }
        let at = |i: usize| extra.get(i).copied().unwrap_or(0);
        Ok(Self {
            x: at(0),
            y: at(1),
            z: at(2),
            p: report.classification.p,
            kind: report.classification.kind,
            rate: report.success_rate,
            min_f: report.min_f,
        })
    }

    pub fn spec(&self, d: usize) -> Result<ConstellationSpec> {
        ConstellationSpec::restricted(d, &[self.x, self.y, self.z])
    }
}

pub fn write_table_csv(reports: &[CampaignReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in reports {
        w.serialize(TableRow::from_report(r)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table_csv(path: &Path) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TallyEntry {
    pub spec: ConstellationSpec,
    pub direct: usize,
    /// Successes of campaigns on specs that strictly contain this one.
    pub implied: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeTally {
    /// Join of all report specs; the sweep top for a full sweep.
    pub top: ConstellationSpec,
    pub entries: Vec<TallyEntry>,
    /// Trials of every contained campaign that never succeeded.
    pub implied_negative: usize,
}

/// A found constellation confirms everything it contains; a campaign that
/// never succeeded counts against everything containing it.
pub fn lattice_tally(reports: &[CampaignReport]) -> Result<LatticeTally> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidSpec("lattice tally of an empty sweep".into()))?;
    let d = first.spec.d();
    let width = reports.iter().map(|r| r.spec.counts().len()).max().unwrap_or(0);
    let mut join = vec![0usize; width];
    for r in reports {
        if r.spec.d() != d {
            return Err(Error::DimensionMismatch(d, r.spec.d()));
        }
        for (j, &x) in join.iter_mut().zip(r.spec.counts()) {
            *j = (*j).max(x);
        }
    }
    let top = ConstellationSpec::new(d, join)?;
    let mut entries = Vec::with_capacity(reports.len());
    for r in reports {
        let mut implied = 0;
        for o in reports {
            if o.spec != r.spec && r.spec.leq(&o.spec)? {
                implied += o.successes;
            }
        }
        entries.push(TallyEntry {
            spec: r.spec.clone(),
            direct: r.successes,
            implied,
        });
    }
    let mut implied_negative = 0;
    for r in reports {
        if r.successes == 0 && r.spec.leq(&top)? {
            implied_negative += r.trials;
        }
    }
    Ok(LatticeTally {
        top,
        entries,
        implied_negative,
    })
}
