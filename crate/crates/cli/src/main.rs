//! `mubforge`: search for mutually unbiased constellations from the command
//! line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mubforge_core::constellation::{classify, ConstellationSpec};
use mubforge_core::constructions::{
    prime_complete_set, qubit_complete_set, subconstellation, tensor_triple,
};
use mubforge_core::equivalence::dephase;
use mubforge_core::objective::{f_upper_bound, verify_mu};
use mubforge_core::search::{
    self, lattice_tally, read_records, run_campaign, run_campaign_to, write_table_csv,
    Histogram, SweepConfig,
};
use mubforge_core::{CampaignConfig, LmConfig, ResidualForm, StateSetFile};

#[derive(Parser)]
#[command(name = "mubforge", version, about = "Search for mutually unbiased constellations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the parameter and constraint counts of a spec
    Count {
        /// Spec such as `d=6:5,4^2,2`
        spec: ConstellationSpec,
    },
    /// Run a random-restart campaign on one spec
    Search {
        spec: ConstellationSpec,
        #[command(flatten)]
        run: RunArgs,
        /// Directory for `records.ndjson` and `report.json`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run campaigns on every sub-constellation of a top spec
    Sweep {
        top: ConstellationSpec,
        #[command(flatten)]
        run: RunArgs,
        /// Directory for records, `table.csv`, `reports.json` and `tally.json`
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a known set of mutually unbiased bases
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
        /// Keep only this restricted sub-constellation
        #[arg(long, global = true)]
        spec: Option<ConstellationSpec>,
        /// Output file; stdout when omitted
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Check every pair of a state-set file against the MU conditions
    Verify {
        file: PathBuf,
        /// Largest allowed deviation of any |<u|v>| from its target
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Bring a state-set file into dephased form
    Dephase {
        file: PathBuf,
        /// Output file for the dephased set; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decade histogram of final F values from a record file
    Hist {
        records: PathBuf,
        /// Output CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ConstructKind {
    /// Complete set in an odd prime dimension
    Prime { p: usize },
    /// Three bases in dimension a·b from the factors' first three bases
    Tensor { a: usize, b: usize },
    /// The three qubit bases
    Qubit,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "MUBFORGE_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Success threshold on F
    #[arg(long, default_value_t = mubforge_core::optimizer::SUCCESS_THRESHOLD)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    lm_max_iter: usize,
    #[arg(long, default_value = "abs", value_parser = ["abs", "squared"])]
    objective: String,
}

impl RunArgs {
    fn lm(&self) -> Result<LmConfig> {
        let cfg = LmConfig {
            max_iterations: self.lm_max_iter,
            success_threshold: self.tol,
            residual_form: self.objective.parse::<ResidualForm>()?,
            ..LmConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn count(spec: &ConstellationSpec) -> Result<()> {
    let cl = classify(spec)?;
    let bound = f_upper_bound(spec)?;
    println!("spec  {}", spec.braces());
    println!("p     {}", cl.p);
    println!("c     {}", cl.c);
    println!("s     {}", cl.s);
    println!("S     {}", cl.total_states);
    println!("kind  {}", cl.kind);
    println!("F_max {:.4} (coincident states)", bound.coincident);
    println!("F_max {:.4} (linear coefficient)", bound.linear_coefficient);
    Ok(())
}

fn search_cmd(spec: ConstellationSpec, run: &RunArgs, out: Option<&Path>) -> Result<()> {
    let cfg = CampaignConfig {
        spec,
        trials: run.trials as usize,
        master_seed: run.seed,
        lm: run.lm()?,
        workers: run.workers,
    };
    let report = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let report = run_campaign_to(&cfg, &dir.join("records.ndjson"))?;
            write_json(&dir.join("report.json"), &report)?;
            report
        }
        None => run_campaign(&cfg)?,
    };
    println!(
        "{}: {}/{} successes, rate {:.2}%, min F {:.3e}",
        report.spec.braces(),
        report.successes,
        report.trials,
        report.success_rate,
        report.min_f
    );
    Ok(())
}

fn sweep_cmd(top: ConstellationSpec, run: &RunArgs, out: Option<&Path>) -> Result<()> {
    let cfg = SweepConfig {
        top,
        trials: run.trials as usize,
        master_seed: run.seed,
        lm: run.lm()?,
        workers: run.workers,
    };
    let reports = search::sweep(&cfg, out)?;
    let tally = lattice_tally(&reports)?;
    if let Some(dir) = out {
        write_table_csv(&reports, &dir.join("table.csv"))?;
        write_json(&dir.join("reports.json"), &reports)?;
        write_json(&dir.join("tally.json"), &tally)?;
    }
    println!("{:<16} {:>4} {:<15} {:>8} {:>10} {:>8}", "spec", "p", "kind", "rate", "min_f", "implied");
    for (r, t) in reports.iter().zip(&tally.entries) {
        println!(
            "{:<16} {:>4} {:<15} {:>7.2}% {:>10.2e} {:>8}",
            r.spec.braces(),
            r.classification.p,
            r.classification.kind.to_string(),
            r.success_rate,
            r.min_f,
            t.implied
        );
    }
    println!(
        "{} campaigns; {} trials without success count against {}",
        reports.len(),
        tally.implied_negative,
        tally.top.braces()
    );
    Ok(())
}

fn construct(kind: &ConstructKind, spec: Option<&ConstellationSpec>, out: Option<&Path>) -> Result<()> {
    let set = match *kind {
        ConstructKind::Prime { p } => prime_complete_set(p)?,
        ConstructKind::Tensor { a, b } => tensor_triple(a, b)?,
        ConstructKind::Qubit => qubit_complete_set(),
    };
    let (states, provenance) = match spec {
        Some(sp) => (subconstellation(&set, sp)?, format!("{} {}", set.provenance, sp)),
        None => (set.to_state_set(), set.provenance.clone()),
    };
    let file = StateSetFile::from_state_set(&states, provenance);
    match out {
        Some(path) => file.write(path)?,
        None => println!("{}", serde_json::to_string(&file)?),
    }
    eprintln!("{} groups, {} states, d={}", states.groups().len(), states.num_states(), states.d());
    Ok(())
}

fn verify(file: &Path, tol: f64) -> Result<bool> {
    let states = StateSetFile::read(file)
        .with_context(|| format!("reading {}", file.display()))?
        .to_raw_state_set()?;
    if states.num_states() == 0 {
        eprintln!("warning: {} contains no states", file.display());
    }
    let v = verify_mu(&states, tol);
    if v.passed {
        println!("pass: {} states, max deviation {:.3e}", states.num_states(), v.max_deviation);
    } else {
        let ((b, j), (b2, j2)) = v.worst_pair.expect("a failure has a worst pair");
        println!(
            "fail: max deviation {:.3e} exceeds {tol:e} at group {b} state {j} vs group {b2} state {j2}",
            v.max_deviation
        );
    }
    Ok(v.passed)
}

fn dephase_cmd(file: &Path, out: Option<&Path>) -> Result<()> {
    let input = StateSetFile::read(file).with_context(|| format!("reading {}", file.display()))?;
    let result = dephase(&input.to_state_set()?)?;
    let dephased = StateSetFile::from_state_set(&result.states, format!("dephased {}", input.provenance));
    let angles = match &result.point {
        Some(p) => serde_json::to_string(p.angles())?,
        None => "null".to_string(),
    };
    match out {
        Some(path) => {
            dephased.write(path)?;
            println!("{angles}");
        }
        None => {
            println!("{}", serde_json::to_string(&dephased)?);
            eprintln!("angles {angles}");
        }
    }
    Ok(())
}

fn hist(records: &Path, out: Option<&Path>) -> Result<()> {
    let records = read_records(records).with_context(|| format!("reading {}", records.display()))?;
    let h = Histogram::from_values(records.iter().map(|r| r.final_f));
    match out {
        Some(path) => h.write_csv(path)?,
        None => h.write_csv_to(std::io::stdout().lock())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Count { spec } => count(&spec)?,
        Command::Search { spec, run, out } => search_cmd(spec, &run, out.as_deref())?,
        Command::Sweep { top, run, out } => sweep_cmd(top, &run, out.as_deref())?,
        Command::Construct { kind, spec, out } => construct(&kind, spec.as_ref(), out.as_deref())?,
        Command::Verify { file, tol } => return verify(&file, tol),
        Command::Dephase { file, out } => dephase_cmd(&file, out.as_deref())?,
        Command::Hist { records, out } => hist(&records, out.as_deref())?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
