use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaep::ballprob::{ball_prob_exact_dp, ball_prob_mc, BallQuery};
use gaep::config::{parse_distribution, read_matrix_file, ExperimentConfig};
use gaep::experiment::{render_summary, run, summarize};
use gaep::model::{DistortionMeasure, FiniteDistribution};
use gaep::ratefn::{blahut_arimoto, rate_r1, FiniteProblem, DEFAULT_BA_TOL};
use gaep::Result;

#[derive(Parser)]
#[command(name = "gaep", version, about = "Generalized AEP toolkit: rate functions, ball probabilities, codebooks and waiting times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Per-group statistics and KS diagnostics for experiment CSVs.
    Summarize {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
    },
    /// One-shot R₁(P, Q, D), λ* and R(D).
    Rate {
        /// Source law, e.g. `0.7,0.3` or `bernoulli:0.3`.
        #[arg(long)]
        p: String,
        /// Reproduction law; defaults to uniform.
        #[arg(long)]
        q: Option<String>,
        #[command(flatten)]
        measure: Measure,
    },
    /// One-shot distortion-ball probability.
    Ballprob {
        /// Ball center as symbol indices, e.g. `0110` or `0,1,1,0`.
        #[arg(long)]
        x: String,
        #[arg(long)]
        q: String,
        #[command(flatten)]
        measure: Measure,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Measure {
    /// Distortion matrix file; Hamming when omitted.
    #[arg(long = "rho-file")]
    rho_file: Option<PathBuf>,
    /// Distortion level D.
    #[arg(long = "dist")]
    dist: String,
}

impl Measure {
    fn load(&self, k: usize) -> Result<(DistortionMeasure, f64)> {
        let rho = match &self.rho_file {
            Some(p) => read_matrix_file(p)?,
            None => DistortionMeasure::hamming(k),
        };
        Ok((rho, gaep::config::parse_f64(&self.dist)?))
    }
}

fn parse_symbols(s: &str) -> Result<Vec<usize>> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| gaep::Error::Config(format!("bad symbol {t:?}")));
    if s.contains(',') {
        s.split(',').map(parse).collect()
    } else {
        s.chars().map(|c| parse(&c.to_string())).collect()
    }
}

fn cmd_run(path: &Path, common: &Common) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(r) = common.replicas {
        cfg.replicas = r.max(1);
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    let report = run(&cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.kind)));
    report.write_csv(&out)?;
    print!("{}", report.render());
    println!("  wrote {} rows to {}", report.rows.len(), out.display());
    Ok(report.all_pass())
}

fn cmd_rate(p: &str, q: Option<&str>, measure: &Measure) -> Result<()> {
    let p = parse_distribution(p)?;
    let (rho, d) = measure.load(p.len())?;
    let q = match q {
        Some(q) => parse_distribution(q)?,
        None => FiniteDistribution::uniform(rho.cols())?,
    };
    let problem = FiniteProblem::new(&p, &q, &rho)?;
    let s = problem.stats();
    println!("d_min = {:.9}  d_av = {:.9}  d_max = {:.9}", s.d_min, s.d_av, s.d_max);
    match rate_r1(&problem, d) {
        Ok(pt) => println!("R1 = {:.9} nats = {:.9} bits  lambda* = {:.9}  ({:?})", pt.r1_nats, pt.r1_bits, pt.lambda_star, pt.regime),
        Err(e) => println!("R1: {e}"),
    }
    let sol = blahut_arimoto(&p, &rho, d, DEFAULT_BA_TOL)?;
    let qs: Vec<String> = sol.q_star.probs().iter().map(|v| format!("{v:.9}")).collect();
    println!("R(D) = {:.9} bits  Q* = [{}]  gap <= {:.2e}  iterations {}", sol.rate_bits, qs.join(", "), sol.gap_bound, sol.iterations);
    Ok(())
}

fn cmd_ballprob(x: &str, q: &str, measure: &Measure, common: &Common) -> Result<()> {
    let x = parse_symbols(x)?;
    let q = parse_distribution(q)?;
    let (rho, d) = measure.load(x.iter().max().map_or(q.len(), |m| (m + 1).max(q.len())))?;
    let query = BallQuery::new(&x, &q, &rho, d)?;
    match ball_prob_exact_dp(&query) {
        Ok(b) => println!("exact: Q^n(B) = {:.12e}  log = {:.12}", b.prob, b.log_prob),
        Err(e) => println!("exact: {e}"),
    }
    if let Some(r) = common.replicas {
        let mc = ball_prob_mc(&query, r as u64, common.seed.unwrap_or(0))?;
        println!("monte carlo: {:.6e} ± {:.2e} ({} / {})", mc.estimate, mc.std_error, mc.hits, mc.replicas);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Summarize { csv } => {
            let paths: Vec<&Path> = csv.iter().map(PathBuf::as_path).collect();
            summarize(&paths).map(|rows| {
                print!("{}", render_summary(&rows));
                true
            })
        }
        Command::Rate { p, q, measure } => cmd_rate(p, q.as_deref(), measure).map(|_| true),
        Command::Ballprob { x, q, measure, common } => cmd_ballprob(x, q, measure, common).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
