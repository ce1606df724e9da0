//! Command-line front end: factor a row, verify a certificate file, batch
//! sampling with conformance statistics, and ring inspection.

use crate::certify::Certificate;
use crate::error::Error;
use crate::pipeline::{factor_singular_row, Budgets, PipelineStats};
use crate::quadring::{QuadInt, RingSpec};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

pub const PAPER_R: usize = 15;
pub const PAPER_S: usize = 19;

#[derive(Parser)]
#[command(
    name = "idemfact",
    about = "Factors 2x2 singular row matrices over real quadratic integer rings into bounded products of idempotents, emitting verifiable certificates",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Factor the row (x y; 0 0) and emit a certificate
    Factor {
        /// square-free radicand of the ring
        #[arg(long)]
        alpha: i64,
        /// first entry: `a+b*w`, `a`, `b*w`, or `(c1,c2)`
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// second entry, same grammar
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        /// write the certificate JSON here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// override the scan budgets
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Re-verify a certificate file
    Verify {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Factor many seeded random rows and report bound conformance
    Batch {
        #[arg(long)]
        alpha: i64,
        #[arg(long)]
        samples: u64,
        /// coordinates are sampled uniformly from [-height, height]
        #[arg(long)]
        height: i64,
        #[arg(long)]
        seed: u64,
        /// per-run CSV output path
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Print ring data for an alpha
    RingInfo {
        #[arg(long)]
        alpha: i64,
    },
}

/// One factorization run summarized against the paper bounds.
pub struct RunReport {
    pub alpha: u64,
    pub x: String,
    pub y: String,
    pub r: usize,
    pub s: usize,
    pub n0_max: usize,
    pub flags: Vec<String>,
    pub phases: Vec<String>,
    pub micros: u128,
}

impl RunReport {
    pub fn new(cert: &Certificate, stats: &PipelineStats, micros: u128) -> RunReport {
        let t = cert.target().entries();
        RunReport {
            alpha: cert.ring().alpha(),
            x: t[0].to_string(),
            y: t[1].to_string(),
            r: cert.counts().r,
            s: cert.counts().s,
            n0_max: stats.n0_max,
            flags: cert.flags().iter().map(|f| f.label().to_string()).collect(),
            phases: stats.phases.clone(),
            micros,
        }
    }

    /// Conforming means inside the (15, 19) bounds with a clean flag set.
    pub fn conforming(&self) -> bool {
        self.r <= PAPER_R && self.s <= PAPER_S && self.flags.is_empty()
    }

    pub fn verdict(&self) -> &'static str {
        if self.conforming() {
            "conforming"
        } else {
            "non-conforming"
        }
    }

    fn print(&self) {
        println!("ring: Q(sqrt({}))", self.alpha);
        println!("row:  [{}  {}]", self.x, self.y);
        println!(
            "counts: r = {} idempotents, s = {} conjugators (bounds {PAPER_R}, {PAPER_S})",
            self.r, self.s
        );
        println!("n0 max: {}", self.n0_max);
        println!(
            "flags: {}",
            if self.flags.is_empty() {
                "none".to_string()
            } else {
                self.flags.join(", ")
            }
        );
        println!("verdict: {}", self.verdict());
        for p in &self.phases {
            println!("phase: {p}");
        }
        println!("time: {} us", self.micros);
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BudgetExhausted(_) | Error::NoUnimodularSolution => 3,
        Error::Parse(_)
        | Error::AlphaTooSmall
        | Error::AlphaNotSquareFree(_)
        | Error::AlphaDivisibleByFour => 2,
        _ => 1,
    }
}

fn parse_inputs(alpha: i64, x: &str, y: &str) -> Result<(RingSpec, QuadInt, QuadInt), Error> {
    let ring = RingSpec::new(alpha)?;
    let x = ring.parse_element(x)?;
    let y = ring.parse_element(y)?;
    Ok((ring, x, y))
}

fn budgets_with(budget: Option<u64>) -> Budgets {
    let b = Budgets::from_env();
    match budget {
        Some(n) => b.with_scan_cap(n),
        None => b,
    }
}

fn cmd_factor(alpha: i64, x: &str, y: &str, out: Option<PathBuf>, budget: Option<u64>) -> i32 {
    let (_, x, y) = match parse_inputs(alpha, x, y) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let budgets = budgets_with(budget);
    let start = Instant::now();
    match factor_singular_row(&x, &y, &budgets) {
        Ok((cert, stats)) => {
            if let Err(e) = cert.verify() {
                eprintln!("internal error: emitted certificate failed verification: {e}");
                return 1;
            }
            let report = RunReport::new(&cert, &stats, start.elapsed().as_micros());
            report.print();
            let json = cert.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, json) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 1;
                    }
                    println!("certificate: {}", path.display());
                }
                None => println!("{json}"),
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            if code == 3 {
                eprintln!("partial report: budgets exhausted before a certificate was found; retry with --budget or IDEMFACT_BUDGET");
            }
            code
        }
    }
}

fn cmd_verify(path: &PathBuf) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let cert = match Certificate::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match cert.verify() {
        Ok(()) => {
            let c = cert.counts();
            println!("verified: counts (r={}, s={})", c.r, c.s);
            0
        }
        Err(e) => {
            eprintln!("verification failed: {e}");
            1
        }
    }
}

struct SampleRow {
    x: String,
    y: String,
    outcome: Result<(usize, usize, usize, Vec<String>, bool, u128), String>,
}

/// Deterministic per-sample generator stream.
fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_batch(
    ring: RingSpec,
    samples: u64,
    height: i64,
    seed: u64,
    budgets: &Budgets,
) -> Vec<(String, String, Result<(RunReport, Certificate), String>)> {
    let inputs: Vec<(QuadInt, QuadInt)> = (0..samples)
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let x = ring.from_coords(
                rng.random_range(-height..=height),
                rng.random_range(-height..=height),
            );
            let y = ring.from_coords(
                rng.random_range(-height..=height),
                rng.random_range(-height..=height),
            );
            (x, y)
        })
        .collect();
    inputs
        .into_par_iter()
        .map(|(x, y)| {
            let xs = x.to_string();
            let ys = y.to_string();
            let start = Instant::now();
            let out = factor_singular_row(&x, &y, budgets)
                .and_then(|(cert, stats)| {
                    // round-trip through the wire format before re-verifying
                    let back = Certificate::from_json(&cert.to_json())?;
                    back.verify()?;
                    Ok((cert, stats))
                })
                .map(|(cert, stats)| {
                    let rep = RunReport::new(&cert, &stats, start.elapsed().as_micros());
                    (rep, cert)
                })
                .map_err(|e| e.to_string());
            (xs, ys, out)
        })
        .collect()
}

fn cmd_batch(
    alpha: i64,
    samples: u64,
    height: i64,
    seed: u64,
    csv: Option<PathBuf>,
    budget: Option<u64>,
) -> i32 {
    if samples == 0 || height < 1 {
        eprintln!("error: samples must be >= 1 and height >= 1");
        return 2;
    }
    let ring = match RingSpec::new(alpha) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let budgets = budgets_with(budget);
    let results = run_batch(ring, samples, height, seed, &budgets);

    let rows: Vec<SampleRow> = results
        .into_iter()
        .map(|(x, y, out)| SampleRow {
            x,
            y,
            outcome: out.map(|(rep, _)| {
                (
                    rep.r,
                    rep.s,
                    rep.n0_max,
                    rep.flags.clone(),
                    rep.conforming(),
                    rep.micros,
                )
            }),
        })
        .collect();

    let mut csv_text = String::from("alpha,x,y,r,s,n0_max,flags,verdict,micros\n");
    let mut failures = 0u64;
    let mut max_r = 0usize;
    let mut max_s = 0usize;
    let mut flag_free = 0u64;
    let mut flag_free_conforming = 0u64;
    let mut flagged = 0u64;
    for row in &rows {
        match &row.outcome {
            Ok((r, s, n0, flags, conf, micros)) => {
                max_r = max_r.max(*r);
                max_s = max_s.max(*s);
                if flags.is_empty() {
                    flag_free += 1;
                    if *conf {
                        flag_free_conforming += 1;
                    }
                } else {
                    flagged += 1;
                }
                let verdict = if *conf { "conforming" } else { "non-conforming" };
                println!(
                    "[{}] x={} y={} r={} s={} n0={} flags=[{}] {}",
                    ring.alpha(),
                    row.x,
                    row.y,
                    r,
                    s,
                    n0,
                    flags.join(";"),
                    verdict
                );
                let _ = writeln!(
                    csv_text,
                    "{},{},{},{},{},{},{},{},{}",
                    ring.alpha(),
                    row.x,
                    row.y,
                    r,
                    s,
                    n0,
                    flags.join(";"),
                    verdict,
                    micros
                );
            }
            Err(e) => {
                failures += 1;
                println!("[{}] x={} y={} FAILED: {e}", ring.alpha(), row.x, row.y);
                let _ = writeln!(
                    csv_text,
                    "{},{},{},,,,,failed,",
                    ring.alpha(),
                    row.x,
                    row.y
                );
            }
        }
    }
    let total = rows.len() as u64;
    println!("--");
    println!("samples: {total}, verified: {}, failed: {failures}", total - failures);
    println!("max r: {max_r}, max s: {max_s} (bounds {PAPER_R}, {PAPER_S})");
    println!(
        "flag-free: {flag_free} ({:.1}% of runs), conforming among them: {flag_free_conforming}",
        100.0 * flag_free as f64 / total.max(1) as f64
    );
    println!("flagged: {flagged}");
    if let Some(path) = csv {
        if let Err(e) = std::fs::write(&path, csv_text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 1;
        }
        println!("csv: {}", path.display());
    }
    if failures > 0 {
        return 1;
    }
    0
}

fn cmd_ring_info(alpha: i64) -> i32 {
    match RingSpec::new(alpha) {
        Ok(ring) => {
            println!("alpha: {}", ring.alpha());
            println!("integral basis: 1, {}", ring.omega_description());
            println!("discriminant: {}", ring.discriminant());
            println!("fundamental unit: {}", ring.fundamental_unit());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    match cli.cmd {
        Cmd::Factor {
            alpha,
            x,
            y,
            out,
            budget,
        } => cmd_factor(alpha, &x, &y, out, budget),
        Cmd::Verify { cert } => cmd_verify(&cert),
        Cmd::Batch {
            alpha,
            samples,
            height,
            seed,
            csv,
            budget,
        } => cmd_batch(alpha, samples, height, seed, csv, budget),
        Cmd::RingInfo { alpha } => cmd_ring_info(alpha),
    }
}
