//! Experiment front end: synthetic instance generation, algorithm drivers,
//! and parameter sweeps, all reporting per-trial CSV rows with access
//! counters. Reruns with the same seed are byte-identical apart from the
//! wall-time column. Exit codes: 0 pass, 1 tolerance failure, 2 usage/IO
//! error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sqla::centroid::{CentroidInstance, TensorA};
use sqla::dense::{self, DenseMatrix};
use sqla::estimators::{inner_product_estimate, EstimatorParams};
use sqla::io;
use sqla::lowrank::{low_rank_approx, reconstruct_d_dense, LowRankParams};
use sqla::matvec::{overhead_c_exact, MatVecHandle};
use sqla::oracle;
use sqla::pca::{pca, PcaParams};
use sqla::sq::{SqAccess, SqMatrix, SqMatrixAccess, SqVector};
use sqla::stats::StatsSnapshot;
use sqla::synth;
use sqla::{Result, SqError};

#[derive(Parser)]
#[command(name = "sqla", version, about = "Sample-and-query linear algebra experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a matrix with a planted spectrum and write it in SQM1 format
    Gen(GenArgs),
    /// Inner-product estimation trials
    Inner(InnerArgs),
    /// Matrix-vector rejection sampling: norm-estimation trials or a cost sweep
    Matvec(MatvecArgs),
    /// Threshold low-rank approximation trials
    Lowrank(LowrankArgs),
    /// Nearest-centroid distance estimation trials
    Centroid(CentroidArgs),
    /// Principal component extraction trials
    Pca(PcaArgs),
    /// One-parameter sweeps emitting regression-ready CSV
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct ReportArgs {
    /// RNG seed; mandatory so every run is reproducible
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Report destination (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Report format (only csv is supported)
    #[arg(long, default_value = "csv")]
    format: String,
    /// Fraction of passing rows required for exit code 0
    #[arg(long, default_value_t = 0.9)]
    min_pass_rate: f64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Comma-separated positive nonincreasing singular values
    #[arg(long, value_delimiter = ',')]
    spectrum: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct InnerArgs {
    /// Draw a fresh random pair of this dimension each trial
    #[arg(long, conflicts_with_all = ["input_x", "input_y"])]
    dim: Option<usize>,
    /// Vector x (SQM1 or .csv), fixed across trials
    #[arg(long, requires = "input_y")]
    input_x: Option<PathBuf>,
    /// Vector y (SQM1 or .csv), fixed across trials
    #[arg(long, requires = "input_x")]
    input_y: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
#[command(subcommand_negates_reqs = true)]
struct MatvecArgs {
    #[command(subcommand)]
    mode: Option<MatvecMode>,
    /// Rows of V (columns come from --k)
    #[arg(long, default_value_t = 100)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Norm-estimation slack ν
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Multiplier on the exact overhead C(V,w) used as the budget bound Ĉ
    #[arg(long, default_value_t = 2.0)]
    c_slack: f64,
    /// RNG seed; mandatory so every run is reproducible
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Report destination (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Report format (only csv is supported)
    #[arg(long, default_value = "csv")]
    format: String,
    /// Fraction of passing rows required for exit code 0
    #[arg(long, default_value_t = 0.9)]
    min_pass_rate: f64,
}

#[derive(Subcommand)]
enum MatvecMode {
    /// Measure entry queries per accepted sample across several k
    Sweep(MatvecSweepArgs),
}

#[derive(Args)]
struct MatvecSweepArgs {
    /// Comma-separated k values
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    rows: usize,
    /// Accepted samples drawn per trial
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct LowrankArgs {
    /// Input matrix (SQM1 or .csv)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Subsample size override (the theoretical count is impractical)
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    theta_constant: f64,
    /// Pass when ‖A−D‖_F² ≤ ‖A−A_ℓ‖_F² + tol_frac·‖A‖_F²
    #[arg(long, default_value_t = 0.05)]
    tol_frac: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct CentroidArgs {
    /// Random Gaussian instance: cluster size
    #[arg(long, conflicts_with_all = ["input_v", "input_u"])]
    n: Option<usize>,
    /// Random Gaussian instance: dimension
    #[arg(long, requires = "n")]
    d: Option<usize>,
    /// Cluster matrix V (SQM1 or .csv)
    #[arg(long, requires = "input_u")]
    input_v: Option<PathBuf>,
    /// Point u (SQM1 or .csv)
    #[arg(long, requires = "input_v")]
    input_u: Option<PathBuf>,
    /// Absolute additive tolerance; default is eps_frac·Z
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    eps_frac: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.01)]
    eps_sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_v: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    theta_constant: f64,
    /// Per-component pass when |σ̂ᵢ² − σᵢ²| ≤ tol_frac·‖A‖_F²
    #[arg(long, default_value_t = 0.01)]
    tol_frac: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(subcommand)]
    target: SweepTarget,
}

#[derive(Subcommand)]
enum SweepTarget {
    /// Inner-product accuracy and sample count across ε values
    InnerEps(SweepInnerArgs),
    /// Low-rank reconstruction error across subsample sizes q
    LowrankQ(SweepLowrankArgs),
    /// Centroid sample count across instance scales (Z grows as scale²)
    CentroidScale(SweepCentroidArgs),
}

#[derive(Args)]
struct SweepInnerArgs {
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SweepLowrankArgs {
    #[arg(long, value_delimiter = ',')]
    values: Vec<usize>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.05)]
    tol_frac: f64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct SweepCentroidArgs {
    /// Comma-separated instance scale factors
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    d: usize,
    /// Absolute tolerance, held fixed across scales
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[command(flatten)]
    report: ReportArgs,
}

// ---------------------------------------------------------------------------
// report plumbing
// ---------------------------------------------------------------------------

struct Row {
    command: &'static str,
    trial: usize,
    /// swept parameter value, empty for plain runs
    param: String,
    component: usize,
    estimate: f64,
    oracle: f64,
    abs_error: f64,
    tolerance: f64,
    pass: bool,
    counters: StatsSnapshot,
    wall_time_s: f64,
}

impl Row {
    fn failed(command: &'static str, trial: usize, param: String, wall: f64) -> Self {
        Row {
            command,
            trial,
            param,
            component: 0,
            estimate: f64::NAN,
            oracle: f64::NAN,
            abs_error: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            counters: StatsSnapshot::default(),
            wall_time_s: wall,
        }
    }
}

const HEADER: &str = "command,trial,param,component,estimate,oracle,abs_error,tolerance,pass,n_queries,n_samples,n_norm_queries,wall_time_s";

fn write_report(out: &Option<PathBuf>, rows: &[Row]) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(HEADER);
    buf.push_str("\r\n");
    for r in rows {
        buf.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\r\n",
            r.command,
            r.trial,
            r.param,
            r.component,
            r.estimate,
            r.oracle,
            r.abs_error,
            r.tolerance,
            r.pass,
            r.counters.n_queries,
            r.counters.n_samples,
            r.counters.n_norm_queries,
            r.wall_time_s,
        ));
    }
    match out {
        Some(path) => std::fs::write(path, buf)?,
        None => std::io::stdout().write_all(buf.as_bytes())?,
    }
    Ok(())
}

/// Per-trial RNG: decorrelated from the run seed so trials are independent
/// but every rerun replays the same streams.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn thread_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("SQLA_THREADS") {
        Ok(v) => v.parse::<usize>().map_or(available, |n| n.clamp(1, available)),
        Err(_) => available,
    }
}

/// Run `count` jobs, possibly in parallel, collecting outputs in job order.
fn run_jobs<F>(count: usize, job: F) -> Vec<Vec<Row>>
where
    F: Fn(usize) -> Vec<Row> + Sync,
{
    let threads = thread_count().min(count.max(1));
    if threads <= 1 {
        return (0..count).map(&job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Vec<Row>>>> = Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= count {
                    break;
                }
                let rows = job(t);
                slots.lock().unwrap()[t] = Some(rows);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every job ran"))
        .collect()
}

fn pass_rate(rows: &[Row]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.pass).count() as f64 / rows.len() as f64
}

fn finish(report: &ReportArgs, rows: Vec<Row>) -> Result<u8> {
    if report.format != "csv" {
        return Err(SqError::Format(format!(
            "unsupported format {:?} (only csv)",
            report.format
        )));
    }
    let rate = pass_rate(&rows);
    write_report(&report.output, &rows)?;
    eprintln!(
        "{} rows, pass rate {:.4} (threshold {})",
        rows.len(),
        rate,
        report.min_pass_rate
    );
    Ok(if rate >= report.min_pass_rate { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

fn cmd_gen(args: &GenArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let a = synth::planted_matrix(args.rows, args.cols, &args.spectrum, args.noise, &mut rng)?;
    let stats = synth::check_planted(&a, &args.spectrum)?;
    io::write_matrix(&args.output, &a)?;
    let r = args.spectrum.len();
    let sigma_min = stats.sigma[r - 1];
    let cond_k = stats.frobenius * stats.frobenius / (sigma_min * sigma_min);
    println!(
        "wrote {}x{} matrix to {}",
        args.rows,
        args.cols,
        args.output.display()
    );
    println!("frobenius = {}", stats.frobenius);
    println!(
        "realized spectrum (top {}) = {:?}",
        stats.sigma.len(),
        stats.sigma
    );
    println!("realized eta = {}", stats.eta);
    println!("K at sigma = {sigma_min}: {cond_k}");
    Ok(0)
}

fn cmd_inner(args: &InnerArgs) -> Result<u8> {
    let params = EstimatorParams::new(args.eps, args.delta)?;
    let fixed: Option<(Vec<f64>, Vec<f64>)> = match (&args.input_x, &args.input_y) {
        (Some(px), Some(py)) => Some((io::read_vector(px)?, io::read_vector(py)?)),
        _ => None,
    };
    if fixed.is_none() && args.dim.is_none() {
        return Err(SqError::Format(
            "provide --dim or both --input-x and --input-y".into(),
        ));
    }
    let rows = run_jobs(args.report.trials, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, trial);
        let (x, y) = match &fixed {
            Some((x, y)) => (x.clone(), y.clone()),
            None => {
                let dim = args.dim.unwrap();
                (
                    synth::gaussian_vector(dim, &mut rng),
                    synth::gaussian_vector(dim, &mut rng),
                )
            }
        };
        let mut run = || -> Result<Row> {
            let xs = SqVector::build_dense(&x)?;
            let before = xs.stats().snapshot();
            let est = inner_product_estimate(&xs, &y, &params, &mut rng)?;
            let counters = xs.stats().snapshot().since(&before);
            let truth = oracle::exact_dot(&x, &y)?;
            let tol = args.eps * dense::norm(&x) * dense::norm(&y);
            let err = (est - truth).abs();
            Ok(Row {
                command: "inner",
                trial,
                param: String::new(),
                component: 0,
                estimate: est,
                oracle: truth,
                abs_error: err,
                tolerance: tol,
                pass: err <= tol,
                counters,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        };
        vec![run().unwrap_or_else(|e| {
            eprintln!("trial {trial}: {e}");
            Row::failed("inner", trial, String::new(), start.elapsed().as_secs_f64())
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn matvec_trial(
    rows: usize,
    k: usize,
    nu: f64,
    delta: f64,
    c_slack: f64,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Row> {
    let start = Instant::now();
    let v = synth::gaussian_matrix(rows, k, rng);
    let w = synth::gaussian_vector(k, rng);
    let c_exact = overhead_c_exact(&v, &w)?;
    let vt = SqMatrix::build_matrix(&v.transpose())?;
    let h = MatVecHandle::new(vt.clone(), w.clone(), c_slack * c_exact, delta)?;
    let before = vt.total_stats();
    let est = h.norm_sq_estimate(nu, rng)?;
    let mut counters = vt.total_stats().since(&before);
    counters.n_norm_queries += h.stats().snapshot().n_norm_queries;
    let vw = oracle::exact_matvec(&v, &w)?;
    let truth: f64 = vw.iter().map(|t| t * t).sum();
    let tol = nu * truth;
    let err = (est - truth).abs();
    Ok(Row {
        command: "matvec",
        trial,
        param: String::new(),
        component: 0,
        estimate: est,
        oracle: truth,
        abs_error: err,
        tolerance: tol,
        pass: err <= tol,
        counters,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn cmd_matvec(args: &MatvecArgs) -> Result<u8> {
    if let Some(MatvecMode::Sweep(sweep)) = &args.mode {
        return cmd_matvec_sweep(sweep);
    }
    let report = ReportArgs {
        seed: args
            .seed
            .ok_or_else(|| SqError::Format("--seed is required".into()))?,
        trials: args.trials,
        output: args.output.clone(),
        format: args.format.clone(),
        min_pass_rate: args.min_pass_rate,
    };
    let rows = run_jobs(report.trials, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(report.seed, trial);
        vec![
            matvec_trial(args.rows, args.k, args.nu, args.delta, args.c_slack, trial, &mut rng)
                .unwrap_or_else(|e| {
                    eprintln!("trial {trial}: {e}");
                    Row::failed("matvec", trial, String::new(), start.elapsed().as_secs_f64())
                }),
        ]
    });
    finish(&report, rows.into_iter().flatten().collect())
}

fn cmd_matvec_sweep(args: &MatvecSweepArgs) -> Result<u8> {
    if args.k.is_empty() {
        return Err(SqError::Format("--k needs at least one value".into()));
    }
    let jobs: Vec<(usize, usize)> = args
        .k
        .iter()
        .flat_map(|&k| (0..args.report.trials).map(move |t| (k, t)))
        .collect();
    let rows: Vec<Row> = run_jobs(jobs.len(), |j| {
        let (k, trial) = jobs[j];
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, j);
        let mut run = || -> Result<Row> {
            let v = synth::random_orthonormal(args.rows, k, &mut rng)?;
            let w = synth::gaussian_vector(k, &mut rng);
            let c_exact = overhead_c_exact(&v, &w)?;
            let vt = SqMatrix::build_matrix(&v.transpose())?;
            let h = MatVecHandle::new(vt.clone(), w, 2.0 * c_exact, 0.01)?;
            let before = vt.total_stats();
            for _ in 0..args.samples {
                h.sample(&mut rng)?;
            }
            let counters = vt.total_stats().since(&before);
            let per_sample = counters.n_queries as f64 / args.samples as f64;
            Ok(Row {
                command: "matvec-sweep",
                trial,
                param: k.to_string(),
                component: 0,
                estimate: per_sample,
                oracle: f64::NAN,
                abs_error: f64::NAN,
                tolerance: f64::NAN,
                pass: true,
                counters,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        };
        vec![run().unwrap_or_else(|e| {
            eprintln!("k={k} trial {trial}: {e}");
            Row::failed("matvec-sweep", trial, k.to_string(), start.elapsed().as_secs_f64())
        })]
    })
    .into_iter()
    .flatten()
    .collect();

    // slope of mean queries-per-sample vs k decides the exit code
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &k in &args.k {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.param == k.to_string() && r.pass)
            .map(|r| r.estimate)
            .collect();
        if !vals.is_empty() {
            xs.push(k as f64);
            ys.push(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    write_report(&args.report.output, &rows)?;
    let slope = sqla::analysis::loglog_slope(&xs, &ys);
    eprintln!("queries-per-sample slope vs k: {slope:.4}");
    Ok(if (1.7..=2.3).contains(&slope) { 0 } else { 1 })
}

fn lowrank_trial(
    a: &DenseMatrix,
    sq: &Arc<SqMatrix>,
    params: &LowRankParams,
    tol_frac: f64,
    command: &'static str,
    param: String,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Row> {
    let start = Instant::now();
    let before = sq.total_stats();
    let desc = low_rank_approx(sq.clone(), params, rng)?;
    let counters = sq.total_stats().since(&before);
    let d = reconstruct_d_dense(a, &desc)?;
    let est = a.sub(&d)?.frobenius().powi(2);
    let tail = oracle::exact_low_rank_error(a, desc.rank())?;
    let fro_sq = a.frobenius().powi(2);
    let tol = tol_frac * fro_sq;
    Ok(Row {
        command,
        trial,
        param,
        component: desc.rank(),
        estimate: est,
        oracle: tail,
        abs_error: (est - tail).abs(),
        tolerance: tol,
        pass: est <= tail + tol,
        counters,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn cmd_lowrank(args: &LowrankArgs) -> Result<u8> {
    let a = io::load_matrix(&args.input)?;
    let sq = SqMatrix::build_matrix(&a)?;
    let mut params = LowRankParams::new(args.sigma, args.eps, args.delta);
    params.q_override = args.q;
    params.theta_constant = args.theta_constant;
    let rows = run_jobs(args.report.trials, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, trial);
        vec![lowrank_trial(
            &a,
            &sq,
            &params,
            args.tol_frac,
            "lowrank",
            String::new(),
            trial,
            &mut rng,
        )
        .unwrap_or_else(|e| {
            eprintln!("trial {trial}: {e}");
            Row::failed("lowrank", trial, String::new(), start.elapsed().as_secs_f64())
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn centroid_trial(
    inst: &CentroidInstance,
    truth: f64,
    eps: f64,
    delta: f64,
    command: &'static str,
    param: String,
    trial: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Row> {
    let start = Instant::now();
    let a = TensorA::new(inst);
    let b = sqla::centroid::TensorB::new(inst);
    let params = EstimatorParams::new((eps / (4.0 * inst.z())).min(0.999), delta)?;
    let before = a.stats().snapshot();
    let est = inner_product_estimate(&a, &b, &params, rng)?;
    let counters = a.stats().snapshot().since(&before);
    let err = (est - truth).abs();
    Ok(Row {
        command,
        trial,
        param,
        component: 0,
        estimate: est,
        oracle: truth,
        abs_error: err,
        tolerance: eps,
        pass: err <= eps,
        counters,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn cmd_centroid(args: &CentroidArgs) -> Result<u8> {
    let (v, u) = match (&args.input_v, &args.input_u) {
        (Some(pv), Some(pu)) => (io::load_matrix(pv)?, io::read_vector(pu)?),
        _ => {
            let (n, d) = match (args.n, args.d) {
                (Some(n), Some(d)) => (n, d),
                _ => {
                    return Err(SqError::Format(
                        "provide --n and --d, or --input-v and --input-u".into(),
                    ))
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(args.report.seed ^ 0xD15E);
            (
                synth::gaussian_matrix(n, d, &mut rng),
                synth::gaussian_vector(d, &mut rng),
            )
        }
    };
    let inst = CentroidInstance::new(
        SqMatrix::build_matrix(&v)?,
        Arc::new(SqVector::build_dense(&u)?),
    )?;
    let eps = args.eps.unwrap_or(args.eps_frac * inst.z());
    let truth = oracle::exact_centroid_distance(&v, &u)?;
    eprintln!("Z = {}, eps = {eps}", inst.z());
    let rows = run_jobs(args.report.trials, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, trial);
        vec![centroid_trial(
            &inst,
            truth,
            eps,
            args.delta,
            "centroid",
            String::new(),
            trial,
            &mut rng,
        )
        .unwrap_or_else(|e| {
            eprintln!("trial {trial}: {e}");
            Row::failed("centroid", trial, String::new(), start.elapsed().as_secs_f64())
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn cmd_pca(args: &PcaArgs) -> Result<u8> {
    let a = io::load_matrix(&args.input)?;
    let sq = SqMatrix::build_matrix(&a)?;
    let svd = oracle::exact_svd(&a)?;
    let fro_sq = a.frobenius().powi(2);
    let mut params = PcaParams::new(
        args.sigma,
        args.k,
        args.eta,
        args.eps_sigma,
        args.eps_v,
        args.delta,
    )?;
    params.q_override = args.q;
    params.theta_constant = args.theta_constant;
    for w in params.range_warnings() {
        eprintln!("warning: {w}");
    }
    let rows = run_jobs(args.report.trials, |trial| {
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, trial);
        let mut run = || -> Result<Vec<Row>> {
            let before = sq.total_stats();
            let res = pca(sq.clone(), &params, &mut rng)?;
            let counters = sq.total_stats().since(&before);
            let wall = start.elapsed().as_secs_f64();
            Ok(res
                .sigma_sq
                .iter()
                .enumerate()
                .map(|(i, &est)| {
                    let truth = svd.sigma[i] * svd.sigma[i];
                    let err = (est - truth).abs();
                    let tol = args.tol_frac * fro_sq;
                    Row {
                        command: "pca",
                        trial,
                        param: String::new(),
                        component: i + 1,
                        estimate: est,
                        oracle: truth,
                        abs_error: err,
                        tolerance: tol,
                        pass: err <= tol,
                        // counters cover the whole trial; repeated on each row
                        counters,
                        wall_time_s: wall,
                    }
                })
                .collect())
        };
        run().unwrap_or_else(|e| {
            eprintln!("trial {trial}: {e}");
            vec![Row::failed("pca", trial, String::new(), start.elapsed().as_secs_f64())]
        })
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn cmd_sweep_inner(args: &SweepInnerArgs) -> Result<u8> {
    if args.values.is_empty() {
        return Err(SqError::Format("--values needs at least one ε".into()));
    }
    let jobs: Vec<(f64, usize)> = args
        .values
        .iter()
        .flat_map(|&e| (0..args.report.trials).map(move |t| (e, t)))
        .collect();
    let rows = run_jobs(jobs.len(), |j| {
        let (eps, trial) = jobs[j];
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, j);
        let mut run = || -> Result<Row> {
            let params = EstimatorParams::new(eps, args.delta)?;
            let x = synth::gaussian_vector(args.dim, &mut rng);
            let y = synth::gaussian_vector(args.dim, &mut rng);
            let xs = SqVector::build_dense(&x)?;
            let before = xs.stats().snapshot();
            let est = inner_product_estimate(&xs, &y, &params, &mut rng)?;
            let counters = xs.stats().snapshot().since(&before);
            let truth = oracle::exact_dot(&x, &y)?;
            let tol = eps * dense::norm(&x) * dense::norm(&y);
            let err = (est - truth).abs();
            Ok(Row {
                command: "sweep-inner-eps",
                trial,
                param: eps.to_string(),
                component: 0,
                estimate: est,
                oracle: truth,
                abs_error: err,
                tolerance: tol,
                pass: err <= tol,
                counters,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        };
        vec![run().unwrap_or_else(|e| {
            eprintln!("eps={eps} trial {trial}: {e}");
            Row::failed("sweep-inner-eps", trial, eps.to_string(), start.elapsed().as_secs_f64())
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn cmd_sweep_lowrank(args: &SweepLowrankArgs) -> Result<u8> {
    if args.values.is_empty() {
        return Err(SqError::Format("--values needs at least one q".into()));
    }
    let a = io::load_matrix(&args.input)?;
    let sq = SqMatrix::build_matrix(&a)?;
    let jobs: Vec<(usize, usize)> = args
        .values
        .iter()
        .flat_map(|&q| (0..args.report.trials).map(move |t| (q, t)))
        .collect();
    let rows = run_jobs(jobs.len(), |j| {
        let (q, trial) = jobs[j];
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, j);
        let params = LowRankParams::new(args.sigma, args.eps, args.delta).with_q(q);
        vec![lowrank_trial(
            &a,
            &sq,
            &params,
            args.tol_frac,
            "sweep-lowrank-q",
            q.to_string(),
            trial,
            &mut rng,
        )
        .unwrap_or_else(|e| {
            eprintln!("q={q} trial {trial}: {e}");
            Row::failed("sweep-lowrank-q", trial, q.to_string(), start.elapsed().as_secs_f64())
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn cmd_sweep_centroid(args: &SweepCentroidArgs) -> Result<u8> {
    if args.values.is_empty() {
        return Err(SqError::Format("--values needs at least one scale".into()));
    }
    // one base instance, scaled per value so Z grows exactly as scale²
    let mut gen = ChaCha8Rng::seed_from_u64(args.report.seed ^ 0x5CA1E);
    let v0 = synth::gaussian_matrix(args.n, args.d, &mut gen);
    let u0 = synth::gaussian_vector(args.d, &mut gen);
    let jobs: Vec<(f64, usize)> = args
        .values
        .iter()
        .flat_map(|&s| (0..args.report.trials).map(move |t| (s, t)))
        .collect();
    let rows = run_jobs(jobs.len(), |j| {
        let (scale, trial) = jobs[j];
        let start = Instant::now();
        let mut rng = trial_rng(args.report.seed, j);
        let mut run = || -> Result<Row> {
            let v = v0.scale(scale);
            let u: Vec<f64> = u0.iter().map(|t| t * scale).collect();
            let inst = CentroidInstance::new(
                SqMatrix::build_matrix(&v)?,
                Arc::new(SqVector::build_dense(&u)?),
            )?;
            let truth = oracle::exact_centroid_distance(&v, &u)?;
            let mut row = centroid_trial(
                &inst,
                truth,
                args.eps,
                args.delta,
                "sweep-centroid-scale",
                inst.z().to_string(),
                trial,
                &mut rng,
            )?;
            row.wall_time_s = start.elapsed().as_secs_f64();
            Ok(row)
        };
        vec![run().unwrap_or_else(|e| {
            eprintln!("scale={scale} trial {trial}: {e}");
            Row::failed(
                "sweep-centroid-scale",
                trial,
                String::new(),
                start.elapsed().as_secs_f64(),
            )
        })]
    });
    finish(&args.report, rows.into_iter().flatten().collect())
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Inner(a) => cmd_inner(a),
        Command::Matvec(a) => cmd_matvec(a),
        Command::Lowrank(a) => cmd_lowrank(a),
        Command::Centroid(a) => cmd_centroid(a),
        Command::Pca(a) => cmd_pca(a),
        Command::Sweep(a) => match &a.target {
            SweepTarget::InnerEps(s) => cmd_sweep_inner(s),
            SweepTarget::LowrankQ(s) => cmd_sweep_lowrank(s),
            SweepTarget::CentroidScale(s) => cmd_sweep_centroid(s),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
