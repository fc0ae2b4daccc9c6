//! Implementations of the pipeline subcommands.

use crate::manifest::write_manifest;
use fold::delta::estimate_delta;
use fold::error::{FoldError, Result};
use fold::gibbs::{run_gibbs, ChainConfig, GmmPrior, PosteriorSamples};
use fold::loss::risk_report;
use fold::optimize::GreedyConfig;
use fold::partition::{adjusted_rand_index, Clustering};
use fold::pipeline::{binder_point_estimate, fold_point_estimate, vi_point_estimate, OmegaMode};
use fold::rng::child_seed;
use fold::simgen::ScenarioSpec;
use fold::tuning::{elbow_curve, write_elbow_csv};
use fold::uq::{credible_ball, fold_psm, per_draw_minimizers, PartitionMetric};
use fold::Dataset;
use rayon::prelude::*;
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn write_labels(path: &Path, c: &Clustering) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "label")?;
    for &l in c.labels() {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Clustering> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| FoldError::Parse("empty labels file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = if cols.len() == 1 {
        0
    } else {
        cols.iter()
            .position(|&c| c == "label")
            .ok_or_else(|| FoldError::Parse("no 'label' column".into()))?
    };
    let labels: Result<Vec<usize>> = lines
        .map(|line| {
            line.split(',')
                .nth(col)
                .ok_or_else(|| FoldError::Parse("short row in labels file".into()))?
                .trim()
                .parse::<usize>()
                .map_err(|_| FoldError::Parse("bad label".into()))
        })
        .collect();
    Clustering::canonicalize(&labels?)
}

fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || max <= min || points < 2 {
        return Err(FoldError::InvalidParam(
            "grid needs 0 < min < max and at least 2 points".into(),
        ));
    }
    let ratio = (max / min).ln();
    Ok((0..points)
        .map(|i| min * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect())
}

fn resolve_omega_mode(mode: &str, omega: Option<f64>) -> Result<OmegaMode> {
    match mode {
        "avg" => Ok(OmegaMode::Average),
        "fixed" => {
            let w = omega.ok_or_else(|| {
                FoldError::InvalidParam("--omega is required with --omega-mode fixed".into())
            })?;
            Ok(OmegaMode::Fixed(w))
        }
        other => Err(FoldError::InvalidParam(format!(
            "unknown omega mode '{other}'"
        ))),
    }
}

pub fn simulate(
    scenario: &str,
    n: usize,
    seed: u64,
    out: &Path,
    noise_sd: Option<f64>,
) -> Result<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let mut spec = ScenarioSpec::by_name(scenario)?;
    if let Some(sd) = noise_sd {
        spec = match spec {
            ScenarioSpec::Moons { .. } => ScenarioSpec::Moons { noise_sd: sd },
            ScenarioSpec::Spirals { .. } => ScenarioSpec::Spirals { noise_sd: sd },
            other => other,
        };
    }
    let labeled = spec.generate(n, seed)?;
    labeled.write_csv(&out.join("data.csv"))?;
    spec.write_json(&out.join("spec.json"))?;
    write_manifest(
        out,
        "simulate",
        seed,
        json!({"scenario": spec, "n": n}),
        &["data.csv", "spec.json"],
        start.elapsed().as_secs_f64(),
    )?;
    println!("wrote {} observations to {}", labeled.n(), out.display());
    Ok(())
}

pub struct FitArgs {
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub nu: Option<f64>,
    pub psi_scale: f64,
    pub location_cov_scale: Option<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub standardize: bool,
}

pub fn fit(args: FitArgs) -> Result<()> {
    let start = Instant::now();
    ensure_dir(&args.out)?;
    let (data, _labels) = Dataset::read_csv(&args.data)?;
    let data = if args.standardize { data.standardized() } else { data };
    let p = data.p();
    let ident = |scale: f64| -> Vec<Vec<f64>> {
        (0..p)
            .map(|i| (0..p).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let prior = GmmPrior {
        k: args.k,
        alpha: args.alpha,
        niw_mu: vec![0.0; p],
        niw_kappa: args.kappa,
        niw_nu: args.nu.unwrap_or(p as f64 + 2.0),
        niw_psi: ident(args.psi_scale),
        fixed_cov: args.location_cov_scale.map(ident),
    };
    let chain = ChainConfig {
        iterations: args.iterations,
        burn_in: args.burn_in,
        thin: args.thin,
        seed: args.seed,
    };
    let samples = run_gibbs(&data, &prior, &chain)?;
    samples.write_binary(&args.out.join("draws.bin"))?;
    write_manifest(
        &args.out,
        "fit",
        args.seed,
        json!({
            "data": args.data.display().to_string(),
            "n": data.n(),
            "p": p,
            "prior": prior,
            "chain": chain,
            "standardize": args.standardize,
            "retained": samples.t(),
        }),
        &["draws.bin"],
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "retained {} draws (n = {}, p = {}, K = {})",
        samples.t(),
        data.n(),
        p,
        args.k
    );
    Ok(())
}

pub struct ClusterArgs {
    pub draws: PathBuf,
    pub out: PathBuf,
    pub omega_mode: String,
    pub omega: Option<f64>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub compare: bool,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

pub fn cluster(args: ClusterArgs) -> Result<()> {
    let start = Instant::now();
    ensure_dir(&args.out)?;
    let samples = PosteriorSamples::read_binary(&args.draws)?;
    let delta = estimate_delta(&samples)?;
    delta.write_csv(&args.out.join("delta.csv"))?;
    delta.write_binary(&args.out.join("delta.bin"))?;

    let mode = match args.omega_mode.as_str() {
        "elbow" => {
            let grid = log_grid(args.grid_min, args.grid_max, args.grid_points)?;
            let curve = elbow_curve(&delta, &grid)?;
            write_elbow_csv(&curve, &args.out.join("elbow.csv"))?;
            match args.omega {
                Some(w) => OmegaMode::Fixed(w),
                None => {
                    return Err(FoldError::InvalidParam(
                        "elbow curve written to elbow.csv; inspect it and rerun with an explicit --omega"
                            .into(),
                    ))
                }
            }
        }
        other => resolve_omega_mode(other, args.omega)?,
    };
    let params = mode.resolve(&delta)?;
    let greedy = GreedyConfig {
        restarts: args.restarts,
        max_sweeps: args.max_sweeps,
        seed: args.seed,
    };
    let c_fold = fold_point_estimate(&delta, &params, &greedy)?;
    write_labels(&args.out.join("labels.csv"), &c_fold)?;
    let report = risk_report(&c_fold, &delta, &params)?;
    std::fs::write(
        args.out.join("risk_report.json"),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;

    let mut outputs = vec![
        "delta.csv",
        "delta.bin",
        "labels.csv",
        "risk_report.json",
    ];
    if args.omega_mode == "elbow" {
        outputs.push("elbow.csv");
    }
    if args.compare {
        let c_b = binder_point_estimate(&samples, &greedy)?;
        write_labels(&args.out.join("binder_labels.csv"), &c_b)?;
        let c_vi = vi_point_estimate(&samples)?;
        write_labels(&args.out.join("vi_labels.csv"), &c_vi)?;
        outputs.push("binder_labels.csv");
        outputs.push("vi_labels.csv");
    }
    write_manifest(
        &args.out,
        "cluster",
        args.seed,
        json!({
            "draws": args.draws.display().to_string(),
            "omega_mode": args.omega_mode,
            "omega": params.omega(),
            "gamma": params.gamma(),
            "restarts": args.restarts,
            "max_sweeps": args.max_sweeps,
            "compare": args.compare,
        }),
        &outputs,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "point estimate: {} clusters, risk {:.6} at omega {:.6}",
        c_fold.k(),
        report.risk,
        params.omega()
    );
    Ok(())
}

pub fn elbow(draws: &Path, out: &Path, grid_min: f64, grid_max: f64, grid_points: usize) -> Result<()> {
    let start = Instant::now();
    ensure_dir(out)?;
    let samples = PosteriorSamples::read_binary(draws)?;
    let delta = estimate_delta(&samples)?;
    let grid = log_grid(grid_min, grid_max, grid_points)?;
    let curve = elbow_curve(&delta, &grid)?;
    write_elbow_csv(&curve, &out.join("elbow.csv"))?;
    write_manifest(
        out,
        "elbow",
        0,
        json!({
            "draws": draws.display().to_string(),
            "grid_min": grid_min,
            "grid_max": grid_max,
            "grid_points": grid_points,
        }),
        &["elbow.csv"],
        start.elapsed().as_secs_f64(),
    )?;
    println!("elbow curve with {} points written", curve.len());
    Ok(())
}

pub struct UqArgs {
    pub draws: PathBuf,
    pub center: PathBuf,
    pub out: PathBuf,
    pub level: f64,
    pub metric: String,
    pub omega_mode: String,
    pub omega: Option<f64>,
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
    pub write_minimizers: bool,
}

pub fn uq(args: UqArgs) -> Result<()> {
    let start = Instant::now();
    ensure_dir(&args.out)?;
    let samples = PosteriorSamples::read_binary(&args.draws)?;
    let center = read_labels(&args.center)?;
    if center.n() != samples.n() {
        return Err(FoldError::LengthMismatch {
            left: center.n(),
            right: samples.n(),
        });
    }
    let metric: PartitionMetric = args.metric.parse()?;
    let mode = resolve_omega_mode(&args.omega_mode, args.omega)?;
    let params = match mode {
        OmegaMode::Average => mode.resolve(&estimate_delta(&samples)?)?,
        OmegaMode::Fixed(_) => mode.resolve(&fold::DeltaMatrix::zeros(samples.n()))?,
    };
    let greedy = GreedyConfig {
        restarts: args.restarts,
        max_sweeps: args.max_sweeps,
        seed: args.seed,
    };
    let minimizers = per_draw_minimizers(&samples, &params, &greedy)?;
    let ball = credible_ball(&center, &minimizers, args.level, metric)?;
    ball.write_json(&args.out.join("ball.json"))?;
    let psm = fold_psm(&minimizers)?;
    psm.write_csv(&args.out.join("psm.csv"))?;
    psm.write_binary(&args.out.join("psm.bin"))?;
    let mut outputs = vec!["ball.json", "psm.csv", "psm.bin"];
    if args.write_minimizers {
        let mut out = std::io::BufWriter::new(std::fs::File::create(
            args.out.join("minimizers.csv"),
        )?);
        for c in &minimizers {
            let row: Vec<String> = c.labels().iter().map(|l| l.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        outputs.push("minimizers.csv");
    }
    write_manifest(
        &args.out,
        "uq",
        args.seed,
        json!({
            "draws": args.draws.display().to_string(),
            "center": args.center.display().to_string(),
            "level": args.level,
            "metric": args.metric,
            "omega": params.omega(),
            "restarts": args.restarts,
        }),
        &outputs,
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "credible ball radius {:.6} ({} draws, level {})",
        ball.radius,
        minimizers.len(),
        args.level
    );
    Ok(())
}

pub struct ReplicateArgs {
    pub scenario: String,
    pub n: String,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub methods: String,
    pub k: usize,
    pub alpha: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub restarts: usize,
    pub no_standardize: bool,
}

fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| FoldError::Parse(format!("bad sample size '{t}'")))
        })
        .collect()
}

pub fn replicate(args: ReplicateArgs) -> Result<()> {
    let start = Instant::now();
    ensure_dir(&args.out)?;
    let n_list = parse_n_list(&args.n)?;
    let methods: Vec<String> = args
        .methods
        .split(',')
        .map(|m| m.trim().to_string())
        .collect();
    for m in &methods {
        if !["fold", "binder", "vi"].contains(&m.as_str()) {
            return Err(FoldError::InvalidParam(format!("unknown method '{m}'")));
        }
    }
    let spec = ScenarioSpec::by_name(&args.scenario)?;
    if args.reps == 0 {
        return Err(FoldError::InvalidParam("reps must be >= 1".into()));
    }

    let jobs: Vec<(usize, usize)> = n_list
        .iter()
        .flat_map(|&n| (0..args.reps).map(move |r| (n, r)))
        .collect();
    let rows: Vec<Vec<(usize, usize, String, f64, usize)>> = jobs
        .par_iter()
        .map(|&(n, rep)| -> Result<Vec<(usize, usize, String, f64, usize)>> {
            let rep_seed = child_seed(args.seed, (n as u64) << 20 | rep as u64);
            let labeled = spec.generate(n, rep_seed)?;
            let raw = labeled.dataset()?;
            let data = if args.no_standardize { raw } else { raw.standardized() };
            let truth = labeled.truth_clustering()?;
            let prior = GmmPrior {
                k: args.k,
                alpha: args.alpha,
                ..GmmPrior::benchmark_default(data.p())
            };
            let chain = ChainConfig {
                iterations: args.iterations,
                burn_in: args.burn_in,
                thin: args.thin,
                seed: child_seed(rep_seed, 1),
            };
            let samples = run_gibbs(&data, &prior, &chain)?;
            let greedy = GreedyConfig {
                restarts: args.restarts,
                max_sweeps: 100,
                seed: child_seed(rep_seed, 2),
            };
            let mut out = Vec::new();
            for method in &methods {
                let c = match method.as_str() {
                    "fold" => {
                        let delta = estimate_delta(&samples)?;
                        let params = OmegaMode::Average.resolve(&delta)?;
                        fold_point_estimate(&delta, &params, &greedy)?
                    }
                    "binder" => binder_point_estimate(&samples, &greedy)?,
                    _ => vi_point_estimate(&samples)?,
                };
                let ari = adjusted_rand_index(&c, &truth)?;
                out.push((n, rep, method.clone(), ari, c.k()));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut flat: Vec<(usize, usize, String, f64, usize)> =
        rows.into_iter().flatten().collect();
    flat.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));

    let mut per_rep = std::io::BufWriter::new(std::fs::File::create(
        args.out.join("per_replication.csv"),
    )?);
    writeln!(per_rep, "scenario,n,rep,method,ari,k")?;
    for (n, rep, method, ari, k) in &flat {
        writeln!(per_rep, "{},{},{},{},{},{}", args.scenario, n, rep, method, ari, k)?;
    }
    drop(per_rep);

    let mut summary = std::io::BufWriter::new(std::fs::File::create(args.out.join("results.csv"))?);
    writeln!(summary, "scenario,n,method,mean_ari,sd_ari,mean_k,sd_k,reps")?;
    for &n in &n_list {
        for method in &methods {
            let vals: Vec<&(usize, usize, String, f64, usize)> = flat
                .iter()
                .filter(|(vn, _, vm, _, _)| *vn == n && vm == method)
                .collect();
            let r = vals.len() as f64;
            let mean_ari = vals.iter().map(|v| v.3).sum::<f64>() / r;
            let mean_k = vals.iter().map(|v| v.4 as f64).sum::<f64>() / r;
            let sd = |mean: f64, xs: Vec<f64>| {
                if xs.len() < 2 {
                    0.0
                } else {
                    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                        / (xs.len() as f64 - 1.0))
                        .sqrt()
                }
            };
            let sd_ari = sd(mean_ari, vals.iter().map(|v| v.3).collect());
            let sd_k = sd(mean_k, vals.iter().map(|v| v.4 as f64).collect());
            writeln!(
                summary,
                "{},{},{},{},{},{},{},{}",
                args.scenario, n, method, mean_ari, sd_ari, mean_k, sd_k, vals.len()
            )?;
        }
    }
    drop(summary);

    write_manifest(
        &args.out,
        "replicate",
        args.seed,
        json!({
            "scenario": args.scenario,
            "n": n_list,
            "reps": args.reps,
            "methods": methods,
            "k": args.k,
            "alpha": args.alpha,
            "iterations": args.iterations,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "restarts": args.restarts,
            "standardize": !args.no_standardize,
        }),
        &["per_replication.csv", "results.csv"],
        start.elapsed().as_secs_f64(),
    )?;
    println!(
        "replicated {} x {} over n = {:?}",
        args.reps,
        methods.join("/"),
        n_list
    );
    Ok(())
}

pub struct OracleValidateArgs {
    pub n: String,
    pub seeds: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub restarts: usize,
}

pub fn oracle_validate(args: OracleValidateArgs) -> Result<()> {
    let start = Instant::now();
    ensure_dir(&args.out)?;
    let n_grid = parse_n_list(&args.n)?;
    if args.seeds == 0 {
        return Err(FoldError::InvalidParam("seeds must be >= 1".into()));
    }
    let cfg = fold::oracle::ConvergenceConfig {
        n_grid: n_grid.clone(),
        seeds: (0..args.seeds as u64)
            .map(|i| child_seed(args.seed, i))
            .collect(),
        iterations: args.iterations,
        burn_in: args.burn_in,
        thin: args.thin,
        restarts: args.restarts,
    };
    let report = fold::oracle::validate_convergence(&cfg)?;
    report.write_csv(&args.out.join("convergence.csv"))?;
    let mut summary = std::io::BufWriter::new(std::fs::File::create(args.out.join("summary.csv"))?);
    writeln!(summary, "n,mean_gap,mean_ari_fold_vs_oracle")?;
    for &n in &n_grid {
        writeln!(summary, "{},{},{}", n, report.mean_gap(n), report.mean_ari(n))?;
    }
    drop(summary);
    write_manifest(
        &args.out,
        "oracle-validate",
        args.seed,
        json!({
            "n": n_grid,
            "seeds": args.seeds,
            "iterations": args.iterations,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "restarts": args.restarts,
        }),
        &["convergence.csv", "summary.csv"],
        start.elapsed().as_secs_f64(),
    )?;
    for &n in &n_grid {
        println!(
            "n = {n}: mean normalized gap {:.6}, mean ARI(fold, oracle) {:.4}",
            report.mean_gap(n),
            report.mean_ari(n)
        );
    }
    Ok(())
}
