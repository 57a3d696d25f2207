//! `incprune`: solve POMDP files, compare update variants, simulate policies
//! and validate model files.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use incprune::model::parse_pomdp_unchecked;
use incprune::{
    dp_update, parse_pomdp, simulate, value_iterate, Belief, DenseSimplex, DpConfig, LpMode,
    PomdpModel, SolveConfig, Variant, VectorSet,
};
use rayon::prelude::*;

use report::{model_digest, Row, RunReport};

const EXIT_MAX_ITERS: u8 = 2;
const EXIT_DISAGREEMENT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "incprune",
    version,
    about = "Exact POMDP value iteration by incremental pruning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Shared {
    /// Update variant: exhaustive, plain, rr or improved.
    #[arg(long, global = true, default_value = "improved")]
    variant: Variant,
    /// LP shape in the neighbor-restricted cross sum: full, reduced or reformulated.
    #[arg(long, global = true, default_value = "reformulated")]
    lp_mode: LpMode,
    /// Bellman-residual threshold for convergence.
    #[arg(long, global = true, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, global = true, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for simulation (0 picks the number of cores).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    output: PathBuf,
    /// Run one incremental-pruning pass per action even when observation tables agree.
    #[arg(long, global = true)]
    no_ip_reduction: bool,
    /// Add a wall-time column to reports.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run value iteration; writes value.alpha and report.csv.
    Solve { model: PathBuf },
    /// Run several variants for the same number of iterations; writes compare.csv.
    Compare {
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        /// Comma-separated variant list.
        #[arg(long, value_delimiter = ',', default_value = "plain,rr,improved")]
        variants: Vec<Variant>,
    },
    /// Simulate the greedy policy of an alpha file; writes episodes.csv.
    Simulate {
        model: PathBuf,
        alpha: PathBuf,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
    },
    /// Parse a model file and list every invariant violation.
    Validate { model: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let s = &cli.shared;
    match &cli.command {
        Command::Solve { model } => cmd_solve(model, s),
        Command::Compare {
            model,
            iterations,
            variants,
        } => cmd_compare(model, *iterations, variants, s),
        Command::Simulate {
            model,
            alpha,
            episodes,
            horizon,
        } => cmd_simulate(model, alpha, *episodes, *horizon, s),
        Command::Validate { model } => cmd_validate(model),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_model(path: &Path) -> Result<(PomdpModel, String)> {
    let text = read(path)?;
    let model = parse_pomdp(&text).with_context(|| format!("{}", path.display()))?;
    Ok((model, model_digest(&text)))
}

fn dp_config(variant: Variant, s: &Shared) -> DpConfig {
    DpConfig {
        variant,
        lp_mode: s.lp_mode,
        use_ip_reduction: !s.no_ip_reduction,
        ..Default::default()
    }
}

fn output_dir(s: &Shared) -> Result<&Path> {
    std::fs::create_dir_all(&s.output)
        .with_context(|| format!("cannot create {}", s.output.display()))?;
    Ok(&s.output)
}

fn cmd_solve(path: &Path, s: &Shared) -> Result<u8> {
    let (model, digest) = load_model(path)?;
    let cfg = SolveConfig {
        epsilon: s.epsilon,
        max_iterations: s.max_iters,
        dp: dp_config(s.variant, s),
    };
    let result = value_iterate(&model, &cfg, &DenseSimplex::default())?;
    let rows = result
        .per_iteration_stats
        .iter()
        .zip(&result.residual_history)
        .enumerate()
        .map(|(t, (stats, r))| Row::new(s.variant.name(), t + 1, stats, Some(*r)))
        .collect();
    let dir = output_dir(s)?;
    let alpha_path = dir.join("value.alpha");
    std::fs::write(&alpha_path, result.value_function.to_alpha_string())
        .with_context(|| format!("cannot write {}", alpha_path.display()))?;
    RunReport {
        digest,
        rows,
        timings: s.timings,
    }
    .save(&dir.join("report.csv"))?;
    let last = result.residual_history.last().copied().unwrap_or(f64::NAN);
    println!(
        "{} after {} iterations: {} vectors, residual {last:.9}",
        if result.converged {
            "converged"
        } else {
            "stopped"
        },
        result.iterations_run,
        result.value_function.len()
    );
    Ok(if result.converged { 0 } else { EXIT_MAX_ITERS })
}

fn cmd_compare(path: &Path, iterations: usize, variants: &[Variant], s: &Shared) -> Result<u8> {
    if iterations == 0 {
        bail!("--iterations must be at least 1");
    }
    if variants.is_empty() {
        bail!("no variants given");
    }
    let (model, digest) = load_model(path)?;
    let lp = DenseSimplex::default();
    let mut rows = Vec::new();
    let mut counts: Vec<Vec<usize>> = Vec::new();
    for &variant in variants {
        let cfg = dp_config(variant, s);
        let mut v = VectorSet::zero(model.num_states());
        let mut sizes = Vec::with_capacity(iterations);
        let mut total_lps = 0;
        for t in 0..iterations {
            let (next, stats) = dp_update(&v, &model, &cfg, &lp)
                .with_context(|| format!("{variant} iteration {}", t + 1))?;
            total_lps += stats.total_lps();
            sizes.push(next.len());
            rows.push(Row::new(variant.name(), t + 1, &stats, None));
            v = next;
        }
        println!("{variant}: {total_lps} LPs, final size {}", v.len());
        counts.push(sizes);
    }
    RunReport {
        digest,
        rows,
        timings: s.timings,
    }
    .save(&output_dir(s)?.join("compare.csv"))?;
    if let Some((k, t)) = first_disagreement(&counts) {
        eprintln!(
            "error: {} and {} disagree at iteration {}: {} vs {} vectors",
            variants[0],
            variants[k],
            t + 1,
            counts[0][t],
            counts[k][t]
        );
        return Ok(EXIT_DISAGREEMENT);
    }
    Ok(0)
}

/// First (variant, iteration) whose vector count differs from the first variant's.
fn first_disagreement(counts: &[Vec<usize>]) -> Option<(usize, usize)> {
    counts.iter().enumerate().skip(1).find_map(|(k, sizes)| {
        sizes
            .iter()
            .zip(&counts[0])
            .position(|(a, b)| a != b)
            .map(|t| (k, t))
    })
}

fn cmd_simulate(
    path: &Path,
    alpha: &Path,
    episodes: usize,
    horizon: usize,
    s: &Shared,
) -> Result<u8> {
    if episodes == 0 {
        bail!("--episodes must be at least 1");
    }
    let (model, _) = load_model(path)?;
    let v =
        VectorSet::parse_alpha(&read(alpha)?).with_context(|| format!("{}", alpha.display()))?;
    if v.dim() != model.num_states() {
        bail!(
            "alpha vectors have {} entries but the model has {} states",
            v.dim(),
            model.num_states()
        );
    }
    let b0 = match model.start() {
        Some(p) => Belief::new(p.to_vec())?,
        None => Belief::uniform(model.num_states()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(s.threads)
        .build()?;
    // Episode i uses seed + i, so results do not depend on the thread count.
    let returns: Vec<f64> = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|i| {
                simulate(&model, &v, &b0, horizon, s.seed.wrapping_add(i as u64))
                    .map(|e| e.discounted_return)
            })
            .collect::<incprune::Result<Vec<f64>>>()
    })?;
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let stderr = if returns.len() > 1 {
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let mut w = csv::Writer::from_path(output_dir(s)?.join("episodes.csv"))?;
    w.write_record(["episode", "seed", "discounted_return"])?;
    for (i, r) in returns.iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.seed.wrapping_add(i as u64).to_string(),
            format!("{r:.9}"),
        ])?;
    }
    w.flush()?;
    println!(
        "episodes {episodes} mean {mean:.6} stderr {stderr:.6} value {:.6}",
        v.max_value(b0.as_slice())
    );
    Ok(0)
}

fn cmd_validate(path: &Path) -> Result<u8> {
    let model =
        parse_pomdp_unchecked(&read(path)?).with_context(|| format!("{}", path.display()))?;
    let violations = model.violations();
    if violations.is_empty() {
        println!(
            "ok: {} states, {} actions, {} observations",
            model.num_states(),
            model.num_actions(),
            model.num_observations()
        );
        return Ok(0);
    }
    for v in &violations {
        println!("violation: {v}");
    }
    Ok(1)
}

#[cfg(test)]
mod tests {
    use super::first_disagreement;

    #[test]
    fn disagreement_is_located() {
        assert_eq!(first_disagreement(&[vec![3, 5], vec![3, 5]]), None);
        assert_eq!(
            first_disagreement(&[vec![3, 5, 9], vec![3, 5, 9], vec![3, 6, 9]]),
            Some((2, 1))
        );
    }
}
