use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use branchsurv::coop::{
    self, coop_certificate_search, coop_survival_mc, critical_q, h_exact, h_polynomial,
    EstimationMethod, JointBudget,
};
use branchsurv::galton_watson::{
    certificate_search, exact_law_at, extinction_probability, simulate_batch,
    survival_lower_bound, ExactBudget, SimulationConfig,
};
use branchsurv::phase::{
    critical_overlay, export_csv, render_heatmap, sweep, Estimator, ImageFormat, SweepConfig,
    DEFAULT_GRID_STEP, FULL_GRID_STEP,
};
use branchsurv::{CoopParams, Error, OffspringLaw};

const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "branchsurv", version, about = "Galton-Watson and cooperative chain survival toolkit")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Galton-Watson chain with Binomial(2, q) offspring
    #[command(subcommand)]
    Gw(GwCommand),
    /// Cooperative two-species chain
    #[command(subcommand)]
    Coop(CoopCommand),
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "BRANCHSURV_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand)]
enum GwCommand {
    /// Monte Carlo survival frequency
    Simulate {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        initial: u64,
        #[arg(long, default_value_t = 1000)]
        horizon: u32,
        #[arg(long, default_value_t = 1_000_000)]
        threshold: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Extinction probability from the generating-function fixed point
    Extinction {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Exact law of the population after some steps, as `value,prob` CSV
    Law {
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1)]
        initial: u64,
        #[arg(long)]
        steps: u32,
    },
    /// First block with P^N(Y_T >= 2N) > 1/2
    Certificate {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        nmax: u64,
        #[arg(long)]
        tmax: u32,
    },
    /// Product lower bound on the survival probability
    Bound {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        a: f64,
        #[arg(long = "m-trunc")]
        m_trunc: u64,
        #[arg(long)]
        initial: u64,
        #[arg(long, default_value_t = 10_000)]
        terms: u32,
    },
}

#[derive(Subcommand)]
enum CoopCommand {
    /// Expected minimum after one step from (1, 1)
    H {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, conflicts_with = "enumerate")]
        polynomial: bool,
        #[arg(long)]
        enumerate: bool,
    },
    /// Monte Carlo survival estimate from (1, 1)
    Survive {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = coop::DEFAULT_TRIALS)]
        trials: u64,
        #[arg(long, default_value_t = coop::DEFAULT_EXPLOSION_THRESHOLD)]
        threshold: u64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// First block with E[floor(Z_T / N)] > 1
    Certificate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        nmax: u64,
        #[arg(long)]
        tmax: u32,
        /// Estimate by Monte Carlo instead of the exact joint law
        #[arg(long = "mc-trials")]
        mc_trials: Option<u64>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Root of h(p, q) = 1 in q
    CriticalQ {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = coop::DEFAULT_BISECTION_TOL)]
        tol: f64,
    },
    /// Sweep the (p, q) square
    Phase(PhaseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Ppm,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Mc,
    Coupled,
    H,
}

#[derive(Args)]
struct PhaseArgs {
    #[arg(long)]
    step: Option<f64>,
    /// Use the full-resolution grid step
    #[arg(long = "paper-scale")]
    full_scale: bool,
    #[arg(long, default_value_t = coop::DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = coop::DEFAULT_EXPLOSION_THRESHOLD)]
    threshold: u64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value = "mc")]
    estimator: EstimatorArg,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    heatmap: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ppm")]
    format: FormatArg,
    #[arg(long = "overlay-critical")]
    overlay_critical: bool,
    /// Pixels per grid cell
    #[arg(long, default_value_t = 1)]
    scale: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Only fails if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }
    match run(cli.command, cli.jobs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget() { 3 } else { 2 })
        }
    }
}

fn run(command: Command, jobs: Option<usize>) -> Result<(), Error> {
    match command {
        Command::Gw(cmd) => run_gw(cmd),
        Command::Coop(cmd) => run_coop(cmd, jobs),
    }
}

fn run_gw(cmd: GwCommand) -> Result<(), Error> {
    match cmd {
        GwCommand::Simulate {
            q,
            initial,
            horizon,
            threshold,
            trials,
            seed: SeedArg { seed },
        } => {
            println!(
                "# gw simulate q={q} initial={initial} horizon={horizon} threshold={threshold} trials={trials} seed={seed}"
            );
            if trials == 0 {
                return Err(Error::Precondition("need at least one trial".into()));
            }
            let law = OffspringLaw::binomial(2, q)?;
            let config = SimulationConfig {
                horizon,
                explosion_threshold: threshold,
                record_trajectory: false,
            };
            let s = simulate_batch(initial, &law, &config, trials, seed);
            println!("extinct={}", s.extinct);
            println!("exploded={}", s.exploded);
            println!("survived_horizon={}", s.survived_horizon);
            println!("survival_frequency={}", s.survival_frequency());
            println!("standard_error={}", s.standard_error());
        }
        GwCommand::Extinction { q, tol } => {
            println!("# gw extinction q={q} tol={tol:e} seed=none");
            let law = OffspringLaw::binomial(2, q)?;
            let s = extinction_probability(&law, tol)?;
            println!("fertility={}", law.fertility());
            println!("extinction={s}");
            println!("survival={}", 1.0 - s);
        }
        GwCommand::Law { q, initial, steps } => {
            println!("# gw law q={q} initial={initial} steps={steps} seed=none");
            let law = OffspringLaw::binomial(2, q)?;
            let dist = exact_law_at(initial, &law, steps, &ExactBudget::default())?;
            println!("value,prob");
            for (v, p) in dist.iter() {
                println!("{v},{p}");
            }
            println!("# truncation_loss={}", dist.truncation_loss());
        }
        GwCommand::Certificate { q, nmax, tmax } => {
            println!("# gw certificate q={q} nmax={nmax} tmax={tmax} seed=none");
            let law = OffspringLaw::binomial(2, q)?;
            match certificate_search(&law, nmax, tmax, &ExactBudget::default())? {
                Some(c) => println!(
                    "N={} T={} value={} threshold={}",
                    c.block_size(),
                    c.block_time(),
                    c.value(),
                    c.threshold()
                ),
                None => println!("certificate=none"),
            }
        }
        GwCommand::Bound {
            q,
            a,
            m_trunc,
            initial,
            terms,
        } => {
            println!("# gw bound q={q} a={a} m_trunc={m_trunc} initial={initial} terms={terms} seed=none");
            let law = OffspringLaw::binomial(2, q)?;
            let b = survival_lower_bound(&law, a, m_trunc, initial, terms)?;
            println!("truncated_mean={}", b.truncated_mean);
            println!("truncated_variance={}", b.truncated_variance);
            println!("c={}", b.c);
            println!("partial_product={}", b.partial_product);
            println!("omitted_sum={}", b.omitted_sum);
            println!("bound={}", b.bound);
        }
    }
    Ok(())
}

fn run_coop(cmd: CoopCommand, jobs: Option<usize>) -> Result<(), Error> {
    match cmd {
        CoopCommand::H {
            p,
            q,
            polynomial: _,
            enumerate,
        } => {
            let method = if enumerate { "enumerate" } else { "polynomial" };
            println!("# coop h p={p} q={q} method={method} seed=none");
            let params = CoopParams::new(p, q)?;
            let h = if enumerate {
                h_exact(&params)
            } else {
                h_polynomial(&params)
            };
            println!("h={h}");
        }
        CoopCommand::Survive {
            p,
            q,
            trials,
            threshold,
            seed: SeedArg { seed },
        } => {
            println!("# coop survive p={p} q={q} trials={trials} threshold={threshold} seed={seed}");
            let e = coop_survival_mc(&CoopParams::new(p, q)?, trials, threshold, seed)?;
            println!("successes={}", e.successes);
            println!("estimate={}", e.estimate);
            println!("ci99_low={}", e.ci99_low);
            println!("ci99_high={}", e.ci99_high);
        }
        CoopCommand::Certificate {
            p,
            q,
            nmax,
            tmax,
            mc_trials,
            seed: SeedArg { seed },
        } => {
            let method = match mc_trials {
                Some(trials) => {
                    println!(
                        "# coop certificate p={p} q={q} nmax={nmax} tmax={tmax} mc_trials={trials} seed={seed}"
                    );
                    EstimationMethod::MonteCarlo { trials, seed }
                }
                None => {
                    println!("# coop certificate p={p} q={q} nmax={nmax} tmax={tmax} method=exact seed=none");
                    EstimationMethod::Exact(JointBudget::default())
                }
            };
            match coop_certificate_search(&CoopParams::new(p, q)?, nmax, tmax, &method)? {
                Some(c) => println!(
                    "N={} T={} value={} threshold={}",
                    c.block_size(),
                    c.block_time(),
                    c.value(),
                    c.threshold()
                ),
                None => println!("certificate=none"),
            }
        }
        CoopCommand::CriticalQ { p, tol } => {
            println!("# coop critical-q p={p} tol={tol:e} seed=none");
            let c = critical_q(p, tol)?;
            println!("q={}", c.q);
            println!("bracket={}", c.bracket);
            println!("residual={}", c.residual);
        }
        CoopCommand::Phase(args) => run_phase(args, jobs)?,
    }
    Ok(())
}

fn run_phase(args: PhaseArgs, jobs: Option<usize>) -> Result<(), Error> {
    let step = args.step.unwrap_or(if args.full_scale {
        FULL_GRID_STEP
    } else {
        DEFAULT_GRID_STEP
    });
    let estimator = match args.estimator {
        EstimatorArg::Mc => Estimator::McSurvival,
        EstimatorArg::Coupled => Estimator::CoupledMcSurvival,
        EstimatorArg::H => Estimator::HIndicator,
    };
    let seed = args.seed.seed;
    println!(
        "# coop phase step={step} trials={} threshold={} estimator={} seed={seed}",
        args.trials,
        args.threshold,
        estimator.name()
    );
    let grid = sweep(&SweepConfig {
        p_range: (0.0, 1.0),
        q_range: (0.0, 1.0),
        step,
        trials: args.trials,
        explosion_threshold: args.threshold,
        seed,
        estimator,
        jobs,
    })?;
    println!("rows={}", grid.p_axis().len());
    println!("cols={}", grid.q_axis().len());
    if let Some(path) = &args.csv {
        export_csv(&grid, path)?;
        println!("csv={}", path.display());
    }
    if let Some(path) = &args.heatmap {
        let overlay = args.overlay_critical.then(|| critical_overlay(&grid));
        let format = match args.format {
            FormatArg::Ppm => ImageFormat::Ppm,
            FormatArg::Svg => ImageFormat::Svg,
        };
        render_heatmap(&grid, path, overlay.as_deref(), format, args.scale)?;
        println!("heatmap={}", path.display());
    }
    Ok(())
}
