//! `ips-genealogy` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when a computation
//! is numerically infeasible (for example a Monte Carlo run with no
//! conditioned hits).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use ips_genealogy::counterexample::{
    brute_force_conditional, counterexample_report, exact_conditional, limit_diagnostics,
    mc_conditional,
};
use ips_genealogy::coupling::{independence_test, mismatch_rates};
use ips_genealogy::formats::{self, fmt17, parse_usize_list};
use ips_genealogy::genealogy::{brute_force_transition, mohle_transition, Partition};
use ips_genealogy::model::{analytic_report, r_curve, CounterexampleParams};
use ips_genealogy::simulator::{simulate, DiscreteModel, OffspringCounts};

#[derive(Parser, Debug)]
#[command(
    name = "ips-genealogy",
    version,
    about = "Particle genealogies and the two-state counterexample"
)]
struct Cli {
    /// Worker threads for Monte Carlo commands; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pa: f64,
    #[arg(long, default_value_t = 0.075)]
    pb: f64,
}

impl ParamArgs {
    fn params(self) -> Result<CounterexampleParams> {
        Ok(CounterexampleParams::new(self.alpha, self.pa, self.pb)?)
    }
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate q-values, the three factors and R.
    REval {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tabulate R over a p_b grid as CSV.
    RCurve {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        pa: f64,
        #[arg(long, default_value_t = 0.0)]
        pb_min: f64,
        #[arg(long, default_value_t = 0.2)]
        pb_max: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Simulate a particle system and write its trajectory as JSON.
    Simulate {
        /// Model JSON; the two-state model from --alpha/--pa/--pb when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        n: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Ancestral transition probability between partitions given offspring counts.
    Mohle {
        #[arg(long)]
        xi: String,
        #[arg(long)]
        eta: String,
        /// Offspring counts, e.g. 2,1,0.
        #[arg(long)]
        nu: String,
        #[arg(long = "N")]
        n: usize,
        /// Enumerate parental vectors instead of using the closed form.
        #[arg(long)]
        brute_force: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact conditional parent probability.
    ExactCond {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        n: usize,
        /// Use full enumeration (N <= 6).
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        out: OutArg,
    },
    /// Monte Carlo estimate of the conditional parent probability.
    McCond {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Empirical limit diagnostics against their N -> infinity values.
    Diagnostics {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Coupling mismatch rates as CSV; slopes go to standard error.
    Coupling {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N-list", default_value = "25,50,100,200")]
        n_list: String,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Chi-square independence test on coupled draws, as JSON.
    Independence {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Exact, predicted and Monte Carlo values over several N, as CSV.
    Report {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "N-list", default_value = "3,4,5,10,50,100,200,400")]
        n_list: String,
        /// Monte Carlo replicates per N; 0 skips the Monte Carlo columns.
        #[arg(long, default_value_t = 0)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
}

fn emit(out: &OutArg, bytes: &[u8]) -> Result<()> {
    match &out.out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(out: &OutArg, kind: &str, body: &T) -> Result<()> {
    emit(out, formats::to_json_string(kind, body)?.as_bytes())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::REval { params, out } => {
            let p = params.params()?;
            let report = analytic_report(&p)?;
            emit_json(
                &out,
                "analytic-report",
                &json!({ "params": p, "report": report }),
            )
        }
        Command::RCurve {
            alpha,
            pa,
            pb_min,
            pb_max,
            points,
            out,
        } => {
            let rows = r_curve(alpha, pa, pb_min, pb_max, points)?;
            let mut buf = Vec::new();
            formats::write_r_curve_csv(&mut buf, &rows)?;
            emit(&out, &buf)
        }
        Command::Simulate {
            model,
            params,
            n,
            t,
            seed,
            out,
        } => {
            let model = match model {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    formats::parse_model_json(&text)?
                }
                None => DiscreteModel::two_state(params.alpha, params.pa, params.pb)?,
            };
            let traj = simulate(&model, n, t, seed)?;
            emit(&out, formats::trajectory_to_json(&traj)?.as_bytes())
        }
        Command::Mohle {
            xi,
            eta,
            nu,
            n,
            brute_force,
            out,
        } => {
            let xi: Partition = xi.parse()?;
            let eta: Partition = eta.parse()?;
            let nu = OffspringCounts::new(parse_usize_list(&nu)?);
            let p = if brute_force {
                brute_force_transition(&xi, &eta, &nu, n)?
            } else {
                mohle_transition(&xi, &eta, &nu, n)?
            };
            emit(&out, format!("{}\n", fmt17(p)).as_bytes())
        }
        Command::ExactCond {
            params,
            n,
            oracle,
            out,
        } => {
            let p = params.params()?;
            let (value, method) = if oracle {
                (brute_force_conditional(&p, n)?, "enumeration")
            } else {
                (exact_conditional(&p, n)?, "decomposition")
            };
            let body = json!({
                "params": p,
                "N": n,
                "method": method,
                "exact": value,
                "pred_2_over_N": 2.0 / n as f64,
                "scaled": n as f64 * value / 2.0,
            });
            emit_json(&out, "exact-conditional", &body)
        }
        Command::McCond {
            params,
            n,
            reps,
            seed,
            out,
        } => {
            let p = params.params()?;
            let est = mc_conditional(&p, n, reps, seed)?;
            emit_json(
                &out,
                "mc-conditional",
                &json!({ "params": p, "estimate": est }),
            )
        }
        Command::Diagnostics {
            params,
            n,
            reps,
            seed,
            out,
        } => {
            let p = params.params()?;
            let report = limit_diagnostics(&p, n, reps, seed)?;
            emit_json(
                &out,
                "diagnostics",
                &json!({ "params": p, "diagnostics": report }),
            )
        }
        Command::Coupling {
            params,
            n_list,
            reps,
            seed,
            out,
        } => {
            let p = params.params()?;
            let report = mismatch_rates(&p, &parse_usize_list(&n_list)?, reps, seed)?;
            let slope = |s: Option<f64>| s.map_or_else(|| "none".to_string(), fmt17);
            eprintln!(
                "tilde_slope {} hat_slope {}",
                slope(report.tilde_slope),
                slope(report.hat_slope)
            );
            let mut buf = Vec::new();
            formats::write_coupling_csv(&mut buf, &report.rows)?;
            emit(&out, &buf)
        }
        Command::Independence {
            params,
            n,
            reps,
            seed,
            out,
        } => {
            let p = params.params()?;
            let result = independence_test(&p, n, reps, seed)?;
            emit_json(&out, "independence", &result)
        }
        Command::Report {
            params,
            n_list,
            reps,
            seed,
            out,
        } => {
            let p = params.params()?;
            let rows = counterexample_report(&p, &parse_usize_list(&n_list)?, reps, seed)?;
            let mut buf = Vec::new();
            formats::write_report_csv(&mut buf, &rows)?;
            emit(&out, &buf)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<ips_genealogy::Error>() {
        Some(e) if e.is_numeric() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.workers {
        Some(0) => Err(anyhow::anyhow!("--workers must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .context("building worker pool")
            .and_then(|pool| pool.install(|| run(cli.command))),
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
