//! `nessgap` — boundary-driven oscillator chains at the command line.

use clap::{Args, Parser, Subcommand};
use nessgap_cli::{
    cache::CacheDir, emit, figure2, figure2_csv, records_to_json, resolve_cache_dir, run_sweep,
    EmitFormat, SweepOutcome, SweepTemplate,
};
use nessgap_core::chain::{
    build_drift_matrix, build_interaction_matrix, build_rhs_step, ChainParams, Convention,
};
use nessgap_core::constants::functional_constants;
use nessgap_core::error::Error;
use nessgap_core::io::{write_json, write_matrix_csv, write_text};
use nessgap_core::lyapunov::{
    default_horizon_from_gap, solve_dense_kron, solve_quadrature, QuadratureRule,
};
use nessgap_core::sim::{simulate, write_trajectory_dump, PotentialSpec, SdeConfig};
use nessgap_core::spectral::{eigenvalues, spectral_gap, spectral_report};
use nessgap_core::structured::{solve_structured, verify_block_lemmas};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "nessgap",
    version,
    about = "Oscillator chains with Langevin baths: Lyapunov solvers, spectral gaps, convergence constants, SDE simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Copy)]
struct ChainArgs {
    /// Particle count
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Pinning coefficient
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Interaction coefficient
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Friction at both ends
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Left bath temperature
    #[arg(long, default_value_t = 1.5)]
    tl: f64,
    /// Right bath temperature
    #[arg(long, default_value_t = 0.5)]
    tr: f64,
}

impl ChainArgs {
    fn params(&self) -> Result<ChainParams, Error> {
        ChainParams::new(self.n, self.a, self.c, self.gamma, self.tl, self.tr)
    }

    fn template(&self, conv: Convention) -> SweepTemplate {
        SweepTemplate {
            a: self.a,
            c: self.c,
            gamma: self.gamma,
            t_left: self.tl,
            t_right: self.tr,
            convention: conv,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the model matrices B and M plus derived constants
    Model {
        #[command(flatten)]
        chain: ChainArgs,
        /// Output directory (B.csv, M.csv, derived.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one Lyapunov equation and persist the solution
    Solve {
        #[command(flatten)]
        chain: ChainArgs,
        /// dense | quadrature | structured | auto
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value = "physical")]
        convention: Convention,
        /// Right-hand-side step index (default N)
        #[arg(long)]
        step: Option<usize>,
        /// Output directory (b.csv + b.json sidecar)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral report: eigenvalues of M, gap, bounds, trace identity
    Gap {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "physical")]
        convention: Convention,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence constants for a parameter point
    Constants {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "physical")]
        convention: Convention,
        /// Pinning perturbation amplitude (cosine family)
        #[arg(long, default_value_t = 0.0)]
        eps_pin: f64,
        /// Interaction perturbation amplitude (cosine family)
        #[arg(long, default_value_t = 0.0)]
        eps_int: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep over a list of chain lengths, with caching
    Sweep {
        #[command(flatten)]
        chain: ChainArgs,
        /// N grid as start:stop:step (inclusive) or comma list
        #[arg(long)]
        n_list: String,
        #[arg(long, default_value = "physical")]
        convention: Convention,
        /// Worker threads (0 = default)
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "csv")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cache directory (default: $NESSGAP_CACHE_DIR or .nessgap_cache)
        #[arg(long)]
        cache_dir: Option<String>,
        /// Disable the cache
        #[arg(long, default_value_t = false)]
        no_cache: bool,
    },
    /// Gap-scaling series rho and rho N^3 on an N grid
    Figure2 {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 300)]
        max_n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Euler-Maruyama simulation; reports empirical moments
    Simulate {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1_000_000)]
        steps: usize,
        #[arg(long, default_value_t = 100_000)]
        burn_in: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        trajectories: usize,
        #[arg(long, default_value_t = 0.0)]
        eps_pin: f64,
        #[arg(long, default_value_t = 0.0)]
        eps_int: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Binary dump of trajectory 0 (header: N, dt, steps; then
        /// little-endian f64 states, state-major)
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },
    /// Run every block-structure identity at one N and print a table
    VerifyLemmas {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value = "paper")]
        convention: Convention,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own help/version go to stdout with success
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(classify(&e));
        }
    }
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::ShapeMismatch(_) => 1,
        Error::VerificationFailure(_) => 3,
        _ => 2,
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf, Error> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(dir)
}

fn print_or_write<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
                path: "<stdout>".into(),
                reason: e.to_string(),
            })?;
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_n_list(spec: &str) -> Result<Vec<usize>, Error> {
    let bad = |why: &str| Error::InvalidParams(format!("bad --n-list '{spec}': {why}"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step"));
        }
        let start: usize = parts[0].parse().map_err(|_| bad("start"))?;
        let stop: usize = parts[1].parse().map_err(|_| bad("stop"))?;
        let step: usize = parts[2].parse().map_err(|_| bad("step"))?;
        if step == 0 || stop < start {
            return Err(bad("need step > 0 and stop >= start"));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        spec.split(',')
            .map(|tok| tok.trim().parse::<usize>().map_err(|_| bad(tok)))
            .collect()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Model { chain, out } => {
            let params = chain.params()?;
            let dir = out_dir(&out)?;
            write_matrix_csv(&dir.join("B.csv"), &build_interaction_matrix(&params))?;
            write_matrix_csv(&dir.join("M.csv"), &build_drift_matrix(&params))?;
            #[derive(Serialize)]
            struct ModelOut {
                params: ChainParams,
                derived: nessgap_core::chain::DerivedConstants,
                trace_m: f64,
            }
            let m = build_drift_matrix(&params);
            write_json(
                &dir.join("derived.json"),
                &ModelOut {
                    params,
                    derived: params.derived(),
                    trace_m: m.trace(),
                },
            )?;
            println!(
                "model N={} written to {} (B.csv, M.csv, derived.json)",
                params.n,
                dir.display()
            );
            Ok(())
        }
        Cmd::Solve {
            chain,
            method,
            convention,
            step,
            out,
        } => {
            let params = chain.params()?;
            let n = params.n;
            let step = step.unwrap_or(n);
            let m = build_drift_matrix(&params);
            let pi = build_rhs_step(&params, step, convention)?.matrix();
            let sol = match method.as_str() {
                "dense" => solve_dense_kron(&m, &pi)?,
                "quadrature" => {
                    let rho = spectral_gap(&eigenvalues(&m)?);
                    solve_quadrature(
                        &m,
                        &pi,
                        default_horizon_from_gap(rho),
                        QuadratureRule::default(),
                    )?
                }
                "structured" => {
                    if step != n {
                        return Err(Error::InvalidParams(
                            "structured method solves the step-N equation only".into(),
                        ));
                    }
                    solve_structured(&params, convention)?
                }
                "auto" => {
                    if 2 * n <= 64 {
                        solve_dense_kron(&m, &pi)?
                    } else if n % 2 == 1 && step == n {
                        solve_structured(&params, convention)?
                    } else {
                        return Err(Error::EvenNUnsupported(n));
                    }
                }
                other => return Err(Error::InvalidParams(format!("unknown method '{other}'"))),
            };
            let dir = out_dir(&out)?;
            write_matrix_csv(&dir.join("b.csv"), &sol.b)?;
            #[derive(Serialize)]
            struct Sidecar {
                method: String,
                residual_fro: f64,
                step: usize,
                convention: Convention,
                params: ChainParams,
            }
            write_json(
                &dir.join("b.json"),
                &Sidecar {
                    method: sol.method.to_string(),
                    residual_fro: sol.residual_fro,
                    step,
                    convention,
                    params,
                },
            )?;
            println!(
                "solved step-{} equation with {} (residual {:.3e}); wrote {}",
                step,
                sol.method,
                sol.residual_fro,
                dir.display()
            );
            Ok(())
        }
        Cmd::Gap {
            chain,
            convention,
            out,
        } => {
            let params = chain.params()?;
            let (b, _) = nessgap_cli::solve_auto(&params, convention)?;
            let m = build_drift_matrix(&params);
            let report = spectral_report(&params, &m, &b)?;
            print_or_write(&report, &out)
        }
        Cmd::Constants {
            chain,
            convention,
            eps_pin,
            eps_int,
            out,
        } => {
            let params = chain.params()?;
            let pot = PotentialSpec { eps_pin, eps_int };
            let (b, _) = nessgap_cli::solve_auto(&params, convention)?;
            let fc = functional_constants(params.t_left, convention, &b, &pot.hessian_bounds())?;
            print_or_write(&fc, &out)
        }
        Cmd::Sweep {
            chain,
            n_list,
            convention,
            jobs,
            format,
            out,
            cache_dir,
            no_cache,
        } => {
            let template = chain.template(convention);
            let ns = parse_n_list(&n_list)?;
            let cache = if no_cache {
                None
            } else {
                Some(CacheDir::open(&resolve_cache_dir(cache_dir.as_deref()))?)
            };
            let outcomes = run_sweep(&template, &ns, jobs, cache.as_ref())?;
            let mut records = Vec::new();
            for o in &outcomes {
                match o {
                    SweepOutcome::Ok { record } => records.push(record.clone()),
                    SweepOutcome::Failed { n, error } => {
                        eprintln!("N={n}: failed: {error}");
                    }
                }
            }
            let fmt: EmitFormat = format.parse()?;
            match out {
                Some(path) => {
                    emit(&records, fmt, &path)?;
                    println!("wrote {} records to {}", records.len(), path.display());
                }
                None => match fmt {
                    EmitFormat::Csv => print!("{}", nessgap_cli::records_to_csv(&records)),
                    EmitFormat::Json => print!("{}", records_to_json(&records)?),
                },
            }
            Ok(())
        }
        Cmd::Figure2 { chain, max_n, out } => {
            let template = chain.template(Convention::Physical);
            let rows = figure2(&template, max_n)?;
            let csv = figure2_csv(&rows);
            match out {
                Some(path) => {
                    write_text(&path, &csv)?;
                    println!("wrote {} rows to {}", rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Cmd::Simulate {
            chain,
            dt,
            steps,
            burn_in,
            seed,
            trajectories,
            eps_pin,
            eps_int,
            out,
            dump_trajectory,
        } => {
            let params = chain.params()?;
            let pot = PotentialSpec { eps_pin, eps_int };
            let config = SdeConfig {
                dt,
                n_steps: steps,
                burn_in,
                seed,
                n_trajectories: trajectories,
            };
            if let Some(path) = &dump_trajectory {
                write_trajectory_dump(&params, &pot, &config, path)?;
            }
            let stats = simulate(&params, &pot, &config)?;
            #[derive(Serialize)]
            struct SimOut {
                params: ChainParams,
                potential: PotentialSpec,
                config: SdeConfig,
                sample_count: u64,
                mean: Vec<f64>,
                covariance: Vec<Vec<f64>>,
                se_mean: Vec<f64>,
            }
            let cov_rows: Vec<Vec<f64>> = (0..stats.cov.rows())
                .map(|i| stats.cov.row(i).to_vec())
                .collect();
            print_or_write(
                &SimOut {
                    params,
                    potential: pot,
                    config,
                    sample_count: stats.count,
                    mean: stats.mean.clone(),
                    covariance: cov_rows,
                    se_mean: stats.se_mean.clone(),
                },
                &out,
            )
        }
        Cmd::VerifyLemmas {
            chain,
            convention,
            out,
        } => {
            let params = chain.params()?;
            let sol = solve_structured(&params, convention)?;
            let (x, y, z) = (sol.x_block(), sol.y_block(), sol.z_block());
            let mut reports = verify_block_lemmas(&params, convention, &x, &y, &z)?;
            let dense_reports = if 2 * params.n <= nessgap_core::lyapunov::DENSE_KRON_CAP {
                let m = build_drift_matrix(&params);
                let pi = build_rhs_step(&params, params.n, convention)?.matrix();
                let d = solve_dense_kron(&m, &pi)?;
                Some(verify_block_lemmas(
                    &params,
                    convention,
                    &d.x_block(),
                    &d.y_block(),
                    &d.z_block(),
                )?)
            } else {
                None
            };
            println!(
                "block-identity checks at N={} ({convention} convention)",
                params.n
            );
            println!(
                "{:<22} {:>14} {:>14} {:>12}  status",
                "identity", "structured", "dense", "tolerance"
            );
            let mut all_ok = true;
            for (i, r) in reports.iter().enumerate() {
                let dense_defect = dense_reports.as_ref().map(|d| d[i].max_abs_defect);
                let ok = r.pass && dense_reports.as_ref().map(|d| d[i].pass).unwrap_or(true);
                all_ok &= ok;
                println!(
                    "{:<22} {:>14.3e} {:>14} {:>12.3e}  {}",
                    r.lemma_id,
                    r.max_abs_defect,
                    dense_defect
                        .map(|v| format!("{v:.3e}"))
                        .unwrap_or_else(|| "-".into()),
                    r.tolerance,
                    if ok { "pass" } else { "FAIL" }
                );
            }
            if let Some(d) = dense_reports {
                reports.extend(d);
            }
            if let Some(path) = out {
                write_json(&path, &reports)?;
            }
            if !all_ok {
                return Err(Error::VerificationFailure(
                    "one or more block identities failed".into(),
                ));
            }
            Ok(())
        }
    }
}
