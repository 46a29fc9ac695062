mod config;
mod pool;
mod state_spec;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Format, Overrides, RunConfig};
use moyal_core::dirac::{fit_levels, harmonic_hamiltonian, hermitian_spectrum, landau_hamiltonian, BlockOp, DiracKind, DiracParams, SpinorOperator};
use moyal_core::kernels::{self, SweepRow};
use moyal_core::plane::{ladder_calibration, Grid, QuadratureSpec};
use moyal_core::states::{distance, DistanceOutcome, DistanceProblem};
use moyal_core::{Error, LadderTables, Result, TruncatedElement};

#[derive(Parser)]
#[command(name = "moyal", version, about = "Spectral triples on the Moyal plane")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// standard, harmonic, harmonic-d2, landau, twisted
    #[arg(long, global = true)]
    triple: Option<String>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    xi: Option<f64>,
    /// Fock truncation.
    #[arg(short = 'N', long = "trunc", global = true)]
    n: Option<usize>,
    /// diagonal_lp or subgradient
    #[arg(long, global = true)]
    solver: Option<String>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// json, csv or text
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Lower bound on the spectral distance between two states.
    Distance {
        #[arg(long = "a")]
        state_a: String,
        #[arg(long = "b")]
        state_b: String,
    },
    /// Run invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Clustered spectrum of a Hamiltonian or of the configured Dirac operator.
    Spectrum {
        /// harmonic, landau or dirac
        #[arg(long, default_value = "dirac")]
        hamiltonian: String,
        /// Clustering tolerance, relative.
        #[arg(long, default_value_t = 1e-8)]
        cluster_tol: f64,
    },
    /// Kernel sweeps.
    Kernel {
        /// Φ against K₀/4π on a |v| grid.
        #[arg(long, conflicts_with = "hs_sweep")]
        phi_sweep: bool,
        /// Hilbert–Schmidt estimate of the Landau resolvent over ξ.
        #[arg(long)]
        hs_sweep: bool,
        #[arg(long, default_value_t = 0.1)]
        from: f64,
        #[arg(long, default_value_t = 5.0)]
        to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value_t = 1.0)]
        mu2: f64,
    },
    /// Recalibrate the ladder tables against the quadrature oracle.
    Calibrate {
        #[arg(long, default_value_t = 12)]
        window: usize,
        #[arg(long, default_value_t = 128)]
        grid_points: usize,
        /// Where to write the tables.
        #[arg(long)]
        tables_out: Option<PathBuf>,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            triple: self.triple.clone(),
            theta: self.theta,
            omega: self.omega,
            xi: self.xi,
            n: self.n,
            solver: self.solver.clone(),
            tol: self.tol,
            seed: self.seed,
            format: self.format.clone(),
            output: self.output.clone(),
        }
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json_text(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(1));
    m.insert("command".into(), json!(command));
    m.insert("triple".into(), json!(cfg.triple));
    m.insert("theta".into(), json!(cfg.theta));
    m.insert("omega".into(), json!(cfg.omega));
    m.insert("xi".into(), json!(cfg.xi));
    m.insert("n".into(), json!(cfg.n));
    m.insert("seed".into(), json!(cfg.seed));
    m
}

fn cmd_distance(cfg: &RunConfig, a: &str, b: &str, tables: &LadderTables) -> Result<u8> {
    let sa = state_spec::parse_state(a, cfg.n)?;
    let sb = state_spec::parse_state(b, cfg.n)?;
    let mut problem = DistanceProblem::new(cfg.kind()?, cfg.params()?, sa, sb, cfg.solver);
    problem.tol = cfg.tol;
    problem.seed = cfg.seed;
    let reference = if problem.kind == DiracKind::Standard {
        None
    } else {
        let mut p0 = problem.clone();
        p0.kind = DiracKind::Standard;
        p0.params = DiracParams::standard(cfg.theta);
        distance(&p0, tables)?.finite().map(|r| r.lower_bound)
    };
    let outcome = distance(&problem, tables)?;
    let mut m = header(cfg, "distance");
    m.insert("solver".into(), serde_json::to_value(cfg.solver)?);
    m.insert("state_a".into(), json!(a));
    m.insert("state_b".into(), json!(b));
    let (code, row) = match outcome {
        DistanceOutcome::Finite(r) => {
            m.insert("outcome".into(), json!("finite"));
            m.insert("lower_bound".into(), json!(r.lower_bound + 0.0));
            m.insert("lower_bound_sqrt_theta".into(), json!(r.lower_bound / cfg.theta.sqrt() + 0.0));
            let ratio = match reference {
                None => Some(1.0),
                Some(d0) if d0 > 0.0 => Some(r.lower_bound / d0),
                Some(_) => None,
            };
            m.insert("ratio_to_d0".into(), json!(ratio));
            m.insert("witness_seminorm".into(), json!(r.witness_seminorm));
            m.insert("closed_form".into(), json!(r.closed_form.map(|v| v + 0.0)));
            m.insert("converged".into(), json!(r.converged));
            m.insert("iterations".into(), json!(r.iterations));
            let cf = r.closed_form.map(|v| format!("{v:e}")).unwrap_or_default();
            (0, format!("finite,{:e},{:e},{cf},{},{}", r.lower_bound, r.witness_seminorm, r.converged, r.iterations))
        }
        DistanceOutcome::Infinite { reason } => {
            m.insert("outcome".into(), json!("infinite"));
            m.insert("lower_bound".into(), Value::Null);
            m.insert("reason".into(), json!(reason));
            (2, "infinite,inf,,,,".to_string())
        }
    };
    let text = match cfg.format_or(Format::Json) {
        Format::Csv => format!(
            "triple,theta,omega,xi,n,solver,state_a,state_b,outcome,lower_bound,witness_seminorm,closed_form,converged,iterations\n{},{:e},{:e},{:e},{},{},\"{a}\",\"{b}\",{row}\n",
            cfg.triple,
            cfg.theta,
            cfg.omega,
            cfg.xi,
            cfg.n,
            serde_json::to_value(cfg.solver)?.as_str().unwrap_or_default()
        ),
        _ => json_text(&Value::Object(m))?,
    };
    emit(cfg, &text)?;
    Ok(code)
}

fn cmd_verify(cfg: &RunConfig, suite: &str, tables: &LadderTables) -> Result<u8> {
    let sc = verify::SuiteConfig { theta: cfg.theta, n: cfg.n, seed: cfg.seed };
    let checks = verify::run(suite, &sc, tables)?;
    let failed = checks.iter().any(|c| c.status == verify::Status::Fail);
    let text = match cfg.format_or(Format::Text) {
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert("schema".into(), json!(1));
            m.insert("command".into(), json!("verify"));
            m.insert("suite".into(), json!(suite));
            m.insert("theta".into(), json!(cfg.theta));
            m.insert("n".into(), json!(cfg.n));
            m.insert("seed".into(), json!(cfg.seed));
            m.insert("passed".into(), json!(!failed));
            m.insert("checks".into(), serde_json::to_value(&checks)?);
            json_text(&Value::Object(m))?
        }
        Format::Csv => {
            let mut out = String::from("suite,check,status,value,relation,limit,anchor\n");
            for c in &checks {
                let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{},{},\"{}\"\n",
                    c.suite,
                    c.name,
                    serde_json::to_value(c.status)?.as_str().unwrap_or_default(),
                    f(c.value),
                    serde_json::to_value(c.relation)?.as_str().unwrap_or_default(),
                    f(c.limit),
                    c.anchor
                ));
            }
            out
        }
        Format::Text => verify::render_table(&checks),
    };
    emit(cfg, &text)?;
    Ok(u8::from(failed))
}

fn cmd_spectrum(cfg: &RunConfig, which: &str, tol: f64, tables: &LadderTables) -> Result<u8> {
    let id = nalgebra::DMatrix::<num_complex::Complex64>::identity(1, 1);
    let (op, stated) = match which {
        "harmonic" => (BlockOp::tensor(&id, &harmonic_hamiltonian(cfg.omega, cfg.theta, cfg.n, tables)?), Some(cfg.omega / cfg.theta)),
        "landau" => (BlockOp::tensor(&id, &landau_hamiltonian(cfg.xi, cfg.theta, cfg.n, tables)?), Some(8.0 * cfg.xi / cfg.theta)),
        "dirac" => (SpinorOperator::build(cfg.kind()?, cfg.params()?, cfg.n, tables)?.op().clone(), None),
        _ => return Err(Error::Configuration(format!("unknown hamiltonian `{which}` (harmonic, landau, dirac)"))),
    };
    let report = hermitian_spectrum(&op, tol);
    let text = match cfg.format_or(Format::Csv) {
        Format::Json => {
            let fit = fit_levels(&report.clusters, (cfg.n / 4).max(2));
            let mut m = header(cfg, "spectrum");
            m.insert("hamiltonian".into(), json!(which));
            m.insert("clusters".into(), serde_json::to_value(&report.clusters)?);
            m.insert("level_fit".into(), serde_json::to_value(fit)?);
            m.insert("stated_spacing".into(), json!(stated));
            m.insert("prefactor_ratio".into(), json!(fit.zip(stated).map(|(f, s)| f.spacing / s)));
            json_text(&Value::Object(m))?
        }
        _ => report.to_csv(),
    };
    emit(cfg, &text)?;
    Ok(0)
}

fn sweep_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 0 || from > to {
        return Vec::new();
    }
    if points == 1 {
        return vec![from];
    }
    (0..points).map(|k| from + (to - from) * k as f64 / (points - 1) as f64).collect()
}

fn cmd_kernel(cfg: &RunConfig, phi: bool, hs: bool, grid: Vec<f64>, mu2: f64) -> Result<u8> {
    if phi == hs {
        return Err(Error::Configuration("choose exactly one of --phi-sweep, --hs-sweep".into()));
    }
    let workers = pool::worker_count();
    let results: Vec<Result<SweepRow>> = if phi {
        pool::parallel_map(&grid, workers, |&v| kernels::phi_sweep(&[v], cfg.xi, cfg.theta, mu2).map(|r| r[0]))
    } else {
        let a = TruncatedElement::unit(cfg.theta, cfg.n, 0, 0)?;
        pool::parallel_map(&grid, workers, |&x| kernels::hs_sweep(&a, &[x], mu2).map(|r| r[0]))
    };
    let mut rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.param.total_cmp(&b.param));
    let text = match cfg.format_or(Format::Csv) {
        Format::Json => {
            let mut m = header(cfg, "kernel");
            m.insert("sweep".into(), json!(if phi { "phi" } else { "hs" }));
            m.insert("mu2".into(), json!(mu2));
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let f = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
                    json!({"param": r.param, "value": f(r.value), "bound": f(r.bound), "slack": f(r.slack)})
                })
                .collect();
            m.insert("rows".into(), Value::Array(rows));
            json_text(&Value::Object(m))?
        }
        _ => kernels::sweep_csv(&rows),
    };
    emit(cfg, &text)?;
    Ok(0)
}

fn cmd_calibrate(cfg: &RunConfig, window: usize, points: usize, out: Option<&PathBuf>) -> Result<u8> {
    let grid = Grid::new(points, 8.0 * cfg.theta.sqrt())?;
    let q = QuadratureSpec::for_grid(&grid, cfg.theta);
    let report = ladder_calibration(cfg.theta, window, grid, &q)?;
    if let Some(path) = out {
        std::fs::write(path, report.tables.to_json()?)?;
    }
    let mut m = header(cfg, "calibrate");
    m.insert("window".into(), json!(window));
    m.insert("grid_points".into(), json!(points));
    m.insert("max_residual".into(), json!(report.max_residual));
    m.insert("anticommutator_residual".into(), json!(report.anticommutator_residual));
    m.insert("star_pointwise_residual".into(), json!(report.star_pointwise_residual));
    m.insert("inner_derivation_residual".into(), json!(report.inner_derivation_residual));
    m.insert("basis_ladder_spread".into(), json!(report.basis_ladder_spread));
    m.insert("tail_mass".into(), json!(report.tail_mass));
    emit(cfg, &json_text(&Value::Object(m))?)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = RunConfig::resolve(cli.common.config.as_deref(), cli.common.overrides())?;
    match &cli.command {
        Command::Calibrate { window, grid_points, tables_out } => cmd_calibrate(&cfg, *window, *grid_points, tables_out.as_ref()),
        Command::Kernel { phi_sweep, hs_sweep, from, to, points, mu2 } => cmd_kernel(&cfg, *phi_sweep, *hs_sweep, sweep_grid(*from, *to, *points), *mu2),
        cmd => {
            let tables = LadderTables::stored()?;
            match cmd {
                Command::Distance { state_a, state_b } => cmd_distance(&cfg, state_a, state_b, tables),
                Command::Verify { suite } => cmd_verify(&cfg, suite, tables),
                Command::Spectrum { hamiltonian, cluster_tol } => cmd_spectrum(&cfg, hamiltonian, *cluster_tol, tables),
                _ => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid_edges() {
        assert!(sweep_grid(1.0, 2.0, 0).is_empty());
        assert!(sweep_grid(3.0, 2.0, 5).is_empty());
        assert_eq!(sweep_grid(1.0, 2.0, 1), vec![1.0]);
        assert_eq!(sweep_grid(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn command_line_shapes() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["moyal", "distance", "--a", "pure:0", "--b", "pure:1", "-N", "64", "--theta", "2"]).unwrap();
        assert_eq!(cli.common.n, Some(64));
        assert!(Cli::try_parse_from(["moyal", "kernel", "--phi-sweep", "--hs-sweep"]).is_err());
    }
}
