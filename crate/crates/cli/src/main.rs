//! Command-line harness for steady-state benchmarks of driven optomechanical
//! systems: structure reports, solver sweeps, single solves, and the
//! Wigner/phonon-statistics pipeline, driven by a TOML config.

mod bench;
mod config;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use optoss::liouvillian::build_constrained;
use optoss::reorder;
use optoss::solve::{self, SolveMethod, SolverConfig};
use optoss::sparse::{CsrMatrix, Permutation};
use optoss::{analysis, ModelParams};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "optoss", version, about = "Steady states of driven optomechanical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the solver method.
    #[arg(long)]
    method: Option<String>,
    /// Override the ILU drop tolerance d.
    #[arg(long)]
    drop_tol: Option<f64>,
    /// Override the ILU allowed fill p.
    #[arg(long)]
    fill: Option<f64>,
    /// Override the GMRES restart length.
    #[arg(long)]
    restart: Option<usize>,
    /// Override the relative residual target.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Export L, T, and L-tilde as Matrix Market files into this directory.
    #[arg(long, value_name = "DIR")]
    export_mm: Option<PathBuf>,
    /// Use an externally computed permutation (JSON integer array) instead of
    /// RCM.
    #[arg(long, value_name = "JSON")]
    perm_in: Option<PathBuf>,
    /// Write the computed RCM permutation as a JSON integer array.
    #[arg(long, value_name = "JSON")]
    perm_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Report NNZ, bandwidth, and profile under natural and RCM orderings.
    Structure {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the benchmark sweep from the config and write a CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// CSV output path (overrides [output] path).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Worker threads for sweep points (default serial).
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        /// Exit 0 even when some points did not converge.
        #[arg(long)]
        allow_failures: bool,
    },
    /// Solve a single steady state and print observables.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Steady state, mechanical Wigner function, phonon distribution with
    /// limit-cycle fits, Fano factor, and negativity.
    Figure5 {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory for the CSV outputs (default: alongside the paths in the
        /// config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Structure { common } => {
            let file = config::FileConfig::load(&common.config)?;
            let params = file.model_params()?;
            let external = load_permutation(common.perm_in.as_deref())?;
            let report = bench::run_structure_report(&params, external.as_ref())?;
            report.print();
            if let Some(path) = common.perm_out.as_deref() {
                write_permutation(&report.permutation, path)?;
            }
            if let Some(dir) = common.export_mm.as_deref() {
                export_matrices(&params, dir)?;
            }
            Ok(true)
        }
        Command::Sweep {
            common,
            output,
            parallel,
            allow_failures,
        } => {
            let file = config::FileConfig::load(&common.config)?;
            let mut sweep = file.sweep_config()?;
            apply_overrides(&mut sweep.solver, &common)?;
            if let Some(m) = &common.method {
                sweep.methods = vec![SolveMethod::parse(m)?];
            }
            println!("sweep: {}", bench::describe_sweep(&sweep));
            let records = bench::run_sweep(&sweep, parallel.max(1))?;
            let path = output
                .or_else(|| sweep.output_path.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("sweep.csv"));
            bench::write_csv(&records, &path)?;
            let failed: Vec<_> = records.iter().filter(|r| !r.converged).collect();
            println!(
                "{} records written to {} ({} converged, {} failed)",
                records.len(),
                path.display(),
                records.len() - failed.len(),
                failed.len()
            );
            Ok(failed.is_empty() || allow_failures)
        }
        Command::Solve { common } => {
            let file = config::FileConfig::load(&common.config)?;
            let params = file.model_params()?;
            let mut solver = file.solver_config();
            apply_overrides(&mut solver, &common)?;
            if let Some(dir) = common.export_mm.as_deref() {
                export_matrices(&params, dir)?;
            }
            let result = match load_permutation(common.perm_in.as_deref())? {
                Some(perm) => solve_with_external_permutation(&params, &solver, &perm)?,
                None => {
                    if let Some(path) = common.perm_out.as_deref() {
                        let sys = build_constrained(&params)?;
                        let perm = reorder::rcm(&sys.constrained.symmetrized_pattern()?)?;
                        write_permutation(&perm, path)?;
                    }
                    solve::steadystate(&params, &solver)?
                }
            };
            print_result(&params, &result);
            Ok(result.converged)
        }
        Command::Figure5 { common, output } => {
            let file = config::FileConfig::load(&common.config)?;
            let params = file.model_params()?;
            let mut solver = file.solver_config();
            apply_overrides(&mut solver, &common)?;
            let (grid, wigner_path, dist_path) = match &file.figure5 {
                Some(f) => (
                    (f.x_min, f.x_max, f.points),
                    PathBuf::from(&f.wigner_path),
                    PathBuf::from(&f.distribution_path),
                ),
                None => (
                    (None, None, 201),
                    PathBuf::from("wigner.csv"),
                    PathBuf::from("distribution.csv"),
                ),
            };
            let (wigner_path, dist_path) = match output {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    (
                        dir.join(wigner_path.file_name().unwrap()),
                        dir.join(dist_path.file_name().unwrap()),
                    )
                }
                None => (wigner_path, dist_path),
            };
            let out = bench::run_figure5(&params, &solver, grid, &wigner_path, &dist_path)?;
            println!(
                "steady state: method={} iterations={} residual={:.3e} converged={}",
                out.result.method.name(),
                out.result.iterations,
                out.result.residual_norm,
                out.result.converged
            );
            println!(
                "<a'a> = {:.6}   <b'b> = {:.6}",
                out.mean_photons, out.mean_phonons
            );
            println!(
                "phonon distribution: mean {:.4}, variance {:.4}",
                out.distribution.mean, out.distribution.variance
            );
            println!("total Fano factor = {:.4}", out.total_fano);
            println!(
                "wigner negativity fraction = {:.6} (grid integral {:.6})",
                out.negativity, out.wigner_integral
            );
            for (i, f) in out.fits.iter().enumerate() {
                println!(
                    "limit cycle {}: bins [{}, {}), weight {:.4}, mean n {:.3}",
                    i, f.start, f.end, f.weight, f.mean_n
                );
            }
            println!(
                "wrote {} and {}",
                wigner_path.display(),
                dist_path.display()
            );
            Ok(out.result.converged)
        }
    }
}

fn apply_overrides(solver: &mut SolverConfig, common: &CommonArgs) -> Result<()> {
    if let Some(m) = &common.method {
        solver.method = SolveMethod::parse(m)?;
    }
    if let Some(d) = common.drop_tol {
        solver.ilu.drop_tol = d;
    }
    if let Some(p) = common.fill {
        solver.ilu.fill_factor = p;
    }
    if let Some(r) = common.restart {
        solver.restart = r;
    }
    if let Some(t) = common.tol {
        solver.tolerance = t;
    }
    if let Some(n) = common.max_iter {
        solver.max_iterations = n;
    }
    Ok(())
}

fn load_permutation(path: Option<&Path>) -> Result<Option<Permutation>> {
    let Some(path) = path else {
        return Ok(None);
    };
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let forward: Vec<usize> =
        serde_json::from_reader(BufReader::new(file)).context("permutation must be a JSON integer array")?;
    Ok(Some(Permutation::from_forward(forward)?))
}

fn write_permutation(perm: &Permutation, path: &Path) -> Result<()> {
    let json = serde_json::to_string(perm.forward())?;
    fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    println!("permutation written to {}", path.display());
    Ok(())
}

fn export_matrices(params: &ModelParams, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sys = build_constrained(params)?;
    let write = |m: &CsrMatrix, name: &str| -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf)?;
        fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    };
    write(&sys.liouvillian, "liouvillian.mtx")?;
    write(&sys.trace_matrix, "trace.mtx")?;
    write(&sys.constrained, "constrained.mtx")?;
    let (reordered, _) = reorder::reorder_system(&sys)?;
    write(&reordered.constrained, "constrained_rcm.mtx")?;
    println!("matrices exported to {}", dir.display());
    Ok(())
}

/// ILU + GMRES under an externally supplied symmetric permutation, for
/// comparing orderings produced by other tools. The pipeline is composed by
/// hand: the solution vector must return to the original frame before it can
/// be folded into a density matrix.
fn solve_with_external_permutation(
    params: &ModelParams,
    solver: &SolverConfig,
    perm: &Permutation,
) -> Result<solve::SteadyStateResult> {
    use num_complex::Complex64;
    use optoss::precond::ilutp;
    use std::time::Instant;

    let sys = build_constrained(params)?;
    if perm.len() != sys.rhs.len() {
        bail!(
            "permutation length {} does not match system dimension {}",
            perm.len(),
            sys.rhs.len()
        );
    }
    let start = Instant::now();
    let t0 = Instant::now();
    let constrained = sys.constrained.permute_symmetric(perm)?;
    let rhs = perm.permute_vec(&sys.rhs);
    let ordering_time = t0.elapsed();
    let t0 = Instant::now();
    let factors = ilutp(&constrained, &solver.ilu)?;
    let factor_time = t0.elapsed();
    let t0 = Instant::now();
    let out = solve::gmres(&constrained, &rhs, Some(&factors), solver)?;
    let solve_time = t0.elapsed();
    let wall_time = start.elapsed();

    let x = perm.inverse().permute_vec(&out.x);
    let mut ax = vec![Complex64::new(0.0, 0.0); x.len()];
    sys.constrained.matvec(&x, &mut ax)?;
    let num: f64 = ax
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = sys.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let residual_norm = num / den;

    let rho_raw = solve::unvectorize(&x, sys.hilbert_dim);
    let herm = rho_raw.hermitize();
    let tr = herm.trace();
    if tr.norm() == 0.0 {
        bail!("steady state has zero trace");
    }
    let mut rho = herm;
    rho.scale(Complex64::new(1.0, 0.0) / tr);
    let effective_tolerance = solver.effective_tolerance(factors.condest);
    Ok(solve::SteadyStateResult {
        rho,
        residual_norm,
        iterations: out.iterations,
        wall_time,
        ordering_time,
        factor_time,
        solve_time,
        fill_factor: factors.fill_factor_achieved,
        condest: factors.condest,
        method: SolveMethod::GmresIluNatural,
        converged: residual_norm <= effective_tolerance,
        effective_tolerance,
    })
}

fn print_result(params: &ModelParams, r: &solve::SteadyStateResult) {
    println!(
        "method={} converged={} residual={:.3e} (target {:.3e}) iterations={}",
        r.method.name(),
        r.converged,
        r.residual_norm,
        r.effective_tolerance,
        r.iterations
    );
    println!(
        "fill_factor={:.2} condest={:.3e} wall={:.3}s (order {:.3}s, factor {:.3}s, solve {:.3}s)",
        r.fill_factor,
        r.condest,
        r.wall_time.as_secs_f64(),
        r.ordering_time.as_secs_f64(),
        r.factor_time.as_secs_f64(),
        r.solve_time.as_secs_f64()
    );
    let tr = r.rho.trace();
    println!(
        "trace = {:.12}   <a'a> = {:.8}   <b'b> = {:.8}",
        tr.re,
        analysis::photon_number(&r.rho, params.trunc),
        analysis::phonon_number(&r.rho, params.trunc)
    );
}
