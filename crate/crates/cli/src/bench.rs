//! Benchmark runners: structure reports, solver sweeps, and the
//! phase-space/statistics pipeline.

use crate::config::{apply_sweep, SweepConfig, SweepVariable};
use anyhow::{Context, Result};
use num_complex::Complex64;
use optoss::analysis::{self, PhononDistribution};
use optoss::liouvillian::{build_constrained, ConstrainedLiouvillian};
use optoss::reorder;
use optoss::solve::{self, SolveMethod, SolverConfig, SteadyStateResult};
use optoss::sparse::{Permutation, StructureMetrics};
use optoss::ModelParams;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

/// One sweep-point measurement; the CSV mirrors the field order.
#[derive(Clone, Debug)]
pub struct BenchRecord {
    pub sweep_value: f64,
    pub method: SolveMethod,
    pub fill_factor: f64,
    pub iterations: usize,
    pub condest: f64,
    /// Mean of the repetitions, seconds; ordering + factorization + solve.
    pub wall_time: f64,
    pub speedup_vs_direct: Option<f64>,
    pub converged: bool,
    pub residual_norm: f64,
    pub bandwidth_before: usize,
    pub bandwidth_after: usize,
    pub profile_before: usize,
    pub profile_after: usize,
    pub nnz: usize,
    /// Reordering share of the wall time, seconds.
    pub ordering_time: f64,
}

pub const CSV_HEADER: &str = "sweep_value,method,fill_factor,iterations,condest,wall_time,\
speedup_vs_direct,converged,residual_norm,bandwidth_before,bandwidth_after,profile_before,\
profile_after,nnz,ordering_time";

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        let mut s = String::new();
        let speedup = self
            .speedup_vs_direct
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.sweep_value,
            self.method.name(),
            self.fill_factor,
            self.iterations,
            self.condest,
            self.wall_time,
            speedup,
            self.converged,
            self.residual_norm,
            self.bandwidth_before,
            self.bandwidth_after,
            self.profile_before,
            self.profile_after,
            self.nnz,
            self.ordering_time,
        );
        s
    }
}

/// Structure metrics of the constrained system under natural and reordered
/// (RCM or externally supplied) orderings.
pub struct StructureReport {
    pub nnz: usize,
    pub natural: StructureMetrics,
    pub reordered: StructureMetrics,
    pub bandwidth_reduction: f64,
    pub profile_reduction: f64,
    pub permutation: Permutation,
}

pub fn run_structure_report(
    p: &ModelParams,
    external: Option<&Permutation>,
) -> Result<StructureReport> {
    let sys = build_constrained(p)?;
    let natural = sys.constrained.structure_metrics()?;
    let perm = match external {
        Some(perm) => perm.clone(),
        None => reorder::rcm(&sys.constrained.symmetrized_pattern()?)?,
    };
    let permuted = sys.constrained.permute_symmetric(&perm)?;
    let reordered = permuted.structure_metrics()?;
    Ok(StructureReport {
        nnz: sys.constrained.nnz(),
        natural,
        reordered,
        bandwidth_reduction: natural.total_bandwidth as f64 / reordered.total_bandwidth as f64,
        profile_reduction: natural.total_profile as f64 / reordered.total_profile as f64,
        permutation: perm,
    })
}

impl StructureReport {
    pub fn print(&self) {
        println!("nnz      {}", self.nnz);
        println!(
            "natural  ub={} lb={} B={} up={} lp={} P={}",
            self.natural.upper_bandwidth,
            self.natural.lower_bandwidth,
            self.natural.total_bandwidth,
            self.natural.upper_profile,
            self.natural.lower_profile,
            self.natural.total_profile
        );
        println!(
            "reorder  ub={} lb={} B={} up={} lp={} P={}",
            self.reordered.upper_bandwidth,
            self.reordered.lower_bandwidth,
            self.reordered.total_bandwidth,
            self.reordered.upper_profile,
            self.reordered.lower_profile,
            self.reordered.total_profile
        );
        println!(
            "reduction  B x{:.3}  P x{:.3}",
            self.bandwidth_reduction, self.profile_reduction
        );
    }
}

fn mean_secs(times: &[Duration]) -> f64 {
    times.iter().map(|t| t.as_secs_f64()).sum::<f64>() / times.len() as f64
}

/// Solve one sweep point with one method, repeated for timing, and verify the
/// recorded residual with an independent matvec on the assembled system.
fn run_point(
    sys: &ConstrainedLiouvillian,
    sweep_value: f64,
    method: SolveMethod,
    solver: &SolverConfig,
    repetitions: usize,
    structure: (&StructureMetrics, &StructureMetrics),
) -> Result<BenchRecord> {
    let cfg = SolverConfig {
        method,
        ..*solver
    };
    let mut walls = Vec::with_capacity(repetitions);
    let mut orders = Vec::with_capacity(repetitions);
    let mut last: Option<SteadyStateResult> = None;
    for _ in 0..repetitions {
        let r = solve::steadystate_from_system(sys, &cfg)?;
        walls.push(r.wall_time);
        orders.push(r.ordering_time);
        last = Some(r);
    }
    let r = last.expect("repetitions >= 1");

    // independent residual check: one matvec against the stored system
    let x = solve::vectorize(&r.rho);
    let mut ax = vec![Complex64::new(0.0, 0.0); x.len()];
    sys.constrained.matvec(&x, &mut ax)?;
    let num: f64 = ax
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let den: f64 = sys.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let verified = num / den;
    // hermitization and trace renormalization move the residual a little;
    // anything beyond that signals a bookkeeping bug
    if r.converged && verified > 100.0 * r.residual_norm.max(r.effective_tolerance) {
        anyhow::bail!(
            "residual re-verification failed: recorded {:.3e}, matvec gives {verified:.3e}",
            r.residual_norm
        );
    }

    let (before, after) = structure;
    Ok(BenchRecord {
        sweep_value,
        method,
        fill_factor: r.fill_factor,
        iterations: r.iterations,
        condest: r.condest,
        wall_time: mean_secs(&walls),
        speedup_vs_direct: None,
        converged: r.converged,
        residual_norm: r.residual_norm,
        bandwidth_before: before.total_bandwidth,
        bandwidth_after: after.total_bandwidth,
        profile_before: before.total_profile,
        profile_after: after.total_profile,
        nnz: sys.constrained.nnz(),
        ordering_time: mean_secs(&orders),
    })
}

/// Run the full sweep. Per-point failures become non-converged records; the
/// sweep itself never aborts. With `parallel > 1` the points run on a worker
/// pool; records are merged back in sweep order either way.
pub fn run_sweep(cfg: &SweepConfig, parallel: usize) -> Result<Vec<BenchRecord>> {
    let jobs: Vec<(usize, f64)> = cfg.values.iter().copied().enumerate().collect();

    let run_one = |&(idx, value): &(usize, f64)| -> (usize, Vec<BenchRecord>) {
        let mut records = Vec::new();
        let params = match apply_sweep(&cfg.base, cfg.variable, value) {
            Ok(p) => p,
            Err(_) => return (idx, failure_records(cfg, value)),
        };
        let sys = match build_constrained(&params) {
            Ok(s) => s,
            Err(_) => return (idx, failure_records(cfg, value)),
        };
        let before = sys
            .constrained
            .structure_metrics()
            .expect("constrained system is nonempty");
        let after = reorder::reorder_system(&sys)
            .and_then(|(r, _)| r.constrained.structure_metrics())
            .unwrap_or(before);
        for &method in &cfg.methods {
            match run_point(&sys, value, method, &cfg.solver, cfg.repetitions, (&before, &after)) {
                Ok(rec) => records.push(rec),
                Err(_) => records.push(BenchRecord {
                    sweep_value: value,
                    method,
                    fill_factor: f64::NAN,
                    iterations: 0,
                    condest: f64::NAN,
                    wall_time: f64::NAN,
                    speedup_vs_direct: None,
                    converged: false,
                    residual_norm: f64::NAN,
                    bandwidth_before: before.total_bandwidth,
                    bandwidth_after: after.total_bandwidth,
                    profile_before: before.total_profile,
                    profile_after: after.total_profile,
                    nnz: sys.constrained.nnz(),
                    ordering_time: f64::NAN,
                }),
            }
        }
        (idx, records)
    };

    let mut chunks: Vec<(usize, Vec<BenchRecord>)> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .context("building worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            jobs.par_iter().map(run_one).collect()
        })
    } else {
        jobs.iter().map(run_one).collect()
    };
    chunks.sort_by_key(|(idx, _)| *idx);

    let mut records: Vec<BenchRecord> = chunks.into_iter().flat_map(|(_, r)| r).collect();

    // speedup against the direct baseline at the same sweep value
    let direct_times: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.method == SolveMethod::DirectLu && r.wall_time.is_finite())
        .map(|r| (r.sweep_value, r.wall_time))
        .collect();
    if !direct_times.is_empty() {
        for rec in &mut records {
            if rec.method == SolveMethod::DirectLu {
                continue;
            }
            if let Some(&(_, t_direct)) = direct_times
                .iter()
                .find(|(v, _)| *v == rec.sweep_value)
            {
                if rec.wall_time.is_finite() && rec.wall_time > 0.0 {
                    rec.speedup_vs_direct = Some(t_direct / rec.wall_time);
                }
            }
        }
    }
    Ok(records)
}

fn failure_records(cfg: &SweepConfig, value: f64) -> Vec<BenchRecord> {
    cfg.methods
        .iter()
        .map(|&method| BenchRecord {
            sweep_value: value,
            method,
            fill_factor: f64::NAN,
            iterations: 0,
            condest: f64::NAN,
            wall_time: f64::NAN,
            speedup_vs_direct: None,
            converged: false,
            residual_norm: f64::NAN,
            bandwidth_before: 0,
            bandwidth_after: 0,
            profile_before: 0,
            profile_after: 0,
            nnz: 0,
            ordering_time: f64::NAN,
        })
        .collect()
}

pub fn write_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Outputs of the phase-space pipeline.
pub struct Figure5Output {
    pub result: SteadyStateResult,
    pub distribution: PhononDistribution,
    pub fits: Vec<analysis::LimitCycleFit>,
    pub total_fano: f64,
    pub negativity: f64,
    pub wigner_integral: f64,
    pub mean_phonons: f64,
    pub mean_photons: f64,
}

/// Solve the steady state, reduce to the mechanical mode, and emit the Wigner
/// grid and phonon distribution CSVs with coherent limit-cycle fits.
pub fn run_figure5(
    p: &ModelParams,
    cfg: &SolverConfig,
    grid: (Option<f64>, Option<f64>, usize),
    wigner_path: &Path,
    distribution_path: &Path,
) -> Result<Figure5Output> {
    let result = solve::steadystate(p, cfg)?;
    let rho_m = analysis::partial_trace_mech(&result.rho, p.trunc)?;
    let distribution = PhononDistribution::from_density(&rho_m)?;
    let fits = analysis::fit_limit_cycles(&distribution)?;
    let total_fano = analysis::fano(&distribution)?;
    let mean_phonons = analysis::phonon_number(&result.rho, p.trunc);
    let mean_photons = analysis::photon_number(&result.rho, p.trunc);

    // default span: ±(2 sqrt(2<n>) + 5) zero-point units
    let (xmin, xmax, points) = grid;
    let span = 2.0 * (2.0 * distribution.mean).sqrt() + 5.0;
    let lo = xmin.unwrap_or(-span);
    let hi = xmax.unwrap_or(span);
    let axis: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points as f64 - 1.0))
        .collect();
    let w = analysis::wigner(&rho_m, &axis, &axis)?;

    let mut wcsv = String::from("x,p,w\n");
    for (ix, &x) in w.x_axis.iter().enumerate() {
        for (ip, &pv) in w.p_axis.iter().enumerate() {
            let _ = writeln!(wcsv, "{},{},{}", x, pv, w.values[ix * w.p_axis.len() + ip]);
        }
    }
    fs::write(wigner_path, wcsv).with_context(|| format!("writing {}", wigner_path.display()))?;

    let mut dcsv = String::from("n,prob,fitted\n");
    for n in 0..distribution.probs.len() {
        let fitted: f64 = fits.iter().map(|f| f.fitted_coherent_probs[n]).sum();
        let _ = writeln!(dcsv, "{},{},{}", n, distribution.probs[n], fitted);
    }
    fs::write(distribution_path, dcsv)
        .with_context(|| format!("writing {}", distribution_path.display()))?;

    Ok(Figure5Output {
        result,
        distribution,
        fits,
        total_fano,
        negativity: analysis::negativity(&w),
        wigner_integral: w.integral,
        mean_phonons,
        mean_photons,
    })
}

/// Sweep values rendered for messages.
pub fn describe_sweep(cfg: &SweepConfig) -> String {
    let var = match cfg.variable {
        SweepVariable::Detuning => "detuning",
        SweepVariable::NMech => "n_mech",
        SweepVariable::NCavity => "n_cavity",
    };
    format!(
        "{} over {} points in [{}, {}]",
        var,
        cfg.values.len(),
        cfg.values.first().unwrap(),
        cfg.values.last().unwrap()
    )
}
