//! Structural trends of the reordering across truncation sizes: the
//! reduction factors are well above one everywhere and grow with the
//! state-space dimension.

use optoss::fock::TruncationConfig;
use optoss::liouvillian::{build_constrained, ModelParams};
use optoss::precond::{ilutp, IluConfig};
use optoss::reorder::reorder_system;

fn params(nc: usize, nm: usize) -> ModelParams {
    let mut p = ModelParams::new(TruncationConfig::new(nc, nm).unwrap());
    p.delta = -0.05;
    p.g0 = 0.15;
    p.drive = 0.25;
    p.kappa = 0.05;
    p.q_mech = 1e4;
    p.n_th = 31.0;
    p
}

fn reductions(nc: usize, nm: usize) -> (f64, f64) {
    let sys = build_constrained(&params(nc, nm)).unwrap();
    let before = sys.constrained.structure_metrics().unwrap();
    let (r, _) = reorder_system(&sys).unwrap();
    let after = r.constrained.structure_metrics().unwrap();
    (
        before.total_bandwidth as f64 / after.total_bandwidth as f64,
        before.total_profile as f64 / after.total_profile as f64,
    )
}

fn fig3_params(nc: usize, nm: usize) -> ModelParams {
    // high-quality-cavity regime: kappa = 0.05, Delta = -kappa, g0 = 3 kappa,
    // E = 0.25, Q_m = 1e4, n_th = 31
    let mut p = ModelParams::new(TruncationConfig::new(nc, nm).unwrap());
    p.kappa = 0.05;
    p.delta = -0.05;
    p.g0 = 0.15;
    p.drive = 0.25;
    p.q_mech = 1e4;
    p.n_th = 31.0;
    p
}

/// Complete-LU fill factors under natural and RCM orderings: the natural
/// ordering's fill grows strictly faster with the Hilbert-space dimension.
#[test]
fn direct_fill_grows_faster_under_natural_ordering() {
    for nc in [2usize, 4] {
        let mut prev: Option<(f64, f64)> = None;
        for nm in [8usize, 12, 16] {
            let sys = build_constrained(&fig3_params(nc, nm)).unwrap();
            let natural = ilutp(&sys.constrained, &IluConfig::direct())
                .unwrap()
                .fill_factor_achieved;
            let (rsys, _) = reorder_system(&sys).unwrap();
            let rcm = ilutp(&rsys.constrained, &IluConfig::direct())
                .unwrap()
                .fill_factor_achieved;
            println!("Nc={nc} Nm={nm}: fill natural {natural:.1}, rcm {rcm:.1}");
            assert!(
                natural > rcm,
                "natural fill {natural:.1} not above rcm fill {rcm:.1} at ({nc}, {nm})"
            );
            if let Some((pn, pr)) = prev {
                assert!(
                    natural / pn > rcm / pr,
                    "natural fill must grow faster: natural x{:.2} vs rcm x{:.2} at ({nc}, {nm})",
                    natural / pn,
                    rcm / pr
                );
            }
            prev = Some((natural, rcm));
        }
    }
}

#[test]
fn reduction_factors_grow_with_dimension() {
    for nc in [2usize, 4] {
        let mut prev_b = 0.0;
        let mut prev_p = 0.0;
        for nm in [8usize, 16, 32] {
            let (b, p) = reductions(nc, nm);
            println!("Nc={nc} Nm={nm}: B reduction x{b:.2}, P reduction x{p:.2}");
            assert!(b > 1.5, "bandwidth reduction {b:.2} not above 1.5 at ({nc}, {nm})");
            assert!(p > 1.5, "profile reduction {p:.2} not above 1.5 at ({nc}, {nm})");
            assert!(
                b > prev_b && p > prev_p,
                "reduction factors should grow with N_m at fixed N_c"
            );
            prev_b = b;
            prev_p = p;
        }
    }
}
