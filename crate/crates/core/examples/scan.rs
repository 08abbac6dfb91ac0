// temporary: reduction-factor trend over the truncation grid
use optoss::fock::TruncationConfig;
use optoss::liouvillian::{build_constrained, ModelParams};
use optoss::reorder::reorder_system;

fn main() {
    for (nc, nm) in [(2usize, 8usize), (2, 16), (2, 32), (4, 8), (4, 16), (4, 32)] {
        let mut p = ModelParams::new(TruncationConfig::new(nc, nm).unwrap());
        p.delta = -0.05;
        p.g0 = 0.15;
        p.drive = 0.25;
        p.kappa = 0.05;
        p.q_mech = 1e4;
        p.n_th = 31.0;
        let sys = build_constrained(&p).unwrap();
        let before = sys.constrained.structure_metrics().unwrap();
        let (r, _) = reorder_system(&sys).unwrap();
        let after = r.constrained.structure_metrics().unwrap();
        println!(
            "Nc={nc} Nm={nm} dim={} B {} -> {} (x{:.2})  P {} -> {} (x{:.2})",
            nc * nm,
            before.total_bandwidth,
            after.total_bandwidth,
            before.total_bandwidth as f64 / after.total_bandwidth as f64,
            before.total_profile,
            after.total_profile,
            before.total_profile as f64 / after.total_profile as f64,
        );
    }
}
