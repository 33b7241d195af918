//! Gaussian packet under the approximating evolution W against the grid evolution U.

use num_complex::Complex64 as C64;
use qcreduce::classical::integrate_flow;
use qcreduce::grid::{propagate, GridSpec};
use qcreduce::packets::{ApproxPropagator, GaussianPacket};
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    let spec = corpus::preset("cubic-perturbed")?;
    let grid = GridSpec::default();
    let alpha = PhasePoint::new_1d(1.0, 0.0);
    let packet = GaussianPacket::isotropic(alpha.clone(), C64::new(1.0, 0.0))?;
    let traj = integrate_flow(&spec, &alpha, 3.0, 1e-3)?;
    let w = ApproxPropagator::new(&spec, &traj, &packet)?;
    let u = propagate(&spec, &packet.sample_on_grid(&grid)?, 3.0, 1e-3, 500)?;
    println!("{:>6} {:>22} {:>10}", "t", "M(t)", "‖(W−U)ψ‖");
    for (t, psi) in u.times.iter().zip(&u.states) {
        let state = w.state(w.index_of(*t)?);
        let m = state.packet.width()[(0, 0)];
        let d = state.packet.sample_on_grid(&grid)?.distance(psi)?;
        println!("{t:>6.2} {:>10.5} {:+.5}i {d:>10.2e}", m.re, m.im);
    }
    Ok(())
}
