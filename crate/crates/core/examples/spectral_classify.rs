//! Bound/scattering proxies from average stays and transit times.

use num_complex::Complex64 as C64;
use qcreduce::grid::GridSpec;
use qcreduce::spectral::{
    classify_quantum, grid_vector, position_projector, ClassifierThresholds, FiniteEvolution, StayCurve,
};
use qcreduce::corpus;
use qcreduce::packets::GaussianPacket;
use qcreduce::PhasePoint;

fn main() -> qcreduce::Result<()> {
    let grid = GridSpec::new(1, 256, 8.0)?;
    let evo = FiniteEvolution::from_grid(&corpus::preset("double-well")?, &grid)?;
    let right = position_projector(&grid, |x| x >= 0.0);
    // the symmetric/antisymmetric pair tunnels between the wells
    let pair = (evo.eigenvector(0) + evo.eigenvector(1)).unscale(2f64.sqrt());
    let curve = StayCurve::finite(&evo, &pair, &right, 400.0, Some(0.05))?;
    for horizon in [5.0, 400.0] {
        let c = classify_quantum(&curve, horizon, ClassifierThresholds::default())?;
        println!("double-well pair, T = {horizon:>5}: {:?}, μ(T) = {:.4}", c.label, c.stay[2]);
    }
    let wide = GridSpec::new(1, 1024, 32.0)?;
    let free = FiniteEvolution::from_grid(&corpus::preset("free")?, &wide)?;
    let packet = GaussianPacket::isotropic(PhasePoint::new_1d(-3.0, 5.0), C64::new(1.0, 0.0))?;
    let psi = grid_vector(&packet.sample_on_grid(&wide)?);
    let left = position_projector(&wide, |x| x < 0.0);
    let curve = StayCurve::finite(&free, &psi, &left, 4.0, Some(0.01))?;
    let c = classify_quantum(&curve, 4.0, ClassifierThresholds::default())?;
    println!("free packet leaving x < 0: forward {:?}, τ at T/4, T/2, T = {:.4?}", c.forward_label, c.transit);
    Ok(())
}
