//! Localising functional for a finite set of states, and the immediate spreading of a cut-off packet.

use num_complex::Complex64 as C64;
use qcreduce::grid::{construct_localizer, expectation_position, propagate, weyl_displace, GridSpec, GridWavefunction};
use qcreduce::packets::GaussianPacket;
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    let grid = GridSpec::default();
    let vac = GaussianPacket::vacuum(1).sample_on_grid(&grid)?;
    let moved = weyl_displace(&vac, &PhasePoint::new_1d(3.0, -1.0))?;
    let set = [vac, moved];
    let loc = construct_localizer(&set)?;
    println!("first radii: {:?}", &loc.radii[..6]);
    for psi in &set {
        println!("⟨F(Q)⟩ = {:.4}", expectation_position(psi, |x| loc.value(x)));
    }
    let cut = GridWavefunction::from_fn(grid, |x| {
        C64::new(if x[0].abs() <= 3.0 { (-0.5 * x[0] * x[0]).exp() } else { 0.0 }, 0.0)
    })?
    .normalized()?;
    let run = propagate(&corpus::preset("harmonic")?, &cut, 1e-2, 1e-3, 1)?;
    for (t, psi) in run.times.iter().zip(&run.states).step_by(5) {
        let outside: f64 = grid
            .axis()
            .iter()
            .zip(psi.position_density())
            .filter(|(x, _)| x.abs() > 3.0)
            .map(|(_, m)| m * grid.cell())
            .sum();
        println!("t = {t:.3}: mass outside |x| ≤ 3 = {outside:.3e}");
    }
    Ok(())
}
