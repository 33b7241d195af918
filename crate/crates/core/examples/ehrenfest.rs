//! Ehrenfest identity along grid runs and the gap ⟨V′(q)⟩ − V′(⟨q⟩) that separates quantum from classical.

use num_complex::Complex64 as C64;
use qcreduce::grid::GridSpec;
use qcreduce::packets::GaussianPacket;
use qcreduce::reduction::ehrenfest_residuals;
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    let grid = GridSpec::default();
    let psi = GaussianPacket::isotropic(PhasePoint::new_1d(1.0, 0.0), C64::new(1.0, 0.0))?.sample_on_grid(&grid)?;
    for name in corpus::PRESETS {
        let r = ehrenfest_residuals(&corpus::preset(name)?, &psi, 2.0, 1e-3)?;
        println!(
            "{name:>16}: max identity residual {:.2e}, max classicality gap {:.4}",
            r.max_identity_residual, r.max_classicality_gap
        );
    }
    Ok(())
}
