//! Classical orbits of the corpus: energy drift and the finite-horizon bound/scattering label.

use qcreduce::classical::{classify_classical, integrate_flow};
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    let start = PhasePoint::new_1d(1.0, 0.5);
    for name in corpus::PRESETS {
        let spec = corpus::preset(name)?;
        let traj = integrate_flow(&spec, &start, 20.0, 1e-3)?;
        let c = classify_classical(&spec, &start, 20.0, 1e-2, &[2.0, 4.0, 8.0])?;
        println!(
            "{name:>16}: end {:?}, energy drift {:.1e}, label {:?} (max |α| {:.2})",
            traj.last().to_vec(),
            traj.energy_drift(),
            c.label,
            c.max_norm
        );
    }
    Ok(())
}
