//! Unit rescaling: the same numerical initial point under g^λ gives smaller errors as λ → 0.

use qcreduce::reduction::{ReductionProblem, Tolerance};
use qcreduce::scaling::{hepp_experiment, scale_value, FamilyReading, QuantityKind};
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    for kind in ["position", "momentum", "time", "energy", "planck"] {
        let k = QuantityKind::parse(kind)?;
        println!("{kind:>9}: 1.0 at λ = 1/4 → {}", scale_value(k, 1.0, 0.25)?);
    }
    let spec = corpus::preset("cubic-perturbed")?;
    let mut p = ReductionProblem::new(spec, PhasePoint::new_1d(1.0, 0.0), 2.0, Tolerance::Scalar(1.0));
    p.samples = 50;
    let table = hepp_experiment(&p, &[1.0, 0.25, 1.0 / 16.0], FamilyReading::ScaledHamiltonians)?;
    table.write_csv(std::io::stdout())?;
    println!("errors strictly decreasing: {}", table.error_strictly_decreasing);
    Ok(())
}
