//! Reduction verdicts over a sampled region for the harmonic and cubic-perturbed systems.

use qcreduce::classical::PhaseRegion;
use qcreduce::reduction::{verdict, ReductionProblem, Tolerance};
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    for (name, eps) in [("harmonic", 1e-6), ("cubic-perturbed", 5e-2), ("cubic-perturbed", 1e-3)] {
        let center = PhasePoint::new_1d(0.5, 0.0);
        let mut p = ReductionProblem::new(corpus::preset(name)?, center.clone(), 1.0, Tolerance::Scalar(eps));
        p.region = Some(PhaseRegion::ball(center, 0.5)?);
        p.samples = 50;
        let r = verdict(&p)?;
        println!(
            "{name:>16} ε = {eps:.0e}: {:?} over {} points, max error {:.3e}",
            r.verdict, r.sampled_points, r.max_error
        );
        for run in &r.runs {
            println!(
                "    α0 = {:?}: error {:.2e}, bound dominates {}, E = {:.3}",
                run.alpha0.to_vec(),
                run.max_error,
                run.bound_dominates,
                run.magnitude
            );
        }
    }
    Ok(())
}
