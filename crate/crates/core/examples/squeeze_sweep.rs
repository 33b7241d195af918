//! Width sweep: a narrower or wider initial packet trades the Duhamel term against the comparator term.

use qcreduce::comparator::ComparatorSpec;
use qcreduce::reduction::{squeeze_sweep, ReductionProblem, Tolerance};
use qcreduce::{corpus, PhasePoint};

fn main() -> qcreduce::Result<()> {
    let spec = corpus::preset("cubic-perturbed")?;
    let mut p = ReductionProblem::new(spec, PhasePoint::new_1d(0.0, 0.0), 0.2, Tolerance::Scalar(1.0));
    p.comparator = ComparatorSpec::new(0.2)?;
    p.samples = 20;
    let table = squeeze_sweep(&p, &[0.25, 0.5, 1.0, 2.0, 4.0])?;
    println!("{:>6} {:>12} {:>12} {:>10} {:>12}", "d", "Duhamel", "‖(1−Ω)Wψ‖", "E", "total");
    for r in &table.rows {
        println!(
            "{:>6} {:>12.4e} {:>12.4e} {:>10.4} {:>12.4e}",
            r.d, r.duhamel_term, r.comparator_term, r.magnitude, r.total_bound
        );
    }
    println!("argmin d = {} (interior: {})", table.argmin_d, table.interior_minimum);
    Ok(())
}
