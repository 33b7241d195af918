//! Time averages in a random finite system and recurrence of quasi-periodic states.

use num_complex::Complex64 as C64;
use qcreduce::spectral::{ergodic_average, ergodic_convergence, random_system, recurrence_time, CVector, FiniteEvolution};

fn main() -> qcreduce::Result<()> {
    let (evo, psi, f) = random_system(7, 8)?;
    for horizon in [1e2, 1e3, 1e4] {
        let r = ergodic_average(&evo, &psi, &f, horizon)?;
        println!("T = {horizon:>6}: measured {:.6}, Tr[Fρ] {:.6}, error {:.2e}", r.measured, r.predicted, r.error);
    }
    let fit = ergodic_convergence(&evo, &psi, &f, 50.0, 2000.0, 12)?;
    println!("log-log slope of the error envelope: {:.3}", fit.slope);

    let levels = [0.0, 1.0, 2f64.sqrt()];
    let evo3 = FiniteEvolution::diagonal(&levels)?;
    let u = CVector::from_element(3, C64::new(1.0 / 3f64.sqrt(), 0.0));
    for eps in [0.3, 0.1, 0.05] {
        let t = recurrence_time(&evo3, &u, eps, 1.0, 1e5)?;
        println!("levels {levels:?}, ε = {eps}: first return {t:?}");
    }
    Ok(())
}
