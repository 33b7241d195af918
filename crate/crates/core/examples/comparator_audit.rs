//! Operator scalars of e^{−sN} and coherent-state matrix elements against their closed forms.

use qcreduce::comparator::{coherent_matrix_elements, comparator_scalars, ComparatorSpec};
use qcreduce::PhasePoint;

fn main() -> qcreduce::Result<()> {
    for s in [std::f64::consts::LN_2, 1.0, 2.0] {
        let spec = ComparatorSpec::new(s)?;
        let sc = comparator_scalars(&spec)?;
        println!(
            "s = {s:.4}: ‖Ω̃‖ = {:.6}, Tr = {:.6}, ‖QΩ̃‖² = {:.5} ≤ {:.5}, order {}",
            sc.norm, sc.trace, sc.q_norm_sq, sc.aomega_bound, sc.order
        );
        for alpha in [PhasePoint::new_1d(0.0, 0.0), PhasePoint::new_1d(1.5, -1.0)] {
            let el = coherent_matrix_elements(&spec, &alpha)?;
            println!(
                "    α = {:?}: ⟨Γ,Ω̃Γ⟩ {:.8} vs {:.8}, ‖Ω̃⁻¹Γ‖² {:.6} vs {:.6}",
                alpha.to_vec(),
                el.diag_measured,
                el.diag,
                el.inv_norm_sq_measured,
                el.inv_norm_sq
            );
        }
    }
    Ok(())
}
