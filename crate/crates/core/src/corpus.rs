//! Named 1D test systems (m = 1).

use crate::error::{invalid, Result};
use crate::hamiltonian::HamiltonianSpec;

pub const PRESETS: [&str; 5] = ["harmonic", "free", "cubic-perturbed", "quartic", "double-well"];

/// Polynomial coefficients c_k of V(q) = Σ c_k q^k.
pub fn coefficients(name: &str) -> Result<Vec<f64>> {
    Ok(match name {
        "harmonic" => vec![0.0, 0.0, 0.5],
        "free" => vec![0.0],
        "cubic-perturbed" => vec![0.0, 0.0, 0.5, 0.1 / 6.0],
        "quartic" => vec![0.0, 0.0, 0.0, 0.0, 0.25],
        // (q² − 9/4)²/4: tunnelling splitting ≈ 0.262, next gap ≈ 1.21
        "double-well" => vec![81.0 / 64.0, 0.0, -1.125, 0.0, 0.25],
        other => return invalid(format!("unknown preset '{other}' (known: {})", PRESETS.join(", "))),
    })
}

pub fn preset(name: &str) -> Result<HamiltonianSpec> {
    HamiltonianSpec::polynomial_1d(1.0, &coefficients(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build() {
        for name in PRESETS {
            assert_eq!(preset(name).unwrap().dimension(), 1);
        }
        assert!(preset("anharmonic").is_err());
        let dw = preset("double-well").unwrap();
        assert!(dw.potential().value(&[1.5]).unwrap().abs() < 1e-15);
        assert!(dw.potential().value(&[-1.5]).unwrap().abs() < 1e-15);
    }
}
