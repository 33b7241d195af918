//! λ-scaling of numerical values and Hamiltonians, and the scaled-family
//! (Hepp-type) experiment.
//!
//! Under a λ-scaling positions and momenta pick up λ^{1/2}, energies and
//! Planck's constant pick up λ, times and masses are unchanged. The scaled
//! energy function is h_λ(x, k) = λ·h(λ^{−1/2}x, λ^{−1/2}k); the family run at
//! fixed numerical α is g^λ(ξ, π) = λ^{−1}h(λ^{1/2}ξ, λ^{1/2}π).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comparator::comparator_scalars;
use crate::error::{invalid, Error, Result};
use crate::grid::{dilate, expectation_a, expectation_position, weyl_displace, GridSpec};
use crate::hamiltonian::{HamiltonianSpec, Monomial, PhasePoint, Polynomial, PotentialModel};
use crate::packets::GaussianPacket;
use crate::reduction::{run_single, ReductionProblem};

/// Planck's constant in J s. Documentation only; computation stays in λ-relative units.
pub const PLANCK_SI: f64 = 6.625e-34;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantityKind {
    Position,
    Momentum,
    Time,
    Mass,
    Energy,
    Planck,
}

impl QuantityKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "position" => Self::Position,
            "momentum" => Self::Momentum,
            "time" => Self::Time,
            "mass" => Self::Mass,
            "energy" => Self::Energy,
            "planck" => Self::Planck,
            other => return invalid(format!("unknown quantity kind '{other}'")),
        })
    }

    /// Exponent e in value ↦ λ^e · value.
    pub fn exponent(self) -> f64 {
        match self {
            Self::Position | Self::Momentum => 0.5,
            Self::Time | Self::Mass => 0.0,
            Self::Energy | Self::Planck => 1.0,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("λ must be positive, got {lambda}"));
    }
    Ok(())
}

/// ℏ₁ = 1, so `scale_value(Planck, 1, λ) = λ`.
pub fn scale_value(kind: QuantityKind, value: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let e = kind.exponent();
    Ok(if e == 0.0 {
        value
    } else if e == 1.0 {
        value * lambda
    } else {
        value * lambda.sqrt()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledQuantity {
    pub kind: QuantityKind,
    pub value: f64,
    pub lambda: f64,
}

impl ScaledQuantity {
    pub fn scaled(&self) -> Result<f64> {
        scale_value(self.kind, self.value, self.lambda)
    }
}

fn scale_polynomial(p: &Polynomial, factor: impl Fn(u32) -> f64) -> Result<Polynomial> {
    let terms = p
        .terms()
        .iter()
        .map(|t| Monomial { powers: t.powers.clone(), coeff: t.coeff * factor(t.degree()) })
        .collect();
    Polynomial::new(p.dim(), terms)
}

fn scale_model(m: &PotentialModel, factor: impl Fn(u32) -> f64) -> Result<PotentialModel> {
    match m.as_polynomial() {
        Some(p) => Ok(PotentialModel::Polynomial(scale_polynomial(p, factor)?)),
        None => Err(Error::Unsupported("λ-scaling needs polynomial potentials".into())),
    }
}

fn rescale(spec: &HamiltonianSpec, v: impl Fn(u32) -> f64, a: impl Fn(u32) -> f64) -> Result<HamiltonianSpec> {
    let mut out = HamiltonianSpec::new(spec.mass(), scale_model(spec.potential(), v)?)?;
    if let Some(vp) = spec.vector_potential() {
        let scaled = vp.iter().map(|c| scale_model(c, &a)).collect::<Result<Vec<_>>>()?;
        out = out.with_vector_potential(scaled)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledFamily {
    pub lambda: f64,
    /// h_λ(x, k) = λ·h(λ^{−1/2}x, λ^{−1/2}k): degree-k coefficient × λ^{1−k/2}.
    pub h_lambda: HamiltonianSpec,
    /// g^λ(ξ, π) = λ^{−1}h(λ^{1/2}ξ, λ^{1/2}π): degree-k coefficient × λ^{k/2−1}.
    pub g_lambda: HamiltonianSpec,
}

pub fn scale_hamiltonian(spec: &HamiltonianSpec, lambda: f64) -> Result<ScaledFamily> {
    check_lambda(lambda)?;
    let pow = |e: f64| lambda.powf(e);
    Ok(ScaledFamily {
        lambda,
        h_lambda: rescale(spec, |k| pow(1.0 - 0.5 * k as f64), |k| pow(0.5 - 0.5 * k as f64))?,
        g_lambda: rescale(spec, |k| pow(0.5 * k as f64 - 1.0), |k| pow(0.5 * k as f64 - 0.5))?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentScalingReport {
    pub lambda: f64,
    /// ⟨Γ_λ(α_λ), a_λ Γ_λ(α_λ)⟩ with a_λ = (Q, λ·(−i∇)).
    pub lhs: Vec<f64>,
    /// λ^{1/2}⟨Γ(0), aΓ(0)⟩ + α_λ.
    pub rhs: Vec<f64>,
    pub residual: f64,
    /// Position variance of Γ_λ per axis, expected λ/2.
    pub position_variance: Vec<f64>,
    pub expected_variance: f64,
    /// Distance between the dilated vacuum and the closed-form λ-coherent state.
    pub dilation_mismatch: f64,
}

/// Γ_λ(α_λ) is the λ-dilated vacuum displaced by α_λ at ℏ = λ; in internal
/// units that is a shift by ξ_λ and a boost by π_λ/λ.
pub fn coherent_scaling_check(alpha_lambda: &PhasePoint, lambda: f64, grid: &GridSpec) -> Result<CoherentScalingReport> {
    check_lambda(lambda)?;
    let n = alpha_lambda.dim();
    if grid.dimension() != n {
        return invalid("grid and α dimensions differ");
    }
    let vacuum = GaussianPacket::vacuum(n).sample_on_grid(grid)?;
    let vac_mean = expectation_a(&vacuum)?;
    let dilated = dilate(&vacuum, 1.0 / lambda)?;
    let closed = GaussianPacket::isotropic(PhasePoint::origin(n), num_complex::Complex64::new(1.0 / lambda, 0.0))?
        .sample_on_grid(grid)?;
    let dilation_mismatch = dilated.distance(&closed)?;
    let boost = PhasePoint::new(alpha_lambda.xi.clone(), alpha_lambda.pi.iter().map(|p| p / lambda).collect())?;
    let state = weyl_displace(&dilated, &boost)?.normalized()?;
    let mut lhs = expectation_a(&state)?;
    for v in lhs[n..].iter_mut() {
        *v *= lambda;
    }
    let rhs: Vec<f64> = vac_mean
        .iter()
        .zip(alpha_lambda.to_vec())
        .map(|(m, a)| lambda.sqrt() * m + a)
        .collect();
    let residual = lhs.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let position_variance = (0..n)
        .map(|i| expectation_position(&state, |x| (x[i] - lhs[i]).powi(2)))
        .collect();
    Ok(CoherentScalingReport {
        lambda,
        lhs,
        rhs,
        residual,
        position_variance,
        expected_variance: 0.5 * lambda,
        dilation_mismatch,
    })
}

/// Which reading of the λ-family a table belongs to. The code path is the same;
/// the second reading (ℏ itself shrinking) is kept only as a labelled alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyReading {
    #[default]
    ScaledHamiltonians,
    DecreasingPlanck,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeppRow {
    pub lambda: f64,
    pub max_error: Option<f64>,
    pub max_duhamel: Option<f64>,
    /// Set when the run failed at this λ (for example the grid is too small).
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeppTable {
    pub reading: FamilyReading,
    /// True for the reading the analysis rejects.
    pub rejected_reading: bool,
    pub alpha: PhasePoint,
    pub horizon: f64,
    pub rows: Vec<HeppRow>,
    pub error_strictly_decreasing: bool,
    pub duhamel_strictly_decreasing: bool,
}

impl HeppTable {
    /// Columns: lambda, error, bound.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,error,bound")?;
        for r in &self.rows {
            let f = |v: Option<f64>| v.map(|x| format!("{x:.10e}")).unwrap_or_else(|| "nan".into());
            writeln!(w, "{:.10e},{},{}", r.lambda, f(r.max_error), f(r.max_duhamel))?;
        }
        Ok(())
    }
}

fn strictly_decreasing(v: &[Option<f64>]) -> bool {
    v.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b < a))
}

/// Runs `problem` with its Hamiltonian replaced by g^λ for each λ (same numerical α0).
pub fn hepp_experiment(problem: &ReductionProblem, lambdas: &[f64], reading: FamilyReading) -> Result<HeppTable> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("λ list must be non-empty and strictly decreasing");
    }
    for &l in lambdas {
        check_lambda(l)?;
    }
    problem.validate()?;
    let scalars = comparator_scalars(&problem.comparator)?;
    let rows: Vec<HeppRow> = lambdas
        .par_iter()
        .map(|&lambda| {
            let attempt = || -> Result<(f64, f64)> {
                let mut p = problem.clone();
                p.hamiltonian = scale_hamiltonian(&problem.hamiltonian, lambda)?.g_lambda;
                let run = run_single(&p, &problem.alpha0, &scalars)?;
                let duhamel = run.duhamel_bound.iter().cloned().fold(0.0f64, f64::max);
                Ok((run.max_error, duhamel))
            };
            match attempt() {
                Ok((e, d)) => HeppRow { lambda, max_error: Some(e), max_duhamel: Some(d), failure: None },
                Err(err) => HeppRow { lambda, max_error: None, max_duhamel: None, failure: Some(err.to_string()) },
            }
        })
        .collect();
    let errors: Vec<Option<f64>> = rows.iter().map(|r| r.max_error).collect();
    let duhamel: Vec<Option<f64>> = rows.iter().map(|r| r.max_duhamel).collect();
    Ok(HeppTable {
        reading,
        rejected_reading: reading == FamilyReading::DecreasingPlanck,
        alpha: problem.alpha0.clone(),
        horizon: problem.horizon,
        error_strictly_decreasing: strictly_decreasing(&errors),
        duhamel_strictly_decreasing: strictly_decreasing(&duhamel),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::Tolerance;
    use proptest::prelude::*;

    #[test]
    fn value_table() {
        assert_eq!(scale_value(QuantityKind::Position, 1.0, 0.25).unwrap(), 0.5);
        assert_eq!(scale_value(QuantityKind::Momentum, 2.0, 0.25).unwrap(), 1.0);
        assert_eq!(scale_value(QuantityKind::Planck, 1.0, 0.25).unwrap(), 0.25);
        assert_eq!(scale_value(QuantityKind::Time, 3.0, 0.1).unwrap(), 3.0);
        assert_eq!(scale_value(QuantityKind::Mass, 3.0, 0.1).unwrap(), 3.0);
        assert_eq!(scale_value(QuantityKind::Energy, 3.0, 0.5).unwrap(), 1.5);
        assert!(scale_value(QuantityKind::Energy, 3.0, 0.0).is_err());
        assert!(QuantityKind::parse("charge").is_err());
        assert_eq!(QuantityKind::parse("planck").unwrap(), QuantityKind::Planck);
    }

    fn coeffs(spec: &HamiltonianSpec) -> Vec<f64> {
        let p = spec.potential().as_polynomial().unwrap();
        let mut c = vec![0.0; 5];
        for t in p.terms() {
            c[t.degree() as usize] += t.coeff;
        }
        c
    }

    #[test]
    fn hamiltonian_coefficients() {
        let quad = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap();
        let f = scale_hamiltonian(&quad, 4.0).unwrap();
        assert_eq!(coeffs(&f.h_lambda)[2], 0.5);
        let cubic = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.0, 1.0 / 6.0]).unwrap();
        let f = scale_hamiltonian(&cubic, 0.25).unwrap();
        assert!((coeffs(&f.h_lambda)[3] - 2.0 / 6.0).abs() < 1e-15);
        assert!((coeffs(&f.g_lambda)[3] - 0.5 / 6.0).abs() < 1e-15);
        let id = scale_hamiltonian(&cubic, 1.0).unwrap();
        assert_eq!(id.h_lambda, cubic);
        assert_eq!(id.g_lambda, cubic);
        let tab = HamiltonianSpec::new(1.0, PotentialModel::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap()).unwrap();
        assert!(matches!(scale_hamiltonian(&tab, 0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn coherent_scaling() {
        let grid = GridSpec::default();
        for (a, l) in [((0.0, 0.0), 1.0), ((1.0, -0.5), 0.25), ((-2.0, 0.3), 2.0), ((0.5, 0.5), 1.0 / 16.0)] {
            let r = coherent_scaling_check(&PhasePoint::new_1d(a.0, a.1), l, &grid).unwrap();
            assert!(r.residual < 1e-9, "{r:?}");
            assert!((r.position_variance[0] - 0.5 * l).abs() < 1e-9);
            assert!(r.dilation_mismatch < 1e-9);
        }
        let r = coherent_scaling_check(&PhasePoint::new_1d(0.0, 0.0), 0.5, &grid).unwrap();
        assert!(r.lhs.iter().all(|v| v.abs() < 1e-12) && r.rhs.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn hepp_quadratic_and_cubic() {
        let mut p = ReductionProblem::new(
            HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap(),
            PhasePoint::new_1d(1.0, 0.0),
            2.0,
            Tolerance::Scalar(1.0),
        );
        p.samples = 20;
        let t = hepp_experiment(&p, &[1.0, 0.25], FamilyReading::ScaledHamiltonians).unwrap();
        assert!(t.rows.iter().all(|r| r.max_error.unwrap() < 1e-6));
        assert!(!t.rejected_reading);
        p.hamiltonian = crate::corpus::preset("cubic-perturbed").unwrap();
        let t = hepp_experiment(&p, &[1.0, 0.25, 1.0 / 16.0], FamilyReading::ScaledHamiltonians).unwrap();
        assert!(t.error_strictly_decreasing && t.duhamel_strictly_decreasing, "{:?}", t.rows);
        // full-strength cubic: mass tunnels through the barrier at q = −2 by t ≈ 1.4,
        // so the horizon is kept short
        p.hamiltonian = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5, 1.0 / 6.0]).unwrap();
        p.alpha0 = PhasePoint::new_1d(0.5, 0.0);
        p.horizon = 1.0;
        let t = hepp_experiment(&p, &[1.0, 0.25, 1.0 / 16.0], FamilyReading::ScaledHamiltonians).unwrap();
        assert!(t.error_strictly_decreasing && t.duhamel_strictly_decreasing, "{:?}", t.rows);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
        assert!(hepp_experiment(&p, &[0.25, 1.0], FamilyReading::ScaledHamiltonians).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(v in -1e3f64..1e3, l in 1e-3f64..1e3, k in 0usize..6) {
            let kind = [QuantityKind::Position, QuantityKind::Momentum, QuantityKind::Time,
                QuantityKind::Mass, QuantityKind::Energy, QuantityKind::Planck][k];
            let back = scale_value(kind, scale_value(kind, v, l).unwrap(), 1.0 / l).unwrap();
            prop_assert!((back - v).abs() <= 1e-14 * v.abs().max(1.0));
        }

        #[test]
        fn magnitude_invariance(x in -3.0f64..3.0, k in -3.0f64..3.0, l in 0.05f64..20.0) {
            let spec = HamiltonianSpec::polynomial_1d(1.3, &[0.2, -0.4, 0.5, 1.0 / 6.0, 0.05]).unwrap();
            let f = scale_hamiltonian(&spec, l).unwrap();
            let a = PhasePoint::new_1d(x, k);
            let al = PhasePoint::new_1d(l.sqrt() * x, l.sqrt() * k);
            let lhs = f.h_lambda.eval_h(&al).unwrap();
            let rhs = l * spec.eval_h(&a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
            // g^λ at α equals λ^{-1}h at α_λ
            let g = f.g_lambda.eval_h(&a).unwrap();
            prop_assert!((g - spec.eval_h(&al).unwrap() / l).abs() <= 1e-12 * g.abs().max(1.0));
        }
    }
}
