//! Hamiltonians h(ξ, π) = |π − A(ξ)|²/2m + V(ξ) with ℏ = 1.
//!
//! The quantum side only ever sees A = 0; a vector potential marks the spec as
//! classical-only.

mod polynomial;
mod spline;

pub use polynomial::{Monomial, Polynomial, MAX_AXIS_DEGREE, MAX_CROSS_DEGREE};
pub use spline::CubicSpline;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Classical phase point α = (ξ, π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhasePoint")]
pub struct PhasePoint {
    pub xi: Vec<f64>,
    pub pi: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPhasePoint {
    xi: Vec<f64>,
    pi: Vec<f64>,
}

impl TryFrom<RawPhasePoint> for PhasePoint {
    type Error = Error;
    fn try_from(r: RawPhasePoint) -> Result<Self> {
        PhasePoint::new(r.xi, r.pi)
    }
}

impl PhasePoint {
    pub fn new(xi: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if xi.len() != pi.len() || xi.is_empty() || xi.len() > 3 {
            return invalid("phase point needs matching xi/pi of length 1..=3");
        }
        if xi.iter().chain(&pi).any(|v| !v.is_finite()) {
            return invalid("phase point has non-finite entries");
        }
        Ok(Self { xi, pi })
    }

    pub fn new_1d(xi: f64, pi: f64) -> Self {
        Self {
            xi: vec![xi],
            pi: vec![pi],
        }
    }

    pub fn origin(n: usize) -> Self {
        Self {
            xi: vec![0.0; n],
            pi: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// Stacked (ξ, π).
    pub fn to_vec(&self) -> Vec<f64> {
        self.xi.iter().chain(&self.pi).copied().collect()
    }

    pub fn from_stacked(v: &[f64]) -> Self {
        let n = v.len() / 2;
        Self {
            xi: v[..n].to_vec(),
            pi: v[n..].to_vec(),
        }
    }

    pub fn add(&self, other: &PhasePoint) -> PhasePoint {
        PhasePoint {
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| a + b).collect(),
            pi: self.pi.iter().zip(&other.pi).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn neg(&self) -> PhasePoint {
        PhasePoint {
            xi: self.xi.iter().map(|v| -v).collect(),
            pi: self.pi.iter().map(|v| -v).collect(),
        }
    }

    /// Symplectic form ω(α, β) = ξ_α·π_β − π_α·ξ_β.
    pub fn symplectic(&self, other: &PhasePoint) -> f64 {
        let a: f64 = self.xi.iter().zip(&other.pi).map(|(x, p)| x * p).sum();
        let b: f64 = self.pi.iter().zip(&other.xi).map(|(p, x)| p * x).sum();
        a - b
    }

    /// Componentwise |α − β| as a stacked 2n-vector.
    pub fn abs_diff(&self, other: &PhasePoint) -> Vec<f64> {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b).abs())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.to_vec().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// |z|² with z = (ξ + iπ)/√2, the coherent-state label modulus.
    pub fn label_modulus_sq(&self) -> f64 {
        0.5 * self.to_vec().iter().map(|v| v * v).sum::<f64>()
    }
}

/// Potential energy V(ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialConfig", into = "PotentialConfig")]
pub enum PotentialModel {
    Polynomial(Polynomial),
    /// One-dimensional natural cubic spline.
    Tabulated(CubicSpline),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum PotentialConfig {
    Polynomial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coeffs: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dimension: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        terms: Option<Vec<TermConfig>>,
    },
    Tabulated {
        x: Vec<f64>,
        v: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermConfig {
    powers: Vec<u32>,
    coeff: f64,
}

impl TryFrom<PotentialConfig> for PotentialModel {
    type Error = Error;
    fn try_from(c: PotentialConfig) -> Result<Self> {
        match c {
            PotentialConfig::Polynomial {
                coeffs: Some(c),
                terms: None,
                dimension: None | Some(1),
            } => Ok(Self::Polynomial(Polynomial::from_coeffs(&c)?)),
            PotentialConfig::Polynomial {
                coeffs: None,
                terms: Some(t),
                dimension,
            } => {
                let dim = dimension
                    .or_else(|| t.first().map(|m| m.powers.len()))
                    .unwrap_or(1);
                let terms = t
                    .into_iter()
                    .map(|m| Monomial {
                        powers: m.powers,
                        coeff: m.coeff,
                    })
                    .collect();
                Ok(Self::Polynomial(Polynomial::new(dim, terms)?))
            }
            PotentialConfig::Polynomial { .. } => Err(Error::Schema(
                "polynomial potential needs exactly one of `coeffs` (1D) or `terms`".into(),
            )),
            PotentialConfig::Tabulated { x, v } => Ok(Self::Tabulated(CubicSpline::new(x, v)?)),
        }
    }
}

impl From<PotentialModel> for PotentialConfig {
    fn from(p: PotentialModel) -> Self {
        match p {
            PotentialModel::Polynomial(p) => match p.coeffs_1d() {
                Some(c) => PotentialConfig::Polynomial {
                    coeffs: Some(c),
                    dimension: None,
                    terms: None,
                },
                None => PotentialConfig::Polynomial {
                    coeffs: None,
                    dimension: Some(p.dim()),
                    terms: Some(
                        p.terms()
                            .iter()
                            .map(|t| TermConfig {
                                powers: t.powers.clone(),
                                coeff: t.coeff,
                            })
                            .collect(),
                    ),
                },
            },
            PotentialModel::Tabulated(s) => PotentialConfig::Tabulated {
                x: s.knots().to_vec(),
                v: s.values().to_vec(),
            },
        }
    }
}

impl PotentialModel {
    /// V(x) = Σ c_k x^k.
    pub fn polynomial_1d(coeffs: &[f64]) -> Result<Self> {
        Ok(Self::Polynomial(Polynomial::from_coeffs(coeffs)?))
    }

    pub fn tabulated(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Ok(Self::Tabulated(CubicSpline::new(x, v)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polynomial(p) => p.dim(),
            Self::Tabulated(_) => 1,
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self {
            Self::Polynomial(p) => Some(p),
            Self::Tabulated(_) => None,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Self::Polynomial(p) if p.degree() <= 2)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Polynomial(p) => Ok(p.eval(x)),
            Self::Tabulated(s) => Ok(s.eval_derivs(x[0])?[0]),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Polynomial(p) => Ok(p.gradient(x)),
            Self::Tabulated(s) => Ok(vec![s.eval_derivs(x[0])?[1]]),
        }
    }

    /// Row-major n×n.
    pub fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Polynomial(p) => Ok(p.hessian(x)),
            Self::Tabulated(s) => Ok(vec![s.eval_derivs(x[0])?[2]]),
        }
    }

    /// Flat n×n×n; polynomial potentials only.
    pub fn third(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Polynomial(p) => Ok(p.third(x)),
            Self::Tabulated(_) => Err(Error::Unsupported(
                "third derivative of a tabulated potential".into(),
            )),
        }
    }

    /// r(x) = V(ξ+x) − V(ξ) − V′(ξ)·x − ½ x·V″(ξ)x.
    pub fn taylor_remainder(&self, center: &[f64], x: &[f64]) -> Result<f64> {
        if let Self::Polynomial(p) = self {
            // exact: zero polynomial for quadratic V
            return Ok(p.shifted(center).truncate_below(3).eval(x));
        }
        let n = self.dim();
        let shifted: Vec<f64> = center.iter().zip(x).map(|(c, y)| c + y).collect();
        let v = self.value(&shifted)?;
        let v0 = self.value(center)?;
        let g = self.gradient(center)?;
        let h = self.hessian(center)?;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * h[i * n + j] * x[j];
            }
        }
        let lin: f64 = g.iter().zip(x).map(|(a, b)| a * b).sum();
        Ok(v - v0 - lin - 0.5 * quad)
    }

    /// The remainder as a polynomial in the displacement (degree ≥ 3 part of V(ξ+·)).
    pub fn remainder_polynomial(&self, center: &[f64]) -> Result<Polynomial> {
        match self {
            Self::Polynomial(p) => Ok(p.shifted(center).truncate_below(3)),
            Self::Tabulated(_) => Err(Error::Unsupported(
                "remainder moments need a polynomial potential".into(),
            )),
        }
    }
}

/// Mass, potential and optional classical vector potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecInput")]
pub struct HamiltonianSpec {
    mass: f64,
    dimension: usize,
    potential: PotentialModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    vector_potential: Option<Vec<PotentialModel>>,
    classical_only: bool,
}

/// A full specification or the name of a built-in preset.
#[derive(Deserialize)]
#[serde(transparent)]
struct SpecInput(serde_json::Value);

impl TryFrom<SpecInput> for HamiltonianSpec {
    type Error = Error;
    fn try_from(r: SpecInput) -> Result<Self> {
        match r.0 {
            serde_json::Value::String(name) => crate::corpus::preset(&name),
            other => serde_json::from_value::<RawSpec>(other)?.try_into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    mass: f64,
    #[serde(default)]
    dimension: Option<usize>,
    potential: PotentialModel,
    #[serde(default)]
    vector_potential: Option<Vec<PotentialModel>>,
    #[serde(default)]
    classical_only: Option<bool>,
}

impl TryFrom<RawSpec> for HamiltonianSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        let mut spec = HamiltonianSpec::new(r.mass, r.potential)?;
        if let Some(d) = r.dimension {
            if d != spec.dimension {
                return invalid(format!(
                    "dimension {d} disagrees with potential dimension {}",
                    spec.dimension
                ));
            }
        }
        if let Some(a) = r.vector_potential {
            spec = spec.with_vector_potential(a)?;
        }
        if r.classical_only == Some(false) && spec.vector_potential.is_some() {
            return invalid("a vector potential forces classical_only = true");
        }
        Ok(spec)
    }
}

impl HamiltonianSpec {
    pub fn new(mass: f64, potential: PotentialModel) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return invalid(format!("mass must be positive, got {mass}"));
        }
        Ok(Self {
            mass,
            dimension: potential.dim(),
            potential,
            vector_potential: None,
            classical_only: false,
        })
    }

    /// 1D shorthand: V(x) = Σ c_k x^k.
    pub fn polynomial_1d(mass: f64, coeffs: &[f64]) -> Result<Self> {
        Self::new(mass, PotentialModel::polynomial_1d(coeffs)?)
    }

    pub fn with_vector_potential(mut self, a: Vec<PotentialModel>) -> Result<Self> {
        if a.len() != self.dimension || a.iter().any(|c| c.dim() != self.dimension) {
            return invalid("vector potential needs one n-dimensional component per axis");
        }
        self.vector_potential = Some(a);
        self.classical_only = true;
        Ok(self)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn potential(&self) -> &PotentialModel {
        &self.potential
    }

    pub fn vector_potential(&self) -> Option<&[PotentialModel]> {
        self.vector_potential.as_deref()
    }

    pub fn classical_only(&self) -> bool {
        self.classical_only
    }

    /// h splits as T(π) + V(ξ).
    pub fn is_separable(&self) -> bool {
        self.vector_potential.is_none()
    }

    pub fn is_quadratic(&self) -> bool {
        self.is_separable() && self.potential.is_quadratic()
    }

    /// Same kinetic term, different potential.
    pub fn with_potential(&self, potential: PotentialModel) -> Result<Self> {
        let mut s = Self::new(self.mass, potential)?;
        if let Some(a) = &self.vector_potential {
            s = s.with_vector_potential(a.clone())?;
        }
        Ok(s)
    }

    fn check_dim(&self, alpha: &PhasePoint) -> Result<()> {
        if alpha.dim() != self.dimension {
            return invalid(format!(
                "phase point dimension {} does not match Hamiltonian dimension {}",
                alpha.dim(),
                self.dimension
            ));
        }
        if alpha.to_vec().iter().any(|v| !v.is_finite()) {
            return invalid("phase point has non-finite entries");
        }
        Ok(())
    }

    /// Kinetic momentum π − A(ξ).
    fn kinetic_momentum(&self, alpha: &PhasePoint) -> Result<Vec<f64>> {
        match &self.vector_potential {
            None => Ok(alpha.pi.clone()),
            Some(a) => a
                .iter()
                .zip(&alpha.pi)
                .map(|(ai, p)| Ok(p - ai.value(&alpha.xi)?))
                .collect(),
        }
    }

    pub fn eval_h(&self, alpha: &PhasePoint) -> Result<f64> {
        self.check_dim(alpha)?;
        let k = self.kinetic_momentum(alpha)?;
        let kin: f64 = k.iter().map(|v| v * v).sum::<f64>() / (2.0 * self.mass);
        Ok(kin + self.potential.value(&alpha.xi)?)
    }

    /// Stacked (∂h/∂ξ, ∂h/∂π).
    pub fn gradient_h(&self, alpha: &PhasePoint) -> Result<Vec<f64>> {
        self.check_dim(alpha)?;
        let n = self.dimension;
        let k = self.kinetic_momentum(alpha)?;
        let mut g = vec![0.0; 2 * n];
        let gv = self.potential.gradient(&alpha.xi)?;
        g[..n].copy_from_slice(&gv);
        for i in 0..n {
            g[n + i] = k[i] / self.mass;
        }
        if let Some(a) = &self.vector_potential {
            for (i, ai) in a.iter().enumerate() {
                let da = ai.gradient(&alpha.xi)?;
                for j in 0..n {
                    g[j] -= k[i] / self.mass * da[j];
                }
            }
        }
        Ok(g)
    }

    /// 2n×2n Hessian with blocks (ξξ, ξπ; πξ, ππ).
    pub fn hessian_h(&self, alpha: &PhasePoint) -> Result<DMatrix<f64>> {
        self.check_dim(alpha)?;
        let n = self.dimension;
        let m = self.mass;
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        let hv = self.potential.hessian(&alpha.xi)?;
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = hv[i * n + j];
            }
            h[(n + i, n + i)] = 1.0 / m;
        }
        if let Some(a) = &self.vector_potential {
            let k = self.kinetic_momentum(alpha)?;
            for (i, ai) in a.iter().enumerate() {
                let da = ai.gradient(&alpha.xi)?;
                let dda = ai.hessian(&alpha.xi)?;
                for j in 0..n {
                    for l in 0..n {
                        h[(j, l)] += (da[j] * da[l] - k[i] * dda[j * n + l]) / m;
                    }
                    h[(j, n + i)] -= da[j] / m;
                    h[(n + i, j)] -= da[j] / m;
                }
            }
        }
        Ok(h)
    }

    /// Pointwise cubic-and-higher remainder of V about `xi_center`.
    pub fn taylor_remainder_v(&self, xi_center: &[f64], x: &[f64]) -> Result<f64> {
        if xi_center.len() != self.dimension || x.len() != self.dimension {
            return invalid("remainder arguments must match the Hamiltonian dimension");
        }
        self.potential.taylor_remainder(xi_center, x)
    }

    /// Hamilton's vector field α̇ = J·h⁽¹⁾ = (∂h/∂π, −∂h/∂ξ), stacked.
    pub fn vector_field(&self, alpha: &PhasePoint) -> Result<Vec<f64>> {
        let g = self.gradient_h(alpha)?;
        let n = self.dimension;
        let mut f = vec![0.0; 2 * n];
        for i in 0..n {
            f[i] = g[n + i];
            f[n + i] = -g[i];
        }
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cubic() -> HamiltonianSpec {
        HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.0, 1.0 / 6.0]).unwrap()
    }

    #[test]
    fn spec_from_preset_name() {
        let s: HamiltonianSpec = serde_json::from_str("\"quartic\"").unwrap();
        assert_eq!(s, crate::corpus::preset("quartic").unwrap());
        assert!(serde_json::from_str::<HamiltonianSpec>("\"sextic\"").is_err());
        let e = serde_json::from_str::<HamiltonianSpec>(r#"{"mass": 1, "potential": {"type": "polynomial", "coeffs": [0]}, "colour": 1}"#)
            .unwrap_err()
            .to_string();
        assert!(e.contains("colour"), "{e}");
    }

    #[test]
    fn energies() {
        let h = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(h.eval_h(&PhasePoint::new_1d(1.0, 0.0)).unwrap(), 0.5);
        let free = HamiltonianSpec::polynomial_1d(2.0, &[0.0]).unwrap();
        assert_eq!(free.eval_h(&PhasePoint::new_1d(0.0, 4.0)).unwrap(), 4.0);
        let e = cubic().eval_h(&PhasePoint::new_1d(2.0, 1.0)).unwrap();
        assert!((e - (0.5 + 8.0 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn gradients_and_hessians() {
        let h = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(h.gradient_h(&PhasePoint::new_1d(1.0, 0.0)).unwrap(), vec![1.0, 0.0]);
        let free = HamiltonianSpec::polynomial_1d(2.0, &[0.0]).unwrap();
        assert_eq!(free.gradient_h(&PhasePoint::new_1d(0.0, 4.0)).unwrap(), vec![0.0, 2.0]);
        assert_eq!(cubic().gradient_h(&PhasePoint::new_1d(2.0, 1.0)).unwrap(), vec![2.0, 1.0]);

        let hh = h.hessian_h(&PhasePoint::new_1d(0.3, 0.1)).unwrap();
        assert_eq!(hh, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let hf = free.hessian_h(&PhasePoint::new_1d(0.0, 4.0)).unwrap();
        assert_eq!(hf, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.5]));
        let quartic = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        assert_eq!(quartic.hessian_h(&PhasePoint::new_1d(2.0, 0.0)).unwrap()[(0, 0)], 12.0);
    }

    #[test]
    fn remainders() {
        let h = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(h.taylor_remainder_v(&[1.3], &[0.7]).unwrap(), 0.0);
        assert!((cubic().taylor_remainder_v(&[0.0], &[2.0]).unwrap() - 8.0 / 6.0).abs() < 1e-15);
        let quartic = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        assert!((quartic.taylor_remainder_v(&[1.0], &[1.0]).unwrap() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn tabulated_third_derivative_is_rejected() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 - 5.0).collect();
        let v: Vec<f64> = x.iter().map(|t| 0.5 * t * t).collect();
        let p = PotentialModel::tabulated(x, v).unwrap();
        assert!(matches!(p.third(&[0.0]), Err(Error::Unsupported(_))));
        assert!(p.hessian(&[0.0]).is_ok());
        assert!(matches!(p.value(&[7.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"type":"polynomial","coeffs":[0,0,0.5,0.0166]}"#;
        let p: PotentialModel = serde_json::from_str(json).unwrap();
        let back: PotentialModel = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
        let t = r#"{"type":"tabulated","x":[0,1,2,3],"v":[0,1,4,9]}"#;
        let p: PotentialModel = serde_json::from_str(t).unwrap();
        assert!(matches!(p, PotentialModel::Tabulated(_)));
        let two = r#"{"type":"polynomial","terms":[{"powers":[2,0],"coeff":0.5},{"powers":[1,1],"coeff":0.1}]}"#;
        let p: PotentialModel = serde_json::from_str(two).unwrap();
        assert_eq!(p.dim(), 2);
        let spec = format!(r#"{{"mass":1.0,"potential":{two}}}"#);
        let s: HamiltonianSpec = serde_json::from_str(&spec).unwrap();
        assert_eq!(s.dimension(), 2);
    }

    #[test]
    fn vector_potential_marks_classical_only() {
        // A = (0, B x) in 2D: uniform field
        let ax = PotentialModel::Polynomial(Polynomial::zero(2));
        let ay = PotentialModel::Polynomial(
            Polynomial::new(2, vec![Monomial { powers: vec![1, 0], coeff: 1.0 }]).unwrap(),
        );
        let v = PotentialModel::Polynomial(Polynomial::zero(2));
        let s = HamiltonianSpec::new(1.0, v).unwrap().with_vector_potential(vec![ax, ay]).unwrap();
        assert!(s.classical_only());
        let a = PhasePoint::new(vec![0.3, -0.2], vec![0.5, 0.7]).unwrap();
        let g = s.gradient_h(&a).unwrap();
        let eps = 1e-6;
        for k in 0..4 {
            let mut up = a.to_vec();
            let mut dn = a.to_vec();
            up[k] += eps;
            dn[k] -= eps;
            let fd = (s.eval_h(&PhasePoint::from_stacked(&up)).unwrap()
                - s.eval_h(&PhasePoint::from_stacked(&dn)).unwrap())
                / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    fn arb_spec() -> impl Strategy<Value = HamiltonianSpec> {
        // Taylor-like coefficients c_k/k! keep the finite-difference truncation error honest
        (0.3f64..3.0, prop::collection::vec(-1.0f64..1.0, 1..=9)).prop_map(|(m, c)| {
            let mut fact = 1.0;
            let c: Vec<f64> = c
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    v / fact
                })
                .collect();
            HamiltonianSpec::polynomial_1d(m, &c).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn derivatives_match_finite_differences(spec in arb_spec(), x in -1.5f64..1.5, p in -2.0f64..2.0) {
            let a = PhasePoint::new_1d(x, p);
            let g = spec.gradient_h(&a).unwrap();
            let h = spec.hessian_h(&a).unwrap();
            let step = 1e-4;
            for k in 0..2 {
                let mut up = a.to_vec();
                let mut dn = a.to_vec();
                up[k] += step;
                dn[k] -= step;
                let (pu, pd) = (PhasePoint::from_stacked(&up), PhasePoint::from_stacked(&dn));
                let fd = (spec.eval_h(&pu).unwrap() - spec.eval_h(&pd).unwrap()) / (2.0 * step);
                prop_assert!((fd - g[k]).abs() <= 1e-6 * (1.0 + g[k].abs()));
                let gu = spec.gradient_h(&pu).unwrap();
                let gd = spec.gradient_h(&pd).unwrap();
                for l in 0..2 {
                    let fd2 = (gu[l] - gd[l]) / (2.0 * step);
                    prop_assert!((fd2 - h[(l, k)]).abs() <= 1e-6 * (1.0 + h[(l, k)].abs()));
                }
            }
            prop_assert_eq!(h.clone(), h.transpose());
        }

        #[test]
        fn cubic_remainder_scales_as_cube(c3 in -2.0f64..2.0, xi in -2.0f64..2.0, x in 0.1f64..2.0) {
            let spec = HamiltonianSpec::polynomial_1d(1.0, &[0.4, -0.3, 0.7, c3]).unwrap();
            let r1 = spec.taylor_remainder_v(&[xi], &[x]).unwrap() / x.powi(3);
            let r2 = spec.taylor_remainder_v(&[xi], &[0.5 * x]).unwrap() / (0.5 * x).powi(3);
            prop_assert!((r1 - c3).abs() < 1e-9 * (1.0 + c3.abs()) / x.powi(3));
            prop_assert!((r1 - r2).abs() < 1e-8 / x.powi(3));
        }
    }
}
