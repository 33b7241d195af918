//! Finite-dimensional and grid evolutions: eigenprojectors, average stays,
//! the ergodic formula, transit times, recurrence and bound/scattering labels.
//!
//! Every label here is a finite-horizon proxy. A finite matrix or grid has
//! pure point spectrum, so "ac-like" only means the transit time has stopped
//! growing by the chosen horizon.

use std::io::Write;
use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::comparator::Comparator;
use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, GridWavefunction, SplitOperator, DEFAULT_BOUNDARY_TOLERANCE};
use crate::hamiltonian::HamiltonianSpec;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Eigenvalues closer than this (relative to the spectral radius, at least 1) share a projector.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;
pub const MAX_DIMENSION: usize = 4096;

fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).camax()
}

fn check_hermitian(m: &CMatrix, what: &str) -> Result<()> {
    if !m.is_square() {
        return invalid(format!("{what} must be square"));
    }
    let scale = m.camax().max(1.0);
    if hermitian_defect(m) > 1e-10 * scale {
        return Err(Error::NotHermitian(what.into()));
    }
    Ok(())
}

/// U_t = e^{−iHt} through the eigendecomposition of a Hermitian H.
#[derive(Debug, Clone)]
pub struct FiniteEvolution {
    eigenvalues: Vec<f64>,
    vectors: CMatrix,
    groups: Vec<Range<usize>>,
}

impl FiniteEvolution {
    pub fn from_hermitian(h: &CMatrix) -> Result<Self> {
        check_hermitian(h, "H")?;
        let d = h.nrows();
        if d == 0 || d > MAX_DIMENSION {
            return invalid(format!("dimension must be in 1..={MAX_DIMENSION}"));
        }
        let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        let tol = DEGENERACY_TOLERANCE * eigenvalues.iter().fold(1.0f64, |m, l| m.max(l.abs()));
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=d {
            if i == d || eigenvalues[i] - eigenvalues[i - 1] > tol {
                groups.push(start..i);
                start = i;
            }
        }
        Ok(Self { eigenvalues, vectors, groups })
    }

    /// Real diagonal Hamiltonian.
    pub fn diagonal(levels: &[f64]) -> Result<Self> {
        let h = CMatrix::from_diagonal(&CVector::from_iterator(
            levels.len(),
            levels.iter().map(|l| C64::new(*l, 0.0)),
        ));
        Self::from_hermitian(&h)
    }

    /// Dense 1D grid Hamiltonian: spectral kinetic term plus diagonal potential.
    pub fn from_grid(spec: &HamiltonianSpec, grid: &GridSpec) -> Result<Self> {
        Self::from_hermitian(&grid_hamiltonian(spec, grid)?)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues in ascending order, with multiplicity.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Distinct eigenvalues a_n, one per projector.
    pub fn levels(&self) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| self.eigenvalues[g.clone()].iter().sum::<f64>() / g.len() as f64)
            .collect()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn eigenvector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    /// P_n.
    pub fn projector(&self, n: usize) -> CMatrix {
        let cols = self.vectors.columns_range(self.groups[n].clone());
        cols * cols.adjoint()
    }

    /// max |Σ P_n − 1| and max |P_n P_m − δ_nm P_n| entrywise.
    pub fn projector_defects(&self) -> (f64, f64) {
        let d = self.dim();
        let ps: Vec<CMatrix> = (0..self.groups.len()).map(|n| self.projector(n)).collect();
        let sum = ps.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
        let completeness = (sum - CMatrix::identity(d, d)).camax();
        let mut orth = 0.0f64;
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in ps.iter().enumerate() {
                let prod = p * q;
                let dev = if i == j { (prod - p).camax() } else { prod.camax() };
                orth = orth.max(dev);
            }
        }
        (completeness, orth)
    }

    fn check_state(&self, psi: &CVector) -> Result<()> {
        if psi.len() != self.dim() {
            return invalid("state dimension does not match H");
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    fn check_operator(&self, f: &CMatrix, what: &str) -> Result<()> {
        if f.nrows() != self.dim() {
            return invalid(format!("{what} dimension does not match H"));
        }
        check_hermitian(f, what)
    }

    /// Eigenbasis coefficients V*ψ.
    pub fn coefficients(&self, psi: &CVector) -> CVector {
        self.vectors.adjoint() * psi
    }

    pub fn evolve(&self, psi: &CVector, t: f64) -> CVector {
        let mut c = self.coefficients(psi);
        for (z, l) in c.iter_mut().zip(&self.eigenvalues) {
            *z *= C64::from_polar(1.0, -l * t);
        }
        &self.vectors * c
    }

    /// Tr[Fρ] with ρ = Σ P_n|ψ⟩⟨ψ|P_n.
    pub fn ergodic_prediction(&self, psi: &CVector, f: &CMatrix) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let cols = self.vectors.columns_range(g.clone());
                let p = cols * (cols.adjoint() * psi);
                (p.adjoint() * f * &p)[(0, 0)].re
            })
            .sum()
    }

    /// t ↦ ⟨U_tψ, F U_tψ⟩ restricted to the eigencomponents ψ actually has.
    fn expectation_kernel(&self, psi: &CVector, f: &CMatrix) -> Kernel {
        let c = self.coefficients(psi);
        let support: Vec<usize> = (0..self.dim()).filter(|&i| c[i].norm() > 1e-15).collect();
        let vs = CMatrix::from_fn(self.dim(), support.len(), |r, j| self.vectors[(r, support[j])]);
        Kernel {
            c: support.iter().map(|&i| c[i]).collect(),
            lambda: support.iter().map(|&i| self.eigenvalues[i]).collect(),
            f: vs.adjoint() * f * vs,
        }
    }
}

struct Kernel {
    c: Vec<C64>,
    lambda: Vec<f64>,
    f: CMatrix,
}

impl Kernel {
    fn eval(&self, t: f64, g: &mut [C64]) -> f64 {
        for ((g, c), l) in g.iter_mut().zip(&self.c).zip(&self.lambda) {
            *g = c * C64::from_polar(1.0, -l * t);
        }
        let m = g.len();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m {
            let mut row = C64::new(0.0, 0.0);
            for k in 0..m {
                row += self.f[(j, k)] * g[k];
            }
            acc += g[j].conj() * row;
        }
        acc.re
    }

    fn spread(&self) -> f64 {
        let lo = self.lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Dense Hamiltonian of a 1D grid (circulant spectral Laplacian, real symmetric).
pub fn grid_hamiltonian(spec: &HamiltonianSpec, grid: &GridSpec) -> Result<CMatrix> {
    if grid.dimension() != 1 || spec.dimension() != 1 {
        return Err(Error::Unsupported("dense grid Hamiltonians are 1D only".into()));
    }
    if spec.classical_only() {
        return Err(Error::Unsupported("quantum Hamiltonian with a vector potential".into()));
    }
    let n = grid.points();
    if n > MAX_DIMENSION {
        return invalid(format!("grid has more than {MAX_DIMENSION} points"));
    }
    let ks = grid.wavenumbers();
    let dx = grid.dx();
    let m = spec.mass();
    let c: Vec<f64> = (0..n)
        .map(|d| {
            ks.iter().map(|k| k * k / (2.0 * m) * (k * d as f64 * dx).cos()).sum::<f64>() / n as f64
        })
        .collect();
    let x = grid.axis();
    let mut h = CMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            h[(j, l)] = C64::new(c[(j + n - l) % n], 0.0);
        }
        h[(j, j)] += spec.potential().value(&[x[j]])?;
    }
    Ok(h)
}

/// Grid state as a unit vector in the dense representation (ℓ² of grid values × √dx).
pub fn grid_vector(psi: &GridWavefunction) -> CVector {
    let w = psi.grid().cell().sqrt();
    CVector::from_iterator(psi.amplitudes().len(), psi.amplitudes().iter().map(|z| z * w))
}

/// Multiplication by the indicator of a set of grid points, as a dense projector.
pub fn position_projector(grid: &GridSpec, inside: impl Fn(f64) -> bool) -> CMatrix {
    let x = grid.axis();
    CMatrix::from_diagonal(&CVector::from_iterator(
        x.len(),
        x.iter().map(|v| C64::new(if inside(*v) { 1.0 } else { 0.0 }, 0.0)),
    ))
}

/// f(t) = ⟨U_tψ, ΩU_tψ⟩ sampled on a uniform mesh in both time directions,
/// kept as cumulative trapezoid integrals from t = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StayCurve {
    pub dt: f64,
    /// ∫₀^{k dt} f.
    pub forward: Vec<f64>,
    /// ∫_{−k dt}^0 f.
    pub backward: Vec<f64>,
}

fn cumulative(dt: f64, f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * dt * (f[k] + f[k - 1]);
        out.push(acc);
    }
    out
}

fn interpolate(cum: &[f64], dt: f64, t: f64) -> Result<f64> {
    let x = t / dt;
    let k = x.floor() as usize;
    if t < 0.0 || k >= cum.len() || (k + 1 == cum.len() && x - k as f64 > 1e-9) {
        return Err(Error::Range { t0: t, t1: t, lo: 0.0, hi: dt * (cum.len() - 1) as f64 });
    }
    if k + 1 == cum.len() {
        return Ok(cum[k]);
    }
    let frac = x - k as f64;
    Ok(cum[k] + frac * (cum[k + 1] - cum[k]))
}

impl StayCurve {
    /// Finite evolution; `dt` defaults to min(0.05, 0.1/spread) over the occupied levels.
    pub fn finite(evo: &FiniteEvolution, psi: &CVector, omega: &CMatrix, horizon: f64, dt: Option<f64>) -> Result<Self> {
        evo.check_state(psi)?;
        evo.check_operator(omega, "Omega")?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return invalid("horizon must be positive");
        }
        let kernel = evo.expectation_kernel(psi, omega);
        let spread = kernel.spread();
        let dt_max = dt.unwrap_or(if spread > 0.0 { (0.1 / spread).min(0.05) } else { 0.05 });
        let (steps, dt) = crate::classical::step_count(horizon, dt_max)?;
        let mut g = vec![C64::new(0.0, 0.0); kernel.c.len()];
        let mut fwd = Vec::with_capacity(steps + 1);
        let mut bwd = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * dt;
            fwd.push(kernel.eval(t, &mut g));
            bwd.push(kernel.eval(-t, &mut g));
        }
        Ok(Self { dt, forward: cumulative(dt, &fwd), backward: cumulative(dt, &bwd) })
    }

    /// Split-operator evolution in both time directions with Ω = Ω_s of `comparator`.
    pub fn grid(spec: &HamiltonianSpec, psi: &GridWavefunction, comparator: &Comparator, horizon: f64, dt: f64) -> Result<Self> {
        if !psi.is_normalized() {
            return Err(Error::NotNormalized { norm: psi.norm() });
        }
        let (steps, dt) = crate::classical::step_count(horizon, dt)?;
        let run = |sign: f64| -> Result<Vec<f64>> {
            let op = SplitOperator::new(spec, psi.grid(), sign * dt)?;
            let mut data = psi.amplitudes().to_vec();
            let mut out = Vec::with_capacity(steps + 1);
            out.push(comparator.expectation_normalized(psi)?);
            for k in 1..=steps {
                op.step(&mut data);
                let mass = op.boundary_mass(&data);
                if mass > DEFAULT_BOUNDARY_TOLERANCE {
                    return Err(Error::Wraparound { time: sign * k as f64 * dt, mass });
                }
                let state = GridWavefunction::from_amplitudes(*psi.grid(), data.clone())?;
                out.push(comparator.expectation_normalized(&state)?);
            }
            Ok(out)
        };
        let fwd = run(1.0)?;
        let bwd = run(-1.0)?;
        Ok(Self { dt, forward: cumulative(dt, &fwd), backward: cumulative(dt, &bwd) })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.forward.len() - 1) as f64
    }

    /// τ(T) = ∫_{−T}^{T} f.
    pub fn transit(&self, t: f64) -> Result<f64> {
        Ok(self.forward_transit(t)? + self.backward_transit(t)?)
    }

    pub fn forward_transit(&self, t: f64) -> Result<f64> {
        interpolate(&self.forward, self.dt, t)
    }

    pub fn backward_transit(&self, t: f64) -> Result<f64> {
        interpolate(&self.backward, self.dt, t)
    }

    /// μ(T) = τ(T)/2T.
    pub fn stay(&self, t: f64) -> Result<f64> {
        Ok(self.transit(t)? / (2.0 * t))
    }

    /// CSV with columns T, mu, tau at the given horizons.
    pub fn write_csv<W: Write>(&self, mut w: W, horizons: &[f64]) -> Result<()> {
        writeln!(w, "T,mu,tau")?;
        for &t in horizons {
            writeln!(w, "{:.10e},{:.10e},{:.10e}", t, self.stay(t)?, self.transit(t)?)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub horizon: f64,
    /// Tr[Fρ].
    pub predicted: f64,
    /// (1/2T)∫_{−T}^{T}⟨U_tψ, F U_tψ⟩ dt by quadrature.
    pub measured: f64,
    pub error: f64,
}

pub fn ergodic_average(evo: &FiniteEvolution, psi: &CVector, f: &CMatrix, horizon: f64) -> Result<ErgodicReport> {
    let curve = StayCurve::finite(evo, psi, f, horizon, None)?;
    let predicted = evo.ergodic_prediction(psi, f);
    let measured = curve.stay(horizon)?;
    Ok(ErgodicReport { horizon, predicted, measured, error: (measured - predicted).abs() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub horizons: Vec<f64>,
    /// max over [T, 2T] of |measured − predicted|.
    pub envelope: Vec<f64>,
    /// Least-squares slope of log envelope against log T.
    pub slope: f64,
}

/// Rate of the ergodic limit from one long curve: the oscillating error is
/// replaced by its running maximum over [T, 2T] before the log-log fit.
pub fn ergodic_convergence(
    evo: &FiniteEvolution,
    psi: &CVector,
    f: &CMatrix,
    t_min: f64,
    t_max: f64,
    points: usize,
) -> Result<ConvergenceFit> {
    if !(t_min > 0.0 && t_max > t_min) || points < 2 {
        return invalid("need 0 < t_min < t_max and at least two points");
    }
    let curve = StayCurve::finite(evo, psi, f, 2.0 * t_max, None)?;
    let predicted = evo.ergodic_prediction(psi, f);
    let ratio = (t_max / t_min).powf(1.0 / (points - 1) as f64);
    let horizons: Vec<f64> = (0..points).map(|i| t_min * ratio.powi(i as i32)).collect();
    let mut envelope = Vec::with_capacity(points);
    for &t in &horizons {
        let k0 = (t / curve.dt).ceil() as usize;
        let k1 = ((2.0 * t / curve.dt).floor() as usize).min(curve.forward.len() - 1);
        let mut m = 0.0f64;
        for k in k0..=k1 {
            let tk = k as f64 * curve.dt;
            let mu = (curve.forward[k] + curve.backward[k]) / (2.0 * tk);
            m = m.max((mu - predicted).abs());
        }
        envelope.push(m);
    }
    let xs: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = envelope.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(ConvergenceFit { horizons, envelope, slope: sxy / sxx })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StayReport {
    pub horizon: f64,
    /// μ(T).
    pub stay: f64,
    /// τ(T).
    pub transit: f64,
    /// Tr[Ωρ], the T → ∞ limit.
    pub predicted: f64,
    /// Every vector of a finite-dimensional evolution is a bound state.
    pub all_states_bound: bool,
}

pub fn average_stay(evo: &FiniteEvolution, psi: &CVector, omega: &CMatrix, horizon: f64) -> Result<StayReport> {
    let curve = StayCurve::finite(evo, psi, omega, horizon, None)?;
    Ok(StayReport {
        horizon,
        stay: curve.stay(horizon)?,
        transit: curve.transit(horizon)?,
        predicted: evo.ergodic_prediction(psi, omega),
        all_states_bound: true,
    })
}

pub const DEFAULT_TRANSIT_INCREMENT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitReport {
    pub horizon: f64,
    pub transit: f64,
    /// τ(T) − τ(T/2).
    pub increment: f64,
    pub threshold: f64,
    pub divergent_at_horizon: bool,
}

pub fn transit_from_curve(curve: &StayCurve, horizon: f64, threshold: f64) -> Result<TransitReport> {
    let transit = curve.transit(horizon)?;
    let increment = transit - curve.transit(0.5 * horizon)?;
    Ok(TransitReport {
        horizon,
        transit,
        increment,
        threshold,
        divergent_at_horizon: increment >= threshold,
    })
}

pub fn transit_time(evo: &FiniteEvolution, psi: &CVector, omega: &CMatrix, horizon: f64) -> Result<TransitReport> {
    let curve = StayCurve::finite(evo, psi, omega, horizon, None)?;
    transit_from_curve(&curve, horizon, DEFAULT_TRANSIT_INCREMENT)
}

/// First local minimum of ‖U_tψ − ψ‖ below ε with t ≥ t_min; None if none before t_max.
pub fn recurrence_time(evo: &FiniteEvolution, psi: &CVector, eps: f64, t_min: f64, t_max: f64) -> Result<Option<f64>> {
    evo.check_state(psi)?;
    if !(eps > 0.0) || !(t_min >= 0.0 && t_max > t_min) {
        return invalid("need ε > 0 and 0 ≤ t_min < t_max");
    }
    let c = evo.coefficients(psi);
    let terms: Vec<(f64, f64)> = c
        .iter()
        .zip(evo.eigenvalues())
        .filter(|(z, _)| z.norm_sqr() > 0.0)
        .map(|(z, l)| (z.norm_sqr(), *l))
        .collect();
    let dist = |t: f64| -> f64 {
        terms
            .iter()
            .map(|(w, l)| w * (C64::from_polar(1.0, -l * t) - 1.0).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    if dist(t_min) < eps {
        return Ok(Some(t_min));
    }
    let lo = terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let hi = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    // every phase, global one included, moves by at most 2π/40 per step
    let rate = (hi - lo).max(lo.abs()).max(hi.abs());
    let h = if rate > 0.0 { std::f64::consts::TAU / (40.0 * rate) } else { t_max - t_min };
    let mut prev = dist(t_min);
    let mut t = t_min + h;
    let mut cur = dist(t);
    while t < t_max {
        let next = dist(t + h);
        if cur <= prev && cur <= next {
            let (tm, dm) = golden_minimum(&dist, t - h, t + h);
            if dm < eps && tm >= t_min {
                return Ok(Some(tm));
            }
        }
        prev = cur;
        cur = next;
        t += h;
    }
    Ok(None)
}

fn golden_minimum(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if b - a < 1e-13 * (1.0 + a.abs()) {
            break;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantumLabel {
    PpLike,
    AcLike,
    ExceptionalCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierThresholds {
    /// ac-like when τ(T) − τ(T/2) is below this.
    pub transit_increment: f64,
    /// pp-like needs μ(T) at least this large ...
    pub stay_floor: f64,
    /// ... and |μ(T) − μ(T/2)| ≤ stay_drift · μ(T).
    pub stay_drift: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self { transit_increment: DEFAULT_TRANSIT_INCREMENT, stay_floor: 1e-2, stay_drift: 0.05 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantumClassification {
    pub label: QuantumLabel,
    /// Label from t ≥ 0 only and from t ≤ 0 only.
    pub forward_label: QuantumLabel,
    pub backward_label: QuantumLabel,
    /// T/4, T/2, T.
    pub horizons: Vec<f64>,
    pub stay: Vec<f64>,
    pub transit: Vec<f64>,
    pub thresholds: ClassifierThresholds,
    pub finite_horizon_proxy: bool,
}

fn label_from(t_half: f64, t_full: f64, mu_half: f64, mu_full: f64, th: &ClassifierThresholds) -> QuantumLabel {
    let increment = t_full - t_half;
    if increment < th.transit_increment {
        QuantumLabel::AcLike
    } else if mu_full >= th.stay_floor && (mu_full - mu_half).abs() <= th.stay_drift * mu_full {
        QuantumLabel::PpLike
    } else {
        QuantumLabel::ExceptionalCandidate
    }
}

/// Seeded random d-level system: Hermitian h and F with Gaussian entries and a
/// normalised Gaussian state.
pub fn random_system(seed: u64, d: usize) -> Result<(FiniteEvolution, CVector, CMatrix)> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut g = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    };
    let a = CMatrix::from_fn(d, d, |_, _| g());
    let b = CMatrix::from_fn(d, d, |_, _| g());
    let v = CVector::from_fn(d, |_, _| g());
    let h = (&a + a.adjoint()).scale(0.5);
    let f = (&b + b.adjoint()).scale(0.5);
    let psi = v.unscale(v.norm());
    Ok((FiniteEvolution::from_hermitian(&h)?, psi, f))
}

/// Bound/scattering proxy at horizon T (≤ the curve horizon).
pub fn classify_quantum(curve: &StayCurve, horizon: f64, thresholds: ClassifierThresholds) -> Result<QuantumClassification> {
    if !(horizon > 0.0) || horizon > curve.horizon() * (1.0 + 1e-12) {
        return invalid("classification horizon must lie within the sampled curve");
    }
    let horizons = vec![0.25 * horizon, 0.5 * horizon, horizon];
    let transit = horizons.iter().map(|t| curve.transit(*t)).collect::<Result<Vec<_>>>()?;
    let stay: Vec<f64> = transit.iter().zip(&horizons).map(|(tau, t)| tau / (2.0 * t)).collect();
    let half = 0.5 * horizon;
    let one_sided = |cum: &dyn Fn(f64) -> Result<f64>| -> Result<QuantumLabel> {
        let (a, b) = (cum(half)?, cum(horizon)?);
        Ok(label_from(a, b, a / half, b / horizon, &thresholds))
    };
    Ok(QuantumClassification {
        label: label_from(transit[1], transit[2], stay[1], stay[2], &thresholds),
        forward_label: one_sided(&|t| curve.forward_transit(t))?,
        backward_label: one_sided(&|t| curve.backward_transit(t))?,
        horizons,
        stay,
        transit,
        thresholds,
        finite_horizon_proxy: true,
    })
}
