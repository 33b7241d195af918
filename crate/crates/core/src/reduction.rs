//! Classical/quantum comparison runs: remainder norms, the Duhamel bound,
//! the comparator-based error bounds, verdicts, Ehrenfest diagnostics and the
//! width sweep.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{integrate_flow, ClassicalTrajectory, PhaseRegion};
use crate::comparator::{comparator_scalars, Comparator, ComparatorScalars, ComparatorSpec, MagnitudeStatus};
use crate::error::{invalid, Error, Result};
use crate::grid::{
    expectation_a_with, expectation_position, propagate_with, Fourier, GridSpec, GridWavefunction,
    DEFAULT_BOUNDARY_TOLERANCE,
};
use crate::hamiltonian::{HamiltonianSpec, PhasePoint, Polynomial};
use crate::moments::GaussianMoments;
use crate::packets::{ApproxPropagator, GaussianPacket, WidthConfig};

/// Acceptable error: one value for every component, or one per component of (ξ, π).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tolerance {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Tolerance {
    fn validate(&self, n: usize) -> Result<()> {
        let ok = match self {
            Self::Scalar(e) => *e > 0.0,
            Self::Vector(v) => v.len() == 2 * n && v.iter().all(|e| *e > 0.0),
        };
        if !ok {
            return invalid("epsilon must be positive (scalar or 2n-vector)");
        }
        Ok(())
    }

    /// Largest err_i/ε_i; the error is acceptable when this is below 1.
    pub fn ratio(&self, err: &[f64]) -> f64 {
        match self {
            Self::Scalar(e) => err.iter().fold(0.0f64, |m, x| m.max(*x)) / e,
            Self::Vector(v) => err.iter().zip(v).fold(0.0f64, |m, (x, e)| m.max(x / e)),
        }
    }

    pub fn admits(&self, err: &[f64]) -> bool {
        self.ratio(err) < 1.0
    }
}

fn default_lattice() -> usize {
    3
}
fn default_dt() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    200
}
fn default_comparator() -> ComparatorSpec {
    ComparatorSpec::new(1.0).expect("s = 1 is valid")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionProblem {
    pub hamiltonian: HamiltonianSpec,
    pub alpha0: PhasePoint,
    /// Initial-condition set; sampled on a lattice together with `alpha0`.
    #[serde(default)]
    pub region: Option<PhaseRegion>,
    /// Lattice points per phase-space axis when sampling `region`.
    #[serde(default = "default_lattice")]
    pub lattice: usize,
    pub horizon: f64,
    pub epsilon: Tolerance,
    #[serde(default = "default_comparator")]
    pub comparator: ComparatorSpec,
    /// Magnitude threshold E; defaults to 1.5 × the largest measured ‖Ω⁻¹ψ(t)‖.
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub width: WidthConfig,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Number of grid samples along the run.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl ReductionProblem {
    pub fn new(hamiltonian: HamiltonianSpec, alpha0: PhasePoint, horizon: f64, epsilon: Tolerance) -> Self {
        Self {
            hamiltonian,
            alpha0,
            region: None,
            lattice: default_lattice(),
            horizon,
            epsilon,
            comparator: default_comparator(),
            magnitude: None,
            grid: GridSpec::default(),
            width: WidthConfig::default(),
            dt: default_dt(),
            samples: default_samples(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.hamiltonian.dimension();
        if self.alpha0.dim() != n || self.grid.dimension() != n {
            return invalid("alpha0, grid and Hamiltonian dimensions must agree");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return invalid("horizon must be positive");
        }
        if !(self.dt > 0.0) || self.samples == 0 {
            return invalid("dt and samples must be positive");
        }
        if let Some(e) = self.magnitude {
            if !(e > 0.0) {
                return invalid("magnitude E must be positive");
            }
        }
        if self.hamiltonian.classical_only() {
            return Err(Error::Unsupported(
                "vector potentials are classical-side only; no quantum run possible".into(),
            ));
        }
        self.epsilon.validate(n)?;
        self.width.to_matrix(n)?;
        Ok(())
    }

    pub fn initial_packet(&self, alpha0: &PhasePoint) -> Result<GaussianPacket> {
        GaussianPacket::from_width(alpha0.clone(), self.width.to_matrix(alpha0.dim())?)
    }

    /// `alpha0` followed by lattice points of the region (lattice^{2n} points; balls keep the inner ones).
    pub fn initial_points(&self) -> Result<Vec<PhasePoint>> {
        let mut out = vec![self.alpha0.clone()];
        let Some(region) = &self.region else {
            return Ok(out);
        };
        let c = region.center().to_vec();
        let d = c.len();
        let half: Vec<f64> = match region {
            PhaseRegion::Ball { radius, .. } => vec![*radius; d],
            PhaseRegion::Box { half_widths, .. } => half_widths.clone(),
        };
        if half.iter().any(|h| !h.is_finite()) {
            return invalid("cannot sample a region with infinite extent");
        }
        let m = self.lattice.max(1);
        let offsets: Vec<f64> = if m == 1 {
            vec![0.0]
        } else {
            (0..m).map(|j| -1.0 + 2.0 * j as f64 / (m - 1) as f64).collect()
        };
        for flat in 0..m.pow(d as u32) {
            let mut rem = flat;
            let v: Vec<f64> = (0..d)
                .map(|i| {
                    let o = offsets[rem % m];
                    rem /= m;
                    c[i] + o * half[i]
                })
                .collect();
            let p = PhasePoint::from_stacked(&v);
            if region.contains(&p) && !out.iter().any(|q| q.abs_diff(&p).iter().all(|x| *x < 1e-12)) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// ‖r·Γ‖ with r the cubic-and-higher Taylor remainder of V about the packet centre,
/// from exact Gaussian moments under N(0, (2 Re M)⁻¹).
pub fn remainder_norm(spec: &HamiltonianSpec, packet: &GaussianPacket) -> Result<f64> {
    let r = remainder_polynomial(spec, packet)?;
    if r.terms().is_empty() {
        return Ok(0.0);
    }
    let cov = packet.position_covariance();
    let mean_sq = GaussianMoments::new(&cov).expectation(&r.mul(&r)) * packet.closed_form_norm_sq();
    Ok(mean_sq.max(0.0).sqrt())
}

fn remainder_polynomial(spec: &HamiltonianSpec, packet: &GaussianPacket) -> Result<Polynomial> {
    if spec.potential().as_polynomial().is_none() {
        return Err(Error::Unsupported(
            "remainder norms need a polynomial potential".into(),
        ));
    }
    spec.potential().remainder_polynomial(&packet.alpha().xi)
}

/// The same norm by quadrature of the sampled packet.
pub fn remainder_norm_grid(spec: &HamiltonianSpec, packet: &GaussianPacket, grid: &GridSpec) -> Result<f64> {
    let r = remainder_polynomial(spec, packet)?;
    let psi = packet.sample_on_grid(grid)?;
    let xi = &packet.alpha().xi;
    let v = expectation_position(&psi, |x| {
        let y: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
        r.eval(&y).powi(2)
    });
    Ok(v.sqrt())
}

/// Moment form, cross-checked against quadrature to 1e−8.
pub fn remainder_norm_checked(spec: &HamiltonianSpec, packet: &GaussianPacket, grid: &GridSpec) -> Result<f64> {
    let exact = remainder_norm(spec, packet)?;
    let quad = remainder_norm_grid(spec, packet, grid)?;
    if (exact - quad).abs() > 1e-8 * exact.max(1.0) {
        return Err(Error::Invariant {
            time: f64::NAN,
            what: format!("remainder norm: moments give {exact}, quadrature gives {quad}"),
        });
    }
    Ok(exact)
}

/// ∫₀ᵗ ‖R(s)W(s,0)ψ‖ ds at every trajectory sample (trapezoid rule).
pub fn duhamel_bound(spec: &HamiltonianSpec, prop: &ApproxPropagator) -> Result<Vec<f64>> {
    let norms = (0..prop.len())
        .map(|k| remainder_norm(spec, &prop.state(k).packet))
        .collect::<Result<Vec<_>>>()?;
    let times = &prop.widths().times;
    let mut out = Vec::with_capacity(norms.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..norms.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (norms[k] + norms[k - 1]);
        out.push(acc);
    }
    Ok(out)
}

/// |α(t) − ⟨a⟩(t)| per component, with α read off the trajectory at each sample time.
pub fn measured_error(times: &[f64], expectations: &[Vec<f64>], traj: &ClassicalTrajectory) -> Result<Vec<Vec<f64>>> {
    if times.len() != expectations.len() {
        return invalid("times and expectations differ in length");
    }
    times
        .iter()
        .zip(expectations)
        .map(|(t, e)| {
            let k = (t / traj.dt()).round() as usize;
            if k >= traj.len() || (traj.times()[k] - t).abs() > 1e-9 {
                return Err(Error::Range { t0: *t, t1: *t, lo: 0.0, hi: traj.end_time() });
            }
            Ok(traj.points()[k].to_vec().iter().zip(e).map(|(a, b)| (a - b).abs()).collect())
        })
        .collect()
}

/// Inputs of the comparator bound at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// max_a ‖aΩ‖.
    pub omega: f64,
    pub comparator_norm: f64,
    pub one_minus_norm: f64,
    pub magnitude: f64,
    /// ‖(W − U)ψ‖.
    pub delta1: f64,
    /// ‖(1 − Ω)Wψ‖.
    pub delta2: f64,
}

/// ω{(2‖Ω‖ + (E+1)‖1−Ω‖)Δ₁ + 2(E+1)Δ₂}.
pub fn theorem_bound(b: &BoundInputs) -> f64 {
    let m1 = 2.0 * b.comparator_norm + (b.magnitude + 1.0) * b.one_minus_norm;
    let m2 = 2.0 * (b.magnitude + 1.0);
    b.omega * (m1 * b.delta1 + m2 * b.delta2)
}

/// (e^s/(s e))^{1/2}.
pub fn closed_prefactor(s: f64) -> f64 {
    ((s - 1.0).exp() / s).sqrt()
}

/// Closed-prefactor form for Ω = Ω_s and ψ = Γ: (e^s/(se))^{1/2}{(E+3)Δ₁ + 2(E+1)Δ₂}.
pub fn closed_form_bound(s: f64, magnitude: f64, delta1: f64, delta2: f64) -> f64 {
    closed_prefactor(s) * ((magnitude + 3.0) * delta1 + 2.0 * (magnitude + 1.0) * delta2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reduced,
    NotReduced,
    HypothesisFailed,
}

impl Verdict {
    fn combine(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (NotReduced, _) | (_, NotReduced) => NotReduced,
            (HypothesisFailed, _) | (_, HypothesisFailed) => HypothesisFailed,
            _ => Reduced,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunProvenance {
    pub grid: GridSpec,
    pub dt: f64,
    pub steps: usize,
    pub stride: usize,
    pub comparator_order: usize,
    pub comparator_s: f64,
    pub max_boundary_mass: f64,
    pub energy_drift: f64,
    pub final_norm: f64,
}

/// One initial condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub alpha0: PhasePoint,
    pub times: Vec<f64>,
    pub classical: Vec<Vec<f64>>,
    pub expectation: Vec<Vec<f64>>,
    pub error: Vec<Vec<f64>>,
    pub error_max: Vec<f64>,
    /// Measured ‖(W − U)ψ‖.
    pub wu_distance: Vec<f64>,
    pub duhamel_bound: Vec<f64>,
    /// ‖(1 − Ω)Wψ‖.
    pub one_minus_w: Vec<f64>,
    /// ‖Ω⁻¹U(t)ψ‖ and ‖Ω⁻¹Wψ‖; null when the truncated series does not resolve.
    pub inverse_norm_u: Vec<f64>,
    pub inverse_norm_w: Vec<f64>,
    pub membership_u: Vec<bool>,
    pub membership_w: Vec<bool>,
    pub magnitude: f64,
    pub omega: f64,
    pub theorem_bound: Vec<f64>,
    pub theorem_bound_duhamel: Vec<f64>,
    pub closed_form_bound: Vec<f64>,
    pub closed_form_bound_duhamel: Vec<f64>,
    pub max_error: f64,
    /// Hypotheses hold ⇒ theorem bound ≥ error − 1e−8 at every sample.
    pub bound_dominates: bool,
    /// Duhamel bound ≥ measured ‖(W − U)ψ‖ − 1e−6 at every sample.
    pub duhamel_dominates: bool,
    pub hypotheses_hold: bool,
    pub verdict: Verdict,
    pub provenance: RunProvenance,
}

impl RunReport {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let n = self.alpha0.dim();
        let mut header = vec!["t".to_string()];
        for tag in ["err_xi", "err_pi"] {
            header.extend((0..n).map(|i| format!("{tag}_{i}")));
        }
        header.extend(
            [
                "error_max",
                "wu_distance",
                "duhamel_bound",
                "one_minus_w",
                "inverse_norm_u",
                "inverse_norm_w",
                "theorem_bound",
                "theorem_bound_duhamel",
                "closed_form_bound",
                "closed_form_bound_duhamel",
            ]
            .map(String::from),
        );
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:.10e}", self.times[k])];
            row.extend(self.error[k].iter().map(|v| format!("{v:.10e}")));
            for v in [
                self.error_max[k],
                self.wu_distance[k],
                self.duhamel_bound[k],
                self.one_minus_w[k],
                self.inverse_norm_u[k],
                self.inverse_norm_w[k],
                self.theorem_bound[k],
                self.theorem_bound_duhamel[k],
                self.closed_form_bound[k],
                self.closed_form_bound_duhamel[k],
            ] {
                row.push(format!("{v:.10e}"));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub verdict: Verdict,
    pub epsilon: Tolerance,
    pub horizon: f64,
    /// The universal quantifier over the region is checked on these sampled points only.
    pub sampled_points: usize,
    pub max_error: f64,
    pub comparator: ComparatorScalars,
    pub runs: Vec<RunReport>,
}

struct Sample {
    t: f64,
    expectation: Vec<f64>,
    wu: f64,
    inv_u: f64,
    inv_w: f64,
    one_minus: f64,
    duhamel: f64,
}

fn finite_or(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Full pipeline for one initial condition.
pub fn run_single(problem: &ReductionProblem, alpha0: &PhasePoint, scalars: &ComparatorScalars) -> Result<RunReport> {
    let spec = &problem.hamiltonian;
    let grid = problem.grid;
    let traj = integrate_flow(spec, alpha0, problem.horizon, problem.dt)?;
    let packet0 = problem.initial_packet(alpha0)?;
    let prop = ApproxPropagator::new(spec, &traj, &packet0)?;
    let duhamel = duhamel_bound(spec, &prop)?;
    remainder_norm_checked(spec, &packet0, &grid)?;
    let comparator = Comparator::new(&problem.comparator, &grid)?;
    let fourier = Fourier::new(&grid);
    let psi0 = packet0.sample_on_grid(&grid)?;
    let steps = traj.len() - 1;
    let stride = (steps / problem.samples).max(1);
    let mut samples: Vec<Sample> = Vec::new();
    let summary = propagate_with(spec, &psi0, problem.horizon, problem.dt, stride, DEFAULT_BOUNDARY_TOLERANCE, |k, t, psi| {
        let w_packet = prop.state(k).packet;
        let psi_w = w_packet.sample_on_grid(&grid)?;
        let pu = comparator.profile(psi)?;
        let pw = comparator.profile(&psi_w)?;
        samples.push(Sample {
            t,
            expectation: expectation_a_with(psi, &fourier)?,
            wu: psi.distance(&psi_w)?,
            inv_u: finite_or(pu.magnitude.inverse_norm),
            inv_w: finite_or(pw.magnitude.inverse_norm),
            one_minus: pw.one_minus,
            duhamel: duhamel[k],
        });
        Ok(())
    })?;
    remainder_norm_checked(spec, &prop.state(steps).packet, &grid)?;

    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let expectation: Vec<Vec<f64>> = samples.iter().map(|s| s.expectation.clone()).collect();
    let error = measured_error(&times, &expectation, &traj)?;
    let error_max: Vec<f64> = error.iter().map(|e| e.iter().fold(0.0f64, |m, x| m.max(*x))).collect();
    let largest = samples
        .iter()
        .flat_map(|s| [s.inv_u, s.inv_w])
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    let magnitude = problem.magnitude.unwrap_or(if largest > 0.0 { 1.5 * largest } else { 1.0 });
    let membership_u: Vec<bool> = samples.iter().map(|s| s.inv_u <= magnitude).collect();
    let membership_w: Vec<bool> = samples.iter().map(|s| s.inv_w <= magnitude).collect();
    let hypotheses_hold = membership_u.iter().chain(&membership_w).all(|b| *b);

    let omega = scalars.normalized_phase_space_norm;
    let s = problem.comparator.s();
    let bound_with = |delta1: f64, delta2: f64| {
        theorem_bound(&BoundInputs {
            omega,
            comparator_norm: 1.0,
            one_minus_norm: 1.0,
            magnitude,
            delta1,
            delta2,
        })
    };
    let theorem: Vec<f64> = samples.iter().map(|x| bound_with(x.wu, x.one_minus)).collect();
    let theorem_duhamel: Vec<f64> = samples.iter().map(|x| bound_with(x.duhamel, x.one_minus)).collect();
    let closed: Vec<f64> = samples.iter().map(|x| closed_form_bound(s, magnitude, x.wu, x.one_minus)).collect();
    let closed_duhamel: Vec<f64> = samples
        .iter()
        .map(|x| closed_form_bound(s, magnitude, x.duhamel, x.one_minus))
        .collect();
    let bound_dominates = !hypotheses_hold || theorem.iter().zip(&error_max).all(|(b, e)| *b >= e - 1e-8);
    let duhamel_dominates = samples.iter().all(|x| x.duhamel >= x.wu - 1e-6);
    let max_error = error_max.iter().fold(0.0f64, |m, x| m.max(*x));
    let worst: Vec<f64> = (0..2 * alpha0.dim())
        .map(|i| error.iter().fold(0.0f64, |m, e| m.max(e[i])))
        .collect();
    let verdict = if !problem.epsilon.admits(&worst) {
        Verdict::NotReduced
    } else if !hypotheses_hold {
        Verdict::HypothesisFailed
    } else {
        Verdict::Reduced
    };
    Ok(RunReport {
        alpha0: alpha0.clone(),
        classical: times
            .iter()
            .map(|t| traj.points()[(t / traj.dt()).round() as usize].to_vec())
            .collect(),
        times,
        expectation,
        error,
        error_max,
        wu_distance: samples.iter().map(|x| x.wu).collect(),
        duhamel_bound: samples.iter().map(|x| x.duhamel).collect(),
        one_minus_w: samples.iter().map(|x| x.one_minus).collect(),
        inverse_norm_u: samples.iter().map(|x| x.inv_u).collect(),
        inverse_norm_w: samples.iter().map(|x| x.inv_w).collect(),
        membership_u,
        membership_w,
        magnitude,
        omega,
        theorem_bound: theorem,
        theorem_bound_duhamel: theorem_duhamel,
        closed_form_bound: closed,
        closed_form_bound_duhamel: closed_duhamel,
        max_error,
        bound_dominates,
        duhamel_dominates,
        hypotheses_hold,
        verdict,
        provenance: RunProvenance {
            grid,
            dt: summary.dt,
            steps: summary.steps,
            stride: summary.stride,
            comparator_order: problem.comparator.order(),
            comparator_s: s,
            max_boundary_mass: summary.max_boundary_mass,
            energy_drift: traj.energy_drift(),
            final_norm: summary.final_norm,
        },
    })
}

/// Runs every sampled initial condition (concurrently) and combines the verdicts.
pub fn verdict(problem: &ReductionProblem) -> Result<ReductionReport> {
    problem.validate()?;
    let scalars = comparator_scalars(&problem.comparator)?;
    let points = problem.initial_points()?;
    let runs = points
        .par_iter()
        .map(|a| run_single(problem, a, &scalars))
        .collect::<Result<Vec<_>>>()?;
    let verdict = runs.iter().fold(Verdict::Reduced, |v, r| v.combine(r.verdict));
    Ok(ReductionReport {
        verdict,
        epsilon: problem.epsilon.clone(),
        horizon: problem.horizon,
        sampled_points: runs.len(),
        max_error: runs.iter().fold(0.0f64, |m, r| m.max(r.max_error)),
        comparator: scalars,
        runs,
    })
}

/// Quantum Ehrenfest identity and classicality gap along a grid run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EhrenfestReport {
    pub times: Vec<f64>,
    /// |d⟨p⟩/dt + ⟨∇V(q)⟩| (central differences, interior samples).
    pub identity_residual: Vec<f64>,
    /// |⟨∇V(q)⟩ − ∇V(⟨q⟩)|.
    pub classicality_gap: Vec<f64>,
    pub max_identity_residual: f64,
    pub max_classicality_gap: f64,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// ⟨∇V(q)⟩ and ∇V(⟨q⟩) for a normalised state.
fn force_pair(spec: &HamiltonianSpec, psi: &GridWavefunction, fourier: &Fourier) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = spec.dimension();
    let a = expectation_a_with(psi, fourier)?;
    let mut mean_grad = vec![0.0; n];
    let cell = psi.grid().cell();
    for (x, z) in psi.grid().coordinates().iter().zip(psi.amplitudes()) {
        let w = z.norm_sqr() * cell;
        if w == 0.0 {
            continue;
        }
        for (m, g) in mean_grad.iter_mut().zip(spec.potential().gradient(x)?) {
            *m += g * w;
        }
    }
    let at_mean = spec.potential().gradient(&a[..n])?;
    Ok((a, mean_grad, at_mean))
}

/// |⟨∇V(q)⟩ − ∇V(⟨q⟩)| (max over components) for one state.
pub fn classicality_gap(spec: &HamiltonianSpec, psi: &GridWavefunction) -> Result<f64> {
    let (_, mean, at) = force_pair(spec, psi, &Fourier::new(psi.grid()))?;
    Ok(max_abs_diff(&mean, &at))
}

pub fn ehrenfest_residuals(spec: &HamiltonianSpec, psi0: &GridWavefunction, horizon: f64, dt: f64) -> Result<EhrenfestReport> {
    let fourier = Fourier::new(psi0.grid());
    let n = spec.dimension();
    let mut times = Vec::new();
    let mut momenta: Vec<Vec<f64>> = Vec::new();
    let mut forces: Vec<Vec<f64>> = Vec::new();
    let mut gap = Vec::new();
    propagate_with(spec, psi0, horizon, dt, 1, DEFAULT_BOUNDARY_TOLERANCE, |_, t, psi| {
        let (a, mean, at) = force_pair(spec, psi, &fourier)?;
        times.push(t);
        momenta.push(a[n..].to_vec());
        gap.push(max_abs_diff(&mean, &at));
        forces.push(mean);
        Ok(())
    })?;
    if times.len() < 3 {
        return invalid("Ehrenfest residuals need at least two steps");
    }
    let mut identity = vec![f64::NAN; times.len()];
    for k in 1..times.len() - 1 {
        let h = times[k + 1] - times[k - 1];
        identity[k] = (0..n)
            .map(|i| ((momenta[k + 1][i] - momenta[k - 1][i]) / h + forces[k][i]).abs())
            .fold(0.0, f64::max);
    }
    let max_identity = identity[1..times.len() - 1].iter().fold(0.0f64, |m, x| m.max(*x));
    let max_gap = gap.iter().fold(0.0f64, |m, x| m.max(*x));
    Ok(EhrenfestReport {
        times,
        identity_residual: identity,
        classicality_gap: gap,
        max_identity_residual: max_identity,
        max_classicality_gap: max_gap,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeRow {
    pub d: f64,
    /// Duhamel bound at the horizon.
    pub duhamel_term: f64,
    /// max_t ‖(1 − Ω)Wψ‖.
    pub comparator_term: f64,
    pub magnitude: f64,
    /// max_t of the closed-prefactor bound with Δ₁ = Duhamel.
    pub total_bound: f64,
    /// Every ‖Ω⁻¹Wψ‖ resolved in the truncated basis.
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SqueezeTable {
    pub rows: Vec<SqueezeRow>,
    pub argmin_d: f64,
    pub interior_minimum: bool,
}

/// Width sweep M0 = d·Identity at `problem.alpha0`, using the approximating
/// evolution only (no grid propagation); `samples` grid samples per run.
pub fn squeeze_sweep(problem: &ReductionProblem, dilations: &[f64]) -> Result<SqueezeTable> {
    problem.validate()?;
    if dilations.is_empty() || dilations.iter().any(|d| !(*d > 0.0)) {
        return invalid("dilations must be positive");
    }
    let spec = &problem.hamiltonian;
    let n = spec.dimension();
    let traj = integrate_flow(spec, &problem.alpha0, problem.horizon, problem.dt)?;
    let comparator = Comparator::new(&problem.comparator, &problem.grid)?;
    let s = problem.comparator.s();
    let rows = dilations
        .par_iter()
        .map(|&d| -> Result<SqueezeRow> {
            let m0 = DMatrix::identity(n, n) * C64::new(d, 0.0);
            let packet0 = GaussianPacket::from_width(problem.alpha0.clone(), m0)?;
            let prop = ApproxPropagator::new(spec, &traj, &packet0)?;
            let duhamel = duhamel_bound(spec, &prop)?;
            let steps = prop.len() - 1;
            let stride = (steps / problem.samples).max(1);
            let mut idx: Vec<usize> = (0..=steps).step_by(stride).collect();
            if *idx.last().unwrap() != steps {
                idx.push(steps);
            }
            let mut delta2 = Vec::with_capacity(idx.len());
            let mut inverse = Vec::with_capacity(idx.len());
            for &k in &idx {
                let psi = prop.state(k).packet.sample_on_grid(&problem.grid)?;
                let p = comparator.profile(&psi)?;
                delta2.push(p.one_minus);
                inverse.push(if p.magnitude.status == MagnitudeStatus::Resolved {
                    p.magnitude.inverse_norm
                } else {
                    f64::INFINITY
                });
            }
            let resolved = inverse.iter().all(|v| v.is_finite());
            let magnitude = problem
                .magnitude
                .unwrap_or_else(|| 1.5 * inverse.iter().cloned().fold(0.0f64, f64::max));
            let total_bound = idx
                .iter()
                .zip(&delta2)
                .map(|(&k, &d2)| closed_form_bound(s, magnitude, duhamel[k], d2))
                .fold(0.0f64, f64::max);
            Ok(SqueezeRow {
                d,
                duhamel_term: *duhamel.last().unwrap(),
                comparator_term: delta2.iter().cloned().fold(0.0f64, f64::max),
                magnitude,
                total_bound,
                resolved,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (arg, _) = rows
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(ai, av), (i, r)| if r.total_bound < av { (i, r.total_bound) } else { (ai, av) });
    Ok(SqueezeTable {
        argmin_d: rows[arg].d,
        interior_minimum: arg != 0 && arg != rows.len() - 1,
        rows,
    })
}
