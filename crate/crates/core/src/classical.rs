//! Hamilton's equations, transit times and finite-horizon bound/scattering labels.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{HamiltonianSpec, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Kick-drift-kick leapfrog, used whenever h = T(π) + V(ξ).
    Leapfrog,
    /// Classical fourth-order Runge-Kutta for non-separable h.
    Rk4,
}

/// One step of size `dt` from `alpha`.
pub fn step(spec: &HamiltonianSpec, alpha: &PhasePoint, dt: f64) -> Result<PhasePoint> {
    if spec.is_separable() {
        leapfrog(spec, alpha, dt)
    } else {
        rk4(spec, alpha, dt)
    }
}

fn leapfrog(spec: &HamiltonianSpec, alpha: &PhasePoint, dt: f64) -> Result<PhasePoint> {
    let m = spec.mass();
    let v = spec.potential();
    let g0 = v.gradient(&alpha.xi)?;
    let half: Vec<f64> = alpha.pi.iter().zip(&g0).map(|(p, g)| p - 0.5 * dt * g).collect();
    let xi: Vec<f64> = alpha.xi.iter().zip(&half).map(|(x, p)| x + dt * p / m).collect();
    let g1 = v.gradient(&xi)?;
    let pi = half.iter().zip(&g1).map(|(p, g)| p - 0.5 * dt * g).collect();
    Ok(PhasePoint { xi, pi })
}

fn rk4(spec: &HamiltonianSpec, alpha: &PhasePoint, dt: f64) -> Result<PhasePoint> {
    let y = alpha.to_vec();
    let at = |y: &[f64], k: &[f64], c: f64| -> PhasePoint {
        PhasePoint::from_stacked(&y.iter().zip(k).map(|(a, b)| a + c * b).collect::<Vec<_>>())
    };
    let k1 = spec.vector_field(alpha)?;
    let k2 = spec.vector_field(&at(&y, &k1, 0.5 * dt))?;
    let k3 = spec.vector_field(&at(&y, &k2, 0.5 * dt))?;
    let k4 = spec.vector_field(&at(&y, &k3, dt))?;
    let out: Vec<f64> = (0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(PhasePoint::from_stacked(&out))
}

fn is_finite(a: &PhasePoint) -> bool {
    a.xi.iter().chain(&a.pi).all(|v| v.is_finite())
}

/// Uniformly sampled classical trajectory.
#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    times: Vec<f64>,
    points: Vec<PhasePoint>,
    spec: HamiltonianSpec,
    dt: f64,
    energy_drift: f64,
    integrator: Integrator,
}

/// Number of steps and effective step for horizon `t` at nominal step `dt`.
pub fn step_count(t: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t > 0.0 && dt > 0.0 && t.is_finite() && dt.is_finite()) {
        return invalid(format!("need T > 0 and dt > 0, got T = {t}, dt = {dt}"));
    }
    if dt > t * (1.0 + 1e-12) {
        return invalid(format!("dt = {dt} exceeds horizon T = {t}"));
    }
    let n = ((t / dt).round() as usize).max(1);
    Ok((n, t / n as f64))
}

pub fn integrate_flow(
    spec: &HamiltonianSpec,
    alpha0: &PhasePoint,
    t: f64,
    dt: f64,
) -> Result<ClassicalTrajectory> {
    integrate_with_escape(spec, alpha0, t, dt, f64::INFINITY).map(|(traj, _)| traj)
}

/// Integrate until `t` or until ‖α‖ exceeds `escape_radius`; returns the escape time if any.
pub fn integrate_with_escape(
    spec: &HamiltonianSpec,
    alpha0: &PhasePoint,
    t: f64,
    dt: f64,
    escape_radius: f64,
) -> Result<(ClassicalTrajectory, Option<f64>)> {
    let (n, dt) = step_count(t, dt)?;
    if alpha0.dim() != spec.dimension() {
        return invalid("initial point dimension does not match the Hamiltonian");
    }
    let e0 = spec.eval_h(alpha0)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    times.push(0.0);
    points.push(alpha0.clone());
    let mut drift: f64 = 0.0;
    let mut escaped = None;
    let mut cur = alpha0.clone();
    for k in 1..=n {
        let next = match step(spec, &cur, dt) {
            Ok(p) if is_finite(&p) => p,
            Ok(_) | Err(Error::Domain { .. }) => {
                return Err(Error::Diverged {
                    last_valid_time: (k - 1) as f64 * dt,
                })
            }
            Err(e) => return Err(e),
        };
        let e = spec.eval_h(&next)?;
        if !e.is_finite() {
            return Err(Error::Diverged {
                last_valid_time: (k - 1) as f64 * dt,
            });
        }
        drift = drift.max((e - e0).abs());
        times.push(k as f64 * dt);
        points.push(next.clone());
        if next.norm() > escape_radius {
            escaped = Some(k as f64 * dt);
            break;
        }
        cur = next;
    }
    let integrator = if spec.is_separable() {
        Integrator::Leapfrog
    } else {
        Integrator::Rk4
    };
    Ok((
        ClassicalTrajectory {
            times,
            points,
            spec: spec.clone(),
            dt,
            energy_drift: drift,
            integrator,
        },
        escaped,
    ))
}

impl ClassicalTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn energy_drift(&self) -> f64 {
        self.energy_drift
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn last(&self) -> &PhasePoint {
        self.points.last().unwrap()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let hi = self.end_time();
        if !(-1e-12..=hi + 1e-12).contains(&t) {
            return Err(Error::Range {
                t0: t,
                t1: t,
                lo: 0.0,
                hi,
            });
        }
        Ok(())
    }

    /// State at `t` by a partial integrator step from the preceding sample.
    pub fn state_at(&self, t: f64) -> Result<PhasePoint> {
        self.check_time(t)?;
        let i = ((t / self.dt).floor() as usize).min(self.len() - 1);
        let tau = t - self.times[i];
        if tau.abs() < 1e-15 * self.dt.max(1.0) {
            return Ok(self.points[i].clone());
        }
        step(&self.spec, &self.points[i], tau)
    }

    /// Cubic Hermite interpolation using the vector field at the bracketing samples.
    pub fn interpolate(&self, t: f64) -> Result<PhasePoint> {
        self.check_time(t)?;
        let i = ((t / self.dt).floor() as usize).min(self.len() - 2);
        let s = ((t - self.times[i]) / self.dt).clamp(0.0, 1.0);
        let (a, b) = (self.points[i].to_vec(), self.points[i + 1].to_vec());
        let (fa, fb) = (
            self.spec.vector_field(&self.points[i])?,
            self.spec.vector_field(&self.points[i + 1])?,
        );
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let v: Vec<f64> = (0..a.len())
            .map(|k| h00 * a[k] + h10 * self.dt * fa[k] + h01 * b[k] + h11 * self.dt * fb[k])
            .collect();
        Ok(PhasePoint::from_stacked(&v))
    }

    /// CSV with columns t, xi_0.., pi_0.., energy.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.spec.dimension();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("xi_{i}")));
        header.extend((0..n).map(|i| format!("pi_{i}")));
        header.push("energy".into());
        writeln!(w, "{}", header.join(","))?;
        for (t, p) in self.times.iter().zip(&self.points) {
            let mut row = vec![format!("{t:.17e}")];
            row.extend(p.to_vec().iter().map(|v| format!("{v:.17e}")));
            row.push(format!("{:.17e}", self.spec.eval_h(p)?));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Compact phase-space region; infinite extents are allowed for unbounded directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseRegion {
    Ball { center: PhasePoint, radius: f64 },
    /// Half-widths stacked as (ξ..., π...).
    Box { center: PhasePoint, half_widths: Vec<f64> },
}

impl PhaseRegion {
    pub fn ball(center: PhasePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return invalid("ball radius must be positive");
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn boxed(center: PhasePoint, half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.len() != 2 * center.dim() || half_widths.iter().any(|h| !(*h > 0.0)) {
            return invalid("box needs 2n positive half-widths");
        }
        Ok(Self::Box { center, half_widths })
    }

    pub fn center(&self) -> &PhasePoint {
        match self {
            Self::Ball { center, .. } | Self::Box { center, .. } => center,
        }
    }

    pub fn contains(&self, alpha: &PhasePoint) -> bool {
        match self {
            Self::Ball { center, radius } => {
                let d: f64 = alpha
                    .to_vec()
                    .iter()
                    .zip(center.to_vec())
                    .map(|(a, c)| (a - c).powi(2))
                    .sum();
                d.sqrt() <= *radius
            }
            Self::Box { center, half_widths } => alpha
                .to_vec()
                .iter()
                .zip(center.to_vec())
                .zip(half_widths)
                .all(|((a, c), h)| (a - c).abs() <= *h),
        }
    }
}

/// Time spent in `region` during `window`; crossings refined by bisection.
pub fn classical_transit_time(
    traj: &ClassicalTrajectory,
    region: &PhaseRegion,
    window: [f64; 2],
) -> Result<f64> {
    let [t0, t1] = window;
    let hi = traj.end_time();
    if !(t0 >= -1e-12 && t1 <= hi + 1e-12 && t0 <= t1) {
        return Err(Error::Range { t0, t1, lo: 0.0, hi });
    }
    let tol = 1e-10 * traj.dt();
    let mut nodes = vec![t0];
    nodes.extend(traj.times().iter().copied().filter(|&t| t > t0 && t < t1));
    nodes.push(t1);
    let mut states = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        states.push(traj.state_at(t)?);
    }
    let mut tau = 0.0;
    for k in 0..nodes.len() - 1 {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let fa = region.contains(&states[k]);
        let fb = region.contains(&states[k + 1]);
        if fa == fb {
            if fa {
                tau += b - a;
            }
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let s = step(traj.spec(), &states[k], mid - a)?;
            if region.contains(&s) == fa {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = 0.5 * (lo + hi);
        tau += if fa { c - a } else { b - c };
    }
    Ok(tau)
}

pub fn classical_average_stay(
    traj: &ClassicalTrajectory,
    region: &PhaseRegion,
    window: [f64; 2],
) -> Result<f64> {
    let len = window[1] - window[0];
    if !(len > 0.0) {
        return invalid("average stay needs a window of positive length");
    }
    Ok(classical_transit_time(traj, region, window)? / len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalLabel {
    Bound,
    Scattering,
    /// Neither test conclusive at this horizon; exceptional orbits land here too.
    Undecided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassicalClassification {
    pub label: ClassicalLabel,
    pub horizon: f64,
    pub dt: f64,
    pub radii: Vec<f64>,
    /// Smallest tested radius containing the whole orbit.
    pub bounding_radius: Option<f64>,
    pub max_norm: f64,
    pub final_norm: f64,
    /// Orbit left the escape radius (10 × largest tested radius) before the horizon.
    pub escaped_at: Option<f64>,
    pub trailing_monotone: bool,
}

/// Finite-horizon bound/scattering label from the phase-space norm along the orbit.
pub fn classify_classical(
    spec: &HamiltonianSpec,
    alpha0: &PhasePoint,
    horizon: f64,
    dt: f64,
    radii: &[f64],
) -> Result<ClassicalClassification> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return invalid("radius schedule must be non-empty and positive");
    }
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let r_max = *radii.last().unwrap();
    let (traj, escaped_at) = integrate_with_escape(spec, alpha0, horizon, dt, 10.0 * r_max)?;
    let norms: Vec<f64> = traj.points().iter().map(PhasePoint::norm).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let final_norm = *norms.last().unwrap();
    let bounding_radius = radii.iter().copied().find(|&r| max_norm <= r);
    let tail_start = (norms.len() as f64 * 0.8) as usize;
    let trailing_monotone = norms[tail_start..].windows(2).all(|w| w[1] >= w[0]);
    let label = if bounding_radius.is_some() {
        ClassicalLabel::Bound
    } else if final_norm > r_max && trailing_monotone {
        ClassicalLabel::Scattering
    } else {
        ClassicalLabel::Undecided
    };
    Ok(ClassicalClassification {
        label,
        horizon,
        dt: traj.dt(),
        radii,
        bounding_radius,
        max_norm,
        final_norm,
        escaped_at,
        trailing_monotone,
    })
}
