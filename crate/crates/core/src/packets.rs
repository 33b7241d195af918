//! Gaussian packets U(α)Γ^M and their evolution under the quadratic
//! approximation W(t,0) = X·U(α(t))·Z(t,0)·U(α(0))*.
//!
//! Widths are carried as factor pairs (A, B) with M = B⁻¹A; the linear (A, B)
//! system stays finite where M itself would blow up.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalTrajectory;
use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, GridWavefunction};
use crate::hamiltonian::{HamiltonianSpec, PhasePoint};

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub type CMatrix = DMatrix<C64>;

/// e^{iφ} U(α) Γ^M with Γ^M(x) = π^{−n/4} (det B)^{−1/2} exp(−½⟨x, Mx⟩).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPacket {
    alpha: PhasePoint,
    m: CMatrix,
    a: CMatrix,
    b: CMatrix,
    phase: f64,
    /// Continuous branch of arg det B.
    det_b_arg: f64,
}

fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}

fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().all(|&l| l > 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_width(m: &CMatrix, time: f64) -> Result<()> {
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-10 * (1.0 + max_abs(m)) {
        return Err(Error::Invariant {
            time,
            what: format!("width matrix not symmetric (defect {asym:.3e})"),
        });
    }
    if !is_positive_definite(&real_part(m)) {
        return Err(Error::Invariant {
            time,
            what: "Re M is not positive definite".into(),
        });
    }
    Ok(())
}

/// Nearest representative of `arg` to `reference` modulo 2π.
fn unwrap_angle(arg: f64, reference: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    arg + two_pi * ((reference - arg) / two_pi).round()
}

impl GaussianPacket {
    pub fn from_factors(alpha: PhasePoint, a: CMatrix, b: CMatrix, phase: f64) -> Result<Self> {
        let n = alpha.dim();
        if a.shape() != (n, n) || b.shape() != (n, n) {
            return invalid("factor matrices must be n×n");
        }
        let det = b.determinant();
        if det.norm() < 1e-300 {
            return Err(Error::Caustic { time: 0.0 });
        }
        let m = b
            .clone()
            .lu()
            .solve(&a)
            .ok_or(Error::Caustic { time: 0.0 })?;
        check_width(&m, 0.0)?;
        Ok(Self {
            alpha,
            m,
            a,
            b,
            phase,
            det_b_arg: det.arg(),
        })
    }

    /// Normalised packet of width `m0` centred at `alpha`: B = (Re M)^{−1/2}, A = B·M.
    pub fn from_width(alpha: PhasePoint, m0: CMatrix) -> Result<Self> {
        let n = alpha.dim();
        if m0.shape() != (n, n) {
            return invalid("width matrix must be n×n");
        }
        check_width(&m0, 0.0)?;
        let re = real_part(&m0);
        let eig = SymmetricEigen::new((&re + re.transpose()) * 0.5);
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let b = inv_sqrt.map(|v| C64::new(v, 0.0));
        let a = &b * &m0;
        Self::from_factors(alpha, a, b, 0.0)
    }

    /// Scalar width d·Identity.
    pub fn isotropic(alpha: PhasePoint, d: C64) -> Result<Self> {
        let n = alpha.dim();
        Self::from_width(alpha, CMatrix::identity(n, n) * d)
    }

    /// Γ(0): M = A = B = Identity, α = 0, zero phase.
    pub fn vacuum(n: usize) -> Self {
        let id = CMatrix::identity(n, n);
        Self {
            alpha: PhasePoint::origin(n),
            m: id.clone(),
            a: id.clone(),
            b: id,
            phase: 0.0,
            det_b_arg: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.dim()
    }

    pub fn alpha(&self) -> &PhasePoint {
        &self.alpha
    }

    pub fn width(&self) -> &CMatrix {
        &self.m
    }

    pub fn factor_a(&self) -> &CMatrix {
        &self.a
    }

    pub fn factor_b(&self) -> &CMatrix {
        &self.b
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn det_b_arg(&self) -> f64 {
        self.det_b_arg
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// π^{−n/4} |det B|^{−1/2}.
    pub fn norm_factor(&self) -> f64 {
        std::f64::consts::PI.powf(-0.25 * self.dim() as f64) * self.b.determinant().norm().powf(-0.5)
    }

    /// ∫|ψ|² from the closed form: norm_factor² · π^{n/2} · det(Re M)^{−1/2}.
    pub fn closed_form_norm_sq(&self) -> f64 {
        let n = self.dim() as f64;
        self.norm_factor().powi(2)
            * std::f64::consts::PI.powf(0.5 * n)
            * real_part(&self.m).determinant().powf(-0.5)
    }

    /// Position covariance (2 Re M)^{−1}.
    pub fn position_covariance(&self) -> DMatrix<f64> {
        (real_part(&self.m) * 2.0).try_inverse().expect("Re M is positive definite")
    }

    /// Momentum covariance (2 Re M^{−1})^{−1}.
    pub fn momentum_covariance(&self) -> DMatrix<f64> {
        let minv = self.m.clone().try_inverse().expect("M is invertible");
        (real_part(&minv) * 2.0).try_inverse().expect("Re M⁻¹ is positive definite")
    }

    /// Complex amplitude at `x`.
    pub fn amplitude(&self, x: &[f64]) -> C64 {
        let n = self.dim();
        let xi = &self.alpha.xi;
        let pi = &self.alpha.pi;
        let y: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - b).collect();
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                quad += self.m[(i, j)] * y[i] * y[j];
            }
        }
        let kick: f64 = pi.iter().zip(&y).map(|(p, v)| p * v).sum::<f64>()
            + 0.5 * pi.iter().zip(xi).map(|(p, v)| p * v).sum::<f64>();
        let pref = self.norm_factor();
        let ph = self.phase + kick - 0.5 * self.det_b_arg;
        C64::from_polar(pref, ph) * (-0.5 * quad).exp()
    }

    pub fn sample_on_grid(&self, grid: &GridSpec) -> Result<GridWavefunction> {
        if grid.dimension() != self.dim() {
            return invalid("packet and grid dimensions differ");
        }
        let psi = GridWavefunction::from_fn(*grid, |x| self.amplitude(x))?;
        let mass = psi.boundary_mass();
        if (psi.norm() - 1.0).abs() > 1e-8 || mass > crate::grid::DEFAULT_BOUNDARY_TOLERANCE {
            return Err(Error::Wraparound { time: 0.0, mass: mass.max((psi.norm() - 1.0).abs()) });
        }
        Ok(psi)
    }
}

pub fn vacuum(n: usize) -> GaussianPacket {
    GaussianPacket::vacuum(n)
}

pub fn sample_on_grid(packet: &GaussianPacket, grid: &GridSpec) -> Result<GridWavefunction> {
    packet.sample_on_grid(grid)
}

/// Width factors along a classical trajectory.
#[derive(Debug, Clone)]
pub struct WidthSeries {
    pub times: Vec<f64>,
    pub a: Vec<CMatrix>,
    pub b: Vec<CMatrix>,
    pub m: Vec<CMatrix>,
    pub det_b_arg: Vec<f64>,
}

struct Blocks {
    xx: CMatrix,
    xp: CMatrix,
    px: CMatrix,
    pp: CMatrix,
}

fn hessian_blocks(spec: &HamiltonianSpec, alpha: &PhasePoint) -> Result<Blocks> {
    let h = spec.hessian_h(alpha)?.map(|v| C64::new(v, 0.0));
    let n = spec.dimension();
    Ok(Blocks {
        xx: h.view((0, 0), (n, n)).into_owned(),
        xp: h.view((0, n), (n, n)).into_owned(),
        px: h.view((n, 0), (n, n)).into_owned(),
        pp: h.view((n, n), (n, n)).into_owned(),
    })
}

fn ab_rhs(h: &Blocks, a: &CMatrix, b: &CMatrix) -> (CMatrix, CMatrix) {
    let da = b * &h.xx * I - a * &h.xp;
    let db = b * &h.px + a * &h.pp * I;
    (da, db)
}

/// Ȧ = iB·h_ξξ − A·h_ξπ, Ḃ = B·h_πξ + iA·h_ππ along the trajectory (RK4).
pub fn evolve_ab(
    spec: &HamiltonianSpec,
    traj: &ClassicalTrajectory,
    a0: &CMatrix,
    b0: &CMatrix,
) -> Result<WidthSeries> {
    let n = spec.dimension();
    if a0.shape() != (n, n) || b0.shape() != (n, n) {
        return invalid("initial factors must be n×n");
    }
    let dt = traj.dt();
    let len = traj.len();
    let mut out = WidthSeries {
        times: traj.times().to_vec(),
        a: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        m: Vec::with_capacity(len),
        det_b_arg: Vec::with_capacity(len),
    };
    let (mut a, mut b) = (a0.clone(), b0.clone());
    let mut arg = 0.0;
    let scale = max_abs(b0).max(1.0);
    let mut h_left = hessian_blocks(spec, &traj.points()[0])?;
    for k in 0..len {
        let t = traj.times()[k];
        let det = b.determinant();
        if det.norm() < 1e-12 * scale.powi(n as i32) {
            return Err(Error::Caustic { time: t });
        }
        arg = if k == 0 { det.arg() } else { unwrap_angle(det.arg(), arg) };
        let m = b.clone().lu().solve(&a).ok_or(Error::Caustic { time: t })?;
        check_width(&m, t)?;
        out.a.push(a.clone());
        out.b.push(b.clone());
        out.m.push(m);
        out.det_b_arg.push(arg);
        if k + 1 == len {
            break;
        }
        let h_mid = hessian_blocks(spec, &traj.interpolate(t + 0.5 * dt)?)?;
        let h_right = hessian_blocks(spec, &traj.points()[k + 1])?;
        let half = C64::new(0.5 * dt, 0.0);
        let full = C64::new(dt, 0.0);
        let (two, sixth) = (C64::new(2.0, 0.0), C64::new(dt / 6.0, 0.0));
        let (ka1, kb1) = ab_rhs(&h_left, &a, &b);
        let (ka2, kb2) = ab_rhs(&h_mid, &(&a + &ka1 * half), &(&b + &kb1 * half));
        let (ka3, kb3) = ab_rhs(&h_mid, &(&a + &ka2 * half), &(&b + &kb2 * half));
        let (ka4, kb4) = ab_rhs(&h_right, &(&a + &ka3 * full), &(&b + &kb3 * full));
        a += (ka1 + ka2 * two + ka3 * two + ka4) * sixth;
        b += (kb1 + kb2 * two + kb3 * two + kb4) * sixth;
        h_left = h_right;
    }
    Ok(out)
}

fn x_integrand(spec: &HamiltonianSpec, alpha: &PhasePoint) -> Result<f64> {
    let h = spec.eval_h(alpha)?;
    let g = spec.gradient_h(alpha)?;
    let dot: f64 = g.iter().zip(alpha.to_vec()).map(|(a, b)| a * b).sum();
    Ok(h - 0.5 * dot)
}

/// X_phase(t) = ∫₀ᵗ [h(α) − ½⟨h⁽¹⁾(α), α⟩] ds; X(t,0) = e^{−i X_phase(t)}.
///
/// Per-interval Simpson rule, midpoints from the trajectory's Hermite interpolant.
pub fn phase_x(spec: &HamiltonianSpec, traj: &ClassicalTrajectory) -> Result<Vec<f64>> {
    let dt = traj.dt();
    let mut out = Vec::with_capacity(traj.len());
    let mut acc = 0.0;
    out.push(0.0);
    let mut left = x_integrand(spec, &traj.points()[0])?;
    for k in 1..traj.len() {
        let mid = x_integrand(spec, &traj.interpolate(traj.times()[k - 1] + 0.5 * dt)?)?;
        let right = x_integrand(spec, &traj.points()[k])?;
        acc += dt / 6.0 * (left + 4.0 * mid + right);
        out.push(acc);
        left = right;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ApproxPropagatorState {
    pub t: f64,
    pub packet: GaussianPacket,
    pub classical_point: PhasePoint,
    pub x_phase: f64,
}

/// W(t,0) applied to a packet, precomputed on the trajectory's time samples.
#[derive(Debug, Clone)]
pub struct ApproxPropagator {
    widths: WidthSeries,
    x_phase: Vec<f64>,
    points: Vec<PhasePoint>,
    initial_phase: f64,
}

impl ApproxPropagator {
    pub fn new(
        spec: &HamiltonianSpec,
        traj: &ClassicalTrajectory,
        packet0: &GaussianPacket,
    ) -> Result<Self> {
        let start = &traj.points()[0];
        if packet0.alpha().abs_diff(start).iter().any(|d| *d > 1e-12) {
            return invalid("packet must be centred at the trajectory's initial point");
        }
        let widths = evolve_ab(spec, traj, packet0.factor_a(), packet0.factor_b())?;
        let x_phase = phase_x(spec, traj)?;
        Ok(Self {
            widths,
            x_phase,
            points: traj.points().to_vec(),
            initial_phase: packet0.phase(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn widths(&self) -> &WidthSeries {
        &self.widths
    }

    pub fn state(&self, k: usize) -> ApproxPropagatorState {
        let packet = GaussianPacket {
            alpha: self.points[k].clone(),
            m: self.widths.m[k].clone(),
            a: self.widths.a[k].clone(),
            b: self.widths.b[k].clone(),
            phase: self.initial_phase - self.x_phase[k],
            det_b_arg: self.widths.det_b_arg[k],
        };
        ApproxPropagatorState {
            t: self.widths.times[k],
            packet,
            classical_point: self.points[k].clone(),
            x_phase: self.x_phase[k],
        }
    }

    /// Index of the sample at time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let times = &self.widths.times;
        let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
        let k = (t / dt).round();
        if k < 0.0 || k as usize >= times.len() || (times[k as usize] - t).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Range {
                t0: t,
                t1: t,
                lo: 0.0,
                hi: *times.last().unwrap(),
            });
        }
        Ok(k as usize)
    }

    /// CSV with columns t, xi.., pi.., Re/Im of M entries (row-major), phase.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.points[0].dim();
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("xi_{i}")));
        header.extend((0..n).map(|i| format!("pi_{i}")));
        for i in 0..n {
            for j in 0..n {
                header.push(format!("re_m_{i}{j}"));
                header.push(format!("im_m_{i}{j}"));
            }
        }
        header.push("phase".into());
        writeln!(w, "{}", header.join(","))?;
        for k in 0..self.len() {
            let s = self.state(k);
            let mut row = vec![format!("{:.17e}", s.t)];
            row.extend(s.classical_point.to_vec().iter().map(|v| format!("{v:.17e}")));
            for i in 0..n {
                for j in 0..n {
                    let z = s.packet.m[(i, j)];
                    row.push(format!("{:.17e}", z.re));
                    row.push(format!("{:.17e}", z.im));
                }
            }
            row.push(format!("{:.17e}", s.packet.phase));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// W(t,0)ψ₀ for a packet ψ₀ centred at α(0); `t` must be a trajectory sample.
pub fn apply_w(
    spec: &HamiltonianSpec,
    traj: &ClassicalTrajectory,
    packet0: &GaussianPacket,
    t: f64,
) -> Result<GaussianPacket> {
    let prop = ApproxPropagator::new(spec, traj, packet0)?;
    let k = prop.index_of(t)?;
    Ok(prop.state(k).packet)
}

/// Serializable width specification: scalar multiple of the identity or full complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WidthConfig {
    Scalar(f64),
    /// Row-major [re, im] pairs.
    Matrix(Vec<Vec<[f64; 2]>>),
}

impl Default for WidthConfig {
    fn default() -> Self {
        Self::Scalar(1.0)
    }
}

impl WidthConfig {
    pub fn to_matrix(&self, n: usize) -> Result<CMatrix> {
        match self {
            Self::Scalar(d) => Ok(CMatrix::identity(n, n) * C64::new(*d, 0.0)),
            Self::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return invalid("width matrix has the wrong shape");
                }
                Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::integrate_flow;
    use crate::grid::{expectation_a, expectation_position, propagate, weyl_displace};
    use std::f64::consts::PI;

    fn harmonic() -> HamiltonianSpec {
        HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5]).unwrap()
    }

    fn scalar(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    #[test]
    fn vacuum_properties() {
        let grid = GridSpec::default();
        let v = vacuum(1);
        assert!((v.closed_form_norm_sq() - 1.0).abs() < 1e-14);
        let psi = v.sample_on_grid(&grid).unwrap();
        for (x, z) in grid.axis().iter().zip(psi.amplitudes()) {
            let want = PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((z - want).norm() < 1e-12);
        }
        assert!((expectation_position(&psi, |x| x[0] * x[0]) - 0.5).abs() < 1e-12);
        assert!((v.momentum_covariance()[(0, 0)] - 0.5).abs() < 1e-14);
        // (Q + iP)Γ = 0: x ψ + ψ' vanishes
        let fourier = crate::grid::Fourier::new(&grid);
        let mut d = psi.amplitudes().to_vec();
        fourier.forward(&mut d);
        for (z, k) in d.iter_mut().zip(grid.wavenumbers()) {
            *z *= I * k;
        }
        fourier.inverse(&mut d);
        let worst = grid
            .axis()
            .iter()
            .zip(psi.amplitudes())
            .zip(&d)
            .map(|((x, z), dz)| (z * x + dz).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn sampled_packets() {
        let grid = GridSpec::default();
        let p = GaussianPacket::isotropic(PhasePoint::new_1d(0.0, 0.0), C64::new(1.0, 0.0) / C64::new(1.0, 1.0)).unwrap();
        assert!((p.closed_form_norm_sq() - 1.0).abs() < 1e-12);
        let psi = p.sample_on_grid(&grid).unwrap();
        let var = expectation_position(&psi, |x| x[0] * x[0]);
        assert!((var - p.position_covariance()[(0, 0)]).abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);

        let p = GaussianPacket::isotropic(PhasePoint::new_1d(1.0, 3.0), C64::new(1.0, 0.0)).unwrap();
        let a = expectation_a(&p.sample_on_grid(&grid).unwrap()).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-10 && (a[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn sampled_packet_equals_weyl_displaced_vacuum() {
        let grid = GridSpec::default();
        let alpha = PhasePoint::new_1d(-1.5, 2.5);
        let direct = GaussianPacket::isotropic(alpha.clone(), C64::new(1.0, 0.0)).unwrap();
        let via = weyl_displace(&vacuum(1).sample_on_grid(&grid).unwrap(), &alpha).unwrap();
        assert!(direct.sample_on_grid(&grid).unwrap().distance(&via).unwrap() < 1e-10);
    }

    #[test]
    fn harmonic_widths_are_stationary() {
        let traj = integrate_flow(&harmonic(), &PhasePoint::new_1d(0.0, 0.0), 2.0 * PI, 1e-3).unwrap();
        let id = scalar(C64::new(1.0, 0.0));
        let s = evolve_ab(&harmonic(), &traj, &id, &id).unwrap();
        for (k, m) in s.m.iter().enumerate() {
            assert!((m[(0, 0)] - 1.0).norm() < 1e-10);
            let want = C64::from_polar(1.0, s.times[k]);
            assert!((s.b[k][(0, 0)] - want).norm() < 1e-9);
        }
        // continuous branch: arg det B = t, no 2π jumps
        assert!((s.det_b_arg.last().unwrap() - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn free_width_matches_riccati_solution() {
        let free = HamiltonianSpec::polynomial_1d(1.0, &[0.0]).unwrap();
        let id = scalar(C64::new(1.0, 0.0));
        for dt in [1e-2, 1e-3] {
            let traj = integrate_flow(&free, &PhasePoint::new_1d(0.0, 0.0), 1.0, dt).unwrap();
            let s = evolve_ab(&free, &traj, &id, &id).unwrap();
            let m = s.m.last().unwrap()[(0, 0)];
            assert!((m - C64::new(0.5, -0.5)).norm() < 1e-8);
        }
    }

    #[test]
    fn inverted_oscillator_width() {
        let inv = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, -0.5]).unwrap();
        let id = scalar(C64::new(1.0, 0.0));
        let traj = integrate_flow(&inv, &PhasePoint::new_1d(0.0, 0.0), 2.0, 1e-3).unwrap();
        let s = evolve_ab(&inv, &traj, &id, &id).unwrap();
        let fine_traj = integrate_flow(&inv, &PhasePoint::new_1d(0.0, 0.0), 2.0, 1e-4).unwrap();
        let fine = evolve_ab(&inv, &fine_traj, &id, &id).unwrap();
        for (k, m) in s.m.iter().enumerate() {
            let t = s.times[k];
            let want = C64::new(t.cosh(), -t.sinh()) / C64::new(t.cosh(), t.sinh());
            assert!((m[(0, 0)] - want).norm() < 1e-7);
            assert!(m[(0, 0)].re > 0.0);
            assert!((m[(0, 0)] - fine.m[10 * k][(0, 0)]).norm() < 1e-7);
        }
    }

    #[test]
    fn riccati_residual_and_norm() {
        let quartic = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        let traj = integrate_flow(&quartic, &PhasePoint::new_1d(1.0, 0.0), 3.0, 1e-3).unwrap();
        let p0 = GaussianPacket::isotropic(PhasePoint::new_1d(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        let prop = ApproxPropagator::new(&quartic, &traj, &p0).unwrap();
        let s = prop.widths();
        let dt = traj.dt();
        let m_at = |k: usize| s.m[k][(0, 0)];
        for k in (2..s.m.len() - 2).step_by(97) {
            let m = m_at(k);
            let dm = (m_at(k - 2) - m_at(k - 1) * 8.0 + m_at(k + 1) * 8.0 - m_at(k + 2)) / (12.0 * dt);
            let hxx = 3.0 * traj.points()[k].xi[0].powi(2);
            let rhs = I * hxx - I * m * m;
            assert!((dm - rhs).norm() < 1e-6);
            assert!((prop.state(k).packet.closed_form_norm_sq() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn phase_integral() {
        let h = harmonic();
        let traj = integrate_flow(&h, &PhasePoint::new_1d(1.0, 0.0), 5.0, 1e-3).unwrap();
        assert!(phase_x(&h, &traj).unwrap().iter().all(|v| v.abs() < 1e-12));
        let traj = integrate_flow(&h, &PhasePoint::new_1d(0.0, 0.0), 5.0, 1e-3).unwrap();
        assert!(phase_x(&h, &traj).unwrap().iter().all(|v| *v == 0.0));
        // free particle: h − ½⟨h⁽¹⁾, α⟩ = π²/2m − π²/2m = 0
        let free = HamiltonianSpec::polynomial_1d(1.0, &[0.0]).unwrap();
        let traj = integrate_flow(&free, &PhasePoint::new_1d(0.0, 2.0), 3.0, 1e-3).unwrap();
        assert!(phase_x(&free, &traj).unwrap().iter().all(|v| v.abs() < 1e-12));
        // constant potential shifts the phase linearly
        let shifted = HamiltonianSpec::polynomial_1d(1.0, &[0.7]).unwrap();
        let traj = integrate_flow(&shifted, &PhasePoint::new_1d(0.0, 2.0), 3.0, 1e-3).unwrap();
        assert!((phase_x(&shifted, &traj).unwrap().last().unwrap() - 2.1).abs() < 1e-12);
    }

    #[test]
    fn approximate_propagator_on_oscillator() {
        let h = harmonic();
        let a0 = PhasePoint::new_1d(1.0, 0.0);
        let traj = integrate_flow(&h, &a0, PI / 2.0, 1e-3).unwrap();
        let p0 = GaussianPacket::isotropic(a0.clone(), C64::new(1.0, 0.0)).unwrap();
        let w = apply_w(&h, &traj, &p0, traj.end_time()).unwrap();
        assert!(w.alpha().abs_diff(&PhasePoint::new_1d(0.0, -1.0)).iter().all(|d| *d < 1e-6));
        assert!((w.width()[(0, 0)] - 1.0).norm() < 1e-10);
    }

    #[test]
    fn w_matches_grid_for_quadratic_potential() {
        let h = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.3, 0.5]).unwrap();
        let a0 = PhasePoint::new_1d(1.0, 0.5);
        let grid = GridSpec::default();
        let traj = integrate_flow(&h, &a0, 2.0, 1e-3).unwrap();
        let p0 = GaussianPacket::isotropic(a0, C64::new(2.0, 0.5)).unwrap();
        let prop = ApproxPropagator::new(&h, &traj, &p0).unwrap();
        let run = propagate(&h, &p0.sample_on_grid(&grid).unwrap(), 2.0, 1e-3, 500).unwrap();
        for (t, psi) in run.times.iter().zip(&run.states) {
            let k = prop.index_of(*t).unwrap();
            let w = prop.state(k).packet.sample_on_grid(&grid).unwrap();
            let fid = w.inner(psi).unwrap();
            assert!(fid.norm() > 1.0 - 1e-6);
            // phases agree as well, not just moduli
            assert!((fid - 1.0).norm() < 1e-5, "t={t} {fid}");
        }
    }

    #[test]
    fn w_packet_is_centred_for_cubic_potential() {
        let h = HamiltonianSpec::polynomial_1d(1.0, &[0.0, 0.0, 0.5, 1.0 / 6.0]).unwrap();
        let a0 = PhasePoint::new_1d(0.5, 0.0);
        let traj = integrate_flow(&h, &a0, 2.0, 1e-3).unwrap();
        let p0 = GaussianPacket::isotropic(a0, C64::new(1.0, 0.0)).unwrap();
        let prop = ApproxPropagator::new(&h, &traj, &p0).unwrap();
        let grid = GridSpec::default();
        for k in (0..prop.len()).step_by(250) {
            let s = prop.state(k);
            let a = expectation_a(&s.packet.sample_on_grid(&grid).unwrap()).unwrap();
            let want = s.classical_point.to_vec();
            assert!(a.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-9));
            // centred width evolution: Z Γ has zero mean
            let centred = GaussianPacket { alpha: PhasePoint::origin(1), ..s.packet.clone() };
            let a = expectation_a(&centred.sample_on_grid(&grid).unwrap()).unwrap();
            assert!(a.iter().all(|x| x.abs() < 1e-9));
        }
    }

    #[test]
    fn two_dimensional_packet() {
        let grid = GridSpec::new(2, 64, 8.0).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[C64::new(1.2, 0.1), C64::new(0.2, 0.0), C64::new(0.2, 0.0), C64::new(0.8, -0.3)]);
        let p = GaussianPacket::from_width(PhasePoint::new(vec![0.5, -0.5], vec![1.0, 0.0]).unwrap(), m).unwrap();
        assert!((p.closed_form_norm_sq() - 1.0).abs() < 1e-12);
        let psi = p.sample_on_grid(&grid).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-10);
        let a = expectation_a(&psi).unwrap();
        for (x, y) in a.iter().zip([0.5, -0.5, 1.0, 0.0]) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_widths_rejected() {
        let bad = scalar(C64::new(-1.0, 0.0));
        assert!(GaussianPacket::from_width(PhasePoint::new_1d(0.0, 0.0), bad).is_err());
        let asym = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(GaussianPacket::from_width(PhasePoint::origin(2), asym).is_err());
    }

    #[test]
    fn packet_csv() {
        let h = harmonic();
        let traj = integrate_flow(&h, &PhasePoint::new_1d(1.0, 0.0), 0.01, 1e-3).unwrap();
        let p0 = GaussianPacket::isotropic(PhasePoint::new_1d(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        let prop = ApproxPropagator::new(&h, &traj, &p0).unwrap();
        let mut buf = Vec::new();
        prop.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,xi_0,pi_0,re_m_00,im_m_00,phase");
        assert_eq!(text.lines().count(), traj.len() + 1);
    }
}
