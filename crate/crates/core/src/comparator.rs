//! The comparator Ω̃_s = σ_s e^{−sA*A} realised in the Hermite (number) basis.
//!
//! Ω_s = σ_s^{−n} Ω̃_s is the normalised version (vacuum eigenvalue 1) used in
//! the error bounds. In two dimensions the comparator is the tensor product of
//! the one-dimensional ones, which is again σ^n e^{−s·(total number)}.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{weyl_displace_with, Fourier, GridSpec, GridWavefunction};
use crate::hamiltonian::PhasePoint;
use crate::hermite::hermite_table;

pub const DEFAULT_ORDER: usize = 128;
/// Representability threshold for the basis residual ‖ψ − Σ c_k h_k‖.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// |c_k|² below this (relative to ‖ψ‖²) is quadrature noise and is not amplified by Ω⁻¹.
pub const COEFFICIENT_FLOOR: f64 = 1e-26;
/// Share of ‖Ω⁻¹ψ‖² carried by the top quarter of significant levels above which
/// the series is declared divergent.
pub const DIVERGENT_TAIL_FRACTION: f64 = 0.5;
/// Largest exponent accepted by the closed-form inverse norm.
const EXP_GUARD: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawComparator")]
pub struct ComparatorSpec {
    s: f64,
    order: usize,
    center: Option<PhasePoint>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComparator {
    s: f64,
    #[serde(default)]
    order: Option<usize>,
    #[serde(default)]
    center: Option<PhasePoint>,
}

impl TryFrom<RawComparator> for ComparatorSpec {
    type Error = Error;
    fn try_from(r: RawComparator) -> Result<Self> {
        let mut spec = ComparatorSpec::new(r.s)?;
        if let Some(n) = r.order {
            spec = spec.with_order(n)?;
        }
        if let Some(c) = r.center {
            spec = spec.with_center(c);
        }
        Ok(spec)
    }
}

impl ComparatorSpec {
    /// Truncation order max(128, smallest N with σ e^{−sN} ≤ 1e−12).
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return invalid("comparator parameter s must be positive");
        }
        let sigma = -(-s).exp_m1();
        let needed = ((sigma * 1e12).ln() / s).ceil().max(0.0) as usize;
        Ok(Self {
            s,
            order: DEFAULT_ORDER.max(needed),
            center: None,
        })
    }

    pub fn with_order(mut self, order: usize) -> Result<Self> {
        if order < 16 {
            return invalid("comparator truncation order must be at least 16");
        }
        self.order = order;
        Ok(self)
    }

    pub fn with_center(mut self, center: PhasePoint) -> Self {
        self.center = if center.norm() == 0.0 { None } else { Some(center) };
        self
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn center(&self) -> Option<&PhasePoint> {
        self.center.as_ref()
    }

    /// σ_s = 1 − e^{−s}.
    pub fn sigma(&self) -> f64 {
        -(-self.s).exp_m1()
    }

    /// λ_s = e^s − 1.
    pub fn lambda(&self) -> f64 {
        self.s.exp_m1()
    }

    /// λ_{2s} = e^{2s} − 1.
    pub fn lambda_2s(&self) -> f64 {
        (2.0 * self.s).exp_m1()
    }

    /// σ_s e^{−sN}: the largest eigenvalue dropped by truncation.
    pub fn tail_bound(&self) -> f64 {
        self.sigma() * (-self.s * self.order as f64).exp()
    }

    /// Eigenvalue of Ω̃_s on h_k (one dimension).
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.sigma() * (-self.s * k as f64).exp()
    }
}

/// Hermite functions h_0..=h_N sampled on one grid axis.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    grid: GridSpec,
    order: usize,
    table: Vec<Vec<f64>>,
}

impl HermiteBasis {
    /// Fails if any h_k loses more than 1e−8 of its norm on the grid.
    pub fn new(grid: &GridSpec, order: usize) -> Result<Self> {
        let table = hermite_table(order, &grid.axis());
        let dx = grid.dx();
        for (k, row) in table.iter().enumerate() {
            let loss = (row.iter().map(|v| v * v).sum::<f64>() * dx - 1.0).abs();
            if loss > 1e-8 {
                return Err(Error::HermiteTruncation { order: k, loss });
            }
        }
        Ok(Self {
            grid: *grid,
            order,
            table,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Number of coefficients: (N+1)^n.
    pub fn len(&self) -> usize {
        (self.order + 1).pow(self.grid.dimension() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total excitation number of coefficient slot `idx`.
    pub fn level(&self, idx: usize) -> usize {
        let m = self.order + 1;
        if self.grid.dimension() == 1 {
            idx
        } else {
            idx / m + idx % m
        }
    }

    /// c_k = ⟨h_k, ψ⟩ by grid quadrature; 2D slots are k·(N+1) + l.
    pub fn coefficients(&self, psi: &GridWavefunction) -> Result<Vec<C64>> {
        if psi.grid() != &self.grid {
            return invalid("wavefunction grid does not match the Hermite basis");
        }
        let amp = psi.amplitudes();
        let dx = self.grid.dx();
        let m = self.order + 1;
        if self.grid.dimension() == 1 {
            return Ok(self
                .table
                .iter()
                .map(|row| row.iter().zip(amp).map(|(h, z)| z * *h).sum::<C64>() * dx)
                .collect());
        }
        let p = self.grid.points();
        // contract y first: partial[i][l] = Σ_j h_l(y_j) ψ(x_i, y_j)
        let partial: Vec<Vec<C64>> = (0..p)
            .map(|i| {
                let line = &amp[i * p..(i + 1) * p];
                self.table
                    .iter()
                    .map(|row| row.iter().zip(line).map(|(h, z)| z * *h).sum::<C64>())
                    .collect()
            })
            .collect();
        let mut out = vec![C64::new(0.0, 0.0); m * m];
        for (k, row) in self.table.iter().enumerate() {
            for (i, hk) in row.iter().enumerate() {
                if *hk == 0.0 {
                    continue;
                }
                for l in 0..m {
                    out[k * m + l] += partial[i][l] * *hk;
                }
            }
        }
        let w = dx * dx;
        out.iter_mut().for_each(|z| *z *= w);
        Ok(out)
    }

    /// Σ c_k h_k on the grid.
    pub fn synthesize(&self, coeffs: &[C64]) -> Result<GridWavefunction> {
        if coeffs.len() != self.len() {
            return invalid("coefficient vector has the wrong length");
        }
        let p = self.grid.points();
        let m = self.order + 1;
        let amp = if self.grid.dimension() == 1 {
            (0..p)
                .map(|j| {
                    coeffs
                        .iter()
                        .zip(&self.table)
                        .map(|(c, row)| c * row[j])
                        .sum()
                })
                .collect()
        } else {
            // partial[k][j] = Σ_l c_{kl} h_l(y_j)
            let partial: Vec<Vec<C64>> = (0..m)
                .map(|k| {
                    (0..p)
                        .map(|j| (0..m).map(|l| coeffs[k * m + l] * self.table[l][j]).sum())
                        .collect()
                })
                .collect();
            let mut amp = vec![C64::new(0.0, 0.0); p * p];
            for (i, chunk) in amp.chunks_mut(p).enumerate() {
                for k in 0..m {
                    let hk = self.table[k][i];
                    if hk == 0.0 {
                        continue;
                    }
                    for (z, c) in chunk.iter_mut().zip(&partial[k]) {
                        *z += c * hk;
                    }
                }
            }
            amp
        };
        GridWavefunction::from_amplitudes(self.grid, amp)
    }
}

/// Whether Ω⁻¹ψ could be evaluated in the truncated basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagnitudeStatus {
    Resolved,
    /// Σ|c_k|² e^{2sk} has not converged by the truncation order.
    Divergent,
    /// ψ has weight outside span{h_0..h_N}.
    Unrepresentable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeReport {
    pub status: MagnitudeStatus,
    /// ‖Ω_s⁻¹ψ‖ (normalised comparator); infinite unless resolved.
    pub inverse_norm: f64,
    /// Share of Σ|c_k|² e^{2sk} carried by the top quarter of the significant levels.
    pub tail_fraction: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorProfile {
    pub magnitude: MagnitudeReport,
    pub one_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeVerdict {
    pub within: bool,
    pub magnitude: f64,
    pub report: MagnitudeReport,
}

/// Ω̃_s bound to a grid.
#[derive(Debug, Clone)]
pub struct Comparator {
    spec: ComparatorSpec,
    basis: HermiteBasis,
    fourier: Option<Fourier>,
}

impl Comparator {
    pub fn new(spec: &ComparatorSpec, grid: &GridSpec) -> Result<Self> {
        if let Some(c) = spec.center() {
            if c.dim() != grid.dimension() {
                return invalid("comparator centre dimension does not match the grid");
            }
        }
        Ok(Self {
            spec: spec.clone(),
            basis: HermiteBasis::new(grid, spec.order())?,
            fourier: spec.center().map(|_| Fourier::new(grid)),
        })
    }

    pub fn spec(&self) -> &ComparatorSpec {
        &self.spec
    }

    pub fn basis(&self) -> &HermiteBasis {
        &self.basis
    }

    fn dim(&self) -> usize {
        self.basis.grid().dimension()
    }

    fn to_centre_frame(&self, psi: &GridWavefunction) -> Result<GridWavefunction> {
        match (self.spec.center(), &self.fourier) {
            (Some(c), Some(f)) => weyl_displace_with(psi, &c.neg(), f),
            _ => Ok(psi.clone()),
        }
    }

    fn uncentre(&self, psi: GridWavefunction) -> Result<GridWavefunction> {
        match (self.spec.center(), &self.fourier) {
            (Some(c), Some(f)) => weyl_displace_with(&psi, c, f),
            _ => Ok(psi),
        }
    }

    /// Coefficients in the comparator's frame and the basis residual norm.
    pub fn decompose(&self, psi: &GridWavefunction) -> Result<(Vec<C64>, f64)> {
        let centred = self.to_centre_frame(psi)?;
        let c = self.basis.coefficients(&centred)?;
        let back = self.basis.synthesize(&c)?;
        let residual = centred.distance(&back)?;
        Ok((c, residual))
    }

    fn scaled(&self, psi: &GridWavefunction, f: impl Fn(usize) -> f64) -> Result<GridWavefunction> {
        let (mut c, _) = self.decompose(psi)?;
        for (idx, z) in c.iter_mut().enumerate() {
            *z *= f(self.basis.level(idx));
        }
        self.uncentre(self.basis.synthesize(&c)?)
    }

    /// Ω̃_s ψ.
    pub fn apply(&self, psi: &GridWavefunction) -> Result<GridWavefunction> {
        let scale = self.spec.sigma().powi(self.dim() as i32);
        let s = self.spec.s();
        self.scaled(psi, |k| scale * (-s * k as f64).exp())
    }

    /// Ω_s ψ = σ_s^{−n} Ω̃_s ψ.
    pub fn apply_normalized(&self, psi: &GridWavefunction) -> Result<GridWavefunction> {
        let s = self.spec.s();
        self.scaled(psi, |k| (-s * k as f64).exp())
    }

    /// ⟨ψ, Ω_s ψ⟩.
    pub fn expectation_normalized(&self, psi: &GridWavefunction) -> Result<f64> {
        let (c, _) = self.decompose(psi)?;
        let s = self.spec.s();
        Ok(c
            .iter()
            .enumerate()
            .map(|(idx, z)| (-s * self.basis.level(idx) as f64).exp() * z.norm_sqr())
            .sum())
    }

    /// ‖(1 − Ω_s)ψ‖; weight outside the basis counts in full.
    pub fn one_minus_norm(&self, psi: &GridWavefunction) -> Result<f64> {
        let (c, residual) = self.decompose(psi)?;
        Ok(self.one_minus_from(&c, residual))
    }

    /// ‖Ω_s⁻¹ψ‖² = Σ|c_k|² e^{2sk} with noise filtering and divergence detection.
    pub fn inverse_norm(&self, psi: &GridWavefunction) -> Result<MagnitudeReport> {
        let (c, residual) = self.decompose(psi)?;
        Ok(self.magnitude_from(&c, residual, psi.norm()))
    }

    /// Magnitude report and ‖(1 − Ω_s)ψ‖ from a single decomposition.
    pub fn profile(&self, psi: &GridWavefunction) -> Result<ComparatorProfile> {
        let (c, residual) = self.decompose(psi)?;
        Ok(ComparatorProfile {
            magnitude: self.magnitude_from(&c, residual, psi.norm()),
            one_minus: self.one_minus_from(&c, residual),
        })
    }

    fn one_minus_from(&self, c: &[C64], residual: f64) -> f64 {
        let s = self.spec.s();
        let inside: f64 = c
            .iter()
            .enumerate()
            .map(|(idx, z)| (-(-s * self.basis.level(idx) as f64).exp_m1()).powi(2) * z.norm_sqr())
            .sum();
        (inside + residual * residual).sqrt()
    }

    fn magnitude_from(&self, c: &[C64], residual: f64, norm: f64) -> MagnitudeReport {
        let norm_sq = norm * norm;
        if residual > RESIDUAL_TOLERANCE * norm.max(1.0) {
            return MagnitudeReport {
                status: MagnitudeStatus::Unrepresentable,
                inverse_norm: f64::INFINITY,
                tail_fraction: f64::NAN,
                residual,
            };
        }
        let floor = COEFFICIENT_FLOOR * norm_sq;
        // growth is judged over the top quarter of the levels that carry signal
        let top = c
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm_sqr() >= floor)
            .map(|(idx, _)| self.basis.level(idx))
            .max()
            .unwrap_or(0);
        let cut = 3 * top / 4;
        let two_s = 2.0 * self.spec.s();
        let (mut total, mut tail) = (0.0f64, 0.0f64);
        for (idx, z) in c.iter().enumerate() {
            let w = z.norm_sqr();
            if w < floor {
                continue;
            }
            let level = self.basis.level(idx);
            let exponent = two_s * level as f64;
            if exponent > EXP_GUARD {
                tail = f64::INFINITY;
                total = f64::INFINITY;
                break;
            }
            let term = w * exponent.exp();
            total += term;
            if level > cut {
                tail += term;
            }
        }
        let tail_fraction = if total > 0.0 && total.is_finite() { tail / total } else if total == 0.0 { 0.0 } else { 1.0 };
        // a divergent series is dominated by its highest significant levels
        let status = if tail_fraction > DIVERGENT_TAIL_FRACTION {
            MagnitudeStatus::Divergent
        } else {
            MagnitudeStatus::Resolved
        };
        MagnitudeReport {
            status,
            inverse_norm: if status == MagnitudeStatus::Resolved { total.sqrt() } else { f64::INFINITY },
            tail_fraction,
            residual,
        }
    }

    /// ψ ∈ Ω_E: resolved and ‖Ω_s⁻¹ψ‖ ≤ E.
    pub fn within_magnitude(&self, e: f64, psi: &GridWavefunction) -> Result<MagnitudeVerdict> {
        if !(e > 0.0) {
            return invalid("magnitude threshold E must be positive");
        }
        let report = self.inverse_norm(psi)?;
        Ok(MagnitudeVerdict {
            within: report.status == MagnitudeStatus::Resolved && report.inverse_norm <= e,
            magnitude: e,
            report,
        })
    }
}

pub fn apply_comparator(spec: &ComparatorSpec, psi: &GridWavefunction) -> Result<GridWavefunction> {
    Comparator::new(spec, psi.grid())?.apply(psi)
}

pub fn within_magnitude(spec: &ComparatorSpec, e: f64, psi: &GridWavefunction) -> Result<MagnitudeVerdict> {
    Comparator::new(spec, psi.grid())?.within_magnitude(e, psi)
}

/// Operator-level scalars of the one-dimensional Ω̃_s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorScalars {
    pub s: f64,
    pub order: usize,
    pub sigma: f64,
    pub lambda: f64,
    /// ‖Ω̃_s‖, the top eigenvalue.
    pub norm: f64,
    /// Truncated eigenvalue sum plus the geometric tail.
    pub trace: f64,
    pub tail_bound: f64,
    /// ‖QΩ̃_s‖², ‖PΩ̃_s‖², ‖AΩ̃_s‖² on the truncated basis.
    pub q_norm_sq: f64,
    pub p_norm_sq: f64,
    pub annihilation_norm_sq: f64,
    /// σ_s² e^{s−1}/s.
    pub aomega_bound: f64,
    /// max(‖QΩ_s‖, ‖PΩ_s‖) for the normalised comparator.
    pub normalized_phase_space_norm: f64,
}

/// Banded (N+2)×(N+1) matrix of Q (sign = +1) or iP (sign = −1) in the number basis.
fn ladder_apply(v: &[f64], sign: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n + 1];
    for (k, &x) in v.iter().enumerate() {
        if k > 0 {
            out[k - 1] += (k as f64 / 2.0).sqrt() * x;
        }
        out[k + 1] += sign * ((k + 1) as f64 / 2.0).sqrt() * x;
    }
    out
}

fn ladder_apply_transpose(w: &[f64], sign: f64) -> Vec<f64> {
    let n = w.len() - 1;
    (0..n)
        .map(|k| {
            let down = if k > 0 { (k as f64 / 2.0).sqrt() * w[k - 1] } else { 0.0 };
            down + sign * ((k + 1) as f64 / 2.0).sqrt() * w[k + 1]
        })
        .collect()
}

/// ‖RΩ̃‖² by power iteration on Ω̃RᵀRΩ̃.
fn ladder_norm_sq(spec: &ComparatorSpec, sign: f64) -> f64 {
    let n = spec.order() + 1;
    let eig: Vec<f64> = (0..n).map(|k| spec.eigenvalue(k)).collect();
    let mut v: Vec<f64> = (0..n).map(|k| 1.0 / (1.0 + k as f64)).collect();
    let mut rayleigh = 0.0;
    for _ in 0..100_000 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let y: Vec<f64> = v.iter().zip(&eig).map(|(a, b)| a * b).collect();
        let z = ladder_apply(&y, sign);
        let w = ladder_apply_transpose(&z, sign);
        let next: Vec<f64> = w.iter().zip(&eig).map(|(a, b)| a * b).collect();
        let r: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
        v = next;
        if (r - rayleigh).abs() <= 1e-15 * r {
            rayleigh = r;
            break;
        }
        rayleigh = r;
    }
    rayleigh
}

pub fn comparator_scalars(spec: &ComparatorSpec) -> Result<ComparatorScalars> {
    let (s, sigma) = (spec.s(), spec.sigma());
    let n = spec.order();
    let truncated: f64 = (0..=n).map(|k| spec.eigenvalue(k)).sum();
    let trace = truncated + (-s * (n + 1) as f64).exp();
    let q = ladder_norm_sq(spec, 1.0);
    let p = ladder_norm_sq(spec, -1.0);
    let annihilation = (0..=n)
        .map(|k| k as f64 * spec.eigenvalue(k).powi(2))
        .fold(0.0, f64::max);
    let bound = sigma * sigma * (s - 1.0).exp() / s;
    for (name, v) in [("Q", q), ("P", p), ("A", annihilation)] {
        if v > bound + 1e-10 {
            return Err(Error::Invariant {
                time: 0.0,
                what: format!("‖{name}Ω̃‖² = {v} exceeds the closed-form bound {bound}"),
            });
        }
    }
    Ok(ComparatorScalars {
        s,
        order: n,
        sigma,
        lambda: spec.lambda(),
        norm: spec.eigenvalue(0),
        trace,
        tail_bound: spec.tail_bound(),
        q_norm_sq: q,
        p_norm_sq: p,
        annihilation_norm_sq: annihilation,
        aomega_bound: bound,
        normalized_phase_space_norm: q.max(p).sqrt() / sigma,
    })
}

/// Closed-form coherent-state quantities next to their truncated-basis values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentElements {
    /// |z|² = (|ξ|² + |π|²)/2.
    pub modulus_sq: f64,
    /// ⟨Γ(α), Ω̃_s Γ(α)⟩ = σ^n e^{−σ|z|²}.
    pub diag: f64,
    pub diag_measured: f64,
    /// ‖Ω̃_s⁻¹Γ(α)‖² = σ^{−2n} e^{λ_{2s}|z|²}.
    pub inv_norm_sq: f64,
    pub inv_norm_sq_measured: f64,
    /// (1 − σ^n e^{−σ|z|²})^{1/2}, an upper bound on ‖(1 − Ω̃_s)Γ(α)‖.
    pub one_minus_bound: f64,
    /// 1 − σ^n e^{−σ|z|²} without the square root; not a bound in general.
    pub one_minus_unrooted: f64,
    pub one_minus_measured: f64,
}

/// |c_k|² = e^{−|z|²}|z|^{2k}/k! for k ≤ N.
fn poisson_weights(modulus_sq: f64, order: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(order + 1);
    let mut log_w = -modulus_sq;
    for k in 0..=order {
        if k > 0 {
            log_w += if modulus_sq > 0.0 { (modulus_sq / k as f64).ln() } else { f64::NEG_INFINITY };
        }
        w.push(log_w.exp());
    }
    w
}

/// Coefficients of Γ(α) = U(α)h_0 in the number basis, one axis: e^{−|z|²/2} z^k/√k!.
pub fn coherent_coefficients(xi: f64, pi: f64, order: usize) -> Vec<C64> {
    let z = C64::new(xi, pi) / 2f64.sqrt();
    let mut out = Vec::with_capacity(order + 1);
    let mut c = C64::new((-0.5 * z.norm_sqr()).exp(), 0.0);
    for k in 0..=order {
        if k > 0 {
            c *= z / (k as f64).sqrt();
        }
        out.push(c);
    }
    out
}

pub fn coherent_matrix_elements(spec: &ComparatorSpec, alpha: &PhasePoint) -> Result<CoherentElements> {
    let n = alpha.dim();
    let (s, sigma) = (spec.s(), spec.sigma());
    let z2 = alpha.label_modulus_sq();
    let exponent = spec.lambda_2s() * z2;
    if exponent > EXP_GUARD {
        return Err(Error::Overflow { exponent });
    }
    let axes: Vec<Vec<f64>> = (0..n)
        .map(|i| poisson_weights(0.5 * (alpha.xi[i].powi(2) + alpha.pi[i].powi(2)), spec.order()))
        .collect();
    let mut diag_measured = 1.0;
    let mut inv_measured = 1.0;
    for w in &axes {
        diag_measured *= w.iter().enumerate().map(|(k, p)| spec.eigenvalue(k) * p).sum::<f64>();
        inv_measured *= w
            .iter()
            .enumerate()
            .map(|(k, p)| p * (2.0 * s * k as f64).exp())
            .sum::<f64>()
            / (sigma * sigma);
    }
    let one_minus_sq: f64 = if n == 1 {
        axes[0]
            .iter()
            .enumerate()
            .map(|(k, p)| (1.0 - spec.eigenvalue(k)).powi(2) * p)
            .sum()
    } else {
        let mut acc = 0.0;
        for (k, p) in axes[0].iter().enumerate() {
            for (l, q) in axes[1].iter().enumerate() {
                acc += (1.0 - spec.eigenvalue(k) * spec.eigenvalue(l)).powi(2) * p * q;
            }
        }
        acc
    };
    let sigma_n = sigma.powi(n as i32);
    let out = CoherentElements {
        modulus_sq: z2,
        diag: sigma_n * (-sigma * z2).exp(),
        diag_measured,
        inv_norm_sq: exponent.exp() / (sigma_n * sigma_n),
        inv_norm_sq_measured: inv_measured,
        one_minus_bound: (1.0 - sigma_n * (-sigma * z2).exp()).sqrt(),
        one_minus_unrooted: 1.0 - sigma_n * (-sigma * z2).exp(),
        one_minus_measured: one_minus_sq.sqrt(),
    };
    if out.one_minus_measured > out.one_minus_bound + 1e-10 {
        return Err(Error::Invariant {
            time: 0.0,
            what: "‖(1 − Ω̃)Γ(α)‖ exceeds its closed-form bound".into(),
        });
    }
    Ok(out)
}

/// ∫_{|z|≤R} (λ_s/π) e^{−λ_s|z|²} |⟨φ, Γ(z)⟩|² d²z next to ⟨φ, Ω̃_s φ⟩, for φ
/// given by number-basis coefficients (one dimension).
pub fn coherent_resolution(spec: &ComparatorSpec, phi: &[C64], radius: f64) -> (f64, f64) {
    let order = phi.len() - 1;
    let lambda = spec.lambda();
    let (nr, nt) = (1200usize, 96usize);
    let hr = radius / nr as f64;
    let overlap = |r: f64, th: f64| -> f64 {
        let (x, p) = (2f64.sqrt() * r * th.cos(), 2f64.sqrt() * r * th.sin());
        let c = coherent_coefficients(x, p, order);
        phi.iter().zip(&c).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    };
    let mut integral = 0.0;
    for i in 0..=nr {
        let r = hr * i as f64;
        let w = if i == 0 || i == nr { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let ring: f64 = (0..nt)
            .map(|j| overlap(r, 2.0 * std::f64::consts::PI * j as f64 / nt as f64))
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI / nt as f64);
        integral += w * r * (lambda / std::f64::consts::PI) * (-lambda * r * r).exp() * ring;
    }
    integral *= hr / 3.0;
    let direct = phi
        .iter()
        .enumerate()
        .map(|(k, c)| spec.eigenvalue(k) * c.norm_sqr())
        .sum();
    (integral, direct)
}
