//! Wavefunctions on a uniform periodic grid in one or two dimensions.
//!
//! Layout is row-major with axis 0 slowest. Momentum operators act through the
//! FFT; the dual lattice is k_j = j·π/L in FFT order.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hamiltonian::{HamiltonianSpec, PhasePoint};

pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    dimension: usize,
    points: usize,
    half_width: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default = "one")]
    dimension: usize,
    points: usize,
    half_width: f64,
}

fn one() -> usize {
    1
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridSpec::new(r.dimension, r.points, r.half_width)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            dimension: 1,
            points: DEFAULT_POINTS,
            half_width: DEFAULT_HALF_WIDTH,
        }
    }
}

impl GridSpec {
    pub fn new(dimension: usize, points: usize, half_width: f64) -> Result<Self> {
        if !(1..=2).contains(&dimension) {
            return invalid(format!("grid dimension must be 1 or 2, got {dimension}"));
        }
        if points < 16 || !points.is_power_of_two() {
            return invalid(format!("points per axis must be a power of two ≥ 16, got {points}"));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return invalid("half-width must be positive");
        }
        Ok(Self {
            dimension,
            points,
            half_width,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// dx^n, the quadrature weight of one grid point.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.dimension as i32)
    }

    pub fn total(&self) -> usize {
        self.points.pow(self.dimension as u32)
    }

    /// x_j = −L + j·dx.
    pub fn axis(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.points).map(|j| -self.half_width + dx * j as f64).collect()
    }

    /// Wavenumbers in FFT order; the Nyquist mode is taken as negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = self.dk();
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    /// Multi-index of a flat index.
    pub fn index(&self, flat: usize) -> [usize; 2] {
        if self.dimension == 1 {
            [flat, 0]
        } else {
            [flat / self.points, flat % self.points]
        }
    }

    /// Position coordinates of every point, flat order.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let axis = self.axis();
        (0..self.total())
            .map(|f| {
                let i = self.index(f);
                (0..self.dimension).map(|d| axis[i[d]]).collect()
            })
            .collect()
    }

    /// Wave vectors of every point, flat (FFT) order.
    pub fn wave_vectors(&self) -> Vec<Vec<f64>> {
        let k = self.wavenumbers();
        (0..self.total())
            .map(|f| {
                let i = self.index(f);
                (0..self.dimension).map(|d| k[i[d]]).collect()
            })
            .collect()
    }

    fn in_band(&self, flat: usize) -> bool {
        let band = (self.points / 16).max(1);
        let i = self.index(flat);
        (0..self.dimension).any(|d| i[d] < band || i[d] >= self.points - band)
    }

    pub(crate) fn band_indices(&self) -> Vec<usize> {
        (0..self.total()).filter(|&f| self.in_band(f)).collect()
    }
}

/// Planned forward/inverse transforms for one grid.
#[derive(Clone)]
pub struct Fourier {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            fwd: planner.plan_fft_forward(grid.points),
            inv: planner.plan_fft_inverse(grid.points),
        }
    }

    fn apply(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.points;
        if self.grid.dimension == 1 {
            plan.process(data);
            return;
        }
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Unnormalised forward DFT (e^{−ikx} convention).
    pub fn forward(&self, data: &mut [C64]) {
        self.apply(data, &self.fwd);
    }

    /// Inverse DFT including the 1/N^n factor.
    pub fn inverse(&self, data: &mut [C64]) {
        self.apply(data, &self.inv);
        let s = 1.0 / self.grid.total() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    grid: GridSpec,
    amp: Vec<C64>,
    norm: f64,
}

impl GridWavefunction {
    pub fn from_amplitudes(grid: GridSpec, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != grid.total() {
            return invalid(format!(
                "amplitude length {} does not match grid size {}",
                amp.len(),
                grid.total()
            ));
        }
        if amp.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return invalid("non-finite amplitude");
        }
        let norm = (amp.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell()).sqrt();
        Ok(Self { grid, amp, norm })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> C64) -> Result<Self> {
        let amp = grid.coordinates().iter().map(|x| f(x)).collect();
        Self::from_amplitudes(grid, amp)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amp
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Result<Self> {
        if !(self.norm > 0.0) {
            return invalid("cannot normalise the zero vector");
        }
        let s = 1.0 / self.norm;
        Self::from_amplitudes(self.grid, self.amp.iter().map(|z| z * s).collect())
    }

    fn require_unit(&self, tol: f64) -> Result<()> {
        if (self.norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm: self.norm });
        }
        Ok(())
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return invalid("wavefunctions live on different grids");
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.same_grid(other)?;
        let s: C64 = self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum();
        Ok(s * self.grid.cell())
    }

    /// ‖self − other‖.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self.amp.iter().zip(&other.amp).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((s * self.grid.cell()).sqrt())
    }

    pub fn scaled(&self, c: C64) -> Result<Self> {
        Self::from_amplitudes(self.grid, self.amp.iter().map(|z| z * c).collect())
    }

    pub fn position_density(&self) -> Vec<f64> {
        self.amp.iter().map(|z| z.norm_sqr() * self.grid.cell()).collect()
    }

    /// Point masses on the momentum lattice (FFT order); sums to ‖ψ‖².
    pub fn momentum_density_with(&self, fourier: &Fourier) -> Vec<f64> {
        let mut f = self.amp.clone();
        fourier.forward(&mut f);
        let s = self.grid.cell() / self.grid.total() as f64;
        f.iter().map(|z| z.norm_sqr() * s).collect()
    }

    pub fn momentum_density(&self) -> Vec<f64> {
        self.momentum_density_with(&Fourier::new(&self.grid))
    }

    /// Mass in the outer sixteenth of each axis.
    pub fn boundary_mass(&self) -> f64 {
        boundary_mass(&self.grid, &self.grid.band_indices(), &self.amp)
    }

    /// Mass in the outer sixteenth of the momentum lattice.
    pub fn momentum_boundary_mass(&self) -> f64 {
        let p = self.momentum_density();
        let n = self.grid.points;
        let band = (n / 16).max(1);
        // FFT order: the largest |k| sit around index n/2
        let lo = n / 2 - band;
        let hi = n / 2 + band;
        (0..self.grid.total())
            .filter(|&f| {
                let i = self.grid.index(f);
                (0..self.grid.dimension).any(|d| i[d] >= lo && i[d] < hi)
            })
            .map(|f| p[f])
            .sum()
    }

    /// CSV snapshot: one `# grid ...` header line, a column line, then x, Re ψ, Im ψ rows.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# grid dimension={} points={} half_width={:.17e}",
            self.grid.dimension, self.grid.points, self.grid.half_width
        )?;
        if self.grid.dimension == 1 {
            writeln!(w, "x,re,im")?;
        } else {
            writeln!(w, "x0,x1,re,im")?;
        }
        for (x, z) in self.grid.coordinates().iter().zip(&self.amp) {
            let xs: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{},{:.17e},{:.17e}", xs.join(","), z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Schema("empty snapshot".into()))??;
        let mut dim = None;
        let mut points = None;
        let mut half = None;
        for field in header.trim_start_matches('#').split_whitespace().skip(1) {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("bad header field {field}")))?;
            let bad = |_| Error::Schema(format!("bad header value {v}"));
            match k {
                "dimension" => dim = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "points" => points = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "half_width" => half = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                _ => {}
            }
        }
        let (Some(dim), Some(points), Some(half)) = (dim, points, half) else {
            return Err(Error::Schema("snapshot header incomplete".into()));
        };
        let grid = GridSpec::new(dim, points, half)?;
        lines.next();
        let mut amp = Vec::with_capacity(grid.total());
        for line in lines {
            let line = line?;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != dim + 2 {
                return Err(Error::Schema(format!("snapshot row has {} columns", cols.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Schema(format!("bad number {s}")))
            };
            amp.push(C64::new(parse(cols[dim])?, parse(cols[dim + 1])?));
        }
        Self::from_amplitudes(grid, amp)
    }
}

fn boundary_mass(grid: &GridSpec, band: &[usize], amp: &[C64]) -> f64 {
    band.iter().map(|&f| amp[f].norm_sqr()).sum::<f64>() * grid.cell()
}

/// Expectations (⟨q⟩, ⟨p⟩) stacked as a 2n-vector.
pub fn expectation_a(psi: &GridWavefunction) -> Result<Vec<f64>> {
    expectation_a_with(psi, &Fourier::new(psi.grid()))
}

pub fn expectation_a_with(psi: &GridWavefunction, fourier: &Fourier) -> Result<Vec<f64>> {
    psi.require_unit(1e-8)?;
    let g = psi.grid();
    let n = g.dimension();
    let axis = g.axis();
    let k = g.wavenumbers();
    let mut out = vec![0.0; 2 * n];
    let cell = g.cell();
    for (f, z) in psi.amplitudes().iter().enumerate() {
        let i = g.index(f);
        let w = z.norm_sqr() * cell;
        for d in 0..n {
            out[d] += axis[i[d]] * w;
        }
    }
    let p = psi.momentum_density_with(fourier);
    for (f, w) in p.iter().enumerate() {
        let i = g.index(f);
        for d in 0..n {
            out[n + d] += k[i[d]] * w;
        }
    }
    Ok(out)
}

/// Expectation of a position-space multiplication operator.
pub fn expectation_position(psi: &GridWavefunction, f: impl Fn(&[f64]) -> f64) -> f64 {
    psi.grid()
        .coordinates()
        .iter()
        .zip(psi.amplitudes())
        .map(|(x, z)| f(x) * z.norm_sqr())
        .sum::<f64>()
        * psi.grid().cell()
}

/// Weyl displacement (U(α)ψ)(x) = e^{iπ·ξ/2} e^{iπ·(x−ξ)} ψ(x − ξ).
pub fn weyl_displace(psi: &GridWavefunction, alpha: &PhasePoint) -> Result<GridWavefunction> {
    weyl_displace_with(psi, alpha, &Fourier::new(psi.grid()))
}

pub fn weyl_displace_with(
    psi: &GridWavefunction,
    alpha: &PhasePoint,
    fourier: &Fourier,
) -> Result<GridWavefunction> {
    let g = *psi.grid();
    let n = g.dimension();
    if alpha.dim() != n {
        return invalid("displacement dimension does not match the grid");
    }
    let mut data = psi.amplitudes().to_vec();
    if alpha.xi.iter().any(|&x| x != 0.0) {
        fourier.forward(&mut data);
        let k = g.wavenumbers();
        for (f, z) in data.iter_mut().enumerate() {
            let i = g.index(f);
            let phase: f64 = (0..n).map(|d| -k[i[d]] * alpha.xi[d]).sum();
            *z *= C64::from_polar(1.0, phase);
        }
        fourier.inverse(&mut data);
    }
    let axis = g.axis();
    let xi_pi: f64 = alpha.xi.iter().zip(&alpha.pi).map(|(x, p)| x * p).sum();
    for (f, z) in data.iter_mut().enumerate() {
        let i = g.index(f);
        let phase: f64 = (0..n).map(|d| alpha.pi[d] * axis[i[d]]).sum::<f64>() - 0.5 * xi_pi;
        *z *= C64::from_polar(1.0, phase);
    }
    let out = GridWavefunction::from_amplitudes(g, data)?;
    let mass = out.boundary_mass();
    if mass > DEFAULT_BOUNDARY_TOLERANCE {
        return Err(Error::Wraparound { time: 0.0, mass });
    }
    let kmass = out.momentum_boundary_mass();
    if kmass > DEFAULT_BOUNDARY_TOLERANCE {
        return Err(Error::Wraparound { time: 0.0, mass: kmass });
    }
    Ok(out)
}

/// Phase θ in U(α)U(β) = e^{iθ} U(α + β): θ = (⟨ξ_β, π_α⟩ − ⟨ξ_α, π_β⟩)/2.
pub fn weyl_cocycle(alpha: &PhasePoint, beta: &PhasePoint) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    0.5 * (dot(&beta.xi, &alpha.pi) - dot(&alpha.xi, &beta.pi))
}

/// Band-limited interpolation along one axis, evaluated at `targets`;
/// targets outside [−L, L) give zero.
fn interpolation_matrix(g: &GridSpec, targets: &[f64]) -> Vec<Vec<C64>> {
    let n = g.points();
    let k = g.wavenumbers();
    let x0 = -g.half_width();
    let inside = |y: f64| y >= x0 && y < g.half_width();
    targets
        .iter()
        .map(|&y| {
            if !inside(y) {
                return vec![C64::new(0.0, 0.0); n];
            }
            (0..n)
                .map(|j| {
                    let arg = k[j] * (y - x0);
                    if j == n / 2 {
                        // Nyquist mode: symmetric (real) interpolant
                        C64::new(arg.cos() / n as f64, 0.0)
                    } else {
                        C64::from_polar(1.0 / n as f64, arg)
                    }
                })
                .collect()
        })
        .collect()
}

/// Dilation (D(ℏ)ψ)(x) = ℏ^{n/4} ψ(ℏ^{1/2} x) by trigonometric resampling.
pub fn dilate(psi: &GridWavefunction, hbar: f64) -> Result<GridWavefunction> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return invalid("dilation parameter must be positive");
    }
    let g = *psi.grid();
    if hbar == 1.0 {
        return Ok(psi.clone());
    }
    let n = g.points();
    let targets: Vec<f64> = g.axis().iter().map(|x| hbar.sqrt() * x).collect();
    let mat = interpolation_matrix(&g, &targets);
    let fft1 = FftPlanner::new().plan_fft_forward(n);
    let resample = |line: &[C64]| -> Vec<C64> {
        let mut f = line.to_vec();
        fft1.process(&mut f);
        mat.iter()
            .map(|row| row.iter().zip(&f).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut data = psi.amplitudes().to_vec();
    if g.dimension() == 1 {
        data = resample(&data);
    } else {
        let mut tmp = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            let row = resample(&data[i * n..(i + 1) * n]);
            tmp[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        for j in 0..n {
            let col: Vec<C64> = (0..n).map(|i| tmp[i * n + j]).collect();
            let out = resample(&col);
            for i in 0..n {
                data[i * n + j] = out[i];
            }
        }
    }
    let scale = hbar.powf(g.dimension() as f64 / 4.0);
    data.iter_mut().for_each(|z| *z *= scale);
    let out = GridWavefunction::from_amplitudes(g, data)?;
    let mass = out.boundary_mass();
    if mass > DEFAULT_BOUNDARY_TOLERANCE {
        return Err(Error::Wraparound { time: 0.0, mass });
    }
    Ok(out)
}

/// Strang splitting e^{−iV dt/2} e^{−iK dt} e^{−iV dt/2} on a fixed grid.
#[derive(Clone)]
pub struct SplitOperator {
    grid: GridSpec,
    fourier: Fourier,
    half_potential: Vec<C64>,
    kinetic: Vec<C64>,
    dt: f64,
    band: Vec<usize>,
}

impl SplitOperator {
    pub fn new(spec: &HamiltonianSpec, grid: &GridSpec, dt: f64) -> Result<Self> {
        if spec.classical_only() {
            return Err(Error::Unsupported(
                "quantum propagation with a vector potential".into(),
            ));
        }
        if spec.dimension() != grid.dimension() {
            return invalid("Hamiltonian and grid dimensions differ");
        }
        if !(dt.is_finite() && dt != 0.0) {
            return invalid("time step must be finite and non-zero");
        }
        let v = spec.potential();
        let half_potential = grid
            .coordinates()
            .iter()
            .map(|x| Ok(C64::from_polar(1.0, -0.5 * dt * v.value(x)?)))
            .collect::<Result<Vec<_>>>()?;
        let m = spec.mass();
        let kinetic = grid
            .wave_vectors()
            .iter()
            .map(|k| {
                let k2: f64 = k.iter().map(|v| v * v).sum();
                C64::from_polar(1.0, -dt * k2 / (2.0 * m))
            })
            .collect();
        Ok(Self {
            grid: *grid,
            fourier: Fourier::new(grid),
            half_potential,
            kinetic,
            dt,
            band: grid.band_indices(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn fourier(&self) -> &Fourier {
        &self.fourier
    }

    pub fn step(&self, data: &mut [C64]) {
        for (z, v) in data.iter_mut().zip(&self.half_potential) {
            *z *= v;
        }
        self.fourier.forward(data);
        for (z, k) in data.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.fourier.inverse(data);
        for (z, v) in data.iter_mut().zip(&self.half_potential) {
            *z *= v;
        }
    }

    pub fn boundary_mass(&self, data: &[C64]) -> f64 {
        boundary_mass(&self.grid, &self.band, data)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropagationSummary {
    pub steps: usize,
    pub dt: f64,
    pub stride: usize,
    pub max_boundary_mass: f64,
    pub final_norm: f64,
}

/// Propagate and hand every `stride`-th state (including t = 0) to `visit`.
pub fn propagate_with<F>(
    spec: &HamiltonianSpec,
    psi0: &GridWavefunction,
    t: f64,
    dt: f64,
    stride: usize,
    boundary_tolerance: f64,
    mut visit: F,
) -> Result<PropagationSummary>
where
    F: FnMut(usize, f64, &GridWavefunction) -> Result<()>,
{
    let (steps, dt) = crate::classical::step_count(t, dt)?;
    let stride = stride.max(1);
    let op = SplitOperator::new(spec, psi0.grid(), dt)?;
    let mut data = psi0.amplitudes().to_vec();
    let mut max_mass = op.boundary_mass(&data);
    if max_mass > boundary_tolerance {
        return Err(Error::Wraparound {
            time: 0.0,
            mass: max_mass,
        });
    }
    visit(0, 0.0, psi0)?;
    for k in 1..=steps {
        op.step(&mut data);
        let mass = op.boundary_mass(&data);
        max_mass = max_mass.max(mass);
        let time = k as f64 * dt;
        if mass > boundary_tolerance {
            return Err(Error::Wraparound { time, mass });
        }
        if k % stride == 0 || k == steps {
            let psi = GridWavefunction::from_amplitudes(*psi0.grid(), data.clone())?;
            visit(k, time, &psi)?;
        }
    }
    let final_norm =
        (data.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi0.grid().cell()).sqrt();
    Ok(PropagationSummary {
        steps,
        dt,
        stride,
        max_boundary_mass: max_mass,
        final_norm,
    })
}

#[derive(Debug, Clone)]
pub struct GridRun {
    pub times: Vec<f64>,
    pub states: Vec<GridWavefunction>,
    pub summary: PropagationSummary,
}

/// Sampled split-operator evolution; samples at every `stride` steps and at T.
pub fn propagate(
    spec: &HamiltonianSpec,
    psi0: &GridWavefunction,
    t: f64,
    dt: f64,
    stride: usize,
) -> Result<GridRun> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    let summary = propagate_with(spec, psi0, t, dt, stride, DEFAULT_BOUNDARY_TOLERANCE, |_, t, psi| {
        times.push(t);
        states.push(psi.clone());
        Ok(())
    })?;
    Ok(GridRun {
        times,
        states,
        summary,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalizationEntry {
    pub norm_sq: f64,
    pub f_expectation: f64,
    pub g_expectation: f64,
    pub pass: bool,
}

/// ⟨f⟩ with the convention ∞·0 = 0 for exactly vanishing weights.
fn weighted(values: &[f64], weights: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| v * w)
        .sum()
}

/// Growth in the sense required of a localising functional: on the sample
/// points, the smallest value in the outer quarter of the radius range must
/// not be below the largest value in the inner quarter.
fn grows(values: &[f64], radii: &[f64]) -> bool {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let core = values
        .iter()
        .zip(radii)
        .filter(|(_, r)| **r <= 0.25 * rmax)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let shell = values
        .iter()
        .zip(radii)
        .filter(|(_, r)| **r >= 0.75 * rmax)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    shell >= core && shell > 0.0
}

fn radius(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Membership of each ψ in {‖ψ‖² ≤ 1, ⟨F(Q)⟩ ≤ 1, ⟨G(P)⟩ ≤ 1}.
pub fn localization_check(
    psi_set: &[GridWavefunction],
    f: impl Fn(&[f64]) -> f64,
    g: impl Fn(&[f64]) -> f64,
) -> Result<Vec<LocalizationEntry>> {
    let Some(first) = psi_set.first() else {
        return Ok(Vec::new());
    };
    let grid = *first.grid();
    let xs = grid.coordinates();
    let ks = grid.wave_vectors();
    let fv: Vec<f64> = xs.iter().map(|x| f(x)).collect();
    let gv: Vec<f64> = ks.iter().map(|k| g(k)).collect();
    if fv.iter().chain(&gv).any(|v| v.is_nan() || *v < 0.0) {
        return invalid("localising functions must be non-negative");
    }
    let xr: Vec<f64> = xs.iter().map(|x| radius(x)).collect();
    let kr: Vec<f64> = ks.iter().map(|k| radius(k)).collect();
    if !grows(&fv, &xr) || !grows(&gv, &kr) {
        return invalid("localising functions must grow towards infinity on the grid");
    }
    let fourier = Fourier::new(&grid);
    psi_set
        .iter()
        .map(|psi| {
            if *psi.grid() != grid {
                return invalid("all wavefunctions must share one grid");
            }
            let norm_sq = psi.norm() * psi.norm();
            let fe = weighted(&fv, &psi.position_density());
            let ge = weighted(&gv, &psi.momentum_density_with(&fourier));
            let slack = 1e-12;
            Ok(LocalizationEntry {
                norm_sq,
                f_expectation: fe,
                g_expectation: ge,
                pass: norm_sq <= 1.0 + slack && fe <= 1.0 + slack && ge <= 1.0 + slack,
            })
        })
        .collect()
}

/// Step function F(x) = 2^{m−2}, m the first index with |x| inside ball K_m.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Localizer {
    /// Radii of K_1 ⊆ K_2 ⊆ …; beyond the last, the whole space is the next ball.
    pub radii: Vec<f64>,
}

impl Localizer {
    pub fn value(&self, x: &[f64]) -> f64 {
        let r = radius(x);
        let m = self
            .radii
            .iter()
            .position(|&rn| r <= rn)
            .map(|i| i + 1)
            .unwrap_or(self.radii.len() + 1);
        2f64.powi(m as i32 - 2)
    }
}

const LOCALIZER_LEVELS: usize = 200;

/// Balls K_n with tail mass ≤ 4^{−n} for every member of the set.
pub fn construct_localizer(psi_set: &[GridWavefunction]) -> Result<Localizer> {
    let Some(first) = psi_set.first() else {
        return invalid("localiser needs a non-empty set of states");
    };
    let grid = *first.grid();
    let r: Vec<f64> = grid.coordinates().iter().map(|x| radius(x)).collect();
    let mut order: Vec<usize> = (0..r.len()).collect();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]));
    let mut radii = vec![0.0f64; LOCALIZER_LEVELS];
    for psi in psi_set {
        if *psi.grid() != grid {
            return invalid("all wavefunctions must share one grid");
        }
        psi.require_unit(1e-8)?;
        let dens = psi.position_density();
        // walk inward from the outermost point; tail(r) = mass strictly outside r
        let mut tail = 0.0;
        let mut level = LOCALIZER_LEVELS;
        let mut idx = 0;
        while idx < order.len() && level > 0 {
            let rad = r[order[idx]];
            // all points at this radius are inside the candidate ball
            let mut group = 0.0;
            while idx < order.len() && r[order[idx]] == rad {
                group += dens[order[idx]];
                idx += 1;
            }
            // smallest admissible radius for levels whose bound tail+group breaks
            while level > 0 && tail + group > 4f64.powi(-(level as i32)) {
                radii[level - 1] = radii[level - 1].max(rad);
                level -= 1;
            }
            tail += group;
        }
    }
    // nestedness
    for n in 1..LOCALIZER_LEVELS {
        radii[n] = radii[n].max(radii[n - 1]);
    }
    Ok(Localizer { radii })
}
