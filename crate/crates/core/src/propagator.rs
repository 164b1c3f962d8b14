//! Crank–Nicolson propagation on a uniform grid above the mirror.
//!
//! Internally the grid is in bouncer units, u = z/λ, where the Hamiltonian
//! for mass m·μ reads H = −(1/μ)∂²ᵤ + μu. The wall at u = 0 and the top of
//! the domain are Dirichlet boundaries.
//!
//! Each run subtracts a reference energy (the initial expectation value)
//! before stepping and restores the phase e^{−iE_ref t} exactly afterwards,
//! so the time-stepping error depends on the energy spread only.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BoundState, Bouncer};
use crate::error::{Error, Result};
use crate::qfi::{check_times, pure_state_qfi, GaussianPacket, QfiCurve, QfiModel};
use crate::spectrum::Spin;

/// Largest time accepted by [`qfi_numeric`] [s].
pub const NUMERIC_QFI_MAX_TIME: f64 = 3e-3;
/// Tail mass tolerated outside the domain.
pub const TAIL_TOLERANCE: f64 = 1e-12;
/// Largest dt·max|V − E_ref|/ħ accepted.
pub const STEP_RATIO_LIMIT: f64 = 0.1;
/// Fraction of the domain below z_max watched for probability reaching the top.
const TOP_BAND: f64 = 0.05;
const TOP_BAND_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    /// Three-point Laplacian, second order in dz.
    #[default]
    Standard,
    /// Numerov-type compact Laplacian, fourth order in dz.
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Domain height [m].
    pub z_max: f64,
    pub points: usize,
    /// Largest time step [s].
    pub dt: f64,
    #[serde(default)]
    pub stencil: Stencil,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { z_max: 120e-6, points: 4096, dt: 1e-7, stencil: Stencil::Standard }
    }
}

impl GridSpec {
    pub fn new(z_max: f64, points: usize, dt: f64) -> Result<Self> {
        let g = Self { z_max, points, dt, stencil: Stencil::Standard };
        g.validate()?;
        Ok(g)
    }

    pub fn with_stencil(self, stencil: Stencil) -> Self {
        Self { stencil, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_max > 0.0) || !self.z_max.is_finite() {
            return Err(Error::validation("z_max", "must be positive"));
        }
        if self.points < 512 {
            return Err(Error::validation("points", "must be at least 512"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::validation("dt", "must be positive"));
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        self.z_max / (self.points - 1) as f64
    }

    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz()
    }

    fn same_mesh(&self, other: &GridSpec) -> bool {
        self.z_max == other.z_max && self.points == other.points
    }
}

/// Wavefunction samples ψ(zᵢ) normalised so that Σ|ψᵢ|²dz = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub psi: Vec<Complex64>,
    /// Elapsed evolution time [s].
    pub t: f64,
    /// Multiplier on m used by the last evolution.
    pub mass_factor: f64,
    pub grid: GridSpec,
}

impl GridState {
    pub fn norm_squared(&self) -> f64 {
        self.psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dz()
    }

    /// ⟨z⟩ [m].
    pub fn mean_position(&self) -> f64 {
        let dz = self.grid.dz();
        let num: f64 = self.psi.iter().enumerate().map(|(i, c)| i as f64 * dz * c.norm_sqr()).sum();
        num * dz / self.norm_squared()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Bound(BoundState),
    Gaussian(GaussianPacket),
}

/// Sample an initial state on the grid and normalise it.
pub fn discretize(sys: &Bouncer, init: &InitialState, grid: &GridSpec) -> Result<GridState> {
    grid.validate()?;
    let dz = grid.dz();
    let hbar = sys.constants.hbar;
    let mut psi: Vec<Complex64> = match init {
        InitialState::Bound(st) => {
            let tail = bound_tail_mass(st, grid.z_max / st.scales.lambda)?;
            if tail > TAIL_TOLERANCE {
                return Err(Error::DomainTooSmall { tail_mass: tail, suggested_z_max: bound_suggested_z_max(st)? });
            }
            (0..grid.points).map(|i| Complex64::new(st.evaluate(grid.z(i)), 0.0)).collect()
        }
        InitialState::Gaussian(p) => {
            p.validate()?;
            let below = 0.5 * libm::erfc(p.z0 / p.sigma);
            if below > TAIL_TOLERANCE {
                return Err(Error::validation(
                    "gaussian",
                    format!("packet reaches the mirror (mass {below:.2e} below z=0); raise z0 or shrink sigma"),
                ));
            }
            let above = 0.5 * libm::erfc((grid.z_max - p.z0) / p.sigma);
            if above > TAIL_TOLERANCE {
                return Err(Error::DomainTooSmall { tail_mass: above, suggested_z_max: p.z0 + 6.0 * p.sigma });
            }
            if p.sigma < 5.0 * dz || (p.p_mean / hbar).abs() * dz > 0.5 {
                return Err(Error::validation("gaussian", "packet is not resolved by the grid; add points"));
            }
            (0..grid.points).map(|i| p.amplitude(grid.z(i), hbar)).collect()
        }
    };
    psi[0] = Complex64::new(0.0, 0.0);
    let last = grid.points - 1;
    psi[last] = Complex64::new(0.0, 0.0);
    let norm = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * dz).sqrt();
    for c in &mut psi {
        *c /= norm;
    }
    Ok(GridState { psi, t: 0.0, mass_factor: 1.0, grid: *grid })
}

fn bound_tail_mass(st: &BoundState, u_max: f64) -> Result<f64> {
    use crate::quadrature::{integrate, Tolerance};
    let tol = Tolerance { abs: 1e-18, rel: 1e-8, ..Tolerance::default() };
    let f = |u: f64| st.evaluate_units(u).powi(2);
    Ok(integrate(f, u_max, u_max.max(st.cutoff_units()) + 10.0, 8, tol)?.value)
}

fn bound_suggested_z_max(st: &BoundState) -> Result<f64> {
    let mut u = -st.gamma_n;
    while bound_tail_mass(st, u)? > 0.01 * TAIL_TOLERANCE {
        u += 0.5;
    }
    Ok(u * st.scales.lambda)
}

/// Symmetric or nearly symmetric tridiagonal bands over interior points.
struct Bands {
    lower: Vec<Complex64>,
    diag: Vec<Complex64>,
    upper: Vec<Complex64>,
}

/// Time stepper for one mass factor and one reference energy.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: GridSpec,
    mass_factor: f64,
    /// Reference energy in units of ε₀.
    e_ref: f64,
    du: f64,
    t0: f64,
}

impl Propagator {
    pub fn new(sys: &Bouncer, grid: &GridSpec, mass_factor: f64, e_ref_units: f64) -> Result<Self> {
        grid.validate()?;
        if !(mass_factor > 0.0) || !mass_factor.is_finite() {
            return Err(Error::validation("mass_factor", "must be positive"));
        }
        let du = grid.dz() / sys.scales.lambda;
        let t0 = sys.scales.t0;
        let u_top = (grid.points - 2) as f64 * du;
        let v_span = (mass_factor * du - e_ref_units).abs().max((mass_factor * u_top - e_ref_units).abs());
        let ratio = grid.dt / t0 * v_span;
        if ratio > STEP_RATIO_LIMIT {
            return Err(Error::TimeStepTooLarge { ratio, suggested_dt: 0.9 * STEP_RATIO_LIMIT * t0 / v_span });
        }
        Ok(Self { grid: *grid, mass_factor, e_ref: e_ref_units, du, t0 })
    }

    /// Stepper whose reference energy is the state's own ⟨H⟩ at this mass factor.
    pub fn for_state(sys: &Bouncer, state: &GridState, mass_factor: f64) -> Result<Self> {
        let du = state.grid.dz() / sys.scales.lambda;
        let e = energy_units(&state.psi, du, mass_factor, state.grid.stencil);
        Self::new(sys, &state.grid, mass_factor, e)
    }

    /// K = H − E_ref in units, as bands over the interior.
    fn generator(&self) -> Bands {
        let n = self.grid.points - 2;
        let mu = self.mass_factor;
        let kin = 1.0 / (mu * self.du * self.du);
        let w = |j: usize| Complex64::new(mu * (j + 1) as f64 * self.du - self.e_ref, 0.0);
        let (m0, m1) = mass_matrix(self.grid.stencil);
        let diag = (0..n).map(|j| 2.0 * kin + m0 * w(j)).collect();
        let lower = (0..n).map(|j| if j == 0 { Complex64::default() } else { -kin + m1 * w(j - 1) }).collect();
        let upper = (0..n).map(|j| if j + 1 == n { Complex64::default() } else { -kin + m1 * w(j + 1) }).collect();
        Bands { lower, diag, upper }
    }

    /// Advance `state` by `duration` seconds in steps no longer than dt.
    pub fn advance(&self, state: &mut GridState, duration: f64) -> Result<()> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::validation("duration", "must be positive"));
        }
        if !state.grid.same_mesh(&self.grid) || state.psi.len() != self.grid.points {
            return Err(Error::GridMismatch("state and propagator use different grids".into()));
        }
        let steps = (duration / self.grid.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let tau = duration / steps as f64 / self.t0;
        let k = self.generator();
        let (m0, m1) = mass_matrix(self.grid.stencil);
        let half = Complex64::new(0.0, 0.5 * tau);
        let n = self.grid.points - 2;
        // A = M + iτK/2 factorised once; B = M − iτK/2 applied each step.
        let a_lo: Vec<Complex64> = k.lower.iter().map(|x| m1 + half * x).collect();
        let a_d: Vec<Complex64> = k.diag.iter().map(|x| m0 + half * x).collect();
        let a_up: Vec<Complex64> = k.upper.iter().map(|x| m1 + half * x).collect();
        let b_lo: Vec<Complex64> = k.lower.iter().map(|x| m1 - half * x).collect();
        let b_d: Vec<Complex64> = k.diag.iter().map(|x| m0 - half * x).collect();
        let b_up: Vec<Complex64> = k.upper.iter().map(|x| m1 - half * x).collect();
        let mut cp = vec![Complex64::default(); n];
        let mut inv = vec![Complex64::default(); n];
        let mut prev = Complex64::default();
        for j in 0..n {
            let denom = a_d[j] - a_lo[j] * prev;
            if denom.norm() < 1e-300 {
                return Err(Error::Convergence("singular Crank-Nicolson matrix".into()));
            }
            inv[j] = denom.inv();
            cp[j] = a_up[j] * inv[j];
            prev = cp[j];
        }
        let psi = &mut state.psi;
        let mut rhs = vec![Complex64::default(); n];
        for _ in 0..steps {
            // psi[j + 1] is interior point j; psi[0] and psi[n + 1] stay zero.
            let mut dprev = Complex64::default();
            for j in 0..n {
                let r = b_lo[j] * psi[j] + b_d[j] * psi[j + 1] + b_up[j] * psi[j + 2];
                dprev = (r - a_lo[j] * dprev) * inv[j];
                rhs[j] = dprev;
            }
            let mut next = Complex64::default();
            for j in (0..n).rev() {
                next = rhs[j] - cp[j] * next;
                psi[j + 1] = next;
            }
        }
        let phase = Complex64::from_polar(1.0, -self.e_ref * duration / self.t0);
        for c in psi.iter_mut() {
            *c *= phase;
        }
        state.t += duration;
        state.mass_factor = self.mass_factor;
        let band_start = ((1.0 - TOP_BAND) * self.grid.points as f64) as usize;
        let top: f64 = state.psi[band_start..].iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dz();
        if top > TOP_BAND_TOLERANCE {
            return Err(Error::DomainTooSmall { tail_mass: top, suggested_z_max: 1.5 * self.grid.z_max });
        }
        Ok(())
    }
}

/// (diagonal, off-diagonal) of the stencil's mass matrix.
fn mass_matrix(stencil: Stencil) -> (f64, f64) {
    match stencil {
        Stencil::Standard => (1.0, 0.0),
        Stencil::Compact => (10.0 / 12.0, 1.0 / 12.0),
    }
}

/// Re⟨ψ|H_μ|ψ⟩/⟨ψ|ψ⟩ in units of ε₀ with the stencil's Laplacian.
fn energy_units(psi: &[Complex64], du: f64, mu: f64, stencil: Stencil) -> f64 {
    let n = psi.len();
    let mut lap: Vec<Complex64> = (1..n - 1).map(|i| (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / (du * du)).collect();
    if stencil == Stencil::Compact {
        solve_mass(&mut lap);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, l) in lap.iter().enumerate() {
        let p = psi[j + 1];
        let h = -*l / mu + p * (mu * (j + 1) as f64 * du);
        num += (p.conj() * h).re;
        den += p.norm_sqr();
    }
    num / den
}

/// Solve tridiag(1/12, 10/12, 1/12) x = b in place.
fn solve_mass(b: &mut [Complex64]) {
    let n = b.len();
    let (d, o) = (10.0 / 12.0, 1.0 / 12.0);
    let mut cp = vec![0.0; n];
    let mut prev = 0.0;
    for j in 0..n {
        let inv = 1.0 / (d - o * prev);
        cp[j] = o * inv;
        b[j] = (b[j] - o * if j > 0 { b[j - 1] } else { Complex64::default() }) * inv;
        prev = cp[j];
    }
    for j in (0..n.saturating_sub(1)).rev() {
        let next = b[j + 1];
        b[j] -= cp[j] * next;
    }
}

/// ⟨H⟩ on the grid at the state's mass factor [J].
pub fn grid_energy(sys: &Bouncer, state: &GridState) -> f64 {
    let du = state.grid.dz() / sys.scales.lambda;
    energy_units(&state.psi, du, state.mass_factor, state.grid.stencil) * sys.scales.eps0
}

/// Evolve a copy of `state` for `duration` with mass m(1 ± δ) chosen by `spin`.
pub fn evolve(sys: &Bouncer, state: &GridState, duration: f64, delta: f64, spin: Spin) -> Result<GridState> {
    if !(delta.abs() < 1.0) {
        return Err(Error::validation("delta", "must satisfy |delta| < 1"));
    }
    let mu = 1.0 + spin.sign() * delta;
    let prop = Propagator::for_state(sys, state, mu)?;
    let mut out = state.clone();
    prop.advance(&mut out, duration)?;
    Ok(out)
}

/// Trapezoidal ⟨a|b⟩. The end samples are zero, so this is a plain sum.
pub fn overlap(a: &GridState, b: &GridState) -> Result<Complex64> {
    if !a.grid.same_mesh(&b.grid) || a.psi.len() != b.psi.len() {
        return Err(Error::GridMismatch(format!(
            "{} points over {} m vs {} points over {} m",
            a.grid.points, a.grid.z_max, b.grid.points, b.grid.z_max
        )));
    }
    let s: Complex64 = a.psi.iter().zip(&b.psi).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.dz())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericQfiOptions {
    /// Finite-difference step in δ.
    pub epsilon: f64,
    pub grid: GridSpec,
}

impl Default for NumericQfiOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, grid: GridSpec::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericQfiPoint {
    pub t: f64,
    /// F_Q from the ε central difference.
    pub qfi: f64,
    /// Same with ε/2.
    pub qfi_half_epsilon: f64,
    /// Set when the two differ by more than 5%.
    pub flagged: bool,
}

/// Evolve `init` with each mass factor, recording the state at every time.
fn branch_histories(sys: &Bouncer, init: &GridState, factors: &[f64], times: &[f64]) -> Result<Vec<Vec<Vec<Complex64>>>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = factors
            .iter()
            .map(|&mu| {
                scope.spawn(move || -> Result<Vec<Vec<Complex64>>> {
                    let prop = Propagator::for_state(sys, init, mu)?;
                    let mut st = init.clone();
                    let mut out = Vec::with_capacity(times.len());
                    for &t in times {
                        let step = t - st.t;
                        if step > 0.0 {
                            prop.advance(&mut st, step)?;
                        }
                        out.push(st.psi.clone());
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Convergence("propagation thread panicked".into()))))
            .collect()
    })
}

fn validate_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::validation("epsilon", "must lie in (0, 0.1)"));
    }
    Ok(())
}

/// F_Q of (|↑⟩ψ_{m(1+δ)}(t) + |↓⟩ψ_{m(1−δ)}(t))/√2 at δ = 0 for ψₙ released
/// at t = 0, by central differences at ε and ε/2.
pub fn qfi_numeric_points(sys: &Bouncer, n: usize, times: &[f64], opts: &NumericQfiOptions) -> Result<Vec<NumericQfiPoint>> {
    check_times(times)?;
    validate_epsilon(opts.epsilon)?;
    if times.iter().any(|&t| t > NUMERIC_QFI_MAX_TIME) {
        return Err(Error::validation("times", format!("numeric QFI is limited to t <= {NUMERIC_QFI_MAX_TIME} s")));
    }
    let init = discretize(sys, &InitialState::Bound(sys.state(n)?), &opts.grid)?;
    let e = opts.epsilon;
    let h = 0.5 * e;
    let hist = branch_histories(sys, &init, &[1.0, 1.0 + e, 1.0 - e, 1.0 + h, 1.0 - h], times)?;
    let dz = opts.grid.dz();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let spinor_qfi = |k: usize, plus: usize, minus: usize, step: f64| {
        let base = &hist[0][k];
        let psi: Vec<Complex64> = base.iter().chain(base).map(|c| c * s).collect();
        let d: Vec<Complex64> = hist[plus][k].iter().zip(&hist[minus][k]).map(|(a, b)| (a - b) * (s / (2.0 * step))).collect();
        let dpsi: Vec<Complex64> = d.iter().copied().chain(d.iter().map(|c| -c)).collect();
        pure_state_qfi(&psi, &dpsi, dz)
    };
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let full = spinor_qfi(k, 1, 2, e);
            let half = spinor_qfi(k, 3, 4, h);
            let scale = full.abs().max(half.abs());
            NumericQfiPoint { t, qfi: full, qfi_half_epsilon: half, flagged: scale > 0.0 && (full - half).abs() > 0.05 * scale }
        })
        .collect())
}

pub fn qfi_numeric(sys: &Bouncer, n: usize, times: &[f64], opts: &NumericQfiOptions) -> Result<QfiCurve> {
    let pts = qfi_numeric_points(sys, n, times, opts)?;
    QfiCurve::new(
        QfiModel::Numeric,
        pts.iter().map(|p| p.t).collect(),
        pts.iter().map(|p| p.qfi.max(0.0)).collect(),
        pts.iter().map(|p| p.flagged).collect(),
    )
}

/// Fidelity-susceptibility estimate 8(1 − |⟨Ψ₀|Ψ_ε⟩|)/ε² of the same QFI.
pub fn qfi_fidelity(sys: &Bouncer, n: usize, t: f64, epsilon: f64, grid: &GridSpec) -> Result<f64> {
    validate_epsilon(epsilon)?;
    if !(t > 0.0) {
        return Err(Error::validation("t", "must be positive"));
    }
    let init = discretize(sys, &InitialState::Bound(sys.state(n)?), grid)?;
    let hist = branch_histories(sys, &init, &[1.0, 1.0 + epsilon, 1.0 - epsilon], &[t])?;
    let dz = grid.dz();
    let inner = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dz;
    let ov = 0.5 * (inner(&hist[0][0], &hist[1][0]) + inner(&hist[0][0], &hist[2][0]));
    Ok(8.0 * (1.0 - ov.norm()) / (epsilon * epsilon))
}
