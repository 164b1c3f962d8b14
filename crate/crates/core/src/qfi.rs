//! Quantum Fisher information for estimating δ.
//!
//! The probe is ψₙ ⊗ (|↑⟩ + |↓⟩)/√2 evolving under H₀ + δσ_z H′ with
//! H′ = −p̂²/2m + mgẑ. Treating the motion as free fall over short times
//! gives F = (4t²/ħ²)⟨A²⟩ with A = −p̂²/2m + mgẑ + tgp̂ − mg²t²/3, which for an
//! eigenstate becomes (t²/ħ²)[K Eₙ² + 4t²Eₙ²(αₙ − βₙ + t²γₙ)].
//!
//! The double commutator [δH′, [H₀, δH′]] is proportional to the identity
//! and drops out of the variance; it is not carried.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{matrix_element_units, second_moment_units, Bouncer, Operator};
use crate::error::{Error, Result};
use crate::interferometry::mean_height;

/// Upper end of the short-time law's validity window [s].
pub const SHORT_TIME_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QfiModel {
    FullAnalytic,
    ShortTime,
    Semiclassical,
    FreeFall,
    Numeric,
}

impl QfiModel {
    pub fn label(self) -> &'static str {
        match self {
            QfiModel::FullAnalytic => "full-analytic",
            QfiModel::ShortTime => "short-time",
            QfiModel::Semiclassical => "semiclassical",
            QfiModel::FreeFall => "free-fall",
            QfiModel::Numeric => "numeric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::FullAnalytic, Self::ShortTime, Self::Semiclassical, Self::FreeFall, Self::Numeric]
            .into_iter()
            .find(|m| m.label() == s)
    }
}

/// Sampled F_Q(t). `flagged[i]` marks samples outside a model's validity
/// window or, for numeric curves, not converged under ε-halving.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QfiCurve {
    pub model: QfiModel,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl QfiCurve {
    pub fn new(model: QfiModel, times: Vec<f64>, values: Vec<f64>, flagged: Vec<bool>) -> Result<Self> {
        if times.len() != values.len() || times.len() != flagged.len() {
            return Err(Error::validation("curve", "times, values and flags must have equal length"));
        }
        check_times(&times)?;
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Convergence(format!("{} curve has a negative or NaN value", model.label())));
        }
        Ok(Self { model, times, values, flagged })
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::validation("times", "must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("times", "must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub n: usize,
    /// g²⟨p̂²⟩/Eₙ² [1/s²].
    pub alpha: f64,
    /// (2mg²/3Eₙ²)⟨−p̂²/2m + mgẑ⟩ [1/s²].
    pub beta: f64,
    /// m²g⁴/9Eₙ² [1/s⁴].
    pub gamma: f64,
}

/// Everything needed to evaluate the bound-state QFI models for one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQfi {
    pub n: usize,
    /// Eₙ [J].
    pub energy: f64,
    /// 4⟨(−p̂²/2m + mgẑ)²⟩/Eₙ².
    pub k: f64,
    pub coefficients: CoefficientSet,
    hbar: f64,
}

impl BoundQfi {
    pub fn new(sys: &Bouncer, n: usize) -> Result<Self> {
        let st = sys.state(n)?;
        let c = &sys.constants;
        let s = &sys.scales;
        let e = st.energy();
        let h1 = Operator::kinetic_potential_difference();
        let p2 = matrix_element_units(&st, &Operator::monomial(1.0, 0, 2), &st)?.re * s.p0 * s.p0;
        let h1_mean = matrix_element_units(&st, &h1, &st)?.re * s.eps0;
        let h1_sq = second_moment_units(&st, &h1)? * s.eps0 * s.eps0;
        let g2 = c.g * c.g;
        let coefficients = CoefficientSet {
            n,
            alpha: g2 * p2 / (e * e),
            beta: 2.0 * c.m * g2 / (3.0 * e * e) * h1_mean,
            gamma: c.m * c.m * g2 * g2 / (9.0 * e * e),
        };
        Ok(Self { n, energy: e, k: 4.0 * h1_sq / (e * e), coefficients, hbar: c.hbar })
    }

    /// (t²/ħ²)[K Eₙ² + 4t²Eₙ²(αₙ − βₙ + t²γₙ)].
    pub fn full(&self, t: f64) -> f64 {
        let CoefficientSet { alpha, beta, gamma, .. } = self.coefficients;
        let e2 = self.energy * self.energy;
        let t2 = t * t;
        t2 / (self.hbar * self.hbar) * (self.k * e2 + 4.0 * t2 * e2 * (alpha - beta + t2 * gamma))
    }

    /// K t² Eₙ²/ħ².
    pub fn short_time(&self, t: f64) -> ShortTimeQfi {
        ShortTimeQfi {
            value: self.k * (t * self.energy / self.hbar).powi(2),
            within_validity: t <= SHORT_TIME_LIMIT,
        }
    }

    /// 4t²Eₙ²/9ħ², from the accumulated phase alone.
    pub fn semiclassical(&self, t: f64) -> f64 {
        4.0 / 9.0 * (t * self.energy / self.hbar).powi(2)
    }

    pub fn value(&self, model: QfiModel, t: f64) -> Result<f64> {
        match model {
            QfiModel::FullAnalytic => Ok(self.full(t)),
            QfiModel::ShortTime => Ok(self.short_time(t).value),
            QfiModel::Semiclassical => Ok(self.semiclassical(t)),
            other => Err(Error::validation("model", format!("{} is not a closed-form bound-state model", other.label()))),
        }
    }

    /// (Δδ′/Δδ) = (3/2)√(F ħ²/(t²Eₙ²)) for a given QFI value.
    pub fn improvement_from_value(&self, qfi: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::validation("t", "must be positive for an improvement ratio"));
        }
        Ok(1.5 * (qfi * self.hbar * self.hbar / (t * t * self.energy * self.energy)).sqrt())
    }

    pub fn improvement_ratio(&self, t: f64, model: QfiModel) -> Result<f64> {
        self.improvement_from_value(self.value(model, t)?, t)
    }

    pub fn curve(&self, model: QfiModel, times: &[f64]) -> Result<QfiCurve> {
        check_times(times)?;
        let values = times.iter().map(|&t| self.value(model, t)).collect::<Result<Vec<_>>>()?;
        let flagged = times
            .iter()
            .map(|&t| model == QfiModel::ShortTime && t > SHORT_TIME_LIMIT)
            .collect();
        QfiCurve::new(model, times.to_vec(), values, flagged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortTimeQfi {
    pub value: f64,
    pub within_validity: bool,
}

pub fn coefficients(sys: &Bouncer, n: usize) -> Result<CoefficientSet> {
    Ok(BoundQfi::new(sys, n)?.coefficients)
}

pub fn qfi_bound_full(sys: &Bouncer, n: usize, t: f64) -> Result<f64> {
    Ok(BoundQfi::new(sys, n)?.full(t))
}

pub fn qfi_bound_short(sys: &Bouncer, n: usize, t: f64) -> Result<ShortTimeQfi> {
    Ok(BoundQfi::new(sys, n)?.short_time(t))
}

pub fn qfi_semiclassical(sys: &Bouncer, n: usize, t: f64) -> Result<f64> {
    Ok(BoundQfi::new(sys, n)?.semiclassical(t))
}

pub fn improvement_ratio(sys: &Bouncer, n: usize, t: f64, model: QfiModel) -> Result<f64> {
    BoundQfi::new(sys, n)?.improvement_ratio(t, model)
}

/// Free-fall time over the mean height, √(2⟨ẑ⟩/g); the analytic bound-state
/// formula assumes t well below this.
pub fn freefall_validity_time(sys: &Bouncer, n: usize) -> Result<f64> {
    Ok((2.0 * mean_height(sys, n)? / sys.constants.g).sqrt())
}

/// Δδ′ = (1/√N)(2tEₙ/3ħ)^(−1), spin-phase readout.
pub fn sensitivity_spin(sys: &Bouncer, n: usize, t: f64, repetitions: u64) -> Result<f64> {
    if repetitions == 0 || !(t > 0.0) {
        return Err(Error::validation("sensitivity", "needs N >= 1 and t > 0"));
    }
    let e = sys.state(n)?.energy();
    Ok(3.0 * sys.constants.hbar / (2.0 * t * e) / (repetitions as f64).sqrt())
}

/// Δδ = 1/√(N F).
pub fn cramer_rao(qfi: f64, repetitions: u64) -> Result<f64> {
    if !(qfi > 0.0) {
        return Err(Error::validation("F_Q", "must be positive"));
    }
    if repetitions == 0 {
        return Err(Error::validation("N", "must be at least 1"));
    }
    Ok(1.0 / (repetitions as f64 * qfi).sqrt())
}

/// Classical action m g² t³/3 of free fall from rest [J s].
pub fn classical_action(mass: f64, g: f64, t: f64) -> f64 {
    mass * g * g * t.powi(3) / 3.0
}

/// φ_g = (2δ/3) m g² t³/ħ.
pub fn freefall_phase(sys: &Bouncer, t: f64, delta: f64) -> f64 {
    let c = &sys.constants;
    2.0 * delta / 3.0 * c.m * c.g * c.g * t.powi(3) / c.hbar
}

/// Δδ = (1/√(aN)) 3ħ/(2mg²t³).
pub fn freefall_sensitivity(sys: &Bouncer, t: f64, repetitions: u64, repeats: u64) -> Result<f64> {
    if repetitions == 0 || repeats == 0 || !(t > 0.0) {
        return Err(Error::validation("sensitivity", "needs positive N, repeats and t"));
    }
    let c = &sys.constants;
    Ok(3.0 * c.hbar / (2.0 * c.m * c.g * c.g * t.powi(3)) / ((repeats * repetitions) as f64).sqrt())
}

/// (4/9) m²g⁴t⁶/ħ², the phase-only QFI of a falling spin superposition.
pub fn qfi_freefall_long_time(sys: &Bouncer, t: f64) -> f64 {
    let c = &sys.constants;
    let x = c.m * c.g * c.g * t.powi(3) / c.hbar;
    4.0 / 9.0 * x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    /// Width parameter σ in exp(−(z−z₀)²/2σ²) [m].
    pub sigma: f64,
    /// Initial centre [m].
    pub z0: f64,
    /// Initial mean momentum [kg m/s].
    pub p_mean: f64,
}

impl GaussianPacket {
    pub fn centred(sigma: f64) -> Self {
        Self { sigma, z0: 0.0, p_mean: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::validation("sigma", "must be positive"));
        }
        if !self.z0.is_finite() || !self.p_mean.is_finite() {
            return Err(Error::validation("packet", "centre and momentum must be finite"));
        }
        Ok(())
    }

    /// ψ(z) = (σ√π)^(−1/2) exp(−(z−z₀)²/2σ² + i p̄ z/ħ).
    pub fn amplitude(&self, z: f64, hbar: f64) -> Complex64 {
        let x = (z - self.z0) / self.sigma;
        let mag = (self.sigma * std::f64::consts::PI.sqrt()).powf(-0.5) * (-0.5 * x * x).exp();
        Complex64::from_polar(mag, self.p_mean * z / hbar)
    }
}

/// F = (4t²/ħ²)⟨A²⟩ for a free Gaussian. For a packet at rest at the origin
/// this is (2mgt/ħ)²(σ²/2 + (2/3)(ħt/σm)² + (3/16)ħ⁴/(σ⁴g²m⁴) + g²t⁴/9).
pub fn qfi_freefall_gaussian(sys: &Bouncer, packet: &GaussianPacket, t: f64) -> Result<f64> {
    packet.validate()?;
    if !(t >= 0.0) {
        return Err(Error::validation("t", "must be non-negative"));
    }
    let c = &sys.constants;
    let (m, g, hbar) = (c.m, c.g, c.hbar);
    let s2 = packet.sigma * packet.sigma;
    let pbar = packet.p_mean;
    // A = c0 + c1 π + c2 ζ − π²/2m with ζ, π the centred position and momentum.
    let c0 = -pbar * pbar / (2.0 * m) + m * g * packet.z0 + t * g * pbar - m * g * g * t * t / 3.0;
    let c1 = t * g - pbar / m;
    let c2 = m * g;
    let var_p = hbar * hbar / (2.0 * s2);
    let a2 = c0 * c0 + c1 * c1 * var_p + c2 * c2 * s2 / 2.0 + 3.0 * var_p * var_p / (4.0 * m * m) - c0 * var_p / m;
    Ok(4.0 * t * t / (hbar * hbar) * a2)
}

/// ⟨ψ↓(t)|ψ↑(t)⟩ for a Gaussian released into free fall with masses m(1 ± δ),
/// from the exact linear-potential propagator. With this ordering the phase
/// is +φ_g to leading order.
pub fn freefall_overlap(sys: &Bouncer, packet: &GaussianPacket, t: f64, delta: f64) -> Result<Complex64> {
    packet.validate()?;
    if !(t >= 0.0) {
        return Err(Error::validation("t", "must be non-negative"));
    }
    if !(delta.abs() < 1.0) {
        return Err(Error::validation("delta", "must satisfy |delta| < 1"));
    }
    let c = &sys.constants;
    let (m, g, hbar) = (c.m, c.g, c.hbar);
    let s2 = (packet.sigma / hbar).powi(2);
    // bra mass m(1−δ), ket mass m(1+δ)
    let sum_p = 2.0 * (m * g * t - packet.p_mean); // P_bra + P_ket
    let diff_p = -2.0 * delta * m * g * t; // P_bra − P_ket
    let tau = t * hbar * delta / (m * packet.sigma * packet.sigma * (1.0 - delta * delta));
    let a = Complex64::new(1.0, -tau);
    let one_over_a_minus_one = Complex64::new(0.0, tau) / a;
    let real_part = Complex64::new(-s2 * diff_p * diff_p / 4.0, 0.0);
    let chirp = one_over_a_minus_one * (s2 * sum_p * sum_p / 4.0);
    let phase = (-2.0 * delta * m * g * t * packet.z0 - 2.0 * delta * m * g * g * t.powi(3) / 6.0) / hbar;
    Ok((real_part + chirp + Complex64::new(0.0, phase)).exp() / a.sqrt())
}

/// 4(⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²) for sampled vectors with uniform quadrature weight.
pub fn pure_state_qfi(psi: &[Complex64], dpsi: &[Complex64], weight: f64) -> f64 {
    let dd: f64 = dpsi.iter().map(|d| d.norm_sqr()).sum::<f64>() * weight;
    let pd: Complex64 = psi.iter().zip(dpsi).map(|(p, d)| p.conj() * d).sum::<Complex64>() * weight;
    4.0 * (dd - pd.norm_sqr())
}
