//! Spin interferometry with a gravitationally bound neutron.
//!
//! The protocol prepares ψ₁, drives it to ψₙ with a vibrating mirror, rotates
//! the spin into the x direction and lets it precess. The spin-dependent
//! mass-energy adds (2/3)δEₙ to the precession energy and, at second order in
//! δ, reduces the fringe visibility.

use serde::Serialize;

use crate::basis::{matrix_element_units, second_moment_units, Bouncer, Observable, Operator};
use crate::error::{Error, Result};
use crate::spectrum::{splitting, unperturbed_energy, FieldConfig};

/// Largest `δ Eₙ t/ħ` for which the second-order visibility is accepted.
pub const VISIBILITY_VALIDITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolParams {
    /// Target excited level.
    pub n: usize,
    /// Mirror vibration strength [m/s²].
    pub a: f64,
    pub field: FieldConfig,
    /// Interrogation time [s].
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolSummary {
    pub resonance: f64,
    pub rabi: f64,
    pub pi_pulse: f64,
    pub phase: f64,
}

/// (E_to - E_from)/ħ [rad/s].
pub fn resonance_frequency(sys: &Bouncer, n_from: usize, n_to: usize) -> Result<f64> {
    let de = unperturbed_energy(sys, n_to)? - unperturbed_energy(sys, n_from)?;
    Ok(de / sys.constants.hbar)
}

fn check_drive(n: usize, a: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::validation("level", "must be at least 2 for the excitation stage"));
    }
    if !a.is_finite() || a < 0.0 {
        return Err(Error::validation("a", "must be finite and non-negative"));
    }
    Ok(())
}

/// Ω_R,n = m a |⟨ψ₁|ẑ|ψₙ⟩|/ħ [rad/s].
pub fn rabi_frequency(sys: &Bouncer, n: usize, a: f64) -> Result<f64> {
    check_drive(n, a)?;
    let z = matrix_element_units(&sys.state(1)?, &Operator::position(), &sys.state(n)?)?.re * sys.scales.lambda;
    Ok(sys.constants.m * a * z.abs() / sys.constants.hbar)
}

/// Same frequency from the momentum matrix element, a|⟨ψ₁|p̂|ψₙ⟩|/(ħω₁ₙ).
pub fn rabi_frequency_momentum_form(sys: &Bouncer, n: usize, a: f64) -> Result<f64> {
    check_drive(n, a)?;
    let p = matrix_element_units(&sys.state(1)?, &Operator::momentum(), &sys.state(n)?)?.norm() * sys.scales.p0;
    Ok(a * p / (sys.constants.hbar * resonance_frequency(sys, 1, n)?))
}

/// π/Ω_R,n [s].
pub fn pi_pulse_time(sys: &Bouncer, n: usize, a: f64) -> Result<f64> {
    let omega = rabi_frequency(sys, n, a)?;
    if omega <= 0.0 {
        return Err(Error::validation("a", "gives zero Rabi frequency; no pi pulse exists"));
    }
    Ok(std::f64::consts::PI / omega)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Phase {
    /// ω₀ t.
    pub larmor: f64,
    /// (2/3)δEₙ t/ħ.
    pub mass_energy: f64,
}

impl Phase {
    pub fn total(&self) -> f64 {
        self.larmor + self.mass_energy
    }
}

/// θ = (t/ħ)(ħω₀ + ΔE_r), kept as its two parts.
pub fn phase(sys: &Bouncer, t: f64, field: &FieldConfig, n: usize) -> Result<Phase> {
    check_time(t)?;
    let de = splitting(sys, n, field)?;
    Ok(Phase { larmor: field.omega0 * t, mass_energy: de * t / sys.constants.hbar })
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::validation("t", "must be finite and non-negative"));
    }
    Ok(())
}

/// A(t) = 1 - (ω₀t)²(Eₙ/2mc²)² = 1 - (δEₙt/ħ)².
pub fn visibility(sys: &Bouncer, t: f64, field: &FieldConfig, n: usize) -> Result<f64> {
    Ok(1.0 - visibility_deficit(sys, t, field, n)?)
}

/// 1 - A(t) = (δEₙt/ħ)², computed without the cancellation in 1 - A.
pub fn visibility_deficit(sys: &Bouncer, t: f64, field: &FieldConfig, n: usize) -> Result<f64> {
    check_time(t)?;
    let x = field.delta * unperturbed_energy(sys, n)? * t / sys.constants.hbar;
    if x > VISIBILITY_VALIDITY_LIMIT {
        return Err(Error::OutsideValidity(format!(
            "delta*E_n*t/hbar = {x:.3e} exceeds {VISIBILITY_VALIDITY_LIMIT}; the second-order visibility is not \
             reliable here, use the numeric propagator overlap instead"
        )));
    }
    Ok(x * x)
}

/// Second-order visibility from the spread of the perturbation,
/// 1 - 2δ²t²Var(−p̂²/2m + mgẑ)/ħ². This is what a direct expansion of the
/// branch overlap gives at short times.
pub fn visibility_from_variance(sys: &Bouncer, t: f64, field: &FieldConfig, n: usize) -> Result<f64> {
    check_time(t)?;
    let var = perturbation_variance(sys, n)?;
    let x = field.delta * t / sys.constants.hbar;
    Ok(1.0 - 2.0 * x * x * var)
}

/// Var(−p̂²/2m + mgẑ) in the eigenstate ψₙ [J²].
pub fn perturbation_variance(sys: &Bouncer, n: usize) -> Result<f64> {
    let st = sys.state(n)?;
    let op = Operator::kinetic_potential_difference();
    let mean = matrix_element_units(&st, &op, &st)?.re;
    let second = second_moment_units(&st, &op)?;
    Ok((second - mean * mean) * sys.scales.eps0.powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InterferenceOptions {
    pub include_visibility: bool,
    /// Drop the mass-energy phase to obtain the bare Larmor trace.
    pub without_mass_energy: bool,
}

/// p = ½(1 + A cos θ) with A ≡ 1 unless visibility is requested.
pub fn interference_probability(
    sys: &Bouncer,
    t: f64,
    field: &FieldConfig,
    n: usize,
    options: InterferenceOptions,
) -> Result<f64> {
    let ph = phase(sys, t, field, n)?;
    let theta = if options.without_mass_energy { ph.larmor } else { ph.total() };
    let a = if options.include_visibility { visibility(sys, t, field, n)? } else { 1.0 };
    Ok((0.5 * (1.0 + a * theta.cos())).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceTrace {
    pub times: Vec<f64>,
    pub probability: Vec<f64>,
    pub visibility: Vec<f64>,
    pub phase: Vec<f64>,
}

pub fn interference_trace(
    sys: &Bouncer,
    times: &[f64],
    field: &FieldConfig,
    n: usize,
    include_visibility: bool,
) -> Result<InterferenceTrace> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("times", "must be ordered"));
    }
    let mut trace = InterferenceTrace {
        times: times.to_vec(),
        probability: Vec::with_capacity(times.len()),
        visibility: Vec::with_capacity(times.len()),
        phase: Vec::with_capacity(times.len()),
    };
    let opts = InterferenceOptions { include_visibility, without_mass_energy: false };
    for &t in times {
        trace.phase.push(phase(sys, t, field, n)?.total());
        trace.visibility.push(visibility(sys, t, field, n)?);
        trace.probability.push(interference_probability(sys, t, field, n, opts)?);
    }
    Ok(trace)
}

pub fn protocol_summary(sys: &Bouncer, params: &ProtocolParams) -> Result<ProtocolSummary> {
    Ok(ProtocolSummary {
        resonance: resonance_frequency(sys, 1, params.n)?,
        rabi: rabi_frequency(sys, params.n, params.a)?,
        pi_pulse: pi_pulse_time(sys, params.n, params.a)?,
        phase: phase(sys, params.t, &params.field, params.n)?.total(),
    })
}

/// Mean height ⟨ẑ⟩ of ψₙ [m].
pub fn mean_height(sys: &Bouncer, n: usize) -> Result<f64> {
    let st = sys.state(n)?;
    Ok(crate::basis::expectation(&st, &Observable::Position(1), &st)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::delta_from_field;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn resonance_values() {
        let sys = Bouncer::default();
        assert!(rel(resonance_frequency(&sys, 1, 5).unwrap(), 5.15e3) < 0.01);
        assert_eq!(resonance_frequency(&sys, 1, 1).unwrap(), 0.0);
        assert!(rel(resonance_frequency(&sys, 1, 2).unwrap(), 1.60e3) < 0.01);
    }

    #[test]
    fn rabi_and_pi_pulse() {
        let sys = Bouncer::default();
        let omega = rabi_frequency(&sys, 5, 7.0).unwrap();
        assert!(rel(omega, 41.0) < 0.05, "{omega}");
        assert_eq!(rabi_frequency(&sys, 5, 0.0).unwrap(), 0.0);
        let alt = rabi_frequency_momentum_form(&sys, 5, 7.0).unwrap();
        assert!(rel(alt, omega) < 1e-6, "{alt} vs {omega}");
        let t = pi_pulse_time(&sys, 5, 7.0).unwrap();
        assert!(rel(t, 0.077) < 0.02, "{t}");
        assert!(rel(pi_pulse_time(&sys, 5, 14.0).unwrap(), t / 2.0) < 1e-12);
        assert!(pi_pulse_time(&sys, 5, 0.0).is_err());
        assert!(rabi_frequency(&sys, 1, 7.0).is_err());
    }

    #[test]
    fn phase_properties() {
        let sys = Bouncer::default();
        let field = delta_from_field(&sys, 45.0).unwrap();
        assert_eq!(phase(&sys, 0.0, &field, 1).unwrap().total(), 0.0);
        let p1 = phase(&sys, 1e-9, &field, 2).unwrap();
        let p2 = phase(&sys, 2e-9, &field, 2).unwrap();
        assert!(rel(p2.total(), 2.0 * p1.total()) < 1e-15);
        let ratio = p1.mass_energy / p1.larmor;
        let c = sys.constants;
        let want = unperturbed_energy(&sys, 2).unwrap() / (3.0 * c.rest_energy());
        assert!(rel(ratio, want) < 1e-12);
        let zero = delta_from_field(&sys, 0.0).unwrap();
        assert_eq!(phase(&sys, 1.0, &zero, 1).unwrap().total(), 0.0);
    }

    #[test]
    fn probability_limits() {
        let sys = Bouncer::default();
        let field = delta_from_field(&sys, 45.0).unwrap();
        let opts = InterferenceOptions { include_visibility: true, ..Default::default() };
        assert_eq!(interference_probability(&sys, 0.0, &field, 1, opts).unwrap(), 1.0);
        let half_period = std::f64::consts::PI / field.omega0;
        let p = interference_probability(&sys, half_period, &field, 1, InterferenceOptions::default()).unwrap();
        assert!(p < 1e-12);
    }

    #[test]
    fn fringe_shift_at_inflated_delta() {
        let sys = Bouncer::default();
        let field = FieldConfig::inflated(&sys, 1e-3).unwrap();
        let hbar = sys.constants.hbar;
        let e1 = unperturbed_energy(&sys, 1).unwrap();
        for t in [1e-14, 3.3e-13, 7e-12] {
            let ph = phase(&sys, t, &field, 1).unwrap();
            assert!(rel(ph.mass_energy, 2.0 / 3.0 * 1e-3 * e1 * t / hbar) < 1e-14);
            let with = interference_probability(&sys, t, &field, 1, InterferenceOptions::default()).unwrap();
            let without = interference_probability(
                &sys,
                t,
                &field,
                1,
                InterferenceOptions { without_mass_energy: true, ..Default::default() },
            )
            .unwrap();
            assert_eq!(with, 0.5 * (1.0 + (ph.larmor + ph.mass_energy).cos()));
            assert_eq!(without, 0.5 * (1.0 + ph.larmor.cos()));
        }
    }

    #[test]
    fn visibility_window_and_scaling() {
        let sys = Bouncer::default();
        let f1 = FieldConfig::inflated(&sys, 1e-4).unwrap();
        let f2 = FieldConfig::inflated(&sys, 2e-4).unwrap();
        let t = 1e-3;
        let d1 = 1.0 - visibility(&sys, t, &f1, 1).unwrap();
        let d2 = 1.0 - visibility(&sys, t, &f2, 1).unwrap();
        assert!(rel(d2, 4.0 * d1) < 1e-9);
        assert_eq!(visibility(&sys, 0.0, &f1, 1).unwrap(), 1.0);
        let zero = delta_from_field(&sys, 0.0).unwrap();
        assert_eq!(visibility(&sys, 10.0, &zero, 1).unwrap(), 1.0);
        assert!(matches!(visibility(&sys, 1.0, &f2, 1), Err(Error::OutsideValidity(_))));
    }

    #[test]
    fn perturbation_variance_value() {
        // Var = (K/4 - 1/9) E² with K = 28/15, i.e. 16/45 E².
        let sys = Bouncer::default();
        for n in 1..=3 {
            let e = unperturbed_energy(&sys, n).unwrap();
            assert!(rel(perturbation_variance(&sys, n).unwrap(), 16.0 / 45.0 * e * e) < 1e-8);
        }
    }

    #[test]
    fn trace_shapes() {
        let sys = Bouncer::default();
        let field = delta_from_field(&sys, 45.0).unwrap();
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 1e-11).collect();
        let tr = interference_trace(&sys, &times, &field, 2, true).unwrap();
        assert_eq!(tr.probability.len(), 50);
        assert!(tr.probability.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(interference_trace(&sys, &[1.0, 0.5], &field, 1, false).is_err());
    }

    #[test]
    fn ground_state_height() {
        let sys = Bouncer::default();
        assert!((mean_height(&sys, 1).unwrap() - 9.1e-6).abs() < 0.1e-6);
    }
}
