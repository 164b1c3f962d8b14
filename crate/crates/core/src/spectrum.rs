//! Energy levels with and without the spin-dependent mass-energy correction.
//!
//! A magnetic field splits the rest energy of the two spin states by ħω₀,
//! so the gravitational mass becomes m(1 ± δ) with δ = ħω₀/(2mc²). The
//! gravitational levels scale as m^(1/3).

use serde::Serialize;

use crate::basis::{matrix_element_units, Bouncer, Operator};
use crate::error::{Error, Result};
use crate::units::PEV;

/// Largest δ accepted from a physical field without explicit test mode.
pub const PHYSICAL_DELTA_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldConfig {
    /// Magnetic field [T].
    pub b_tesla: f64,
    /// Larmor angular frequency [rad/s].
    pub omega0: f64,
    /// ħω₀/(2mc²).
    pub delta: f64,
}

impl FieldConfig {
    /// Field configuration for an explicitly chosen δ, bypassing the physical
    /// limit. Used to make the dynamics resolvable in double precision.
    pub fn inflated(sys: &Bouncer, delta: f64) -> Result<Self> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::validation("delta", "must be finite and non-negative"));
        }
        if delta >= 1.0 {
            return Err(Error::validation("delta", "must be below 1 (spin-down mass would vanish)"));
        }
        let c = &sys.constants;
        let omega0 = 2.0 * delta * c.rest_energy() / c.hbar;
        Ok(Self { b_tesla: c.hbar * omega0 / (2.0 * c.mu_n), omega0, delta })
    }
}

pub fn delta_from_field(sys: &Bouncer, b_tesla: f64) -> Result<FieldConfig> {
    if !b_tesla.is_finite() || b_tesla < 0.0 {
        return Err(Error::validation("field_tesla", "must be finite and non-negative"));
    }
    let c = &sys.constants;
    let delta = c.mu_n * b_tesla / c.rest_energy();
    if delta >= PHYSICAL_DELTA_LIMIT {
        return Err(Error::validation(
            "field_tesla",
            format!("gives delta = {delta:.3e}; values of at least {PHYSICAL_DELTA_LIMIT:e} need the inflated-delta test mode"),
        ));
    }
    Ok(FieldConfig { b_tesla, omega0: 2.0 * c.mu_n * b_tesla / c.hbar, delta })
}

/// E_n = -γ_n eps0 [J].
pub fn unperturbed_energy(sys: &Bouncer, n: usize) -> Result<f64> {
    Ok(sys.state(n)?.energy())
}

/// Linearized shift ±δE_n/3 [J], computed directly to avoid cancellation.
pub fn binomial_shift(sys: &Bouncer, n: usize, spin: Spin, delta: f64) -> Result<f64> {
    Ok(spin.sign() * delta * unperturbed_energy(sys, n)? / 3.0)
}

/// E_n(1 ± δ/3) [J].
pub fn corrected_energy_binomial(sys: &Bouncer, n: usize, spin: Spin, delta: f64) -> Result<f64> {
    Ok(unperturbed_energy(sys, n)? + binomial_shift(sys, n, spin, delta)?)
}

fn mass_factor(spin: Spin, delta: f64) -> Result<f64> {
    let f = 1.0 + spin.sign() * delta;
    if !(f > 0.0) || !delta.is_finite() {
        return Err(Error::validation("delta", "gives a non-positive mass"));
    }
    Ok(f)
}

/// Exact shift E_n((1 ± δ)^(1/3) - 1) [J].
pub fn exact_shift(sys: &Bouncer, n: usize, spin: Spin, delta: f64) -> Result<f64> {
    mass_factor(spin, delta)?;
    let s = spin.sign() * delta;
    Ok(unperturbed_energy(sys, n)? * (s.ln_1p() / 3.0).exp_m1())
}

/// The exact eigenvalue for mass m(1 ± δ): E_n (1 ± δ)^(1/3) [J].
pub fn corrected_energy_exact(sys: &Bouncer, n: usize, spin: Spin, delta: f64) -> Result<f64> {
    Ok(unperturbed_energy(sys, n)? * mass_factor(spin, delta)?.cbrt())
}

/// First-order shift ±⟨ψ_n|(-p²/2m + mgz)|ψ_n⟩ per unit δ, by quadrature [J].
pub fn perturbation_first_order(sys: &Bouncer, n: usize, spin: Spin) -> Result<f64> {
    let st = sys.state(n)?;
    let v = matrix_element_units(&st, &Operator::kinetic_potential_difference(), &st)?.re;
    Ok(spin.sign() * v * sys.scales.eps0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMethod {
    ExactRoot,
    Binomial,
    Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRecord {
    pub n: usize,
    pub spin: Spin,
    /// Unperturbed level [J].
    pub e_n: f64,
    /// Mass-corrected gravitational level [J].
    pub e_ns: f64,
    /// Gravitational level plus spin energy ±ħω₀/2 [J].
    pub e_total: f64,
    /// Gravitational shift e_ns - e_n, kept separately for precision [J].
    pub shift: f64,
    pub method: EnergyMethod,
}

impl EnergyRecord {
    pub fn pev(joule: f64) -> f64 {
        joule / PEV
    }
}

pub fn total_energy_with(
    sys: &Bouncer,
    n: usize,
    spin: Spin,
    field: &FieldConfig,
    method: EnergyMethod,
) -> Result<EnergyRecord> {
    let e_n = unperturbed_energy(sys, n)?;
    let shift = match method {
        EnergyMethod::Binomial => binomial_shift(sys, n, spin, field.delta)?,
        EnergyMethod::ExactRoot => exact_shift(sys, n, spin, field.delta)?,
        EnergyMethod::Perturbation => field.delta * perturbation_first_order(sys, n, spin)?,
    };
    let spin_energy = spin.sign() * sys.constants.hbar * field.omega0 / 2.0;
    Ok(EnergyRecord { n, spin, e_n, e_ns: e_n + shift, e_total: e_n + shift + spin_energy, shift, method })
}

/// E_total = E_n ± (ħω₀/2)(1 + E_n/3mc²), binomial path.
pub fn total_energy(sys: &Bouncer, n: usize, spin: Spin, field: &FieldConfig) -> Result<EnergyRecord> {
    total_energy_with(sys, n, spin, field, EnergyMethod::Binomial)
}

/// Mass-energy part of the spin splitting, (2/3)δE_n [J].
pub fn splitting(sys: &Bouncer, n: usize, field: &FieldConfig) -> Result<f64> {
    Ok(2.0 / 3.0 * field.delta * unperturbed_energy(sys, n)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub b_tesla: f64,
    pub n: usize,
    pub delta: f64,
    /// E_n,up - E_n [peV].
    pub shift_pev: f64,
}

pub fn table1(sys: &Bouncer, fields_tesla: &[f64], levels: &[usize]) -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(fields_tesla.len() * levels.len());
    for &b in fields_tesla {
        let field = delta_from_field(sys, b)?;
        for &n in levels {
            let shift = binomial_shift(sys, n, Spin::Up, field.delta)?;
            rows.push(Table1Row { b_tesla: b, n, delta: field.delta, shift_pev: shift / PEV });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn lowest_levels_in_pev() {
        let sys = Bouncer::default();
        for (n, want) in [(1, 1.41), (2, 2.46), (3, 3.32), (4, 4.08)] {
            let e = unperturbed_energy(&sys, n).unwrap() / PEV;
            assert!((e - want).abs() < 0.01, "E_{n} = {e}");
        }
        let e5 = unperturbed_energy(&sys, 5).unwrap() / PEV;
        assert!(rel(e5, 7.944_133_587_120_853 * 0.601_785_506_689_981) < 1e-12);
    }

    #[test]
    fn delta_from_45_tesla() {
        let sys = Bouncer::default();
        let f = delta_from_field(&sys, 45.0).unwrap();
        assert!(rel(f.delta, 2.88e-15) < 0.01, "{}", f.delta);
        let c = sys.constants;
        assert!(rel(c.hbar * f.omega0, 2.0 * c.mu_n * 45.0) < 1e-15);
        assert!(rel(f.delta, c.hbar * f.omega0 / (2.0 * c.rest_energy())) < 1e-15);
        let f1200 = delta_from_field(&sys, 1200.0).unwrap();
        assert!(rel(f1200.delta, 7.70e-14) < 0.002, "{}", f1200.delta);
    }

    #[test]
    fn zero_and_negative_field() {
        let sys = Bouncer::default();
        let f = delta_from_field(&sys, 0.0).unwrap();
        assert_eq!((f.delta, f.omega0), (0.0, 0.0));
        assert!(matches!(delta_from_field(&sys, -1.0), Err(Error::Validation { .. })));
    }

    #[test]
    fn huge_field_needs_test_mode() {
        let sys = Bouncer::default();
        assert!(delta_from_field(&sys, 1e14).is_err());
        let f = FieldConfig::inflated(&sys, 1e-2).unwrap();
        assert!(rel(f.delta, 1e-2) < 1e-15);
        assert!(rel(delta_from_field(&sys, 1.0).unwrap().delta * f.b_tesla, 1e-2) < 1e-12);
    }

    #[test]
    fn table_entries() {
        let sys = Bouncer::default();
        let rows = table1(&sys, &[45.0, 1200.0, 1e7], &[1, 2, 3, 4]).unwrap();
        let want = [
            1.36e-15, 2.37e-15, 3.20e-15, 3.94e-15, 3.62e-14, 6.32e-14, 8.54e-14, 1.05e-13, 3.01e-10, 5.27e-10,
            7.12e-10, 8.75e-10,
        ];
        for (r, w) in rows.iter().zip(want) {
            assert!(rel(r.shift_pev, w) < 0.02, "B = {}, n = {}: {} vs {w}", r.b_tesla, r.n, r.shift_pev);
        }
    }

    #[test]
    fn exact_and_binomial_agree_at_physical_delta() {
        let sys = Bouncer::default();
        let d = 2.88e-15;
        let e1 = unperturbed_energy(&sys, 1).unwrap();
        let a = exact_shift(&sys, 1, Spin::Up, d).unwrap();
        let b = binomial_shift(&sys, 1, Spin::Up, d).unwrap();
        // Difference is -δ²E/9, about 1e-30 of E.
        assert!(((a - b) / e1).abs() < 1e-25);
    }

    #[test]
    fn exact_root_validation() {
        let sys = Bouncer::default();
        assert!(corrected_energy_exact(&sys, 1, Spin::Down, 1.0).is_err());
        assert!(corrected_energy_exact(&sys, 1, Spin::Up, -1.0).is_err());
        assert!(corrected_energy_exact(&sys, 1, Spin::Up, 0.5).is_ok());
        let e = unperturbed_energy(&sys, 2).unwrap();
        assert_eq!(corrected_energy_exact(&sys, 2, Spin::Up, 0.0).unwrap(), e);
        assert_eq!(corrected_energy_binomial(&sys, 2, Spin::Down, 0.0).unwrap(), e);
    }

    #[test]
    fn first_order_is_a_third_of_the_level() {
        let sys = Bouncer::default();
        for n in [1, 4] {
            let e = unperturbed_energy(&sys, n).unwrap();
            let up = perturbation_first_order(&sys, n, Spin::Up).unwrap();
            let down = perturbation_first_order(&sys, n, Spin::Down).unwrap();
            assert!(rel(up, e / 3.0) < 1e-8);
            assert_eq!(down, -up);
        }
    }

    #[test]
    fn exact_slope_matches_first_order() {
        let sys = Bouncer::default();
        let h = 1e-5;
        for n in 1..=3 {
            let slope = (exact_shift(&sys, n, Spin::Up, h).unwrap() - exact_shift(&sys, n, Spin::Down, h).unwrap())
                / (2.0 * h);
            let pert = perturbation_first_order(&sys, n, Spin::Up).unwrap();
            assert!(rel(slope, pert) < 1e-6);
        }
    }

    #[test]
    fn total_energy_algebra() {
        let sys = Bouncer::default();
        let field = delta_from_field(&sys, 45.0).unwrap();
        let up = total_energy(&sys, 1, Spin::Up, &field).unwrap();
        let down = total_energy(&sys, 1, Spin::Down, &field).unwrap();
        let c = sys.constants;
        let want = c.hbar * field.omega0 * (1.0 + up.e_n / (3.0 * c.rest_energy()));
        assert!(rel(up.e_total - down.e_total, want) < 1e-12);
        let split = splitting(&sys, 1, &field).unwrap();
        assert!(rel(up.shift - down.shift, split) < 1e-14);
        assert!(rel(split / PEV, 2.71e-15) < 0.01, "{}", split / PEV);

        let zero = delta_from_field(&sys, 0.0).unwrap();
        let r = total_energy(&sys, 3, Spin::Up, &zero).unwrap();
        assert_eq!((r.e_ns, r.e_total), (r.e_n, r.e_n));
    }

    #[test]
    fn methods_agree_at_small_delta() {
        let sys = Bouncer::default();
        let field = FieldConfig::inflated(&sys, 1e-6).unwrap();
        let b = total_energy_with(&sys, 2, Spin::Up, &field, EnergyMethod::Binomial).unwrap();
        let x = total_energy_with(&sys, 2, Spin::Up, &field, EnergyMethod::ExactRoot).unwrap();
        let p = total_energy_with(&sys, 2, Spin::Up, &field, EnergyMethod::Perturbation).unwrap();
        assert!(rel(x.shift, b.shift) < 1e-6);
        assert!(rel(p.shift, b.shift) < 1e-8);
    }
}
