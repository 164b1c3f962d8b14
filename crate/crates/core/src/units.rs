//! Physical constants and the characteristic scales of the linear potential.
//!
//! Every physics module works in dimensionless "bouncer units": lengths in
//! `lambda`, energies in `eps0`, times in `t0`, momenta in `p0`. In these units
//! the unperturbed Hamiltonian is `-d²/du² + u` on `u >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pico-electronvolt in joules.
pub const PEV: f64 = 1.602_176_634e-31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Neutron mass [kg].
    pub m: f64,
    /// Gravitational acceleration [m/s²].
    pub g: f64,
    /// Reduced Planck constant [J s].
    pub hbar: f64,
    /// Speed of light [m/s].
    pub c: f64,
    /// Magnitude of the neutron magnetic moment [J/T].
    pub mu_n: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            m: 1.674_927_498_04e-27,
            g: 9.81,
            hbar: 1.054_571_817e-34,
            c: 299_792_458.0,
            mu_n: 9.662_365_1e-27,
        }
    }
}

/// Optional per-field replacements for the default constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    pub m: Option<f64>,
    pub g: Option<f64>,
    pub hbar: Option<f64>,
    pub c: Option<f64>,
    pub mu_n: Option<f64>,
}

fn checked(field: &'static str, value: Option<f64>, default: f64) -> Result<f64> {
    match value {
        None => Ok(default),
        Some(v) if !v.is_finite() => Err(Error::validation(field, "must be finite")),
        Some(v) if v <= 0.0 => Err(Error::validation(field, "must be positive")),
        Some(v) => Ok(v),
    }
}

/// Merge overrides into the defaults, rejecting non-positive or non-finite values.
pub fn make_constants(overrides: &ConstantOverrides) -> Result<PhysicalConstants> {
    let d = PhysicalConstants::default();
    Ok(PhysicalConstants {
        m: checked("m", overrides.m, d.m)?,
        g: checked("g", overrides.g, d.g)?,
        hbar: checked("hbar", overrides.hbar, d.hbar)?,
        c: checked("c", overrides.c, d.c)?,
        mu_n: checked("mu_n", overrides.mu_n, d.mu_n)?,
    })
}

impl PhysicalConstants {
    /// Re-run the positivity checks on an already constructed value.
    pub fn validate(&self) -> Result<()> {
        make_constants(&ConstantOverrides {
            m: Some(self.m),
            g: Some(self.g),
            hbar: Some(self.hbar),
            c: Some(self.c),
            mu_n: Some(self.mu_n),
        })
        .map(|_| ())
    }

    /// Rest energy m c² [J].
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScales {
    /// Length scale (ħ²/2m²g)^(1/3) [m].
    pub lambda: f64,
    /// Energy scale (m g² ħ²/2)^(1/3) [J].
    pub eps0: f64,
    /// Time scale ħ/eps0 [s].
    pub t0: f64,
    /// Momentum scale ħ/lambda [kg m/s].
    pub p0: f64,
}

pub fn derive_scales(c: &PhysicalConstants) -> UnitScales {
    let lambda = (c.hbar * c.hbar / (2.0 * c.m * c.m * c.g)).cbrt();
    let eps0 = (c.m * c.g * c.g * c.hbar * c.hbar / 2.0).cbrt();
    UnitScales { lambda, eps0, t0: c.hbar / eps0, p0: c.hbar / lambda }
}

impl UnitScales {
    pub fn to_pev(&self, energy_joule: f64) -> f64 {
        energy_joule / PEV
    }

    /// Convert a dimensionless energy to joules.
    pub fn energy(&self, e: f64) -> f64 {
        e * self.eps0
    }

    /// Convert a time in seconds to bouncer units.
    pub fn time(&self, t_seconds: f64) -> f64 {
        t_seconds / self.t0
    }
}
