//! Real Airy function Ai and its derivative, plus the negative zeros.
//!
//! Three regimes:
//! * `x >= 9`: the decaying asymptotic expansion (relative error below 1e-15).
//! * `x <= -12`: the oscillatory asymptotic expansion.
//! * in between: a local Taylor expansion of `y'' = x y` about the nearest
//!   node of a table spaced 0.5 apart.
//!
//! The table is built once. Nodes with `x <= 0` are reached by stepping left
//! from the exact values at the origin. Nodes with `x > 0` are reached by
//! stepping left from the asymptotic value at `x = 9`, which is the stable
//! direction for the recessive solution. Every evaluation uses a step of at
//! most 0.25, so the series converge in a few dozen terms. This avoids the
//! transition band around |x| ~ 4 where neither Maclaurin nor asymptotic
//! series reach 1e-12.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Ai(0) = 3^(-2/3)/Γ(2/3).
pub const AI0: f64 = 0.355_028_053_887_817_24;
/// Ai'(0) = -3^(-1/3)/Γ(1/3).
pub const AIP0: f64 = -0.258_819_403_792_806_8;

const NODE_STEP: f64 = 0.5;
const NEG_NODES: i32 = 24;
const POS_NODES: i32 = 18;
const NEG_ASYMPTOTIC: f64 = NODE_STEP * -(NEG_NODES as f64);
const POS_ASYMPTOTIC: f64 = NODE_STEP * POS_NODES as f64;

/// Value and derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiryPair {
    pub ai: f64,
    pub aip: f64,
}

pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).ai
}

pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).aip
}

pub fn airy_pair(x: f64) -> AiryPair {
    if x.is_nan() {
        return AiryPair { ai: f64::NAN, aip: f64::NAN };
    }
    if x >= POS_ASYMPTOTIC {
        return asymptotic_positive(x);
    }
    if x <= NEG_ASYMPTOTIC {
        return asymptotic_negative(-x);
    }
    let j = (x / NODE_STEP).round() as i32;
    let j = j.clamp(-NEG_NODES, POS_NODES);
    let x0 = j as f64 * NODE_STEP;
    let node = nodes()[(j + NEG_NODES) as usize];
    taylor_step(x0, node, x - x0)
}

fn nodes() -> &'static [AiryPair] {
    static NODES: OnceLock<Vec<AiryPair>> = OnceLock::new();
    NODES.get_or_init(|| {
        let len = (NEG_NODES + POS_NODES + 1) as usize;
        let mut out = vec![AiryPair { ai: 0.0, aip: 0.0 }; len];
        let origin = NEG_NODES as usize;
        out[origin] = AiryPair { ai: AI0, aip: AIP0 };
        for i in (0..origin).rev() {
            let x0 = (i as i32 + 1 - NEG_NODES) as f64 * NODE_STEP;
            out[i] = taylor_step(x0, out[i + 1], -NODE_STEP);
        }
        out[len - 1] = asymptotic_positive(POS_ASYMPTOTIC);
        for i in (origin + 1..len - 1).rev() {
            let x0 = (i as i32 + 1 - NEG_NODES) as f64 * NODE_STEP;
            out[i] = taylor_step(x0, out[i + 1], -NODE_STEP);
        }
        out
    })
}

/// Taylor series of a solution of `y'' = x y` about `x0`, evaluated at `x0 + h`.
fn taylor_step(x0: f64, at: AiryPair, h: f64) -> AiryPair {
    if h == 0.0 {
        return at;
    }
    // a_{k+2} (k+1)(k+2) = x0 a_k + a_{k-1}
    let mut a_km1 = at.ai; // a_{k-1}
    let mut a_k = at.aip; // a_k
    let a2 = 0.5 * x0 * at.ai;
    let mut y = at.ai + at.aip * h + a2 * h * h;
    let mut yp = at.aip + 2.0 * a2 * h;
    let mut a_kp1 = a2;
    let mut hk = h * h; // h^(k+1) with k = 1
    let scale = at.ai.abs() + at.aip.abs();
    let mut quiet = 0;
    for k in 1..200usize {
        let kf = k as f64;
        let a_next = (x0 * a_k + a_km1) / ((kf + 1.0) * (kf + 2.0));
        let hk1 = hk * h;
        let ty = a_next * hk1;
        let typ = (kf + 2.0) * a_next * hk;
        y += ty;
        yp += typ;
        a_km1 = a_k;
        a_k = a_kp1;
        a_kp1 = a_next;
        hk = hk1;
        if ty.abs() + typ.abs() <= 1e-18 * (scale + y.abs() + yp.abs()) {
            quiet += 1;
            // Recurrence has period-three structure near x0 = 0; require a run.
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    AiryPair { ai: y, aip: yp }
}

/// Coefficients u_k, v_k of the Airy asymptotic expansions.
fn uv(k: usize) -> (f64, f64) {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(64);
        let mut u = 1.0_f64;
        out.push((1.0, 1.0));
        for k in 1..64usize {
            let kf = k as f64;
            u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
            let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
            out.push((u, v));
        }
        out
    });
    t[k]
}

fn asymptotic_positive(x: f64) -> AiryPair {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..64 {
        let (u, v) = uv(k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let tu = sign * u * zk;
        let tv = sign * v * zk;
        let mag = tu.abs().max(tv.abs());
        if mag > last {
            break;
        }
        su += tu;
        sv += tv;
        if mag < 1e-17 {
            break;
        }
        last = mag;
        zk /= zeta;
    }
    let x14 = x.sqrt().sqrt();
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    AiryPair { ai: e / x14 * su, aip: -x14 * e * sv }
}

/// Expansion of Ai(-y), Ai'(-y) for large positive `y`.
fn asymptotic_negative(y: f64) -> AiryPair {
    let zeta = 2.0 / 3.0 * y * y.sqrt();
    let (mut p, mut q, mut r, mut s) = (0.0, 0.0, 0.0, 0.0);
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..64 {
        let (u, v) = uv(k);
        let tu = u * zk;
        let tv = v * zk;
        let mag = tu.abs().max(tv.abs());
        if mag > last {
            break;
        }
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * tu;
            r += sign * tv;
        } else {
            q += sign * tu;
            s += sign * tv;
        }
        if mag < 1e-17 {
            break;
        }
        last = mag;
        zk /= zeta;
    }
    let (sz, cz) = zeta.sin_cos();
    let cos_t = (cz + sz) / std::f64::consts::SQRT_2;
    let sin_t = (sz - cz) / std::f64::consts::SQRT_2;
    let y14 = y.sqrt().sqrt();
    let rp = PI.sqrt();
    AiryPair {
        ai: (cos_t * p + sin_t * q) / (rp * y14),
        aip: y14 * (sin_t * r - cos_t * s) / rp,
    }
}

/// The n-th zero of Ai (n >= 1), counted from the origin towards -infinity.
pub fn airy_zero(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::validation("n", "must be at least 1"));
    }
    let t = 3.0 * PI * (4.0 * n as f64 - 1.0) / 8.0;
    let seed = -t.powf(2.0 / 3.0) * (1.0 + 5.0 / (48.0 * t * t));

    let mut half = 0.2;
    let (mut lo, mut hi) = (seed - half, seed + half);
    let (mut f_lo, mut f_hi) = (airy_ai(lo), airy_ai(hi));
    let mut widen = 0;
    while f_lo * f_hi > 0.0 {
        widen += 1;
        if widen > 8 {
            return Err(Error::Convergence(format!("no sign change bracketing Airy zero {n}")));
        }
        half *= 1.3;
        lo = seed - half;
        hi = seed + half;
        f_lo = airy_ai(lo);
        f_hi = airy_ai(hi);
    }

    let mut x = seed.clamp(lo, hi);
    for _ in 0..100 {
        let AiryPair { ai, aip } = airy_pair(x);
        if ai == 0.0 {
            return Ok(x);
        }
        if (ai < 0.0) == (f_lo < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - ai / aip;
        let next = if newton > lo && newton < hi && aip != 0.0 { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Convergence(format!("Newton iteration for Airy zero {n} did not settle")))
}

/// The first `count` zeros.
pub fn airy_zeros(count: usize) -> Result<Vec<f64>> {
    (1..=count).map(airy_zero).collect()
}
