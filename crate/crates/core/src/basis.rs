//! Normalized eigenstates of the linear potential above a hard wall, and
//! expectation values of polynomial observables in position and momentum.
//!
//! Every eigenfunction, and every result of applying `u` or `d/du` to it, has
//! the form `P(u) Ai(u + γ) + Q(u) Ai'(u + γ)` with polynomial `P`, `Q`,
//! because `Ai'' = x Ai`. Observables are therefore applied exactly, and only
//! the final overlap integral is done numerically.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::airy::{airy_ai_prime, airy_pair, airy_zero};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::units::{derive_scales, PhysicalConstants, UnitScales};

/// Extra range beyond the classical turning point kept in integrals.
pub const TAIL_WIDTH: f64 = 15.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Constants together with the scales derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bouncer {
    pub constants: PhysicalConstants,
    pub scales: UnitScales,
}

impl Bouncer {
    pub fn new(constants: PhysicalConstants) -> Result<Self> {
        constants.validate()?;
        Ok(Self { constants, scales: derive_scales(&constants) })
    }

    pub fn state(&self, n: usize) -> Result<BoundState> {
        eigenstate(n, &self.scales)
    }
}

impl Default for Bouncer {
    fn default() -> Self {
        let constants = PhysicalConstants::default();
        Self { constants, scales: derive_scales(&constants) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub n: usize,
    pub gamma_n: f64,
    /// A_n in m^(-1/2).
    pub norm: f64,
    pub scales: UnitScales,
}

pub fn eigenstate(n: usize, scales: &UnitScales) -> Result<BoundState> {
    let gamma_n = airy_zero(n)?;
    let norm = 1.0 / (scales.lambda.sqrt() * airy_ai_prime(gamma_n).abs());
    Ok(BoundState { n, gamma_n, norm, scales: *scales })
}

impl BoundState {
    /// Normalization in bouncer units, so that `∫ ψ(u)² du = 1`.
    pub fn unit_norm(&self) -> f64 {
        self.norm * self.scales.lambda.sqrt()
    }

    /// Dimensionless energy `-γ_n`.
    pub fn energy_units(&self) -> f64 {
        -self.gamma_n
    }

    /// Energy in joules.
    pub fn energy(&self) -> f64 {
        -self.gamma_n * self.scales.eps0
    }

    /// ψ_n(z) in m^(-1/2); zero below the mirror.
    pub fn evaluate(&self, z: f64) -> f64 {
        if z < 0.0 {
            0.0
        } else {
            self.norm * airy_pair(z / self.scales.lambda + self.gamma_n).ai
        }
    }

    /// ψ_n(u) with unit norm in `u`.
    pub fn evaluate_units(&self, u: f64) -> f64 {
        if u < 0.0 {
            0.0
        } else {
            self.unit_norm() * airy_pair(u + self.gamma_n).ai
        }
    }

    /// Integration cut-off in bouncer units.
    pub fn cutoff_units(&self) -> f64 {
        -self.gamma_n + TAIL_WIDTH
    }

    fn same_scales(&self, other: &BoundState) -> Result<()> {
        if self.scales == other.scales {
            Ok(())
        } else {
            Err(Error::validation("scales", "bra and ket must share unit scales"))
        }
    }
}

/// Polynomial in the dimensionless position `u` and momentum `p = -i d/du`,
/// stored in normal order (every `u` to the left of every `p`).
#[derive(Clone, PartialEq, Default)]
pub struct Operator {
    terms: BTreeMap<(u32, u32), Complex64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.terms.iter().map(|(&(a, b), c)| format!("({c}) u^{a} p^{b}")).collect();
        write!(f, "Operator[{}]", parts.join(" + "))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// `p^b u^c` rewritten in normal order: Σ_k k! C(b,k) C(c,k) (-i)^k u^(c-k) p^(b-k).
fn reorder(b: u32, c: u32) -> Vec<((u32, u32), Complex64)> {
    (0..=b.min(c))
        .map(|k| {
            let coeff = factorial(k) * binomial(b, k) * binomial(c, k);
            ((c - k, b - k), (-I).powu(k) * coeff)
        })
        .collect()
}

impl Operator {
    pub fn monomial(coeff: impl Into<Complex64>, u_power: u32, p_power: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((u_power, p_power), coeff.into());
        Self { terms }.pruned()
    }

    pub fn identity() -> Self {
        Self::monomial(1.0, 0, 0)
    }

    pub fn position() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn momentum() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    /// `p² + u`, the unperturbed Hamiltonian in units of eps0.
    pub fn hamiltonian() -> Self {
        Self::monomial(1.0, 0, 2) + Self::position()
    }

    /// `-p² + u`: minus kinetic plus potential energy, in units of eps0.
    pub fn kinetic_potential_difference() -> Self {
        Self::monomial(-1.0, 0, 2) + Self::position()
    }

    fn pruned(mut self) -> Self {
        self.terms.retain(|_, c| c.norm() != 0.0);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), Complex64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn scale(&self, factor: impl Into<Complex64>) -> Self {
        let f = factor.into();
        Self { terms: self.terms.iter().map(|(&k, &v)| (k, v * f)).collect() }.pruned()
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::identity(), |acc, _| &acc * self)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = BTreeMap::new();
        for (&(a, b), &c) in &self.terms {
            for (key, w) in reorder(b, a) {
                *out.entry(key).or_insert(Complex64::new(0.0, 0.0)) += c.conj() * w;
            }
        }
        Self { terms: out }.pruned()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        let keys: std::collections::BTreeSet<(u32, u32)> =
            self.terms.keys().chain(adj.terms.keys()).copied().collect();
        keys.iter().all(|k| {
            let a = self.terms.get(k).copied().unwrap_or_default();
            let b = adj.terms.get(k).copied().unwrap_or_default();
            (a - b).norm() <= tol * (1.0 + a.norm())
        })
    }

    /// Hermitian part `(O + O†)/2`.
    pub fn symmetrized(&self) -> Self {
        (self.clone() + self.adjoint()).scale(0.5)
    }

    fn apply(&self, f: &AiryForm) -> AiryForm {
        let mut out = AiryForm::zero(f.gamma);
        for (&(a, b), &c) in &self.terms {
            let mut g = f.clone();
            for _ in 0..b {
                g = g.momentum();
            }
            for _ in 0..a {
                g = g.times_u();
            }
            out.accumulate(&g, c);
        }
        out
    }
}

impl std::ops::Add for Operator {
    type Output = Operator;
    fn add(mut self, rhs: Operator) -> Operator {
        for (k, v) in rhs.terms {
            *self.terms.entry(k).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        self.pruned()
    }
}

impl std::ops::Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        self + rhs.scale(-1.0)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        let mut out = BTreeMap::new();
        for (&(a, b), &x) in &self.terms {
            for (&(c, d), &y) in &rhs.terms {
                for ((cu, bp), w) in reorder(b, c) {
                    *out.entry((a + cu, bp + d)).or_insert(Complex64::new(0.0, 0.0)) += x * y * w;
                }
            }
        }
        Operator { terms: out }.pruned()
    }
}

impl std::ops::Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

/// `P(u) Ai(u + γ) + Q(u) Ai'(u + γ)`, polynomial coefficients in ascending order.
#[derive(Debug, Clone)]
struct AiryForm {
    gamma: f64,
    p: Vec<Complex64>,
    q: Vec<Complex64>,
}

impl AiryForm {
    fn zero(gamma: f64) -> Self {
        Self { gamma, p: Vec::new(), q: Vec::new() }
    }

    fn eigenfunction(gamma: f64) -> Self {
        Self { gamma, p: vec![Complex64::new(1.0, 0.0)], q: Vec::new() }
    }

    fn times_u(&self) -> Self {
        let shift = |v: &[Complex64]| {
            if v.is_empty() {
                Vec::new()
            } else {
                std::iter::once(Complex64::new(0.0, 0.0)).chain(v.iter().copied()).collect()
            }
        };
        Self { gamma: self.gamma, p: shift(&self.p), q: shift(&self.q) }
    }

    /// `-i d/du`, using d/du(P Ai + Q Ai') = (P' + (u+γ) Q) Ai + (P + Q') Ai'.
    fn momentum(&self) -> Self {
        let deriv = |v: &[Complex64]| -> Vec<Complex64> {
            v.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect()
        };
        let mut p = deriv(&self.p);
        let uq = self.times_u().q;
        add_into(&mut p, &uq, 1.0.into());
        add_into(&mut p, &self.q, self.gamma.into());
        let mut q = self.p.clone();
        add_into(&mut q, &deriv(&self.q), 1.0.into());
        let minus_i = -I;
        Self {
            gamma: self.gamma,
            p: p.into_iter().map(|c| c * minus_i).collect(),
            q: q.into_iter().map(|c| c * minus_i).collect(),
        }
    }

    fn accumulate(&mut self, other: &AiryForm, c: Complex64) {
        add_into(&mut self.p, &other.p, c);
        add_into(&mut self.q, &other.q, c);
    }

    fn eval(&self, u: f64, ai: f64, aip: f64) -> Complex64 {
        horner(&self.p, u) * ai + horner(&self.q, u) * aip
    }
}

fn add_into(acc: &mut Vec<Complex64>, v: &[Complex64], c: Complex64) {
    if acc.len() < v.len() {
        acc.resize(v.len(), Complex64::new(0.0, 0.0));
    }
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b * c;
    }
}

fn horner(v: &[Complex64], u: f64) -> Complex64 {
    v.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
}

/// Observable whose expectation value is wanted, with its SI unit conversion.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// ẑ^k
    Position(u32),
    /// p̂^k
    Momentum(u32),
    /// (ẑ^a p̂^b + p̂^b ẑ^a)/2
    Symmetrized { position: u32, momentum: u32 },
    /// Hermitian polynomial in bouncer units; `scale` converts to SI.
    Polynomial { operator: Operator, scale: f64 },
}

impl Observable {
    /// `op^k` where `op` is an energy in units of eps0; the result is in J^k.
    pub fn energy_power(op: &Operator, k: u32, scales: &UnitScales) -> Self {
        Observable::Polynomial { operator: op.pow(k), scale: scales.eps0.powi(k as i32) }
    }

    fn resolve(&self, scales: &UnitScales) -> Result<(Operator, f64)> {
        match self {
            Observable::Position(k) => Ok((Operator::monomial(1.0, *k, 0), scales.lambda.powi(*k as i32))),
            Observable::Momentum(k) => Ok((Operator::monomial(1.0, 0, *k), scales.p0.powi(*k as i32))),
            Observable::Symmetrized { position, momentum } => Ok((
                Operator::monomial(1.0, *position, *momentum).symmetrized(),
                scales.lambda.powi(*position as i32) * scales.p0.powi(*momentum as i32),
            )),
            Observable::Polynomial { operator, scale } => {
                if !scale.is_finite() {
                    return Err(Error::UnsupportedObservable("non-finite unit scale".into()));
                }
                if !operator.is_hermitian(1e-12) {
                    return Err(Error::UnsupportedObservable(format!(
                        "{operator:?} is not Hermitian; only Hermitian combinations have real expectation values"
                    )));
                }
                Ok((operator.clone(), *scale))
            }
        }
    }
}

fn raw_element(bra: &BoundState, op: &Operator, ket: &BoundState) -> Result<Complex64> {
    let applied = op.apply(&AiryForm::eigenfunction(ket.gamma_n));
    let cut = bra.cutoff_units().max(ket.cutoff_units());
    let norm = bra.unit_norm() * ket.unit_norm();
    let same = bra.gamma_n == ket.gamma_n;
    let integrand = |u: f64| {
        let k = airy_pair(u + ket.gamma_n);
        let b = if same { k.ai } else { airy_pair(u + bra.gamma_n).ai };
        applied.eval(u, k.ai, k.aip) * b
    };
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 20_000 };
    let est = integrate(integrand, 0.0, cut, cut.ceil() as usize, tol)?;
    Ok(est.value * norm)
}

/// Dimensionless matrix element `⟨bra|O|ket⟩` of an operator in bouncer units,
/// symmetrized as `(⟨bra|O ket⟩ + conj⟨ket|O bra⟩)/2`.
pub fn matrix_element_units(bra: &BoundState, op: &Operator, ket: &BoundState) -> Result<Complex64> {
    bra.same_scales(ket)?;
    let forward = raw_element(bra, op, ket)?;
    if bra.gamma_n == ket.gamma_n && op.is_hermitian(0.0) && op.terms().all(|((_, b), _)| b == 0) {
        return Ok(forward);
    }
    let backward = raw_element(ket, op, bra)?;
    Ok(0.5 * (forward + backward.conj()))
}

/// `⟨bra|O|ket⟩` in SI units.
pub fn expectation(bra: &BoundState, obs: &Observable, ket: &BoundState) -> Result<Complex64> {
    let (op, scale) = obs.resolve(&bra.scales)?;
    Ok(matrix_element_units(bra, &op, ket)? * scale)
}

/// `⟨ψ|O²|ψ⟩ = ‖O ψ‖²` for Hermitian `O`, in bouncer units. Always non-negative.
pub fn second_moment_units(state: &BoundState, op: &Operator) -> Result<f64> {
    if !op.is_hermitian(1e-12) {
        return Err(Error::UnsupportedObservable(format!("{op:?} is not Hermitian")));
    }
    let applied = op.apply(&AiryForm::eigenfunction(state.gamma_n));
    let cut = state.cutoff_units();
    let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 20_000 };
    let est = integrate(
        |u: f64| {
            let k = airy_pair(u + state.gamma_n);
            applied.eval(u, k.ai, k.aip).norm_sqr()
        },
        0.0,
        cut,
        cut.ceil() as usize,
        tol,
    )?;
    Ok(est.value * state.unit_norm().powi(2))
}

/// `⟨ψ_m|ẑ|ψ_n⟩` in metres, by quadrature.
pub fn matrix_element_z(m: &BoundState, n: &BoundState) -> Result<f64> {
    Ok(expectation(m, &Observable::Position(1), n)?.re)
}

/// Closed form of `⟨ψ_m|ẑ|ψ_n⟩` in metres for the positive-normalized basis:
/// `2λ(-1)^(m+n+1)/(γ_m - γ_n)²` for `m != n`, and `2λ|γ_n|/3` on the diagonal.
pub fn position_matrix_element_exact(m: &BoundState, n: &BoundState) -> f64 {
    let lambda = m.scales.lambda;
    if m.n == n.n {
        return 2.0 * lambda * n.energy_units() / 3.0;
    }
    let sign = if (m.n + n.n) % 2 == 1 { 1.0 } else { -1.0 };
    sign * 2.0 * lambda / (m.gamma_n - n.gamma_n).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    fn scales() -> UnitScales {
        derive_scales(&PhysicalConstants::default())
    }

    fn state(n: usize) -> BoundState {
        eigenstate(n, &scales()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn normalized_and_vanishing_at_mirror() {
        let s = scales();
        for n in 1..=5 {
            let st = state(n);
            assert!(st.evaluate(0.0).abs() * s.lambda.sqrt() < 1e-12);
            assert_eq!(st.evaluate(-1e-6), 0.0);
            let norm = matrix_element_units(&st, &Operator::identity(), &st).unwrap().re;
            assert!((norm - 1.0).abs() < 1e-10, "n = {n}: {norm}");
        }
    }

    #[test]
    fn ground_state_height_is_about_nine_microns() {
        let st = state(1);
        let z = expectation(&st, &Observable::Position(1), &st).unwrap().re;
        assert!((z - 9.1e-6).abs() < 0.1e-6, "{z}");
        assert!(rel(z, 2.0 / 3.0 * 2.338_107_410_459_767 * scales().lambda) < 1e-9);
    }

    #[test]
    fn kinetic_energy_is_a_third() {
        let c = PhysicalConstants::default();
        let st = state(1);
        let p2 = expectation(&st, &Observable::Momentum(2), &st).unwrap();
        assert!(p2.im.abs() < 1e-30);
        assert!(rel(p2.re / (2.0 * c.m), st.energy() / 3.0) < 1e-8);
    }

    #[test]
    fn odd_momentum_moments_vanish() {
        for n in 1..=4 {
            let st = state(n);
            for k in [1, 3, 5] {
                let v = matrix_element_units(&st, &Operator::monomial(1.0, 0, k), &st).unwrap();
                assert!(v.norm() < 1e-10, "n = {n}, k = {k}: {v}");
            }
        }
    }

    #[test]
    fn zp_plus_pz_vanishes_in_both_orderings() {
        let st = state(2);
        let zp = Operator::monomial(1.0, 1, 1);
        let pz = &Operator::momentum() * &Operator::position();
        let v = matrix_element_units(&st, &(zp + pz), &st).unwrap();
        assert!(v.norm() < 1e-10, "{v}");
    }

    #[test]
    fn p4_matches_high_precision_values() {
        // ⟨p̃⁴⟩ = ⟨(H - u)²⟩ from 30-digit quadrature.
        let reference = [1.093_349_252_569_375_5, 3.342_266_131_554_142_3, 6.095_316_163_116_476, 9.211_881_339_969_092_6];
        for (i, &r) in reference.iter().enumerate() {
            let st = state(i + 1);
            let v = matrix_element_units(&st, &Operator::monomial(1.0, 0, 4), &st).unwrap().re;
            assert!(rel(v, r) < 1e-9, "n = {}: {v} vs {r}", i + 1);
            let w = second_moment_units(&st, &Operator::monomial(1.0, 0, 2)).unwrap();
            assert!(rel(w, r) < 1e-9);
        }
    }

    #[test]
    fn orthonormal_up_to_eight() {
        let states: Vec<_> = (1..=8).map(state).collect();
        for a in &states {
            for b in &states {
                let v = matrix_element_units(a, &Operator::identity(), b).unwrap().re;
                let want = if a.n == b.n { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-8, "({}, {}): {v}", a.n, b.n);
            }
        }
    }

    #[test]
    fn position_elements_match_closed_form() {
        let one = state(1);
        for m in 2..=6 {
            let st = state(m);
            let q = matrix_element_z(&one, &st).unwrap();
            let exact = position_matrix_element_exact(&one, &st);
            assert!(rel(q, exact) < 1e-8, "m = {m}: {q} vs {exact}");
            assert!((q - matrix_element_z(&st, &one).unwrap()).abs() < 1e-12 * exact.abs());
        }
        // Frozen value in units of λ from 30-digit quadrature.
        let lambda = scales().lambda;
        assert!(rel(matrix_element_z(&one, &state(2)).unwrap() / lambda, 0.653_179_139_522_773_5) < 1e-9);
        assert!(rel(matrix_element_z(&one, &state(5)).unwrap() / lambda, -0.063_638_473_409_735_28) < 1e-9);
    }

    #[test]
    fn operator_algebra() {
        let u = Operator::position();
        let p = Operator::momentum();
        // [u, p] = i
        let comm = &u * &p - &p * &u;
        assert_eq!(comm, Operator::monomial(I, 0, 0));
        assert!(Operator::hamiltonian().is_hermitian(0.0));
        assert!(!Operator::monomial(1.0, 1, 1).is_hermitian(1e-12));
        assert!(Operator::monomial(1.0, 1, 1).symmetrized().is_hermitian(1e-12));
        let h2 = Operator::hamiltonian().pow(2);
        assert!(h2.is_hermitian(1e-12));
    }

    #[test]
    fn non_hermitian_polynomial_rejected() {
        let st = state(1);
        let obs = Observable::Polynomial { operator: Operator::monomial(1.0, 1, 1), scale: 1.0 };
        assert!(matches!(expectation(&st, &obs, &st), Err(Error::UnsupportedObservable(_))));
    }

    #[test]
    fn hamiltonian_is_diagonal() {
        let a = state(1);
        let b = state(3);
        let h = Operator::hamiltonian();
        let diag = matrix_element_units(&b, &h, &b).unwrap().re;
        assert!(rel(diag, b.energy_units()) < 1e-10);
        assert!(matrix_element_units(&a, &h, &b).unwrap().norm() < 1e-9);
    }
}
