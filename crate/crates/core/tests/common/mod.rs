//! Independent oracles shared by integration tests.

use bouncer::basis::Bouncer;
use bouncer::qfi::GaussianPacket;
use num_complex::Complex64;

/// ‖Aψ‖² for a Gaussian by explicit polynomial algebra in x = (z − z₀)/σ,
/// using ∫x^{2k}e^{−x²}dx/√π = (2k − 1)!!/2^k.
pub fn moment_oracle(sys: &Bouncer, p: &GaussianPacket, t: f64) -> f64 {
    let c = sys.constants;
    let (m, g, hbar, s) = (c.m, c.g, c.hbar, p.sigma);
    let k = p.p_mean / hbar;
    type Poly = Vec<Complex64>;
    let add = |a: &Poly, b: &Poly| -> Poly {
        (0..a.len().max(b.len()))
            .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
            .collect()
    };
    let scale = |a: &Poly, f: Complex64| -> Poly { a.iter().map(|x| x * f).collect() };
    let shift_up = |a: &Poly| -> Poly { std::iter::once(Complex64::default()).chain(a.iter().copied()).collect() };
    let deriv = |a: &Poly| -> Poly { a.iter().enumerate().skip(1).map(|(i, x)| x * i as f64).collect() };
    // p acts on P e^{−x²/2 + ikz} as −iħ/σ (P′ − xP) + ħk P
    let mom = |a: &Poly| -> Poly {
        let inner = add(&deriv(a), &scale(&shift_up(a), Complex64::new(-1.0, 0.0)));
        add(&scale(&inner, Complex64::new(0.0, -hbar / s)), &scale(a, Complex64::new(hbar * k, 0.0)))
    };
    let pos = |a: &Poly| -> Poly { add(&scale(a, Complex64::new(p.z0, 0.0)), &scale(&shift_up(a), Complex64::new(s, 0.0))) };
    let one: Poly = vec![Complex64::new(1.0, 0.0)];
    let a_psi = [
        scale(&mom(&mom(&one)), Complex64::new(-1.0 / (2.0 * m), 0.0)),
        scale(&pos(&one), Complex64::new(m * g, 0.0)),
        scale(&mom(&one), Complex64::new(t * g, 0.0)),
        scale(&one, Complex64::new(-m * g * g * t * t / 3.0, 0.0)),
    ]
    .iter()
    .fold(Vec::new(), |acc, q| add(&acc, q));
    let mut total = 0.0;
    for (i, a) in a_psi.iter().enumerate() {
        for (j, b) in a_psi.iter().enumerate() {
            let n = i + j;
            if n % 2 == 0 {
                let moment = (1..n).step_by(2).map(|x| x as f64).product::<f64>() / 2f64.powi((n / 2) as i32);
                total += (a.conj() * b).re * moment;
            }
        }
    }
    4.0 * t * t / (hbar * hbar) * total
}
