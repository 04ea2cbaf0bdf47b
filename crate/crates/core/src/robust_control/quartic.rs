//! Closed-form roots of a real quartic (Ferrari / Descartes chain).

use num_complex::Complex64;

use crate::error::{Error, Result};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn horner(coeffs: &[f64; 5], x: Complex64) -> (Complex64, Complex64) {
    let mut p = c(coeffs[0]);
    let mut dp = c(0.0);
    for &k in &coeffs[1..] {
        dp = dp * x + p;
        p = p * x + k;
    }
    (p, dp)
}

/// Roots of `a4 x^4 + a3 x^3 + a2 x^2 + a1 x + a0`.
///
/// The closed form is followed by a few guarded Newton steps per root, which
/// only ever lower the residual.
pub fn solve_quartic(a4: f64, a3: f64, a2: f64, a1: f64, a0: f64) -> Result<[Complex64; 4]> {
    let all = [a4, a3, a2, a1, a0];
    if all.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain {
            what: "quartic coefficient",
            value: all.iter().copied().find(|x| !x.is_finite()).unwrap_or(f64::NAN),
            domain: "finite",
        });
    }
    if a4 == 0.0 {
        return Err(Error::NotQuartic);
    }
    // Roots do not change under a common scale; keep magnitudes near one.
    let m = all.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let [a, b, cc, d, e] = all.map(|x| x / m);
    let roots = ferrari(a, b, cc, d, e);
    let coeffs = [a, b, cc, d, e];
    Ok(roots.map(|r| polish(&coeffs, r)))
}

fn ferrari(a: f64, b: f64, cc: f64, d: f64, e: f64) -> [Complex64; 4] {
    let p = (8.0 * a * cc - 3.0 * b * b) / (8.0 * a * a);
    let q = (b * b * b - 4.0 * a * b * cc + 8.0 * a * a * d) / (8.0 * a * a * a);
    let z0 = cc * cc - 3.0 * b * d + 12.0 * a * e;
    let z1 = 2.0 * cc.powi(3) - 9.0 * b * cc * d + 27.0 * b * b * e + 27.0 * a * d * d
        - 72.0 * a * cc * e;

    let disc = (c(z1 * z1 - 4.0 * z0.powi(3))).sqrt();
    // Take the sign that avoids cancellation.
    let inner = if (c(z1) + disc).norm() >= (c(z1) - disc).norm() {
        (c(z1) + disc) / 2.0
    } else {
        (c(z1) - disc) / 2.0
    };
    let q0 = inner.cbrt();
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);

    let mut s = c(0.0);
    for k in 0..3 {
        let qk = q0 * omega.powu(k);
        let term = if qk.norm() == 0.0 { c(0.0) } else { qk + c(z0) / qk };
        let sk = 0.5 * (c(-2.0 * p / 3.0) + term / (3.0 * a)).sqrt();
        if sk.norm() > s.norm() {
            s = sk;
        }
    }

    let shift = c(-b / (4.0 * a));
    let scale = 1.0 + p.abs().sqrt() + q.abs().cbrt();
    let q_over_s = if s.norm() <= 1e-12 * scale { c(0.0) } else { c(q) / s };
    let r1 = (-4.0 * s * s - 2.0 * p + q_over_s).sqrt() * 0.5;
    let r2 = (-4.0 * s * s - 2.0 * p - q_over_s).sqrt() * 0.5;
    [shift - s + r1, shift - s - r1, shift + s + r2, shift + s - r2]
}

fn polish(coeffs: &[f64; 5], mut x: Complex64) -> Complex64 {
    let (mut fx, _) = horner(coeffs, x);
    for _ in 0..8 {
        let (_, dfx) = horner(coeffs, x);
        if dfx.norm() == 0.0 {
            break;
        }
        let cand = x - fx / dfx;
        let (fc, _) = horner(coeffs, cand);
        if fc.norm() < fx.norm() {
            x = cand;
            fx = fc;
        } else {
            break;
        }
    }
    x
}

/// `a4 x^4 + ... + a0` at `x`.
pub fn eval_poly(coeffs: &[f64; 5], x: Complex64) -> Complex64 {
    horner(coeffs, x).0
}
