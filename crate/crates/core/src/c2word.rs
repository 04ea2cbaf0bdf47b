//! Orthogonal weight decomposition against `a(theta_k)` and the circle of
//! combining coefficients that realise a prescribed nominal level.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, WeightVector};
use crate::linalg;

/// `w_prev = w_perp + w_par` with `w_par` the projection onto `a(theta_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub w_perp: Vec<Complex64>,
    pub w_par: Vec<Complex64>,
    pub theta_k: f64,
    pub a_k: Vec<Complex64>,
}

impl Decomposition {
    /// `|w_par|` relative to the full weight; zero means `theta_k` cannot be steered.
    fn par_is_zero(&self) -> bool {
        let total = linalg::norm(&self.w_perp) + linalg::norm(&self.w_par);
        linalg::norm(&self.w_par) <= 1e-14 * total
    }

    /// Scalars entering the level constraint: `(w_perp^H a0, w_par^H a0, w_par^H a_k)`.
    pub fn projections(&self, a0: &[Complex64]) -> (Complex64, Complex64, Complex64) {
        (
            linalg::inner(&self.w_perp, a0),
            linalg::inner(&self.w_par, a0),
            linalg::inner(&self.w_par, &self.a_k),
        )
    }
}

/// Locus `|beta - center| = radius` of coefficients meeting the level constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaCircle {
    pub center: Complex64,
    pub radius: f64,
    pub b22: f64,
}

impl BetaCircle {
    pub fn point(&self, phi: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, phi)
    }
}

pub fn decompose_with(w_prev: &[Complex64], a_k: Vec<Complex64>, theta_k: f64) -> Result<Decomposition> {
    let ak_sq = linalg::norm_sqr(&a_k);
    if ak_sq == 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "steering vector vanishes at {theta_k} deg"
        )));
    }
    let coef = linalg::inner(&a_k, w_prev) / ak_sq;
    let w_par = linalg::scale(&a_k, coef);
    let w_perp = w_prev.iter().zip(&w_par).map(|(w, p)| w - p).collect();
    Ok(Decomposition {
        w_perp,
        w_par,
        theta_k,
        a_k,
    })
}

pub fn decompose(w_prev: &WeightVector, geom: &ArrayGeometry, theta_k: f64) -> Result<Decomposition> {
    w_prev.check_len(geom)?;
    decompose_with(w_prev.as_slice(), geom.steering_vector(theta_k)?, theta_k)
}

pub(crate) fn circle_from(dec: &Decomposition, a0: &[Complex64], rho_a: f64) -> Result<BetaCircle> {
    if !(rho_a >= 0.0) || !rho_a.is_finite() {
        return Err(Error::Domain {
            what: "rho_a",
            value: rho_a,
            domain: "finite and >= 0",
        });
    }
    if dec.par_is_zero() {
        return Err(Error::CannotControl);
    }
    let (u, v, p) = dec.projections(a0);
    let b22 = p.norm_sqr() - rho_a * v.norm_sqr();
    let scale = p.norm_sqr() + rho_a * v.norm_sqr();
    if b22.abs() < 1e-12 * scale {
        return Err(Error::DegenerateLevel { b22 });
    }
    // The response at theta_k is conj(beta) p, so the circle in conj(beta)
    // has centre rho u conj(v) / b22; beta itself lives on the mirror image.
    let center = u.conj() * v * (rho_a / b22);
    let radius = rho_a.sqrt() * u.norm() * p.norm() / b22.abs();
    Ok(BetaCircle {
        center,
        radius,
        b22,
    })
}

pub fn beta_circle(
    dec: &Decomposition,
    geom: &ArrayGeometry,
    theta0: f64,
    rho_a: f64,
) -> Result<BetaCircle> {
    circle_from(dec, &geom.steering_vector(theta0)?, rho_a)
}

/// Coefficient on the circle with the largest white noise gain.
///
/// WNG grows with `|beta|` along the circle when its centre is off the
/// origin, so the optimum is the far point on the ray through the centre.
/// A circle centred on the origin has constant WNG and any point will do.
pub fn select_beta(circle: &BetaCircle) -> Complex64 {
    let c = circle.center.norm();
    if c > 0.0 {
        circle.center * (1.0 + circle.radius / c)
    } else {
        Complex64::new(circle.radius, 0.0)
    }
}

/// `w_perp + beta w_par`
pub fn update_weight(dec: &Decomposition, beta: Complex64) -> Result<WeightVector> {
    let w = linalg::axpy(&dec.w_perp, beta, &dec.w_par);
    let n = linalg::norm(&w);
    let scale = linalg::norm(&dec.w_perp) + linalg::norm(&dec.w_par);
    if !(n > 1e-15 * scale) {
        return Err(Error::DegenerateWeight("updated weight vanishes"));
    }
    WeightVector::new(w)
}
