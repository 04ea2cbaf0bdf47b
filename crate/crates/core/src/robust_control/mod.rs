//! Robust one-point response control: choose the nominal level `rho_a` at
//! `theta_k` so that the worst-case upper boundary equals the desired level,
//! then realise it with the C2-WORD update.

mod quartic;

pub use quartic::{eval_poly, solve_quartic};

use num_complex::Complex64;

use crate::c2word::{self, Decomposition};
use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, WeightVector};
use crate::linalg;
use crate::response::{self, BeamAxis, EpsilonPair};

/// Relative slack on the imaginary part of a root accepted as real.
pub const REAL_ROOT_TOL: f64 = 1e-7;
/// Relative residual of the unsquared equation for a root to be kept.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Required agreement of `V_u(theta_k)` with `V_d` after the update, in dB.
pub const EXACTNESS_DB: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRequest {
    pub theta0: f64,
    pub theta_k: f64,
    /// desired upper level at `theta_k`, linear magnitude
    pub v_d: f64,
    pub eps0: f64,
    pub epsk: f64,
    pub w_prev: WeightVector,
}

impl ControlRequest {
    fn check(&self) -> Result<()> {
        if !(self.v_d > 0.0) || !self.v_d.is_finite() {
            return Err(Error::Domain {
                what: "v_d",
                value: self.v_d,
                domain: "finite and > 0",
            });
        }
        EpsilonPair::new(self.eps0, self.epsk)?;
        if (self.theta_k - self.theta0).abs() < 1e-12 {
            return Err(Error::InvalidRequest("theta_k must differ from theta0".into()));
        }
        Ok(())
    }
}

/// Coefficients of the level equation.
///
/// `A..E` define the unsquared form `A rho^2 + B rho^1.5 + C rho + D rho^0.5 + E = 0`;
/// `a4..a0` the quartic obtained by squaring it.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub a4: f64,
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub A: f64,
    pub B: f64,
    pub C: f64,
    pub D: f64,
    pub E: f64,
}

impl QuarticCoeffs {
    #[allow(non_snake_case)]
    fn from_abcde(A: f64, B: f64, C: f64, D: f64, E: f64) -> Self {
        Self {
            a4: A * A,
            a3: 2.0 * A * C - B * B,
            a2: 2.0 * A * E - 2.0 * B * D + C * C,
            a1: 2.0 * C * E - D * D,
            a0: E * E,
            A,
            B,
            C,
            D,
            E,
        }
    }

    pub fn expanded(&self) -> [f64; 5] {
        [self.a4, self.a3, self.a2, self.a1, self.a0]
    }

    /// Unsquared form at `s = sqrt(rho)`, with the sum of term magnitudes as its scale.
    pub fn unsquared(&self, s: f64) -> (f64, f64) {
        let terms = [
            self.A * s.powi(4),
            self.B * s.powi(3),
            self.C * s * s,
            self.D * s,
            self.E,
        ];
        (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
    }

    fn unsquared_derivative(&self, s: f64) -> f64 {
        4.0 * self.A * s.powi(3) + 3.0 * self.B * s * s + 2.0 * self.C * s + self.D
    }
}

/// `V_d eps(theta0) + eps(theta_k)`
pub fn gamma(v_d: f64, eps0: f64, epsk: f64) -> f64 {
    v_d * eps0 + epsk
}

pub(crate) fn coeffs_from(dec: &Decomposition, a0: &[Complex64], v_d: f64, eps0: f64, epsk: f64) -> QuarticCoeffs {
    let (u, v, p) = dec.projections(a0);
    let (u, v, p) = (u.norm(), v.norm(), p.norm());
    let n_perp_sq = linalg::norm_sqr(&dec.w_perp);
    let n_par_sq = linalg::norm_sqr(&dec.w_par);
    let g2 = gamma(v_d, eps0, epsk).powi(2);
    let t = p * p - g2 * n_par_sq;
    let (u2, v2, p2) = (u * u, v * v, p * p);

    #[allow(non_snake_case)]
    let (A, B, C, D, E) = (
        t * u2 * v2 - g2 * n_perp_sq * v2 * v2,
        2.0 * (t - v_d * v * p) * u2 * v * p,
        v_d * v_d * p2 * u2 * v2 + t * p2 * u2 - 4.0 * v_d * p2 * p * v * u2
            + 2.0 * g2 * n_perp_sq * p2 * v2,
        2.0 * v_d * p2 * p * u2 * (v_d * v - p),
        p2 * p2 * (v_d * v_d * u2 - g2 * n_perp_sq),
    );
    QuarticCoeffs::from_abcde(A, B, C, D, E)
}

pub fn quartic_coeffs(req: &ControlRequest, dec: &Decomposition, geom: &ArrayGeometry) -> Result<QuarticCoeffs> {
    req.check()?;
    Ok(coeffs_from(dec, &geom.steering_vector(req.theta0)?, req.v_d, req.eps0, req.epsk))
}

/// Real roots in `[0, V_d^2]` that solve the unsquared equation, largest first.
///
/// Squaring admits the roots of the mirrored equation in `-sqrt(rho)`; those
/// fail the residual test and are dropped. The closed end of the interval is
/// kept because `rho = V_d^2` is the exact solution without uncertainty.
pub fn admissible_roots(roots: &[Complex64; 4], v_d: f64, coeffs: &QuarticCoeffs) -> Vec<f64> {
    let hi = v_d * v_d;
    let mut out: Vec<f64> = Vec::new();
    for r in roots {
        if r.im.abs() > REAL_ROOT_TOL * (1.0 + r.re.abs()) {
            continue;
        }
        let rho = r.re;
        if rho < -1e-12 * hi || rho > hi * (1.0 + 1e-9) {
            continue;
        }
        let mut s = rho.max(0.0).sqrt();
        let (g, scale) = coeffs.unsquared(s);
        if scale > 0.0 && g.abs() > RESIDUAL_TOL * scale {
            continue;
        }
        // Refine on the unsquared equation, which has simple roots.
        let mut best = g.abs();
        for _ in 0..6 {
            let d = coeffs.unsquared_derivative(s);
            if d == 0.0 {
                break;
            }
            let cand = s - coeffs.unsquared(s).0 / d;
            let gc = coeffs.unsquared(cand).0.abs();
            if cand >= 0.0 && gc < best {
                s = cand;
                best = gc;
            } else {
                break;
            }
        }
        let rho = (s * s).min(hi);
        if !out.iter().any(|x| (x - rho).abs() <= 1e-9 * hi) {
            out.push(rho);
        }
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Largest admissible root.
pub fn select_root(roots: &[Complex64; 4], v_d: f64, coeffs: &QuarticCoeffs) -> Option<f64> {
    admissible_roots(roots, v_d, coeffs).first().copied()
}

pub(crate) fn min_vd_from(dec: &Decomposition, a0: &[Complex64], eps0: f64, epsk: f64) -> Result<f64> {
    let n_perp = linalg::norm(&dec.w_perp);
    let denom = linalg::inner(&dec.w_perp, a0).norm() - eps0 * n_perp;
    if !(denom > 0.0) {
        return Err(Error::Infeasible { margin: denom });
    }
    Ok(epsk * n_perp / denom)
}

/// Smallest upper level reachable at `theta_k` from `w_prev`.
pub fn min_vd(req: &ControlRequest, geom: &ArrayGeometry) -> Result<f64> {
    let dec = c2word::decompose(&req.w_prev, geom, req.theta_k)?;
    min_vd_from(&dec, &geom.steering_vector(req.theta0)?, req.eps0, req.epsk)
}

/// Weight-independent floor `eps(theta_k) / (||a(theta0)|| - eps(theta0))`.
pub fn chi(geom: &ArrayGeometry, theta0: f64, eps0: f64, epsk: f64) -> Result<f64> {
    let na = geom.steering_norm(theta0)?;
    if !(na > eps0) {
        return Err(Error::InfeasibleFloor {
            eps0,
            steering_norm: na,
        });
    }
    Ok(epsk / (na - eps0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutcome {
    pub weights: WeightVector,
    pub rho_a: f64,
    pub beta: Complex64,
    /// `V_u(theta_k)` realised by `weights`, linear
    pub v_u: f64,
}

/// Control on pre-computed steering vectors.
pub(crate) fn control_with(
    w_prev: &[Complex64],
    a0: &[Complex64],
    a_k: Vec<Complex64>,
    theta_k: f64,
    v_d: f64,
    eps0: f64,
    epsk: f64,
) -> Result<ControlOutcome> {
    let axis = BeamAxis::new(w_prev, a0)?;
    if axis.margin(eps0) <= 0.0 {
        return Err(Error::Infeasible {
            margin: axis.margin(eps0),
        });
    }
    let dec = c2word::decompose_with(w_prev, a_k, theta_k)?;
    let floor = min_vd_from(&dec, a0, eps0, epsk);
    if let Ok(f) = floor {
        if v_d < f {
            return Err(Error::UnreachableLevel {
                v_d_db: response::magnitude_db(v_d),
                min_vd_db: response::magnitude_db(f),
            });
        }
    }
    let unreachable = |floor: &Result<f64>| match floor {
        Ok(f) => Error::UnreachableLevel {
            v_d_db: response::magnitude_db(v_d),
            min_vd_db: response::magnitude_db(*f),
        },
        Err(e) => e.clone(),
    };

    let coeffs = coeffs_from(&dec, a0, v_d, eps0, epsk);
    let k = coeffs.expanded();
    let roots = match solve_quartic(k[0], k[1], k[2], k[3], k[4]) {
        Ok(r) => r,
        Err(Error::NotQuartic) => return Err(unreachable(&floor)),
        Err(e) => return Err(e),
    };
    let eps = EpsilonPair { eps_theta0: eps0, eps_theta: epsk };
    let vd_db = response::magnitude_db(v_d);
    // Level error in dB of the weight realised from `rho`.
    let realise = |rho: f64| -> Result<(WeightVector, Complex64, f64)> {
        let circle = c2word::circle_from(&dec, a0, rho)?;
        let beta = c2word::select_beta(&circle);
        let w = c2word::update_weight(&dec, beta)?;
        let axis = BeamAxis::new(w.as_slice(), a0)?;
        let va = linalg::inner(w.as_slice(), &dec.a_k).norm() / axis.output.norm();
        let (vu, _) = response::upper_lower(va, axis.ratio(), eps)?;
        Ok((w, beta, vu))
    };
    let mut last_err = None;
    for rho in admissible_roots(&roots, v_d, &coeffs) {
        let (mut w, mut beta, mut vu) = match realise(rho) {
            Ok(x) => x,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut rho = rho;
        let mut err = response::magnitude_db(vu) - vd_db;
        // The unsquared equation has a double root when eps vanishes, which
        // limits the closed form to about half precision; a few secant steps
        // on the realised level recover the rest.
        let mut prev = (rho * (1.0 + 1e-7), f64::NAN);
        if let Ok((_, _, v)) = realise(prev.0) {
            prev.1 = response::magnitude_db(v) - vd_db;
        }
        for _ in 0..8 {
            if err.abs() < 1e-12 || !prev.1.is_finite() || prev.1 == err {
                break;
            }
            let cand = rho - err * (rho - prev.0) / (err - prev.1);
            if !(cand > 0.0) {
                break;
            }
            let Ok((wc, bc, vc)) = realise(cand) else { break };
            let ec = response::magnitude_db(vc) - vd_db;
            if ec.abs() >= err.abs() {
                break;
            }
            prev = (rho, err);
            (rho, w, beta, vu, err) = (cand, wc, bc, vc, ec);
        }
        if err.abs() <= EXACTNESS_DB {
            return Ok(ControlOutcome {
                weights: w,
                rho_a: rho,
                beta,
                v_u: vu,
            });
        }
    }
    match last_err {
        Some(e @ Error::DegenerateLevel { .. }) => Err(e),
        _ => Err(unreachable(&floor)),
    }
}

/// One robust control step: returns `w_k` with `V_u(theta_k) = V_d`.
pub fn control_point(req: &ControlRequest, geom: &ArrayGeometry) -> Result<ControlOutcome> {
    req.check()?;
    req.w_prev.check_len(geom)?;
    let a0 = geom.steering_vector(req.theta0)?;
    let a_k = geom.steering_vector(req.theta_k)?;
    control_with(req.w_prev.as_slice(), &a0, a_k, req.theta_k, req.v_d, req.eps0, req.epsk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chebyshev_taper, steered_taper, uniform_weights};
    use crate::response::{db_to_magnitude, magnitude_db, power_db};
    use proptest::prelude::*;

    fn nonuniform_array() -> ArrayGeometry {
        ArrayGeometry::linear(&[0.0, 0.45, 1.0, 1.55, 2.10, 2.60, 3.05, 3.65, 4.10, 4.55, 5.05, 5.50])
            .unwrap()
    }

    fn req(w: WeightVector, theta0: f64, theta_k: f64, vd_db: f64, eps: f64) -> ControlRequest {
        ControlRequest {
            theta0,
            theta_k,
            v_d: db_to_magnitude(vd_db),
            eps0: eps,
            epsk: eps,
            w_prev: w,
        }
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(0.3, 0.0, 0.0), 0.0);
        assert!((gamma(db_to_magnitude(-25.0), 0.16, 0.16) - 0.16900).abs() < 1e-5);
        assert!((gamma(0.1, 0.1, 0.2) - 0.21).abs() < 1e-15);
    }

    #[test]
    fn nominal_level_without_uncertainty() {
        let g = nonuniform_array();
        let r = req(uniform_weights(&g, -30.0).unwrap(), -30.0, 40.0, -25.0, 0.0);
        let dec = c2word::decompose(&r.w_prev, &g, 40.0).unwrap();
        let k = quartic_coeffs(&r, &dec, &g).unwrap();
        let a0 = g.steering_vector(-30.0).unwrap();
        let (u, _, p) = dec.projections(&a0);
        assert!((k.E - p.norm().powi(4) * r.v_d * r.v_d * u.norm_sqr()).abs() <= 1e-12 * k.E.abs());
        let out = control_point(&r, &g).unwrap();
        assert!((out.rho_a - r.v_d * r.v_d).abs() < 1e-12);
        let va = response::v_a(&out.weights, &g, 40.0, -30.0).unwrap();
        assert!((va - r.v_d).abs() < 1e-9);
    }

    #[test]
    fn expanded_identities() {
        let k = QuarticCoeffs::from_abcde(1.5, -2.0, 0.25, 3.0, -0.5);
        assert_eq!(k.a4, 2.25);
        assert_eq!(k.a3, 2.0 * 1.5 * 0.25 - 4.0);
        assert_eq!(k.a2, 2.0 * 1.5 * -0.5 - 2.0 * -2.0 * 3.0 + 0.0625);
        assert_eq!(k.a1, 2.0 * 0.25 * -0.5 - 9.0);
        assert_eq!(k.a0, 0.25);
    }

    #[test]
    fn single_point_on_nonuniform_array() {
        let g = nonuniform_array();
        let r = req(uniform_weights(&g, -30.0).unwrap(), -30.0, 40.0, -25.0, 0.16);
        let out = control_point(&r, &g).unwrap();
        assert!((power_db(out.rho_a) + 42.7746).abs() < 0.01, "{}", power_db(out.rho_a));
        assert!((out.beta.norm() - 0.077).abs() < 0.001);
        assert!(out.beta.arg().abs() < 1e-3);
        let eps = EpsilonPair::constant(0.16).unwrap();
        let (vu, _) = response::bounds(&out.weights, &g, 40.0, -30.0, eps).unwrap();
        assert!((magnitude_db(vu) + 25.0).abs() < 1e-6);
    }

    #[test]
    fn single_point_from_chebyshev() {
        let g = ArrayGeometry::ula(12, 0.5).unwrap();
        let w = steered_taper(&g, &chebyshev_taper(12, 20.0).unwrap(), 20.0).unwrap();
        let out = control_point(&req(w, 20.0, -23.0, -25.0, 0.1), &g).unwrap();
        assert!((power_db(out.rho_a) + 31.9987).abs() < 0.1);
        assert!((out.beta.norm() - 0.2506).abs() < 0.005);
    }

    #[test]
    fn floors() {
        let g = ArrayGeometry::ula(16, 0.5).unwrap();
        assert!((chi(&g, 0.0, 0.1, 0.1).unwrap() - 0.1 / 3.9).abs() < 1e-15);
        assert!((magnitude_db(chi(&g, 0.0, 0.1, 0.1).unwrap()) + 31.82).abs() < 0.01);
        assert_eq!(chi(&g, 0.0, 0.1, 0.0).unwrap(), 0.0);
        assert!(matches!(chi(&g, 0.0, 4.0, 0.1), Err(Error::InfeasibleFloor { .. })));

        let w = uniform_weights(&g, 0.0).unwrap();
        let r = req(w.clone(), 0.0, 20.0, -25.0, 0.1);
        let floor = min_vd(&r, &g).unwrap();
        // Direct substitution with w_perp computed here.
        let ak = g.steering_vector(20.0).unwrap();
        let a0 = g.steering_vector(0.0).unwrap();
        let coef = linalg::inner(&ak, w.as_slice()) / 16.0;
        let wp: Vec<Complex64> = w.as_slice().iter().zip(&ak).map(|(x, a)| x - a * coef).collect();
        let oracle = 0.1 * linalg::norm(&wp) / (linalg::inner(&wp, &a0).norm() - 0.1 * linalg::norm(&wp));
        assert!((floor - oracle).abs() <= 1e-13 * oracle);
        assert!(floor >= chi(&g, 0.0, 0.1, 0.1).unwrap());
        let r0 = ControlRequest { epsk: 0.0, ..r.clone() };
        assert_eq!(min_vd(&r0, &g).unwrap(), 0.0);

        let low = ControlRequest { v_d: floor * 0.9, ..r };
        assert!(matches!(control_point(&low, &g), Err(Error::UnreachableLevel { .. })));
    }

    #[test]
    fn request_validation() {
        let g = ArrayGeometry::ula(4, 0.5).unwrap();
        let w = uniform_weights(&g, 0.0).unwrap();
        assert!(control_point(&req(w.clone(), 0.0, 0.0, -20.0, 0.1), &g).is_err());
        let mut r = req(w.clone(), 0.0, 30.0, -20.0, 0.1);
        r.v_d = 0.0;
        assert!(matches!(control_point(&r, &g), Err(Error::Domain { .. })));
        let r = req(w, 0.0, 30.0, -20.0, 3.0);
        assert!(matches!(control_point(&r, &g), Err(Error::Infeasible { .. })));
    }

    fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn control_is_exact_and_residual_small(
            pert in complex_vec(10),
            theta0 in -50.0f64..50.0,
            off in 15.0f64..35.0,
            vd_db in -35.0f64..-15.0,
            eps in 0.0f64..0.2,
        ) {
            let g = ArrayGeometry::ula(10, 0.5).unwrap();
            let a0 = g.steering_vector(theta0).unwrap();
            let w: Vec<Complex64> = a0.iter().zip(&pert).map(|(a, p)| a + p * 0.3).collect();
            let theta_k = if theta0 + off <= 90.0 { theta0 + off } else { theta0 - off };
            let r = req(WeightVector::new(w).unwrap(), theta0, theta_k, vd_db, eps);
            let out = match control_point(&r, &g) {
                Ok(o) => o,
                Err(e) => { prop_assert!(e.is_numeric_infeasibility()); return Ok(()); }
            };
            let pair = EpsilonPair::constant(eps).unwrap();
            let (vu, _) = response::bounds(&out.weights, &g, theta_k, theta0, pair).unwrap();
            prop_assert!((magnitude_db(vu) - vd_db).abs() < 1e-6);

            let dec = c2word::decompose(&r.w_prev, &g, theta_k).unwrap();
            let k = quartic_coeffs(&r, &dec, &g).unwrap();
            let (res, _) = k.unsquared(out.rho_a.sqrt());
            let maxc = [k.A, k.B, k.C, k.D, k.E].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(res.abs() <= 1e-7 * maxc);

            let floor = min_vd(&r, &g);
            if let Ok(f) = floor {
                prop_assert!(f >= chi(&g, theta0, eps, eps).unwrap() * (1.0 - 1e-12));
            }
        }

        #[test]
        fn zero_uncertainty_sets_nominal_level(
            pert in complex_vec(8),
            theta0 in -40.0f64..40.0,
            off in 20.0f64..45.0,
            vd_db in -40.0f64..-10.0,
        ) {
            let g = ArrayGeometry::ula(8, 0.5).unwrap();
            let a0 = g.steering_vector(theta0).unwrap();
            let w: Vec<Complex64> = a0.iter().zip(&pert).map(|(a, p)| a + p * 0.3).collect();
            let theta_k = if theta0 + off <= 90.0 { theta0 + off } else { theta0 - off };
            let r = req(WeightVector::new(w).unwrap(), theta0, theta_k, vd_db, 0.0);
            if let Ok(out) = control_point(&r, &g) {
                let va = response::v_a(&out.weights, &g, theta_k, theta0).unwrap();
                prop_assert!((va - r.v_d).abs() <= 1e-9, "va {} vd {} rho {} vd2 {}", va, r.v_d, out.rho_a, r.v_d * r.v_d);
            }
        }
    }
}
