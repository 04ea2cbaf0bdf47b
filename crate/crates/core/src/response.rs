//! Nominal and perturbed normalized magnitude responses, white noise gain and
//! the worst-case boundary patterns.
//!
//! Magnitudes convert to dB with `20 log10`, powers (such as `rho_a`) with
//! `10 log10`.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{AngleGrid, ArrayGeometry, WeightVector};
use crate::linalg;

/// dB value written for a zero magnitude.
pub const DB_FLOOR: f64 = -200.0;

pub fn magnitude_db(v: f64) -> f64 {
    if v > 0.0 {
        (20.0 * v.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

pub fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

pub fn db_to_magnitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Values of the uncertainty bound at the beam axis and at the evaluated angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPair {
    pub eps_theta0: f64,
    pub eps_theta: f64,
}

impl EpsilonPair {
    pub fn new(eps_theta0: f64, eps_theta: f64) -> Result<Self> {
        for (what, v) in [("eps(theta0)", eps_theta0), ("eps(theta)", eps_theta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain {
                    what,
                    value: v,
                    domain: "finite and >= 0",
                });
            }
        }
        Ok(Self {
            eps_theta0,
            eps_theta,
        })
    }

    pub fn constant(eps: f64) -> Result<Self> {
        Self::new(eps, eps)
    }
}

/// Beam-axis quantities of a weight vector that every pattern evaluation reuses.
#[derive(Debug, Clone, Copy)]
pub struct BeamAxis {
    /// `w^H a(theta0)`
    pub output: Complex64,
    /// `||w||_2`
    pub weight_norm: f64,
}

impl BeamAxis {
    pub fn new(w: &[Complex64], a0: &[Complex64]) -> Result<Self> {
        let output = linalg::inner(w, a0);
        if output.norm() == 0.0 {
            return Err(Error::DegenerateWeight("zero response at the beam axis"));
        }
        Ok(Self {
            output,
            weight_norm: linalg::norm(w),
        })
    }

    /// `||w|| / |w^H a(theta0)|`
    pub fn ratio(&self) -> f64 {
        self.weight_norm / self.output.norm()
    }

    /// `|w^H a(theta0)| - eps0 ||w||`; positive iff the upper boundary is defined.
    pub fn margin(&self, eps0: f64) -> f64 {
        self.output.norm() - eps0 * self.weight_norm
    }

    pub fn wng(&self) -> f64 {
        self.output.norm_sqr() / (self.weight_norm * self.weight_norm)
    }
}

/// Worst-case `(v_u, v_l)` from the nominal level `v_a` and `r = ||w|| / |w^H a(theta0)|`.
pub fn upper_lower(v_a: f64, ratio: f64, eps: EpsilonPair) -> Result<(f64, f64)> {
    let denom = 1.0 - eps.eps_theta0 * ratio;
    if !(denom > 0.0) {
        return Err(Error::Infeasible {
            margin: denom / ratio,
        });
    }
    let spread = eps.eps_theta * ratio;
    let v_u = (v_a + spread) / denom;
    let v_l = ((v_a - spread) / (1.0 + eps.eps_theta0 * ratio)).max(0.0);
    Ok((v_u, v_l))
}

/// Nominal normalized magnitude response `|w^H a(theta)| / |w^H a(theta0)|`.
pub fn v_a(w: &WeightVector, geom: &ArrayGeometry, theta_deg: f64, theta0_deg: f64) -> Result<f64> {
    w.check_len(geom)?;
    let axis = BeamAxis::new(w.as_slice(), &geom.steering_vector(theta0_deg)?)?;
    if theta_deg == theta0_deg {
        return Ok(1.0);
    }
    let a = geom.steering_vector(theta_deg)?;
    Ok(linalg::inner(w.as_slice(), &a).norm() / axis.output.norm())
}

/// Actual response with a perturbed manifold `b(theta) = a(theta) + delta(theta)`,
/// normalised by the perturbed beam-axis output.
pub fn v_b<F>(
    w: &WeightVector,
    geom: &ArrayGeometry,
    theta_deg: f64,
    theta0_deg: f64,
    delta: F,
) -> Result<f64>
where
    F: Fn(f64) -> Vec<Complex64>,
{
    w.check_len(geom)?;
    let perturbed = |t: f64| -> Result<Vec<Complex64>> {
        let a = geom.steering_vector(t)?;
        let d = delta(t);
        if d.len() != a.len() {
            return Err(Error::Dimension {
                expected: a.len(),
                got: d.len(),
            });
        }
        Ok(a.iter().zip(&d).map(|(x, y)| x + y).collect())
    };
    let b0 = perturbed(theta0_deg)?;
    let out0 = linalg::inner(w.as_slice(), &b0).norm();
    if out0 == 0.0 {
        return Err(Error::DegenerateWeight("zero perturbed response at the beam axis"));
    }
    let b = perturbed(theta_deg)?;
    Ok(linalg::inner(w.as_slice(), &b).norm() / out0)
}

/// Worst-case upper and lower boundaries `(v_u, v_l)` at `theta`.
pub fn bounds(
    w: &WeightVector,
    geom: &ArrayGeometry,
    theta_deg: f64,
    theta0_deg: f64,
    eps: EpsilonPair,
) -> Result<(f64, f64)> {
    w.check_len(geom)?;
    let a0 = geom.steering_vector(theta0_deg)?;
    let axis = BeamAxis::new(w.as_slice(), &a0)?;
    let va = linalg::inner(w.as_slice(), &geom.steering_vector(theta_deg)?).norm() / axis.output.norm();
    upper_lower(va, axis.ratio(), eps)
}

/// `|w^H a(theta0)| - eps(theta0) ||w|| > 0`
pub fn feasibility(w: &WeightVector, geom: &ArrayGeometry, theta0_deg: f64, eps_theta0: f64) -> Result<bool> {
    w.check_len(geom)?;
    let a0 = geom.steering_vector(theta0_deg)?;
    let out = linalg::inner(w.as_slice(), &a0).norm();
    Ok(out - eps_theta0 * w.norm() > 0.0)
}

/// White noise gain `|w^H a(theta0)|^2 / ||w||^2`.
pub fn wng(w: &WeightVector, geom: &ArrayGeometry, theta0_deg: f64) -> Result<f64> {
    w.check_len(geom)?;
    let a0 = geom.steering_vector(theta0_deg)?;
    Ok(linalg::inner(w.as_slice(), &a0).norm_sqr() / linalg::norm_sqr(w.as_slice()))
}

/// `V_a`, `V_u` and `V_l` over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedResponse {
    pub theta_deg: Vec<f64>,
    pub v_a: Vec<f64>,
    pub v_u: Vec<f64>,
    pub v_l: Vec<f64>,
}

impl BoundedResponse {
    pub fn len(&self) -> usize {
        self.theta_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta_deg.is_empty()
    }

    /// CSV with columns `theta_deg, v_a_db, v_u_db, v_l_db`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta_deg,v_a_db,v_u_db,v_l_db")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.4},{:.8},{:.8},{:.8}",
                self.theta_deg[i],
                magnitude_db(self.v_a[i]),
                magnitude_db(self.v_u[i]),
                magnitude_db(self.v_l[i])
            )?;
        }
        Ok(())
    }
}

/// Pre-computed steering vectors and uncertainty bounds over an angle grid.
#[derive(Debug, Clone)]
pub struct PatternEvaluator {
    grid: AngleGrid,
    steering: Vec<Vec<Complex64>>,
    eps: Vec<f64>,
}

impl PatternEvaluator {
    /// `eps` holds the uncertainty bound at every grid angle.
    pub fn new(geom: &ArrayGeometry, grid: &AngleGrid, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: eps.len(),
            });
        }
        if let Some(&bad) = eps.iter().find(|e| !(**e >= 0.0) || !e.is_finite()) {
            return Err(Error::Domain {
                what: "eps",
                value: bad,
                domain: "finite and >= 0",
            });
        }
        Ok(Self {
            grid: grid.clone(),
            steering: geom.steering_table(grid)?,
            eps,
        })
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn steering(&self, index: usize) -> &[Complex64] {
        &self.steering[index]
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn eps_theta0(&self) -> f64 {
        self.eps[self.grid.theta0_index()]
    }

    pub fn beam_axis(&self, w: &[Complex64]) -> Result<BeamAxis> {
        BeamAxis::new(w, &self.steering[self.grid.theta0_index()])
    }

    /// Nominal normalized response at every grid angle.
    pub fn nominal(&self, w: &[Complex64]) -> Result<Vec<f64>> {
        let axis = self.beam_axis(w)?;
        let out0 = axis.output.norm();
        Ok(self
            .steering
            .iter()
            .map(|a| linalg::inner(w, a).norm() / out0)
            .collect())
    }

    pub fn evaluate(&self, w: &[Complex64]) -> Result<BoundedResponse> {
        let axis = self.beam_axis(w)?;
        let ratio = axis.ratio();
        let eps0 = self.eps_theta0();
        if axis.margin(eps0) <= 0.0 {
            return Err(Error::Infeasible {
                margin: axis.margin(eps0),
            });
        }
        let v_a = self.nominal(w)?;
        let mut v_u = Vec::with_capacity(v_a.len());
        let mut v_l = Vec::with_capacity(v_a.len());
        for (i, &va) in v_a.iter().enumerate() {
            let (u, l) = upper_lower(
                va,
                ratio,
                EpsilonPair {
                    eps_theta0: eps0,
                    eps_theta: self.eps[i],
                },
            )?;
            v_u.push(u);
            v_l.push(l);
        }
        Ok(BoundedResponse {
            theta_deg: self.grid.angles().to_vec(),
            v_a,
            v_u,
            v_l,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{chebyshev_taper, steered_taper, uniform_weights};

    fn ula16() -> ArrayGeometry {
        ArrayGeometry::ula(16, 0.5).unwrap()
    }

    #[test]
    fn v_a_is_one_on_axis_and_zero_at_nulls() {
        let g = ula16();
        let w = uniform_weights(&g, 10.0).unwrap();
        assert_eq!(v_a(&w, &g, 10.0, 10.0).unwrap(), 1.0);
        // sin(theta_null) = sin(theta0) + m / (N d)
        let s0 = 10f64.to_radians().sin();
        for m in [1.0, 2.0, -3.0] {
            let t = (s0 + m / 8.0).asin().to_degrees();
            assert!(v_a(&w, &g, t, 10.0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn v_a_scale_invariant() {
        let g = ula16();
        let w = uniform_weights(&g, -30.0).unwrap();
        let c = Complex64::new(-0.3, 2.1);
        let ws = w.scaled(c).unwrap();
        let x = v_a(&w, &g, 41.0, -30.0).unwrap();
        let y = v_a(&ws, &g, 41.0, -30.0).unwrap();
        assert!((x - y).abs() <= 1e-12 * x.abs());
    }

    #[test]
    fn v_b_reduces_to_v_a() {
        let g = ula16();
        let w = steered_taper(&g, &chebyshev_taper(16, 25.0).unwrap(), -20.0).unwrap();
        let zero = |_t: f64| vec![Complex64::new(0.0, 0.0); 16];
        let radial = |t: f64| {
            let a = g.steering_vector(t).unwrap();
            let n = linalg::norm(&a);
            a.iter().map(|x| x * (0.1 / n)).collect::<Vec<_>>()
        };
        for t in [-60.0, 5.0, 33.0] {
            let va = v_a(&w, &g, t, -20.0).unwrap();
            assert!((v_b(&w, &g, t, -20.0, zero).unwrap() - va).abs() < 1e-14);
            assert!((v_b(&w, &g, t, -20.0, radial).unwrap() - va).abs() < 1e-12);
        }
    }

    #[test]
    fn bounds_reduce_without_uncertainty() {
        let g = ula16();
        let w = uniform_weights(&g, 0.0).unwrap();
        let va = v_a(&w, &g, 20.0, 0.0).unwrap();
        let (u, l) = bounds(&w, &g, 20.0, 0.0, EpsilonPair::constant(0.0).unwrap()).unwrap();
        assert_eq!(u, va);
        assert_eq!(l, va);
    }

    #[test]
    fn bounds_on_axis_for_matched_weight() {
        // r = 1/sqrt(16) = 0.25, eps = 0.1: (1 + 0.025) / (1 - 0.025)
        let g = ula16();
        let w = uniform_weights(&g, 0.0).unwrap();
        let (u, _) = bounds(&w, &g, 0.0, 0.0, EpsilonPair::constant(0.1).unwrap()).unwrap();
        assert!((u - 1.025 / 0.975).abs() < 1e-12);
        assert!((u - 1.05128).abs() < 1e-5);
    }

    #[test]
    fn infeasible_bounds_are_an_error() {
        let g = ula16();
        let w = uniform_weights(&g, 0.0).unwrap();
        let err = bounds(&w, &g, 10.0, 0.0, EpsilonPair::constant(4.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn feasibility_cases() {
        let g = ula16();
        let w = uniform_weights(&g, 0.0).unwrap();
        assert!(feasibility(&w, &g, 0.0, 0.0).unwrap());
        assert!(feasibility(&w, &g, 0.0, 0.1).unwrap()); // 4 - 0.4 > 0
        // w orthogonal to a(0): first null of the array steered to 7.1808 deg.
        let t = (1.0f64 / 8.0).asin().to_degrees();
        let w_orth = uniform_weights(&g, t).unwrap();
        assert!(!feasibility(&w_orth, &g, 0.0, 1e-9).unwrap());
    }

    #[test]
    fn wng_cases() {
        let g = ula16();
        let w = uniform_weights(&g, 0.0).unwrap();
        assert!((wng(&w, &g, 0.0).unwrap() - 16.0).abs() < 1e-12);
        let g12 = ArrayGeometry::ula(12, 0.5).unwrap();
        let w = steered_taper(&g12, &chebyshev_taper(12, 20.0).unwrap(), 20.0).unwrap();
        let value = wng(&w, &g12, 20.0).unwrap();
        // Direct formula on the real taper: (sum t)^2 / sum t^2.
        let t = chebyshev_taper(12, 20.0).unwrap();
        let oracle = t.iter().sum::<f64>().powi(2) / t.iter().map(|x| x * x).sum::<f64>();
        assert!((value - oracle).abs() < 1e-12);
        assert!(value < 12.0);
    }

    #[test]
    fn pattern_csv_header_and_floor() {
        let p = BoundedResponse {
            theta_deg: vec![0.0],
            v_a: vec![0.0],
            v_u: vec![1.0],
            v_l: vec![0.0],
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "theta_deg,v_a_db,v_u_db,v_l_db\n0.0000,-200.00000000,0.00000000,-200.00000000\n");
    }

    #[test]
    fn db_conventions_round_trip() {
        for db in [-42.7746, -25.0, 0.0, 3.0] {
            assert!((magnitude_db(db_to_magnitude(db)) - db).abs() < 1e-12);
            assert!((power_db(db_to_power(db)) - db).abs() < 1e-12);
        }
        // A magnitude squared is a power with the same dB value.
        let v = db_to_magnitude(-25.0);
        assert!((power_db(v * v) + 25.0).abs() < 1e-12);
    }
}
