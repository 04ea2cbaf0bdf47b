//! Norm bounds `eps(theta)` on steering-vector mismatch.
//!
//! Each structured model writes the actual manifold as `b = C(theta) a` so
//! that `Delta = E a` with `E = C - I` and `||Delta|| <= ||a|| ||E||`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_angle, AngleGrid, ArrayGeometry};

/// A closed interval `[lo, hi]`.
pub type Interval = [f64; 2];

/// One interval shared by every non-reference element, or one per element `2..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Intervals {
    Uniform(Interval),
    PerElement(Vec<Interval>),
}

impl Intervals {
    /// Intervals for elements `2..=n`.
    pub fn expand(&self, n: usize) -> Result<Vec<Interval>> {
        let out = match self {
            Intervals::Uniform(iv) => vec![*iv; n - 1],
            Intervals::PerElement(v) => {
                if v.len() != n - 1 {
                    return Err(Error::InvalidModel(format!(
                        "expected {} intervals (elements 2..={n}), got {}",
                        n - 1,
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        for iv in &out {
            if !iv[0].is_finite() || !iv[1].is_finite() || iv[0] > iv[1] {
                return Err(Error::InvalidModel(format!("bad interval [{}, {}]", iv[0], iv[1])));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsTable {
    pub angles_deg: Vec<f64>,
    pub epsilon: Vec<f64>,
}

/// Gain and phase (radians) intervals of elements `2..=N`; element 1 is the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPhaseModel {
    pub gain: Intervals,
    pub phase_rad: Intervals,
}

/// Position deviation intervals along the array axis, in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionModel {
    pub deviation_wavelengths: Intervals,
}

/// Adjacent-element coupling with isolation `xi` (linear) or `xi_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_db: Option<f64>,
}

impl CouplingModel {
    pub fn from_linear(xi: f64) -> Self {
        Self {
            xi: Some(xi),
            xi_db: None,
        }
    }

    pub fn from_db(xi_db: f64) -> Self {
        Self {
            xi: None,
            xi_db: Some(xi_db),
        }
    }

    pub fn xi(&self) -> Result<f64> {
        let xi = match (self.xi, self.xi_db) {
            (Some(x), None) => x,
            (None, Some(db)) => 10f64.powf(db / 20.0),
            _ => {
                return Err(Error::InvalidModel(
                    "coupling needs exactly one of xi, xi_db".into(),
                ))
            }
        };
        if !(0.0..0.5).contains(&xi) {
            return Err(Error::InvalidModel(format!("xi = {xi} must lie in [0, 0.5)")));
        }
        Ok(xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UncertaintyBound {
    Constant {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        table: Option<EpsTable>,
    },
    GainPhase(GainPhaseModel),
    Position(PositionModel),
    Coupling(CouplingModel),
}

impl UncertaintyBound {
    pub fn constant(eps: f64) -> Self {
        UncertaintyBound::Constant {
            epsilon: Some(eps),
            table: None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            UncertaintyBound::Constant { .. } => "constant",
            UncertaintyBound::GainPhase(_) => "gain_phase",
            UncertaintyBound::Position(_) => "position",
            UncertaintyBound::Coupling(_) => "coupling",
        }
    }

    /// Checks the parameters against an array.
    pub fn validate(&self, geom: &ArrayGeometry) -> Result<()> {
        match self {
            UncertaintyBound::Constant { epsilon, table } => match (epsilon, table) {
                (Some(e), None) => {
                    if !(*e >= 0.0) || !e.is_finite() {
                        return Err(Error::InvalidModel(format!("epsilon = {e} must be >= 0")));
                    }
                    Ok(())
                }
                (None, Some(t)) => {
                    if t.angles_deg.len() != t.epsilon.len() || t.angles_deg.is_empty() {
                        return Err(Error::InvalidModel(
                            "epsilon table needs matching nonempty angles_deg and epsilon".into(),
                        ));
                    }
                    if t.angles_deg.windows(2).any(|w| !(w[1] > w[0])) {
                        return Err(Error::InvalidModel(
                            "epsilon table angles must be strictly increasing".into(),
                        ));
                    }
                    if t.epsilon.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
                        return Err(Error::InvalidModel("epsilon table values must be >= 0".into()));
                    }
                    Ok(())
                }
                _ => Err(Error::InvalidModel(
                    "constant bound needs exactly one of epsilon, table".into(),
                )),
            },
            UncertaintyBound::GainPhase(m) => {
                let g = m.gain.expand(geom.len())?;
                m.phase_rad.expand(geom.len())?;
                if g.iter().any(|iv| iv[0] <= 0.0) {
                    return Err(Error::InvalidModel("gain intervals must be positive".into()));
                }
                Ok(())
            }
            UncertaintyBound::Position(m) => m.deviation_wavelengths.expand(geom.len()).map(|_| ()),
            UncertaintyBound::Coupling(m) => m.xi().map(|_| ()),
        }
    }

    pub fn eval(&self, geom: &ArrayGeometry, theta_deg: f64) -> Result<f64> {
        check_angle(theta_deg)?;
        match self {
            UncertaintyBound::Constant { .. } => {
                self.validate(geom)?;
                eval_constant(self, theta_deg)
            }
            UncertaintyBound::GainPhase(m) => eps_gain_phase(m, geom, theta_deg),
            UncertaintyBound::Position(m) => eps_position(m, geom, theta_deg),
            UncertaintyBound::Coupling(m) => eps_coupling(m, geom, theta_deg),
        }
    }

    pub fn eval_grid(&self, geom: &ArrayGeometry, grid: &AngleGrid) -> Result<Vec<f64>> {
        self.validate(geom)?;
        grid.angles().iter().map(|&t| self.eval(geom, t)).collect()
    }
}

fn eval_constant(bound: &UncertaintyBound, theta: f64) -> Result<f64> {
    let UncertaintyBound::Constant { epsilon, table } = bound else {
        unreachable!()
    };
    if let Some(e) = epsilon {
        return Ok(*e);
    }
    let t = table.as_ref().expect("validated");
    let (xs, ys) = (&t.angles_deg, &t.epsilon);
    let tol = 1e-9;
    if theta < xs[0] - tol || theta > xs[xs.len() - 1] + tol {
        return Err(Error::Domain {
            what: "theta outside epsilon table",
            value: theta,
            domain: "[angles_deg first, last]",
        });
    }
    if xs.len() == 1 || theta <= xs[0] {
        return Ok(ys[0]);
    }
    let j = xs.partition_point(|&x| x < theta).min(xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let f = ((theta - x0) / (x1 - x0)).clamp(0.0, 1.0);
    Ok(ys[j - 1] + f * (ys[j] - ys[j - 1]))
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// `max |g e^{j phi} - 1|` over the corners of every element's gain/phase rectangle.
///
/// The modulus is convex in `g` and increasing in `|phi|` on `[-pi, pi]`,
/// so the corners carry the maximum.
pub fn delta_gain_phase(model: &GainPhaseModel, n: usize) -> Result<f64> {
    let g = model.gain.expand(n)?;
    let p = model.phase_rad.expand(n)?;
    let mut best = 0.0f64;
    for (gi, pi) in g.iter().zip(&p) {
        for &gg in gi {
            for &ph in pi {
                best = best.max((Complex64::from_polar(gg, ph) - 1.0).norm());
            }
        }
    }
    Ok(best)
}

/// `max 2 |sin(pi alpha sin(theta))|` over the deviation endpoints.
pub fn delta_position(model: &PositionModel, n: usize, theta_deg: f64) -> Result<f64> {
    let iv = model.deviation_wavelengths.expand(n)?;
    let s = theta_deg.to_radians().sin();
    Ok(iv
        .iter()
        .flat_map(|v| v.iter())
        .map(|&alpha| 2.0 * (std::f64::consts::PI * alpha * s).sin().abs())
        .fold(0.0, f64::max))
}

pub fn eps_gain_phase(model: &GainPhaseModel, geom: &ArrayGeometry, theta_deg: f64) -> Result<f64> {
    Ok(geom.steering_norm(theta_deg)? * delta_gain_phase(model, geom.len())?)
}

pub fn eps_position(model: &PositionModel, geom: &ArrayGeometry, theta_deg: f64) -> Result<f64> {
    Ok(geom.steering_norm(theta_deg)? * delta_position(model, geom.len(), theta_deg)?)
}

/// `2 xi ||a(theta)||`, the Gershgorin bound on the tridiagonal coupling error.
pub fn eps_coupling(model: &CouplingModel, geom: &ArrayGeometry, theta_deg: f64) -> Result<f64> {
    Ok(2.0 * model.xi()? * geom.steering_norm(theta_deg)?)
}

/// `E = xi * Z` with `Z` tridiagonal, zero diagonal and `Z[i][i+1] = Z[i+1][i] = z[i]`.
pub fn coupling_error_matrix(xi: f64, z: &[Complex64]) -> DMatrix<Complex64> {
    let n = z.len() + 1;
    let mut e = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (i, zi) in z.iter().enumerate() {
        e[(i, i + 1)] = zi * xi;
        e[(i + 1, i)] = zi * xi;
    }
    e
}
