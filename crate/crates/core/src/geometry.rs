//! Array geometries, nominal steering vectors and standard initial weights.
//!
//! Positions are in wavelengths. Entry `n` of the steering vector is
//! `g_n(theta) * exp(j 2 pi (x_n sin(theta) + y_n cos(theta)))`, which for a
//! linear array (`y_n = 0`) is the usual narrowband model.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Minimum separation below which two elements are considered coincident.
const COINCIDENT_TOL: f64 = 1e-9;

/// Tabulated per-element complex gains versus angle, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGains {
    angles_deg: Vec<f64>,
    /// `gains[element][angle_index]`
    gains: Vec<Vec<Complex64>>,
}

impl ElementGains {
    pub fn new(angles_deg: Vec<f64>, gains: Vec<Vec<Complex64>>) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::InvalidGeometry("element gain table has no angles".into()));
        }
        if angles_deg.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGeometry(
                "element gain angles must be strictly increasing".into(),
            ));
        }
        for (n, row) in gains.iter().enumerate() {
            if row.len() != angles_deg.len() {
                return Err(Error::InvalidGeometry(format!(
                    "element {} has {} gains for {} angles",
                    n + 1,
                    row.len(),
                    angles_deg.len()
                )));
            }
            if row.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "element {} has a non-finite gain",
                    n + 1
                )));
            }
        }
        Ok(Self { angles_deg, gains })
    }

    pub fn elements(&self) -> usize {
        self.gains.len()
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn gains(&self) -> &[Vec<Complex64>] {
        &self.gains
    }

    /// Gain of element `n` at `theta_deg`.
    pub fn gain(&self, n: usize, theta_deg: f64) -> Result<Complex64> {
        let angles = &self.angles_deg;
        let first = angles[0];
        let last = angles[angles.len() - 1];
        if theta_deg < first - 1e-9 || theta_deg > last + 1e-9 {
            return Err(Error::Domain {
                what: "theta (element gain table)",
                value: theta_deg,
                domain: "covered by the element gain table",
            });
        }
        let row = &self.gains[n];
        if angles.len() == 1 {
            return Ok(row[0]);
        }
        let hi = angles.partition_point(|&a| a < theta_deg).clamp(1, angles.len() - 1);
        let lo = hi - 1;
        let t = ((theta_deg - angles[lo]) / (angles[hi] - angles[lo])).clamp(0.0, 1.0);
        Ok(row[lo] * (1.0 - t) + row[hi] * t)
    }
}

/// Element layout of the array, in wavelengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 2]>,
    element_gains: Option<ElementGains>,
}

impl ArrayGeometry {
    pub fn new(positions: Vec<[f64; 2]>, element_gains: Option<ElementGains>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least 2 elements, got {}",
                positions.len()
            )));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("element positions must be finite".into()));
        }
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if dx.hypot(dy) < COINCIDENT_TOL {
                    return Err(Error::InvalidGeometry(format!(
                        "elements {} and {} are coincident",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        if let Some(g) = &element_gains {
            if g.elements() != positions.len() {
                return Err(Error::InvalidGeometry(format!(
                    "element gain table covers {} elements, array has {}",
                    g.elements(),
                    positions.len()
                )));
            }
        }
        Ok(Self {
            positions,
            element_gains,
        })
    }

    /// Linear array from x-coordinates in wavelengths.
    pub fn linear(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| [x, 0.0]).collect(), None)
    }

    /// Uniform linear array with `spacing` wavelengths between neighbours, first element at 0.
    pub fn ula(n: usize, spacing: f64) -> Result<Self> {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
        Self::linear(&xs)
    }

    /// Circular arc of `n` elements with adjacent chord length `spacing` and total
    /// angular extent `span_deg`, centred on broadside.
    pub fn circular_arc(n: usize, spacing: f64, span_deg: f64) -> Result<Self> {
        if n < 2 || !(span_deg > 0.0) || !(spacing > 0.0) {
            return Err(Error::InvalidGeometry(
                "arc needs n >= 2, positive spacing and positive span".into(),
            ));
        }
        let step = span_deg.to_radians() / (n - 1) as f64;
        let radius = spacing / (2.0 * (step / 2.0).sin());
        let positions = (0..n)
            .map(|i| {
                let phi = -span_deg.to_radians() / 2.0 + i as f64 * step;
                [radius * phi.sin(), radius * phi.cos()]
            })
            .collect();
        Self::new(positions, None)
    }

    pub fn with_element_gains(mut self, gains: ElementGains) -> Result<Self> {
        if gains.elements() != self.positions.len() {
            return Err(Error::InvalidGeometry(format!(
                "element gain table covers {} elements, array has {}",
                gains.elements(),
                self.positions.len()
            )));
        }
        self.element_gains = Some(gains);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn element_gains(&self) -> Option<&ElementGains> {
        self.element_gains.as_ref()
    }

    pub fn is_isotropic(&self) -> bool {
        self.element_gains.is_none()
    }

    /// All elements on the x axis.
    pub fn is_linear(&self) -> bool {
        self.positions.iter().all(|p| p[1] == 0.0)
    }

    /// Nominal steering vector `a(theta)`.
    pub fn steering_vector(&self, theta_deg: f64) -> Result<Vec<Complex64>> {
        check_angle(theta_deg)?;
        let (s, c) = theta_deg.to_radians().sin_cos();
        self.positions
            .iter()
            .enumerate()
            .map(|(n, p)| {
                let phasor = Complex64::from_polar(1.0, 2.0 * PI * (p[0] * s + p[1] * c));
                match &self.element_gains {
                    Some(g) => Ok(g.gain(n, theta_deg)? * phasor),
                    None => Ok(phasor),
                }
            })
            .collect()
    }

    /// `||a(theta)||_2`; equals `sqrt(N)` for isotropic elements.
    pub fn steering_norm(&self, theta_deg: f64) -> Result<f64> {
        if self.is_isotropic() {
            check_angle(theta_deg)?;
            return Ok((self.len() as f64).sqrt());
        }
        Ok(linalg::norm(&self.steering_vector(theta_deg)?))
    }

    /// Steering vectors for every angle of `grid`.
    pub fn steering_table(&self, grid: &AngleGrid) -> Result<Vec<Vec<Complex64>>> {
        grid.angles().iter().map(|&t| self.steering_vector(t)).collect()
    }
}

pub(crate) fn check_angle(theta_deg: f64) -> Result<()> {
    if !theta_deg.is_finite() || !(-90.0 - 1e-9..=90.0 + 1e-9).contains(&theta_deg) {
        return Err(Error::Domain {
            what: "theta",
            value: theta_deg,
            domain: "[-90, 90] degrees",
        });
    }
    Ok(())
}

/// Complex element excitations `w`, never identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<Complex64>);

impl WeightVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidWeights("weight vector has non-finite entries".into()));
        }
        if linalg::norm_sqr(&entries) == 0.0 {
            return Err(Error::DegenerateWeight("weight vector is identically zero"));
        }
        Ok(Self(entries))
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_polar(magnitudes: &[f64], phases_rad: &[f64]) -> Result<Self> {
        if magnitudes.len() != phases_rad.len() {
            return Err(Error::Dimension {
                expected: magnitudes.len(),
                got: phases_rad.len(),
            });
        }
        Self::new(
            magnitudes
                .iter()
                .zip(phases_rad)
                .map(|(&m, &p)| Complex64::from_polar(m, p))
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.0)
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(linalg::scale(&self.0, c))
    }

    pub fn check_len(&self, geom: &ArrayGeometry) -> Result<()> {
        if self.len() != geom.len() {
            return Err(Error::Dimension {
                expected: geom.len(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Uniformly spaced angles in `[-90, 90]` degrees, snapped so that the beam
/// axis is a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
    step: f64,
    theta0_index: usize,
}

impl AngleGrid {
    pub fn new(step_deg: f64, theta0_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0 && step_deg <= 5.0) {
            return Err(Error::Domain {
                what: "grid step",
                value: step_deg,
                domain: "(0, 5] degrees",
            });
        }
        check_angle(theta0_deg)?;
        let below = ((theta0_deg + 90.0) / step_deg + 1e-9).floor() as i64;
        let above = ((90.0 - theta0_deg) / step_deg + 1e-9).floor() as i64;
        let angles: Vec<f64> = (-below..=above)
            .map(|k| snap(theta0_deg + k as f64 * step_deg))
            .collect();
        Ok(Self {
            angles,
            step: step_deg,
            theta0_index: below as usize,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn theta0_index(&self) -> usize {
        self.theta0_index
    }

    /// Index of the grid point nearest to `theta_deg`.
    pub fn nearest_index(&self, theta_deg: f64) -> usize {
        let first = self.angles[0];
        let k = ((theta_deg - first) / self.step).round();
        (k.max(0.0) as usize).min(self.angles.len() - 1)
    }
}

/// Rounds away binary noise accumulated by `theta0 + k * step`.
fn snap(theta: f64) -> f64 {
    let s = (theta * 1e9).round() / 1e9;
    s.clamp(-90.0, 90.0)
}

/// `w = a(theta0)`
pub fn uniform_weights(geom: &ArrayGeometry, theta0_deg: f64) -> Result<WeightVector> {
    WeightVector::new(geom.steering_vector(theta0_deg)?)
}

/// Real Dolph-Chebyshev taper of `n` elements with the given sidelobe
/// attenuation, normalised to a unit peak.
pub fn chebyshev_taper(n: usize, sidelobe_attenuation_db: f64) -> Result<Vec<f64>> {
    if n < 3 {
        return Err(Error::Domain {
            what: "Chebyshev taper length",
            value: n as f64,
            domain: "N >= 3",
        });
    }
    if !(sidelobe_attenuation_db > 0.0) || !sidelobe_attenuation_db.is_finite() {
        return Err(Error::Domain {
            what: "sidelobe attenuation",
            value: sidelobe_attenuation_db,
            domain: "> 0 dB",
        });
    }
    let order = (n - 1) as f64;
    let ratio = 10f64.powf(sidelobe_attenuation_db / 20.0);
    let x0 = (ratio.acosh() / order).cosh();

    // Samples of the Chebyshev pattern T_{N-1}(x0 cos(pi k / N)), inverted with a DFT.
    let cheb = |x: f64| -> f64 {
        if x > 1.0 {
            (order * x.acosh()).cosh()
        } else if x < -1.0 {
            let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
            sign * (order * (-x).acosh()).cosh()
        } else {
            (order * x.acos()).cos()
        }
    };
    let mut samples: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(cheb(x0 * (PI * k as f64 / n as f64).cos()), 0.0))
        .collect();
    if n % 2 == 0 {
        for (k, s) in samples.iter_mut().enumerate() {
            *s *= Complex64::from_polar(1.0, PI * k as f64 / n as f64);
        }
    }
    let spectrum: Vec<f64> = (0..n)
        .map(|m| {
            samples
                .iter()
                .enumerate()
                .map(|(k, s)| s * Complex64::from_polar(1.0, -2.0 * PI * (m * k) as f64 / n as f64))
                .sum::<Complex64>()
                .re
        })
        .collect();

    let taper: Vec<f64> = if n % 2 == 1 {
        let half = (n + 1) / 2;
        spectrum[1..half]
            .iter()
            .rev()
            .chain(spectrum[..half].iter())
            .copied()
            .collect()
    } else {
        let half = n / 2 + 1;
        spectrum[1..half]
            .iter()
            .rev()
            .chain(spectrum[1..half].iter())
            .copied()
            .collect()
    };
    let peak = taper.iter().cloned().fold(f64::MIN, f64::max);
    Ok(taper.into_iter().map(|v| v / peak).collect())
}

/// Dolph-Chebyshev taper as a (real) weight vector.
pub fn chebyshev_weights(n: usize, sidelobe_attenuation_db: f64) -> Result<WeightVector> {
    WeightVector::from_real(&chebyshev_taper(n, sidelobe_attenuation_db)?)
}

/// Applies a real amplitude taper to the steering vector `a(theta0)`.
pub fn steered_taper(geom: &ArrayGeometry, taper: &[f64], theta0_deg: f64) -> Result<WeightVector> {
    if taper.len() != geom.len() {
        return Err(Error::Dimension {
            expected: geom.len(),
            got: taper.len(),
        });
    }
    let a0 = geom.steering_vector(theta0_deg)?;
    WeightVector::new(a0.iter().zip(taper).map(|(a, &t)| a * t).collect())
}

/// On-disk geometry description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub positions_wavelengths: Positions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_gains: Option<ElementGainsConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Positions {
    Linear(Vec<f64>),
    Planar(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementGainsConfig {
    pub angles_deg: Vec<f64>,
    /// One row per element, each a list of `[re, im]` gains aligned with `angles_deg`.
    pub gains: Vec<Vec<[f64; 2]>>,
}

impl GeometryConfig {
    pub fn build(&self) -> Result<ArrayGeometry> {
        let positions = match &self.positions_wavelengths {
            Positions::Linear(xs) => xs.iter().map(|&x| [x, 0.0]).collect(),
            Positions::Planar(ps) => ps.clone(),
        };
        let gains = self
            .element_gains
            .as_ref()
            .map(|g| {
                ElementGains::new(
                    g.angles_deg.clone(),
                    g.gains
                        .iter()
                        .map(|row| row.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
                        .collect(),
                )
            })
            .transpose()?;
        ArrayGeometry::new(positions, gains)
    }
}

impl From<&ArrayGeometry> for GeometryConfig {
    fn from(geom: &ArrayGeometry) -> Self {
        let positions_wavelengths = if geom.is_linear() {
            Positions::Linear(geom.positions.iter().map(|p| p[0]).collect())
        } else {
            Positions::Planar(geom.positions.clone())
        };
        let element_gains = geom.element_gains.as_ref().map(|g| ElementGainsConfig {
            angles_deg: g.angles_deg.clone(),
            gains: g
                .gains
                .iter()
                .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
        });
        Self {
            positions_wavelengths,
            element_gains,
        }
    }
}
