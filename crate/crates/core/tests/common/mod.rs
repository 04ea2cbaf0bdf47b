#![allow(dead_code)]

use robust_sidelobe::geometry::WeightVector;
use robust_sidelobe::{ArrayGeometry, Complex64};

pub const NONUNIFORM_12: [f64; 12] = [0.0, 0.45, 1.0, 1.55, 2.10, 2.60, 3.05, 3.65, 4.10, 4.55, 5.05, 5.50];

pub fn nonuniform_12() -> ArrayGeometry {
    ArrayGeometry::linear(&NONUNIFORM_12).unwrap()
}

/// Published weights of the 16-element uniform sidelobe design, (magnitude, phase).
pub const ULA16_WEIGHTS: [(f64, f64); 16] = [
    (0.34, -0.80),
    (0.39, -2.37),
    (0.58, 2.35),
    (0.77, 0.78),
    (0.96, -0.79),
    (1.13, -2.36),
    (1.25, 2.35),
    (1.31, 0.78),
    (1.31, -0.78),
    (1.25, -2.35),
    (1.13, 2.36),
    (0.96, 0.79),
    (0.77, -0.78),
    (0.58, -2.35),
    (0.39, 2.37),
    (0.34, 0.80),
];

/// Published weights of the 20-element coupling design.
pub const ULA20_COUPLING_WEIGHTS: [(f64, f64); 20] = [
    (0.40, -0.07),
    (0.46, -1.37),
    (0.54, 3.01),
    (0.63, 1.64),
    (0.84, 0.02),
    (0.95, -1.57),
    (1.08, -3.14),
    (1.16, 1.58),
    (1.28, 0.01),
    (1.28, -1.59),
    (1.28, -3.12),
    (1.28, 1.56),
    (1.16, -0.01),
    (1.08, -1.57),
    (0.95, 3.14),
    (0.84, 1.55),
    (0.63, -0.06),
    (0.54, -1.44),
    (0.46, 2.94),
    (0.40, 1.65),
];

/// Published weights of the 12-element position-mismatch design.
pub const NONUNIFORM12_POSITION_WEIGHTS: [(f64, f64); 12] = [
    (0.32, -0.16),
    (0.67, -0.89),
    (0.75, -2.17),
    (1.04, 2.90),
    (1.08, 1.78),
    (1.17, 0.77),
    (1.07, -0.40),
    (1.08, -1.47),
    (0.77, -2.60),
    (0.64, 2.73),
    (0.48, 1.80),
    (0.34, 0.62),
];

pub fn polar(table: &[(f64, f64)]) -> Vec<Complex64> {
    table.iter().map(|&(m, p)| Complex64::from_polar(m, p)).collect()
}

/// Largest magnitude and phase errors after the least-squares global phase alignment.
pub fn weight_mismatch(w: &WeightVector, table: &[(f64, f64)]) -> (f64, f64) {
    let t = polar(table);
    let w = w.as_slice();
    let c: Complex64 = w.iter().zip(&t).map(|(a, b)| a.conj() * b).sum();
    let rot = c / c.norm();
    let mut mag: f64 = 0.0;
    let mut ph: f64 = 0.0;
    for (a, b) in w.iter().zip(&t) {
        let a = a * rot;
        mag = mag.max((a.norm() - b.norm()).abs());
        ph = ph.max((a / b).arg().abs());
    }
    (mag, ph)
}

pub fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}
