//! Monte-Carlo realisations of the perturbed manifold and bound checks.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleGrid, ArrayGeometry, WeightVector};
use crate::linalg;
use crate::response::{magnitude_db, PatternEvaluator};
use crate::uncertainty::UncertaintyBound;

/// Absolute slack on linear levels when counting violations.
pub const SLACK: f64 = 1e-9;

/// One drawn hardware state, shared by all angles.
#[derive(Debug, Clone, PartialEq)]
pub enum HardwareState {
    /// `C = diag(g_n e^{j phi_n})`, element 1 fixed at 1
    GainPhase(Vec<Complex64>),
    /// deviations along the array axis in wavelengths, element 1 fixed at 0
    Position(Vec<f64>),
    /// `E = xi Z` with symmetric adjacent couplings `z_i = z_{i,i+1} = z_{i+1,i}`
    Coupling { xi: f64, z: Vec<Complex64> },
}

impl HardwareState {
    /// `Delta = E(theta) a(theta)`
    pub fn delta(&self, a: &[Complex64], theta_deg: f64) -> Vec<Complex64> {
        match self {
            HardwareState::GainPhase(c) => a.iter().zip(c).map(|(x, ci)| x * (ci - 1.0)).collect(),
            HardwareState::Position(alpha) => {
                let s = theta_deg.to_radians().sin();
                a.iter()
                    .zip(alpha)
                    .map(|(x, al)| x * (Complex64::from_polar(1.0, TAU * al * s) - 1.0))
                    .collect()
            }
            HardwareState::Coupling { xi, z } => {
                let n = a.len();
                (0..n)
                    .map(|i| {
                        let mut acc = Complex64::new(0.0, 0.0);
                        if i > 0 {
                            acc += z[i - 1] * a[i - 1];
                        }
                        if i + 1 < n {
                            acc += z[i] * a[i + 1];
                        }
                        acc * *xi
                    })
                    .collect()
            }
        }
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, iv: [f64; 2]) -> f64 {
    if iv[1] > iv[0] {
        rng.random_range(iv[0]..=iv[1])
    } else {
        iv[0]
    }
}

/// Draws a hardware state uniformly within a structured model.
pub fn draw_state(bound: &UncertaintyBound, n: usize, rng: &mut ChaCha8Rng) -> Result<Option<HardwareState>> {
    Ok(match bound {
        UncertaintyBound::Constant { .. } => None,
        UncertaintyBound::GainPhase(m) => {
            let g = m.gain.expand(n)?;
            let p = m.phase_rad.expand(n)?;
            let mut c = vec![Complex64::new(1.0, 0.0)];
            for (gi, pi) in g.iter().zip(&p) {
                let gg = uniform_in(rng, *gi);
                let ph = uniform_in(rng, *pi);
                c.push(Complex64::from_polar(gg, ph));
            }
            Some(HardwareState::GainPhase(c))
        }
        UncertaintyBound::Position(m) => {
            let iv = m.deviation_wavelengths.expand(n)?;
            let mut alpha = vec![0.0];
            alpha.extend(iv.iter().map(|v| uniform_in(rng, *v)));
            Some(HardwareState::Position(alpha))
        }
        UncertaintyBound::Coupling(m) => {
            let xi = m.xi()?;
            let z = (0..n - 1)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))
                .collect();
            Some(HardwareState::Coupling { xi, z })
        }
    })
}

/// `eps * r * u` with `u` uniform on the complex unit sphere and `r ~ U[0, 1]`.
pub fn draw_norm_ball(n: usize, eps: f64, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    loop {
        let u: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = linalg::norm(&u);
        if norm > 1e-300 {
            let r: f64 = rng.random_range(0.0..=1.0);
            return linalg::scale(&u, Complex64::new(eps * r / norm, 0.0));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSample {
    pub kind: &'static str,
    pub theta_deg: Vec<f64>,
    pub delta: Vec<Vec<Complex64>>,
    pub seed: u64,
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn draw_deltas(
    bound: &UncertaintyBound,
    geom: &ArrayGeometry,
    angles: &[f64],
    steering: &[Vec<Complex64>],
    eps: &[f64],
    norm_ball: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Complex64>>> {
    let state = if norm_ball { None } else { draw_state(bound, geom.len(), rng)? };
    Ok(match state {
        Some(s) => angles.iter().zip(steering).map(|(t, a)| s.delta(a, *t)).collect(),
        None => eps.iter().map(|e| draw_norm_ball(geom.len(), *e, rng)).collect(),
    })
}

/// Draws `Delta(theta)` over the grid. Constant bounds use the norm ball;
/// structured models apply one drawn hardware state at every angle.
pub fn sample_perturbation(
    bound: &UncertaintyBound,
    geom: &ArrayGeometry,
    grid: &AngleGrid,
    seed: u64,
) -> Result<PerturbationSample> {
    bound.validate(geom)?;
    let eps = bound.eval_grid(geom, grid)?;
    let steering = geom.steering_table(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm_ball = matches!(bound, UncertaintyBound::Constant { .. });
    let delta = draw_deltas(bound, geom, grid.angles(), &steering, &eps, norm_ball, &mut rng)?;
    Ok(PerturbationSample {
        kind: if norm_ball { "norm_ball" } else { bound.kind() },
        theta_deg: grid.angles().to_vec(),
        delta,
        seed,
    })
}

#[derive(Debug, Clone)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    /// Sample the raw norm ball even for structured models.
    pub norm_ball: bool,
    /// Desired upper levels (linear) on the grid; `INFINITY` exempts an angle.
    pub mask: Option<Vec<f64>>,
    /// Grid indices where the mask is enforced; all masked angles when `None`.
    pub check_indices: Option<Vec<usize>>,
    /// Keep `V_b` of the first this many trials.
    pub keep_trials: usize,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            norm_ball: false,
            mask: None,
            check_indices: None,
            keep_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub kind: String,
    pub trials: usize,
    pub seed: u64,
    /// trial/angle pairs with `v_b` outside `[v_l, v_u]`
    pub containment_violations: usize,
    /// trial/angle pairs at checked angles with `v_b` above the mask
    pub mask_violations: usize,
    /// largest `20 log10(v_b / v_d)` over trials and checked angles
    pub max_sidelobe_excess_db: f64,
    pub per_trial_max_excess_db: Vec<f64>,
    /// largest `||Delta(theta)|| / eps(theta)` drawn
    pub max_delta_ratio: f64,
    #[serde(skip)]
    pub kept_v_b: Vec<Vec<f64>>,
}

struct TrialResult {
    containment: usize,
    mask: usize,
    max_excess_db: f64,
    max_delta_ratio: f64,
    v_b: Option<Vec<f64>>,
}

/// Realised `V_b` against the analytic `[V_l, V_u]` and an optional mask.
pub fn verify_bounds(
    w: &WeightVector,
    geom: &ArrayGeometry,
    grid: &AngleGrid,
    bound: &UncertaintyBound,
    config: &McConfig,
) -> Result<McReport> {
    w.check_len(geom)?;
    bound.validate(geom)?;
    let eps = bound.eval_grid(geom, grid)?;
    let eval = PatternEvaluator::new(geom, grid, eps.clone())?;
    let pattern = eval.evaluate(w.as_slice())?;
    if let Some(m) = &config.mask {
        if m.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: m.len(),
            });
        }
    }
    let checked: Vec<usize> = match (&config.check_indices, &config.mask) {
        (Some(ix), _) => {
            if let Some(&bad) = ix.iter().find(|&&i| i >= grid.len()) {
                return Err(Error::InvalidRequest(format!("check index {bad} outside the grid")));
            }
            ix.clone()
        }
        (None, Some(m)) => (0..grid.len()).filter(|&i| m[i].is_finite()).collect(),
        (None, None) => Vec::new(),
    };
    let steering: Vec<Vec<Complex64>> = (0..grid.len()).map(|i| eval.steering(i).to_vec()).collect();
    let i0 = grid.theta0_index();
    let norm_ball = config.norm_ball || matches!(bound, UncertaintyBound::Constant { .. });
    let ws = w.as_slice();

    let results: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(config.seed, trial as u64);
            let delta = draw_deltas(bound, geom, grid.angles(), &steering, &eps, norm_ball, &mut rng)?;
            let mut max_ratio = 0.0f64;
            let v: Vec<f64> = steering
                .iter()
                .zip(&delta)
                .zip(&eps)
                .map(|((a, d), e)| {
                    let dn = linalg::norm(d);
                    if *e > 0.0 {
                        max_ratio = max_ratio.max(dn / e);
                    } else if dn > 0.0 {
                        max_ratio = f64::INFINITY;
                    }
                    let b: Vec<Complex64> = a.iter().zip(d).map(|(x, y)| x + y).collect();
                    linalg::inner(ws, &b).norm()
                })
                .collect();
            let out0 = v[i0];
            let v_b: Vec<f64> = v.iter().map(|x| x / out0).collect();
            let containment = (0..grid.len())
                .filter(|&i| v_b[i] > pattern.v_u[i] + SLACK || v_b[i] < pattern.v_l[i] - SLACK)
                .count();
            let (mut mask, mut max_excess) = (0, f64::NEG_INFINITY);
            if let Some(m) = &config.mask {
                for &i in &checked {
                    if !m[i].is_finite() {
                        continue;
                    }
                    if v_b[i] > m[i] + SLACK {
                        mask += 1;
                    }
                    max_excess = max_excess.max(magnitude_db(v_b[i]) - magnitude_db(m[i]));
                }
            }
            Ok(TrialResult {
                containment,
                mask,
                max_excess_db: max_excess,
                max_delta_ratio: max_ratio,
                v_b: (trial < config.keep_trials).then_some(v_b),
            })
        })
        .collect();

    let mut report = McReport {
        kind: if norm_ball { "norm_ball".into() } else { bound.kind().into() },
        trials: config.trials,
        seed: config.seed,
        containment_violations: 0,
        mask_violations: 0,
        max_sidelobe_excess_db: f64::NEG_INFINITY,
        per_trial_max_excess_db: Vec::with_capacity(config.trials),
        max_delta_ratio: 0.0,
        kept_v_b: Vec::new(),
    };
    for r in results {
        let r = r?;
        report.containment_violations += r.containment;
        report.mask_violations += r.mask;
        report.max_sidelobe_excess_db = report.max_sidelobe_excess_db.max(r.max_excess_db);
        report.per_trial_max_excess_db.push(r.max_excess_db);
        report.max_delta_ratio = report.max_delta_ratio.max(r.max_delta_ratio);
        if let Some(v) = r.v_b {
            report.kept_v_b.push(v);
        }
    }
    Ok(report)
}
