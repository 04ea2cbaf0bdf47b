//! Iterative robust sidelobe synthesis: repeatedly drive the worst violating
//! peak of the upper boundary `V_u` onto the desired mask.

use std::collections::HashSet;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AngleGrid, ArrayGeometry, WeightVector};
use crate::response::{self, magnitude_db, BoundedResponse, PatternEvaluator};
use crate::robust_control::{self, chi};
use crate::uncertainty::UncertaintyBound;

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_D_TOL_DB: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSegment {
    pub from_deg: f64,
    pub to_deg: f64,
    pub level_db: f64,
}

/// Desired upper pattern. Later segments override earlier ones and
/// `default_level_db` fills the rest. Mainlobe angles are exempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_level_db: Option<f64>,
    #[serde(default)]
    pub segments: Vec<MaskSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mainlobe: Option<[f64; 2]>,
}

impl MaskSpec {
    pub fn uniform(level_db: f64) -> Self {
        Self {
            default_level_db: Some(level_db),
            segments: Vec::new(),
            mainlobe: None,
        }
    }

    pub fn with_segment(mut self, from_deg: f64, to_deg: f64, level_db: f64) -> Self {
        self.segments.push(MaskSegment {
            from_deg,
            to_deg,
            level_db,
        });
        self
    }

    pub fn with_mainlobe(mut self, from_deg: f64, to_deg: f64) -> Self {
        self.mainlobe = Some([from_deg, to_deg]);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            if !(s.from_deg <= s.to_deg) || !s.level_db.is_finite() {
                return Err(Error::InvalidMask(format!(
                    "segment [{}, {}] at {} dB",
                    s.from_deg, s.to_deg, s.level_db
                )));
            }
        }
        if let Some(d) = self.default_level_db {
            if !d.is_finite() {
                return Err(Error::InvalidMask(format!("default level {d} dB")));
            }
        }
        if let Some([a, b]) = self.mainlobe {
            if !(a <= b) {
                return Err(Error::InvalidMask(format!("mainlobe [{a}, {b}]")));
            }
        }
        Ok(())
    }

    /// Level in dB at `theta`, if the mask covers it.
    pub fn level_db(&self, theta: f64) -> Option<f64> {
        let tol = 1e-9;
        self.segments
            .iter()
            .rev()
            .find(|s| theta >= s.from_deg - tol && theta <= s.to_deg + tol)
            .map(|s| s.level_db)
            .or(self.default_level_db)
    }

    /// Linear levels on the grid; sidelobe angles must all be covered.
    pub fn levels(&self, grid: &AngleGrid, mainlobe: (f64, f64)) -> Result<Vec<f64>> {
        self.validate()?;
        grid.angles()
            .iter()
            .map(|&t| match self.level_db(t) {
                Some(db) => Ok(response::db_to_magnitude(db)),
                None if in_region(t, mainlobe) => Ok(f64::INFINITY),
                None => Err(Error::InvalidMask(format!("no level for sidelobe angle {t} deg"))),
            })
            .collect()
    }
}

fn in_region(theta: f64, region: (f64, f64)) -> bool {
    theta >= region.0 - 1e-9 && theta <= region.1 + 1e-9
}

/// Grid interval between the first nulls either side of `theta0`.
pub fn detect_mainlobe(v_a: &[f64], grid: &AngleGrid) -> (f64, f64) {
    let i0 = grid.theta0_index();
    let mut i = i0;
    while i > 0 && v_a[i - 1] < v_a[i] {
        i -= 1;
    }
    let mut j = i0;
    while j + 1 < v_a.len() && v_a[j + 1] < v_a[j] {
        j += 1;
    }
    (grid.angles()[i], grid.angles()[j])
}

/// Indices of local maxima of `v` outside `mainlobe`.
///
/// A peak must exceed its left neighbour and not be exceeded on the right;
/// flat tops resolve to their leftmost index. Grid ends count when they
/// dominate their single neighbour.
pub fn sidelobe_peaks(v: &[f64], grid: &AngleGrid, mainlobe: (f64, f64)) -> Vec<usize> {
    let n = v.len();
    let angles = grid.angles();
    let mut out = Vec::new();
    for i in 0..n {
        if in_region(angles[i], mainlobe) {
            continue;
        }
        if i > 0 && v[i] <= v[i - 1] {
            continue;
        }
        let mut j = i + 1;
        while j < n && v[j] == v[i] {
            j += 1;
        }
        if j == n || v[j] < v[i] {
            if j > i + 1 || j == n || v[i + 1] < v[i] {
                out.push(i);
            }
        }
    }
    out
}

/// Worst violating peak by `v_u / v_d`, skipping `excluded` indices.
pub fn select_angle(v_u: &[f64], v_d: &[f64], peaks: &[usize], excluded: &HashSet<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &p in peaks {
        if excluded.contains(&p) || !(v_u[p] > v_d[p]) {
            continue;
        }
        let r = v_u[p] / v_d[p];
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((p, r));
        }
    }
    best.map(|(p, _)| p)
}

/// `max 20 log10(v_u / v_d)` over the peaks; `-inf` without peaks.
pub fn d_metric(v_u: &[f64], v_d: &[f64], peaks: &[usize]) -> f64 {
    peaks
        .iter()
        .map(|&p| 20.0 * (v_u[p] / v_d[p]).log10())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub geom: ArrayGeometry,
    pub theta0: f64,
    pub grid: AngleGrid,
    pub mask: MaskSpec,
    pub bound: UncertaintyBound,
    pub w0: WeightVector,
    pub max_iters: usize,
    pub d_tol: f64,
}

impl SynthesisProblem {
    pub fn new(
        geom: ArrayGeometry,
        grid: AngleGrid,
        mask: MaskSpec,
        bound: UncertaintyBound,
        w0: WeightVector,
    ) -> Self {
        let theta0 = grid.angles()[grid.theta0_index()];
        Self {
            geom,
            theta0,
            grid,
            mask,
            bound,
            w0,
            max_iters: DEFAULT_MAX_ITERS,
            d_tol: DEFAULT_D_TOL_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub theta_k: f64,
    pub rho_a: f64,
    pub beta: Complex64,
    /// `D_k` of the weight after this step
    pub d_k_db: f64,
    pub wng: f64,
    pub v_d_db: f64,
    /// `V_u(theta_k)` realised after this step
    pub v_u_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlFailure {
    pub k: usize,
    pub theta_k: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthesisTrace {
    pub records: Vec<IterationRecord>,
    pub failures: Vec<ControlFailure>,
    pub initial_d_db: f64,
    pub warnings: Vec<String>,
}

impl SynthesisTrace {
    /// CSV with columns `k, theta_k_deg, rho_db, beta_re, beta_im, d_k_db, wng`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,theta_k_deg,rho_db,beta_re,beta_im,d_k_db,wng")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.4},{:.8},{:.10},{:.10},{:.8},{:.8}",
                r.k,
                r.theta_k,
                response::power_db(r.rho_a),
                r.beta.re,
                r.beta.im,
                r.d_k_db,
                r.wng
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// Final weight when converged, otherwise the iterate with the smallest `D_k`.
    pub weights: WeightVector,
    /// Weight after the last iteration performed.
    pub last_weights: WeightVector,
    pub converged: bool,
    pub final_d_db: f64,
    pub mainlobe: (f64, f64),
    pub trace: SynthesisTrace,
    pub pattern: BoundedResponse,
}

fn none_if_empty(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::NEG_INFINITY
    }
}

pub fn synthesize(problem: &SynthesisProblem) -> Result<SynthesisResult> {
    let geom = &problem.geom;
    let grid = &problem.grid;
    problem.w0.check_len(geom)?;
    problem.bound.validate(geom)?;
    if problem.max_iters == 0 {
        return Err(Error::InvalidRequest("max_iters must be positive".into()));
    }
    if !problem.d_tol.is_finite() {
        return Err(Error::InvalidRequest("d_tol must be finite".into()));
    }

    let eps = problem.bound.eval_grid(geom, grid)?;
    let eval = PatternEvaluator::new(geom, grid, eps.clone())?;
    let i0 = grid.theta0_index();
    let a0 = eval.steering(i0).to_vec();
    let eps0 = eps[i0];

    let mainlobe = match problem.mask.mainlobe {
        Some([a, b]) => (a, b),
        None => detect_mainlobe(&eval.nominal(problem.w0.as_slice())?, grid),
    };
    if !in_region(grid.angles()[i0], mainlobe) {
        return Err(Error::InvalidMask(format!(
            "mainlobe [{}, {}] does not contain theta0",
            mainlobe.0, mainlobe.1
        )));
    }
    let v_d = problem.mask.levels(grid, mainlobe)?;
    let sidelobe: Vec<usize> = (0..grid.len())
        .filter(|&i| !in_region(grid.angles()[i], mainlobe))
        .collect();
    if sidelobe.is_empty() {
        return Err(Error::InvalidMask("sidelobe region is empty".into()));
    }

    let mut trace = SynthesisTrace::default();
    for &i in &sidelobe {
        if let Ok(c) = chi(geom, problem.theta0, eps0, eps[i]) {
            if v_d[i] < c {
                trace.warnings.push(format!(
                    "level {:.3} dB at {} deg is below the reachable floor {:.3} dB",
                    magnitude_db(v_d[i]),
                    grid.angles()[i],
                    magnitude_db(c)
                ));
            }
        }
    }

    let mut w = problem.w0.clone();
    let mut pattern = eval.evaluate(w.as_slice())?;
    let mut peaks = sidelobe_peaks(&pattern.v_u, grid, mainlobe);
    let mut d = none_if_empty(d_metric(&pattern.v_u, &v_d, &peaks));
    trace.initial_d_db = d;
    let mut best = (d, w.clone(), pattern.clone());
    let mut excluded: HashSet<usize> = HashSet::new();

    for k in 1..=problem.max_iters {
        if d <= problem.d_tol {
            break;
        }
        let Some(p) = select_angle(&pattern.v_u, &v_d, &peaks, &excluded) else {
            break;
        };
        let theta_k = grid.angles()[p];
        let step = robust_control::control_with(
            w.as_slice(),
            &a0,
            eval.steering(p).to_vec(),
            theta_k,
            v_d[p],
            eps0,
            eps[p],
        );
        match step {
            Ok(out) => {
                w = out.weights;
                excluded.clear();
                pattern = eval.evaluate(w.as_slice())?;
                peaks = sidelobe_peaks(&pattern.v_u, grid, mainlobe);
                d = none_if_empty(d_metric(&pattern.v_u, &v_d, &peaks));
                let axis = eval.beam_axis(w.as_slice())?;
                trace.records.push(IterationRecord {
                    k,
                    theta_k,
                    rho_a: out.rho_a,
                    beta: out.beta,
                    d_k_db: d,
                    wng: axis.wng(),
                    v_d_db: magnitude_db(v_d[p]),
                    v_u_db: magnitude_db(pattern.v_u[p]),
                });
                if d < best.0 {
                    best = (d, w.clone(), pattern.clone());
                }
            }
            Err(e) if e.is_numeric_infeasibility() => {
                excluded.insert(p);
                trace.failures.push(ControlFailure {
                    k,
                    theta_k,
                    error: e,
                });
            }
            Err(e) => return Err(e),
        }
    }

    let converged = d <= problem.d_tol;
    let (weights, final_d, final_pattern) = if converged {
        (w.clone(), d, pattern)
    } else {
        (best.1, best.0, best.2)
    };
    Ok(SynthesisResult {
        weights,
        last_weights: w,
        converged,
        final_d_db: final_d,
        mainlobe,
        trace,
        pattern: final_pattern,
    })
}
