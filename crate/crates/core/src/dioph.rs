//! Rational approximation by brute force, exponents of (multiplicative)
//! irrationality, continued fractions, and extremality experiments.
//!
//! Errors use the sup norm, so rounding each coordinate is optimal for a
//! fixed denominator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cifs::CifsSystem;
use crate::error::{Error, Result};
use crate::measurelab::MAX_LEVEL;
use crate::weights::GibbsWeights;

/// Number of checkpoints of the exponent fit.
const FIT_POINTS: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct Approximation {
    pub q: u64,
    pub p: Vec<i64>,
    /// `max_i |x_i − p_i/q|`
    pub error: f64,
    /// `∏_i |x_i − p_i/q|`
    pub mult_error: f64,
}

fn is_exact(err: f64, x: &[f64]) -> bool {
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    err <= 4.0 * f64::EPSILON * scale
}

fn approximate(x: &[f64], q: u64) -> Approximation {
    let qf = q as f64;
    let mut error = 0.0f64;
    let mut mult_error = 1.0;
    let p = x
        .iter()
        .map(|&xi| {
            let pi = (qf * xi).round();
            let e = (xi - pi / qf).abs();
            error = error.max(e);
            mult_error *= e;
            pi as i64
        })
        .collect();
    Approximation { q, p, error, mult_error }
}

fn check_point(x: &[f64], q_max: u64) -> Result<()> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("point must have finite coordinates".into()));
    }
    if q_max == 0 {
        return Err(Error::InvalidParameter("Q_max must be at least 1".into()));
    }
    Ok(())
}

/// Record-setting approximations `p/q`, `q = 1..=q_max`, with
/// `p_i = round(q x_i)`. The scan stops at an exact hit.
pub fn best_approx(x: &[f64], q_max: u64) -> Result<Vec<Approximation>> {
    check_point(x, q_max)?;
    let mut out: Vec<Approximation> = Vec::new();
    for q in 1..=q_max {
        let a = approximate(x, q);
        if out.last().is_none_or(|b| a.error < b.error) {
            let exact = is_exact(a.error, x);
            out.push(a);
            if exact {
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaEstimate {
    /// Slope of `−log E(Q′)` against `log Q′`, `E(Q′)` the best sup error
    /// with denominator `≤ Q′`; `∞` on an exact hit.
    pub omega_hat: f64,
    /// The same fit for the multiplicative error.
    pub omega_mult_hat: f64,
    /// `max −log‖x − p/q‖ / log q` over the retained approximations, `q ≥ 2`.
    pub omega_record: f64,
    /// `max −log ∏|x_i − p_i/q| / log q` over `2 ≤ q ≤ Q_max`.
    pub omega_mult_record: f64,
    pub exact_hit: Option<u64>,
}

fn checkpoints(q_max: u64) -> Vec<u64> {
    let lo = (q_max as f64).powf(0.25).max(2.0);
    let hi = q_max as f64;
    if hi < lo {
        return Vec::new();
    }
    let mut pts: Vec<u64> = (0..FIT_POINTS)
        .map(|i| {
            let t = i as f64 / (FIT_POINTS - 1) as f64;
            (lo * (hi / lo).powf(t)).round() as u64
        })
        .collect();
    pts.dedup();
    pts
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn omega_estimate(x: &[f64], q_max: u64) -> Result<OmegaEstimate> {
    check_point(x, q_max)?;
    let marks = checkpoints(q_max);
    let mut next = 0;
    let (mut best, mut best_mult) = (f64::INFINITY, f64::INFINITY);
    let (mut record, mut mult_record) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut fit = Vec::new();
    let mut fit_mult = Vec::new();
    for q in 1..=q_max {
        let a = approximate(x, q);
        if is_exact(a.error, x) {
            return Ok(OmegaEstimate {
                omega_hat: f64::INFINITY,
                omega_mult_hat: f64::INFINITY,
                omega_record: f64::INFINITY,
                omega_mult_record: f64::INFINITY,
                exact_hit: Some(q),
            });
        }
        let lq = (q as f64).ln();
        if a.error < best {
            best = a.error;
            if q >= 2 {
                record = record.max(-a.error.ln() / lq);
            }
        }
        best_mult = best_mult.min(a.mult_error);
        if q >= 2 {
            mult_record = mult_record.max(-a.mult_error.ln() / lq);
        }
        while next < marks.len() && marks[next] == q {
            fit.push((lq, -best.ln()));
            fit_mult.push((lq, -best_mult.ln()));
            next += 1;
        }
    }
    Ok(OmegaEstimate {
        omega_hat: slope(&fit).unwrap_or(record),
        omega_mult_hat: slope(&fit_mult).unwrap_or(mult_record),
        omega_record: record,
        omega_mult_record: mult_record,
        exact_hit: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiophReport {
    pub point: Vec<f64>,
    pub q_max: u64,
    pub approximations: Vec<Approximation>,
    pub omega: OmegaEstimate,
    /// `ω̂ > 1 + 1/d`
    pub vwa: bool,
    /// `ω̂_× > d + 1`
    pub vwma: bool,
}

impl DiophReport {
    pub fn exact_rational_hit(&self) -> bool {
        self.omega.exact_hit.is_some()
    }
}

pub fn dioph_report(x: &[f64], q_max: u64) -> Result<DiophReport> {
    let d = x.len() as f64;
    let omega = omega_estimate(x, q_max)?;
    Ok(DiophReport {
        point: x.to_vec(),
        q_max,
        approximations: best_approx(x, q_max)?,
        vwa: omega.omega_hat > 1.0 + 1.0 / d,
        vwma: omega.omega_mult_hat > d + 1.0,
        omega,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction {
    /// `a_1, a_2, …` of `x = [0; a_1, a_2, …]`
    pub quotients: Vec<u64>,
    /// `p_k / q_k` for `k = 1, 2, …`
    pub convergents: Vec<(u64, u64)>,
    /// The expansion ended because `x` equals its last convergent.
    pub terminated: bool,
}

/// Expansion of `x ∈ (0, 1)` to at most `n_terms` quotients. Stops early when
/// the last convergent reproduces `x` or the denominators outgrow `f64`.
pub fn continued_fraction(x: f64, n_terms: usize) -> Result<ContinuedFraction> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("continued fractions need x in (0, 1), got {x}")));
    }
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (1u64, 0u64, 0u64, 1u64);
    let mut y = x;
    let mut terminated = false;
    while quotients.len() < n_terms {
        let inv = 1.0 / y;
        let a = inv.floor().max(1.0) as u64;
        let (Some(p), Some(q)) = (
            a.checked_mul(p1).and_then(|v| v.checked_add(p0)),
            a.checked_mul(q1).and_then(|v| v.checked_add(q0)),
        ) else {
            break;
        };
        if q > 1 << 53 {
            break;
        }
        quotients.push(a);
        convergents.push((p, q));
        (p0, q0, p1, q1) = (p1, q1, p, q);
        if is_exact((x - p as f64 / q as f64).abs(), &[x]) {
            terminated = true;
            break;
        }
        y = inv - a as f64;
        if y <= 0.0 {
            terminated = true;
            break;
        }
    }
    Ok(ContinuedFraction {
        quotients,
        convergents,
        terminated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledOmega {
    pub point: Vec<f64>,
    pub error_radius: f64,
    pub omega: OmegaEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalityReport {
    pub q_max: u64,
    pub samples: Vec<SampledOmega>,
    /// `(margin, fraction with ω̂ > 1 + 1/d + margin)`
    pub vwa_fractions: Vec<(f64, f64)>,
    pub exact_hits: usize,
    pub median_omega: f64,
    /// Largest coding error among the samples.
    pub noise_floor: f64,
    /// Set when some coding error exceeds `Q_max^{−(d+2)}`, so high `ω̂`
    /// values may be artefacts of truncation.
    pub downgraded: bool,
}

/// The default margins `{0.1, 0.25, 0.5}`.
pub const MARGINS: [f64; 3] = [0.1, 0.25, 0.5];

/// `ω̂` over `n_points` samples of `μ`; sample `i` uses its own stream
/// seeded by `(seed, i)`.
pub fn extremality_experiment(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    n_points: usize,
    q_max: u64,
    seed: u64,
    margins: &[f64],
) -> Result<ExtremalityReport> {
    if n_points == 0 {
        return Err(Error::InvalidParameter("need at least one point".into()));
    }
    let d = sys.dim() as f64;
    let radius = (q_max as f64).powf(-(d + 2.0));
    let samples: Vec<SampledOmega> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let s = gw.sample_point(sys, &mut rng, radius, 4 * MAX_LEVEL)?;
            Ok(SampledOmega {
                omega: omega_estimate(&s.point, q_max)?,
                point: s.point,
                error_radius: s.error_radius,
            })
        })
        .collect::<Result<_>>()?;
    let mut omegas: Vec<f64> = samples.iter().map(|s| s.omega.omega_hat).collect();
    omegas.sort_by(f64::total_cmp);
    let n = omegas.len();
    let median = if n % 2 == 1 {
        omegas[n / 2]
    } else {
        0.5 * (omegas[n / 2 - 1] + omegas[n / 2])
    };
    let threshold = 1.0 + 1.0 / d;
    let vwa_fractions = margins
        .iter()
        .map(|&m| (m, omegas.iter().filter(|&&w| w > threshold + m).count() as f64 / n as f64))
        .collect();
    let noise_floor = samples.iter().map(|s| s.error_radius).fold(0.0, f64::max);
    Ok(ExtremalityReport {
        q_max,
        exact_hits: samples.iter().filter(|s| s.omega.exact_hit.is_some()).count(),
        vwa_fractions,
        median_omega: median,
        noise_floor,
        downgraded: noise_floor > radius,
        samples,
    })
}
