//! Potentials on the full shift, Birkhoff sums, level-sum pressure, the
//! Bowen dimension, Lyapunov exponent, entropy and the Hofbauer ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cifs::{CifsSystem, ConformalMap};
use crate::error::{Error, Result};
use crate::symbolic::Word;
use crate::weights::GibbsWeights;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `φ(ω) = s·log|u'_{ω₁}(π∘σ(ω))|`
    Geometric { s: f64 },
    /// `φ(ω) = log p_{ω₁}`. Zero weights are allowed and switch letters off.
    Bernoulli { weights: Vec<f64> },
    /// `φ(ω)` read from a table indexed by the first `depth` letters.
    Tabulated { depth: usize, values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    #[serde(flatten)]
    pub kind: PotentialKind,
    #[serde(default = "default_holder")]
    pub holder_exponent: f64,
}

fn default_holder() -> f64 {
    1.0
}

impl Potential {
    pub fn geometric(s: f64) -> Self {
        Potential {
            kind: PotentialKind::Geometric { s },
            holder_exponent: 1.0,
        }
    }

    pub fn bernoulli(weights: Vec<f64>) -> Self {
        Potential {
            kind: PotentialKind::Bernoulli { weights },
            holder_exponent: 1.0,
        }
    }

    /// `φ ≡ 0`.
    pub fn zero(m: usize) -> Self {
        Self::bernoulli(vec![1.0; m])
    }

    pub fn tabulated(depth: usize, values: Vec<f64>) -> Self {
        Potential {
            kind: PotentialKind::Tabulated { depth, values },
            holder_exponent: 1.0,
        }
    }

    /// Checks the potential against a system's alphabet.
    pub fn check(&self, sys: &CifsSystem) -> Result<()> {
        let m = sys.letter_count();
        if !(self.holder_exponent > 0.0) {
            return Err(Error::InvalidParameter("Hölder exponent must be positive".into()));
        }
        match &self.kind {
            PotentialKind::Geometric { s } => {
                if !s.is_finite() {
                    return Err(Error::InvalidParameter(format!("geometric exponent {s}")));
                }
            }
            PotentialKind::Bernoulli { weights } => {
                if weights.len() != m {
                    return Err(Error::InvalidParameter(format!(
                        "{} Bernoulli weights for {m} letters",
                        weights.len()
                    )));
                }
                if weights.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::InvalidParameter("Bernoulli weights must be finite and ≥ 0".into()));
                }
                if !(weights.iter().sum::<f64>() > 0.0) {
                    return Err(Error::InvalidParameter("Bernoulli weights sum to zero".into()));
                }
            }
            PotentialKind::Tabulated { depth, values } => {
                let need = m.checked_pow(*depth as u32);
                if *depth == 0 || need != Some(values.len()) {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated potential needs m^depth = {m}^{depth} values, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParameter("tabulated values must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// `(inf, sup)` of `S_nφ(τ)` over `τ ∈ [ω]`, `n = |ω|`.
pub fn birkhoff_bounds(sys: &CifsSystem, pot: &Potential, w: &Word) -> Result<(f64, f64)> {
    sys.check_word(w)?;
    match &pot.kind {
        PotentialKind::Geometric { s } => {
            let (lo, hi) = sys.derivative_bounds(w)?;
            Ok(scaled_log_range(*s, lo, hi))
        }
        PotentialKind::Bernoulli { weights } => {
            let v: f64 = w.letters().iter().map(|&a| weights[a].ln()).sum();
            Ok((v, v))
        }
        PotentialKind::Tabulated { depth, values } => {
            Ok(tabulated_bounds(sys.letter_count(), *depth, values, w.letters()))
        }
    }
}

fn scaled_log_range(s: f64, lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (s * lo.ln(), s * hi.ln());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn tabulated_bounds(m: usize, depth: usize, values: &[f64], w: &[usize]) -> (f64, f64) {
    let n = w.len();
    let mut lo = 0.0;
    let mut hi = 0.0;
    for j in 0..n {
        let known = &w[j..n.min(j + depth)];
        let base = known.iter().fold(0usize, |acc, &a| acc * m + a);
        let span = m.pow((depth - known.len()) as u32);
        let start = base * span;
        let slice = &values[start..start + span];
        lo += slice.iter().cloned().fold(f64::INFINITY, f64::min);
        hi += slice.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    }
    (lo, hi)
}

/// `S_nφ(ω^∞)`, the Birkhoff sum at the periodic extension of `ω`.
pub fn birkhoff_periodic(sys: &CifsSystem, pot: &Potential, w: &Word) -> Result<f64> {
    if w.is_empty() {
        return Ok(0.0);
    }
    sys.check_word(w)?;
    match &pot.kind {
        PotentialKind::Geometric { s } => {
            let f = sys.word_map(w);
            let y = f.attracting_fixed_point(&sys.seed().center());
            Ok(s * f.derivative_norm(&y).ln())
        }
        PotentialKind::Bernoulli { .. } => Ok(birkhoff_bounds(sys, pot, w)?.0),
        PotentialKind::Tabulated { depth, values } => {
            let m = sys.letter_count();
            let n = w.len();
            let ext = w.periodic_truncation(n + depth);
            Ok((0..n)
                .map(|j| {
                    let idx = ext.letters()[j..j + depth].iter().fold(0usize, |acc, &a| acc * m + a);
                    values[idx]
                })
                .sum())
        }
    }
}

/// Level-`n` pressure estimate with its lower companion.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureEstimate {
    /// `(1/n) log Σ exp(sup S_nφ)`
    pub value: f64,
    /// `(1/n) log Σ exp(inf S_nφ)`
    pub lower: f64,
    /// `(1/n) log Σ exp(S_nφ(ω^∞))`, which lies between the two and
    /// converges much faster than either.
    pub periodic: f64,
    pub level: usize,
    /// Bound on the level-one contribution of letters beyond the truncation.
    pub tail_mass: Option<f64>,
}

impl PressureEstimate {
    pub fn error(&self) -> f64 {
        self.value - self.lower
    }
}

/// Log-sum-exp accumulator.
#[derive(Clone, Copy, Debug)]
struct Lse {
    max: f64,
    sum: f64,
}

impl Lse {
    fn new() -> Self {
        Lse {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    fn merge(mut self, other: Lse) -> Lse {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if other.max > self.max {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        } else {
            self.sum += other.sum * (other.max - self.max).exp();
        }
        self
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Visits every word of length `n` together with its composed map.
/// Subtrees under distinct first letters run in parallel; results are
/// returned per first letter in alphabet order.
pub(crate) fn level_fold<T, F>(sys: &CifsSystem, n: usize, init: impl Fn() -> T + Sync, visit: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut T, &Word, &ConformalMap) + Sync,
{
    let m = sys.letter_count();
    (0..m)
        .into_par_iter()
        .map(|a| {
            let mut acc = init();
            let mut word = Word::new(vec![a]);
            let f = sys.letter_map(a).clone();
            descend(sys, n, &mut word, &f, &mut acc, &visit);
            acc
        })
        .collect()
}

fn descend<T, F>(sys: &CifsSystem, n: usize, word: &mut Word, f: &ConformalMap, acc: &mut T, visit: &F)
where
    F: Fn(&mut T, &Word, &ConformalMap),
{
    if word.len() == n {
        visit(acc, word, f);
        return;
    }
    for b in 0..sys.letter_count() {
        word.push(b);
        let g = f.compose(sys.letter_map(b));
        descend(sys, n, word, &g, acc, visit);
        let mut v = word.letters().to_vec();
        v.pop();
        *word = Word::new(v);
    }
}

fn tail_mass(sys: &CifsSystem, pot: &Potential) -> Result<Option<f64>> {
    let (Some(m), Some(law)) = (sys.truncation(), sys.tail_law()) else {
        return Ok(None);
    };
    match pot.kind {
        PotentialKind::Geometric { s } => {
            let t = law.tail_sum(m, s);
            if !t.is_finite() {
                return Err(Error::NonSummable(format!(
                    "Σ_a sup|u_a'|^s diverges at s = {s}"
                )));
            }
            Ok(Some(t))
        }
        // weights are declared only on the retained letters
        _ => Ok(Some(0.0)),
    }
}

/// `P_n = (1/n) log Σ_{|ω|=n} exp(sup_{[ω]} S_nφ)`.
pub fn pressure(sys: &CifsSystem, pot: &Potential, n: usize) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("pressure level must be ≥ 1".into()));
    }
    pot.check(sys)?;
    let tail = tail_mass(sys, pot)?;
    let m = sys.letter_count();
    // closed forms
    if let PotentialKind::Bernoulli { weights } = &pot.kind {
        let v = weights.iter().sum::<f64>().ln();
        return Ok(PressureEstimate {
            value: v,
            lower: v,
            periodic: v,
            level: n,
            tail_mass: tail,
        });
    }
    if let PotentialKind::Geometric { s } = pot.kind {
        if sys.is_similarity() {
            let mut acc = Lse::new();
            for a in 0..m {
                acc.push(s * sys.ratio(a).unwrap().ln());
            }
            let v = acc.value();
            return Ok(PressureEstimate {
                value: v,
                lower: v,
                periodic: v,
                level: n,
                tail_mass: tail,
            });
        }
    }
    if (m as f64).powi(n as i32) > 2e7 {
        return Err(Error::InvalidParameter(format!(
            "level {n} over {m} letters is too many words to enumerate"
        )));
    }
    let parts = level_fold(
        sys,
        n,
        || (Lse::new(), Lse::new(), Lse::new()),
        |acc, w, f| {
            let (lo, hi) = match &pot.kind {
                PotentialKind::Geometric { s } => {
                    let (lo, hi) = f.derivative_range(sys.seed());
                    scaled_log_range(*s, lo, hi)
                }
                PotentialKind::Tabulated { depth, values } => tabulated_bounds(m, *depth, values, w.letters()),
                PotentialKind::Bernoulli { .. } => unreachable!(),
            };
            let per = match &pot.kind {
                PotentialKind::Geometric { s } => {
                    let y = f.attracting_fixed_point(&sys.seed().center());
                    s * f.derivative_norm(&y).ln()
                }
                _ => birkhoff_periodic(sys, pot, w).unwrap_or(f64::NEG_INFINITY),
            };
            acc.0.push(lo);
            acc.1.push(hi);
            acc.2.push(per.clamp(lo, hi));
        },
    );
    let (lo, hi, per) = parts.into_iter().fold(
        (Lse::new(), Lse::new(), Lse::new()),
        |(a, b, c), (d, e, f)| (a.merge(d), b.merge(e), c.merge(f)),
    );
    let (value, lower) = (hi.value() / n as f64, lo.value() / n as f64);
    let periodic = per.value() / n as f64;
    if !value.is_finite() {
        return Err(Error::NonSummable(format!("level-{n} sum is {value}")));
    }
    Ok(PressureEstimate {
        value,
        lower,
        periodic,
        level: n,
        tail_mass: tail,
    })
}

/// Default enumeration level for a system: as deep as about 2¹⁶ words allow.
pub fn default_level(sys: &CifsSystem) -> usize {
    if sys.is_similarity() {
        return 1;
    }
    let m = sys.letter_count() as f64;
    ((16.0 * 2f64.ln() / m.ln()).floor() as usize).clamp(1, 16)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionEstimate {
    /// Root of the periodic-point pressure `s ↦ P_n(s)`.
    pub delta: f64,
    /// Root of the lower level sum; `lower ≤ delta`.
    pub lower: f64,
    /// Root of the upper (sup) level sum, or `d` when it stays positive.
    pub upper: f64,
    pub level: usize,
    pub truncation: Option<usize>,
}

/// Root of `s ↦ P_n(s·log|u'|)` on `[0, d]` by bisection.
pub fn bowen_dimension(sys: &CifsSystem) -> Result<DimensionEstimate> {
    bowen_dimension_at(sys, default_level(sys))
}

pub fn bowen_dimension_at(sys: &CifsSystem, n: usize) -> Result<DimensionEstimate> {
    let d = sys.dim() as f64;
    let eval = |s: f64, pick: fn(&PressureEstimate) -> f64| -> Result<f64> {
        match pressure(sys, &Potential::geometric(s), n) {
            Ok(p) => Ok(pick(&p)),
            Err(Error::NonSummable(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    let delta = bisect_root(&|s| eval(s, |p| p.periodic), 0.0, d)?;
    let lower = bisect_root(&|s| eval(s, |p| p.lower), 0.0, d).unwrap_or(delta);
    let upper = match bisect_root(&|s| eval(s, |p| p.value), 0.0, d) {
        Ok(v) => v,
        Err(Error::IrregularSystem { .. }) => d,
        Err(e) => return Err(e),
    };
    Ok(DimensionEstimate {
        delta,
        lower: lower.min(delta),
        upper: upper.max(delta),
        level: n,
        truncation: sys.truncation(),
    })
}

fn bisect_root(p: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let p_lo = p(lo)?;
    let p_hi = p(hi)?;
    if p_hi > 0.0 || p_lo < 0.0 {
        return Err(Error::IrregularSystem { lo, hi, p_lo, p_hi });
    }
    if p_lo == 0.0 {
        return Ok(lo);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let v = p(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub error: f64,
    pub level: usize,
    /// Set when the retained letters near the truncation still carry a
    /// non-negligible share of the integral.
    pub divergence_suspected: bool,
    pub truncation: Option<usize>,
}

/// `χ = ∫ log(1/|u'_{ω₁}(π∘σ(ω))|) dμ`, summed over level-`n` cylinders
/// with `π∘σ(ω)` bracketed by the cylinder image of `σω`.
pub fn lyapunov(sys: &CifsSystem, gw: &GibbsWeights, n: usize) -> Result<LyapunovEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("Lyapunov level must be ≥ 1".into()));
    }
    if gw.letter_count() != sys.letter_count() {
        return Err(Error::DimensionMismatch {
            expected: sys.letter_count(),
            got: gw.letter_count(),
        });
    }
    let m = sys.letter_count();
    let weights = gw.level_weights(n)?;
    // contributions grouped by first letter; tail words enumerated in order
    let per_first: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|a| {
            let span = weights.len() / m;
            let mut val = 0.0;
            let mut err = 0.0;
            let tail_len = n - 1;
            for k in 0..span {
                let wt = weights[a * span + k];
                if wt == 0.0 {
                    continue;
                }
                let (x, region) = if tail_len == 0 {
                    (sys.seed().center(), sys.seed().clone())
                } else {
                    let g = sys.word_map(&Word::from_index(k, m, tail_len));
                    (g.apply(&sys.seed().center()), g.image(sys.seed()).0)
                };
                let f = sys.letter_map(a);
                let centre = -f.derivative_norm(&x).ln();
                let (lo, hi) = f.derivative_range(&region);
                let spread = (-lo.ln() - centre).abs().max((centre + hi.ln()).abs());
                val += wt * centre;
                err += wt * spread;
            }
            (val, err)
        })
        .collect();
    let value: f64 = per_first.iter().map(|p| p.0).sum();
    let error: f64 = per_first.iter().map(|p| p.1).sum();
    let divergence_suspected = if sys.truncation().is_some() && m >= 10 {
        let cut = m - m / 10;
        let tail: f64 = per_first[cut..].iter().map(|p| p.0).sum();
        tail > 0.1 * value.abs()
    } else {
        false
    };
    Ok(LyapunovEstimate {
        value,
        error,
        level: n,
        divergence_suspected,
        truncation: sys.truncation(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub level: usize,
    pub exact: bool,
}

/// `(1/n) Σ_{|ω|=n} −μ[ω] log μ[ω]`, exact for product weights.
pub fn entropy(gw: &GibbsWeights, n: usize) -> Result<EntropyEstimate> {
    if n == 0 {
        return Err(Error::InvalidParameter("entropy level must be ≥ 1".into()));
    }
    if let Some(p) = gw.product_probs() {
        return Ok(EntropyEstimate {
            value: shannon(p),
            level: n,
            exact: true,
        });
    }
    let w = gw.level_weights(n)?;
    Ok(EntropyEstimate {
        value: shannon(&w) / n as f64,
        level: n,
        exact: false,
    })
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HofbauerEstimate {
    pub value: f64,
    pub error: f64,
    pub entropy: EntropyEstimate,
    pub lyapunov: LyapunovEstimate,
}

/// `δ(μ) = h(μ)/χ(μ)`.
pub fn hofbauer_dimension(sys: &CifsSystem, gw: &GibbsWeights, n: usize) -> Result<HofbauerEstimate> {
    let h = entropy(gw, n)?;
    let chi = lyapunov(sys, gw, n)?;
    if !(chi.value > 0.0) || !chi.value.is_finite() || chi.divergence_suspected {
        return Err(Error::Inapplicable(format!(
            "Lyapunov exponent {} is not a finite positive number",
            chi.value
        )));
    }
    let value = h.value / chi.value;
    // entropy error: zero for product weights, otherwise the O(1/n) level bias
    // is not certified and only the χ bracket is propagated
    let error = value * chi.error / chi.value;
    Ok(HofbauerEstimate {
        value,
        error,
        entropy: h,
        lyapunov: chi,
    })
}

/// One row of a thermodynamic report.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoRow {
    pub quantity: &'static str,
    pub value: f64,
    pub error: f64,
    pub level: usize,
}

/// Pressure at the conformal exponent, Bowen dimension, Lyapunov exponent,
/// entropy and their ratio for the conformal (geometric δ) weights.
pub fn thermo_report(sys: &CifsSystem, gw: &GibbsWeights, n: usize) -> Result<Vec<ThermoRow>> {
    let dim = bowen_dimension(sys)?;
    let p = pressure(sys, &Potential::geometric(dim.delta), dim.level)?;
    let hof = hofbauer_dimension(sys, gw, n)?;
    let mut rows = vec![
        ThermoRow {
            quantity: "pressure",
            value: p.value,
            error: p.error(),
            level: p.level,
        },
        ThermoRow {
            quantity: "delta",
            value: dim.delta,
            error: (dim.delta - dim.lower).max(dim.upper - dim.delta),
            level: dim.level,
        },
        ThermoRow {
            quantity: "lyapunov",
            value: hof.lyapunov.value,
            error: hof.lyapunov.error,
            level: n,
        },
        ThermoRow {
            quantity: "entropy",
            value: hof.entropy.value,
            error: 0.0,
            level: n,
        },
        ThermoRow {
            quantity: "hofbauer",
            value: hof.value,
            error: hof.error,
            level: n,
        },
    ];
    if let Some(t) = p.tail_mass {
        rows.push(ThermoRow {
            quantity: "tail_mass",
            value: t,
            error: 0.0,
            level: 1,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pressure_examples() {
        let bin = CifsSystem::binary();
        for n in 1..6 {
            let p = pressure(&bin, &Potential::zero(2), n).unwrap();
            assert!((p.value - 2f64.ln()).abs() < 1e-15);
        }
        let p = pressure(&bin, &Potential::bernoulli(vec![1.0 / 3.0, 2.0 / 3.0]), 4).unwrap();
        assert!(p.value.abs() < 1e-12);
        let mt = CifsSystem::middle_thirds();
        let s = 2f64.ln() / 3f64.ln();
        let p = pressure(&mt, &Potential::geometric(s), 3).unwrap();
        // Moran oracle: 2·(1/3)^s = 1
        assert!(p.value.abs() < 1e-12);
    }

    #[test]
    fn pressure_rejects_level_zero_and_divergence() {
        let mt = CifsSystem::middle_thirds();
        assert!(pressure(&mt, &Potential::geometric(0.5), 0).is_err());
        let g = CifsSystem::gauss(20).unwrap();
        assert!(matches!(
            pressure(&g, &Potential::geometric(0.4), 1),
            Err(Error::NonSummable(_))
        ));
    }

    #[test]
    fn bowen_examples() {
        let d = bowen_dimension(&CifsSystem::middle_thirds()).unwrap();
        assert!((d.delta - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        let d = bowen_dimension(&CifsSystem::binary()).unwrap();
        assert!((d.delta - 1.0).abs() < 1e-9);
        let q = CifsSystem::similarity_1d(&[(0.25, 0.0), (0.25, 0.75)]).unwrap();
        assert!((bowen_dimension(&q).unwrap().delta - 0.5).abs() < 1e-9);
    }

    #[test]
    fn gauss_pressure_brackets_and_dimension() {
        let g = CifsSystem::gauss(30).unwrap();
        let p = pressure(&g, &Potential::geometric(0.9), 2).unwrap();
        assert!(p.lower <= p.value);
        assert!(p.tail_mass.unwrap() > 0.0);
        let d = bowen_dimension_at(&g, 2).unwrap();
        assert!(d.lower <= d.delta && d.delta <= d.upper && d.delta <= 1.0);
        let p = pressure(&g, &Potential::geometric(d.delta), 2).unwrap();
        assert!(p.periodic.abs() < 1e-9);
        assert!(d.delta > 0.85);
    }

    #[test]
    fn pressure_decreasing_in_s() {
        let g = CifsSystem::gauss(12).unwrap();
        let mut prev = f64::INFINITY;
        for k in 11..=20 {
            let p = pressure(&g, &Potential::geometric(k as f64 * 0.05), 2).unwrap();
            assert!(p.value < prev);
            prev = p.value;
        }
    }

    #[test]
    fn tabulated_bounds_cover_periodic_values() {
        let g = CifsSystem::gauss(3).unwrap();
        let vals: Vec<f64> = (0..9).map(|i| -(i as f64 + 1.0) * 0.1).collect();
        let pot = Potential::tabulated(2, vals);
        for idx in 0..27 {
            let w = Word::from_index(idx, 3, 3);
            let (lo, hi) = birkhoff_bounds(&g, &pot, &w).unwrap();
            let v = birkhoff_periodic(&g, &pot, &w).unwrap();
            assert!(lo <= v + 1e-15 && v <= hi + 1e-15);
        }
    }
}
