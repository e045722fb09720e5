//! Cylinder weights of Gibbs measures (and of a few non-Gibbs reference
//! measures), the Gibbs-ratio certificate, and a seeded symbolic sampler.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::cifs::{rounding_radius, CifsSystem};
use crate::error::{Error, Result};
use crate::symbolic::Word;
use crate::thermo::{birkhoff_bounds, birkhoff_periodic, bowen_dimension, level_fold, Potential, PotentialKind};

/// An atom at `π(pre · period^∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub pre: Word,
    pub period: Word,
    pub mass: f64,
}

impl Atom {
    /// Letter `i` of the infinite word.
    pub fn letter(&self, i: usize) -> usize {
        let p = self.pre.len();
        if i < p {
            self.pre.letters()[i]
        } else {
            self.period.letters()[(i - p) % self.period.len()]
        }
    }

    pub fn starts_with(&self, w: &Word) -> bool {
        w.letters().iter().enumerate().all(|(i, &a)| self.letter(i) == a)
    }

    pub fn truncation(&self, len: usize) -> Word {
        Word::new((0..len).map(|i| self.letter(i)).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// Bernoulli product measure.
    Product { probs: Vec<f64> },
    /// Explicit masses; `levels[k]` lists the `m^k` words of length `k`.
    Table { levels: Vec<Vec<f64>> },
    /// Finitely many atoms at eventually periodic codings.
    Atoms { atoms: Vec<Atom> },
}

const TABLE_CAP: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsWeights {
    m: usize,
    kind: WeightKind,
    pressure: Option<f64>,
    certificate: f64,
}

impl GibbsWeights {
    /// Product weights, normalized to a probability vector.
    pub fn product(probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidParameter("product weights must be ≥ 0 with positive sum".into()));
        }
        Ok(GibbsWeights {
            m: probs.len(),
            kind: WeightKind::Product {
                probs: probs.iter().map(|p| p / total).collect(),
            },
            pressure: Some(total.ln()),
            certificate: 1.0,
        })
    }

    /// The Gibbs weights of `pot`. Bernoulli potentials and geometric
    /// potentials on similarity systems give exact product weights; everything
    /// else is tabulated to `depth` from periodic-point Birkhoff sums.
    pub fn build(sys: &CifsSystem, pot: &Potential, depth: usize) -> Result<Self> {
        pot.check(sys)?;
        let m = sys.letter_count();
        match &pot.kind {
            PotentialKind::Bernoulli { weights } => return Self::product(weights.clone()),
            PotentialKind::Geometric { s } if sys.is_similarity() => {
                let raw: Vec<f64> = (0..m).map(|a| sys.ratio(a).unwrap().powf(*s)).collect();
                return Self::product(raw);
            }
            _ => {}
        }
        if depth == 0 {
            return Err(Error::InvalidParameter("weight table depth must be ≥ 1".into()));
        }
        if m.checked_pow(depth as u32).is_none_or(|c| c > TABLE_CAP) {
            return Err(Error::InvalidParameter(format!(
                "weight table {m}^{depth} exceeds {TABLE_CAP} entries"
            )));
        }
        let parts: Vec<Vec<f64>> = level_fold(sys, depth, Vec::new, |acc, w, _| {
            acc.push(birkhoff_periodic(sys, pot, w).unwrap_or(f64::NEG_INFINITY));
        });
        let logs: Vec<f64> = parts.into_iter().flatten().collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logs.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + z.ln();
        let pressure = log_z / depth as f64;
        let top: Vec<f64> = logs.iter().map(|v| (v - log_z).exp()).collect();
        let levels = sum_upward(m, depth, top);

        // certificate from rigorous Birkhoff brackets at every level
        let mut log_c: f64 = 0.0;
        for k in 1..=depth {
            let row = &levels[k];
            let parts: Vec<f64> = level_fold(sys, k, || 0.0f64, |acc, w, _| {
                let wt = row[w.index(m)];
                if wt <= 0.0 {
                    return;
                }
                let (lo, hi) = birkhoff_bounds(sys, pot, w).unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
                let lw = wt.ln() + pressure * k as f64;
                *acc = acc.max(lw - lo).max(hi - lw);
            });
            log_c = parts.into_iter().fold(log_c, f64::max);
        }
        Ok(GibbsWeights {
            m,
            kind: WeightKind::Table { levels },
            pressure: Some(pressure),
            certificate: log_c.exp(),
        })
    }

    /// Weights of the geometric potential at the Bowen dimension.
    pub fn conformal(sys: &CifsSystem, depth: usize) -> Result<Self> {
        let delta = bowen_dimension(sys)?.delta;
        Self::build(sys, &Potential::geometric(delta), depth)
    }

    /// Explicit masses of the words of length `depth` (lexicographic),
    /// normalized to total mass one.
    pub fn from_level_masses(m: usize, depth: usize, masses: Vec<f64>) -> Result<Self> {
        if m.checked_pow(depth as u32) != Some(masses.len()) || depth == 0 {
            return Err(Error::InvalidParameter(format!(
                "expected {m}^{depth} masses, got {}",
                masses.len()
            )));
        }
        let total: f64 = masses.iter().sum();
        if masses.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || !(total > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        let top = masses.iter().map(|x| x / total).collect();
        Ok(GibbsWeights {
            m,
            kind: WeightKind::Table {
                levels: sum_upward(m, depth, top),
            },
            pressure: None,
            certificate: f64::INFINITY,
        })
    }

    /// Atomic measure at eventually periodic codings, normalized.
    pub fn atoms(m: usize, atoms: Vec<Atom>) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if atoms.is_empty() || !(total > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        for a in &atoms {
            if a.period.is_empty() {
                return Err(Error::EmptyWord);
            }
            if let Some(&letter) = a.pre.letters().iter().chain(a.period.letters()).find(|&&l| l >= m) {
                return Err(Error::LetterOutOfRange { letter, alphabet: m });
            }
        }
        Ok(GibbsWeights {
            m,
            kind: WeightKind::Atoms {
                atoms: atoms
                    .into_iter()
                    .map(|a| Atom {
                        mass: a.mass / total,
                        ..a
                    })
                    .collect(),
            },
            pressure: None,
            certificate: f64::INFINITY,
        })
    }

    /// The shift-invariant measure on the periodic orbit of `period^∞`,
    /// which has zero entropy.
    pub fn periodic_orbit(m: usize, period: &Word) -> Result<Self> {
        let p = period.len();
        let atoms = (0..p)
            .map(|j| {
                let rot = Word::new((0..p).map(|i| period.letters()[(i + j) % p]).collect());
                Atom {
                    pre: Word::empty(),
                    period: rot,
                    mass: 1.0,
                }
            })
            .collect();
        Self::atoms(m, atoms)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn letter_count(&self) -> usize {
        self.m
    }

    pub fn pressure(&self) -> Option<f64> {
        self.pressure
    }

    /// `C_g`: every cylinder satisfies `μ[ω] / exp(S_{|ω|}φ(τ) − P|ω|) ∈ [1/C_g, C_g]`.
    /// Infinite for weights not built from a potential.
    pub fn distortion_certificate(&self) -> f64 {
        self.certificate
    }

    /// Deepest level at which weights are stored; `None` when unlimited.
    pub fn depth(&self) -> Option<usize> {
        match &self.kind {
            WeightKind::Table { levels } => Some(levels.len() - 1),
            _ => None,
        }
    }

    pub fn product_probs(&self) -> Option<&[f64]> {
        match &self.kind {
            WeightKind::Product { probs } => Some(probs),
            _ => None,
        }
    }

    pub fn atom_list(&self) -> Option<&[Atom]> {
        match &self.kind {
            WeightKind::Atoms { atoms } => Some(atoms),
            _ => None,
        }
    }

    fn check(&self, w: &Word) -> Result<()> {
        match w.letters().iter().find(|&&a| a >= self.m) {
            Some(&letter) => Err(Error::LetterOutOfRange {
                letter,
                alphabet: self.m,
            }),
            None => Ok(()),
        }
    }

    /// `μ([ω])`.
    pub fn weight(&self, w: &Word) -> Result<f64> {
        self.check(w)?;
        match &self.kind {
            WeightKind::Product { probs } => Ok(w.letters().iter().map(|&a| probs[a]).product()),
            WeightKind::Table { levels } => {
                let depth = levels.len() - 1;
                if w.len() > depth {
                    return Err(Error::LevelTooDeep {
                        requested: w.len(),
                        available: depth,
                    });
                }
                Ok(levels[w.len()][w.index(self.m)])
            }
            WeightKind::Atoms { atoms } => Ok(atoms.iter().filter(|a| a.starts_with(w)).map(|a| a.mass).sum()),
        }
    }

    /// `μ([ω·a])` for every letter `a`.
    pub fn child_weights(&self, w: &Word) -> Result<Vec<f64>> {
        self.check(w)?;
        match &self.kind {
            WeightKind::Product { probs } => {
                let base = self.weight(w)?;
                Ok(probs.iter().map(|p| base * p).collect())
            }
            WeightKind::Table { levels } => {
                let depth = levels.len() - 1;
                if w.len() >= depth {
                    return Err(Error::LevelTooDeep {
                        requested: w.len() + 1,
                        available: depth,
                    });
                }
                let start = w.index(self.m) * self.m;
                Ok(levels[w.len() + 1][start..start + self.m].to_vec())
            }
            WeightKind::Atoms { atoms } => {
                let mut out = vec![0.0; self.m];
                for a in atoms.iter().filter(|a| a.starts_with(w)) {
                    out[a.letter(w.len())] += a.mass;
                }
                Ok(out)
            }
        }
    }

    /// Child weights of `w` given its weight `base`, continuing a table past
    /// its depth by the Markov chain read off the deepest level (the chain
    /// the sampler follows).
    pub fn extended_child_weights(&self, w: &Word, base: f64) -> Result<Vec<f64>> {
        let WeightKind::Table { levels } = &self.kind else {
            return self.child_weights(w);
        };
        let depth = levels.len() - 1;
        if w.len() < depth {
            return self.child_weights(w);
        }
        let ctx = &w.letters()[w.len() + 1 - depth..];
        let start = Word::new(ctx.to_vec()).index(self.m) * self.m;
        let mut row = &levels[depth][start..start + self.m];
        let mut total: f64 = row.iter().sum();
        if !(total > 0.0) {
            row = &levels[1];
            total = 1.0;
        }
        Ok(row.iter().map(|x| base * x / total).collect())
    }

    /// All level-`n` weights in lexicographic order.
    pub fn level_weights(&self, n: usize) -> Result<Vec<f64>> {
        let count = self.m.checked_pow(n as u32).filter(|&c| c <= TABLE_CAP).ok_or_else(|| {
            Error::InvalidParameter(format!("level {n} over {} letters is too large to list", self.m))
        })?;
        match &self.kind {
            WeightKind::Product { probs } => {
                let mut row = vec![1.0];
                for _ in 0..n {
                    row = row.iter().flat_map(|x| probs.iter().map(move |p| x * p)).collect();
                }
                Ok(row)
            }
            WeightKind::Table { levels } => {
                let depth = levels.len() - 1;
                if n > depth {
                    return Err(Error::LevelTooDeep {
                        requested: n,
                        available: depth,
                    });
                }
                Ok(levels[n].clone())
            }
            WeightKind::Atoms { atoms } => {
                let mut row = vec![0.0; count];
                for a in atoms {
                    row[a.truncation(n).index(self.m)] += a.mass;
                }
                Ok(row)
            }
        }
    }

    /// Nonzero level-`n` weights keyed by word.
    pub fn level_support(&self, n: usize) -> Result<BTreeMap<Word, f64>> {
        if let WeightKind::Atoms { atoms } = &self.kind {
            let mut out = BTreeMap::new();
            for a in atoms {
                *out.entry(a.truncation(n)).or_insert(0.0) += a.mass;
            }
            return Ok(out);
        }
        let row = self.level_weights(n)?;
        Ok(row
            .into_iter()
            .enumerate()
            .filter(|(_, x)| *x > 0.0)
            .map(|(i, x)| (Word::from_index(i, self.m, n), x))
            .collect())
    }

    /// Draws a word of length `len`. Beyond a table's depth the word is
    /// continued by the Markov chain read off the deepest level.
    pub fn sample_word<R: Rng>(&self, rng: &mut R, len: usize) -> Word {
        let mut w = Word::empty();
        self.extend_word(rng, &mut w, len);
        w
    }

    /// Next letter of a `μ`-random word extending `w`, i.e. drawn from the
    /// conditional measure on `[w]`. For atoms `w` must carry mass.
    pub fn sample_next<R: Rng>(&self, rng: &mut R, w: &Word) -> usize {
        if let WeightKind::Atoms { atoms } = &self.kind {
            let live: Vec<&Atom> = atoms.iter().filter(|a| a.starts_with(w)).collect();
            let i = pick(rng, live.iter().map(|a| a.mass));
            return live[i].letter(w.len());
        }
        self.next_letter(rng, w)
    }

    fn next_letter<R: Rng>(&self, rng: &mut R, w: &Word) -> usize {
        match &self.kind {
            WeightKind::Product { probs } => pick(rng, probs.iter().copied()),
            WeightKind::Table { levels } => {
                let depth = levels.len() - 1;
                let ctx = if w.len() < depth {
                    w.clone()
                } else {
                    Word::new(w.letters()[w.len() + 1 - depth..].to_vec())
                };
                let start = ctx.index(self.m) * self.m;
                let row = &levels[ctx.len() + 1][start..start + self.m];
                if row.iter().sum::<f64>() > 0.0 {
                    pick(rng, row.iter().copied())
                } else {
                    pick(rng, levels[1].iter().copied())
                }
            }
            WeightKind::Atoms { .. } => unreachable!("atoms are sampled whole"),
        }
    }

    fn extend_word<R: Rng>(&self, rng: &mut R, w: &mut Word, len: usize) {
        if let WeightKind::Atoms { atoms } = &self.kind {
            let i = pick(rng, atoms.iter().map(|a| a.mass));
            *w = atoms[i].truncation(len);
            return;
        }
        while w.len() < len {
            let a = self.next_letter(rng, w);
            w.push(a);
        }
    }

    /// Samples a point of the limit set whose coding error is at most
    /// `radius`, or the best reached within `max_len` letters.
    pub fn sample_point<R: Rng>(&self, sys: &CifsSystem, rng: &mut R, radius: f64, max_len: usize) -> Result<Sample> {
        if sys.letter_count() != self.m {
            return Err(Error::DimensionMismatch {
                expected: sys.letter_count(),
                got: self.m,
            });
        }
        if let WeightKind::Atoms { atoms } = &self.kind {
            let i = pick(rng, atoms.iter().map(|a| a.mass));
            let a = &atoms[i];
            let point = sys.periodic_point(&a.pre, &a.period)?;
            return Ok(Sample {
                word: a.truncation(a.pre.len() + a.period.len()),
                error_radius: rounding_radius(&point, a.pre.len() + a.period.len()),
                point,
            });
        }
        let mut w = Word::empty();
        let mut f = sys.letter_map(0).identity_like();
        let mut diam = sys.seed().diameter();
        while w.len() < max_len.max(1) && (diam > radius || w.is_empty()) {
            let a = self.next_letter(rng, &w);
            w.push(a);
            f = f.compose(sys.letter_map(a));
            diam = diam.min(f.image_diameter(sys.seed()));
        }
        let point = f.apply(&sys.seed().center());
        Ok(Sample {
            error_radius: diam + rounding_radius(&point, w.len()),
            point,
            word: w,
        })
    }
}

fn pick<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    WeightedIndex::new(&w).expect("positive total weight").sample(rng)
}

fn sum_upward(m: usize, depth: usize, top: Vec<f64>) -> Vec<Vec<f64>> {
    let mut levels = vec![top];
    for _ in 0..depth {
        let below = levels.last().unwrap();
        let up: Vec<f64> = below.chunks(m).map(|c| c.iter().sum()).collect();
        levels.push(up);
    }
    levels.reverse();
    levels
}

/// A sampled limit-set point with its symbolic address.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub word: Word,
    pub point: Vec<f64>,
    pub error_radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsCheck {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub certificate: f64,
}

impl GibbsCheck {
    /// Whether every observed ratio lies in `[1/C_g, C_g]` up to rounding.
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.min_ratio >= (1.0 - rel_tol) / self.certificate && self.max_ratio <= self.certificate * (1.0 + rel_tol)
    }
}

/// Samples `pairs` cylinders `ω` of length `1..=max_len` (by the measure) and
/// points `τ ∈ [ω]`, and records `μ[ω] / exp(S_{|ω|}φ(τ) − P|ω|)`.
pub fn gibbs_ratio_check<R: Rng>(
    sys: &CifsSystem,
    pot: &Potential,
    gw: &GibbsWeights,
    pairs: usize,
    max_len: usize,
    rng: &mut R,
) -> Result<GibbsCheck> {
    let p = gw.pressure().ok_or_else(|| Error::InvalidParameter("weights carry no pressure".into()))?;
    let max_len = gw.depth().map_or(max_len, |d| d.min(max_len)).max(1);
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for _ in 0..pairs {
        let n = rng.random_range(1..=max_len);
        let omega = gw.sample_word(rng, n);
        let tail = gw.sample_word(rng, 24);
        let s = match &pot.kind {
            PotentialKind::Geometric { s } => {
                let y = sys.apply_word(&tail, &sys.seed().center())?;
                s * sys.word_map(&omega).derivative_norm(&y).ln()
            }
            PotentialKind::Bernoulli { .. } => birkhoff_bounds(sys, pot, &omega)?.0,
            PotentialKind::Tabulated { depth, values } => {
                let m = sys.letter_count();
                let tau = omega.concat(&tail);
                (0..n)
                    .map(|j| values[Word::new(tau.letters()[j..j + depth].to_vec()).index(m)])
                    .sum()
            }
        };
        let ratio = gw.weight(&omega)? / (s - p * n as f64).exp();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(GibbsCheck {
        pairs,
        min_ratio: lo,
        max_ratio: hi,
        certificate: gw.distortion_certificate(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn table_is_normalized_and_compatible() {
        let g = CifsSystem::gauss(8).unwrap();
        let gw = GibbsWeights::build(&g, &Potential::geometric(0.95), 3).unwrap();
        for n in 0..=3 {
            let row = gw.level_weights(n).unwrap();
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for idx in 0..64 {
            let w = Word::from_index(idx, 8, 2);
            let kids: f64 = gw.child_weights(&w).unwrap().iter().sum();
            assert!((kids - gw.weight(&w).unwrap()).abs() < 1e-15);
        }
        assert!(matches!(
            gw.weight(&Word::repeat(0, 4)),
            Err(Error::LevelTooDeep { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn bernoulli_certificate_is_one() {
        let bin = CifsSystem::binary();
        let pot = Potential::bernoulli(vec![1.0 / 3.0, 2.0 / 3.0]);
        let gw = GibbsWeights::build(&bin, &pot, 4).unwrap();
        assert_eq!(gw.distortion_certificate(), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let check = gibbs_ratio_check(&bin, &pot, &gw, 1000, 12, &mut rng).unwrap();
        assert!(check.holds(1e-12));
    }

    #[test]
    fn gauss_geometric_gibbs_ratio_within_certificate() {
        let g = CifsSystem::gauss(10).unwrap();
        let pot = Potential::geometric(0.9);
        let gw = GibbsWeights::build(&g, &pot, 3).unwrap();
        assert!(gw.distortion_certificate() >= 1.0 && gw.distortion_certificate().is_finite());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let check = gibbs_ratio_check(&g, &pot, &gw, 1000, 3, &mut rng).unwrap();
        assert!(check.holds(1e-9), "{check:?}");
    }

    #[test]
    fn periodic_orbit_weights() {
        let gw = GibbsWeights::periodic_orbit(2, &Word::new(vec![0, 1])).unwrap();
        assert_eq!(gw.weight(&Word::new(vec![0])).unwrap(), 0.5);
        assert_eq!(gw.weight(&Word::new(vec![0, 1, 0])).unwrap(), 0.5);
        assert_eq!(gw.weight(&Word::new(vec![0, 0])).unwrap(), 0.0);
        assert_eq!(gw.child_weights(&Word::new(vec![1])).unwrap(), vec![0.5, 0.0]);
    }

    #[test]
    fn sampler_frequencies_match_weights() {
        let gw = GibbsWeights::product(vec![0.25, 0.75]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let ones = (0..n).filter(|_| gw.sample_word(&mut rng, 1).letters()[0] == 1).count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }

    #[test]
    fn sampled_points_respect_radius() {
        let mt = CifsSystem::middle_thirds();
        let gw = GibbsWeights::conformal(&mt, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let s = gw.sample_point(&mt, &mut rng, 1e-9, 64).unwrap();
            assert!(s.error_radius <= 1e-9);
            let c = mt.coding_point(&s.word).unwrap();
            assert!((c.point[0] - s.point[0]).abs() < 1e-15);
        }
    }
}
