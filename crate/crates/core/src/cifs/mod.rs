//! Conformal iterated function systems: branch maps on a compact seed set,
//! the coding map, cylinder diameters and derivative bounds, and a numeric
//! check of the defining axioms.

mod map;

pub use map::ConformalMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, Region};
use crate::symbolic::Word;

/// One branch `u_a`, as declared in a system file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchMap {
    /// `x ↦ ratio · O x + translation`.
    Similarity {
        ratio: f64,
        orthogonal: Vec<Vec<f64>>,
        translation: Vec<f64>,
    },
    /// `z ↦ (a z + b)/(c z + d)`, coefficients as `[re, im]`. In one
    /// dimension the imaginary parts must vanish.
    Moebius {
        a: [f64; 2],
        b: [f64; 2],
        c: [f64; 2],
        d: [f64; 2],
    },
    /// Inverse branch of the Gauss map, `x ↦ 1/(letter + x)`.
    Gauss { letter: u64 },
}

impl BranchMap {
    /// A one-dimensional similarity `x ↦ ratio·x + t`.
    pub fn affine(ratio: f64, t: f64) -> BranchMap {
        BranchMap::Similarity {
            ratio,
            orthogonal: vec![vec![1.0]],
            translation: vec![t],
        }
    }

    fn to_map(&self, dim: usize) -> Result<ConformalMap> {
        match self {
            BranchMap::Similarity {
                ratio,
                orthogonal,
                translation,
            } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidSystem(format!(
                        "similarity ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                if translation.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: translation.len(),
                    });
                }
                if orthogonal.len() != dim || orthogonal.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidSystem(format!(
                        "orthogonal part must be {dim}×{dim}"
                    )));
                }
                for i in 0..dim {
                    for j in 0..dim {
                        let g: f64 = (0..dim).map(|k| orthogonal[k][i] * orthogonal[k][j]).sum();
                        let id = if i == j { 1.0 } else { 0.0 };
                        if (g - id).abs() > 1e-9 {
                            return Err(Error::InvalidSystem(
                                "similarity matrix part is not orthogonal".into(),
                            ));
                        }
                    }
                }
                Ok(ConformalMap::Similarity {
                    ratio: *ratio,
                    orth: orthogonal.iter().flatten().copied().collect(),
                    trans: translation.clone(),
                })
            }
            BranchMap::Moebius { a, b, c, d } => {
                let [a, b, c, d] = [a, b, c, d].map(|z| Complex64::new(z[0], z[1]));
                if (a * d - b * c).norm() == 0.0 {
                    return Err(Error::InvalidSystem("Möbius branch with zero determinant".into()));
                }
                match dim {
                    1 => {
                        if [a, b, c, d].iter().any(|z| z.im != 0.0) {
                            return Err(Error::InvalidSystem(
                                "a Möbius branch on the line needs real coefficients".into(),
                            ));
                        }
                        Ok(ConformalMap::RealMoebius {
                            a: a.re,
                            b: b.re,
                            c: c.re,
                            d: d.re,
                        })
                    }
                    2 => Ok(ConformalMap::Moebius { a, b, c, d }),
                    _ => Err(Error::InvalidSystem(format!(
                        "Möbius branches act on dimension 1 or 2, not {dim}"
                    ))),
                }
            }
            BranchMap::Gauss { letter } => {
                if *letter < 1 {
                    return Err(Error::InvalidSystem("Gauss branch letter must be ≥ 1".into()));
                }
                if dim != 1 {
                    return Err(Error::DimensionMismatch { expected: 1, got: dim });
                }
                Ok(ConformalMap::RealMoebius {
                    a: 0.0,
                    b: 1.0,
                    c: 1.0,
                    d: *letter as f64,
                })
            }
        }
    }
}

/// Alphabet of a system: genuinely finite, or an infinite alphabet cut at
/// `m_max` letters whose tail obeys a known power law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alphabet {
    Finite(usize),
    Truncated { m_max: usize, tail: TailLaw },
}

/// `sup|u_a'| ≤ constant · a^{-exponent}` for the 1-based letters `a > m_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailLaw {
    pub constant: f64,
    pub exponent: f64,
}

impl TailLaw {
    /// Upper bound on `Σ_{a > m} (sup|u_a'|)^s`, infinite when the series diverges.
    pub fn tail_sum(&self, m: usize, s: f64) -> f64 {
        let e = self.exponent * s;
        if e <= 1.0 {
            return f64::INFINITY;
        }
        // Σ_{a>m} a^{-e} ≤ ∫_m^∞ t^{-e} dt
        self.constant.powf(s) * (m as f64).powf(1.0 - e) / (e - 1.0)
    }
}

/// Float error of a point produced by `steps` map applications or
/// compositions: `(steps + 2)·ε·max(1, ‖p‖∞)·√d`. Cylinder diameters below
/// this are not resolved by the computed point.
pub fn rounding_radius(point: &[f64], steps: usize) -> f64 {
    let scale = point.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    (steps + 2) as f64 * f64::EPSILON * scale * (point.len() as f64).sqrt()
}

/// A point of the limit set with a guaranteed containment radius.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingResult {
    pub point: Vec<f64>,
    pub error_radius: f64,
}

#[derive(Clone, Debug)]
pub struct CifsSystem {
    dim: usize,
    seed: Region,
    branches: Vec<BranchMap>,
    maps: Vec<ConformalMap>,
    alphabet: Alphabet,
    letter_sup: Vec<f64>,
    distortion: f64,
    contraction_sup: f64,
    contraction_level: usize,
}

impl CifsSystem {
    /// A system over a finite alphabet, one letter per branch.
    pub fn new(seed: Region, branches: Vec<BranchMap>) -> Result<Self> {
        let m = branches.len();
        Self::build(seed, branches, Alphabet::Finite(m))
    }

    /// The Gauss system `{x ↦ 1/(a + x)}` on `[0, 1]`, letters `a = 1..=m_max`
    /// stored as indices `a - 1`.
    pub fn gauss(m_max: usize) -> Result<Self> {
        if m_max < 2 {
            return Err(Error::InvalidParameter("Gauss truncation needs m_max ≥ 2".into()));
        }
        let branches = (1..=m_max as u64).map(|letter| BranchMap::Gauss { letter }).collect();
        Self::build(
            Region::interval(0.0, 1.0),
            branches,
            Alphabet::Truncated {
                m_max,
                tail: TailLaw {
                    constant: 1.0,
                    exponent: 2.0,
                },
            },
        )
    }

    /// One-dimensional similarity system on `[0, 1]` from `(ratio, translation)` pairs.
    pub fn similarity_1d(maps: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            Region::interval(0.0, 1.0),
            maps.iter().map(|&(r, t)| BranchMap::affine(r, t)).collect(),
        )
    }

    /// `{x/3, x/3 + 2/3}`.
    pub fn middle_thirds() -> Self {
        Self::similarity_1d(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)]).expect("valid system")
    }

    /// `{x/2, x/2 + 1/2}`, whose limit set is the whole interval.
    pub fn binary() -> Self {
        Self::similarity_1d(&[(0.5, 0.0), (0.5, 0.5)]).expect("valid system")
    }

    /// Three Möbius branches `z ↦ c_j + r·(z + a_j)/(1 + ā_j z)` of the unit
    /// disk into disjoint disks of radius `0.4` around `0.55·e^{2πij/3}`,
    /// with `a_j = 0.3·e^{2πij/3 + 1}`.
    pub fn schottky_three_disk() -> Self {
        let r = 0.4;
        let branches = (0..3)
            .map(|j| {
                let th = std::f64::consts::TAU * j as f64 / 3.0;
                let c = Complex64::from_polar(0.55, th);
                let a = Complex64::from_polar(0.3, th + 1.0);
                let big_a = r + c * a.conj();
                let big_b = a * r + c;
                let cc = a.conj();
                BranchMap::Moebius {
                    a: [big_a.re, big_a.im],
                    b: [big_b.re, big_b.im],
                    c: [cc.re, cc.im],
                    d: [1.0, 0.0],
                }
            })
            .collect();
        Self::new(
            Region::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            branches,
        )
        .expect("valid system")
    }

    /// Two planar similarities of ratio `1/3` whose limit set is a middle-thirds
    /// Cantor set on the line `y = 0`, so that line carries all the mass.
    pub fn planar_reducible() -> Self {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Self::new(
            Region::Box {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
            },
            [0.0, 2.0 / 3.0]
                .iter()
                .map(|&t| BranchMap::Similarity {
                    ratio: 1.0 / 3.0,
                    orthogonal: id.clone(),
                    translation: vec![t, 0.0],
                })
                .collect(),
        )
        .expect("valid system")
    }

    pub fn with_alphabet(seed: Region, branches: Vec<BranchMap>, alphabet: Alphabet) -> Result<Self> {
        Self::build(seed, branches, alphabet)
    }

    fn build(seed: Region, branches: Vec<BranchMap>, alphabet: Alphabet) -> Result<Self> {
        let dim = seed.dim();
        if dim == 0 {
            return Err(Error::InvalidSystem("seed set has dimension 0".into()));
        }
        let nondegenerate = match &seed {
            Region::Box { lo, hi } => hi.len() == dim && lo.iter().zip(hi).all(|(a, b)| b > a),
            Region::Ball { radius, .. } => *radius > 0.0,
        };
        if !nondegenerate {
            return Err(Error::InvalidSystem("seed set must have nonempty interior".into()));
        }
        if branches.is_empty() {
            return Err(Error::InvalidSystem("a system needs at least one branch".into()));
        }
        let expected = match alphabet {
            Alphabet::Finite(m) => m,
            Alphabet::Truncated { m_max, .. } => m_max,
        };
        if expected != branches.len() {
            return Err(Error::InvalidSystem(format!(
                "alphabet declares {expected} letters but {} branches are given",
                branches.len()
            )));
        }
        let maps = branches
            .iter()
            .map(|b| b.to_map(dim))
            .collect::<Result<Vec<_>>>()?;
        if maps.iter().any(|f| !f.same_family(&maps[0])) {
            return Err(Error::InvalidSystem(
                "all branches must come from one family (similarity or Möbius)".into(),
            ));
        }
        let tol = 1e-12 * seed.diameter();
        for f in &maps {
            if let Some(p) = f.pole() {
                if seed.distance_to_point(&p) <= tol {
                    return Err(Error::InvalidSystem(format!(
                        "branch pole {p:?} lies in the seed set"
                    )));
                }
            }
        }
        let letter_sup: Vec<f64> = maps.iter().map(|f| f.derivative_range(&seed).1).collect();
        let mut sys = CifsSystem {
            dim,
            seed,
            branches,
            maps,
            alphabet,
            letter_sup,
            distortion: 1.0,
            contraction_sup: 0.0,
            contraction_level: 1,
        };
        let (s, k) = sys.measure_contraction();
        sys.contraction_sup = s;
        sys.contraction_level = k;
        sys.distortion = 2.0 * sys.measure_distortion();
        Ok(sys)
    }

    fn measure_contraction(&self) -> (f64, usize) {
        let s1 = self.letter_sup.iter().cloned().fold(0.0, f64::max);
        if s1 < 1.0 {
            return (s1, 1);
        }
        // Level two: exact over the first letters, product bounds elsewhere.
        let m = self.maps.len();
        let head = m.min(256);
        let mut s2: f64 = 0.0;
        for a in 0..head {
            for b in 0..head {
                let f = self.maps[a].compose(&self.maps[b]);
                s2 = s2.max(f.derivative_range(&self.seed).1);
            }
        }
        if head < m {
            let tail_max = self.letter_sup[head..].iter().cloned().fold(0.0, f64::max);
            s2 = s2.max(tail_max * s1);
        }
        (s2, 2)
    }

    fn measure_distortion(&self) -> f64 {
        let m = self.maps.len();
        let mut worst: f64 = 1.0;
        let mut frontier: Vec<ConformalMap> = vec![self.maps[0].identity_like()];
        for _depth in 1..=6 {
            if frontier.len() * m > 4096 {
                break;
            }
            let mut next = Vec::with_capacity(frontier.len() * m);
            for f in &frontier {
                for g in &self.maps {
                    let h = f.compose(g);
                    let (lo, hi) = h.derivative_range(&self.seed);
                    worst = worst.max(hi / lo);
                    next.push(h);
                }
            }
            frontier = next;
        }
        // random deeper words, deterministic stream
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b6264);
        for _ in 0..2000 {
            let len = rng.random_range(1..=6);
            let w = Word::new((0..len).map(|_| rng.random_range(0..m)).collect());
            let (lo, hi) = self.word_map(&w).derivative_range(&self.seed);
            worst = worst.max(hi / lo);
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> &Region {
        &self.seed
    }

    pub fn branches(&self) -> &[BranchMap] {
        &self.branches
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Number of letters available for computation (the truncation level
    /// for infinite alphabets).
    pub fn letter_count(&self) -> usize {
        self.maps.len()
    }

    pub fn truncation(&self) -> Option<usize> {
        match self.alphabet {
            Alphabet::Finite(_) => None,
            Alphabet::Truncated { m_max, .. } => Some(m_max),
        }
    }

    pub fn tail_law(&self) -> Option<TailLaw> {
        match self.alphabet {
            Alphabet::Finite(_) => None,
            Alphabet::Truncated { tail, .. } => Some(tail),
        }
    }

    /// Certified multiplicative distortion constant `K_bd`.
    pub fn distortion_constant(&self) -> f64 {
        self.distortion
    }

    /// Supremum of `|u_ω'|` over words of length [`Self::contraction_level`].
    pub fn contraction_sup(&self) -> f64 {
        self.contraction_sup
    }

    pub fn contraction_level(&self) -> usize {
        self.contraction_level
    }

    /// Per-letter contraction rate `s_max^{1/k}`.
    pub fn contraction_rate(&self) -> f64 {
        self.contraction_sup.powf(1.0 / self.contraction_level as f64)
    }

    pub fn letter_sup(&self, a: usize) -> f64 {
        self.letter_sup[a]
    }

    pub fn is_similarity(&self) -> bool {
        matches!(self.maps[0], ConformalMap::Similarity { .. })
    }

    /// Similarity ratio of letter `a`, if the system is a similarity system.
    pub fn ratio(&self, a: usize) -> Option<f64> {
        match &self.maps[a] {
            ConformalMap::Similarity { ratio, .. } => Some(*ratio),
            _ => None,
        }
    }

    pub fn letter_map(&self, a: usize) -> &ConformalMap {
        &self.maps[a]
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        let m = self.maps.len();
        match w.letters().iter().find(|&&a| a >= m) {
            Some(&letter) => Err(Error::LetterOutOfRange { letter, alphabet: m }),
            None => Ok(()),
        }
    }

    /// `u_ω = u_{ω₁} ∘ ⋯ ∘ u_{ωₙ}`. Letters are assumed valid.
    pub fn word_map(&self, w: &Word) -> ConformalMap {
        let mut f = self.maps[0].identity_like();
        for &a in w.letters() {
            f = f.compose(&self.maps[a]);
        }
        f
    }

    pub fn apply_word(&self, w: &Word, x: &[f64]) -> Result<Vec<f64>> {
        self.check_word(w)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let distance = self.seed.distance_to_point(x);
        if distance > 1e-9 * self.seed.diameter() {
            return Err(Error::OutsideSeed {
                point: x.to_vec(),
                distance,
            });
        }
        let mut y = x.to_vec();
        for &a in w.letters().iter().rev() {
            y = self.maps[a].apply(&y);
        }
        Ok(y)
    }

    /// `u_ω(x₀)` for the seed centre `x₀`, with radius `D_ω`.
    pub fn coding_point(&self, w: &Word) -> Result<CodingResult> {
        if w.is_empty() {
            return Err(Error::EmptyWord);
        }
        let point = self.apply_word(w, &self.seed.center())?;
        Ok(CodingResult {
            error_radius: self.cylinder_diameter(w)? + rounding_radius(&point, w.len()),
            point,
        })
    }

    /// `π(pre · period^∞)`, computed exactly through the attracting fixed
    /// point of `u_period`.
    pub fn periodic_point(&self, pre: &Word, period: &Word) -> Result<Vec<f64>> {
        if period.is_empty() {
            return Err(Error::EmptyWord);
        }
        self.check_word(pre)?;
        self.check_word(period)?;
        let fixed = self.word_map(period).attracting_fixed_point(&self.seed.center());
        let mut y = fixed;
        for &a in pre.letters().iter().rev() {
            y = self.maps[a].apply(&y);
        }
        Ok(y)
    }

    /// Upper bound `D_ω ≥ diam π([ω])`, nonincreasing along extensions. It is
    /// the smallest exact image diameter `diam u_{ω|j}(X)` over the prefixes.
    pub fn cylinder_diameter(&self, w: &Word) -> Result<f64> {
        self.check_word(w)?;
        let mut best = self.seed.diameter();
        let mut f = self.maps[0].identity_like();
        for &a in w.letters() {
            f = f.compose(&self.maps[a]);
            best = best.min(f.image_diameter(&self.seed));
        }
        Ok(best)
    }

    /// Region containing `u_ω(X)`.
    pub fn cylinder_region(&self, w: &Word) -> Result<Region> {
        self.check_word(w)?;
        Ok(self.word_map(w).image(&self.seed).0)
    }

    /// `(inf, sup)` of `|u_ω'|` over the seed set.
    pub fn derivative_bounds(&self, w: &Word) -> Result<(f64, f64)> {
        self.check_word(w)?;
        Ok(self.word_map(w).derivative_range(&self.seed))
    }

    /// Numeric check of the axioms of a conformal IFS.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let diam = self.seed.diameter();
        let tol = 1e-9 * diam;

        checks.push(AxiomCheck {
            axiom: Axiom::ConeCondition,
            verdict: Verdict::Pass,
            witness: 0.0,
            detail: "seed set is a box or a ball".into(),
        });

        // seed invariance
        let mut worst_out: f64 = 0.0;
        for f in &self.maps {
            let (img, exact) = f.image(&self.seed);
            if exact && self.seed.contains_region(&img, tol) {
                continue;
            }
            for p in self.seed.boundary_grid(33) {
                worst_out = worst_out.max(self.seed.distance_to_point(&f.apply(&p)));
            }
        }
        checks.push(AxiomCheck {
            axiom: Axiom::SeedInvariance,
            verdict: if worst_out <= tol { Verdict::Pass } else { Verdict::Fail },
            witness: worst_out,
            detail: "largest distance of a branch image point outside the seed set".into(),
        });

        checks.push(AxiomCheck {
            axiom: Axiom::UniformContraction,
            verdict: if self.contraction_sup < 1.0 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            witness: self.contraction_sup,
            detail: format!(
                "sup |u_w'| over words of length {}",
                self.contraction_level
            ),
        });

        if let Some(m_max) = self.truncation() {
            let decreasing = self.letter_sup.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12));
            let last = *self.letter_sup.last().unwrap();
            checks.push(AxiomCheck {
                axiom: Axiom::DerivativeDecay,
                verdict: if decreasing && last < self.letter_sup[0] {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                },
                witness: last,
                detail: format!("sup |u_a'| is nonincreasing in a up to truncation {m_max}"),
            });
        }

        checks.push(AxiomCheck {
            axiom: Axiom::BoundedDistortion,
            verdict: if self.distortion.is_finite() {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            witness: self.distortion,
            detail: "certified K_bd (twice the largest observed ratio)".into(),
        });

        let head = self.maps.len().min(512);
        let images: Vec<(Region, bool)> = self.maps[..head].iter().map(|f| f.image(&self.seed)).collect();
        let mut min_sep = f64::INFINITY;
        let mut worst_exact = true;
        for i in 0..head {
            for j in i + 1..head {
                let s = images[i].0.separation(&images[j].0);
                if s < min_sep {
                    min_sep = s;
                    worst_exact = images[i].1 && images[j].1;
                }
            }
        }
        let sep_tol = 1e-12 * diam;
        let osc = if min_sep >= -sep_tol {
            Verdict::Pass
        } else if worst_exact {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        let ssc = if min_sep > sep_tol {
            Verdict::Pass
        } else if worst_exact {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        let scope = if head < self.maps.len() {
            format!(" (first {head} letters)")
        } else {
            String::new()
        };
        checks.push(AxiomCheck {
            axiom: Axiom::OpenSetCondition,
            verdict: osc,
            witness: min_sep,
            detail: format!("least signed separation of level-1 images{scope}"),
        });
        checks.push(AxiomCheck {
            axiom: Axiom::StrongSeparation,
            verdict: ssc,
            witness: min_sep,
            detail: format!("least gap between level-1 images{scope}"),
        });

        ValidationReport {
            checks,
            truncation: self.truncation(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axiom {
    ConeCondition,
    SeedInvariance,
    UniformContraction,
    DerivativeDecay,
    BoundedDistortion,
    OpenSetCondition,
    StrongSeparation,
}

impl Axiom {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axiom::ConeCondition => "cone-condition",
            Axiom::SeedInvariance => "seed-invariance",
            Axiom::UniformContraction => "uniform-contraction",
            Axiom::DerivativeDecay => "derivative-decay",
            Axiom::BoundedDistortion => "bounded-distortion",
            Axiom::OpenSetCondition => "open-set-condition",
            Axiom::StrongSeparation => "strong-separation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub verdict: Verdict,
    pub witness: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
    pub truncation: Option<usize>,
}

impl ValidationReport {
    pub fn get(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }

    /// All axioms a conformal IFS requires hold (strong separation is optional).
    pub fn is_cifs(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.axiom != Axiom::StrongSeparation)
            .all(|c| c.verdict == Verdict::Pass)
    }
}

/// Draws a uniformly random word of the given length (test and probe helper).
pub fn random_word<R: Rng>(rng: &mut R, m: usize, len: usize) -> Word {
    Word::new((0..len).map(|_| rng.random_range(0..m)).collect())
}

/// Distance between the coding points of two words (convenience for checks).
pub fn coding_distance(sys: &CifsSystem, a: &Word, b: &Word) -> Result<f64> {
    Ok(dist(&sys.coding_point(a)?.point, &sys.coding_point(b)?.point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: &[usize]) -> Word {
        Word::new(v.to_vec())
    }

    #[test]
    fn apply_word_examples() {
        let mt = CifsSystem::middle_thirds();
        let y = mt.apply_word(&w(&[0, 0]), &[1.0]).unwrap();
        assert!((y[0] - 1.0 / 9.0).abs() < 1e-16);
        assert_eq!(mt.apply_word(&Word::empty(), &[0.3]).unwrap(), vec![0.3]);
        let g = CifsSystem::gauss(50).unwrap();
        // letters 1,1 are indices 0,0
        let y = g.apply_word(&w(&[0, 0]), &[0.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn apply_word_errors() {
        let mt = CifsSystem::middle_thirds();
        assert!(matches!(
            mt.apply_word(&w(&[2]), &[0.5]),
            Err(Error::LetterOutOfRange { letter: 2, alphabet: 2 })
        ));
        assert!(matches!(mt.apply_word(&w(&[0]), &[1.5]), Err(Error::OutsideSeed { .. })));
    }

    #[test]
    fn coding_point_examples() {
        let mt = CifsSystem::middle_thirds();
        for n in 1..12 {
            let c = mt.coding_point(&Word::repeat(0, n)).unwrap();
            let r = 3f64.powi(-(n as i32));
            assert!(c.error_radius >= r && c.error_radius - r < 1e-14);
            assert!(c.point[0] <= r);
        }
        let c = mt.coding_point(&w(&[1, 1])).unwrap();
        assert!(c.point[0] >= 8.0 / 9.0 && c.point[0] <= 1.0);
        assert!((c.error_radius - 1.0 / 9.0).abs() < 1e-14);
        assert_eq!(mt.coding_point(&Word::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn gauss_golden_coding_point_matches_convergents() {
        // convergent oracle: F_{n}/F_{n+1}
        let (mut p, mut q) = (1u64, 1u64);
        for _ in 0..40 {
            let t = p + q;
            p = q;
            q = t;
        }
        let golden = p as f64 / q as f64;
        let g = CifsSystem::gauss(50).unwrap();
        let c = g.coding_point(&Word::repeat(0, 20)).unwrap();
        assert!((c.point[0] - golden).abs() < 1e-8);
        assert!((c.point[0] - golden).abs() <= c.error_radius);
    }

    #[test]
    fn cylinder_diameter_examples() {
        let mt = CifsSystem::middle_thirds();
        assert_eq!(mt.cylinder_diameter(&Word::empty()).unwrap(), 1.0);
        for n in 1..10 {
            let d = mt.cylinder_diameter(&Word::repeat(1, n)).unwrap();
            assert!((d - 3f64.powi(-(n as i32))).abs() < 1e-15);
        }
        // interval-image oracle for the Gauss cylinder [1,1] = [1/2, 2/3]
        let g = CifsSystem::gauss(50).unwrap();
        let d = g.cylinder_diameter(&w(&[0, 0])).unwrap();
        let truth = 2.0 / 3.0 - 0.5;
        assert!(d >= truth - 1e-15 && d <= g.distortion_constant() * truth);
    }

    #[test]
    fn derivative_bound_examples() {
        let mt = CifsSystem::middle_thirds();
        let (lo, hi) = mt.derivative_bounds(&w(&[0, 1, 1, 0])).unwrap();
        assert!((lo - 3f64.powi(-4)).abs() < 1e-18 && lo == hi);
        let g = CifsSystem::gauss(50).unwrap();
        let (lo, hi) = g.derivative_bounds(&w(&[1])).unwrap();
        assert!((lo - 1.0 / 9.0).abs() < 1e-15 && (hi - 0.25).abs() < 1e-15);
    }

    #[test]
    fn validation_examples() {
        let mt = CifsSystem::middle_thirds().validate();
        let c = mt.get(Axiom::UniformContraction).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert!((c.witness - 1.0 / 3.0).abs() < 1e-15);
        let s = mt.get(Axiom::StrongSeparation).unwrap();
        assert_eq!(s.verdict, Verdict::Pass);
        assert!((s.witness - 1.0 / 3.0).abs() < 1e-15);
        assert!(mt.is_cifs());

        let bin = CifsSystem::binary().validate();
        assert_eq!(bin.get(Axiom::OpenSetCondition).unwrap().verdict, Verdict::Pass);
        assert_eq!(bin.get(Axiom::StrongSeparation).unwrap().verdict, Verdict::Fail);

        let g = CifsSystem::gauss(50).unwrap();
        let report = g.validate();
        let c = report.get(Axiom::UniformContraction).unwrap();
        assert_eq!(c.verdict, Verdict::Pass);
        assert!((c.witness - 0.25).abs() < 1e-15);
        assert_eq!(g.contraction_level(), 2);
        assert_eq!(report.get(Axiom::DerivativeDecay).unwrap().verdict, Verdict::Pass);
        // closed-form per-letter bound 1/a²
        for a in 1..=50usize {
            assert!((g.letter_sup(a - 1) - 1.0 / (a * a) as f64).abs() < 1e-15);
        }
        assert!(report.is_cifs());
    }

    #[test]
    fn invalid_systems_are_rejected() {
        assert!(CifsSystem::similarity_1d(&[(1.0, 0.0)]).is_err());
        let bad_pole = BranchMap::Moebius {
            a: [0.0, 0.0],
            b: [1.0, 0.0],
            c: [1.0, 0.0],
            d: [-0.5, 0.0],
        };
        assert!(CifsSystem::new(Region::interval(0.0, 1.0), vec![bad_pole]).is_err());
        let escaping = CifsSystem::similarity_1d(&[(0.5, 0.75)]).unwrap();
        assert_eq!(
            escaping.validate().get(Axiom::SeedInvariance).unwrap().verdict,
            Verdict::Fail
        );
    }

    #[test]
    fn periodic_point_is_exact_for_similarities() {
        let bin = CifsSystem::binary();
        assert_eq!(bin.periodic_point(&w(&[1]), &w(&[0])).unwrap(), vec![0.5]);
        let mt = CifsSystem::middle_thirds();
        let x = mt.periodic_point(&Word::empty(), &w(&[0, 1])).unwrap();
        // 0.(02)_3 = 2/8 = 1/4
        assert!((x[0] - 0.25).abs() < 1e-16);
    }

    fn gauss_word() -> impl Strategy<Value = Word> {
        prop::collection::vec(0usize..12, 0..10).prop_map(Word::new)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn diameter_monotone_and_geometric(base in gauss_word(), ext in gauss_word()) {
            let g = CifsSystem::gauss(12).unwrap();
            let d0 = g.cylinder_diameter(&base).unwrap();
            let d1 = g.cylinder_diameter(&base.concat(&ext)).unwrap();
            prop_assert!(d1 <= d0);
            let k = g.contraction_level();
            let bound = g.contraction_sup().powi((base.len() / k) as i32) * g.seed().diameter();
            prop_assert!(d0 <= bound * (1.0 + 1e-12));
        }

        #[test]
        fn coding_containment(base in gauss_word(), ext in gauss_word()) {
            prop_assume!(!base.is_empty());
            let g = CifsSystem::gauss(12).unwrap();
            let c0 = g.coding_point(&base).unwrap();
            let c1 = g.coding_point(&base.concat(&ext)).unwrap();
            prop_assert!(dist(&c0.point, &c1.point) <= c0.error_radius * (1.0 + 1e-12));
        }

        #[test]
        fn distortion_certificate_holds(word in gauss_word(), x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            let g = CifsSystem::gauss(12).unwrap();
            let f = g.word_map(&word);
            let a = f.derivative_norm(&[x]);
            let b = f.derivative_norm(&[y]);
            prop_assert!(a <= g.distortion_constant() * b);
        }

        #[test]
        fn similarity_exactness(a in prop::collection::vec(0usize..3, 0..8), b in prop::collection::vec(0usize..3, 0..8)) {
            let sys = CifsSystem::similarity_1d(&[(0.2, 0.0), (0.3, 0.35), (0.25, 0.75)]).unwrap();
            let (a, b) = (Word::new(a), Word::new(b));
            let (lo, hi) = sys.derivative_bounds(&a).unwrap();
            prop_assert_eq!(lo, hi);
            let dab = sys.cylinder_diameter(&a.concat(&b)).unwrap();
            let prod = sys.cylinder_diameter(&a).unwrap() * sys.cylinder_diameter(&b).unwrap();
            prop_assert!((dab - prod).abs() <= 1e-14 * prod.max(1e-300));
        }
    }
}
