//! Serializable system definitions.
//!
//! Scalars may be written as JSON numbers or as strings holding `"p/q"`,
//! an integer or a decimal. Strings are kept verbatim, so a file written back
//! out reproduces its rational inputs exactly and every parse of `"1/3"`
//! yields the same correctly rounded `f64`.
//!
//! ```json
//! {
//!   "name": "cantor",
//!   "system": {
//!     "kind": "similarity",
//!     "ratios": ["1/3", "1/3"],
//!     "translations": [["0"], ["2/3"]]
//!   },
//!   "measure": { "kind": "conformal" }
//! }
//! ```

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::cifs::{BranchMap, CifsSystem};
use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::symbolic::Word;
use crate::thermo::Potential;
use crate::toral::parse_rational;
use crate::weights::{Atom, GibbsWeights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn value(&self) -> Result<f64> {
        match self {
            Scalar::Number(v) => Ok(*v),
            Scalar::Text(s) => parse_rational(s)?
                .to_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidParameter(format!("{s:?} is out of range"))),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

fn values(v: &[Scalar]) -> Result<Vec<f64>> {
    v.iter().map(Scalar::value).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSpec {
    Box { lo: Vec<Scalar>, hi: Vec<Scalar> },
    Ball { center: Vec<Scalar>, radius: Scalar },
}

impl SeedSpec {
    fn region(&self) -> Result<Region> {
        Ok(match self {
            SeedSpec::Box { lo, hi } => Region::Box {
                lo: values(lo)?,
                hi: values(hi)?,
            },
            SeedSpec::Ball { center, radius } => Region::Ball {
                center: values(center)?,
                radius: radius.value()?,
            },
        })
    }
}

/// Complex coefficients `[re, im]` of `z ↦ (a z + b)/(c z + d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoebiusSpec {
    pub a: [Scalar; 2],
    pub b: [Scalar; 2],
    pub c: [Scalar; 2],
    pub d: [Scalar; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    /// `x ↦ r_a O_a x + t_a`. The seed defaults to the unit cube and the
    /// orthogonal parts to the identity.
    Similarity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<SeedSpec>,
        ratios: Vec<Scalar>,
        translations: Vec<Vec<Scalar>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        orthogonal: Option<Vec<Vec<Vec<Scalar>>>>,
    },
    Moebius { seed: SeedSpec, maps: Vec<MoebiusSpec> },
    /// Inverse Gauss branches `1/(a + x)` for `a ≤ truncation`.
    Gauss { truncation: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    #[serde(default)]
    pub pre: Vec<usize>,
    pub period: Vec<usize>,
    pub mass: Scalar,
}

/// The measure attached to a system. Defaults to the conformal measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Conformal {
        #[serde(default = "one")]
        depth: usize,
    },
    /// Product weights, normalized.
    Bernoulli { weights: Vec<Scalar> },
    Potential { potential: Potential, depth: usize },
    /// Invariant measure on the orbit of `period^∞`.
    PeriodicOrbit { period: Vec<usize> },
    Atoms { atoms: Vec<AtomSpec> },
}

fn one() -> usize {
    1
}

impl Default for MeasureSpec {
    fn default() -> Self {
        MeasureSpec::Conformal { depth: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
}

impl SystemFile {
    pub fn build_system(&self) -> Result<CifsSystem> {
        match &self.system {
            SystemSpec::Similarity {
                seed,
                ratios,
                translations,
                orthogonal,
            } => {
                let dim = translations.first().map_or(0, Vec::len);
                if ratios.len() != translations.len() {
                    return Err(Error::InvalidSystem(format!(
                        "{} ratios but {} translations",
                        ratios.len(),
                        translations.len()
                    )));
                }
                if let Some(o) = orthogonal {
                    if o.len() != ratios.len() {
                        return Err(Error::InvalidSystem("one orthogonal matrix per branch".into()));
                    }
                }
                let seed = match seed {
                    Some(s) => s.region()?,
                    None => Region::Box {
                        lo: vec![0.0; dim],
                        hi: vec![1.0; dim],
                    },
                };
                let identity: Vec<Vec<f64>> = (0..dim)
                    .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect();
                let mut branches = Vec::with_capacity(ratios.len());
                for (a, (r, t)) in ratios.iter().zip(translations).enumerate() {
                    let orth = match orthogonal {
                        Some(o) => o[a].iter().map(|row| values(row)).collect::<Result<_>>()?,
                        None => identity.clone(),
                    };
                    branches.push(BranchMap::Similarity {
                        ratio: r.value()?,
                        orthogonal: orth,
                        translation: values(t)?,
                    });
                }
                CifsSystem::new(seed, branches)
            }
            SystemSpec::Moebius { seed, maps } => {
                let pair = |z: &[Scalar; 2]| -> Result<[f64; 2]> { Ok([z[0].value()?, z[1].value()?]) };
                let branches = maps
                    .iter()
                    .map(|m| {
                        Ok(BranchMap::Moebius {
                            a: pair(&m.a)?,
                            b: pair(&m.b)?,
                            c: pair(&m.c)?,
                            d: pair(&m.d)?,
                        })
                    })
                    .collect::<Result<_>>()?;
                CifsSystem::new(seed.region()?, branches)
            }
            SystemSpec::Gauss { truncation } => CifsSystem::gauss(*truncation),
        }
    }

    pub fn build_measure(&self, sys: &CifsSystem) -> Result<GibbsWeights> {
        let m = sys.letter_count();
        match self.measure.clone().unwrap_or_default() {
            MeasureSpec::Conformal { depth } => GibbsWeights::conformal(sys, depth),
            MeasureSpec::Bernoulli { weights } => {
                if weights.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: weights.len(),
                    });
                }
                GibbsWeights::product(values(&weights)?)
            }
            MeasureSpec::Potential { potential, depth } => GibbsWeights::build(sys, &potential, depth),
            MeasureSpec::PeriodicOrbit { period } => GibbsWeights::periodic_orbit(m, &Word::new(period)),
            MeasureSpec::Atoms { atoms } => {
                let atoms = atoms
                    .into_iter()
                    .map(|a| {
                        Ok(Atom {
                            pre: Word::new(a.pre),
                            period: Word::new(a.period),
                            mass: a.mass.value()?,
                        })
                    })
                    .collect::<Result<_>>()?;
                GibbsWeights::atoms(m, atoms)
            }
        }
    }

    /// Describes a system of Möbius branches as a file, coefficients as numbers.
    pub fn from_branches(name: &str, seed: &Region, branches: &[BranchMap]) -> Result<Self> {
        let seed = match seed {
            Region::Box { lo, hi } => SeedSpec::Box {
                lo: lo.iter().map(|&v| v.into()).collect(),
                hi: hi.iter().map(|&v| v.into()).collect(),
            },
            Region::Ball { center, radius } => SeedSpec::Ball {
                center: center.iter().map(|&v| v.into()).collect(),
                radius: (*radius).into(),
            },
        };
        let pair = |z: &[f64; 2]| [Scalar::Number(z[0]), Scalar::Number(z[1])];
        let maps = branches
            .iter()
            .map(|b| match b {
                BranchMap::Moebius { a, b, c, d } => Ok(MoebiusSpec {
                    a: pair(a),
                    b: pair(b),
                    c: pair(c),
                    d: pair(d),
                }),
                _ => Err(Error::InvalidSystem("only Möbius branches are exported".into())),
            })
            .collect::<Result<_>>()?;
        Ok(SystemFile {
            name: Some(name.into()),
            system: SystemSpec::Moebius { seed, maps },
            measure: None,
        })
    }
}
