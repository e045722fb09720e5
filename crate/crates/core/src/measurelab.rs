//! Ball and surface-neighborhood masses by cylinder covers, local dimension,
//! Federer ratios, decay exponent envelopes, global decay, and the escape
//! bound for thin neighborhoods.
//!
//! Every mass is a bracket: `lower` sums cylinders whose image region lies
//! inside the target set, `upper` adds the cylinders that still straddle its
//! boundary at the resolution limit, and `estimate` counts a straddling
//! cylinder when its coding point is inside. Atomic measures are exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cifs::{CifsSystem, ConformalMap};
use crate::error::{Error, Result};
use crate::geometry::{dist, norm, GeneralizedSphere, Hyperplane, Region};
use crate::symbolic::Word;
use crate::weights::{GibbsWeights, WeightKind};

/// Descents never go deeper than this many letters.
pub const MAX_LEVEL: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassBracket {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    /// Deepest level reached.
    pub level: usize,
}

impl MassBracket {
    fn exact(v: f64) -> Self {
        MassBracket {
            lower: v,
            upper: v,
            estimate: v,
            level: 0,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The exceptional set `E` of a quasi-decay estimate, on symbolic space.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ExceptionalSet {
    #[default]
    Full,
    /// The union of the listed cylinders.
    Cylinders(Vec<Word>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Membership {
    In,
    Partial,
    Out,
}

impl ExceptionalSet {
    fn membership(&self, w: &Word) -> Membership {
        match self {
            ExceptionalSet::Full => Membership::In,
            ExceptionalSet::Cylinders(cyls) => {
                if cyls.iter().any(|c| c.is_prefix_of(w)) {
                    Membership::In
                } else if cyls.iter().any(|c| w.is_prefix_of(c)) {
                    Membership::Partial
                } else {
                    Membership::Out
                }
            }
        }
    }
}

/// When a descent stops refining a straddling cylinder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub max_level: usize,
    pub min_diameter: f64,
    /// Continue table weights past their depth by their Markov chain.
    pub extend: bool,
}

impl Resolution {
    /// Exactly `level` letters.
    pub fn level(level: usize) -> Self {
        Resolution {
            max_level: level,
            min_diameter: 0.0,
            extend: false,
        }
    }

    /// Refine until cylinders are below `scale / 64` or [`MAX_LEVEL`]
    /// letters, extending table weights past their depth.
    pub fn for_scale(scale: f64) -> Self {
        Resolution {
            max_level: MAX_LEVEL,
            min_diameter: scale / 64.0,
            extend: true,
        }
    }
}

/// A closed target set: a ball, a surface thickening, or their intersection.
#[derive(Clone, Debug)]
pub struct Target {
    pub ball: Option<(Vec<f64>, f64)>,
    pub surface: Option<(GeneralizedSphere, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Class {
    Inside,
    Outside,
    Straddle,
}

fn closed(t: f64) -> f64 {
    // ties count as inside
    t * (1.0 + 1e-12) + 1e-15
}

impl Target {
    pub fn ball(x: &[f64], rho: f64) -> Self {
        Target {
            ball: Some((x.to_vec(), rho)),
            surface: None,
        }
    }

    pub fn neighborhood(surface: &GeneralizedSphere, thickness: f64) -> Self {
        Target {
            ball: None,
            surface: Some((surface.clone(), thickness)),
        }
    }

    pub fn neighborhood_in_ball(surface: &GeneralizedSphere, thickness: f64, x: &[f64], rho: f64) -> Self {
        Target {
            ball: Some((x.to_vec(), rho)),
            surface: Some((surface.clone(), thickness)),
        }
    }

    fn classify(&self, r: &Region) -> Class {
        let mut inside = true;
        if let Some((x, rho)) = &self.ball {
            let (near, far) = r.distance_range(x);
            let t = closed(*rho);
            if near > t {
                return Class::Outside;
            }
            inside &= far <= t;
        }
        if let Some((s, th)) = &self.surface {
            let (near, far) = s.distance_range(r);
            let t = closed(*th);
            if near > t {
                return Class::Outside;
            }
            inside &= far <= t;
        }
        if inside {
            Class::Inside
        } else {
            Class::Straddle
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.ball.as_ref().is_none_or(|(x, rho)| dist(x, p) <= closed(*rho))
            && self.surface.as_ref().is_none_or(|(s, th)| s.distance(p) <= closed(*th))
    }
}

/// Result of a mass query, with the pieces of support that were counted.
#[derive(Clone, Debug)]
pub struct MassOutcome {
    pub mass: MassBracket,
    /// Regions certainly inside the target and points of straddling
    /// cylinders judged inside (zero-radius balls).
    pub support: Vec<Region>,
}

/// `μ(T ∩ E)` bracketed by a cylinder descent.
pub fn mass_query(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    target: &Target,
    e: &ExceptionalSet,
    res: Resolution,
    collect_support: bool,
) -> Result<MassOutcome> {
    if gw.letter_count() != sys.letter_count() {
        return Err(Error::DimensionMismatch {
            expected: sys.letter_count(),
            got: gw.letter_count(),
        });
    }
    if let Some(atoms) = gw.atom_list() {
        let mut v = 0.0;
        let mut support = Vec::new();
        for a in atoms {
            let in_e = match e {
                ExceptionalSet::Full => true,
                ExceptionalSet::Cylinders(c) => c.iter().any(|w| a.starts_with(w)),
            };
            let p = sys.periodic_point(&a.pre, &a.period)?;
            if in_e && target.contains(&p) {
                v += a.mass;
                if collect_support {
                    support.push(Region::Ball { center: p, radius: 0.0 });
                }
            }
        }
        return Ok(MassOutcome {
            mass: MassBracket::exact(v),
            support,
        });
    }
    if let Some(depth) = gw.depth() {
        if res.max_level > depth && !res.extend {
            return Err(Error::LevelTooDeep {
                requested: res.max_level,
                available: depth,
            });
        }
    }
    let seed = sys.seed();
    let mut out = MassBracket {
        lower: 0.0,
        upper: 0.0,
        estimate: 0.0,
        level: 0,
    };
    let mut support = Vec::new();
    let root = sys.letter_map(0).identity_like();
    let mut stack: Vec<(Word, ConformalMap, f64, f64)> = vec![(Word::empty(), root, 1.0, seed.diameter())];
    while let Some((w, f, wt, diam)) = stack.pop() {
        if wt <= 0.0 {
            continue;
        }
        let member = e.membership(&w);
        if member == Membership::Out {
            continue;
        }
        let region = if w.is_empty() { seed.clone() } else { f.image(seed).0 };
        let class = target.classify(&region);
        out.level = out.level.max(w.len());
        match class {
            Class::Outside => continue,
            Class::Inside if member == Membership::In => {
                out.lower += wt;
                out.upper += wt;
                out.estimate += wt;
                if collect_support {
                    support.push(region);
                }
                continue;
            }
            _ => {}
        }
        let terminal = w.len() >= res.max_level || diam <= res.min_diameter;
        if terminal {
            out.upper += wt;
            if member == Membership::In {
                let p = f.apply(&seed.center());
                if target.contains(&p) {
                    out.estimate += wt;
                    if collect_support {
                        support.push(Region::Ball { center: p, radius: 0.0 });
                    }
                }
            }
            continue;
        }
        let kids = if res.extend {
            gw.extended_child_weights(&w, wt)?
        } else {
            gw.child_weights(&w)?
        };
        for (a, &cw) in kids.iter().enumerate().rev() {
            if cw <= 0.0 {
                continue;
            }
            let g = f.compose(sys.letter_map(a));
            let d = diam.min(g.image_diameter(seed));
            stack.push((w.child(a), g, cw, d));
        }
    }
    Ok(MassOutcome { mass: out, support })
}

/// `μ(B(x, ρ))` over level-`level` cylinders.
pub fn ball_mass(gw: &GibbsWeights, sys: &CifsSystem, x: &[f64], rho: f64, level: usize) -> Result<MassBracket> {
    check_radius(rho)?;
    Ok(mass_query(gw, sys, &Target::ball(x, rho), &ExceptionalSet::Full, Resolution::level(level), false)?.mass)
}

/// `μ(N̄(L, βρ) ∩ B(x, ρ))` over level-`level` cylinders.
pub fn neighborhood_mass(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    surface: &GeneralizedSphere,
    beta: f64,
    x: &[f64],
    rho: f64,
    level: usize,
) -> Result<MassBracket> {
    check_radius(rho)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("β must be positive, got {beta}")));
    }
    let t = Target::neighborhood_in_ball(surface, beta * rho, x, rho);
    Ok(mass_query(gw, sys, &t, &ExceptionalSet::Full, Resolution::level(level), false)?.mass)
}

fn check_radius(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {rho}")));
    }
    Ok(())
}

/// Least-squares line `y = intercept + slope·x` with the residual RMS.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: Vec<(f64, f64)>,
}

fn least_squares(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Some(SlopeFit {
        slope,
        intercept,
        residual,
        points: points.to_vec(),
    })
}

/// Slope of `log μ(B(x, ρ))` against `log ρ`.
pub fn local_dimension(gw: &GibbsWeights, sys: &CifsSystem, x: &[f64], rho_grid: &[f64]) -> Result<SlopeFit> {
    let mut pts = Vec::new();
    for &rho in rho_grid {
        check_radius(rho)?;
        let m = mass_query(
            gw,
            sys,
            &Target::ball(x, rho),
            &ExceptionalSet::Full,
            Resolution::for_scale(1e-2 * rho),
            false,
        )?
        .mass;
        let v = if m.estimate > 0.0 {
            m.estimate
        } else {
            0.5 * (m.lower + m.upper)
        };
        if v > 0.0 {
            pts.push((rho.ln(), v.ln()));
        }
    }
    if pts.is_empty() {
        return Err(Error::UndefinedDimension("every ball along the grid has zero mass".into()));
    }
    if pts.len() == 1 {
        return Err(Error::UndefinedDimension("only one radius carries mass".into()));
    }
    least_squares(&pts).ok_or_else(|| Error::UndefinedDimension("degenerate radius grid".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FedererReport {
    /// Largest `upper μ(B(x,Kρ)) / lower μ(B(x,ρ))` over the probes.
    pub worst_ratio: f64,
    pub worst_center: Vec<f64>,
    pub worst_radius: f64,
    pub probes: usize,
    /// Probes skipped because the small ball's lower bracket vanished.
    pub skipped: usize,
}

pub fn federer_check(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    k: f64,
    centers: &[Vec<f64>],
    rho_grid: &[f64],
) -> Result<FedererReport> {
    if !(k > 1.0) {
        return Err(Error::InvalidParameter(format!("Federer factor must exceed 1, got {k}")));
    }
    let jobs: Vec<(usize, f64)> = (0..centers.len())
        .flat_map(|i| rho_grid.iter().map(move |&r| (i, r)))
        .collect();
    let results: Vec<Result<Option<(f64, usize, f64)>>> = jobs
        .par_iter()
        .map(|&(i, rho)| {
            let x = &centers[i];
            let res = Resolution::for_scale(1e-2 * rho);
            let small = mass_query(gw, sys, &Target::ball(x, rho), &ExceptionalSet::Full, res, false)?.mass;
            if small.lower <= 0.0 {
                return Ok(None);
            }
            let big = mass_query(gw, sys, &Target::ball(x, k * rho), &ExceptionalSet::Full, res, false)?.mass;
            Ok(Some((big.upper / small.lower, i, rho)))
        })
        .collect();
    let mut report = FedererReport {
        worst_ratio: 0.0,
        worst_center: Vec::new(),
        worst_radius: 0.0,
        probes: jobs.len(),
        skipped: 0,
    };
    for r in results {
        match r? {
            None => report.skipped += 1,
            Some((ratio, i, rho)) => {
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.worst_center = centers[i].clone();
                    report.worst_radius = rho;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayMode {
    /// Thickness `βρ`, all `β` in the grid.
    Absolute,
    /// Thickness `βρ` with `β ∈ {ρ^γ, ρ^{2γ}, ρ^{4γ}}`.
    Quasi { gamma: f64 },
    /// Thickness `β·‖d_L‖_{μ,B}`.
    Decaying,
}

/// One ball and one surface; the mode decides the thicknesses tried.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub surface: GeneralizedSphere,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayProbe {
    pub center: Vec<f64>,
    pub radius: f64,
    pub beta: f64,
    pub thickness: f64,
    pub surface: GeneralizedSphere,
    pub mass_in: MassBracket,
    pub mass_ball: MassBracket,
}

impl DecayProbe {
    /// The conservative ratio `upper(in) / lower(ball)`.
    pub fn ratio(&self) -> f64 {
        self.mass_in.upper / self.mass_ball.lower
    }
}

/// Upper envelope `ratio ≤ C₁ β^α` through the probes.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFitReport {
    pub c1: f64,
    pub alpha: f64,
    /// Mean of `log(C₁β^α) − log ratio` over the fitted probes.
    pub mean_log_gap: f64,
    pub gamma: Option<f64>,
    pub grid: String,
    /// The probe closest to the envelope.
    pub worst: Option<DecayProbe>,
    pub probes: Vec<DecayProbe>,
    pub degenerate: usize,
    pub violations: usize,
}

/// The supporting line of the upper convex hull at the mean abscissa, so
/// every point lies on or below it. Returns `(slope, intercept)`.
pub fn envelope_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.is_empty() {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    if pts.len() == 1 {
        return Some((0.0, pts[0].1));
    }
    let mean = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let j = (0..hull.len() - 1)
        .find(|&j| hull[j + 1].0 >= mean)
        .unwrap_or(hull.len() - 2);
    let (a, b) = (hull[j], hull[j + 1]);
    let slope = (b.1 - a.1) / (b.0 - a.0);
    Some((slope, a.1 - slope * a.0))
}

fn spread(support: &[Region], surface: &GeneralizedSphere) -> f64 {
    support
        .iter()
        .map(|r| surface.distance_range(r).1)
        .fold(0.0, f64::max)
}

/// Fits the decay envelope over `probes × betas` (or the quasi triple).
pub fn decay_fit(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    mode: DecayMode,
    probes: &[ProbeSpec],
    betas: &[f64],
    e: &ExceptionalSet,
) -> Result<DecayFitReport> {
    if let DecayMode::Quasi { gamma } = mode {
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
        }
    } else if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::InvalidParameter("β grid must be nonempty and positive".into()));
    }
    for p in probes {
        if !(p.radius > 0.0 && p.radius <= 1.0) {
            return Err(Error::InvalidParameter(format!("probe radius {} outside (0, 1]", p.radius)));
        }
    }
    let evaluated: Vec<Result<Vec<Option<DecayProbe>>>> = probes
        .par_iter()
        .map(|p| {
            let res = Resolution::for_scale(1e-2 * p.radius);
            let ball = mass_query(gw, sys, &Target::ball(&p.center, p.radius), e, res, mode == DecayMode::Decaying)?;
            let probe_betas: Vec<f64> = match mode {
                DecayMode::Quasi { gamma } => vec![p.radius.powf(gamma), p.radius.powf(2.0 * gamma), p.radius.powf(4.0 * gamma)],
                _ => betas.to_vec(),
            };
            let scale = match mode {
                DecayMode::Decaying => spread(&ball.support, &p.surface),
                _ => p.radius,
            };
            let mut out = Vec::new();
            for beta in probe_betas {
                if ball.mass.lower <= 0.0 {
                    out.push(None);
                    continue;
                }
                let thickness = beta * scale;
                let t = Target::neighborhood_in_ball(&p.surface, thickness, &p.center, p.radius);
                let res_in = Resolution::for_scale(thickness.max(1e-300));
                let mass_in = mass_query(gw, sys, &t, e, res_in, false)?.mass;
                out.push(Some(DecayProbe {
                    center: p.center.clone(),
                    radius: p.radius,
                    beta,
                    thickness,
                    surface: p.surface.clone(),
                    mass_in,
                    mass_ball: ball.mass,
                }));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    let mut degenerate = 0;
    for r in evaluated {
        for p in r? {
            match p {
                Some(p) => all.push(p),
                None => degenerate += 1,
            }
        }
    }
    if all.is_empty() {
        return Err(Error::DegenerateProbes);
    }
    let pts: Vec<(f64, f64)> = all
        .iter()
        .filter(|p| p.mass_in.upper > 0.0)
        .map(|p| (p.beta.ln(), p.ratio().ln()))
        .collect();
    let (alpha, log_c) = envelope_fit(&pts).unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
    let mut violations = 0;
    let mut gap_sum = 0.0;
    let mut worst: Option<(f64, &DecayProbe)> = None;
    for p in all.iter().filter(|p| p.mass_in.upper > 0.0) {
        let line = log_c + alpha * p.beta.ln();
        let gap = line - p.ratio().ln();
        if gap < -1e-9 * (1.0 + line.abs()) {
            violations += 1;
        }
        gap_sum += gap;
        if worst.is_none_or(|(g, _)| gap < g) {
            worst = Some((gap, p));
        }
    }
    let grid = match mode {
        DecayMode::Absolute => format!("absolute; {} probes x {} betas", probes.len(), betas.len()),
        DecayMode::Quasi { gamma } => format!("quasi gamma={gamma}; {} probes x beta in {{rho^g, rho^2g, rho^4g}}", probes.len()),
        DecayMode::Decaying => format!("decaying; {} probes x {} betas, thickness beta*spread", probes.len(), betas.len()),
    };
    Ok(DecayFitReport {
        c1: log_c.exp(),
        alpha,
        mean_log_gap: if pts.is_empty() { 0.0 } else { gap_sum / pts.len() as f64 },
        gamma: match mode {
            DecayMode::Quasi { gamma } => Some(gamma),
            _ => None,
        },
        grid,
        worst: worst.map(|(_, p)| p.clone()),
        probes: all,
        degenerate,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceDecay {
    pub surface: GeneralizedSphere,
    pub alpha: f64,
    pub c1: f64,
    /// `(β, upper μ(N̄(L, β)))`
    pub masses: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalDecayReport {
    /// Slope of the envelope pooled over all surfaces.
    pub alpha: f64,
    pub c1: f64,
    /// The surface whose masses come closest to the pooled envelope.
    pub worst_surface: usize,
    /// Set when the exponent is zero or negative, i.e. some surface keeps a
    /// fixed share of the mass in every thickening.
    pub irreducibility_failure: bool,
    /// Per-surface envelopes, for inspection.
    pub surfaces: Vec<SurfaceDecay>,
}

/// Envelope fit of `log μ(N̄(L, β))` against `log β` with the points of all
/// surfaces pooled, so the bound is uniform in `L`.
pub fn global_decay_scan(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    surfaces: &[GeneralizedSphere],
    betas: &[f64],
) -> Result<GlobalDecayReport> {
    if surfaces.is_empty() {
        return Err(Error::InvalidParameter("no surfaces to scan".into()));
    }
    if betas.is_empty() || betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::InvalidParameter("β grid must be nonempty and positive".into()));
    }
    let log_points = |masses: &[(f64, f64)]| -> Vec<(f64, f64)> {
        masses
            .iter()
            .filter(|(_, m)| *m > 0.0)
            .map(|(b, m)| (b.ln(), m.ln()))
            .collect()
    };
    let fits: Vec<Result<SurfaceDecay>> = surfaces
        .par_iter()
        .map(|s| {
            let mut masses = Vec::new();
            for &b in betas {
                let res = Resolution::for_scale(b);
                let m = mass_query(gw, sys, &Target::neighborhood(s, b), &ExceptionalSet::Full, res, false)?.mass;
                masses.push((b, m.upper));
            }
            let (alpha, log_c) = envelope_fit(&log_points(&masses)).unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
            Ok(SurfaceDecay {
                surface: s.clone(),
                alpha,
                c1: log_c.exp(),
                masses,
            })
        })
        .collect();
    let surfaces: Vec<SurfaceDecay> = fits.into_iter().collect::<Result<_>>()?;
    let pooled: Vec<(f64, f64)> = surfaces.iter().flat_map(|s| log_points(&s.masses)).collect();
    let (alpha, log_c) = envelope_fit(&pooled).unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
    let excess = |s: &SurfaceDecay| {
        log_points(&s.masses)
            .iter()
            .map(|(x, y)| y - log_c - alpha * x)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let worst = (0..surfaces.len())
        .max_by(|&a, &b| excess(&surfaces[a]).total_cmp(&excess(&surfaces[b])).then(b.cmp(&a)))
        .unwrap();
    Ok(GlobalDecayReport {
        alpha,
        c1: log_c.exp(),
        worst_surface: worst,
        irreducibility_failure: alpha <= 1e-9,
        surfaces,
    })
}

/// Random hyperplanes (normal uniform on the sphere, offset uniform over the
/// seed set's projection) and, if requested, spheres (centre uniform in the
/// seed's bounding box, radius log-uniform between 10⁻³·diam and diam).
pub fn random_surfaces<R: Rng>(sys: &CifsSystem, count: usize, spheres: bool, rng: &mut R) -> Vec<GeneralizedSphere> {
    let d = sys.dim();
    let seed = sys.seed();
    let (c, r) = seed.bounding_ball();
    (0..count)
        .map(|i| {
            if spheres && d >= 2 && i % 2 == 1 {
                let center: Vec<f64> = (0..d).map(|k| c[k] + r * (2.0 * rng.random::<f64>() - 1.0)).collect();
                let diam = seed.diameter();
                let radius = (diam * 1e-3) * (1e3f64).powf(rng.random::<f64>());
                return GeneralizedSphere::Sphere { center, radius };
            }
            let normal = loop {
                let v: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
                if norm(&v) > 1e-9 {
                    break v;
                }
            };
            let h = Hyperplane::new(normal, 0.0).expect("nonzero normal");
            let (a, b) = seed.projection_range(h.normal());
            let offset = a + (b - a) * rng.random::<f64>();
            GeneralizedSphere::Plane(Hyperplane::new(h.normal().to_vec(), offset).expect("finite offset"))
        })
        .collect()
}

/// Probes centred at `μ`-random points (coding error below `10⁻³·ρ_min`)
/// for every radius. Around each centre, `per_ball` hyperplanes pass
/// through the centre or through uniform points of the ball, with uniform
/// random normals. Every centre draws from its own stream seeded by
/// `(seed, index)`.
pub fn probe_family(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    centers: usize,
    radii: &[f64],
    per_ball: usize,
    seed: u64,
) -> Result<Vec<ProbeSpec>> {
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let d = sys.dim();
    let mut out = Vec::new();
    for i in 0..centers {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let x = gw.sample_point(sys, &mut rng, 1e-3 * rmin, MAX_LEVEL)?.point;
        for &rho in radii {
            for j in 0..per_ball.max(1) {
                let normal = loop {
                    let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
                    if norm(&v) > 1e-9 {
                        break v;
                    }
                };
                let through: Vec<f64> = if j == 0 {
                    x.clone()
                } else {
                    x.iter().map(|c| c + rho * (2.0 * rng.random::<f64>() - 1.0) / (d as f64).sqrt()).collect()
                };
                let h = Hyperplane::through(&through, normal)?;
                out.push(ProbeSpec {
                    center: x.clone(),
                    radius: rho,
                    surface: GeneralizedSphere::Plane(h),
                });
            }
        }
    }
    Ok(out)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// The configuration `(κ, r)` of the escape estimate with `G = A*`.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeConfig {
    pub kappa: f64,
    pub r: usize,
    /// Description of the word set `G`.
    pub g: String,
    /// Deepest probed cylinder.
    pub probe_depth: usize,
}

impl EscapeConfig {
    pub fn new(kappa: f64, r: usize) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) || r == 0 {
            return Err(Error::InvalidParameter(format!("need 0 < κ < 1 and r ≥ 1, got κ={kappa}, r={r}")));
        }
        Ok(EscapeConfig {
            kappa,
            r,
            g: "all finite words".into(),
            probe_depth: 0,
        })
    }
}

struct Child {
    mass: f64,
    region: Region,
}

fn children_at(gw: &GibbsWeights, sys: &CifsSystem, w: &Word, r: usize) -> Result<Vec<Child>> {
    let base = gw.weight(w)?;
    let mut out = Vec::new();
    let mut stack = vec![(w.clone(), base)];
    while let Some((v, m)) = stack.pop() {
        if m <= 0.0 {
            continue;
        }
        if v.len() == w.len() + r {
            out.push(Child {
                mass: m / base,
                region: sys.cylinder_region(&v)?,
            });
            continue;
        }
        for (a, cw) in gw.child_weights(&v)?.into_iter().enumerate() {
            stack.push((v.child(a), cw));
        }
    }
    Ok(out)
}

/// Least conditional mass of the children avoiding `N̄(L, t)` over the
/// candidate surfaces (exact worst case in one dimension).
fn worst_avoided(children: &[Child], t: f64, grid: &[GeneralizedSphere], dim: usize) -> f64 {
    let avoided = |s: &GeneralizedSphere| -> f64 {
        children
            .iter()
            .filter(|c| s.distance_range(&c.region).0 > closed(t))
            .map(|c| c.mass)
            .sum()
    };
    let mut worst = grid.iter().map(avoided).fold(1.0, f64::min);
    if dim == 1 {
        for c in children {
            let (lo, hi) = c.region.projection_range(&[1.0]);
            for p in [lo - t, lo + t, hi - t, hi + t] {
                worst = worst.min(avoided(&GeneralizedSphere::Plane(Hyperplane::point(p))));
            }
        }
    } else {
        let centers: Vec<Vec<f64>> = children.iter().map(|c| c.region.center()).collect();
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                let dir: Vec<f64> = centers[j].iter().zip(&centers[i]).map(|(a, b)| a - b).collect();
                if norm(&dir) == 0.0 {
                    continue;
                }
                // a normal to the chord in its plane with the first axis
                let mut normal = vec![0.0; dim];
                normal[0] = -dir[1];
                normal[1] = dir[0];
                for k in 2..dim {
                    normal[k] = 0.0;
                }
                if let Ok(h) = Hyperplane::through(&centers[i], normal) {
                    worst = worst.min(avoided(&GeneralizedSphere::Plane(h)));
                }
            }
        }
    }
    worst
}

/// Largest dyadic `κ ∈ {2⁻¹, …, 2⁻¹²}` and smallest `r ≤ r_max` such that
/// every probed cylinder keeps conditional mass `≥ κ` on level-`(|ω|+r)`
/// subcylinders avoiding `N̄(L, κD_ω)` for all tried surfaces. `None` means
/// some surface defeats every configuration, a sign of reducibility.
pub fn kappa_r_search(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    r_max: usize,
    surface_grid: &[GeneralizedSphere],
) -> Result<Option<EscapeConfig>> {
    let m = sys.letter_count();
    let table_depth = gw.depth().unwrap_or(usize::MAX);
    let mut probe_depth = 0;
    let mut count = 1usize;
    while probe_depth < 4 && count.saturating_mul(m) <= 2000 && probe_depth + 1 < table_depth {
        probe_depth += 1;
        count *= m;
    }
    let mut cylinders = Vec::new();
    for k in 0..=probe_depth {
        for w in crate::symbolic::words_of_length(m, k) {
            if gw.weight(&w)? > 0.0 {
                cylinders.push(w);
            }
        }
    }
    let mut best: Option<EscapeConfig> = None;
    for r in 1..=r_max.max(1) {
        if m.checked_pow(r as u32).is_none_or(|c| c > 4096) {
            break;
        }
        let data: Vec<(f64, Vec<Child>)> = cylinders
            .par_iter()
            .filter(|w| w.len() + r <= table_depth)
            .map(|w| Ok((sys.cylinder_diameter(w)?, children_at(gw, sys, w, r)?)))
            .collect::<Result<_>>()?;
        if data.is_empty() {
            break;
        }
        for j in 1..=12 {
            let kappa = 0.5f64.powi(j);
            if best.as_ref().is_some_and(|b| b.kappa >= kappa) {
                break;
            }
            let ok = data
                .par_iter()
                .all(|(d, kids)| worst_avoided(kids, kappa * d, surface_grid, sys.dim()) >= kappa);
            if ok {
                best = Some(EscapeConfig {
                    kappa,
                    r,
                    g: "all finite words".into(),
                    probe_depth,
                });
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeCheck {
    pub k: usize,
    pub rho: f64,
    pub trials: usize,
    pub hits: usize,
    pub frequency: f64,
    /// `(1 − κ)^k`
    pub bound: f64,
    /// Binomial standard error at the bound.
    pub sigma: f64,
    pub passes: bool,
}

/// Monte Carlo frequency under `μ_ω` of `π(τ) ∈ N̄(L, κρ)` together with
/// `τ ∈ E(|ω|, ρ, k)`, the event that at least `k` prefixes `τ|i`, `i ≥ |ω|`,
/// have `D_{τ|i} ≥ ρ`.
#[allow(clippy::too_many_arguments)]
pub fn escape_bound_check(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    cfg: &EscapeConfig,
    surface: &GeneralizedSphere,
    omega: &Word,
    k: usize,
    rho: f64,
    trials: usize,
    seed: u64,
) -> Result<EscapeCheck> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!("escape check needs ≥ 100 trials, got {trials}")));
    }
    check_radius(rho)?;
    if !(gw.weight(omega)? > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    let t = cfg.kappa * rho;
    let seedset = sys.seed().clone();
    let base_map = sys.word_map(omega);
    let base_diam = sys.cylinder_diameter(omega)?;
    let max_len = omega.len() + MAX_LEVEL;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0;
    for _ in 0..trials {
        let mut w = omega.clone();
        let mut f = base_map.clone();
        let mut diam = base_diam;
        let reach = rho * (1.0 - 1e-12);
        let mut count = usize::from(diam >= reach);
        let inside = loop {
            let region = if w.is_empty() { seedset.clone() } else { f.image(&seedset).0 };
            let (near, far) = surface.distance_range(&region);
            let decided = if near > closed(t) {
                Some(false)
            } else if far <= closed(t) {
                Some(true)
            } else {
                None
            };
            if diam < rho {
                if let Some(v) = decided {
                    break v;
                }
            }
            if w.len() >= max_len {
                break surface.distance(&f.apply(&seedset.center())) <= closed(t);
            }
            let a = gw.sample_next(&mut rng, &w);
            w.push(a);
            f = f.compose(sys.letter_map(a));
            diam = diam.min(f.image_diameter(&seedset));
            if diam >= reach {
                count += 1;
            }
        };
        if inside && count >= k {
            hits += 1;
        }
    }
    let bound = (1.0 - cfg.kappa).powi(k as i32);
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    let frequency = hits as f64 / trials as f64;
    Ok(EscapeCheck {
        k,
        rho,
        trials,
        hits,
        frequency,
        bound,
        sigma,
        passes: frequency <= bound + 3.0 * sigma,
    })
}

/// Largest value over the radius grid of
/// `μ(B(x, ρ²) ∩ E) / (ρ^α μ(B(x, ρ)))`, for each `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroDimensionWitness {
    /// `(α, max ratio, ρ attaining it)`
    pub rows: Vec<(f64, f64, f64)>,
    pub threshold: f64,
}

impl ZeroDimensionWitness {
    pub fn exceeds_everywhere(&self) -> bool {
        self.rows.iter().all(|r| r.1 > self.threshold)
    }
}

pub fn dimension_zero_witness(
    gw: &GibbsWeights,
    sys: &CifsSystem,
    x: &[f64],
    e: &ExceptionalSet,
    rho_grid: &[f64],
    alphas: &[f64],
    threshold: f64,
) -> Result<ZeroDimensionWitness> {
    let mut pairs = Vec::new();
    for &rho in rho_grid {
        check_radius(rho)?;
        let res_small = Resolution::for_scale(1e-2 * rho * rho);
        let res_big = Resolution::for_scale(1e-2 * rho);
        let small = mass_query(gw, sys, &Target::ball(x, rho * rho), e, res_small, false)?.mass;
        let big = mass_query(gw, sys, &Target::ball(x, rho), &ExceptionalSet::Full, res_big, false)?.mass;
        pairs.push((rho, small.lower, big.upper));
    }
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let mut best = (0.0, f64::NAN);
            for &(rho, s, b) in &pairs {
                if b <= 0.0 {
                    continue;
                }
                let v = s / (rho.powf(alpha) * b);
                if v > best.0 {
                    best = (v, rho);
                }
            }
            (alpha, best.0, best.1)
        })
        .collect();
    Ok(ZeroDimensionWitness { rows, threshold })
}

/// Whether `gw` is atomic (exact masses).
pub fn is_exact(gw: &GibbsWeights) -> bool {
    matches!(gw.kind(), WeightKind::Atoms { .. })
}
