use fracdioph::cifs::{Axiom, CifsSystem, Verdict};
use fracdioph::dioph::{dioph_report, extremality_experiment};
use fracdioph::geometry::{GeneralizedSphere, Hyperplane};
use fracdioph::measurelab::{
    decay_fit, escape_bound_check, global_decay_scan, kappa_r_search, probe_family, random_surfaces, DecayMode,
    EscapeConfig, ExceptionalSet, MAX_LEVEL,
};
use fracdioph::symbolic::Word;
use fracdioph::sysfile::SystemFile;
use fracdioph::thermo::{bowen_dimension_at, default_level, thermo_report};
use fracdioph::toral::{
    colip_distance, exact_point, is_periodic, liouville_mass, parse_rational, periodic_shadow, to_f64,
    validate_hyperbolic, OrbitMeasure, TorusPoint,
};
use fracdioph::weights::GibbsWeights;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::args::{scalar, Command, ModeArg};
use crate::output::{num, vector, Plot, Table};
use crate::Failure;

#[derive(Default)]
pub struct Artifacts {
    pub tables: Vec<Table>,
    pub plots: Vec<(String, Plot)>,
}

pub struct Context {
    pub file: Option<SystemFile>,
    pub seed: Option<u64>,
}

impl Context {
    fn system(&self) -> Result<CifsSystem, Failure> {
        let file = self.file.as_ref().ok_or_else(|| Failure::usage("this command needs --config <system file>"))?;
        Ok(file.build_system()?)
    }

    fn measure(&self, sys: &CifsSystem) -> Result<GibbsWeights, Failure> {
        Ok(self.file.as_ref().expect("system checked first").build_measure(sys)?)
    }

    fn seed(&self) -> u64 {
        self.seed.expect("seed checked for stochastic commands")
    }
}

/// Axioms whose failure makes the system unusable. Strong separation is
/// reported but not required.
fn required_failures(sys: &CifsSystem) -> Vec<&'static str> {
    sys.validate()
        .checks
        .iter()
        .filter(|c| c.verdict == Verdict::Fail && c.axiom != Axiom::StrongSeparation)
        .map(|c| c.axiom.as_str())
        .collect()
}

fn validation_failure(failed: Vec<&'static str>) -> Failure {
    Failure::Domain {
        kind: "validation_failed".into(),
        message: format!("required axioms fail: {}", failed.join(", ")),
        extra: Some(json!({ "failed": failed })),
    }
}

/// Runs one command. A domain failure may still come with artifacts.
pub fn execute(cmd: &Command, ctx: &Context) -> (Artifacts, Option<Failure>) {
    let mut art = Artifacts::default();
    let result = dispatch(cmd, ctx, &mut art);
    (art, result.err())
}

fn dispatch(cmd: &Command, ctx: &Context, art: &mut Artifacts) -> Result<(), Failure> {
    let sys = if cmd.needs_system() {
        let sys = ctx.system()?;
        let failed = required_failures(&sys);
        if let Command::Validate = cmd {
            art.tables.push(validate_table(&sys));
        }
        if !failed.is_empty() {
            return Err(validation_failure(failed));
        }
        Some(sys)
    } else {
        None
    };
    let sys = sys.as_ref();
    match cmd {
        Command::Validate => Ok(()),
        Command::Dimension { level } => dimension(sys.unwrap(), *level, art),
        Command::Thermo { level } => {
            let sys = sys.unwrap();
            let gw = ctx.measure(sys)?;
            let mut t = Table::new("thermo", &["quantity", "value", "error", "level"]);
            for r in thermo_report(sys, &gw, *level)? {
                t.push(vec![r.quantity.into(), num(r.value), num(r.error), r.level.to_string()]);
            }
            art.tables.push(t);
            Ok(())
        }
        Command::Sample { n, radius } => sample(sys.unwrap(), ctx, *n, *radius, art),
        Command::DecayFit {
            mode,
            gamma,
            centers,
            radii,
            per_ball,
            betas,
        } => {
            let mode = match (mode, gamma) {
                (ModeArg::Absolute, _) => DecayMode::Absolute,
                (ModeArg::Decaying, _) => DecayMode::Decaying,
                (ModeArg::Quasi, Some(g)) => DecayMode::Quasi { gamma: *g },
                (ModeArg::Quasi, None) => return Err(Failure::usage("quasi mode needs --gamma")),
            };
            decay(sys.unwrap(), ctx, mode, *centers, radii, *per_ball, betas, art)
        }
        Command::GlobalDecay {
            surfaces,
            spheres,
            betas,
            planes,
        } => {
            let sys = sys.unwrap();
            let extra = planes.iter().map(|p| parse_plane(p, sys.dim())).collect::<Result<Vec<_>, _>>()?;
            global(sys, ctx, *surfaces, *spheres, betas, extra, art)
        }
        Command::EscapeCheck {
            kappa,
            r,
            r_max,
            k_max,
            trials,
            normal,
            offset,
            rho_ratio,
            omega,
        } => {
            let sys = sys.unwrap();
            let normal = if normal.is_empty() {
                (0..sys.dim()).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
            } else {
                normal.clone()
            };
            if normal.len() != sys.dim() {
                return Err(Failure::usage(format!("--normal needs {} components", sys.dim())));
            }
            let plane = GeneralizedSphere::Plane(Hyperplane::new(normal, *offset)?);
            let spec = EscapeSpec {
                kappa: *kappa,
                r: *r,
                r_max: *r_max,
                k_max: *k_max,
                trials: *trials,
                rho_ratio: rho_ratio.unwrap_or(sys.contraction_sup()),
                omega: Word::new(omega.clone()),
            };
            escape(sys, ctx, &plane, &spec, art)
        }
        Command::Omega { x, qmax } => omega(x, *qmax, art),
        Command::Extremality { n, qmax, margins } => {
            let sys = sys.unwrap();
            let gw = ctx.measure(sys)?;
            let rep = extremality_experiment(&gw, sys, *n, *qmax, ctx.seed(), margins)?;
            let mut t = Table::new("extremality", &["quantity", "value"]);
            t.pair("points", rep.samples.len());
            t.pair("qmax", rep.q_max);
            t.pair("median_omega", num(rep.median_omega));
            t.pair("exact_hits", rep.exact_hits);
            t.pair("noise_floor", num(rep.noise_floor));
            t.pair("downgraded", rep.downgraded);
            for (margin, frac) in &rep.vwa_fractions {
                t.pair(&format!("vwa_fraction_margin_{}", num(*margin)), num(*frac));
            }
            let mut s = Table::new("extremality-samples", &["index", "point", "error_radius", "omega_hat", "omega_record"]);
            for (i, p) in rep.samples.iter().enumerate() {
                s.push(vec![
                    i.to_string(),
                    vector(&p.point),
                    num(p.error_radius),
                    num(p.omega.omega_hat),
                    num(p.omega.omega_record),
                ]);
            }
            let mut hats: Vec<f64> = rep.samples.iter().map(|p| p.omega.omega_hat).collect();
            hats.sort_by(f64::total_cmp);
            let nh = hats.len() as f64;
            art.plots.push((
                "extremality".into(),
                Plot {
                    title: "empirical distribution of ω̂".into(),
                    x_label: "ω̂".into(),
                    y_label: "fraction".into(),
                    points: hats.iter().enumerate().map(|(i, &h)| (h, (i + 1) as f64 / nh)).collect(),
                    line: None,
                },
            ));
            art.tables.push(t);
            art.tables.push(s);
            Ok(())
        }
        Command::ToralShadow {
            matrix,
            x,
            n,
            m,
            liouville,
        } => toral(matrix, x, *n, *m, *liouville, art),
        Command::Run { .. } => Err(Failure::usage("run files cannot nest")),
    }
}

fn validate_table(sys: &CifsSystem) -> Table {
    let rep = sys.validate();
    let mut t = Table::new("validate", &["axiom", "verdict", "witness", "detail"]);
    for c in &rep.checks {
        t.push(vec![c.axiom.as_str().into(), c.verdict.as_str().into(), num(c.witness), c.detail.clone()]);
    }
    if let Some(m) = rep.truncation {
        t.push(vec!["truncation".into(), "INFO".into(), m.to_string(), "letters retained".into()]);
    }
    t
}

fn dimension(sys: &CifsSystem, level: Option<usize>, art: &mut Artifacts) -> Result<(), Failure> {
    let d = bowen_dimension_at(sys, level.unwrap_or_else(|| default_level(sys)))?;
    let mut t = Table::new("dimension", &["quantity", "value", "error", "level"]);
    let err = (d.delta - d.lower).max(d.upper - d.delta);
    let lvl = d.level.to_string();
    t.push(vec!["delta".into(), num(d.delta), num(err), lvl.clone()]);
    t.push(vec!["delta_lower".into(), num(d.lower), "0".into(), lvl.clone()]);
    t.push(vec!["delta_upper".into(), num(d.upper), "0".into(), lvl]);
    if let Some(m) = d.truncation {
        t.push(vec!["truncation".into(), m.to_string(), "0".into(), "1".into()]);
    }
    art.tables.push(t);
    Ok(())
}

fn sample(sys: &CifsSystem, ctx: &Context, n: usize, radius: f64, art: &mut Artifacts) -> Result<(), Failure> {
    let gw = ctx.measure(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut t = Table::new("sample", &["index", "word", "point", "error_radius"]);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let s = gw.sample_point(sys, &mut rng, radius, 4 * MAX_LEVEL)?;
        t.push(vec![i.to_string(), s.word.to_string(), vector(&s.point), num(s.error_radius)]);
        pts.push(s.point);
    }
    let points = if sys.dim() == 1 {
        let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        let nf = xs.len() as f64;
        xs.into_iter().enumerate().map(|(i, x)| (x, (i + 1) as f64 / nf)).collect()
    } else {
        pts.iter().map(|p| (p[0], p[1])).collect()
    };
    let (title, y_label) = if sys.dim() == 1 {
        ("empirical distribution function", "fraction")
    } else {
        ("sampled points", "x₂")
    };
    art.plots.push((
        "sample".into(),
        Plot {
            title: title.into(),
            x_label: "x₁".into(),
            y_label: y_label.into(),
            points,
            line: None,
        },
    ));
    art.tables.push(t);
    Ok(())
}

fn surface_text(s: &GeneralizedSphere) -> String {
    match s {
        GeneralizedSphere::Plane(h) => format!("plane n={} c={}", vector(h.normal()), num(h.offset())),
        GeneralizedSphere::Sphere { center, radius } => format!("sphere c={} r={}", vector(center), num(*radius)),
    }
}

#[allow(clippy::too_many_arguments)]
fn decay(
    sys: &CifsSystem,
    ctx: &Context,
    mode: DecayMode,
    centers: usize,
    radii: &[f64],
    per_ball: usize,
    betas: &[f64],
    art: &mut Artifacts,
) -> Result<(), Failure> {
    let gw = ctx.measure(sys)?;
    let probes = probe_family(&gw, sys, centers, radii, per_ball, ctx.seed())?;
    let rep = decay_fit(&gw, sys, mode, &probes, betas, &ExceptionalSet::Full)?;
    let mut t = Table::new("decay-fit", &["quantity", "value"]);
    let mode_name = match mode {
        DecayMode::Absolute => "absolute",
        DecayMode::Quasi { .. } => "quasi",
        DecayMode::Decaying => "decaying",
    };
    t.pair("mode", mode_name);
    t.pair("gamma", rep.gamma.map_or("none".into(), num));
    t.pair("alpha", num(rep.alpha));
    t.pair("c1", num(rep.c1));
    t.pair("mean_log_gap", num(rep.mean_log_gap));
    t.pair("probes", rep.probes.len());
    t.pair("degenerate", rep.degenerate);
    t.pair("violations", rep.violations);
    t.pair("grid", &rep.grid);
    let mut p = Table::new(
        "decay-fit-probes",
        &["center", "radius", "beta", "thickness", "surface", "in_lower", "in_upper", "ball_lower", "ball_upper", "ratio"],
    );
    for pr in &rep.probes {
        p.push(vec![
            vector(&pr.center),
            num(pr.radius),
            num(pr.beta),
            num(pr.thickness),
            surface_text(&pr.surface),
            num(pr.mass_in.lower),
            num(pr.mass_in.upper),
            num(pr.mass_ball.lower),
            num(pr.mass_ball.upper),
            num(pr.ratio()),
        ]);
    }
    art.plots.push((
        "decay-fit".into(),
        Plot {
            title: format!("{mode_name} decay: α = {:.4}", rep.alpha),
            x_label: "log β".into(),
            y_label: "log ratio".into(),
            points: rep.probes.iter().map(|pr| (pr.beta.ln(), pr.ratio().ln())).collect(),
            line: Some((rep.alpha, rep.c1.ln())),
        },
    ));
    art.tables.push(t);
    art.tables.push(p);
    Ok(())
}

fn parse_plane(s: &str, dim: usize) -> Result<GeneralizedSphere, Failure> {
    let bad = || Failure::usage(format!("plane {s:?} is not `normal:offset` in dimension {dim}"));
    let (n, c) = s.split_once(':').ok_or_else(bad)?;
    let normal = n.split(',').map(scalar).collect::<Result<Vec<f64>, _>>().map_err(|_| bad())?;
    let offset = scalar(c).map_err(|_| bad())?;
    if normal.len() != dim {
        return Err(bad());
    }
    Ok(GeneralizedSphere::Plane(Hyperplane::new(normal, offset)?))
}

fn global(
    sys: &CifsSystem,
    ctx: &Context,
    count: usize,
    spheres: bool,
    betas: &[f64],
    extra: Vec<GeneralizedSphere>,
    art: &mut Artifacts,
) -> Result<(), Failure> {
    let gw = ctx.measure(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut surfaces = random_surfaces(sys, count, spheres, &mut rng);
    surfaces.extend(extra);
    let rep = global_decay_scan(&gw, sys, &surfaces, betas)?;
    let mut t = Table::new("global-decay", &["quantity", "value"]);
    t.pair("alpha", num(rep.alpha));
    t.pair("c1", num(rep.c1));
    t.pair("worst_surface", rep.worst_surface);
    t.pair("irreducibility_failure", rep.irreducibility_failure);
    t.pair("surfaces", rep.surfaces.len());
    let mut s = Table::new("global-decay-surfaces", &["index", "surface", "alpha", "c1", "masses"]);
    let mut pts = Vec::new();
    for (i, sd) in rep.surfaces.iter().enumerate() {
        let masses: Vec<f64> = sd.masses.iter().map(|m| m.1).collect();
        s.push(vec![i.to_string(), surface_text(&sd.surface), num(sd.alpha), num(sd.c1), vector(&masses)]);
        pts.extend(sd.masses.iter().filter(|m| m.1 > 0.0).map(|&(b, m)| (b.ln(), m.ln())));
    }
    art.plots.push((
        "global-decay".into(),
        Plot {
            title: format!("pooled envelope: α = {:.4}", rep.alpha),
            x_label: "log β".into(),
            y_label: "log μ(N(L, β))".into(),
            points: pts,
            line: Some((rep.alpha, rep.c1.ln())),
        },
    ));
    art.tables.push(t);
    art.tables.push(s);
    Ok(())
}

struct EscapeSpec {
    kappa: Option<f64>,
    r: Option<usize>,
    r_max: usize,
    k_max: usize,
    trials: usize,
    rho_ratio: f64,
    omega: Word,
}

fn escape(
    sys: &CifsSystem,
    ctx: &Context,
    plane: &GeneralizedSphere,
    spec: &EscapeSpec,
    art: &mut Artifacts,
) -> Result<(), Failure> {
    let gw = ctx.measure(sys)?;
    let seed = ctx.seed();
    let (cfg, derived) = match spec.kappa {
        Some(k) => (EscapeConfig::new(k, spec.r.unwrap_or(1))?, false),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut grid = random_surfaces(sys, 32, false, &mut rng);
            grid.push(plane.clone());
            let found = kappa_r_search(&gw, sys, spec.r_max, &grid)?;
            let cfg = found.ok_or_else(|| Failure::Domain {
                kind: "no_escape_configuration".into(),
                message: "no (κ, r) survives the surface grid; the measure may be reducible".into(),
                extra: None,
            })?;
            (cfg, true)
        }
    };
    let mut c = Table::new("escape-config", &["quantity", "value"]);
    c.pair("kappa", num(cfg.kappa));
    c.pair("r", cfg.r);
    c.pair("derived", derived);
    c.pair("word_set", &cfg.g);
    c.pair("probe_depth", cfg.probe_depth);
    c.pair("surface", surface_text(plane));
    c.pair("omega", &spec.omega);
    let diam = sys.seed().diameter();
    let mut t = Table::new("escape-check", &["k", "rho", "trials", "hits", "frequency", "bound", "sigma", "pass"]);
    for k in 1..=spec.k_max {
        let rho = diam * spec.rho_ratio.powi(k as i32 - 1);
        let run_seed = seed.wrapping_mul(0x2545_f491_4f6c_dd1d).wrapping_add(k as u64);
        let e = escape_bound_check(&gw, sys, &cfg, plane, &spec.omega, k, rho, spec.trials, run_seed)?;
        t.push(vec![
            k.to_string(),
            num(e.rho),
            e.trials.to_string(),
            e.hits.to_string(),
            num(e.frequency),
            num(e.bound),
            num(e.sigma),
            e.passes.to_string(),
        ]);
    }
    art.tables.push(c);
    art.tables.push(t);
    Ok(())
}

/// Named constants and exact rationals, comma-separated.
pub fn parse_point(s: &str) -> Result<Vec<Coordinate>, Failure> {
    s.split(',')
        .map(|c| {
            let c = c.trim();
            let named = match c {
                "golden" => Some((5f64.sqrt() - 1.0) / 2.0),
                "sqrt2" => Some(2f64.sqrt()),
                "sqrt3" => Some(3f64.sqrt()),
                "pi" => Some(std::f64::consts::PI),
                "e" => Some(std::f64::consts::E),
                _ => None,
            };
            match named {
                Some(v) => Ok(Coordinate::Float(v)),
                None => Ok(Coordinate::Exact(
                    parse_rational(c).map_err(|e| Failure::usage(format!("coordinate {c:?}: {e}")))?,
                )),
            }
        })
        .collect()
}

pub enum Coordinate {
    Float(f64),
    Exact(num_rational::BigRational),
}

impl Coordinate {
    fn float(&self) -> f64 {
        match self {
            Coordinate::Float(v) => *v,
            Coordinate::Exact(r) => to_f64(std::slice::from_ref(r))[0],
        }
    }
}

fn omega(x: &str, qmax: u64, art: &mut Artifacts) -> Result<(), Failure> {
    let x: Vec<f64> = parse_point(x)?.iter().map(Coordinate::float).collect();
    let rep = dioph_report(&x, qmax)?;
    let mut t = Table::new("omega", &["quantity", "value"]);
    t.pair("point", vector(&rep.point));
    t.pair("qmax", rep.q_max);
    t.pair("omega_hat", num(rep.omega.omega_hat));
    t.pair("omega_mult_hat", num(rep.omega.omega_mult_hat));
    t.pair("omega_record", num(rep.omega.omega_record));
    t.pair("omega_mult_record", num(rep.omega.omega_mult_record));
    t.pair("vwa", rep.vwa);
    t.pair("vwma", rep.vwma);
    t.pair("exact_hit", rep.omega.exact_hit.map_or("none".into(), |q| q.to_string()));
    let mut a = Table::new("omega-approximations", &["q", "p", "error", "mult_error"]);
    for ap in &rep.approximations {
        let p: Vec<String> = ap.p.iter().map(|v| v.to_string()).collect();
        a.push(vec![ap.q.to_string(), p.join(";"), num(ap.error), num(ap.mult_error)]);
    }
    art.tables.push(t);
    art.tables.push(a);
    Ok(())
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<i64>>, Failure> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|v| v.trim().parse::<i64>().map_err(|_| Failure::usage(format!("bad matrix entry {v:?}"))))
                .collect()
        })
        .collect()
}

fn toral(matrix: &str, x: &str, n: usize, m: usize, max_liouville: u32, art: &mut Artifacts) -> Result<(), Failure> {
    let t_sys = validate_hyperbolic(&parse_matrix(matrix)?)?;
    let coords = parse_point(x)?;
    if coords.len() != t_sys.dim() {
        return Err(Failure::usage(format!("--x needs {} coordinates", t_sys.dim())));
    }
    let mut x0: TorusPoint = Vec::new();
    for c in &coords {
        let v = match c {
            Coordinate::Float(v) => exact_point(&[*v])?.remove(0),
            Coordinate::Exact(r) => r - r.floor(),
        };
        x0.push(v);
    }
    let s = periodic_shadow(&t_sys, &x0, n, m)?;
    let mu = OrbitMeasure::orbit(&t_sys, &x0, n)?;
    let nu = OrbitMeasure::orbit(&t_sys, &s.y, n)?;
    let colip = colip_distance(&mu, &nu)?;
    let mut t = Table::new("toral-shadow", &["quantity", "value"]);
    t.pair("dim", t_sys.dim());
    t.pair("period", s.period);
    t.pair("m", s.m);
    t.pair("hyperbolicity_gap", num(t_sys.hyperbolicity_gap()));
    t.pair("periodic", is_periodic(&t_sys, &s.y, n)?);
    t.pair("quality", num(s.quality));
    t.pair("quality_bound", num(s.quality_bound));
    t.pair("colip_lower", num(colip.lower));
    t.pair("colip_upper", num(colip.upper));
    t.pair("colip_exact", colip.exact);
    for k in 1..=max_liouville {
        t.pair(&format!("liouville_mass_{k}"), num(liouville_mass(&nu, k, 0.0)?.mass));
    }
    let mut p = Table::new("toral-shadow-point", &["coordinate", "x", "y", "y_float"]);
    let yf = to_f64(&s.y);
    for (i, (xi, yi)) in x0.iter().zip(&s.y).enumerate() {
        p.push(vec![i.to_string(), xi.to_string(), yi.to_string(), num(yf[i])]);
    }
    art.tables.push(t);
    art.tables.push(p);
    Ok(())
}
