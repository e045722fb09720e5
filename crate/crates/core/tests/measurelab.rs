use fracdioph::cifs::CifsSystem;
use fracdioph::geometry::{GeneralizedSphere, Hyperplane};
use fracdioph::measurelab::*;
use fracdioph::symbolic::Word;
use fracdioph::weights::GibbsWeights;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cantor() -> (CifsSystem, GibbsWeights) {
    let sys = CifsSystem::middle_thirds();
    let gw = GibbsWeights::conformal(&sys, 1).unwrap();
    (sys, gw)
}

fn lebesgue() -> (CifsSystem, GibbsWeights) {
    (CifsSystem::binary(), GibbsWeights::product(vec![0.5, 0.5]).unwrap())
}

/// Cantor function by ternary digits: `μ([0, x])` for the middle-thirds measure.
fn cantor_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (mut x, mut s, mut scale) = (x, 0.0, 0.5);
    for _ in 0..60 {
        x *= 3.0;
        if x >= 2.0 {
            s += scale;
            x -= 2.0;
        } else if x >= 1.0 {
            return s + scale;
        }
        scale /= 2.0;
    }
    s
}

/// Distribution function of the Bernoulli `(p, 1 − p)` measure on binary digits.
fn bernoulli_cdf(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (mut x, mut s, mut scale) = (x, 0.0, 1.0);
    for _ in 0..60 {
        x *= 2.0;
        if x >= 1.0 {
            s += scale * p;
            scale *= 1.0 - p;
            x -= 1.0;
        } else {
            scale *= p;
        }
    }
    s
}

fn point(p: f64) -> GeneralizedSphere {
    GeneralizedSphere::Plane(Hyperplane::point(p))
}

fn geometric(from: i32, to: i32, base: f64) -> Vec<f64> {
    (from..=to).map(|k| base.powi(-k)).collect()
}

#[test]
fn cantor_ball_brackets_contain_the_cantor_function() {
    let (sys, gw) = cantor();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let x: f64 = rng.random_range(-0.1..1.1);
        let rho: f64 = 10f64.powf(rng.random_range(-4.0..0.0));
        let truth = cantor_cdf(x + rho) - cantor_cdf(x - rho);
        let mut last_width = f64::INFINITY;
        for level in [4, 8, 16] {
            let m = ball_mass(&gw, &sys, &[x], rho, level).unwrap();
            assert!(m.lower <= truth + 1e-12 && truth <= m.upper + 1e-12, "{x} {rho} {m:?} {truth}");
            assert!(m.width() <= last_width + 1e-15);
            last_width = m.width();
        }
        assert!(last_width <= 2.0 * 0.5f64.powi(16) + 1e-15);
    }
}

#[test]
fn ball_mass_trivial_cases() {
    let (sys, gw) = cantor();
    let m = ball_mass(&gw, &sys, &[0.0], 1.0 / 3.0, 2).unwrap();
    assert_eq!((m.lower, m.upper), (0.5, 0.5));
    assert_eq!(ball_mass(&gw, &sys, &[3.0], 1.0, 6).unwrap().upper, 0.0);
    assert_eq!(ball_mass(&gw, &sys, &[0.9], 1.5, 0).unwrap().lower, 1.0);
}

#[test]
fn neighborhood_of_zero_carries_dyadic_mass() {
    let (sys, gw) = cantor();
    for n in 1..12 {
        let t = 3f64.powi(-n);
        let m = neighborhood_mass(&gw, &sys, &point(0.0), t, &[0.5], 1.0, n as usize + 2).unwrap();
        let truth = cantor_cdf(t);
        assert!((truth - 0.5f64.powi(n)).abs() < 1e-9 * truth);
        assert!(m.lower <= truth + 1e-12 && truth <= m.upper + 1e-12);
        assert!((m.estimate - 0.5f64.powi(n)).abs() < 1e-15);
    }
    let gap = neighborhood_mass(&gw, &sys, &point(0.5), 0.16, &[0.5], 1.0, 12).unwrap();
    assert_eq!(gap.upper, 0.0);
}

#[test]
fn local_dimension_examples() {
    let (sys, gw) = cantor();
    let delta = 2f64.ln() / 3f64.ln();
    let grid = geometric(2, 30, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x = gw.sample_point(&sys, &mut rng, 1e-12, 48).unwrap().point;
        let fit = local_dimension(&gw, &sys, &x, &grid).unwrap();
        assert!((fit.slope - delta).abs() < 0.02, "{}", fit.slope);
    }
    let (bin, leb) = lebesgue();
    for x in [0.1, 0.5, 0.77] {
        let fit = local_dimension(&leb, &bin, &[x], &grid).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.01, "{}", fit.slope);
    }
    let dirac = GibbsWeights::product(vec![1.0, 0.0]).unwrap();
    let fit = local_dimension(&dirac, &bin, &[0.0], &grid).unwrap();
    assert!(fit.slope.abs() < 1e-12);
}

#[test]
fn federer_examples() {
    let (sys, gw) = cantor();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let centers: Vec<Vec<f64>> = (0..30)
        .map(|_| gw.sample_point(&sys, &mut rng, 1e-12, 48).unwrap().point)
        .collect();
    let rep = federer_check(&gw, &sys, 3.0, &centers, &geometric(1, 8, 3.0)).unwrap();
    assert!(rep.worst_ratio <= 4.0, "{rep:?}");

    let (bin, leb) = lebesgue();
    let centers: Vec<Vec<f64>> = (0..=16).map(|k| vec![k as f64 / 16.0]).collect();
    let rep = federer_check(&leb, &bin, 2.0, &centers, &geometric(5, 10, 2.0)).unwrap();
    // cylinders merely touching the closed ball stay in the upper bracket,
    // two of them of length ≤ ρ/6400 at the resolution used
    assert!(rep.worst_ratio <= 2.0 * (1.0 + 1.0 / 3200.0), "{rep:?}");
    assert_eq!(rep.skipped, 0);
}

#[test]
fn biased_bernoulli_is_not_doubling_at_one_half() {
    let bin = CifsSystem::binary();
    let gw = GibbsWeights::product(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
    let mut last = 0.0;
    for n in 3..14 {
        let rho = 0.5f64.powi(n);
        let x = vec![0.5 + rho];
        let rep = federer_check(&gw, &bin, 2.0, &[x.clone()], &[rho]).unwrap();
        let truth = (bernoulli_cdf(0.5 + 3.0 * rho, 1.0 / 3.0) - bernoulli_cdf(0.5 - rho, 1.0 / 3.0))
            / (bernoulli_cdf(0.5 + 2.0 * rho, 1.0 / 3.0) - bernoulli_cdf(0.5, 1.0 / 3.0));
        assert!(rep.worst_ratio >= truth * (1.0 - 1e-9));
        assert!(rep.worst_ratio > last);
        last = rep.worst_ratio;
    }
    assert!(last > 100.0);
}

#[test]
fn cantor_absolute_decay_exponent() {
    let (sys, gw) = cantor();
    let probes = probe_family(&gw, &sys, 20, &geometric(1, 4, 3.0), 4, 7).unwrap();
    let betas = geometric(1, 12, 2.0);
    let rep = decay_fit(&gw, &sys, DecayMode::Absolute, &probes, &betas, &ExceptionalSet::Full).unwrap();
    assert!(rep.alpha >= 0.6, "{}", rep.alpha);
    assert_eq!(rep.violations, 0);
    assert!(rep.c1 > 0.0);
    assert!(rep.worst.is_some());
}

#[test]
fn lebesgue_absolute_decay_is_linear_with_constant_two() {
    let (bin, leb) = lebesgue();
    let mut probes = Vec::new();
    for rho in geometric(2, 5, 2.0) {
        for x in [0.0, 0.5, 1.0] {
            for l in [x - rho / 2.0, x, x + rho / 2.0] {
                probes.push(ProbeSpec {
                    center: vec![x],
                    radius: rho,
                    surface: point(l),
                });
            }
        }
    }
    let betas = geometric(1, 10, 2.0);
    let rep = decay_fit(&leb, &bin, DecayMode::Absolute, &probes, &betas, &ExceptionalSet::Full).unwrap();
    // boundary balls hold half their length, so C₁ = 2; the upper bracket
    // adds at most two touching cylinders of length thickness/64
    assert!((rep.alpha - 1.0).abs() < 1e-9, "{}", rep.alpha);
    assert!(rep.c1 >= 2.0 && rep.c1 <= 2.0 * (1.0 + 1.0 / 32.0), "{}", rep.c1);
}

#[test]
fn zero_entropy_weights_defeat_the_quasi_decay_fit() {
    let bin = CifsSystem::binary();
    let gw = GibbsWeights::periodic_orbit(2, &Word::new(vec![0, 1])).unwrap();
    let x = vec![1.0 / 3.0];
    // below 1/3 each ball sees only the atom at its centre
    let probes: Vec<ProbeSpec> = geometric(2, 10, 2.0)
        .into_iter()
        .map(|rho| ProbeSpec {
            center: x.clone(),
            radius: rho,
            surface: point(x[0]),
        })
        .collect();
    let rep = decay_fit(&gw, &bin, DecayMode::Quasi { gamma: 0.5 }, &probes, &[], &ExceptionalSet::Full).unwrap();
    assert!(rep.alpha <= 1e-12, "{}", rep.alpha);
    assert!(rep.probes.iter().all(|p| p.ratio() >= 1.0));
}

#[test]
fn zero_entropy_ratio_grows_like_a_negative_power() {
    let bin = CifsSystem::binary();
    let gw = GibbsWeights::periodic_orbit(2, &Word::new(vec![0, 1])).unwrap();
    let grid = geometric(1, 20, 2.0);
    for alpha in [0.1, 0.5, 1.0] {
        let mut prev = 0.0;
        for &rho in &grid {
            let w = dimension_zero_witness(&gw, &bin, &[1.0 / 3.0], &ExceptionalSet::Full, &[rho], &[alpha], 1e3).unwrap();
            let v = w.rows[0].1;
            // only the atom at 1/3 is in either ball once ρ < 1/3
            let truth = if rho < 1.0 / 3.0 { rho.powf(-alpha) } else { v };
            assert!((v - truth).abs() <= 1e-12 * truth);
            assert!(v > prev);
            prev = v;
        }
    }
}

#[test]
fn decaying_mode_uses_the_support_spread() {
    let (sys, gw) = cantor();
    let probes = probe_family(&gw, &sys, 5, &geometric(1, 3, 3.0), 2, 1).unwrap();
    let rep = decay_fit(&gw, &sys, DecayMode::Decaying, &probes, &geometric(1, 8, 2.0), &ExceptionalSet::Full).unwrap();
    assert_eq!(rep.violations, 0);
    for p in &rep.probes {
        assert!(p.thickness <= p.beta * 2.0 * p.radius + 1e-12);
    }
}

#[test]
fn exceptional_cylinders_restrict_mass() {
    let (sys, gw) = cantor();
    let e = ExceptionalSet::Cylinders(vec![Word::new(vec![0])]);
    let t = Target::ball(&[0.5], 1.0);
    let m = mass_query(&gw, &sys, &t, &e, Resolution::level(6), false).unwrap().mass;
    assert_eq!((m.lower, m.upper), (0.5, 0.5));
}

#[test]
fn global_decay_examples() {
    let (sys, gw) = cantor();
    let delta = 2f64.ln() / 3f64.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let surfaces = random_surfaces(&sys, 100, false, &mut rng);
    let rep = global_decay_scan(&gw, &sys, &surfaces, &geometric(1, 12, 2.0)).unwrap();
    assert!((rep.alpha - delta).abs() < 0.05, "{}", rep.alpha);
    assert!(!rep.irreducibility_failure);

    let pr = CifsSystem::planar_reducible();
    let gp = GibbsWeights::conformal(&pr, 1).unwrap();
    let axis = GeneralizedSphere::Plane(Hyperplane::new(vec![0.0, 1.0], 0.0).unwrap());
    let rep = global_decay_scan(&gp, &pr, &[axis], &geometric(1, 12, 2.0)).unwrap();
    assert_eq!(rep.alpha, 0.0);
    assert!(rep.irreducibility_failure);
}

#[test]
fn schottky_global_decay_is_positive_and_dominates_monte_carlo() {
    let sys = CifsSystem::schottky_three_disk();
    let gw = GibbsWeights::conformal(&sys, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut surfaces = random_surfaces(&sys, 20, true, &mut rng);
    // brute-force line grid through the disk
    for i in 0..8 {
        let th = std::f64::consts::PI * i as f64 / 8.0;
        for off in [-0.5, 0.0, 0.5] {
            surfaces.push(GeneralizedSphere::Plane(Hyperplane::new(vec![th.cos(), th.sin()], off).unwrap()));
        }
    }
    let betas = geometric(1, 8, 2.0);
    let rep = global_decay_scan(&gw, &sys, &surfaces, &betas).unwrap();
    assert!(rep.alpha > 0.0, "{}", rep.alpha);

    let samples: Vec<Vec<f64>> = (0..4000)
        .map(|_| gw.sample_point(&sys, &mut rng, 1e-9, 48).unwrap().point)
        .collect();
    for s in &rep.surfaces {
        for &(b, upper) in &s.masses {
            let freq = samples.iter().filter(|p| s.surface.distance(p) <= b).count() as f64 / samples.len() as f64;
            let sigma = (freq.max(1e-3) * (1.0 - freq) / samples.len() as f64).sqrt();
            assert!(freq <= upper + 4.0 * sigma + 1e-9, "{freq} > {upper}");
        }
    }
}

#[test]
fn kappa_r_examples() {
    let (sys, gw) = cantor();
    let cfg = kappa_r_search(&gw, &sys, 1, &[]).unwrap().unwrap();
    assert_eq!((cfg.kappa, cfg.r), (0.125, 1));
    // four grandchildren of mass 1/4: a window of width D/2 meets at most two
    let cfg = kappa_r_search(&gw, &sys, 2, &[]).unwrap().unwrap();
    assert_eq!((cfg.kappa, cfg.r), (0.25, 2));

    let pr = CifsSystem::planar_reducible();
    let gp = GibbsWeights::conformal(&pr, 1).unwrap();
    assert!(kappa_r_search(&gp, &pr, 3, &[]).unwrap().is_none());

    let g = CifsSystem::gauss(30).unwrap();
    let gg = GibbsWeights::conformal(&g, 2).unwrap();
    let cfg = kappa_r_search(&gg, &g, 1, &[]).unwrap().unwrap();
    assert!(cfg.kappa > 0.0);
}

/// Brute force over a fine point grid: the least conditional mass of
/// level-one cylinders of the Cantor set avoiding a `κ`-neighbourhood.
#[test]
fn cantor_kappa_agrees_with_point_grid() {
    let min_avoided = |kappa: f64| -> f64 {
        (0..=3000)
            .map(|i| {
                let p = -0.2 + 1.4 * i as f64 / 3000.0;
                [(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)]
                    .iter()
                    .filter(|(a, b)| p + kappa < *a || p - kappa > *b)
                    .count() as f64
                    * 0.5
            })
            .fold(1.0, f64::min)
    };
    assert!(min_avoided(0.125) >= 0.125);
    assert!(min_avoided(0.25) < 0.25);
}

#[test]
fn escape_bound_holds_up_to_twelve() {
    let (sys, gw) = cantor();
    let cfg = EscapeConfig::new(0.125, 1).unwrap();
    let l = point(0.25);
    for k in 0..=12usize {
        let rho = 3f64.powi(1 - k as i32);
        let c = escape_bound_check(&gw, &sys, &cfg, &l, &Word::empty(), k, rho, 2000, k as u64).unwrap();
        assert!(c.passes, "{c:?}");
        if k == 0 {
            assert_eq!(c.bound, 1.0);
        }
    }
    let far = escape_bound_check(&gw, &sys, &cfg, &point(5.0), &Word::new(vec![0]), 2, 0.1, 500, 4).unwrap();
    assert_eq!(far.hits, 0);
    assert!(escape_bound_check(&gw, &sys, &cfg, &l, &Word::empty(), 2, 0.1, 50, 4).is_err());
}

#[test]
fn degenerate_probes_are_an_error() {
    let (sys, gw) = cantor();
    let probes = vec![ProbeSpec {
        center: vec![0.5],
        radius: 0.1,
        surface: point(0.5),
    }];
    assert!(decay_fit(&gw, &sys, DecayMode::Absolute, &probes, &[0.5], &ExceptionalSet::Full).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brackets_nest_under_refinement(x in -0.2f64..1.2, lr in -5.0f64..0.0, n in 1usize..10, extra in 1usize..6) {
        let (sys, gw) = cantor();
        let rho = 10f64.powf(lr);
        let coarse = ball_mass(&gw, &sys, &[x], rho, n).unwrap();
        let fine = ball_mass(&gw, &sys, &[x], rho, n + extra).unwrap();
        prop_assert!(coarse.lower <= fine.estimate + 1e-15);
        prop_assert!(fine.estimate <= coarse.upper + 1e-15);
        prop_assert!(coarse.lower <= fine.lower + 1e-15 && fine.upper <= coarse.upper + 1e-15);
    }

    #[test]
    fn neighborhood_mass_is_monotone_in_beta(x in 0.0f64..1.0, l in 0.0f64..1.0, lb in -6.0f64..0.0, n in 2usize..12) {
        let (sys, gw) = cantor();
        let b1 = 10f64.powf(lb);
        let b2 = 2.0 * b1;
        let m1 = neighborhood_mass(&gw, &sys, &point(l), b1, &[x], 0.3, n).unwrap();
        let m2 = neighborhood_mass(&gw, &sys, &point(l), b2, &[x], 0.3, n).unwrap();
        prop_assert!(m1.lower <= m2.lower + 1e-15 && m1.upper <= m2.upper + 1e-15);
        let ball = ball_mass(&gw, &sys, &[x], 0.3, n).unwrap();
        prop_assert!(m2.upper <= ball.upper + 1e-15 && m2.lower <= ball.lower + 1e-15);
    }

    #[test]
    fn every_probe_lies_under_the_envelope(seed in 0u64..1000) {
        let (sys, gw) = cantor();
        let probes = probe_family(&gw, &sys, 3, &geometric(1, 3, 3.0), 3, seed).unwrap();
        let rep = decay_fit(&gw, &sys, DecayMode::Absolute, &probes, &geometric(1, 8, 2.0), &ExceptionalSet::Full).unwrap();
        prop_assert_eq!(rep.violations, 0);
        for p in &rep.probes {
            prop_assert!(p.mass_in.lower <= p.mass_ball.upper + 1e-15);
            prop_assert!(p.mass_in.upper <= rep.c1 * p.beta.powf(rep.alpha) * p.mass_ball.lower * (1.0 + 1e-9));
        }
    }
}
