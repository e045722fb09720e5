//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N ... PASS|FAIL` line to stderr (not captured by the harness).
//! Criteria 4, 6, 8, 9 and 10 execute the bundled run files through the CLI.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fracdioph::cifs::CifsSystem;
use fracdioph::measurelab::{dimension_zero_witness, ExceptionalSet};
use fracdioph::symbolic::Word;
use fracdioph::sysfile::SystemFile;
use fracdioph::thermo::{bowen_dimension, bowen_dimension_at, hofbauer_dimension, Potential};
use fracdioph::toral::{colip_distance, exact_point, is_periodic, liouville_mass, periodic_shadow, validate_hyperbolic, OrbitMeasure};
use fracdioph::weights::{gibbs_ratio_check, GibbsWeights};
use fracdioph_suite::{bodies, run_bundled, system, Csv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Observed on the first run of criterion 9 and locked since.
const LOCKED_VWA_FRACTION: f64 = 0.005;

fn tmp(name: &str) -> PathBuf {
    fracdioph_suite::scratch(Path::new(env!("CARGO_TARGET_TMPDIR")), name)
}

fn report(n: u32, title: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n:>2} {verdict} [{:.2}s] {title}: {detail}\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn bundled_system(name: &str) -> (CifsSystem, SystemFile) {
    let text = fs::read_to_string(system(name)).unwrap();
    let f: SystemFile = serde_json::from_str(&text).unwrap();
    (f.build_system().unwrap(), f)
}

#[test]
fn criterion_01_dimension_oracle() {
    let t = Instant::now();
    let cantor = bowen_dimension(&CifsSystem::middle_thirds()).unwrap().delta;
    let t_cantor = t.elapsed();
    let t = Instant::now();
    let quarter = bowen_dimension(&CifsSystem::similarity_1d(&[(0.25, 0.0), (0.25, 0.75)]).unwrap()).unwrap().delta;
    let t_quarter = t.elapsed();
    let e1 = (cantor - 2f64.ln() / 3f64.ln()).abs();
    let e2 = (quarter - 0.5).abs();
    let limit = Duration::from_secs(1);
    let pass = e1 <= 1e-6 && e2 <= 1e-6 && t_cantor < limit && t_quarter < limit;
    report(
        1,
        "Bowen dimension oracles",
        pass,
        t_cantor + t_quarter,
        &format!("middle thirds {cantor:.12} (err {e1:.1e}), quarter ratios {quarter:.12} (err {e2:.1e})"),
    );
}

#[test]
fn criterion_02_hofbauer_consistency() {
    let t = Instant::now();
    let sys = CifsSystem::middle_thirds();
    let gw = GibbsWeights::conformal(&sys, 1).unwrap();
    let h = hofbauer_dimension(&sys, &gw, 12).unwrap().value;
    let b = bowen_dimension(&sys).unwrap().delta;
    let el = t.elapsed();
    let gap = (h - b).abs();
    report(
        2,
        "entropy over Lyapunov matches the Bowen root",
        gap <= 1e-3 && el < Duration::from_secs(10),
        el,
        &format!("hofbauer {h:.9}, bowen {b:.9}, gap {gap:.1e} at level 12"),
    );
}

#[test]
fn criterion_03_gibbs_property() {
    let t = Instant::now();
    // overlapping.json is deliberately invalid and has no Gibbs theory
    let systems = [
        ("cantor.json", 8, 12),
        ("touching-binary.json", 8, 12),
        ("quarter.json", 8, 12),
        ("planar-reducible.json", 6, 8),
        ("gauss.json", 2, 2),
        ("schottky.json", 4, 6),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = Vec::new();
    let mut pass = true;
    for (name, depth, level) in systems {
        let (sys, _) = bundled_system(name);
        let m = sys.letter_count();
        let p: Vec<f64> = (0..m).map(|a| (a + 1) as f64).collect();
        let bern = Potential::bernoulli(p);
        let gw = GibbsWeights::build(&sys, &bern, depth).unwrap();
        let c = gibbs_ratio_check(&sys, &bern, &gw, 1000, depth, &mut rng).unwrap();
        pass &= c.certificate == 1.0 && c.holds(1e-9);

        let delta = bowen_dimension_at(&sys, level).unwrap().delta;
        let geo = Potential::geometric(delta);
        let gw = GibbsWeights::build(&sys, &geo, depth).unwrap();
        let g = gibbs_ratio_check(&sys, &geo, &gw, 1000, depth, &mut rng).unwrap();
        pass &= g.certificate.is_finite() && g.holds(1e-9);
        worst.push(format!(
            "{name}: bernoulli C_g={} geometric [{:.3},{:.3}] in C_g={:.3}",
            c.certificate, g.min_ratio, g.max_ratio, g.certificate
        ));
    }
    report(3, "Gibbs ratio within the certificate", pass, t.elapsed(), &worst.join("; "));
}

#[test]
fn criterion_04_escape_bound() {
    let dir = tmp("acceptance-escape");
    let t = Instant::now();
    let code = run_bundled("escape-check-cantor", &dir);
    let el = t.elapsed();
    assert_eq!(code, 0);
    let cfg = Csv::read(&dir.join("escape-config.csv"));
    let rows = Csv::read(&dir.join("escape-check.csv"));
    let derived = cfg.get("kappa") == 0.125 && cfg.get("r") == 1.0 && cfg.pairs()["derived"] == "true";
    let mut pass = derived && el < Duration::from_secs(60) && rows.rows.len() == 12;
    let mut worst_margin = f64::INFINITY;
    for (i, k) in rows.column("k").iter().enumerate() {
        let k: i32 = k.parse().unwrap();
        let trials: f64 = rows.column("trials")[i].parse().unwrap();
        let freq: f64 = rows.column("frequency")[i].parse().unwrap();
        // independent bound and binomial σ at the bound
        let bound = (7.0f64 / 8.0).powi(k);
        let sigma = (bound * (1.0 - bound) / trials).sqrt();
        pass &= trials == 10_000.0 && i as i32 + 1 == k;
        pass &= freq <= bound + 3.0 * sigma;
        worst_margin = worst_margin.min(bound + 3.0 * sigma - freq);
    }
    report(
        4,
        "escape frequency below (7/8)^k + 3 sigma",
        pass,
        el,
        &format!("derived kappa {} r {}, k = 1..12, smallest margin {worst_margin:.4}", cfg.get("kappa"), cfg.get("r")),
    );
}

#[test]
fn criterion_05_dimension_zero_is_not_quasi_decaying() {
    let t = Instant::now();
    let sys = CifsSystem::middle_thirds();
    // the period-two orbit {1/4, 3/4}: 0.(02) and 0.(20) in base three
    let gw = GibbsWeights::periodic_orbit(2, &Word::new(vec![0, 1])).unwrap();
    let rho: Vec<f64> = (1..=20).map(|k| 0.5f64.powi(k)).collect();
    let alphas: Vec<f64> = (1..=10).map(|a| a as f64 / 10.0).collect();
    let w = dimension_zero_witness(&gw, &sys, &[0.25], &ExceptionalSet::Full, &rho, &alphas, 1e3).unwrap();
    let el = t.elapsed();
    let rows: Vec<String> = w.rows.iter().map(|(a, r, _)| format!("a={a:.1}:{r:.3e}")).collect();
    report(
        5,
        "ratio above 10^3 for every alpha",
        w.exceeds_everywhere() && el < Duration::from_secs(30),
        el,
        &format!("max ratio per alpha {}", rows.join(" ")),
    );
}

#[test]
fn criterion_06_quasi_decay_exponent() {
    let dir = tmp("acceptance-decay");
    let t = Instant::now();
    let code = run_bundled("decay-fit-cantor", &dir);
    let el = t.elapsed();
    assert_eq!(code, 0);
    let s = Csv::read(&dir.join("decay-fit.csv"));
    let alpha = s.get("alpha");
    let violations = s.get("violations");
    report(
        6,
        "absolute decay exponent on middle thirds",
        s.pairs()["mode"] == "absolute" && alpha >= 0.55 && violations == 0.0 && el < Duration::from_secs(60),
        el,
        &format!("alpha {alpha:.4}, violations {violations}, probes {}", s.pairs()["probes"]),
    );
}

#[test]
fn criterion_07_toral_pipeline() {
    let t = Instant::now();
    let sys = validate_hyperbolic(&[vec![2]]).unwrap();
    let x = exact_point(&[2f64.sqrt() - 1.0]).unwrap();
    let (n, m) = (64, 6);
    let s = periodic_shadow(&sys, &x, n, m).unwrap();
    let periodic = is_periodic(&sys, &s.y, n).unwrap();
    let mu = OrbitMeasure::orbit(&sys, &x, n).unwrap();
    let nu = OrbitMeasure::orbit(&sys, &s.y, n).unwrap();
    let d = colip_distance(&mu, &nu).unwrap().value();
    let bound = 0.5f64.powi(m as i32) + m as f64 / n as f64 + 1e-9;
    let masses: Vec<f64> = (1..=10).map(|k| liouville_mass(&nu, k, 0.0).unwrap().mass).collect();
    let el = t.elapsed();
    report(
        7,
        "doubling map shadow, transport and Liouville mass",
        periodic && d <= bound && masses.iter().all(|&v| v == 1.0) && el < Duration::from_secs(5),
        el,
        &format!("T^64 y = y {periodic}, colip {d:.6} <= {bound:.6}, Liouville masses {masses:?}"),
    );
}

#[test]
fn criterion_08_diophantine_oracles() {
    let golden_dir = tmp("acceptance-golden");
    let leb_dir = tmp("acceptance-lebesgue");
    let t = Instant::now();
    assert_eq!(run_bundled("omega-golden", &golden_dir), 0);
    assert_eq!(run_bundled("extremality-lebesgue", &leb_dir), 0);
    let el = t.elapsed();
    let g = Csv::read(&golden_dir.join("omega.csv"));
    let omega = g.get("omega_hat");
    let q: Vec<u64> = Csv::read(&golden_dir.join("omega-approximations.csv"))
        .column("q")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    let mut fib = vec![1u64, 2];
    while fib[fib.len() - 1] + fib[fib.len() - 2] <= 100_000 {
        fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
    }
    let l = Csv::read(&leb_dir.join("extremality.csv"));
    let median = l.get("median_omega");
    let pass = g.get("qmax") == 1e5
        && (omega - 2.0).abs() <= 0.01
        && q == fib
        && l.get("points") == 100.0
        && (1.95..=2.1).contains(&median)
        && el < Duration::from_secs(120);
    report(
        8,
        "golden ratio, Fibonacci denominators, Lebesgue median",
        pass,
        el,
        &format!("omega_hat {omega:.5}, {} Fibonacci denominators, median over 100 points {median:.4}", q.len()),
    );
}

#[test]
fn criterion_09_extremality_smoke() {
    let dir = tmp("acceptance-extremality");
    let t = Instant::now();
    let code = run_bundled("extremality-cantor", &dir);
    let el = t.elapsed();
    assert_eq!(code, 0);
    let s = Csv::read(&dir.join("extremality.csv"));
    let frac = s.get("vwa_fraction_margin_0.5");
    let pass = s.get("points") == 200.0
        && s.get("qmax") == 1e4
        && frac <= 0.02
        && frac == LOCKED_VWA_FRACTION
        && el < Duration::from_secs(300);
    report(
        9,
        "VWA fraction on middle thirds",
        pass,
        el,
        &format!("fraction at margin 0.5 is {frac} (locked {LOCKED_VWA_FRACTION}), median {:.4}", s.get("median_omega")),
    );
}

#[test]
fn criterion_10_determinism() {
    let t = Instant::now();
    let runs = ["escape-check-cantor", "decay-fit-cantor", "omega-golden", "extremality-lebesgue", "extremality-cantor"];
    let mut differing = Vec::new();
    let mut files = 0;
    for r in runs {
        let a = tmp(&format!("determinism-{r}-a"));
        let b = tmp(&format!("determinism-{r}-b"));
        assert_eq!(run_bundled(r, &a), 0);
        assert_eq!(run_bundled(r, &b), 0);
        let (ba, bb) = (bodies(&a), bodies(&b));
        files += ba.len();
        if ba.is_empty() || ba != bb {
            differing.push(r);
        }
    }
    let detail = if differing.is_empty() {
        format!("{files} CSV bodies identical across two runs")
    } else {
        format!("differing runs: {differing:?}")
    };
    report(10, "repeated seeded runs are byte-identical", differing.is_empty(), t.elapsed(), &detail);
}
