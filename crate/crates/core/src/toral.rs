//! Hyperbolic toral endomorphisms `x ↦ Mx mod ℤ^d`, exact periodic shadows
//! of orbits, orbit measures, the co-Lipschitz distance, and masses of the
//! Liouville sets `U_n`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dioph::best_approx;
use crate::error::{Error, Result};

/// Eigenvalue moduli within this distance of 1 are rejected.
pub const HYPERBOLIC_GAP: f64 = 1e-9;

/// A point of the torus with exact rational coordinates in `[0, 1)`.
pub type TorusPoint = Vec<BigRational>;

#[derive(Clone, Debug, PartialEq)]
pub struct ToralSystem {
    matrix: Vec<Vec<i64>>,
    moduli: Vec<f64>,
    expanding: bool,
}

impl ToralSystem {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    /// Eigenvalue moduli, ascending.
    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    /// Smallest `| |λ| − 1 |`.
    pub fn hyperbolicity_gap(&self) -> f64 {
        self.moduli.iter().map(|m| (m - 1.0).abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn is_expanding(&self) -> bool {
        self.expanding
    }

    /// `x ↦ Mx mod 1` in exact arithmetic.
    pub fn apply(&self, x: &[BigRational]) -> TorusPoint {
        reduce(&self.lift(x))
    }

    fn lift(&self, x: &[BigRational]) -> Vec<BigRational> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(BigRational::zero(), |acc, (&m, xi)| acc + xi * BigRational::from_integer(m.into()))
            })
            .collect()
    }

    fn float_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.matrix[i][j] as f64)
    }
}

fn reduce(x: &[BigRational]) -> TorusPoint {
    x.iter().map(|v| v - v.floor()).collect()
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact determinant by elimination over the rationals.
fn determinant(m: &[Vec<i64>]) -> BigRational {
    let mut a: Vec<Vec<BigRational>> = m.iter().map(|r| r.iter().map(|&v| big(v)).collect()).collect();
    solve_in_place(&mut a, None).unwrap_or_else(BigRational::zero)
}

/// Gaussian elimination; returns the determinant and, if `rhs` is given,
/// overwrites it with the solution. `None` when singular.
fn solve_in_place(a: &mut [Vec<BigRational>], mut rhs: Option<&mut Vec<BigRational>>) -> Option<BigRational> {
    let n = a.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        if piv != col {
            a.swap(piv, col);
            if let Some(b) = rhs.as_deref_mut() {
                b.swap(piv, col);
            }
            det = -det;
        }
        det *= &a[col][col];
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..n {
                let v = &f * &a[col][c];
                a[r][c] -= v;
            }
            if let Some(b) = rhs.as_deref_mut() {
                let v = &f * &b[col];
                b[r] -= v;
            }
        }
    }
    if let Some(b) = rhs {
        for r in (0..n).rev() {
            let mut s = b[r].clone();
            for c in r + 1..n {
                s -= &a[r][c] * &b[c];
            }
            b[r] = s / &a[r][r];
        }
    }
    Some(det)
}

/// Accepts `M` when it is square, nonsingular, and no eigenvalue lies within
/// [`HYPERBOLIC_GAP`] of the unit circle.
pub fn validate_hyperbolic(m: &[Vec<i64>]) -> Result<ToralSystem> {
    let d = m.len();
    if d == 0 || m.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParameter("matrix must be square and nonempty".into()));
    }
    if determinant(m).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let fm = DMatrix::from_fn(d, d, |i, j| m[i][j] as f64);
    let eig = fm.complex_eigenvalues();
    let mut moduli = Vec::with_capacity(d);
    for l in eig.iter() {
        let modulus = l.norm();
        if (modulus - 1.0).abs() < HYPERBOLIC_GAP {
            return Err(Error::NotHyperbolic {
                re: l.re,
                im: l.im,
                modulus,
            });
        }
        moduli.push(modulus);
    }
    moduli.sort_by(f64::total_cmp);
    Ok(ToralSystem {
        matrix: m.to_vec(),
        expanding: moduli.iter().all(|&v| v > 1.0),
        moduli,
    })
}

/// `x` as an exact rational torus point (every finite `f64` is rational).
pub fn exact_point(x: &[f64]) -> Result<TorusPoint> {
    let v: Option<Vec<BigRational>> = x.iter().map(|&v| BigRational::from_float(v)).collect();
    Ok(reduce(&v.ok_or_else(|| Error::InvalidParameter("coordinates must be finite".into()))?))
}

/// Parses `"p/q"`, integers, or decimals into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot read {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    let f: f64 = s.parse().map_err(|_| bad())?;
    BigRational::from_float(f).ok_or_else(bad)
}

/// `(x, Tx, …, T^{N−1}x)`, exact.
pub fn orbit(sys: &ToralSystem, x: &[BigRational], n: usize) -> Result<Vec<TorusPoint>> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("orbit length must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut p = reduce(x);
    for _ in 0..n {
        let next = sys.apply(&p);
        out.push(p);
        p = next;
    }
    Ok(out)
}

pub fn to_f64(p: &[BigRational]) -> Vec<f64> {
    p.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
}

/// Distance on `ℝ^d/ℤ^d` induced by the Euclidean norm.
pub fn torus_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = (x - y).rem_euclid(1.0);
            t.min(1.0 - t).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

fn exact_torus_dist(a: &[BigRational], b: &[BigRational]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            let t = &t - t.floor();
            let u = BigRational::one() - &t;
            let m = if t < u { t } else { u };
            m.to_f64().unwrap_or(f64::NAN).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowResult {
    /// Exact point with `T^N y = y`.
    pub y: TorusPoint,
    pub period: usize,
    pub m: usize,
    /// `max_{i ≤ N−m−1} dist(T^i x, T^i y)`, from the exact orbits.
    pub quality: f64,
    /// `‖M^{−(m+1)}‖₂ · |x_N − ỹ|`, with `ỹ` the unreduced solution; bounds
    /// `quality`.
    pub quality_bound: f64,
}

/// Periodic point with the same length-`N` digit itinerary as `x`.
///
/// Writing `M x_i = x_{i+1} + a_i` with `a_i ∈ ℤ^d` and repeating the digits
/// with period `N` gives `(M^N − I) y = Σ_{i<N} M^{N−1−i} a_i`, solved exactly.
/// Since `x_i − y_i = M^{−(N−i)}(x_N − y)` for the lifts, the first `N − m`
/// points of the two orbits are within `‖M^{−(m+1)}‖·|x_N − y|`. Only
/// expanding `M` is supported;
/// the general hyperbolic case needs stable/unstable shadowing.
pub fn periodic_shadow(sys: &ToralSystem, x: &[BigRational], n: usize, m: usize) -> Result<ShadowResult> {
    if !sys.is_expanding() {
        return Err(Error::UnsupportedConstruction);
    }
    if m < 1 || n <= m {
        return Err(Error::InvalidParameter(format!("need N > m ≥ 1, got N={n}, m={m}")));
    }
    let d = sys.dim();
    let xs = orbit(sys, x, n + 1)?;
    let mut v = vec![BigRational::zero(); d];
    for xi in xs.iter().take(n) {
        let lifted = sys.lift(xi);
        let digit: Vec<BigRational> = lifted.iter().map(|t| t.floor()).collect();
        v = sys.lift(&v).into_iter().zip(digit).map(|(a, b)| a + b).collect();
    }
    // (M^N − I) y = v
    let mut power: Vec<Vec<BigRational>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for _ in 0..n {
        power = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        (0..d).fold(BigRational::zero(), |acc, k| acc + big(sys.matrix[i][k]) * &power[k][j])
                    })
                    .collect()
            })
            .collect();
    }
    for (i, row) in power.iter_mut().enumerate() {
        row[i] -= BigRational::one();
    }
    let mut y = v;
    solve_in_place(&mut power, Some(&mut y)).ok_or(Error::SingularMatrix)?;
    let gap: f64 = xs[n]
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).to_f64().unwrap_or(f64::NAN).powi(2))
        .sum::<f64>()
        .sqrt();
    let y = reduce(&y);
    let ys = orbit(sys, &y, n - m)?;
    let quality = xs
        .iter()
        .zip(&ys)
        .map(|(a, b)| exact_torus_dist(a, b))
        .fold(0.0, f64::max);
    let inv = sys.float_matrix().try_inverse().ok_or(Error::SingularMatrix)?;
    let quality_bound = spectral_norm(&inv.pow((m + 1) as u32)) * gap;
    Ok(ShadowResult {
        y,
        period: n,
        m,
        quality,
        quality_bound,
    })
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// Uniform measure on a list of torus points.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitMeasure {
    atoms: Vec<Vec<f64>>,
    exact: Option<Vec<TorusPoint>>,
}

impl OrbitMeasure {
    pub fn from_exact(points: Vec<TorusPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(OrbitMeasure {
            atoms: points.iter().map(|p| to_f64(p)).collect(),
            exact: Some(points),
        })
    }

    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(OrbitMeasure {
            atoms: points
                .into_iter()
                .map(|p| p.into_iter().map(|v| v.rem_euclid(1.0)).collect())
                .collect(),
            exact: None,
        })
    }

    /// `(1/N) Σ_{i<N} δ_{T^i x}`
    pub fn orbit(sys: &ToralSystem, x: &[BigRational], n: usize) -> Result<Self> {
        Self::from_exact(orbit(sys, x, n)?)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn exact_atoms(&self) -> Option<&[TorusPoint]> {
        self.exact.as_deref()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.atoms.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColipDistance {
    pub lower: f64,
    pub upper: f64,
    /// Whether `lower == upper` is the exact value (circle case).
    pub exact: bool,
}

impl ColipDistance {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

const MAX_ATOMS: usize = 10_000;
const PAIR_CAP: usize = 4_000_000;

/// `sup_f |∫f dμ − ∫f dν|` over 1-Lipschitz `f` into `[−1, 1]`. On the
/// circle this is the transport distance (weighted median of `F − G`),
/// capped at 2. In higher dimension a greedy coupling gives an upper bound
/// and a family of distance and coordinate witnesses a lower bound.
pub fn colip_distance(mu: &OrbitMeasure, nu: &OrbitMeasure) -> Result<ColipDistance> {
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    if mu.len() > MAX_ATOMS || nu.len() > MAX_ATOMS {
        return Err(Error::InvalidParameter(format!("at most {MAX_ATOMS} atoms per measure")));
    }
    if mu.dim() == 1 {
        let a: Vec<f64> = mu.atoms.iter().map(|p| p[0]).collect();
        let b: Vec<f64> = nu.atoms.iter().map(|p| p[0]).collect();
        let w = circle_w1(&a, mu.weight(), &b, nu.weight()).min(2.0);
        return Ok(ColipDistance {
            lower: w,
            upper: w,
            exact: true,
        });
    }
    let upper = greedy_coupling(mu, nu).min(2.0);
    let mut lower: f64 = 0.0;
    for k in 0..mu.dim() {
        let a: Vec<f64> = mu.atoms.iter().map(|p| p[k]).collect();
        let b: Vec<f64> = nu.atoms.iter().map(|p| p[k]).collect();
        lower = lower.max(circle_w1(&a, mu.weight(), &b, nu.weight()));
    }
    let stride_mu = (mu.len() / 32).max(1);
    let stride_nu = (nu.len() / 32).max(1);
    let anchors = mu.atoms.iter().step_by(stride_mu).chain(nu.atoms.iter().step_by(stride_nu));
    for c in anchors {
        let fm: f64 = mu.atoms.iter().map(|p| torus_dist(p, c)).sum::<f64>() * mu.weight();
        let fn_: f64 = nu.atoms.iter().map(|p| torus_dist(p, c)).sum::<f64>() * nu.weight();
        lower = lower.max((fm - fn_).abs());
    }
    Ok(ColipDistance {
        lower: lower.min(upper),
        upper,
        exact: false,
    })
}

/// Circle transport distance between `Σ wa·δ_a` and `Σ wb·δ_b`:
/// `min_c ∫|F − G − c|`, attained at a weighted median of `F − G`.
fn circle_w1(a: &[f64], wa: f64, b: &[f64], wb: f64) -> f64 {
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .map(|&t| (t.rem_euclid(1.0), wa))
        .chain(b.iter().map(|&t| (t.rem_euclid(1.0), -wb)))
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(events.len() + 1);
    let mut level = 0.0;
    let mut at = 0.0;
    for (t, w) in events {
        if t > at {
            pieces.push((level, t - at));
            at = t;
        }
        level += w;
    }
    if at < 1.0 {
        pieces.push((level, 1.0 - at));
    }
    let mut sorted = pieces.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let half: f64 = sorted.iter().map(|p| p.1).sum::<f64>() / 2.0;
    let mut acc = 0.0;
    let mut c = sorted[0].0;
    for (v, len) in &sorted {
        acc += len;
        c = *v;
        if acc >= half {
            break;
        }
    }
    pieces.iter().map(|(v, len)| (v - c).abs() * len).sum()
}

fn greedy_coupling(mu: &OrbitMeasure, nu: &OrbitMeasure) -> f64 {
    let (na, nb) = (mu.len(), nu.len());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    if na * nb <= PAIR_CAP {
        for i in 0..na {
            for j in 0..nb {
                pairs.push((torus_dist(&mu.atoms[i], &nu.atoms[j]), i, j));
            }
        }
    } else {
        // nearest candidates in first-coordinate order
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by(|&x, &y| nu.atoms[x][0].total_cmp(&nu.atoms[y][0]));
        let window = (PAIR_CAP / na).max(1);
        for i in 0..na {
            let pos = order.partition_point(|&j| nu.atoms[j][0] < mu.atoms[i][0]);
            for k in 0..window.min(nb) {
                let j = order[(pos + nb - window / 2 + k) % nb];
                pairs.push((torus_dist(&mu.atoms[i], &nu.atoms[j]), i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut left_a = vec![mu.weight(); na];
    let mut left_b = vec![nu.weight(); nb];
    let mut cost = 0.0;
    for (dd, i, j) in pairs {
        let f = left_a[i].min(left_b[j]);
        if f > 0.0 {
            cost += f * dd;
            left_a[i] -= f;
            left_b[j] -= f;
        }
    }
    // anything unmatched travels at most the torus diameter
    let rest: f64 = left_a.iter().sum::<f64>().max(0.0);
    cost + rest * (mu.dim() as f64).sqrt() / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleMass {
    /// Mass of atoms certified in `U_n`.
    pub mass: f64,
    /// Mass of atoms with no witness at any denominator the precision can
    /// resolve (`q^{−n} > precision`).
    pub excluded: f64,
    /// Mass of atoms whose resolvable range exceeded the scan limit.
    pub undecided: f64,
}

/// Largest denominator scanned for inexact atoms.
pub const LIOUVILLE_SCAN: u64 = 1_000_000;

/// `ν(U_n)` with `U_n = ⋃_{q ≥ n} B(p/q, q^{−n})`. Exact rational atoms are
/// always inside: with denominator `q₀` the atom equals `kp/(kq₀)` for any
/// `k`, so some `kq₀ ≥ n` centres a ball on it. Inexact atoms, known to
/// within `precision`, are inside when some `q ≥ n` has
/// `‖x − p/q‖ + precision < q^{−n}`.
pub fn liouville_mass(nu: &OrbitMeasure, n: u32, precision: f64) -> Result<LiouvilleMass> {
    if nu.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let w = nu.weight();
    if nu.exact.is_some() {
        return Ok(LiouvilleMass {
            mass: 1.0,
            excluded: 0.0,
            undecided: 0.0,
        });
    }
    let mut out = LiouvilleMass {
        mass: 0.0,
        excluded: 0.0,
        undecided: 0.0,
    };
    let reach = precision.max(f64::MIN_POSITIVE).powf(-1.0 / n as f64);
    let q_scan = reach.min(LIOUVILLE_SCAN as f64).floor().max(1.0) as u64;
    for x in &nu.atoms {
        let mut inside = false;
        for q in (n as u64).max(1)..=q_scan.max(n as u64) {
            let err = x
                .iter()
                .map(|&v| (v - (v * q as f64).round() / q as f64).abs())
                .fold(0.0, f64::max);
            if err + precision < (q as f64).powi(-(n as i32)) {
                inside = true;
                break;
            }
        }
        if inside {
            out.mass += w;
        } else if reach <= LIOUVILLE_SCAN as f64 {
            out.excluded += w;
        } else {
            out.undecided += w;
        }
    }
    Ok(out)
}

/// Record approximations of an atom, for reports.
pub fn atom_records(x: &[f64], q_max: u64) -> Result<Vec<(u64, f64)>> {
    Ok(best_approx(x, q_max)?.into_iter().map(|a| (a.q, a.error)).collect())
}

/// Whether `T^N y = y` holds exactly.
pub fn is_periodic(sys: &ToralSystem, y: &[BigRational], n: usize) -> Result<bool> {
    let o = orbit(sys, y, n + 1)?;
    Ok(o[0] == o[n])
}

/// Absolute value of the exact determinant.
pub fn degree(sys: &ToralSystem) -> BigInt {
    determinant(&sys.matrix).numer().abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn validation_examples() {
        let t = validate_hyperbolic(&[vec![2]]).unwrap();
        assert!(t.is_expanding());
        assert!(matches!(
            validate_hyperbolic(&[vec![1, 1], vec![0, 1]]),
            Err(Error::NotHyperbolic { .. })
        ));
        let cat = validate_hyperbolic(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert!(!cat.is_expanding());
        let s5 = 5f64.sqrt();
        assert!((cat.moduli()[0] - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((cat.moduli()[1] - (3.0 + s5) / 2.0).abs() < 1e-12);
        assert!(matches!(validate_hyperbolic(&[vec![1, 2], vec![2, 4]]), Err(Error::SingularMatrix)));
    }

    #[test]
    fn doubling_orbits() {
        let t = validate_hyperbolic(&[vec![2]]).unwrap();
        let o = orbit(&t, &[r(1, 5)], 4).unwrap();
        assert_eq!(o, vec![vec![r(1, 5)], vec![r(2, 5)], vec![r(4, 5)], vec![r(3, 5)]]);
        let z = orbit(&t, &[r(0, 1)], 3).unwrap();
        assert!(z.iter().all(|p| p[0].is_zero()));
    }

    #[test]
    fn shadow_of_periodic_point_is_itself() {
        let t = validate_hyperbolic(&[vec![2]]).unwrap();
        let s = periodic_shadow(&t, &[r(1, 3)], 8, 2).unwrap();
        assert_eq!(s.y, vec![r(1, 3)]);
        assert_eq!(s.quality, 0.0);
    }

    #[test]
    fn cat_map_shadow_is_unsupported() {
        let cat = validate_hyperbolic(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert!(matches!(
            periodic_shadow(&cat, &[r(1, 7), r(2, 7)], 5, 2),
            Err(Error::UnsupportedConstruction)
        ));
    }

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational("3/6").unwrap(), r(1, 2));
        assert_eq!(parse_rational("-2").unwrap(), r(-2, 1));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert!(parse_rational("1/0").is_err());
    }
}
