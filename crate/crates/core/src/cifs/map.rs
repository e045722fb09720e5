//! Conformal maps closed under composition: similarities of `R^d`, real
//! linear-fractional maps of the line, and Möbius maps of the plane.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::geometry::{dist, Region};

#[derive(Clone, Debug, PartialEq)]
pub enum ConformalMap {
    /// `x ↦ ratio · O x + trans`, `O` orthogonal (row-major `d × d`).
    Similarity {
        ratio: f64,
        orth: Vec<f64>,
        trans: Vec<f64>,
    },
    /// `x ↦ (a x + b) / (c x + d)` on the real line.
    RealMoebius { a: f64, b: f64, c: f64, d: f64 },
    /// `z ↦ (a z + b) / (c z + d)` on `C = R²`.
    Moebius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
}

fn to_c(x: &[f64]) -> Complex64 {
    Complex64::new(x[0], x[1])
}

fn from_c(z: Complex64) -> Vec<f64> {
    vec![z.re, z.im]
}

impl ConformalMap {
    pub fn identity_like(&self) -> ConformalMap {
        match self {
            ConformalMap::Similarity { trans, .. } => {
                let d = trans.len();
                let mut orth = vec![0.0; d * d];
                for i in 0..d {
                    orth[i * d + i] = 1.0;
                }
                ConformalMap::Similarity {
                    ratio: 1.0,
                    orth,
                    trans: vec![0.0; d],
                }
            }
            ConformalMap::RealMoebius { .. } => ConformalMap::RealMoebius {
                a: 1.0,
                b: 0.0,
                c: 0.0,
                d: 1.0,
            },
            ConformalMap::Moebius { .. } => ConformalMap::Moebius {
                a: Complex64::new(1.0, 0.0),
                b: Complex64::new(0.0, 0.0),
                c: Complex64::new(0.0, 0.0),
                d: Complex64::new(1.0, 0.0),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConformalMap::Similarity { trans, .. } => trans.len(),
            ConformalMap::RealMoebius { .. } => 1,
            ConformalMap::Moebius { .. } => 2,
        }
    }

    pub fn same_family(&self, other: &ConformalMap) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other) && self.dim() == other.dim()
    }

    /// `self ∘ inner`. Both maps must be of the same family.
    pub fn compose(&self, inner: &ConformalMap) -> ConformalMap {
        match (self, inner) {
            (
                ConformalMap::Similarity { ratio: r1, orth: o1, trans: t1 },
                ConformalMap::Similarity { ratio: r2, orth: o2, trans: t2 },
            ) => {
                let d = t1.len();
                let mut orth = vec![0.0; d * d];
                for i in 0..d {
                    for j in 0..d {
                        orth[i * d + j] = (0..d).map(|k| o1[i * d + k] * o2[k * d + j]).sum();
                    }
                }
                let trans = (0..d)
                    .map(|i| r1 * (0..d).map(|k| o1[i * d + k] * t2[k]).sum::<f64>() + t1[i])
                    .collect();
                ConformalMap::Similarity {
                    ratio: r1 * r2,
                    orth,
                    trans,
                }
            }
            (
                ConformalMap::RealMoebius { a, b, c, d },
                ConformalMap::RealMoebius { a: e, b: f, c: g, d: h },
            ) => {
                let m = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
                let s = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                ConformalMap::RealMoebius {
                    a: m[0] / s,
                    b: m[1] / s,
                    c: m[2] / s,
                    d: m[3] / s,
                }
            }
            (
                ConformalMap::Moebius { a, b, c, d },
                ConformalMap::Moebius { a: e, b: f, c: g, d: h },
            ) => {
                let m = [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h];
                let s = m.iter().fold(0.0f64, |acc, x| acc.max(x.norm()));
                ConformalMap::Moebius {
                    a: m[0] / s,
                    b: m[1] / s,
                    c: m[2] / s,
                    d: m[3] / s,
                }
            }
            _ => panic!("composition of conformal maps from different families"),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConformalMap::Similarity { ratio, orth, trans } => {
                let d = trans.len();
                (0..d)
                    .map(|i| ratio * (0..d).map(|k| orth[i * d + k] * x[k]).sum::<f64>() + trans[i])
                    .collect()
            }
            ConformalMap::RealMoebius { a, b, c, d } => vec![(a * x[0] + b) / (c * x[0] + d)],
            ConformalMap::Moebius { a, b, c, d } => {
                let z = to_c(x);
                from_c((a * z + b) / (c * z + d))
            }
        }
    }

    /// `|f'(x)|`, the conformal scaling factor at `x`.
    pub fn derivative_norm(&self, x: &[f64]) -> f64 {
        match self {
            ConformalMap::Similarity { ratio, .. } => *ratio,
            ConformalMap::RealMoebius { a, b, c, d } => {
                let den = c * x[0] + d;
                (a * d - b * c).abs() / (den * den)
            }
            ConformalMap::Moebius { a, b, c, d } => {
                let den = (c * to_c(x) + d).norm();
                (a * d - b * c).norm() / (den * den)
            }
        }
    }

    /// The pole of a linear-fractional map, if any.
    pub fn pole(&self) -> Option<Vec<f64>> {
        match self {
            ConformalMap::Similarity { .. } => None,
            ConformalMap::RealMoebius { c, d, .. } => (*c != 0.0).then(|| vec![-d / c]),
            ConformalMap::Moebius { c, d, .. } => (c.norm() != 0.0).then(|| from_c(-d / c)),
        }
    }

    pub fn determinant_norm(&self) -> f64 {
        match self {
            ConformalMap::Similarity { ratio, .. } => *ratio,
            ConformalMap::RealMoebius { a, b, c, d } => (a * d - b * c).abs(),
            ConformalMap::Moebius { a, b, c, d } => (a * d - b * c).norm(),
        }
    }

    /// A region containing `self(region)`, together with whether it is the
    /// exact image. The pole must lie outside `region`.
    pub fn image(&self, region: &Region) -> (Region, bool) {
        match self {
            ConformalMap::Similarity { ratio, orth, .. } => match region {
                Region::Ball { center, radius } => (
                    Region::Ball {
                        center: self.apply(center),
                        radius: ratio * radius,
                    },
                    true,
                ),
                Region::Box { lo, hi } => {
                    let d = lo.len();
                    let c = self.apply(&region.center());
                    let half: Vec<f64> = (0..d).map(|j| 0.5 * (hi[j] - lo[j])).collect();
                    let mut exact = true;
                    let mut new_lo = vec![0.0; d];
                    let mut new_hi = vec![0.0; d];
                    for i in 0..d {
                        let mut h = 0.0;
                        let mut nonzero = 0;
                        for j in 0..d {
                            let o = orth[i * d + j].abs();
                            if o > 1e-12 {
                                nonzero += 1;
                            }
                            h += o * half[j];
                        }
                        if nonzero > 1 {
                            exact = false;
                        }
                        new_lo[i] = c[i] - ratio * h;
                        new_hi[i] = c[i] + ratio * h;
                    }
                    (Region::Box { lo: new_lo, hi: new_hi }, exact)
                }
            },
            ConformalMap::RealMoebius { .. } => {
                let (lo, hi) = match region {
                    Region::Box { lo, hi } => (lo[0], hi[0]),
                    Region::Ball { center, radius } => (center[0] - radius, center[0] + radius),
                };
                let a = self.apply(&[lo])[0];
                let b = self.apply(&[hi])[0];
                (Region::interval(a, b), true)
            }
            ConformalMap::Moebius { a, b, c, d } => {
                let exact = matches!(region, Region::Ball { .. });
                let (center, radius) = region.bounding_ball();
                let z0 = to_c(&center);
                if c.norm() == 0.0 {
                    let k = a / d;
                    return (
                        Region::Ball {
                            center: from_c(k * z0 + b / d),
                            radius: k.norm() * radius,
                        },
                        exact,
                    );
                }
                // f(z) = a/c + k / (z - p) with p = -d/c, k = (b c - a d) / c²
                let p = -d / c;
                let k = (b * c - a * d) / (c * c);
                let w0 = z0 - p;
                let den = w0.norm_sqr() - radius * radius;
                let inv_center = w0.conj() / den;
                let inv_radius = radius / den;
                (
                    Region::Ball {
                        center: from_c(a / c + k * inv_center),
                        radius: k.norm() * inv_radius,
                    },
                    exact,
                )
            }
        }
    }

    /// Upper bound on `diam(self(region))`; exact for similarities and for
    /// linear-fractional images of intervals and balls.
    pub fn image_diameter(&self, region: &Region) -> f64 {
        match self {
            ConformalMap::Similarity { ratio, .. } => ratio * region.diameter(),
            _ => self.image(region).0.diameter(),
        }
    }

    /// `(inf, sup)` of `|f'|` over the region (exact for the three families).
    pub fn derivative_range(&self, region: &Region) -> (f64, f64) {
        match self {
            ConformalMap::Similarity { ratio, .. } => (*ratio, *ratio),
            ConformalMap::RealMoebius { c, d, .. } => {
                let det = self.determinant_norm();
                let (lo, hi) = match region {
                    Region::Box { lo, hi } => (lo[0], hi[0]),
                    Region::Ball { center, radius } => (center[0] - radius, center[0] + radius),
                };
                let u = (c * lo + d).abs();
                let v = (c * hi + d).abs();
                let (near, far) = (u.min(v), u.max(v));
                (det / (far * far), det / (near * near))
            }
            ConformalMap::Moebius { c, d, .. } => {
                let det = self.determinant_norm();
                if c.norm() == 0.0 {
                    let k = det / d.norm_sqr();
                    return (k, k);
                }
                let p = from_c(-d / c);
                let (near, far) = region.distance_range(&p);
                let cn = c.norm_sqr();
                (det / (cn * far * far), det / (cn * near * near))
            }
        }
    }

    /// The attracting fixed point, found in closed form where possible and by
    /// iteration from `start` otherwise.
    pub fn attracting_fixed_point(&self, start: &[f64]) -> Vec<f64> {
        match self {
            ConformalMap::Similarity { ratio, orth, trans } => {
                let d = trans.len();
                let m = DMatrix::from_fn(d, d, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - ratio * orth[i * d + j]
                });
                let t = DVector::from_column_slice(trans);
                match m.lu().solve(&t) {
                    Some(x) => x.iter().copied().collect(),
                    None => self.iterate_to_fixed_point(start),
                }
            }
            ConformalMap::RealMoebius { a, b, c, d } => {
                let candidates: Vec<f64> = if *c == 0.0 {
                    if (d - a).abs() > 0.0 {
                        vec![b / (d - a)]
                    } else {
                        vec![]
                    }
                } else {
                    // c x² + (d - a) x - b = 0
                    let bq = d - a;
                    let disc = bq * bq + 4.0 * c * b;
                    if disc < 0.0 {
                        vec![]
                    } else {
                        let s = disc.sqrt();
                        let q = -0.5 * (bq + bq.signum() * s);
                        let mut v = Vec::new();
                        if q != 0.0 {
                            v.push(q / c);
                            v.push(-b / q);
                        } else {
                            v.push(-bq / (2.0 * c));
                        }
                        v
                    }
                };
                candidates
                    .into_iter()
                    .filter(|x| x.is_finite())
                    .min_by(|x, y| {
                        self.derivative_norm(&[*x])
                            .total_cmp(&self.derivative_norm(&[*y]))
                    })
                    .filter(|x| self.derivative_norm(&[*x]) < 1.0)
                    .map(|x| vec![x])
                    .unwrap_or_else(|| self.iterate_to_fixed_point(start))
            }
            ConformalMap::Moebius { a, b, c, d } => {
                let candidates: Vec<Complex64> = if c.norm() == 0.0 {
                    if (d - a).norm() > 0.0 {
                        vec![b / (d - a)]
                    } else {
                        vec![]
                    }
                } else {
                    let bq = d - a;
                    let s = (bq * bq + 4.0 * c * b).sqrt();
                    vec![(-bq + s) / (2.0 * c), (-bq - s) / (2.0 * c)]
                };
                candidates
                    .into_iter()
                    .map(from_c)
                    .filter(|x| x.iter().all(|v| v.is_finite()) && self.derivative_norm(x) < 1.0)
                    .min_by(|x, y| self.derivative_norm(x).total_cmp(&self.derivative_norm(y)))
                    .map(|z| self.polish_fixed_point(z))
                    .unwrap_or_else(|| self.iterate_to_fixed_point(start))
            }
        }
    }

    fn polish_fixed_point(&self, mut x: Vec<f64>) -> Vec<f64> {
        for _ in 0..4 {
            let y = self.apply(&x);
            if dist(&x, &y) == 0.0 {
                break;
            }
            x = y;
        }
        x
    }

    fn iterate_to_fixed_point(&self, start: &[f64]) -> Vec<f64> {
        let mut x = start.to_vec();
        for _ in 0..10_000 {
            let y = self.apply(&x);
            let step = dist(&x, &y);
            x = y;
            if step <= 1e-17 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(a: f64) -> ConformalMap {
        ConformalMap::RealMoebius {
            a: 0.0,
            b: 1.0,
            c: 1.0,
            d: a,
        }
    }

    #[test]
    fn real_moebius_composition_matches_nested_application() {
        let f = gauss(1.0).compose(&gauss(3.0));
        let x = [0.3];
        let nested = gauss(1.0).apply(&gauss(3.0).apply(&x));
        assert!((f.apply(&x)[0] - nested[0]).abs() < 1e-15);
    }

    #[test]
    fn gauss_derivative_range_is_closed_form() {
        let (lo, hi) = gauss(2.0).derivative_range(&Region::interval(0.0, 1.0));
        assert!((lo - 1.0 / 9.0).abs() < 1e-15);
        assert!((hi - 0.25).abs() < 1e-15);
    }

    #[test]
    fn golden_fixed_point() {
        let x = gauss(1.0).attracting_fixed_point(&[0.5]);
        assert!((x[0] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn moebius_disk_image_matches_boundary_samples() {
        let f = ConformalMap::Moebius {
            a: Complex64::new(0.3, 0.1),
            b: Complex64::new(0.2, -0.1),
            c: Complex64::new(0.1, 0.05),
            d: Complex64::new(1.0, 0.0),
        };
        let disk = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let (img, exact) = f.image(&disk);
        assert!(exact);
        let (c, r) = img.bounding_ball();
        for p in disk.boundary_grid(64) {
            let q = f.apply(&p);
            assert!((dist(&q, &c) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn moebius_derivative_range_brackets_dense_grid() {
        let f = ConformalMap::Moebius {
            a: Complex64::new(0.25, 0.0),
            b: Complex64::new(0.4, 0.1),
            c: Complex64::new(0.15, -0.1),
            d: Complex64::new(1.0, 0.0),
        };
        let disk = Region::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        let (lo, hi) = f.derivative_range(&disk);
        let mut gmin = f64::INFINITY;
        let mut gmax: f64 = 0.0;
        let n = 200;
        for i in 0..=n {
            for j in 0..=n {
                let x = -1.0 + 2.0 * i as f64 / n as f64;
                let y = -1.0 + 2.0 * j as f64 / n as f64;
                if x * x + y * y > 1.0 {
                    continue;
                }
                let v = f.derivative_norm(&[x, y]);
                gmin = gmin.min(v);
                gmax = gmax.max(v);
            }
        }
        assert!(lo <= gmin + 1e-15 && gmax <= hi + 1e-15);
        assert!((gmin - lo) / lo < 1e-3 && (hi - gmax) / hi < 1e-3);
    }

    #[test]
    fn similarity_fixed_point_is_exact() {
        let f = ConformalMap::Similarity {
            ratio: 0.5,
            orth: vec![1.0],
            trans: vec![0.5],
        };
        assert_eq!(f.attracting_fixed_point(&[0.0]), vec![1.0]);
    }
}
