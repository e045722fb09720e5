//! Boxes, balls, hyperplanes and spheres in `R^d`, with the exact
//! set-to-set distance ranges the cylinder covers rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A compact convex region: an axis-aligned box or a closed Euclidean ball.
/// Cylinder images are always represented by a region containing them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn interval(lo: f64, hi: f64) -> Region {
        Region::Box {
            lo: vec![lo.min(hi)],
            hi: vec![lo.max(hi)],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Region::Ball { center, .. } => center.clone(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => dist(lo, hi),
            Region::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Radius of the smallest ball around [`Region::center`] containing the region.
    pub fn circumradius(&self) -> f64 {
        match self {
            Region::Box { .. } => 0.5 * self.diameter(),
            Region::Ball { radius, .. } => *radius,
        }
    }

    /// The region as a ball (exact for balls, circumscribed for boxes).
    pub fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (self.center(), self.circumradius())
    }

    /// `(min, max)` of `|y - x|` over points `y` of the region.
    pub fn distance_range(&self, x: &[f64]) -> (f64, f64) {
        match self {
            Region::Box { lo, hi } => {
                let mut near = 0.0;
                let mut far = 0.0;
                for i in 0..lo.len() {
                    let below = lo[i] - x[i];
                    let above = x[i] - hi[i];
                    let gap = below.max(above).max(0.0);
                    near += gap * gap;
                    let reach = (x[i] - lo[i]).abs().max((hi[i] - x[i]).abs());
                    far += reach * reach;
                }
                (near.sqrt(), far.sqrt())
            }
            Region::Ball { center, radius } => {
                let d = dist(center, x);
                ((d - radius).max(0.0), d + radius)
            }
        }
    }

    /// `(min, max)` of `<n, y>` over points `y` of the region.
    pub fn projection_range(&self, n: &[f64]) -> (f64, f64) {
        match self {
            Region::Box { lo, hi } => {
                let mut a = 0.0;
                let mut b = 0.0;
                for i in 0..lo.len() {
                    let p = n[i] * lo[i];
                    let q = n[i] * hi[i];
                    a += p.min(q);
                    b += p.max(q);
                }
                (a, b)
            }
            Region::Ball { center, radius } => {
                let c = dot(n, center);
                let r = radius * norm(n);
                (c - r, c + r)
            }
        }
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        self.distance_range(x).0 <= tol
    }

    /// Distance from `x` to the region (zero inside).
    pub fn distance_to_point(&self, x: &[f64]) -> f64 {
        self.distance_range(x).0
    }

    /// Whether `other` lies inside `self` up to `tol`.
    pub fn contains_region(&self, other: &Region, tol: f64) -> bool {
        match (self, other) {
            (Region::Box { lo, hi }, _) => {
                let d = lo.len();
                (0..d).all(|i| {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    let (a, b) = other.projection_range(&e);
                    a >= lo[i] - tol && b <= hi[i] + tol
                })
            }
            (Region::Ball { center, radius }, _) => other.distance_range(center).1 <= radius + tol,
        }
    }

    /// Lower bound on the distance between two regions, exact for pairs of
    /// boxes and pairs of balls.
    pub fn gap_to(&self, other: &Region) -> f64 {
        match (self, other) {
            (Region::Box { lo: a, hi: b }, Region::Box { lo: c, hi: d }) => {
                let mut s = 0.0;
                for i in 0..a.len() {
                    let g = (c[i] - b[i]).max(a[i] - d[i]).max(0.0);
                    s += g * g;
                }
                s.sqrt()
            }
            (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
                (dist(c1, c2) - r1 - r2).max(0.0)
            }
            (Region::Ball { center, radius }, b @ Region::Box { .. })
            | (b @ Region::Box { .. }, Region::Ball { center, radius }) => {
                (b.distance_to_point(center) - radius).max(0.0)
            }
        }
    }

    /// Signed separation: positive gap when disjoint, negative overlap depth
    /// when the interiors meet (exact for boxes and for balls).
    pub fn separation(&self, other: &Region) -> f64 {
        match (self, other) {
            (Region::Box { lo: a, hi: b }, Region::Box { lo: c, hi: d }) => {
                let gaps: Vec<f64> = (0..a.len()).map(|i| (c[i] - b[i]).max(a[i] - d[i])).collect();
                if gaps.iter().any(|g| *g > 0.0) {
                    norm(&gaps.iter().map(|g| g.max(0.0)).collect::<Vec<_>>())
                } else {
                    gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                }
            }
            (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
                dist(c1, c2) - r1 - r2
            }
            _ => {
                let g = self.gap_to(other);
                if g > 0.0 {
                    g
                } else {
                    let (c1, r1) = self.bounding_ball();
                    let (c2, r2) = other.bounding_ball();
                    (dist(&c1, &c2) - r1 - r2).min(0.0)
                }
            }
        }
    }

    /// Boundary sample points (corners and edge grid for boxes, a circle or
    /// axis points for balls), used for numeric containment checks.
    pub fn boundary_grid(&self, per_side: usize) -> Vec<Vec<f64>> {
        let per_side = per_side.max(2);
        match self {
            Region::Box { lo, hi } => {
                let d = lo.len();
                let mut pts = Vec::new();
                // all grid points with at least one coordinate on a face
                let total = per_side.pow(d as u32);
                for idx in 0..total {
                    let mut rem = idx;
                    let mut p = vec![0.0; d];
                    let mut on_face = false;
                    for i in 0..d {
                        let k = rem % per_side;
                        rem /= per_side;
                        if k == 0 || k == per_side - 1 {
                            on_face = true;
                        }
                        let t = k as f64 / (per_side - 1) as f64;
                        p[i] = lo[i] + t * (hi[i] - lo[i]);
                    }
                    if on_face {
                        pts.push(p);
                    }
                }
                pts
            }
            Region::Ball { center, radius } => {
                let d = center.len();
                if d == 1 {
                    return vec![vec![center[0] - radius], vec![center[0] + radius]];
                }
                let mut pts = Vec::new();
                let n = 4 * per_side;
                for k in 0..n {
                    let t = std::f64::consts::TAU * k as f64 / n as f64;
                    let mut p = center.clone();
                    p[0] += radius * t.cos();
                    p[1] += radius * t.sin();
                    pts.push(p);
                }
                pts
            }
        }
    }
}

/// An affine hyperplane `{x : <n, x> = offset}` with unit normal. In `d = 1`
/// it is the single point `offset * n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    /// Normalizes `normal`; the offset is rescaled accordingly.
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if !(n.is_finite() && n > 0.0) || !offset.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hyperplane needs a nonzero finite normal, got {normal:?}"
            )));
        }
        Ok(Hyperplane {
            normal: normal.iter().map(|x| x / n).collect(),
            offset: offset / n,
        })
    }

    /// The point `{p}` in one dimension.
    pub fn point(p: f64) -> Self {
        Hyperplane {
            normal: vec![1.0],
            offset: p,
        }
    }

    /// The hyperplane through `p` with the given normal.
    pub fn through(p: &[f64], normal: Vec<f64>) -> Result<Self> {
        let h = Hyperplane::new(normal, 0.0)?;
        let offset = dot(&h.normal, p);
        Ok(Hyperplane { offset, ..h })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (dot(&self.normal, x) - self.offset).abs()
    }
}

/// A hyperplane or a round sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneralizedSphere {
    Plane(Hyperplane),
    Sphere { center: Vec<f64>, radius: f64 },
}

impl GeneralizedSphere {
    pub fn sphere(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(GeneralizedSphere::Sphere { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneralizedSphere::Plane(h) => h.dim(),
            GeneralizedSphere::Sphere { center, .. } => center.len(),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            GeneralizedSphere::Plane(h) => h.distance(x),
            GeneralizedSphere::Sphere { center, radius } => (dist(center, x) - radius).abs(),
        }
    }

    /// `(min, max)` over points `y` of the region of `dist(y, self)`.
    pub fn distance_range(&self, region: &Region) -> (f64, f64) {
        match self {
            GeneralizedSphere::Plane(h) => {
                let (a, b) = region.projection_range(&h.normal);
                let lo = (h.offset - b).max(a - h.offset).max(0.0);
                let hi = (h.offset - a).abs().max((b - h.offset).abs());
                (lo, hi)
            }
            GeneralizedSphere::Sphere { center, radius } => {
                let (near, far) = region.distance_range(center);
                let lo = if near <= *radius && *radius <= far {
                    0.0
                } else if *radius > far {
                    radius - far
                } else {
                    near - radius
                };
                let hi = (near - radius).abs().max((far - radius).abs());
                (lo, hi)
            }
        }
    }
}

impl From<Hyperplane> for GeneralizedSphere {
    fn from(h: Hyperplane) -> Self {
        GeneralizedSphere::Plane(h)
    }
}
