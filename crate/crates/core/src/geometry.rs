//! Constraint regions, the unit disk and their boundary discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A point of the plane, identified with the complex number `x + iy`.
/// Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Serialize> Serialize for Point<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (&self.x, &self.y).serialize(s)
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Point<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (x, y) = <(T, T)>::deserialize(d)?;
        Ok(Point { x, y })
    }
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Point { x, y }
    }

    pub fn origin() -> Self {
        Point::new(T::zero(), T::zero())
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn norm_sqr(self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn sub(self, o: Self) -> Self {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Self) -> Self {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: T) -> Self {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The open constraint set `U`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region<T> {
    /// `U = {Re z < -a}`.
    #[serde(rename = "halfplane")]
    HalfPlane { a: T },
    Disk { center: Point<T>, radius: T },
    /// Closed, non-self-intersecting polygon. Stored counter-clockwise after
    /// [`Region::validated`].
    Polygon { vertices: Vec<Point<T>> },
}

/// A point of `∂U` standing for the boundary element of length `arc_weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundarySample<T> {
    pub position: Point<T>,
    /// Arc-length coordinate of the sample along the boundary.
    pub arclength: T,
    pub arc_weight: T,
    /// Unit normal pointing out of `U`.
    pub outward_normal: Point<T>,
}

fn polygon_signed_area<T: Scalar>(v: &[Point<T>]) -> T {
    let n = v.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc = acc + v[i].cross(v[(i + 1) % n]);
    }
    acc * T::half()
}

fn segments_cross<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>, d: Point<T>) -> bool {
    let o1 = b.sub(a).cross(c.sub(a));
    let o2 = b.sub(a).cross(d.sub(a));
    let o3 = d.sub(c).cross(a.sub(c));
    let o4 = d.sub(c).cross(b.sub(c));
    o1 * o2 < T::zero() && o3 * o4 < T::zero()
}

fn segment_distance<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let ab = b.sub(a);
    let len2 = ab.norm_sqr();
    let t = if len2 > T::zero() { (p.sub(a).dot(ab) / len2).max(T::zero()).min(T::one()) } else { T::zero() };
    p.dist(a.add(ab.scale(t)))
}

fn winding_number<T: Scalar>(v: &[Point<T>], p: Point<T>) -> i32 {
    let n = v.len();
    let mut wn = 0;
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let side = b.sub(a).cross(p.sub(a));
        if a.y <= p.y {
            if b.y > p.y && side > T::zero() {
                wn += 1;
            }
        } else if b.y <= p.y && side < T::zero() {
            wn -= 1;
        }
    }
    wn
}

/// Signed area of `{t X : X ∈ [a, b], t ∈ [0, 1]} ∩ D`.
fn wedge_disk_area<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    let d = b.sub(a);
    let qa = d.norm_sqr();
    if qa == T::zero() {
        return T::zero();
    }
    let qb = T::two() * a.dot(d);
    let qc = a.norm_sqr() - T::one();
    let mut cuts = vec![T::zero()];
    let disc = qb * qb - T::lit(4.0) * qa * qc;
    if disc > T::zero() {
        let sq = disc.sqrt();
        for t in [(-qb - sq) / (T::two() * qa), (-qb + sq) / (T::two() * qa)] {
            if t > T::zero() && t < T::one() {
                cuts.push(t);
            }
        }
    }
    cuts.push(T::one());
    let mut area = T::zero();
    for w in cuts.windows(2) {
        let p = a.add(d.scale(w[0]));
        let q = a.add(d.scale(w[1]));
        let mid = a.add(d.scale((w[0] + w[1]) * T::half()));
        if mid.norm_sqr() <= T::one() {
            area = area + p.cross(q) * T::half();
        } else {
            area = area + p.cross(q).atan2(p.dot(q)) * T::half();
        }
    }
    area
}

impl<T: Scalar> Region<T> {
    /// Checks the invariants and normalizes polygon orientation.
    pub fn validated(self) -> Result<Self> {
        match self {
            Region::HalfPlane { a } => {
                if !a.is_finite() {
                    return Err(Error::InvalidRegion("half-plane offset must be finite".into()));
                }
                Ok(Region::HalfPlane { a })
            }
            Region::Disk { center, radius } => {
                if !center.is_finite() || !radius.is_finite() || radius <= T::zero() {
                    return Err(Error::InvalidRegion(format!("disk radius must be positive and finite, got {radius}")));
                }
                Ok(Region::Disk { center, radius })
            }
            Region::Polygon { mut vertices } => {
                if vertices.len() > 3 && vertices.first() == vertices.last() {
                    vertices.pop();
                }
                if vertices.len() < 3 {
                    return Err(Error::InvalidRegion("polygon needs at least 3 vertices".into()));
                }
                if vertices.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidRegion("polygon vertices must be finite".into()));
                }
                let area = polygon_signed_area(&vertices);
                if area == T::zero() {
                    return Err(Error::InvalidRegion("polygon has zero area".into()));
                }
                if area < T::zero() {
                    vertices.reverse();
                }
                let n = vertices.len();
                for i in 0..n {
                    for j in (i + 2)..n {
                        if i == 0 && j == n - 1 {
                            continue;
                        }
                        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                        let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                        if segments_cross(a, b, c, d) {
                            return Err(Error::InvalidRegion("polygon is self-intersecting".into()));
                        }
                    }
                }
                Ok(Region::Polygon { vertices })
            }
        }
    }

    /// Membership in the open set `U`.
    pub fn contains(&self, pt: Point<T>) -> bool {
        match self {
            Region::HalfPlane { a } => pt.x < -*a,
            Region::Disk { center, radius } => pt.dist(*center) < *radius,
            Region::Polygon { .. } => self.signed_distance(pt) < T::zero(),
        }
    }

    /// Negative inside `U`, positive outside, zero on `∂U`.
    pub fn signed_distance(&self, pt: Point<T>) -> T {
        match self {
            Region::HalfPlane { a } => pt.x + *a,
            Region::Disk { center, radius } => pt.dist(*center) - *radius,
            Region::Polygon { vertices } => {
                let n = vertices.len();
                let dist = (0..n)
                    .map(|i| segment_distance(pt, vertices[i], vertices[(i + 1) % n]))
                    .fold(T::infinity(), T::min);
                if dist == T::zero() {
                    T::zero()
                } else if winding_number(vertices, pt) != 0 {
                    -dist
                } else {
                    dist
                }
            }
        }
    }

    /// Outward unit normal of the nearest boundary point (finite-difference
    /// gradient of the signed distance for polygons).
    pub fn normal_at(&self, pt: Point<T>) -> Point<T> {
        match self {
            Region::HalfPlane { .. } => Point::new(T::one(), T::zero()),
            Region::Disk { center, .. } => {
                let d = pt.sub(*center);
                let r = d.norm();
                if r == T::zero() {
                    Point::new(T::one(), T::zero())
                } else {
                    d.scale(T::one() / r)
                }
            }
            Region::Polygon { .. } => {
                let e = T::lit(1e-6);
                let gx = self.signed_distance(Point::new(pt.x + e, pt.y)) - self.signed_distance(Point::new(pt.x - e, pt.y));
                let gy = self.signed_distance(Point::new(pt.x, pt.y + e)) - self.signed_distance(Point::new(pt.x, pt.y - e));
                let g = Point::new(gx, gy);
                let n = g.norm();
                if n == T::zero() {
                    Point::new(T::one(), T::zero())
                } else {
                    g.scale(T::one() / n)
                }
            }
        }
    }

    /// Samples `∂U` at approximately uniform `spacing`. The half-plane
    /// boundary line is truncated to `|Im z| ≤ extent`; `extent` is ignored
    /// for bounded regions.
    pub fn boundary_samples(&self, spacing: T, extent: T) -> Result<Vec<BoundarySample<T>>> {
        if !(spacing > T::zero()) {
            return Err(Error::InvalidRegion("boundary spacing must be positive".into()));
        }
        let under = |feature: T| Error::UnderResolved { spacing: spacing.to_f64_lossy(), feature: feature.to_f64_lossy() };
        match self {
            Region::HalfPlane { a } => {
                let length = T::two() * extent;
                if spacing > extent {
                    return Err(under(extent));
                }
                let count = (length / spacing - T::lit(1e-9)).ceil().max(T::one());
                let n = count.to_usize().unwrap_or(1);
                let w = length / count;
                Ok((0..n)
                    .map(|k| {
                        let s = (T::from_usize_lossy(k) + T::half()) * w;
                        BoundarySample {
                            position: Point::new(-*a, s - extent),
                            arclength: s,
                            arc_weight: w,
                            outward_normal: Point::new(T::one(), T::zero()),
                        }
                    })
                    .collect())
            }
            Region::Disk { center, radius } => {
                if spacing > *radius {
                    return Err(under(*radius));
                }
                let perimeter = T::two() * T::PI() * *radius;
                let count = (perimeter / spacing - T::lit(1e-9)).ceil().max(T::lit(3.0));
                let n = count.to_usize().unwrap_or(3);
                let w = perimeter / count;
                Ok((0..n)
                    .map(|k| {
                        let theta = T::two() * T::PI() * (T::from_usize_lossy(k) + T::half()) / count;
                        let normal = Point::new(theta.cos(), theta.sin());
                        BoundarySample {
                            position: center.add(normal.scale(*radius)),
                            arclength: (T::from_usize_lossy(k) + T::half()) * w,
                            arc_weight: w,
                            outward_normal: normal,
                        }
                    })
                    .collect())
            }
            Region::Polygon { vertices } => {
                let n = vertices.len();
                let shortest = (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).fold(T::infinity(), T::min);
                if spacing > shortest {
                    return Err(under(shortest));
                }
                let mut out = Vec::new();
                let mut s0 = T::zero();
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let len = a.dist(b);
                    let dir = b.sub(a).scale(T::one() / len);
                    // counter-clockwise boundary: the interior is on the left
                    let normal = Point::new(dir.y, -dir.x);
                    let count = (len / spacing - T::lit(1e-9)).ceil().max(T::one());
                    let m = count.to_usize().unwrap_or(1);
                    let w = len / count;
                    for k in 0..m {
                        let t = (T::from_usize_lossy(k) + T::half()) * w;
                        out.push(BoundarySample {
                            position: a.add(dir.scale(t)),
                            arclength: s0 + t,
                            arc_weight: w,
                            outward_normal: normal,
                        });
                    }
                    s0 = s0 + len;
                }
                Ok(out)
            }
        }
    }

    /// Circular-law mass `μ₀(U) = area(U ∩ D)/π`.
    pub fn circular_law_mass(&self) -> T {
        let pi = T::PI();
        let area = match self {
            Region::HalfPlane { a } => {
                let a = *a;
                if a >= T::one() {
                    T::zero()
                } else if a <= -T::one() {
                    pi
                } else {
                    a.acos() - a * (T::one() - a * a).sqrt()
                }
            }
            Region::Disk { center, radius } => lens_area(T::one(), *radius, center.norm()),
            Region::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| wedge_disk_area(vertices[i], vertices[(i + 1) % n])).fold(T::zero(), |a, b| a + b).abs()
            }
        };
        (area / pi).max(T::zero()).min(T::one())
    }

    /// True when `D ∖ U` has positive area, which constrained solves require.
    pub fn leaves_room_in_disk(&self) -> bool {
        self.circular_law_mass() < T::one() - T::lit(1e-12)
    }

    /// Polygons only approximate a `C^{1,1}` boundary.
    pub fn is_approximate_hypothesis(&self) -> bool {
        matches!(self, Region::Polygon { .. })
    }

    /// Length of the boundary inside the box `|Im z| ≤ extent` (half-plane) or total perimeter.
    pub fn perimeter(&self, extent: T) -> T {
        match self {
            Region::HalfPlane { .. } => T::two() * extent,
            Region::Disk { radius, .. } => T::two() * T::PI() * *radius,
            Region::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).fold(T::zero(), |a, b| a + b)
            }
        }
    }
}

/// Area of the intersection of two disks with radii `r1`, `r2` and centre distance `d`.
pub fn lens_area<T: Scalar>(r1: T, r2: T, d: T) -> T {
    let pi = T::PI();
    if d >= r1 + r2 {
        return T::zero();
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return pi * r * r;
    }
    let two = T::two();
    let c1 = ((d * d + r1 * r1 - r2 * r2) / (two * d * r1)).max(-T::one()).min(T::one());
    let c2 = ((d * d + r2 * r2 - r1 * r1) / (two * d * r2)).max(-T::one()).min(T::one());
    let k = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    r1 * r1 * c1.acos() + r2 * r2 * c2.acos() - T::half() * k.max(T::zero()).sqrt()
}
