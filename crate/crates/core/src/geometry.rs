//! Finite subsets of Z^d, the l-infinity metric, boundary operators and
//! hypercube enumeration.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of Z^d. Ordering is lexicographic on coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i64>);

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0; dim])
    }

    pub fn splat(dim: usize, value: i64) -> Self {
        Point(vec![value; dim])
    }

    /// The i-th standard basis vector scaled by `scale`.
    pub fn axis(dim: usize, i: usize, scale: i64) -> Self {
        let mut c = vec![0; dim];
        c[i] = scale;
        Point(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    /// l-infinity norm.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for Point {
    fn from(v: Vec<i64>) -> Self {
        Point(v)
    }
}

impl<'a> Add<&'a Point> for &'a Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl<'a> Sub<&'a Point> for &'a Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        debug_assert_eq!(self.dim(), rhs.dim());
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        &self + &rhs
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        &self - &rhs
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(self.0.iter().map(|c| -c).collect())
    }
}

/// l-infinity distance between two points.
pub fn chebyshev(u: &Point, v: &Point) -> Result<u64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            got: v.dim(),
        });
    }
    Ok(u.0
        .iter()
        .zip(&v.0)
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0))
}

/// Axis-aligned box `origin + [0, size_1) x ... x [0, size_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxRegion {
    pub origin: Point,
    pub size: Vec<usize>,
}

impl BoxRegion {
    pub fn new(origin: Point, size: Vec<usize>) -> Self {
        assert_eq!(origin.dim(), size.len());
        BoxRegion { origin, size }
    }

    /// F_n = [0, n)^d.
    pub fn cube(dim: usize, n: usize) -> Self {
        BoxRegion::new(Point::origin(dim), vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.size.len()
    }

    pub fn volume(&self) -> usize {
        self.size.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.size.contains(&0)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && p.coords()
                .iter()
                .zip(self.origin.coords())
                .zip(&self.size)
                .all(|((&c, &o), &s)| c >= o && c < o + s as i64)
    }

    /// Row-major (lexicographic) index of a contained point.
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let mut idx = 0usize;
        for ((&c, &o), &s) in p.coords().iter().zip(self.origin.coords()).zip(&self.size) {
            idx = idx * s + (c - o) as usize;
        }
        Some(idx)
    }

    pub fn point_at(&self, mut idx: usize) -> Point {
        let d = self.dim();
        let mut c = vec![0i64; d];
        for i in (0..d).rev() {
            let s = self.size[i];
            c[i] = self.origin.coords()[i] + (idx % s) as i64;
            idx /= s;
        }
        Point(c)
    }

    /// Points in lexicographic order (last coordinate fastest).
    pub fn points(&self) -> BoxPoints<'_> {
        BoxPoints {
            region: self,
            next: if self.is_empty() { None } else { Some(self.origin.clone()) },
        }
    }

    pub fn translate(&self, v: &Point) -> BoxRegion {
        BoxRegion::new(&self.origin + v, self.size.clone())
    }

    /// The box grown by `r` on every side.
    pub fn expand(&self, r: usize) -> BoxRegion {
        BoxRegion::new(
            Point(self.origin.coords().iter().map(|c| c - r as i64).collect()),
            self.size.iter().map(|s| s + 2 * r).collect(),
        )
    }

    /// Inclusive upper corner.
    pub fn max_corner(&self) -> Point {
        Point(
            self.origin
                .coords()
                .iter()
                .zip(&self.size)
                .map(|(o, s)| o + *s as i64 - 1)
                .collect(),
        )
    }
}

pub struct BoxPoints<'a> {
    region: &'a BoxRegion,
    next: Option<Point>,
}

impl Iterator for BoxPoints<'_> {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let r = self.region;
        let mut i = r.dim();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            let lo = r.origin.coords()[i];
            if succ.0[i] + 1 < lo + r.size[i] as i64 {
                succ.0[i] += 1;
                self.next = Some(succ);
                break;
            }
            succ.0[i] = lo;
        }
        Some(cur)
    }
}

/// A finite subset of Z^d stored as a sorted point list; boxes keep their
/// box description for fast membership and boundary queries.
#[derive(Clone, Debug)]
pub struct Shape {
    dim: usize,
    points: Vec<Point>,
    region: Option<BoxRegion>,
}

impl PartialEq for Shape {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl Eq for Shape {}

impl Shape {
    pub fn from_points(dim: usize, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let set: BTreeSet<Point> = points.into_iter().collect();
        if let Some(p) = set.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        Ok(Shape {
            dim,
            points: set.into_iter().collect(),
            region: None,
        })
    }

    pub fn from_box(region: BoxRegion) -> Self {
        Shape {
            dim: region.dim(),
            points: region.points().collect(),
            region: Some(region),
        }
    }

    /// F_n = [0, n)^d.
    pub fn cube(dim: usize, n: usize) -> Self {
        Shape::from_box(BoxRegion::cube(dim, n))
    }

    pub fn empty(dim: usize) -> Self {
        Shape {
            dim,
            points: Vec::new(),
            region: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn as_box(&self) -> Option<&BoxRegion> {
        self.region.as_ref()
    }

    pub fn contains(&self, p: &Point) -> bool {
        match &self.region {
            Some(b) => b.contains(p),
            None => self.points.binary_search(p).is_ok(),
        }
    }

    /// Position of `p` in the sorted point list.
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        match &self.region {
            Some(b) => b.index_of(p),
            None => self.points.binary_search(p).ok(),
        }
    }

    pub fn translate(&self, v: &Point) -> Shape {
        Shape {
            dim: self.dim,
            points: self.points.iter().map(|p| p + v).collect(),
            region: self.region.as_ref().map(|b| b.translate(v)),
        }
    }

    pub fn is_subset(&self, other: &Shape) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn min_point(&self) -> Option<&Point> {
        self.points.first()
    }

    /// Smallest box containing the shape.
    pub fn bounding_box(&self) -> Option<BoxRegion> {
        if let Some(b) = &self.region {
            return Some(b.clone());
        }
        let first = self.points.first()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in &self.points {
            for i in 0..self.dim {
                lo[i] = lo[i].min(p.0[i]);
                hi[i] = hi[i].max(p.0[i]);
            }
        }
        let size = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        Some(BoxRegion::new(Point(lo), size))
    }

    /// Largest l-infinity distance between two points of the shape.
    pub fn diameter(&self) -> u64 {
        self.bounding_box()
            .map(|b| b.size.iter().map(|&s| s as u64 - 1).max().unwrap_or(0))
            .unwrap_or(0)
    }
}

/// Distance from `p` to a finite set (`None` for the empty set).
pub fn dist_to_shape(p: &Point, e: &Shape) -> Option<u64> {
    e.points().iter().map(|q| chebyshev(p, q).unwrap_or(u64::MAX)).min()
}

/// `{p not in E : dist(p, E) <= r}`.
pub fn outer_boundary(e: &Shape, r: usize) -> Shape {
    if e.is_empty() {
        return Shape::empty(e.dim());
    }
    if let Some(b) = e.as_box() {
        let grown = b.expand(r);
        return Shape::from_points(e.dim(), grown.points().filter(|p| !b.contains(p)))
            .expect("dimensions agree");
    }
    let nbhd = BoxRegion::new(Point::splat(e.dim(), -(r as i64)), vec![2 * r + 1; e.dim()]);
    let offsets: Vec<Point> = nbhd.points().collect();
    let mut out = BTreeSet::new();
    for p in e.points() {
        for o in &offsets {
            let q = p + o;
            if !e.contains(&q) {
                out.insert(q);
            }
        }
    }
    Shape::from_points(e.dim(), out).expect("dimensions agree")
}

/// `{p in E : dist(p, Z^d \ E) <= r}`.
pub fn inner_boundary(e: &Shape, r: usize) -> Shape {
    if let Some(b) = e.as_box() {
        let lo = b.origin.coords();
        let hi = b.max_corner();
        let pts = e.points().iter().filter(|p| {
            p.coords().iter().enumerate().any(|(i, &c)| {
                let to_low = (c - lo[i] + 1) as usize;
                let to_high = (hi.coords()[i] + 1 - c) as usize;
                to_low.min(to_high) <= r
            })
        });
        return Shape::from_points(e.dim(), pts.cloned()).expect("dimensions agree");
    }
    let nbhd = BoxRegion::new(Point::splat(e.dim(), -(r as i64)), vec![2 * r + 1; e.dim()]);
    let offsets: Vec<Point> = nbhd.points().collect();
    let pts = e
        .points()
        .iter()
        .filter(|p| offsets.iter().any(|o| !e.contains(&(*p + o))))
        .cloned();
    Shape::from_points(e.dim(), pts).expect("dimensions agree")
}

/// Anchors `p` with `p + F_n ⊆ D`, in lexicographic order.
pub fn hypercubes_in(d: &Shape, n: usize) -> Vec<Point> {
    if n == 0 {
        return Vec::new();
    }
    if let Some(b) = d.as_box() {
        if b.size.iter().any(|&s| s < n) {
            return Vec::new();
        }
        let anchors = BoxRegion::new(b.origin.clone(), b.size.iter().map(|s| s - n + 1).collect());
        return anchors.points().collect();
    }
    let cube: Vec<Point> = BoxRegion::cube(d.dim(), n).points().collect();
    d.points()
        .iter()
        .filter(|p| cube.iter().all(|o| d.contains(&(*p + o))))
        .cloned()
        .collect()
}

/// Compares two shapes up to translation.
pub fn cmp_translated(a: &Shape, b: &Shape) -> Ordering {
    let (Some(ma), Some(mb)) = (a.min_point(), b.min_point()) else {
        return a.len().cmp(&b.len());
    };
    a.len().cmp(&b.len()).then_with(|| {
        for (p, q) in a.points().iter().zip(b.points()) {
            let o = (p - ma).cmp(&(q - mb));
            if o != Ordering::Equal {
                return o;
            }
        }
        Ordering::Equal
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> Point {
        Point::new(c.to_vec())
    }

    fn line(vals: &[i64]) -> Shape {
        Shape::from_points(1, vals.iter().map(|&v| p(&[v]))).unwrap()
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev(&p(&[0, 0]), &p(&[3, -1])).unwrap(), 3);
        assert_eq!(chebyshev(&p(&[4, -2]), &p(&[4, -2])).unwrap(), 0);
        assert_eq!(chebyshev(&p(&[0]), &p(&[5])).unwrap(), 5);
        assert!(matches!(
            chebyshev(&p(&[0]), &p(&[0, 1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn outer_boundary_examples() {
        assert_eq!(outer_boundary(&line(&[0, 1, 2]), 1), line(&[-1, 3]));
        let single = Shape::from_points(2, [p(&[0, 0])]).unwrap();
        assert_eq!(outer_boundary(&single, 1).len(), 8);
        assert_eq!(outer_boundary(&Shape::cube(1, 5), 2), line(&[-2, -1, 5, 6]));
        assert!(outer_boundary(&Shape::empty(2), 3).is_empty());
    }

    #[test]
    fn inner_boundary_examples() {
        assert_eq!(inner_boundary(&Shape::cube(1, 5), 1), line(&[0, 4]));
        let f3 = Shape::cube(2, 3);
        let ib = inner_boundary(&f3, 1);
        assert_eq!(ib.len(), 8);
        assert!(!ib.contains(&p(&[1, 1])));
        // r at least the diameter: everything is near the complement
        let e = line(&[0, 1, 2, 3, 7]);
        assert_eq!(inner_boundary(&e, 7), e);
    }

    #[test]
    fn box_and_point_paths_agree() {
        let boxed = Shape::cube(2, 4);
        let listed = Shape::from_points(2, boxed.points().to_vec()).unwrap();
        for r in 1..4 {
            assert_eq!(inner_boundary(&boxed, r), inner_boundary(&listed, r));
            assert_eq!(outer_boundary(&boxed, r), outer_boundary(&listed, r));
        }
        for n in 1..5 {
            assert_eq!(hypercubes_in(&boxed, n), hypercubes_in(&listed, n));
        }
    }

    #[test]
    fn hypercube_examples() {
        assert_eq!(
            hypercubes_in(&Shape::cube(1, 4), 2),
            vec![p(&[0]), p(&[1]), p(&[2])]
        );
        assert_eq!(hypercubes_in(&Shape::cube(3, 3), 3), vec![Point::origin(3)]);
        assert_eq!(hypercubes_in(&Shape::cube(2, 3), 2).len(), 4);
        assert!(hypercubes_in(&Shape::cube(2, 3), 4).is_empty());
        for k in 2..6 {
            for n in 1..=k {
                assert_eq!(hypercubes_in(&Shape::cube(2, k), n).len(), (k - n + 1).pow(2));
            }
        }
    }

    #[test]
    fn box_indexing_round_trips() {
        let b = BoxRegion::new(p(&[-2, 3, 0]), vec![3, 2, 4]);
        for (i, q) in b.points().enumerate() {
            assert_eq!(b.index_of(&q), Some(i));
            assert_eq!(b.point_at(i), q);
        }
        assert_eq!(b.points().count(), 24);
    }
}
