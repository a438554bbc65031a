//! Full-rank sublattices of Z^d, their half-open fundamental parallelotopes,
//! the reduction map onto the fundamental domain, and the window sets D and E
//! built around it.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hypercubes_in, inner_boundary, outer_boundary, BoxRegion, Point, Shape};

/// Default cap on |D| for materialized contexts.
pub const DEFAULT_POINT_BUDGET: usize = 1_000_000;

/// A lattice basis. Basis vectors are stored as the columns of the basis
/// matrix; on the wire they are a JSON array of row vectors, one per basis
/// vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    vectors: Vec<Point>,
    det: i128,
    // adjugate of the basis matrix: adj * B = det * I
    adj: Vec<Vec<i128>>,
    normals: Vec<Vec<i128>>,
    diagonal: Option<Vec<i64>>,
}

impl Serialize for LatticeBasis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[i64]> = self.vectors.iter().map(|v| v.coords()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeBasis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        LatticeBasis::new(rows).map_err(serde::de::Error::custom)
    }
}

fn det_bareiss(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Generalized cross product of d-1 vectors in Z^d.
fn normal_of(vectors: &[Vec<i128>], dim: usize) -> Vec<i128> {
    (0..dim)
        .map(|i| {
            let minor: Vec<Vec<i128>> = (0..dim)
                .filter(|&r| r != i)
                .map(|r| vectors.iter().map(|v| v[r]).collect())
                .collect();
            let sign = if i % 2 == 0 { 1 } else { -1 };
            sign * det_bareiss(minor)
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

impl LatticeBasis {
    /// Builds a basis from its vectors (rows of the input).
    pub fn new(rows: Vec<Vec<i64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("empty basis".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: r.len(),
            });
        }
        // matrix with basis vectors as columns
        let b: Vec<Vec<i128>> = (0..dim)
            .map(|r| (0..dim).map(|c| rows[c][r] as i128).collect())
            .collect();
        let det = det_bareiss(b.clone());
        if det == 0 {
            return Err(Error::SingularBasis);
        }
        let adj: Vec<Vec<i128>> = if dim == 1 {
            vec![vec![1]]
        } else {
            (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| {
                            // (-1)^{i+j} * minor(B without row j, column i)
                            let minor: Vec<Vec<i128>> = (0..dim)
                                .filter(|&r| r != j)
                                .map(|r| (0..dim).filter(|&c| c != i).map(|c| b[r][c]).collect())
                                .collect();
                            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                            sign * det_bareiss(minor)
                        })
                        .collect()
                })
                .collect()
        };

        // Facet normals of the zonotope generated by the basis vectors and
        // the unit vectors; used for exact closure-distance tests.
        let mut gens: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        gens.extend((0..dim).map(|i| {
            let mut e = vec![0i128; dim];
            e[i] = 1;
            e
        }));
        let mut normals: Vec<Vec<i128>> = Vec::new();
        if dim == 1 {
            normals.push(vec![1]);
        } else {
            for subset in combinations(gens.len(), dim - 1) {
                let vs: Vec<Vec<i128>> = subset.iter().map(|&i| gens[i].clone()).collect();
                let mut nu = normal_of(&vs, dim);
                let g = nu.iter().fold(0i128, |acc, &x| acc.gcd(&x));
                if g == 0 {
                    continue;
                }
                nu.iter_mut().for_each(|x| *x /= g);
                if let Some(first) = nu.iter().find(|&&x| x != 0) {
                    if *first < 0 {
                        nu.iter_mut().for_each(|x| *x = -*x);
                    }
                }
                if !normals.contains(&nu) {
                    normals.push(nu);
                }
            }
        }

        let diagonal = if (0..dim).all(|i| (0..dim).all(|j| i == j || rows[i][j] == 0))
            && (0..dim).all(|i| rows[i][i] > 0)
        {
            Some((0..dim).map(|i| rows[i][i]).collect())
        } else {
            None
        };

        Ok(LatticeBasis {
            vectors: rows.into_iter().map(Point::new).collect(),
            det,
            adj,
            normals,
            diagonal,
        })
    }

    /// The cube lattice k Z^d with fundamental domain [0, k)^d.
    pub fn cube(dim: usize, k: i64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument(format!("cube side must be positive, got {k}")));
        }
        LatticeBasis::new((0..dim).map(|i| Point::axis(dim, i, k).into_coords()).collect())
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors
    }

    /// Side lengths when the basis is a positive diagonal.
    pub fn diagonal(&self) -> Option<&[i64]> {
        self.diagonal.as_deref()
    }

    /// Index of the lattice in Z^d, |det|.
    pub fn volume(&self) -> u64 {
        self.det.unsigned_abs() as u64
    }

    fn scaled_coeffs(&self, p: &Point) -> Vec<i128> {
        self.adj
            .iter()
            .map(|row| row.iter().zip(p.coords()).map(|(a, &x)| a * x as i128).sum())
            .collect()
    }

    /// Lattice coordinates `floor(B^{-1} p)`.
    pub fn floor_coeffs(&self, p: &Point) -> Vec<i64> {
        self.scaled_coeffs(p)
            .into_iter()
            .map(|num| num_integer::Integer::div_floor(&num, &self.det) as i64)
            .collect()
    }

    /// `B c` for integer coefficients `c`.
    pub fn combine(&self, coeffs: &[i64]) -> Point {
        let d = self.dim();
        let mut out = vec![0i64; d];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(v.coords()) {
                *o += c * x;
            }
        }
        Point::new(out)
    }

    /// The unique q in the half-open fundamental domain with p - q in the lattice.
    pub fn reduce(&self, p: &Point) -> Point {
        if let Some(diag) = &self.diagonal {
            return Point::new(
                p.coords()
                    .iter()
                    .zip(diag)
                    .map(|(&c, &k)| c.rem_euclid(k))
                    .collect(),
            );
        }
        let f = self.floor_coeffs(p);
        p - &self.combine(&f)
    }

    pub fn contains(&self, v: &Point) -> bool {
        self.scaled_coeffs(v).iter().all(|num| num % self.det == 0)
    }

    /// Whether `p` lies within l-infinity distance `m` of the closed parallelotope.
    pub fn within_closure(&self, p: &Point, m: u64) -> bool {
        let m = m as i128;
        self.normals.iter().all(|nu| {
            let val: i128 = nu.iter().zip(p.coords()).map(|(a, &x)| a * x as i128).sum();
            let slack = m * nu.iter().map(|x| x.abs()).sum::<i128>();
            let (mut lo, mut hi) = (-slack, slack);
            for b in &self.vectors {
                let dot: i128 = nu.iter().zip(b.coords()).map(|(a, &x)| a * x as i128).sum();
                lo += dot.min(0);
                hi += dot.max(0);
            }
            lo <= val && val <= hi
        })
    }

    /// Bounding box of the closed parallelotope grown by `m`.
    fn closure_box(&self, m: u64) -> BoxRegion {
        let d = self.dim();
        let mut lo = vec![-(m as i64); d];
        let mut hi = vec![m as i64; d];
        for b in &self.vectors {
            for j in 0..d {
                let c = b.coords()[j];
                lo[j] += c.min(0);
                hi[j] += c.max(0);
            }
        }
        let size = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        BoxRegion::new(Point::new(lo), size)
    }

    /// E = P ∩ Z^d.
    pub fn fundamental_domain(&self, budget: usize) -> Result<Shape> {
        if let Some(diag) = &self.diagonal {
            let size: Vec<usize> = diag.iter().map(|&k| k as usize).collect();
            let vol: usize = size.iter().product();
            if vol > budget {
                return Err(Error::budget("fundamental domain points", vol, budget));
            }
            return Ok(Shape::from_box(BoxRegion::new(Point::origin(self.dim()), size)));
        }
        let bbox = self.closure_box(0);
        if bbox.volume() > budget.saturating_mul(1 << self.dim()) {
            return Err(Error::budget("fundamental domain bounding box", bbox.volume(), budget));
        }
        let pts: Vec<Point> = bbox.points().filter(|p| &self.reduce(p) == p).collect();
        if pts.len() > budget {
            return Err(Error::budget("fundamental domain points", pts.len(), budget));
        }
        Shape::from_points(self.dim(), pts)
    }
}

/// Λ together with the window size n, the reach m and the derived sets
/// D = {p : dist(p, closure(P)) <= m}, E = P ∩ Z^d and the map η : D → E.
#[derive(Clone, Debug)]
pub struct LatticeContext {
    basis: LatticeBasis,
    n: usize,
    m: usize,
    d_set: Shape,
    e_set: Shape,
    eta: Vec<usize>,
    e_in_d: Vec<usize>,
    window_containment: bool,
}

impl LatticeContext {
    pub fn build(basis: LatticeBasis, n: usize, m: usize) -> Result<Self> {
        Self::build_with_budget(basis, n, m, DEFAULT_POINT_BUDGET)
    }

    pub fn build_with_budget(basis: LatticeBasis, n: usize, m: usize, budget: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("window size n must be positive".into()));
        }
        if m < n {
            return Err(Error::InvalidArgument(format!("reach m = {m} must be at least n = {n}")));
        }
        let dim = basis.dim();
        let d_set = if let Some(diag) = basis.diagonal() {
            let region = BoxRegion::new(
                Point::splat(dim, -(m as i64)),
                diag.iter().map(|&k| k as usize + 2 * m + 1).collect(),
            );
            if region.volume() > budget {
                return Err(Error::budget("|D|", region.volume(), budget));
            }
            Shape::from_box(region)
        } else {
            let bbox = basis.closure_box(m as u64);
            if bbox.volume() > budget.saturating_mul(1 << dim) {
                return Err(Error::budget("bounding box of D", bbox.volume(), budget));
            }
            let pts: Vec<Point> = bbox
                .points()
                .filter(|p| basis.within_closure(p, m as u64))
                .collect();
            if pts.len() > budget {
                return Err(Error::budget("|D|", pts.len(), budget));
            }
            Shape::from_points(dim, pts)?
        };
        let e_set = basis.fundamental_domain(budget)?;
        debug_assert_eq!(e_set.len() as u64, basis.volume());

        let mut eta = Vec::with_capacity(d_set.len());
        for p in d_set.points() {
            let q = basis.reduce(p);
            let idx = e_set
                .index_of(&q)
                .ok_or_else(|| Error::Domain(format!("reduction of {p:?} left the fundamental domain")))?;
            eta.push(idx);
        }
        let e_in_d = e_set
            .points()
            .iter()
            .map(|q| {
                d_set
                    .index_of(q)
                    .ok_or_else(|| Error::Domain(format!("E point {q:?} missing from D")))
            })
            .collect::<Result<Vec<_>>>()?;

        let cube: Vec<Point> = BoxRegion::cube(dim, n).points().collect();
        let window_containment = e_set
            .points()
            .iter()
            .all(|q| cube.iter().all(|o| d_set.contains(&(q + o))));

        Ok(LatticeContext {
            basis,
            n,
            m,
            d_set,
            e_set,
            eta,
            e_in_d,
            window_containment,
        })
    }

    pub fn basis(&self) -> &LatticeBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d_set(&self) -> &Shape {
        &self.d_set
    }

    pub fn e_set(&self) -> &Shape {
        &self.e_set
    }

    pub fn volume(&self) -> u64 {
        self.basis.volume()
    }

    /// η on D indices.
    pub fn eta_index(&self, d_idx: usize) -> usize {
        self.eta[d_idx]
    }

    pub fn eta_table(&self) -> &[usize] {
        &self.eta
    }

    /// Position in D of the i-th point of E.
    pub fn e_in_d(&self, e_idx: usize) -> usize {
        self.e_in_d[e_idx]
    }

    pub fn reduce(&self, p: &Point) -> Point {
        self.basis.reduce(p)
    }

    /// Whether η(p) + F_n ⊆ D holds for every p; always expected when m >= n.
    pub fn window_containment(&self) -> bool {
        self.window_containment
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityRow {
    pub n: usize,
    pub m: usize,
    pub volume: u64,
    /// (1/n) log vol(Λ_n)
    pub growth: f64,
    pub outer_boundary: usize,
    /// |∂^out_m(E_n)| / vol(Λ_n)
    pub boundary_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub rows: Vec<RegularityRow>,
    pub growth_strictly_decreasing: bool,
    pub boundary_strictly_decreasing: bool,
}

fn strictly_decreasing(v: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = v.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// Evaluates the growth and outer-boundary sequences of a lattice family on
/// the sampled indices. Entries are `(n, basis, m_n)`.
pub fn check_regularity(family: &[(usize, LatticeBasis, usize)]) -> Result<RegularityReport> {
    let mut rows = Vec::with_capacity(family.len());
    for (n, basis, m) in family {
        let vol = basis.volume();
        let outer = match basis.diagonal() {
            Some(diag) => {
                let grown: u64 = diag.iter().map(|&k| k as u64 + 2 * *m as u64).product();
                (grown - vol) as usize
            }
            None => outer_boundary(&basis.fundamental_domain(DEFAULT_POINT_BUDGET)?, *m).len(),
        };
        rows.push(RegularityRow {
            n: *n,
            m: *m,
            volume: vol,
            growth: (vol as f64).ln() / *n as f64,
            outer_boundary: outer,
            boundary_ratio: outer as f64 / vol as f64,
        });
    }
    Ok(RegularityReport {
        growth_strictly_decreasing: strictly_decreasing(rows.iter().map(|r| r.growth)),
        boundary_strictly_decreasing: strictly_decreasing(rows.iter().map(|r| r.boundary_ratio)),
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivedProperties {
    /// |∂^in_m(E)|
    pub inner_boundary: usize,
    /// |∂^out_m(E)|
    pub outer_boundary: usize,
    pub p3: bool,
    /// Smallest norm of a nonzero lattice vector, when it is at most 2n.
    pub close_lattice_vector: Option<u64>,
    pub p4: bool,
    pub max_preimage: usize,
    pub preimage_bound: usize,
    pub p5: bool,
    pub p6_violations: usize,
    pub p6: bool,
}

impl DerivedProperties {
    pub fn all_pass(&self) -> bool {
        self.p3 && self.p4 && self.p5 && self.p6
    }
}

/// Per-instance verdicts for the inner-boundary inequality, lattice-point
/// separation, bounded preimages of η and local injectivity of η on cubes.
pub fn check_derived_properties(ctx: &LatticeContext) -> DerivedProperties {
    let dim = ctx.dim();
    let n = ctx.n();
    let inner = inner_boundary(ctx.e_set(), ctx.m()).len();
    let outer = outer_boundary(ctx.e_set(), ctx.m()).len();

    let probe = BoxRegion::new(Point::splat(dim, -2 * n as i64), vec![4 * n + 1; dim]);
    let close = probe
        .points()
        .filter(|v| v.norm() > 0 && ctx.basis().contains(v))
        .map(|v| v.norm())
        .min();

    let mut preimages = vec![0usize; ctx.e_set().len()];
    for &e in ctx.eta_table() {
        preimages[e] += 1;
    }
    let max_preimage = preimages.iter().copied().max().unwrap_or(0);
    let preimage_bound = 3usize.pow(dim as u32);

    let cube: Vec<Point> = BoxRegion::cube(dim, n).points().collect();
    let volume = cube.len();
    let p6_violations = hypercubes_in(ctx.d_set(), n)
        .iter()
        .filter(|a| {
            let mut img: Vec<usize> = cube
                .iter()
                .map(|o| ctx.eta_index(ctx.d_set().index_of(&(*a + o)).expect("cube inside D")))
                .collect();
            img.sort_unstable();
            img.dedup();
            img.len() != volume
        })
        .count();

    DerivedProperties {
        inner_boundary: inner,
        outer_boundary: outer,
        p3: inner <= outer,
        close_lattice_vector: close,
        p4: close.is_none(),
        max_preimage,
        preimage_bound,
        p5: max_preimage <= preimage_bound,
        p6_violations,
        p6: p6_violations == 0,
    }
}
