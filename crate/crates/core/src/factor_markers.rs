//! Marker sets for factoring random SFTs onto a full shift: truncation of
//! G_n(ℱ) to F_k, the common inner-boundary class, and checkers for the
//! three marker conditions.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{inner_boundary, BoxRegion, Point, Shape};
use crate::gn::GnContext;
use crate::lattice::{LatticeBasis, LatticeContext};
use crate::numeric::{pow_biguint, purpose, stream_rng};
use crate::pattern::{PartialConfiguration, WindowCodec};
use crate::random_sft::ForbiddenSet;

/// g, n, m = n + (2d+3)g and the box side k.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorParams {
    pub dim: usize,
    pub g: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl FactorParams {
    /// `k = None` picks the smallest k with k ≥ 2m+1 and k − m > 2n.
    pub fn new(dim: usize, g: usize, n: usize, k: Option<usize>) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::InvalidArgument("dimension and n must be positive".into()));
        }
        let m = n + (2 * dim + 3) * g;
        let k = k.unwrap_or_else(|| (2 * m + 1).max(m + 2 * n + 1));
        if k <= 2 * m {
            return Err(Error::InvalidArgument(format!("k = {k} must exceed 2m = {}", 2 * m)));
        }
        Ok(FactorParams { dim, g, n, m, k })
    }

    /// p(k) = d((k+m+(2d+3)g)^d − (k+m−(2d−1)g)^d).
    pub fn p_of_k(&self) -> BigUint {
        let d = self.dim as u64;
        let hi = (self.k + self.m + (2 * self.dim + 3) * self.g) as u64;
        let lo = (self.k + self.m).saturating_sub((2 * self.dim).saturating_sub(1) * self.g) as u64;
        let hi = BigUint::from(hi).pow(self.dim as u32);
        let lo = BigUint::from(lo).pow(self.dim as u32);
        BigUint::from(d) * (hi - lo)
    }

    /// Spacing of the marker lattice.
    pub fn spacing(&self) -> usize {
        self.k - self.m
    }
}

/// The full shift on 𝒜_Y with a nominal extension radius g.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TargetModel {
    pub alphabet: usize,
    pub g: usize,
}

impl TargetModel {
    /// |L_{F_s}(Y)| = |𝒜_Y|^{s^d}.
    pub fn language_count(&self, side: usize, dim: usize) -> BigUint {
        pow_biguint(self.alphabet as u64, side.pow(dim as u32) as u64)
    }
}

/// The largest ∂^in_m(F_k)-agreement class S of truncations of G_n(ℱ);
/// each member is its own class S_i.
#[derive(Clone, Debug, Serialize)]
pub struct MarkerSet {
    pub params: FactorParams,
    pub alphabet: usize,
    /// F_k patterns in box order, sorted
    pub members: Vec<Vec<u8>>,
    /// (F_k cell index, symbol) on ∂^in_m(F_k)
    pub boundary: Vec<(usize, u8)>,
    pub g_n_f: u64,
    /// distinct truncations
    pub g_prime: u64,
    pub truncation_injective: bool,
    /// |G′| ≥ |𝒜|^{k^d − (k+m)^d}|G_n(ℱ)|
    pub truncation_bound: bool,
    /// |G″| ≥ |𝒜|^{−3dkm}|G_n(ℱ)|
    pub class_bound: bool,
    /// |G″| ≥ |𝒜|^{−|∂^in_m(F_k)|}|G′|
    pub pigeonhole: bool,
    /// F_n ⊆ ∂^in_m(F_k)
    pub cube_in_boundary: bool,
    /// windows at p, q equal iff p − q ∈ (k−m)ℤ^d, on every member
    pub window_law: bool,
    pub empty: bool,
}

impl MarkerSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn region(&self) -> BoxRegion {
        BoxRegion::cube(self.params.dim, self.params.k)
    }
}

/// G_n context on Λ = (k−m)ℤ^d with reach m.
pub fn marker_context(params: &FactorParams, alphabet: usize) -> Result<GnContext> {
    let basis = LatticeBasis::cube(params.dim, params.spacing() as i64)?;
    GnContext::new(LatticeContext::build(basis, params.n, params.m)?, alphabet)
}

pub fn build_marker_set(params: &FactorParams, alphabet: usize, forbidden: &ForbiddenSet) -> Result<MarkerSet> {
    let ctx = marker_context(params, alphabet)?;
    let lat = ctx.lattice();
    let fk = BoxRegion::cube(params.dim, params.k);
    let d_idx: Vec<usize> = fk
        .points()
        .map(|p| lat.d_set().index_of(&p).ok_or_else(|| Error::Domain(format!("F_k cell {p:?} outside D"))))
        .collect::<Result<_>>()?;

    let members = ctx.enumerate()?;
    let mut truncations: Vec<Vec<u8>> = Vec::new();
    for m in &members {
        if m.anchor_windows.iter().any(|&w| forbidden.contains(w)) {
            continue;
        }
        let lift = ctx.lift(&m.word)?;
        truncations.push(d_idx.iter().map(|&i| lift[i]).collect());
    }
    let g_n_f = truncations.len() as u64;
    truncations.sort();
    truncations.dedup();
    let g_prime = truncations.len() as u64;

    let fk_shape = Shape::from_box(fk.clone());
    let boundary_shape = inner_boundary(&fk_shape, params.m);
    let bcells: Vec<usize> = boundary_shape.points().iter().map(|p| fk.index_of(p).expect("inside")).collect();
    let mut classes: BTreeMap<Vec<u8>, Vec<Vec<u8>>> = BTreeMap::new();
    for t in truncations {
        let key: Vec<u8> = bcells.iter().map(|&c| t[c]).collect();
        classes.entry(key).or_default().push(t);
    }
    let best = classes
        .into_iter()
        .fold(None::<(Vec<u8>, Vec<Vec<u8>>)>, |acc, (k, v)| match acc {
            Some((bk, bv)) if bv.len() >= v.len() => Some((bk, bv)),
            _ => Some((k, v)),
        });
    let (key, chosen) = best.unwrap_or_default();

    let q = alphabet as u64;
    let d = params.dim as u32;
    let kd = (params.k as u64).pow(d);
    let kmd = ((params.k + params.m) as u64).pow(d);
    let size = BigUint::from(chosen.len());
    let gnf = BigUint::from(g_n_f);
    let cube_in_boundary = BoxRegion::cube(params.dim, params.n).points().all(|p| boundary_shape.contains(&p));
    let window_law = chosen.iter().all(|w| window_law_holds(params, alphabet, w));

    Ok(MarkerSet {
        params: params.clone(),
        alphabet,
        boundary: if chosen.is_empty() { Vec::new() } else { bcells.iter().copied().zip(key).collect() },
        empty: chosen.is_empty(),
        truncation_injective: g_prime == g_n_f,
        truncation_bound: BigUint::from(g_prime) * pow_biguint(q, kmd - kd) >= gnf,
        class_bound: &size * pow_biguint(q, 3 * params.dim as u64 * (params.k * params.m) as u64) >= gnf,
        pigeonhole: &size * pow_biguint(q, bcells.len() as u64) >= BigUint::from(g_prime),
        cube_in_boundary,
        window_law,
        members: chosen,
        g_n_f,
        g_prime,
    })
}

/// Distinct F_n-windows inside F_k except at Λ-related anchors.
fn window_law_holds(params: &FactorParams, alphabet: usize, w: &[u8]) -> bool {
    let fk = BoxRegion::cube(params.dim, params.k);
    let codec = WindowCodec::new(params.dim, params.n, alphabet).expect("valid codec");
    let cube: Vec<Point> = codec.cube().points().collect();
    let anchors: Vec<Point> = BoxRegion::cube(params.dim, params.k - params.n + 1).points().collect();
    let ranks: Vec<u64> = anchors
        .iter()
        .map(|a| codec.encode(&cube.iter().map(|o| w[fk.index_of(&(a + o)).expect("inside")]).collect::<Vec<_>>()))
        .collect();
    let s = params.spacing() as i64;
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            let lattice = (&anchors[i] - &anchors[j]).coords().iter().all(|c| c.rem_euclid(s) == 0);
            if (ranks[i] == ranks[j]) != lattice {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionI {
    /// M = |S|
    pub m: String,
    pub threshold: String,
    /// (k−m−g)^d + p(k)
    pub exponent: String,
    pub pass: bool,
}

/// M > |𝒜_Y|^{(k−m−g)^d + p(k)} for the full shift, singleton classes.
pub fn check_condition_i(s: &MarkerSet, y: &TargetModel) -> ConditionI {
    let p = &s.params;
    let side = (p.k - p.m).saturating_sub(y.g) as u64;
    let exponent = BigUint::from(side.pow(p.dim as u32)) + p.p_of_k();
    let exp_u64: u64 = exponent.to_u64_digits().first().copied().unwrap_or(0);
    let threshold = pow_biguint(y.alphabet as u64, exp_u64);
    let m = BigUint::from(s.size());
    ConditionI {
        pass: m > threshold,
        m: m.to_string(),
        threshold: threshold.to_string(),
        exponent: exponent.to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub pass: bool,
    pub checked: u64,
    pub witnesses: Vec<String>,
}

/// Places members at lattice cells `(k−m)u`, u ∈ `cells`, on their bounding
/// box; reports the first clashing site.
fn assemble(s: &MarkerSet, placed: &[(Point, usize)]) -> Result<PartialConfiguration> {
    let p = &s.params;
    let step = p.spacing() as i64;
    let fk = s.region();
    let dim = p.dim;
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for (u, _) in placed {
        for i in 0..dim {
            lo[i] = lo[i].min(u.coords()[i] * step);
            hi[i] = hi[i].max(u.coords()[i] * step + p.k as i64);
        }
    }
    let region = BoxRegion::new(Point::new(lo.clone()), (0..dim).map(|i| (hi[i] - lo[i]) as usize).collect());
    let mut out = PartialConfiguration::empty(region.clone());
    for (u, idx) in placed {
        let base = Point::new(u.coords().iter().map(|c| c * step).collect());
        for (j, c) in fk.points().enumerate() {
            let site = &base + &c;
            let cell = region.index_of(&site).expect("inside");
            let sym = s.members[*idx][j];
            match out.cells[cell] {
                None => out.cells[cell] = Some(sym),
                Some(t) if t == sym => {}
                Some(t) => {
                    return Err(Error::InconsistentOverlap {
                        site: site.into_coords(),
                        first: t,
                        second: sym,
                    })
                }
            }
        }
    }
    Ok(out)
}

fn forbidden_window(out: &PartialConfiguration, codec: &WindowCodec, forbidden: &ForbiddenSet) -> Option<Point> {
    let cube: Vec<Point> = codec.cube().points().collect();
    let q = codec.alphabet() as u64;
    out.region.points().find(|a| {
        let mut rank = 0u64;
        for o in &cube {
            match out.get(&(a + o)) {
                Some(s) => rank = rank * q + s as u64,
                None => return false,
            }
        }
        forbidden.contains(rank)
    })
}

/// Adjacent assemblies along every axis for all ordered member pairs, then
/// `probes` random assemblies on a 3^d block of lattice cells.
pub fn check_condition_ii(s: &MarkerSet, forbidden: &ForbiddenSet, probes: u64, seed: u64) -> Result<ConditionCheck> {
    if s.members.is_empty() {
        return Err(Error::Domain("marker set is empty".into()));
    }
    let p = &s.params;
    let codec = WindowCodec::new(p.dim, p.n, s.alphabet)?;
    let len = s.members.len();
    let check = |placed: Vec<(Point, usize)>| -> Option<String> {
        match assemble(s, &placed) {
            Err(Error::InconsistentOverlap { site, first, second }) => {
                Some(format!("seam clash at {site:?}: {first} vs {second} in {placed:?}"))
            }
            Err(e) => Some(e.to_string()),
            Ok(out) => forbidden_window(&out, &codec, forbidden)
                .map(|a| format!("forbidden window at {a:?} in {placed:?}")),
        }
    };
    let jobs: Vec<(usize, usize, usize)> = (0..p.dim)
        .flat_map(|axis| (0..len).flat_map(move |a| (0..len).map(move |b| (axis, a, b))))
        .collect();
    let mut witnesses: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(axis, a, b)| check(vec![(Point::origin(p.dim), a), (Point::axis(p.dim, axis, 1), b)]))
        .collect();
    let block: Vec<Point> = BoxRegion::cube(p.dim, 3).points().collect();
    let random: Vec<String> = (0..probes)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = stream_rng(seed, purpose::MARKER_PROBE, t);
            check(block.iter().map(|u| (u.clone(), rng.gen_range(0..len))).collect())
        })
        .collect();
    witnesses.extend(random);
    Ok(ConditionCheck {
        pass: witnesses.is_empty(),
        checked: jobs.len() as u64 + probes,
        witnesses: witnesses.into_iter().take(10).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionIII {
    /// offsets excluded as (k−m)u with ‖u‖∞ ≤ 1
    pub literal: ConditionCheck,
    /// offsets excluded as any v ∈ (k−m)ℤ^d
    pub coset: ConditionCheck,
    pub offsets: u64,
    pub pairs: u64,
}

/// Every placement of w₂ at 0 < ‖v‖∞ ≤ k−n against w₁ at 0 must clash,
/// except for the excluded lattice offsets.
pub fn check_condition_iii(s: &MarkerSet, max_pairs: u64, seed: u64) -> Result<ConditionIII> {
    if s.members.is_empty() {
        return Err(Error::Domain("marker set is empty".into()));
    }
    let p = &s.params;
    let len = s.members.len() as u64;
    let pairs: Vec<(usize, usize)> = if len * len <= max_pairs {
        (0..len as usize).flat_map(|a| (0..len as usize).map(move |b| (a, b))).collect()
    } else {
        let mut rng = stream_rng(seed, purpose::MARKER_PROBE, u64::MAX);
        (0..max_pairs)
            .map(|_| (rng.gen_range(0..len as usize), rng.gen_range(0..len as usize)))
            .collect()
    };
    let reach = (p.k - p.n) as i64;
    let step = p.spacing() as i64;
    let offsets: Vec<Point> = BoxRegion::new(Point::splat(p.dim, -reach), vec![2 * reach as usize + 1; p.dim])
        .points()
        .filter(|v| v.norm() > 0)
        .collect();
    let fk = s.region();
    let consistent = |a: usize, b: usize, v: &Point| -> bool {
        let (w1, w2) = (&s.members[a], &s.members[b]);
        fk.points().enumerate().all(|(j, c)| {
            let shifted = &c - v;
            match fk.index_of(&shifted) {
                Some(i) => w1[j] == w2[i],
                None => true,
            }
        })
    };
    let results: Vec<(bool, bool, Option<String>)> = offsets
        .par_iter()
        .flat_map_iter(|v| {
            let literal_excluded = v.coords().iter().all(|c| c % step == 0 && (c / step).abs() <= 1);
            let coset_excluded = v.coords().iter().all(|c| c % step == 0);
            pairs.iter().map(move |&(a, b)| {
                let bad = consistent(a, b, v);
                let witness = bad.then(|| format!("w1={a} w2={b} v={v:?}"));
                (bad && !literal_excluded, bad && !coset_excluded, witness)
            })
        })
        .collect();
    let collect = |sel: fn(&(bool, bool, Option<String>)) -> bool| -> ConditionCheck {
        let bad: Vec<String> = results
            .iter()
            .filter(|r| sel(r))
            .filter_map(|r| r.2.clone())
            .take(10)
            .collect();
        ConditionCheck {
            pass: bad.is_empty(),
            checked: results.len() as u64,
            witnesses: bad,
        }
    };
    Ok(ConditionIII {
        literal: collect(|r| r.0),
        coset: collect(|r| r.1),
        offsets: offsets.len() as u64,
        pairs: pairs.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_schedule() {
        let p = FactorParams::new(1, 1, 3, None).unwrap();
        assert_eq!((p.m, p.k), (8, 17));
        assert_eq!(p.p_of_k(), BigUint::from(6u32));
        assert!(FactorParams::new(1, 1, 3, Some(16)).is_err());
        let p2 = FactorParams::new(2, 0, 2, None).unwrap();
        assert_eq!((p2.m, p2.k), (2, 7));
        // d((k+m)^d − (k+m)^d) = 0 when g = 0
        assert_eq!(p2.p_of_k(), BigUint::from(0u32));
    }

    #[test]
    fn binary_desk_instance_is_empty() {
        // 9 distinct binary 3-windows cannot exist
        let p = FactorParams::new(1, 1, 3, None).unwrap();
        let codec = WindowCodec::new(1, 3, 2).unwrap();
        let s = build_marker_set(&p, 2, &ForbiddenSet::empty(&codec)).unwrap();
        assert!(s.empty);
        assert_eq!(s.g_n_f, 0);
        assert!(!check_condition_i(&s, &TargetModel { alphabet: 2, g: 1 }).pass);
        assert!(check_condition_ii(&s, &ForbiddenSet::empty(&codec), 1, 0).is_err());
        assert!(check_condition_iii(&s, 1, 0).is_err());
    }

    #[test]
    fn ternary_desk_instance() {
        let p = FactorParams::new(1, 1, 3, None).unwrap();
        let codec = WindowCodec::new(1, 3, 3).unwrap();
        let s = build_marker_set(&p, 3, &ForbiddenSet::empty(&codec)).unwrap();
        assert!(s.truncation_injective && s.truncation_bound && s.class_bound && s.pigeonhole);
        assert!(s.cube_in_boundary && s.window_law);
        // boundary covers all of F_17 but the middle cell
        assert_eq!(s.boundary.len(), 16);
        assert!(!s.empty && s.size() <= 3, "{} {} {}", s.size(), s.g_n_f, s.g_prime);

        let y = TargetModel { alphabet: 2, g: 1 };
        let ci = check_condition_i(&s, &y);
        assert_eq!(ci.threshold, "16384");
        assert_eq!(ci.exponent, "14");
        assert!(!ci.pass);

        let cii = check_condition_ii(&s, &ForbiddenSet::empty(&codec), 20, 1).unwrap();
        assert!(cii.pass, "{:?}", cii.witnesses);

        let ciii = check_condition_iii(&s, 1 << 20, 0).unwrap();
        assert!(ciii.literal.pass, "{:?}", ciii.literal.witnesses);
        assert!(ciii.coset.pass);
        assert_eq!(ciii.offsets, 28);
    }

    #[test]
    fn condition_i_edge_cases() {
        let p = FactorParams::new(1, 0, 1, Some(5)).unwrap();
        let mk = |n: usize| MarkerSet {
            params: p.clone(),
            alphabet: 2,
            members: vec![vec![0; 5]; n],
            boundary: Vec::new(),
            g_n_f: 0,
            g_prime: 0,
            truncation_injective: true,
            truncation_bound: true,
            class_bound: true,
            pigeonhole: true,
            cube_in_boundary: true,
            window_law: true,
            empty: n == 0,
        };
        let y1 = TargetModel { alphabet: 1, g: 0 };
        assert_eq!(check_condition_i(&mk(1), &y1).threshold, "1");
        assert!(!check_condition_i(&mk(1), &y1).pass);
        assert!(check_condition_i(&mk(2), &y1).pass);
        assert!(!check_condition_i(&mk(0), &TargetModel { alphabet: 2, g: 0 }).pass);
    }
}
