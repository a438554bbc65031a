//! Embedding a subshift with periodic markers into a random SFT: the margin
//! set D′, a common-margin family G′ ⊆ G_n(ℱ), the injection γ and the map ψ
//! realized on finite windows.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{inner_boundary, BoxRegion, Point, Shape};
use crate::gn::GnContext;
use crate::numeric::{pow_biguint, purpose, stream_rng};
use crate::pattern::{Configuration, PartialConfiguration};
use crate::random_sft::ForbiddenSet;

/// Marker symbol of the demo shift; `a` and `b` are 1 and 2.
pub const MARK: u8 = 0;

/// The marked full shift: M on exactly one coset of kℤ^d, a/b elsewhere.
/// β reads the offset of the M-grid. It has periodic points, which is
/// harmless for exercising the construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkedSubshift {
    pub dim: usize,
    pub k: usize,
}

impl MarkedSubshift {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 || k == 0 {
            return Err(Error::InvalidArgument("dimension and period must be positive".into()));
        }
        Ok(MarkedSubshift { dim, k })
    }

    pub fn symbols(&self) -> [&'static str; 3] {
        ["M", "a", "b"]
    }

    pub fn domain(&self) -> BoxRegion {
        BoxRegion::cube(self.dim, self.k)
    }

    /// |L_E(X)| = k^d · 2^{k^d − 1}.
    pub fn language_size(&self) -> num_bigint::BigUint {
        let cells = self.k.pow(self.dim as u32) as u64;
        num_bigint::BigUint::from(cells) * pow_biguint(2, cells - 1)
    }

    /// L_E(X) in lexicographic order.
    pub fn language(&self, budget: u64) -> Result<Vec<Vec<u8>>> {
        let cells = self.k.pow(self.dim as u32);
        let size = self.language_size();
        if size > num_bigint::BigUint::from(budget) {
            return Err(Error::budget("|L_E(X)|", size, budget));
        }
        let fills = 1u64 << (cells - 1);
        let mut out: Vec<Vec<u8>> = (0..cells)
            .flat_map(|mark| {
                (0..fills).map(move |f| {
                    let mut bit = 0;
                    (0..cells)
                        .map(|c| {
                            if c == mark {
                                MARK
                            } else {
                                let s = 1 + (f >> bit & 1) as u8;
                                bit += 1;
                                s
                            }
                        })
                        .collect()
                })
            })
            .collect();
        out.sort();
        Ok(out)
    }

    /// β(x) as the M-grid offset in [0, k)^d; errors if `x` is not a
    /// window of a point of X.
    pub fn beta(&self, x: &Configuration) -> Result<Point> {
        let k = self.k as i64;
        let mut offset: Option<Point> = None;
        for (i, p) in x.region.points().enumerate() {
            if x.cells[i] == MARK {
                let r = Point::new(p.coords().iter().map(|c| c.rem_euclid(k)).collect());
                match &offset {
                    None => offset = Some(r),
                    Some(o) if *o != r => {
                        return Err(Error::Domain(format!("marks at {p:?} off the grid {o:?} + kZ^d")))
                    }
                    _ => {}
                }
            } else if x.cells[i] > 2 {
                return Err(Error::Domain(format!("symbol {} outside {{M,a,b}}", x.cells[i])));
            }
        }
        let offset = offset.ok_or_else(|| Error::Domain("window contains no mark".into()))?;
        for (i, p) in x.region.points().enumerate() {
            let on_grid = p.coords().iter().zip(offset.coords()).all(|(c, o)| (c - o).rem_euclid(k) == 0);
            if on_grid && x.cells[i] != MARK {
                return Err(Error::Domain(format!("grid cell {p:?} is not marked")));
            }
        }
        Ok(offset)
    }

    /// A random window of a point of X with M-grid offset `beta`.
    pub fn sample_window(&self, region: &BoxRegion, beta: &Point, rng: &mut impl Rng) -> Configuration {
        let k = self.k as i64;
        let cells = region
            .points()
            .map(|p| {
                let on_grid = p.coords().iter().zip(beta.coords()).all(|(c, o)| (c - o).rem_euclid(k) == 0);
                if on_grid {
                    MARK
                } else {
                    rng.gen_range(1..=2)
                }
            })
            .collect();
        Configuration::new(region.clone(), cells).expect("sizes agree")
    }
}

/// D′ = {q ∈ D : dist(q, ℤ^d ∖ D) ≤ 2n}.
#[derive(Clone, Debug)]
pub struct DPrime {
    pub shape: Shape,
    /// D indices of the points of D′
    pub d_indices: Vec<usize>,
    /// D′ ⊆ (D∖E) + {−n,0,n}^d
    pub containment: bool,
    /// |D′| ≤ 3^d|D∖E|
    pub size_bound: bool,
}

pub fn build_dprime(ctx: &GnContext) -> DPrime {
    let lat = ctx.lattice();
    let d = lat.d_set();
    let n = lat.n();
    let shape = inner_boundary(d, 2 * n);
    let d_indices: Vec<usize> = shape.points().iter().map(|q| d.index_of(q).expect("D' ⊆ D")).collect();
    let dim = lat.dim();
    let rest: Vec<&Point> = d.points().iter().filter(|p| !lat.e_set().contains(p)).collect();
    let steps: Vec<Point> = BoxRegion::new(Point::splat(dim, -1), vec![3; dim])
        .points()
        .map(|s| Point::new(s.coords().iter().map(|c| c * n as i64).collect()))
        .collect();
    let containment = shape
        .points()
        .iter()
        .all(|q| steps.iter().any(|s| rest.iter().any(|r| &(*r + s) == q)));
    let size_bound = shape.len() <= 3usize.pow(dim as u32) * rest.len();
    DPrime {
        shape,
        d_indices,
        containment,
        size_bound,
    }
}

/// A subfamily of G_n(ℱ) whose lifts agree on D′.
#[derive(Clone, Debug, Serialize)]
pub struct GPrimeFamily {
    pub mode: String,
    /// E-words in lexicographic order
    pub members: Vec<Vec<u8>>,
    /// common symbol on each E cell η(D′), as (E index, symbol)
    pub common: Vec<(usize, u8)>,
    /// |G_n(ℱ)| when enumerated
    pub g_n_f: Option<u64>,
    pub classes: Option<usize>,
    /// largest class · |𝒜|^{|D′|} ≥ |G_n(ℱ)|
    pub pigeonhole: Option<bool>,
    /// false for sampled seeds: the largest class found is not certified
    pub certified: bool,
    pub empty: bool,
}

fn in_gn_f(ctx: &GnContext, w: &[u8], forbidden: &ForbiddenSet) -> bool {
    ctx.member(w)
        .is_some_and(|m| m.anchor_windows.iter().all(|&x| !forbidden.contains(x)))
}

/// E cells determined by D′ (its η-image), sorted.
fn dprime_cells(ctx: &GnContext, dp: &DPrime) -> Vec<usize> {
    let mut cells: Vec<usize> = dp.d_indices.iter().map(|&i| ctx.lattice().eta_index(i)).collect();
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Partitions G_n(ℱ) by D′-restriction and keeps the largest class
/// (ties go to the lexicographically smallest margin pattern).
pub fn select_gprime(ctx: &GnContext, dp: &DPrime, forbidden: &ForbiddenSet) -> Result<GPrimeFamily> {
    let cells = dprime_cells(ctx, dp);
    let members = ctx.enumerate()?;
    let mut classes: BTreeMap<Vec<u8>, Vec<Vec<u8>>> = BTreeMap::new();
    let mut g_n_f = 0u64;
    for m in members {
        if m.anchor_windows.iter().any(|&x| forbidden.contains(x)) {
            continue;
        }
        g_n_f += 1;
        let key: Vec<u8> = cells.iter().map(|&c| m.word[c]).collect();
        classes.entry(key).or_default().push(m.word);
    }
    let class_count = classes.len();
    let best = classes
        .into_iter()
        .fold(None::<(Vec<u8>, Vec<Vec<u8>>)>, |acc, (k, v)| match acc {
            Some((bk, bv)) if bv.len() >= v.len() => Some((bk, bv)),
            _ => Some((k, v)),
        });
    let (key, mut words) = best.unwrap_or_default();
    words.sort();
    let big = pow_biguint(ctx.alphabet() as u64, dp.shape.len() as u64) * num_bigint::BigUint::from(words.len());
    Ok(GPrimeFamily {
        mode: "exhaustive".into(),
        empty: words.is_empty(),
        common: if words.is_empty() { Vec::new() } else { cells.iter().copied().zip(key).collect() },
        members: words,
        g_n_f: Some(g_n_f),
        classes: Some(class_count),
        pigeonhole: Some(big >= num_bigint::BigUint::from(g_n_f)),
        certified: true,
    })
}

/// For |𝒜|^{|E|} beyond enumeration: draw `seeds` random members of
/// G_n(ℱ), enumerate each one's D′ class over the free cells, keep the
/// largest.
pub fn select_gprime_sampled(
    ctx: &GnContext,
    dp: &DPrime,
    forbidden: &ForbiddenSet,
    seeds: u64,
    seed: u64,
    budget: u64,
) -> Result<GPrimeFamily> {
    let cells = dprime_cells(ctx, dp);
    let free: Vec<usize> = (0..ctx.e_len()).filter(|c| cells.binary_search(c).is_err()).collect();
    let q = ctx.alphabet() as u64;
    let completions = q
        .checked_pow(free.len() as u32)
        .filter(|&c| c <= budget)
        .ok_or_else(|| Error::budget("class completions |A|^free", format!("{q}^{}", free.len()), budget))?;
    const ATTEMPTS: u64 = 100_000;
    let mut best: Option<(Vec<u8>, Vec<Vec<u8>>)> = None;
    for s in 0..seeds {
        let mut rng = stream_rng(seed, purpose::EMBED_INPUT, 1 << 40 | s);
        let found = (0..ATTEMPTS).find_map(|_| {
            let w: Vec<u8> = (0..ctx.e_len()).map(|_| rng.gen_range(0..q) as u8).collect();
            in_gn_f(ctx, &w, forbidden).then_some(w)
        });
        let Some(w) = found else { continue };
        let key: Vec<u8> = cells.iter().map(|&c| w[c]).collect();
        if best.as_ref().is_some_and(|(k, _)| *k == key) {
            continue;
        }
        let mut class: Vec<Vec<u8>> = (0..completions)
            .into_par_iter()
            .filter_map(|idx| {
                let mut x = w.clone();
                let mut r = idx;
                for &c in &free {
                    x[c] = (r % q) as u8;
                    r /= q;
                }
                in_gn_f(ctx, &x, forbidden).then_some(x)
            })
            .collect();
        class.sort();
        let better = match &best {
            None => true,
            Some((bk, bv)) => class.len() > bv.len() || (class.len() == bv.len() && key < *bk),
        };
        if better {
            best = Some((key, class));
        }
    }
    let (key, words) = best.unwrap_or_default();
    Ok(GPrimeFamily {
        mode: "sampled-seed".into(),
        empty: words.is_empty(),
        common: if words.is_empty() { Vec::new() } else { cells.iter().copied().zip(key).collect() },
        members: words,
        g_n_f: None,
        classes: None,
        pigeonhole: None,
        certified: false,
    })
}

/// γ : L_E(X) → G′ (both in lexicographic order) with the data ψ needs.
#[derive(Clone, Debug)]
pub struct EmbeddingMap {
    pub x: MarkedSubshift,
    ctx: GnContext,
    pub gprime: GPrimeFamily,
    pub dprime: DPrime,
    language: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// lifts of G′ members to D
    lifts: Vec<Vec<u8>>,
}

pub fn build_embedding(x: &MarkedSubshift, ctx: &GnContext, gprime: GPrimeFamily) -> Result<EmbeddingMap> {
    let lat = ctx.lattice();
    let cube = crate::lattice::LatticeBasis::cube(x.dim, x.k as i64)?;
    if lat.basis() != &cube {
        return Err(Error::InvalidArgument("the G_n lattice must be the marker lattice kZ^d".into()));
    }
    let needed = x.language_size();
    let available = num_bigint::BigUint::from(gprime.members.len());
    if available < needed {
        return Err(Error::Capacity {
            needed: needed.to_string(),
            available: available.to_string(),
        });
    }
    let language = x.language(1 << 24)?;
    let index = language.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let lifts = gprime
        .members
        .iter()
        .take(language.len())
        .map(|w| ctx.lift(w))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingMap {
        x: x.clone(),
        ctx: ctx.clone(),
        dprime: build_dprime(ctx),
        gprime,
        language,
        index,
        lifts,
    })
}

/// ψ on a finite window.
#[derive(Clone, Debug)]
pub struct PsiOutput {
    pub output: PartialConfiguration,
    /// v + β for every translate v + β + D inside the window
    pub anchors: Vec<Point>,
    pub uncovered: usize,
    /// cells written by two translates (all found consistent)
    pub overlap_cells: usize,
}

impl EmbeddingMap {
    pub fn ctx(&self) -> &GnContext {
        &self.ctx
    }

    pub fn language(&self) -> &[Vec<u8>] {
        &self.language
    }

    /// γ(ℓ) as an E-word.
    pub fn gamma(&self, pattern: &[u8]) -> Option<&[u8]> {
        self.index.get(pattern).map(|&i| self.gprime.members[i].as_slice())
    }

    /// (ℓ, γ(ℓ)) rows.
    pub fn gamma_table(&self) -> Vec<(Vec<u8>, Vec<u8>)> {
        self.language
            .iter()
            .zip(&self.gprime.members)
            .map(|(a, b)| (a.clone(), b.clone()))
            .collect()
    }

    /// Anchors v + β (v ∈ kℤ^d) with v + β + D ⊆ W.
    fn anchors(&self, w: &BoxRegion, beta: &Point) -> Vec<Point> {
        let d = self.ctx.lattice().d_set();
        let lo = d.min_point().expect("D nonempty");
        let hi = d.bounding_box().expect("D nonempty").max_corner();
        let k = self.x.k as i64;
        let ranges: Vec<(i64, i64)> = (0..self.x.dim)
            .map(|i| {
                // smallest/largest a ≡ β (mod k) with a + lo ≥ W.lo and a + hi ≤ W.hi
                let min_a = w.origin.coords()[i] - lo.coords()[i];
                let max_a = w.origin.coords()[i] + w.size[i] as i64 - 1 - hi.coords()[i];
                let b = beta.coords()[i];
                let first = min_a + (b - min_a).rem_euclid(k);
                (first, max_a)
            })
            .collect();
        let counts: Vec<usize> = ranges
            .iter()
            .map(|&(f, l)| if l < f { 0 } else { ((l - f) / k + 1) as usize })
            .collect();
        if counts.contains(&0) {
            return Vec::new();
        }
        BoxRegion::new(Point::origin(self.x.dim), counts)
            .points()
            .map(|u| Point::new(u.coords().iter().zip(&ranges).map(|(c, r)| r.0 + c * k).collect()))
            .collect()
    }

    /// Writes γ(x|_{a+E}) on a + D for every anchor a; any disagreement on an
    /// overlap is a hard error naming the site.
    pub fn psi_window(&self, x: &Configuration) -> Result<PsiOutput> {
        let beta = self.x.beta(x)?;
        let anchors = self.anchors(&x.region, &beta);
        let lat = self.ctx.lattice();
        let e = lat.e_set();
        let d = lat.d_set();
        let mut out = PartialConfiguration::empty(x.region.clone());
        let mut overlap_cells = 0;
        for a in &anchors {
            let pattern: Vec<u8> = e
                .points()
                .iter()
                .map(|p| x.get(&(a + p)).expect("a + E inside the window"))
                .collect();
            let &idx = self
                .index
                .get(&pattern)
                .ok_or_else(|| Error::Domain(format!("pattern at {a:?} is not in L_E(X)")))?;
            let lift = &self.lifts[idx];
            for (j, q) in d.points().iter().enumerate() {
                let site = a + q;
                let cell = x.region.index_of(&site).expect("a + D inside the window");
                match out.cells[cell] {
                    None => out.cells[cell] = Some(lift[j]),
                    Some(s) if s == lift[j] => overlap_cells += 1,
                    Some(s) => {
                        return Err(Error::InconsistentOverlap {
                            site: site.into_coords(),
                            first: s,
                            second: lift[j],
                        })
                    }
                }
            }
        }
        let uncovered = out.unassigned();
        Ok(PsiOutput {
            output: out,
            anchors,
            uncovered,
            overlap_cells,
        })
    }

    /// Exact structural form of well-definedness: for every nonzero v ∈ Λ
    /// with D ∩ (D + v) ≠ ∅, each shared cell is seen through D′ by one of
    /// the two translates and its residue carries the common margin. Returns (offsets, cells, violations).
    pub fn overlap_structure(&self) -> (usize, usize, Vec<Point>) {
        let lat = self.ctx.lattice();
        let d = lat.d_set();
        let common: HashMap<usize, u8> = self.gprime.common.iter().copied().collect();
        let in_dprime = |q: &Point| self.dprime.shape.contains(q);
        let k = self.x.k as i64;
        let span = d.bounding_box().expect("D nonempty").size.iter().copied().max().unwrap_or(0) as i64 / k + 1;
        let mut offsets = 0;
        let mut cells = 0;
        let mut bad = Vec::new();
        for u in BoxRegion::new(Point::splat(self.x.dim, -span), vec![(2 * span + 1) as usize; self.x.dim]).points() {
            if u.norm() == 0 {
                continue;
            }
            let v = Point::new(u.coords().iter().map(|c| c * k).collect());
            let shared: Vec<&Point> = d.points().iter().filter(|q| d.contains(&(*q - &v))).collect();
            if shared.is_empty() {
                continue;
            }
            offsets += 1;
            for q in shared {
                cells += 1;
                let back = q - &v;
                let eq = lat.eta_index(d.index_of(q).expect("in D"));
                let eb = lat.eta_index(d.index_of(&back).expect("in D"));
                let ok = (in_dprime(q) || in_dprime(&back)) && eq == eb && common.contains_key(&eq);
                if !ok {
                    bad.push(q.clone());
                }
            }
        }
        (offsets, cells, bad)
    }

    pub fn verify(&self, forbidden: &ForbiddenSet, pairs: u64, seed: u64) -> Result<EmbeddingVerdicts> {
        verify_embedding(self, forbidden, pairs, seed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub checked: u64,
    pub witness: Option<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            pass: true,
            checked: 0,
            witness: None,
        }
    }

    fn fail(&mut self, witness: String) {
        if self.pass {
            self.witness = Some(witness);
        }
        self.pass = false;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingVerdicts {
    pub window: Vec<usize>,
    pub well_defined: Verdict,
    pub overlap_offsets: usize,
    pub overlap_cells: usize,
    pub image_valid: Verdict,
    pub injective_same_beta: Verdict,
    pub injective_different_beta: Verdict,
    /// case-2 witnesses found inside both translates' inner 1-boundary
    pub boundary_witnesses: u64,
    pub uncovered_cells: usize,
    #[serde(skip)]
    pub samples: Vec<PairSample>,
}

impl EmbeddingVerdicts {
    pub fn all_pass(&self) -> bool {
        self.well_defined.pass && self.image_valid.pass && self.injective_same_beta.pass && self.injective_different_beta.pass
    }
}

/// One sampled input/output pair, for the CSV dump.
#[derive(Clone, Debug, Serialize)]
pub struct PairSample {
    pub sample: u64,
    pub case: String,
    pub input_1: String,
    pub input_2: String,
    pub output_1: String,
    pub output_2: String,
}

fn render_in(x: &Configuration) -> String {
    x.cells.iter().map(|&c| ["M", "a", "b"][c as usize]).collect()
}

fn render_out(x: &PartialConfiguration) -> String {
    x.cells
        .iter()
        .map(|c| match c {
            None => ".".to_string(),
            Some(s) if *s < 10 => s.to_string(),
            Some(s) => format!("[{s}]"),
        })
        .collect()
}

struct PairResult {
    same_beta: bool,
    image_bad: Option<String>,
    overlap_bad: Option<String>,
    differ: bool,
    boundary_witness: bool,
    uncovered: usize,
    sample: PairSample,
}

/// Checks the three obligations on a 3k-window: overlaps (exactly, plus on
/// every sampled ψ evaluation), F_n-windows of outputs against ℱ, and
/// injectivity on `pairs` sampled pairs for each β-case.
pub fn verify_embedding(emb: &EmbeddingMap, forbidden: &ForbiddenSet, pairs: u64, seed: u64) -> Result<EmbeddingVerdicts> {
    let dim = emb.x.dim;
    let k = emb.x.k;
    let window = BoxRegion::cube(dim, 3 * k);
    let n = emb.ctx.lattice().n();
    let codec = emb.ctx.codec();
    let cube: Vec<Point> = codec.cube().points().collect();
    let e = emb.ctx.lattice().e_set();
    let d = emb.ctx.lattice().d_set();
    let inner1 = inner_boundary(d, 1);

    let (overlap_offsets, overlap_cells, bad) = emb.overlap_structure();
    let mut well_defined = Verdict::new();
    well_defined.checked += overlap_cells as u64;
    if let Some(q) = bad.first() {
        well_defined.fail(format!("shared cell {q:?} outside the common margin"));
    }

    let window_rank = |out: &PartialConfiguration, a: &Point| -> Option<u64> {
        let mut rank = 0u64;
        for o in &cube {
            let s = out.get(&(a + o))?;
            rank = rank * codec.alphabet() as u64 + s as u64;
        }
        Some(rank)
    };
    let anchors_all: Vec<Point> = BoxRegion::cube(dim, 3 * k - n + 1).points().collect();

    let run_pair = |i: u64| -> Result<PairResult> {
        let mut rng = stream_rng(seed, purpose::EMBED_INPUT, i);
        let same_beta = i.is_multiple_of(2);
        let b1 = Point::new((0..dim).map(|_| rng.gen_range(0..k as i64)).collect());
        let b2 = if same_beta {
            b1.clone()
        } else {
            loop {
                let b = Point::new((0..dim).map(|_| rng.gen_range(0..k as i64)).collect());
                if b != b1 {
                    break b;
                }
            }
        };
        let x1 = emb.x.sample_window(&window, &b1, &mut rng);
        let read = |x: &Configuration, b: &Point| -> Vec<u8> {
            emb.anchors(&window, b)
                .iter()
                .flat_map(|a| e.points().iter().map(move |p| a + p))
                .map(|c| x.get(&c).expect("inside"))
                .collect()
        };
        // same-β inputs are redrawn until they differ where ψ reads them
        let mut x2 = x1.clone();
        for attempt in 0..64 {
            x2 = if same_beta && (i.is_multiple_of(4) || attempt > 0 && attempt % 2 == 0) {
                // flip one unmarked cell of a covered translate
                let anchors = emb.anchors(&window, &b1);
                let mut x2 = x1.clone();
                if !anchors.is_empty() {
                    let a = &anchors[rng.gen_range(0..anchors.len())];
                    let p = &e.points()[rng.gen_range(1..e.len())];
                    let cell = window.index_of(&(a + p)).expect("inside");
                    x2.cells[cell] = 3 - x2.cells[cell];
                }
                x2
            } else {
                emb.x.sample_window(&window, &b2, &mut rng)
            };
            if !same_beta || read(&x1, &b1) != read(&x2, &b1) {
                break;
            }
        }
        let inputs_equal = same_beta && read(&x1, &b1) == read(&x2, &b1);
        let mut overlap_bad = None;
        let mut outs = Vec::new();
        for x in [&x1, &x2] {
            match emb.psi_window(x) {
                Ok(o) => outs.push(o),
                Err(Error::InconsistentOverlap { site, first, second }) => {
                    overlap_bad = Some(format!("sample {i}: site {site:?} gets {first} and {second}"));
                }
                Err(e) => return Err(e),
            }
        }
        if outs.len() < 2 {
            return Ok(PairResult {
                same_beta,
                image_bad: None,
                overlap_bad,
                differ: true,
                boundary_witness: false,
                uncovered: 0,
                sample: PairSample {
                    sample: i,
                    case: if same_beta { "same-beta" } else { "different-beta" }.into(),
                    input_1: render_in(&x1),
                    input_2: render_in(&x2),
                    output_1: String::new(),
                    output_2: String::new(),
                },
            });
        }
        let mut image_bad = None;
        for o in &outs {
            for a in &anchors_all {
                if let Some(r) = window_rank(&o.output, a) {
                    if forbidden.contains(r) {
                        image_bad.get_or_insert_with(|| format!("sample {i}: forbidden window at {a:?}"));
                    }
                }
            }
        }
        // witness: a window present in both outputs that differs
        let mut differ = false;
        let mut boundary_witness = false;
        for a in &anchors_all {
            if let (Some(r1), Some(r2)) = (window_rank(&outs[0].output, a), window_rank(&outs[1].output, a)) {
                if r1 != r2 {
                    differ = true;
                    let near = |anchors: &[Point]| anchors.iter().any(|t| inner1.contains(&(a - t)));
                    boundary_witness = near(&outs[0].anchors) && near(&outs[1].anchors);
                    if boundary_witness || same_beta {
                        break;
                    }
                }
            }
        }
        if inputs_equal {
            differ = outs[0].output == outs[1].output;
        }
        Ok(PairResult {
            same_beta,
            image_bad,
            overlap_bad,
            differ,
            boundary_witness,
            uncovered: outs[0].uncovered,
            sample: PairSample {
                sample: i,
                case: if same_beta { "same-beta" } else { "different-beta" }.into(),
                input_1: render_in(&x1),
                input_2: render_in(&x2),
                output_1: render_out(&outs[0].output),
                output_2: render_out(&outs[1].output),
            },
        })
    };

    let results = (0..2 * pairs).into_par_iter().map(run_pair).collect::<Result<Vec<_>>>()?;

    let mut image_valid = Verdict::new();
    let mut same = Verdict::new();
    let mut diff = Verdict::new();
    let mut boundary_witnesses = 0;
    let mut uncovered = 0;
    let mut samples = Vec::new();
    for r in results {
        well_defined.checked += 1;
        if let Some(w) = r.overlap_bad {
            well_defined.fail(w);
        }
        image_valid.checked += 2;
        if let Some(w) = r.image_bad {
            image_valid.fail(w);
        }
        let v = if r.same_beta { &mut same } else { &mut diff };
        v.checked += 1;
        if !r.differ {
            v.fail(format!("sample {}: distinct inputs with equal outputs", r.sample.sample));
        }
        boundary_witnesses += r.boundary_witness as u64;
        uncovered = uncovered.max(r.uncovered);
        samples.push(r.sample);
    }
    Ok(EmbeddingVerdicts {
        window: window.size.clone(),
        well_defined,
        overlap_offsets,
        overlap_cells,
        image_valid,
        injective_same_beta: same,
        injective_different_beta: diff,
        boundary_witnesses,
        uncovered_cells: uncovered,
        samples,
    })
}
