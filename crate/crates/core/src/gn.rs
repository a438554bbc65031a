//! Λ-periodic pattern families G_n⁰ ⊇ G_n on D, their cross repeats and
//! the pair counts V_{n,r,a} behind the variance of φ.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{hypercubes_in, BoxRegion, Point, Shape};
use crate::lattice::{check_derived_properties, DerivedProperties, LatticeContext};
use crate::numeric::{pow_biguint, purpose, stream_rng, wilson_interval, Z99};
use crate::pattern::{window_ranks, Pattern, WindowCodec};

/// Default cap on |𝒜|^{|E|} for brute-force enumeration.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;

#[derive(Clone, Debug)]
pub struct GnContext {
    lattice: LatticeContext,
    alphabet: usize,
    codec: WindowCodec,
    /// η(p + F_n) as E indices in cube order, for each p ∈ E.
    anchor_cells: Vec<Vec<usize>>,
    /// p + F_n as D indices, for each p ∈ E.
    anchor_d_cells: Vec<Vec<usize>>,
    /// Distinct η-images of every cube inside D. Equal to the set of
    /// anchor_cells when η(p)+F_n ⊆ D holds.
    slots: Vec<Vec<usize>>,
    derived: DerivedProperties,
    budget: u64,
}

/// One element of G_n: the word on E with its window ranks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GnMember {
    pub word: Vec<u8>,
    /// rank of u|_{p+F_n} for the i-th p ∈ E
    pub anchor_windows: Vec<u64>,
}

impl GnMember {
    pub fn sorted_windows(&self) -> Vec<u64> {
        let mut w = self.anchor_windows.clone();
        w.sort_unstable();
        w
    }
}

impl GnContext {
    pub fn new(lattice: LatticeContext, alphabet: usize) -> Result<Self> {
        if alphabet == 0 || alphabet > 256 {
            return Err(Error::InvalidArgument(format!("alphabet size {alphabet} not in 1..=256")));
        }
        let dim = lattice.dim();
        let n = lattice.n();
        let codec = WindowCodec::new(dim, n, alphabet)?;
        let cube: Vec<Point> = BoxRegion::cube(dim, n).points().collect();
        let d = lattice.d_set();

        let mut anchor_cells = Vec::with_capacity(lattice.e_set().len());
        let mut anchor_d_cells = Vec::with_capacity(lattice.e_set().len());
        for p in lattice.e_set().points() {
            let mut cells = Vec::with_capacity(cube.len());
            let mut dcells = Vec::with_capacity(cube.len());
            for o in &cube {
                let q = p + o;
                match d.index_of(&q) {
                    Some(i) => {
                        dcells.push(i);
                        cells.push(lattice.eta_index(i));
                    }
                    None => {
                        let r = lattice.reduce(&q);
                        let e = lattice.e_set().index_of(&r).expect("η lands in E");
                        cells.push(e);
                    }
                }
            }
            anchor_cells.push(cells);
            anchor_d_cells.push(dcells);
        }

        let mut slots: Vec<Vec<usize>> = hypercubes_in(d, n)
            .iter()
            .map(|a| {
                cube.iter()
                    .map(|o| lattice.eta_index(d.index_of(&(a + o)).expect("cube inside D")))
                    .collect()
            })
            .collect();
        slots.sort();
        slots.dedup();

        let derived = check_derived_properties(&lattice);
        Ok(GnContext {
            lattice,
            alphabet,
            codec,
            anchor_cells,
            anchor_d_cells,
            slots,
            derived,
            budget: DEFAULT_ENUMERATION_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn lattice(&self) -> &LatticeContext {
        &self.lattice
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn codec(&self) -> &WindowCodec {
        &self.codec
    }

    pub fn e_len(&self) -> usize {
        self.lattice.e_set().len()
    }

    pub fn derived(&self) -> &DerivedProperties {
        &self.derived
    }

    pub fn anchor_cells(&self, e_idx: usize) -> &[usize] {
        &self.anchor_cells[e_idx]
    }

    /// Distinct window slots; |W_n(u)| counts the distinct ranks over these.
    pub fn slots(&self) -> &[Vec<usize>] {
        &self.slots
    }

    /// False when the lemma checkers must refuse this context.
    pub fn is_asymptotic(&self) -> bool {
        self.derived.p4 && self.derived.p5 && self.derived.p6
    }

    pub(crate) fn require_asymptotic(&self) -> Result<()> {
        if self.is_asymptotic() {
            return Ok(());
        }
        let mut failing = Vec::new();
        if !self.derived.p4 {
            failing.push(format!(
                "lattice vector of norm {} within 2n",
                self.derived.close_lattice_vector.unwrap_or(0)
            ));
        }
        if !self.derived.p5 {
            failing.push(format!("η preimage of size {}", self.derived.max_preimage));
        }
        if !self.derived.p6 {
            failing.push(format!("{} non-injective cubes", self.derived.p6_violations));
        }
        Err(Error::PreAsymptotic(failing.join("; ")))
    }

    /// |G_n⁰| = |𝒜|^{|E|}.
    pub fn g0_count(&self) -> BigUint {
        pow_biguint(self.alphabet as u64, self.e_len() as u64)
    }

    fn word_count(&self) -> Result<u64> {
        let total = (self.alphabet as u64)
            .checked_pow(self.e_len() as u32)
            .filter(|&t| t <= self.budget)
            .ok_or_else(|| {
                Error::budget(
                    "|A|^|E| words (use sampling instead)",
                    format!("{}^{}", self.alphabet, self.e_len()),
                    self.budget,
                )
            })?;
        Ok(total)
    }

    /// Odometer order: the first point of E is the least significant digit.
    pub fn word_at(&self, mut index: u64) -> Vec<u8> {
        let q = self.alphabet as u64;
        (0..self.e_len())
            .map(|_| {
                let s = (index % q) as u8;
                index /= q;
                s
            })
            .collect()
    }

    fn check_word(&self, w: &[u8]) -> Result<()> {
        if w.len() != self.e_len() {
            return Err(Error::InvalidArgument(format!(
                "word has {} symbols, E has {}",
                w.len(),
                self.e_len()
            )));
        }
        if w.iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::InvalidArgument("symbol outside the alphabet".into()));
        }
        Ok(())
    }

    /// The unique u ∈ G_n⁰ with u|_E = w, as symbols in D order.
    pub fn lift(&self, w: &[u8]) -> Result<Vec<u8>> {
        self.check_word(w)?;
        Ok(self.lattice.eta_table().iter().map(|&e| w[e]).collect())
    }

    pub fn lift_pattern(&self, w: &[u8]) -> Result<Pattern> {
        Pattern::new(self.lattice.d_set().clone(), self.lift(w)?)
    }

    fn rank_cells(&self, w: &[u8], cells: &[usize]) -> u64 {
        let q = self.alphabet as u64;
        cells.iter().fold(0u64, |acc, &e| acc * q + w[e] as u64)
    }

    pub fn anchor_windows(&self, w: &[u8]) -> Vec<u64> {
        self.anchor_cells.iter().map(|c| self.rank_cells(w, c)).collect()
    }

    /// |W_n(lift(w))|.
    pub fn window_count(&self, w: &[u8]) -> usize {
        let mut ranks: Vec<u64> = self.slots.iter().map(|c| self.rank_cells(w, c)).collect();
        ranks.sort_unstable();
        ranks.dedup();
        ranks.len()
    }

    /// Membership of lift(w) in G_n.
    pub fn member(&self, w: &[u8]) -> Option<GnMember> {
        if self.window_count(w) != self.e_len() {
            return None;
        }
        Some(GnMember {
            word: w.to_vec(),
            anchor_windows: self.anchor_windows(w),
        })
    }

    pub fn member_of_word(&self, w: &[u8]) -> Result<Option<GnMember>> {
        self.check_word(w)?;
        Ok(self.member(w))
    }

    /// Takes a pattern on D (in any translate) and decides membership in G_n;
    /// patterns outside G_n⁰ are rejected.
    pub fn is_member(&self, u: &Pattern) -> Result<bool> {
        let d = self.lattice.d_set();
        let canonical_d = d.translate(&-d.min_point().expect("D is nonempty"));
        if u.shape() != &canonical_d {
            return Err(Error::Domain("pattern is not supported on D".into()));
        }
        let shift = d.min_point().expect("D is nonempty");
        let mut word: Vec<Option<u8>> = vec![None; self.e_len()];
        for (i, &s) in u.symbols().iter().enumerate() {
            let e = self.lattice.eta_index(i);
            match word[e] {
                None => word[e] = Some(s),
                Some(t) if t != s => {
                    let site = (&d.points()[i] - &Point::origin(shift.dim())).into_coords();
                    return Err(Error::InconsistentOverlap { site, first: t, second: s });
                }
                _ => {}
            }
        }
        if u.symbols().iter().any(|&s| s as usize >= self.alphabet) {
            return Err(Error::InvalidArgument("symbol outside the alphabet".into()));
        }
        Ok(window_ranks(u, &self.codec).len() == self.e_len())
    }

    /// Exact G_n by brute force over 𝒜^E, in odometer order.
    pub fn enumerate(&self) -> Result<Vec<GnMember>> {
        let total = self.word_count()?;
        Ok((0..total)
            .into_par_iter()
            .filter_map(|i| self.member(&self.word_at(i)))
            .collect())
    }

    pub fn count(&self) -> Result<u64> {
        let total = self.word_count()?;
        Ok((0..total)
            .into_par_iter()
            .filter(|&i| self.window_count(&self.word_at(i)) == self.e_len())
            .count() as u64)
    }

    /// Rejection sampling from uniform 𝒜^E; keeps at most `keep` members.
    pub fn sample(&self, trials: u64, seed: u64, keep: usize) -> Result<GnSample> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        let accepted: Vec<(u64, Vec<u8>)> = (0..trials)
            .into_par_iter()
            .filter_map(|t| {
                let mut rng = stream_rng(seed, purpose::GN_SAMPLE, t);
                let w: Vec<u8> = (0..self.e_len())
                    .map(|_| rng.gen_range(0..self.alphabet) as u8)
                    .collect();
                (self.window_count(&w) == self.e_len()).then_some((t, w))
            })
            .collect();
        let acceptances = accepted.len() as u64;
        let rate = acceptances as f64 / trials as f64;
        let members = accepted
            .into_iter()
            .take(keep)
            .map(|(_, w)| self.member(&w).expect("accepted words are members"))
            .collect();
        Ok(GnSample {
            trials,
            acceptances,
            rate,
            std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
            wilson99: wilson_interval(acceptances, trials, Z99),
            members,
        })
    }

    /// J(u, v), R₀ and R = η(R₀) for two members.
    pub fn cross_repeats(&self, u: &GnMember, v: &GnMember) -> Result<CrossRepeats> {
        for x in [u, v] {
            self.check_word(&x.word)?;
            if self.window_count(&x.word) != self.e_len() {
                return Err(Error::Domain("cross repeats need members of G_n".into()));
            }
        }
        let positions: HashMap<u64, usize> = v
            .anchor_windows
            .iter()
            .enumerate()
            .map(|(q, &w)| (w, q))
            .collect();
        let pairs: Vec<(usize, usize)> = u
            .anchor_windows
            .iter()
            .enumerate()
            .filter_map(|(p, w)| positions.get(w).map(|&q| (p, q)))
            .collect();
        Ok(self.repeat_sets(pairs))
    }

    fn repeat_sets(&self, pairs: Vec<(usize, usize)>) -> CrossRepeats {
        let mut r0: Vec<usize> = pairs
            .iter()
            .flat_map(|&(_, q)| self.anchor_d_cells[q].iter().copied())
            .collect();
        r0.sort_unstable();
        r0.dedup();
        let mut r: Vec<usize> = r0.iter().map(|&i| self.lattice.eta_index(i)).collect();
        r.sort_unstable();
        r.dedup();
        CrossRepeats { pairs, r0, r }
    }

    /// Points of D for a list of D indices.
    pub fn d_points(&self, idx: &[usize]) -> Vec<Point> {
        idx.iter().map(|&i| self.lattice.d_set().points()[i].clone()).collect()
    }

    /// Points of E for a list of E indices.
    pub fn e_points(&self, idx: &[usize]) -> Vec<Point> {
        idx.iter().map(|&i| self.lattice.e_set().points()[i].clone()).collect()
    }

    /// Exact |V_{n,r,a}| over ordered pairs of members sharing a window.
    pub fn v_counts(&self, members: &[GnMember]) -> Result<VCounts> {
        let k = 3usize.pow(self.lattice.dim() as u32);
        let mut index: HashMap<u64, Vec<(u32, u32)>> = HashMap::new();
        for (i, m) in members.iter().enumerate() {
            for (q, &w) in m.anchor_windows.iter().enumerate() {
                index.entry(w).or_default().push((i as u32, q as u32));
            }
        }
        let partial = members
            .par_iter()
            .map(|u| {
                let mut acc = VAccumulator::default();
                let mut by_v: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
                for (p, w) in u.anchor_windows.iter().enumerate() {
                    if let Some(hits) = index.get(w) {
                        for &(v, q) in hits {
                            by_v.entry(v).or_default().push((p, q as usize));
                        }
                    }
                }
                for (_, pairs) in by_v {
                    let rep = self.repeat_sets(pairs);
                    let r = rep.pairs.len();
                    let a = rep.r.len();
                    *acc.by_ra.entry((r, a)).or_insert(0) += 1;
                    acc.a_below_r |= a < r;
                    acc.r0_over_bound |= rep.r0.len() > k * a;
                }
                acc
            })
            .reduce(VAccumulator::default, VAccumulator::merge);

        let mut by_r: BTreeMap<usize, u64> = BTreeMap::new();
        for (&(r, _), &c) in &partial.by_ra {
            *by_r.entry(r).or_insert(0) += c;
        }
        Ok(VCounts {
            g_n: members.len() as u64,
            v_n: by_r.values().sum(),
            by_r,
            by_ra: partial.by_ra,
            a_at_least_r: !partial.a_below_r,
            r0_within_bound: !partial.r0_over_bound,
        })
    }

    /// Whether |G_n| meets |𝒜|^{|E|}(1 − |E|²|𝒜|^{−n^d}), in integers.
    pub fn lower_bound_check(&self, gn: &BigUint) -> LowerBoundCheck {
        let cells = self.codec.cells() as u64;
        let q = self.alphabet as u64;
        let e = self.e_len() as u64;
        // scaled by |𝒜|^{n^d}
        let rhs = BigInt::from(pow_biguint(q, e + cells)) - BigInt::from(e * e) * BigInt::from(pow_biguint(q, e));
        let lhs = BigInt::from(gn.clone()) * BigInt::from(pow_biguint(q, cells));
        let positive = rhs > BigInt::from(0);
        LowerBoundCheck {
            g_n: gn.to_string(),
            bound_positive: positive,
            holds: lhs >= rhs,
            defect: (e * e) as f64 / (q as f64).powf(cells as f64),
        }
    }

    /// |V_n| ≤ |G_n|·|E|²·|𝒜|^{|E|−n^d}, in integers.
    pub fn pair_bound_holds(&self, counts: &VCounts) -> bool {
        let cells = self.codec.cells() as u64;
        let q = self.alphabet as u64;
        let e = self.e_len() as u64;
        let lhs = BigUint::from(counts.v_n) * pow_biguint(q, cells);
        let rhs = BigUint::from(counts.g_n) * BigUint::from(e * e) * pow_biguint(q, e);
        lhs <= rhs
    }

    /// Counts completions of E∖T that repeat the q-window at p.
    fn completions(&self, p: usize, q: usize, w: &mut [u8], free: &[usize]) -> u64 {
        let digits = free.len() as u32;
        let total = (self.alphabet as u64).pow(digits);
        let mut found = 0;
        for t in 0..total {
            let mut x = t;
            for &c in free {
                w[c] = (x % self.alphabet as u64) as u8;
                x /= self.alphabet as u64;
            }
            if self.rank_cells(w, &self.anchor_cells[p]) == self.rank_cells(w, &self.anchor_cells[q]) {
                found += 1;
            }
        }
        found
    }

    fn free_cells(&self, q: usize) -> (Vec<usize>, Vec<usize>) {
        let mut t: Vec<usize> = self.anchor_cells[q].clone();
        t.sort_unstable();
        t.dedup();
        let rest = (0..self.e_len()).filter(|i| t.binary_search(i).is_err()).collect();
        (t, rest)
    }

    /// At most one completion u ∈ G_n⁰ with u|_{p+F_n} = u|_{q+F_n} and a
    /// prescribed restriction to E∖η(q+F_n); exhaustive over p ≠ q and w.
    pub fn check_uniqueness_exhaustive(&self) -> Result<UniquenessReport> {
        self.require_asymptotic()?;
        let e = self.e_len() as u64;
        let work = (self.alphabet as u64)
            .checked_pow(e as u32)
            .and_then(|x| x.checked_mul(e * e.saturating_sub(1)))
            .filter(|&x| x <= self.budget * 4)
            .ok_or_else(|| Error::budget("uniqueness check work", "pairs * |A|^|E|", self.budget * 4))?;
        let _ = work;
        let pairs: Vec<(usize, usize)> = (0..self.e_len())
            .flat_map(|p| (0..self.e_len()).filter(move |&q| q != p).map(move |q| (p, q)))
            .collect();
        let rows: Vec<(u64, u64, u64)> = pairs
            .par_iter()
            .map(|&(p, q)| {
                let (t, rest) = self.free_cells(q);
                let prefixes = (self.alphabet as u64).pow(rest.len() as u32);
                let mut w = vec![0u8; self.e_len()];
                let mut worst = 0;
                let mut bad = 0;
                for idx in 0..prefixes {
                    let mut x = idx;
                    for &c in &rest {
                        w[c] = (x % self.alphabet as u64) as u8;
                        x /= self.alphabet as u64;
                    }
                    let found = self.completions(p, q, &mut w, &t);
                    worst = worst.max(found);
                    bad += (found > 1) as u64;
                }
                (prefixes, worst, bad)
            })
            .collect();
        Ok(UniquenessReport {
            mode: "exhaustive".into(),
            pairs: pairs.len() as u64,
            cases: rows.iter().map(|r| r.0).sum(),
            max_completions: rows.iter().map(|r| r.1).max().unwrap_or(0),
            violations: rows.iter().map(|r| r.2).sum(),
        })
    }

    /// Random (p, q, w) triples; each completion set is still enumerated
    /// exhaustively.
    pub fn check_uniqueness_sampled(&self, samples: u64, seed: u64) -> Result<UniquenessReport> {
        self.require_asymptotic()?;
        if self.e_len() < 2 {
            return Err(Error::Domain("need |E| >= 2 for distinct anchors".into()));
        }
        let side = (self.alphabet as u64).checked_pow(self.codec.cells() as u32);
        if side.is_none_or(|s| s > self.budget) {
            return Err(Error::budget("completions per case", "|A|^(n^d)", self.budget));
        }
        let rows: Vec<u64> = (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream_rng(seed, purpose::UNIQUENESS, s);
                let p = rng.gen_range(0..self.e_len());
                let mut q = rng.gen_range(0..self.e_len() - 1);
                if q >= p {
                    q += 1;
                }
                let (t, _) = self.free_cells(q);
                let mut w: Vec<u8> = (0..self.e_len())
                    .map(|_| rng.gen_range(0..self.alphabet) as u8)
                    .collect();
                self.completions(p, q, &mut w, &t)
            })
            .collect();
        Ok(UniquenessReport {
            mode: "sampled".into(),
            pairs: samples,
            cases: samples,
            max_completions: rows.iter().copied().max().unwrap_or(0),
            violations: rows.iter().filter(|&&c| c > 1).count() as u64,
        })
    }
}

#[derive(Default)]
struct VAccumulator {
    by_ra: BTreeMap<(usize, usize), u64>,
    a_below_r: bool,
    r0_over_bound: bool,
}

impl VAccumulator {
    fn merge(mut self, other: Self) -> Self {
        for (k, v) in other.by_ra {
            *self.by_ra.entry(k).or_insert(0) += v;
        }
        self.a_below_r |= other.a_below_r;
        self.r0_over_bound |= other.r0_over_bound;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GnSample {
    pub trials: u64,
    pub acceptances: u64,
    pub rate: f64,
    pub std_error: f64,
    pub wilson99: (f64, f64),
    #[serde(skip)]
    pub members: Vec<GnMember>,
}

/// J(u, v) as (p, q) index pairs into E, R₀ as D indices, R as E indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossRepeats {
    pub pairs: Vec<(usize, usize)>,
    pub r0: Vec<usize>,
    pub r: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VCounts {
    pub g_n: u64,
    pub v_n: u64,
    pub by_r: BTreeMap<usize, u64>,
    pub by_ra: BTreeMap<(usize, usize), u64>,
    /// no pair has |R| < r
    pub a_at_least_r: bool,
    /// |R₀| ≤ 3^d|R| on every pair
    pub r0_within_bound: bool,
}

#[derive(Serialize)]
struct VRow {
    r: usize,
    a: usize,
    count: u64,
}

impl VCounts {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (&(r, a), &count) in &self.by_ra {
            w.serialize(VRow { r, a, count }).map_err(|e| Error::Config(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

impl Serialize for VCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            g_n: u64,
            v_n: u64,
            by_r: Vec<(usize, u64)>,
            by_ra: Vec<VRow>,
            a_at_least_r: bool,
            r0_within_bound: bool,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        Wire {
            g_n: self.g_n,
            v_n: self.v_n,
            by_r: self.by_r.iter().map(|(&r, &c)| (r, c)).collect(),
            by_ra: self
                .by_ra
                .iter()
                .map(|(&(r, a), &count)| VRow { r, a, count })
                .collect(),
            a_at_least_r: self.a_at_least_r,
            r0_within_bound: self.r0_within_bound,
            _p: std::marker::PhantomData,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerBoundCheck {
    pub g_n: String,
    pub bound_positive: bool,
    pub holds: bool,
    /// |E|²·|𝒜|^{−n^d}
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub mode: String,
    pub pairs: u64,
    pub cases: u64,
    pub max_completions: u64,
    pub violations: u64,
}

/// Convenience: the G_n context for Λ = kℤ^d with reach m = n.
pub fn cube_context(dim: usize, k: i64, n: usize, alphabet: usize) -> Result<GnContext> {
    let basis = crate::lattice::LatticeBasis::cube(dim, k)?;
    GnContext::new(LatticeContext::build(basis, n, n)?, alphabet)
}

/// All window positions for a finite shape, used by callers that need the
/// cube anchors of a set other than D.
pub fn cube_anchors(shape: &Shape, n: usize) -> Vec<Point> {
    hypercubes_in(shape, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Pattern;

    fn digits(s: &str) -> Vec<u8> {
        s.bytes().map(|b| b - b'0').collect()
    }

    /// Independent oracle: cyclic windows of a k-periodic word.
    fn cyclic_windows(w: &[u8], n: usize) -> std::collections::BTreeSet<Vec<u8>> {
        let k = w.len();
        (0..k).map(|i| (0..n).map(|j| w[(i + j) % k]).collect()).collect()
    }

    fn oracle_count(k: usize, n: usize) -> usize {
        (0..1u32 << k)
            .filter(|x| {
                let w: Vec<u8> = (0..k).map(|i| ((x >> i) & 1) as u8).collect();
                cyclic_windows(&w, n).len() == k
            })
            .count()
    }

    #[test]
    fn lift_example() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let u = ctx.lift(&digits("0001011")).unwrap();
        assert_eq!(u.len(), 14);
        assert_eq!(&u[..13], digits("0110001011000").as_slice());
        assert_eq!(u[13], 1);
        assert_eq!(ctx.lift(&[1; 7]).unwrap(), vec![1; 14]);
        assert!(ctx.lift(&[0; 6]).is_err());
        assert_eq!(ctx.g0_count(), BigUint::from(128u32));
    }

    #[test]
    fn membership_examples() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let w = digits("0001011");
        assert!(ctx.member(&w).is_some());
        let u = ctx.lift_pattern(&w).unwrap();
        assert!(ctx.is_member(&u).unwrap());
        assert!(!ctx.is_member(&ctx.lift_pattern(&[0; 7]).unwrap()).unwrap());
        let mut bad = ctx.lift(&w).unwrap();
        bad[0] ^= 1;
        let bad = Pattern::new(ctx.lattice().d_set().clone(), bad).unwrap();
        assert!(matches!(ctx.is_member(&bad), Err(Error::InconsistentOverlap { .. })));

        let small = cube_context(1, 7, 2, 2).unwrap();
        assert_eq!(small.count().unwrap(), 0);
    }

    #[test]
    fn enumeration_matches_cyclic_oracle() {
        for (k, n, frozen) in [(7, 3, 28), (9, 3, 0), (9, 4, 126), (11, 4, 154)] {
            let ctx = cube_context(1, k, n, 2).unwrap();
            let all = ctx.enumerate().unwrap();
            assert_eq!(all.len(), frozen, "k={k} n={n}");
            assert_eq!(oracle_count(k as usize, n), frozen);
            assert_eq!(ctx.count().unwrap(), frozen as u64);
        }
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let first: Vec<Vec<u8>> = ctx.enumerate().unwrap().iter().take(2).map(|m| m.word.clone()).collect();
        // odometer order: first E point is least significant
        let mut expected: Vec<Vec<u8>> = (0..128u32)
            .map(|x| (0..7).map(|i| ((x >> i) & 1) as u8).collect::<Vec<u8>>())
            .filter(|w| cyclic_windows(w, 3).len() == 7)
            .collect();
        expected.truncate(2);
        assert_eq!(first, expected);
    }

    #[test]
    fn budget_error_points_to_sampling() {
        let ctx = cube_context(1, 30, 3, 2).unwrap().with_budget(1000);
        match ctx.enumerate() {
            Err(Error::Budget { what, .. }) => assert!(what.contains("sampling")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling_agrees_with_enumeration() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let s = ctx.sample(20_000, 11, 5).unwrap();
        let exact = 28.0 / 128.0;
        assert!((s.rate - exact).abs() <= 3.0 * s.std_error);
        assert_eq!(s.members.len(), 5);
        assert_eq!(ctx.sample(20_000, 11, 0).unwrap().acceptances, s.acceptances);
        let empty = cube_context(1, 9, 3, 2).unwrap().sample(500, 1, 1).unwrap();
        assert_eq!(empty.acceptances, 0);
    }

    #[test]
    fn cross_repeat_examples() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let u = ctx.member(&digits("0001011")).unwrap();
        let rep = ctx.cross_repeats(&u, &u).unwrap();
        assert_eq!(rep.pairs, (0..7).map(|p| (p, p)).collect::<Vec<_>>());
        assert_eq!(rep.r.len(), 7);

        // reversed complement of 0001011 is 0010111
        let v = ctx.member(&digits("0010111")).unwrap();
        let rep = ctx.cross_repeats(&u, &v).unwrap();
        let wu = |p: usize| (0..3).map(|j| digits("0001011")[(p + j) % 7]).collect::<Vec<u8>>();
        let wv = |q: usize| (0..3).map(|j| digits("0010111")[(q + j) % 7]).collect::<Vec<u8>>();
        let oracle: Vec<(usize, usize)> = (0..7)
            .flat_map(|p| (0..7).map(move |q| (p, q)))
            .filter(|&(p, q)| wu(p) == wv(q))
            .collect();
        assert_eq!(rep.pairs, oracle);
        assert!(rep.pairs.len() <= rep.r.len());

        let c = GnMember {
            word: vec![0; 7],
            anchor_windows: vec![0; 7],
        };
        assert!(ctx.cross_repeats(&u, &c).is_err());
    }

    #[test]
    fn v_count_table() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let v = ctx.v_counts(&members).unwrap();
        assert_eq!(v.by_r.get(&7), Some(&392));
        assert_eq!(v.by_r.get(&6), Some(&392));
        assert_eq!(v.v_n, 784);
        assert_eq!(v.by_r.values().sum::<u64>(), v.v_n);
        assert!(v.a_at_least_r && v.r0_within_bound);
        assert!(v.by_ra.keys().all(|&(r, a)| a >= r));
        assert!(ctx.pair_bound_holds(&v));

        // brute-force oracle over G_n × G_n
        let mut oracle: BTreeMap<usize, u64> = BTreeMap::new();
        for a in &members {
            for b in &members {
                let sa: std::collections::BTreeSet<u64> = a.anchor_windows.iter().copied().collect();
                let r = b.anchor_windows.iter().filter(|w| sa.contains(w)).count();
                if r > 0 {
                    *oracle.entry(r).or_insert(0) += 1;
                }
            }
        }
        assert_eq!(oracle, v.by_r);

        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,a,count\n"));
    }

    #[test]
    fn lower_bound_and_uniqueness() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let chk = ctx.lower_bound_check(&BigUint::from(28u32));
        assert!(!chk.bound_positive && chk.holds);

        let rep = ctx.check_uniqueness_exhaustive().unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_completions <= 1);
        assert_eq!(rep.pairs, 42);

        let pre = cube_context(1, 5, 3, 2).unwrap();
        assert!(matches!(
            pre.check_uniqueness_exhaustive(),
            Err(Error::PreAsymptotic(_))
        ));
    }

    #[test]
    fn alphabet_permutation_invariance() {
        let ctx = cube_context(1, 9, 2, 3).unwrap();
        let members = ctx.enumerate().unwrap();
        let perm = [2u8, 0, 1];
        for m in &members {
            let w: Vec<u8> = m.word.iter().map(|&s| perm[s as usize]).collect();
            assert!(ctx.member(&w).is_some());
        }
        // de Bruijn-type count for ternary n=2 on 9 cells
        assert!(!members.is_empty());
    }
}
