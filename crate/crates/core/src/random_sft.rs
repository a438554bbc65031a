//! Random forbidden sets ℱ ⊆ 𝒜^{F_n}, the statistic φ = |G_n(ℱ)|, its
//! moments and tail frequencies, and small SFT statistics (periodic point
//! counts, entropy estimates).

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{BoxRegion, Point};
use crate::gn::{GnContext, GnMember, VCounts};
use crate::lattice::LatticeBasis;
use crate::numeric::{
    ln_biguint, pow_biguint, pow_rational, purpose, stream_rng, to_f64, wilson_interval, ExactValue, Ratio, Z99,
};
use crate::pattern::{Pattern, WindowCodec};

/// Largest |𝒜|^{n^d} for which forbidden sets are stored as a bitmask.
const DENSE_LIMIT: u64 = 1 << 24;

/// ℙ_{n,α}: every F_n-pattern is forbidden independently with probability
/// 1 − α.
#[derive(Clone, Debug, Serialize)]
pub struct RandomModel {
    pub alphabet: usize,
    pub dim: usize,
    pub n: usize,
    pub alpha: Ratio,
    pub seed: u64,
}

impl RandomModel {
    pub fn new(dim: usize, alphabet: usize, n: usize, alpha: Ratio, seed: u64) -> Result<Self> {
        if !alpha.in_unit_interval() {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} is not in [0, 1]")));
        }
        WindowCodec::new(dim, n, alphabet)?;
        Ok(RandomModel {
            alphabet,
            dim,
            n,
            alpha,
            seed,
        })
    }

    pub fn codec(&self) -> WindowCodec {
        WindowCodec::new(self.dim, self.n, self.alphabet).expect("checked at construction")
    }

    /// The forbidden set of trial `trial`; a pure function of (seed, trial).
    pub fn sample_forbidden(&self, trial: u64) -> ForbiddenSet {
        let codec = self.codec();
        let total = codec.pattern_count();
        let mut rng = stream_rng(self.seed, purpose::FORBIDDEN_SET, trial);
        let alpha = self.alpha.as_f64();
        let p_forbid = 1.0 - alpha;
        if total <= DENSE_LIMIT {
            let mut bits = vec![0u64; total.div_ceil(64) as usize];
            for i in 0..total {
                if rng.gen_bool(p_forbid.clamp(0.0, 1.0)) {
                    bits[(i / 64) as usize] |= 1 << (i % 64);
                }
            }
            ForbiddenSet::Dense { total, bits }
        } else {
            // geometric gaps between forbidden ranks
            let mut set = HashSet::new();
            if p_forbid > 0.0 {
                let log_keep = alpha.ln();
                let mut i: u64 = 0;
                loop {
                    let gap = if p_forbid >= 1.0 {
                        0
                    } else {
                        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                        (u.ln() / log_keep).floor().min(u64::MAX as f64) as u64
                    };
                    i = match i.checked_add(gap) {
                        Some(x) if x < total => x,
                        _ => break,
                    };
                    set.insert(i);
                    i += 1;
                }
            }
            ForbiddenSet::Sparse { total, ranks: set }
        }
    }
}

/// A subset of 𝒜^{F_n}, by window rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForbiddenSet {
    Dense { total: u64, bits: Vec<u64> },
    Sparse { total: u64, ranks: HashSet<u64> },
}

impl ForbiddenSet {
    pub fn empty(codec: &WindowCodec) -> Self {
        Self::from_ranks(codec, std::iter::empty())
    }

    pub fn everything(codec: &WindowCodec) -> Result<Self> {
        let total = codec.pattern_count();
        if total > DENSE_LIMIT {
            return Err(Error::budget("|A|^(n^d) patterns", total, DENSE_LIMIT));
        }
        Ok(Self::from_ranks(codec, 0..total))
    }

    pub fn from_ranks(codec: &WindowCodec, ranks: impl IntoIterator<Item = u64>) -> Self {
        let total = codec.pattern_count();
        if total <= DENSE_LIMIT {
            let mut bits = vec![0u64; total.div_ceil(64) as usize];
            for r in ranks {
                bits[(r / 64) as usize] |= 1 << (r % 64);
            }
            ForbiddenSet::Dense { total, bits }
        } else {
            ForbiddenSet::Sparse {
                total,
                ranks: ranks.into_iter().collect(),
            }
        }
    }

    pub fn from_patterns(codec: &WindowCodec, patterns: &[Pattern]) -> Result<Self> {
        let ranks = patterns.iter().map(|p| codec.rank_of(p)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_ranks(codec, ranks))
    }

    pub fn contains(&self, rank: u64) -> bool {
        match self {
            ForbiddenSet::Dense { bits, total } => {
                rank < *total && bits[(rank / 64) as usize] >> (rank % 64) & 1 == 1
            }
            ForbiddenSet::Sparse { ranks, .. } => ranks.contains(&rank),
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            ForbiddenSet::Dense { bits, .. } => bits.iter().map(|b| b.count_ones() as u64).sum(),
            ForbiddenSet::Sparse { ranks, .. } => ranks.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted ranks.
    pub fn ranks(&self) -> Vec<u64> {
        match self {
            ForbiddenSet::Dense { total, .. } => (0..*total).filter(|&r| self.contains(r)).collect(),
            ForbiddenSet::Sparse { ranks, .. } => {
                let mut v: Vec<u64> = ranks.iter().copied().collect();
                v.sort_unstable();
                v
            }
        }
    }
}

/// |G_n(ℱ)| = #{u ∈ G_n : W_n(u) ∩ ℱ = ∅}.
pub fn phi(members: &[GnMember], forbidden: &ForbiddenSet) -> u64 {
    members
        .iter()
        .filter(|m| m.anchor_windows.iter().all(|&w| !forbidden.contains(w)))
        .count() as u64
}

/// Members re-encoded over the windows they actually use, for fast φ.
struct Relevant {
    /// window rank of each relevant bit
    ranks: Vec<u64>,
    /// one bitmask (over relevant windows) per member
    masks: Vec<Vec<u64>>,
}

impl Relevant {
    fn new(members: &[GnMember]) -> Self {
        let mut ranks: Vec<u64> = members.iter().flat_map(|m| m.anchor_windows.iter().copied()).collect();
        ranks.sort_unstable();
        ranks.dedup();
        let pos: HashMap<u64, usize> = ranks.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let words = ranks.len().div_ceil(64).max(1);
        let masks = members
            .iter()
            .map(|m| {
                let mut mask = vec![0u64; words];
                for w in &m.anchor_windows {
                    let i = pos[w];
                    mask[i / 64] |= 1 << (i % 64);
                }
                mask
            })
            .collect();
        Relevant { ranks, masks }
    }
}

fn ser_exact<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    ExactValue::from(r).serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    pub method: String,
    #[serde(serialize_with = "ser_exact")]
    pub mean: BigRational,
    #[serde(serialize_with = "ser_exact")]
    pub variance: BigRational,
    pub g_n: u64,
    pub e_len: usize,
    /// forbidden sets enumerated (exhaustive method)
    pub sets: Option<u64>,
}

/// E[φ] = α^{|E|}|G_n| and Var[φ] = Σ_r |V_{n,r}|(α^{2|E|−r} − α^{2|E|}).
pub fn moments_formula(ctx: &GnContext, v: &VCounts, alpha: &Ratio) -> MomentReport {
    let a = alpha.exact();
    let e = ctx.e_len() as u64;
    let mean = pow_rational(a, e) * BigRational::from_integer(v.g_n.into());
    let base = pow_rational(a, 2 * e);
    let mut variance = BigRational::zero();
    for (&r, &count) in &v.by_r {
        let term = pow_rational(a, 2 * e - r as u64) - &base;
        variance += term * BigRational::from_integer(count.into());
    }
    MomentReport {
        method: "formula".into(),
        mean,
        variance,
        g_n: v.g_n,
        e_len: ctx.e_len(),
        sets: None,
    }
}

/// Mean and variance of φ by summing over every ℱ ⊆ 𝒜^{F_n} with its
/// probability; only windows used by some member matter, the rest
/// marginalize out.
pub fn moments_exhaustive(ctx: &GnContext, members: &[GnMember], alpha: &Ratio, budget: u64) -> Result<MomentReport> {
    let rel = Relevant::new(members);
    let bits = rel.ranks.len();
    let sets = 1u64
        .checked_shl(bits as u32)
        .filter(|&s| bits < 64 && s <= budget)
        .ok_or_else(|| Error::budget("relevant forbidden sets 2^N", format!("2^{bits}"), budget))?;
    if bits > 64 {
        return Err(Error::budget("relevant windows", bits, 64));
    }
    let masks: Vec<u64> = rel.masks.iter().map(|m| m[0]).collect();
    // s1[f], s2[f]: sums of φ and φ² over the sets with |ℱ| = f
    let (s1, s2) = (0..sets)
        .into_par_iter()
        .fold(
            || (vec![0u128; bits + 1], vec![0u128; bits + 1]),
            |(mut s1, mut s2), f| {
                let phi = masks.iter().filter(|&&m| m & f == 0).count() as u128;
                let k = f.count_ones() as usize;
                s1[k] += phi;
                s2[k] += phi * phi;
                (s1, s2)
            },
        )
        .reduce(
            || (vec![0u128; bits + 1], vec![0u128; bits + 1]),
            |(mut a1, mut a2), (b1, b2)| {
                for i in 0..=bits {
                    a1[i] += b1[i];
                    a2[i] += b2[i];
                }
                (a1, a2)
            },
        );
    let a = alpha.exact();
    let q = BigRational::one() - a;
    let mut mean = BigRational::zero();
    let mut second = BigRational::zero();
    for f in 0..=bits {
        let weight = pow_rational(a, (bits - f) as u64) * pow_rational(&q, f as u64);
        mean += &weight * BigRational::from_integer(s1[f].into());
        second += &weight * BigRational::from_integer(s2[f].into());
    }
    let variance = second - &mean * &mean;
    Ok(MomentReport {
        method: "exhaustive".into(),
        mean,
        variance,
        g_n: members.len() as u64,
        e_len: ctx.e_len(),
        sets: Some(sets),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloMoments {
    pub trials: u64,
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
}

/// Sample mean and (unbiased) variance of φ over independent trials.
pub fn moments_monte_carlo(members: &[GnMember], model: &RandomModel, trials: u64) -> Result<MonteCarloMoments> {
    if trials < 2 {
        return Err(Error::InvalidArgument("need at least 2 trials".into()));
    }
    let values: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| phi(members, &model.sample_forbidden(t)))
        .collect();
    let t = trials as f64;
    let mean = values.iter().map(|&x| x as f64).sum::<f64>() / t;
    let m2 = values.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / t;
    let m4 = values.iter().map(|&x| (x as f64 - mean).powi(4)).sum::<f64>() / t;
    let variance = m2 * t / (t - 1.0);
    Ok(MonteCarloMoments {
        trials,
        mean,
        variance,
        mean_std_error: (variance / t).sqrt(),
        variance_std_error: ((m4 - m2 * m2).max(0.0) / t).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub forbidden: u64,
    pub phi: u64,
    pub indicator: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub g_n: u64,
    pub e_len: usize,
    /// c(α|𝒜|)^{|E|}
    #[serde(serialize_with = "ser_exact")]
    pub threshold: BigRational,
    /// smallest integer φ meeting the threshold
    pub threshold_count: String,
    #[serde(serialize_with = "ser_opt_exact")]
    pub exact: Option<BigRational>,
    pub exact_method: Option<String>,
    pub trials: u64,
    pub hits: u64,
    pub frequency: f64,
    pub wilson99: (f64, f64),
    pub warning: Option<String>,
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

fn ser_opt_exact<S: Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    r.as_ref().map(ExactValue::from).serialize(s)
}

/// Options for [`concentration`].
#[derive(Clone, Debug)]
pub struct ConcentrationOptions {
    pub trials: u64,
    /// try to compute P(φ ≥ threshold) exactly
    pub exact: bool,
    /// node cap for the branch-and-bound exact method
    pub node_budget: u64,
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        ConcentrationOptions {
            trials: 10_000,
            exact: true,
            node_budget: 200_000_000,
        }
    }
}

/// Frequency of {φ ≥ c(α|𝒜|)^{|E|}}: Monte Carlo with a 99% Wilson interval,
/// plus the exact probability when the relevant windows allow it.
pub fn concentration(
    ctx: &GnContext,
    members: &[GnMember],
    model: &RandomModel,
    c: &Ratio,
    opts: &ConcentrationOptions,
) -> Result<ConcentrationReport> {
    let a = model.alpha.exact();
    let base = a * BigRational::from_integer(model.alphabet.into());
    let threshold = c.exact() * pow_rational(&base, ctx.e_len() as u64);
    let needed = threshold.ceil().to_integer();
    let needed_u64 = needed.to_u64().unwrap_or(u64::MAX);
    let warning = (base <= BigRational::one()).then(|| "alpha * |A| <= 1: threshold is not growing".to_string());

    let (exact, exact_method) = if opts.exact {
        match exact_tail(members, model, needed_u64, opts.node_budget) {
            Ok((p, method)) => (Some(p), Some(method)),
            Err(Error::Budget { .. }) => (None, None),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    let rows: Vec<TrialRow> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let f = model.sample_forbidden(t);
            let phi = phi(members, &f);
            TrialRow {
                trial: t,
                forbidden: f.len(),
                phi,
                indicator: (phi >= needed_u64) as u8,
            }
        })
        .collect();
    let hits = rows.iter().map(|r| r.indicator as u64).sum();
    let frequency = if opts.trials > 0 { hits as f64 / opts.trials as f64 } else { f64::NAN };
    Ok(ConcentrationReport {
        g_n: members.len() as u64,
        e_len: ctx.e_len(),
        threshold,
        threshold_count: needed.to_string(),
        exact,
        exact_method,
        trials: opts.trials,
        hits,
        frequency,
        wilson99: wilson_interval(hits, opts.trials, Z99),
        warning,
        rows,
    })
}

/// Exact P(φ ≥ t). Up to 20 relevant windows every subset is visited;
/// beyond that the down-closed family {ℱ : φ(ℱ) ≥ t} is searched directly,
/// pruning as soon as too few members survive.
pub fn exact_tail(members: &[GnMember], model: &RandomModel, t: u64, node_budget: u64) -> Result<(BigRational, String)> {
    let rel = Relevant::new(members);
    let bits = rel.ranks.len();
    let a = model.alpha.exact().clone();
    let q = BigRational::one() - &a;
    if t == 0 {
        return Ok((BigRational::one(), "trivial".into()));
    }
    if (members.len() as u64) < t {
        return Ok((BigRational::zero(), "trivial".into()));
    }
    if bits > 64 {
        return Err(Error::budget("relevant windows for exact tail", bits, 64));
    }
    let masks: Vec<u64> = rel.masks.iter().map(|m| m[0]).collect();
    // hist[kept][forbidden] counts decided branches
    let hist: Vec<Vec<u64>> = if bits <= 20 {
        let mut hist = vec![vec![0u64; bits + 1]; bits + 1];
        for f in 0u64..(1 << bits) {
            let phi = masks.iter().filter(|&&m| m & f == 0).count() as u64;
            if phi >= t {
                let k = f.count_ones() as usize;
                hist[bits - k][k] += 1;
            }
        }
        hist
    } else {
        BranchAndBound::new(&masks, bits, t).run(node_budget)?
    };
    let mut p = BigRational::zero();
    for (kept, row) in hist.iter().enumerate() {
        for (forb, &count) in row.iter().enumerate() {
            if count > 0 {
                p += pow_rational(&a, kept as u64) * pow_rational(&q, forb as u64) * BigRational::from_integer(count.into());
            }
        }
    }
    let method = if bits <= 20 { "exhaustive" } else { "pruned-search" };
    Ok((p, method.into()))
}

/// Enumerates the down-closed family {ℱ : φ(ℱ) ≥ t} over relevant windows.
/// Only windows used by some surviving member are branched on; the others
/// can be added freely and are tallied combinatorially.
struct BranchAndBound {
    bits: usize,
    t: u64,
    masks: Vec<u64>,
}

impl BranchAndBound {
    fn new(masks: &[u64], bits: usize, t: u64) -> Self {
        BranchAndBound {
            bits,
            t,
            masks: masks.to_vec(),
        }
    }

    fn used(&self, alive: &[u32]) -> u64 {
        alive.iter().fold(0u64, |acc, &i| acc | self.masks[i as usize])
    }

    fn all_bits(&self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    /// hist[kept][forbidden], where each visited node stands for the sets
    /// (chosen windows) ∪ (any subset of the freed windows).
    fn run(&self, node_budget: u64) -> Result<Vec<Vec<u64>>> {
        let alive: Vec<u32> = (0..self.masks.len() as u32).collect();
        let mut hist = vec![vec![0u64; self.bits + 1]; self.bits + 1];
        if (alive.len() as u64) < self.t {
            return Ok(hist);
        }
        let used = self.used(&alive);
        let free = (self.all_bits() & !used).count_ones() as usize;
        // root: chosen = ∅
        hist[self.bits - free][0] += 1;
        let firsts: Vec<u32> = (0..self.bits as u32).filter(|&j| used >> j & 1 == 1).collect();
        let per_task = (node_budget / firsts.len().max(1) as u64).max(1);
        let parts: Vec<Result<Vec<Vec<u64>>>> = firsts
            .par_iter()
            .map(|&j| {
                let mut h = vec![vec![0u64; self.bits + 1]; self.bits + 1];
                let mut nodes = 0u64;
                self.child(used, &alive, j, 0, free, &mut h, &mut nodes, per_task)?;
                Ok(h)
            })
            .collect();
        for part in parts {
            for (row, add) in hist.iter_mut().zip(part?) {
                for (x, y) in row.iter_mut().zip(add) {
                    *x += y;
                }
            }
        }
        Ok(hist)
    }

    #[allow(clippy::too_many_arguments)]
    fn child(
        &self,
        cands: u64,
        alive: &[u32],
        j: u32,
        depth: usize,
        free: usize,
        hist: &mut [Vec<u64>],
        nodes: &mut u64,
        budget: u64,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::budget("pruned-search nodes", *nodes, budget));
        }
        let next: Vec<u32> = alive
            .iter()
            .copied()
            .filter(|&i| self.masks[i as usize] >> j & 1 == 0)
            .collect();
        if (next.len() as u64) < self.t {
            return Ok(());
        }
        let above = if j >= 63 { 0 } else { cands & !((2u64 << j) - 1) };
        let used = self.used(&next);
        let cands = above & used;
        let free = free + (above & !used).count_ones() as usize;
        let depth = depth + 1;
        hist[self.bits - depth - free][depth] += 1;
        let mut rest = cands;
        while rest != 0 {
            let k = rest.trailing_zeros();
            rest &= rest - 1;
            self.child(cands, &next, k, depth, free, hist, nodes, budget)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalReport {
    /// |W_n(x)|
    pub windows: usize,
    /// |𝒪(x)|
    pub orbit: usize,
    #[serde(serialize_with = "ser_exact")]
    pub probability: BigRational,
    /// |W_n(x)| = |𝒪(x)|
    pub saturated: bool,
}

/// α^{|W_n(x)|} for the Λ-periodic point with fundamental-domain word `word`
/// (symbols in the order of the fundamental domain's points).
pub fn survival_probability(basis: &LatticeBasis, word: &[u8], n: usize, alpha: &Ratio) -> Result<SurvivalReport> {
    let e = basis.fundamental_domain(crate::lattice::DEFAULT_POINT_BUDGET)?;
    if word.len() != e.len() {
        return Err(Error::InvalidArgument(format!(
            "word has {} symbols, the fundamental domain has {}",
            word.len(),
            e.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let at = |p: &Point| word[e.index_of(&basis.reduce(p)).expect("reduction lands in E")];
    let cube: Vec<Point> = BoxRegion::cube(basis.dim(), n).points().collect();
    let windows: HashSet<Vec<u8>> = e
        .points()
        .iter()
        .map(|p| cube.iter().map(|o| at(&(p + o))).collect())
        .collect();
    let stabilizer = e
        .points()
        .iter()
        .filter(|v| e.points().iter().all(|q| at(&(q + *v)) == at(q)))
        .count();
    let orbit = e.len() / stabilizer;
    Ok(SurvivalReport {
        windows: windows.len(),
        orbit,
        probability: pow_rational(alpha.exact(), windows.len() as u64),
        saturated: windows.len() == orbit,
    })
}

/// Window ranks W_n(x) of the Λ-periodic point with fundamental-domain word
/// `word`, sorted and deduplicated.
pub fn periodic_window_ranks(basis: &LatticeBasis, word: &[u8], codec: &WindowCodec) -> Result<Vec<u64>> {
    let e = basis.fundamental_domain(crate::lattice::DEFAULT_POINT_BUDGET)?;
    if word.len() != e.len() || basis.dim() != codec.dim() {
        return Err(Error::InvalidArgument("word does not match the fundamental domain".into()));
    }
    let at = |p: &Point| word[e.index_of(&basis.reduce(p)).expect("reduction lands in E")];
    let cube: Vec<Point> = codec.cube().points().collect();
    let mut ranks: Vec<u64> = e
        .points()
        .iter()
        .map(|p| codec.encode(&cube.iter().map(|o| at(&(p + o))).collect::<Vec<_>>()))
        .collect();
    ranks.sort_unstable();
    ranks.dedup();
    Ok(ranks)
}

/// Monte Carlo check of a survival probability: fraction of sampled ℱ
/// avoiding all windows of x.
pub fn survival_frequency(model: &RandomModel, window_ranks: &[u64], trials: u64) -> (u64, f64) {
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let f = model.sample_forbidden(t);
            window_ranks.iter().all(|&w| !f.contains(w))
        })
        .count() as u64;
    (hits, hits as f64 / trials.max(1) as f64)
}

/// Transitions of the (n−1)-block graph for d = 1.
fn transfer_matrix(codec: &WindowCodec, forbidden: &ForbiddenSet) -> Result<Vec<Vec<u32>>> {
    let q = codec.alphabet() as u64;
    let n = codec.n() as u32;
    let states = q.pow(n - 1);
    if states > 4096 {
        return Err(Error::budget("transfer-matrix states |A|^(n-1)", states, 4096));
    }
    let mut t = vec![vec![0u32; states as usize]; states as usize];
    for w in 0..codec.pattern_count() {
        if forbidden.contains(w) {
            continue;
        }
        let from = w / q;
        let to = w % states;
        t[from as usize][to as usize] += 1;
    }
    Ok(t)
}

fn mat_mul(a: &[Vec<BigUint>], b: &[Vec<BigUint>]) -> Vec<Vec<BigUint>> {
    let s = a.len();
    (0..s)
        .into_par_iter()
        .map(|i| {
            (0..s)
                .map(|j| {
                    let mut acc = BigUint::zero();
                    for (k, aik) in a[i].iter().enumerate() {
                        if !aik.is_zero() && !b[k][j].is_zero() {
                            acc += aik * &b[k][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn mat_pow(t: &[Vec<u32>], mut e: u64) -> Vec<Vec<BigUint>> {
    let s = t.len();
    let mut base: Vec<Vec<BigUint>> = t.iter().map(|r| r.iter().map(|&x| BigUint::from(x)).collect()).collect();
    let mut acc: Vec<Vec<BigUint>> = (0..s)
        .map(|i| (0..s).map(|j| if i == j { BigUint::one() } else { BigUint::zero() }).collect())
        .collect();
    while e > 0 {
        if e & 1 == 1 {
            acc = mat_mul(&acc, &base);
        }
        e >>= 1;
        if e > 0 {
            base = mat_mul(&base, &base);
        }
    }
    acc
}

/// Assignments on the torus (ℤ/mℤ)^d whose wrapped F_n-windows all avoid ℱ.
pub fn torus_count(codec: &WindowCodec, forbidden: &ForbiddenSet, m: usize, budget: u64) -> Result<BigUint> {
    if m == 0 {
        return Err(Error::InvalidArgument("torus side m must be positive".into()));
    }
    let q = codec.alphabet() as u64;
    if codec.dim() == 1 {
        // closed walks of length m in the block graph are exactly the
        // m-periodic sequences, also when m < n
        let p = mat_pow(&transfer_matrix(codec, forbidden)?, m as u64);
        return Ok((0..p.len()).map(|i| p[i][i].clone()).sum());
    }
    let cells = m.pow(codec.dim() as u32);
    let total = q
        .checked_pow(cells as u32)
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::budget("torus assignments |A|^(m^d)", format!("{q}^{cells}"), budget))?;
    let torus = BoxRegion::cube(codec.dim(), m);
    let cube: Vec<Point> = codec.cube().points().collect();
    // wrapped window cell lists, one per torus position
    let slots: Vec<Vec<usize>> = torus
        .points()
        .map(|p| {
            cube.iter()
                .map(|o| {
                    let w: Vec<i64> = (&p + o).coords().iter().map(|c| c.rem_euclid(m as i64)).collect();
                    torus.index_of(&Point::new(w)).expect("wrapped into the torus")
                })
                .collect()
        })
        .collect();
    let count = (0..total)
        .into_par_iter()
        .filter(|&idx| {
            let mut x = idx;
            let cellsv: Vec<u64> = (0..cells)
                .map(|_| {
                    let s = x % q;
                    x /= q;
                    s
                })
                .collect();
            slots
                .iter()
                .all(|s| !forbidden.contains(s.iter().fold(0u64, |acc, &c| acc * q + cellsv[c])))
        })
        .count();
    Ok(BigUint::from(count))
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub method: String,
    pub label: String,
    pub k: usize,
    /// |locally admissible F_k-patterns|
    pub count: String,
    /// (1/k^d) log count; absent when the language is empty
    pub estimate: Option<f64>,
    pub status: String,
}

/// (1/k^d) log of the number of F_k-patterns all of whose F_n-windows
/// avoid ℱ; an upper-bound stand-in for the language count.
pub fn entropy_estimate(codec: &WindowCodec, forbidden: &ForbiddenSet, k: usize, budget: u64) -> Result<EntropyReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let q = codec.alphabet() as u64;
    let dim = codec.dim();
    let n = codec.n();
    let (count, method) = if k < n {
        (pow_biguint(q, (k.pow(dim as u32)) as u64), "no-windows")
    } else if dim == 1 {
        let p = mat_pow(&transfer_matrix(codec, forbidden)?, (k - n + 1) as u64);
        (p.iter().flatten().sum(), "transfer-matrix")
    } else {
        (admissible_count_exhaustive(codec, forbidden, k, budget)?, "exhaustive")
    };
    let volume = k.pow(dim as u32) as u64;
    let (estimate, status) = if count.is_zero() {
        (None, "empty")
    } else if count == pow_biguint(q, volume) {
        (Some((q as f64).ln()), "ok")
    } else {
        (Some(ln_biguint(&count) / volume as f64), "ok")
    };
    Ok(EntropyReport {
        method: method.into(),
        label: "locally-admissible count".into(),
        k,
        count: count.to_string(),
        estimate,
        status: status.into(),
    })
}

/// Brute-force count of F_k-patterns all of whose F_n-windows avoid ℱ, in
/// any dimension.
pub fn admissible_count_exhaustive(codec: &WindowCodec, forbidden: &ForbiddenSet, k: usize, budget: u64) -> Result<BigUint> {
    let q = codec.alphabet() as u64;
    let dim = codec.dim();
    let n = codec.n();
    let cells = k.pow(dim as u32);
    let total = q
        .checked_pow(cells as u32)
        .filter(|&t| t <= budget)
        .ok_or_else(|| Error::budget("F_k patterns |A|^(k^d)", format!("{q}^{cells}"), budget))?;
    if k < n {
        return Ok(BigUint::from(total));
    }
    let region = BoxRegion::cube(dim, k);
    let cube: Vec<Point> = codec.cube().points().collect();
    let slots: Vec<Vec<usize>> = BoxRegion::cube(dim, k - n + 1)
        .points()
        .map(|a| cube.iter().map(|o| region.index_of(&(&a + o)).expect("inside")).collect())
        .collect();
    let count = (0..total)
        .into_par_iter()
        .filter(|&idx| {
            let mut x = idx;
            let v: Vec<u64> = (0..cells)
                .map(|_| {
                    let s = x % q;
                    x /= q;
                    s
                })
                .collect();
            slots
                .iter()
                .all(|s| !forbidden.contains(s.iter().fold(0u64, |acc, &c| acc * q + v[c])))
        })
        .count();
    Ok(BigUint::from(count))
}

/// Histogram of φ over exhaustively enumerated forbidden sets, weighted by
/// probability, as exact rationals.
pub fn phi_distribution(members: &[GnMember], alpha: &Ratio) -> Result<BTreeMap<u64, BigRational>> {
    let rel = Relevant::new(members);
    let bits = rel.ranks.len();
    if bits > 24 {
        return Err(Error::budget("relevant windows for phi distribution", bits, 24));
    }
    let masks: Vec<u64> = rel.masks.iter().map(|m| m[0]).collect();
    let a = alpha.exact();
    let q = BigRational::one() - a;
    let mut hist: BTreeMap<(u64, usize), u64> = BTreeMap::new();
    for f in 0u64..(1 << bits) {
        let phi = masks.iter().filter(|&&m| m & f == 0).count() as u64;
        *hist.entry((phi, f.count_ones() as usize)).or_insert(0) += 1;
    }
    let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
    for ((phi, k), c) in hist {
        let w = pow_rational(a, (bits - k) as u64) * pow_rational(&q, k as u64) * BigRational::from_integer(c.into());
        *out.entry(phi).or_insert_with(BigRational::zero) += w;
    }
    Ok(out)
}

/// Float view of an exact probability.
pub fn as_f64(r: &BigRational) -> f64 {
    to_f64(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gn::cube_context;
    use crate::pattern::Pattern;

    fn model(alpha: &str, n: usize, seed: u64) -> RandomModel {
        RandomModel::new(1, 2, n, Ratio::parse(alpha).unwrap(), seed).unwrap()
    }

    fn rat(s: &str) -> BigRational {
        Ratio::parse(s).unwrap().exact().clone()
    }

    #[test]
    fn forbidden_sampling_extremes_and_mean() {
        let m = model("1", 3, 1);
        assert!(m.sample_forbidden(0).is_empty());
        let m = model("0", 3, 1);
        assert_eq!(m.sample_forbidden(5).len(), 8);
        let m = model("0.75", 3, 9);
        let total: u64 = (0..10_000).map(|t| m.sample_forbidden(t).len()).sum();
        let mean = total as f64 / 10_000.0;
        let sd = (8.0 * 0.25 * 0.75 / 10_000f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sd, "mean {mean}");
        assert_eq!(m.sample_forbidden(17), m.sample_forbidden(17));
    }

    #[test]
    fn sparse_sampling_has_right_density() {
        let m = RandomModel::new(1, 2, 30, Ratio::parse("0.999999").unwrap(), 3).unwrap();
        let f = m.sample_forbidden(0);
        assert!(matches!(f, ForbiddenSet::Sparse { .. }));
        let expected = (1u64 << 30) as f64 * 1e-6;
        assert!((f.len() as f64 - expected).abs() < 6.0 * expected.sqrt());
    }

    #[test]
    fn phi_examples() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let codec = ctx.codec();
        assert_eq!(phi(&members, &ForbiddenSet::empty(codec)), 28);
        assert_eq!(phi(&members, &ForbiddenSet::everything(codec).unwrap()), 0);
        let f = ForbiddenSet::from_patterns(codec, &[Pattern::from_digits("111").unwrap()]).unwrap();
        assert_eq!(phi(&members, &f), 14);
        // oracle: members whose cyclic word has no 111
        let avoid = members
            .iter()
            .filter(|m| {
                let w = &m.word;
                (0..7).all(|i| !(w[i] == 1 && w[(i + 1) % 7] == 1 && w[(i + 2) % 7] == 1))
            })
            .count();
        assert_eq!(avoid, 14);
        assert!(members.iter().any(|m| m.word == vec![0, 0, 0, 1, 0, 1, 1]
            && m.anchor_windows.iter().all(|&w| !f.contains(w))));
    }

    #[test]
    fn frozen_moments_formula_equals_exhaustive() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let v = ctx.v_counts(&members).unwrap();
        for (alpha, mean, var) in [
            ("1/2", "7/32", "4655/1024"),
            ("3/4", "15309/4096", "1301923287/16777216"),
            ("9/10", "33480783/2500000", "1105509239206911/6250000000000"),
        ] {
            let a = Ratio::parse(alpha).unwrap();
            let f = moments_formula(&ctx, &v, &a);
            let x = moments_exhaustive(&ctx, &members, &a, 1 << 20).unwrap();
            assert_eq!(f.mean, rat(mean));
            assert_eq!(f.variance, rat(var));
            assert_eq!(f.mean, x.mean);
            assert_eq!(f.variance, x.variance);
        }
        let one = moments_formula(&ctx, &v, &Ratio::parse("1").unwrap());
        assert_eq!(one.mean, rat("28"));
        assert!(one.variance.is_zero());
        let zero = moments_formula(&ctx, &v, &Ratio::parse("0").unwrap());
        assert!(zero.mean.is_zero() && zero.variance.is_zero());
    }

    #[test]
    fn monte_carlo_moments_within_four_se() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let mc = moments_monte_carlo(&members, &model("3/4", 3, 5), 20_000).unwrap();
        let mean = 15309.0 / 4096.0;
        let var = 1301923287.0 / 16777216.0;
        assert!((mc.mean - mean).abs() < 4.0 * mc.mean_std_error);
        assert!((mc.variance - var).abs() < 4.0 * mc.variance_std_error);
    }

    #[test]
    fn concentration_exact_and_monte_carlo() {
        let ctx = cube_context(1, 7, 3, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let m = model("0.9", 3, 2);
        let c = Ratio::parse("0.1").unwrap();
        let rep = concentration(&ctx, &members, &m, &c, &ConcentrationOptions::default()).unwrap();
        let exact = as_f64(rep.exact.as_ref().unwrap());
        assert!((exact - 0.52612659).abs() < 1e-8, "{exact}");
        assert!(rep.wilson99.0 <= exact && exact <= rep.wilson99.1);

        // φ distribution oracle
        let dist = phi_distribution(&members, &m.alpha).unwrap();
        let tail: BigRational = dist.range(7..).map(|(_, p)| p.clone()).sum();
        assert_eq!(&tail, rep.exact.as_ref().unwrap());

        let one = concentration(&ctx, &members, &model("1", 3, 0), &c, &ConcentrationOptions { trials: 100, ..Default::default() }).unwrap();
        assert_eq!(one.hits, 100);
    }

    #[test]
    fn branch_and_bound_matches_exhaustive() {
        let ctx = cube_context(1, 9, 4, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let m = model("0.9", 4, 0);
        for t in [1, 20, 40, 80, 126] {
            let (naive, how) = exact_tail(&members, &m, t, u64::MAX).unwrap();
            assert_eq!(how, "exhaustive");
            let rel = Relevant::new(&members);
            let masks: Vec<u64> = rel.masks.iter().map(|x| x[0]).collect();
            let hist = BranchAndBound::new(&masks, rel.ranks.len(), t).run(u64::MAX).unwrap();
            let a = m.alpha.exact();
            let q = BigRational::one() - a;
            let mut p = BigRational::zero();
            for (k, row) in hist.iter().enumerate() {
                for (f, &c) in row.iter().enumerate() {
                    p += pow_rational(a, k as u64) * pow_rational(&q, f as u64) * BigRational::from_integer(c.into());
                }
            }
            assert_eq!(p, naive, "t={t}");
        }
    }

    #[test]
    fn survival_examples() {
        let a = Ratio::parse("1/3").unwrap();
        let b1 = LatticeBasis::cube(1, 1).unwrap();
        let r = survival_probability(&b1, &[0], 4, &a).unwrap();
        assert_eq!(r.probability, rat("1/3"));
        assert_eq!(r.orbit, 1);
        let b2 = LatticeBasis::cube(1, 2).unwrap();
        let r = survival_probability(&b2, &[0, 1], 2, &a).unwrap();
        assert_eq!(r.probability, rat("1/9"));
        assert!(r.saturated);
        let b3 = LatticeBasis::cube(1, 3).unwrap();
        let r = survival_probability(&b3, &[0, 0, 1], 1, &a).unwrap();
        assert_eq!((r.windows, r.orbit), (2, 3));
        assert_eq!(r.probability, rat("1/9"));
        assert!(!r.saturated);
        // a 6-periodic presentation of a 2-periodic point
        let b6 = LatticeBasis::cube(1, 6).unwrap();
        let r = survival_probability(&b6, &[0, 1, 0, 1, 0, 1], 3, &a).unwrap();
        assert_eq!((r.windows, r.orbit), (2, 2));
    }

    #[test]
    fn torus_examples() {
        let codec = WindowCodec::new(1, 2, 2).unwrap();
        let f = ForbiddenSet::from_patterns(&codec, &[Pattern::from_digits("11").unwrap()]).unwrap();
        assert_eq!(torus_count(&codec, &f, 4, 1 << 20).unwrap(), BigUint::from(7u32));
        assert_eq!(torus_count(&codec, &ForbiddenSet::empty(&codec), 10, 0).unwrap(), BigUint::from(1024u32));
        // brute force oracle including m < n
        let codec3 = WindowCodec::new(1, 3, 2).unwrap();
        let f3 = ForbiddenSet::from_patterns(&codec3, &[Pattern::from_digits("010").unwrap()]).unwrap();
        for m in 1..=6usize {
            let oracle = (0..1u32 << m)
                .filter(|x| {
                    (0..m).all(|i| {
                        let w: Vec<u8> = (0..3).map(|j| ((x >> ((i + j) % m)) & 1) as u8).collect();
                        w != [0, 1, 0]
                    })
                })
                .count();
            assert_eq!(torus_count(&codec3, &f3, m, 0).unwrap(), BigUint::from(oracle), "m={m}");
        }
        // d = 2 agrees with the full-shift count
        let c2 = WindowCodec::new(2, 2, 2).unwrap();
        assert_eq!(torus_count(&c2, &ForbiddenSet::empty(&c2), 3, 1 << 10).unwrap(), BigUint::from(512u32));
        assert!(torus_count(&c2, &ForbiddenSet::empty(&c2), 5, 1 << 10).is_err());
    }

    #[test]
    fn entropy_examples() {
        let codec = WindowCodec::new(1, 2, 2).unwrap();
        let free = entropy_estimate(&codec, &ForbiddenSet::empty(&codec), 50, 0).unwrap();
        assert_eq!(free.estimate, Some(2f64.ln()));
        let f = ForbiddenSet::from_patterns(&codec, &[Pattern::from_digits("11").unwrap()]).unwrap();
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let e1 = entropy_estimate(&codec, &f, 100, 0).unwrap().estimate.unwrap();
        let e2 = entropy_estimate(&codec, &f, 2000, 0).unwrap().estimate.unwrap();
        assert!((e2 - golden).abs() < (e1 - golden).abs());
        assert!((e2 - golden).abs() < 1e-3);
        let all = ForbiddenSet::everything(&codec).unwrap();
        let empty = entropy_estimate(&codec, &all, 5, 0).unwrap();
        assert_eq!(empty.status, "empty");
        assert!(empty.estimate.is_none());
        let c2 = WindowCodec::new(2, 2, 2).unwrap();
        let e = entropy_estimate(&c2, &ForbiddenSet::empty(&c2), 3, 1 << 10).unwrap();
        assert_eq!(e.estimate, Some(2f64.ln()));
        assert_eq!(e.label, "locally-admissible count");
    }
}
