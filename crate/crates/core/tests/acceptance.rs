//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Two criteria cannot be met at their stated parameters (see the
//! `unattainable` notes); they are run as stated, print FAIL, and are
//! followed by a supplementary instance that exercises the same checkers.
//! Only unexpected failures make this target exit nonzero.

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::Rng;
use randsft::embedding::{build_dprime, build_embedding, select_gprime, select_gprime_sampled, MarkedSubshift};
use randsft::experiments::{run, ExperimentConfig};
use randsft::factor_markers::{
    build_marker_set, check_condition_i, check_condition_ii, check_condition_iii, FactorParams, TargetModel,
};
use randsft::geometry::{chebyshev, Point};
use randsft::gn::{cube_context, GnContext};
use randsft::lattice::{check_derived_properties, LatticeBasis, LatticeContext};
use randsft::numeric::{pow_biguint, stream_rng, to_f64, Ratio};
use randsft::pattern::WindowCodec;
use randsft::random_sft::{
    admissible_count_exhaustive, concentration, entropy_estimate, exact_tail, moments_exhaustive, moments_formula,
    periodic_window_ranks, survival_frequency, survival_probability, ConcentrationOptions, ForbiddenSet,
    RandomModel,
};

struct Gate {
    unexpected: usize,
}

impl Gate {
    fn report(&mut self, id: &str, name: &str, pass: bool, detail: String, unattainable: Option<&str>) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:<3} {name}: {detail}");
        match (pass, unattainable) {
            (false, Some(why)) => println!("         unattainable as stated: {why}"),
            (false, None) => self.unexpected += 1,
            _ => {}
        }
    }
}

fn rat(s: &str) -> BigRational {
    Ratio::parse(s).unwrap().exact().clone()
}

fn criterion_1(g: &mut Gate) {
    let start = Instant::now();
    let ctx = cube_context(1, 7, 3, 2).unwrap();
    let members = ctx.enumerate().unwrap();
    let counts = ctx.v_counts(&members).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for a in ["1/2", "3/4", "9/10"] {
        let alpha = Ratio::parse(a).unwrap();
        let f = moments_formula(&ctx, &counts, &alpha);
        let x = moments_exhaustive(&ctx, &members, &alpha, 1 << 20).unwrap();
        ok &= x.sets == Some(256) && f.mean == x.mean && f.variance == x.variance;
        parts.push(format!("α={a}: E={} Var={}", f.mean, f.variance));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    g.report(
        "1",
        "moment formula = exhaustive over 2^8 sets",
        ok,
        format!("{} ({secs:.2}s)", parts.join("; ")),
        None,
    );
}

/// Λ-periodic patterns on D by brute force over 𝒜^D.
fn periodic_patterns_brute(ctx: &GnContext) -> u64 {
    let lat = ctx.lattice();
    let d = lat.d_set().points();
    let pairs: Vec<(usize, usize)> = (0..d.len())
        .flat_map(|i| (i + 1..d.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| lat.basis().contains(&(&d[i] - &d[j])))
        .collect();
    (0u64..1 << d.len())
        .filter(|u| pairs.iter().all(|&(i, j)| (u >> i) & 1 == (u >> j) & 1))
        .count() as u64
}

fn criterion_2(g: &mut Gate) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, n) in [(7, 3), (7, 4), (9, 3), (9, 4), (11, 3), (11, 4), (17, 9), (19, 10)] {
        let ctx = cube_context(1, k, n, 2).unwrap();
        let g0 = ctx.g0_count();
        let identity = if k <= 11 {
            BigUint::from(periodic_patterns_brute(&ctx)) == g0
        } else {
            let classes: HashSet<Point> = ctx.lattice().d_set().points().iter().map(|p| ctx.lattice().reduce(p)).collect();
            pow_biguint(2, classes.len() as u64) == g0
        };
        let gn = BigUint::from(ctx.count().unwrap());
        let lb = ctx.lower_bound_check(&gn);
        ok &= identity && g0 == pow_biguint(2, k as u64) && lb.holds;
        parts.push(format!(
            "k={k},n={n}: |G0|={g0} |G|={gn} bound {}",
            if lb.bound_positive { "asserted" } else { "RHS≤0" }
        ));
    }
    // d = 2, |E| = 49: G_n⁰ by residue classes of D, G_n by sampling
    let ctx = cube_context(2, 7, 3, 2).unwrap();
    let classes: HashSet<Point> = ctx.lattice().d_set().points().iter().map(|p| ctx.lattice().reduce(p)).collect();
    let g0 = ctx.g0_count();
    let identity = pow_biguint(2, classes.len() as u64) == g0 && g0 == pow_biguint(2, 49);
    let s = ctx.sample(10_000, 2, 0).unwrap();
    let scale = 1u64 << 40;
    let lower = &g0 * BigUint::from((s.wilson99.0 * scale as f64).floor() as u64) / scale;
    let lb = ctx.lower_bound_check(&lower);
    ok &= identity && lb.holds && s.acceptances > 0;
    parts.push(format!(
        "d=2,k=7,n=3: |G0|=2^49, sampled rate {:.4} (99% lower {:.4}), certified |G|≥{lower}, bound {}",
        s.rate,
        s.wilson99.0,
        if lb.bound_positive { "asserted" } else { "RHS≤0" }
    ));
    g.report("2", "|G_n⁰| identity and |G_n| lower bound", ok, parts.join("; "), None);
}

fn criterion_3(g: &mut Gate) {
    let start = Instant::now();
    let alpha = Ratio::parse("9/10").unwrap();
    let c = Ratio::parse("1/10").unwrap();
    let ctx = cube_context(1, 7, 3, 2).unwrap();
    let members = ctx.enumerate().unwrap();
    let model = RandomModel::new(1, 2, 3, alpha.clone(), 2024).unwrap();
    let rep = concentration(&ctx, &members, &model, &c, &ConcentrationOptions::default()).unwrap();
    let exact = rep.exact.clone().unwrap();
    let p = to_f64(&exact);
    let in_ci = rep.wilson99.0 <= p && p <= rep.wilson99.1;
    let mut ok = in_ci && rep.exact_method.as_deref() == Some("exhaustive") && rep.trials == 10_000;
    let mut trend = vec![p];
    for n in [4usize, 5] {
        let k = 2 * n as i64 + 1;
        let ctx = cube_context(1, k, n, 2).unwrap();
        let members = ctx.enumerate().unwrap();
        let model = RandomModel::new(1, 2, n, alpha.clone(), 0).unwrap();
        let base = alpha.exact() * BigRational::from_integer(2.into());
        let threshold = c.exact() * randsft::numeric::pow_rational(&base, ctx.e_len() as u64);
        let t = threshold.ceil().to_integer().try_into().unwrap();
        let (pn, _) = exact_tail(&members, &model, t, 200_000_000).unwrap();
        trend.push(to_f64(&pn));
    }
    let monotone = trend.windows(2).all(|w| w[0] <= w[1]);
    let secs = start.elapsed().as_secs_f64();
    ok &= monotone && secs < 120.0;
    g.report(
        "3",
        "concentration: exact tail vs Monte Carlo, trend in n",
        ok,
        format!(
            "P(φ≥{})={} ≈ {p:.8}; MC {}/10000 CI [{:.4},{:.4}]; n=3,4,5: {:.6} {:.6} {:.6} ({secs:.1}s)",
            rep.threshold_count, exact, rep.hits, rep.wilson99.0, rep.wilson99.1, trend[0], trend[1], trend[2]
        ),
        None,
    );
}

fn criterion_4(g: &mut Gate) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, k, n) in [(1, 7, 3), (1, 9, 4), (2, 5, 2), (2, 7, 3), (3, 3, 1), (3, 5, 2)] {
        let lat = LatticeContext::build(LatticeBasis::cube(d, k).unwrap(), n, n).unwrap();
        let p = check_derived_properties(&lat);
        ok &= p.all_pass();
        parts.push(format!("d={d},k={k},n={n}:{}", if p.all_pass() { "ok" } else { "BAD" }));
    }
    for (d, k, n) in [(1, 6, 3), (1, 4, 2), (2, 4, 2), (3, 2, 1)] {
        let lat = LatticeContext::build(LatticeBasis::cube(d, k).unwrap(), n, n).unwrap();
        let p = check_derived_properties(&lat);
        ok &= !p.p4;
        parts.push(format!("d={d},k={k},n={n}:P4 fails"));
    }
    let mut checked = 0u64;
    let mut bad = 0u64;
    for t in 0..10_000u64 {
        let mut rng = stream_rng(4, 99, t);
        let d = rng.gen_range(1..=3usize);
        let n = rng.gen_range(1..=5i64);
        let p: Vec<i64> = (0..d).map(|_| rng.gen_range(-50..50)).collect();
        let near = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<i64> { p.iter().map(|x| x + rng.gen_range(-(n - 1)..n)).collect() };
        let s = near(&mut rng);
        let t2 = near(&mut rng);
        checked += 1;
        if chebyshev(&Point::new(s), &Point::new(t2)).unwrap() > 2 * n as u64 {
            bad += 1;
        }
    }
    ok &= bad == 0;
    parts.push(format!("overlapping-cube distance on {checked} triples: {bad} violations"));
    g.report("4", "lattice properties P3-P6", ok, parts.join(" "), None);
}

fn criterion_5(g: &mut Gate) {
    let ctx = cube_context(1, 7, 3, 2).unwrap();
    let u = ctx.check_uniqueness_exhaustive().unwrap();
    g.report(
        "5",
        "uniqueness of repeat completions",
        u.mode == "exhaustive" && u.violations == 0,
        format!(
            "{} pairs, {} cases, max completions {}, {} violations",
            u.pairs, u.cases, u.max_completions, u.violations
        ),
        None,
    );
}

fn criterion_6(g: &mut Gate) {
    let alpha = Ratio::parse("9/10").unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, word, n, expect, seed) in [(1i64, vec![0u8], 3usize, "9/10", 1u64), (2, vec![0, 1], 2, "81/100", 2)] {
        let basis = LatticeBasis::cube(1, k).unwrap();
        let r = survival_probability(&basis, &word, n, &alpha).unwrap();
        let codec = WindowCodec::new(1, n, 2).unwrap();
        let ranks = periodic_window_ranks(&basis, &word, &codec).unwrap();
        let model = RandomModel::new(1, 2, n, alpha.clone(), seed).unwrap();
        let (_, freq) = survival_frequency(&model, &ranks, 10_000);
        let p = to_f64(&r.probability);
        let sigma = (p * (1.0 - p) / 10_000.0).sqrt();
        let close = (freq - p).abs() <= 4.0 * sigma;
        ok &= r.probability == rat(expect) && close;
        parts.push(format!("{word:?}: exact {} MC {freq:.4} (4σ={:.4})", r.probability, 4.0 * sigma));
    }
    g.report("6", "survival probabilities", ok, parts.join("; "), None);
}

fn criterion_7(g: &mut Gate) {
    // as stated: k = 7, n = 3, |𝒜| = 4, exhaustive selection
    let ctx = cube_context(1, 7, 3, 4).unwrap();
    let dp = build_dprime(&ctx);
    let residues: HashSet<usize> = dp.d_indices.iter().map(|&i| ctx.lattice().eta_index(i)).collect();
    let f = RandomModel::new(1, 4, 3, Ratio::parse("19/20").unwrap(), 7).unwrap().sample_forbidden(0);
    let gp = select_gprime(&ctx, &dp, &f).unwrap();
    let size = gp.members.len();
    let x = MarkedSubshift::new(1, 7).unwrap();
    let built = build_embedding(&x, &ctx, gp);
    g.report(
        "7",
        "embedding at k=7, n=3, |A|=4",
        built.is_ok(),
        format!(
            "D′ meets {}/{} residues mod 7, so |G′| = {size} < |L_E(X)| = {}",
            residues.len(),
            ctx.e_len(),
            x.language_size()
        ),
        Some(
            "D′ = inner 2n-boundary of D covers every residue of E, so all members of a D′-class coincide; \
             no α and no synthetic G′ can reach 448",
        ),
    );

    // supplementary: k = 11 leaves 4 free residues, |𝒜| = 16
    let start = Instant::now();
    let ctx = cube_context(1, 11, 3, 16).unwrap();
    let dp = build_dprime(&ctx);
    let model = RandomModel::new(1, 16, 3, Ratio::parse("19/20").unwrap(), 1).unwrap();
    let f = model.sample_forbidden(0);
    let gp = select_gprime_sampled(&ctx, &dp, &f, 4, 1, 1 << 24).unwrap();
    let size = gp.members.len();
    let x = MarkedSubshift::new(1, 11).unwrap();
    let detail;
    let ok = match build_embedding(&x, &ctx, gp) {
        Ok(emb) => {
            let v = emb.verify(&f, 500, 1).unwrap();
            detail = format!(
                "|ℱ|={} |G′|={size} ≥ {}; well-defined ({} overlap cells), image valid ({} windows), \
                 injective {}+{} pairs ({:.1}s)",
                f.len(),
                x.language_size(),
                v.overlap_cells,
                v.image_valid.checked,
                v.injective_same_beta.checked,
                v.injective_different_beta.checked,
                start.elapsed().as_secs_f64()
            );
            v.all_pass() && v.injective_same_beta.checked == 500 && v.injective_different_beta.checked == 500
        }
        Err(e) => {
            detail = e.to_string();
            false
        }
    };
    g.report("7s", "embedding at k=11, n=3, |A|=16, α=19/20", ok, detail, None);
}

fn criterion_8(g: &mut Gate) {
    let params = FactorParams::new(1, 1, 3, Some(17)).unwrap();
    let y = TargetModel { alphabet: 2, g: 1 };

    let codec2 = WindowCodec::new(1, 3, 2).unwrap();
    let s = build_marker_set(&params, 2, &ForbiddenSet::empty(&codec2)).unwrap();
    let ci = check_condition_i(&s, &y);
    g.report(
        "8",
        "marker conditions at d=1, g=1, n=3, m=8, k=17, binary",
        !s.empty,
        format!("|G_n(ℱ)|={} so the marker set is empty; (i) M={} vs {}", s.g_n_f, ci.m, ci.threshold),
        Some("|E| = k−m ≥ 9 distinct binary 3-windows are required but only 8 exist, so G_n is empty for every k"),
    );

    // supplementary: ternary X, binary target
    let codec3 = WindowCodec::new(1, 3, 3).unwrap();
    let f = ForbiddenSet::empty(&codec3);
    let s = build_marker_set(&params, 3, &f).unwrap();
    let ci = check_condition_i(&s, &y);
    let cii = check_condition_ii(&s, &f, 200, 8).unwrap();
    let ciii = check_condition_iii(&s, 1 << 20, 8).unwrap();
    let structure = s.truncation_injective && s.class_bound && s.pigeonhole && s.cube_in_boundary && s.window_law;
    let ok = structure && cii.pass && ciii.literal.pass && ciii.pairs == (s.size() * s.size()) as u64;
    g.report(
        "8s",
        "marker conditions with |A_X|=3, |A_Y|=2",
        ok,
        format!(
            "|G_n|={} |G′|={} M={}; (iii) {} offsets × {} pairs, literal {} / coset {}; (ii) {} assemblies {}; \
             (i) M={} vs 2^{}={} → {}",
            s.g_n_f,
            s.g_prime,
            s.size(),
            ciii.offsets,
            ciii.pairs,
            if ciii.literal.pass { "pass" } else { "fail" },
            if ciii.coset.pass { "pass" } else { "fail" },
            cii.checked,
            if cii.pass { "pass" } else { "fail" },
            ci.m,
            ci.exponent,
            ci.threshold,
            if ci.pass { "PASS" } else { "FAIL (not required)" }
        ),
        None,
    );
}

fn criterion_9(g: &mut Gate) {
    let codec = WindowCodec::new(1, 2, 2).unwrap();
    let f = ForbiddenSet::from_ranks(&codec, [codec.encode(&[1, 1])]);
    let tm = entropy_estimate(&codec, &f, 20, 1 << 24).unwrap();
    let brute = admissible_count_exhaustive(&codec, &f, 20, 1 << 24).unwrap();
    let brute_site = randsft::numeric::ln_biguint(&brute) / 20.0;
    let tm_site = tm.estimate.unwrap();
    let mut ok = tm.method == "transfer-matrix" && tm.count == brute.to_string() && (tm_site - brute_site).abs() <= 1e-9;
    let mut parts = vec![format!("ℱ={{11}} k=20: count {} both ways, per-site {tm_site:.12} vs {brute_site:.12}", tm.count)];
    for q in [2usize, 3] {
        let codec = WindowCodec::new(1, 2, q).unwrap();
        let e = entropy_estimate(&codec, &ForbiddenSet::empty(&codec), 20, 1 << 24).unwrap();
        ok &= e.estimate == Some((q as f64).ln());
        parts.push(format!("ℱ=∅,|A|={q}: {}", e.estimate.unwrap()));
    }
    g.report("9", "entropy: transfer matrix vs exhaustive", ok, parts.join("; "), None);
}

fn criterion_10(g: &mut Gate) {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    let mut ok = !names.is_empty();
    let mut kinds = Vec::new();
    for path in &names {
        let cfg = ExperimentConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
        let a = serde_json::to_vec(&run(&cfg).0.payload).unwrap();
        let b = serde_json::to_vec(&run(&cfg).0.payload).unwrap();
        ok &= a == b && a != b"null";
        kinds.push(path.file_stem().unwrap().to_string_lossy().into_owned());
    }
    g.report(
        "10",
        "byte-identical payloads on re-run",
        ok,
        format!("{} configs: {}", names.len(), kinds.join(", ")),
        None,
    );
}

fn main() -> ExitCode {
    let mut gate = Gate { unexpected: 0 };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    criterion_10(&mut gate);
    if gate.unexpected > 0 {
        println!("acceptance: {} unexpected failure(s)", gate.unexpected);
        ExitCode::FAILURE
    } else {
        println!("acceptance: no unexpected failures");
        ExitCode::SUCCESS
    }
}
