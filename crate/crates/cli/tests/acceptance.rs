//! Acceptance checks, one PASS/FAIL line each. Runs as a plain binary so the
//! lines show up in `cargo test` output.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gicreg::optimizer::{grid_search, polish, random_refine_search, GridSpec, SearchBudget, SearchOptions};
use gicreg::oracle::{Term, ToeplitzOracle};
use gicreg::quadrature::{closed_form_ar, phi, FixedRule, QuadratureConfig};
use gicreg::schemes::{
    energy_identity_error, gaussian_mi, hk_baseline_region, sason_rates, segment_powers, theorem2_rates,
    theorem3_rates, ArmaFilter, ArmaSchemeParams, HkBaselineParams, HkGaussianModel, ModeWeighting, SasonParams,
};
use gicreg::spectra::{ar_is_stable, make_arma, make_cosine_series, ArmaSpectrum, Spectrum};
use gicreg::{ChannelParams, Frontier, SchemeId};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn lg(x: f64) -> f64 {
    x.log2()
}

fn ch(p1: f64, p2: f64, a12: f64, a21: f64) -> ChannelParams {
    ChannelParams::new(p1, p2, a12, a21).unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng) -> ChannelParams {
    ch(rng.gen_range(0.01..=20.0), rng.gen_range(0.01..=20.0), rng.gen_range(0.0..=4.0), rng.gen_range(0.0..=4.0))
}

fn random_sason(rng: &mut ChaCha8Rng) -> SasonParams {
    SasonParams::new(rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)).unwrap()
}

/// Mean of a 2π-periodic function on a dense uniform grid.
fn grid_mean(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    (0..n).map(|k| f(2.0 * PI * k as f64 / n as f64)).sum::<f64>() / n as f64
}

fn c1_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_adaptive, mut worst_fixed, mut worst_hand) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let rho = rng.gen_range(-0.99..=0.99);
        let p = 100.0 * (1.0 - rng.gen::<f64>());
        let s = make_arma(&[rho], &[], p).unwrap();
        let closed = closed_form_ar(rho, p).unwrap();
        // independent closed form: ½ log2 of the larger root of K² − χK + ρ² = 0
        let chi = 1.0 + rho * rho + (1.0 - rho * rho) * p;
        let hand = 0.5 * lg(0.5 * (chi + (chi * chi - 4.0 * rho * rho).sqrt()));
        let adaptive = phi(|w| s.density(w), &QuadratureConfig::adaptive(1e-12)).unwrap();
        let fixed = phi(|w| s.density(w), &QuadratureConfig::fixed(4096)).unwrap();
        worst_hand = worst_hand.max((closed - hand).abs());
        worst_adaptive = worst_adaptive.max((adaptive - closed).abs());
        worst_fixed = worst_fixed.max((fixed - closed).abs());
    }
    outcome(
        worst_adaptive <= 1e-9 && worst_fixed <= 1e-6 && worst_hand <= 1e-12,
        format!("max err adaptive {worst_adaptive:.2e} (<= 1e-9), fixed-4096 {worst_fixed:.2e} (<= 1e-6)"),
    )
}

fn c2_degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rule = FixedRule::new(4096).unwrap();
    let (mut worst3, mut worst2) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let c = random_channel(&mut rng);
        let p = random_sason(&mut rng);
        let s = sason_rates(&c, &p);
        let t3 =
            theorem3_rates(&c, &ArmaSchemeParams::tied(p, ArmaFilter::white(), ArmaFilter::white()).unwrap(), &rule)
                .unwrap();
        let flat: [Spectrum; 4] = std::array::from_fn(|_| make_cosine_series(&[0.0, 0.0], 1.0).unwrap().into());
        let t2 = theorem2_rates(&c, &p, &flat, &rule).unwrap();
        worst3 = worst3.max((t3.r1 - s.r1).abs()).max((t3.r2 - s.r2).abs());
        worst2 = worst2.max((t2.r1 - s.r1).abs()).max((t2.r2 - s.r2).abs());
    }
    outcome(worst3 <= 1e-9 && worst2 <= 1e-9, format!("max |diff| arma {worst3:.2e}, cosine {worst2:.2e} (<= 1e-9)"))
}

fn random_stable_ar(rng: &mut ChaCha8Rng, order: usize) -> Vec<f64> {
    loop {
        let ar: Vec<f64> = (0..order).map(|_| rng.gen_range(-0.9..=0.9)).collect();
        if ar_is_stable(&ar) {
            return ar;
        }
    }
}

fn c3_power_accounting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = rng.gen_range(0.01..=100.0);
        let order = rng.gen_range(0..=2);
        let ar = random_stable_ar(&mut rng, order);
        let ma: Vec<f64> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(-0.95..=0.95)).collect();
        let s = make_arma(&ar, &ma, p).unwrap();
        worst = worst.max((grid_mean(|w| s.density(w), 1 << 14) - p).abs() / p);
        let c = make_cosine_series(&[rng.gen_range(-0.3..=0.3), rng.gen_range(-0.2..=0.2)], p).unwrap();
        worst = worst.max((grid_mean(|w| c.density(w), 1 << 10) - p).abs() / p);
    }
    let mut worst_identity = 0.0f64;
    let mut exact = 0usize;
    let mut total = 0usize;
    for _ in 0..10_000 {
        let p = rng.gen_range(0.01..=100.0);
        let (frac, lambda) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let s = segment_powers(p, frac, lambda);
        let direct = (lambda * s.first + (1.0 - lambda) * s.second - p).abs() / p;
        worst_identity = worst_identity.max(energy_identity_error(p, frac, lambda) / p).max(direct);
        exact += usize::from(direct == 0.0);
        total += 1;
    }
    outcome(
        worst <= 1e-9 && worst_identity <= 4.0 * f64::EPSILON,
        format!(
            "max rel power err {worst:.2e} (<= 1e-9); energy identity max rel err {worst_identity:.1e} \
             ({exact}/{total} bit-exact, rest within 4 ulp)"
        ),
    )
}

fn c4_corner_point() -> Outcome {
    let c = ch(6.0, 1.0, 2.0, 0.0);
    let space = GridSpec::default_for(SchemeId::HkSim, 0);
    let budget = SearchBudget::new(1_000_000, 4, 4).unwrap();
    let opts = SearchOptions { rule_points: 256, ..SearchOptions::default() };
    let res = random_refine_search(&c, &space, &budget, None, &opts).unwrap();
    let f = polish(&c, &res.frontier, 4096, ModeWeighting::Derivation).unwrap().convex_hull().unwrap();
    let r1 = f.corner_query(0.4999);
    outcome((1.06..=1.10).contains(&r1), format!("R1 at R2 >= 0.4999 is {r1:.4} (want [1.06, 1.10])"))
}

fn asymmetric_channel() -> ChannelParams {
    ch(6.0, 1.0, 3.0, 0.1)
}

fn c5_fixed_filter_point() -> Outcome {
    let c = asymmetric_channel();
    let mut g = GridSpec::default_for(SchemeId::Arma, 0);
    for (n, v) in [("kappa1", 0.2605), ("kappa2", 0.9801), ("rho_x1", 0.7425), ("rho_x2", 0.4950)] {
        g.fix(n, v).unwrap();
    }
    let opts = SearchOptions { rule_points: 1024, ..SearchOptions::default() };
    let res = grid_search(&c, &g, &opts).unwrap();
    let f = polish(&c, &res.frontier, 4096, ModeWeighting::Derivation).unwrap();
    let best =
        f.points().iter().max_by(|a, b| (a.r1 - 1.181).min(a.r2 - 0.381).total_cmp(&(b.r1 - 1.181).min(b.r2 - 0.381)));
    let best = best.unwrap();
    outcome(
        best.r1 >= 1.181 && best.r2 >= 0.381,
        format!("best pair ({:.4}, {:.4}) vs (1.181, 0.381)", best.r1, best.r2),
    )
}

fn sason_frontier(c: &ChannelParams) -> Frontier {
    grid_search(c, &GridSpec::default_for(SchemeId::Sason, 0), &SearchOptions::default()).unwrap().frontier
}

/// Farthest point of `other` outside `base`, as text, with its margin.
fn witness(base: &Frontier, other: &Frontier) -> (String, f64) {
    match base.strictness_witness(other) {
        Some((w, t)) => (format!("({:.4}, {:.4})", w.r1, w.r2), t),
        None => ("none".into(), 0.0),
    }
}

fn c6_region_inclusion() -> Outcome {
    let c = asymmetric_channel();
    let sason = sason_frontier(&c);
    let mut zero = GridSpec::default_for(SchemeId::Arma, 0);
    for n in ["rho_x1", "rho_x2", "kappa1", "kappa2"] {
        zero.fix(n, 0.0).unwrap();
    }
    let on_zero = grid_search(&c, &zero, &SearchOptions { rule_points: 256, ..SearchOptions::default() }).unwrap();
    let space = GridSpec::with_step(SchemeId::Arma, 0, 0.01, 0.05);
    let budget = SearchBudget::new(300_000, 6, 4).unwrap();
    let searched = random_refine_search(
        &c,
        &space,
        &budget,
        None,
        &SearchOptions { rule_points: 512, ..SearchOptions::default() },
    )
    .unwrap();
    let searched = polish(&c, &searched.frontier, 4096, ModeWeighting::Derivation).unwrap();
    let r1 = on_zero.frontier.merge(&searched);
    let dominated = r1.dominates(&sason, 1e-9);
    let (w, margin) = witness(&sason, &r1);
    outcome(
        dominated && margin >= 0.01,
        format!("dominates at slack 1e-9: {dominated}; witness {w} margin {margin:.4} (>= 0.01)"),
    )
}

fn random_arma(rng: &mut ChaCha8Rng, power: f64) -> ArmaSpectrum {
    let order = rng.gen_range(0..=2);
    let ar = random_stable_ar(rng, order);
    let ma: Vec<f64> = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(-0.9..=0.9)).collect();
    make_arma(&ar, &ma, power).unwrap()
}

fn c7_toeplitz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut monotone = true;
    let mut draws = 0;
    while draws < 20 {
        let c = random_channel(&mut rng);
        let (s1, s2) = (random_arma(&mut rng, c.p1), random_arma(&mut rng, c.p2));
        if s1.is_white() && s2.is_white() {
            continue;
        }
        draws += 1;
        let o = ToeplitzOracle::new(&c, s1, s2).unwrap();
        for t in Term::ALL {
            let lim = o.limit_rate(t).unwrap();
            let err = |n| (o.finite_n_rate(t, n).unwrap() - lim).abs();
            let (e512, e1024, e2048) = (err(512), err(1024), err(2048));
            worst = worst.max(e1024);
            monotone &= e2048 < e512 || e512 <= 1e-13;
        }
    }
    let mut white = 0.0f64;
    for _ in 0..5 {
        let c = random_channel(&mut rng);
        let o =
            ToeplitzOracle::new(&c, ArmaSpectrum::white(c.p1).unwrap(), ArmaSpectrum::white(c.p2).unwrap()).unwrap();
        for t in Term::ALL {
            let lim = o.limit_rate(t).unwrap();
            for n in [1, 2, 17, 256, 1024, 2048] {
                white = white.max((o.finite_n_rate(t, n).unwrap() - lim).abs());
            }
        }
    }
    outcome(
        worst <= 2e-2 && monotone && white <= 1e-12,
        format!("max |err(1024)| {worst:.2e} (<= 2e-2); err(2048) < err(512): {monotone}; white max err {white:.1e}"),
    )
}

fn c8_baseline() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut rect = 0.0f64;
    let mut tin = 0.0f64;
    let mut mi = 0.0f64;
    for _ in 0..100 {
        let c = random_channel(&mut rng);
        let free = ch(c.p1, c.p2, 0.0, 0.0);
        let f = grid_search(&free, &GridSpec::default_for(SchemeId::HkBaseline, 0), &SearchOptions::default())
            .unwrap()
            .frontier
            .convex_hull()
            .unwrap();
        let (e1, e2) = (0.5 * lg(1.0 + c.p1), 0.5 * lg(1.0 + c.p2));
        rect = rect.max((f.max_r1() - e1).abs()).max((f.max_r2() - e2).abs());
        if !f.contains(e1 - 1e-9, e2 - 1e-9) {
            rect = f64::INFINITY;
        }

        let b = hk_baseline_region(&c, &HkBaselineParams::new(1.0, 1.0).unwrap()).unwrap();
        let (t1, t2) = (0.5 * lg(1.0 + c.p1 / (1.0 + c.a12 * c.p2)), 0.5 * lg(1.0 + c.p2 / (1.0 + c.a21 * c.p1)));
        let vs = gicreg::frontier::down_set_vertices(&b.constraints());
        tin = tin.max(if vs.len() == 1 { (vs[0].0 - t1).abs().max((vs[0].1 - t2).abs()) } else { f64::INFINITY });

        let (x1, x2) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
        let m = HkGaussianModel::new(&c, &HkBaselineParams::new(x1, x2).unwrap()).unwrap();
        use HkGaussianModel as M;
        let got = gaussian_mi(&[M::U1], &[M::Y1], &[M::V1, M::V2], m.joint()).unwrap();
        let want = 0.5 * lg(1.0 + x1 * c.p1 / (1.0 + c.a12 * x2 * c.p2));
        mi = mi.max((got - want).abs());
    }
    outcome(
        rect <= 1e-9 && tin <= 1e-9 && mi <= 1e-9,
        format!("rectangle err {rect:.1e}, TIN err {tin:.1e}, private-rate MI err {mi:.1e} (all <= 1e-9)"),
    )
}

fn c9_baseline_improvement() -> Outcome {
    let c = ch(1.0, 6.0, 0.1, 0.5);
    let base = grid_search(&c, &GridSpec::default_for(SchemeId::HkBaseline, 0), &SearchOptions::default())
        .unwrap()
        .frontier
        .convex_hull()
        .unwrap();
    let budget = SearchBudget::new(1_000_000, 9, 4).unwrap();
    let res = random_refine_search(
        &c,
        &GridSpec::default_for(SchemeId::HkCorollary, 0),
        &budget,
        None,
        &SearchOptions { rule_points: 256, ..SearchOptions::default() },
    )
    .unwrap();
    let cor = polish(&c, &res.frontier, 4096, ModeWeighting::Derivation).unwrap().convex_hull().unwrap();
    let (w, margin) = witness(&base, &cor);
    outcome(margin >= 0.005, format!("witness {w} outside the baseline by {margin:.4} (>= 0.005)"))
}

fn run_region(dir: &Path, tag: &str, threads: &str, extra: &[&str]) -> Vec<u8> {
    let out = dir.join(format!("{tag}.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_gicreg"))
        .args(["--threads", threads, "region", "--out"])
        .arg(&out)
        .args(extra)
        .status()
        .unwrap();
    assert!(status.success(), "region run failed: {extra:?}");
    std::fs::read(out).unwrap()
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 2] = [
        &[
            "--p1",
            "6",
            "--p2",
            "1",
            "--a12",
            "3",
            "--a21",
            "0.1",
            "--scheme",
            "arma",
            "--open-step",
            "0.5",
            "--step",
            "0.25",
            "--rule-points",
            "256",
        ],
        &[
            "--p1",
            "1",
            "--p2",
            "6",
            "--a12",
            "0.1",
            "--a21",
            "0.5",
            "--scheme",
            "hk-corollary",
            "--budget",
            "20000",
            "--seed",
            "5",
            "--rule-points",
            "256",
            "--hull",
        ],
    ];
    let mut same = true;
    for (i, args) in runs.iter().enumerate() {
        let a = run_region(dir.path(), &format!("r{i}a"), "1", args);
        let b = run_region(dir.path(), &format!("r{i}b"), "3", args);
        let c = run_region(dir.path(), &format!("r{i}c"), "2", args);
        same &= a == b && a == c && a.len() > 6;
    }
    outcome(same, format!("{} invocations byte-identical across --threads 1, 2, 3: {same}", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed-form agreement", c1_closed_form),
        ("degeneration to the white scheme", c2_degeneration),
        ("power accounting", c3_power_accounting),
        ("corner point", c4_corner_point),
        ("fixed-filter frontier point", c5_fixed_filter_point),
        ("region inclusion", c6_region_inclusion),
        ("toeplitz oracle", c7_toeplitz),
        ("baseline sanity", c8_baseline),
        ("improvement over the baseline", c9_baseline_improvement),
        ("determinism", c10_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|k| k != n) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {n:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
