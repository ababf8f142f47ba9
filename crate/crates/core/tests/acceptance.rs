//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! quantities and the wall time against each criterion's budget.
//!
//! A criterion listed in `KNOWN_FAILURES` still runs and still prints FAIL;
//! it does not fail the process, and it becomes an error if it starts passing.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use heatlab::chaos::{compare_with_fk, ChaosConfig};
use heatlab::estimate::mean_stderr;
use heatlab::fk::{
    fit_intermittency_exponents, reference_exponents, skorohod_moment, stratonovich_moment, variance_v_spectral,
    MomentConfig, NoiseKind, Sense, SweepPoint,
};
use heatlab::fk::InitialCondition;
use heatlab::kernels::{SpaceKernelSpec, TimeKernelSpec};
use heatlab::noise::{
    ensemble_second_moment, littlewood_paley_blocks, regularized_solution, NoiseField, NoiseGrid, NoiseSynth,
    SolutionConfig,
};
use heatlab::paths::{derive_seed, sample_paths, EnergyPlan, QuadratureRule};
use heatlab::presets;
use heatlab::simplex::{
    legall_partition, lemma1_bound, lemma1_lhs, simplex_integral_exact, simplex_integral_nested, SimplexSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the reason recorded alongside.
const KNOWN_FAILURES: &[(&str, &str)] = &[(
    "6b",
    "the stated closed form e^3 counts the off-diagonal pair twice; the 1/2 convention gives e^2 (line 6c)",
)];

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn check(id: &'static str, pass: bool, detail: String) -> Line {
    Line { id, pass, detail }
}

fn timed(id: &'static str, budget: Duration, f: impl FnOnce() -> Vec<Line>) -> Vec<Line> {
    let start = Instant::now();
    let mut lines = f();
    let took = start.elapsed();
    lines.push(check(id, took <= budget, format!("runtime {:.1}s (budget {}s)", took.as_secs_f64(), budget.as_secs())));
    lines
}

fn within(a: f64, b: f64, k: f64, se: f64) -> bool {
    (a - b).abs() <= k * se
}

fn c1_simplex() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for m in 1..=3 {
        for _ in 0..20 {
            let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-0.9..1.0)).collect();
            let t = rng.random_range(0.5..2.0);
            let spec = SimplexSpec::new(t, alpha).unwrap();
            let exact = simplex_integral_exact(&spec);
            let nested = simplex_integral_nested(&spec, 1e-10).unwrap();
            worst = worst.max(((exact - nested) / exact).abs());
        }
    }
    let pinned = simplex_integral_exact(&SimplexSpec::new(1.0, vec![-0.5, -0.5]).unwrap());
    vec![
        check("1", worst < 1e-6, format!("max rel err exact vs nested over 60 draws = {worst:.2e} (< 1e-6)")),
        check("1", (pinned - PI).abs() < 1e-12, format!("J_2(1, (-1/2, -1/2)) = {pinned:.15} vs pi")),
    ]
}

fn c2_lemma() -> Vec<Line> {
    let kernels = [("riesz(1,1)", SpaceKernelSpec::riesz(1.0, 1).unwrap()), ("lebesgue", SpaceKernelSpec::white(1).unwrap())];
    let mut all = true;
    let mut worst = f64::NEG_INFINITY;
    for (_, k) in &kernels {
        for n in 1..=3 {
            for &t in &[0.5, 1.0] {
                let lhs = lemma1_lhs(k, t, n, 20_000, 7 + n as u64, None).unwrap();
                for &big in &[1.0, 2.0, 4.0] {
                    let bound = lemma1_bound(k, t, n, big).unwrap();
                    worst = worst.max((lhs.mean + 3.0 * lhs.stderr) / bound);
                    all &= lhs.mean <= bound + 3.0 * lhs.stderr;
                }
            }
        }
    }
    let b = lemma1_bound(&kernels[1].1, 1.0, 2, 2.0).unwrap();
    vec![
        check("2", all, format!("lhs <= bound + 3 se on 36 rows x 2 kernels; max (lhs + 3 se)/bound = {worst:.4}")),
        check("2", (b - 28.0).abs() < 1e-9, format!("Lebesgue n=2, N=2, t=1 bound = {b}")),
    ]
}

fn c3_partition() -> Vec<Line> {
    let levels = 10u32;
    let rects = legall_partition(levels).unwrap();
    let den = 1u64 << levels;
    let boxes: Vec<_> = rects.iter().map(|r| r.at_level(levels)).collect();
    let mut disjoint = true;
    let mut inside = true;
    for (a, (ja, ia)) in boxes.iter().enumerate() {
        inside &= ja.1 <= ia.0 && ia.1 <= den;
        for (jb, ib) in &boxes[a + 1..] {
            let jo = ja.0.max(jb.0) < ja.1.min(jb.1);
            let io = ia.0.max(ib.0) < ia.1.min(ib.1);
            disjoint &= !(jo && io);
        }
    }
    let mut areas = true;
    for n in 1..=levels {
        // exact area over den²: Σ (j_hi - j_lo)(i_hi - i_lo) = den² (1 - 2^{-n}) / 2
        let num: u128 = boxes
            .iter()
            .zip(&rects)
            .filter(|(_, r)| r.n <= n)
            .map(|((j, i), _)| ((j.1 - j.0) as u128) * ((i.1 - i.0) as u128))
            .sum();
        let want = (den as u128).pow(2) / 2 - (den as u128).pow(2) / (1u128 << (n + 1));
        areas &= num == want;
        for &t in &[1.0, 2.5] {
            let a: f64 = rects.iter().filter(|r| r.n <= n).map(|r| r.area(t)).sum();
            areas &= (a - t * t / 2.0 * (1.0 - 2f64.powi(-(n as i32)))).abs() < 1e-12;
        }
    }
    vec![
        check("3", disjoint && inside, format!("{} rectangles pairwise disjoint inside the simplex (exact integers)", rects.len())),
        check("3", areas, "cumulative area (t^2/2)(1 - 2^-n) for n <= 10, t in {1, 2.5}, exact and float".into()),
    ]
}

fn c4_variance() -> Vec<Line> {
    let g = TimeKernelSpec::riesz_time(0.5).unwrap();
    let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
    let t = 1.0;
    let spectral = variance_v_spectral(&g, &l, t, 1e-10).unwrap();
    let plan = EnergyPlan::new(&g, &l, QuadratureRule::default(), t, 32).unwrap();
    let xs: Vec<f64> = (0..100_000u64)
        .map(|b| {
            let p = sample_paths(1, 1, t, 32, derive_seed(4, b), &[0.0]).unwrap();
            plan.energy(p.path(0), p.path(0), true).unwrap()
        })
        .collect();
    let mc = mean_stderr(&xs);
    vec![check(
        "4",
        within(spectral, mc.mean, 3.0, mc.stderr),
        format!("spectral {spectral:.5} vs path MC {:.5} +- {:.5} (1e5 bundles)", mc.mean, mc.stderr),
    )]
}

fn c5_chaos() -> Vec<Line> {
    let cases = [
        ("gaussian_test/constant", TimeKernelSpec::constant(1.0).unwrap(), SpaceKernelSpec::gaussian_test(1.0, 1).unwrap()),
        ("riesz(0.5, 0.5)", TimeKernelSpec::riesz_time(0.5).unwrap(), SpaceKernelSpec::riesz(0.5, 1).unwrap()),
    ];
    cases
        .into_iter()
        .map(|(name, g, l)| {
            let cfg = ChaosConfig::new(g, l, 0.5, 20_000, 32, 55);
            let r = compare_with_fk(6, &cfg, 20_000).unwrap();
            check(
                "5",
                r.z.abs() <= 3.0,
                format!(
                    "{name}: chaos N=6 {:.4} +- {:.4} vs FK k=2 {:.4} +- {:.4}, z = {:.2}",
                    r.partial.value, r.partial.stderr, r.fk_mean, r.fk_stderr, r.z
                ),
            )
        })
        .collect()
}

fn c6_trivial() -> Vec<Line> {
    let mut out = Vec::new();
    for p in presets::defaults() {
        let mut cfg = MomentConfig::new(p.gamma, p.lambda.clone(), 1, 1.0);
        cfg.samples = 200;
        let e = skorohod_moment(&cfg).unwrap();
        out.push(check(
            "6a",
            e.log_mean.abs() <= 3.0 * e.stderr_log,
            format!("preset {}: k=1 log_mean {:.3e} +- {:.3e}", p.name, e.log_mean, e.stderr_log),
        ));
    }
    let mut cfg = MomentConfig::new(TimeKernelSpec::constant(1.0).unwrap(), SpaceKernelSpec::constant_test(1.0, 1).unwrap(), 2, 1.0);
    cfg.sense = Sense::Stratonovich;
    cfg.samples = 100;
    let m = stratonovich_moment(&cfg).unwrap().mean().0;
    out.push(check("6b", (m - E.powi(3)).abs() < 1e-6, format!("constant kernels Stratonovich k=2 t=1: {m:.9} vs e^3 = {:.9}", E.powi(3))));
    out.push(check("6c", (m - E.powi(2)).abs() < 1e-6, format!("same run vs e^2 = {:.9} (1/2 diagonal convention)", E.powi(2))));
    out
}

fn c7_order_scaling() -> Vec<Line> {
    let p = presets::riesz(0.5, 0.5, 1).unwrap();
    let mut cfg = MomentConfig::new(p.gamma, p.lambda.clone(), 2, 1.0);
    cfg.samples = 5000;
    cfg.seed = 70;
    let sk = skorohod_moment(&cfg).unwrap();
    cfg.sense = Sense::Stratonovich;
    cfg.seed = 71;
    let st = stratonovich_moment(&cfg).unwrap();
    let comb = (sk.stderr_log.powi(2) + st.stderr_log.powi(2)).sqrt();
    let mut out = vec![check(
        "7",
        st.log_mean >= sk.log_mean - 3.0 * comb,
        format!("log E u^2: Stratonovich {:.4} >= Skorohod {:.4} (combined se {:.4})", st.log_mean, sk.log_mean, comb),
    )];
    let energies = |t: f64, seed: u64| -> Vec<f64> {
        let plan = EnergyPlan::new(&p.gamma, &p.lambda, QuadratureRule::default(), t, 32).unwrap();
        (0..20_000u64)
            .map(|b| {
                let bn = sample_paths(2, 1, t, 32, derive_seed(seed, b), &[0.0]).unwrap();
                plan.energy(bn.path(0), bn.path(1), false).unwrap()
            })
            .collect()
    };
    let t: f64 = 2.0;
    let s = t.powf(2.0 - 0.5 - 0.25);
    let it = energies(t, 72);
    let i1: Vec<f64> = energies(1.0, 73).iter().map(|v| v * s).collect();
    for (m, name) in [(1, "first"), (2, "second")] {
        let a = mean_stderr(&it.iter().map(|v| v.powi(m)).collect::<Vec<_>>());
        let b = mean_stderr(&i1.iter().map(|v| v.powi(m)).collect::<Vec<_>>());
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        out.push(check(
            "7",
            within(a.mean, b.mean, 3.0, se),
            format!("{name} moment of I_2 {:.4} vs 2^1.25 I_1 {:.4} (combined se {:.4})", a.mean, b.mean, se),
        ));
    }
    out
}

fn c8_intermittency() -> Vec<Line> {
    let p = presets::riesz(0.5, 0.5, 1).unwrap();
    let ts = [0.5, 1.0, 2.0, 4.0];
    let ks = [2usize, 3, 4];
    let mut table = Vec::new();
    for &t in &ts {
        for &k in &ks {
            let mut cfg = MomentConfig::new(p.gamma, p.lambda.clone(), k, t);
            cfg.samples = 4000;
            cfg.seed = 800 + k as u64;
            let e = skorohod_moment(&cfg).unwrap();
            table.push(SweepPoint { t, k, log_mean: e.log_mean, stderr_log: e.stderr_log });
        }
    }
    let fit = fit_intermittency_exponents(&table).unwrap();
    let (r1, r2) = reference_exponents(&p.gamma, &p.lambda, NoiseKind::TimeDependent);
    let at = |ti: usize, ki: usize| table[ti * ks.len() + ki];
    let ok = |a: SweepPoint, b: SweepPoint| b.log_mean >= a.log_mean - 3.0 * (a.stderr_log.powi(2) + b.stderr_log.powi(2)).sqrt();
    let mono_t = (0..ks.len()).all(|ki| (1..ts.len()).all(|ti| ok(at(ti - 1, ki), at(ti, ki))));
    let mono_k = (0..ts.len()).all(|ti| (1..ks.len()).all(|ki| ok(at(ti, ki - 1), at(ti, ki))));
    vec![
        check(
            "8",
            (1.8..=3.0).contains(&fit.kappa2),
            format!("fitted kappa2 = {:.3} in [1.8, 3.0] (reference {r2:.4}); kappa1 = {:.3} (reference {r1:.4})", fit.kappa2, fit.kappa1),
        ),
        check("8", mono_t && mono_k, format!("log-moment monotone in t: {mono_t}, in k: {mono_k}")),
    ]
}

fn c9_littlewood_paley() -> Vec<Line> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for shape in [vec![64], vec![512], vec![32, 32]] {
        let n: usize = shape.iter().product();
        for _ in 0..5 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = littlewood_paley_blocks(&f, &shape, 0.1).unwrap();
            let r = b.reconstruct();
            worst = worst.max(r.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
    }
    let n = 512;
    let dx = 2.0 * PI / n as f64;
    let mut localized = true;
    for m in [1usize, 2, 3, 5, 12, 40, 100, 200] {
        let f: Vec<f64> = (0..n).map(|i| (m as f64 * i as f64 * dx).sin()).collect();
        let b = littlewood_paley_blocks(&f, &[n], dx).unwrap();
        let energy: Vec<f64> = b.blocks.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
        let peak = (0..energy.len()).max_by(|&a, &c| energy[a].total_cmp(&energy[c])).unwrap();
        let total: f64 = energy.iter().sum();
        let off: f64 = energy.iter().enumerate().filter(|(i, _)| i.abs_diff(peak) > 1).map(|(_, e)| e).sum();
        localized &= off <= 1e-20 * total;
    }
    let g = TimeKernelSpec::riesz_time(0.5).unwrap();
    let l = SpaceKernelSpec::riesz(0.5, 1).unwrap();
    let grid = NoiseGrid::new(32, 1.0 / 32.0, 64, 2.0 * PI / 64.0, 1).unwrap();
    let synth = NoiseSynth::new(&g, &l, grid, 2.0 * grid.dx, 2.0 * grid.dt).unwrap();
    let lags: [(usize, usize); 10] = [(0, 0), (0, 1), (0, 3), (0, 10), (1, 0), (2, 0), (5, 0), (1, 1), (3, 4), (8, 16)];
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); lags.len()];
    for r in 0..200u64 {
        let f = synth.sample(derive_seed(99, r));
        for (li, &(lt, lx)) in lags.iter().enumerate() {
            let mut acc = 0.0;
            for it in 0..grid.nt {
                for ix in 0..grid.nx {
                    let a = f.values[it * grid.nx + ix];
                    let b = f.values[((it + lt) % grid.nt) * grid.nx + (ix + lx) % grid.nx];
                    acc += a * b;
                }
            }
            per[li].push(acc / grid.len() as f64);
        }
    }
    let mut worst_z: f64 = 0.0;
    for (li, &(lt, lx)) in lags.iter().enumerate() {
        let e = mean_stderr(&per[li]);
        worst_z = worst_z.max((e.mean - synth.covariance(lt, &[lx])).abs() / e.stderr);
    }
    vec![
        check("9", worst < 1e-10, format!("max reconstruction error {worst:.2e} (< 1e-10)")),
        check("9", localized, "single Fourier modes confined to the peak level and its neighbours".into()),
        check("9", worst_z <= 4.0, format!("covariance at 10 lags, 200 realizations: max |z| = {worst_z:.2} (<= 4)")),
    ]
}

fn c10_solution() -> Vec<Line> {
    let p = presets::riesz(0.5, 0.5, 1).unwrap();
    let t = 0.25;
    let (nx, lb, nt) = (128usize, 8.0, 64usize);
    let h = lb / nx as f64;
    let dt = 2.0 * t / nt as f64;
    let grid = NoiseGrid::new(nt, dt, nx, h, 1).unwrap();
    let u0 = InitialCondition::GaussianBump { center: vec![0.0], width: 1.0 };
    let zero = NoiseField::zeros(grid, p.gamma, p.lambda.clone());
    let synth = NoiseSynth::new(&p.gamma, &p.lambda, grid, h, dt).unwrap();
    let field = synth.sample(1);
    let at0 = SolutionConfig {
        t_list: vec![0.0],
        x_list: vec![vec![0.0], vec![0.7]],
        u0: u0.clone(),
        inner_samples: 8,
        steps: 8,
        seed: 3,
        workers: 0,
    };
    let s0 = regularized_solution(&field, &at0).unwrap();
    let exact0 = s0.log_u == vec![u0.ln_eval(&[0.0]), u0.ln_eval(&[0.7])];
    let sz = regularized_solution(
        &zero,
        &SolutionConfig { t_list: vec![0.1, t], u0: InitialCondition::One, ..at0.clone() },
    )
    .unwrap();
    let exactz = sz.log_u.iter().all(|&v| v == 0.0);

    let mut cfg = MomentConfig::new(p.gamma, p.lambda.clone(), 2, t);
    cfg.sense = Sense::Stratonovich;
    cfg.samples = 20_000;
    let (pred, pred_se) = stratonovich_moment(&cfg).unwrap().mean();
    let mut ms = Vec::new();
    for m in [4.0, 2.0, 1.0] {
        let s = NoiseSynth::new(&p.gamma, &p.lambda, grid, m * h, m * dt).unwrap();
        ms.push(ensemble_second_moment(&s, &InitialCondition::One, t, &[0.0], 400, 200, 32, 10).unwrap());
    }
    let gaps: Vec<f64> = ms.iter().map(|m| (m.mean - pred).abs()).collect();
    let trend = gaps.windows(2).all(|w| w[1] < w[0]);
    vec![
        check("10", exact0 && exactz, format!("t=0 gives ln u0 exactly: {exact0}; zero field gives u = 1 exactly: {exactz}")),
        check(
            "10",
            trend,
            format!(
                "E_W[u^2] at eps = 4h, 2h, h: {:.3} +- {:.3}, {:.3} +- {:.3}, {:.3} +- {:.3}; FK Stratonovich k=2 {:.3} +- {:.3}",
                ms[0].mean, ms[0].stderr, ms[1].mean, ms[1].stderr, ms[2].mean, ms[2].stderr, pred, pred_se
            ),
        ),
    ]
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let runs: Vec<(&str, Duration, fn() -> Vec<Line>)> = vec![
        ("1", secs(10), c1_simplex),
        ("2", secs(120), c2_lemma),
        ("3", secs(1), c3_partition),
        ("4", secs(300), c4_variance),
        ("5", secs(600), c5_chaos),
        ("6", secs(120), c6_trivial),
        ("7", secs(600), c7_order_scaling),
        ("8", secs(1800), c8_intermittency),
        ("9", secs(600), c9_littlewood_paley),
        ("10", secs(1800), c10_solution),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut unexpected = 0;
    for (id, budget, f) in runs {
        if filter.as_deref().is_some_and(|w| w != id) {
            continue;
        }
        for line in timed(id, budget, f) {
            let known = KNOWN_FAILURES.iter().find(|(k, _)| *k == line.id);
            let status = if line.pass { "PASS" } else { "FAIL" };
            match (line.pass, known) {
                (false, Some((_, why))) => println!("{status} criterion {}: {} [known: {why}]", line.id, line.detail),
                (true, Some(_)) => {
                    unexpected += 1;
                    println!("{status} criterion {}: {} [listed as a known failure but passed]", line.id, line.detail);
                }
                (false, None) => {
                    unexpected += 1;
                    println!("{status} criterion {}: {}", line.id, line.detail);
                }
                (true, None) => println!("{status} criterion {}: {}", line.id, line.detail),
            }
        }
    }
    if unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
