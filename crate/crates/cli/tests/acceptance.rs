//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use divstruct::diversity::{ball_intersection_size, ConcaveH, DiversityModel, Family};
use divstruct::eval::{run_benchmark, Method, SuiteConfig, ORACLE_ACCURACY};
use divstruct::greedy::Fault;
use divstruct::inference::{
    cardinality_messages, for_each_labeling, map_exact, map_graphcut_binary, CardinalityFactor, HopAugmentation,
    DEFAULT_ENUM_CAP,
};
use divstruct::theory::{run_bound_suite, verify_lemma1, BoundSuiteConfig, WorstCaseInstance};
use divstruct::{FactorGraph, Labeling, PairwiseFactor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-9;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn labeling(rng: &mut ChaCha8Rng, n: usize, l: usize) -> Labeling {
    Labeling((0..n).map(|_| rng.random_range(0..l)).collect())
}

fn greedy_guarantee() -> Outcome {
    let cfg = BoundSuiteConfig {
        instances: 100,
        seed: 2024,
        families: vec![Family::LabelCost, Family::LabelTransition, Family::RegionConsistency],
        ..BoundSuiteConfig::default()
    };
    let start = Instant::now();
    let r = match run_bound_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("suite error: {e}")),
    };
    let took = start.elapsed();
    let max_n = r.cases.iter().map(|c| c.num_vars).max().unwrap_or(0);
    let pass = r.nemhauser_checked == 100 && r.nemhauser_passed == 100 && max_n <= 8 && took < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "{}/{} instances F >= (1-1/e) F_opt, min ratio {:.4}, n <= {max_n}, {:.1?}",
            r.nemhauser_passed, r.nemhauser_checked, r.min_ratio, took
        ),
    )
}

fn lemma1() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, &(n, m, eps)) in [(4, 2, 0.0), (4, 2, 0.6), (20, 4, 0.0), (12, 3, 0.25)].iter().enumerate() {
        let r = match WorstCaseInstance::new(n, m, eps).and_then(|inst| verify_lemma1(&inst, 20_000, 7 + i as u64)) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("({n},{m},{eps}) error: {e}")),
        };
        pass &= r.pass;
        if n <= 12 {
            pass &= r.exhaustive.is_some() && r.exhaustive_matches;
        }
        if (n, m) == (4, 2) && eps == 0.6 {
            pass &= r.exhaustive == Some(1.5);
        }
        parts.push(format!("({n},{m},{eps}) mean {:.4} vs {:.4}", r.empirical_mean, r.analytic));
    }
    outcome(pass, parts.join("; "))
}

fn lemma2_and_3() -> Outcome {
    let cfg = BoundSuiteConfig { seed: 11, ..BoundSuiteConfig::default() };
    let clean = match run_bound_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("suite error: {e}")),
    };
    let faulty = match run_bound_suite(&BoundSuiteConfig { fault: Some(Fault::WorstPickNoSlack), ..cfg }) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("fault suite error: {e}")),
    };
    let n = clean.cases.len();
    let pass = clean.pass && clean.lemma2_passed == n && clean.lemma3_passed == clean.lemma3_checked && !faulty.pass;
    outcome(
        pass,
        format!(
            "lemma 2 {}/{n}, lemma 3 {}/{}, fault detected: {}",
            clean.lemma2_passed, clean.lemma3_passed, clean.lemma3_checked, !faulty.pass
        ),
    )
}

fn random_submodular_binary(rng: &mut ChaCha8Rng, n: usize) -> FactorGraph {
    let unaries = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let mut pairwise = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                if rng.random_bool(0.5) {
                    pairwise.push(PairwiseFactor::potts(u, v, rng.random_range(0.0..1.0)));
                } else {
                    let (a, b, c) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    // s00 + s11 >= s01 + s10
                    let d = b + c - a + rng.random_range(0.0..1.0);
                    pairwise.push(PairwiseFactor::table(u, v, vec![vec![a, b], vec![c, d]]));
                }
            }
        }
    }
    FactorGraph::new(2, unaries, pairwise).expect("valid graph")
}

fn graphcut_vs_exact() -> std::result::Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for t in 0..200 {
        let n = rng.random_range(1..=16);
        let g = random_submodular_binary(&mut rng, n);
        let (y, s) = map_graphcut_binary(&g, None).map_err(|e| format!("instance {t}: {e}"))?;
        let (_, best) = map_exact(&g, &HopAugmentation::none(), DEFAULT_ENUM_CAP).map_err(|e| e.to_string())?;
        if (s - best).abs() > SLACK || (g.score_unchecked(&y.0) - s).abs() > SLACK {
            return Err(format!("instance {t}: graph cut {s} vs exact {best}"));
        }
    }
    Ok(200)
}

fn cardinality_vs_brute() -> std::result::Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for seed in 0..100 {
        let n = rng.random_range(1..=10);
        let l = if n <= 7 { rng.random_range(2..=3) } else { 2 };
        let reference = labeling(&mut rng, n, l);
        let table: Vec<f64> = (0..=n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let weight = rng.random_range(0.0..2.0);
        let incoming: Vec<Vec<f64>> = (0..n).map(|_| (0..l).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let f = CardinalityFactor::new(reference.clone(), table.clone(), weight).map_err(|e| e.to_string())?;
        let got = cardinality_messages(&f, &incoming).map_err(|e| e.to_string())?;
        let mut want = vec![vec![f64::NEG_INFINITY; l]; n];
        for_each_labeling(n, l, |y| {
            let ham = y.iter().zip(&reference.0).filter(|(a, b)| a != b).count();
            let total = weight * table[ham] + (0..n).map(|j| incoming[j][y[j]]).sum::<f64>();
            for i in 0..n {
                let v = total - incoming[i][y[i]];
                if v > want[i][y[i]] {
                    want[i][y[i]] = v;
                }
            }
        });
        for i in 0..n {
            for k in 0..l {
                if (got[i][k] - want[i][k]).abs() > SLACK {
                    return Err(format!("seed {seed}: message [{i}][{k}] {} vs {}", got[i][k], want[i][k]));
                }
            }
        }
    }
    Ok(100)
}

fn balls_vs_enumeration() -> std::result::Result<usize, String> {
    let mut checked = 0;
    for (n, l) in [(3, 2), (4, 3), (5, 4), (6, 3), (8, 2), (7, 5), (10, 4), (12, 3), (20, 2)] {
        let mut rng = ChaCha8Rng::seed_from_u64(33 + n as u64);
        let y = labeling(&mut rng, n, l);
        let distances: Vec<usize> = if n > 12 { vec![0, 1, 3, n / 2, n] } else { (0..=n).collect() };
        for m in distances {
            let mut other = y.0.clone();
            for (i, o) in other.iter_mut().enumerate().take(m) {
                *o = (y.0[i] + 1 + i % (l - 1)) % l;
            }
            // joint histogram of distances to both centers
            let mut hist = vec![vec![0u128; n + 1]; n + 1];
            for_each_labeling(n, l, |z| {
                let a = z.iter().zip(&y.0).filter(|(p, q)| p != q).count();
                let b = z.iter().zip(&other).filter(|(p, q)| p != q).count();
                hist[a][b] += 1;
            });
            for k in 0..=n.min(4) {
                let want: u128 = (0..=k).map(|a| (0..=k).map(|b| hist[a][b]).sum::<u128>()).sum();
                let got = ball_intersection_size(&y.0, &other, l, k);
                if got != Some(want) {
                    return Err(format!("n={n} L={l} m={m} k={k}: {got:?} vs {want}"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn compiled_potentials() -> std::result::Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut checked = 0;
    for family in Family::ALL {
        let (n, l) = (7, 3);
        let unaries = (0..n).map(|_| (0..l).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let pairwise = (0..n - 1).map(|i| PairwiseFactor::potts(i, i + 1, 0.3)).collect();
        let g = FactorGraph::new(l, unaries, pairwise).expect("valid graph");
        let model = match family {
            Family::RegionConsistency => {
                DiversityModel::region_consistency(vec![vec![0, 1, 2], vec![3, 4], vec![5, 6]], ConcaveH::Sqrt, 0.7)
            }
            Family::HammingBallSet => DiversityModel::hamming_set(2, 0.7),
            Family::HammingBallSmooth => DiversityModel::hamming_smooth(0.4, 0.7),
            other => DiversityModel::new(other).with_h(ConcaveH::Log1p).with_lambda(0.7),
        };
        let items: Vec<Labeling> = (0..3).map(|_| labeling(&mut rng, n, l)).collect();
        let state = model.state_from(&g, &items);
        let aug = model.compile(&g, &state).map_err(|e| format!("{family}: {e}"))?;
        for _ in 0..1000 {
            let y = labeling(&mut rng, n, l);
            let got = aug.evaluate(&y);
            let want = model.lambda * (model.gain(&g, &state, &y.0) + model.parsimony(&g, &y.0));
            if (got - want).abs() > SLACK {
                return Err(format!("{family}: compiled {got} vs {want}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

fn oracle_equivalences() -> Outcome {
    let results = [
        ("graph cut", graphcut_vs_exact()),
        ("cardinality", cardinality_vs_brute()),
        ("ball intersection", balls_vs_enumeration()),
        ("compiled potentials", compiled_potentials()),
    ];
    let pass = results.iter().all(|r| r.1.is_ok());
    let detail = results
        .iter()
        .map(|(name, r)| match r {
            Ok(c) => format!("{name} {c} ok"),
            Err(e) => format!("{name} FAILED {e}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn lower_bound_direction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for l in 2usize..=64 {
        let mut n = 1;
        while (l as u128).pow(n as u32) <= 1 << 12 {
            let g = FactorGraph::zeros(n, l);
            for _ in 0..50 {
                let model = DiversityModel::hamming_set(rng.random_range(1..=n.min(3)), 1.0);
                let items: Vec<Labeling> = (0..rng.random_range(1..=3)).map(|_| labeling(&mut rng, n, l)).collect();
                let state = model.state_from(&g, &items);
                let y = labeling(&mut rng, n, l);
                let diff = model.gain(&g, &state, &y.0) - model.exact_gain(&g, &state, &y.0);
                worst = worst.max(diff);
                checked += 1;
            }
            n += 1;
        }
    }
    outcome(worst <= SLACK, format!("{checked} cases, max(lb - exact) = {worst:.3e}"))
}

fn desk_suite() -> Outcome {
    let start = Instant::now();
    let report = match run_benchmark(&SuiteConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("benchmark error: {e}")),
    };
    let took = start.elapsed();
    let curve = |m: Method| report.curve(m, ORACLE_ACCURACY).expect("every method reported").values.clone();
    let random = *curve(Method::Random).last().expect("max_m >= 1");
    let mut monotone = true;
    let mut above_map = true;
    let mut above_random = true;
    let mut parts = Vec::new();
    for m in Method::ALL {
        let c = curve(m);
        monotone &= c.windows(2).all(|w| w[1] >= w[0]);
        if m.is_diverse() {
            let (first, last) = (c[0], *c.last().expect("nonempty"));
            above_map &= last > first;
            above_random &= last > random;
            parts.push(format!("{m} {first:.3}->{last:.3}"));
        }
    }
    let pass = monotone && above_map && above_random && took < Duration::from_secs(600);
    outcome(
        pass,
        format!(
            "(a) {monotone} (b) {above_map} (c) {above_random}; {}; random {random:.3}; {took:.1?}",
            parts.join(", ")
        ),
    )
}

fn cardinality_scaling() -> Outcome {
    let time = |n: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let reference = labeling(&mut rng, n, 2);
        let table: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = CardinalityFactor::new(reference, table, 1.0).expect("valid factor");
        let incoming: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        cardinality_messages(&f, &incoming).expect("valid messages");
        let start = Instant::now();
        for _ in 0..5 {
            std::hint::black_box(cardinality_messages(&f, &incoming).expect("valid messages"));
        }
        start.elapsed()
    };
    let small = time(1_000);
    let large = time(10_000);
    let ratio = large.as_secs_f64() / small.as_secs_f64().max(1e-12);
    outcome(ratio < 15.0, format!("n=1e3 {small:.2?}, n=1e4 {large:.2?}, ratio {ratio:.2}"))
}

fn bench_determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("tempdir: {e}")),
    };
    let run = |tag: &str| -> std::result::Result<Vec<u8>, String> {
        let csv = dir.path().join(format!("{tag}.csv"));
        let json = dir.path().join(format!("{tag}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_divstruct"))
            .args(["bench", "--smoke", "--seed", "9", "--csv"])
            .arg(&csv)
            .arg("--output")
            .arg(&json)
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("bench exited with {status}"));
        }
        std::fs::read(&csv).map_err(|e| e.to_string())
    };
    match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => outcome(a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("greedy (1-1/e) guarantee", greedy_guarantee),
        ("lemma 1 worst case", lemma1),
        ("lemma 2 / lemma 3 bounds", lemma2_and_3),
        ("oracle equivalences", oracle_equivalences),
        ("lower-bound direction", lower_bound_direction),
        ("desk suite properties", desk_suite),
        ("cardinality message scaling", cardinality_scaling),
        ("bench determinism", bench_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("[{}] {} {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
