//! Acceptance criteria. Runs as a plain binary (`harness = false`) so every
//! criterion prints a PASS/FAIL line; exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eh_sim::arrivals::{sample_trace, DistributionSpec, Seed};
use eh_sim::cli::run_cli;
use eh_sim::model::{execute, max_rate_slope, rate, upper_bound, EnergyTrace, SimConfig};
use eh_sim::montecarlo::{run_sweep, Method, MethodStats, SweepParam, SweepPlan, SweepPoint};
use eh_sim::opm::{opm_oracle, opm_schedule};
use eh_sim::policies::{save_blocks, Policy, PolicyKind, PolicyParams};

const TAU: f64 = 1e-9;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bits() -> SimConfig {
    SimConfig::default()
}

fn random_spec(rng: &mut ChaCha8Rng) -> DistributionSpec {
    let m = rng.random_range(0.1..25.0);
    match rng.random_range(0..5) {
        0 => DistributionSpec::Exponential { mean: m },
        1 => DistributionSpec::Bernoulli {
            peak: m,
            probability: rng.random_range(0.0..=1.0),
        },
        2 => DistributionSpec::Constant { value: m },
        3 => DistributionSpec::Uniform {
            low: 0.0,
            high: 2.0 * m,
        },
        _ => DistributionSpec::Empirical {
            samples: (0..rng.random_range(1..8))
                .map(|_| rng.random_range(0.0..2.0 * m))
                .collect(),
        },
    }
}

/// Criteria 1 and 2 share one fuzz corpus.
fn fuzz_corpus() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let cfg = bits();
    let mut pairs = 0usize;
    let mut jensen_worst = f64::NEG_INFINITY;
    let mut causality_worst = f64::NEG_INFINITY;
    let mut battery_min = f64::INFINITY;

    while pairs < 10_000 {
        let spec = random_spec(&mut rng);
        let horizon = rng.random_range(1..=200);
        let trace = sample_trace(&spec, horizon, Seed(rng.random())).unwrap();
        let eps = rng.random_range(0.0..0.2);
        let alpha = rng.random_range(0.1..0.9);
        let params = PolicyParams::from_mean(spec.mean(), eps, alpha).unwrap();
        let ub = upper_bound(&trace, &cfg);

        let mut schedules = Vec::new();
        for kind in PolicyKind::ALL {
            let policy = Policy::new(kind, params).unwrap();
            match execute(&trace, &policy, &cfg) {
                Ok(s) => schedules.push(s),
                Err(e) => return (Err(format!("{kind}: {e}")), Err("corpus aborted".into())),
            }
        }
        match opm_schedule(&trace).to_schedule(&trace, &cfg) {
            Ok(s) => schedules.push(s),
            Err(e) => return (Err(format!("opm: {e}")), Err("corpus aborted".into())),
        }

        for s in &schedules {
            pairs += 1;
            jensen_worst = jensen_worst.max(s.throughput() - ub);
            let (mut h, mut q) = (0.0, 0.0);
            for (e, p) in trace.arrivals().iter().zip(s.powers()) {
                h += e;
                q += p;
                causality_worst = causality_worst.max(q - h);
            }
            battery_min = s.batteries().iter().copied().fold(battery_min, f64::min);
        }
    }
    let elapsed = start.elapsed();

    let ac1 = check(
        jensen_worst <= TAU && elapsed < Duration::from_secs(10),
        format!("max(throughput - ub) = {jensen_worst:e}, {elapsed:?}"),
    )
    .map(|_| format!("{pairs} pairs, max(throughput - ub) = {jensen_worst:e}, {elapsed:?}"));
    let ac2 = check(
        causality_worst <= TAU && battery_min > -TAU,
        format!("max prefix overspend {causality_worst:e}, min battery {battery_min:e}"),
    )
    .map(|_| format!("max prefix overspend {causality_worst:e}, min battery {battery_min:e}"));
    (ac1, ac2)
}

fn asymptotic_optimality() -> Outcome {
    let cfg = bits();
    let spec = DistributionSpec::Exponential { mean: 10.0 };
    let trace = sample_trace(&spec, 100_000, Seed(2026)).map_err(|e| e.to_string())?;
    let params = PolicyParams::from_mean(10.0, 0.01, 0.5).unwrap();
    let r10 = rate(10.0, &cfg).unwrap();
    let mut report = Vec::new();
    for (kind, factor) in [
        (PolicyKind::Apa, 0.97),
        (PolicyKind::Bet, 0.97),
        (PolicyKind::Sat, 0.96),
    ] {
        let start = Instant::now();
        let s = execute(&trace, &Policy::new(kind, params).unwrap(), &cfg)
            .map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let t = s.throughput();
        check(
            t >= factor * r10 && elapsed < Duration::from_secs(5),
            format!("{kind} = {t} < {factor} x {r10} (or slow: {elapsed:?})"),
        )?;
        report.push(format!("{kind} {:.4} ({:.2}%)", t, 100.0 * t / r10));
    }
    Ok(format!("rate(10) = {r10:.4}: {}", report.join(", ")))
}

fn plan(param: SweepParam, values: Vec<f64>, horizon: usize) -> SweepPlan {
    SweepPlan {
        distribution: DistributionSpec::Exponential { mean: 10.0 },
        param,
        values,
        horizon,
        replications: 200,
        base_seed: 7,
        methods: Method::ALL.to_vec(),
        epsilon_rel: 0.01,
        sat_alpha: 0.5,
        config: bits(),
    }
}

fn stats(point: &SweepPoint, m: Method) -> &MethodStats {
    point.get(m).expect("method present")
}

/// Standard error of the paired difference `a − b` (common random numbers).
fn paired_stderr(a: &MethodStats, b: &MethodStats) -> f64 {
    let d: Vec<f64> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| x - y)
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn policy_ordering() -> Outcome {
    let res = run_sweep(&plan(SweepParam::Mean, vec![10.0], 500)).map_err(|e| e.to_string())?;
    let pt = &res.points[0];
    let (apa, bet, sat, opm) = (
        stats(pt, Method::Apa),
        stats(pt, Method::Bet),
        stats(pt, Method::Sat),
        stats(pt, Method::Opm),
    );
    let gap = |a: &MethodStats, b: &MethodStats| {
        (a.mean_throughput - b.mean_throughput, paired_stderr(a, b))
    };
    let (d1, s1) = gap(apa, bet);
    let (d2, s2) = gap(bet, sat);
    let (d3, s3) = gap(opm, apa);
    check(d1 >= -s1, format!("APA - BET = {d1} < -{s1}"))?;
    check(d2 >= -s2, format!("BET - SAT = {d2} < -{s2}"))?;
    check(d3 >= -s3, format!("OPM - APA = {d3} < -{s3}"))?;
    for s in &pt.stats {
        check(
            s.mean_throughput <= pt.upper_bound_mean + TAU,
            format!(
                "{} mean {} above UB {}",
                s.method, s.mean_throughput, pt.upper_bound_mean
            ),
        )?;
    }
    Ok(format!(
        "sat {:.4} <= bet {:.4} <= apa {:.4} <= opm {:.4} <= ub {:.4}",
        sat.mean_throughput,
        bet.mean_throughput,
        apa.mean_throughput,
        opm.mean_throughput,
        pt.upper_bound_mean
    ))
}

fn horizon_checks() -> (Outcome, Outcome) {
    let res = match run_sweep(&plan(SweepParam::Horizon, vec![50.0, 2000.0, 5000.0], 0)) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let at = |l: usize| res.points.iter().find(|p| p.horizon == l).unwrap();
    let (p50, p2000, p5000) = (at(50), at(2000), at(5000));

    let n50 = stats(p50, Method::Naive).mean_throughput;
    let s50 = stats(p50, Method::Sat).mean_throughput;
    let n2k = stats(p2000, Method::Naive).mean_throughput;
    let s2k = stats(p2000, Method::Sat).mean_throughput;
    let crossover = check(
        n50 > s50 && s2k > n2k,
        format!("L=50 naive {n50} vs sat {s50}; L=2000 naive {n2k} vs sat {s2k}"),
    )
    .map(|_| format!("L=50 naive {n50:.4} > sat {s50:.4}; L=2000 sat {s2k:.4} > naive {n2k:.4}"));

    let a = stats(p50, Method::Naive);
    let b = stats(p5000, Method::Naive);
    let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let diff = (a.mean_throughput - b.mean_throughput).abs();
    let flat = check(
        diff < 3.0 * combined,
        format!("|diff| = {diff} >= 3 x {combined}"),
    )
    .map(|_| {
        format!(
            "naive L=50 {:.4}, L=5000 {:.4}, |diff| {diff:.5} < {:.5}",
            a.mean_throughput,
            b.mean_throughput,
            3.0 * combined
        )
    });
    (crossover, flat)
}

fn sat_closed_form() -> Outcome {
    let cfg = bits();
    let mut worst: f64 = 0.0;
    for c in [0.5, 5.0, 10.0, 37.25] {
        let p = c * 0.99;
        let params = PolicyParams::new(p, c - p, 0.5).unwrap();
        for l in [10usize, 100, 1000] {
            let trace = EnergyTrace::new(vec![c; l]).unwrap();
            let s = execute(&trace, &Policy::new(PolicyKind::Sat, params).unwrap(), &cfg)
                .map_err(|e| e.to_string())?;
            let h = save_blocks(l, 0.5);
            let expected = (l - h) as f64 / (2.0 * l as f64) * (1.0 + p).log2();
            let err = (s.throughput() - expected).abs();
            worst = worst.max(err);
            check(err <= 1e-12, format!("c={c}, L={l}: error {err:e}"))?;
        }
    }
    Ok(format!("max |simulated - closed form| = {worst:e}"))
}

fn opm_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = bits();
    let step = 0.05;
    let slack = step / 2.0 * max_rate_slope(cfg.log_base);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0008);
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..50 {
        let l = rng.random_range(2..=5);
        let arrivals: Vec<f64> = (0..l)
            .map(|_| rng.random_range(0..=20) as f64 * step)
            .collect();
        let trace = EnergyTrace::new(arrivals.clone()).unwrap();
        let opm = opm_schedule(&trace)
            .to_schedule(&trace, &cfg)
            .map_err(|e| e.to_string())?
            .throughput();
        let oracle = opm_oracle(&trace, step, &cfg).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(oracle.throughput - opm);
        check(
            opm >= oracle.throughput - slack,
            format!("{arrivals:?}: opm {opm} < oracle {}", oracle.throughput),
        )?;
    }

    for _ in 0..1000 {
        let l = rng.random_range(1..=200);
        let spec = random_spec(&mut rng);
        let trace = sample_trace(&spec, l, Seed(rng.random())).unwrap();
        let s = opm_schedule(&trace);
        let p = s.powers();
        let a = trace.arrivals();
        check(
            p.windows(2).all(|w| w[0] <= w[1]),
            format!("not monotone on {a:?}"),
        )?;
        let total: f64 = a.iter().sum();
        let spent: f64 = p.iter().sum();
        check(
            (total - spent).abs() <= TAU * total.max(1.0),
            format!("not exhausted: {spent} vs {total}"),
        )?;
        for &c in s.change_points() {
            let h: f64 = a[..=c].iter().sum();
            let q: f64 = p[..=c].iter().sum();
            check(
                (h - q).abs() <= TAU * h.max(1.0),
                format!("change point {c} not tight: {q} vs {h}"),
            )?;
        }
        s.to_schedule(&trace, &cfg).map_err(|e| e.to_string())?;
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "max(oracle - opm) = {worst_gap:e} (slack {slack:.4}); 1000 staircases ok; {elapsed:?}"
    ))
}

fn sweep_csv(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    run_cli(args.iter().copied(), &mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

fn determinism() -> Outcome {
    let args = [
        "eh-sim",
        "sweep",
        "--dist",
        "exponential:10",
        "--L-sweep",
        "50,200",
        "--reps",
        "40",
        "--seed",
        "99",
    ];
    let a = sweep_csv(&args)?;
    let b = sweep_csv(&args)?;
    check(
        !a.is_empty() && a == b,
        "CSV output differs between invocations",
    )?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let (ac1, ac2) = fuzz_corpus();
    results.push(("AC1 Jensen dominance over fuzzed schedules", ac1));
    results.push(("AC2 causality and battery non-negativity", ac2));
    results.push((
        "AC3 asymptotic optimality at L = 1e5",
        asymptotic_optimality(),
    ));
    results.push(("AC4 policy ordering at L = 500", policy_ordering()));
    let (ac5, ac6) = horizon_checks();
    results.push(("AC5 naive/SAT crossover", ac5));
    results.push(("AC6 naive flat in L", ac6));
    results.push(("AC7 SAT closed form on constant traces", sat_closed_form()));
    results.push((
        "AC8 OPM oracle equivalence and staircase invariants",
        opm_oracle_equivalence(),
    ));
    results.push(("AC9 byte-identical sweep CSV", determinism()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
