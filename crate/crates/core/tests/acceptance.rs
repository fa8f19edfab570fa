//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one `[PASS]`/`[FAIL]` line per criterion; exits non-zero if any fails.
//!
//! Criterion 10 (α₀ at T = 2000) is long-running and only executes when
//! `ACCEPTANCE_LONG=1` is set.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use interval_regret::baselines::ExpertEnsemble;
use interval_regret::calibration::{estimate_alpha0, mc_mean_payoff, CalibrationConfig};
use interval_regret::experts::{
    bits_to_arm_policy, experts_payoff, experts_to_bits, one_sided_reduction, ArmPolicy,
    ExpertsInstance,
};
use interval_regret::payoff::{
    aligned_payoff_value, payoff_bruteforce_oracle, payoff_dp, payoff_value,
};
use interval_regret::predictor::{
    aligned_precompute, mc_precompute, run_game, ExactPredictor, Predictor,
};
use interval_regret::rng;
use interval_regret::sequence::{aligned_decompose, alignment_constant, Interval};
use interval_regret::{Alpha, Sequence};
use rand::Rng;

/// Outcome of one criterion: whether it held, and the measured numbers.
struct Check {
    passed: bool,
    detail: String,
}

/// Id, name, runner, and whether it runs by default.
type Criterion = (u32, &'static str, fn() -> Check, bool);

fn check(passed: bool, detail: String) -> Check {
    Check { passed, detail }
}

fn alpha(a: f64) -> Alpha {
    Alpha::new(a).unwrap()
}

fn bits_of(mask: u32, t: usize) -> Sequence {
    Sequence::from_bits((0..t).map(|k| mask & (1 << k) != 0))
}

fn random_bits<R: Rng>(r: &mut R, t: usize) -> Vec<f64> {
    (0..t).map(|_| rng::sign(r)).collect()
}

fn dp_oracle_equivalence() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for t in 1..=10 {
        for a in [0.5, 1.0, 1.96, 2.8] {
            for mask in 0u32..1 << t {
                let s = bits_of(mask, t);
                let dp = payoff_dp(&s, alpha(a)).value;
                let brute = payoff_bruteforce_oracle(&s, alpha(a)).unwrap();
                worst = worst.max((dp - brute).abs());
                count += 1;
            }
        }
    }
    check(
        worst <= 1e-9,
        format!("{count} cases, max |dp - oracle| = {worst:.2e} (tol 1e-9)"),
    )
}

fn feasibility_at_t8() -> Check {
    let t = 8;
    let report = estimate_alpha0(&CalibrationConfig::exact_bisect(t, 1e-9)).unwrap();
    let a = alpha(report.alpha0 + 0.01);
    let mut min_slack = f64::INFINITY;
    for mask in 0u32..1 << t {
        let s = bits_of(mask, t);
        let game = run_game(&mut ExactPredictor::new(t, a).unwrap(), s.values()).unwrap();
        min_slack = min_slack.min(game.payoff - payoff_value(s.values(), a));
    }
    check(
        min_slack >= -1e-9,
        format!(
            "alpha0(8) = {:.6}, min over 256 sequences of A_T - P_a = {min_slack:.3e} (tol -1e-9)",
            report.alpha0
        ),
    )
}

fn alpha0_at_389() -> Check {
    let report = estimate_alpha0(&CalibrationConfig::bisect(389, 400, 0, 1e-3)).unwrap();
    let ci = report
        .confidence_interval
        .map_or("n/a".to_string(), |(lo, hi)| format!("[{lo:.3}, {hi:.3}]"));
    check(
        (1.85..=2.10).contains(&report.alpha0),
        format!(
            "alpha0(389) = {:.4}, 95% CI {ci}, n = 400 (target [1.85, 2.10])",
            report.alpha0
        ),
    )
}

fn aligned_constant() -> Check {
    let est = mc_mean_payoff(256, alpha(2.8), 2000, 0, true).unwrap();
    check(
        est.mean <= 3.0 * est.stderr,
        format!(
            "aligned mean at T=256, a=2.8: {:.4} (stderr {:.4}, need <= 3 stderr)",
            est.mean, est.stderr
        ),
    )
}

fn decomposition_constant() -> Check {
    let horizon = 1024;
    let c = alignment_constant();
    let mut worst_ratio: f64 = 0.0;
    let mut ok = true;
    for i in 1..=horizon {
        for j in i..=horizon {
            let iv = Interval::new(i, j).unwrap();
            let part = aligned_decompose(iv, horizon).unwrap();
            let total: f64 = part
                .intervals()
                .iter()
                .map(|y| (y.len() as f64).sqrt())
                .sum();
            let bound = c * (iv.len() as f64).sqrt();
            ok &= total <= bound;
            worst_ratio = worst_ratio.max(total / (iv.len() as f64).sqrt());
        }
    }
    check(
        ok,
        format!(
            "{} intervals, max sum sqrt|Y_j| / sqrt x = {worst_ratio:.6} vs c = {c:.6}",
            horizon * (horizon + 1) / 2
        ),
    )
}

fn fast_path_equivalence() -> Check {
    let horizon = 64;
    let a = alpha(2.0);
    let mut r = rng::seeded(6);
    let mut worst: f64 = 0.0;
    let mut candidates_ok = true;
    for game in 0..100u64 {
        let mut st = aligned_precompute(horizon, a, game).unwrap();
        let seq = random_bits(&mut r, horizon);
        for t in 0..horizon {
            let p = st.aligned_fast_predict_step(&seq[..t]).unwrap();
            candidates_ok &= st.last_candidate_count() == 7;
            let comp = st.completion(t).unwrap();
            let m = comp.inserted_magnitude();
            let score = |b: f64| {
                let mut full = seq[..t].to_vec();
                full.push(b * m);
                full.extend_from_slice(comp.values());
                aligned_payoff_value(&full, a).unwrap()
            };
            let reference = ((score(1.0) - score(-1.0)) / 2.0).clamp(-1.0, 1.0);
            worst = worst.max((p.value - reference).abs());
        }
    }
    check(
        worst <= 1e-9 && candidates_ok,
        format!("100 games x 64 steps, max |fast - reference| = {worst:.2e}, candidates per step = 7: {candidates_ok}"),
    )
}

fn stitching_equivalence() -> Check {
    let mut r = rng::seeded(7);
    let mut worst: f64 = 0.0;
    for trial in 0..200u64 {
        let horizon = r.random_range(1..=64);
        let a = alpha(r.random_range(0.5..3.0));
        let t = r.random_range(0..horizon);
        let s = random_bits(&mut r, t);
        let mut st = mc_precompute(horizon, a, trial).unwrap();
        st.mc_predict_step(&s).unwrap();
        for b in [1.0, -1.0] {
            let mut full = s.clone();
            full.push(b);
            full.extend_from_slice(st.completion(t).unwrap().values());
            let direct = payoff_dp(&Sequence::new(full).unwrap(), a).value;
            worst = worst.max((st.stitched_payoff(b).unwrap() - direct).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("200 triples, max |stitched - dp| = {worst:.2e} (tol 1e-9)"),
    )
}

fn monte_carlo_consistency() -> Check {
    let horizon = 8;
    let a = alpha(2.0);
    let seeds = 100_000u64;
    let mut r = rng::seeded(8);
    let mut worst_z: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..20 {
        let seq = random_bits(&mut r, horizon);
        let exact = run_game(&mut ExactPredictor::new(horizon, a).unwrap(), &seq)
            .unwrap()
            .payoff;
        let (mut sum, mut sq) = (0.0, 0.0);
        for seed in 0..seeds {
            let p = run_game(&mut mc_precompute(horizon, a, seed).unwrap(), &seq)
                .unwrap()
                .payoff;
            sum += p;
            sq += p * p;
        }
        let n = seeds as f64;
        let mean = sum / n;
        let se = ((sq / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt();
        let gap = (mean - exact).abs();
        if gap > 3.0 * se && gap > 1e-12 {
            failures += 1;
        }
        if se > 0.0 {
            worst_z = worst_z.max(gap / se);
        }
    }
    check(
        failures == 0,
        format!("20 sequences x 1e5 seeds, worst |mean - exact| / stderr = {worst_z:.2} (limit 3), failures = {failures}"),
    )
}

fn two_experts_identity() -> Check {
    let mut r = rng::seeded(9);
    let horizon = 100;
    let a = alpha(2.0);
    let mut worst: f64 = 0.0;
    let mut worst_one_sided: f64 = 0.0;
    for k in 0..1000u64 {
        let b1: Vec<f64> = (0..horizon).map(|_| r.random::<f64>()).collect();
        let b2: Vec<f64> = (0..horizon).map(|_| r.random::<f64>()).collect();
        let inst = ExpertsInstance::new(b1.clone(), b2.clone()).unwrap();
        let (x1, x2) = inst.totals();

        let reduction = experts_to_bits(&inst, false);
        let game = run_game(
            &mut mc_precompute(horizon, a, k).unwrap(),
            reduction.sequence.values(),
        )
        .unwrap();
        let bets: Vec<f64> = game.steps.iter().map(|s| s.prediction).collect();
        let policy = ArmPolicy::new(
            bets.iter()
                .map(|&b| bits_to_arm_policy(b).unwrap())
                .collect(),
        )
        .unwrap();
        let lhs = experts_payoff(&inst, &policy).unwrap();
        worst = worst.max((lhs - ((x1 + x2) / 2.0 + game.payoff)).abs());

        let one = one_sided_reduction(&inst);
        let one_bets: Vec<f64> = (0..horizon).map(|_| r.random::<f64>()).collect();
        let pol = one.policy(&one_bets).unwrap();
        let direct = experts_payoff(&inst, &pol).unwrap();
        worst_one_sided =
            worst_one_sided.max((direct - one.payoff(&inst, &one_bets).unwrap()).abs());
    }
    check(
        worst <= 1e-12 && worst_one_sided <= 1e-12,
        format!("1000 instances, max identity error {worst:.2e}, one-sided {worst_one_sided:.2e} (tol 1e-12)"),
    )
}

/// Fixed adversarial inputs for the weighted-majority envelope.
fn adversarial_set(horizon: usize) -> Vec<(&'static str, Vec<f64>)> {
    let mut r = rng::seeded(horizon as u64);
    let half = horizon / 2;
    let mut out = vec![
        ("all +1", vec![1.0; horizon]),
        ("all -1", vec![-1.0; horizon]),
        (
            "alternating",
            (0..horizon)
                .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
        ),
        (
            "switch at T/2",
            (0..horizon)
                .map(|k| if k < half { 1.0 } else { -1.0 })
                .collect(),
        ),
        (
            "late switch",
            (0..horizon)
                .map(|k| if k < horizon * 3 / 4 { -1.0 } else { 1.0 })
                .collect(),
        ),
    ];
    for _ in 0..3 {
        out.push(("uniform", random_bits(&mut r, horizon)));
    }
    out
}

fn weighted_majority_envelope() -> Check {
    let mut worst_ratio: f64 = f64::NEG_INFINITY;
    let mut ok = true;
    for horizon in [100usize, 1000] {
        let eta = ExpertEnsemble::default_eta(horizon);
        let mut cases = adversarial_set(horizon);
        // Adaptive adversary: plays against the sign of the current bet.
        let mut wm = ExpertEnsemble::two_constant(horizon, eta).unwrap();
        let mut adaptive = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let p = wm.predict().unwrap().value;
            let b = if p > 0.0 { -1.0 } else { 1.0 };
            wm.observe(b).unwrap();
            adaptive.push(b);
        }
        cases.push(("adaptive", adaptive));
        for (_, v) in cases {
            let mut wm = ExpertEnsemble::two_constant(horizon, eta).unwrap();
            let g = run_game(&mut wm, &v).unwrap();
            let regret = v.iter().sum::<f64>().abs() - g.payoff;
            let ratio = regret / (horizon as f64).sqrt();
            ok &= ratio <= 2.5;
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    check(
        ok,
        format!(
            "T in {{100, 1000}}, 9 inputs each, max regret / sqrt T = {worst_ratio:.3} (limit 2.5)"
        ),
    )
}

fn alpha0_at_2000() -> Check {
    let report = estimate_alpha0(&CalibrationConfig::bisect(2000, 400, 0, 1e-3)).unwrap();
    check(
        (1.9..=2.3).contains(&report.alpha0),
        format!(
            "alpha0(2000) = {:.4}, n = 400 (target [1.9, 2.3])",
            report.alpha0
        ),
    )
}

fn main() -> ExitCode {
    let long = std::env::var("ACCEPTANCE_LONG").is_ok_and(|v| v == "1");
    let criteria: [Criterion; 11] = [
        (
            1,
            "dp matches brute-force oracle",
            dp_oracle_equivalence,
            true,
        ),
        (
            2,
            "exact predictor meets P_a at T=8",
            feasibility_at_t8,
            true,
        ),
        (3, "alpha0(389) near 1.96", alpha0_at_389, true),
        (
            4,
            "aligned payoff feasible at a=2.8",
            aligned_constant,
            true,
        ),
        (
            5,
            "aligned decomposition constant",
            decomposition_constant,
            true,
        ),
        (
            6,
            "aligned fast path matches reference",
            fast_path_equivalence,
            true,
        ),
        (7, "stitching matches full dp", stitching_equivalence, true),
        (
            8,
            "monte carlo predictor is unbiased",
            monte_carlo_consistency,
            true,
        ),
        (
            9,
            "two-experts reduction identities",
            two_experts_identity,
            true,
        ),
        (10, "alpha0(2000) near 2.1", alpha0_at_2000, long),
        (
            11,
            "weighted-majority regret envelope",
            weighted_majority_envelope,
            true,
        ),
    ];
    let mut failed = 0;
    for (id, name, run, enabled) in criteria {
        if !enabled {
            println!("[SKIP] criterion {id:>2}: {name} (long-running; set ACCEPTANCE_LONG=1)");
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {id:>2}: {name}: {} ({secs:.1}s)",
            outcome.detail
        );
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
