//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails outside its documented analysis.
//!
//! Tolerances and seeds are pinned below. Criteria 1-5 are exact or
//! property-based checks against independent oracles; 6-9 run the shipped
//! experiment configs end to end through the experiment runner.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use common::*;
use l2d_core::analysis::random::{random_instance, InstanceLimits};
use l2d_core::analysis::{
    binary_exp_gap, conditional_deferral, expected_losses, verify_bound, weighted_loss,
    HypothesisClassSpec,
};
use l2d_core::domain::{build_q_vector, LabelSpace};
use l2d_core::experiment::{run_learning_bound, run_train, ExperimentConfig, Outcome};
use l2d_core::losses::{kink_distance, surrogate_gradient, surrogate_loss, SurrogateSpec};
use l2d_core::seeding::rng_for;
use rand::Rng;

const ROOT_SEED: u64 = 42;
const GRAD_REL_TOL: f64 = 1e-5;
const GRAD_ABS_FLOOR: f64 = 1e-8;
const FD_STEP: f64 = 1e-5;
const KINK_MARGIN: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-12;
const BOUND_SLACK: f64 = -1e-9;
const GAP_TOL: f64 = 1e-6;
const STRUCTURE_TOL: f64 = 1e-9;
const REGRET_CEILING: f64 = 0.05;
const ROUTING_FLOOR: f64 = 0.60;
const MISROUTE_CEILING: f64 = 0.15;
const BASELINE_MARGIN: f64 = 0.05;
const EXPERT_NOISE: f64 = 0.005;

/// Specs whose shipped transform admits per-point counterexamples; their
/// failing rows are reported but do not abort the suite.
const DOCUMENTED_BOUND_FAILURES: &[&str] = &["sum:sq"];

struct Verdict {
    pass: bool,
    /// A failure explained by a documented analysis.
    documented: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            documented: false,
            detail,
        }
    }
}

fn gradient_suite() -> Verdict {
    let mut rng = rng_for(ROOT_SEED, "acceptance_gradient", 0);
    let mut worst = 0.0f64;
    let mut worst_value = 0.0f64;
    let mut failures = Vec::new();
    let mut checked = 0;
    for spec in SurrogateSpec::all() {
        for _ in 0..100 {
            let k = rng.random_range(3..=8usize);
            let n = rng.random_range(2..k);
            let space = LabelSpace::new(n, k - n).unwrap();
            let y = rng.random_range(0..n);
            let costs: Vec<f64> = (0..k - n).map(|_| rng.random_range(0.0..1.0)).collect();
            let labels: Vec<usize> = std::iter::once(y).chain(n..k).collect();
            let s = loop {
                let mut s = gaussian_scores(&mut rng, k, 1.5);
                if spec.is_constrained() {
                    center(&mut s);
                }
                if labels.iter().all(|&l| kink_distance(&spec, &s, l) > KINK_MARGIN) {
                    break s;
                }
            };
            let value = surrogate_loss(&spec, space, &s, y, &costs).unwrap();
            worst_value = worst_value.max(rel_diff(value, oracle_surrogate(&spec, n, &s, y, &costs)));
            let analytic = surrogate_gradient(&spec, space, &s, y, &costs).unwrap();
            let numeric = fd_gradient(|t| oracle_surrogate(&spec, n, t, y, &costs), &s, FD_STEP);
            for (a, b) in analytic.iter().zip(&numeric) {
                let err = (a - b).abs();
                let allowed = (GRAD_REL_TOL * a.abs().max(b.abs())).max(GRAD_ABS_FLOOR);
                worst = worst.max(err / allowed);
                if err > allowed {
                    failures.push(format!("{spec} analytic {a:e} fd {b:e}"));
                }
            }
            checked += 1;
        }
    }
    let pass = failures.is_empty() && worst_value <= 1e-10;
    Verdict::new(
        pass,
        format!(
            "{checked} configurations; worst error / allowed = {worst:.3e}; worst value mismatch vs oracle formula = {worst_value:.1e}{}",
            failures.first().map_or(String::new(), |f| format!("; first failure: {f}"))
        ),
    )
}

fn regret_oracle() -> Verdict {
    let mut deferral = 0.0f64;
    let mut surrogate = 0.0f64;
    for i in 0..500 {
        let inst = random_instance(&mut rng_for(ROOT_SEED, "acceptance_oracle", i), InstanceLimits::ORACLE).unwrap();
        let d = &inst.distribution;
        let space = inst.panel.space();
        for (x, s) in inst.scores.iter().enumerate() {
            let q = build_q_vector(d, &inst.panel, x).unwrap();
            let direct = brute_deferral_losses(d, &inst.panel, x);
            let best = direct.iter().copied().fold(f64::INFINITY, f64::min);
            let brute_regret = direct[first_argmax(s)] - best;
            deferral = deferral.max((conditional_deferral(&q, s).unwrap().regret - brute_regret).abs());
            let p = &d.points()[x].conditional;
            for spec in SurrogateSpec::all() {
                let s = HypothesisClassSpec::AllMeasurable.project(s, spec.is_constrained());
                let expected: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(y, py)| py * oracle_surrogate(&spec, space.classes(), &s, y, &inst.panel.costs_at(x, y)))
                    .sum();
                surrogate = surrogate.max(rel_diff(weighted_loss(&spec, &q.q, &s, None), expected));
            }
        }
    }
    Verdict::new(
        deferral <= ORACLE_TOL && surrogate <= ORACLE_TOL,
        format!(
            "500 instances; max |deferral regret - brute force| = {deferral:.1e}; max rel |q-weighted surrogate - direct expectation| = {surrogate:.1e} (tol {ORACLE_TOL:e})"
        ),
    )
}

fn bound_sweep() -> Verdict {
    let specs = SurrogateSpec::all();
    let mut rows = 0;
    let mut failing: BTreeMap<String, Vec<(u64, f64, f64)>> = BTreeMap::new();
    let mut min_slack = f64::INFINITY;
    for seed in 0..1000u64 {
        let inst = random_instance(&mut rng_for(ROOT_SEED, "sweep", seed), InstanceLimits::SWEEP).unwrap();
        for spec in &specs {
            let class = HypothesisClassSpec::AllMeasurable;
            let scores: Vec<Vec<f64>> = inst.scores.iter().map(|s| class.project(s, spec.is_constrained())).collect();
            let r = verify_bound(spec, &inst.distribution, &inst.panel, &scores, &class).unwrap();
            rows += 1;
            let slack = (r.rhs - r.lhs).min(r.rhs_with_constants - r.lhs);
            min_slack = min_slack.min(slack);
            if slack < BOUND_SLACK {
                failing.entry(spec.to_string()).or_default().push((seed, r.lhs, r.rhs_with_constants));
            }
        }
    }
    let failed: usize = failing.values().map(Vec::len).sum();
    let detail = failing
        .iter()
        .map(|(spec, v)| {
            let (seed, lhs, rhs) = v[0];
            format!("{spec}: {} rows (first: seed {seed}, lhs {lhs:.5} > rhs {rhs:.5})", v.len())
        })
        .collect::<Vec<_>>()
        .join("; ");
    let documented = failed > 0 && failing.keys().all(|s| DOCUMENTED_BOUND_FAILURES.contains(&s.as_str()));
    Verdict {
        pass: failed == 0,
        documented,
        detail: format!(
            "{}/{rows} rows hold (slack >= {BOUND_SLACK:e}, linear transforms also constant-free); min slack {min_slack:.3e}{}",
            rows - failed,
            if failed > 0 {
                format!("; failing {detail}; the printed transform for sum:sq is violated pointwise, see notes")
            } else {
                String::new()
            }
        ),
    }
}

fn closed_form_gap() -> Verdict {
    let mut worst_closed = 0.0f64;
    let mut worst_numeric = 0.0f64;
    for lambda in [0.5, 1.0, 2.0, 4.0] {
        let g = binary_exp_gap(1.0, lambda).unwrap();
        worst_closed = worst_closed.max((g.closed_form - (-lambda).exp()).abs());
        worst_numeric = worst_numeric.max((g.closed_form - g.numeric).abs());
    }
    Verdict::new(
        worst_closed <= GAP_TOL && worst_numeric <= GAP_TOL,
        format!("max |gap - e^-lambda| = {worst_closed:.1e}; max |closed form - numeric| = {worst_numeric:.1e} (tol {GAP_TOL:e})"),
    )
}

fn gap_structure() -> Verdict {
    let mut rng = rng_for(ROOT_SEED, "acceptance_structure", 0);
    let mut order_violations = 0;
    let mut comp_sum_gap = 0.0f64;
    let mut deferral_mismatch = 0.0f64;
    let mut checks = 0;
    for i in 0..100 {
        let inst = random_instance(&mut rng_for(ROOT_SEED, "acceptance_structure", i), InstanceLimits::ORACLE).unwrap();
        let lambda = [0.5, 1.0, 2.0, 4.0][rng.random_range(0..4)];
        for spec in SurrogateSpec::all() {
            for class in [HypothesisClassSpec::AllMeasurable, HypothesisClassSpec::BoundedScores { lambda }] {
                let scores: Vec<Vec<f64>> = inst.scores.iter().map(|s| class.project(s, spec.is_constrained())).collect();
                let r = expected_losses(&spec, &inst.distribution, &inst.panel, &scores, &class).unwrap();
                checks += 1;
                if !(r.surrogate_gap >= -STRUCTURE_TOL && r.surrogate_gap <= r.surrogate_approximation + STRUCTURE_TOL) {
                    order_violations += 1;
                }
                if class == HypothesisClassSpec::AllMeasurable && spec.family() == l2d_core::losses::Family::CompSum {
                    comp_sum_gap = comp_sum_gap.max(r.surrogate_gap.abs());
                }
                deferral_mismatch = deferral_mismatch.max((r.deferral_gap - r.deferral_approximation).abs());
            }
        }
    }
    Verdict::new(
        order_violations == 0 && comp_sum_gap < STRUCTURE_TOL && deferral_mismatch <= STRUCTURE_TOL,
        format!(
            "{checks} (instance, spec, class) reports; 0 <= M_L <= A_L violated {order_violations} times; max comp-sum M_L (all measurable) = {comp_sum_gap:.1e}; max |M_Ldef - A_Ldef| = {deferral_mismatch:.1e}"
        ),
    )
}

fn load_config(name: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(&config_path(name)).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader.deserialize().map(|r| r.unwrap()).collect()
}

fn field(row: &BTreeMap<String, String>, name: &str) -> f64 {
    row[name].parse().unwrap()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn consistency_trend(tmp: &Path) -> Verdict {
    let mut means = Vec::new();
    for m in [250usize, 1000, 4000] {
        let out = tmp.join(format!("consistency_{m}"));
        let mut cfg = load_config("consistency.json", &out);
        cfg.runs.train_size = m;
        run_train(&cfg).unwrap();
        let regrets: Vec<f64> = csv_rows(&out.join("summary.csv")).iter().map(|r| field(r, "deferral_regret")).collect();
        means.push(mean(&regrets));
    }
    let monotone = means.windows(2).all(|w| w[1] < w[0]);
    Verdict::new(
        monotone && means[2] < REGRET_CEILING,
        format!(
            "mean exact deferral regret over 5 seeds at m = 250, 1000, 4000: {:.4}, {:.4}, {:.4} (strictly decreasing required, final < {REGRET_CEILING})",
            means[0], means[1], means[2]
        ),
    )
}

fn specialization(tmp: &Path) -> Verdict {
    let out = tmp.join("specialization");
    let cfg = load_config("specialization.json", &out);
    run_train(&cfg).unwrap();
    let task = cfg.task.as_ref().unwrap();
    let domains: Vec<Vec<usize>> = task
        .experts
        .iter()
        .map(|e| match e {
            l2d_core::training::ExpertProfile::Domain { domain, .. } => domain.clone(),
            _ => unreachable!("specialization experts are domain experts"),
        })
        .collect();
    let rows = csv_rows(&out.join("evaluation.csv"));
    let runs = cfg.runs.count;
    let mut good = vec![0.0; domains.len()];
    let mut wrong = vec![0.0; domains.len()];
    for run in 0..runs {
        for (j, domain) in domains.iter().enumerate() {
            let mut count = 0.0;
            let (mut g, mut w) = (0.0, 0.0);
            for r in rows.iter().filter(|r| r["run"] == run.to_string() && r["model"] == "deferral") {
                let Some(class) = r["scope"].strip_prefix("class_") else { continue };
                if !domain.contains(&class.parse().unwrap()) {
                    continue;
                }
                let c = field(r, "count");
                count += c;
                g += c * (field(r, &format!("expert_{j}")) + field(r, "predictor_correct"));
                w += c * (0..domains.len()).filter(|&o| o != j).map(|o| field(r, &format!("expert_{o}"))).sum::<f64>();
            }
            good[j] += g / count / runs as f64;
            wrong[j] += w / count / runs as f64;
        }
    }
    let summary = csv_rows(&out.join("summary.csv"));
    let gain = mean(&summary.iter().map(|r| field(r, "system_accuracy") - field(r, "baseline_accuracy")).collect::<Vec<_>>());
    let pass = good.iter().all(|&g| g >= ROUTING_FLOOR) && wrong.iter().all(|&w| w <= MISROUTE_CEILING) && gain >= BASELINE_MARGIN;
    Verdict::new(
        pass,
        format!(
            "over {runs} seeds: domain samples to own expert or correct predictor = {}; to the other expert = {}; accuracy gain over no-deferral baseline = {:.1} points",
            good.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
            wrong.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
            100.0 * gain
        ),
    )
}

fn more_experts(tmp: &Path) -> Verdict {
    let mut accuracy = Vec::new();
    for k in 1..=3 {
        let out = tmp.join(format!("experts_{k}"));
        let cfg = load_config(&format!("experts_{k}.json"), &out);
        run_train(&cfg).unwrap();
        let acc: Vec<f64> = csv_rows(&out.join("summary.csv")).iter().map(|r| field(r, "system_accuracy")).collect();
        accuracy.push(mean(&acc));
    }
    let pass = accuracy.windows(2).all(|w| w[1] - w[0] >= -EXPERT_NOISE);
    Verdict::new(
        pass,
        format!(
            "mean system accuracy over 5 seeds with 1, 2, 3 experts: {:.4}, {:.4}, {:.4} (each step >= -{EXPERT_NOISE})",
            accuracy[0], accuracy[1], accuracy[2]
        ),
    )
}

fn learning_bound(tmp: &Path) -> Verdict {
    let out = tmp.join("learning_bound");
    let cfg = load_config("learning_bound.json", &out);
    let outcome = run_learning_bound(&cfg).unwrap().outcome;
    let rows = csv_rows(&out.join("learning_bound.csv"));
    let holding = rows.iter().filter(|r| r["holds"] == "true").count();
    let tightest = rows
        .iter()
        .map(|r| field(r, "observed_lhs") / field(r, "bound_rhs"))
        .fold(0.0, f64::max);
    Verdict::new(
        outcome == Outcome::Success && holding == rows.len() && rows.len() == 18,
        format!("{holding}/{} rows with observed_lhs <= bound_rhs (log and mae, 3 seeds, m = 250, 1000, 4000); largest lhs/rhs = {tightest:.3}", rows.len()),
    )
}

/// A named criterion and the check that decides it.
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("gradient suite", Box::new(gradient_suite)),
        ("regret oracle", Box::new(regret_oracle)),
        ("bound sweep", Box::new(bound_sweep)),
        ("closed-form gap", Box::new(closed_form_gap)),
        ("minimizability-gap structure", Box::new(gap_structure)),
        ("consistency trend", Box::new(|| consistency_trend(tmp.path()))),
        ("expert specialization", Box::new(|| specialization(tmp.path()))),
        ("more experts help", Box::new(|| more_experts(tmp.path()))),
        ("learning bound", Box::new(|| learning_bound(tmp.path()))),
    ];
    let mut undocumented_failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {status} {name}: {} [{:.1}s]", i + 1, v.detail, start.elapsed().as_secs_f64());
        if !v.pass && !v.documented {
            undocumented_failures += 1;
        }
    }
    if undocumented_failures > 0 {
        std::process::exit(1);
    }
}
