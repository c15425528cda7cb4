use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::report::{format_real as real, header, CsvReport};
use super::{Outcome, Report};
use crate::analysis::random::{random_instance, InstanceLimits};
use crate::analysis::{
    bayes_deferral_loss, binary_exp_gap, conditional_deferral, cost_sums, estimate_rademacher,
    expected_deferral_loss, learning_bound_rhs, verify_bound, weighted_loss, BoundRecord,
    ParameterBall,
};
use crate::domain::{build_q_vector, ExpertPanel, FiniteDistribution};
use crate::error::{Error, Result};
use crate::losses::{gamma_of, surrogate_loss, SurrogateSpec};
use crate::seeding::{derive_seed, rng_for};
use crate::training::{
    classifier_accuracy, evaluate_system, generate_task, surrogate_losses, train, Dataset,
    ScoreModel, SystemEvaluation, TrainConfig,
};

fn prepare_output(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    if !dir.exists() {
        fs::create_dir_all(dir)?;
        info!("event=output_dir_created path={}", dir.display());
    }
    fs::write(dir.join("effective_config.json"), cfg.to_json()? + "\n")?;
    Ok(dir)
}

fn population_scores(model: &ScoreModel, d: &FiniteDistribution) -> Vec<Vec<f64>> {
    d.points().iter().map(|p| model.forward(&p.features)).collect()
}

/// Panel and splits with costs rescaled into `[0, 1]` when requested.
fn scaled_splits(
    panel: &ExpertPanel,
    train: &Dataset,
    test: &Dataset,
    normalize: bool,
) -> (ExpertPanel, Dataset, Dataset) {
    if !normalize {
        return (panel.clone(), train.clone(), test.clone());
    }
    let normalized = panel.normalized();
    let factor = normalized.experts()[0].scale();
    (normalized, train.with_scaled_costs(factor), test.with_scaled_costs(factor))
}

struct RunResult {
    model: ScoreModel,
    curve: Vec<f64>,
    baseline_curve: Option<Vec<f64>>,
    evaluation: SystemEvaluation,
    baseline_accuracy: Option<f64>,
    classifier_accuracy: f64,
    exact_loss: f64,
    bayes_loss: f64,
}

fn train_run(cfg: &ExperimentConfig, root: u64, run: u64) -> Result<RunResult> {
    let spec = cfg.task()?;
    let train_cfg = cfg.train()?;
    let seed = derive_seed(root, "run", run);
    let task = generate_task(spec, cfg.runs.train_size, seed)?;
    let (panel, train_set, test_set) =
        scaled_splits(&task.panel, &task.train, &task.test, cfg.runs.normalize_costs);
    let fresh = |tag: &str| {
        ScoreModel::new(
            cfg.model.architecture,
            train_set.input_dim(),
            cfg.model.hidden_dim,
            task.space.size(),
            &mut rng_for(seed, tag, 0),
        )
    };
    let run_cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let outcome = train(fresh("init")?, &train_set, &run_cfg)?;
    let evaluation = evaluate_system(&outcome.model, &test_set);
    let scores = population_scores(&outcome.model, &task.distribution);
    let exact_loss = expected_deferral_loss(&task.distribution, &panel, &scores)?;
    let bayes_loss = bayes_deferral_loss(&task.distribution, &panel)?;
    let (baseline_curve, baseline_accuracy) = if cfg.runs.baseline {
        let base = train(fresh("baseline_init")?, &train_set.with_constant_costs(1.0), &run_cfg)?;
        (Some(base.loss_curve), Some(classifier_accuracy(&base.model, &test_set)))
    } else {
        (None, None)
    };
    Ok(RunResult {
        classifier_accuracy: classifier_accuracy(&outcome.model, &test_set),
        model: outcome.model,
        curve: outcome.loss_curve,
        baseline_curve,
        evaluation,
        baseline_accuracy,
        exact_loss,
        bayes_loss,
    })
}

/// Trains `runs.count` deferral systems and writes models, loss curves and evaluations.
///
/// Artifacts: `model_run{r}.json`, `loss_curve.csv`, `evaluation.csv` (system
/// accuracy and routing fractions overall and per class) and `summary.csv`
/// (accuracies and the exact deferral regret on the task's finite distribution).
pub fn run_train(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let root = cfg.root_seed()?;
    let spec = cfg.task()?;
    cfg.train()?;
    let dir = prepare_output(cfg)?;
    let results = (0..cfg.runs.count as u64)
        .into_par_iter()
        .map(|r| train_run(cfg, root, r))
        .collect::<Result<Vec<_>>>()?;

    let experts = spec.experts.len();
    let mut curve = CsvReport::create(&dir.join("loss_curve.csv"), &header(&["run", "model", "epoch", "loss"]))?;
    let mut eval_header = header(&["run", "model", "scope", "count", "accuracy", "predictor_correct", "predictor"]);
    eval_header.extend((0..experts).map(|j| format!("expert_{j}")));
    let mut evaluation = CsvReport::create(&dir.join("evaluation.csv"), &eval_header)?;
    let mut summary = CsvReport::create(
        &dir.join("summary.csv"),
        &header(&[
            "run",
            "train_size",
            "system_accuracy",
            "classifier_accuracy",
            "baseline_accuracy",
            "test_deferral_loss",
            "exact_deferral_loss",
            "bayes_deferral_loss",
            "deferral_regret",
        ]),
    )?;
    let mut lines = Vec::with_capacity(results.len());
    for (r, res) in results.iter().enumerate() {
        fs::write(dir.join(format!("model_run{r}.json")), res.model.to_json()? + "\n")?;
        let curves = std::iter::once(("deferral", &res.curve))
            .chain(res.baseline_curve.as_ref().map(|c| ("baseline", c)));
        for (name, values) in curves {
            for (epoch, loss) in values.iter().enumerate() {
                curve.row(&[r.to_string(), name.to_string(), epoch.to_string(), real(*loss)])?;
            }
        }
        let e = &res.evaluation;
        let total: usize = e.class_counts.iter().sum();
        let kept_correct: f64 = e
            .per_class_correct_prediction
            .iter()
            .zip(&e.class_counts)
            .map(|(f, &c)| f * c as f64)
            .sum::<f64>()
            / total.max(1) as f64;
        let mut row = vec![
            r.to_string(),
            "deferral".into(),
            "all".into(),
            total.to_string(),
            real(e.system_accuracy),
            real(kept_correct),
        ];
        row.extend(e.deferral_ratios.iter().map(|v| real(*v)));
        evaluation.row(&row)?;
        for (k, routing) in e.per_class_routing.iter().enumerate() {
            let mut row = vec![
                r.to_string(),
                "deferral".into(),
                format!("class_{k}"),
                e.class_counts[k].to_string(),
                real(e.per_class_accuracy[k]),
                real(e.per_class_correct_prediction[k]),
            ];
            row.extend(routing.iter().map(|v| real(*v)));
            evaluation.row(&row)?;
        }
        if let Some(acc) = res.baseline_accuracy {
            let mut row = vec![
                r.to_string(),
                "baseline".into(),
                "all".into(),
                total.to_string(),
                real(acc),
                real(acc),
                real(1.0),
            ];
            row.extend((0..experts).map(|_| real(0.0)));
            evaluation.row(&row)?;
        }
        let regret = res.exact_loss - res.bayes_loss;
        summary.row(&[
            r.to_string(),
            cfg.runs.train_size.to_string(),
            real(e.system_accuracy),
            real(res.classifier_accuracy),
            res.baseline_accuracy.map_or_else(String::new, real),
            real(e.deferral_loss),
            real(res.exact_loss),
            real(res.bayes_loss),
            real(regret),
        ])?;
        lines.push(format!(
            "run={r} train_size={} system_accuracy={:.4} baseline_accuracy={} deferral_regret={:.6}",
            cfg.runs.train_size,
            e.system_accuracy,
            res.baseline_accuracy.map_or_else(|| "none".to_string(), |a| format!("{a:.4}")),
            regret
        ));
    }
    curve.finish()?;
    evaluation.finish()?;
    summary.finish()?;
    Ok(Report::new(Outcome::Success, lines))
}

/// Bound check of one spec on one random instance.
fn verify_row(
    spec: &SurrogateSpec,
    cfg: &ExperimentConfig,
    instance: &crate::analysis::random::RandomInstance,
) -> Result<BoundRecord> {
    let class = &cfg.analysis.class;
    let scores: Vec<Vec<f64>> = instance
        .scores
        .iter()
        .map(|s| class.project(s, spec.is_constrained()))
        .collect();
    verify_bound(spec, &instance.distribution, &instance.panel, &scores, class)
}

/// Runs the consistency-bound sweep and writes `verify.csv`.
///
/// One row per (instance seed, spec); the outcome is a violation if any row
/// fails the inequality.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let root = cfg.root_seed()?;
    let dir = prepare_output(cfg)?;
    let a = &cfg.analysis;
    let limits = InstanceLimits {
        max_points: a.max_points,
        max_classes: a.max_classes,
        max_experts: a.max_experts,
    };
    let rows = (0..a.sweep_seeds)
        .into_par_iter()
        .map(|seed| {
            let instance = random_instance(&mut rng_for(root, "sweep", seed), limits)?;
            a.verify_specs
                .iter()
                .map(|spec| verify_row(spec, cfg, &instance).map(|r| (seed, *spec, r)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CsvReport::create(
        &dir.join("verify.csv"),
        &header(&[
            "seed",
            "spec",
            "class",
            "lhs",
            "rhs",
            "rhs_with_constants",
            "slack",
            "holds",
            "M_L",
            "A_L",
            "M_Ldef",
            "A_Ldef",
            "surrogate_regret",
            "deferral_regret",
        ]),
    )?;
    let class = a.class.label();
    let mut failures = 0usize;
    let mut total = 0usize;
    for (seed, spec, r) in rows.iter().flatten() {
        total += 1;
        if !r.holds {
            failures += 1;
            info!("event=bound_violation seed={seed} spec={spec} lhs={} rhs={}", real(r.lhs), real(r.rhs));
        }
        out.row(&[
            seed.to_string(),
            spec.to_string(),
            class.clone(),
            real(r.lhs),
            real(r.rhs),
            real(r.rhs_with_constants),
            real(r.slack),
            r.holds.to_string(),
            real(r.surrogate_gap),
            real(r.surrogate_approximation),
            real(r.deferral_gap),
            real(r.deferral_approximation),
            real(r.surrogate_regret),
            real(r.deferral_regret),
        ])?;
    }
    out.finish()?;
    Ok(Report::new(
        Outcome::from_all(failures == 0),
        vec![format!("rows={total} violations={failures}")],
    ))
}

/// Tabulates the binary exponential gap over the configured grid into `gaps.csv`.
pub fn run_gaps(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let dir = prepare_output(cfg)?;
    let mut out = CsvReport::create(
        &dir.join("gaps.csv"),
        &header(&["eta", "lambda", "closed_form", "numeric", "abs_diff"]),
    )?;
    for &eta in &cfg.gaps.etas {
        for &lambda in &cfg.gaps.lambdas {
            let g = binary_exp_gap(eta, lambda)?;
            out.row(&[
                real(eta),
                real(lambda),
                real(g.closed_form),
                real(g.numeric),
                real((g.closed_form - g.numeric).abs()),
            ])?;
        }
    }
    out.finish()?;
    Ok(Report::new(
        Outcome::Success,
        vec![format!("rows={}", cfg.gaps.etas.len() * cfg.gaps.lambdas.len())],
    ))
}

struct BoundRow {
    observed: f64,
    rhs: f64,
    rademacher: f64,
    std_error: f64,
    b_l: f64,
    train_loss: f64,
}

fn learning_bound_row(cfg: &ExperimentConfig, root: u64, spec: SurrogateSpec, seed: u64, m: usize) -> Result<BoundRow> {
    let lb = &cfg.learning_bound;
    let task_seed = derive_seed(root, "learning_bound", seed);
    let task = generate_task(cfg.task()?, m, task_seed)?;
    let (panel, train_set, _) = scaled_splits(&task.panel, &task.train, &task.test, true);
    let ball = ParameterBall {
        architecture: lb.architecture,
        hidden_dim: lb.hidden_dim,
        radius: lb.radius,
    };
    let mut model = ScoreModel::new(
        lb.architecture,
        train_set.input_dim(),
        lb.hidden_dim,
        task.space.size(),
        &mut rng_for(task_seed, "init", m as u64),
    )?;
    model.clip_norm(lb.radius);
    let train_cfg = TrainConfig {
        batch_size: lb.batch_size,
        max_param_norm: Some(lb.radius),
        ..TrainConfig::for_spec(spec, lb.epochs, lb.learning_rate, derive_seed(task_seed, "sgd", m as u64))
    };
    let fitted = train(model, &train_set, &train_cfg)?.model;
    let scores = population_scores(&fitted, &task.distribution);
    let observed = expected_deferral_loss(&task.distribution, &panel, &scores)?
        - bayes_deferral_loss(&task.distribution, &panel)?;
    let estimate = estimate_rademacher(
        &spec,
        &train_set,
        &ball,
        lb.rademacher_trials,
        derive_seed(task_seed, "rademacher", m as u64),
        &lb.rademacher,
    )?;
    let losses = surrogate_losses(&fitted, &train_set, &spec);
    let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
    let b_l = lb
        .b_l
        .unwrap_or_else(|| 1.1 * losses.iter().copied().fold(0.0, f64::max));
    let rhs = learning_bound_rhs(
        &gamma_of(&spec, task.space),
        estimate.estimate,
        b_l,
        m,
        lb.delta,
        lb.minimizability_gap,
        task.space.experts(),
        cost_sums(&panel),
    )?;
    Ok(BoundRow {
        observed,
        rhs,
        rademacher: estimate.estimate,
        std_error: estimate.std_error,
        b_l,
        train_loss,
    })
}

/// Checks the finite-sample deferral bound and writes `learning_bound.csv`.
///
/// For each spec, seed and sample size, trains the empirical minimizer inside
/// the parameter ball, measures its exact deferral estimation error on the
/// task's finite distribution and compares it with the bound evaluated at a
/// Monte-Carlo Rademacher estimate.
pub fn run_learning_bound(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let root = cfg.root_seed()?;
    cfg.task()?;
    let dir = prepare_output(cfg)?;
    let lb = &cfg.learning_bound;
    let jobs: Vec<(SurrogateSpec, u64, usize)> = lb
        .specs
        .iter()
        .flat_map(|spec| (0..lb.seeds).flat_map(move |s| lb.sample_sizes.iter().map(move |&m| (*spec, s, m))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(spec, s, m)| learning_bound_row(cfg, root, spec, s, m))
        .collect::<Result<Vec<_>>>()?;
    let mut out = CsvReport::create(
        &dir.join("learning_bound.csv"),
        &header(&[
            "spec",
            "seed",
            "m",
            "observed_lhs",
            "bound_rhs",
            "holds",
            "rademacher",
            "rademacher_std_error",
            "b_l",
            "delta",
            "minimizability_gap",
            "train_surrogate_loss",
        ]),
    )?;
    let mut failures = 0usize;
    for ((spec, s, m), r) in jobs.iter().zip(&rows) {
        let holds = r.observed <= r.rhs;
        failures += usize::from(!holds);
        out.row(&[
            spec.to_string(),
            s.to_string(),
            m.to_string(),
            real(r.observed),
            real(r.rhs),
            holds.to_string(),
            real(r.rademacher),
            real(r.std_error),
            real(r.b_l),
            real(lb.delta),
            real(lb.minimizability_gap),
            real(r.train_loss),
        ])?;
    }
    out.finish()?;
    Ok(Report::new(
        Outcome::from_all(failures == 0),
        vec![format!("rows={} violations={}", rows.len(), failures)],
    ))
}

/// Largest discrepancies between the q-vector formulas and direct computation.
struct OracleCheck {
    points: usize,
    deferral: f64,
    surrogate: f64,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn oracle_check(instance: &crate::analysis::random::RandomInstance) -> Result<OracleCheck> {
    let d = &instance.distribution;
    let panel = &instance.panel;
    let space = panel.space();
    let mut deferral = 0.0f64;
    let mut surrogate = 0.0f64;
    for (x, s) in instance.scores.iter().enumerate() {
        let p = &d.points()[x].conditional;
        let q = build_q_vector(d, panel, x)?;
        // Direct conditional deferral loss of every augmented label.
        let direct: Vec<f64> = (0..space.size())
            .map(|label| {
                (0..space.classes())
                    .map(|y| {
                        let cost = if label < space.classes() {
                            f64::from(u8::from(label != y))
                        } else {
                            panel.cost(label - space.classes(), x, y)
                        };
                        p[y] * cost
                    })
                    .sum()
            })
            .collect();
        let best = direct.iter().copied().fold(f64::INFINITY, f64::min);
        let chosen = direct[crate::domain::predict_label(s)?];
        deferral = deferral.max((conditional_deferral(&q, s)?.regret - (chosen - best)).abs());
        for spec in SurrogateSpec::all() {
            let s = crate::analysis::HypothesisClassSpec::AllMeasurable.project(s, spec.is_constrained());
            let mut expected = 0.0;
            for (y, py) in p.iter().enumerate() {
                expected += py * surrogate_loss(&spec, space, &s, y, &panel.costs_at(x, y))?;
            }
            surrogate = surrogate.max(relative_gap(weighted_loss(&spec, &q.q, &s, None), expected));
        }
    }
    Ok(OracleCheck {
        points: d.len(),
        deferral,
        surrogate,
    })
}

/// Cross-checks the q-vector regret formulas against direct computation on
/// random instances and writes `regret_check.csv`.
pub fn run_regret_check(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let root = cfg.root_seed()?;
    let dir = prepare_output(cfg)?;
    let rc = &cfg.regret_check;
    if rc.tolerance.is_nan() || rc.tolerance < 0.0 {
        return Err(Error::Config("regret_check.tolerance must be >= 0".to_string()));
    }
    let checks = (0..rc.instances)
        .into_par_iter()
        .map(|i| {
            let instance = random_instance(&mut rng_for(root, "regret_check", i), InstanceLimits::ORACLE)?;
            oracle_check(&instance)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CsvReport::create(
        &dir.join("regret_check.csv"),
        &header(&["instance", "points", "max_deferral_diff", "max_surrogate_rel_diff", "ok"]),
    )?;
    let mut failures = 0usize;
    for (i, c) in checks.iter().enumerate() {
        let ok = c.deferral <= rc.tolerance && c.surrogate <= rc.tolerance;
        failures += usize::from(!ok);
        out.row(&[i.to_string(), c.points.to_string(), real(c.deferral), real(c.surrogate), ok.to_string()])?;
    }
    out.finish()?;
    Ok(Report::new(
        Outcome::from_all(failures == 0),
        vec![format!("instances={} mismatches={failures}", checks.len())],
    ))
}
