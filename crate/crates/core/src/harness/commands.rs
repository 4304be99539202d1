//! The command surface shared by the binary and the tests.
//!
//! Every command reads [`Settings`], writes its tables and a `record.json`
//! into the output directory and returns the record.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::baseline::{l21_lambda_max, l21_matched_loss, l21_solve, L21Solution};
use crate::data::{center, CenteredData, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    run_experiment, select_features, top_k_by_norm, Classifier, ExperimentConfig, ExperimentReport,
    Method,
};
use crate::objective::{loss, row_norms};
use crate::solver::{
    resolve_config, select_by_count, solve, Algorithm, RegularizationPath, ResolvedConfig,
    SolverConfig,
};

use super::config::{parse_list, Settings};
use super::csv_io::{load_csv, save_csv, LabelColumn, LoadOptions};
use super::oracle::{brute_force_oracle, DEFAULT_ORACLE_MAX_DIM};
use super::record::{DatasetFingerprint, ResultRecord};
use super::synthetic::{generate_synthetic, SyntheticSpec};
use super::{format_sig, render_table, write_atomic};

pub const COMMANDS: &[&str] = &[
    "synth",
    "solve",
    "path",
    "select",
    "evaluate",
    "compare",
    "oracle-check",
];

const DEFAULT_FEATURE_GRID: &str = "20:400:20";
const DEFAULT_L21_GRID: &str = "1e-5,1e-4,1e-3,1e-2,1e-1,1";
/// Bisection steps when matching the ℓ2,1 loss to a path point.
const MATCH_ITERATIONS: usize = 40;
/// Path points up to this support size enter the sparsity comparison.
const SPARSITY_CONTRAST_MAX: usize = 10;

pub fn run_command(command: &str, settings: &Settings) -> Result<ResultRecord> {
    let out = out_dir(settings)?;
    let mut record = ResultRecord::new(command, settings.entries().clone());
    let start = Instant::now();
    match command {
        "synth" => synth(settings, &out, &mut record)?,
        "solve" => solve_command(settings, &out, &mut record, false)?,
        "path" => solve_command(settings, &out, &mut record, true)?,
        "select" => select(settings, &out, &mut record)?,
        "evaluate" => evaluate(settings, &out, &mut record)?,
        "compare" => compare(settings, &out, &mut record)?,
        "oracle-check" => oracle_check(settings, &out, &mut record)?,
        other => {
            return Err(Error::Usage(format!(
                "unknown command {other:?}; expected one of {}",
                COMMANDS.join(", ")
            )))
        }
    }
    record
        .timings
        .insert("total".into(), start.elapsed().as_secs_f64());
    record.save(&out.join("record.json"))?;
    Ok(record)
}

fn out_dir(settings: &Settings) -> Result<PathBuf> {
    let out = PathBuf::from(settings.get_str("out").unwrap_or("out"));
    std::fs::create_dir_all(&out)?;
    Ok(out)
}

fn write_table(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(&dir.join(name), render_table(header, rows).as_bytes())
}

pub fn load_dataset(settings: &Settings) -> Result<Dataset> {
    let path = settings.require_str("data")?;
    let options = LoadOptions {
        label_column: match settings.get_str("label_column") {
            None | Some("last") => LabelColumn::Last,
            Some(name) => LabelColumn::Named(name.to_string()),
        },
        has_header: settings.get_switch("header", true)?,
    };
    load_csv(Path::new(path), &options)
}

pub fn solver_config(settings: &Settings) -> Result<SolverConfig> {
    let defaults = SolverConfig::default();
    Ok(SolverConfig {
        lambda0: settings.get("lambda0")?,
        l0: settings.get("l0")?,
        rho: settings.get_or("rho", defaults.rho)?,
        gamma: settings.get_or("gamma", defaults.gamma)?,
        eta: settings.get_or("eta", defaults.eta)?,
        epsilon: settings.get_or("epsilon", defaults.epsilon)?,
        path_steps: settings.get_or("steps", defaults.path_steps)?,
        max_inner_iterations: settings.get_or("max_inner", defaults.max_inner_iterations)?,
        max_l: settings.get("max_l")?,
        seed: settings.get_or("seed", defaults.seed)?,
    })
}

pub fn method(settings: &Settings, default: Method) -> Result<Method> {
    match settings.get_str("algorithm") {
        None => Ok(default),
        Some("hiht") => Ok(Method::Hiht),
        Some("ahiht") => Ok(Method::Ahiht),
        Some("l21") => Ok(Method::L21),
        Some(other) => Err(Error::Usage(format!(
            "unknown algorithm {other:?}; expected hiht, ahiht or l21"
        ))),
    }
}

fn classifiers(settings: &Settings) -> Result<Vec<Classifier>> {
    match settings.get_str("classifier").unwrap_or("both") {
        "knn" => Ok(vec![Classifier::Knn]),
        "softmax" => Ok(vec![Classifier::Softmax]),
        "both" => Ok(vec![Classifier::Knn, Classifier::Softmax]),
        other => Err(Error::Usage(format!(
            "unknown classifier {other:?}; expected knn, softmax or both"
        ))),
    }
}

pub fn experiment_config(settings: &Settings, method: Method) -> Result<ExperimentConfig> {
    let defaults = ExperimentConfig::default();
    Ok(ExperimentConfig {
        method,
        solver: solver_config(settings)?,
        feature_counts: parse_list(settings.get_str("features").unwrap_or(DEFAULT_FEATURE_GRID))?,
        lambda_grid: parse_list(settings.get_str("lambdas").unwrap_or(DEFAULT_L21_GRID))?,
        trials: settings.get_or("trials", defaults.trials)?,
        seed: settings.get_or("seed", defaults.seed)?,
        train_fraction: settings.get_or("train_fraction", defaults.train_fraction)?,
        knn_k: settings.get_or("knn_k", defaults.knn_k)?,
        classifiers: classifiers(settings)?,
        standardize: settings.get_switch("standardize", defaults.standardize)?,
        softmax: defaults.softmax,
    })
}

fn algorithm_of(method: Method) -> Option<Algorithm> {
    match method {
        Method::Hiht => Some(Algorithm::Hiht),
        Method::Ahiht => Some(Algorithm::Ahiht),
        Method::L21 => None,
    }
}

fn synth(settings: &Settings, out: &Path, record: &mut ResultRecord) -> Result<()> {
    let spec = SyntheticSpec {
        features: settings.get_or("dim", 50)?,
        samples: settings.get_or("samples", 150)?,
        classes: settings.get_or("classes", 3)?,
        support_size: settings.get_or("support", 3)?,
        noise_sigma: settings.get_or("sigma", 0.1)?,
        seed: settings.get_or("seed", 0)?,
    };
    let data = generate_synthetic(&spec)?;
    save_csv(&out.join("data.csv"), &data.dataset, true)?;
    let support_rows: Vec<Vec<String>> =
        data.support().iter().map(|i| vec![i.to_string()]).collect();
    write_table(out, "support.csv", &["feature"], &support_rows)?;
    record.dataset = Some(DatasetFingerprint::of(&data.dataset));
    record.outputs = json!({ "spec": spec, "support": data.support() });
    println!(
        "wrote {} samples x {} features, {} classes, planted support {:?}",
        spec.samples,
        spec.features,
        spec.classes,
        data.support()
    );
    Ok(())
}

/// Objective trace of a whole path: the accepted-update objectives of every
/// point, numbered consecutively.
fn path_trace_rows(path: &RegularizationPath) -> Vec<Vec<String>> {
    let mut rows = vec![vec!["0".to_string(), format_sig(path.points[0].trace[0])]];
    let mut iteration = 0;
    for point in &path.points {
        for &value in &point.trace[1..] {
            iteration += 1;
            rows.push(vec![iteration.to_string(), format_sig(value)]);
        }
    }
    rows
}

fn point_trace_rows(traces: &[(f64, &[f64])]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, (lambda, trace)) in traces.iter().enumerate() {
        for (it, &value) in trace.iter().enumerate() {
            rows.push(vec![
                k.to_string(),
                format_sig(*lambda),
                it.to_string(),
                format_sig(value),
            ]);
        }
    }
    rows
}

fn join_indices(indices: &[usize]) -> String {
    indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

fn path_summary(path: &RegularizationPath) -> serde_json::Value {
    json!(path
        .points
        .iter()
        .map(|p| json!({
            "lambda": p.lambda,
            "support_size": p.support_size,
            "objective": p.objective,
            "inner_iterations": p.inner_iterations,
            "iht_updates": p.iht_updates,
            "final_l": p.final_l,
            "truncated": p.truncated,
            "support": p.support,
        }))
        .collect::<Vec<_>>())
}

fn config_json(config: &ResolvedConfig) -> serde_json::Value {
    json!({
        "lambda0": config.lambda0,
        "l0": config.l0,
        "rho": config.rho,
        "gamma": config.gamma,
        "eta": config.eta,
        "epsilon": config.epsilon,
        "path_steps": config.path_steps,
        "max_inner_iterations": config.max_inner_iterations,
        "max_l": config.max_l,
    })
}

fn prepare(
    settings: &Settings,
    record: &mut ResultRecord,
) -> Result<(Dataset, CenteredData, ResolvedConfig)> {
    let dataset = load_dataset(settings)?;
    record.dataset = Some(DatasetFingerprint::of(&dataset));
    let centered = center(&dataset)?;
    let resolved = resolve_config(&solver_config(settings)?, &centered)?;
    Ok((dataset, centered, resolved))
}

fn write_path_tables(
    out: &Path,
    path: &RegularizationPath,
    detailed: bool,
    prefix: &str,
) -> Result<()> {
    let rows: Vec<Vec<String>> = path
        .points
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut row = vec![
                k.to_string(),
                format_sig(p.lambda),
                p.support_size.to_string(),
                format_sig(p.objective),
                p.inner_iterations.to_string(),
                p.iht_updates.to_string(),
                format_sig(p.final_l),
                p.truncated.to_string(),
            ];
            if detailed {
                row.push(join_indices(&p.support));
            }
            row
        })
        .collect();
    let mut header = vec![
        "point",
        "lambda",
        "support_size",
        "objective",
        "inner_iterations",
        "iht_updates",
        "final_l",
        "truncated",
    ];
    if detailed {
        header.push("support");
    }
    write_table(out, &format!("{prefix}path.csv"), &header, &rows)?;
    write_table(
        out,
        &format!("{prefix}trace.csv"),
        &["iteration", "objective"],
        &path_trace_rows(path),
    )?;
    if detailed {
        let traces: Vec<(f64, &[f64])> = path
            .points
            .iter()
            .map(|p| (p.lambda, p.trace.as_slice()))
            .collect();
        write_table(
            out,
            &format!("{prefix}point_traces.csv"),
            &["point", "lambda", "iteration", "objective"],
            &point_trace_rows(&traces),
        )?;
    }
    Ok(())
}

fn l21_grid_solutions(
    settings: &Settings,
    centered: &CenteredData,
    resolved: &ResolvedConfig,
) -> Result<Vec<L21Solution>> {
    let scales: Vec<f64> = parse_list(settings.get_str("lambdas").unwrap_or(DEFAULT_L21_GRID))?;
    let lambda_max = l21_lambda_max(centered);
    scales
        .iter()
        .map(|s| l21_solve(centered, s * lambda_max, resolved))
        .collect()
}

fn solve_command(
    settings: &Settings,
    out: &Path,
    record: &mut ResultRecord,
    detailed: bool,
) -> Result<()> {
    let (_, centered, resolved) = prepare(settings, record)?;
    let chosen = method(settings, Method::Ahiht)?;
    let start = Instant::now();
    match algorithm_of(chosen) {
        Some(algorithm) => {
            let path = solve(algorithm, &centered, &resolved)?;
            record
                .timings
                .insert("solve".into(), start.elapsed().as_secs_f64());
            write_path_tables(out, &path, detailed, "")?;
            println!(
                "{:>4} {:>14} {:>8} {:>16}",
                "pt", "lambda", "support", "objective"
            );
            for (k, p) in path.points.iter().enumerate() {
                println!(
                    "{k:>4} {:>14.6e} {:>8} {:>16.9e}",
                    p.lambda, p.support_size, p.objective
                );
            }
            record.outputs = json!({
                "algorithm": algorithm.name(),
                "config": config_json(&resolved),
                "total_iht_updates": path.total_iht_updates,
                "points": path_summary(&path),
            });
        }
        None => {
            let solutions = l21_grid_solutions(settings, &centered, &resolved)?;
            record
                .timings
                .insert("solve".into(), start.elapsed().as_secs_f64());
            let rows: Vec<Vec<String>> = solutions
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut row = vec![
                        k.to_string(),
                        format_sig(s.lambda),
                        s.weights.support_size().to_string(),
                        s.weights.zero_row_count().to_string(),
                        format_sig(s.objective),
                        s.iterations.to_string(),
                        s.converged.to_string(),
                    ];
                    if detailed {
                        row.push(join_indices(&s.weights.support()));
                    }
                    row
                })
                .collect();
            let mut header = vec![
                "point",
                "lambda",
                "nonzero_rows",
                "zero_rows",
                "objective",
                "iterations",
                "converged",
            ];
            if detailed {
                header.push("support");
            }
            write_table(out, "path.csv", &header, &rows)?;
            let traces: Vec<(f64, &[f64])> = solutions
                .iter()
                .map(|s| (s.lambda, s.trace.as_slice()))
                .collect();
            write_table(
                out,
                "point_traces.csv",
                &["point", "lambda", "iteration", "objective"],
                &point_trace_rows(&traces),
            )?;
            println!(
                "{:>4} {:>14} {:>8} {:>16}",
                "pt", "lambda", "nonzero", "objective"
            );
            for (k, s) in solutions.iter().enumerate() {
                println!(
                    "{k:>4} {:>14.6e} {:>8} {:>16.9e}",
                    s.lambda,
                    s.weights.support_size(),
                    s.objective
                );
            }
            record.outputs = json!({
                "algorithm": "l21",
                "config": config_json(&resolved),
                "points": solutions.iter().map(|s| json!({
                    "lambda": s.lambda,
                    "nonzero_rows": s.weights.support_size(),
                    "zero_rows": s.weights.zero_row_count(),
                    "objective": s.objective,
                    "iterations": s.iterations,
                    "converged": s.converged,
                })).collect::<Vec<_>>(),
            });
        }
    }
    Ok(())
}

fn select(settings: &Settings, out: &Path, record: &mut ResultRecord) -> Result<()> {
    let (_, centered, resolved) = prepare(settings, record)?;
    let counts: Vec<usize> = parse_list(
        settings
            .get_str("count")
            .or(settings.get_str("features"))
            .unwrap_or(DEFAULT_FEATURE_GRID),
    )?;
    let chosen = method(settings, Method::Ahiht)?;
    let mut rows = Vec::new();
    let mut selections = Vec::new();
    match algorithm_of(chosen) {
        Some(algorithm) => {
            let path = solve(algorithm, &centered, &resolved)?;
            for &count in &counts {
                let features = select_features(&path, count)?;
                let lambda = select_by_count(&path, count)?.lambda;
                rows.push(vec![
                    count.to_string(),
                    features.len().to_string(),
                    format_sig(lambda),
                    join_indices(&features),
                ]);
                selections.push(json!({"count": count, "lambda": lambda, "features": features}));
            }
        }
        None => {
            let scales: Vec<f64> = parse_list(settings.get_str("lambdas").unwrap_or("0.1"))?;
            let lambda = scales[0] * l21_lambda_max(&centered);
            let sol = l21_solve(&centered, lambda, &resolved)?;
            let norms = row_norms(&sol.weights);
            for &count in &counts {
                let features = top_k_by_norm(&norms, count);
                rows.push(vec![
                    count.to_string(),
                    features.len().to_string(),
                    format_sig(lambda),
                    join_indices(&features),
                ]);
                selections.push(json!({"count": count, "lambda": lambda, "features": features}));
            }
        }
    }
    write_table(
        out,
        "selection.csv",
        &["count", "selected", "lambda", "features"],
        &rows,
    )?;
    for row in &rows {
        println!("{:>5} -> {:>5} features: {}", row[0], row[1], row[3]);
    }
    record.outputs = json!({ "algorithm": chosen.name(), "selections": selections });
    Ok(())
}

fn curve_rows(report: &ExperimentReport, classifier: Classifier) -> Vec<Vec<String>> {
    let mut best: Vec<(usize, f64, f64)> = Vec::new();
    for p in report.curves.iter().filter(|p| p.classifier == classifier) {
        // for the ℓ2,1 baseline keep the best λ per count
        match best.iter_mut().find(|b| b.0 == p.requested_count) {
            Some(b) if b.1 >= p.mean_accuracy => {}
            Some(b) => *b = (p.requested_count, p.mean_accuracy, p.accuracy_std),
            None => best.push((p.requested_count, p.mean_accuracy, p.accuracy_std)),
        }
    }
    best.sort_by_key(|b| b.0);
    best.into_iter()
        .map(|(c, m, s)| vec![c.to_string(), format_sig(m), format_sig(s)])
        .collect()
}

fn write_report_tables(out: &Path, report: &ExperimentReport, prefix: &str) -> Result<()> {
    for &classifier in &report.config.classifiers {
        write_table(
            out,
            &format!("{prefix}curve_{}.csv", classifier.name()),
            &["count", "accuracy", "accuracy_std"],
            &curve_rows(report, classifier),
        )?;
    }
    let rows: Vec<Vec<String>> = report
        .curves
        .iter()
        .map(|p| {
            vec![
                p.classifier.name().to_string(),
                p.lambda_scale.map_or(String::new(), format_sig),
                p.requested_count.to_string(),
                format_sig(p.mean_selected),
                format_sig(p.mean_accuracy),
                format_sig(p.accuracy_std),
            ]
        })
        .collect();
    write_table(
        out,
        &format!("{prefix}curves.csv"),
        &[
            "classifier",
            "lambda_scale",
            "count",
            "mean_selected",
            "accuracy",
            "accuracy_std",
        ],
        &rows,
    )?;
    let rows: Vec<Vec<String>> = report
        .baseline
        .iter()
        .map(|b| {
            vec![
                b.classifier.name().to_string(),
                format_sig(b.mean_accuracy),
                format_sig(b.accuracy_std),
            ]
        })
        .collect();
    write_table(
        out,
        &format!("{prefix}baseline.csv"),
        &["classifier", "accuracy", "accuracy_std"],
        &rows,
    )
}

fn report_summary(report: &ExperimentReport) -> serde_json::Value {
    json!({
        "method": report.method.name(),
        "dataset_name": report.dataset_name,
        "mean_accuracy": report.mean_accuracy,
        "accuracy_std": report.accuracy_std,
        "mean_feature_count": report.mean_feature_count,
        "baseline": report.baseline,
        "best": report.best,
        "best_is_selected_on_test_data": true,
        "curves": report.curves,
        "seeds": report.seeds,
        "config": report.config,
    })
}

fn print_report(report: &ExperimentReport) {
    for b in &report.baseline {
        println!(
            "all features, {:<8}: {:.4} +- {:.4}",
            b.classifier.name(),
            b.mean_accuracy,
            b.accuracy_std
        );
    }
    for p in &report.best {
        println!(
            "best {:<6} {:<8}: {:.4} +- {:.4} at {} features (chosen on test accuracy)",
            report.method.name(),
            p.classifier.name(),
            p.mean_accuracy,
            p.accuracy_std,
            p.requested_count
        );
    }
}

fn dataset_name(settings: &Settings) -> String {
    settings
        .get_str("name")
        .map(str::to_string)
        .or_else(|| {
            settings
                .get_str("data")
                .and_then(|p| Path::new(p).file_stem())
                .map(|s| s.to_string_lossy().into_owned())
        })
        .unwrap_or_else(|| "dataset".into())
}

fn evaluate(settings: &Settings, out: &Path, record: &mut ResultRecord) -> Result<()> {
    let dataset = load_dataset(settings)?;
    record.dataset = Some(DatasetFingerprint::of(&dataset));
    let config = experiment_config(settings, method(settings, Method::Ahiht)?)?;
    let start = Instant::now();
    let report = run_experiment(&dataset, &dataset_name(settings), &config)?;
    record
        .timings
        .insert("experiment".into(), start.elapsed().as_secs_f64());
    write_report_tables(out, &report, "")?;
    print_report(&report);
    record.outputs = report_summary(&report);
    Ok(())
}

fn compare(settings: &Settings, out: &Path, record: &mut ResultRecord) -> Result<()> {
    let (dataset, centered, resolved) = prepare(settings, record)?;
    let mut timing_rows = Vec::new();
    let mut update_rows = Vec::new();
    let mut paths = Vec::new();
    for algorithm in [Algorithm::Hiht, Algorithm::Ahiht] {
        let path = solve(algorithm, &centered, &resolved)?;
        write_table(
            out,
            &format!("trace_{}.csv", algorithm.name()),
            &["iteration", "objective"],
            &path_trace_rows(&path),
        )?;
        let sparse_points = path
            .points
            .iter()
            .filter(|p| p.support_size <= SPARSITY_CONTRAST_MAX)
            .count();
        let mean_seconds = path.wall_time / path.points.len() as f64;
        timing_rows.push(vec![
            algorithm.name().to_string(),
            format_sig(path.wall_time),
            format_sig(mean_seconds),
        ]);
        update_rows.push(vec![
            algorithm.name().to_string(),
            path.total_iht_updates.to_string(),
            path.points.len().to_string(),
            sparse_points.to_string(),
        ]);
        record
            .timings
            .insert(algorithm.name().into(), path.wall_time);
        paths.push(path);
    }
    // timings vary run to run; the update counts do not
    write_table(
        out,
        "timings.csv",
        &["method", "seconds", "seconds_per_lambda"],
        &timing_rows,
    )?;
    write_table(
        out,
        "updates.csv",
        &[
            "method",
            "iht_updates",
            "points",
            "points_with_small_support",
        ],
        &update_rows,
    )?;

    let mut sparsity_rows = Vec::new();
    let mut sparsity = Vec::new();
    let hiht = &paths[0];
    for p in hiht
        .points
        .iter()
        .filter(|p| p.support_size <= SPARSITY_CONTRAST_MAX)
    {
        let target = loss(&p.weights, &centered)?;
        let l21 = l21_matched_loss(&centered, target, &resolved, MATCH_ITERATIONS)?;
        let l21_loss = loss(&l21.weights, &centered)?;
        let zero_rows = p.weights.zero_row_count();
        sparsity_rows.push(vec![
            format_sig(p.lambda),
            p.support_size.to_string(),
            zero_rows.to_string(),
            format_sig(target),
            format_sig(l21.lambda),
            l21.weights.zero_row_count().to_string(),
            format_sig(l21_loss),
        ]);
        sparsity.push(json!({
            "lambda": p.lambda,
            "l20_support": p.support_size,
            "l20_zero_rows": zero_rows,
            "l21_lambda": l21.lambda,
            "l21_zero_rows": l21.weights.zero_row_count(),
        }));
    }
    write_table(
        out,
        "sparsity.csv",
        &[
            "lambda",
            "l20_support",
            "l20_zero_rows",
            "l20_loss",
            "l21_lambda",
            "l21_zero_rows",
            "l21_loss",
        ],
        &sparsity_rows,
    )?;

    let trials: usize = settings.get_or("trials", ExperimentConfig::default().trials)?;
    let mut reports = serde_json::Map::new();
    if trials > 0 {
        let name = dataset_name(settings);
        for m in [Method::Hiht, Method::Ahiht, Method::L21] {
            let config = experiment_config(settings, m)?;
            let report = run_experiment(&dataset, &name, &config)?;
            write_report_tables(out, &report, &format!("{}_", m.name()))?;
            print_report(&report);
            reports.insert(m.name().into(), report_summary(&report));
        }
    }
    for (row, path) in update_rows.iter().zip(&paths) {
        println!(
            "{:<6} {:>8} IHT updates over {} points in {:.3}s",
            row[0],
            row[1],
            path.points.len(),
            path.wall_time
        );
    }
    record.outputs = json!({
        "config": config_json(&resolved),
        "updates": paths.iter().map(|p| json!({
            "algorithm": p.algorithm.name(),
            "total_iht_updates": p.total_iht_updates,
        })).collect::<Vec<_>>(),
        "sparsity": sparsity,
        "experiments": reports,
    });
    Ok(())
}

fn oracle_check(settings: &Settings, out: &Path, record: &mut ResultRecord) -> Result<()> {
    let (_, centered, resolved) = prepare(settings, record)?;
    let max_d = settings.get_or("max_d", DEFAULT_ORACLE_MAX_DIM)?;
    if centered.feature_count() > max_d {
        return Err(Error::OracleTooLarge {
            dim: centered.feature_count(),
            max_dim: max_d,
        });
    }
    let chosen = method(settings, Method::Hiht)?;
    let algorithm = algorithm_of(chosen)
        .ok_or_else(|| Error::Usage("oracle-check compares hiht or ahiht paths".into()))?;
    let path = solve(algorithm, &centered, &resolved)?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    println!(
        "{:>4} {:>14} {:>16} {:>16} {:>12}",
        "pt", "lambda", "solver", "oracle", "rel_gap"
    );
    for (k, p) in path.points.iter().enumerate() {
        let oracle = brute_force_oracle(&centered, p.lambda, max_d)?;
        let gap = p.objective - oracle.objective;
        let relative = gap / oracle.objective.abs().max(f64::MIN_POSITIVE);
        println!(
            "{k:>4} {:>14.6e} {:>16.9e} {:>16.9e} {:>12.3e}",
            p.lambda, p.objective, oracle.objective, relative
        );
        rows.push(vec![
            k.to_string(),
            format_sig(p.lambda),
            format_sig(p.objective),
            format_sig(oracle.objective),
            format_sig(gap),
            format_sig(relative),
            p.support_size.to_string(),
            oracle.support.len().to_string(),
        ]);
        gaps.push(json!({
            "lambda": p.lambda,
            "solver_objective": p.objective,
            "oracle_objective": oracle.objective,
            "relative_gap": relative,
            "solver_support": p.support,
            "oracle_support": oracle.support,
        }));
    }
    write_table(
        out,
        "oracle.csv",
        &[
            "point",
            "lambda",
            "solver_objective",
            "oracle_objective",
            "gap",
            "relative_gap",
            "solver_support_size",
            "oracle_support_size",
        ],
        &rows,
    )?;
    record.outputs = json!({
        "algorithm": algorithm.name(),
        "config": config_json(&resolved),
        "points": gaps,
    });
    Ok(())
}
