// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use fused_changepoint::cv::{fit_cv, geometric_lambda_grid, CvResult, DEFAULT_GRID_RATIO};
use fused_changepoint::filter::{full_filter_set, reduced_filter_set};
use fused_changepoint::fused::fused_lasso_1d;
use fused_changepoint::graph::{
    graph_changepoints, graph_fused_lasso, graph_hausdorff, graph_screening_distance,
    parse_edge_list, EdgeSet, Graph,
};
use fused_changepoint::interpolant::{
    lower_interpolant, verify_interpolant_properties, InterpolantReport,
};
use fused_changepoint::metrics::{
    changepoints, default_jump_tol, hausdorff, knots2, min_spacing, screening_distance,
};
use fused_changepoint::sim::{auto_bandwidth, sweep, Experiment, SweepConfig};
use fused_changepoint::tau::{
    select_tau, select_tau_with_fit, Fitter, FusedCv, FusedFixed, TauConfig,
};
use fused_changepoint::trend::{knot_tol, trend_filter_linear};
use fused_changepoint::{parse_signal, ChangepointSet, ExtendedDistance, Signal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::error::{io_error, CliError, CliResult};
use crate::manifest::{self, read_input, sidecar_path, InputDigest, RunManifest, TOOL_VERSION};

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Fit(a) => fit(a),
        Command::Filter(a) => filter(a),
        Command::SelectTau(a) => select_tau_cmd(a),
        Command::Interpolant(a) => interpolant(a),
        Command::Metrics(a) => metrics(a),
        Command::Simulate(a) => simulate(a),
        Command::Replay(a) => replay(a),
    }
}

fn make_manifest<A: Serialize>(
    subcommand: &str,
    args: &A,
    resolved: Value,
    inputs: Vec<InputDigest>,
    seed: Option<u64>,
    outputs: Vec<&Path>,
) -> RunManifest {
    RunManifest {
        version: TOOL_VERSION.to_string(),
        subcommand: subcommand.to_string(),
        args: serde_json::to_value(args).expect("arguments serialize"),
        resolved,
        inputs,
        seed,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("output serializes");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_signal(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<Signal> {
    let text = read_input(path, inputs)?;
    parse_signal(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn check_penalty(lambda: f64) -> CliResult<f64> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(lambda)
    } else {
        Err(CliError::input(format!(
            "--lambda must be finite and >= 0, got {lambda}"
        )))
    }
}

fn resolve_bandwidth(b: AutoOr<usize>, n: usize) -> usize {
    match b {
        AutoOr::Value(v) => v,
        AutoOr::Auto => auto_bandwidth(n),
    }
}

#[derive(Serialize, Deserialize)]
struct FitOutput {
    model: Model,
    n: usize,
    lambda: f64,
    objective: f64,
    theta_hat: Signal,
    #[serde(skip_serializing_if = "Option::is_none")]
    changepoints: Option<ChangepointSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    knots2: Option<ChangepointSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_changepoints: Option<EdgeSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<CvResult>,
    manifest: RunManifest,
}

fn fit(a: FitArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let y = read_signal(&a.input, &mut inputs)?;
    let n = y.len();
    let lambda_arg = a.lambda.map(check_penalty).transpose()?;
    let need_lambda =
        || lambda_arg.ok_or_else(|| CliError::input("--lambda is required for this model"));
    if a.cv.is_some() && a.model != Model::Fl1d {
        return Err(CliError::input("--cv is only available for --model fl1d"));
    }
    if a.graph.is_some() != (a.model == Model::Gfl) {
        return Err(CliError::input(
            "--graph is required for gfl and not accepted otherwise",
        ));
    }

    let mut out = FitOutput {
        model: a.model,
        n,
        lambda: 0.0,
        objective: 0.0,
        theta_hat: y.clone(),
        changepoints: None,
        knots2: None,
        edge_changepoints: None,
        folds: None,
        cv: None,
        manifest: make_manifest("fit", &a, Value::Null, Vec::new(), None, vec![]),
    };
    match a.model {
        Model::Fl1d => {
            let fit = match (lambda_arg, a.cv) {
                (Some(l), _) => fused_lasso_1d(&y, l)?,
                (None, Some(spec)) => {
                    let grid = spec
                        .grid_points
                        .map(|g| geometric_lambda_grid(&y, g, DEFAULT_GRID_RATIO));
                    let (fit, cv) = fit_cv(&y, spec.folds, grid.as_deref())?;
                    out.folds = Some(spec.folds);
                    out.cv = Some(cv);
                    fit
                }
                (None, None) => return Err(CliError::input("fl1d needs --lambda or --cv")),
            };
            out.changepoints = Some(changepoints(&fit.theta_hat, 0.0));
            (out.lambda, out.objective, out.theta_hat) = (fit.lambda, fit.objective, fit.theta_hat);
        }
        Model::Tf1 => {
            let fit = trend_filter_linear(&y, need_lambda()?, a.tol, a.max_iter)?;
            out.knots2 = Some(knots2(&fit.theta_hat, knot_tol(&fit.theta_hat)));
            (out.lambda, out.objective, out.theta_hat) = (fit.lambda, fit.objective, fit.theta_hat);
        }
        Model::Gfl => {
            let path = a.graph.as_deref().expect("checked above");
            let text = read_input(path, &mut inputs)?;
            let g = parse_edge_list(&text, n)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let fit = graph_fused_lasso(&y, &g, need_lambda()?, a.tol, a.max_iter)?;
            out.edge_changepoints = Some(graph_changepoints(
                &fit.theta_hat,
                &g,
                default_jump_tol(&fit.theta_hat),
            ));
            (out.lambda, out.objective, out.theta_hat) = (fit.lambda, fit.objective, fit.theta_hat);
        }
    }
    out.manifest = make_manifest(
        "fit",
        &a,
        json!({ "lambda": out.lambda }),
        inputs,
        None,
        vec![&a.output],
    );
    write_json(&a.output, &out)
}

#[derive(Deserialize)]
struct FitInput {
    model: Model,
    lambda: f64,
    theta_hat: Signal,
    #[serde(default)]
    folds: Option<usize>,
}

#[derive(Serialize)]
struct FilterOutput<'a> {
    variant: VariantArg,
    n: usize,
    bandwidth: usize,
    tau: f64,
    locations: &'a ChangepointSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_permutation_maxima: Option<Vec<f64>>,
    manifest: RunManifest,
}

fn fitter_for(fit: &FitInput) -> Box<dyn Fitter> {
    match fit.folds {
        Some(folds) => Box::new(FusedCv { folds }),
        None => Box::new(FusedFixed { lambda: fit.lambda }),
    }
}

fn filter(a: FilterArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let text = read_input(&a.input, &mut inputs)?;
    let fit: FitInput = parse_json(&a.input, &text)?;
    if fit.model == Model::Gfl {
        return Err(CliError::input("the Haar filter applies to 1-D fits only"));
    }
    let theta = &fit.theta_hat;
    let n = theta.len();
    let b = resolve_bandwidth(a.bandwidth, n);
    let (tau, maxima) = match a.tau {
        AutoOr::Value(t) => (t, None),
        AutoOr::Auto => {
            if fit.model != Model::Fl1d {
                return Err(CliError::input("--tau auto needs a fused lasso (fl1d) fit"));
            }
            let path = a.signal.as_deref().ok_or_else(|| {
                CliError::input("--tau auto needs the original data via --signal")
            })?;
            let y = read_signal(path, &mut inputs)?;
            let cfg = TauConfig::new(a.permutations, b, a.q, a.seed);
            let sel = select_tau_with_fit(&y, theta, fitter_for(&fit).as_ref(), cfg)?;
            (sel.tau_hat, Some(sel.per_permutation_maxima))
        }
    };
    let tol = if fit.model == Model::Fl1d {
        0.0
    } else {
        default_jump_tol(theta)
    };
    let set = match a.variant {
        VariantArg::Full => full_filter_set(theta, b, tau)?,
        VariantArg::Reduced => reduced_filter_set(theta, b, tau, tol)?,
    };
    let seed = matches!(a.tau, AutoOr::Auto).then_some(a.seed);
    let manifest = make_manifest(
        "filter",
        &a,
        json!({ "bandwidth": b, "tau": tau }),
        inputs,
        seed,
        vec![&a.output],
    );
    write_json(
        &a.output,
        &FilterOutput {
            variant: a.variant,
            n,
            bandwidth: b,
            tau,
            locations: &set.locations,
            per_permutation_maxima: maxima,
            manifest,
        },
    )
}

fn select_tau_cmd(a: SelectTauArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let y = read_signal(&a.input, &mut inputs)?;
    let b = resolve_bandwidth(a.bandwidth, y.len());
    let fitter: Box<dyn Fitter> = match a.fitter {
        FitterArg::Fl1dCv => Box::new(FusedCv { folds: a.folds }),
        FitterArg::Fl1d => {
            let lambda = a
                .lambda
                .ok_or_else(|| CliError::input("--fitter fl1d needs --lambda"))?;
            Box::new(FusedFixed {
                lambda: check_penalty(lambda)?,
            })
        }
    };
    let sel = select_tau(
        &y,
        fitter.as_ref(),
        TauConfig::new(a.permutations, b, a.q, a.seed),
    )?;
    let manifest = make_manifest(
        "select-tau",
        &a,
        json!({ "bandwidth": b, "tau": sel.tau_hat }),
        inputs,
        Some(a.seed),
        vec![&a.output],
    );
    write_json(
        &a.output,
        &json!({
            "tau_hat": sel.tau_hat,
            "per_permutation_maxima": sel.per_permutation_maxima,
            "bandwidth": b,
            "permutations": a.permutations,
            "q": a.q,
            "seed": a.seed,
            "manifest": manifest,
        }),
    )
}

#[derive(Serialize)]
struct InterpolantOutput {
    z: Signal,
    switch_points: Vec<usize>,
    blocks: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<InterpolantReport>,
    manifest: RunManifest,
}

fn interpolant(a: InterpolantArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let x = read_signal(&a.input, &mut inputs)?;
    let text = read_input(&a.changepoints, &mut inputs)?;
    let raw: Vec<usize> = parse_json(&a.changepoints, &text)?;
    let s0 = ChangepointSet::new(raw, x.len())?;
    let out = lower_interpolant(&x, &s0)?;
    let report = if a.verify {
        Some(verify_interpolant_properties(
            &x,
            &out.z,
            &s0,
            min_spacing(&s0, x.len()),
        )?)
    } else {
        None
    };
    let manifest = make_manifest(
        "interpolant",
        &a,
        Value::Null,
        inputs,
        None,
        vec![&a.output],
    );
    write_json(
        &a.output,
        &InterpolantOutput {
            z: out.z,
            switch_points: out.switch_points,
            blocks: out.blocks,
            report,
            manifest,
        },
    )
}

/// Largest node index mentioned in an edge list.
fn max_node(text: &str) -> usize {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .filter_map(|t| t.parse::<usize>().ok())
        .max()
        .unwrap_or(0)
}

fn metrics(a: MetricsArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let text_a = read_input(&a.a, &mut inputs)?;
    let text_b = read_input(&a.b, &mut inputs)?;
    let graph_based = matches!(a.dist, DistArg::Dg | DistArg::DgHausdorff);
    let value: ExtendedDistance = if graph_based {
        let path = a
            .graph
            .as_deref()
            .ok_or_else(|| CliError::input("--graph is required for dg distances"))?;
        let text = read_input(path, &mut inputs)?;
        let nodes = a.nodes.unwrap_or_else(|| max_node(&text));
        let g: Graph = parse_edge_list(&text, nodes)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let sa: EdgeSet = parse_json(&a.a, &text_a)?;
        let sb: EdgeSet = parse_json(&a.b, &text_b)?;
        sa.check_in(&g)?;
        sb.check_in(&g)?;
        match a.dist {
            DistArg::Dg => graph_screening_distance(&sa, &sb, &g),
            _ => graph_hausdorff(&sa, &sb, &g),
        }
    } else {
        if a.graph.is_some() {
            return Err(CliError::input("--graph only applies to dg distances"));
        }
        let sa: ChangepointSet = parse_json(&a.a, &text_a)?;
        let sb: ChangepointSet = parse_json(&a.b, &text_b)?;
        match a.dist {
            DistArg::Screen => screening_distance(&sa, &sb),
            _ => hausdorff(&sa, &sb),
        }
    };
    let outputs: Vec<&Path> = a.output.iter().map(PathBuf::as_path).collect();
    let manifest = make_manifest("metrics", &a, Value::Null, inputs, None, outputs);
    let out = json!({ "dist": a.dist, "value": value, "manifest": manifest });
    match &a.output {
        Some(path) => write_json(path, &out),
        None => {
            println!(
                "{}",
                serde_json::to_string(&out).expect("output serializes")
            );
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TrialRow {
    experiment: &'static str,
    value: f64,
    trial: usize,
    seed: u64,
    n: usize,
    lambda: f64,
    b: usize,
    tau: f64,
    l2_error: f64,
    raw_count: usize,
    filtered_count: usize,
    raw_hausdorff: f64,
    hausdorff: f64,
    screen: f64,
    precision: f64,
    full_hausdorff: f64,
}

fn trials_path(out: &Path) -> PathBuf {
    out.with_extension("trials.csv")
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let experiment = Experiment::from(a.experiment);
    let mut cfg = SweepConfig::new(experiment, a.trials, a.seed);
    if let Some(grid) = &a.grid {
        cfg.grid = grid.clone();
    }
    cfg.n = a.n;
    cfg.permutations = a.permutations;
    cfg.q = a.q;
    cfg.folds = a.folds;
    cfg.noise_sd = a.noise_sd;
    let out = sweep(&cfg)?;

    let csv_err = |path: &Path, e: csv::Error| CliError::input(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&a.out).map_err(|e| csv_err(&a.out, e))?;
    for row in &out.rows {
        w.serialize(row).map_err(|e| csv_err(&a.out, e))?;
    }
    w.flush().map_err(|e| io_error(&a.out, e))?;

    let mut outputs = vec![a.out.clone()];
    if a.emit_plots_data {
        let path = trials_path(&a.out);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        for (&value, records) in cfg.grid.iter().zip(&out.records) {
            for (trial, r) in records.iter().enumerate() {
                w.serialize(TrialRow {
                    experiment: experiment.name(),
                    value,
                    trial,
                    seed: r.spec.seed,
                    n: r.spec.n,
                    lambda: r.lambda,
                    b: r.b,
                    tau: r.tau,
                    l2_error: r.l2_error,
                    raw_count: r.raw_changepoints.len(),
                    filtered_count: r.filtered_changepoints.len(),
                    raw_hausdorff: r.raw.hausdorff.as_f64(),
                    hausdorff: r.filtered.hausdorff.as_f64(),
                    screen: r.filtered.screen.as_f64(),
                    precision: r.filtered.precision.as_f64(),
                    full_hausdorff: r.full_hausdorff.as_f64(),
                })
                .map_err(|e| csv_err(&path, e))?;
            }
        }
        w.flush().map_err(|e| io_error(&path, e))?;
        outputs.push(path);
    }
    let resolved = json!({
        "grid": cfg.grid,
        "bandwidths": out.rows.iter().map(|r| r.b).collect::<Vec<_>>(),
    });
    let manifest = make_manifest(
        "simulate",
        &a,
        resolved,
        Vec::new(),
        Some(a.seed),
        outputs.iter().map(PathBuf::as_path).collect(),
    );
    write_json(&sidecar_path(&a.out), &manifest)
}

fn replay(a: ReplayArgs) -> CliResult<()> {
    let m = manifest::load(&a.manifest)?;
    if m.version != TOOL_VERSION {
        return Err(CliError::input(format!(
            "manifest was written by {}, this is {TOOL_VERSION}",
            m.version
        )));
    }
    manifest::verify_inputs(&m)?;
    let mut args = m.args.clone();
    if let Some(out) = &a.output {
        let key = if m.subcommand == "simulate" {
            "out"
        } else {
            "output"
        };
        args[key] = json!(out);
    }
    let bad = |e: serde_json::Error| CliError::input(format!("manifest arguments: {e}"));
    let cmd = match m.subcommand.as_str() {
        "fit" => Command::Fit(serde_json::from_value(args).map_err(bad)?),
        "filter" => Command::Filter(serde_json::from_value(args).map_err(bad)?),
        "select-tau" => Command::SelectTau(serde_json::from_value(args).map_err(bad)?),
        "interpolant" => Command::Interpolant(serde_json::from_value(args).map_err(bad)?),
        "metrics" => Command::Metrics(serde_json::from_value(args).map_err(bad)?),
        "simulate" => Command::Simulate(serde_json::from_value(args).map_err(bad)?),
        other => {
            return Err(CliError::input(format!(
                "cannot replay subcommand {other:?}"
            )))
        }
    };
    dispatch(cmd)
}
