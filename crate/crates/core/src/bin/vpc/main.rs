//! `vpc` command-line tool.
//!
//! Exit codes: 0 all uniformity checks pass, 3 a check failed (artifacts are
//! still written), 1 usage error, 2 data error.

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::*;
use vpc::calibration::{
    bar_check, bar_check_categorical, bar_check_counts, cumulative_ordinal_calibration,
    ovo_calibration, pav_calibration_plot, pav_residuals, residual_plot, BarCheck,
    CalibrationCurve, PavOptions,
};
use vpc::data::{load_table, write_table, ObservationSample, PredictiveDraws, Table, TableSchema};
use vpc::detect::{diagnose, recommend, RequestedCheck};
use vpc::estimators::{
    fit_histogram, fit_kde, fit_qdot, BinRule, Binwidth, Boundary, DensityEstimate, KdeConfig,
};
use vpc::overlay::{overlay_histogram, overlay_kde, overlay_qdot, OverlaySpec};
use vpc::pit::{pit_from_cdf_values, pit_from_draws, pit_sample, PitSet};
use vpc::plot::{density_plot, pit_ecdf_plot, Figure, PlotSpec};
use vpc::render::{write_atomic, write_figure, CheckKind, CheckRecord, DiagnosticReport, InputDigest};
use vpc::rootogram::{count_frequencies, rootogram, RootogramSpec};
use vpc::synthetic::DensityKind;
use vpc::uniformity::{gof_test, GofConfig, GofVerdict};

enum Failure {
    Usage(String),
    Data(vpc::Error),
}

impl From<vpc::Error> for Failure {
    fn from(e: vpc::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Outcome {
    let name = command.name();
    match command {
        Command::Density(a) => density(name, a),
        Command::Pit(a) => pit(name, a),
        Command::Detect(a) => detect(name, a),
        Command::Overlay(a) => overlay(name, a),
        Command::Rootogram(a) => root(name, a),
        Command::Calibration(a) => calibration(name, a),
        Command::Demo(a) => demo(a),
    }
}

fn out_paths(command: &str, c: &Common) -> (PathBuf, PathBuf) {
    (
        c.out.clone().unwrap_or_else(|| format!("{command}.svg").into()),
        c.report.clone().unwrap_or_else(|| format!("{command}.json").into()),
    )
}

fn warn(report: &mut DiagnosticReport, msg: String) {
    eprintln!("warning: {msg}");
    report.warnings.push(msg);
}

fn load_observations(path: &Path, column: &str) -> Result<ObservationSample, vpc::Error> {
    let schema = TableSchema::Observations { column: column.into() };
    match load_table(path, &schema)? {
        Table::Observations(s) => Ok(s),
        _ => unreachable!("observation schema yields observations"),
    }
}

fn load_draws(path: &Path) -> Result<PredictiveDraws, vpc::Error> {
    match load_table(path, &TableSchema::Draws)? {
        Table::Draws(d) => Ok(d),
        _ => unreachable!("draws schema yields draws"),
    }
}

fn requested(viz: Viz) -> RequestedCheck {
    match viz {
        Viz::Kde => RequestedCheck::Kde,
        Viz::Hist => RequestedCheck::Histogram,
        Viz::Qdot => RequestedCheck::Qdot,
    }
}

fn kde_config(e: &Estimator) -> KdeConfig {
    KdeConfig::default().with_bandwidth(e.bw).with_boundary(e.bounds)
}

fn fit(sample: &ObservationSample, e: &Estimator) -> Result<DensityEstimate, vpc::Error> {
    Ok(match e.viz {
        Viz::Kde => fit_kde(sample, &kde_config(e))?.into(),
        Viz::Hist => {
            let rule = e.bins.map_or(BinRule::FreedmanDiaconis, BinRule::Bins);
            fit_histogram(sample, rule)?.into()
        }
        Viz::Qdot => fit_qdot(sample, e.n_q, Binwidth::Auto)?.into(),
    })
}

fn estimator_config(est: &DensityEstimate, e: &Estimator) -> serde_json::Value {
    match est {
        DensityEstimate::Kde(k) => json!({
            "estimator": "kde",
            "bandwidth": k.bandwidth,
            "boundary": e.bounds,
            "reflect_lo": k.reflect_lo,
            "reflect_hi": k.reflect_hi,
            "display_range": k.display_range,
            "grid_size": k.grid.len(),
        }),
        DensityEstimate::Histogram(h) => json!({
            "estimator": "histogram",
            "rule": h.rule,
            "bin_width": h.bin_width,
            "n_bins": h.n_bins(),
            "fell_back": h.fell_back,
        }),
        DensityEstimate::QuantileDots(q) => json!({
            "estimator": "qdot",
            "n_q": q.n_q,
            "binwidth": q.binwidth(),
        }),
    }
}

fn gof_config(c: &Common, style: Style) -> GofConfig {
    GofConfig {
        style: style.into(),
        ..GofConfig::default().with_alpha(c.alpha)
    }
}

/// Fit the requested estimator to the observations and test its PIT values.
fn observed_gof(
    sample: &ObservationSample,
    e: &Estimator,
    c: &Common,
    report: &mut DiagnosticReport,
) -> Result<(DensityEstimate, GofVerdict), vpc::Error> {
    let diag = diagnose(sample);
    let mut screened = diag.clone();
    if e.bounds != Boundary::None {
        screened.left_bound = None;
        screened.right_bound = None;
    }
    report.recommendation = recommend(&screened, requested(e.viz));
    if let Some(r) = report.recommendation.clone() {
        warn(report, r);
    }
    report.diagnosis = Some(diag);
    let est = fit(sample, e)?;
    let pits = pit_sample(&est, sample, c.seed);
    let verdict = gof_test(&pits, &gof_config(c, e.style))?;
    report.push(
        CheckRecord::new(
            format!("{}_pit_uniformity", est.name()),
            CheckKind::Gof,
            verdict.pass,
            estimator_config(&est, e),
        )
        .with_gof(&pits, verdict.clone()),
    );
    Ok((est, verdict))
}

fn finish(report: &DiagnosticReport, fig: Option<&Figure>, svg: &Path, json_path: &Path) -> Outcome {
    if let Some(fig) = fig {
        write_figure(fig, svg)?;
    }
    write_atomic(json_path, report.to_json()?.as_bytes())?;
    for check in &report.checks {
        let status = match (check.kind, check.pass) {
            (_, true) => "pass".to_string(),
            (CheckKind::Gof, false) => match check.verdict.as_ref().and_then(|v| v.first_exit) {
                Some(x) => format!(
                    "FAIL (first exit {} at z = {:.2})",
                    format!("{:?}", x.direction).to_lowercase(),
                    x.z
                ),
                None => "FAIL".to_string(),
            },
            (CheckKind::Flags, false) => "flagged".to_string(),
        };
        println!("{}: {status}", check.name);
    }
    Ok(report.pass)
}

fn density(name: &str, a: DensityArgs) -> Outcome {
    let (svg, json_path) = out_paths(name, &a.common);
    let sample = load_observations(&a.input.input, &a.input.column)?;
    let mut report = DiagnosticReport::new(name, a.common.seed);
    report.inputs.push(InputDigest::of_file("input", &a.input.input)?);
    let (est, verdict) = observed_gof(&sample, &a.estimator, &a.common, &mut report)?;
    let fig = Figure::new(
        vec![
            density_plot(&est, &format!("{} of {}", est.name(), a.input.column)),
            pit_ecdf_plot(&verdict, "PIT ECDF"),
        ],
        2,
    );
    finish(&report, Some(&fig), &svg, &json_path)
}

fn pit(name: &str, a: PitArgs) -> Outcome {
    let (svg, json_path) = out_paths(name, &a.common);
    let mut report = DiagnosticReport::new(name, a.common.seed);
    report.inputs.push(InputDigest::of_file("input", &a.input)?);
    let pits: PitSet = match &a.draws {
        Some(d) => {
            let obs = load_observations(&a.input, a.column.as_deref().unwrap_or("y"))?;
            report.inputs.push(InputDigest::of_file("draws", d)?);
            pit_from_draws(&obs, &load_draws(d)?, a.common.seed)?
        }
        None => {
            let col = load_observations(&a.input, a.column.as_deref().unwrap_or("pit"))?;
            pit_from_cdf_values(col.values().to_vec())?
        }
    };
    let verdict = gof_test(&pits, &gof_config(&a.common, a.style))?;
    let fig = Figure::new(vec![pit_ecdf_plot(&verdict, "PIT ECDF")], 1);
    report.push(
        CheckRecord::new("pit_uniformity", CheckKind::Gof, verdict.pass, json!({ "source": pits.source }))
            .with_gof(&pits, verdict),
    );
    finish(&report, Some(&fig), &svg, &json_path)
}

fn detect(name: &str, a: DetectArgs) -> Outcome {
    let json_path = a.report.clone().unwrap_or_else(|| format!("{name}.json").into());
    let sample = load_observations(&a.input.input, &a.input.column)?;
    let mut report = DiagnosticReport::new(name, 0);
    report.inputs.push(InputDigest::of_file("input", &a.input.input)?);
    let diag = diagnose(&sample);
    println!(
        "n = {}, distinct = {}, point masses = {:?}, bounds = ({:?}, {:?})",
        diag.n, diag.n_unique, diag.point_mass_values, diag.left_bound, diag.right_bound
    );
    report.recommendation = recommend(&diag, requested(a.viz));
    if let Some(r) = report.recommendation.clone() {
        warn(&mut report, r);
    }
    report.diagnosis = Some(diag);
    finish(&report, None, Path::new(""), &json_path)
}

fn overlay(name: &str, a: OverlayArgs) -> Outcome {
    let (svg, json_path) = out_paths(name, &a.common);
    let obs = load_observations(&a.input.input, &a.input.column)?;
    let draws = load_draws(&a.draws)?;
    let mut report = DiagnosticReport::new(name, a.common.seed);
    report.inputs.push(InputDigest::of_file("input", &a.input.input)?);
    report.inputs.push(InputDigest::of_file("draws", &a.draws)?);
    let spec = OverlaySpec {
        draw_subset: a.n_draws,
        interval_mass: a.interval_mass,
        kde: kde_config(&a.estimator),
        freeze_bandwidth: a.freeze_bw,
        n_q: a.estimator.n_q,
        seed: a.common.seed,
    };
    let title = format!("{} overlay", a.input.column);
    let (panel, details) = match a.estimator.viz {
        Viz::Kde => {
            let o = overlay_kde(&obs, &draws, &spec)?;
            (o.plot(&title), json!({ "draws_shown": o.draw_indices, "display_range": o.display_range }))
        }
        Viz::Hist => {
            let o = overlay_histogram(&obs, &draws, &spec)?;
            let outside = o
                .bins
                .iter()
                .zip(&o.observed.densities)
                .filter(|(b, &d)| d < b.lo || d > b.hi)
                .count();
            let d = json!({
                "bins_outside_interval": outside,
                "overflow_low": o.overflow_low,
                "overflow_high": o.overflow_high,
                "interval_mass": o.interval_mass,
            });
            (o.plot(&title), d)
        }
        Viz::Qdot => {
            let o = overlay_qdot(&obs, &draws, &spec)?;
            (o.plot(&title), json!({ "draws_shown": o.draw_indices }))
        }
    };
    let (_, verdict) = observed_gof(&obs, &a.estimator, &a.common, &mut report)?;
    if let Some(c) = report.checks.last_mut() {
        c.details = details;
    }
    let fig = Figure::new(vec![panel, pit_ecdf_plot(&verdict, "PIT ECDF of observed estimate")], 2);
    finish(&report, Some(&fig), &svg, &json_path)
}

fn bar_record(name: &str, bar: &BarCheck) -> CheckRecord {
    CheckRecord::new(name, CheckKind::Flags, bar.all_inside(), json!({ "level": bar.level }))
        .with_details(bar)
}

fn root(name: &str, a: RootogramArgs) -> Outcome {
    let (svg, json_path) = out_paths(name, &a.common);
    let obs = load_observations(&a.input.input, &a.input.column)?;
    let draws = load_draws(&a.draws)?;
    let mut report = DiagnosticReport::new(name, a.common.seed);
    report.inputs.push(InputDigest::of_file("input", &a.input.input)?);
    report.inputs.push(InputDigest::of_file("draws", &a.draws)?);
    let diag = diagnose(&obs);
    if a.bar {
        report.recommendation = recommend(&diag, RequestedCheck::Bar);
        if let Some(r) = report.recommendation.clone() {
            warn(&mut report, r);
        }
    }
    report.diagnosis = Some(diag);
    let table = count_frequencies(&obs, &draws, a.max_count, a.interval_mass)?;
    let spec = RootogramSpec { style: a.style, raw_scale: a.raw_scale };
    let r = rootogram(&table, spec);
    let flagged = r.flagged_counts();
    let mut panels = vec![r.plot(&format!("{} rootogram", a.input.column))];
    report.push(
        CheckRecord::new("rootogram", CheckKind::Flags, flagged.is_empty(), spec)
            .with_details(json!({ "flagged_counts": flagged, "cells": r.cells })),
    );
    if a.bar {
        let bar = bar_check_counts(&table, a.interval_mass)?;
        panels.push(bar.plot("count frequencies"));
        report.push(bar_record("bar_check", &bar));
    }
    let columns = panels.len();
    finish(&report, Some(&Figure::new(panels, columns)), &svg, &json_path)
}

fn curve_record(curve: &CalibrationCurve, opts: &PavOptions) -> CheckRecord {
    let flagged = curve.outside_flags.iter().filter(|&&f| f).count();
    CheckRecord::new(
        format!("calibration {}", curve.label),
        CheckKind::Flags,
        !curve.any_flagged(),
        json!({ "level": opts.level, "n_sim": opts.n_sim }),
    )
    .with_details(json!({ "flagged_points": flagged, "curve": curve }))
}

fn calibration(name: &str, a: CalibrationArgs) -> Outcome {
    if a.mode != Mode::Binary {
        if a.probs.len() < 2 {
            return Err(Failure::Usage(
                "--probs needs at least two comma-separated columns in ovo and ordinal modes".into(),
            ));
        }
        if a.draws.is_some() || a.covariate.is_some() {
            return Err(Failure::Usage("--draws and --covariate apply to binary mode only".into()));
        }
    }
    let (svg, json_path) = out_paths(name, &a.common);
    let mut report = DiagnosticReport::new(name, a.common.seed);
    report.inputs.push(InputDigest::of_file("input", &a.input)?);
    let opts = PavOptions {
        level: a.level,
        n_sim: a.n_sim,
        seed: a.common.seed,
        with_bands: true,
    };
    let mut panels: Vec<PlotSpec> = Vec::new();
    match a.mode {
        Mode::Binary => {
            let schema = TableSchema::Binary {
                pred: a.pred.clone(),
                outcome: a.outcome.clone(),
                covariates: a.covariate.iter().cloned().collect(),
            };
            let Table::Binary(mut table) = load_table(&a.input, &schema)? else {
                unreachable!("binary schema yields a binary table")
            };
            if let Some(d) = &a.draws {
                report.inputs.push(InputDigest::of_file("draws", d)?);
                table = table.with_outcome_draws(load_draws(d)?.to_binary()?)?;
            }
            let outcomes: Vec<f64> = table.outcome().iter().map(|&y| y as f64).collect();
            let diag = diagnose(&ObservationSample::new(outcomes, a.outcome.clone())?);
            if a.bar {
                report.recommendation = recommend(&diag, RequestedCheck::Bar);
                if let Some(r) = report.recommendation.clone() {
                    warn(&mut report, r);
                }
            }
            report.diagnosis = Some(diag);
            let curve = pav_calibration_plot(&table, &opts)?;
            panels.push(curve.plot("PAV calibration"));
            if let Some(cov) = &a.covariate {
                let x = table.covariate(cov).expect("loaded with the table");
                let res = pav_residuals(&table, x, &curve)?;
                panels.push(residual_plot(&res, cov, "PAV residuals"));
            }
            report.push(curve_record(&curve, &opts));
            if a.bar {
                let bar = bar_check(&table, &opts)?;
                panels.push(bar.plot("outcome frequencies"));
                report.push(bar_record("bar_check", &bar));
            }
        }
        Mode::Ovo | Mode::Ordinal => {
            let ordered = a.mode == Mode::Ordinal;
            let schema = TableSchema::Categorical {
                prob_columns: a.probs.clone(),
                outcome: a.outcome.clone(),
                ordered,
            };
            let Table::Categorical(table) = load_table(&a.input, &schema)? else {
                unreachable!("categorical schema yields a categorical table")
            };
            let curves = if ordered {
                cumulative_ordinal_calibration(&table, &opts)?
            } else {
                ovo_calibration(&table, &opts)?
            };
            for c in &curves {
                panels.push(c.plot(&c.label));
                report.push(curve_record(c, &opts));
            }
            if a.bar {
                let bar = bar_check_categorical(&table, &opts)?;
                panels.push(bar.plot("category frequencies"));
                report.push(bar_record("bar_check", &bar));
            }
        }
    }
    let columns = panels.len().min(3);
    finish(&report, Some(&Figure::new(panels, columns)), &svg, &json_path)
}

fn demo(a: DemoArgs) -> Outcome {
    if a.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Data(vpc::Error::Io { path: a.out.clone(), source: e }))?;
    let kinds: Vec<DensityKind> = match a.kind {
        Some(k) => vec![k],
        None => DensityKind::ALL.to_vec(),
    };
    for kind in kinds {
        let obs = ObservationSample::new(kind.sample(a.n, a.seed), "y")?;
        let path = a.out.join(format!("{}.csv", kind.name()));
        write_table(&path, &Table::Observations(obs))?;
        println!("{}", path.display());
        if a.n_draws > 0 {
            let rows = (0..a.n_draws as u64)
                .map(|s| kind.sample(a.n, a.seed.wrapping_add(1 + s)))
                .collect();
            let path = a.out.join(format!("{}_draws.csv", kind.name()));
            write_table(&path, &Table::Draws(PredictiveDraws::from_rows(rows)?))?;
            println!("{}", path.display());
        }
    }
    Ok(true)
}
