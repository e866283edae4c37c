//! Benchmark CSVs and identification results.

use std::io::Write;
use std::path::Path;

use innovest_core::sysid::benchmark::{table_rows, CellResult, Summary, TABLE_COLUMNS};
use innovest_core::sysid::{FitResult, IdentifiedModel, StopReason};
use serde::Serialize;

use crate::error::{io_err, CliError, Result};
use crate::json::{self, ModelDoc};
use crate::trajectory::format_number;

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<W> {
    w.into_inner().map_err(|e| CliError::Parse(e.to_string()))
}

/// One row per cell:
/// `case,n_samples,repetition,training_mse,validation_mse,vaf_1..vaf_p,error`.
pub fn runs_csv(cells: &[CellResult], p: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head: Vec<String> =
        ["case", "n_samples", "repetition", "training_mse", "validation_mse"].map(String::from).to_vec();
    head.extend((1..=p).map(|i| format!("vaf_{i}")));
    head.push("error".into());
    w.write_record(&head)?;
    for c in cells {
        let mut rec = vec![
            c.spec.column.name().to_string(),
            c.spec.n_samples.to_string(),
            c.spec.repetition.to_string(),
            opt(c.training_mse),
            opt(c.validation_mse),
        ];
        rec.extend((0..p).map(|i| opt(c.vaf.get(i).copied())));
        rec.push(c.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(finish(w)?).expect("ascii"))
}

/// Summary table: `statistic,n_samples,case_0,pred_full,…`, one block of
/// rows per `N`. Empty cells mean not applicable or no successful run.
pub fn table_csv(summaries: &[Summary], n_samples: &[usize], p: usize) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec![String::from("statistic"), String::from("n_samples")];
    head.extend(TABLE_COLUMNS.iter().map(|c| c.name().to_string()));
    w.write_record(&head)?;
    for &n in n_samples {
        for (name, values) in table_rows(summaries, n, p) {
            let mut rec = vec![name.clone(), n.to_string()];
            rec.extend(values.iter().map(|v| match (name.as_str(), v) {
                ("Total Parameters", Some(x)) => format!("{x:.0}"),
                (_, v) => opt(*v),
            }));
            w.write_record(&rec)?;
        }
    }
    Ok(String::from_utf8(finish(w)?).expect("ascii"))
}

/// Learning curve: `n_samples,case,avg_training_mse,avg_validation_mse`.
pub fn curve_csv(summaries: &[Summary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n_samples", "case", "avg_training_mse", "avg_validation_mse"])?;
    for s in summaries {
        w.write_record([s.n_samples.to_string(), s.column.name().to_string(), opt(s.training_mse), opt(s.validation_mse)])?;
    }
    Ok(String::from_utf8(finish(w)?).expect("ascii"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

#[derive(Serialize)]
struct StartJson {
    loss: Option<f64>,
    iterations: usize,
    stop: Option<&'static str>,
}

#[derive(Serialize)]
struct FitJson {
    case: &'static str,
    theta_dim: usize,
    theta: Vec<f64>,
    training_mse: f64,
    fit_loss: f64,
    iterations: usize,
    converged: bool,
    overparameterized: bool,
    restarts_used: usize,
    starts: Vec<StartJson>,
    model: serde_json::Value,
    estimator: serde_json::Value,
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::Gradient => "gradient",
        StopReason::Step => "step",
        StopReason::MaxIterations => "max_iterations",
        StopReason::LineSearch => "line_search",
    }
}

pub fn fit_json(fit: &FitResult) -> String {
    let model = match &fit.model {
        IdentifiedModel::Estimator(e) => ModelDoc::Estimator(e.clone()),
        IdentifiedModel::Joint(j) => ModelDoc::InnovationJoint(j.clone()),
        IdentifiedModel::Triangular(t) => ModelDoc::TriangularJoint(t.clone()),
    };
    let doc = FitJson {
        case: fit.case.name(),
        theta_dim: fit.theta.len(),
        theta: fit.theta.clone(),
        training_mse: fit.training_mse,
        fit_loss: fit.fit_loss,
        iterations: fit.iterations,
        converged: fit.converged,
        overparameterized: fit.overparameterized,
        restarts_used: fit.restarts_used,
        starts: fit
            .starts
            .iter()
            .map(|s| StartJson { loss: s.loss, iterations: s.iterations, stop: s.reason.map(stop_name) })
            .collect(),
        model: json::to_value(&model),
        estimator: json::to_value(&ModelDoc::Estimator(fit.estimator.clone())),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("fit results serialize");
    s.push('\n');
    s
}
