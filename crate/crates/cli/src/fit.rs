//! `fit-real` and `fit-imag`.

use std::path::Path;

use eislife_core::rhlp::{approximate, fit_em, logistic_probs, segment, RhlpDocument};
use eislife_core::{fit_logsig, log_axis, logsig_eval, validate_spectrum, ImpedanceSpectrum, LogsigParams};
use serde::Serialize;

use crate::config::RunConfig;
use crate::context::{file_label, Ctx};
use crate::failure::{from_fit, CmdResult, Failure};
use crate::io::{self, num, Table};

fn load_spectrum(path: &Path) -> CmdResult<ImpedanceSpectrum> {
    let cell = path
        .file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let raw = io::read_spectrum(path, 0.0, &cell).map_err(Failure::parse)?;
    validate_spectrum(&raw).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct LogsigReport<'a> {
    command: &'static str,
    input: String,
    run_config: &'a RunConfig,
    params: LogsigParams,
    mse: f64,
    iterations: usize,
    converged: bool,
    n_points: usize,
}

pub fn fit_real(ctx: &Ctx, spectrum: &Path) -> CmdResult {
    let s = load_spectrum(spectrum)?;
    let axis = log_axis(&s);
    let fit = fit_logsig(axis.values(), &s.re_ohm, &ctx.cfg.simplex).map_err(|e| from_fit("logsig fit", e))?;
    let mut curve = Table::new(ctx.provenance(), ["logf", "observed", "fitted"]);
    for (&x, &y) in axis.values().iter().zip(&s.re_ohm) {
        curve.row([num(x), num(y), num(logsig_eval(&fit.params, x))]);
    }
    ctx.write_json(
        "logsig.json",
        &LogsigReport {
            command: "fit-real",
            input: file_label(spectrum),
            run_config: &ctx.cfg,
            params: fit.params,
            mse: fit.mse,
            iterations: fit.iterations,
            converged: fit.converged,
            n_points: s.len(),
        },
    )?;
    ctx.write_table("logsig_curve.csv", curve)
}

#[derive(Serialize)]
struct RunSummary {
    run: usize,
    iterations: usize,
    converged: bool,
    final_loglik: Option<f64>,
    singular_hessian_steps: usize,
    failure: Option<String>,
}

#[derive(Serialize)]
struct RhlpReport<'a> {
    command: &'static str,
    input: String,
    run_config: &'a RunConfig,
    model: RhlpDocument,
    boundaries_logf: Vec<f64>,
    boundaries_hz: Vec<f64>,
    best_run: usize,
    runs: Vec<RunSummary>,
    n_points: usize,
}

pub fn fit_imag(ctx: &Ctx, spectrum: &Path) -> CmdResult {
    let s = load_spectrum(spectrum)?;
    let axis = log_axis(&s);
    let fit = fit_em(axis.values(), &s.im_ohm, &ctx.cfg.rhlp).map_err(|e| from_fit("rhlp fit", e))?;
    let seg = segment(&fit.model, axis.values());
    let k = fit.model.k();

    let mut header = vec!["logf".to_string(), "observed".into(), "approximation".into()];
    header.extend((1..=k).map(|j| format!("pi_{j}")));
    header.push("label".into());
    let mut table = Table::new(ctx.provenance(), &header);
    for (i, (&x, &y)) in axis.values().iter().zip(&s.im_ohm).enumerate() {
        let mut row = vec![num(x), num(y), num(approximate(&fit.model, x))];
        row.extend(logistic_probs(&fit.model.w, x).into_iter().map(num));
        row.push((seg.labels[i] + 1).to_string());
        table.row(row);
    }

    let runs = fit
        .diagnostics
        .runs
        .iter()
        .map(|r| RunSummary {
            run: r.run,
            iterations: r.iterations,
            converged: r.converged,
            final_loglik: r.loglik_trace.last().copied(),
            singular_hessian_steps: r.singular_hessian_steps,
            failure: r.failure.clone(),
        })
        .collect();
    ctx.write_json(
        "rhlp.json",
        &RhlpReport {
            command: "fit-imag",
            input: file_label(spectrum),
            run_config: &ctx.cfg,
            model: fit.model.to_document(),
            boundaries_hz: seg.boundaries.iter().map(|b| b.exp()).collect(),
            boundaries_logf: seg.boundaries,
            best_run: fit.diagnostics.best_run,
            runs,
            n_points: s.len(),
        },
    )?;
    ctx.write_table("segmentation.csv", table)
}
