use std::io::Write;

use serde::Serialize;

use super::{ExperimentKind, ExperimentReport};
use crate::error::Error;

const THRESHOLD_HEADER: [&str; 4] = ["c", "trials", "failures", "lambda"];

const STATS_HEADER: [&str; 16] = [
    "c", "s", "m", "kp", "kb", "ell", "a_bias", "b_factor", "trials", "lambda", "rp_mean",
    "alphap_mean", "st_mean", "st_var", "pr_mean", "pr_var",
];

fn num(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Writes one CSV row per point. Threshold sweeps use
/// `c,trials,failures,lambda`; every other kind uses the stats schema, with
/// empty fields where a column does not apply.
pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    if report.spec.kind == ExperimentKind::ThresholdSweep {
        w.write_record(THRESHOLD_HEADER)?;
        for p in &report.points {
            w.write_record([
                num(p.c),
                p.stats.trials.to_string(),
                p.stats.failures.to_string(),
                num(p.stats.lambda),
            ])?;
        }
    } else {
        w.write_record(STATS_HEADER)?;
        for p in &report.points {
            let s = &p.stats;
            let cfg = &p.config;
            w.write_record([
                num(p.c),
                cfg.s.to_string(),
                cfg.m.to_string(),
                cfg.kp.to_string(),
                cfg.kb.to_string(),
                cfg.ell.to_string(),
                opt(p.a_bias),
                opt(p.b_factor),
                s.trials.to_string(),
                num(s.lambda),
                num(s.rp.mean),
                num(s.alphap.mean),
                opt(s.steps.map(|m| m.mean)),
                opt(s.steps.map(|m| m.var)),
                opt(s.page_requests.map(|m| m.mean)),
                opt(s.page_requests.map(|m| m.var)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the whole report as pretty-printed JSON.
pub fn write_json<W: Write>(report: &ExperimentReport, mut out: W) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct FitRecord {
    x: f64,
    y: f64,
    sum_res: f64,
}

/// Writes `{x, y, sum_res}` for the fit, or nothing when there is none.
/// Returns whether anything was written.
pub fn write_fit_json<W: Write>(report: &ExperimentReport, mut out: W) -> Result<bool, Error> {
    let Some(fit) = &report.fit else {
        return Ok(false);
    };
    let record = FitRecord {
        x: fit.x,
        y: fit.y,
        sum_res: fit.sum_res,
    };
    serde_json::to_writer_pretty(&mut out, &record)?;
    writeln!(out)?;
    Ok(true)
}

/// Writes the windowed dynamics curves as
/// `insert_index,phase,load,rp,st_key`. Returns whether the report had any.
pub fn write_series_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<bool, Error> {
    let Some(d) = &report.dynamics else {
        return Ok(false);
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["insert_index", "phase", "load", "rp", "st_key"])?;
    for s in &d.series {
        w.write_record([
            s.insert_index.to_string(),
            s.phase.to_string(),
            num(s.load),
            num(s.rp),
            num(s.st_key),
        ])?;
    }
    w.flush()?;
    Ok(true)
}
