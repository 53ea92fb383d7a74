use std::path::Path;

use anyhow::{Context, Result};
use vqec_core::optimizer::{IterateRecord, IterateTrace};

/// `|(x − x*)/x*|`.
pub fn relative_error(x: f64, reference: f64) -> f64 {
    ((x - reference) / reference).abs()
}

/// Relative cost error of a record against the optimum `p_star`.
pub fn rel_cost_err(record: &IterateRecord, p_star: f64) -> f64 {
    relative_error(record.values[0], p_star)
}

/// Writes one CSV row per iteration: multipliers, observable values, relative
/// cost error, Lagrangian, relative parameter change and cumulative counts.
pub fn emit_trace(trace: &IterateTrace, p_star: f64, path: &Path) -> Result<()> {
    let m = trace.last().lambda.len();
    let mut header = vec!["iter".to_string()];
    header.extend((1..=m).map(|i| format!("lambda_{i}")));
    header.extend((0..=m).map(|i| format!("F_{i}")));
    header.extend(
        [
            "rel_cost_err",
            "lagrangian",
            "theta_change_rel",
            "cum_shots",
            "cum_compilations",
        ]
        .map(String::from),
    );
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.lambda.values().iter().map(f64::to_string));
        row.extend(r.values.iter().map(f64::to_string));
        row.push(rel_cost_err(r, p_star).to_string());
        row.push(r.lagrangian().to_string());
        row.push(r.theta_change_rel.to_string());
        row.push(r.cum_shots.to_string());
        row.push(r.cum_compilations.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every parameter vector of the trace, one row per iteration.
pub fn emit_theta(trace: &IterateTrace, path: &Path) -> Result<()> {
    let p = trace.last().theta.len();
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut header = vec!["iter".to_string()];
    header.extend((1..=p).map(|i| format!("theta_{i}")));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.t.to_string()];
        row.extend(r.theta.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
