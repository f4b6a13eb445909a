//! CSV and text-table emission for metric summaries.

use std::fmt::Write as _;

use thiserror::Error;

use super::{ComparisonRow, MetricsSummary};

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 11] = [
    "group",
    "n",
    "r2_overall",
    "r2_x",
    "r2_y",
    "mse",
    "rmse",
    "mae",
    "within_010",
    "within_020",
    "mean_spatial_error",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("metrics csv row {row}: {message}")]
    Schema { row: usize, message: String },
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One summary per row; empty R² cells mark degenerate variance.
pub fn metrics_csv(summaries: &[MetricsSummary]) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for s in summaries {
        w.write_record([
            s.group.clone(),
            s.n.to_string(),
            opt(s.r2_overall),
            opt(s.r2_x),
            opt(s.r2_y),
            s.mse.to_string(),
            s.rmse.to_string(),
            s.mae.to_string(),
            s.within_010.to_string(),
            s.within_020.to_string(),
            s.mean_spatial_error.to_string(),
        ])
        .expect("writing to memory");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields"));
    out
}

pub fn read_metrics_csv(bytes: &[u8]) -> Result<Vec<MetricsSummary>, ReportError> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(ReportError::Schema { row: 0, message: format!("unexpected header {headers:?}") });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let bad = |col: &str| ReportError::Schema { row, message: format!("bad `{col}` value") };
        let num = |idx: usize| -> Result<f64, ReportError> {
            rec[idx].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[idx]))
        };
        let optional = |idx: usize| -> Result<Option<f64>, ReportError> {
            if rec[idx].is_empty() { Ok(None) } else { num(idx).map(Some) }
        };
        out.push(MetricsSummary {
            group: rec[0].to_string(),
            n: rec[1].parse().map_err(|_| bad("n"))?,
            r2_overall: optional(2)?,
            r2_x: optional(3)?,
            r2_y: optional(4)?,
            mse: num(5)?,
            rmse: num(6)?,
            mae: num(7)?,
            within_010: num(8)?,
            within_020: num(9)?,
            mean_spatial_error: num(10)?,
        });
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "---".into())
}

fn signed_pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:+.1}%")).unwrap_or_else(|| "undefined".into())
}

/// Human-readable table: baseline row first, then one row per fault group.
pub fn comparison_table(baseline: &MetricsSummary, rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:>7} {:>7} {:>7} {:>11} {:>11} {:>9} {:>9}",
        "Condition", "R2", "MSE", "RMSE", "Within-0.10", "Within-0.20", "dR2", "dRMSE"
    );
    let line = |out: &mut String, name: &str, s: &MetricsSummary, dr2: &str, drmse: &str| {
        let _ = writeln!(
            out,
            "{:<32} {:>7} {:>7.3} {:>7.3} {:>11.3} {:>11.3} {:>9} {:>9}",
            name,
            cell(s.r2_overall),
            s.mse,
            s.rmse,
            s.within_010,
            s.within_020,
            dr2,
            drmse
        );
    };
    line(&mut out, &format!("{} (baseline)", baseline.group), baseline, "---", "---");
    for r in rows {
        line(&mut out, &r.fault.group, &r.fault, &signed_pct(r.delta_r2_pct), &signed_pct(r.delta_rmse_pct));
    }
    if let Some(worst) = rows
        .iter()
        .filter(|r| r.delta_rmse_pct.is_some())
        .max_by(|a, b| a.delta_rmse_pct.unwrap().total_cmp(&b.delta_rmse_pct.unwrap()))
    {
        let min_r2 = rows.iter().filter_map(|r| r.delta_r2_pct).fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            out,
            "Max degradation vs. baseline: dR2 {} dRMSE {} ({})",
            signed_pct(min_r2.is_finite().then_some(min_r2)),
            signed_pct(worst.delta_rmse_pct),
            worst.fault.group
        );
    }
    out
}
