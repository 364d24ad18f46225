//! CSV writers for sweep rows and aggregates.
//!
//! Row files carry the plan's explicit axis columns (alphabetical), then
//! `seed`, `failed`, then the metric columns (alphabetical). Aggregate files
//! replace seed/metrics with `failed` counts and `_mean`/`_std` pairs.
//! Failed rows leave their metric cells empty.

use std::io::Write;

use super::{AggregateRow, ExperimentPlan, SweepRow};

pub fn write_rows_csv<W: Write>(
    plan: &ExperimentPlan,
    rows: &[SweepRow],
    w: &mut W,
) -> std::io::Result<()> {
    let axes = plan.explicit_axes();
    let metrics = plan.metric_columns();
    let mut header: Vec<String> = axes.iter().map(|a| a.header().to_string()).collect();
    header.push("seed".into());
    header.push("failed".into());
    header.extend(metrics.iter().map(|m| m.to_string()));
    writeln!(w, "{}", header.join(","))?;

    for row in rows {
        let mut cells: Vec<String> = axes.iter().map(|&a| row.point.axis_value(a)).collect();
        cells.push(format!("{}", row.seed));
        cells.push(format!("{}", u8::from(row.failed)));
        for &m in &metrics {
            cells.push(match row.metrics.get(m) {
                Some(v) => format!("{v}"),
                None => String::new(),
            });
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(
    plan: &ExperimentPlan,
    aggregate: &[AggregateRow],
    w: &mut W,
) -> std::io::Result<()> {
    let axes = plan.explicit_axes();
    let metrics = plan.metric_columns();
    let mut header: Vec<String> = axes.iter().map(|a| a.header().to_string()).collect();
    header.push("realizations".into());
    header.push("failed".into());
    for &m in &metrics {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    writeln!(w, "{}", header.join(","))?;

    for agg in aggregate {
        let mut cells: Vec<String> = axes.iter().map(|&a| agg.point.axis_value(a)).collect();
        cells.push(format!("{}", agg.realizations));
        cells.push(format!("{}", agg.failed));
        for &m in &metrics {
            match agg.stats.get(m) {
                Some((mean, std)) if mean.is_finite() => {
                    cells.push(format!("{mean}"));
                    cells.push(format!("{std}"));
                }
                _ => {
                    cells.push(String::new());
                    cells.push(String::new());
                }
            }
        }
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
