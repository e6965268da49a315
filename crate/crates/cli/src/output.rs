//! CSV output.

use std::io::Write;

use anyhow::Result;

use crate::sweep::Row;

pub const HEADER: [&str; 8] = ["sweep_var", "sweep_value", "method", "metric", "value", "ci_halfwidth", "n_trials", "seed"];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Write rows with the fixed header. Floats use the shortest round-trip
/// representation, so identical results give identical bytes.
pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_var.to_string(),
            r.sweep_value.to_string(),
            r.method.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            opt(r.ci_halfwidth),
            opt(r.n_trials),
            opt(r.seed),
        ])?;
    }
    w.flush()?;
    Ok(())
}
