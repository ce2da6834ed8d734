use std::io::Write;

use serde::Serialize;

use super::{EvalError, MetricRow, ParetoRow};

fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| EvalError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| EvalError::Io(e.to_string()))
}

/// Columns `method,mode,trajectory,t,rho,n_mse`.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricRow]) -> Result<(), EvalError> {
    write_rows(out, rows)
}

/// Columns `method,grid,dt,runtime_per_sim_second,t95`.
pub fn write_pareto_csv<W: Write>(out: W, rows: &[ParetoRow]) -> Result<(), EvalError> {
    write_rows(out, rows)
}

#[derive(Serialize)]
struct SpectrumRow {
    k: usize,
    #[serde(rename = "E")]
    e: f64,
}

/// Columns `k,E`.
pub fn write_spectrum_csv<W: Write>(out: W, spectrum: &[f64]) -> Result<(), EvalError> {
    let rows: Vec<SpectrumRow> = spectrum.iter().enumerate().map(|(k, &e)| SpectrumRow { k, e }).collect();
    write_rows(out, &rows)
}
