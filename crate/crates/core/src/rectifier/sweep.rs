use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use super::{steady_state, RectifierError, RectifierResult, RectifierSpec};

pub const SWEEP_CSV_HEADER: &str = "P_in_dBm,V_dc_V,efficiency,ReZin_ohm,ImZin_ohm";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub p_in_dbm: f64,
    pub v_dc: f64,
    pub efficiency: f64,
    pub z_in: Complex64,
}

impl From<&RectifierResult> for SweepRow {
    fn from(r: &RectifierResult) -> Self {
        Self {
            p_in_dbm: r.input_power_dbm,
            v_dc: r.v_dc,
            efficiency: r.efficiency,
            z_in: r.z_in,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub p_in_dbm: f64,
    pub error: RectifierError,
}

/// Rows in strictly increasing input power, plus the points that failed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

fn sweep_points(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, RectifierError> {
    if !(start.is_finite() && stop.is_finite()) || start > stop {
        return Err(RectifierError::InvalidSpec(format!(
            "sweep needs start <= stop, got {start}..{stop}"
        )));
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(RectifierError::InvalidSpec(format!(
            "sweep step must be positive, got {step}"
        )));
    }
    let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// One steady state per power point, evaluated in parallel.
pub fn power_sweep(
    spec: &RectifierSpec,
    start_dbm: f64,
    stop_dbm: f64,
    step_db: f64,
) -> Result<SweepResult, RectifierError> {
    let points = sweep_points(start_dbm, stop_dbm, step_db)?;
    let results: Vec<_> = points
        .par_iter()
        .map(|&p| (p, steady_state(spec, p)))
        .collect();
    let mut out = SweepResult::default();
    for (p, r) in results {
        match r {
            Ok(r) => out.rows.push(SweepRow::from(&r)),
            Err(error) => {
                log::warn!("sweep point {p} dBm failed: {error}");
                out.failures.push(SweepFailure { p_in_dbm: p, error });
            }
        }
    }
    Ok(out)
}

/// Header and data rows; numbers use the shortest round-trip form.
pub fn write_sweep_csv<W: Write>(mut w: W, sweep: &SweepResult) -> io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in &sweep.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.p_in_dbm, r.v_dc, r.efficiency, r.z_in.re, r.z_in.im
        )?;
    }
    Ok(())
}

/// Reads a sweep CSV, skipping blank and `#` lines. Rows must be in
/// strictly increasing power.
pub fn read_sweep_csv<R: BufRead>(r: R) -> io::Result<SweepResult> {
    let bad = |line: usize, msg: String| {
        io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
    };
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut header_seen = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if !header_seen {
            if text != SWEEP_CSV_HEADER {
                return Err(bad(i + 1, format!("expected header `{SWEEP_CSV_HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<f64> = text
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(i + 1, e.to_string()))?;
        let [p, v, eff, re, im] = fields[..] else {
            return Err(bad(i + 1, format!("expected 5 fields, got {}", fields.len())));
        };
        if let Some(last) = rows.last() {
            if !(p > last.p_in_dbm) {
                return Err(bad(i + 1, "input power must increase strictly".into()));
            }
        }
        rows.push(SweepRow {
            p_in_dbm: p,
            v_dc: v,
            efficiency: eff,
            z_in: Complex64::new(re, im),
        });
    }
    if !header_seen {
        return Err(bad(0, "empty sweep file".into()));
    }
    Ok(SweepResult {
        rows,
        failures: Vec::new(),
    })
}
