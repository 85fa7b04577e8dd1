//! Run telemetry records and their CSV form.
//!
//! Column order is fixed: `round,bits,loss,grad_norm_sq`, then the optional
//! columns `dist_sq,test_acc,F_t,E_t,H_t,X_t` — each present for the whole
//! file exactly when the run can produce it. Floats are written with 17
//! significant digits so traces are bit-faithful to the run.

use std::io::Write;

use crate::error::Result;

/// One row of run telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub round: u64,
    /// Total uplink bits consumed by all rounds before this row.
    pub bits: u64,
    /// Exact full-batch objective value at the current iterate.
    pub loss: f64,
    /// Exact `||grad f(x)||^2`.
    pub grad_norm_sq: f64,
    /// `||x - x_star||^2` when the minimizer is known.
    pub dist_sq: Option<f64>,
    pub test_acc: Option<f64>,
    /// `f(x) - f_star` (diagnostics).
    pub f_gap: Option<f64>,
    /// Mean squared error-accumulator norm (diagnostics).
    pub e_avg: Option<f64>,
    /// Mean squared compression-argument norm (diagnostics).
    pub h_avg: Option<f64>,
    /// `||x_virtual - x_star||^2` (diagnostics).
    pub x_dist_sq: Option<f64>,
}

/// Which optional columns a run emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TraceColumns {
    pub dist_sq: bool,
    pub test_acc: bool,
    pub f_gap: bool,
    pub e_avg: bool,
    pub h_avg: bool,
    pub x_dist_sq: bool,
}

impl TraceColumns {
    pub fn header(&self) -> String {
        let mut cols = vec!["round", "bits", "loss", "grad_norm_sq"];
        if self.dist_sq {
            cols.push("dist_sq");
        }
        if self.test_acc {
            cols.push("test_acc");
        }
        if self.f_gap {
            cols.push("F_t");
        }
        if self.e_avg {
            cols.push("E_t");
        }
        if self.h_avg {
            cols.push("H_t");
        }
        if self.x_dist_sq {
            cols.push("X_t");
        }
        cols.join(",")
    }
}

/// 17 significant digits, scientific form.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<W: Write>(out: &mut W, columns: &TraceColumns, records: &[TraceRecord]) -> Result<()> {
    writeln!(out, "{}", columns.header())?;
    for r in records {
        let mut row = format!(
            "{},{},{},{}",
            r.round,
            r.bits,
            format_float(r.loss),
            format_float(r.grad_norm_sq)
        );
        let mut push_opt = |enabled: bool, value: Option<f64>| {
            if enabled {
                row.push(',');
                row.push_str(&format_float(value.expect("enabled column must be present")));
            }
        };
        push_opt(columns.dist_sq, r.dist_sq);
        push_opt(columns.test_acc, r.test_acc);
        push_opt(columns.f_gap, r.f_gap);
        push_opt(columns.e_avg, r.e_avg);
        push_opt(columns.h_avg, r.h_avg);
        push_opt(columns.x_dist_sq, r.x_dist_sq);
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn to_csv_string(columns: &TraceColumns, records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, columns, records).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_tracks_enabled_columns() {
        let cols = TraceColumns {
            dist_sq: true,
            e_avg: true,
            h_avg: true,
            ..Default::default()
        };
        assert_eq!(cols.header(), "round,bits,loss,grad_norm_sq,dist_sq,E_t,H_t");
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        let s = format_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        // Round-trips exactly.
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn rows_align_with_columns() {
        let cols = TraceColumns {
            dist_sq: true,
            ..Default::default()
        };
        let rec = TraceRecord {
            round: 3,
            bits: 123,
            loss: 1.5,
            grad_norm_sq: 0.25,
            dist_sq: Some(2.0),
            test_acc: None,
            f_gap: None,
            e_avg: None,
            h_avg: None,
            x_dist_sq: None,
        };
        let text = to_csv_string(&cols, &[rec]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "round,bits,loss,grad_norm_sq,dist_sq");
        let row = lines.next().unwrap();
        assert!(row.starts_with("3,123,1.5"));
        assert_eq!(row.split(',').count(), 5);
    }
}
