//! Path CSV reading and writing.
//!
//! The on-disk format is a `t,r` header followed by one row per sample, both
//! columns printed as scientific decimals with 17 significant digits so every
//! value round-trips to the identical bit pattern.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::model::{ModelError, SamplePath};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("expected header 't,r', got {got:?}")]
    MissingHeader { got: String },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("need at least 2 rows to infer the grid, got {rows}")]
    TooShort { rows: usize },
    #[error("non-uniform time grid at line {line}: gap {got} vs inferred dt {expected}")]
    NonUniformGrid { line: usize, expected: f64, got: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Allowed relative deviation of successive time gaps from the inferred step.
pub const GRID_TOLERANCE: f64 = 1e-6;

/// Format a float with 17 significant digits; parses back to the same bits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path_csv<W: Write>(path: &SamplePath, mut w: W) -> Result<(), IoError> {
    writeln!(w, "t,r")?;
    for (i, v) in path.values().iter().enumerate() {
        writeln!(w, "{},{}", format_float(path.time_at(i)), format_float(*v))?;
    }
    Ok(())
}

/// Parse a `t,r` CSV, inferring `t0` and `dt` and insisting on a uniform grid.
pub fn read_path_csv<R: BufRead>(reader: R) -> Result<SamplePath, IoError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(IoError::TooShort { rows: 0 })?
        .map_err(IoError::Io)?;
    if header.trim() != "t,r" {
        return Err(IoError::MissingHeader { got: header });
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(IoError::Io)?;
        let line_no = idx + 2;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (t_str, r_str) = trimmed.split_once(',').ok_or_else(|| IoError::Parse {
            line: line_no,
            detail: "expected two comma-separated fields".into(),
        })?;
        let t: f64 = t_str.trim().parse().map_err(|e| IoError::Parse {
            line: line_no,
            detail: format!("bad time {t_str:?}: {e}"),
        })?;
        let r: f64 = r_str.trim().parse().map_err(|e| IoError::Parse {
            line: line_no,
            detail: format!("bad value {r_str:?}: {e}"),
        })?;
        if !t.is_finite() || !r.is_finite() {
            return Err(IoError::Parse {
                line: line_no,
                detail: "non-finite field".into(),
            });
        }
        times.push(t);
        values.push(r);
    }
    if times.len() < 2 {
        return Err(IoError::TooShort { rows: times.len() });
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(IoError::NonUniformGrid {
            line: 3,
            expected: dt,
            got: dt,
        });
    }
    for (i, w) in times.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if ((gap - dt) / dt).abs() > GRID_TOLERANCE {
            return Err(IoError::NonUniformGrid {
                line: i + 3,
                expected: dt,
                got: gap,
            });
        }
    }
    Ok(SamplePath::new(times[0], dt, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CklsParams;
    use crate::simulate::{simulate_ckls, SimConfig};

    #[test]
    fn round_trip_is_bit_exact() {
        let p = CklsParams::new(0.1, 0.5, 0.03, 0.5, 1.0).unwrap();
        let cfg = SimConfig::new(1.0, 1e-3, 9).unwrap();
        let path = simulate_ckls(&p, &cfg).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&path, &mut buf).unwrap();
        let back = read_path_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values(), path.values());
        assert_eq!(back.dt(), path.dt());
        assert_eq!(back.t0(), path.t0());
    }

    #[test]
    fn header_is_required() {
        let data = "x,y\n0,1\n1,2\n";
        assert!(matches!(
            read_path_csv(data.as_bytes()),
            Err(IoError::MissingHeader { .. })
        ));
    }

    #[test]
    fn shuffled_times_are_rejected() {
        let data = "t,r\n0.0,1.0\n0.2,1.1\n0.1,1.2\n";
        assert!(matches!(
            read_path_csv(data.as_bytes()),
            Err(IoError::NonUniformGrid { .. })
        ));
    }

    #[test]
    fn two_rows_parse_one_row_does_not() {
        assert!(read_path_csv("t,r\n0.0,1.0\n0.1,1.1\n".as_bytes()).is_ok());
        assert!(matches!(
            read_path_csv("t,r\n0.0,1.0\n".as_bytes()),
            Err(IoError::TooShort { rows: 1 })
        ));
    }

    #[test]
    fn nonpositive_values_are_allowed_here() {
        // positivity policy belongs to the estimator and the CLI, not the parser
        let path = read_path_csv("t,r\n0.0,1.0\n0.1,-0.5\n0.2,0.0\n".as_bytes()).unwrap();
        assert_eq!(path.values(), &[1.0, -0.5, 0.0]);
    }
}
