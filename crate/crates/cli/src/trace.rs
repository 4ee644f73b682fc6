//! JSON-lines trace files: one record per iteration, then a summary line.

use std::io::{self, Write};

use hproj::solver::{SolveResult, Status, TerminalResiduals, TraceRecord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub status: Status,
    pub iterations: usize,
    pub point: Vec<f64>,
    pub variant: String,
    pub lambda: f64,
    pub residuals: TerminalResiduals,
}

impl Summary {
    pub fn of(res: &SolveResult) -> Self {
        Summary {
            status: res.status,
            iterations: res.iterations,
            point: res.point.as_slice().to_vec(),
            variant: res.variant.name().to_string(),
            lambda: res.lambda,
            residuals: res.residuals,
        }
    }
}

pub fn write<W: Write>(out: &mut W, res: &SolveResult) -> io::Result<()> {
    for rec in &res.trace {
        serde_json::to_writer(&mut *out, rec)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *out, &Summary::of(res))?;
    out.write_all(b"\n")?;
    out.flush()
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub records: Vec<TraceRecord>,
    pub summary: Summary,
}

pub fn parse(text: &str) -> Result<ParsedTrace, TraceError> {
    let lines: Vec<&str> = text.lines().collect();
    let Some((last, body)) = lines.split_last() else {
        return Err(TraceError::Empty);
    };
    let malformed = |line: usize, e: serde_json::Error| TraceError::Malformed {
        line,
        message: e.to_string(),
    };
    let records = body
        .iter()
        .enumerate()
        .map(|(i, l)| serde_json::from_str::<TraceRecord>(l).map_err(|e| malformed(i + 1, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = serde_json::from_str(last).map_err(|e| malformed(lines.len(), e))?;
    Ok(ParsedTrace { records, summary })
}

/// First record index where `|x_n - x0|` drops by more than `tol`.
pub fn fejer_break(records: &[TraceRecord], tol: f64) -> Option<usize> {
    records.windows(2).find(|w| w[1].fejer < w[0].fejer - tol).map(|w| w[1].n)
}
