//! On-disk formats: pool and target CSV files, JSON-lines traces and the
//! regret summary table.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical bits.

use serde::{Deserialize, Serialize};
use shapesearch::search::{SummaryRow, Trace, TraceRecord};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Candidate inputs plus the rows that already carry observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolFile {
    pub inputs: Vec<Vec<f64>>,
    /// `(row index, observation)` in file order.
    pub observed: Vec<(usize, Vec<f64>)>,
    pub output_dim: usize,
}

fn column_counts(headers: &csv::StringRecord, path: &Path) -> CliResult<(usize, usize)> {
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let d = names.iter().take_while(|h| h.starts_with("x_")).count();
    let m = names.len() - d;
    let expect: Vec<String> = (1..=d).map(|i| format!("x_{i}")).chain((1..=m).map(|i| format!("y_{i}"))).collect();
    if d == 0 || m == 0 || names != expect {
        return Err(CliError::data(format!(
            "{}: line 1: header must be x_1..x_d followed by y_1..y_M, got {:?}",
            path.display(),
            names
        )));
    }
    Ok((d, m))
}

fn parse_cell(cell: &str, path: &Path, line: u64, column: &str) -> CliResult<f64> {
    let v: f64 = cell
        .trim()
        .parse()
        .map_err(|_| CliError::data(format!("{}: line {line}: column {column}: cannot parse '{cell}'", path.display())))?;
    if !v.is_finite() {
        return Err(CliError::data(format!("{}: line {line}: column {column}: non-finite value", path.display())));
    }
    Ok(v)
}

fn open_csv(path: &Path) -> CliResult<(csv::Reader<File>, csv::StringRecord)> {
    let file = File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| CliError::data(format!("{}: line 1: {e}", path.display())))?
        .clone();
    if headers.is_empty() {
        return Err(CliError::data(format!("{}: line 0: file is empty", path.display())));
    }
    Ok((reader, headers))
}

/// Read a pool file: rows with every `y` blank are unobserved candidates,
/// rows with every `y` filled are initial observations.
pub fn read_pool_csv(path: &Path) -> CliResult<PoolFile> {
    let (mut reader, headers) = open_csv(path)?;
    let (d, m) = column_counts(&headers, path)?;
    let mut out = PoolFile {
        inputs: Vec::new(),
        observed: Vec::new(),
        output_dim: m,
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::data(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d + m {
            return Err(CliError::data(format!(
                "{}: line {line}: expected {} fields, found {}",
                path.display(),
                d + m,
                record.len()
            )));
        }
        let x = (0..d)
            .map(|j| parse_cell(&record[j], path, line, &headers[j]))
            .collect::<CliResult<Vec<_>>>()?;
        let filled = (d..d + m).filter(|&j| !record[j].trim().is_empty()).count();
        if filled == m {
            let y = (d..d + m)
                .map(|j| parse_cell(&record[j], path, line, &headers[j]))
                .collect::<CliResult<Vec<_>>>()?;
            out.observed.push((out.inputs.len(), y));
        } else if filled != 0 {
            return Err(CliError::data(format!(
                "{}: line {line}: outputs must be all blank or all present",
                path.display()
            )));
        }
        out.inputs.push(x);
    }
    if out.inputs.is_empty() {
        return Err(CliError::data(format!("{}: line 1: no data rows", path.display())));
    }
    Ok(out)
}

pub fn write_pool_csv(path: &Path, inputs: &[Vec<f64>], observed: &[(usize, Vec<f64>)], output_dim: usize) -> CliResult<()> {
    let d = inputs.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).chain((1..=output_dim).map(|i| format!("y_{i}"))).collect();
    w.write_record(&header)?;
    for (i, x) in inputs.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        match observed.iter().find(|(k, _)| *k == i) {
            Some((_, y)) => row.extend(y.iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), output_dim)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A target file holds a `y_1..y_M` header and one row.
pub fn read_target_csv(path: &Path) -> CliResult<Vec<f64>> {
    let (mut reader, headers) = open_csv(path)?;
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    let expect: Vec<String> = (1..=names.len()).map(|i| format!("y_{i}")).collect();
    if names != expect {
        return Err(CliError::data(format!("{}: line 1: header must be y_1..y_M", path.display())));
    }
    let mut rows = reader.records();
    let record = match rows.next() {
        Some(r) => r?,
        None => return Err(CliError::data(format!("{}: line 1: target row missing", path.display()))),
    };
    let line = record.position().map_or(0, |p| p.line());
    if record.len() != names.len() {
        return Err(CliError::data(format!("{}: line {line}: wrong number of fields", path.display())));
    }
    let y = (0..names.len())
        .map(|j| parse_cell(&record[j], path, line, &headers[j]))
        .collect::<CliResult<Vec<_>>>()?;
    if rows.next().is_some() {
        return Err(CliError::data(format!("{}: line {}: only one target row is allowed", path.display(), line + 1)));
    }
    Ok(y)
}

pub fn write_target_csv(path: &Path, target: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=target.len()).map(|i| format!("y_{i}")))?;
    w.write_record(target.iter().map(|v| v.to_string()))?;
    w.flush()?;
    Ok(())
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Start {
        strategy: shapesearch::search::Strategy,
        trial: Option<usize>,
        initial_indices: Vec<usize>,
        initial_incumbent: f64,
    },
    Query(TraceRecord),
    PoolExhausted,
}

pub fn write_trace<W: Write>(mut w: W, trace: &Trace, trial: Option<usize>) -> CliResult<()> {
    let start = TraceLine::Start {
        strategy: trace.strategy,
        trial,
        initial_indices: trace.initial_indices.clone(),
        initial_incumbent: trace.initial_incumbent,
    };
    writeln!(w, "{}", serde_json::to_string(&start)?)?;
    for r in &trace.records {
        writeln!(w, "{}", serde_json::to_string(&TraceLine::Query(r.clone()))?)?;
    }
    if trace.pool_exhausted {
        writeln!(w, "{}", serde_json::to_string(&TraceLine::PoolExhausted)?)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &Trace, trial: Option<usize>) -> CliResult<()> {
    write_trace(BufWriter::new(File::create(path)?), trace, trial)
}

pub fn read_trace_file(path: &Path) -> CliResult<Trace> {
    let reader = BufReader::new(File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?);
    let mut trace: Option<Trace> = None;
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line)
            .map_err(|e| CliError::data(format!("{}: line {}: {e}", path.display(), k + 1)))?;
        match (parsed, trace.as_mut()) {
            (TraceLine::Start { strategy, initial_indices, initial_incumbent, .. }, None) => {
                trace = Some(Trace {
                    strategy,
                    initial_indices,
                    initial_incumbent,
                    records: Vec::new(),
                    pool_exhausted: false,
                })
            }
            (TraceLine::Query(r), Some(t)) => t.records.push(r),
            (TraceLine::PoolExhausted, Some(t)) => t.pool_exhausted = true,
            _ => {
                return Err(CliError::data(format!(
                    "{}: line {}: trace must begin with a single start record",
                    path.display(),
                    k + 1
                )))
            }
        }
    }
    trace.ok_or_else(|| CliError::data(format!("{}: line 0: empty trace", path.display())))
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["strategy", "iteration", "mean_log10_regret", "std_log10_regret"])?;
    for r in rows {
        w.write_record([
            r.strategy.name().to_string(),
            r.iteration.to_string(),
            r.mean_log10_regret.to_string(),
            r.std_log10_regret.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
