//! Result emission: CSV (primary, 17-significant-digit floats, RFC 4180) and
//! JSON, plus the residual table for the asymptotic-decay figure.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::config::{EstimatorKind, OutputFormat};
use crate::sweep::ResultRow;

pub const CSV_HEADER: &str =
    "d,epsilon,k,estimator,lambda_hat,std_err,n_units,master_seed,wall_time_seconds";

/// 17 significant digits: enough that re-parsing recovers the exact binary
/// value of any f64.
pub fn format_float17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float17(s: &str) -> Result<f64, String> {
    match s {
        "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other.parse().map_err(|e| format!("bad float '{other}': {e}")),
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.write_record(&[
            r.d.to_string(),
            format_float17(r.epsilon),
            r.k.to_string(),
            r.estimator.name().to_string(),
            format_float17(r.lambda_hat),
            format_float17(r.std_err),
            r.n_units.to_string(),
            r.master_seed.to_string(),
            format_float17(r.wall_time_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> io::Result<()> {
    let arr: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "d": r.d,
                "epsilon": r.epsilon,
                "k": r.k,
                "estimator": r.estimator.name(),
                "lambda_hat": r.lambda_hat,
                "std_err": r.std_err,
                "n_units": r.n_units,
                "master_seed": r.master_seed,
                "wall_time_seconds": r.wall_time_seconds,
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut out, &arr)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn emit_results<W: Write>(rows: &[ResultRow], format: OutputFormat, out: W) -> io::Result<()> {
    match format {
        OutputFormat::Csv => write_csv(rows, out),
        OutputFormat::Json => write_json(rows, out),
    }
}

/// Parses a CSV emission back into rows (tests and downstream tooling).
pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<ResultRow>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(format!("unexpected header: {got:?}"));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        rows.push(ResultRow {
            d: record[0].parse().map_err(|e| format!("d: {e}"))?,
            epsilon: parse_float17(&record[1])?,
            k: record[2].parse().map_err(|e| format!("k: {e}"))?,
            estimator: record[3].parse::<EstimatorKind>().map_err(|e| e.to_string())?,
            lambda_hat: parse_float17(&record[4])?,
            std_err: parse_float17(&record[5])?,
            n_units: record[6].parse().map_err(|e| format!("n_units: {e}"))?,
            master_seed: record[7].parse().map_err(|e| format!("master_seed: {e}"))?,
            wall_time_seconds: parse_float17(&record[8])?,
        });
    }
    Ok(rows)
}

/// Plot-data row for the asymptotic-residual figure: how far the measured
/// exponent sits from (d - 2k) eps^2 / 2, against the eps^4 |log eps|^4
/// rate bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub d: usize,
    pub epsilon: f64,
    pub k: usize,
    pub residual: f64,
    pub std_err: f64,
    pub bound: f64,
}

pub const RESIDUAL_HEADER: &str = "d,epsilon,k,residual,std_err,bound";

/// Builds the residual table from matching exact/asymptotic row pairs.
/// Groups rows by (d, epsilon, k); each group needs its asymptotic row, and
/// uses the exact row's estimate when present (an asymptotic row alone
/// yields a zero residual). Any exact row without its asymptotic partner is
/// a missing-pair error.
pub fn residual_table(rows: &[ResultRow]) -> Result<Vec<ResidualRow>, String> {
    use std::collections::BTreeMap;
    type Key = (usize, u64, usize);
    let mut exact: BTreeMap<Key, &ResultRow> = BTreeMap::new();
    let mut asym: BTreeMap<Key, &ResultRow> = BTreeMap::new();
    for r in rows {
        let key = (r.d, r.epsilon.to_bits(), r.k);
        match r.estimator {
            EstimatorKind::Exact => {
                exact.insert(key, r);
            }
            EstimatorKind::Asymptotic => {
                asym.insert(key, r);
            }
            _ => {}
        }
    }
    if let Some((&(d, bits, k), _)) = exact.iter().find(|(key, _)| !asym.contains_key(key)) {
        return Err(format!(
            "missing asymptotic pair for exact row (d={d}, epsilon={}, k={k})",
            f64::from_bits(bits)
        ));
    }
    let mut out = Vec::new();
    for (key, a) in &asym {
        let value_row = exact.get(key).copied().unwrap_or(a);
        let eps = a.epsilon;
        let eta = eps.ln().abs();
        out.push(ResidualRow {
            d: a.d,
            epsilon: eps,
            k: a.k,
            residual: value_row.lambda_hat - a.lambda_hat,
            std_err: value_row.std_err,
            bound: eps.powi(4) * eta.powi(4),
        });
    }
    out.sort_by(|a, b| {
        a.d.cmp(&b.d)
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.k.cmp(&b.k))
    });
    Ok(out)
}

pub fn write_residual_csv<W: Write>(rows: &[ResidualRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESIDUAL_HEADER.split(','))?;
    for r in rows {
        w.write_record(&[
            r.d.to_string(),
            format_float17(r.epsilon),
            r.k.to_string(),
            format_float17(r.residual),
            format_float17(r.std_err),
            format_float17(r.bound),
        ])?;
    }
    w.flush()?;
    Ok(())
}
