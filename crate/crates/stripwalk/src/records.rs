//! Per-replicate CSV.
//!
//! One row per run: shared batches have one row per replicate, separate
//! batches two (arm 0 first). Unreached stopping times and undefined
//! statistics are empty fields; floats carry 17 significant digits.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use stripwalk_core::stattest::rejects;
use stripwalk_core::summary::pool_separate;
use stripwalk_core::{SimRecord, StoppingTime};

use crate::batch::Batch;
use crate::{AppError, AppResult};

pub const HEADER: [&str; 17] = [
    "replicate", "seed", "n", "c_n", "N0", "N1", "L0", "L1", "g1_0", "g1_1", "g2_0", "g2_1", "tau1", "tau2", "chi2",
    "p_value", "reject",
];

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub replicate: u64,
    pub record: SimRecord,
    pub reject: bool,
}

impl Row {
    fn fields(&self) -> [String; 17] {
        let r = &self.record;
        [
            self.replicate.to_string(),
            r.seed.to_string(),
            r.n.to_string(),
            r.c_n.to_string(),
            r.n0.to_string(),
            r.n1.to_string(),
            r.l0.to_string(),
            r.l1.to_string(),
            r.g1_0.to_string(),
            r.g1_1.to_string(),
            r.g2_0.to_string(),
            r.g2_1.to_string(),
            opt(r.tau1.get(), |t| t.to_string()),
            opt(r.tau2.get(), |t| t.to_string()),
            opt(r.chi2, fmt_float),
            opt(r.p_value, fmt_float),
            u8::from(self.reject).to_string(),
        ]
    }
}

/// Rows of a batch; `reject` compares each row's own statistic with `critical`.
pub fn rows(batch: &Batch, critical: f64) -> Vec<Row> {
    batch
        .replicates
        .iter()
        .flat_map(|rep| {
            rep.runs.iter().map(move |r| Row { replicate: rep.index, record: *r, reject: rejects(r.chi2, critical) })
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> AppResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(|e| AppError::io("<csv output>", e))?;
    Ok(())
}

fn bad(line: u64, msg: impl Into<String>) -> AppError {
    AppError::Parse { path: format!("csv line {line}"), message: msg.into() }
}

fn num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> AppResult<T> {
    rec[i].parse().map_err(|_| bad(line, format!("column {} = '{}' is not a number", HEADER[i], &rec[i])))
}

fn opt_num<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> AppResult<Option<T>> {
    if rec[i].is_empty() {
        Ok(None)
    } else {
        num(rec, i, line).map(Some)
    }
}

pub fn read_csv<R: Read>(input: R) -> AppResult<Vec<Row>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if r.headers()?.iter().ne(HEADER) {
        return Err(bad(1, format!("header must be {}", HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let at = |t: Option<u64>| t.map_or(StoppingTime::NotReached, StoppingTime::At);
        let record = SimRecord {
            seed: num(&rec, 1, line)?,
            n: num(&rec, 2, line)?,
            c_n: num(&rec, 3, line)?,
            n0: num(&rec, 4, line)?,
            n1: num(&rec, 5, line)?,
            l0: num(&rec, 6, line)?,
            l1: num(&rec, 7, line)?,
            g1_0: num(&rec, 8, line)?,
            g1_1: num(&rec, 9, line)?,
            g2_0: num(&rec, 10, line)?,
            g2_1: num(&rec, 11, line)?,
            tau1: at(opt_num(&rec, 12, line)?),
            tau2: at(opt_num(&rec, 13, line)?),
            chi2: opt_num(&rec, 14, line)?,
            p_value: opt_num(&rec, 15, line)?,
        };
        let reject = match &rec[16] {
            "0" => false,
            "1" => true,
            other => return Err(bad(line, format!("reject = '{other}' is not 0 or 1"))),
        };
        out.push(Row { replicate: num(&rec, 0, line)?, record, reject });
    }
    Ok(out)
}

/// Records the test applies to: rows themselves, or the pooled pair of a
/// replicate with two rows.
pub fn tested_records(rows: &[Row]) -> AppResult<Vec<SimRecord>> {
    let mut groups: BTreeMap<u64, Vec<&SimRecord>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.replicate).or_default().push(&row.record);
    }
    groups
        .into_iter()
        .map(|(rep, g)| match g.as_slice() {
            [one] => Ok(**one),
            [a, b] => Ok(pool_separate(a, b)?),
            _ => Err(AppError::Parse {
                path: "csv".into(),
                message: format!("replicate {rep} has {} rows", g.len()),
            }),
        })
        .collect()
}
