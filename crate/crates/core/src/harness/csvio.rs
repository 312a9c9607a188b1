use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::algorithms::Algorithm;
use crate::error::{Error, Result};

use super::{Reason, ScatterRecord, SummaryRow, TrialRecord};

pub const TRIAL_HEADER: [&str; 12] = [
    "algo",
    "T",
    "k",
    "sigma",
    "rep",
    "seed",
    "error_norm",
    "closed_loop_radius",
    "stabilized",
    "overflow",
    "redraws",
    "reason",
];

pub const SUMMARY_HEADER: [&str; 10] = [
    "algo",
    "T",
    "k",
    "sigma",
    "n",
    "median_error",
    "q1_error",
    "q3_error",
    "iqr_error",
    "stabilized_pct",
];

pub const SCATTER_HEADER: [&str; 2] = ["perturbation_norm", "closed_loop_radius"];

// `{}` on f64 is the shortest string that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x}")
}

fn create(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?)))
}

pub(crate) fn trials_to_writer<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in records {
        w.write_record([
            r.algo.label().to_string(),
            r.horizon.to_string(),
            r.episodes.to_string(),
            num(r.sigma),
            r.rep.to_string(),
            r.seed.to_string(),
            num(r.error_norm),
            num(r.closed_loop_radius),
            r.stabilized.to_string(),
            r.overflow.to_string(),
            r.redraws.to_string(),
            r.reason.code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<()> {
    trials_to_writer(BufWriter::new(File::create(path)?), records)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.algo.label().to_string(),
            r.horizon.to_string(),
            r.episodes.to_string(),
            num(r.sigma),
            r.count.to_string(),
            num(r.median_error),
            num(r.q1_error),
            num(r.q3_error),
            num(r.iqr_error()),
            num(r.stabilized_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scatter(path: &Path, records: &[ScatterRecord]) -> Result<()> {
    let mut w = create(path)?;
    w.write_record(SCATTER_HEADER)?;
    for r in records {
        w.write_record([num(r.perturbation_norm), num(r.closed_loop_radius)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trial CSV written by [`write_trials`].
pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    trials_from_str(&text)
}

pub(crate) fn trials_from_str(text: &str) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().ne(TRIAL_HEADER) {
        return Err(Error::Config(format!(
            "unexpected header {:?}; expected {}",
            header.iter().collect::<Vec<_>>(),
            TRIAL_HEADER.join(",")
        )));
    }
    let mut records = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |field: &str| Error::Config(format!("row {}: invalid {field}", line + 1));
        let parse_f = |i: usize| row[i].parse::<f64>().map_err(|_| bad(TRIAL_HEADER[i]));
        let parse_u = |i: usize| row[i].parse::<u64>().map_err(|_| bad(TRIAL_HEADER[i]));
        let parse_b = |i: usize| row[i].parse::<bool>().map_err(|_| bad(TRIAL_HEADER[i]));
        records.push(TrialRecord {
            algo: Algorithm::from_label(&row[0]).ok_or_else(|| bad("algo"))?,
            horizon: parse_u(1)? as usize,
            episodes: parse_u(2)? as usize,
            sigma: parse_f(3)?,
            rep: parse_u(4)? as usize,
            seed: parse_u(5)?,
            error_norm: parse_f(6)?,
            closed_loop_radius: parse_f(7)?,
            stabilized: parse_b(8)?,
            overflow: parse_b(9)?,
            redraws: parse_u(10)? as usize,
            reason: Reason::from_code(&row[11]).ok_or_else(|| bad("reason"))?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_infinities() {
        let rec = TrialRecord {
            algo: Algorithm::StochasticParameter,
            horizon: 3200,
            episodes: 5,
            sigma: 0.1,
            rep: 7,
            seed: u64::MAX,
            error_norm: f64::INFINITY,
            closed_loop_radius: 0.123_456_789_012_345_67,
            stabilized: false,
            overflow: true,
            redraws: 2,
            reason: Reason::Overflow,
        };
        let mut buf = Vec::new();
        trials_to_writer(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("algo,T,k,sigma,rep,seed,error_norm,closed_loop_radius,stabilized,overflow,redraws,reason\n"));
        assert!(!text.contains('\r'));
        assert_eq!(trials_from_str(&text).unwrap(), vec![rec]);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(trials_from_str("a,b\n1,2\n"), Err(Error::Config(_))));
    }
}
