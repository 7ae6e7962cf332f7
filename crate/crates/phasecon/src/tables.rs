//! CSV outputs: capacity curves, annealing traces, mismatch matrices and
//! campaign manifests.

use std::io::{BufRead, Write};

use phasecon_core::analysis::{Abscissa, CapacityCurve, CurvePoint, MismatchReport};
use phasecon_core::annealer::AnnealTrace;
use phasecon_core::capacity::Objective;

use crate::error::{CliError, CliResult};

fn fail(err: impl std::fmt::Display) -> CliError {
    CliError::Format(err.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

/// Two comment lines (keys, then values) followed by `x,bits,stderr` rows.
pub fn write_curve<W: Write>(mut out: W, curve: &CapacityCurve) -> CliResult<()> {
    writeln!(out, "# abscissa_kind,fixed_param,objective,fingerprint").map_err(fail)?;
    writeln!(
        out,
        "# {},{},{},{}",
        curve.abscissa.as_str(),
        curve.fixed,
        curve.objective.as_str(),
        curve.fingerprint
    )
    .map_err(fail)?;
    let mut w = writer(out);
    w.write_record(["x", "bits", "stderr"]).map_err(fail)?;
    for p in &curve.points {
        w.write_record([p.x.to_string(), p.bits.to_string(), p.stderr.to_string()]).map_err(fail)?;
    }
    w.flush().map_err(fail)
}

pub fn read_curve<R: BufRead>(mut input: R) -> CliResult<CapacityCurve> {
    let mut lines = [String::new(), String::new()];
    for line in &mut lines {
        input.read_line(line).map_err(fail)?;
    }
    if lines[0].trim() != "# abscissa_kind,fixed_param,objective,fingerprint" {
        return Err(fail("missing curve header"));
    }
    let fields: Vec<&str> = lines[1].trim().trim_start_matches('#').trim().split(',').collect();
    let [kind, fixed, objective, fingerprint] = fields[..] else {
        return Err(fail("malformed curve header"));
    };
    let abscissa = match kind {
        "snr_db" => Abscissa::SnrDb,
        "pnsd_deg" => Abscissa::PnsdDeg,
        other => return Err(fail(format!("unknown abscissa {other:?}"))),
    };
    let mut reader = csv::Reader::from_reader(input);
    let points = reader
        .deserialize::<(f64, f64, f64)>()
        .map(|row| row.map(|(x, bits, stderr)| CurvePoint { x, bits, stderr }).map_err(fail))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CapacityCurve {
        abscissa,
        fixed: fixed.parse().map_err(fail)?,
        objective: objective.parse::<Objective>().map_err(fail)?,
        fingerprint: fingerprint.to_owned(),
        points,
    })
}

pub fn write_trace<W: Write>(out: W, trace: &AnnealTrace) -> CliResult<()> {
    let mut w = writer(out);
    w.write_record(["step", "temperature", "current_bits", "best_bits", "accepted", "move_type"])
        .map_err(fail)?;
    for r in &trace.rows {
        w.write_record([
            r.step.to_string(),
            r.temperature.to_string(),
            r.current_bits.to_string(),
            r.best_bits.to_string(),
            u8::from(r.accepted).to_string(),
            r.move_kind.as_str().to_owned(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(fail)
}

/// Column name of an evaluation cell.
pub fn cell_column(snr_db: f64, pnsd_deg: f64) -> String {
    format!("snr{snr_db}_pnsd{pnsd_deg}")
}

/// One `bits` row and one `loss` row per design.
pub fn write_mismatch<W: Write>(out: W, report: &MismatchReport) -> CliResult<()> {
    let mut w = writer(out);
    let mut header = vec!["kind".to_owned(), "design_snr_db".to_owned(), "design_pnsd_deg".to_owned()];
    header.extend(report.cells.iter().map(|&(s, p)| cell_column(s, p)));
    w.write_record(&header).map_err(fail)?;
    for (kind, matrix) in [("bits", &report.bits), ("loss", &report.loss)] {
        for (&(snr, pnsd), row) in report.designs.iter().zip(matrix.iter()) {
            let mut record = vec![kind.to_owned(), snr.to_string(), pnsd.to_string()];
            record.extend(row.iter().map(f64::to_string));
            w.write_record(&record).map_err(fail)?;
        }
    }
    w.flush().map_err(fail)
}

/// One row of a campaign manifest.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestRow {
    pub snr_index: usize,
    pub pnsd_index: usize,
    pub snr_db: f64,
    pub pnsd_deg: f64,
    pub seed: u64,
    pub bits: f64,
    pub file: String,
}

pub fn write_manifest<W: Write>(out: W, rows: &[ManifestRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(fail)?;
    }
    w.flush().map_err(fail)
}
