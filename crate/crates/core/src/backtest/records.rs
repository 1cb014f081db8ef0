use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::config::Strategy;
use crate::error::{Error, Result};

pub const RECORD_HEADER: [&str; 8] = ["date", "instrument", "strategy", "position", "gross", "cost", "carry", "net"];

/// One strategy's book on one instrument for one date, in return space.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub date: NaiveDate,
    pub instrument: String,
    pub strategy: Strategy,
    pub position: f64,
    /// Held position times the bar's move.
    pub gross: f64,
    /// Spread paid on the position change; never positive.
    pub cost: f64,
    pub carry: f64,
    pub net: f64,
}

/// Maps `-0.0` to `0.0` so files never show a signed zero.
pub(crate) fn unsign(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

impl StepRecord {
    /// `net` is defined as the sum of its parts.
    pub fn new(
        date: NaiveDate,
        instrument: &str,
        strategy: Strategy,
        position: f64,
        gross: f64,
        cost: f64,
        carry: f64,
    ) -> Self {
        let (gross, cost, carry) = (unsign(gross), unsign(cost), unsign(carry));
        Self {
            date,
            instrument: instrument.to_string(),
            strategy,
            position: unsign(position),
            gross,
            cost,
            carry,
            net: unsign(gross + cost + carry),
        }
    }
}

/// Floats use the shortest representation that parses back to the same
/// value.
pub fn write_records<W: Write>(out: W, records: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Data(format!("writing records: {e}"));
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.instrument.clone(),
            r.strategy.to_string(),
            r.position.to_string(),
            r.gross.to_string(),
            r.cost.to_string(),
            r.carry.to_string(),
            r.net.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("writing records: {e}")))?;
    Ok(())
}

/// Parses a records file; `origin` names it in errors.
pub fn read_records<R: Read>(input: R, origin: &Path) -> Result<Vec<StepRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::parse(origin, 1, e.to_string()))?,
        None => return Err(Error::parse(origin, 1, "empty records file")),
    };
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::parse(
            origin,
            1,
            format!("expected header `{}`", RECORD_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, row) in rows.enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if row.len() != RECORD_HEADER.len() {
            return Err(Error::parse(origin, line, format!("expected 8 fields, got {}", row.len())));
        }
        let num = |j: usize| -> Result<f64> {
            row[j]
                .parse::<f64>()
                .map_err(|_| Error::parse(origin, line, format!("bad {} value `{}`", RECORD_HEADER[j], &row[j])))
        };
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|_| Error::parse(origin, line, format!("bad date `{}`", &row[0])))?;
        let strategy = row[2]
            .parse::<Strategy>()
            .map_err(|e| Error::parse(origin, line, e.to_string()))?;
        out.push(StepRecord {
            date,
            instrument: row[1].to_string(),
            strategy,
            position: num(3)?,
            gross: num(4)?,
            cost: num(5)?,
            carry: num(6)?,
            net: num(7)?,
        });
    }
    Ok(out)
}
