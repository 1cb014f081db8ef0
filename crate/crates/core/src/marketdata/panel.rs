use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::quotes::{
    carry_rates, half_spread, simple_return, tomnext_outright, CarryRates, ForwardPointsQuote,
    InstrumentSpec, QuotePair,
};
use crate::error::{Error, Result};

pub const QUOTE_HEADER: [&str; 5] = ["date", "bid_spot", "ask_spot", "bid_fpts", "ask_fpts"];
pub const INSTRUMENT_HEADER: [&str; 4] = ["symbol", "ric", "tn_ric", "pip_size"];
pub const INSTRUMENTS_FILE: &str = "instruments.csv";

/// Date-aligned quotes for a set of instruments. Grids are indexed
/// `[date][instrument]` and are complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPanel {
    dates: Vec<NaiveDate>,
    instruments: Vec<InstrumentSpec>,
    spot: Vec<Vec<QuotePair>>,
    fpts: Vec<Vec<ForwardPointsQuote>>,
    returns: Vec<Vec<f64>>,
}

/// One instrument's worth of rows prior to alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSeries {
    pub spec: InstrumentSpec,
    pub rows: Vec<(QuotePair, ForwardPointsQuote)>,
}

impl MarketPanel {
    /// Intersects dates across all series and builds the returns grid. The
    /// first return of every instrument is zero.
    pub fn from_series(series: Vec<QuoteSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Data("no instruments supplied".into()));
        }
        let mut by_date: Vec<BTreeMap<NaiveDate, (QuotePair, ForwardPointsQuote)>> =
            Vec::with_capacity(series.len());
        for s in &series {
            s.spec.validate()?;
            let mut map = BTreeMap::new();
            for &(spot, fp) in &s.rows {
                if spot.timestamp != fp.timestamp {
                    return Err(Error::Alignment(format!(
                        "{}: spot dated {} paired with points dated {}",
                        s.spec.symbol, spot.timestamp, fp.timestamp
                    )));
                }
                if map.insert(spot.timestamp, (spot, fp)).is_some() {
                    return Err(Error::Data(format!(
                        "{}: duplicate date {}",
                        s.spec.symbol, spot.timestamp
                    )));
                }
            }
            by_date.push(map);
        }
        let mut common: BTreeSet<NaiveDate> = by_date[0].keys().copied().collect();
        for map in &by_date[1..] {
            common.retain(|d| map.contains_key(d));
        }
        if common.is_empty() {
            return Err(Error::Data(
                "date intersection across instruments is empty".into(),
            ));
        }
        let dates: Vec<NaiveDate> = common.into_iter().collect();
        let mut spot = Vec::with_capacity(dates.len());
        let mut fpts = Vec::with_capacity(dates.len());
        for d in &dates {
            spot.push(by_date.iter().map(|m| m[d].0).collect::<Vec<_>>());
            fpts.push(by_date.iter().map(|m| m[d].1).collect::<Vec<_>>());
        }
        let instruments = series.into_iter().map(|s| s.spec).collect();
        Self::from_grids(dates, instruments, spot, fpts)
    }

    fn from_grids(
        dates: Vec<NaiveDate>,
        instruments: Vec<InstrumentSpec>,
        spot: Vec<Vec<QuotePair>>,
        fpts: Vec<Vec<ForwardPointsQuote>>,
    ) -> Result<Self> {
        let k = instruments.len();
        let mut returns = Vec::with_capacity(dates.len());
        for t in 0..dates.len() {
            if t > 0 && dates[t] <= dates[t - 1] {
                return Err(Error::Data(format!(
                    "dates not strictly increasing at {}",
                    dates[t]
                )));
            }
            if spot[t].len() != k || fpts[t].len() != k {
                return Err(Error::Shape {
                    expected: k,
                    got: spot[t].len().min(fpts[t].len()),
                });
            }
            let row = if t == 0 {
                vec![0.0; k]
            } else {
                (0..k)
                    .map(|j| simple_return(spot[t][j].mid(), spot[t - 1][j].mid()))
                    .collect::<Result<Vec<_>>>()?
            };
            returns.push(row);
        }
        Ok(Self {
            dates,
            instruments,
            spot,
            fpts,
            returns,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn instruments(&self) -> &[InstrumentSpec] {
        &self.instruments
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_instruments(&self) -> usize {
        self.instruments.len()
    }

    pub fn spot(&self, t: usize, k: usize) -> &QuotePair {
        &self.spot[t][k]
    }

    pub fn fpts(&self, t: usize, k: usize) -> &ForwardPointsQuote {
        &self.fpts[t][k]
    }

    /// The cross-sectional return vector for date `t`.
    pub fn returns(&self, t: usize) -> &[f64] {
        &self.returns[t]
    }

    pub fn mid(&self, t: usize, k: usize) -> f64 {
        self.spot[t][k].mid()
    }

    pub fn half_spread(&self, t: usize, k: usize) -> f64 {
        half_spread(&self.spot[t][k])
    }

    pub fn carry(&self, t: usize, k: usize) -> Result<CarryRates> {
        let spot = &self.spot[t][k];
        let tn = tomnext_outright(spot, &self.fpts[t][k], &self.instruments[k])?;
        Ok(carry_rates(spot, &tn))
    }

    /// Contiguous sub-panel over `range` of date indices. Returns are
    /// recomputed, so the first row of the slice is zero.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::Config(format!(
                "invalid date range {range:?} for panel of {} dates",
                self.len()
            )));
        }
        Self::from_grids(
            self.dates[range.clone()].to_vec(),
            self.instruments.clone(),
            self.spot[range.clone()].to_vec(),
            self.fpts[range].to_vec(),
        )
    }

    /// Writes `instruments.csv` plus one `<symbol>.csv` per instrument.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::with_capacity(self.instruments.len() + 1);
        let meta_path = dir.join(INSTRUMENTS_FILE);
        write_instruments(&meta_path, &self.instruments)?;
        written.push(meta_path);
        for (k, spec) in self.instruments.iter().enumerate() {
            let path = dir.join(format!("{}.csv", spec.symbol));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(file);
            let io = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
            w.write_record(QUOTE_HEADER).map_err(io)?;
            for t in 0..self.len() {
                let s = &self.spot[t][k];
                let f = &self.fpts[t][k];
                w.write_record([
                    self.dates[t].to_string(),
                    s.bid.to_string(),
                    s.ask.to_string(),
                    f.bid_points.to_string(),
                    f.ask_points.to_string(),
                ])
                .map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_instruments(path: &Path, specs: &[InstrumentSpec]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let io = |e: csv::Error| Error::Data(format!("{}: {e}", path.display()));
    w.write_record(INSTRUMENT_HEADER).map_err(io)?;
    for s in specs {
        w.write_record([
            s.symbol.clone(),
            s.ric.clone(),
            s.tn_ric.clone(),
            s.pip_size.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_instruments(path: &Path) -> Result<Vec<InstrumentSpec>> {
    let mut rdr = open_csv(path, &INSTRUMENT_HEADER)?;
    let mut specs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != INSTRUMENT_HEADER.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", INSTRUMENT_HEADER.len(), rec.len()),
            ));
        }
        let pip_size: f64 = rec[3]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid pip_size {:?}", &rec[3])))?;
        let spec = InstrumentSpec {
            symbol: rec[0].trim().to_string(),
            ric: rec[1].trim().to_string(),
            tn_ric: rec[2].trim().to_string(),
            pip_size,
        };
        spec.validate()
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err(Error::Data(format!("{}: no instruments listed", path.display())));
    }
    Ok(specs)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    if found != header {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {}, found {}", header.join(","), found.join(",")),
        ));
    }
    Ok(rdr)
}

enum Cell {
    Value(f64),
    Missing,
}

/// Empty cells and `NA`/`NaN` tokens are missing values; any other text that
/// is not a number is a schema violation.
fn parse_cell(raw: &str) -> Option<Cell> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Some(Cell::Missing);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(Cell::Value(v)),
        Ok(_) => Some(Cell::Missing),
        Err(_) => None,
    }
}

/// Reads one instrument file. Rows with a missing field (or a nonpositive
/// spot price) are dropped; they disappear panel-wide after alignment.
pub fn read_quote_file(path: &Path, spec: &InstrumentSpec) -> Result<QuoteSeries> {
    let mut rdr = open_csv(path, &QUOTE_HEADER)?;
    let mut rows = Vec::new();
    let mut dropped = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::parse(path, line, e.to_string()))?;
        if rec.len() != QUOTE_HEADER.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", QUOTE_HEADER.len(), rec.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|_| Error::parse(path, line, format!("invalid date {:?}", &rec[0])))?;
        let mut values = [0.0f64; 4];
        let mut missing = false;
        for (j, v) in values.iter_mut().enumerate() {
            match parse_cell(&rec[j + 1]) {
                Some(Cell::Value(x)) => *v = x,
                Some(Cell::Missing) => missing = true,
                None => {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("invalid {} value {:?}", QUOTE_HEADER[j + 1], &rec[j + 1]),
                    ))
                }
            }
        }
        let spot = QuotePair::new(date, values[0], values[1]);
        if missing || !spot.is_valid() {
            dropped += 1;
            continue;
        }
        if spot.is_crossed() {
            log::warn!("{}: crossed spot quote on {date}", spec.symbol);
        }
        let fp = ForwardPointsQuote::new(date, values[2], values[3]);
        if fp.is_inverted() {
            log::warn!("{}: inverted forward points on {date}", spec.symbol);
        }
        rows.push((spot, fp));
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} incomplete rows", path.display());
    }
    Ok(QuoteSeries {
        spec: spec.clone(),
        rows,
    })
}

pub fn load_panel(paths: &[PathBuf], specs: &[InstrumentSpec]) -> Result<MarketPanel> {
    if paths.len() != specs.len() {
        return Err(Error::Shape {
            expected: specs.len(),
            got: paths.len(),
        });
    }
    let series = paths
        .iter()
        .zip(specs)
        .map(|(p, s)| read_quote_file(p, s))
        .collect::<Result<Vec<_>>>()?;
    MarketPanel::from_series(series)
}

/// Loads `instruments.csv` and the matching `<symbol>.csv` files from `dir`.
pub fn load_panel_dir(dir: &Path) -> Result<MarketPanel> {
    let specs = read_instruments(&dir.join(INSTRUMENTS_FILE))?;
    let paths: Vec<PathBuf> = specs
        .iter()
        .map(|s| dir.join(format!("{}.csv", s.symbol)))
        .collect();
    load_panel(&paths, &specs)
}
