use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::config::Strategy;
use super::records::{unsign, StepRecord};
use crate::error::{Error, Result};
use crate::estimators::{information_ratio, TRADING_DAYS};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Descriptive statistics of a daily return series. Undefined entries
/// (dispersion of fewer than two points, ratios over zero dispersion) are
/// `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub count: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub min: f64,
    #[serde(rename = "25%")]
    pub q25: f64,
    #[serde(rename = "50%")]
    pub q50: f64,
    #[serde(rename = "75%")]
    pub q75: f64,
    pub max: f64,
    pub sum: f64,
    pub ir: Option<f64>,
    pub prob_positive_alpha: Option<f64>,
}

/// Linear interpolation between order statistics at `q·(n−1)`.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn performance_stats(series: &[f64]) -> Result<StatsRow> {
    if series.is_empty() {
        return Err(Error::Data("statistics need at least one observation".into()));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite value in return series".into()));
    }
    let n = series.len();
    let sum: f64 = series.iter().sum();
    let mean = sum / n as f64;
    let std = (n > 1).then(|| {
        let ss: f64 = series.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ir = std.and_then(|s| information_ratio(mean, 0.0, s).ok());
    Ok(StatsRow {
        count: n,
        mean: unsign(mean),
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        q50: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
        sum: unsign(sum),
        ir: ir.map(unsign),
        prob_positive_alpha: ir.map(normal_cdf),
    })
}

/// `(1 + Σr)^{252/n} − 1`; undefined when the total loses everything.
pub fn annualized_compound(total: f64, n_days: usize) -> Option<f64> {
    (1.0 + total > 0.0 && n_days > 0).then(|| (1.0 + total).powf(TRADING_DAYS / n_days as f64) - 1.0)
}

type Series = Vec<(NaiveDate, f64)>;

/// Equal-weight daily mean of `pick(record)` per strategy. Instruments are
/// summed in symbol order so the result does not depend on record order.
fn portfolio_by(records: &[StepRecord], pick: fn(&StepRecord) -> f64) -> Result<BTreeMap<Strategy, Series>> {
    let mut grouped: BTreeMap<Strategy, BTreeMap<NaiveDate, Vec<(&str, f64)>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.strategy)
            .or_default()
            .entry(r.date)
            .or_default()
            .push((r.instrument.as_str(), pick(r)));
    }
    let mut out = BTreeMap::new();
    for (strategy, days) in grouped {
        let mut reference: Option<Vec<&str>> = None;
        let mut series = Vec::with_capacity(days.len());
        for (date, mut rows) in days {
            rows.sort_by(|a, b| a.0.cmp(b.0));
            let names: Vec<&str> = rows.iter().map(|r| r.0).collect();
            match &reference {
                None => reference = Some(names),
                Some(want) if *want != names => {
                    return Err(Error::Alignment(format!(
                        "{strategy} on {date}: instruments {names:?} differ from {want:?}"
                    )));
                }
                Some(_) => {}
            }
            let total: f64 = rows.iter().map(|r| r.1).sum();
            series.push((date, unsign(total / rows.len() as f64)));
        }
        out.insert(strategy, series);
    }
    Ok(out)
}

/// Daily portfolio net return per strategy.
pub fn aggregate_portfolio(records: &[StepRecord]) -> Result<BTreeMap<Strategy, Series>> {
    portfolio_by(records, |r| r.net)
}

/// Statistics of the carry component alone.
pub fn decompose_funding(records: &[StepRecord]) -> Result<BTreeMap<Strategy, StatsRow>> {
    portfolio_by(records, |r| r.carry)?
        .into_iter()
        .map(|(s, series)| {
            let values: Vec<f64> = series.iter().map(|p| p.1).collect();
            Ok((s, performance_stats(&values)?))
        })
        .collect()
}

/// Running sum of the daily portfolio net return.
pub fn cumulative(records: &[StepRecord]) -> Result<BTreeMap<Strategy, Series>> {
    Ok(aggregate_portfolio(records)?
        .into_iter()
        .map(|(s, series)| {
            let mut acc = 0.0;
            let path = series
                .into_iter()
                .map(|(d, r)| {
                    acc += r;
                    (d, acc)
                })
                .collect();
            (s, path)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub net: StatsRow,
    pub funding: StatsRow,
    pub annualized_compound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub test_days: usize,
    pub strategies: Vec<StrategyReport>,
}

/// Everything the report holds is derived from the records, so it can be
/// rebuilt from a records file alone.
pub fn build_report(records: &[StepRecord]) -> Result<PerformanceReport> {
    if records.is_empty() {
        return Err(Error::Data("no records to report on".into()));
    }
    let net = aggregate_portfolio(records)?;
    let funding = decompose_funding(records)?;
    let mut strategies = Vec::with_capacity(net.len());
    let mut test_days = None;
    for (strategy, series) in &net {
        let values: Vec<f64> = series.iter().map(|p| p.1).collect();
        let row = performance_stats(&values)?;
        match test_days {
            None => test_days = Some(row.count),
            Some(n) if n != row.count => {
                return Err(Error::Alignment(format!(
                    "{strategy} covers {} days, other strategies {n}",
                    row.count
                )));
            }
            Some(_) => {}
        }
        strategies.push(StrategyReport {
            strategy: *strategy,
            annualized_compound: annualized_compound(row.sum, row.count),
            net: row,
            funding: funding[strategy].clone(),
        });
    }
    Ok(PerformanceReport {
        test_days: test_days.unwrap_or(0),
        strategies,
    })
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:>14.6}"),
        None => format!("{:>14}", "n/a"),
    }
}

fn table(out: &mut String, title: &str, rows: &[(Strategy, &StatsRow)]) {
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<10}", "");
    for (s, _) in rows {
        let _ = write!(out, "{:>14}", s.as_str());
    }
    out.push('\n');
    let lines: [(&str, fn(&StatsRow) -> Option<f64>); 11] = [
        ("count", |r| Some(r.count as f64)),
        ("mean", |r| Some(r.mean)),
        ("std", |r| r.std),
        ("min", |r| Some(r.min)),
        ("25%", |r| Some(r.q25)),
        ("50%", |r| Some(r.q50)),
        ("75%", |r| Some(r.q75)),
        ("max", |r| Some(r.max)),
        ("sum", |r| Some(r.sum)),
        ("ir", |r| r.ir),
        ("P(alpha>0)", |r| r.prob_positive_alpha),
    ];
    for (label, get) in lines {
        let _ = write!(out, "{label:<10}");
        for (_, row) in rows {
            if label == "count" {
                let _ = write!(out, "{:>14}", row.count);
            } else {
                out.push_str(&cell(get(row)));
            }
        }
        out.push('\n');
    }
}

impl PerformanceReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn get(&self, strategy: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }

    /// Fixed-width tables of net and funding returns.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let net: Vec<_> = self.strategies.iter().map(|s| (s.strategy, &s.net)).collect();
        let funding: Vec<_> = self.strategies.iter().map(|s| (s.strategy, &s.funding)).collect();
        table(&mut out, "Portfolio net returns by strategy", &net);
        out.push('\n');
        table(&mut out, "Portfolio funding returns by strategy", &funding);
        out.push('\n');
        let _ = write!(out, "{:<10}", "ann. comp");
        for s in &self.strategies {
            out.push_str(&cell(s.annualized_compound));
        }
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rec(d: u32, inst: &str, s: Strategy, net: f64, carry: f64) -> StepRecord {
        StepRecord::new(NaiveDate::from_ymd_opt(2021, 3, d).unwrap(), inst, s, 1.0, net - carry, 0.0, carry)
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(0.518) - 0.6977).abs() < 5e-4);
        assert!((normal_cdf(0.403) - 0.6565).abs() < 5e-4);
        assert_abs_diff_eq!(normal_cdf(1.959_963_984_540_054), 0.975, epsilon = 1e-12);
    }

    #[test]
    fn descriptive_statistics() {
        let s = performance_stats(&[0.01, 0.0, -0.01]).unwrap();
        assert_eq!(s.count, 3);
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.sum, 0.0);
        assert_abs_diff_eq!(s.std.unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(s.q50, 0.0);
        assert_eq!(s.q25, -0.005);
        assert_eq!(s.ir, Some(0.0));
        assert_eq!(s.prob_positive_alpha, Some(0.5));
        let one = performance_stats(&[0.2]).unwrap();
        assert!(one.std.is_none() && one.ir.is_none());
        let flat = performance_stats(&[0.1, 0.1]).unwrap();
        assert_eq!(flat.std, Some(0.0));
        assert!(flat.ir.is_none());
        assert!(performance_stats(&[]).is_err());
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let s = performance_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q25, s.q50, s.q75), (1.75, 2.5, 3.25));
    }

    #[test]
    fn equal_weight_portfolio() {
        let recs = vec![
            rec(1, "EURUSD", Strategy::Drl, 0.01, 0.0),
            rec(1, "USDJPY", Strategy::Drl, -0.01, 0.0),
            rec(2, "EURUSD", Strategy::Drl, 0.02, 0.0),
            rec(2, "USDJPY", Strategy::Drl, 0.04, 0.0),
        ];
        let p = aggregate_portfolio(&recs).unwrap();
        assert_eq!(p[&Strategy::Drl][0].1, 0.0);
        assert_abs_diff_eq!(p[&Strategy::Drl][1].1, 0.03, epsilon = 1e-17);
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(aggregate_portfolio(&rev).unwrap(), p);
        let single = vec![rec(1, "EURUSD", Strategy::Mom, 0.7, 0.0)];
        assert_eq!(aggregate_portfolio(&single).unwrap()[&Strategy::Mom][0].1, 0.7);
    }

    #[test]
    fn ragged_dates_are_rejected() {
        let recs = vec![
            rec(1, "EURUSD", Strategy::Drl, 0.01, 0.0),
            rec(1, "USDJPY", Strategy::Drl, -0.01, 0.0),
            rec(2, "EURUSD", Strategy::Drl, 0.02, 0.0),
        ];
        assert!(matches!(aggregate_portfolio(&recs), Err(Error::Alignment(_))));
    }

    #[test]
    fn funding_uses_carry_only() {
        let recs = vec![
            rec(1, "EURUSD", Strategy::Carry, 0.01, 0.002),
            rec(2, "EURUSD", Strategy::Carry, -0.01, 0.001),
        ];
        let f = decompose_funding(&recs).unwrap();
        assert_abs_diff_eq!(f[&Strategy::Carry].sum, 0.003, epsilon = 1e-17);
        let report = build_report(&recs).unwrap();
        assert_eq!(report.test_days, 2);
        let back = PerformanceReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
        assert!(report.render().contains("P(alpha>0)"));
    }

    #[test]
    fn compound_annualisation() {
        assert_abs_diff_eq!(annualized_compound(0.1, 252).unwrap(), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(annualized_compound(0.21, 504).unwrap(), 0.1, epsilon = 1e-12);
        assert!(annualized_compound(-1.0, 10).is_none());
    }
}
