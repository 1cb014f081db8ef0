use std::time::Instant;

use drift_fx::backtest::{aggregate_portfolio, decompose_funding, run, BacktestConfig, StepRecord, Strategy};
use drift_fx::marketdata::{scenarios, synth_panel, MarketPanel, SynthConfig};

fn panel(cfg: &SynthConfig, seed: u64) -> MarketPanel {
    synth_panel(cfg, seed).unwrap()
}

fn rows<'a>(records: &'a [StepRecord], symbol: &str, strategy: Strategy) -> Vec<&'a StepRecord> {
    records
        .iter()
        .filter(|r| r.instrument == symbol && r.strategy == strategy)
        .collect()
}

fn mean_position(records: &[StepRecord], symbol: &str, strategy: Strategy) -> f64 {
    let r = rows(records, symbol, strategy);
    r.iter().map(|r| r.position).sum::<f64>() / r.len() as f64
}

fn sum_of(records: &[StepRecord], symbol: &str, strategy: Strategy, pick: fn(&StepRecord) -> f64) -> f64 {
    rows(records, symbol, strategy).into_iter().map(pick).sum()
}

fn frictionless() -> BacktestConfig {
    BacktestConfig {
        costs_enabled: false,
        carry_enabled: false,
        ..Default::default()
    }
}

#[test]
fn uptrend_without_frictions_is_profitable_for_drl() {
    let out = run(&scenarios::linear_uptrend(2840, 0.0005, 1).unwrap(), &frictionless(), None).unwrap();
    let drl = rows(&out.records, "EURUSD", Strategy::Drl);
    let last = drl.last().unwrap().position;
    assert!(last > 0.95, "terminal position {last}");
    let cum: f64 = drl.iter().map(|r| r.net).sum();
    assert!(cum > 0.0, "cumulative net {cum}");
}

#[test]
fn carry_trader_abstains_when_both_rolls_cost() {
    let out = run(&panel(&scenarios::negative_carry(300), 2), &BacktestConfig::default(), None).unwrap();
    for r in rows(&out.records, "GBPUSD", Strategy::Carry) {
        assert_eq!(r.position, 0.0);
        assert_eq!(r.net, 0.0);
    }
}

#[test]
fn identical_runs_are_identical() {
    let p = panel(&SynthConfig::demo(6, 400).unwrap(), 5);
    let cfg = BacktestConfig { seed: 8, ..Default::default() };
    let a = run(&p, &cfg, None).unwrap();
    let b = run(&p, &cfg, None).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
}

#[test]
fn running_on_a_prefix_reproduces_the_prefix() {
    let p = panel(&SynthConfig::demo(5, 400).unwrap(), 6);
    let cfg = BacktestConfig {
        train_size: Some(120),
        ..Default::default()
    };
    let full = run(&p, &cfg, None).unwrap();
    for cut in [130, 251, 399] {
        let short = run(&p.slice(0..cut).unwrap(), &cfg, None).unwrap();
        assert_eq!(short.records[..], full.records[..short.records.len()], "prefix {cut}");
        assert_eq!(short.records.len(), (cut - 120) * 5 * 3);
    }
}

#[test]
fn records_satisfy_the_accounting_identity() {
    let out = run(&panel(&SynthConfig::demo(4, 300).unwrap(), 7), &BacktestConfig::default(), None).unwrap();
    for r in &out.records {
        assert_eq!(r.net, r.gross + r.cost + r.carry);
    }
    // Date, then instrument, then strategy.
    assert_eq!(out.records[0].strategy, Strategy::Drl);
    assert_eq!(out.records[1].strategy, Strategy::Mom);
    assert_eq!(out.records[2].strategy, Strategy::Carry);
    assert_eq!(out.records[2].instrument, out.records[0].instrument);
    assert_ne!(out.records[3].instrument, out.records[0].instrument);
}

#[test]
fn removing_costs_never_hurts_the_carry_trader() {
    let p = panel(&SynthConfig::demo(8, 300).unwrap(), 9);
    let with = run(&p, &BacktestConfig::default(), None).unwrap();
    let without = run(&p, &BacktestConfig { costs_enabled: false, ..Default::default() }, None).unwrap();
    for inst in p.instruments() {
        let a = sum_of(&with.records, &inst.symbol, Strategy::Carry, |r| r.net);
        let b = sum_of(&without.records, &inst.symbol, Strategy::Carry, |r| r.net);
        assert!(b >= a, "{}: {b} < {a}", inst.symbol);
    }
}

#[test]
fn funding_vanishes_without_carry() {
    let p = panel(&SynthConfig::demo(4, 200).unwrap(), 3);
    let out = run(&p, &BacktestConfig { carry_enabled: false, ..Default::default() }, None).unwrap();
    for (_, row) in decompose_funding(&out.records).unwrap() {
        assert_eq!((row.min, row.max, row.sum), (0.0, 0.0, 0.0));
    }
}

#[test]
fn carry_trader_collects_planted_carry() {
    let out = run(&panel(&scenarios::planted_carry(400), 4), &BacktestConfig::default(), None).unwrap();
    assert!(rows(&out.records, "USDRUB", Strategy::Carry).iter().all(|r| r.position == -1.0));
    assert!(sum_of(&out.records, "USDRUB", Strategy::Carry, |r| r.carry) > 0.0);
}

#[test]
fn drl_captures_more_carry_than_momentum() {
    for seed in 0..10 {
        let out = run(&panel(&scenarios::planted_carry(1500), seed), &BacktestConfig::default(), None).unwrap();
        let drl = sum_of(&out.records, "USDRUB", Strategy::Drl, |r| r.carry);
        let mom = sum_of(&out.records, "USDRUB", Strategy::Mom, |r| r.carry);
        assert!(drl >= mom, "seed {seed}: drl {drl} < momentum {mom}");
        assert!(mean_position(&out.records, "USDRUB", Strategy::Drl) < 0.0, "seed {seed}");
    }
}

#[test]
fn carry_against_trend_flips_the_position() {
    for seed in 0..10 {
        let p = panel(&scenarios::carry_against_trend(1500), seed);
        let with = run(&p, &BacktestConfig::default(), None).unwrap();
        let without = run(&p, &frictionless(), None).unwrap();
        let a = mean_position(&with.records, "USDRUB", Strategy::Drl);
        let b = mean_position(&without.records, "USDRUB", Strategy::Drl);
        assert!(a < 0.0 && b > 0.0, "seed {seed}: with frictions {a}, without {b}");
    }
}

#[test]
fn portfolio_ignores_record_order() {
    let out = run(&panel(&SynthConfig::demo(4, 200).unwrap(), 1), &BacktestConfig::default(), None).unwrap();
    let mut shuffled = out.records.clone();
    shuffled.reverse();
    shuffled.rotate_left(7);
    assert_eq!(aggregate_portfolio(&shuffled).unwrap(), aggregate_portfolio(&out.records).unwrap());
}

#[test]
fn full_scale_run_fits_the_budget() {
    let p = panel(&SynthConfig::demo(36, 2840).unwrap(), 42);
    let t = Instant::now();
    let out = run(&p, &BacktestConfig::default(), None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    assert_eq!(out.train_len, 947);
    assert_eq!(out.report.test_days, 1893);
    assert_eq!(out.records.len(), 1893 * 36 * 3);
    assert!(secs < 60.0, "took {secs:.1}s");
}
