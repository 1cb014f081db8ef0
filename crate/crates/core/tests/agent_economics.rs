use drift_fx::agents::{carry_position, DrlAgent, DrlConfig, MomentumAgent, StepInputs};
use drift_fx::marketdata::CarryRates;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const PHI: [f64; 3] = [0.8, 0.3, 0.05];

#[test]
fn noiseless_uptrend_drives_position_long() {
    let mut agent = DrlAgent::new(3, DrlConfig::default()).unwrap();
    let mut mid = 100.0;
    let mut reached = None;
    for t in 0..500 {
        let step = 0.05;
        mid += step;
        let s = agent.step(&PHI, &StepInputs::frictionless(step, mid)).unwrap();
        if s.position > 0.95 && reached.is_none() {
            reached = Some(t);
        }
    }
    assert!(reached.is_some(), "terminal position {}", agent.position());
    assert!(agent.position() > 0.95);
}

#[test]
fn zero_drift_with_paid_short_carry_goes_short() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut agent = DrlAgent::new(3, DrlConfig::default()).unwrap();
    let carry = CarryRates { long: -0.02, short: 0.015 };
    let mut tail = Vec::new();
    for t in 0..2000 {
        let inputs = StepInputs {
            delta_price: noise.sample(&mut rng),
            half_spread: 0.0005,
            carry,
            mid: 70.0,
        };
        let s = agent.step(&PHI, &inputs).unwrap();
        if t >= 1500 {
            tail.push(s.position);
        }
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(mean < 0.0, "terminal mean position {mean}");
}

#[test]
fn carry_rule_never_trades_without_positive_carry() {
    for (l, s) in [(-0.1, -0.2), (0.0, -0.3), (-1e-9, 0.0)] {
        assert_eq!(carry_position(CarryRates { long: l, short: s }), 0.0);
    }
}

#[test]
fn momentum_positions_invariant_to_target_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let stream: Vec<(Vec<f64>, f64)> = (0..300)
        .map(|t| {
            let a = (t as f64 * 0.1).sin().abs();
            (vec![a, 1.0 - a], 0.01 * noise.sample(&mut rng))
        })
        .collect();
    let run = |c: f64| {
        let mut agent = MomentumAgent::new(2, 1.0, 0.99).unwrap();
        stream
            .iter()
            .map(|(phi, y)| agent.step(phi, c * y).unwrap().0)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(1.0), run(37.0));
}

#[test]
fn identical_inputs_give_identical_positions() {
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let mut agent = DrlAgent::new(3, DrlConfig::default()).unwrap();
        (0..400)
            .map(|_| {
                let i = StepInputs {
                    delta_price: noise.sample(&mut rng),
                    half_spread: 0.001,
                    carry: CarryRates { long: 0.0002, short: -0.0004 },
                    mid: 1.2,
                };
                agent.step(&PHI, &i).unwrap().position.to_bits()
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
