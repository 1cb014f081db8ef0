use drift_fx::mixture::{
    e_step, em_fit, fj_fit, m_step, message_length, GaussianComponent, MixtureFitConfig, MixtureModel,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Isotropic clusters with unit σ at the given centres, `per` points each.
fn clusters(centres: &[[f64; 2]], per: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(centres.len() * per);
    for c in centres {
        for _ in 0..per {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            out.push(vec![c[0] + x, c[1] + y]);
        }
    }
    out
}

fn mean_of(rows: &[Vec<f64>]) -> [f64; 2] {
    let n = rows.len() as f64;
    [
        rows.iter().map(|r| r[0]).sum::<f64>() / n,
        rows.iter().map(|r| r[1]).sum::<f64>() / n,
    ]
}

#[test]
fn separated_pair_recovers_cluster_means() {
    let centres = [[0.0, 0.0], [10.0, 0.0]];
    let data = clusters(&centres, 200, 11);
    // Oracle: per-cluster sample means under perfect separation.
    let oracle = [mean_of(&data[..200]), mean_of(&data[200..])];
    let fit = em_fit(&data, 2, &MixtureFitConfig { seed: 3, ..Default::default() }).unwrap();
    for truth in &oracle {
        let nearest = fit
            .model
            .components()
            .iter()
            .map(|c| ((c.mean[0] - truth[0]).powi(2) + (c.mean[1] - truth[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 0.2, "component {nearest} away from oracle mean");
    }
}

#[test]
fn em_likelihood_never_decreases() {
    for seed in 0..5u64 {
        let data = clusters(&[[0.0, 0.0], [3.0, 1.0], [-2.0, 4.0]], 100, seed);
        let fit = em_fit(&data, 4, &MixtureFitConfig { seed, tol: 1e-12, ..Default::default() }).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "likelihood fell from {} to {}", w[0], w[1]);
        }
    }
}

/// Three-component EM started at the generating parameters.
fn reference_length(data: &[Vec<f64>], centres: &[[f64; 2]]) -> f64 {
    let comps = centres
        .iter()
        .map(|c| GaussianComponent {
            weight: 1.0 / centres.len() as f64,
            mean: DVector::from_vec(c.to_vec()),
            covariance: DMatrix::identity(2, 2),
        })
        .collect();
    let mut m = MixtureModel::new(comps).unwrap();
    for _ in 0..300 {
        let es = e_step(&m, data).unwrap();
        m = m_step(data, &es.responsibilities, 1e-12).unwrap();
    }
    message_length(&m, data).unwrap()
}

#[test]
fn annihilation_reaches_the_generating_structure() {
    let centres = [[0.0, 0.0], [10.0, 0.0], [5.0, 8.66]];
    for seed in 0..20u64 {
        let data = clusters(&centres, 267, 100 + seed);
        let cfg = MixtureFitConfig { k_min: 1, k_max: 10, seed, ..Default::default() };
        let fit = fj_fit(&data, &cfg).unwrap();
        for s in &fit.trace {
            assert!((s.weight_sum - 1.0).abs() < 1e-9);
        }
        // Never underfits, never ends worse than the generating model.
        assert!(fit.model.k() >= 3, "seed {seed}: k={}", fit.model.k());
        assert!(fit.path.iter().any(|&(k, _)| k == 3));
        let reference = reference_length(&data, &centres);
        assert!(fit.message_length <= reference + 0.1, "seed {seed}: {} vs {reference}", fit.message_length);
        for c in fit.model.components() {
            let e = SymmetricEigen::new(c.covariance.clone()).eigenvalues;
            assert!(e.min() > 0.0);
            assert_eq!(c.covariance, c.covariance.transpose());
        }
    }
}

#[test]
fn annihilated_components_never_reappear() {
    let data = clusters(&[[0.0, 0.0], [10.0, 0.0], [5.0, 8.66]], 100, 5);
    let fit = fj_fit(&data, &MixtureFitConfig { k_max: 10, ..Default::default() }).unwrap();
    for w in fit.trace.windows(2) {
        assert!(w[1].k <= w[0].k);
    }
}

#[test]
fn row_permutation_gives_same_model() {
    let data = clusters(&[[0.0, 0.0], [10.0, 0.0], [5.0, 8.66]], 80, 9);
    let mut rev = data.clone();
    rev.reverse();
    let cfg = MixtureFitConfig { k_max: 6, seed: 4, ..Default::default() };
    let a = fj_fit(&data, &cfg).unwrap().model;
    let b = fj_fit(&rev, &cfg).unwrap().model;
    assert_eq!(a.k(), b.k());
    for ca in a.components() {
        let matched = b.components().iter().any(|cb| {
            (ca.weight - cb.weight).abs() < 1e-8
                && (&ca.mean - &cb.mean).amax() < 1e-8
                && (&ca.covariance - &cb.covariance).amax() < 1e-8
        });
        assert!(matched, "component {:?} missing after permutation", ca.mean);
    }
}
