//! Spectral evolution against the oracle's independent dense propagator and
//! Monte Carlo fidelity sampling, plus the symmetry relations that
//! centro-symmetric chains must satisfy.

mod common;

use common::{random_spec, rng};
use qst_core::{
    averaged_fidelity, build_hamiltonian, decompose, localization_profile,
    localization_profile_at, Model,
};
use qst_oracle::{monte_carlo_fidelity, propagate_dense, propagate_rk4};
use rand::Rng;

#[test]
fn spectral_evolution_matches_dense_propagator() {
    let mut rng = rng(2024);
    for model in [Model::ShortRange, Model::LongRange] {
        for _ in 0..6 {
            let n = rng.gen_range(8..=12);
            let spec = random_spec(&mut rng, model, n, false);
            let h = build_hamiltonian(&spec).unwrap();
            let sd = decompose(&h).unwrap();
            for _ in 0..5 {
                let t = rng.gen_range(0.0..50.0);
                let fast = sd.evolve(1, t);
                let dense = propagate_dense(&h, 1, t);
                for (a, b) in fast.site_amplitudes.iter().zip(&dense) {
                    assert!(
                        (a - b).norm() < 1e-8,
                        "{:?} n={n} t={t}: spectral {a} vs dense {b}",
                        model
                    );
                }
            }
        }
    }
}

#[test]
fn rk4_integration_agrees_on_short_chains() {
    let mut rng = rng(55);
    let spec = random_spec(&mut rng, Model::ShortRange, 6, false);
    let h = build_hamiltonian(&spec).unwrap();
    let sd = decompose(&h).unwrap();
    for t in [0.5, 4.0, 11.0] {
        let fast = sd.evolve(1, t);
        let rk = propagate_rk4(&h, 1, t, 2e-4).unwrap();
        for (a, b) in fast.site_amplitudes.iter().zip(&rk) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn monte_carlo_average_matches_closed_form() {
    let mut rng = rng(808);
    for model in [Model::ShortRange, Model::LongRange] {
        let spec = random_spec(&mut rng, model, 8, false);
        let sd = decompose(&build_hamiltonian(&spec).unwrap()).unwrap();
        for _ in 0..3 {
            let t = rng.gen_range(0.0..30.0);
            let expected = averaged_fidelity(sd.transferred_population(t)).unwrap();
            let est = monte_carlo_fidelity(&sd, t, 30_000, rng.gen()).unwrap();
            let dev = (est.mean - expected).abs();
            assert!(
                dev <= 3.0 * est.std_error.max(1e-12),
                "MC mean {} vs closed form {expected}, dev {dev}, 3σ {}",
                est.mean,
                3.0 * est.std_error
            );
        }
    }
}

#[test]
fn centro_symmetric_spectra_mirror() {
    let mut rng = rng(404);
    for model in [Model::ShortRange, Model::LongRange] {
        for _ in 0..8 {
            let n = rng.gen_range(3..=10);
            let spec = random_spec(&mut rng, model, n, true);
            let sd = decompose(&build_hamiltonian(&spec).unwrap()).unwrap();

            // |⟨v_i|1⟩| = |⟨v_i|N⟩| for every eigenvector.
            let first = localization_profile(&sd);
            let last = localization_profile_at(&sd, n);
            for (a, b) in first.weights().iter().zip(last.weights()) {
                assert!((a - b).abs() < 1e-10);
            }

            // Eigenvectors are symmetric or antisymmetric under site reversal.
            for i in 0..n {
                for j in 0..n {
                    let forward = sd.component(i, j + 1).abs();
                    let backward = sd.component(i, n - j).abs();
                    assert!(
                        (forward - backward).abs() < 1e-8,
                        "eigenvector {i} component {j} breaks reflection symmetry"
                    );
                }
            }
        }
    }
}

#[test]
fn evolution_stays_normalized() {
    let mut rng = rng(616);
    for model in [Model::ShortRange, Model::LongRange] {
        let spec = random_spec(&mut rng, model, 9, false);
        let sd = decompose(&build_hamiltonian(&spec).unwrap()).unwrap();
        for _ in 0..50 {
            let t = rng.gen_range(0.0..80.0);
            let site = rng.gen_range(1..=9);
            let state = sd.evolve(site, t);
            let norm: f64 = state.site_amplitudes.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10);

            let p = sd.transferred_population(t);
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
