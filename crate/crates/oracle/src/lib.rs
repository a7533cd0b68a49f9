//! Brute-force reference implementations used to validate the main toolkit.
//!
//! Everything here deliberately avoids the numerical kernels of `qst-core`:
//! Hamiltonians are assembled by applying Pauli operators to every
//! computational basis state of the full 2^N space, propagation goes through
//! a scaling-and-squaring matrix exponential or fixed-step integration
//! instead of the spectral form, and fidelity averages are sampled by Monte
//! Carlo. Agreement with the fast paths is therefore evidence, not
//! tautology.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qst_core::{
    state_fidelity, ChainSpec, Error, Model, OneExcitationHamiltonian, Result,
    SpectralDecomposition,
};

/// Largest chain the full-space oracle will build (4096×4096 dense).
pub const MAX_FULL_SITES: usize = 12;

/// Dense 2^N × 2^N Hamiltonian on the computational basis. Site j (1-based)
/// maps to bit j-1 of the basis index; a set bit is an up spin.
#[derive(Debug, Clone)]
pub struct FullHamiltonian {
    n: usize,
    matrix: DMatrix<f64>,
}

impl FullHamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Sign of σ^z on one bit: up spins carry +1, down spins -1.
fn z_sign(state: usize, bit: usize) -> f64 {
    if state & (1 << bit) != 0 {
        1.0
    } else {
        -1.0
    }
}

/// Add w_x σ_a^x σ_b^x + w_y σ_a^y σ_b^y + w_z σ_a^z σ_b^z to `h`, by acting
/// on every basis ket. σ^x flips a bit; σ^y flips with phase ±i (the two
/// phases multiply to a real factor for the pair term); σ^z is diagonal.
fn add_pair_term(h: &mut DMatrix<f64>, a: usize, b: usize, wx: f64, wy: f64, wz: f64) {
    let dim = h.nrows();
    let mask = (1 << a) | (1 << b);
    for ket in 0..dim {
        h[(ket, ket)] += wz * z_sign(ket, a) * z_sign(ket, b);

        let bra = ket ^ mask;
        // σ^y_a σ^y_b phases: (±i)(±i) = -1 for equal bits, +1 for opposite.
        let yy = if z_sign(ket, a) == z_sign(ket, b) { -1.0 } else { 1.0 };
        h[(bra, ket)] += wx + wy * yy;
    }
}

/// Build the full-space Hamiltonian of a chain spec by explicit operator
/// action, capped at [`MAX_FULL_SITES`] spins.
pub fn full_hamiltonian(spec: &ChainSpec) -> Result<FullHamiltonian> {
    let n = spec.n();
    if n > MAX_FULL_SITES {
        return Err(Error::Numerical(format!(
            "full-space oracle capped at {MAX_FULL_SITES} sites, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);

    match spec.model() {
        Model::ShortRange => {
            let couplings = spec.couplings().expect("validated");
            for (bond, &j) in couplings.iter().enumerate() {
                add_pair_term(&mut h, bond, bond + 1, -j, -j, -j);
            }
        }
        Model::LongRange => {
            let x = spec.positions().expect("validated");
            let [cx, cy, cz] = spec.anisotropy();
            let jg = spec.global_j();
            for a in 0..n {
                for b in (a + 1)..n {
                    let d = x[b] - x[a];
                    let w = jg / (d * d * d);
                    add_pair_term(&mut h, a, b, w * cx, w * cy, w * cz);
                }
            }
        }
    }
    Ok(FullHamiltonian { n, matrix: h })
}

/// Diagonal of the total magnetization Σ_i σ_i^z on the computational basis.
pub fn total_sz_diagonal(n: usize) -> Vec<f64> {
    (0..1usize << n)
        .map(|state| 2.0 * (state.count_ones() as f64) - n as f64)
        .collect()
}

/// Max-norm of [H, Σ σ^z]; zero iff H is block diagonal in excitation number.
pub fn magnetization_commutator_max(fh: &FullHamiltonian) -> f64 {
    let m = total_sz_diagonal(fh.n);
    let dim = fh.matrix.nrows();
    let mut worst = 0.0f64;
    for row in 0..dim {
        for col in 0..dim {
            let c = fh.matrix[(row, col)] * (m[col] - m[row]);
            worst = worst.max(c.abs());
        }
    }
    worst
}

/// Extract the one-excitation block on the basis |1⟩ … |N⟩.
pub fn one_excitation_block(fh: &FullHamiltonian) -> Result<OneExcitationHamiltonian> {
    let n = fh.n;
    let mut block = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            block[(j, k)] = fh.matrix[(1 << j, 1 << k)];
        }
    }
    OneExcitationHamiltonian::from_matrix(block)
}

fn initial_vector(n: usize, initial_site: usize) -> DMatrix<Complex64> {
    assert!(initial_site >= 1 && initial_site <= n, "initial site out of range");
    let mut v = DMatrix::zeros(n, 1);
    v[(initial_site - 1, 0)] = Complex64::new(1.0, 0.0);
    v
}

/// Matrix exponential by Padé-13 scaling and squaring.
fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    // Order-13 threshold from Higham's algorithm.
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];

    let n = a.nrows();
    let norm1 = (0..n)
        .map(|col| (0..n).map(|row| a[(row, col)].norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm1 > THETA_13 {
        (norm1 / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.map(|x| x / 2.0f64.powi(squarings as i32));

    let ident = DMatrix::<Complex64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * (a6.scale(B[13]) + a4.scale(B[11]) + a2.scale(B[9]))
        + a6.scale(B[7])
        + a4.scale(B[5])
        + a2.scale(B[3])
        + ident.scale(B[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (a6.scale(B[12]) + a4.scale(B[10]) + a2.scale(B[8]))
        + a6.scale(B[6])
        + a4.scale(B[4])
        + a2.scale(B[2])
        + ident.scale(B[0]);

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is nonsingular for scaled inputs");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Evolve a site excitation with the dense propagator U(t) = exp(-iHt),
/// computed by scaling and squaring.
pub fn propagate_dense(
    h: &OneExcitationHamiltonian,
    initial_site: usize,
    t: f64,
) -> Vec<Complex64> {
    let n = h.n();
    let a = h.matrix().map(|x| Complex64::new(0.0, -x * t));
    let u = expm(&a);
    let state = u * initial_vector(n, initial_site);
    state.column(0).iter().copied().collect()
}

/// Evolve a site excitation by fixed-step 4th-order Runge-Kutta integration
/// of i dχ/dt = Hχ. The step must satisfy dt·max|h| <= 0.5.
pub fn propagate_rk4(
    h: &OneExcitationHamiltonian,
    initial_site: usize,
    t: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Invalid(format!("step size must be positive, got {dt}")));
    }
    let scale = h.matrix().amax();
    if dt * scale > 0.5 {
        return Err(Error::Invalid(format!(
            "step size {dt} too large for matrix scale {scale:.3e}; need dt*scale <= 0.5"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Invalid(format!("time must be finite and >= 0, got {t}")));
    }

    let n = h.n();
    let hm = h.matrix().map(|x| Complex64::new(x, 0.0));
    let rhs = |state: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        (&hm * state).map(|x| x * Complex64::new(0.0, -1.0))
    };

    let steps = (t / dt).ceil() as usize;
    let mut state = initial_vector(n, initial_site);
    let mut remaining = t;
    for _ in 0..steps {
        let step = remaining.min(dt);
        let k1 = rhs(&state);
        let k2 = rhs(&(&state + k1.scale(step / 2.0)));
        let k3 = rhs(&(&state + k2.scale(step / 2.0)));
        let k4 = rhs(&(&state + k3.scale(step)));
        state += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(step / 6.0);
        remaining -= step;
    }
    Ok(state.column(0).iter().copied().collect())
}

/// Sample mean and standard error of a Monte Carlo fidelity average.
#[derive(Debug, Clone, Copy)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Average the per-state transfer fidelity over input states drawn uniformly
/// from the Bloch sphere (uniform in cos θ and φ).
pub fn monte_carlo_fidelity(
    sd: &SpectralDecomposition,
    t: f64,
    samples: usize,
    rng_seed: u64,
) -> Result<FidelityEstimate> {
    if samples < 1000 {
        return Err(Error::Invalid(format!(
            "need at least 1000 samples for a stable estimate, got {samples}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..samples {
        let cos_theta: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let phi: f64 = std::f64::consts::TAU * rng.gen::<f64>();
        let alpha = Complex64::new(((1.0 + cos_theta) / 2.0).sqrt(), 0.0);
        let beta = Complex64::from_polar(((1.0 - cos_theta) / 2.0).sqrt(), phi);
        let f = state_fidelity(sd, alpha, beta, t)?;
        // Welford running statistics.
        let delta = f - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (f - mean);
    }
    let variance = m2 / (samples - 1) as f64;
    Ok(FidelityEstimate {
        mean,
        std_error: (variance / samples as f64).sqrt(),
        samples,
    })
}

/// Maximize `f` over a uniform 1-D grid; returns (argmax, max).
pub fn grid_scan_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    assert!(points >= 2 && hi > lo);
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..points {
        let x = lo + (hi - lo) * k as f64 / (points - 1) as f64;
        let y = f(x);
        if y > best.1 {
            best = (x, y);
        }
    }
    best
}

/// Maximize `f` over uniform random samples of a hypercube; returns
/// (argmax, max). Seed-deterministic.
pub fn random_search(
    f: impl Fn(&[f64]) -> f64,
    dim: usize,
    lo: f64,
    hi: f64,
    samples: usize,
    rng_seed: u64,
) -> (Vec<f64>, f64) {
    assert!(samples >= 1 && hi > lo && dim >= 1);
    let mut rng = ChaCha12Rng::seed_from_u64(rng_seed);
    let mut best_x = vec![lo; dim];
    let mut best_y = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| lo + rng.gen::<f64>() * (hi - lo)).collect();
        let y = f(&x);
        if y > best_y {
            best_y = y;
            best_x = x;
        }
    }
    (best_x, best_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_site_heisenberg_full_matrix() {
        let spec = ChainSpec::short_range(vec![1.0]).unwrap();
        let fh = full_hamiltonian(&spec).unwrap();
        // Basis order |00⟩, |10⟩, |01⟩, |11⟩ (site 1 is bit 0).
        let expected = [
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, -2.0, 0.0],
            [0.0, -2.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_abs_diff_eq!(fh.matrix()[(r, c)], expected[r][c], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_is_an_eigenstate() {
        let spec = ChainSpec::long_range(vec![0.8, 1.1], 1.3).unwrap();
        let fh = full_hamiltonian(&spec).unwrap();
        for row in 1..fh.matrix().nrows() {
            assert_eq!(fh.matrix()[(row, 0)], 0.0);
        }
        assert_eq!(total_sz_diagonal(3)[0], -3.0);
    }

    #[test]
    fn magnetization_commutes() {
        let sr = ChainSpec::short_range(vec![0.7, 1.9, 0.4]).unwrap();
        let lr = ChainSpec::long_range(vec![0.5, 1.6, 1.1], 0.9).unwrap();
        for spec in [sr, lr] {
            let fh = full_hamiltonian(&spec).unwrap();
            assert!(magnetization_commutator_max(&fh) < 1e-10);
        }
    }

    #[test]
    fn capacity_guard() {
        let spec = qst_core::homogeneous_baseline(Model::ShortRange, 13, 1.0).unwrap();
        assert!(full_hamiltonian(&spec).is_err());
    }

    #[test]
    fn dense_propagation_matches_the_analytic_two_site_solution() {
        let spec = ChainSpec::short_range(vec![1.0]).unwrap();
        let h = qst_core::build_hamiltonian(&spec).unwrap();
        for t in [0.0, 0.17, std::f64::consts::FRAC_PI_4, 2.9] {
            let state = propagate_dense(&h, 1, t);
            assert_abs_diff_eq!(state[1].norm_sqr(), (2.0 * t).sin().powi(2), epsilon = 1e-12);
            let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rk4_agrees_with_expm() {
        let spec = ChainSpec::long_range(vec![0.9, 1.2, 1.0], 1.0).unwrap();
        let h = qst_core::build_hamiltonian(&spec).unwrap();
        let a = propagate_dense(&h, 1, 3.0);
        let b = propagate_rk4(&h, 1, 3.0, 1e-3).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9);
        }
        assert!(propagate_rk4(&h, 1, 3.0, 10.0).is_err());
        assert!(propagate_rk4(&h, 1, 3.0, 0.0).is_err());
    }

    #[test]
    fn perfect_transfer_gives_unit_fidelity_for_every_input() {
        let spec = ChainSpec::short_range(vec![1.0]).unwrap();
        let sd = qst_core::decompose(&qst_core::build_hamiltonian(&spec).unwrap()).unwrap();
        let est =
            monte_carlo_fidelity(&sd, std::f64::consts::FRAC_PI_4, 2000, 99).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-12);

        // At t = 0 the fidelity reduces to |α|², whose Bloch average is 1/2.
        let est = monte_carlo_fidelity(&sd, 0.0, 20_000, 7).unwrap();
        assert!((est.mean - 0.5).abs() < 3.0 * est.std_error);

        assert!(monte_carlo_fidelity(&sd, 0.0, 10, 7).is_err());
    }

    #[test]
    fn search_baselines() {
        let (x, y) = grid_scan_1d(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 10_001);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-4);
        assert!(y <= 0.0);

        let (x, y) = random_search(|v| -(v[0] - 0.5).powi(2) - (v[1] - 0.25).powi(2), 2, 0.0, 1.0, 50_000, 4);
        assert!((x[0] - 0.5).abs() < 0.02);
        assert!((x[1] - 0.25).abs() < 0.02);
        assert!(y <= 0.0);
    }
}
