//! Cross-checks of the RK4 master-equation integrator against an
//! independently assembled Liouvillian propagated with a dense matrix
//! exponential (see `superburst-testkit`). The oracle shares no code with
//! the integrator: it builds the superoperator from the closed-form ladder
//! rates and exponentiates it by scaling-and-squaring.

use num_complex::Complex64;
use superburst_core::lindblad::{evolve, g2_two_time, IntegratorConfig};
use superburst_core::matrix::CMatrix;
use superburst_core::{build_operators, DickeState, LadderBasis};
use superburst_testkit::{expm_apply, liouvillian};

fn flatten(rho: &CMatrix) -> Vec<(f64, f64)> {
    let d = rho.dim();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push((rho[(i, j)].re, rho[(i, j)].im));
        }
    }
    out
}

fn max_deviation(rho: &CMatrix, oracle: &[(f64, f64)]) -> f64 {
    let d = rho.dim();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (re, im) = oracle[i * d + j];
            dev = dev.max((rho[(i, j)].re - re).abs().max((rho[(i, j)].im - im).abs()));
        }
    }
    dev
}

fn dense_cfg(n: u32) -> IntegratorConfig {
    let mut cfg = IntegratorConfig::for_n_atoms(n);
    cfg.force_dense = true;
    cfg
}

#[test]
fn dense_evolution_matches_matrix_exponential_from_inversion() {
    for n in [2u32, 3, 4] {
        let basis = LadderBasis::new(n).unwrap();
        let ops = build_operators(&basis);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
        let states = evolve(&state, &ops, &grid, &dense_cfg(n)).unwrap();

        let l = liouvillian(n as usize);
        let rho0 = flatten(state.rho());
        for s in &states {
            let oracle = expm_apply(&l, s.time(), &rho0);
            let dev = max_deviation(s.rho(), &oracle);
            assert!(dev < 1e-8, "n = {n}, t = {}: deviation {dev:.3e}", s.time());
        }
    }
}

#[test]
fn diagonal_fast_path_matches_matrix_exponential() {
    for n in [2u32, 4, 6] {
        let basis = LadderBasis::new(n).unwrap();
        let ops = build_operators(&basis);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
        // Default config: the diagonal rate-equation path is taken.
        let cfg = IntegratorConfig::for_n_atoms(n);
        let states = evolve(&state, &ops, &grid, &cfg).unwrap();

        let l = liouvillian(n as usize);
        let rho0 = flatten(state.rho());
        for s in &states {
            let oracle = expm_apply(&l, s.time(), &rho0);
            let dev = max_deviation(s.rho(), &oracle);
            assert!(dev < 1e-8, "n = {n}, t = {}: deviation {dev:.3e}", s.time());
        }
    }
}

#[test]
fn dense_evolution_matches_oracle_with_coherences() {
    // Start from a state carrying off-diagonal elements so the full
    // superoperator, not just the population band, is exercised.
    let n = 3u32;
    let basis = LadderBasis::new(n).unwrap();
    let ops = build_operators(&basis);
    let d = basis.dim();
    let mut rho = CMatrix::from_diag(&[0.1, 0.2, 0.3, 0.4]);
    rho[(1, 3)] = Complex64::new(0.05, 0.02);
    rho[(3, 1)] = Complex64::new(0.05, -0.02);
    rho[(0, 2)] = Complex64::new(-0.03, 0.04);
    rho[(2, 0)] = Complex64::new(-0.03, -0.04);
    let state = DickeState::from_matrix(&basis, rho, 0.0, 1e-9).unwrap();

    let grid: Vec<f64> = (0..=6).map(|i| 0.3 * i as f64).collect();
    let states = evolve(&state, &ops, &grid, &dense_cfg(n)).unwrap();

    let l = liouvillian(n as usize);
    let rho0 = flatten(state.rho());
    for s in &states {
        let oracle = expm_apply(&l, s.time(), &rho0);
        let dev = max_deviation(s.rho(), &oracle);
        assert!(dev < 1e-8, "t = {}: deviation {dev:.3e}", s.time());
        assert_eq!(s.rho().dim(), d);
    }
}

#[test]
fn two_time_correlation_matches_oracle_regression() {
    // g²(t₁, t₁+τ) rebuilt from scratch: evolve ρ to t₁ with the matrix
    // exponential, apply the collapse S⁻·S⁺ in closed form (diagonal:
    // χ_kk = r_{k+1} ρ_{k+1,k+1}), evolve χ with the same exponential, and
    // take traces against the rate weights.
    for n in [2u32, 4, 6] {
        let basis = LadderBasis::new(n).unwrap();
        let ops = build_operators(&basis);
        let d = basis.dim();
        let rate = |k: usize| (k as f64) * ((n as usize - k + 1) as f64);

        let t1 = 0.3;
        let l = liouvillian(n as usize);

        // Oracle populations at t₁ from full inversion.
        let mut rho0 = vec![(0.0, 0.0); d * d];
        rho0[(d - 1) * d + (d - 1)] = (1.0, 0.0);
        let rho_t1 = expm_apply(&l, t1, &rho0);
        let pops_t1: Vec<f64> = (0..d).map(|k| rho_t1[k * d + k].0).collect();
        let rate_t1: f64 = (0..d).map(|k| rate(k) * pops_t1[k]).sum();

        // Collapsed (unnormalized) matrix after one detection.
        let mut chi0 = vec![(0.0, 0.0); d * d];
        for k in 0..d - 1 {
            chi0[k * d + k] = (rate(k + 1) * pops_t1[k + 1], 0.0);
        }

        let taus = [0.0, 0.1, 0.25, 0.5, 1.0];
        let state_t1 =
            DickeState::from_populations(&basis, &pops_t1).expect("oracle populations valid");
        let cfg = IntegratorConfig::for_n_atoms(n);
        let g2_rows = g2_two_time(&state_t1, &ops, &taus, &cfg).unwrap();

        for (&tau, &g2) in taus.iter().zip(g2_rows.iter()) {
            let chi_tau = expm_apply(&l, tau, &chi0);
            let rho_tau = expm_apply(&l, tau, &rho_t1);
            let numerator: f64 = (0..d).map(|k| rate(k) * chi_tau[k * d + k].0).sum();
            let rate_t2: f64 = (0..d).map(|k| rate(k) * rho_tau[k * d + k].0).sum();
            let expected = numerator / (rate_t1 * rate_t2);
            assert!(
                (g2 - expected).abs() < 1e-8,
                "n = {n}, tau = {tau}: g2 {g2} vs oracle {expected}"
            );
        }
    }
}

#[test]
fn emission_rate_matches_oracle_trace() {
    let n = 6u32;
    let basis = LadderBasis::new(n).unwrap();
    let ops = build_operators(&basis);
    let state = DickeState::fully_inverted(&basis);
    let d = basis.dim();
    let rate = |k: usize| (k as f64) * ((n as usize - k + 1) as f64);

    let grid: Vec<f64> = (0..=12).map(|i| 0.2 * i as f64).collect();
    let cfg = IntegratorConfig::for_n_atoms(n);
    let states = evolve(&state, &ops, &grid, &cfg).unwrap();

    let l = liouvillian(n as usize);
    let rho0 = flatten(state.rho());
    for s in &states {
        let oracle = expm_apply(&l, s.time(), &rho0);
        let expected: f64 = (0..d).map(|k| rate(k) * oracle[k * d + k].0).sum();
        let got = superburst_core::emission_rate(s, &ops).unwrap();
        assert!(
            (got - expected).abs() < 1e-8,
            "t = {}: rate {got} vs oracle {expected}",
            s.time()
        );
    }
}
