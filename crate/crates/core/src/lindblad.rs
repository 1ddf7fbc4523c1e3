//! Integration of the collective decay master equation
//! `dρ/dt = (Γ/2)(2 S⁻ρS⁺ − S⁺S⁻ρ − ρS⁺S⁻)` (time in units of `1/Γ`)
//! and the photon-statistics observables derived from it.
//!
//! The equation only couples matrix entries within the same off-diagonal
//! band `m − m′`, so a diagonal initial state stays diagonal; `evolve`
//! exploits this with a rate-equation fast path while keeping the dense
//! matrix route for general states.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ladder::CollectiveOperators;
use crate::matrix::CMatrix;
use crate::state::DickeState;

/// Emission rates below this (units of `Γ`) are treated as "no photons":
/// the corresponding `g²` entries come out as NaN, never as 0 or 1.
pub const RATE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum LindbladError {
    DimensionMismatch { state_dim: usize, ops_dim: usize },
    InvalidGrid,
    /// The state stopped being finite during integration.
    NumericalFailure { time: f64 },
    /// Step-halving check found the fixed step too coarse.
    NotConverged { time: f64, deviation: f64 },
}

impl fmt::Display for LindbladError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LindbladError::DimensionMismatch { state_dim, ops_dim } => write!(
                f,
                "state dimension {state_dim} does not match operators dimension {ops_dim}"
            ),
            LindbladError::InvalidGrid => {
                write!(f, "time grid must start at 0 and be strictly increasing")
            }
            LindbladError::NumericalFailure { time } => {
                write!(f, "integration produced non-finite values at t = {time}")
            }
            LindbladError::NotConverged { time, deviation } => write!(
                f,
                "step-halving check failed at t = {time} (deviation {deviation:.3e})"
            ),
        }
    }
}

/// Fixed-step RK4 settings.
#[derive(Clone, Debug)]
pub struct IntegratorConfig {
    /// Upper bound on the RK4 step, units of `1/Γ`.
    pub max_step: f64,
    /// When set, every grid interval is also integrated at half the step
    /// and the two endpoints compared.
    pub convergence_check: bool,
    /// Allowed deviation for the step-halving check.
    pub convergence_tol: f64,
    /// Skip the diagonal fast path even for diagonal states.
    pub force_dense: bool,
}

impl IntegratorConfig {
    /// Default step `10⁻³/Ñ`: the largest rate on the ladder scales like
    /// `Ñ²/4`, so the per-step rate·step product stays well below 1.
    pub fn for_n_atoms(n_atoms: u32) -> Self {
        Self {
            max_step: 1e-3 / f64::from(n_atoms.max(1)),
            convergence_check: false,
            convergence_tol: 1e-8,
            force_dense: false,
        }
    }
}

fn check_dims(state: &DickeState, ops: &CollectiveOperators) -> Result<(), LindbladError> {
    if state.rho().dim() != ops.dim() {
        return Err(LindbladError::DimensionMismatch {
            state_dim: state.rho().dim(),
            ops_dim: ops.dim(),
        });
    }
    Ok(())
}

/// Right-hand side `(1/2)(2 S⁻ρS⁺ − S⁺S⁻ρ − ρS⁺S⁻)` in units where `Γ = 1`.
pub fn lindblad_rhs(state: &DickeState, ops: &CollectiveOperators) -> Result<CMatrix, LindbladError> {
    check_dims(state, ops)?;
    Ok(rhs_dense(state.rho(), ops))
}

fn rhs_dense(rho: &CMatrix, ops: &CollectiveOperators) -> CMatrix {
    let mut out = ops.s_minus().mul(rho).mul(ops.s_plus());
    let n_rho = ops.s_plus_s_minus().mul(rho);
    let rho_n = rho.mul(ops.s_plus_s_minus());
    out.add_scaled(&n_rho, -0.5);
    out.add_scaled(&rho_n, -0.5);
    out
}

/// Rate equations for the rung populations: `dp_k = r_{k+1} p_{k+1} − r_k p_k`.
fn rhs_diag(pops: &[f64], rates: &[f64], out: &mut [f64]) {
    let n = pops.len();
    for k in 0..n {
        out[k] = -rates[k] * pops[k];
        if k + 1 < n {
            out[k] += rates[k + 1] * pops[k + 1];
        }
    }
}

fn validate_grid(t_grid: &[f64]) -> Result<(), LindbladError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(LindbladError::InvalidGrid);
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LindbladError::InvalidGrid);
    }
    Ok(())
}

fn rk4_step_dense(rho: &CMatrix, ops: &CollectiveOperators, h: f64) -> CMatrix {
    let k1 = rhs_dense(rho, ops);
    let mut y = rho.clone();
    y.add_scaled(&k1, h / 2.0);
    let k2 = rhs_dense(&y, ops);
    let mut y = rho.clone();
    y.add_scaled(&k2, h / 2.0);
    let k3 = rhs_dense(&y, ops);
    let mut y = rho.clone();
    y.add_scaled(&k3, h);
    let k4 = rhs_dense(&y, ops);

    let mut out = rho.clone();
    out.add_scaled(&k1, h / 6.0);
    out.add_scaled(&k2, h / 3.0);
    out.add_scaled(&k3, h / 3.0);
    out.add_scaled(&k4, h / 6.0);
    out
}

fn integrate_interval_dense(
    rho: &CMatrix,
    ops: &CollectiveOperators,
    dt: f64,
    max_step: f64,
) -> CMatrix {
    let n_steps = libm::ceil(dt / max_step) as usize;
    let h = dt / n_steps as f64;
    let mut current = rho.clone();
    for _ in 0..n_steps {
        current = rk4_step_dense(&current, ops, h);
    }
    current
}

fn rk4_step_diag(pops: &mut Vec<f64>, rates: &[f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let n = pops.len();
    let [k1, k2, k3, k4, y] = scratch;
    rhs_diag(pops, rates, k1);
    for i in 0..n {
        y[i] = pops[i] + h / 2.0 * k1[i];
    }
    rhs_diag(y, rates, k2);
    for i in 0..n {
        y[i] = pops[i] + h / 2.0 * k2[i];
    }
    rhs_diag(y, rates, k3);
    for i in 0..n {
        y[i] = pops[i] + h * k3[i];
    }
    rhs_diag(y, rates, k4);
    for i in 0..n {
        pops[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn integrate_interval_diag(pops: &[f64], rates: &[f64], dt: f64, max_step: f64) -> Vec<f64> {
    let n_steps = libm::ceil(dt / max_step) as usize;
    let h = dt / n_steps as f64;
    let mut current = pops.to_vec();
    let mut scratch = [
        vec![0.0; pops.len()],
        vec![0.0; pops.len()],
        vec![0.0; pops.len()],
        vec![0.0; pops.len()],
        vec![0.0; pops.len()],
    ];
    for _ in 0..n_steps {
        rk4_step_diag(&mut current, rates, h, &mut scratch);
    }
    current
}

/// Propagate a (not necessarily normalized) matrix along a grid of times
/// measured from its own zero. Returns the matrix at every grid point,
/// including the initial one.
pub(crate) fn propagate(
    rho0: &CMatrix,
    ops: &CollectiveOperators,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<CMatrix>, LindbladError> {
    validate_grid(t_grid)?;
    let diagonal_path = !cfg.force_dense && rho0.is_diagonal(0.0);

    let mut out = Vec::with_capacity(t_grid.len());
    out.push(rho0.clone());

    if diagonal_path {
        let rates = ops.rates();
        let mut pops = rho0.diagonal_real();
        for w in t_grid.windows(2) {
            let dt = w[1] - w[0];
            let next = integrate_interval_diag(&pops, rates, dt, cfg.max_step);
            if cfg.convergence_check {
                let halved = integrate_interval_diag(&pops, rates, dt, cfg.max_step / 2.0);
                let dev = next
                    .iter()
                    .zip(halved.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dev > cfg.convergence_tol {
                    return Err(LindbladError::NotConverged {
                        time: w[1],
                        deviation: dev,
                    });
                }
            }
            if next.iter().any(|p| !p.is_finite()) {
                return Err(LindbladError::NumericalFailure { time: w[1] });
            }
            pops = next;
            out.push(CMatrix::from_diag(&pops));
        }
    } else {
        let mut rho = rho0.clone();
        for w in t_grid.windows(2) {
            let dt = w[1] - w[0];
            let next = integrate_interval_dense(&rho, ops, dt, cfg.max_step);
            if cfg.convergence_check {
                let halved = integrate_interval_dense(&rho, ops, dt, cfg.max_step / 2.0);
                let dev = next.max_abs_diff(&halved);
                if dev > cfg.convergence_tol {
                    return Err(LindbladError::NotConverged {
                        time: w[1],
                        deviation: dev,
                    });
                }
            }
            if next.has_non_finite() {
                return Err(LindbladError::NumericalFailure { time: w[1] });
            }
            rho = next.clone();
            out.push(next);
        }
    }
    Ok(out)
}

/// Integrate the master equation and return `ρ(t)` at each grid time.
/// The grid is in units of `1/Γ`, starts at 0 and is strictly increasing.
pub fn evolve(
    state: &DickeState,
    ops: &CollectiveOperators,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<DickeState>, LindbladError> {
    check_dims(state, ops)?;
    let matrices = propagate(state.rho(), ops, t_grid, cfg)?;
    Ok(matrices
        .into_iter()
        .zip(t_grid.iter())
        .map(|(rho, &t)| DickeState::from_parts(*state.basis(), rho, state.time() + t))
        .collect())
}

fn rate_of_matrix(rho: &CMatrix, ops: &CollectiveOperators) -> f64 {
    ops.rates()
        .iter()
        .enumerate()
        .map(|(k, r)| r * rho[(k, k)].re)
        .sum()
}

/// Photon emission rate `γ = Tr[S⁺S⁻ ρ]` in units of `Γ`.
pub fn emission_rate(state: &DickeState, ops: &CollectiveOperators) -> Result<f64, LindbladError> {
    check_dims(state, ops)?;
    Ok(rate_of_matrix(state.rho(), ops))
}

fn pair_moment(rho: &CMatrix, ops: &CollectiveOperators) -> f64 {
    (0..rho.dim()).map(|k| ops.pair_rate(k) * rho[(k, k)].re).sum()
}

/// Equal-time correlation `g²(t,t) = Tr[S⁺S⁺S⁻S⁻ρ] / Tr[S⁺S⁻ρ]²`.
/// Returns NaN when the emission rate is below [`RATE_FLOOR`].
pub fn g2_equal_time(state: &DickeState, ops: &CollectiveOperators) -> Result<f64, LindbladError> {
    check_dims(state, ops)?;
    let rate = rate_of_matrix(state.rho(), ops);
    if rate < RATE_FLOOR {
        return Ok(f64::NAN);
    }
    Ok(pair_moment(state.rho(), ops) / (rate * rate))
}

/// Two-time correlation `g²(t₁, t₁+τ)` over a grid of delays `τ ≥ 0`
/// (starting at 0, strictly increasing), via the quantum regression
/// theorem: the conditional matrix `S⁻ρ(t₁)S⁺` is propagated with the same
/// Lindblad generator and sandwiched with `S⁺S⁻`, normalized by
/// `γ(t₁)·γ(t₁+τ)` where `γ(t₁+τ)` comes from the independently evolved ρ.
///
/// Entries where `γ(t₁+τ)` falls below [`RATE_FLOOR`] are NaN.
pub fn g2_two_time(
    state_at_t1: &DickeState,
    ops: &CollectiveOperators,
    tau_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, LindbladError> {
    check_dims(state_at_t1, ops)?;
    let rate_t1 = rate_of_matrix(state_at_t1.rho(), ops);
    if rate_t1 < RATE_FLOOR {
        return Ok(vec![f64::NAN; tau_grid.len()]);
    }

    // Unnormalized conditional matrix after one detection at t₁.
    let conditional = ops.s_minus().mul(state_at_t1.rho()).mul(ops.s_plus());

    let cond_evolution = propagate(&conditional, ops, tau_grid, cfg)?;
    let rho_evolution = propagate(state_at_t1.rho(), ops, tau_grid, cfg)?;

    Ok(cond_evolution
        .iter()
        .zip(rho_evolution.iter())
        .map(|(chi, rho)| {
            let big_g2 = rate_of_matrix(chi, ops);
            let rate_t2 = rate_of_matrix(rho, ops);
            if rate_t2 < RATE_FLOOR {
                f64::NAN
            } else {
                big_g2 / (rate_t1 * rate_t2)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ladder::{build_operators, LadderBasis};
    use approx::assert_abs_diff_eq;

    fn setup(n: u32) -> (LadderBasis, CollectiveOperators) {
        let basis = LadderBasis::new(n).unwrap();
        let ops = build_operators(&basis);
        (basis, ops)
    }

    #[test]
    fn ground_state_is_dark() {
        let (basis, ops) = setup(4);
        let ground = DickeState::single_rung(&basis, 0).unwrap();
        let rhs = lindblad_rhs(&ground, &ops).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
    }

    #[test]
    fn single_atom_decay_rate() {
        let (basis, ops) = setup(1);
        let excited = DickeState::fully_inverted(&basis);
        let rhs = lindblad_rhs(&excited, &ops).unwrap();
        assert_abs_diff_eq!(rhs[(1, 1)].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs[(0, 0)].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn two_atom_inverted_decay_rate() {
        // Rate out of the top rung is (S+m)(S−m+1) = 2.
        let (basis, ops) = setup(2);
        let inverted = DickeState::fully_inverted(&basis);
        let rhs = lindblad_rhs(&inverted, &ops).unwrap();
        assert_abs_diff_eq!(rhs[(2, 2)].re, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let (basis, ops) = setup(5);
        let state = DickeState::from_populations(&basis, &[0.1, 0.2, 0.3, 0.2, 0.1, 0.1]).unwrap();
        let rhs = lindblad_rhs(&state, &ops).unwrap();
        assert!(rhs.trace().norm() < 1e-14);
        assert!(rhs.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (basis, _) = setup(3);
        let (_, other_ops) = setup(4);
        let state = DickeState::fully_inverted(&basis);
        assert!(matches!(
            lindblad_rhs(&state, &other_ops),
            Err(LindbladError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            emission_rate(&state, &other_ops),
            Err(LindbladError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_atom_exponential_decay() {
        let (basis, ops) = setup(1);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=20).map(|i| 0.25 * i as f64).collect();
        let cfg = IntegratorConfig::for_n_atoms(1);
        let states = evolve(&state, &ops, &grid, &cfg).unwrap();
        for s in &states {
            let expected = libm::exp(-s.time());
            assert_abs_diff_eq!(s.populations()[1], expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn two_atom_cascade_matches_analytic_solution() {
        // p_top(t) = e^{-2t}, p_mid(t) = 2t e^{-2t}; verified against the
        // dense matrix-exponential oracle in tests/oracle_equivalence.rs.
        let (basis, ops) = setup(2);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=16).map(|i| 0.125 * i as f64).collect();
        let cfg = IntegratorConfig::for_n_atoms(2);
        let states = evolve(&state, &ops, &grid, &cfg).unwrap();
        for s in &states {
            let t = s.time();
            let pops = s.populations();
            assert_abs_diff_eq!(pops[2], libm::exp(-2.0 * t), epsilon = 1e-10);
            assert_abs_diff_eq!(pops[1], 2.0 * t * libm::exp(-2.0 * t), epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_preserved_for_six_atoms() {
        let (basis, ops) = setup(6);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
        let cfg = IntegratorConfig::for_n_atoms(6);
        for s in evolve(&state, &ops, &grid, &cfg).unwrap() {
            assert!((s.rho().trace().re - 1.0).abs() < 1e-10);
            s.validate(1e-8, 1e-8).unwrap();
        }
    }

    #[test]
    fn grid_must_start_at_zero_and_increase() {
        let (basis, ops) = setup(2);
        let state = DickeState::fully_inverted(&basis);
        let cfg = IntegratorConfig::for_n_atoms(2);
        assert!(matches!(
            evolve(&state, &ops, &[0.5, 1.0], &cfg),
            Err(LindbladError::InvalidGrid)
        ));
        assert!(matches!(
            evolve(&state, &ops, &[0.0, 1.0, 1.0], &cfg),
            Err(LindbladError::InvalidGrid)
        ));
    }

    #[test]
    fn convergence_check_passes_at_default_step() {
        let (basis, ops) = setup(4);
        let state = DickeState::fully_inverted(&basis);
        let mut cfg = IntegratorConfig::for_n_atoms(4);
        cfg.convergence_check = true;
        cfg.convergence_tol = 1e-10;
        evolve(&state, &ops, &[0.0, 0.5, 1.0], &cfg).unwrap();
    }

    #[test]
    fn convergence_check_flags_coarse_step() {
        let (basis, ops) = setup(8);
        let state = DickeState::fully_inverted(&basis);
        let cfg = IntegratorConfig {
            max_step: 0.25,
            convergence_check: true,
            convergence_tol: 1e-14,
            force_dense: false,
        };
        assert!(matches!(
            evolve(&state, &ops, &[0.0, 1.0], &cfg),
            Err(LindbladError::NotConverged { .. })
        ));
    }

    #[test]
    fn emission_rate_examples() {
        let (basis1, ops1) = setup(1);
        let inverted1 = DickeState::fully_inverted(&basis1);
        assert_eq!(emission_rate(&inverted1, &ops1).unwrap(), 1.0);

        let (basis6, ops6) = setup(6);
        let inverted6 = DickeState::fully_inverted(&basis6);
        assert_eq!(emission_rate(&inverted6, &ops6).unwrap(), 6.0);
    }

    #[test]
    fn two_atom_rate_follows_analytic_curve() {
        let (basis, ops) = setup(2);
        let state = DickeState::fully_inverted(&basis);
        let grid: Vec<f64> = (0..=10).map(|i| 0.2 * i as f64).collect();
        let cfg = IntegratorConfig::for_n_atoms(2);
        for s in evolve(&state, &ops, &grid, &cfg).unwrap() {
            let t = s.time();
            let expected = 2.0 * libm::exp(-2.0 * t) + 4.0 * t * libm::exp(-2.0 * t);
            assert_abs_diff_eq!(emission_rate(&s, &ops).unwrap(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn g2_equal_time_closed_form() {
        for n in [2u32, 3, 6, 12, 32] {
            let (basis, ops) = setup(n);
            let state = DickeState::fully_inverted(&basis);
            let expected = 2.0 - 2.0 / f64::from(n);
            assert_abs_diff_eq!(
                g2_equal_time(&state, &ops).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn single_emitter_antibunches() {
        let (basis, ops) = setup(1);
        let state = DickeState::fully_inverted(&basis);
        assert_eq!(g2_equal_time(&state, &ops).unwrap(), 0.0);
    }

    #[test]
    fn g2_undefined_in_ground_state() {
        let (basis, ops) = setup(6);
        let ground = DickeState::single_rung(&basis, 0).unwrap();
        assert!(g2_equal_time(&ground, &ops).unwrap().is_nan());
        let row = g2_two_time(&ground, &ops, &[0.0, 1.0], &IntegratorConfig::for_n_atoms(6))
            .unwrap();
        assert!(row.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn two_time_matches_equal_time_at_zero_delay() {
        let (basis, ops) = setup(6);
        let state = DickeState::fully_inverted(&basis);
        let cfg = IntegratorConfig::for_n_atoms(6);
        let row = g2_two_time(&state, &ops, &[0.0, 0.1, 0.2], &cfg).unwrap();
        let eq = g2_equal_time(&state, &ops).unwrap();
        assert!((row[0] - eq).abs() / eq < 1e-10);
    }

    #[test]
    fn two_atom_regression_closed_form() {
        // From |1,1>, one detection leaves |1,0>, so
        // G²(0,τ) = 4e^{−2τ} and g²(0,τ) = 1/(1+2τ).
        // Cross-checked against the matrix-exponential oracle in
        // tests/oracle_equivalence.rs.
        let (basis, ops) = setup(2);
        let state = DickeState::fully_inverted(&basis);
        let cfg = IntegratorConfig::for_n_atoms(2);
        let taus: Vec<f64> = (0..=8).map(|i| 0.25 * i as f64).collect();
        let row = g2_two_time(&state, &ops, &taus, &cfg).unwrap();
        for (tau, g2) in taus.iter().zip(row.iter()) {
            assert_abs_diff_eq!(*g2, 1.0 / (1.0 + 2.0 * tau), epsilon = 1e-9);
        }
    }
}
