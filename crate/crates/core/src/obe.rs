//! Single-atom optical Bloch equations under a shaped resonant pulse.
//!
//! This is the uncorrelated-emitter reference: for a cloud too dilute to
//! cooperate, the detected rate is just `N·Γ·ρ_ee(t)` up to a detection
//! scale. Times here are in nanoseconds; Rabi frequency and detuning are
//! in units of `Γ`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub enum ObeError {
    InvalidPulse,
    InvalidGrid,
    NumericalFailure { time_ns: f64 },
}

impl fmt::Display for ObeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObeError::InvalidPulse => write!(f, "pulse profile is invalid"),
            ObeError::InvalidGrid => write!(f, "time grid must be strictly increasing"),
            ObeError::NumericalFailure { time_ns } => {
                write!(f, "integration produced non-finite values at t = {time_ns} ns")
            }
        }
    }
}

/// Trapezoidal pulse: linear rise over `edge_ns` before `t_on_ns`, flat top
/// to `t_off_ns`, linear fall over `edge_ns` after it.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseProfile {
    /// Peak Rabi frequency in units of `Γ`.
    pub omega_peak: f64,
    pub t_on_ns: f64,
    pub t_off_ns: f64,
    pub edge_ns: f64,
    /// Detuning in units of `Γ` (0 = resonant drive).
    pub detuning: f64,
}

impl PulseProfile {
    /// The paper's excitation pulse: `Ω = 6.5Γ`, 12 ns flat top, 1 ns edges,
    /// on resonance.
    pub fn paper_pulse() -> Self {
        Self {
            omega_peak: 6.5,
            t_on_ns: 0.0,
            t_off_ns: 12.0,
            edge_ns: 1.0,
            detuning: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ObeError> {
        if self.omega_peak < 0.0 || self.edge_ns < 0.0 || self.t_off_ns < self.t_on_ns {
            return Err(ObeError::InvalidPulse);
        }
        Ok(())
    }

    /// `Ω(t)` in units of `Γ`: continuous and piecewise linear, zero
    /// outside `[t_on − edge, t_off + edge]`.
    pub fn omega_at(&self, t_ns: f64) -> f64 {
        if self.edge_ns == 0.0 {
            if t_ns >= self.t_on_ns && t_ns <= self.t_off_ns {
                return self.omega_peak;
            }
            return 0.0;
        }
        if t_ns <= self.t_on_ns - self.edge_ns || t_ns >= self.t_off_ns + self.edge_ns {
            0.0
        } else if t_ns < self.t_on_ns {
            self.omega_peak * (t_ns - (self.t_on_ns - self.edge_ns)) / self.edge_ns
        } else if t_ns <= self.t_off_ns {
            self.omega_peak
        } else {
            self.omega_peak * (self.t_off_ns + self.edge_ns - t_ns) / self.edge_ns
        }
    }
}

/// Measured pulse profile as tabulated `(time_ns, Ω/Γ)` samples with linear
/// interpolation; zero outside the tabulated range.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedPulse {
    pub samples: Vec<(f64, f64)>,
    pub detuning: f64,
}

impl TabulatedPulse {
    pub fn validate(&self) -> Result<(), ObeError> {
        if self.samples.len() < 2
            || self.samples.windows(2).any(|w| w[1].0 <= w[0].0)
            || self.samples.iter().any(|&(_, w)| w < 0.0)
        {
            return Err(ObeError::InvalidPulse);
        }
        Ok(())
    }

    pub fn omega_at(&self, t_ns: f64) -> f64 {
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        if t_ns <= first.0 || t_ns >= last.0 {
            if t_ns == first.0 {
                return first.1;
            }
            if t_ns == last.0 {
                return last.1;
            }
            return 0.0;
        }
        let idx = self.samples.partition_point(|&(t, _)| t <= t_ns);
        let (t0, w0) = self.samples[idx - 1];
        let (t1, w1) = self.samples[idx];
        w0 + (w1 - w0) * (t_ns - t0) / (t1 - t0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Pulse {
    Trapezoid(PulseProfile),
    Tabulated(TabulatedPulse),
}

impl Pulse {
    pub fn validate(&self) -> Result<(), ObeError> {
        match self {
            Pulse::Trapezoid(p) => p.validate(),
            Pulse::Tabulated(p) => p.validate(),
        }
    }

    pub fn omega_at(&self, t_ns: f64) -> f64 {
        match self {
            Pulse::Trapezoid(p) => p.omega_at(t_ns),
            Pulse::Tabulated(p) => p.omega_at(t_ns),
        }
    }

    pub fn detuning(&self) -> f64 {
        match self {
            Pulse::Trapezoid(p) => p.detuning,
            Pulse::Tabulated(p) => p.detuning,
        }
    }

    pub fn peak_omega(&self) -> f64 {
        match self {
            Pulse::Trapezoid(p) => p.omega_peak,
            Pulse::Tabulated(p) => p.samples.iter().map(|&(_, w)| w).fold(0.0, f64::max),
        }
    }
}

/// Two-level state: excited population and ground-excited coherence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub time_ns: f64,
    pub rho_ee: f64,
    pub coherence: Complex64,
}

impl BlochState {
    /// Purity bound `|ρ_ge|² ≤ ρ_ee(1 − ρ_ee) + tol` plus population range.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.rho_ee >= -tol
            && self.rho_ee <= 1.0 + tol
            && self.coherence.norm_sqr() <= self.rho_ee * (1.0 - self.rho_ee) + tol
    }
}

// State vector y = [rho_ee, Re(rho_ge), Im(rho_ge)], time in units of 1/Γ.
fn obe_rhs(y: [f64; 3], omega: f64, detuning: f64) -> [f64; 3] {
    let [ree, re, im] = y;
    [
        -ree - omega * im,
        -0.5 * re - detuning * im,
        -0.5 * im + detuning * re + omega * (ree - 0.5),
    ]
}

fn rk4_step(y: [f64; 3], t: f64, h: f64, omega_of: &dyn Fn(f64) -> f64, detuning: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = obe_rhs(y, omega_of(t), detuning);
    let k2 = obe_rhs(add(y, k1, h / 2.0), omega_of(t + h / 2.0), detuning);
    let k3 = obe_rhs(add(y, k2, h / 2.0), omega_of(t + h / 2.0), detuning);
    let k4 = obe_rhs(add(y, k3, h), omega_of(t + h), detuning);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

/// Integrate the OBEs over `t_grid_ns` (strictly increasing; the first grid
/// time is the initial time). Starts from the ground state unless
/// `initial_rho_ee` says otherwise.
pub fn solve_obe_from(
    pulse: &Pulse,
    t_grid_ns: &[f64],
    gamma_hz: f64,
    initial_rho_ee: f64,
) -> Result<Vec<BlochState>, ObeError> {
    pulse.validate()?;
    if t_grid_ns.is_empty() || t_grid_ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ObeError::InvalidGrid);
    }

    let inv_gamma_ns = 1.0e9 / gamma_hz;
    // Γ-units drive evaluated at ns times.
    let omega_of = |t: f64| pulse.omega_at(t * inv_gamma_ns);
    let detuning = pulse.detuning();

    // Step keeps the per-step phase (Rabi + decay + detuning) around 1e-2.
    let max_step = 0.01 / (pulse.peak_omega() + detuning.abs() + 1.0);

    let mut y = [initial_rho_ee.clamp(0.0, 1.0), 0.0, 0.0];
    let mut out = Vec::with_capacity(t_grid_ns.len());
    let to_state = |t_ns: f64, y: [f64; 3]| BlochState {
        time_ns: t_ns,
        rho_ee: y[0],
        coherence: Complex64::new(y[1], y[2]),
    };
    out.push(to_state(t_grid_ns[0], y));

    for w in t_grid_ns.windows(2) {
        let t0 = w[0] / inv_gamma_ns;
        let t1 = w[1] / inv_gamma_ns;
        let n_steps = libm::ceil((t1 - t0) / max_step) as usize;
        let h = (t1 - t0) / n_steps as f64;
        for i in 0..n_steps {
            y = rk4_step(y, t0 + i as f64 * h, h, &omega_of, detuning);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(ObeError::NumericalFailure { time_ns: w[1] });
        }
        out.push(to_state(w[1], y));
    }
    Ok(out)
}

/// Integrate the OBEs starting from the ground state.
pub fn solve_obe(pulse: &Pulse, t_grid_ns: &[f64], gamma_hz: f64) -> Result<Vec<BlochState>, ObeError> {
    solve_obe_from(pulse, t_grid_ns, gamma_hz, 0.0)
}

/// Uncorrelated-ensemble emission rate `N·ρ_ee(t)` in units of `Γ`
/// (an overall detection-scale factor is reported separately).
pub fn uncorrelated_rate(states: &[BlochState], n_atoms: u32) -> Vec<f64> {
    states
        .iter()
        .map(|s| f64::from(n_atoms) * s.rho_ee)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DEFAULT_GAMMA_HZ;
    use approx::assert_abs_diff_eq;

    fn no_drive() -> Pulse {
        Pulse::Trapezoid(PulseProfile {
            omega_peak: 0.0,
            t_on_ns: 0.0,
            t_off_ns: 0.0,
            edge_ns: 0.0,
            detuning: 0.0,
        })
    }

    #[test]
    fn free_decay_is_exponential() {
        let inv_gamma = 1.0e9 / DEFAULT_GAMMA_HZ;
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * inv_gamma / 10.0).collect();
        let states = solve_obe_from(&no_drive(), &grid, DEFAULT_GAMMA_HZ, 1.0).unwrap();
        for s in &states {
            let expected = libm::exp(-s.time_ns / inv_gamma);
            assert!((s.rho_ee - expected).abs() / expected < 1e-6);
        }
    }

    #[test]
    fn resonant_steady_state() {
        // s = 2Ω²/Γ² = 8 at Ω = 2Γ gives ρ_ee = s/(2(1+s)) = 4/9.
        let pulse = Pulse::Trapezoid(PulseProfile {
            omega_peak: 2.0,
            t_on_ns: 0.0,
            t_off_ns: 4000.0,
            edge_ns: 0.0,
            detuning: 0.0,
        });
        let grid = alloc::vec![0.0, 3000.0];
        let states = solve_obe(&pulse, &grid, DEFAULT_GAMMA_HZ).unwrap();
        assert_abs_diff_eq!(states[1].rho_ee, 4.0 / 9.0, epsilon = 1e-6);
    }

    #[test]
    fn paper_pulse_inverts_about_85_percent() {
        let pulse = Pulse::Trapezoid(PulseProfile::paper_pulse());
        let grid = alloc::vec![-1.0, 13.0];
        let states = solve_obe(&pulse, &grid, DEFAULT_GAMMA_HZ).unwrap();
        let inversion = states[1].rho_ee;
        assert!(
            (inversion - 0.85).abs() <= 0.05,
            "inversion after pulse = {inversion}"
        );
    }

    #[test]
    fn states_stay_physical() {
        let pulse = Pulse::Trapezoid(PulseProfile::paper_pulse());
        let grid: Vec<f64> = (0..=280).map(|i| -1.0 + 0.05 * i as f64).collect();
        for s in solve_obe(&pulse, &grid, DEFAULT_GAMMA_HZ).unwrap() {
            assert!(s.is_physical(1e-9), "unphysical state at t = {}", s.time_ns);
        }
    }

    #[test]
    fn rabi_frequency_matches_generalized_rabi() {
        // Strong constant drive: peak spacing of ρ_ee(t) should match
        // 2π/sqrt(Ω² + δ²) within 1%.
        let omega = 8.0;
        let detuning = 3.0;
        let pulse = Pulse::Trapezoid(PulseProfile {
            omega_peak: omega,
            t_on_ns: 0.0,
            t_off_ns: 1.0e5,
            edge_ns: 0.0,
            detuning,
        });
        let inv_gamma = 1.0e9 / DEFAULT_GAMMA_HZ;
        let t_max = 4.0 * inv_gamma;
        let n = 16000usize;
        let grid: Vec<f64> = (0..=n).map(|i| t_max * i as f64 / n as f64).collect();
        let states = solve_obe(&pulse, &grid, DEFAULT_GAMMA_HZ).unwrap();

        let mut peaks_ns = Vec::new();
        for i in 1..states.len() - 1 {
            if states[i].rho_ee > states[i - 1].rho_ee && states[i].rho_ee > states[i + 1].rho_ee {
                peaks_ns.push(states[i].time_ns);
            }
        }
        assert!(peaks_ns.len() >= 4);
        let spacing =
            (peaks_ns[peaks_ns.len() - 1] - peaks_ns[0]) / (peaks_ns.len() - 1) as f64;
        let expected = 2.0 * core::f64::consts::PI
            / libm::sqrt(omega * omega + detuning * detuning)
            * inv_gamma;
        assert!(
            (spacing - expected).abs() / expected < 0.01,
            "spacing {spacing} vs expected {expected}"
        );
    }

    #[test]
    fn trapezoid_profile_shape() {
        let p = PulseProfile::paper_pulse();
        assert_eq!(p.omega_at(-1.5), 0.0);
        assert_abs_diff_eq!(p.omega_at(-0.5), 3.25, epsilon = 1e-12);
        assert_eq!(p.omega_at(6.0), 6.5);
        assert_abs_diff_eq!(p.omega_at(12.5), 3.25, epsilon = 1e-12);
        assert_eq!(p.omega_at(13.5), 0.0);
    }

    #[test]
    fn tabulated_pulse_interpolates() {
        let p = TabulatedPulse {
            samples: alloc::vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0), (4.0, 0.0)],
            detuning: 0.0,
        };
        p.validate().unwrap();
        assert_abs_diff_eq!(p.omega_at(0.5), 1.0, epsilon = 1e-12);
        assert_eq!(p.omega_at(2.0), 2.0);
        assert_eq!(p.omega_at(5.0), 0.0);

        let bad = TabulatedPulse {
            samples: alloc::vec![(0.0, 0.0), (0.0, 1.0)],
            detuning: 0.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn uncorrelated_rate_is_linear_in_n() {
        let states = alloc::vec![
            BlochState {
                time_ns: 0.0,
                rho_ee: 0.5,
                coherence: Complex64::ZERO,
            },
            BlochState {
                time_ns: 1.0,
                rho_ee: 0.25,
                coherence: Complex64::ZERO,
            },
        ];
        let one = uncorrelated_rate(&states, 1);
        let many = uncorrelated_rate(&states, 300);
        for (a, b) in one.iter().zip(many.iter()) {
            assert_abs_diff_eq!(300.0 * a, *b, epsilon = 1e-12);
        }
    }
}
