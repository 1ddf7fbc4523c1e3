//! Physical and numerical run parameters.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    NonPositiveMu { mu: f64 },
    NonPositiveAtomNumber,
    BadTimeGrid,
    NonPositiveTolerance,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NonPositiveMu { mu } => write!(f, "mu must be positive, got {mu}"),
            ConfigError::NonPositiveAtomNumber => write!(f, "n_physical must be >= 1"),
            ConfigError::BadTimeGrid => {
                write!(f, "t_grid must start at 0 and be strictly increasing")
            }
            ConfigError::NonPositiveTolerance => write!(f, "tolerances must be positive"),
        }
    }
}

/// Default `Γ` for the Rb D2 line: `2π × 6 MHz`, in angular frequency (rad/s).
pub const DEFAULT_GAMMA_HZ: f64 = 2.0 * PI * 6.0e6;

/// Simulation parameters. Dynamics run in units of `1/Γ`; `gamma_hz` is
/// only used when converting to and from nanoseconds at the I/O boundary.
#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Physical atom number `N`.
    pub n_physical: u32,
    /// Geometric coupling parameter `μ` (dimensionless, taken as input).
    pub mu: f64,
    /// `Γ` in angular frequency (rad/s).
    pub gamma_hz: f64,
    /// Output times in units of `1/Γ`, starting at 0, strictly increasing.
    pub t_grid: Vec<f64>,
    /// Upper bound on the integrator step, units of `1/Γ`. `None` picks
    /// the `10⁻³/Ñ` default.
    pub max_step: Option<f64>,
    pub trace_tol: f64,
    pub positivity_tol: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_physical: 3000,
            mu: 0.002,
            gamma_hz: DEFAULT_GAMMA_HZ,
            t_grid: Vec::new(),
            max_step: None,
            trace_tol: 1e-9,
            positivity_tol: 1e-9,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Effective atom number `Ñ = round(μN)`, floored at 1.
    pub fn effective_atom_number(&self) -> Result<u32, ConfigError> {
        effective_atom_number(self.n_physical, self.mu)
    }

    /// `1/Γ` in nanoseconds (≈ 26.5 ns at the default `Γ`).
    pub fn inv_gamma_ns(&self) -> f64 {
        1.0e9 / self.gamma_hz
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        effective_atom_number(self.n_physical, self.mu)?;
        if !self.t_grid.is_empty()
            && (self.t_grid[0] != 0.0 || self.t_grid.windows(2).any(|w| w[1] <= w[0]))
        {
            return Err(ConfigError::BadTimeGrid);
        }
        if self.trace_tol <= 0.0 || self.positivity_tol <= 0.0 {
            return Err(ConfigError::NonPositiveTolerance);
        }
        Ok(())
    }
}

/// `Ñ = round(μ·N)`, floored at 1. Rejects nonpositive `μ` or `N`.
pub fn effective_atom_number(n_physical: u32, mu: f64) -> Result<u32, ConfigError> {
    if n_physical < 1 {
        return Err(ConfigError::NonPositiveAtomNumber);
    }
    if !(mu > 0.0) {
        return Err(ConfigError::NonPositiveMu { mu });
    }
    let n_eff = libm::round(mu * f64::from(n_physical));
    Ok((n_eff as u32).max(1))
}
