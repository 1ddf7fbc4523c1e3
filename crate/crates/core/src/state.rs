//! Density matrices on the ladder basis and their invariants.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::ladder::LadderBasis;
use crate::matrix::CMatrix;

#[derive(Clone, Debug, PartialEq)]
pub enum StateError {
    RungOutOfRange { rung: usize, dim: usize },
    WrongPopulationCount { got: usize, expected: usize },
    NegativePopulation { index: usize, value: f64 },
    TraceDeviation { trace: f64 },
    NotHermitian { defect: f64 },
}

impl fmt::Display for StateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateError::RungOutOfRange { rung, dim } => {
                write!(f, "rung index {rung} outside ladder of dimension {dim}")
            }
            StateError::WrongPopulationCount { got, expected } => {
                write!(f, "expected {expected} populations, got {got}")
            }
            StateError::NegativePopulation { index, value } => {
                write!(f, "population {index} is negative ({value})")
            }
            StateError::TraceDeviation { trace } => {
                write!(f, "trace {trace} deviates from 1 beyond tolerance")
            }
            StateError::NotHermitian { defect } => {
                write!(f, "hermiticity defect {defect} beyond tolerance")
            }
        }
    }
}

/// A density matrix `ρ` on the symmetric ladder, stamped with the time (in
/// units of `1/Γ`) at which it holds.
#[derive(Clone, Debug)]
pub struct DickeState {
    basis: LadderBasis,
    rho: CMatrix,
    time: f64,
}

impl DickeState {
    /// Fully inverted state `|e>^⊗Ñ = |S, S>` at `t = 0`.
    pub fn fully_inverted(basis: &LadderBasis) -> Self {
        let mut pops = vec![0.0; basis.dim()];
        pops[basis.dim() - 1] = 1.0;
        Self {
            basis: *basis,
            rho: CMatrix::from_diag(&pops),
            time: 0.0,
        }
    }

    /// Pure single-rung state `|S, m>` with `m = rung − S`.
    pub fn single_rung(basis: &LadderBasis, rung: usize) -> Result<Self, StateError> {
        if rung >= basis.dim() {
            return Err(StateError::RungOutOfRange {
                rung,
                dim: basis.dim(),
            });
        }
        let mut pops = vec![0.0; basis.dim()];
        pops[rung] = 1.0;
        Ok(Self {
            basis: *basis,
            rho: CMatrix::from_diag(&pops),
            time: 0.0,
        })
    }

    /// Diagonal state from user-supplied populations (must be nonnegative
    /// and sum to 1 within `1e-9`).
    pub fn from_populations(basis: &LadderBasis, pops: &[f64]) -> Result<Self, StateError> {
        if pops.len() != basis.dim() {
            return Err(StateError::WrongPopulationCount {
                got: pops.len(),
                expected: basis.dim(),
            });
        }
        let mut sum = 0.0;
        for (index, &p) in pops.iter().enumerate() {
            if p < 0.0 {
                return Err(StateError::NegativePopulation { index, value: p });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(StateError::TraceDeviation { trace: sum });
        }
        Ok(Self {
            basis: *basis,
            rho: CMatrix::from_diag(pops),
            time: 0.0,
        })
    }

    /// Wrap an arbitrary matrix, checking hermiticity and trace.
    pub fn from_matrix(
        basis: &LadderBasis,
        rho: CMatrix,
        time: f64,
        trace_tol: f64,
    ) -> Result<Self, StateError> {
        let state = Self {
            basis: *basis,
            rho,
            time,
        };
        state.validate(trace_tol, trace_tol)?;
        Ok(state)
    }

    pub(crate) fn from_parts(basis: LadderBasis, rho: CMatrix, time: f64) -> Self {
        Self { basis, rho, time }
    }

    pub fn basis(&self) -> &LadderBasis {
        &self.basis
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Real diagonal of `ρ` (the rung populations).
    pub fn populations(&self) -> Vec<f64> {
        self.rho.diagonal_real()
    }

    pub fn validate(&self, trace_tol: f64, positivity_tol: f64) -> Result<(), StateError> {
        let defect = self.rho.hermiticity_defect();
        if defect > trace_tol {
            return Err(StateError::NotHermitian { defect });
        }
        let trace = self.rho.trace();
        if (trace.re - 1.0).abs() > trace_tol || trace.im.abs() > trace_tol {
            return Err(StateError::TraceDeviation { trace: trace.re });
        }
        for (index, value) in self.populations().into_iter().enumerate() {
            if value < -positivity_tol {
                return Err(StateError::NegativePopulation { index, value });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: u32) -> LadderBasis {
        LadderBasis::new(n).unwrap()
    }

    #[test]
    fn fully_inverted_occupies_top_rung() {
        let s = DickeState::fully_inverted(&basis(6));
        let pops = s.populations();
        assert_eq!(pops[6], 1.0);
        assert_eq!(pops[..6].iter().sum::<f64>(), 0.0);
        s.validate(1e-12, 1e-12).unwrap();
    }

    #[test]
    fn single_rung_bounds_checked() {
        assert!(DickeState::single_rung(&basis(2), 3).is_err());
        let s = DickeState::single_rung(&basis(2), 1).unwrap();
        assert_eq!(s.populations()[1], 1.0);
    }

    #[test]
    fn populations_must_be_normalized() {
        let b = basis(2);
        assert!(matches!(
            DickeState::from_populations(&b, &[0.5, 0.5, 0.5]),
            Err(StateError::TraceDeviation { .. })
        ));
        assert!(matches!(
            DickeState::from_populations(&b, &[1.5, -0.5, 0.0]),
            Err(StateError::NegativePopulation { .. })
        ));
        assert!(matches!(
            DickeState::from_populations(&b, &[1.0, 0.0]),
            Err(StateError::WrongPopulationCount { .. })
        ));
        DickeState::from_populations(&b, &[0.25, 0.25, 0.5]).unwrap();
    }
}
