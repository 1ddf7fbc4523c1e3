//! Symmetric collective-spin ladder `|S, m>` with `S = Ñ/2` and the
//! collective lowering/raising operators on it.
//!
//! The ladder index `k ∈ {0,…,Ñ}` maps to `m = k − S`, so `k = 0` is the
//! ground rung `|S,−S>` and `k = Ñ` the fully inverted rung `|S,+S>`.
//! The decay rate out of rung `k` is `(S+m)(S−m+1) = k(Ñ−k+1)` in units
//! of `Γ`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::matrix::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LadderBasis {
    n_atoms: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LadderError {
    /// The ladder needs at least one atom.
    NoAtoms,
}

impl fmt::Display for LadderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LadderError::NoAtoms => write!(f, "ladder basis requires n_atoms >= 1"),
        }
    }
}

impl LadderBasis {
    pub fn new(n_atoms: u32) -> Result<Self, LadderError> {
        if n_atoms < 1 {
            return Err(LadderError::NoAtoms);
        }
        Ok(Self { n_atoms })
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    /// Total spin `S = Ñ/2`.
    pub fn spin(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    /// Basis dimension `Ñ + 1`.
    pub fn dim(&self) -> usize {
        self.n_atoms as usize + 1
    }

    /// `m` quantum number of ladder index `k`.
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.spin()
    }

    /// Decay rate out of rung `k`: `(S+m)(S−m+1) = k(Ñ−k+1)`, units of `Γ`.
    pub fn rate(&self, k: usize) -> f64 {
        let n = f64::from(self.n_atoms);
        let k = k as f64;
        k * (n - k + 1.0)
    }
}

/// Collective `S⁻`, `S⁺ = (S⁻)ᵀ` and the diagonal `S⁺S⁻` on a ladder basis.
#[derive(Clone, Debug)]
pub struct CollectiveOperators {
    basis: LadderBasis,
    s_minus: CMatrix,
    s_plus: CMatrix,
    s_plus_s_minus: CMatrix,
    /// Cached `k(Ñ−k+1)` for `k = 0..=Ñ`, the diagonal of `S⁺S⁻`.
    rates: Vec<f64>,
}

impl CollectiveOperators {
    pub fn basis(&self) -> &LadderBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn s_minus(&self) -> &CMatrix {
        &self.s_minus
    }

    pub fn s_plus(&self) -> &CMatrix {
        &self.s_plus
    }

    pub fn s_plus_s_minus(&self) -> &CMatrix {
        &self.s_plus_s_minus
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Diagonal of `S⁺S⁺S⁻S⁻` at rung `k`: `r_k · r_{k−1}`, the two-photon
    /// emission weight entering the `g²` numerator.
    pub fn pair_rate(&self, k: usize) -> f64 {
        if k < 2 {
            0.0
        } else {
            self.rates[k] * self.rates[k - 1]
        }
    }
}

/// Assemble the collective operators from the closed-form matrix elements
/// `<S,m−1|S⁻|S,m> = sqrt((S+m)(S−m+1))`.
pub fn build_operators(basis: &LadderBasis) -> CollectiveOperators {
    let dim = basis.dim();
    let rates: Vec<f64> = (0..dim).map(|k| basis.rate(k)).collect();

    let mut s_minus = CMatrix::zeros(dim);
    for k in 1..dim {
        s_minus[(k - 1, k)] = Complex64::new(libm::sqrt(rates[k]), 0.0);
    }
    let s_plus = s_minus.adjoint();
    let s_plus_s_minus = CMatrix::from_diag(&rates);

    CollectiveOperators {
        basis: *basis,
        s_minus,
        s_plus,
        s_plus_s_minus,
        rates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_ladder() {
        assert_eq!(LadderBasis::new(0), Err(LadderError::NoAtoms));
    }

    #[test]
    fn dimension_is_n_plus_one() {
        let basis = LadderBasis::new(6).unwrap();
        assert_eq!(basis.dim(), 7);
        assert_eq!(basis.spin(), 3.0);
        assert_eq!(basis.m_of(0), -3.0);
        assert_eq!(basis.m_of(6), 3.0);
    }

    #[test]
    fn single_atom_lowering() {
        // Ñ=1 (S=1/2): S⁻ is 2×2 with a single unit element.
        let ops = build_operators(&LadderBasis::new(1).unwrap());
        assert_eq!(ops.s_minus()[(0, 1)].re, 1.0);
        assert_eq!(ops.s_minus()[(1, 0)].re, 0.0);
        assert_eq!(ops.s_minus()[(0, 0)].re, 0.0);
    }

    #[test]
    fn two_atom_matrix_element() {
        // Ñ=2 (S=1): <1,0|S⁻|1,1> = sqrt(2).
        let ops = build_operators(&LadderBasis::new(2).unwrap());
        assert!((ops.s_minus()[(1, 2)].re - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn six_atom_closed_form_rates() {
        // diag(S⁺S⁻) at m=S is 2S = 6; at m=0 it is S(S+1) = 12.
        let basis = LadderBasis::new(6).unwrap();
        let ops = build_operators(&basis);
        assert_eq!(ops.rates()[6], 6.0);
        assert_eq!(ops.rates()[3], 12.0);
    }

    #[test]
    fn product_matches_closed_form_diagonal() {
        for n in [1u32, 2, 5, 12] {
            let basis = LadderBasis::new(n).unwrap();
            let ops = build_operators(&basis);
            let product = ops.s_plus().mul(ops.s_minus());
            assert!(
                product.max_abs_diff(ops.s_plus_s_minus()) < 1e-12,
                "S⁺S⁻ product deviates from closed form at Ñ={n}"
            );
        }
    }

    #[test]
    fn bottom_rung_is_annihilated() {
        let ops = build_operators(&LadderBasis::new(8).unwrap());
        for row in 0..ops.dim() {
            assert_eq!(ops.s_minus()[(row, 0)].norm(), 0.0);
        }
        assert_eq!(ops.rates()[0], 0.0);
    }
}
