//! Simulation and security analysis of a mixed-basis two-qubit quantum key
//! distribution protocol built from linear optics.
//!
//! The four-message alphabet consists of two Bell states and the two
//! parallel-polarized computational states; a beam splitter followed by
//! polarizing beam splitters and number-resolving detectors discriminates
//! all four deterministically. Bob sends one photon of a Ψ⁻ pair to Alice,
//! who encodes by doing nothing, inserting an HWP(0), or measuring and
//! replacing the photon; randomly inserted HWP(π/8) plates scramble the
//! basis, turning different-basis rounds into control data that catches an
//! intercept-resend eavesdropper through impossible chi3↔chi4 flips.
//!
//! Modules:
//! - [`fock`] — exact two-photon, four-mode state algebra.
//! - [`devices`] — discriminator, encoders, and basis-scrambling plates.
//! - [`protocol`] — the round/session engine, sifting, and the control check.
//! - [`adversary`] — the delay–substitute–read–resend attack at presence x.
//! - [`analysis`] — closed-form tables, mutual-information curves, crossover,
//!   detection statistics, and the matching Monte-Carlo estimators.
//!
//! The numeric core is generic over the scalar type via [`Real`]
//! (`f64`, `f32`); the `*64` aliases below fix the default double precision.

pub mod adversary;
pub mod analysis;
pub mod devices;
mod error;
pub mod fock;
pub mod protocol;
mod real;

pub use error::{Error, Result};
pub use real::Real;

/// Numeric tolerances the contracts are checked against (for `f64`).
pub mod tol {
    /// Directly constructed objects: basis states, device unitaries.
    pub const CONSTRUCTION: f64 = 1e-12;
    /// Values that went through a pipeline of state evolutions.
    pub const PIPELINE: f64 = 1e-9;
}

/// Double-precision aliases for the generic core types.
pub type State64 = fock::TwoPhotonState<f64>;
pub type Unitary64 = fock::ModeUnitary<f64>;
pub type SessionConfig64 = protocol::SessionConfig<f64>;
pub type Joint64 = analysis::JointDistribution<f64>;
pub type JointEstimate64 = analysis::JointEstimate<f64>;
pub type MiReport64 = analysis::MutualInformationReport<f64>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{mixed_basis_state, MixedBasisSymbol};

    #[test]
    fn aliases_compile_and_agree_with_generics() {
        let a: State64 = mixed_basis_state(MixedBasisSymbol::Chi1);
        let b = mixed_basis_state::<f64>(MixedBasisSymbol::Chi1);
        assert!(a.fidelity(&b) > 1.0 - tol::CONSTRUCTION);
    }

    #[test]
    fn core_math_works_in_single_precision() {
        // The f32 instantiation is exercised at loosened tolerances.
        let chi1 = mixed_basis_state::<f32>(MixedBasisSymbol::Chi1);
        let scrambled = devices::hadamard_on_travel(&chi1).unwrap();
        let chi2 = mixed_basis_state::<f32>(MixedBasisSymbol::Chi2);
        assert!((scrambled.fidelity(&chi2) - 0.5).abs() < 1e-5);
        let iab = analysis::iab_closed_form(1.0f32).unwrap();
        assert!((iab - 0.7736).abs() < 1e-3);
        let x = analysis::crossover::<f32>();
        assert!((x - 0.605).abs() < 1e-2);
    }
}
