//! The delay–substitute–read–resend eavesdropper.
//!
//! Eve delays the travel photon Bob sent and injects one photon of her own
//! Ψ⁻ pair toward Alice. She reads Alice's encoding with her own
//! discriminator and re-imposes the read symbol onto the delayed pair before
//! forwarding it to Bob. Bell messages re-encode deterministically; the
//! computational pair can only be re-imposed with probability 1/2 because
//! Bob's home photon collapses on its own terms when Eve measures hers.

use rand::Rng;

use crate::devices::{self, EncoderAction, TRAVEL_SIDE};
use crate::error::{Error, Result};
use crate::fock::{
    measure_polarization, replace_photon, MixedBasisSymbol, Polarization, TwoPhotonState,
};
use crate::real::{as_f64, Real};

/// Everything Eve holds mid-round.
#[derive(Debug, Clone)]
pub struct EveState<T: Real> {
    /// Bob's original pair: his home photon plus the travel photon Eve delays.
    pub delayed_pair: TwoPhotonState<T>,
    /// Eve's own Ψ⁻ pair; its travel photon goes to Alice in Bob's stead.
    pub substitute_pair: TwoPhotonState<T>,
    /// What her discriminator reported, once it has run.
    pub read_symbol: Option<MixedBasisSymbol>,
}

impl<T: Real> EveState<T> {
    pub fn new(delayed_pair: TwoPhotonState<T>) -> Self {
        EveState {
            delayed_pair,
            substitute_pair: devices::fresh_pair(),
            read_symbol: None,
        }
    }
}

/// Bernoulli presence gate: with probability `x`, Eve intercepts this round.
pub fn eve_presence_gate<T: Real, R: Rng + ?Sized>(x: T, rng: &mut R) -> Result<bool> {
    let p = as_f64(x);
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange { value: p });
    }
    Ok(rng.gen::<f64>() < p)
}

/// Eve measures her substitute pair (she holds both photons by the time the
/// encoded travel photon returns) in her own discriminator.
pub fn eve_read<T: Real, R: Rng + ?Sized>(
    travel_from_alice: &TwoPhotonState<T>,
    rng: &mut R,
) -> Result<MixedBasisSymbol> {
    devices::discriminate(travel_from_alice, rng).map(|(symbol, _)| symbol)
}

/// Re-imposes the read symbol onto Bob's delayed pair and reports the symbol
/// actually realized.
///
/// Bell readings use the deterministic encoders. For Chi3/Chi4 Eve measures
/// her held travel photon (collapsing Bob's home photon to the opposite
/// polarization) and injects a replacement that completes a parallel product
/// pair — which matches the reading only half the time.
pub fn eve_reencode<T: Real, R: Rng + ?Sized>(
    delayed_pair: &TwoPhotonState<T>,
    read: MixedBasisSymbol,
    rng: &mut R,
) -> Result<(TwoPhotonState<T>, MixedBasisSymbol)> {
    match read {
        MixedBasisSymbol::Chi1 => devices::encode(EncoderAction::Identity, delayed_pair, rng),
        MixedBasisSymbol::Chi2 => devices::encode(EncoderAction::HalfWavePlate0, delayed_pair, rng),
        MixedBasisSymbol::Chi3 | MixedBasisSymbol::Chi4 => {
            let (measured, collapsed) = measure_polarization(delayed_pair, TRAVEL_SIDE, rng)?;
            let home = measured.opposite();
            let out = replace_photon(&collapsed, TRAVEL_SIDE, home)?;
            let realized = match home {
                Polarization::H => MixedBasisSymbol::Chi3,
                Polarization::V => MixedBasisSymbol::Chi4,
            };
            Ok((out, realized))
        }
    }
}

/// Outcome of one intercepted round.
#[derive(Debug, Clone)]
pub struct InterceptOutcome<T: Real> {
    /// The delayed pair after Eve's re-encoding, headed for Bob's
    /// discriminator (Bob's own plate, if inserted, acts downstream).
    pub state_to_bob: TwoPhotonState<T>,
    /// The symbol Alice's encoder realized on Eve's substitute pair.
    pub alice_symbol: MixedBasisSymbol,
    /// What Eve's discriminator reported.
    pub read_symbol: MixedBasisSymbol,
    /// What her re-encoding actually put on the wire.
    pub sent_symbol: MixedBasisSymbol,
}

/// Orchestrates a full interception: substitute pair out, Alice's encoder and
/// optional Hadamard applied to it, Eve's reading, and the re-encoding of the
/// delayed pair.
pub fn eve_intercept_round<T: Real, R: Rng + ?Sized>(
    delayed_pair: &TwoPhotonState<T>,
    action: EncoderAction,
    alice_hadamard: bool,
    rng: &mut R,
) -> Result<InterceptOutcome<T>> {
    let mut eve = EveState::new(delayed_pair.clone());

    let (encoded, alice_symbol) = devices::encode(action, &eve.substitute_pair, rng)?;
    let outgoing = if alice_hadamard {
        devices::hadamard_on_travel(&encoded)?
    } else {
        encoded
    };

    let read = eve_read(&outgoing, rng)?;
    eve.read_symbol = Some(read);

    let (state_to_bob, sent_symbol) = eve_reencode(&eve.delayed_pair, read, rng)?;
    Ok(InterceptOutcome {
        state_to_bob,
        alice_symbol,
        read_symbol: read,
        sent_symbol,
    })
}
