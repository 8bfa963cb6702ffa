//! The optical instruments of the protocol: the mixed-basis discriminator
//! (beam splitter, polarizing beam splitters and four number-resolving
//! detectors), Alice's three encoders, and the removable HWP(π/8) plates that
//! scramble the basis of the travel photon.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{
    apply_mode_unitary, beam_splitter_unitary, half_wave_plate_unitary, measure_polarization,
    mixed_basis_state, replace_photon, FockBasisElement, MixedBasisSymbol, Polarization, Spatial,
    TwoPhotonState,
};
use crate::real::{as_f64, Real};

/// Side of the photon Bob keeps in his quantum delay.
pub const HOME_SIDE: Spatial = Spatial::Side1;
/// Side of the photon that travels to Alice and back.
pub const TRAVEL_SIDE: Spatial = Spatial::Side2;

/// The four number-resolving detectors. Transmitted H goes to the H detector
/// of a side, reflected V to the V detector; indices match the mode ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    D1H,
    D1V,
    D2H,
    D2V,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1H, Detector::D1V, Detector::D2H, Detector::D2V];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Photon counts on the four detectors for one discrimination event.
/// Counts always sum to 2.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct DetectionPattern {
    counts: [u8; 4],
}

impl DetectionPattern {
    /// The pattern produced when the post-beam-splitter state collapses onto
    /// `element` (PBS routing sends each mode to its detector).
    pub fn from_element(element: FockBasisElement) -> Self {
        let mut counts = [0u8; 4];
        let (a, b) = element.modes();
        counts[a.index()] += 1;
        counts[b.index()] += 1;
        DetectionPattern { counts }
    }

    pub fn count(&self, detector: Detector) -> u8 {
        self.counts[detector.index()]
    }

    pub fn counts(&self) -> [u8; 4] {
        self.counts
    }

    pub fn total(&self) -> u8 {
        self.counts.iter().sum()
    }

    /// Maps the pattern to the announced symbol:
    /// split with opposite polarizations → Chi1, two clicks on one side with
    /// different polarizations → Chi2, a double click on an H detector →
    /// Chi3, on a V detector → Chi4. Split clicks with identical
    /// polarizations match no symbol.
    pub fn classify(&self) -> Option<MixedBasisSymbol> {
        let [d1h, d1v, d2h, d2v] = self.counts;
        if d1h == 2 || d2h == 2 {
            return Some(MixedBasisSymbol::Chi3);
        }
        if d1v == 2 || d2v == 2 {
            return Some(MixedBasisSymbol::Chi4);
        }
        if (d1h == 1 && d1v == 1) || (d2h == 1 && d2v == 1) {
            return Some(MixedBasisSymbol::Chi2);
        }
        if (d1h == 1 && d2v == 1) || (d1v == 1 && d2h == 1) {
            return Some(MixedBasisSymbol::Chi1);
        }
        None
    }
}

impl fmt::Debug for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (detector, count) in Detector::ALL.iter().zip(self.counts) {
            for _ in 0..count {
                if !first {
                    write!(f, "+")?;
                }
                write!(f, "{detector:?}")?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Alice's choice of encoder hardware for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderAction {
    /// Pass the travel photon through untouched (realizes Chi1).
    Identity,
    /// Insert an HWP(0) in the travel path (realizes Chi2).
    HalfWavePlate0,
    /// Measure the travel photon at a PBS and replace it from the auxiliary
    /// source; heralds Chi3 or Chi4 depending on the measurement outcome.
    MeasureAndReplace,
}

impl EncoderAction {
    pub const ALL: [EncoderAction; 3] = [
        EncoderAction::Identity,
        EncoderAction::HalfWavePlate0,
        EncoderAction::MeasureAndReplace,
    ];
}

fn ensure_single_travel_photon<T: Real>(state: &TwoPhotonState<T>) -> Result<()> {
    if state.photons_on(TRAVEL_SIDE) == Some(1) {
        Ok(())
    } else {
        Err(Error::UnsupportedMeasurement { side: TRAVEL_SIDE })
    }
}

fn sample_element<T: Real, R: Rng + ?Sized>(
    state: &TwoPhotonState<T>,
    rng: &mut R,
) -> FockBasisElement {
    let probabilities = state.born_probabilities();
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_support = FockBasisElement::ALL[0];
    for element in FockBasisElement::ALL {
        let p = as_f64(probabilities[element.index()]);
        if p > 0.0 {
            last_support = element;
        }
        acc += p;
        if draw < acc {
            return element;
        }
    }
    // Rounding can leave acc marginally below 1; attribute the sliver to the
    // last supported element.
    last_support
}

/// Runs the discriminator on a two-photon state: beam splitter, PBS routing,
/// a Born-rule detection event, and pattern classification.
pub fn discriminate<T: Real, R: Rng + ?Sized>(
    state: &TwoPhotonState<T>,
    rng: &mut R,
) -> Result<(MixedBasisSymbol, DetectionPattern)> {
    let after_bs = apply_mode_unitary(state, &beam_splitter_unitary())?;
    let element = sample_element(&after_bs, rng);
    let pattern = DetectionPattern::from_element(element);
    let symbol = pattern
        .classify()
        .ok_or(Error::UnclassifiablePattern { pattern })?;
    Ok((symbol, pattern))
}

/// Applies one encoder to the travel photon of `state` and reports the
/// realized symbol for Alice's record. `MeasureAndReplace` heralds Chi3/Chi4
/// at random: the measured travel photon is replaced by a fresh photon of the
/// opposite polarization, matching the collapsed home photon.
pub fn encode<T: Real, R: Rng + ?Sized>(
    action: EncoderAction,
    state: &TwoPhotonState<T>,
    rng: &mut R,
) -> Result<(TwoPhotonState<T>, MixedBasisSymbol)> {
    ensure_single_travel_photon(state)?;
    match action {
        EncoderAction::Identity => Ok((state.clone(), MixedBasisSymbol::Chi1)),
        EncoderAction::HalfWavePlate0 => {
            let out = apply_mode_unitary(state, &half_wave_plate_unitary(TRAVEL_SIDE, T::zero()))?;
            Ok((out, MixedBasisSymbol::Chi2))
        }
        EncoderAction::MeasureAndReplace => {
            let (measured, collapsed) = measure_polarization(state, TRAVEL_SIDE, rng)?;
            let injected = measured.opposite();
            let out = replace_photon(&collapsed, TRAVEL_SIDE, injected)?;
            let realized = match injected {
                Polarization::H => MixedBasisSymbol::Chi3,
                Polarization::V => MixedBasisSymbol::Chi4,
            };
            Ok((out, realized))
        }
    }
}

/// Applies the removable HWP(π/8) (a Hadamard on polarization) to the travel
/// photon.
pub fn hadamard_on_travel<T: Real>(state: &TwoPhotonState<T>) -> Result<TwoPhotonState<T>> {
    ensure_single_travel_photon(state)?;
    apply_mode_unitary(state, &half_wave_plate_unitary(TRAVEL_SIDE, T::FRAC_PI_8()))
}

/// Convenience wrapper: a fresh entangled pair in Chi1 (Ψ⁻), as produced by
/// Bob's (or Eve's) source.
pub fn fresh_pair<T: Real>() -> TwoPhotonState<T> {
    mixed_basis_state(MixedBasisSymbol::Chi1)
}
