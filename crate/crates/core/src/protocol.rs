//! The five-step session engine: Bob's preparation and measurement, Alice's
//! random basis and encoding, an optional interception, sifting into key and
//! control data, and the control-mode comparison.
//!
//! Each inserted HWP(π/8) acts exactly once on the travel photon: Alice's as
//! the photon leaves her encoder, Bob's immediately before his discriminator.
//! With both inserted the two Hadamards cancel, so same-basis rounds carry
//! messages and different-basis rounds become control data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary;
use crate::devices::{self, EncoderAction};
use crate::error::{Error, Result};
use crate::fock::MixedBasisSymbol;
use crate::real::{as_f64, real, Real};

/// Whether a party inserted the HWP(π/8) this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Plain,
    Hadamard,
}

/// Round classification after the basis announcements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    SameBasis,
    DifferentBasis,
}

/// Everything recorded about one protocol round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_id: u64,
    pub bob_basis: BasisChoice,
    pub alice_basis: BasisChoice,
    pub alice_symbol: MixedBasisSymbol,
    pub eve_active: bool,
    /// What Eve's discriminator reported (present iff she intercepted).
    pub eve_read: Option<MixedBasisSymbol>,
    /// What Eve's re-encoding put on the wire (present iff she intercepted).
    pub eve_sent: Option<MixedBasisSymbol>,
    pub bob_outcome: MixedBasisSymbol,
    pub kind: RoundKind,
}

impl RoundRecord {
    pub fn is_same_basis(&self) -> bool {
        self.kind == RoundKind::SameBasis
    }
}

/// Session parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig<T: Real> {
    pub n_rounds: u64,
    /// Eve's presence X: the i.i.d. per-round interception probability.
    pub eve_presence: T,
    pub attack_enabled: bool,
    pub seed: u64,
    /// Priors for the four symbols. The Chi3 and Chi4 weights jointly select
    /// the measure-and-replace encoder; heralding splits them 1/2–1/2.
    pub symbol_priors: [T; 4],
}

impl<T: Real> SessionConfig<T> {
    /// Config with uniform symbol priors.
    pub fn new(n_rounds: u64, eve_presence: T, attack_enabled: bool, seed: u64) -> Self {
        let quarter = real(0.25);
        SessionConfig {
            n_rounds,
            eve_presence,
            attack_enabled,
            seed,
            symbol_priors: [quarter; 4],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let x = as_f64(self.eve_presence);
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidConfig {
                reason: format!("eve_presence {x} outside [0, 1]"),
            });
        }
        let mut sum = 0.0;
        for p in &self.symbol_priors {
            let p = as_f64(*p);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig {
                    reason: format!("symbol prior {p} outside [0, 1]"),
                });
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig {
                reason: format!("symbol priors sum to {sum}, expected 1"),
            });
        }
        Ok(())
    }
}

/// Deterministic per-round random stream derived from (seed, round_id).
fn round_rng(seed: u64, round_id: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(round_id);
    rng
}

fn draw_basis<R: Rng + ?Sized>(rng: &mut R) -> BasisChoice {
    if rng.gen::<bool>() {
        BasisChoice::Hadamard
    } else {
        BasisChoice::Plain
    }
}

pub(crate) fn draw_action<T: Real, R: Rng + ?Sized>(
    config: &SessionConfig<T>,
    rng: &mut R,
) -> EncoderAction {
    let p1 = as_f64(config.symbol_priors[0]);
    let p2 = as_f64(config.symbol_priors[1]);
    let u: f64 = rng.gen();
    if u < p1 {
        EncoderAction::Identity
    } else if u < p1 + p2 {
        EncoderAction::HalfWavePlate0
    } else {
        EncoderAction::MeasureAndReplace
    }
}

/// Runs the optical pipeline for one round with every classical choice
/// pinned — the workhorse behind [`run_round`] and the calibration
/// estimators, which fix bases and encoder to sample a single configuration.
/// Draw order within the round stream: presence gate, then encoder sampling,
/// Eve's detection, re-encode sampling, Bob's detection.
pub fn run_round_with<T: Real, R: Rng + ?Sized>(
    config: &SessionConfig<T>,
    round_id: u64,
    bob_basis: BasisChoice,
    alice_basis: BasisChoice,
    action: EncoderAction,
    rng: &mut R,
) -> Result<RoundRecord> {
    let eve_active =
        config.attack_enabled && adversary::eve_presence_gate(config.eve_presence, rng)?;

    let pair = devices::fresh_pair::<T>();
    let alice_hadamard = alice_basis == BasisChoice::Hadamard;

    let (mut to_bob, alice_symbol, eve_read, eve_sent) = if eve_active {
        let outcome = adversary::eve_intercept_round(&pair, action, alice_hadamard, rng)?;
        (
            outcome.state_to_bob,
            outcome.alice_symbol,
            Some(outcome.read_symbol),
            Some(outcome.sent_symbol),
        )
    } else {
        let (encoded, realized) = devices::encode(action, &pair, rng)?;
        let outgoing = if alice_hadamard {
            devices::hadamard_on_travel(&encoded)?
        } else {
            encoded
        };
        (outgoing, realized, None, None)
    };

    if bob_basis == BasisChoice::Hadamard {
        to_bob = devices::hadamard_on_travel(&to_bob)?;
    }
    let (bob_outcome, _) = devices::discriminate(&to_bob, rng)?;

    let kind = if bob_basis == alice_basis {
        RoundKind::SameBasis
    } else {
        RoundKind::DifferentBasis
    };
    Ok(RoundRecord {
        round_id,
        bob_basis,
        alice_basis,
        alice_symbol,
        eve_active,
        eve_read,
        eve_sent,
        bob_outcome,
        kind,
    })
}

/// Runs one round: both parties draw their bases, Alice draws her encoder,
/// and the photons go through `execute_round`.
pub fn run_round<T: Real, R: Rng + ?Sized>(
    config: &SessionConfig<T>,
    round_id: u64,
    rng: &mut R,
) -> Result<RoundRecord> {
    config.validate()?;
    let bob_basis = draw_basis(rng);
    let alice_basis = draw_basis(rng);
    let action = draw_action(config, rng);
    run_round_with(config, round_id, bob_basis, alice_basis, action, rng)
}

/// Runs a full session of independent rounds. Each round gets its own
/// deterministic substream of (seed, round_id), so identical configs produce
/// identical transcripts regardless of execution order; rounds may run in
/// parallel.
pub fn run_session<T: Real>(config: &SessionConfig<T>) -> Result<Vec<RoundRecord>> {
    config.validate()?;
    (0..config.n_rounds)
        .into_par_iter()
        .map(|round_id| {
            let mut rng = round_rng(config.seed, round_id);
            let bob_basis = draw_basis(&mut rng);
            let alice_basis = draw_basis(&mut rng);
            let action = draw_action(config, &mut rng);
            run_round_with(config, round_id, bob_basis, alice_basis, action, &mut rng)
        })
        .collect()
}

/// Per-symbol control-mode tallies (over different-basis rounds).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SymbolControlStats {
    /// Different-basis rounds in which Alice announced this symbol.
    pub rounds: u64,
    /// Bob's outcomes for those rounds, indexed by symbol.
    pub outcome_counts: [u64; 4],
    /// How many of them were flagged as bit-flips.
    pub flips: u64,
}

/// Result of the control-mode comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlReport {
    pub eve_detected: bool,
    pub bitflip_count: u64,
    pub per_symbol: [SymbolControlStats; 4],
}

/// Checks control data against Alice's announcements.
///
/// A bit-flip is a different-basis round where Alice announced Chi3 or Chi4
/// and Bob measured the partner symbol. With a single Hadamard in the line
/// (either party's) that outcome has zero amplitude without interception, so
/// one observed flip certifies Eve. Records that are not different-basis are
/// ignored.
pub fn control_check(records: &[RoundRecord]) -> ControlReport {
    let mut per_symbol = [SymbolControlStats::default(); 4];
    let mut bitflip_count = 0u64;
    for record in records {
        if record.kind != RoundKind::DifferentBasis {
            continue;
        }
        let stats = &mut per_symbol[record.alice_symbol.index()];
        stats.rounds += 1;
        stats.outcome_counts[record.bob_outcome.index()] += 1;
        let flip = record.alice_symbol.is_computational()
            && record.bob_outcome == record.alice_symbol.partner();
        if flip {
            stats.flips += 1;
            bitflip_count += 1;
        }
    }
    ControlReport {
        eve_detected: bitflip_count > 0,
        bitflip_count,
        per_symbol,
    }
}

/// Outcome of sifting a transcript.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiftResult {
    /// Bob's outcomes from same-basis rounds, in round order (2 bits each).
    pub key_symbols: Vec<MixedBasisSymbol>,
    /// The different-basis rounds kept as control data.
    pub control_records: Vec<RoundRecord>,
    pub eve_detected: bool,
    pub bitflip_count: u64,
}

/// Splits a transcript into key material (same-basis rounds) and control
/// data (different-basis rounds), and runs the control check.
pub fn sift(transcript: &[RoundRecord]) -> SiftResult {
    let mut key_symbols = Vec::new();
    let mut control_records = Vec::new();
    for record in transcript {
        match record.kind {
            RoundKind::SameBasis => key_symbols.push(record.bob_outcome),
            RoundKind::DifferentBasis => control_records.push(record.clone()),
        }
    }
    let report = control_check(&control_records);
    SiftResult {
        key_symbols,
        control_records,
        eve_detected: report.eve_detected,
        bitflip_count: report.bitflip_count,
    }
}
