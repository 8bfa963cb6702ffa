//! Exact two-photon, four-mode Fock-space state algebra.
//!
//! Four optical modes (two spatial sides, two polarizations) carry exactly
//! two photons. States live in the 10-dimensional bosonic sector spanned by
//! mode-occupation multisets; a 4x4 unitary on the modes is lifted to that
//! sector by substituting creation operators. Doubly occupied basis kets are
//! kept normalized (`a†² |0⟩ / √2`), so Born-rule probabilities come straight
//! from squared amplitudes.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{as_f64, scaled_tol, Real};
use crate::tol;

/// Amplitudes-squared below this threshold are treated as numerical dust,
/// not genuine support, when checking occupation preconditions.
const SUPPORT_EPS: f64 = 1e-18;

/// Spatial side of the apparatus (the two input ports of the discriminator
/// beam splitter).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spatial {
    Side1,
    Side2,
}

impl Spatial {
    pub const BOTH: [Spatial; 2] = [Spatial::Side1, Spatial::Side2];

    pub fn other(self) -> Self {
        match self {
            Spatial::Side1 => Spatial::Side2,
            Spatial::Side2 => Spatial::Side1,
        }
    }
}

/// Linear photon polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn opposite(self) -> Self {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
        }
    }
}

/// One of the four optical modes. The canonical ordering is
/// `Side1H < Side1V < Side2H < Side2V` and is stable across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OpticalMode {
    pub spatial: Spatial,
    pub polarization: Polarization,
}

/// Number of optical modes.
pub const MODE_COUNT: usize = 4;

impl OpticalMode {
    pub const ALL: [OpticalMode; MODE_COUNT] = [
        OpticalMode::new(Spatial::Side1, Polarization::H),
        OpticalMode::new(Spatial::Side1, Polarization::V),
        OpticalMode::new(Spatial::Side2, Polarization::H),
        OpticalMode::new(Spatial::Side2, Polarization::V),
    ];

    pub const fn new(spatial: Spatial, polarization: Polarization) -> Self {
        OpticalMode {
            spatial,
            polarization,
        }
    }

    /// Position in the canonical mode ordering.
    pub const fn index(self) -> usize {
        let side = match self.spatial {
            Spatial::Side1 => 0,
            Spatial::Side2 => 1,
        };
        let pol = match self.polarization {
            Polarization::H => 0,
            Polarization::V => 1,
        };
        side * 2 + pol
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }
}

impl fmt::Display for OpticalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.spatial {
            Spatial::Side1 => '1',
            Spatial::Side2 => '2',
        };
        let pol = match self.polarization {
            Polarization::H => 'H',
            Polarization::V => 'V',
        };
        write!(f, "{side}{pol}")
    }
}

/// Dimension of the two-photon sector: multisets of size 2 over 4 modes.
pub const FOCK_DIM: usize = 10;

/// A two-photon occupation multiset (doubly occupied modes allowed).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockBasisElement {
    lo: u8,
    hi: u8,
}

impl FockBasisElement {
    /// All ten elements in canonical order, stable across runs.
    pub const ALL: [FockBasisElement; FOCK_DIM] = [
        FockBasisElement { lo: 0, hi: 0 },
        FockBasisElement { lo: 0, hi: 1 },
        FockBasisElement { lo: 0, hi: 2 },
        FockBasisElement { lo: 0, hi: 3 },
        FockBasisElement { lo: 1, hi: 1 },
        FockBasisElement { lo: 1, hi: 2 },
        FockBasisElement { lo: 1, hi: 3 },
        FockBasisElement { lo: 2, hi: 2 },
        FockBasisElement { lo: 2, hi: 3 },
        FockBasisElement { lo: 3, hi: 3 },
    ];

    pub fn new(a: OpticalMode, b: OpticalMode) -> Self {
        Self::from_mode_indices(a.index(), b.index())
    }

    fn from_mode_indices(a: usize, b: usize) -> Self {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        FockBasisElement {
            lo: lo as u8,
            hi: hi as u8,
        }
    }

    /// Position in the canonical enumeration.
    pub fn index(self) -> usize {
        let (i, j) = (self.lo as usize, self.hi as usize);
        i * (7 - i) / 2 + j
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    /// The two occupied modes, in canonical order (equal when bunched).
    pub fn modes(self) -> (OpticalMode, OpticalMode) {
        (
            OpticalMode::from_index(self.lo as usize),
            OpticalMode::from_index(self.hi as usize),
        )
    }

    pub fn occupation(self, mode: OpticalMode) -> u8 {
        let idx = mode.index() as u8;
        (self.lo == idx) as u8 + (self.hi == idx) as u8
    }

    pub fn contains(self, mode: OpticalMode) -> bool {
        self.occupation(mode) > 0
    }

    pub fn is_bunched(self) -> bool {
        self.lo == self.hi
    }

    /// Photon count on a spatial side (0, 1 or 2).
    pub fn photons_on(self, side: Spatial) -> u8 {
        let (a, b) = self.modes();
        (a.spatial == side) as u8 + (b.spatial == side) as u8
    }

    /// For elements with exactly one photon on `side`, that photon's
    /// polarization.
    pub fn polarization_on(self, side: Spatial) -> Option<Polarization> {
        if self.photons_on(side) != 1 {
            return None;
        }
        let (a, b) = self.modes();
        Some(if a.spatial == side {
            a.polarization
        } else {
            b.polarization
        })
    }
}

impl fmt::Debug for FockBasisElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.modes();
        write!(f, "{{{a},{b}}}")
    }
}

/// The four-message alphabet of the protocol: two Bell states and the two
/// parallel-polarized computational states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixedBasisSymbol {
    /// Ψ⁻ = (|HV⟩ − |VH⟩)/√2
    Chi1,
    /// Ψ⁺ = (|HV⟩ + |VH⟩)/√2
    Chi2,
    /// |HH⟩
    Chi3,
    /// |VV⟩
    Chi4,
}

impl MixedBasisSymbol {
    pub const ALL: [MixedBasisSymbol; 4] = [
        MixedBasisSymbol::Chi1,
        MixedBasisSymbol::Chi2,
        MixedBasisSymbol::Chi3,
        MixedBasisSymbol::Chi4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Self {
        Self::ALL[index]
    }

    /// One-based label as used in tables and CSV output.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn is_bell(self) -> bool {
        matches!(self, MixedBasisSymbol::Chi1 | MixedBasisSymbol::Chi2)
    }

    pub fn is_computational(self) -> bool {
        !self.is_bell()
    }

    /// The symbol obtained by flipping both photon polarizations
    /// (Chi1↔Chi2 up to phase, Chi3↔Chi4).
    pub fn partner(self) -> Self {
        match self {
            MixedBasisSymbol::Chi1 => MixedBasisSymbol::Chi2,
            MixedBasisSymbol::Chi2 => MixedBasisSymbol::Chi1,
            MixedBasisSymbol::Chi3 => MixedBasisSymbol::Chi4,
            MixedBasisSymbol::Chi4 => MixedBasisSymbol::Chi3,
        }
    }

    /// The two key bits a symbol carries.
    pub fn bits(self) -> (bool, bool) {
        let n = self.index();
        (n & 0b10 != 0, n & 0b01 != 0)
    }
}

impl fmt::Display for MixedBasisSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi{}", self.number())
    }
}

/// A pure two-photon state: one complex amplitude per basis element.
#[derive(Clone, PartialEq)]
pub struct TwoPhotonState<T: Real> {
    amps: [Complex<T>; FOCK_DIM],
}

impl<T: Real> TwoPhotonState<T> {
    /// Builds a state from raw amplitudes, enforcing finiteness and unit norm
    /// (within the pipeline tolerance).
    pub fn new(amps: [Complex<T>; FOCK_DIM]) -> Result<Self> {
        for a in &amps {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NotNormalized { deviation: f64::INFINITY });
            }
        }
        let state = TwoPhotonState { amps };
        state.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;
        Ok(state)
    }

    pub(crate) fn from_amps_unchecked(amps: [Complex<T>; FOCK_DIM]) -> Self {
        TwoPhotonState { amps }
    }

    /// The basis ket with both photons in the element's modes.
    pub fn basis_element(element: FockBasisElement) -> Self {
        let mut amps = [Complex::zero(); FOCK_DIM];
        amps[element.index()] = Complex::new(T::one(), T::zero());
        TwoPhotonState { amps }
    }

    pub fn amplitude(&self, element: FockBasisElement) -> Complex<T> {
        self.amps[element.index()]
    }

    pub fn amplitudes(&self) -> &[Complex<T>; FOCK_DIM] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product ⟨self|other⟩.
    pub fn overlap(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * *b)
            .fold(Complex::zero(), |acc, z| acc + z)
    }

    /// |⟨self|other⟩|², clamped into [0, 1].
    pub fn fidelity(&self, other: &Self) -> T {
        self.overlap(other).norm_sqr().min(T::one()).max(T::zero())
    }

    /// Born probability of each basis element.
    pub fn born_probabilities(&self) -> [T; FOCK_DIM] {
        let mut p = [T::zero(); FOCK_DIM];
        for (slot, a) in p.iter_mut().zip(self.amps.iter()) {
            *slot = a.norm_sqr();
        }
        p
    }

    pub fn probability_of(&self, element: FockBasisElement) -> T {
        self.amps[element.index()].norm_sqr()
    }

    /// Photon count on `side` if it is definite over the state's support.
    pub fn photons_on(&self, side: Spatial) -> Option<u8> {
        let mut count = None;
        for element in FockBasisElement::ALL {
            if as_f64(self.probability_of(element)) <= SUPPORT_EPS {
                continue;
            }
            let n = element.photons_on(side);
            match count {
                None => count = Some(n),
                Some(seen) if seen != n => return None,
                Some(_) => {}
            }
        }
        count
    }

    pub(crate) fn check_normalized(&self, tolerance: f64) -> Result<()> {
        let deviation = (as_f64(self.norm_sqr()) - 1.0).abs();
        if deviation > tolerance {
            Err(Error::NotNormalized { deviation })
        } else {
            Ok(())
        }
    }
}

impl<T: Real> fmt::Debug for TwoPhotonState<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_map();
        for element in FockBasisElement::ALL {
            let a = self.amplitude(element);
            if as_f64(a.norm_sqr()) > SUPPORT_EPS {
                list.entry(&element, &format_args!("{:?}", a));
            }
        }
        list.finish()
    }
}

/// Builds the normalized state of a mixed-basis symbol: one photon on each
/// side, with Chi1/Chi2 the (|HV⟩ ∓ |VH⟩)/√2 Bell pair and Chi3/Chi4 the
/// parallel-polarized products (first slot Side1, second Side2).
pub fn mixed_basis_state<T: Real>(symbol: MixedBasisSymbol) -> TwoPhotonState<T> {
    use Polarization::{H, V};
    let elem = |p1: Polarization, p2: Polarization| {
        FockBasisElement::new(
            OpticalMode::new(Spatial::Side1, p1),
            OpticalMode::new(Spatial::Side2, p2),
        )
    };
    let one = Complex::new(T::one(), T::zero());
    let inv_rt2 = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let mut amps = [Complex::zero(); FOCK_DIM];
    match symbol {
        MixedBasisSymbol::Chi1 => {
            amps[elem(H, V).index()] = inv_rt2;
            amps[elem(V, H).index()] = -inv_rt2;
        }
        MixedBasisSymbol::Chi2 => {
            amps[elem(H, V).index()] = inv_rt2;
            amps[elem(V, H).index()] = inv_rt2;
        }
        MixedBasisSymbol::Chi3 => amps[elem(H, H).index()] = one,
        MixedBasisSymbol::Chi4 => amps[elem(V, V).index()] = one,
    }
    TwoPhotonState::from_amps_unchecked(amps)
}

/// Born overlap probability |⟨a|b⟩|² between two normalized states.
pub fn overlap_probability<T: Real>(a: &TwoPhotonState<T>, b: &TwoPhotonState<T>) -> Result<T> {
    a.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;
    b.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;
    Ok(a.fidelity(b))
}

/// A 4x4 unitary acting on mode creation operators, indexed by the canonical
/// mode ordering: column `i` holds the image of mode `i`.
#[derive(Clone, PartialEq)]
pub struct ModeUnitary<T: Real> {
    m: [[Complex<T>; MODE_COUNT]; MODE_COUNT],
}

impl<T: Real> ModeUnitary<T> {
    /// Validates unitarity (within the pipeline tolerance) and wraps the
    /// matrix.
    pub fn new(matrix: [[Complex<T>; MODE_COUNT]; MODE_COUNT]) -> Result<Self> {
        let u = ModeUnitary { m: matrix };
        u.check_unitary(scaled_tol::<T>(tol::PIPELINE))?;
        Ok(u)
    }

    fn from_matrix_unchecked(m: [[Complex<T>; MODE_COUNT]; MODE_COUNT]) -> Self {
        ModeUnitary { m }
    }

    pub fn identity() -> Self {
        let mut m = [[Complex::zero(); MODE_COUNT]; MODE_COUNT];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = Complex::new(T::one(), T::zero());
        }
        ModeUnitary { m }
    }

    pub fn matrix(&self) -> &[[Complex<T>; MODE_COUNT]; MODE_COUNT] {
        &self.m
    }

    /// Entry sending input mode `input` to output mode `output`.
    pub fn entry(&self, output: usize, input: usize) -> Complex<T> {
        self.m[output][input]
    }

    /// Largest entrywise deviation of U†U from the identity.
    pub fn unitarity_deviation(&self) -> T {
        let mut worst = T::zero();
        for i in 0..MODE_COUNT {
            for j in 0..MODE_COUNT {
                let mut dot = Complex::<T>::zero();
                for k in 0..MODE_COUNT {
                    dot = dot + self.m[k][i].conj() * self.m[k][j];
                }
                let target = if i == j { T::one() } else { T::zero() };
                let dev = (dot - Complex::new(target, T::zero())).norm();
                if dev > worst {
                    worst = dev;
                }
            }
        }
        worst
    }

    pub(crate) fn check_unitary(&self, tolerance: f64) -> Result<()> {
        let deviation = as_f64(self.unitarity_deviation());
        if !deviation.is_finite() || deviation > tolerance {
            Err(Error::NotUnitary { deviation })
        } else {
            Ok(())
        }
    }

    /// The unitary that applies `self` first and `later` second
    /// (matrix product `later * self`).
    pub fn then(&self, later: &Self) -> Self {
        let mut m = [[Complex::zero(); MODE_COUNT]; MODE_COUNT];
        for (out, row) in m.iter_mut().enumerate() {
            for (inp, cell) in row.iter_mut().enumerate() {
                let mut acc = Complex::zero();
                for mid in 0..MODE_COUNT {
                    acc = acc + later.m[out][mid] * self.m[mid][inp];
                }
                *cell = acc;
            }
        }
        ModeUnitary { m }
    }
}

impl<T: Real> fmt::Debug for ModeUnitary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ModeUnitary [")?;
        for row in &self.m {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

/// The 50:50 polarization-preserving beam splitter,
/// Side1 → (Side1 + Side2)/√2 and Side2 → (Side1 − Side2)/√2
/// (real Hadamard-type convention).
pub fn beam_splitter_unitary<T: Real>() -> ModeUnitary<T> {
    let r = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
    let z = Complex::zero();
    ModeUnitary::from_matrix_unchecked([
        [r, z, r, z],
        [z, r, z, r],
        [r, z, -r, z],
        [z, r, z, -r],
    ])
}

/// A half-wave plate on one side, fast axis at `angle`: identity on the other
/// side, Jones matrix [[cos 2θ, sin 2θ], [sin 2θ, −cos 2θ]] on this side's
/// polarization block. Angle 0 flips the sign of V; angle π/8 is a Hadamard.
pub fn half_wave_plate_unitary<T: Real>(side: Spatial, angle: T) -> ModeUnitary<T> {
    let two = T::one() + T::one();
    let c = Complex::new((two * angle).cos(), T::zero());
    let s = Complex::new((two * angle).sin(), T::zero());
    let mut u = ModeUnitary::identity();
    let h = OpticalMode::new(side, Polarization::H).index();
    let v = OpticalMode::new(side, Polarization::V).index();
    u.m[h][h] = c;
    u.m[h][v] = s;
    u.m[v][h] = s;
    u.m[v][v] = -c;
    u
}

/// Per-element factor relating the normalized ket to the bare creation
/// product: |e⟩ = k(e) · a†a†|0⟩ with k = 1/√2 for bunched elements.
fn ket_factor<T: Real>(element: FockBasisElement) -> T {
    if element.is_bunched() {
        T::FRAC_1_SQRT_2()
    } else {
        T::one()
    }
}

/// Evolves a state by substituting each creation operator according to `u`
/// and re-expanding in the Fock basis. Norm is preserved (unitarity is
/// checked on entry).
pub fn apply_mode_unitary<T: Real>(
    state: &TwoPhotonState<T>,
    u: &ModeUnitary<T>,
) -> Result<TwoPhotonState<T>> {
    u.check_unitary(scaled_tol::<T>(tol::PIPELINE))?;
    state.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;

    let sqrt2 = T::SQRT_2();
    let mut out = [Complex::<T>::zero(); FOCK_DIM];
    for element in FockBasisElement::ALL {
        let c = state.amps[element.index()];
        if c.is_zero() {
            continue;
        }
        let (i, j) = (element.lo as usize, element.hi as usize);
        let scale = c * ket_factor::<T>(element);
        for k in 0..MODE_COUNT {
            let uk = u.m[k][i];
            if uk.is_zero() {
                continue;
            }
            for l in 0..MODE_COUNT {
                let ul = u.m[l][j];
                if ul.is_zero() {
                    continue;
                }
                // a†_k a†_l |0⟩ = |{k,l}⟩ / k({k,l}); bunched outputs pick up √2.
                let mut term = scale * uk * ul;
                if k == l {
                    term = term * sqrt2;
                }
                out[FockBasisElement::from_mode_indices(k, l).index()] += term;
            }
        }
    }
    Ok(TwoPhotonState::from_amps_unchecked(out))
}

/// Projectively measures the polarization of the single photon on `side`.
///
/// Samples H/V by the Born rule and returns the outcome together with the
/// normalized post-measurement state (the measured photon collapsed into the
/// outcome mode; the partner photon's state collapses accordingly).
pub fn measure_polarization<T: Real, R: Rng + ?Sized>(
    state: &TwoPhotonState<T>,
    side: Spatial,
    rng: &mut R,
) -> Result<(Polarization, TwoPhotonState<T>)> {
    state.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;
    if state.photons_on(side) != Some(1) {
        return Err(Error::UnsupportedMeasurement { side });
    }

    let mode_h = OpticalMode::new(side, Polarization::H);
    let p_h: T = FockBasisElement::ALL
        .iter()
        .filter(|e| e.contains(mode_h))
        .map(|e| state.probability_of(*e))
        .sum();

    let outcome = if rng.gen::<f64>() < as_f64(p_h) {
        Polarization::H
    } else {
        Polarization::V
    };

    let keep = OpticalMode::new(side, outcome);
    let mut amps = [Complex::zero(); FOCK_DIM];
    let mut kept_norm_sqr = T::zero();
    for element in FockBasisElement::ALL {
        if element.contains(keep) {
            let a = state.amplitude(element);
            amps[element.index()] = a;
            kept_norm_sqr += a.norm_sqr();
        }
    }
    let scale = Complex::new(kept_norm_sqr.sqrt().recip(), T::zero());
    for a in &mut amps {
        *a = *a * scale;
    }
    Ok((outcome, TwoPhotonState::from_amps_unchecked(amps)))
}

/// Swaps the photon on `side` (which must be in a definite polarization over
/// the state's support, e.g. right after a measurement) for a fresh photon of
/// polarization `new`. Amplitudes are carried over unchanged.
pub fn replace_photon<T: Real>(
    state: &TwoPhotonState<T>,
    side: Spatial,
    new: Polarization,
) -> Result<TwoPhotonState<T>> {
    state.check_normalized(scaled_tol::<T>(tol::PIPELINE))?;
    if state.photons_on(side) != Some(1) {
        return Err(Error::UnsupportedMeasurement { side });
    }

    let mut current: Option<Polarization> = None;
    for element in FockBasisElement::ALL {
        if as_f64(state.probability_of(element)) <= SUPPORT_EPS {
            continue;
        }
        let pol = element
            .polarization_on(side)
            .ok_or(Error::UnsupportedMeasurement { side })?;
        match current {
            None => current = Some(pol),
            Some(seen) if seen != pol => {
                return Err(Error::IndefinitePolarization { side });
            }
            Some(_) => {}
        }
    }
    let current = current.ok_or(Error::IndefinitePolarization { side })?;
    if current == new {
        return Ok(state.clone());
    }

    let old_mode = OpticalMode::new(side, current);
    let new_mode = OpticalMode::new(side, new);
    let mut amps = [Complex::zero(); FOCK_DIM];
    for element in FockBasisElement::ALL {
        let a = state.amplitude(element);
        if as_f64(a.norm_sqr()) <= SUPPORT_EPS {
            continue;
        }
        let (m1, m2) = element.modes();
        let partner = if m1 == old_mode { m2 } else { m1 };
        amps[FockBasisElement::new(new_mode, partner).index()] = a;
    }
    Ok(TwoPhotonState::from_amps_unchecked(amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    type State = TwoPhotonState<f64>;

    fn mode(s: Spatial, p: Polarization) -> OpticalMode {
        OpticalMode::new(s, p)
    }

    fn hwp_travel(angle: f64) -> ModeUnitary<f64> {
        half_wave_plate_unitary(Spatial::Side2, angle)
    }

    #[test]
    fn canonical_element_enumeration_is_stable() {
        let expected = [
            "{1H,1H}", "{1H,1V}", "{1H,2H}", "{1H,2V}", "{1V,1V}", "{1V,2H}", "{1V,2V}",
            "{2H,2H}", "{2H,2V}", "{2V,2V}",
        ];
        for (i, element) in FockBasisElement::ALL.iter().enumerate() {
            assert_eq!(element.index(), i);
            assert_eq!(FockBasisElement::from_index(i), *element);
            assert_eq!(format!("{element:?}"), expected[i]);
        }
    }

    #[test]
    fn mode_ordering_is_stable() {
        for (i, m) in OpticalMode::ALL.iter().enumerate() {
            assert_eq!(m.index(), i);
            assert_eq!(OpticalMode::from_index(i), *m);
        }
    }

    #[test]
    fn chi3_is_parallel_h_product() {
        let state: State = mixed_basis_state(MixedBasisSymbol::Chi3);
        let hh = FockBasisElement::new(
            mode(Spatial::Side1, Polarization::H),
            mode(Spatial::Side2, Polarization::H),
        );
        assert_abs_diff_eq!(state.amplitude(hh).re, 1.0, epsilon = tol::CONSTRUCTION);
        assert_abs_diff_eq!(state.probability_of(hh), 1.0, epsilon = tol::CONSTRUCTION);
    }

    #[test]
    fn chi1_amplitude_signs_match_singlet() {
        let state: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        let hv = FockBasisElement::new(
            mode(Spatial::Side1, Polarization::H),
            mode(Spatial::Side2, Polarization::V),
        );
        let vh = FockBasisElement::new(
            mode(Spatial::Side1, Polarization::V),
            mode(Spatial::Side2, Polarization::H),
        );
        assert_abs_diff_eq!(
            state.amplitude(hv).re,
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = tol::CONSTRUCTION
        );
        assert_abs_diff_eq!(
            state.amplitude(vh).re,
            -std::f64::consts::FRAC_1_SQRT_2,
            epsilon = tol::CONSTRUCTION
        );
    }

    #[test]
    fn mixed_basis_is_orthonormal() {
        for a in MixedBasisSymbol::ALL {
            for b in MixedBasisSymbol::ALL {
                let sa: State = mixed_basis_state(a);
                let sb = mixed_basis_state(b);
                let gram = sa.overlap(&sb);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram.re, expected, epsilon = tol::CONSTRUCTION);
                assert_abs_diff_eq!(gram.im, 0.0, epsilon = tol::CONSTRUCTION);
            }
        }
    }

    #[test]
    fn overlap_probability_examples() {
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        let chi2 = mixed_basis_state(MixedBasisSymbol::Chi2);
        assert_abs_diff_eq!(
            overlap_probability(&chi1, &chi1).unwrap(),
            1.0,
            epsilon = tol::CONSTRUCTION
        );
        assert_abs_diff_eq!(
            overlap_probability(&chi1, &chi2).unwrap(),
            0.0,
            epsilon = tol::CONSTRUCTION
        );
        let scrambled =
            apply_mode_unitary(&chi1, &hwp_travel(std::f64::consts::FRAC_PI_8)).unwrap();
        assert_abs_diff_eq!(
            overlap_probability(&scrambled, &chi2).unwrap(),
            0.5,
            epsilon = tol::PIPELINE
        );
    }

    #[test]
    fn overlap_probability_rejects_unnormalized_input() {
        let mut amps = [num_complex::Complex::new(0.0, 0.0); FOCK_DIM];
        amps[0] = num_complex::Complex::new(0.5, 0.0);
        let bad = State::from_amps_unchecked(amps);
        let good: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        assert!(matches!(
            overlap_probability(&bad, &good),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn state_constructor_rejects_bad_norm() {
        let amps = [num_complex::Complex::new(0.9, 0.0); FOCK_DIM];
        assert!(matches!(State::new(amps), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn beam_splitter_is_unitary() {
        let bs: ModeUnitary<f64> = beam_splitter_unitary();
        assert!(bs.unitarity_deviation() <= tol::CONSTRUCTION);
    }

    #[test]
    fn mode_unitary_rejects_non_unitary_matrix() {
        let mut m = [[num_complex::Complex::new(0.0, 0.0); 4]; 4];
        m[0][0] = num_complex::Complex::new(2.0, 0.0);
        assert!(matches!(
            ModeUnitary::<f64>::new(m),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn identity_preserves_states() {
        for symbol in MixedBasisSymbol::ALL {
            let state: State = mixed_basis_state(symbol);
            let out = apply_mode_unitary(&state, &ModeUnitary::identity()).unwrap();
            assert!(state.fidelity(&out) > 1.0 - tol::CONSTRUCTION);
        }
    }

    /// Probability that the two photons exit on different sides.
    fn split_probability(state: &State) -> f64 {
        FockBasisElement::ALL
            .iter()
            .filter(|e| e.photons_on(Spatial::Side1) == 1)
            .map(|e| state.probability_of(*e))
            .sum()
    }

    #[test]
    fn hong_ou_mandel_bunching_and_antibunching() {
        let bs = beam_splitter_unitary();
        for symbol in [MixedBasisSymbol::Chi3, MixedBasisSymbol::Chi4] {
            let out = apply_mode_unitary(&mixed_basis_state(symbol), &bs).unwrap();
            assert_abs_diff_eq!(split_probability(&out), 0.0, epsilon = tol::CONSTRUCTION);
        }
        let psi_minus = apply_mode_unitary(&mixed_basis_state(MixedBasisSymbol::Chi1), &bs).unwrap();
        assert_abs_diff_eq!(split_probability(&psi_minus), 1.0, epsilon = tol::CONSTRUCTION);
        // Ψ⁺ bunches with opposite polarizations on one side.
        let psi_plus = apply_mode_unitary(&mixed_basis_state(MixedBasisSymbol::Chi2), &bs).unwrap();
        assert_abs_diff_eq!(split_probability(&psi_plus), 0.0, epsilon = tol::CONSTRUCTION);
        let bunched_hv: f64 = [
            FockBasisElement::new(mode(Spatial::Side1, Polarization::H), mode(Spatial::Side1, Polarization::V)),
            FockBasisElement::new(mode(Spatial::Side2, Polarization::H), mode(Spatial::Side2, Polarization::V)),
        ]
        .iter()
        .map(|e| psi_plus.probability_of(*e))
        .sum();
        assert_abs_diff_eq!(bunched_hv, 1.0, epsilon = tol::CONSTRUCTION);
    }

    #[test]
    fn hwp_at_zero_maps_chi1_to_chi2_up_to_phase() {
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        let out = apply_mode_unitary(&chi1, &hwp_travel(0.0)).unwrap();
        let chi2 = mixed_basis_state(MixedBasisSymbol::Chi2);
        assert!(out.fidelity(&chi2) > 1.0 - tol::CONSTRUCTION);
    }

    #[test]
    fn hadamard_plate_probabilities_on_chi1() {
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        let out = apply_mode_unitary(&chi1, &hwp_travel(std::f64::consts::FRAC_PI_8)).unwrap();
        let expected = [0.0, 0.5, 0.25, 0.25];
        for (symbol, want) in MixedBasisSymbol::ALL.iter().zip(expected) {
            let p = out.fidelity(&mixed_basis_state(*symbol));
            assert_abs_diff_eq!(p, want, epsilon = tol::CONSTRUCTION);
        }
    }

    #[test]
    fn hadamard_plate_is_an_involution() {
        let h: ModeUnitary<f64> = hwp_travel(std::f64::consts::FRAC_PI_8);
        let squared = h.then(&h);
        let identity = ModeUnitary::<f64>::identity();
        for i in 0..MODE_COUNT {
            for j in 0..MODE_COUNT {
                let diff = squared.entry(i, j) - identity.entry(i, j);
                assert!(diff.norm() <= tol::CONSTRUCTION);
            }
        }
    }

    #[test]
    fn unitary_composition_matches_sequential_application() {
        let bs = beam_splitter_unitary();
        let h = hwp_travel(std::f64::consts::FRAC_PI_8);
        let combined = h.then(&bs);
        for symbol in MixedBasisSymbol::ALL {
            let state: State = mixed_basis_state(symbol);
            let sequential =
                apply_mode_unitary(&apply_mode_unitary(&state, &h).unwrap(), &bs).unwrap();
            let direct = apply_mode_unitary(&state, &combined).unwrap();
            for element in FockBasisElement::ALL {
                let diff = sequential.amplitude(element) - direct.amplitude(element);
                assert!(diff.norm() <= tol::PIPELINE);
            }
        }
    }

    #[test]
    fn norm_preserved_through_device_pipelines() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for symbol in MixedBasisSymbol::ALL {
            let mut state: State = mixed_basis_state(symbol);
            for _ in 0..10 {
                let u = if rng.gen::<bool>() {
                    beam_splitter_unitary()
                } else {
                    half_wave_plate_unitary(
                        if rng.gen::<bool>() { Spatial::Side1 } else { Spatial::Side2 },
                        rng.gen::<f64>() * std::f64::consts::PI,
                    )
                };
                state = apply_mode_unitary(&state, &u).unwrap();
                assert_abs_diff_eq!(state.norm_sqr(), 1.0, epsilon = tol::PIPELINE);
            }
        }
    }

    #[test]
    fn measurement_on_chi3_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let chi3: State = mixed_basis_state(MixedBasisSymbol::Chi3);
        for _ in 0..32 {
            let (outcome, collapsed) = measure_polarization(&chi3, Spatial::Side2, &mut rng).unwrap();
            assert_eq!(outcome, Polarization::H);
            // Home photon stays horizontal.
            assert_eq!(
                collapsed.photons_on(Spatial::Side1),
                Some(1),
            );
            assert!(collapsed.fidelity(&chi3) > 1.0 - tol::PIPELINE);
        }
    }

    #[test]
    fn measurement_on_chi1_anticorrelates_home_photon() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        for _ in 0..64 {
            let (outcome, collapsed) = measure_polarization(&chi1, Spatial::Side2, &mut rng).unwrap();
            let home = OpticalMode::new(Spatial::Side1, outcome.opposite());
            let travel = OpticalMode::new(Spatial::Side2, outcome);
            let p = collapsed.probability_of(FockBasisElement::new(home, travel));
            assert_abs_diff_eq!(p, 1.0, epsilon = tol::PIPELINE);
        }
    }

    #[test]
    fn measurement_frequencies_follow_born_rule() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        let trials = 100_000;
        let mut h_count = 0u64;
        for _ in 0..trials {
            let (outcome, _) = measure_polarization(&chi1, Spatial::Side2, &mut rng).unwrap();
            if outcome == Polarization::H {
                h_count += 1;
            }
        }
        let freq = h_count as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "H frequency {freq}");
    }

    #[test]
    fn measurement_rejects_wrong_occupation() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        // Both photons bunched on Side1: zero photons on Side2, two on Side1.
        let bunched: State = State::basis_element(FockBasisElement::new(
            mode(Spatial::Side1, Polarization::H),
            mode(Spatial::Side1, Polarization::V),
        ));
        assert!(matches!(
            measure_polarization(&bunched, Spatial::Side2, &mut rng),
            Err(Error::UnsupportedMeasurement { side: Spatial::Side2 })
        ));
        assert!(matches!(
            measure_polarization(&bunched, Spatial::Side1, &mut rng),
            Err(Error::UnsupportedMeasurement { side: Spatial::Side1 })
        ));
    }

    #[test]
    fn replace_photon_requires_definite_polarization() {
        let chi1: State = mixed_basis_state(MixedBasisSymbol::Chi1);
        assert!(matches!(
            replace_photon(&chi1, Spatial::Side2, Polarization::H),
            Err(Error::IndefinitePolarization { .. })
        ));
        let chi3: State = mixed_basis_state(MixedBasisSymbol::Chi3);
        let swapped = replace_photon(&chi3, Spatial::Side2, Polarization::V).unwrap();
        let hv = FockBasisElement::new(
            mode(Spatial::Side1, Polarization::H),
            mode(Spatial::Side2, Polarization::V),
        );
        assert_abs_diff_eq!(swapped.probability_of(hv), 1.0, epsilon = tol::CONSTRUCTION);
    }

    #[test]
    fn symbol_partner_and_bits() {
        use MixedBasisSymbol::*;
        assert_eq!(Chi1.partner(), Chi2);
        assert_eq!(Chi3.partner(), Chi4);
        assert_eq!(Chi4.partner(), Chi3);
        assert_eq!(Chi1.bits(), (false, false));
        assert_eq!(Chi4.bits(), (true, true));
        assert_eq!(Chi1.to_string(), "chi1");
    }
}
