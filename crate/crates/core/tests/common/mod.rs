//! Independent brute-force oracle for the two-photon optics.
//!
//! States are represented as symmetric tensors on C⁴ ⊗ C⁴ (ordered photon
//! slots), evolved by U ⊗ U, and read out as occupation-pattern
//! probabilities. This route shares no code with the library's
//! multiset-indexed Fock algebra, so agreement between the two is a real
//! cross-check.

use num_complex::Complex;

pub type C64 = Complex<f64>;

const RT2_INV: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Symmetric coefficient tensor c[a][b] with c[a][b] = c[b][a].
#[derive(Debug, Clone)]
pub struct TensorState {
    pub c: [[C64; 4]; 4],
}

impl TensorState {
    pub fn zero() -> Self {
        TensorState {
            c: [[C64::new(0.0, 0.0); 4]; 4],
        }
    }

    /// Normalized state with one photon in mode `a` and one in mode `b`.
    pub fn pair_ket(a: usize, b: usize) -> Self {
        let mut s = Self::zero();
        if a == b {
            s.c[a][a] = C64::new(1.0, 0.0);
        } else {
            s.c[a][b] = C64::new(RT2_INV, 0.0);
            s.c[b][a] = C64::new(RT2_INV, 0.0);
        }
        s
    }

    /// Real-coefficient superposition of states.
    pub fn superpose(terms: &[(f64, TensorState)]) -> Self {
        let mut s = Self::zero();
        for (w, t) in terms {
            for i in 0..4 {
                for j in 0..4 {
                    s.c[i][j] += t.c[i][j] * *w;
                }
            }
        }
        s
    }

    /// Evolution by the mode map `u` on both slots: c' = U c Uᵀ.
    pub fn apply(&self, u: &[[C64; 4]; 4]) -> Self {
        let mut out = Self::zero();
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for (ap, row) in self.c.iter().enumerate() {
                    for (bp, cell) in row.iter().enumerate() {
                        acc += u[a][ap] * u[b][bp] * cell;
                    }
                }
                out.c[a][b] = acc;
            }
        }
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        self.c
            .iter()
            .flatten()
            .zip(other.c.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Born probability of finding the photons in modes {i, j} (unordered).
    pub fn pattern_probability(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.c[i][i].norm_sqr()
        } else {
            self.c[i][j].norm_sqr() + self.c[j][i].norm_sqr()
        }
    }

    /// Amplitude on the normalized occupation ket {i, j} of the multiset
    /// basis (√2·c_ij for distinct modes, c_ii for bunched ones).
    pub fn occupation_amplitude(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.c[i][i]
        } else {
            (self.c[i][j] + self.c[j][i]) * C64::new(RT2_INV, 0.0)
        }
    }
}

/// Mode indices: 0 = Side1 H, 1 = Side1 V, 2 = Side2 H, 3 = Side2 V.
pub fn chi(symbol: usize) -> TensorState {
    match symbol {
        1 => TensorState::superpose(&[
            (RT2_INV, TensorState::pair_ket(0, 3)),
            (-RT2_INV, TensorState::pair_ket(1, 2)),
        ]),
        2 => TensorState::superpose(&[
            (RT2_INV, TensorState::pair_ket(0, 3)),
            (RT2_INV, TensorState::pair_ket(1, 2)),
        ]),
        3 => TensorState::pair_ket(0, 2),
        4 => TensorState::pair_ket(1, 3),
        _ => panic!("symbol out of range"),
    }
}

/// The 50:50 beam splitter in the same real convention as the library.
pub fn bs_matrix() -> [[C64; 4]; 4] {
    let r = C64::new(RT2_INV, 0.0);
    let z = C64::new(0.0, 0.0);
    [
        [r, z, r, z],
        [z, r, z, r],
        [r, z, -r, z],
        [z, r, z, -r],
    ]
}

/// Half-wave plate at fast-axis `angle` on one side (0 = Side1, 1 = Side2).
pub fn hwp_matrix(side: usize, angle: f64) -> [[C64; 4]; 4] {
    let mut u = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in u.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    let h = 2 * side;
    let v = h + 1;
    let c = C64::new((2.0 * angle).cos(), 0.0);
    let s = C64::new((2.0 * angle).sin(), 0.0);
    u[h][h] = c;
    u[h][v] = s;
    u[v][h] = s;
    u[v][v] = -c;
    u
}

/// Detection-class probabilities of the discriminator for a given input:
/// `[chi1, chi2, chi3, chi4, invalid]` where `invalid` is the
/// split-identical-polarization class.
pub fn discriminator_class_probabilities(input: &TensorState) -> [f64; 5] {
    let after = input.apply(&bs_matrix());
    let split_opposite = after.pattern_probability(0, 3) + after.pattern_probability(1, 2);
    let bunched_hv = after.pattern_probability(0, 1) + after.pattern_probability(2, 3);
    let double_h = after.pattern_probability(0, 0) + after.pattern_probability(2, 2);
    let double_v = after.pattern_probability(1, 1) + after.pattern_probability(3, 3);
    let split_same = after.pattern_probability(0, 2) + after.pattern_probability(1, 3);
    [split_opposite, bunched_hv, double_h, double_v, split_same]
}

/// Mixed-basis Born probabilities |⟨χ_k|ψ⟩|² straight from overlaps.
pub fn mixed_basis_overlaps(input: &TensorState) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (k, slot) in p.iter_mut().enumerate() {
        *slot = chi(k + 1).overlap(input).norm_sqr();
    }
    p
}
