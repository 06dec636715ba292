//! Constant-modulus phase alphabets for low-resolution phase shifters.

use std::f64::consts::TAU;

use crate::error::CodebookError;
use crate::linalg::C64;

/// `L = 2^Q` equally spaced phases of magnitude `δ = √(P/(K N))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCodebook {
    q_bits: u32,
    magnitude: f64,
    symbols: Vec<C64>,
}

/// Unit phasor `e^{j 2π k / L}`, exact on the quarter-turn grid.
fn unit_phase(k: usize, l: usize) -> C64 {
    if (4 * k) % l == 0 {
        match (4 * k / l) % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    } else {
        C64::from_polar(1.0, TAU * k as f64 / l as f64)
    }
}

pub fn build_codebook(
    q_bits: u32,
    tx_power: f64,
    rf_chains: usize,
    n_antennas: usize,
) -> Result<PhaseCodebook, CodebookError> {
    if q_bits == 0 || q_bits > 16 {
        return Err(CodebookError::BadParameter("q_bits"));
    }
    if !(tx_power.is_finite() && tx_power > 0.0) {
        return Err(CodebookError::BadParameter("tx_power"));
    }
    if rf_chains == 0 {
        return Err(CodebookError::BadParameter("rf_chains"));
    }
    if n_antennas == 0 {
        return Err(CodebookError::BadParameter("n_antennas"));
    }
    let magnitude = (tx_power / (rf_chains * n_antennas) as f64).sqrt();
    let l = 1usize << q_bits;
    let symbols = (0..l).map(|k| unit_phase(k, l) * magnitude).collect();
    Ok(PhaseCodebook {
        q_bits,
        magnitude,
        symbols,
    })
}

impl PhaseCodebook {
    pub fn q_bits(&self) -> u32 {
        self.q_bits
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    /// Symbol magnitude δ.
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn symbol(&self, l: usize) -> C64 {
        self.symbols[l]
    }

    /// Gram entry `S[i][l] = conj(s_i) · s_l`.
    pub fn gram(&self, i: usize, l: usize) -> C64 {
        self.symbols[i].conj() * self.symbols[l]
    }

    /// Index of the symbol within `tol` of `value`.
    pub fn index_of(&self, value: C64, tol: f64) -> Option<usize> {
        self.symbols.iter().position(|s| (s - value).norm() <= tol)
    }

    /// Maps a one-hot selector to its symbol, or zero for an empty selector.
    pub fn decode_entry(&self, selector: &[bool]) -> Result<C64, CodebookError> {
        if selector.len() != self.size() {
            return Err(CodebookError::Length {
                got: selector.len(),
                expected: self.size(),
            });
        }
        let ones = selector.iter().filter(|&&b| b).count();
        match ones {
            0 => Ok(C64::new(0.0, 0.0)),
            1 => Ok(self.symbols[selector.iter().position(|&b| b).unwrap()]),
            _ => Err(CodebookError::MultipleSelection { ones }),
        }
    }
}
