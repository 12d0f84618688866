//! Scalar alphabets indexed by feedback bits.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Wideband amplitude alphabet used for the beam-combining coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeAlphabet {
    /// `2^B_p` levels: `√2^{-k}` for `k = 0..2^B_p - 2`, then `0`.
    /// At `B_p = 3` this is the standard 3-bit wideband amplitude table.
    #[default]
    Extended,
    /// `B_p` levels: `√2^0, √2^{-1}, …, √2^{-(B_p-2)}, 0`. Falls back to
    /// [`AmplitudeAlphabet::Extended`] below two bits.
    Compact,
}

impl AmplitudeAlphabet {
    pub fn levels(self, bits: u32) -> Vec<f64> {
        match self {
            AmplitudeAlphabet::Compact if bits >= 2 => decaying_levels(bits as usize - 1),
            _ => {
                if bits == 0 {
                    // no amplitude feedback: every coefficient keeps unit amplitude
                    return vec![1.0];
                }
                decaying_levels((1usize << bits) - 1)
            }
        }
    }

    pub fn len(self, bits: u32) -> usize {
        match self {
            AmplitudeAlphabet::Compact if bits >= 2 => bits as usize,
            _ => 1usize << bits,
        }
    }
}

/// `count` nonzero levels `√2^{-k}` followed by a zero level.
fn decaying_levels(count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count).map(|k| 2f64.powf(-(k as f64) / 2.0)).collect();
    out.push(0.0);
    out
}

/// Unit-modulus phase `exp(j 2π n / 2^bits)`.
pub fn uniform_phase(index: u64, bits: u32) -> Complex64 {
    if index == 0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::from_polar(1.0, uniform_angle(index, bits))
}

/// Angle `2π n / 2^bits` in radians.
pub fn uniform_angle(index: u64, bits: u32) -> f64 {
    2.0 * PI * index as f64 / 2f64.powi(bits as i32)
}

/// Co-phasing alphabet with `2^B_c` uniform phases.
pub fn cophase_levels(bits: u32) -> Vec<Complex64> {
    (0..1u64 << bits).map(|n| uniform_phase(n, bits)).collect()
}
