//! Feedback-bit counts and search-space sizes.
//!
//! Sizes are exact integers and saturate at `u128::MAX` instead of wrapping.

/// `⌈log2 x⌉` for `x ≥ 1`.
pub fn ceil_log2(x: u128) -> u32 {
    assert!(x >= 1, "ceil_log2 of zero");
    if x == 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// Binomial coefficient, saturating.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc·(n−i) is divisible by (i+1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

pub fn pow2(bits: u64) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

fn mul(xs: &[u128]) -> u128 {
    xs.iter().try_fold(1u128, |a, &b| a.checked_mul(b)).unwrap_or(u128::MAX)
}

/// Bits spent on selecting `L` of `N` orthogonal beams plus their rotation.
pub fn dft_bits(b_v: u32, b_h: u32, ports: usize, beams: usize) -> u64 {
    b_v as u64 + b_h as u64 + ceil_log2(binomial(ports as u64, beams as u64).max(1)) as u64
}

/// Bits labelling the strongest of the `2L` beams.
pub fn strongest_beam_bits(beams: usize) -> u64 {
    ceil_log2(2 * beams as u128) as u64
}

/// Total bits of one Type-II report over `ports` ports per polarization.
pub fn type_ii_bits(b_v: u32, b_h: u32, b_p: u32, b_c: u32, ports: usize, beams: usize) -> u64 {
    dft_bits(b_v, b_h, ports, beams) + strongest_beam_bits(beams) + (2 * beams as u64 - 1) * (b_p + b_c) as u64
}

/// Codewords searched by one Type-II quantization.
pub fn type_ii_search_size(b_v: u32, b_h: u32, b_p: u32, b_c: u32, ports: usize, beams: usize) -> u128 {
    let two_l = 2 * beams as u128;
    mul(&[two_l, ports as u128, pow2((b_v + b_h) as u64), two_l - 1, pow2((b_p + b_c) as u64)])
}

/// Panel co-phasing candidates under sequential selection.
pub fn pa_search_size(line_panels: usize, b_lp: u32) -> u128 {
    mul(&[line_panels.saturating_sub(1) as u128, pow2(b_lp as u64)])
}

/// Bits of a line-panel report: one Type-II report per line panel plus the
/// panel co-phases.
#[allow(clippy::too_many_arguments)]
pub fn lp_bits(
    b_lp: u32,
    b_v: u32,
    b_h: u32,
    b_p: u32,
    b_c: u32,
    line_panels: usize,
    ports: usize,
    beams: usize,
) -> u64 {
    line_panels as u64 * type_ii_bits(b_v, b_h, b_p, b_c, ports, beams)
        + line_panels.saturating_sub(1) as u64 * b_lp as u64
}

/// Codewords searched by the two-stage line-panel quantization.
#[allow(clippy::too_many_arguments)]
pub fn lp_search_size(
    b_lp: u32,
    b_v: u32,
    b_h: u32,
    b_p: u32,
    b_c: u32,
    line_panels: usize,
    ports: usize,
    beams: usize,
) -> u128 {
    mul(&[line_panels as u128, type_ii_search_size(b_v, b_h, b_p, b_c, ports, beams)])
        .saturating_add(pa_search_size(line_panels, b_lp))
}

/// Size of the plain DFT grid for a `budget`-bit report.
pub fn dft_search_size(budget: u32) -> u128 {
    pow2(budget as u64)
}
