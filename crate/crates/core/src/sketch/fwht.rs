use crate::{Error, Result};

/// In-place unnormalized Walsh–Hadamard transform (Sylvester ordering).
///
/// Applying it twice multiplies the input by its length.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let len = v.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "Hadamard transform length {len} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Returns `H·v` for the unnormalized Sylvester Hadamard matrix `H`.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// Entry `(i, j)` of the Sylvester Hadamard matrix, `(−1)^popcount(i & j)`.
pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
