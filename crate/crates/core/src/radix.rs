//! Mixed-radix indexing with coordinate 0 least significant.

pub fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

pub fn decode(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(idx % base);
        idx /= base;
    }
    out
}

pub fn decode_into(mut idx: usize, base: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = idx % base;
        idx /= base;
    }
}

pub fn encode(digits: &[usize], base: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * base + d)
}

/// Stride of coordinate `i` in a table over `base^n` entries.
pub fn stride(base: usize, i: usize) -> usize {
    base.pow(i as u32)
}

/// Odometer increment; returns false after wrapping past the last tuple.
pub fn increment(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}
