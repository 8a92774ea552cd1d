/// smallest power of two that is at least `n` (1 for 0).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// base-2 logarithm of a power of two.
pub fn log2_exact(n: usize) -> Option<u32> {
    if n.is_power_of_two() {
        Some(n.trailing_zeros())
    } else {
        None
    }
}

/// ceil(log2(n)) for n >= 1.
pub fn ceil_log2(n: usize) -> u32 {
    next_pow2(n).trailing_zeros()
}

/// euclidean remainder.
pub fn modulo(a: i64, m: i64) -> i64 {
    a.rem_euclid(m)
}
