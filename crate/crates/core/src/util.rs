use alloc::vec::Vec;
use num_bigint::BigUint;

/// Base-2 logarithm of an arbitrarily large integer. Returns `-inf` for zero.
pub fn log2_biguint(value: &BigUint) -> f64 {
    let bits = value.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    // Keep the top 53 bits as a mantissa and add the dropped exponent back.
    let shift = bits.saturating_sub(53);
    let top = value >> shift;
    let mantissa = top.iter_u64_digits().next().unwrap_or(0) as f64;
    libm::log2(mantissa) + shift as f64
}

pub(crate) fn factorial(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::from(1u32), |acc, v| acc * v)
}

/// Advances `perm` to the next lexicographic permutation; false once exhausted.
pub(crate) fn next_permutation<T: Ord>(perm: &mut [T]) -> bool {
    if perm.len() < 2 {
        return false;
    }
    let mut i = perm.len() - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = perm.len() - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

pub(crate) fn is_permutation(values: &[usize], of: &[usize]) -> bool {
    let mut a: Vec<usize> = values.to_vec();
    let mut b: Vec<usize> = of.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

/// Normal-approximation 95% half-width for a binomial proportion.
pub(crate) fn binomial_half_width(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    1.959_963_984_540_054 * libm::sqrt(p * (1.0 - p) / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_exact_powers() {
        assert_eq!(log2_biguint(&BigUint::from(1u32)), 0.0);
        assert_eq!(log2_biguint(&(BigUint::from(1u32) << 200u32)), 200.0);
        let v = (BigUint::from(1u32) << 64u32) * 576u32;
        assert!((log2_biguint(&v) - (64.0 + libm::log2(576.0))).abs() < 1e-12);
    }

    #[test]
    fn permutations_are_enumerated_once() {
        let mut p = [1, 2, 3, 4];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, [4, 3, 2, 1]);
    }

    #[test]
    fn factorial_small() {
        assert_eq!(factorial(0), BigUint::from(1u32));
        assert_eq!(factorial(4), BigUint::from(24u32));
    }
}
