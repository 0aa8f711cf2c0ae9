//! Binomial coefficients and hypergeometric weights.

use statrs::function::gamma::ln_gamma;

/// `C(n, k)` exactly, or `None` on overflow.
pub(crate) fn choose_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        // r * (n-k+i) is divisible by i after the multiplication.
        r = r.checked_mul((n - k + i) as u128)? / i as u128;
    }
    Some(r)
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `C(a, b) / C(c, d)`, exact through integers when they fit in f64's
/// mantissa and through log-gamma otherwise.
pub(crate) fn choose_ratio(a: usize, b: usize, c: usize, d: usize) -> f64 {
    if b > a {
        return 0.0;
    }
    const EXACT: u128 = 1 << 53;
    match (choose_u128(a, b), choose_u128(c, d)) {
        (Some(x), Some(y)) if x < EXACT && y < EXACT => x as f64 / y as f64,
        _ => (ln_choose(a, b) - ln_choose(c, d)).exp(),
    }
}

/// Hypergeometric probability of `k` successes in `s` draws from `n`
/// items of which `m` are successes.
pub(crate) fn hypergeom_pmf(n: usize, m: usize, s: usize, k: usize) -> f64 {
    if k > m || k > s || s - k > n - m {
        return 0.0;
    }
    if let (Some(a), Some(b), Some(c)) =
        (choose_u128(m, k), choose_u128(n - m, s - k), choose_u128(n, s))
    {
        if let Some(num) = a.checked_mul(b) {
            if num < 1 << 100 {
                return num as f64 / c as f64;
            }
        }
    }
    (ln_choose(m, k) + ln_choose(n - m, s - k) - ln_choose(n, s)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(choose_u128(5, 2), Some(10));
        assert_eq!(choose_u128(5, 0), Some(1));
        assert_eq!(choose_u128(3, 4), Some(0));
        assert_eq!(choose_u128(60, 30), Some(118_264_581_564_861_424));
    }

    #[test]
    fn ratio_paths_agree() {
        let exact = choose_ratio(40, 10, 50, 10);
        let logs = (ln_choose(40, 10) - ln_choose(50, 10)).exp();
        assert!((exact - logs).abs() < 1e-12 * exact);
        assert_eq!(choose_ratio(2, 3, 5, 1), 0.0);
    }

    #[test]
    fn pmf_sums_to_one() {
        for (n, m, s) in [(10, 3, 4), (20, 20, 5), (7, 0, 3), (300, 40, 25)] {
            let total: f64 = (0..=s).map(|k| hypergeom_pmf(n, m, s, k)).sum();
            assert!((total - 1.0).abs() < 1e-12, "{n} {m} {s}: {total}");
        }
    }
}
