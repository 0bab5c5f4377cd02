//! Closed-form estimates and statistics used by the experiments.

mod sigmoid;
mod stats;

pub use sigmoid::{fit_sigmoid, sigmoid, SigmoidFit};
pub use stats::{aggregate, Moments, TrialOutcome, TrialStats};

/// Theoretical load thresholds of standard cuckoo hashing.
pub mod thresholds {
    /// 3-ary cuckoo hashing, one key per cell.
    pub const C3: f64 = 0.917935;
    /// 4-ary cuckoo hashing, one key per cell.
    pub const C4: f64 = 0.976770;

    /// `c*_{2,ell} / ell` for two choices and cells of capacity `ell`.
    pub const C2_ELL: [(u32, f64); 7] = [
        (2, 0.897012),
        (3, 0.959154),
        (4, 0.980370),
        (5, 0.989551),
        (8, 0.997853),
        (10, 0.999143),
        (16, 0.999928),
    ];

    /// Normalized two-choice threshold for capacity `ell`, if tabulated.
    pub fn c2_normalized(ell: u32) -> Option<f64> {
        C2_ELL.iter().find(|&&(l, _)| l == ell).map(|&(_, c)| c)
    }
}

fn ln_factorial(j: u64) -> f64 {
    (2..=j).map(|i| (i as f64).ln()).sum()
}

/// Natural log of `Pr(Po(mean) <= cap)`.
///
/// Below the mean the lower sum is small and is accumulated directly in log
/// space; above it the upper tail is summed instead, so probabilities close
/// to one keep full relative precision in `1 - p`.
fn poisson_cdf_ln(mean: f64, cap: u64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let ln_term_at = |j: u64| -mean + j as f64 * ln_mean - ln_factorial(j);
    if (cap as f64) < mean {
        // term_i = e^-mean mean^i / i!, i = 0..=cap, as a running log-sum-exp.
        let mut ln_term = -mean;
        let mut ln_sum = ln_term;
        for i in 1..=cap {
            ln_term += ln_mean - (i as f64).ln();
            let (hi, lo) = if ln_term > ln_sum {
                (ln_term, ln_sum)
            } else {
                (ln_sum, ln_term)
            };
            ln_sum = hi + (lo - hi).exp().ln_1p();
        }
        ln_sum.min(0.0)
    } else {
        // Terms beyond cap decrease geometrically (ratio mean / (i + 1) < 1).
        let first = cap + 1;
        let mut term = ln_term_at(first).exp();
        let mut tail = 0.0;
        let mut i = first;
        while term > 0.0 && term > tail * 1e-18 {
            tail += term;
            i += 1;
            term *= mean / i as f64;
        }
        (-tail.min(1.0)).ln_1p()
    }
}

/// Probability that none of `t` pages overflows when each page receives a
/// Poisson(`c * s`) number of keys and holds `s * ell` of them:
/// `Pr(Po(c s) <= s ell)^t`. With `ell = 1` this is the estimate for tables
/// without backup choices; larger `ell` is an extension of it.
pub fn poisson_success_estimate(c: f64, s: u32, t: u32, ell: u32) -> f64 {
    assert!(c > 0.0 && s >= 1 && t >= 1 && ell >= 1);
    let mean = c * f64::from(s);
    let cap = u64::from(s) * u64::from(ell);
    (f64::from(t) * poisson_cdf_ln(mean, cap)).exp()
}

/// Bounds for observing `a` successes in a row when the failure probability
/// is at least `p`: returns `((1-p)^a, exp(-p a))`.
pub fn significance_bound(a: u64, p: f64) -> (f64, f64) {
    assert!(a >= 1 && p > 0.0 && p < 1.0);
    let exact = (a as f64 * (-p).ln_1p()).exp();
    (exact, (-p * a as f64).exp())
}

/// Expected page requests of a successful search that probes the primary
/// page first, when a fraction `rp` of keys is on its primary page.
pub fn expected_page_requests(rp: f64) -> f64 {
    assert!((0.0..=1.0).contains(&rp));
    rp + (1.0 - rp) * 2.0
}

/// Expected page requests of an unsuccessful search with per-page Bloom
/// filters of one bit per cell and `hashes` hash functions, given the
/// relative frequency of each `w` value (index = `w`). The false positive
/// rate of a page is bounded by `min(1, kp w / s)^hashes`.
pub fn unsuccessful_search_requests(w_histogram: &[f64], kp: u32, s: u32, hashes: u32) -> f64 {
    1.0 + w_histogram
        .iter()
        .enumerate()
        .map(|(w, &freq)| {
            let fill = (f64::from(kp) * w as f64 / f64::from(s)).min(1.0);
            freq * fill.powi(hashes as i32)
        })
        .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_small_case() {
        // Direct sum: e^{-0.5} (1 + 0.5).
        let direct = (-0.5f64).exp() * 1.5;
        assert!((poisson_success_estimate(0.5, 1, 1, 1) - direct).abs() < 1e-12);
        assert!((direct - 0.909796).abs() < 1e-6);
    }

    #[test]
    fn poisson_matches_naive_summation() {
        for &(c, s) in &[(0.9, 10u32), (0.7, 50), (1.2, 30), (0.3, 5)] {
            let mean = c * f64::from(s);
            let mut term = (-mean).exp();
            let mut sum = term;
            for i in 1..=s {
                term *= mean / f64::from(i);
                sum += term;
            }
            assert!((poisson_success_estimate(c, s, 1, 1) - sum).abs() < 1e-12);
            assert!((poisson_success_estimate(c, s, 7, 1) - sum.powi(7)).abs() < 1e-12);
        }
    }

    #[test]
    fn poisson_large_pages_do_not_underflow() {
        let p = poisson_success_estimate(0.95, 100_000, 10, 1);
        assert!(p > 0.999 && p <= 1.0);
        let q = poisson_success_estimate(0.95, 100, 10_000, 1);
        assert!((0.0..1e-10).contains(&q));
    }

    #[test]
    fn poisson_monotone_in_load_and_pages() {
        for s in [10u32, 100, 1000] {
            let mut prev = 1.0;
            for i in 1..=40 {
                let p = poisson_success_estimate(0.5 + 0.0125 * f64::from(i), s, 100, 1);
                assert!(p <= prev + 1e-15, "s={s} i={i}: {p} > {prev}");
                prev = p;
            }
            let mut prev = 1.0;
            for t in [1u32, 2, 10, 100, 1000, 100_000] {
                let p = poisson_success_estimate(0.9, s, t, 1);
                assert!(p <= prev + 1e-15);
                prev = p;
            }
            assert!(prev < 0.5);
        }
    }

    #[test]
    fn significance_examples() {
        let (exact, bound) = significance_bound(1_000_000, 1e-5);
        assert!((bound - 4.54e-5).abs() < 1e-7);
        assert!(exact <= bound);
        let (exact, _) = significance_bound(1, 0.3);
        assert!((exact - 0.7).abs() < 1e-15);
        let (_, bound) = significance_bound(10, 1e-300);
        assert!((bound - 1.0).abs() < 1e-12);
        for a in [1u64, 10, 1000, 1_000_000] {
            for p in [1e-7, 1e-3, 0.1, 0.9] {
                let (e, b) = significance_bound(a, p);
                assert!(e <= b);
            }
        }
    }

    #[test]
    fn page_request_formulas() {
        assert_eq!(expected_page_requests(1.0), 1.0);
        assert_eq!(expected_page_requests(0.0), 2.0);
        assert_eq!(expected_page_requests(0.75), 1.25);
        let rp = thresholds::C3 / 0.95;
        let ex = expected_page_requests(rp);
        assert!(ex < 1.04 && ex > 1.03);
        let ex = expected_page_requests(0.974);
        assert!((ex - 1.026).abs() < 1e-12);
        let mut prev = 2.0;
        for i in 0..=100 {
            let e = expected_page_requests(f64::from(i) / 100.0);
            assert!((1.0..=2.0).contains(&e) && e <= prev);
            prev = e;
        }
    }

    #[test]
    fn unsuccessful_search_examples() {
        assert_eq!(unsuccessful_search_requests(&[1.0], 3, 1000, 3), 1.0);
        let mut hist = vec![0.0; 26];
        hist[25] = 1.0;
        let ex = unsuccessful_search_requests(&hist, 3, 1000, 3);
        assert!((ex - 1.0 - 0.075f64.powi(3)).abs() < 1e-15);
        // Saturated pages count as a certain second request.
        let mut hist = vec![0.0; 1001];
        hist[1000] = 1.0;
        assert_eq!(unsuccessful_search_requests(&hist, 3, 1000, 3), 2.0);
    }

    #[test]
    fn threshold_lookup() {
        assert_eq!(thresholds::c2_normalized(10), Some(0.999143));
        assert_eq!(thresholds::c2_normalized(7), None);
    }
}
