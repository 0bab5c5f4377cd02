//! Least-squares fit of `f(c; x, y) = 1 / (1 + exp(-(c - x) / y))` to
//! failure-rate data. The inflection point `x` estimates the load factor at
//! which the failure rate crosses one half.

use serde::{Deserialize, Serialize};

use crate::error::Error;

const MAX_ITERATIONS: usize = 10_000;
const STEP_TOLERANCE: f64 = 1e-10;
const MIN_DAMPING: f64 = 1e-30;

/// Logistic curve with midpoint `x` and scale `y`.
pub fn sigmoid(c: f64, x: f64, y: f64) -> f64 {
    1.0 / (1.0 + (-(c - x) / y).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmoidFit {
    /// Inflection point.
    pub x: f64,
    /// Scale (inverse slope).
    pub y: f64,
    /// Sum of squared residuals.
    pub sum_res: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub points: Vec<(f64, f64)>,
}

fn sum_squares(points: &[(f64, f64)], x: f64, y: f64) -> f64 {
    points
        .iter()
        .map(|&(c, l)| {
            let r = sigmoid(c, x, y) - l;
            r * r
        })
        .sum()
}

/// Fits the sigmoid by damped Gauss–Newton.
///
/// Starts at `x` = the `c` whose rate is closest to 0.5 and
/// `y = (max c - min c) / 10`. Each iteration solves the 2x2 normal
/// equations and halves the step until the residual sum decreases. Stops
/// once the accepted step is below `1e-10` or after 10^4 iterations.
///
/// Refuses data with fewer than four points or without rates on both sides
/// of one half.
pub fn fit_sigmoid(points: &[(f64, f64)]) -> Result<SigmoidFit, Error> {
    if points.len() < 4 {
        return Err(Error::Fit(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(c, l)| !c.is_finite() || !l.is_finite()) {
        return Err(Error::Fit("non-finite data point".into()));
    }
    if !points.iter().any(|&(_, l)| l < 0.5) || !points.iter().any(|&(_, l)| l > 0.5) {
        return Err(Error::Fit(
            "no transition: rates do not straddle 0.5".into(),
        ));
    }

    // Sorted copy so the result does not depend on input order.
    let mut data = points.to_vec();
    data.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let c_min = data.first().unwrap().0;
    let c_max = data.last().unwrap().0;
    let span = c_max - c_min;
    if span <= 0.0 {
        return Err(Error::Fit("all points share one load factor".into()));
    }

    let mut x = data
        .iter()
        .min_by(|a, b| (a.1 - 0.5).abs().total_cmp(&(b.1 - 0.5).abs()))
        .unwrap()
        .0;
    let mut y = span / 10.0;
    let mut ssr = sum_squares(&data, x, y);
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(c, l) in &data {
            let f = sigmoid(c, x, y);
            let r = f - l;
            let d = f * (1.0 - f);
            let jx = -d / y;
            let jy = -d * (c - x) / (y * y);
            a11 += jx * jx;
            a12 += jx * jy;
            a22 += jy * jy;
            g1 += jx * r;
            g2 += jy * r;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= f64::MIN_POSITIVE || !det.is_finite() {
            break;
        }
        let dx = -(a22 * g1 - a12 * g2) / det;
        let dy = -(a11 * g2 - a12 * g1) / det;

        let mut damping = 1.0;
        let accepted = loop {
            let (nx, ny) = (x + damping * dx, y + damping * dy);
            if ny > 0.0 {
                let next = sum_squares(&data, nx, ny);
                if next < ssr {
                    break Some((nx, ny, next));
                }
            }
            damping *= 0.5;
            if damping < MIN_DAMPING {
                break None;
            }
        };
        let Some((nx, ny, next)) = accepted else {
            break;
        };
        let step = (nx - x).abs().max((ny - y).abs());
        x = nx;
        y = ny;
        ssr = next;
        if step < STEP_TOLERANCE {
            break;
        }
    }

    if !(x.is_finite() && y.is_finite() && y > 0.0) {
        return Err(Error::Fit("fit diverged".into()));
    }
    if x < c_min - 0.05 || x > c_max + 0.05 {
        return Err(Error::Fit(format!(
            "inflection point {x} outside the data range [{c_min}, {c_max}]"
        )));
    }
    Ok(SigmoidFit {
        x,
        y,
        sum_res: ssr,
        iterations,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(x: f64, y: f64, count: usize) -> Vec<(f64, f64)> {
        let lo = x - 6.0 * y;
        let hi = x + 6.0 * y;
        (0..count)
            .map(|i| {
                let c = lo + (hi - lo) * i as f64 / (count - 1) as f64;
                (c, sigmoid(c, x, y))
            })
            .collect()
    }

    #[test]
    fn recovers_exact_curve() {
        let fit = fit_sigmoid(&synthetic(0.95, 0.002, 41)).unwrap();
        assert!((fit.x - 0.95).abs() < 1e-6, "{fit:?}");
        assert!((fit.y - 0.002).abs() < 1e-6);
        assert!(fit.sum_res < 1e-12);
    }

    #[test]
    fn refuses_without_transition() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (0.9 + 0.01 * f64::from(i), 0.0)).collect();
        assert!(matches!(fit_sigmoid(&flat), Err(Error::Fit(_))));
        let ones: Vec<(f64, f64)> = (0..10).map(|i| (0.9 + 0.01 * f64::from(i), 1.0)).collect();
        assert!(fit_sigmoid(&ones).is_err());
    }

    #[test]
    fn refuses_too_few_points() {
        assert!(fit_sigmoid(&[(0.1, 0.0), (0.2, 1.0), (0.3, 1.0)]).is_err());
    }

    #[test]
    fn noisy_step_data() {
        // A hard 0/1 step gives a steep fit centred between the two points
        // adjacent to the jump.
        let pts: Vec<(f64, f64)> = (0..21)
            .map(|i| {
                let c = 0.97 + 0.0005 * f64::from(i);
                (c, if c < 0.9751 { 0.0 } else { 1.0 })
            })
            .collect();
        let fit = fit_sigmoid(&pts).unwrap();
        assert!(fit.x > 0.9745 && fit.x < 0.9755, "{fit:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn recovers_parameters(x in 0.6f64..0.99, y in 5e-4f64..0.05) {
            let fit = fit_sigmoid(&synthetic(x, y, 41)).unwrap();
            prop_assert!((fit.x - x).abs() < 1e-6, "x {} vs {}", fit.x, x);
            prop_assert!((fit.y - y).abs() < 1e-6, "y {} vs {}", fit.y, y);
        }

        #[test]
        fn permutation_invariant(x in 0.6f64..0.99, y in 5e-4f64..0.05, seed in 0u64..1000) {
            let mut pts = synthetic(x, y, 25);
            for p in pts.iter_mut() {
                p.1 = (p.1 + 0.05 * ((p.0 * 1e4 + seed as f64).sin())).clamp(0.0, 1.0);
            }
            let a = fit_sigmoid(&pts).unwrap();
            let n = pts.len();
            let mut shuffled = pts.clone();
            for i in 0..n {
                shuffled.swap(i, (i * 7 + seed as usize) % n);
            }
            let b = fit_sigmoid(&shuffled).unwrap();
            prop_assert!((a.x - b.x).abs() < 1e-12);
        }
    }
}
