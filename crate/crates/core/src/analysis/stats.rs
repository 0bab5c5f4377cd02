use serde::Serialize;

/// Measurements from one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    /// Fraction of keys on their primary page.
    pub rp: f64,
    /// Primary keys per cell.
    pub alphap: f64,
    /// Mean walk steps per inserted key (online runs only).
    pub steps: Option<f64>,
    /// Mean page requests per inserted key (online runs only).
    pub page_requests: Option<f64>,
    /// Per-page backup spill `w`.
    pub w: Vec<u32>,
}

/// Sample mean and unbiased sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
}

impl Moments {
    /// Moments of `values`; the variance of a single value is reported as 0.
    /// An empty slice gives zeros.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: 0.0, var: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n < 2 {
            0.0
        } else {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        };
        Self { mean, var }
    }
}

/// Aggregate over the trials of one experiment point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialStats {
    pub trials: u32,
    pub failures: u32,
    pub lambda: f64,
    pub rp: Moments,
    pub alphap: Moments,
    pub steps: Option<Moments>,
    pub page_requests: Option<Moments>,
    /// Relative frequency of each `w` value (index = `w`) over all pages.
    pub w_histogram: Vec<f64>,
    /// Mean `w` over all pages.
    pub w_mean: f64,
    /// Mean `w` over pages with `w > 0`.
    pub w_mean_positive: f64,
}

impl TrialStats {
    /// Relative frequency of pages with `w > threshold`.
    pub fn w_tail(&self, threshold: f64) -> f64 {
        self.w_histogram
            .iter()
            .enumerate()
            .filter(|&(w, _)| w as f64 > threshold)
            .map(|(_, f)| f)
            .sum()
    }
}

/// Reduces trial outcomes in input order.
///
/// Means, variances and the `w` histogram use the successful trials. When
/// every trial failed they fall back to all trials (partial placements), so
/// the record stays finite.
///
/// # Panics
///
/// Panics on an empty slice.
pub fn aggregate(outcomes: &[TrialOutcome]) -> TrialStats {
    assert!(!outcomes.is_empty(), "aggregate needs at least one trial");
    let trials = outcomes.len() as u32;
    let failures = outcomes.iter().filter(|o| !o.success).count() as u32;
    let successful: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.success).collect();
    let pool: Vec<&TrialOutcome> = if successful.is_empty() {
        outcomes.iter().collect()
    } else {
        successful
    };

    let collect = |f: &dyn Fn(&TrialOutcome) -> Option<f64>| -> Option<Moments> {
        let values: Option<Vec<f64>> = pool.iter().map(|o| f(o)).collect();
        values.map(|v| Moments::of(&v))
    };

    let mut counts: Vec<u64> = Vec::new();
    let mut pages = 0u64;
    let mut w_sum = 0u64;
    let mut positive = 0u64;
    for o in &pool {
        for &w in &o.w {
            let w = w as usize;
            if counts.len() <= w {
                counts.resize(w + 1, 0);
            }
            counts[w] += 1;
            pages += 1;
            w_sum += w as u64;
            if w > 0 {
                positive += 1;
            }
        }
    }
    let w_histogram = counts
        .iter()
        .map(|&c| c as f64 / pages.max(1) as f64)
        .collect();

    TrialStats {
        trials,
        failures,
        lambda: f64::from(failures) / f64::from(trials),
        rp: collect(&|o| Some(o.rp)).unwrap(),
        alphap: collect(&|o| Some(o.alphap)).unwrap(),
        steps: collect(&|o| o.steps),
        page_requests: collect(&|o| o.page_requests),
        w_histogram,
        w_mean: w_sum as f64 / pages.max(1) as f64,
        w_mean_positive: w_sum as f64 / positive.max(1) as f64,
    }
}
