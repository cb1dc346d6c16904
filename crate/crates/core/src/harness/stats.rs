//! Small statistics helpers.

/// `2·exp(−α²n/2)`. Vacuous (`2`) at `α = 0`.
pub fn hoeffding(n: usize, alpha: f64) -> f64 {
    2.0 * (-alpha * alpha * n as f64 / 2.0).exp()
}

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Median of a non-empty sample; the mean of the two middle values for
/// even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hoeffding_values() {
        assert!((hoeffding(200, 0.1) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert!((hoeffding(200, 0.1) - 0.7358).abs() < 1e-4);
        assert_eq!(hoeffding(10, 0.0), 2.0);
        let tiny = hoeffding(5000, 0.1);
        assert!((tiny / (2.0 * (-25.0f64).exp()) - 1.0).abs() < 1e-12);
        assert!((tiny - 2.78e-11).abs() < 1e-13);
    }

    #[test]
    fn wilson_reference_values() {
        // Hand-evaluated score interval for 8/10.
        let (lo, hi) = wilson(8, 10);
        assert!(
            (lo - 0.4902).abs() < 1e-4 && (hi - 0.9433).abs() < 1e-4,
            "{lo} {hi}"
        );
        assert_eq!(wilson(0, 0), (0.0, 1.0));
        assert_eq!(wilson(5, 5).1, 1.0);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [20.0, 40.0, 80.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x * x))
            .collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
    }

    proptest! {
        #[test]
        fn wilson_contains_rate(trials in 1usize..2000, frac in 0.0f64..=1.0) {
            let s = ((trials as f64) * frac).round() as usize;
            let (lo, hi) = wilson(s, trials);
            let p = s as f64 / trials as f64;
            prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }

        #[test]
        fn hoeffding_matches_formula(n in 1usize..100_000, alpha in 0.0f64..=2.0) {
            prop_assert_eq!(hoeffding(n, alpha), 2.0 * (-(alpha * alpha) * n as f64 / 2.0).exp());
        }
    }
}
