//! Paired one-sided t-test.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::harness::mean_sd;

/// p-value for `mean(a - b) > 0` on paired samples.
///
/// Zero variance gives 0 when every difference is positive and 1 otherwise.
pub fn paired_greater(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.len() < 2 {
        return 1.0;
    }
    let (mean, sd) = mean_sd(&d);
    if sd == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let n = d.len() as f64;
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2");
    1.0 - dist.cdf(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_value() {
        // differences 1, 2, 3, 4: t = 2.5 / (1.29099/2) = 3.873, df 3
        let p = paired_greater(&[2.0, 4.0, 6.0, 8.0], &[1.0, 2.0, 3.0, 4.0]);
        assert!((p - 0.015_225).abs() < 1e-4, "{p}");
    }

    #[test]
    fn degenerate() {
        assert_eq!(paired_greater(&[1.0, 1.0], &[0.0, 0.0]), 0.0);
        assert_eq!(paired_greater(&[1.0, 1.0], &[1.0, 1.0]), 1.0);
        assert_eq!(paired_greater(&[1.0], &[0.0]), 1.0);
        assert!(paired_greater(&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0]) > 0.5);
    }
}
