//! Small statistical helpers: streaming moments, normal intervals and the
//! 2x2 chi-square test of independence.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::exec::Accumulator;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Streaming mean and sum of squared deviations (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl Accumulator for Moments {
    fn merge(&mut self, o: Self) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64;
        self.n = n;
    }
}

/// Chi-square statistic and p-value (one degree of freedom, no continuity
/// correction) for independence in a 2x2 table `counts[row][col]`.
pub fn chi_square_2x2(counts: [[u64; 2]; 2]) -> (f64, f64) {
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let rows = [counts[0][0] + counts[0][1], counts[1][0] + counts[1][1]];
    let cols = [counts[0][0] + counts[1][0], counts[0][1] + counts[1][1]];
    let mut stat = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            let expected = rows[i] as f64 * cols[j] as f64 / n;
            if expected > 0.0 {
                stat += (c as f64 - expected).powi(2) / expected;
            }
        }
    }
    let p = ChiSquared::new(1.0).map(|d| 1.0 - d.cdf(stat)).unwrap_or(f64::NAN);
    (stat, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|k| ((k * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..333].iter().for_each(|&x| a.push(x));
        xs[333..].iter().for_each(|&x| b.push(x));
        a.merge(b);
        assert_eq!(a.n, all.n);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-9);
    }

    #[test]
    fn chi_square_reference_values() {
        // perfectly proportional table
        let (s, p) = chi_square_2x2([[10, 20], [30, 60]]);
        assert!(s.abs() < 1e-12 && (p - 1.0).abs() < 1e-12);
        // [[20, 30], [30, 20]]: every expected count is 25, stat = 4 * 25 / 25
        let (s, p) = chi_square_2x2([[20, 30], [30, 20]]);
        assert!((s - 4.0).abs() < 1e-12);
        // P(chi2_1 > 4) = erfc(sqrt(2)) = 0.0455003
        assert!((p - 0.045_500_263_896_358_4).abs() < 1e-9, "{p}");
    }
}
