//! Goodness-of-fit tests and summary statistics used by the verification
//! harnesses.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Distance to `target` in standard errors (infinite if the error is 0
    /// and the mean misses).
    pub fn z(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// Running sums for a mean and its standard error; merges are exact, so
/// per-thread accumulators can be combined in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            se: (self.variance() / self.n as f64).sqrt(),
        }
    }
}

pub fn mean_se(xs: &[f64]) -> Estimate {
    let mut acc = Accumulator::default();
    for &x in xs {
        acc.push(x);
    }
    acc.estimate()
}

/// Ratio-of-sums estimate `Σx / Σy` over i.i.d. clusters with a delta-method
/// standard error.
pub fn ratio_estimate(xs: &[f64], ys: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let r = sx / sy;
    let ybar = sy / n;
    let resid: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - r * y).powi(2))
        .sum();
    let se = if n > 1.0 {
        (resid / (n - 1.0) / n).sqrt() / ybar
    } else {
        0.0
    };
    Estimate { mean: r, se }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<TestResult> {
    if sample.is_empty() {
        return Err(invalid("KS test needs a nonempty sample"));
    }
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max(c - i as f64 / n).max((i + 1) as f64 / n - c);
    }
    Ok(TestResult {
        statistic: d,
        p_value: ks_p(d, n),
    })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS test needs nonempty samples"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let n_eff = (n * m) as f64 / (n + m) as f64;
    Ok(TestResult {
        statistic: d,
        p_value: ks_p(d, n_eff),
    })
}

fn chi2_sf(stat: f64, df: f64) -> Result<f64> {
    let dist = ChiSquared::new(df).map_err(|e| invalid(format!("chi-square df {df}: {e}")))?;
    Ok(1.0 - dist.cdf(stat))
}

/// Pearson goodness-of-fit test of observed counts against cell
/// probabilities. Cells with expected count below `min_expected` are pooled
/// into one cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<TestResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return Err(invalid("observed counts and probabilities must match"));
    }
    let total: u64 = observed.iter().sum();
    let t = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = p * t;
        if e < min_expected {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return Err(invalid("chi-square test needs at least two cells"));
    }
    let stat: f64 = cells.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    let df = (cells.len() - 1) as f64;
    Ok(TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df)?,
    })
}

/// Pearson test of independence on a contingency table. Rows and columns
/// with zero margins are dropped.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<TestResult> {
    let cols = table.first().map_or(0, Vec::len);
    if table.iter().any(|r| r.len() != cols) {
        return Err(invalid("contingency table rows differ in length"));
    }
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_tot.iter().sum();
    let rows_used = row_tot.iter().filter(|&&x| x > 0.0).count();
    let cols_used = col_tot.iter().filter(|&&x| x > 0.0).count();
    if rows_used < 2 || cols_used < 2 {
        return Err(invalid("contingency table needs two nonempty rows and columns"));
    }
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &o) in row.iter().enumerate() {
            let e = row_tot[r] * col_tot[c] / total;
            if e > 0.0 {
                stat += (o as f64 - e).powi(2) / e;
            }
        }
    }
    let df = ((rows_used - 1) * (cols_used - 1)) as f64;
    Ok(TestResult {
        statistic: stat,
        p_value: chi2_sf(stat, df)?,
    })
}

/// Empirical tail probability `P(X >= x)` with its binomial standard error.
pub fn tail_fraction(sample: &[f64], x: f64) -> Estimate {
    let n = sample.len() as f64;
    let p = sample.iter().filter(|&&v| v >= x).count() as f64 / n;
    Estimate {
        mean: p,
        se: (p * (1.0 - p) / n).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn kolmogorov_known_values() {
        // Classical critical values: P(K > 1.358) ≈ 0.05, P(K > 1.628) ≈ 0.01.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 5e-4);
    }

    #[test]
    fn ks_accepts_uniform_and_rejects_shift() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let xs: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let ok = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ok.p_value > 0.01);
        let bad = ks_one_sample(&xs, |x| (x - 0.05).clamp(0.0, 1.0)).unwrap();
        assert!(bad.p_value < 1e-6);
        let ys: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p_value > 0.01);
        let zs: Vec<f64> = ys.iter().map(|y| y * 0.9).collect();
        assert!(ks_two_sample(&xs, &zs).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chi_square_tables() {
        let r = chi_square_gof(&[50, 50], &[0.5, 0.5], 5.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        // 2x2 table with strong association.
        let r = chi_square_independence(&[vec![90, 10], vec![10, 90]]).unwrap();
        assert!((r.statistic - 128.0).abs() < 1e-9);
        assert!(r.p_value < 1e-20);
    }

    #[test]
    fn accumulator_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let whole = mean_se(&xs);
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.estimate().mean - whole.mean).abs() < 1e-15);
        assert!((a.estimate().se - whole.se).abs() < 1e-15);
    }

    #[test]
    fn ratio_of_constant_clusters() {
        let e = ratio_estimate(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(e.mean, 0.5);
        assert_eq!(e.se, 0.0);
    }
}
