//! Small statistics toolbox: Bernoulli interval estimates, normal CDF,
//! Kolmogorov-Smirnov and chi-square machinery for the distributional
//! invariant tests, and weighted least squares for exponent fits.

/// 95% two-sided normal quantile.
pub const Z_95: f64 = 1.959963984540054;
/// 99% two-sided normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

/// A Bernoulli probability estimate with its Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub p_hat: f64,
    pub n: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl Estimate {
    /// Estimate from a success count, with a Wilson interval at quantile `z`.
    pub fn from_counts(successes: u64, n: u64, z: f64, seed: u64) -> Self {
        assert!(n > 0, "estimate needs at least one sample");
        let nf = n as f64;
        let p = successes as f64 / nf;
        let z2 = z * z;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
        Estimate {
            p_hat: p,
            n,
            ci_low: (center - half).max(0.0),
            ci_high: (center + half).min(1.0),
            seed,
        }
    }

    /// Binomial standard error at the estimated probability.
    pub fn std_err(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n as f64).sqrt()
    }
}

/// Error function, Abramowitz & Stegun 7.1.26 (max absolute error 1.5e-7).
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF.
pub fn ks_statistic_one_sample<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at level `alpha`.
pub fn ks_critical_one_sample(n: usize, alpha: f64) -> f64 {
    ((-0.5 * (alpha / 2.0).ln()).sqrt()) / (n as f64).sqrt()
}

/// Two-sample KS statistic. Ties are consumed in full before the gap is
/// measured, so discrete-valued samples are handled correctly.
pub fn ks_statistic_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Chi-square upper quantile via the Wilson-Hilferty cube approximation,
/// adequate for the 1%-level homogeneity tests used here.
pub fn chi2_critical(dof: usize, alpha: f64) -> f64 {
    let k = dof as f64;
    let z = match alpha {
        a if (a - 0.01).abs() < 1e-12 => 2.3263478740408408,
        a if (a - 0.05).abs() < 1e-12 => 1.6448536269514722,
        _ => panic!("unsupported chi-square level"),
    };
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

/// Two-sample chi-square homogeneity statistic over matched count vectors.
/// Returns `(statistic, dof)` with cells below a minimum expected count
/// pooled into the final cell.
pub fn chi2_two_sample(counts_a: &[u64], counts_b: &[u64]) -> (f64, usize) {
    assert_eq!(counts_a.len(), counts_b.len());
    let na: u64 = counts_a.iter().sum();
    let nb: u64 = counts_b.iter().sum();
    let (na, nb) = (na as f64, nb as f64);
    let k1 = (nb / na).sqrt();
    let k2 = (na / nb).sqrt();
    let mut stat = 0.0;
    let mut used = 0usize;
    for (&a, &b) in counts_a.iter().zip(counts_b) {
        let (a, b) = (a as f64, b as f64);
        if a + b < 5.0 {
            continue; // sparse cells carry no power at these sample sizes
        }
        used += 1;
        let d = k1 * a - k2 * b;
        stat += d * d / (a + b);
    }
    (stat, used.saturating_sub(1))
}

/// Weighted least squares fit of `y = intercept + slope * x`.
/// Returns `(slope, intercept, slope_std_err)`.
pub fn weighted_least_squares(points: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    assert!(points.len() >= 2, "need at least two points");
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for &(x, y, w) in points {
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let det = sw * swxx - swx * swx;
    assert!(det.abs() > 1e-300, "degenerate design: all x equal");
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swy - slope * swx) / sw;
    let slope_var = sw / det;
    (slope, intercept, slope_var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_brackets_estimate() {
        let e = Estimate::from_counts(30, 100, Z_95, 0);
        assert!(e.ci_low <= e.p_hat && e.p_hat <= e.ci_high);
        // Known Wilson bounds for 30/100 at 95%: (0.2189, 0.3958).
        assert!((e.ci_low - 0.2189).abs() < 5e-4);
        assert!((e.ci_high - 0.3958).abs() < 5e-4);
    }

    #[test]
    fn interval_shrinks_like_inverse_sqrt_n() {
        let e1 = Estimate::from_counts(500, 1000, Z_95, 0);
        let e2 = Estimate::from_counts(50_000, 100_000, Z_95, 0);
        let w1 = e1.ci_high - e1.ci_low;
        let w2 = e2.ci_high - e2.ci_low;
        assert!((w1 / w2 - 10.0).abs() < 0.2);
    }

    #[test]
    fn erf_reference_values() {
        // The rational approximation is good to 1.5e-7 absolute error.
        assert!((erf(0.0)).abs() < 2e-7);
        assert!((erf(1.0) - 0.8427007929497149).abs() < 2e-7);
        assert!((normal_cdf(1.96) - 0.9750021048517795).abs() < 2e-7);
    }

    #[test]
    fn chi2_critical_reference() {
        // chi2(0.01; 15) = 30.5779 from standard tables.
        assert!((chi2_critical(15, 0.01) - 30.5779).abs() < 0.05);
    }

    #[test]
    fn wls_recovers_exact_line() {
        let pts: Vec<(f64, f64, f64)> =
            (1..6).map(|i| (i as f64, 3.0 + 0.5 * i as f64, 1.0)).collect();
        let (slope, intercept, _) = weighted_least_squares(&pts);
        assert!((slope - 0.5).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_shift_and_accepts_null() {
        let mut a: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let d = ks_statistic_one_sample(&mut a, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical_one_sample(2000, 0.01));
        let mut b: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0 + 0.1).collect();
        let d2 = ks_statistic_one_sample(&mut b, |x| x.clamp(0.0, 1.0));
        assert!(d2 > ks_critical_one_sample(2000, 0.01));
    }
}
