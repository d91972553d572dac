//! Small statistics toolkit: Kolmogorov-Smirnov distances, the reference
//! limit-law CDFs, and a least-squares slope fit.

/// Standard Gaussian CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of `exp(-Z^2/2)` for standard Gaussian `Z`:
/// `P(e^{-Z^2/2} <= v) = 2(1 - Phi(sqrt(-2 ln v)))` on `(0,1]`.
pub fn cdf_exp_half_chi2(v: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(DomainError(v));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    if v >= 1.0 {
        return Ok(1.0);
    }
    Ok(2.0 * (1.0 - normal_cdf((-2.0 * v.ln()).sqrt())))
}

/// CDF of `exp(-Z^2)` for standard Gaussian `Z`.
pub fn cdf_exp_chi2(v: f64) -> Result<f64, DomainError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(DomainError(v));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    if v >= 1.0 {
        return Ok(1.0);
    }
    Ok(2.0 * (1.0 - normal_cdf((-v.ln()).sqrt())))
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("value {0} outside [0,1]")]
pub struct DomainError(pub f64);

/// One-sample KS statistic: sup distance between the empirical CDF of
/// `sample` and `cdf`. Sorts the slice in place.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!sample.is_empty(), "empty sample");
    sample.sort_unstable_by(f64::total_cmp);
    let n = sample.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max(((i + 1) as f64 / n - f).abs());
        sup = sup.max((i as f64 / n - f).abs());
    }
    sup
}

/// Two-sample KS statistic. Sorts both slices in place.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let mut sup = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    sup
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-9);
        assert!((normal_cdf(-2.0) - 0.022750131948179195).abs() < 1e-9);
    }

    #[test]
    fn exp_half_chi2_cdf_examples() {
        assert_eq!(cdf_exp_half_chi2(1.0).unwrap(), 1.0);
        assert_eq!(cdf_exp_half_chi2(0.0).unwrap(), 0.0);
        // v = e^{-1/2}: 2(1 - Phi(1)) from the Gaussian tail.
        let v = (-0.5f64).exp();
        assert!((cdf_exp_half_chi2(v).unwrap() - 0.3173105078629141).abs() < 1e-9);
        assert!(cdf_exp_half_chi2(1.5).is_err());
        assert!(cdf_exp_half_chi2(-0.1).is_err());
    }

    #[test]
    fn ks_detects_sample_from_its_own_law() {
        let mut rng = crate::experiments::rng_stream(3, 0);
        let mut sample: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_statistic(&mut sample, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.02, "ks = {d}");
    }

    #[test]
    fn ks_constant_sample_degenerates_to_cdf_gap() {
        let mut sample = vec![0.3; 100];
        let d = ks_statistic(&mut sample, |x| x.clamp(0.0, 1.0));
        // max(F(c), 1 - F(c)) at c = 0.3.
        assert!((d - 0.7).abs() < 1e-12);
    }

    #[test]
    fn two_sample_ks_on_independent_uniforms() {
        let mut rng = crate::experiments::rng_stream(4, 0);
        let mut a: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let mut b: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let d = ks_two_sample(&mut a, &mut b);
        assert!(d < 0.01, "ks = {d}");
    }

    #[test]
    fn slope_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
