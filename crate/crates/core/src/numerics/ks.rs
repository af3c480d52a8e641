use crate::{Error, Result};

/// One-sample Kolmogorov-Smirnov distance between the empirical cdf of a
/// sorted sample and a continuous cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Domain("KS statistic of an empty sample".into()));
    }
    if sample.windows(2).any(|w| w[1] < w[0]) || sample.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("KS statistic needs a sample sorted ascending".into()));
    }
    let n = sample.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}
