//! Numerical substrate shared by every other module.

mod bivariate;
mod ks;
mod normal;
mod quadrature;
mod rng;

pub use bivariate::{bivariate_normal_cdf, bivariate_normal_pdf, bivariate_normal_sf};
pub use ks::ks_statistic;
pub use normal::{normal_cdf, normal_pdf, normal_quantile, normal_sf};
pub use quadrature::{
    integrate, integrate_with_breaks, quadrature_2d, quadrature_2d_with_breaks, QuadratureConfig, QuadratureResult,
    Rect,
};
pub use rng::{draw_stream, RngStream};

/// Pairwise summation; the order is fixed so results do not depend on how
/// the caller chunked its work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::pairwise_sum;

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
