use crate::numerics::{bivariate_normal_pdf, integrate, normal_pdf, quadrature_2d, QuadratureConfig, Rect};
use crate::{Error, Result};

const TRUNCATION: f64 = 8.0;

/// Gaussian AR(1) with unit marginal variance:
/// `X_{k+1} = rho X_k + sqrt(1 - rho^2) eps_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Chain {
    rho: f64,
}

impl Ar1Chain {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidChain(format!("AR(1) needs |rho| < 1, got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn innovation_sd(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }

    /// Correlation of `(X_0, X_lag)`.
    pub fn lag_correlation(&self, lag: usize) -> f64 {
        self.rho.powi(i32::try_from(lag).unwrap_or(i32::MAX))
    }

    pub fn marginal_density(&self, x: f64) -> f64 {
        normal_pdf(x)
    }

    /// Density of `(X_0, X_lag)`.
    pub fn joint_density(&self, lag: usize, x: f64, y: f64) -> f64 {
        bivariate_normal_pdf(x, y, self.lag_correlation(lag))
    }

    /// `cov(g(X_0), g(X_lag))` for a function `g` centered under `N(0, 1)`,
    /// by quadrature over `[-8, 8]` (squared for `lag >= 1`).
    pub fn lag_covariance<G: Fn(f64) -> f64>(&self, g: G, lag: usize) -> Result<f64> {
        let cfg = QuadratureConfig::with_tol(1e-12);
        let mean = integrate(|x| g(x) * normal_pdf(x), -TRUNCATION, TRUNCATION, &cfg)?.value;
        let second = integrate(|x| g(x) * g(x) * normal_pdf(x), -TRUNCATION, TRUNCATION, &cfg)?.value;
        if mean.abs() > 1e-10 * second.sqrt().max(1.0) {
            return Err(Error::NotCentered { mean });
        }
        if lag == 0 {
            return Ok(second);
        }
        let r = self.lag_correlation(lag);
        if r == 0.0 {
            return Ok(0.0);
        }
        let v = quadrature_2d(
            |x, y| g(x) * g(y) * bivariate_normal_pdf(x, y, r),
            Rect::square(-TRUNCATION, TRUNCATION),
            1e-11,
        )?;
        Ok(v.value)
    }
}

/// Density of `(X_0, X_2)` for the AR(1): bivariate standard normal with
/// correlation `rho^2`.
pub fn lag2_joint_density(chain: &Ar1Chain, x: f64, y: f64) -> f64 {
    chain.joint_density(2, x, y)
}

/// `sup_{|a| < M} f_2(x_i + a, x_j + a)`.
///
/// Along the diagonal direction the exponent of the bivariate normal density
/// is a convex quadratic in `a` with minimizer `-(x_i + x_j)/2`, so the
/// supremum is the density at that point clamped into `[-M, M]`.
pub fn local_joint_density_bound(chain: &Ar1Chain, x_i: f64, x_j: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Domain(format!("M must be positive, got {m}")));
    }
    let a = (-(x_i + x_j) / 2.0).clamp(-m, m);
    let d = lag2_joint_density(chain, x_i + a, x_j + a);
    Ok(d * (1.0 + 1e-13))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lag2_density_values() {
        let c0 = Ar1Chain::new(0.0).unwrap();
        assert!((lag2_joint_density(&c0, 0.0, 0.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let c = Ar1Chain::new(0.5).unwrap();
        let want = 1.0 / (2.0 * PI * (1.0f64 - 0.0625).sqrt());
        assert!((lag2_joint_density(&c, 0.0, 0.0) - want).abs() < 1e-15);
        assert!((want - 0.164_374_5).abs() < 1e-7);
        assert_eq!(lag2_joint_density(&c, 0.3, -1.1), lag2_joint_density(&c, -1.1, 0.3));
    }

    #[test]
    fn local_bound() {
        let c = Ar1Chain::new(0.5).unwrap();
        let b = local_joint_density_bound(&c, 0.0, 0.0, 1.0).unwrap();
        assert!((b - lag2_joint_density(&c, 0.0, 0.0)).abs() < 1e-12);
        let c0 = Ar1Chain::new(0.0).unwrap();
        assert!(local_joint_density_bound(&c0, 2.0, -0.5, 3.0).unwrap() <= 1.0 / (2.0 * PI) * (1.0 + 1e-12));
        for k in 0..100 {
            let a = -0.99 + 0.02 * f64::from(k);
            let (xi, xj) = (1.3, 0.4);
            assert!(local_joint_density_bound(&c, xi, xj, 1.0).unwrap() >= lag2_joint_density(&c, xi + a, xj + a));
        }
        assert!(local_joint_density_bound(&c, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn identity_covariance_is_rho_power() {
        let c = Ar1Chain::new(0.5).unwrap();
        assert!((c.lag_covariance(|x| x, 3).unwrap() - 0.125).abs() < 1e-9);
        assert!((c.lag_covariance(|x| x, 0).unwrap() - 1.0).abs() < 1e-9);
        assert!(c.lag_covariance(|x| x * x, 1).is_err());
    }

    #[test]
    fn rejects_unit_root() {
        assert!(Ar1Chain::new(1.0).is_err());
        assert!(Ar1Chain::new(f64::NAN).is_err());
    }
}
