use nalgebra::Matrix2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Young modulus, Pa.
    pub e: f64,
    pub nu: f64,
    /// Density, kg/m³.
    pub rho: f64,
}

impl MaterialParams {
    pub fn lame(&self) -> Result<(f64, f64)> {
        lame_coefficients(self.e, self.nu)
    }
}

/// Plane-strain Lamé coefficients (λ, μ).
pub fn lame_coefficients(e: f64, nu: f64) -> Result<(f64, f64)> {
    if nu == 0.5 {
        return Err(Error::Config("Poisson ratio 0.5 is the incompressible limit; SVK needs ν < 0.5".into()));
    }
    if !(e > 0.0) {
        return Err(Error::Config(format!("Young modulus must be positive (got {e})")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Config(format!("Poisson ratio must lie in (-1, 0.5) (got {nu})")));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// E = ½(∇η + ∇ηᵀ + ∇ηᵀ∇η).
pub fn green_lagrange(grad: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (grad + grad.transpose() + grad.transpose() * grad)
}

/// Σ = λ tr(E) I + 2μE.
pub fn pk2_stress(e: &Matrix2<f64>, lambda: f64, mu: f64) -> Matrix2<f64> {
    Matrix2::identity() * (lambda * e.trace()) + e * (2.0 * mu)
}

/// Stored energy density λ/2 (tr E)² + μ E:E.
pub fn strain_energy_density(e: &Matrix2<f64>, lambda: f64, mu: f64) -> f64 {
    0.5 * lambda * e.trace().powi(2) + mu * e.component_mul(e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation;

    #[test]
    fn tail_and_head_lame_values() {
        // Independent evaluation of μ = E/(2(1+ν)), λ = Eν/((1+ν)(1−2ν)).
        let (l, m) = lame_coefficients(1e5, 0.4).unwrap();
        assert!((m - 1e5 / 2.8).abs() < 1e-9);
        assert!((l - 1e5 * 0.4 / (1.4 * 0.2)).abs() < 1e-9);
        assert!((m - 35714.29).abs() < 0.01 && (l - 142857.14).abs() < 0.01);
        let (_, mh) = lame_coefficients(41e9, 0.281).unwrap();
        assert!((mh - 41e9 / 2.562).abs() < 1.0);
        assert!((mh / 1.6003e10 - 1.0).abs() < 1e-4);
        let (l0, m0) = lame_coefficients(2.0, 0.0).unwrap();
        assert_eq!((l0, m0), (0.0, 1.0));
        assert!(matches!(lame_coefficients(1.0, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn green_lagrange_cases() {
        assert_eq!(green_lagrange(&Matrix2::zeros()), Matrix2::zeros());
        let r = rotation(0.7) - Matrix2::identity();
        assert!(green_lagrange(&r).norm() < 1e-15);
        let g = 0.3;
        let e = green_lagrange(&Matrix2::new(g, 0.0, 0.0, 0.0));
        assert!((e[(0, 0)] - (g + g * g / 2.0)).abs() < 1e-15);
        assert_eq!(e[(1, 1)], 0.0);
    }

    #[test]
    fn pk2_cases() {
        assert_eq!(pk2_stress(&Matrix2::zeros(), 1.0, 1.0), Matrix2::zeros());
        let e = 0.1;
        let s = pk2_stress(&Matrix2::new(e, 0.0, 0.0, 0.0), 1.0, 1.0);
        assert!((s[(0, 0)] - 3.0 * e).abs() < 1e-15 && (s[(1, 1)] - e).abs() < 1e-15);
        let em = Matrix2::new(0.2, 0.05, 0.05, -0.1);
        let (l, m) = (2.5, 1.5);
        assert!((pk2_stress(&em, l, m).trace() - (2.0 * l + 2.0 * m) * em.trace()).abs() < 1e-14);
    }
}
