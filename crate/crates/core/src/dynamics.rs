//! Transformed potential `f_h(y) = f(g(|y|)) − log det ∇h(y)`, its gradient,
//! the two Hessian eigenvalues, and the Itô-diffusion form of the dynamics
//! pushed back to `x = h(y)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::targets::IsotropicPotential;
use crate::transform::{norm, RadialTransform};

/// Below this radius the gradient is set to zero.
pub const ORIGIN_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct TransformedPotential {
    pub target: IsotropicPotential,
    pub transform: RadialTransform,
}

/// Eigenvalues of `∇² f_h` at a radius: `lambda_radial` along `y/|y|`,
/// `lambda_tangential` with multiplicity `d − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HessianEigenvalues {
    pub lambda_radial: f64,
    pub lambda_tangential: f64,
}

impl HessianEigenvalues {
    pub fn min(&self) -> f64 {
        self.lambda_radial.min(self.lambda_tangential)
    }

    pub fn max(&self) -> f64 {
        self.lambda_radial.max(self.lambda_tangential)
    }
}

/// Itô form `dX = b(X) dt + σ(X) dW` of the transformed dynamics at `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoDiffusion {
    /// `b(x) = −∇hᵀ∇h ∇f + ½⟨∇, σᵀσ⟩`.
    pub drift: Vec<f64>,
    /// Singular value of `σ` along `x/|x|`: `√2 g'(g⁻¹(|x|))`.
    pub sigma_radial: f64,
    /// Singular value on the orthogonal complement: `√2 |x| / g⁻¹(|x|)`.
    pub sigma_tangential: f64,
    /// Radial coefficients of `½⟨∇, σᵀσ⟩`, `Δ·h` and `∇hᵀ ∇ log det ∇h`.
    pub half_divergence: f64,
    pub laplacian_h: f64,
    pub jacobian_log_det: f64,
    /// Radial coefficient of `−∇hᵀ∇h ∇f`.
    pub gradient_term: f64,
    /// `x / |x|`.
    pub direction: Vec<f64>,
}

impl ItoDiffusion {
    /// Drift assembled as `−∇hᵀ∇h ∇f + ∇hᵀ ∇ log det ∇h + Δ·h`.
    pub fn drift_from_components(&self) -> Vec<f64> {
        let c = self.gradient_term + self.jacobian_log_det + self.laplacian_h;
        self.direction.iter().map(|v| v * c).collect()
    }
}

impl TransformedPotential {
    pub fn new(target: IsotropicPotential, transform: RadialTransform) -> Result<Self> {
        if target.dimension() != transform.dimension() {
            return invalid(format!(
                "target dimension {} differs from transform dimension {}",
                target.dimension(),
                transform.dimension()
            ));
        }
        Ok(Self { target, transform })
    }

    pub fn dimension(&self) -> usize {
        self.target.dimension()
    }

    /// `[F, F', F'']` of `f_h` as a function of the radius.
    ///
    /// In the bulk `g` is bounded and the chain rule is applied directly; in
    /// the tail everything goes through `u = log g(r)` so that radii with
    /// overflowing `g(r)` stay finite.
    pub fn radial_derivs(&self, r: f64) -> [f64; 3] {
        let t = &self.transform;
        let [j0, j1, j2] = t.log_det_jacobian_derivs(r);
        if r < t.knot() {
            let [g, g1, g2, _] = t.bulk_derivs(r);
            let [f0, f1, f2] = self.target.derivs(g);
            [f0 - j0, f1 * g1 - j1, f2 * g1 * g1 + f1 * g2 - j2]
        } else {
            let [l0, l1, l2, _] = t.log_profile(r);
            let [f0, f1, f2] = self.target.log_derivs(l0);
            [f0 - j0, f1 * l1 - j1, f2 * l1 * l1 + f1 * l2 - j2]
        }
    }

    pub fn value_at_radius(&self, r: f64) -> f64 {
        self.radial_derivs(r)[0]
    }

    /// `f_h(y)`.
    pub fn transformed_value(&self, y: &[f64]) -> f64 {
        self.value_at_radius(norm(y))
    }

    /// `−f_h(y)`, the unnormalized log density of `π_h`.
    pub fn transformed_log_density(&self, y: &[f64]) -> f64 {
        -self.transformed_value(y)
    }

    /// `∇f_h(y)`; zero for `|y| < 1e-10`.
    pub fn transformed_gradient(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        self.gradient_into(y, &mut out);
        out
    }

    pub(crate) fn gradient_into(&self, y: &[f64], out: &mut [f64]) {
        let r = norm(y);
        if r < ORIGIN_CUTOFF {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let s = self.radial_derivs(r)[1] / r;
        for (o, v) in out.iter_mut().zip(y) {
            *o = s * v;
        }
    }

    pub fn hessian_eigenvalues(&self, r: f64) -> Result<HessianEigenvalues> {
        if !(r > 0.0) {
            return invalid(format!("radius must be positive, got {r}"));
        }
        let [_, f1, f2] = self.radial_derivs(r);
        Ok(HessianEigenvalues {
            lambda_radial: f2,
            lambda_tangential: f1 / r,
        })
    }

    /// Drift and diffusion of `X_t = h(Y_t)` at `x ≠ 0`.
    pub fn ito_drift_diffusion(&self, x: &[f64]) -> Result<ItoDiffusion> {
        let s = norm(x);
        if !(s > 0.0) {
            return invalid("the Itô coefficients are evaluated at x != 0");
        }
        let d = self.dimension() as f64;
        let t = &self.transform;
        let r = t.g_inverse(s);
        let [_, g1, g2, _] = t.derivs(r);
        let fp = self.target.derivs(s)[1];
        let gradient_term = -g1 * g1 * fp;
        let half_divergence = 2.0 * g2 + (d - 1.0) * g1 * g1 / s - (d - 1.0) * s / (r * r);
        let laplacian_h = g2 + (d - 1.0) * g1 / r - (d - 1.0) * s / (r * r);
        let jacobian_log_det = g2 + (d - 1.0) * g1 * g1 / s - (d - 1.0) * g1 / r;
        let direction: Vec<f64> = x.iter().map(|v| v / s).collect();
        let c = gradient_term + half_divergence;
        Ok(ItoDiffusion {
            drift: direction.iter().map(|v| v * c).collect(),
            direction,
            sigma_radial: std::f64::consts::SQRT_2 * g1,
            sigma_tangential: std::f64::consts::SQRT_2 * s / r,
            half_divergence,
            laplacian_h,
            jacobian_log_det,
            gradient_term,
        })
    }
}

/// `∇f(x) = f'(|x|) x / |x|` for the untransformed target.
pub(crate) fn target_gradient_into(p: &IsotropicPotential, x: &[f64], out: &mut [f64]) {
    let r = norm(x);
    if r < ORIGIN_CUTOFF {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let s = p.derivs(r)[1] / r;
    for (o, v) in out.iter_mut().zip(x) {
        *o = s * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{make_example, make_multivariate_t, ZooExample};
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;
    use std::f64::consts::E;

    fn t_b1(d: usize, kappa: f64) -> TransformedPotential {
        TransformedPotential::new(
            make_multivariate_t(d, kappa).unwrap(),
            RadialTransform::exponential(1.0, 2.0, d).unwrap(),
        )
        .unwrap()
    }

    fn ex6(d: usize) -> TransformedPotential {
        let mut p = BTreeMap::new();
        p.insert("vartheta".to_string(), 1.0);
        let e = make_example(ZooExample::Example6, d, &p).unwrap();
        TransformedPotential::new(e.potential, e.transform).unwrap()
    }

    #[test]
    fn value_example_tail() {
        let tp = t_b1(2, 1.0);
        // g(2) = e^4, so f(g) = 1.5 log(1 + e^8).
        let want = 1.5 * 8f64.exp().ln_1p() - (4.0 * 4f64.exp()).ln() - (4f64.exp() / 2.0).ln();
        assert_relative_eq!(
            tp.transformed_value(&[2.0, 0.0]),
            want,
            max_relative = 1e-13
        );
        assert_relative_eq!(want, 3.3073559, max_relative = 1e-7);
    }

    #[test]
    fn example6_value_is_quadratic() {
        let tp = ex6(2);
        let c = tp.transformed_value(&[0.0, 0.0]);
        for y in [[0.3, 0.1], [1.0, -2.0], [3.0, 4.0]] {
            let r2 = y[0] * y[0] + y[1] * y[1];
            assert_relative_eq!(tp.transformed_value(&y) - c, r2, max_relative = 1e-10);
        }
    }

    #[test]
    fn gradient_examples() {
        let tp = t_b1(2, 1.0);
        let g = tp.transformed_gradient(&[1.0, 0.0]);
        assert_relative_eq!(
            g[0],
            6.0 * E * E / (1.0 + E * E) - 4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(g[0], 1.2847825, max_relative = 1e-7);
        assert_eq!(g[1], 0.0);
        assert_eq!(tp.transformed_gradient(&[0.0, 0.0]), vec![0.0, 0.0]);
        let g = ex6(2).transformed_gradient(&[1.0, 0.0]);
        assert_relative_eq!(g[0], 2.0, max_relative = 1e-10);
    }

    #[test]
    fn eigenvalue_examples() {
        let tp = t_b1(2, 1.0);
        let ev = tp.hessian_eigenvalues(1.0).unwrap();
        assert_relative_eq!(
            ev.lambda_tangential,
            2.0 - 6.0 / (1.0 + E * E),
            max_relative = 1e-12
        );
        for d in [1, 3] {
            let tp = ex6(d);
            for r in [0.2, 1.0, 5.0] {
                let ev = tp.hessian_eigenvalues(r).unwrap();
                assert_relative_eq!(ev.lambda_radial, d as f64, max_relative = 1e-8);
                assert_relative_eq!(ev.lambda_tangential, d as f64, max_relative = 1e-8);
            }
        }
        assert!(tp.hessian_eigenvalues(0.0).is_err());
    }

    #[test]
    fn t_eigenvalues_match_closed_forms_in_tail() {
        // Tangential and radial closed forms for β = 2, exponential tail.
        for (d, kappa, b) in [(2usize, 1.0, 1.0), (3, 2.0, 0.5), (5, 4.0, 0.625)] {
            let tp = TransformedPotential::new(
                make_multivariate_t(d, kappa).unwrap(),
                RadialTransform::exponential(b, 2.0, d).unwrap(),
            )
            .unwrap();
            let df = d as f64;
            for r in [b.powf(-0.5), 1.7, 3.0, 8.0] {
                let e = (2.0 * b * r * r).exp();
                let tang =
                    2.0 * b * kappa + (df - 2.0) / (r * r) - 2.0 * b * (df + kappa) / (1.0 + e);
                // The constant in the numerator is −1; printed elsewhere as +1.
                let rad = 2.0 * b * kappa - (df - 2.0) / (r * r)
                    + 2.0 * b * (df + kappa) * ((4.0 * b * r * r - 1.0) * e - 1.0)
                        / ((1.0 + e) * (1.0 + e));
                let ev = tp.hessian_eigenvalues(r).unwrap();
                assert_relative_eq!(ev.lambda_tangential, tang, max_relative = 1e-10);
                assert_relative_eq!(ev.lambda_radial, rad, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn bulk_gradient_matches_printed_form() {
        let tp = t_b1(3, 2.0);
        let f1 = |s: f64| 5.0 * s / (1.0 + s * s);
        for r in [0.05, 0.3, 0.7, 0.95] {
            let [g, g1, g2, _] = tp.transform.bulk_derivs(r);
            let want = f1(g) * g1 - g2 / g1 - 2.0 * g1 / g + 2.0 / r;
            assert_relative_eq!(tp.radial_derivs(r)[1], want, max_relative = 1e-10);
        }
    }

    #[test]
    fn far_tail_is_finite() {
        let tp = t_b1(2, 3.0);
        let ev = tp.hessian_eigenvalues(100.0).unwrap();
        assert!(ev.lambda_radial.is_finite() && ev.lambda_tangential.is_finite());
        assert_relative_eq!(ev.lambda_tangential, 2.0 * 3.0, max_relative = 1e-3);
        assert!(tp.transformed_value(&[100.0, 0.0]).is_finite());
    }

    #[test]
    fn ito_example_and_identity() {
        let tp = t_b1(2, 1.0);
        let ito = tp.ito_drift_diffusion(&[E, 0.0]).unwrap();
        let (g1, g2) = (2.0 * E, 6.0 * E);
        let fp = 3.0 * E / (1.0 + E * E);
        let want = -g1 * g1 * fp + 2.0 * g2 + g1 * g1 / E - E;
        assert_relative_eq!(ito.drift[0], want, max_relative = 1e-10);
        assert_relative_eq!(
            ito.sigma_radial,
            std::f64::consts::SQRT_2 * g1,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            ito.sigma_tangential,
            std::f64::consts::SQRT_2 * E,
            max_relative = 1e-12
        );
        let alt = ito.drift_from_components();
        assert_relative_eq!(alt[0], ito.drift[0], max_relative = 1e-8);
        assert!(tp.ito_drift_diffusion(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn lambda_tangential_times_radius_is_gradient_norm() {
        let tp = t_b1(4, 2.5);
        for r in [0.1, 0.5, 1.0, 2.0, 6.0] {
            let ev = tp.hessian_eigenvalues(r).unwrap();
            let g = tp.transformed_gradient(&[r, 0.0, 0.0, 0.0]);
            assert_relative_eq!(ev.lambda_tangential * r, g[0].abs(), max_relative = 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let r = TransformedPotential::new(
            make_multivariate_t(2, 1.0).unwrap(),
            RadialTransform::exponential(1.0, 2.0, 3).unwrap(),
        );
        assert!(r.is_err());
    }
}
