//! Fixed-endpoint composition `y(x) = y_net(x) * bound(x) + g(x)`.
//!
//! `bound(x) = (x - x_a)^m_a (x_b - x)^m_b` vanishes at both endpoints and `g`
//! is the straight line through `(x_a, y_a)` and `(x_b, y_b)`, so the composed
//! function meets the boundary values for any family parameters. The exponents
//! are stored as `rho` with `m = exp(rho)`.

use crate::approximators::{FamilySpec, Interval, Jet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition<T> {
    pub x_a: T,
    pub x_b: T,
    pub y_a: T,
    pub y_b: T,
}

impl<T: Scalar> BoundaryCondition<T> {
    pub fn new(x_a: T, x_b: T, y_a: T, y_b: T) -> Result<Self> {
        if !(x_a.is_finite() && x_b.is_finite() && y_a.is_finite() && y_b.is_finite()) {
            return Err(Error::InvalidArgument("boundary values must be finite".into()));
        }
        if !(x_b > x_a) {
            return Err(Error::InvalidArgument(format!(
                "interval [{x_a}, {x_b}] must satisfy x_a < x_b"
            )));
        }
        Ok(Self { x_a, x_b, y_a, y_b })
    }

    pub fn width(&self) -> T {
        self.x_b - self.x_a
    }

    /// True when `x` lies in the open interval `(x_a, x_b)`.
    pub fn contains_open(&self, x: T) -> bool {
        x > self.x_a && x < self.x_b
    }

    /// Straight line through both endpoints: `(g(x), g'(x))`.
    pub fn linear_interpolant(&self, x: T) -> (T, T) {
        let w = self.width();
        let slope = (self.y_b - self.y_a) / w;
        let intercept = (self.x_b * self.y_a - self.y_b * self.x_a) / w;
        (x * slope + intercept, slope)
    }
}

/// Boundary-factor exponents in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryExponents<T> {
    pub rho_a: T,
    pub rho_b: T,
}

impl<T: Scalar> Default for BoundaryExponents<T> {
    fn default() -> Self {
        Self::unit()
    }
}

impl<T: Scalar> BoundaryExponents<T> {
    /// `m_a = m_b = 1`.
    pub fn unit() -> Self {
        Self {
            rho_a: T::zero(),
            rho_b: T::zero(),
        }
    }

    pub fn from_exponents(m_a: T, m_b: T) -> Result<Self> {
        if !(m_a > T::zero() && m_b > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "boundary exponents must be positive, got {m_a} and {m_b}"
            )));
        }
        Ok(Self {
            rho_a: m_a.ln(),
            rho_b: m_b.ln(),
        })
    }

    pub fn m_a(&self) -> T {
        self.rho_a.exp()
    }

    pub fn m_b(&self) -> T {
        self.rho_b.exp()
    }
}

/// Jet of the boundary factor; gradients are with respect to `(rho_a, rho_b)`.
pub fn boundary_factor_jet<T: Scalar>(
    bc: &BoundaryCondition<T>,
    exps: &BoundaryExponents<T>,
    x: T,
) -> Result<Jet<T>> {
    if !bc.contains_open(x) {
        return Err(Error::Domain {
            message: format!("boundary factor needs x inside ({}, {})", bc.x_a, bc.x_b),
            x: Some(x.as_f64()),
        });
    }
    let (m_a, m_b) = (exps.m_a(), exps.m_b());
    let p = x - bc.x_a;
    let q = bc.x_b - x;
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let value = (m_a * ln_p + m_b * ln_q).exp();
    let log_slope = m_a / p - m_b / q;
    let slope = value * log_slope;

    let dv_a = value * m_a * ln_p;
    let dv_b = value * m_b * ln_q;
    let jet = Jet {
        y: value,
        dy_dx: slope,
        grad_y: vec![dv_a, dv_b],
        grad_dy_dx: vec![
            dv_a * log_slope + value * m_a / p,
            dv_b * log_slope - value * m_b / q,
        ],
    };
    if !jet.is_finite() {
        return Err(Error::overflow("boundary factor").at(x.as_f64()));
    }
    Ok(jet)
}

/// Composed jet with gradients laid out as the family parameters followed by
/// `rho_a, rho_b`.
pub fn compose_final<T: Scalar>(
    spec: &FamilySpec,
    params: &[T],
    exps: &BoundaryExponents<T>,
    bc: &BoundaryCondition<T>,
    x: T,
) -> Result<Jet<T>> {
    let mut out = Jet::zeros(spec.param_count() + 2);
    let mut scratch = Jet::zeros(spec.param_count());
    compose_final_into(spec, params, exps, bc, x, &mut scratch, &mut out)?;
    Ok(out)
}

/// Buffer-reusing form of [`compose_final`]; `net` is scratch space.
pub fn compose_final_into<T: Scalar>(
    spec: &FamilySpec,
    params: &[T],
    exps: &BoundaryExponents<T>,
    bc: &BoundaryCondition<T>,
    x: T,
    net: &mut Jet<T>,
    out: &mut Jet<T>,
) -> Result<()> {
    let bound = boundary_factor_jet(bc, exps, x)?;
    spec.eval_jet_into(params, x, Interval::new(bc.x_a, bc.x_b), net)?;
    let (g, g_slope) = bc.linear_interpolant(x);
    let n = net.len();
    out.resize(n + 2);

    let (b, db) = (bound.y, bound.dy_dx);
    out.y = net.y * b + g;
    out.dy_dx = net.dy_dx * b + net.y * db + g_slope;
    for k in 0..n {
        out.grad_y[k] = b * net.grad_y[k];
        out.grad_dy_dx[k] = b * net.grad_dy_dx[k] + db * net.grad_y[k];
    }
    for k in 0..2 {
        out.grad_y[n + k] = net.y * bound.grad_y[k];
        out.grad_dy_dx[n + k] = net.dy_dx * bound.grad_y[k] + net.y * bound.grad_dy_dx[k];
    }
    if !out.is_finite() {
        return Err(Error::overflow("composed model").at(x.as_f64()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximators::parse_structure;

    fn bc(x_a: f64, y_a: f64, x_b: f64, y_b: f64) -> BoundaryCondition<f64> {
        BoundaryCondition::new(x_a, x_b, y_a, y_b).unwrap()
    }

    #[test]
    fn unit_factor_at_center() {
        let jet = boundary_factor_jet(&bc(-1.0, 0.0, 1.0, 0.0), &BoundaryExponents::unit(), 0.0).unwrap();
        assert_eq!(jet.y, 1.0);
        assert_eq!(jet.dy_dx, 0.0);
    }

    #[test]
    fn fractional_factor() {
        let exps = BoundaryExponents::from_exponents(0.75, 1.0).unwrap();
        let jet = boundary_factor_jet(&bc(0.0, 0.0, 1.0, 0.0), &exps, 0.5).unwrap();
        let want = 0.5f64.powf(0.75) * 0.5;
        assert!((jet.y - want).abs() < 1e-15);
        assert!((jet.y - 0.297_301_778_750_680_8).abs() < 1e-15);
    }

    #[test]
    fn factor_vanishes_near_endpoint() {
        let exps = BoundaryExponents::from_exponents(1.3, 0.9).unwrap();
        let jet = boundary_factor_jet(&bc(-2.0, 0.0, 3.0, 0.0), &exps, -2.0 + 1e-12).unwrap();
        assert!(jet.y.abs() < 1e-10);
    }

    #[test]
    fn factor_rejects_closed_endpoints() {
        let b = bc(0.0, 0.0, 1.0, 0.0);
        for x in [0.0, 1.0, -0.5, 2.0] {
            assert!(matches!(
                boundary_factor_jet(&b, &BoundaryExponents::unit(), x),
                Err(Error::Domain { .. })
            ));
        }
    }

    #[test]
    fn interpolant() {
        assert_eq!(bc(-1.0, 0.0, 1.0, 2.0).linear_interpolant(0.0), (1.0, 1.0));
        assert_eq!(bc(0.0, 0.0, 1.0, 0.0).linear_interpolant(0.37).0, 0.0);
        assert_eq!(bc(0.0, 0.0, 1.0, 0.25).linear_interpolant(1.0).0, 0.25);
    }

    #[test]
    fn invalid_interval() {
        assert!(BoundaryCondition::new(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(BoundaryCondition::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(BoundaryExponents::from_exponents(0.0, 1.0).is_err());
    }

    #[test]
    fn zero_family_reduces_to_line() {
        let spec = parse_structure("Poly-3").unwrap();
        let b = bc(0.0, 0.3, 2.0, -1.1);
        let exps = BoundaryExponents::from_exponents(0.8, 1.7).unwrap();
        for x in [0.1, 0.9, 1.7] {
            let jet = compose_final(&spec, &[0.0; 4], &exps, &b, x).unwrap();
            let (g, s) = b.linear_interpolant(x);
            assert_eq!(jet.y, g);
            assert_eq!(jet.dy_dx, s);
        }
    }

    #[test]
    fn composed_product_rule_by_hand() {
        let spec = parse_structure("Poly-1").unwrap();
        let jet = compose_final(
            &spec,
            &[0.0, 1.0],
            &BoundaryExponents::unit(),
            &bc(-1.0, 0.0, 1.0, 2.0),
            0.0,
        )
        .unwrap();
        assert_eq!(jet.y, 2.0);
        assert_eq!(jet.dy_dx, 1.0);
        assert_eq!(jet.len(), 4);
    }

    #[test]
    fn symmetric_factor() {
        let b = bc(-1.0, 0.0, 1.0, 0.0);
        let exps = BoundaryExponents::from_exponents(1.4, 1.4).unwrap();
        for x in [0.1, 0.33, 0.8, 0.999] {
            let l = boundary_factor_jet(&b, &exps, -x).unwrap().y;
            let r = boundary_factor_jet(&b, &exps, x).unwrap().y;
            assert!((l - r).abs() <= 1e-15 * r.abs().max(1e-300));
        }
    }
}
