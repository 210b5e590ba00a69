//! Three-point Lagrangian models: the cross-ratio legs and the exponential model
//! with its regular deformation `gamma`.

use crate::forms::{FormError, Legs, Octahedron, ThreePointForm, TwoForm, ZeroForm};
use crate::lattice::CubeLabel;
use crate::solve::quadrature::{antiderivative, QuadratureConfig};

use super::quad::QuadModel;
use super::ModelError;

fn domain(msg: impl Into<String>) -> FormError {
    FormError::Domain(msg.into())
}

/// `L = a log|x - y|`, `Lambda = (a - b) log|x - y|`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Q1Legs;

impl Q1Legs {
    fn check(x: f64, y: f64) -> Result<(), FormError> {
        if x == y || !(x - y).is_finite() {
            Err(domain(format!(
                "coincident fields {x} and {y} in a log leg"
            )))
        } else {
            Ok(())
        }
    }
}

impl Legs for Q1Legs {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        Self::check(x, y)?;
        Ok(a * (x - y).abs().ln())
    }
    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        if a == b {
            return Ok(0.0);
        }
        Self::check(x, y)?;
        Ok((a - b) * (x - y).abs().ln())
    }
    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        Self::check(x, y)?;
        Ok(a / (x - y))
    }
    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        if a == b {
            return Ok(0.0);
        }
        Self::check(x, y)?;
        Ok((a - b) / (x - y))
    }
}

/// Legs of the exponential model:
/// `dL/dx = log((a - e^{y-x}) / (1 - gamma a e^{y-x}))`,
/// `dLambda/dx = log((a - b e^{y-x}) / (b - a e^{y-x}))`.
///
/// `L` and `Lambda` are antiderivatives in `u = y - x` normalised at `u = 0`,
/// integrating `log|.|` through the integrable singularities between `0` and `u`.
#[derive(Clone, Copy, Debug)]
pub struct ExpLegs {
    pub gamma: f64,
    pub quadrature: QuadratureConfig,
}

impl ExpLegs {
    pub fn new(gamma: f64) -> Self {
        ExpLegs {
            gamma,
            quadrature: QuadratureConfig::default(),
        }
    }

    fn leg_factors(&self, u: f64, a: f64) -> Result<(f64, f64), FormError> {
        let e = u.exp();
        let num = a - e;
        let den = 1.0 - self.gamma * a * e;
        if !(num > 0.0) || !(den > 0.0) || !e.is_finite() {
            return Err(domain(format!(
                "leg argument outside its domain: a = {a}, y - x = {u}"
            )));
        }
        Ok((num, den))
    }

    fn ratio(u: f64, a: f64, b: f64) -> Result<f64, FormError> {
        let e = u.exp();
        let r = (a - b * e) / (b - a * e);
        if !(r > 0.0) || !r.is_finite() {
            return Err(domain(format!(
                "Lambda leg argument outside its domain: a = {a}, b = {b}, y - x = {u}"
            )));
        }
        Ok(r)
    }

    fn quad(&self, g: impl FnMut(f64) -> f64, u: f64, breaks: &[f64]) -> Result<f64, FormError> {
        antiderivative(g, 0.0, u, breaks, &self.quadrature)
            .map_err(|e| domain(format!("quadrature: {e}")))
    }
}

impl Legs for ExpLegs {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        let u = y - x;
        self.leg_factors(u, a)?;
        if !(a > 0.0) {
            return Err(domain(format!("exponential leg needs a > 0, got {a}")));
        }
        // a - e^s = -a expm1(s - s0), 1 - g a e^s = -expm1(s - t0)
        let s0 = a.ln();
        let mut breaks = vec![s0];
        let g = self.gamma;
        let t0 = if g > 0.0 {
            -(g * a).ln()
        } else {
            f64::INFINITY
        };
        if g > 0.0 {
            breaks.push(t0);
        }
        let integrand = |s: f64| {
            let mut v = s0 + (s - s0).exp_m1().abs().ln();
            if g > 0.0 {
                v -= (s - t0).exp_m1().abs().ln();
            }
            v
        };
        Ok(-self.quad(integrand, u, &breaks)?)
    }

    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        if a == b {
            return Ok(0.0);
        }
        if a > b {
            return self.lambda(y, x, b, a).map(|v| -v);
        }
        let u = y - x;
        Self::ratio(u, a, b)?;
        if !(a > 0.0) {
            return Err(domain(format!(
                "exponential Lambda leg needs positive parameters, got {a}"
            )));
        }
        // a - b e^s = -a expm1(s - s0), b - a e^s = -b expm1(s + s0)
        let s0 = (a / b).ln();
        let c = a.ln() - b.ln();
        let integrand = |s: f64| c + (s - s0).exp_m1().abs().ln() - (s + s0).exp_m1().abs().ln();
        Ok(-self.quad(integrand, u, &[s0, -s0])?)
    }

    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        let u = y - x;
        let (num, _) = self.leg_factors(u, a)?;
        if self.gamma == 0.0 {
            Ok(num.ln())
        } else {
            Ok(num.ln() - (-self.gamma * a * u.exp()).ln_1p())
        }
    }

    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        if a == b {
            return Ok(0.0);
        }
        Ok(Self::ratio(y - x, a, b)?.ln())
    }
}

/// Legs of one of the Lagrangian models.
#[derive(Clone, Copy, Debug)]
pub enum ModelLegs {
    Q1(Q1Legs),
    Exp(ExpLegs),
}

impl Legs for ModelLegs {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        match self {
            ModelLegs::Q1(g) => g.l(x, y, a),
            ModelLegs::Exp(g) => g.l(x, y, a),
        }
    }
    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        match self {
            ModelLegs::Q1(g) => g.lambda(x, y, a, b),
            ModelLegs::Exp(g) => g.lambda(x, y, a, b),
        }
    }
    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        match self {
            ModelLegs::Q1(g) => g.psi(x, y, a),
            ModelLegs::Exp(g) => g.psi(x, y, a),
        }
    }
    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        match self {
            ModelLegs::Q1(g) => g.phi(x, y, a, b),
            ModelLegs::Exp(g) => g.phi(x, y, a, b),
        }
    }
}

pub type LagrangianForm = ThreePointForm<ModelLegs>;

/// Fields of the seven-point stencil of a planar flower in directions 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TodaStencil {
    pub center: f64,
    /// `x(+e_1)`
    pub fwd1: f64,
    /// `x(-e_1)`
    pub back1: f64,
    /// `x(+e_2)`
    pub fwd2: f64,
    /// `x(-e_2)`
    pub back2: f64,
    /// `x(-e_1 + e_2)`
    pub back1_fwd2: f64,
    /// `x(e_1 - e_2)`
    pub fwd1_back2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LagrangianModel {
    Q1Zero,
    Exponential { gamma: f64 },
    Zero,
}

fn rotate3(a: [f64; 3]) -> [f64; 3] {
    [a[1], a[2], a[0]]
}

fn positive_log(v: f64, what: &str) -> Result<f64, ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(v.ln())
    } else {
        Err(ModelError::Domain(format!(
            "{what} factor {v} is not positive"
        )))
    }
}

fn finite(v: f64, what: &str) -> Result<f64, ModelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::Domain(format!("{what} is not finite")))
    }
}

impl LagrangianModel {
    pub fn gamma(&self) -> f64 {
        match self {
            LagrangianModel::Exponential { gamma } => *gamma,
            _ => 0.0,
        }
    }

    pub fn legs(&self) -> Option<ModelLegs> {
        match *self {
            LagrangianModel::Q1Zero => Some(ModelLegs::Q1(Q1Legs)),
            LagrangianModel::Exponential { gamma } => Some(ModelLegs::Exp(ExpLegs::new(gamma))),
            LagrangianModel::Zero => None,
        }
    }

    pub fn form(&self, alpha: Vec<f64>) -> Box<dyn TwoForm> {
        match self.legs() {
            Some(legs) => Box::new(ThreePointForm::new(legs, alpha)),
            None => Box::new(ZeroForm),
        }
    }

    /// `dS^ijk/dx_label` in the closed form of the model, oriented like the generic
    /// assembly. Exponential residuals are logs of the four-factor products in `X = e^x`.
    pub fn corner_residual_closed(
        &self,
        label: CubeLabel,
        o: &Octahedron,
        alpha: [f64; 3],
    ) -> Result<f64, ModelError> {
        use CubeLabel::*;
        let mut o = *o;
        let mut a = alpha;
        for _ in 0..crate::forms::rotations_to_base(label) {
            o = o.rotated();
            a = rotate3(a);
        }
        let [ai, aj, ak] = a;
        let two_index = matches!(label, IJ | JK | IK);
        match self {
            LagrangianModel::Zero => Ok(0.0),
            _ if matches!(label, X | IJK) => Ok(0.0),
            LagrangianModel::Q1Zero => {
                let (xi, xj, xk) = (o.get(I), o.get(J), o.get(K));
                let (xij, xjk, xik) = (o.get(IJ), o.get(JK), o.get(IK));
                // a Lambda leg with equal parameters vanishes identically
                let lam = |c: f64, d: f64| if c == 0.0 { 0.0 } else { c / d };
                let r = if two_index {
                    aj / (xij - xi) - ai / (xij - xj)
                        + lam(ak - aj, xij - xik)
                        + lam(ai - ak, xij - xjk)
                } else {
                    -(aj / (xij - xi) - ak / (xik - xi) - lam(aj - ai, xj - xi)
                        + lam(ak - ai, xk - xi))
                };
                finite(r, "cross-ratio corner residual")
            }
            LagrangianModel::Exponential { gamma: g } => {
                let g = *g;
                let x = |l: CubeLabel| o.get(l).exp();
                let (xi, xj, xk) = (x(I), x(J), x(K));
                let (xij, xjk, xik) = (x(IJ), x(JK), x(IK));
                let lam = |a: f64, b: f64, p: f64, q: f64| {
                    if a == b {
                        1.0
                    } else {
                        (a * p - b * q) / (b * p - a * q)
                    }
                };
                let factors = if two_index {
                    [
                        (aj * xi - xij) / (xi - g * aj * xij),
                        lam(aj, ak, xij, xik),
                        (xj - g * ai * xij) / (ai * xj - xij),
                        lam(ak, ai, xij, xjk),
                    ]
                } else {
                    [
                        (aj * xi - xij) / (xi - g * aj * xij),
                        lam(ai, aj, xi, xj),
                        (xi - g * ak * xik) / (ak * xi - xik),
                        lam(ak, ai, xi, xk),
                    ]
                };
                let mut sum = 0.0;
                for f in factors {
                    sum += positive_log(f, "corner equation")?;
                }
                Ok(if two_index { -sum } else { sum })
            }
        }
    }

    /// The model's octahedron relation. The deformed exponential relation is the
    /// log of the printed product divided by `-gamma`, which tends to the undeformed
    /// sum as `gamma -> 0`.
    pub fn octahedron_residual(&self, o: &Octahedron, alpha: [f64; 3]) -> Result<f64, ModelError> {
        use CubeLabel::*;
        let [ai, aj, ak] = alpha;
        match *self {
            LagrangianModel::Q1Zero => QuadModel::Q1Zero.octahedron_residual(o, alpha),
            LagrangianModel::Zero => Ok(0.0),
            LagrangianModel::Exponential { gamma } => {
                let x = |l: CubeLabel| o.get(l).exp();
                let (xi, xj, xk) = (x(I), x(J), x(K));
                let (xij, xjk, xki) = (x(IJ), x(JK), x(IK));
                if gamma == 0.0 {
                    return finite(
                        (aj * xij - ak * xki) / xi
                            + (ak * xjk - ai * xij) / xj
                            + (ai * xki - aj * xjk) / xk,
                        "octahedron relation",
                    );
                }
                let lp = |t: f64| {
                    if t > -1.0 {
                        Ok(t.ln_1p())
                    } else {
                        Err(ModelError::Domain(
                            "octahedron factor is not positive".into(),
                        ))
                    }
                };
                let s = lp(-gamma * aj * xij / xi)? - lp(-gamma * ai * xij / xj)?
                    + lp(-gamma * ak * xjk / xj)?
                    - lp(-gamma * aj * xjk / xk)?
                    + lp(-gamma * ai * xki / xk)?
                    - lp(-gamma * ak * xki / xi)?;
                finite(-s / gamma, "octahedron relation")
            }
        }
    }

    /// Smallest leg argument entering the six corner equations; positive iff every
    /// leg is defined. For the cross-ratio model, the smallest field difference.
    pub fn admissibility_margin(&self, o: &Octahedron, alpha: [f64; 3]) -> f64 {
        use CubeLabel::*;
        let [ai, aj, ak] = alpha;
        let l_legs = [
            (I, IJ, aj),
            (I, IK, ak),
            (J, IJ, ai),
            (J, JK, ak),
            (K, IK, ai),
            (K, JK, aj),
        ];
        let lambda_legs = [
            (I, J, ai, aj),
            (J, K, aj, ak),
            (K, I, ak, ai),
            (IJ, IK, aj, ak),
            (JK, IJ, ak, ai),
            (IK, JK, ai, aj),
        ];
        let mut m = f64::INFINITY;
        match *self {
            LagrangianModel::Zero => {}
            LagrangianModel::Q1Zero => {
                for (p, q, _) in l_legs {
                    m = m.min((o.get(q) - o.get(p)).abs());
                }
                for (p, q, a, b) in lambda_legs {
                    if a != b {
                        m = m.min((o.get(q) - o.get(p)).abs());
                    }
                }
            }
            LagrangianModel::Exponential { gamma } => {
                for (p, q, a) in l_legs {
                    let e = (o.get(q) - o.get(p)).exp();
                    m = m.min(a - e);
                    if gamma > 0.0 {
                        m = m.min(1.0 - gamma * a * e);
                    }
                }
                for (p, q, a, b) in lambda_legs.into_iter().filter(|l| l.2 != l.3) {
                    let e = (o.get(q) - o.get(p)).exp();
                    let (n, d) = (a - b * e, b - a * e);
                    m = m.min(if n * d > 0.0 {
                        n.abs().min(d.abs())
                    } else {
                        -1.0
                    });
                }
            }
        }
        if m.is_nan() {
            -1.0
        } else {
            m
        }
    }

    /// Log of the printed relativistic Toda relation (left side over right side),
    /// with `alpha` for direction 1 and `beta` for direction 2.
    pub fn toda_residual(&self, s: &TodaStencil, alpha: f64, beta: f64) -> Result<f64, ModelError> {
        if !matches!(self, LagrangianModel::Exponential { gamma } if *gamma == 0.0) {
            return Err(ModelError::NoLayer {
                model: "this model".into(),
                layer: "relativistic Toda".into(),
            });
        }
        let x = s.center;
        let e = f64::exp;
        let lhs = (e(s.fwd1 - x) - alpha) / (e(x - s.back1) - alpha);
        let w = e(s.back1_fwd2 - x);
        let v = e(x - s.fwd1_back2);
        let r1 = (e(s.fwd2 - x) - beta) / (e(x - s.back2) - beta);
        let r2 = (beta * w - alpha) / (alpha * w - beta);
        let r3 = (alpha * v - beta) / (beta * v - alpha);
        Ok(positive_log(lhs, "Toda")?
            - positive_log(r1, "Toda")?
            - positive_log(r2, "Toda")?
            - positive_log(r3, "Toda")?)
    }
}

/// The deformed three-leg expression around `x` on the square `(x, x_i, x_ik, x_k)`,
/// as a plain product in `X = e^x`; equal to one on solutions.
pub fn deformed_three_leg(x: [f64; 4], ai: f64, ak: f64, gamma: f64) -> f64 {
    let [xx, xi, xik, xk] = x.map(f64::exp);
    gamma * (ak * xi - xik) / (xi - gamma * ak * xik) * (ai * xi - ak * xk) / (ak * xi - ai * xk)
        * (ai * xx - xi)
        / (xx - gamma * ai * xi)
}

/// The re-scaled hyperbolic cross-ratio polynomial on `(x, x_i, x_ik, x_k)` in `X = e^x`.
pub fn rescaled_q3(x: [f64; 4], ai: f64, ak: f64, gamma: f64) -> f64 {
    let [xx, xi, xik, xk] = x.map(f64::exp);
    let g = gamma;
    ak * (1.0 - g * ai * ai) * (xx * xi + g * xk * xik)
        - ai * (1.0 - g * ak * ak) * (xx * xk + g * xi * xik)
        - g * (ak * ak - ai * ai) * (xx * xik + xi * xk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{corner_residual, cube_action, four_leg_residual, CubeFields};
    use proptest::prelude::*;

    /// Real dilogarithm for t <= 1.
    fn li2(t: f64) -> f64 {
        use std::f64::consts::PI;
        if t < -1.0 {
            let l = (-t).ln();
            return -PI * PI / 6.0 - 0.5 * l * l - li2(1.0 / t);
        }
        if t > 0.5 {
            return PI * PI / 6.0 - t.ln() * (1.0 - t).ln() - li2(1.0 - t);
        }
        if t < -0.5 {
            // Li2(t) = -Li2(t/(t-1)) - 0.5 ln^2(1-t)
            let l = (1.0 - t).ln();
            return -li2(t / (t - 1.0)) - 0.5 * l * l;
        }
        let (mut sum, mut p) = (0.0, 1.0);
        for k in 1..200 {
            p *= t;
            sum += p / (k * k) as f64;
        }
        sum
    }

    /// `\int_0^u log(a - e^s) ds` for `a > 1`, `u < log a`.
    fn exp_leg_integral(a: f64, u: f64) -> f64 {
        u * a.ln() - li2(u.exp() / a) + li2(1.0 / a)
    }

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn dilog_oracle_for_exponential_leg() {
        let legs = ExpLegs::new(0.0);
        for (a, u) in [(2.0, 0.5), (1.5, -2.0), (3.0, 1.0), (2.5, -0.3)] {
            let l = legs.l(0.0, u, a).unwrap();
            assert!((l + exp_leg_integral(a, u)).abs() < 1e-12, "a={a} u={u}");
        }
    }

    #[test]
    fn psi_examples() {
        assert_eq!(Q1Legs.psi(0.0, 1.0, 2.0).unwrap(), -2.0);
        assert_eq!(ExpLegs::new(0.0).psi(0.0, 0.0, 2.0).unwrap(), 0.0);
        let g0 = ExpLegs::new(0.0);
        let gz = ExpLegs {
            gamma: 0.0,
            ..ExpLegs::new(0.3)
        };
        for (x, y, a) in [(0.1, 0.4, 2.0), (-0.3, 0.2, 1.7)] {
            assert_eq!(g0.psi(x, y, a).unwrap(), gz.psi(x, y, a).unwrap());
            assert_eq!(g0.l(x, y, a).unwrap(), gz.l(x, y, a).unwrap());
        }
    }

    #[test]
    fn single_square_action() {
        let form = LagrangianModel::Q1Zero.form(vec![1.0, 2.0]);
        let v = form.value((1, 2), &[0.0, 1.0, 3.0, 2.0]).unwrap();
        assert!((v + 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn q1_corner_example() {
        use CubeLabel::*;
        let o = Octahedron([0.0, 1.0, -1.0, 2.0, 0.0, -1.5]);
        let m = LagrangianModel::Q1Zero;
        assert!(
            m.corner_residual_closed(I, &o, [1.0, 2.0, 3.0])
                .unwrap()
                .abs()
                < 1e-15
        );
        let form = m.form(vec![1.0, 2.0, 3.0]);
        let g = corner_residual(&CubeFields::from_octahedron(&o), [1, 2, 3], &*form, I).unwrap();
        assert!(g.abs() < 1e-15);
    }

    #[test]
    fn all_equal_fields_are_singular() {
        let form = LagrangianModel::Q1Zero.form(vec![1.0, 2.0, 3.0]);
        let cf = CubeFields::from_octahedron(&Octahedron([0.5; 6]));
        assert!(matches!(
            cube_action(&cf, [1, 2, 3], &*form),
            Err(FormError::Domain(_))
        ));
    }

    #[test]
    fn symmetric_data_vanish() {
        use CubeLabel::*;
        let o = Octahedron([-1.3, 1.3, 1.3, -1.5, 1.1, -1.5]);
        let alpha = [1.7, 2.4, 2.4];
        for m in [
            LagrangianModel::Q1Zero,
            LagrangianModel::Exponential { gamma: 0.0 },
        ] {
            assert!(m.admissibility_margin(&o, alpha) > 0.0);
            assert!(m.corner_residual_closed(I, &o, alpha).unwrap().abs() < 1e-15);
        }
        let o = Octahedron([0.2, 0.2, 0.2, 0.7, 0.7, 0.7]);
        let m = LagrangianModel::Exponential { gamma: 0.0 };
        assert_eq!(m.octahedron_residual(&o, [2.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn lambda_exactly_antisymmetric() {
        let legs = ExpLegs::new(0.0);
        for (x, y, a, b) in [(0.0, 1.2, 1.5, 2.5), (0.3, -0.9, 2.8, 1.6)] {
            let p = legs.lambda(x, y, a, b).unwrap();
            let q = legs.lambda(y, x, b, a).unwrap();
            assert_eq!(p, -q);
        }
    }

    #[test]
    fn additive_constants_cancel_in_cube_action() {
        struct Shifted(ModelLegs);
        impl Legs for Shifted {
            fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
                Ok(self.0.l(x, y, a)? + 3.0 * a * a - 1.0)
            }
            fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
                self.0.lambda(x, y, a, b)
            }
            fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
                self.0.psi(x, y, a)
            }
            fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
                self.0.phi(x, y, a, b)
            }
        }
        let o = Octahedron([0.1, -0.7, 0.4, 1.3, -0.2, 0.8]);
        let cf = CubeFields::from_octahedron(&o);
        let alpha = vec![1.0, 2.0, 3.0];
        let base = ThreePointForm::new(ModelLegs::Q1(Q1Legs), alpha.clone());
        let shifted = ThreePointForm::new(Shifted(ModelLegs::Q1(Q1Legs)), alpha);
        let a = cube_action(&cf, [1, 2, 3], &base).unwrap();
        let b = cube_action(&cf, [1, 2, 3], &shifted).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    fn exp_octahedron() -> Octahedron {
        // admissible for alpha = (2, 2.5, 1.8) and gamma up to 0.05
        Octahedron([0.9, 1.5, 0.4, -0.1, -0.8, -1.4])
    }

    #[test]
    fn exponential_closed_forms_match_generic() {
        let o = exp_octahedron();
        let alpha = [2.0, 2.5, 1.8];
        for gamma in [0.0, 0.05] {
            let m = LagrangianModel::Exponential { gamma };
            assert!(m.admissibility_margin(&o, alpha) > 0.0);
            let form = m.form(alpha.to_vec());
            let view = form.three_point().unwrap();
            for l in CubeLabel::OCTAHEDRON {
                let c = m.corner_residual_closed(l, &o, alpha).unwrap();
                let g = corner_residual(&CubeFields::from_octahedron(&o), [1, 2, 3], &*form, l)
                    .unwrap();
                let f = four_leg_residual(&view, &o, [1, 2, 3], l).unwrap();
                assert!((c - g).abs() < 1e-12, "{l}: {c} vs {g}");
                assert!((c - f).abs() < 1e-12, "{l}: {c} vs {f}");
            }
        }
    }

    #[test]
    fn exponential_legs_differentiate_to_psi_phi() {
        for gamma in [0.0, 0.1] {
            let legs = ExpLegs::new(gamma);
            for (x, y, a) in [(0.0, 0.4, 2.0), (0.2, -0.8, 1.6), (0.0, -0.3, 0.9)] {
                let d = fd(|t| legs.l(t, y, a).unwrap(), x);
                let p = legs.psi(x, y, a).unwrap();
                assert!((d - p).abs() < 1e-6 * p.abs().max(1.0), "{d} vs {p}");
                let d = fd(|t| legs.l(x, t, a).unwrap(), y);
                assert!((d + p).abs() < 1e-6 * p.abs().max(1.0));
            }
            for (x, y, a, b) in [
                (0.0, 1.0, 1.5, 2.5),
                (0.0, -1.2, 2.5, 1.5),
                (0.3, 0.9, 2.0, 2.2),
            ] {
                let d = fd(|t| legs.lambda(t, y, a, b).unwrap(), x);
                let p = legs.phi(x, y, a, b).unwrap();
                assert!((d - p).abs() < 1e-6 * p.abs().max(1.0), "{d} vs {p}");
            }
        }
    }

    #[test]
    fn exponential_domain_errors() {
        let legs = ExpLegs::new(0.0);
        assert!(matches!(legs.psi(0.0, 1.0, 2.0), Err(FormError::Domain(_))));
        assert!(matches!(
            legs.phi(0.0, 0.0, 1.5, 2.5),
            Err(FormError::Domain(_))
        ));
        assert!(matches!(
            legs.lambda(0.0, 0.1, 1.5, 2.5),
            Err(FormError::Domain(_))
        ));
        let m = LagrangianModel::Exponential { gamma: 0.0 };
        let bad = Octahedron([0.0, 0.0, 0.0, 2.0, 2.0, 2.0]);
        assert!(m
            .corner_residual_closed(CubeLabel::I, &bad, [1.5, 2.0, 2.5])
            .is_err());
    }

    #[test]
    fn gamma_zero_is_exactly_undeformed() {
        let legs = ExpLegs::new(0.0);
        for (x, y, a) in [(0.1, 0.4, 2.0), (-0.3, 0.2, 1.7), (0.0, -0.3, 0.9)] {
            let u: f64 = y - x;
            assert_eq!(legs.psi(x, y, a).unwrap(), (a - u.exp()).ln());
        }
        // undeformed (E_i) in X: the leg factor (a_j X_i - X_ij) / X_i
        let o = exp_octahedron();
        let [ai, aj, ak] = [2.0, 2.5, 1.8];
        let x = o.0.map(f64::exp);
        let (xi, xj, xk, xij, xik) = (x[0], x[1], x[2], x[3], x[5]);
        let printed = ((aj * xi - xij) / xi).ln()
            + ((ai * xi - aj * xj) / (aj * xi - ai * xj)).ln()
            + (xi / (ak * xi - xik)).ln()
            + ((ak * xi - ai * xk) / (ai * xi - ak * xk)).ln();
        let closed = LagrangianModel::Exponential { gamma: 0.0 }
            .corner_residual_closed(CubeLabel::I, &o, [ai, aj, ak])
            .unwrap();
        assert!((closed - printed).abs() < 1e-14);
    }

    #[test]
    fn deformation_is_linear_in_gamma() {
        let o = exp_octahedron();
        let alpha = [2.0, 2.5, 1.8];
        let und = LagrangianModel::Exponential { gamma: 0.0 };
        let r0 = und.corner_residual_closed(CubeLabel::I, &o, alpha).unwrap();
        let o0 = und.octahedron_residual(&o, alpha).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        for g in [1e-2, 1e-3, 1e-4] {
            let m = LagrangianModel::Exponential { gamma: g };
            let d1 = (m.corner_residual_closed(CubeLabel::I, &o, alpha).unwrap() - r0).abs();
            let d2 = (m.octahedron_residual(&o, alpha).unwrap() - o0).abs();
            if let Some((p1, p2)) = prev {
                assert!((p1 / d1 / 10.0 - 1.0).abs() < 0.1);
                assert!((p2 / d2 / 10.0 - 1.0).abs() < 0.1);
            }
            prev = Some((d1, d2));
        }
    }

    #[test]
    fn toda_matches_planar_el_residual() {
        use crate::forms::{el_residual, FieldMap};
        use crate::lattice::{MultiIndex, OrientedSquare, QuadSurface};
        let (alpha, beta) = (2.2, 1.6);
        let squares: Vec<_> = [(0, 0), (-1, 0), (-1, -1), (0, -1)]
            .iter()
            .map(|&(a, b)| OrientedSquare::new(MultiIndex::from([a, b]), 1, 2).unwrap())
            .collect();
        let surface = QuadSurface::new(2, squares).unwrap();
        // linear slope field: steps below log(alpha), log(beta) and diagonals separated
        let (s1, s2) = (0.2, -0.9);
        let mut fields = FieldMap::new();
        for a in -1..=1i64 {
            for b in -1..=1i64 {
                let noise = 0.01 * ((3 * a + 5 * b) as f64).sin();
                fields.insert(
                    MultiIndex::from([a, b]),
                    s1 * a as f64 + s2 * b as f64 + noise,
                );
            }
        }
        let form = LagrangianModel::Exponential { gamma: 0.0 }.form(vec![alpha, beta]);
        let n = MultiIndex::from([0, 0]);
        let el = el_residual(&surface, &fields, &*form, &n).unwrap();
        let get = |a: i64, b: i64| fields.get(&MultiIndex::from([a, b])).unwrap();
        let stencil = TodaStencil {
            center: get(0, 0),
            fwd1: get(1, 0),
            back1: get(-1, 0),
            fwd2: get(0, 1),
            back2: get(0, -1),
            back1_fwd2: get(-1, 1),
            fwd1_back2: get(1, -1),
        };
        let toda = LagrangianModel::Exponential { gamma: 0.0 }
            .toda_residual(&stencil, alpha, beta)
            .unwrap();
        assert!((el.abs() - toda.abs()).abs() < 1e-12, "{el} vs {toda}");
    }

    proptest! {
        #[test]
        fn q1_closed_forms_match_generic(
            o in prop::array::uniform6(-2.0f64..2.0),
            alpha in prop::array::uniform3(0.5f64..3.0),
        ) {
            let o = Octahedron(o);
            let m = LagrangianModel::Q1Zero;
            prop_assume!(m.admissibility_margin(&o, alpha) > 1e-2);
            let form = m.form(alpha.to_vec());
            for l in CubeLabel::OCTAHEDRON {
                let c = m.corner_residual_closed(l, &o, alpha).unwrap();
                let g = corner_residual(&CubeFields::from_octahedron(&o), [1, 2, 3], &*form, l).unwrap();
                prop_assert!((c - g).abs() <= 1e-12 * c.abs().max(1.0), "{}: {} vs {}", l, c, g);
            }
        }

        #[test]
        fn q1_legs_gradients(x in -2.0f64..2.0, d in 0.05f64..2.0, a in 0.5f64..3.0, b in 0.5f64..3.0) {
            let y = x + d;
            let p = Q1Legs.psi(x, y, a).unwrap();
            let q = fd(|t| Q1Legs.l(t, y, a).unwrap(), x);
            prop_assert!((p - q).abs() <= 1e-6 * p.abs().max(1.0));
            let p = Q1Legs.phi(x, y, a, b).unwrap();
            let q = fd(|t| Q1Legs.lambda(t, y, a, b).unwrap(), x);
            prop_assert!((p - q).abs() <= 1e-6 * p.abs().max(1.0));
        }

        #[test]
        fn rescaled_q3_and_three_leg_vanish_together(
            x in prop::array::uniform3(-0.5f64..0.5),
            ai in 1.5f64..3.0, ak in 1.5f64..3.0, gamma in 0.01f64..0.1,
        ) {
            // solve the polynomial for X_ik, then evaluate the three-leg product
            let [xx, xi, xk] = x;
            let p = |xik: f64| rescaled_q3([xx, xi, xik.ln(), xk], ai, ak, gamma);
            let p0 = p(f64::MIN_POSITIVE);
            let lead = p(1.0) - p0;
            let xik = -p0 / lead;
            prop_assume!(xik > 1e-3);
            let t = deformed_three_leg([xx, xi, xik.ln(), xk], ai, ak, gamma);
            prop_assert!((t - 1.0).abs() < 1e-8, "{t}");
        }
    }
}
