//! Quad-equations and their octahedron relations.

use crate::forms::Octahedron;
use crate::lattice::CubeLabel;

use super::ModelError;

/// Corner of an elementary square `(x, x_i, x_ij, x_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadSlot {
    X = 0,
    I = 1,
    IJ = 2,
    J = 3,
}

/// Result of inverting a quad-equation for one corner.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadRoot {
    pub value: f64,
    /// Coefficient of the unknown in the chart variable.
    pub lead: f64,
    /// Value of the polynomial with the unknown set to zero.
    pub constant: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadModel {
    /// Cross-ratio equation.
    Q1Zero,
    /// Shifted cross-ratio equation.
    Q1One,
    /// Hyperbolic shifted cross-ratio equation, multi-affine in `X = e^{2x}`.
    Q3Zero,
    /// Discrete KdV.
    H1,
    H2,
    /// Hirota equation.
    H3 {
        delta: f64,
    },
}

impl QuadModel {
    pub fn name(&self) -> &'static str {
        match self {
            QuadModel::Q1Zero => "q1d0",
            QuadModel::Q1One => "q1d1",
            QuadModel::Q3Zero => "q3d0",
            QuadModel::H1 => "h1",
            QuadModel::H2 => "h2",
            QuadModel::H3 { .. } => "h3",
        }
    }

    /// Coordinate in which the equation is multi-affine.
    pub fn chart(&self, x: f64) -> f64 {
        match self {
            QuadModel::Q3Zero => (2.0 * x).exp(),
            _ => x,
        }
    }

    pub fn unchart(&self, c: f64) -> Result<f64, ModelError> {
        match self {
            QuadModel::Q3Zero if c > 0.0 => Ok(0.5 * c.ln()),
            QuadModel::Q3Zero => Err(ModelError::Domain(format!(
                "q3d0 solution has non-positive chart value {c}"
            ))),
            _ => Ok(c),
        }
    }

    /// The quad polynomial in chart coordinates `c = (x, x_i, x_ij, x_j)`.
    pub fn polynomial(&self, c: [f64; 4], ai: f64, aj: f64) -> f64 {
        let [x, xi, xij, xj] = c;
        match *self {
            QuadModel::Q1Zero => aj * (x - xi) * (xij - xj) - ai * (xi - xij) * (xj - x),
            QuadModel::Q1One => {
                aj * (x - xi + ai) * (xij - xj + ai) - ai * (xi - xij - aj) * (xj - x - aj)
            }
            QuadModel::Q3Zero => {
                let (ep, em) = (ai.exp(), (-ai).exp());
                let (fp, fm) = (aj.exp(), (-aj).exp());
                (2.0 * aj).sinh() * (ep * x - em * xi) * (ep * xij - em * xj)
                    - (2.0 * ai).sinh() * (fm * xi - fp * xij) * (fm * xj - fp * x)
            }
            QuadModel::H1 => (x - xij) * (xi - xj) - (ai - aj),
            QuadModel::H2 => {
                (x - xij) * (xi - xj) + (aj - ai) * (x + xi + xj + xij) + aj * aj - ai * ai
            }
            QuadModel::H3 { delta } => {
                ai * (x * xi + xj * xij) - aj * (x * xj + xi * xij) + delta * (ai * ai - aj * aj)
            }
        }
    }

    /// Bound on the magnitude of the monomials of [`Self::polynomial`]; the scale
    /// against which residuals of the cleared equation are compared.
    pub fn polynomial_magnitude(&self, c: [f64; 4], ai: f64, aj: f64) -> f64 {
        let [x, xi, xij, xj] = c.map(f64::abs);
        let (ai, aj) = (ai.abs(), aj.abs());
        match *self {
            QuadModel::Q1Zero => aj * (x + xi) * (xij + xj) + ai * (xi + xij) * (xj + x),
            QuadModel::Q1One => {
                aj * (x + xi + ai) * (xij + xj + ai) + ai * (xi + xij + aj) * (xj + x + aj)
            }
            QuadModel::Q3Zero => {
                let (ep, em) = (ai.exp(), (-ai).exp());
                let (fp, fm) = (aj.exp(), (-aj).exp());
                (2.0 * aj).sinh() * (ep * x + em * xi) * (ep * xij + em * xj)
                    + (2.0 * ai).sinh() * (fm * xi + fp * xij) * (fm * xj + fp * x)
            }
            QuadModel::H1 => (x + xij) * (xi + xj) + ai + aj,
            QuadModel::H2 => {
                (x + xij) * (xi + xj) + (aj + ai) * (x + xi + xj + xij) + aj * aj + ai * ai
            }
            QuadModel::H3 { delta } => {
                ai * (x * xi + xj * xij)
                    + aj * (x * xj + xi * xij)
                    + delta.abs() * (ai * ai + aj * aj)
            }
        }
    }

    /// Whether the printed (uncleared) equation is defined at `f`.
    pub fn admissible(&self, f: [f64; 4], ai: f64, aj: f64) -> bool {
        if !f.iter().chain([&ai, &aj]).all(|v| v.is_finite()) {
            return false;
        }
        let [x, xi, xij, xj] = f;
        match self {
            QuadModel::Q1Zero => aj != 0.0 && (xi - xij) * (xj - x) != 0.0,
            QuadModel::Q1One => aj != 0.0 && (xi - xij - aj) * (xj - x - aj) != 0.0,
            QuadModel::Q3Zero => {
                (2.0 * aj).sinh() != 0.0 && (xi - xij - aj).sinh() * (xj - x - aj).sinh() != 0.0
            }
            _ => true,
        }
    }

    /// Denominator-cleared residual at fields `f = (x, x_i, x_ij, x_j)`.
    pub fn quad_residual(&self, f: [f64; 4], ai: f64, aj: f64) -> Result<f64, ModelError> {
        if !self.admissible(f, ai, aj) {
            return Err(ModelError::Domain(format!(
                "{} is not defined at {f:?}",
                self.name()
            )));
        }
        Ok(self.polynomial(f.map(|x| self.chart(x)), ai, aj))
    }

    /// Solve the equation for the field at `slot`; the entry of `f` at `slot` is ignored.
    pub fn solve_for(
        &self,
        slot: QuadSlot,
        f: [f64; 4],
        ai: f64,
        aj: f64,
    ) -> Result<QuadRoot, ModelError> {
        let mut c = f.map(|x| self.chart(x));
        let k = slot as usize;
        c[k] = 0.0;
        let p0 = self.polynomial(c, ai, aj);
        c[k] = 1.0;
        let p1 = self.polynomial(c, ai, aj);
        let lead = p1 - p0;
        if !lead.is_finite() || !p0.is_finite() {
            return Err(ModelError::Domain(format!(
                "{} polynomial is not finite at {f:?}",
                self.name()
            )));
        }
        if lead == 0.0 || lead.abs() <= 1e-14 * p0.abs().max(p1.abs()) {
            return Err(ModelError::Singular(format!(
                "{}: coefficient of the unknown vanishes",
                self.name()
            )));
        }
        Ok(QuadRoot {
            value: self.unchart(-p0 / lead)?,
            lead,
            constant: p0,
        })
    }

    /// Octahedron relation written as a cleared difference.
    pub fn octahedron_residual(&self, o: &Octahedron, alpha: [f64; 3]) -> Result<f64, ModelError> {
        use CubeLabel::*;
        let (xi, xj, xk) = (o.get(I), o.get(J), o.get(K));
        let (xij, xjk, xki) = (o.get(IJ), o.get(JK), o.get(IK));
        let [ai, aj, ak] = alpha;
        let r = match *self {
            QuadModel::Q1Zero => {
                (xij - xi) * (xjk - xj) * (xki - xk) - (xij - xj) * (xjk - xk) * (xki - xi)
            }
            QuadModel::Q1One => {
                (xij - xi + aj) * (xjk - xj + ak) * (xki - xk + ai)
                    - (xij - xj + ai) * (xjk - xk + aj) * (xki - xi + ak)
            }
            QuadModel::Q3Zero => {
                (xij - xi + aj).sinh() * (xjk - xj + ak).sinh() * (xki - xk + ai).sinh()
                    - (xij - xj + ai).sinh() * (xjk - xk + aj).sinh() * (xki - xi + ak).sinh()
            }
            QuadModel::H1 => xij * (xi - xj) + xjk * (xj - xk) + xki * (xk - xi),
            QuadModel::H2 => {
                xij * (xi - xj + ai - aj)
                    + xjk * (xj - xk + aj - ak)
                    + xki * (xk - xi + ak - ai)
                    + xi * (ak - aj)
                    + xj * (ai - ak)
                    + xk * (aj - ai)
            }
            QuadModel::H3 { .. } => {
                ai * xj * xij - aj * xi * xij + aj * xk * xjk - ak * xj * xjk + ak * xi * xki
                    - ai * xk * xki
            }
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(ModelError::Domain(
                "octahedron relation is not finite".into(),
            ))
        }
    }
}

pub const ALL_QUAD_MODELS: [QuadModel; 6] = [
    QuadModel::Q1Zero,
    QuadModel::Q1One,
    QuadModel::Q3Zero,
    QuadModel::H1,
    QuadModel::H2,
    QuadModel::H3 { delta: 0.0 },
];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn h1_example() {
        let m = QuadModel::H1;
        assert_eq!(
            m.quad_residual([0.0, 1.0, -1.0, -1.0], 3.0, 1.0).unwrap(),
            0.0
        );
        let r = m
            .solve_for(QuadSlot::IJ, [0.0, 1.0, 0.0, -1.0], 3.0, 1.0)
            .unwrap();
        assert_eq!(r.value, -1.0);
    }

    #[test]
    fn q1_example_and_cross_ratio() {
        let m = QuadModel::Q1Zero;
        assert_eq!(
            m.quad_residual([0.0, 1.0, 4.0, 2.0], 1.0, 3.0).unwrap(),
            0.0
        );
        let r = m
            .solve_for(QuadSlot::IJ, [0.0, 1.0, 0.0, 2.0], 1.0, 3.0)
            .unwrap();
        assert!((r.value - 4.0).abs() < 1e-15);
        let (x, xi, xij, xj) = (0.0, 1.0, r.value, 2.0);
        let cr = (x - xi) * (xij - xj) / ((xi - xij) * (xj - x));
        assert!((cr - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn q1_singular_coefficient() {
        let e = QuadModel::Q1Zero
            .solve_for(QuadSlot::IJ, [0.0, 1.0, 0.0, 2.0], 1.0, 2.0)
            .unwrap_err();
        assert!(matches!(e, ModelError::Singular(_)));
    }

    #[test]
    fn degenerate_symmetric_case() {
        for m in ALL_QUAD_MODELS {
            let f = [0.3, -0.4, 0.3, -0.4];
            if m.admissible(f, 1.2, 1.2) {
                assert_eq!(m.quad_residual(f, 1.2, 1.2).unwrap(), 0.0, "{}", m.name());
            }
        }
    }

    #[test]
    fn q1_inadmissible() {
        assert!(matches!(
            QuadModel::Q1Zero.quad_residual([0.0, 1.0, 1.0, 2.0], 1.0, 3.0),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn octahedron_examples() {
        let o = |v: [f64; 6]| Octahedron(v);
        let h1 = QuadModel::H1
            .octahedron_residual(&o([1.0, 2.0, 3.0, 5.0, 7.0, 6.0]), [1.0, 2.0, 3.0])
            .unwrap();
        assert_eq!(h1, 0.0);
        let q1 = QuadModel::Q1Zero
            .octahedron_residual(&o([0.1, 0.7, -0.5, 2.0, 2.0, 2.0]), [1.0, 2.0, 3.0])
            .unwrap();
        assert!(q1.abs() < 1e-14);
    }

    #[test]
    fn q3_chart_agrees_with_sinh_form() {
        let (x, xi, xij, xj, ai, aj) = (0.2f64, -0.3f64, 0.5f64, 0.1f64, 0.4f64, 0.7f64);
        let sinh_form = (2.0 * aj).sinh() * (x - xi + ai).sinh() * (xij - xj + ai).sinh()
            - (2.0 * ai).sinh() * (xi - xij - aj).sinh() * (xj - x - aj).sinh();
        let poly = QuadModel::Q3Zero
            .quad_residual([x, xi, xij, xj], ai, aj)
            .unwrap();
        let prefactor = (-(x + xi + xij + xj)).exp() / 4.0;
        assert!((poly * prefactor - sinh_form).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn multi_affine(
            f in prop::array::uniform4(-1.0f64..1.0),
            ai in 0.5f64..3.0, aj in 0.5f64..3.0,
            slot in 0usize..4, t in -1.0f64..1.0, h in 0.1f64..1.0,
        ) {
            for m in ALL_QUAD_MODELS {
                let mut c = f.map(|x| m.chart(x));
                let mut at = |v: f64| { c[slot] = v; m.polynomial(c, ai, aj) };
                let (p0, p1, p2) = (at(t - h), at(t), at(t + h));
                let scale = p0.abs().max(p1.abs()).max(p2.abs()).max(1.0);
                prop_assert!((p0 - 2.0 * p1 + p2).abs() <= 1e-10 * scale, "{}", m.name());
            }
        }

        #[test]
        fn solve_for_zeroes_residual(
            f in prop::array::uniform4(-1.0f64..1.0),
            ai in 0.5f64..3.0, aj in 0.5f64..3.0,
            slot in 0usize..4,
        ) {
            let slots = [QuadSlot::X, QuadSlot::I, QuadSlot::IJ, QuadSlot::J];
            for m in ALL_QUAD_MODELS {
                let Ok(root) = m.solve_for(slots[slot], f, ai, aj) else { continue };
                let mut g = f;
                g[slot] = root.value;
                let c = g.map(|x| m.chart(x));
                let r = m.polynomial(c, ai, aj);
                let scale = m.polynomial_magnitude(c, ai, aj);
                prop_assert!(r.abs() <= 1e-13 * scale.max(1.0), "{}: {r} vs {scale}", m.name());
            }
        }
    }
}
