//! Discrete 2-forms on oriented squares, actions and Euler-Lagrange residuals.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    CubeLabel, Dir, LatticeError, MultiIndex, OrientedCube, OrientedSquare, QuadSurface,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("no field value at {0}")]
    MissingField(MultiIndex),
    #[error("no field value for {0}")]
    MissingLabel(CubeLabel),
    #[error("direction {0} has no parameter")]
    MissingParameter(Dir),
    #[error("inadmissible configuration: {0}")]
    Domain(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Field values at finitely many lattice points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldMap {
    values: HashMap<MultiIndex, f64>,
}

impl FieldMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: MultiIndex, x: f64) -> Option<f64> {
        self.values.insert(n, x)
    }

    pub fn get(&self, n: &MultiIndex) -> Result<f64, FormError> {
        self.values
            .get(n)
            .copied()
            .ok_or_else(|| FormError::MissingField(n.clone()))
    }

    pub fn contains(&self, n: &MultiIndex) -> bool {
        self.values.contains_key(n)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries in lexicographic order of the lattice point.
    pub fn sorted(&self) -> Vec<(MultiIndex, f64)> {
        let mut v: Vec<_> = self.values.iter().map(|(k, x)| (k.clone(), *x)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn square(&self, s: &OrientedSquare) -> Result<[f64; 4], FormError> {
        let v = s.vertices();
        Ok([
            self.get(&v[0])?,
            self.get(&v[1])?,
            self.get(&v[2])?,
            self.get(&v[3])?,
        ])
    }
}

impl FromIterator<(MultiIndex, f64)> for FieldMap {
    fn from_iter<T: IntoIterator<Item = (MultiIndex, f64)>>(iter: T) -> Self {
        FieldMap {
            values: iter.into_iter().collect(),
        }
    }
}

/// The legs `L(x, y; a)` and `Lambda(x, y; a, b)` of a three-point 2-form,
/// with their partial derivatives.
pub trait Legs: Send + Sync {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError>;
    /// Must satisfy `lambda(x, y, a, b) = -lambda(y, x, b, a)`.
    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError>;
    /// `dL/dx`.
    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError>;
    /// `dLambda/dx`.
    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError>;
    /// `dL/dy`; the default assumes `L` depends on `y - x` only.
    fn psi_y(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        self.psi(x, y, a).map(|v| -v)
    }
    /// `dLambda/dy`; the default assumes `Lambda` depends on `y - x` only.
    fn phi_y(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        self.phi(x, y, a, b).map(|v| -v)
    }
}

impl<G: Legs + ?Sized> Legs for Box<G> {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        (**self).l(x, y, a)
    }
    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        (**self).lambda(x, y, a, b)
    }
    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        (**self).psi(x, y, a)
    }
    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        (**self).phi(x, y, a, b)
    }
    fn psi_y(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        (**self).psi_y(x, y, a)
    }
    fn phi_y(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        (**self).phi_y(x, y, a, b)
    }
}

/// Legs of a three-point form together with its lattice parameters.
#[derive(Clone, Copy)]
pub struct ThreePointView<'a> {
    legs: &'a dyn Legs,
    alpha: &'a [f64],
}

impl<'a> ThreePointView<'a> {
    pub fn new(legs: &'a dyn Legs, alpha: &'a [f64]) -> Self {
        ThreePointView { legs, alpha }
    }

    pub fn alpha(&self, d: Dir) -> Result<f64, FormError> {
        d.checked_sub(1)
            .and_then(|k| self.alpha.get(k))
            .copied()
            .ok_or(FormError::MissingParameter(d))
    }

    pub fn l(&self, x: f64, y: f64, d: Dir) -> Result<f64, FormError> {
        self.legs.l(x, y, self.alpha(d)?)
    }
    pub fn lambda(&self, x: f64, y: f64, d: Dir, e: Dir) -> Result<f64, FormError> {
        self.legs.lambda(x, y, self.alpha(d)?, self.alpha(e)?)
    }
    pub fn psi(&self, x: f64, y: f64, d: Dir) -> Result<f64, FormError> {
        self.legs.psi(x, y, self.alpha(d)?)
    }
    pub fn phi(&self, x: f64, y: f64, d: Dir, e: Dir) -> Result<f64, FormError> {
        self.legs.phi(x, y, self.alpha(d)?, self.alpha(e)?)
    }
    pub fn psi_y(&self, x: f64, y: f64, d: Dir) -> Result<f64, FormError> {
        self.legs.psi_y(x, y, self.alpha(d)?)
    }
    pub fn phi_y(&self, x: f64, y: f64, d: Dir, e: Dir) -> Result<f64, FormError> {
        self.legs.phi_y(x, y, self.alpha(d)?, self.alpha(e)?)
    }
}

/// A discrete 2-form: a value on every oriented square, given its four corner fields
/// in the order `(x, x_i, x_ij, x_j)`.
pub trait TwoForm: Send + Sync {
    fn value(&self, dirs: (Dir, Dir), f: &[f64; 4]) -> Result<f64, FormError>;
    /// Partial derivatives with respect to the four corner fields.
    fn grad(&self, dirs: (Dir, Dir), f: &[f64; 4]) -> Result<[f64; 4], FormError>;
    fn three_point(&self) -> Option<ThreePointView<'_>> {
        None
    }
}

/// `L(sigma_ij) = L(x, x_i; a_i) - L(x, x_j; a_j) - Lambda(x_i, x_j; a_i, a_j)`.
#[derive(Clone, Debug)]
pub struct ThreePointForm<G> {
    legs: G,
    alpha: Vec<f64>,
}

impl<G: Legs> ThreePointForm<G> {
    pub fn new(legs: G, alpha: Vec<f64>) -> Self {
        ThreePointForm { legs, alpha }
    }

    pub fn legs(&self) -> &G {
        &self.legs
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    fn view(&self) -> ThreePointView<'_> {
        ThreePointView::new(&self.legs, &self.alpha)
    }
}

impl<G: Legs> TwoForm for ThreePointForm<G> {
    fn value(&self, (i, j): (Dir, Dir), f: &[f64; 4]) -> Result<f64, FormError> {
        let v = self.view();
        let [x, xi, _, xj] = *f;
        Ok(v.l(x, xi, i)? - v.l(x, xj, j)? - v.lambda(xi, xj, i, j)?)
    }

    fn grad(&self, (i, j): (Dir, Dir), f: &[f64; 4]) -> Result<[f64; 4], FormError> {
        let v = self.view();
        let [x, xi, _, xj] = *f;
        Ok([
            v.psi(x, xi, i)? - v.psi(x, xj, j)?,
            v.psi_y(x, xi, i)? - v.phi(xi, xj, i, j)?,
            0.0,
            -v.psi_y(x, xj, j)? - v.phi_y(xi, xj, i, j)?,
        ])
    }

    fn three_point(&self) -> Option<ThreePointView<'_>> {
        Some(self.view())
    }
}

/// The 2-form that vanishes identically.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroForm;

impl TwoForm for ZeroForm {
    fn value(&self, _: (Dir, Dir), _: &[f64; 4]) -> Result<f64, FormError> {
        Ok(0.0)
    }
    fn grad(&self, _: (Dir, Dir), _: &[f64; 4]) -> Result<[f64; 4], FormError> {
        Ok([0.0; 4])
    }
}

/// Legs with `Lambda` perturbed by `eps (y - x)^3`. The result is still a valid
/// three-point form but in general no longer closed on solutions.
#[derive(Clone, Debug)]
pub struct PerturbedLegs<G> {
    pub inner: G,
    pub eps: f64,
}

impl<G: Legs> Legs for PerturbedLegs<G> {
    fn l(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        self.inner.l(x, y, a)
    }
    fn lambda(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        Ok(self.inner.lambda(x, y, a, b)? + self.eps * (y - x).powi(3))
    }
    fn psi(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        self.inner.psi(x, y, a)
    }
    fn phi(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        Ok(self.inner.phi(x, y, a, b)? - 3.0 * self.eps * (y - x).powi(2))
    }
    fn psi_y(&self, x: f64, y: f64, a: f64) -> Result<f64, FormError> {
        self.inner.psi_y(x, y, a)
    }
    fn phi_y(&self, x: f64, y: f64, a: f64, b: f64) -> Result<f64, FormError> {
        Ok(self.inner.phi_y(x, y, a, b)? + 3.0 * self.eps * (y - x).powi(2))
    }
}

/// The six one- and two-index fields of a cube, ordered as [`CubeLabel::OCTAHEDRON`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Octahedron(pub [f64; 6]);

impl Octahedron {
    pub fn get(&self, l: CubeLabel) -> f64 {
        self.0[l.octahedron_index().expect("octahedron label")]
    }

    pub fn set(&mut self, l: CubeLabel, v: f64) {
        self.0[l.octahedron_index().expect("octahedron label")] = v;
    }

    pub fn with(mut self, l: CubeLabel, v: f64) -> Self {
        self.set(l, v);
        self
    }

    /// Relabel under the cyclic permutation `i -> j -> k -> i`: the new `x_i` is the old `x_j`.
    pub fn rotated(&self) -> Self {
        let o = self.0;
        Octahedron([o[1], o[2], o[0], o[4], o[5], o[3]])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Number of cyclic rotations taking `label` to `x_i` or `x_ij`.
pub fn rotations_to_base(label: CubeLabel) -> usize {
    match label {
        CubeLabel::I | CubeLabel::IJ => 0,
        CubeLabel::J | CubeLabel::JK => 1,
        CubeLabel::K | CubeLabel::IK => 2,
        CubeLabel::X | CubeLabel::IJK => 0,
    }
}

/// Field values on the eight vertices of a cube, any of which may be absent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CubeFields([Option<f64>; 8]);

impl CubeFields {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Values ordered as [`CubeLabel::ALL`].
    pub fn full(v: [f64; 8]) -> Self {
        CubeFields(v.map(Some))
    }

    pub fn from_octahedron(o: &Octahedron) -> Self {
        let mut c = Self::empty();
        for l in CubeLabel::OCTAHEDRON {
            c = c.with(l, o.get(l));
        }
        c
    }

    pub fn with(mut self, l: CubeLabel, v: f64) -> Self {
        self.0[l.index()] = Some(v);
        self
    }

    pub fn get(&self, l: CubeLabel) -> Option<f64> {
        self.0[l.index()]
    }

    pub fn require(&self, l: CubeLabel) -> Result<f64, FormError> {
        self.get(l).ok_or(FormError::MissingLabel(l))
    }

    pub fn octahedron(&self) -> Result<Octahedron, FormError> {
        let mut o = [0.0; 6];
        for (k, l) in CubeLabel::OCTAHEDRON.iter().enumerate() {
            o[k] = self.require(*l)?;
        }
        Ok(Octahedron(o))
    }

    /// All eight values. For three-point forms the values at `x` and `x_ijk` do not
    /// enter any corner residual at the octahedron or the cube action; if missing they
    /// are replaced by a value above all others, which keeps every leg that touches
    /// them away from coincidences.
    fn for_assembly(&self, form: &dyn TwoForm) -> Result<[f64; 8], FormError> {
        let mut out = [0.0; 8];
        let top = self
            .0
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        for l in CubeLabel::ALL {
            out[l.index()] = match self.get(l) {
                Some(v) => v,
                None if form.three_point().is_some()
                    && matches!(l, CubeLabel::X | CubeLabel::IJK)
                    && top.is_finite() =>
                {
                    top + 1.0
                }
                None => return Err(FormError::MissingLabel(l)),
            };
        }
        Ok(out)
    }
}

fn reference_cube(dirs: [Dir; 3]) -> Result<OrientedCube, FormError> {
    let dim = dirs.iter().copied().max().unwrap_or(0);
    Ok(OrientedCube::new(MultiIndex::origin(dim), dirs)?)
}

fn face_fields(cube: &OrientedCube, face: &OrientedSquare, values: &[f64; 8]) -> [f64; 4] {
    face.vertices()
        .map(|v| values[cube.label_of(&v).expect("face of the cube").index()])
}

/// `S = sum over squares of L(sigma)`.
pub fn action_of_squares(
    squares: &[OrientedSquare],
    fields: &FieldMap,
    form: &dyn TwoForm,
) -> Result<f64, FormError> {
    squares
        .iter()
        .map(|s| form.value(s.dirs(), &fields.square(s)?))
        .sum()
}

pub fn action(
    surface: &QuadSurface,
    fields: &FieldMap,
    form: &dyn TwoForm,
) -> Result<f64, FormError> {
    action_of_squares(surface.squares(), fields, form)
}

/// `dS/dx_n` for the action over `squares`.
pub fn vertex_gradient(
    squares: &[OrientedSquare],
    fields: &FieldMap,
    form: &dyn TwoForm,
    n: &MultiIndex,
) -> Result<f64, FormError> {
    let mut sum = 0.0;
    for s in squares {
        if let Some(slot) = s.slot_of(n) {
            sum += form.grad(s.dirs(), &fields.square(s)?)?[slot];
        }
    }
    Ok(sum)
}

/// Euler-Lagrange residual at an interior vertex of the surface.
pub fn el_residual(
    surface: &QuadSurface,
    fields: &FieldMap,
    form: &dyn TwoForm,
    n: &MultiIndex,
) -> Result<f64, FormError> {
    let petals = surface.flower(n)?;
    vertex_gradient(&petals, fields, form, n)
}

/// Action around the cube, `Delta_k L(sigma_ij) + Delta_i L(sigma_jk) + Delta_j L(sigma_ki)`.
///
/// Three-point forms use the twelve-term leg expansion, others the six boundary faces.
pub fn cube_action(cf: &CubeFields, dirs: [Dir; 3], form: &dyn TwoForm) -> Result<f64, FormError> {
    match form.three_point() {
        Some(view) => cube_action_legs(&view, &cf.octahedron()?, dirs),
        None => cube_action_faces(cf, dirs, form),
    }
}

/// Signed sum of the form over the six boundary faces.
pub fn cube_action_faces(
    cf: &CubeFields,
    dirs: [Dir; 3],
    form: &dyn TwoForm,
) -> Result<f64, FormError> {
    let cube = reference_cube(dirs)?;
    let values = cf.for_assembly(form)?;
    let mut sum = 0.0;
    for (f, s) in cube.boundary() {
        sum += f64::from(s) * form.value(f.dirs(), &face_fields(&cube, &f, &values))?;
    }
    Ok(sum)
}

/// The twelve-term expansion of the cube action of a three-point form.
pub fn cube_action_legs(
    view: &ThreePointView<'_>,
    o: &Octahedron,
    dirs: [Dir; 3],
) -> Result<f64, FormError> {
    let mut o = *o;
    let mut d = dirs;
    let mut sum = 0.0;
    for _ in 0..3 {
        use CubeLabel::*;
        let [i, j, _] = d;
        sum += view.l(o.get(K), o.get(IK), i)?
            - view.l(o.get(K), o.get(JK), j)?
            - view.lambda(o.get(IK), o.get(JK), i, j)?
            + view.lambda(o.get(I), o.get(J), i, j)?;
        o = o.rotated();
        d = [d[1], d[2], d[0]];
    }
    Ok(sum)
}

/// `dS^ijk/dx_label` assembled from per-face gradients.
///
/// For three-point forms the residual at `x` and `x_ijk` vanishes identically.
pub fn corner_residual(
    cf: &CubeFields,
    dirs: [Dir; 3],
    form: &dyn TwoForm,
    label: CubeLabel,
) -> Result<f64, FormError> {
    if form.three_point().is_some() && matches!(label, CubeLabel::X | CubeLabel::IJK) {
        return Ok(0.0);
    }
    let cube = reference_cube(dirs)?;
    let values = cf.for_assembly(form)?;
    let apex = cube.vertex(label);
    let mut sum = 0.0;
    for (f, s) in cube.faces_at(label) {
        let g = form.grad(f.dirs(), &face_fields(&cube, &f, &values))?;
        sum += f64::from(s) * g[f.slot_of(&apex).expect("apex on face")];
    }
    Ok(sum)
}

/// Corner residual at an octahedron vertex written out in the four legs that touch it.
pub fn four_leg_residual(
    view: &ThreePointView<'_>,
    o: &Octahedron,
    dirs: [Dir; 3],
    label: CubeLabel,
) -> Result<f64, FormError> {
    use CubeLabel::*;
    let mut o = *o;
    let mut d = dirs;
    for _ in 0..rotations_to_base(label) {
        o = o.rotated();
        d = [d[1], d[2], d[0]];
    }
    let [i, j, k] = d;
    match label {
        X | IJK => Ok(0.0),
        I | J | K => Ok(
            view.psi(o.get(I), o.get(IJ), j)? - view.psi(o.get(I), o.get(IK), k)?
                + view.phi_y(o.get(K), o.get(I), k, i)?
                + view.phi(o.get(I), o.get(J), i, j)?,
        ),
        IJ | JK | IK => Ok(view.psi_y(o.get(I), o.get(IJ), j)?
            - view.psi_y(o.get(J), o.get(IJ), i)?
            - view.phi(o.get(IJ), o.get(IK), j, k)?
            - view.phi_y(o.get(JK), o.get(IJ), k, i)?),
    }
}
