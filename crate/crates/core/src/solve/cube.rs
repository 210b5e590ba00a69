//! Completion of an elementary cube from four octahedron fields via corner equations.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::forms::{corner_residual, CubeFields, Octahedron, TwoForm};
use crate::lattice::{CubeLabel, Dir, MultiIndex, OrientedCube};
use crate::models::{LagrangianModel, ModelError};

use super::rank::{central_jacobian, JACOBIAN_STEP};
use super::root::{scan_roots, RootConfig};
use super::SolveError;

/// Bound on every corner residual of a completed cube.
pub const COMPLETION_TOL: f64 = 1e-9;

/// A system of corner equations on the octahedron of a cube.
pub trait CornerSystem: Sync {
    /// `dS/dx_label` at the octahedron fields `o`.
    fn corner(&self, label: CubeLabel, o: &Octahedron) -> Result<f64, SolveError>;
    /// The octahedron relation, when the system has one.
    fn octahedron(&self, o: &Octahedron) -> Result<f64, SolveError>;
    /// Positive iff every leg is defined at `o`.
    fn margin(&self, _o: &Octahedron) -> f64 {
        f64::INFINITY
    }
    fn model(&self) -> Option<LagrangianModel> {
        None
    }
    fn alpha(&self) -> [f64; 3];
}

/// Closed-form corner equations of a catalog model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogCorners {
    pub model: LagrangianModel,
    pub alpha: [f64; 3],
}

impl CornerSystem for CatalogCorners {
    fn corner(&self, label: CubeLabel, o: &Octahedron) -> Result<f64, SolveError> {
        Ok(self.model.corner_residual_closed(label, o, self.alpha)?)
    }
    fn octahedron(&self, o: &Octahedron) -> Result<f64, SolveError> {
        Ok(self.model.octahedron_residual(o, self.alpha)?)
    }
    fn margin(&self, o: &Octahedron) -> f64 {
        self.model.admissibility_margin(o, self.alpha)
    }
    fn model(&self) -> Option<LagrangianModel> {
        Some(self.model)
    }
    fn alpha(&self) -> [f64; 3] {
        self.alpha
    }
}

/// Corner equations assembled from the gradient of an arbitrary three-point form on
/// the cube spanned by `dirs`.
pub struct AssembledCorners<'a> {
    pub form: &'a dyn TwoForm,
    pub dirs: [Dir; 3],
}

impl CornerSystem for AssembledCorners<'_> {
    fn corner(&self, label: CubeLabel, o: &Octahedron) -> Result<f64, SolveError> {
        Ok(corner_residual(
            &CubeFields::from_octahedron(o),
            self.dirs,
            self.form,
            label,
        )?)
    }
    fn octahedron(&self, _o: &Octahedron) -> Result<f64, SolveError> {
        Err(ModelError::NoLayer {
            model: "assembled form".into(),
            layer: "octahedron".into(),
        }
        .into())
    }
    fn alpha(&self) -> [f64; 3] {
        let a = |d: Dir| {
            self.form
                .three_point()
                .and_then(|v| v.alpha(d).ok())
                .unwrap_or(f64::NAN)
        };
        self.dirs.map(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CubeEquation {
    Corner(CubeLabel),
    Octahedron,
}

impl CubeEquation {
    /// Octahedron fields the equation depends on. A corner equation of a three-point
    /// form touches the three points of each face whose legs meet its vertex.
    pub fn support(&self) -> BTreeSet<CubeLabel> {
        let label = match *self {
            CubeEquation::Octahedron => return CubeLabel::OCTAHEDRON.into_iter().collect(),
            CubeEquation::Corner(l) => l,
        };
        let cube = OrientedCube::new(MultiIndex::origin(3), [1, 2, 3]).expect("reference cube");
        let mut out = BTreeSet::new();
        for (face, _) in cube.boundary() {
            let v = face.vertices();
            let points: Vec<CubeLabel> = [&v[0], &v[1], &v[3]]
                .iter()
                .map(|n| cube.label_of(n).expect("face vertex on cube"))
                .collect();
            if points.contains(&label) {
                out.extend(points);
            }
        }
        out.retain(|l| l.octahedron_index().is_some());
        out
    }

    fn evaluate(&self, system: &dyn CornerSystem, o: &Octahedron) -> Result<f64, SolveError> {
        match *self {
            CubeEquation::Corner(l) => system.corner(l, o),
            CubeEquation::Octahedron => system.octahedron(o),
        }
    }
}

impl fmt::Display for CubeEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CubeEquation::Corner(l) => write!(f, "E({l})"),
            CubeEquation::Octahedron => f.write_str("octahedron"),
        }
    }
}

/// Root search window for a single unknown.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    /// The window is `centre +- half_width`.
    pub half_width: f64,
    pub points: usize,
    /// Largest `|residual|` accepted at a refined root.
    pub accept: f64,
    pub root: RootConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            half_width: 6.0,
            points: 241,
            accept: 1e-10,
            root: RootConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveStep {
    pub equation: CubeEquation,
    pub target: CubeLabel,
    /// Admissible roots found in the window.
    pub roots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeSolution {
    pub fields: Octahedron,
    /// Corner residuals in [`CubeLabel::OCTAHEDRON`] order.
    pub residuals: [f64; 6],
    pub plan: Vec<SolveStep>,
    #[serde(skip)]
    pub model: Option<LagrangianModel>,
    pub alpha: [f64; 3],
    pub gamma: f64,
}

impl CubeSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Largest residual over labels not used to solve.
    pub fn max_unused_residual(&self) -> f64 {
        let used: Vec<CubeLabel> = self
            .plan
            .iter()
            .filter_map(|s| match s.equation {
                CubeEquation::Corner(l) => Some(l),
                CubeEquation::Octahedron => None,
            })
            .collect();
        CubeLabel::OCTAHEDRON
            .iter()
            .zip(&self.residuals)
            .filter(|(l, _)| !used.contains(l))
            .fold(0.0, |m, (_, r)| m.max(r.abs()))
    }

    pub fn residual(&self, label: CubeLabel) -> Option<f64> {
        label.octahedron_index().map(|i| self.residuals[i])
    }
}

fn order_plan(
    equations: &[CubeEquation],
    known: &BTreeSet<CubeLabel>,
    targets: [CubeLabel; 2],
) -> Result<Vec<(CubeEquation, CubeLabel)>, SolveError> {
    // prefer equations that determine each target from the given fields alone
    let direct: Vec<(CubeEquation, CubeLabel)> = targets
        .iter()
        .filter_map(|&t| {
            equations.iter().find_map(|e| {
                let s = e.support();
                (s.contains(&t) && s.iter().all(|l| *l == t || known.contains(l)))
                    .then_some((*e, t))
            })
        })
        .collect();
    if direct.len() == 2 && direct[0].0 != direct[1].0 {
        return Ok(direct);
    }
    let mut known = known.clone();
    let mut left: Vec<CubeLabel> = targets.to_vec();
    let mut used = Vec::new();
    let mut plan = Vec::new();
    while !left.is_empty() {
        let next = equations
            .iter()
            .filter(|e| !used.contains(*e))
            .find_map(|e| {
                let unknown: Vec<CubeLabel> = e
                    .support()
                    .into_iter()
                    .filter(|l| !known.contains(l))
                    .collect();
                match unknown.as_slice() {
                    [t] if left.contains(t) => Some((*e, *t)),
                    _ => None,
                }
            });
        let Some((e, t)) = next else {
            return Err(SolveError::Plan(format!(
                "no equation determines one of {left:?} from the known fields"
            )));
        };
        used.push(e);
        known.insert(t);
        left.retain(|l| *l != t);
        plan.push((e, t));
    }
    Ok(plan)
}

fn check_given(
    given: &[(CubeLabel, f64)],
    targets: [CubeLabel; 2],
) -> Result<BTreeSet<CubeLabel>, SolveError> {
    let known: BTreeSet<CubeLabel> = given.iter().map(|g| g.0).collect();
    let all_oct = known
        .iter()
        .chain(&targets)
        .all(|l| l.octahedron_index().is_some());
    if given.len() != 4 || known.len() != 4 || !all_oct || targets[0] == targets[1] {
        return Err(SolveError::Input(
            "need four distinct octahedron fields and the two remaining labels as targets".into(),
        ));
    }
    if targets.iter().any(|t| known.contains(t)) {
        return Err(SolveError::Input(
            "a target is among the given fields".into(),
        ));
    }
    if given.iter().any(|g| !g.1.is_finite()) {
        return Err(SolveError::Input("given fields must be finite".into()));
    }
    Ok(known)
}

/// Admissible roots of `equation` in `target`, nearest to the known support first.
fn roots_of(
    system: &dyn CornerSystem,
    equation: CubeEquation,
    target: CubeLabel,
    o: &Octahedron,
    known: &BTreeSet<CubeLabel>,
    scan: &ScanConfig,
) -> Result<Vec<f64>, SolveError> {
    let support = equation.support();
    let neighbours: Vec<f64> = support
        .iter()
        .filter(|l| known.contains(l))
        .map(|l| o.get(*l))
        .collect();
    let centre = neighbours.iter().sum::<f64>() / neighbours.len().max(1) as f64;
    let base = *o;
    let f = |t: f64| {
        equation
            .evaluate(system, &base.with(target, t))
            .unwrap_or(f64::NAN)
    };
    let mut roots: Vec<f64> = scan_roots(
        f,
        centre - scan.half_width,
        centre + scan.half_width,
        scan.points,
        &scan.root,
    )
    .into_iter()
    .filter(|r| r.residual <= scan.accept)
    .map(|r| r.x)
    .collect();
    if roots.is_empty() {
        return Err(SolveError::NoRoot {
            equation: equation.to_string(),
            target,
        });
    }
    roots.sort_by(|a, b| (a - centre).abs().total_cmp(&(b - centre).abs()));
    Ok(roots)
}

/// Every way of running `plan`, one root per step.
fn branches(
    system: &dyn CornerSystem,
    plan: &[(CubeEquation, CubeLabel)],
    o: Octahedron,
    known: &BTreeSet<CubeLabel>,
    scan: &ScanConfig,
    counts: &mut Vec<usize>,
    out: &mut Vec<Octahedron>,
) -> Result<(), SolveError> {
    let Some(&(equation, target)) = plan.first() else {
        out.push(o);
        return Ok(());
    };
    let roots = roots_of(system, equation, target, &o, known, scan)?;
    let depth = counts.len();
    counts.push(roots.len());
    let mut known = known.clone();
    known.insert(target);
    let mut last = Ok(());
    for r in roots {
        counts.truncate(depth + 1);
        match branches(
            system,
            &plan[1..],
            o.with(target, r),
            &known,
            scan,
            counts,
            out,
        ) {
            Ok(()) => {}
            Err(e) => last = Err(e),
        }
    }
    if out.is_empty() {
        last
    } else {
        Ok(())
    }
}

fn residuals(system: &dyn CornerSystem, o: &Octahedron) -> Result<[f64; 6], SolveError> {
    let mut r = [0.0; 6];
    for (k, l) in CubeLabel::OCTAHEDRON.into_iter().enumerate() {
        r[k] = system.corner(l, o)?;
    }
    Ok(r)
}

/// Solve for `targets` with equations from `equations`, ordered so that each solve
/// has exactly one unknown. Residuals are reported but not checked.
pub fn solve_targets(
    system: &dyn CornerSystem,
    equations: &[CubeEquation],
    given: &[(CubeLabel, f64)],
    targets: [CubeLabel; 2],
    scan: &ScanConfig,
) -> Result<CubeSolution, SolveError> {
    let known = check_given(given, targets)?;
    let plan = order_plan(equations, &known, targets)?;
    let mut o = Octahedron([0.0; 6]);
    for &(l, v) in given {
        o.set(l, v);
    }
    let mut counts = Vec::new();
    let mut candidates = Vec::new();
    branches(system, &plan, o, &known, scan, &mut counts, &mut candidates)?;
    let used: Vec<CubeLabel> = plan
        .iter()
        .filter_map(|(e, _)| match e {
            CubeEquation::Corner(l) => Some(*l),
            CubeEquation::Octahedron => None,
        })
        .collect();
    // with several roots, keep the branch on which the other equations hold best
    let mut best: Option<(f64, Octahedron, [f64; 6])> = None;
    let mut failure = None;
    for c in candidates {
        let r = match residuals(system, &c) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e);
                continue;
            }
        };
        let score = CubeLabel::OCTAHEDRON
            .iter()
            .zip(&r)
            .filter(|(l, _)| !used.contains(l))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let score = if score.is_nan() { f64::INFINITY } else { score };
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, c, r));
        }
    }
    let Some((_, o, r)) = best else {
        return Err(failure.expect("a branch was evaluated"));
    };
    let steps: Vec<SolveStep> = plan
        .iter()
        .enumerate()
        .map(|(k, &(equation, target))| SolveStep {
            equation,
            target,
            roots: counts.get(k).copied().unwrap_or(1),
        })
        .collect();
    let model = system.model();
    Ok(CubeSolution {
        fields: o,
        residuals: r,
        plan: steps,
        model,
        alpha: system.alpha(),
        gamma: model.map_or(0.0, |m| m.gamma()),
    })
}

/// Complete the cube with two corner equations and require all six corner residuals
/// below [`COMPLETION_TOL`].
pub fn complete_cube(
    system: &dyn CornerSystem,
    given: &[(CubeLabel, f64)],
    targets: [CubeLabel; 2],
    scan: &ScanConfig,
) -> Result<CubeSolution, SolveError> {
    let equations = CubeLabel::OCTAHEDRON.map(CubeEquation::Corner);
    let sol = solve_targets(system, &equations, given, targets, scan)?;
    for (l, r) in CubeLabel::OCTAHEDRON.iter().zip(&sol.residuals) {
        if !(r.abs() < COMPLETION_TOL) {
            return Err(SolveError::Inconsistent {
                label: *l,
                residual: *r,
            });
        }
    }
    Ok(sol)
}

/// Solve with the corner equation at `corner` and the octahedron relation.
pub fn solve_with_octahedron(
    system: &dyn CornerSystem,
    corner: CubeLabel,
    given: &[(CubeLabel, f64)],
    targets: [CubeLabel; 2],
    scan: &ScanConfig,
) -> Result<CubeSolution, SolveError> {
    let equations = [CubeEquation::Corner(corner), CubeEquation::Octahedron];
    solve_targets(system, &equations, given, targets, scan)
}

/// Central-difference Jacobian of the six corner residuals in the six octahedron fields.
pub fn corner_jacobian(
    system: &dyn CornerSystem,
    o: &Octahedron,
) -> Result<DMatrix<f64>, SolveError> {
    central_jacobian(
        |v: &[f64]| {
            let o = Octahedron(v.try_into().expect("six fields"));
            residuals(system, &o).map(|r| r.to_vec())
        },
        &o.0,
        JACOBIAN_STEP,
    )
}

/// Jacobian of all eight corner residuals of a general form in all eight fields,
/// ordered as [`CubeLabel::ALL`].
pub fn general_corner_jacobian(
    form: &dyn TwoForm,
    dirs: [Dir; 3],
    fields: [f64; 8],
) -> Result<DMatrix<f64>, SolveError> {
    central_jacobian(
        |v: &[f64]| -> Result<Vec<f64>, SolveError> {
            let cf = CubeFields::full(v.try_into().expect("eight fields"));
            CubeLabel::ALL
                .iter()
                .map(|&l| Ok(corner_residual(&cf, dirs, form, l)?))
                .collect()
        },
        &fields,
        JACOBIAN_STEP,
    )
}
