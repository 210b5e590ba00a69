//! The seven suites. Every trial draws from its own streams, so results do not
//! depend on scheduling.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::forms::{
    action, corner_residual, cube_action, el_residual, CubeFields, FieldMap, Octahedron,
    PerturbedLegs, ThreePointForm, TwoForm,
};
use crate::lattice::{
    lift_flower, CubeLabel, MultiIndex, OrientedCube, OrientedSquare, QuadSurface,
};
use crate::models::{LagrangianModel, ModelError, ModelId, QuadModel, TodaStencil};
use crate::solve::rank::{equilibrate_rows, numeric_rank, singular_values, RANK_TAU};
use crate::solve::{
    corner_jacobian, propagate_box, propagate_quad, root_1d, solve_targets, AssembledCorners,
    AxesData, CatalogCorners, CornerSystem, CubeEquation, CubeSolution, RootConfig, ScanConfig,
};

use super::sampling::{
    accept, exp_alpha_range, exp_slopes, sample_alpha, sample_octahedron, sample_quad_alpha,
    target_pairs, trial_rng, MAX_FIELD, MAX_RETRIES, MIN_MARGIN,
};
use super::{
    run_trials, Check, Subject, Suite, SuiteConfig, SuiteReport, TrialOutcome, VerifyError,
};

const RESIDUAL_TOL: f64 = 1e-9;
const ACTION_TOL: f64 = 1e-8;
const SPREAD_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-12;
/// Smallest `|lead| / max(1, |constant|)` of a face solve used in a trial.
const MIN_CONDITIONING: f64 = 1e-2;
/// Misses in a row before the closedness suite draws new parameters.
const ALPHA_PATIENCE: usize = 10;
/// Smallest first-order coefficient `d / gamma` in the gamma suite.
const MIN_SLOPE: f64 = 1e-2;

fn tolerances(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check(name: &'static str, value: f64) -> Check {
    Check { name, value }
}

/// Retry `attempt` with fresh draws from `rng` until it succeeds.
fn retry<T>(
    rng: &mut ChaCha8Rng,
    mut attempt: impl FnMut(&mut ChaCha8Rng) -> Result<T, String>,
) -> Result<(T, usize), TrialOutcome> {
    let mut last = String::new();
    for k in 0..=MAX_RETRIES {
        match attempt(rng) {
            Ok(v) => return Ok((v, k)),
            Err(e) => last = e,
        }
    }
    Err(TrialOutcome::sampling_failure(MAX_RETRIES, last))
}

fn lagrangian(cfg: &SuiteConfig, allow_zero: bool) -> Result<LagrangianModel, VerifyError> {
    let m = cfg.model.lagrangian()?;
    if m == LagrangianModel::Zero && !allow_zero {
        return Err(ModelError::NoLayer {
            model: cfg.model.id.to_string(),
            layer: "corner equation".into(),
        }
        .into());
    }
    Ok(m)
}

fn form_for(model: &LagrangianModel, subject: Subject, alpha: [f64; 3]) -> Box<dyn TwoForm> {
    match (subject, model.legs()) {
        (Subject::Catalog, _) => model.form(alpha.to_vec()),
        (Subject::Perturbed { eps }, Some(inner)) => Box::new(ThreePointForm::new(
            PerturbedLegs { inner, eps },
            alpha.to_vec(),
        )),
        (Subject::Perturbed { eps }, None) => Box::new(ThreePointForm::new(
            PerturbedLegs {
                inner: crate::models::Q1Legs,
                eps,
            },
            alpha.to_vec(),
        )),
    }
}

fn check_perturbation(cfg: &SuiteConfig) -> Result<(), VerifyError> {
    if let Subject::Perturbed { eps } = cfg.subject {
        if !eps.is_finite() {
            return Err(VerifyError::Config(format!(
                "perturbation {eps} is not finite"
            )));
        }
        if cfg.model.id == ModelId::Zero {
            return Err(VerifyError::Config(
                "the zero form has no legs to perturb".into(),
            ));
        }
    }
    Ok(())
}

/// Corner equations of the configured subject.
struct Subjected {
    catalog: CatalogCorners,
    form: Option<Box<dyn TwoForm>>,
}

impl Subjected {
    fn new(model: LagrangianModel, subject: Subject, alpha: [f64; 3]) -> Self {
        let form = match subject {
            Subject::Catalog => None,
            Subject::Perturbed { .. } => Some(form_for(&model, subject, alpha)),
        };
        Subjected {
            catalog: CatalogCorners { model, alpha },
            form,
        }
    }

    fn with<R>(&self, f: impl FnOnce(&dyn CornerSystem) -> R) -> R {
        match &self.form {
            None => f(&self.catalog),
            Some(form) => f(&AssembledCorners {
                form: form.as_ref(),
                dirs: [1, 2, 3],
            }),
        }
    }
}

fn trial_alpha(cfg: &SuiteConfig, model: &LagrangianModel, rng: &mut ChaCha8Rng) -> [f64; 3] {
    cfg.alpha.unwrap_or_else(|| sample_alpha(model, rng))
}

/// Sample an admissible octahedron, keep four fields and solve for a random pair
/// with the given equations.
fn sample_solution(
    model: &LagrangianModel,
    alpha: [f64; 3],
    system: &dyn CornerSystem,
    rng: &mut ChaCha8Rng,
    pick: impl Fn(&mut ChaCha8Rng) -> (Vec<CubeEquation>, [CubeLabel; 2]),
) -> Result<CubeSolution, String> {
    let o = sample_octahedron(model, alpha, rng).ok_or("inadmissible sample")?;
    let (equations, targets) = pick(rng);
    let given: Vec<(CubeLabel, f64)> = CubeLabel::OCTAHEDRON
        .into_iter()
        .filter(|l| !targets.contains(l))
        .map(|l| (l, o.get(l)))
        .collect();
    let sol = solve_targets(system, &equations, &given, targets, &ScanConfig::default())
        .map_err(|e| e.to_string())?;
    if !accept(model, &sol.fields, alpha) {
        return Err("solution outside the admissible box".into());
    }
    Ok(sol)
}

fn two_corner_equations(rng: &mut ChaCha8Rng) -> (Vec<CubeEquation>, [CubeLabel; 2]) {
    let pairs = target_pairs();
    let t = pairs[rng.random_range(0..pairs.len())];
    (CubeLabel::OCTAHEDRON.map(CubeEquation::Corner).to_vec(), t)
}

fn solution_payload(alpha: [f64; 3], sol: &CubeSolution) -> serde_json::Value {
    json!({
        "alpha": alpha,
        "fields": sol.fields.0,
        "plan": sol.plan,
        "residuals": sol.residuals.map(|r| if r.is_finite() { Some(r) } else { None }),
    })
}

pub fn consistency(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    let model = lagrangian(cfg, false)?;
    check_perturbation(cfg)?;
    let tols = tolerances(&[("unused_residual", RESIDUAL_TOL), ("rank_deviation", 0.5)]);
    run_trials(Suite::Consistency, cfg, tols, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        let found = retry(&mut rng, |rng| {
            let alpha = trial_alpha(cfg, &model, rng);
            let sys = Subjected::new(model, cfg.subject, alpha);
            let sol = sys.with(|s| sample_solution(&model, alpha, s, rng, two_corner_equations))?;
            let jac = sys
                .with(|s| corner_jacobian(s, &sol.fields))
                .map_err(|e| e.to_string())?;
            let jac = equilibrate_rows(&jac);
            Ok((
                alpha,
                sol,
                numeric_rank(&jac, RANK_TAU),
                singular_values(&jac),
            ))
        });
        match found {
            Err(out) => out,
            Ok(((alpha, sol, rank, sv), resamples)) => TrialOutcome {
                checks: vec![
                    check("unused_residual", sol.max_unused_residual()),
                    check(
                        "rank_deviation",
                        rank.map_or(f64::INFINITY, |r| (r as f64 - 2.0).abs()),
                    ),
                ],
                resamples,
                payload: {
                    let mut p = solution_payload(alpha, &sol);
                    p["singular_values"] = json!(sv);
                    p
                },
            },
        }
    })
}

pub fn octahedron_equivalence(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    let model = lagrangian(cfg, false)?;
    if cfg.subject != Subject::Catalog {
        return Err(VerifyError::Config(
            "the octahedron suite runs on catalog models only".into(),
        ));
    }
    let tols = tolerances(&[
        ("octahedron_from_corners", RESIDUAL_TOL),
        ("corners_from_octahedron", RESIDUAL_TOL),
    ]);
    run_trials(Suite::Octahedron, cfg, tols, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        let forward = retry(&mut rng, |rng| {
            let alpha = trial_alpha(cfg, &model, rng);
            let sys = CatalogCorners { model, alpha };
            let sol = sample_solution(&model, alpha, &sys, rng, two_corner_equations)?;
            let oct = sys.octahedron(&sol.fields).map_err(|e| e.to_string())?;
            Ok((alpha, sol, oct))
        });
        let mut rng = trial_rng(cfg.seed, t as u64, 1);
        let backward = retry(&mut rng, |rng| {
            let alpha = trial_alpha(cfg, &model, rng);
            let sys = CatalogCorners { model, alpha };
            let pick = |rng: &mut ChaCha8Rng| {
                let corner = CubeLabel::OCTAHEDRON[rng.random_range(0..6)];
                let by_oct = corner.opposite();
                let rest: Vec<CubeLabel> = CubeLabel::OCTAHEDRON
                    .into_iter()
                    .filter(|l| *l != by_oct)
                    .collect();
                let by_corner = rest[rng.random_range(0..rest.len())];
                (
                    vec![CubeEquation::Corner(corner), CubeEquation::Octahedron],
                    [by_corner, by_oct],
                )
            };
            let sol = sample_solution(&model, alpha, &sys, rng, pick)?;
            Ok((alpha, sol))
        });
        let (forward, backward) = match (forward, backward) {
            (Err(out), _) | (_, Err(out)) => return out,
            (Ok(f), Ok(b)) => (f, b),
        };
        let ((fa, fsol, oct), r1) = forward;
        let ((ba, bsol), r2) = backward;
        let solved_with = bsol.plan.iter().find_map(|s| match s.equation {
            CubeEquation::Corner(l) => Some(l),
            CubeEquation::Octahedron => None,
        });
        let others = CubeLabel::OCTAHEDRON
            .iter()
            .zip(&bsol.residuals)
            .filter(|(l, _)| Some(**l) != solved_with)
            .fold(0.0f64, |m, (_, r)| m.max(r.abs()));
        TrialOutcome {
            checks: vec![
                check("octahedron_from_corners", oct.abs()),
                check("corners_from_octahedron", others),
            ],
            resamples: r1 + r2,
            payload: json!({
                "corners": solution_payload(fa, &fsol),
                "octahedron": solution_payload(ba, &bsol),
            }),
        }
    })
}

pub fn closedness(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    let model = lagrangian(cfg, false)?;
    check_perturbation(cfg)?;
    let tols = tolerances(&[("action", ACTION_TOL), ("constancy", ACTION_TOL)]);
    run_trials(Suite::Closedness, cfg, tols, |t| {
        let mut streams = [0, 1].map(|k| trial_rng(cfg.seed, t as u64, k));
        let mut misses = 0;
        'draw: loop {
            let alpha = trial_alpha(cfg, &model, &mut streams[0]);
            let sys = Subjected::new(model, cfg.subject, alpha);
            let form = form_for(&model, cfg.subject, alpha);
            let mut found = Vec::with_capacity(2);
            for rng in streams.iter_mut() {
                let mut run = 0;
                loop {
                    let attempt = sys
                        .with(|s| sample_solution(&model, alpha, s, rng, two_corner_equations))
                        .and_then(|sol| {
                            let fields = CubeFields::from_octahedron(&sol.fields);
                            cube_action(&fields, [1, 2, 3], &*form)
                                .map(|a| (sol, a))
                                .map_err(|e| e.to_string())
                        });
                    match attempt {
                        Ok(v) => {
                            found.push(v);
                            break;
                        }
                        Err(e) => {
                            (misses, run) = (misses + 1, run + 1);
                            if misses > MAX_RETRIES {
                                return TrialOutcome::sampling_failure(MAX_RETRIES, e);
                            }
                            // some parameters admit few solutions in the sampling box
                            if run >= ALPHA_PATIENCE && cfg.alpha.is_none() {
                                continue 'draw;
                            }
                        }
                    }
                }
            }
            let [(s1, a1), (s2, a2)]: [(CubeSolution, f64); 2] =
                found.try_into().expect("two solutions");
            return TrialOutcome {
                checks: vec![
                    check("action", a1.abs().max(a2.abs())),
                    check("constancy", (a1 - a2).abs()),
                ],
                resamples: misses,
                payload: json!({
                    "alpha": alpha,
                    "actions": [a1, a2],
                    "fields": [s1.fields.0, s2.fields.0],
                }),
            };
        }
    })
}

pub fn quad_layer(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    let quad = cfg.model.quad()?;
    let closure = cfg.model.id == ModelId::Q1Zero;
    let mut entries = vec![("spread", SPREAD_TOL), ("octahedron", RESIDUAL_TOL)];
    if closure {
        entries.push(("closure", ACTION_TOL));
    }
    let lag = LagrangianModel::Q1Zero;
    run_trials(Suite::Quad, cfg, tolerances(&entries), |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        let found = retry(&mut rng, |rng| {
            let alpha = cfg.alpha.unwrap_or_else(|| sample_quad_alpha(&quad, rng));
            let f = [0; 4].map(|_| rng.random_range(-1.0..1.0));
            let c =
                propagate_quad(&quad, f[0], f[1], f[2], f[3], alpha).map_err(|e| e.to_string())?;
            if c.conditioning < MIN_CONDITIONING || c.fields.iter().any(|v| v.abs() > MAX_FIELD) {
                return Err("ill-conditioned propagation".into());
            }
            let oct = quad
                .octahedron_residual(&c.octahedron(), alpha)
                .map_err(|e| e.to_string())?;
            let s = if closure {
                if lag.admissibility_margin(&c.octahedron(), alpha) < MIN_MARGIN {
                    return Err("coincident fields".into());
                }
                let form = lag.form(alpha.to_vec());
                Some(cube_action(&c.cube_fields(), [1, 2, 3], &*form).map_err(|e| e.to_string())?)
            } else {
                None
            };
            Ok((alpha, c, oct, s))
        });
        match found {
            Err(out) => out,
            Ok(((alpha, c, oct, s), resamples)) => {
                let mut checks = vec![check("spread", c.spread), check("octahedron", oct.abs())];
                if let Some(s) = s {
                    checks.push(check("closure", s.abs()));
                }
                TrialOutcome {
                    checks,
                    resamples,
                    payload: json!({ "alpha": alpha, "fields": c.fields }),
                }
            }
        }
    })
}

/// The three coordinate `n x n` patches through the origin.
pub fn staircase(n: usize) -> QuadSurface {
    let mut squares = Vec::new();
    let sq =
        |b: [i64; 3], i, j| OrientedSquare::new(MultiIndex::from(b), i, j).expect("valid square");
    for a in 0..n as i64 {
        for b in 0..n as i64 {
            squares.push(sq([a, b, 0], 1, 2));
            squares.push(sq([0, a, b], 2, 3));
            squares.push(sq([b, 0, a], 3, 1));
        }
    }
    QuadSurface::new(3, squares).expect("staircase is a disk")
}

fn cube_fields(fields: &FieldMap, cube: &OrientedCube) -> Result<CubeFields, String> {
    let mut v = [0.0; 8];
    for l in CubeLabel::ALL {
        v[l.index()] = fields.get(&cube.vertex(l)).map_err(|e| e.to_string())?;
    }
    Ok(CubeFields::full(v))
}

pub fn flip_invariance(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    check_perturbation(cfg)?;
    let (quad, model) = match cfg.model.id {
        ModelId::Zero => (QuadModel::Q1Zero, LagrangianModel::Zero),
        _ => (cfg.model.quad()?, cfg.model.lagrangian()?),
    };
    if cfg.box_size == 0 || cfg.flips == 0 {
        return Err(VerifyError::Config(
            "box size and flips must be positive".into(),
        ));
    }
    let invariant = cfg.subject == Subject::Catalog;
    let mut entries = vec![("regrouping", IDENTITY_TOL)];
    if invariant {
        entries.push(("delta_action", ACTION_TOL));
    }
    let n = cfg.box_size;
    run_trials(Suite::Flip, cfg, tolerances(&entries), |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        let found = retry(&mut rng, |rng| {
            let alpha = cfg
                .alpha
                .unwrap_or_else(|| [0; 3].map(|_| rng.random_range(0.5..3.0)));
            let form = form_for(&model, cfg.subject, alpha);
            // near the linear solution with slopes sqrt(alpha)
            let axes = [0, 1, 2].map(|d| {
                (1..=n)
                    .map(|k| alpha[d].sqrt() * k as f64 + rng.random_range(-0.05..0.05))
                    .collect::<Vec<f64>>()
            });
            let data = AxesData {
                origin: rng.random_range(-0.05..0.05),
                axes,
            };
            let b = propagate_box(&quad, &data, alpha).map_err(|e| e.to_string())?;
            if b.min_conditioning < MIN_CONDITIONING {
                return Err("ill-conditioned box".into());
            }
            let mut surface = staircase(n);
            let mut s_old = action(&surface, &b.fields, &*form).map_err(|e| e.to_string())?;
            let mut deltas = Vec::new();
            let (mut worst_delta, mut worst_regroup) = (0.0f64, 0.0f64);
            for _ in 0..cfg.flips {
                let inside: Vec<OrientedCube> = surface
                    .flippable_cubes()
                    .into_iter()
                    .filter(|c| {
                        CubeLabel::ALL
                            .iter()
                            .all(|l| b.fields.contains(&c.vertex(*l)))
                    })
                    .collect();
                if inside.is_empty() {
                    break;
                }
                let cube = inside[rng.random_range(0..inside.len())].clone();
                let r = f64::from(surface.flip_sign(&cube).expect("cube touches surface"));
                let next = surface.flip(&cube).map_err(|e| e.to_string())?;
                let s_new = action(&next, &b.fields, &*form).map_err(|e| e.to_string())?;
                let s_cube = cube_action(&cube_fields(&b.fields, &cube)?, cube.dirs(), &*form)
                    .map_err(|e| e.to_string())?;
                let delta = s_new - s_old;
                worst_delta = worst_delta.max(delta.abs());
                worst_regroup = worst_regroup.max((delta + r * s_cube).abs());
                deltas.push(delta);
                surface = next;
                s_old = s_new;
            }
            Ok((alpha, data, deltas, worst_delta, worst_regroup))
        });
        match found {
            Err(out) => out,
            Ok(((alpha, data, deltas, wd, wr), resamples)) => {
                let mut checks = vec![check("regrouping", wr)];
                if invariant {
                    checks.push(check("delta_action", wd));
                }
                TrialOutcome {
                    checks,
                    resamples,
                    payload: json!({ "alpha": alpha, "axes": data, "deltas": deltas }),
                }
            }
        }
    })
}

/// Planar flower at the origin in directions 1, 2, lifted in direction 3.
fn planar_flower() -> (QuadSurface, MultiIndex) {
    let petals = [(0, 0), (-1, 0), (-1, -1), (0, -1)]
        .map(|(a, b)| OrientedSquare::new(MultiIndex::from([a, b, 0]), 1, 2).expect("petal"));
    (
        QuadSurface::new(3, petals.to_vec()).expect("flower is a disk"),
        MultiIndex::origin(3),
    )
}

fn flower_fields(
    model: &LagrangianModel,
    alpha: [f64; 3],
    rng: &mut ChaCha8Rng,
) -> Result<FieldMap, String> {
    let slopes = match model {
        LagrangianModel::Exponential { .. } => {
            Some(exp_slopes(&alpha, rng).ok_or("no admissible slopes")?)
        }
        _ => None,
    };
    let mut fields = FieldMap::new();
    for a in -1..=1i64 {
        for b in -1..=1i64 {
            for c in 0..=1i64 {
                let v = match &slopes {
                    Some(s) => {
                        s[0] * a as f64
                            + s[1] * b as f64
                            + s[2] * c as f64
                            + rng.random_range(-0.05..0.05)
                    }
                    None => rng.random_range(-2.0..2.0),
                };
                fields.insert(MultiIndex::from([a, b, c]), v);
            }
        }
    }
    if slopes.is_none() {
        let v: Vec<f64> = fields.sorted().into_iter().map(|p| p.1).collect();
        for i in 0..v.len() {
            for j in 0..i {
                if (v[i] - v[j]).abs() < MIN_MARGIN {
                    return Err("coincident fields".into());
                }
            }
        }
    }
    Ok(fields)
}

pub fn flower(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    check_perturbation(cfg)?;
    let model = lagrangian(cfg, true)?;
    let toda =
        cfg.subject == Subject::Catalog && model == (LagrangianModel::Exponential { gamma: 0.0 });
    let mut entries = vec![("decomposition", IDENTITY_TOL)];
    if toda {
        entries.push(("toda", RESIDUAL_TOL));
    }
    let (surface, n) = planar_flower();
    let corners = lift_flower(
        &surface.flower(&n).map_err(crate::solve::SolveError::from)?,
        &n,
        3,
    )
    .map_err(crate::solve::SolveError::from)?;
    run_trials(Suite::Flower, cfg, tolerances(&entries), |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        let found = retry(&mut rng, |rng| {
            let alpha = cfg.alpha.unwrap_or_else(|| match model {
                LagrangianModel::Zero => [0; 3].map(|_| rng.random_range(0.5..3.0)),
                _ => sample_alpha(&model, rng),
            });
            let form = form_for(&model, cfg.subject, alpha);
            let mut fields = flower_fields(&model, alpha, rng)?;
            let el = el_residual(&surface, &fields, &*form, &n).map_err(|e| e.to_string())?;
            let mut sum = 0.0;
            for c in &corners {
                let cf = cube_fields(&fields, c.cube())?;
                sum += corner_residual(&cf, c.cube().dirs(), &*form, c.apex())
                    .map_err(|e| e.to_string())?;
            }
            let mut toda_log = None;
            if toda {
                let x0 = fields.get(&n).map_err(|e| e.to_string())?;
                let at = |t: f64, f: &mut FieldMap| {
                    f.insert(n.clone(), t);
                    el_residual(&surface, f, &*form, &n).unwrap_or(f64::NAN)
                };
                let mut work = fields.clone();
                let x = root_1d(
                    |t| at(t, &mut work),
                    x0 - 0.05,
                    x0 + 0.05,
                    &RootConfig::default(),
                )
                .map_err(|e| e.to_string())?;
                fields.insert(n.clone(), x);
                let g = |a: i64, b: i64| {
                    fields
                        .get(&MultiIndex::from([a, b, 0]))
                        .expect("stencil field")
                };
                let stencil = TodaStencil {
                    center: x,
                    fwd1: g(1, 0),
                    back1: g(-1, 0),
                    fwd2: g(0, 1),
                    back2: g(0, -1),
                    back1_fwd2: g(-1, 1),
                    fwd1_back2: g(1, -1),
                };
                toda_log = Some(
                    model
                        .toda_residual(&stencil, alpha[0], alpha[1])
                        .map_err(|e| e.to_string())?,
                );
            }
            Ok((alpha, fields, el, sum, toda_log))
        });
        match found {
            Err(out) => out,
            Ok(((alpha, fields, el, sum, toda_log), resamples)) => {
                let mut checks = vec![check("decomposition", (el - sum).abs())];
                if let Some(r) = toda_log {
                    checks.push(check("toda", r.abs()));
                }
                TrialOutcome {
                    checks,
                    resamples,
                    payload: json!({
                        "alpha": alpha,
                        "el": el,
                        "corner_sum": sum,
                        "fields": fields.sorted().into_iter().map(|(k, v)| json!({"at": k, "x": v})).collect::<Vec<_>>(),
                    }),
                }
            }
        }
    })
}

pub fn gamma_limit(cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
    if !matches!(cfg.model.id, ModelId::Exp | ModelId::ExpGamma) {
        return Err(ModelError::NoLayer {
            model: cfg.model.id.to_string(),
            layer: "deformation".into(),
        }
        .into());
    }
    let mut gammas = cfg.gammas.clone();
    gammas.sort_by(|a, b| b.total_cmp(a));
    if gammas.len() < 2 || gammas.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
        return Err(VerifyError::Config(
            "need at least two positive deformations".into(),
        ));
    }
    let top = LagrangianModel::Exponential { gamma: gammas[0] };
    let undeformed = LagrangianModel::Exponential { gamma: 0.0 };
    let tols = tolerances(&[
        ("corner_slope", 20f64.log10()),
        ("octahedron_slope", 20f64.log10()),
        ("gamma_zero", f64::MIN_POSITIVE),
    ]);
    let (lo, hi) = exp_alpha_range(gammas[0]);
    run_trials(Suite::Gamma, cfg, tols, |t| {
        let mut rng = trial_rng(cfg.seed, t as u64, 0);
        // residuals in OCTAHEDRON order, then the octahedron relation
        let eval = |m: &LagrangianModel, o: &Octahedron, a: [f64; 3]| -> Result<[f64; 7], String> {
            let mut r = [0.0; 7];
            for (k, l) in CubeLabel::OCTAHEDRON.into_iter().enumerate() {
                r[k] = m
                    .corner_residual_closed(l, o, a)
                    .map_err(|e| e.to_string())?;
            }
            r[6] = m.octahedron_residual(o, a).map_err(|e| e.to_string())?;
            Ok(r)
        };
        let found = retry(&mut rng, |rng| {
            let alpha = cfg
                .alpha
                .unwrap_or_else(|| [0; 3].map(|_| rng.random_range(lo..hi)));
            let o = sample_octahedron(&top, alpha, rng).ok_or("inadmissible sample")?;
            let r0 = eval(&undeformed, &o, alpha)?;
            let diffs = gammas
                .iter()
                .map(|&g| {
                    let r = eval(&LagrangianModel::Exponential { gamma: g }, &o, alpha)?;
                    Ok([0; 7]
                        .map(|_| 0.0)
                        .iter()
                        .enumerate()
                        .map(|(k, _)| (r[k] - r0[k]).abs())
                        .collect::<Vec<f64>>())
                })
                .collect::<Result<Vec<Vec<f64>>, String>>()?;
            if (0..7).any(|k| diffs[0][k] / gammas[0] < MIN_SLOPE) {
                return Err("first-order coefficient too small".into());
            }
            let zero = eval(&LagrangianModel::Exponential { gamma: 0.0 }, &o, alpha)?;
            let gamma_zero = (0..7).fold(0.0f64, |m, k| m.max((zero[k] - r0[k]).abs()));
            Ok((alpha, o, diffs, gamma_zero))
        });
        match found {
            Err(out) => out,
            Ok(((alpha, o, diffs, gamma_zero), resamples)) => {
                let slope = |k: usize| {
                    (1..gammas.len()).fold(0.0f64, |m, s| {
                        let q = (diffs[s - 1][k] / diffs[s][k]) / (gammas[s - 1] / gammas[s]);
                        let v = q.log10().abs();
                        if v.is_nan() {
                            f64::INFINITY
                        } else {
                            m.max(v)
                        }
                    })
                };
                let corner = (0..6).map(slope).fold(0.0f64, f64::max);
                TrialOutcome {
                    checks: vec![
                        check("corner_slope", corner),
                        check("octahedron_slope", slope(6)),
                        check("gamma_zero", gamma_zero),
                    ],
                    resamples,
                    payload: json!({ "alpha": alpha, "fields": o.0, "differences": diffs }),
                }
            }
        }
    })
}
