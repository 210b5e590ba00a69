//! Propagation of quad-equation solutions through cubes and boxes of `Z^3`.

use serde::{Deserialize, Serialize};

use crate::forms::{CubeFields, FieldMap, Octahedron};
use crate::lattice::{CubeLabel, MultiIndex};
use crate::models::{ModelError, QuadModel, QuadSlot};

use super::SolveError;

/// A cube filled from `x, x_i, x_j, x_k` by the quad-equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadCube {
    /// Values in [`CubeLabel::ALL`] order; `x_ijk` from the first route.
    pub fields: [f64; 8],
    /// `x_ijk` computed on the faces at `x_i`, `x_j` and `x_k`.
    pub routes: [f64; 3],
    /// Largest pairwise difference of the routes over `max(1, |x_ijk|)`.
    pub spread: f64,
    /// Smallest `|lead| / max(1, |constant|)` over the six face solves.
    pub conditioning: f64,
}

impl QuadCube {
    pub fn get(&self, l: CubeLabel) -> f64 {
        self.fields[l.index()]
    }

    pub fn octahedron(&self) -> Octahedron {
        Octahedron(CubeLabel::OCTAHEDRON.map(|l| self.get(l)))
    }

    pub fn cube_fields(&self) -> CubeFields {
        CubeFields::full(self.fields)
    }
}

fn face(
    model: &QuadModel,
    at: &str,
    x: f64,
    xi: f64,
    xj: f64,
    ai: f64,
    aj: f64,
) -> Result<(f64, f64), SolveError> {
    match model.solve_for(QuadSlot::IJ, [x, xi, 0.0, xj], ai, aj) {
        Ok(r) => Ok((r.value, r.lead.abs() / r.constant.abs().max(1.0))),
        Err(ModelError::Singular(reason)) => Err(SolveError::Singular {
            at: at.to_string(),
            reason,
        }),
        Err(e) => Err(e.into()),
    }
}

fn spread(r: [f64; 3]) -> f64 {
    let d = (r[0] - r[1])
        .abs()
        .max((r[1] - r[2]).abs())
        .max((r[0] - r[2]).abs());
    d / r.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn close(model: &QuadModel, o: [f64; 6], alpha: [f64; 3]) -> Result<([f64; 3], f64), SolveError> {
    let [xi, xj, xk, xij, xjk, xik] = o;
    let [ai, aj, ak] = alpha;
    let (r1, c1) = face(model, "face jk at x_i", xi, xij, xik, aj, ak)?;
    let (r2, c2) = face(model, "face ki at x_j", xj, xjk, xij, ak, ai)?;
    let (r3, c3) = face(model, "face ij at x_k", xk, xik, xjk, ai, aj)?;
    Ok(([r1, r2, r3], c1.min(c2).min(c3)))
}

/// Fill a cube from `x` and its three neighbours; `x_ijk` along all three routes.
pub fn propagate_quad(
    model: &QuadModel,
    x: f64,
    xi: f64,
    xj: f64,
    xk: f64,
    alpha: [f64; 3],
) -> Result<QuadCube, SolveError> {
    let [ai, aj, ak] = alpha;
    let (xij, c1) = face(model, "face ij at x", x, xi, xj, ai, aj)?;
    let (xjk, c2) = face(model, "face jk at x", x, xj, xk, aj, ak)?;
    let (xik, c3) = face(model, "face ki at x", x, xk, xi, ak, ai)?;
    let (routes, c4) = close(model, [xi, xj, xk, xij, xjk, xik], alpha)?;
    Ok(QuadCube {
        fields: [x, xi, xj, xk, xij, xjk, xik, routes[0]],
        routes,
        spread: spread(routes),
        conditioning: c1.min(c2).min(c3).min(c4),
    })
}

/// Initial data on the coordinate axes of a box: `axes[d][t - 1]` is the field at `t e_{d+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxesData {
    pub origin: f64,
    pub axes: [Vec<f64>; 3],
}

impl AxesData {
    pub fn dims(&self) -> [usize; 3] {
        [self.axes[0].len(), self.axes[1].len(), self.axes[2].len()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSolution {
    pub dims: [usize; 3],
    pub fields: FieldMap,
    pub max_spread: f64,
    pub min_conditioning: f64,
    pub cubes: usize,
}

/// Fill `[0, n_1] x [0, n_2] x [0, n_3]` from axis data, square by square on the
/// coordinate planes and cube by cube inside, recording the route spread of every cube.
pub fn propagate_box(
    model: &QuadModel,
    data: &AxesData,
    alpha: [f64; 3],
) -> Result<BoxSolution, SolveError> {
    let dims = data.dims();
    if data
        .axes
        .iter()
        .flatten()
        .chain([&data.origin])
        .any(|v| !v.is_finite())
    {
        return Err(SolveError::Input("axis data must be finite".into()));
    }
    let idx = |p: [usize; 3]| MultiIndex::from(p.map(|c| c as i64));
    let mut fields = FieldMap::new();
    let mut points: Vec<[usize; 3]> = Vec::new();
    for a in 0..=dims[0] {
        for b in 0..=dims[1] {
            for c in 0..=dims[2] {
                points.push([a, b, c]);
            }
        }
    }
    points.sort_by_key(|p| {
        (
            p.iter().filter(|&&c| c > 0).count(),
            p.iter().sum::<usize>(),
            *p,
        )
    });
    let (mut max_spread, mut min_cond, mut cubes) = (0.0f64, f64::INFINITY, 0);
    for p in points {
        let on: Vec<usize> = (0..3).filter(|&d| p[d] > 0).collect();
        let value = match on.as_slice() {
            [] => data.origin,
            [d] => data.axes[*d][p[*d] - 1],
            [d, e] => {
                let mut base = p;
                base[*d] -= 1;
                base[*e] -= 1;
                let get = |q: [usize; 3]| fields.get(&idx(q)).expect("filled earlier");
                let (mut bd, mut be) = (base, base);
                bd[*d] += 1;
                be[*e] += 1;
                let at = format!(
                    "square at {} in directions ({}, {})",
                    idx(base),
                    d + 1,
                    e + 1
                );
                let (v, c) = face(
                    model,
                    &at,
                    get(base),
                    get(bd),
                    get(be),
                    alpha[*d],
                    alpha[*e],
                )?;
                min_cond = min_cond.min(c);
                v
            }
            _ => {
                let b = p.map(|c| c - 1);
                let get = |off: [usize; 3]| {
                    fields
                        .get(&idx([b[0] + off[0], b[1] + off[1], b[2] + off[2]]))
                        .expect("filled earlier")
                };
                let o = [
                    get([1, 0, 0]),
                    get([0, 1, 0]),
                    get([0, 0, 1]),
                    get([1, 1, 0]),
                    get([0, 1, 1]),
                    get([1, 0, 1]),
                ];
                let (routes, c) = close(model, o, alpha).map_err(|e| match e {
                    SolveError::Singular { at, reason } => SolveError::Singular {
                        at: format!("{at} of the cube at {}", idx(b)),
                        reason,
                    },
                    e => e,
                })?;
                max_spread = max_spread.max(spread(routes));
                min_cond = min_cond.min(c);
                cubes += 1;
                routes[0]
            }
        };
        fields.insert(idx(p), value);
    }
    Ok(BoxSolution {
        dims,
        fields,
        max_spread,
        min_conditioning: min_cond,
        cubes,
    })
}
