//! Solutions of the quad layer against the Lagrangian layer.

use plurilag::forms::{action, corner_residual, el_residual, CubeFields};
use plurilag::lattice::{CubeLabel, MultiIndex, OrientedCube, OrientedSquare, QuadSurface};
use plurilag::models::{LagrangianModel, QuadModel};
use plurilag::solve::{propagate_box, AxesData};

const ALPHA: [f64; 3] = [0.7, 1.3, 2.1];

fn q1_box() -> plurilag::solve::BoxSolution {
    let noise = [0.03, -0.02, 0.04, 0.01, -0.03, 0.02];
    let axes = [0, 1, 2].map(|d| {
        (1..=3)
            .map(|t| ALPHA[d].sqrt() * t as f64 + noise[(d + t) % 6])
            .collect::<Vec<f64>>()
    });
    propagate_box(&QuadModel::Q1Zero, &AxesData { origin: 0.01, axes }, ALPHA).unwrap()
}

#[test]
fn quad_solutions_solve_every_corner_equation() {
    let sol = q1_box();
    assert!(sol.max_spread < 1e-10);
    let form = LagrangianModel::Q1Zero.form(ALPHA.to_vec());
    let mut worst = 0.0f64;
    for a in 0..3i64 {
        for b in 0..3i64 {
            for c in 0..3i64 {
                let cube = OrientedCube::new(MultiIndex::from([a, b, c]), [1, 2, 3]).unwrap();
                let mut v = [0.0; 8];
                for l in CubeLabel::ALL {
                    v[l.index()] = sol.fields.get(&cube.vertex(l)).unwrap();
                }
                for l in CubeLabel::ALL {
                    let r = corner_residual(&CubeFields::full(v), [1, 2, 3], &*form, l).unwrap();
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn quad_solutions_are_critical_on_surfaces() {
    let sol = q1_box();
    let form = LagrangianModel::Q1Zero.form(ALPHA.to_vec());
    let mut squares = Vec::new();
    for a in 0..3i64 {
        for b in 0..3i64 {
            squares.push(OrientedSquare::new(MultiIndex::from([a, b, 0]), 1, 2).unwrap());
            squares.push(OrientedSquare::new(MultiIndex::from([0, a, b]), 2, 3).unwrap());
            squares.push(OrientedSquare::new(MultiIndex::from([b, 0, a]), 3, 1).unwrap());
        }
    }
    let surface = QuadSurface::new(3, squares).unwrap();
    // interior vertices of the planar patches and of the bent seam
    for n in [
        [1, 1, 0],
        [2, 1, 0],
        [0, 1, 1],
        [0, 2, 2],
        [1, 0, 2],
        [0, 0, 0],
    ] {
        let r = el_residual(&surface, &sol.fields, &*form, &MultiIndex::from(n)).unwrap();
        assert!(r.abs() < 1e-9, "{n:?}: {r}");
    }
    let s = action(&surface, &sol.fields, &*form).unwrap();
    assert!(s.is_finite());
}
