//! Seeded random streams and samplers of admissible data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::Octahedron;
use crate::lattice::CubeLabel;
use crate::models::{LagrangianModel, QuadModel};

/// Smallest admissibility margin of sampled and solved data.
pub const MIN_MARGIN: f64 = 2e-2;
/// Largest field magnitude kept.
pub const MAX_FIELD: f64 = 10.0;
/// Retries per trial before the trial is reported as a sampling failure.
pub const MAX_RETRIES: usize = 100;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream `stream` of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64, stream: u64) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ stream.wrapping_mul(0x5851_f42d));
    ChaCha8Rng::seed_from_u64(s)
}

/// Parameter box of the exponential model at deformation `gamma`.
pub fn exp_alpha_range(gamma: f64) -> (f64, f64) {
    let hi = if gamma > 0.0 {
        (0.99 / gamma).sqrt().min(3.0)
    } else {
        3.0
    };
    (1.5, hi)
}

pub fn sample_alpha(model: &LagrangianModel, rng: &mut impl Rng) -> [f64; 3] {
    let (lo, hi) = match model {
        LagrangianModel::Exponential { gamma } => exp_alpha_range(*gamma),
        _ => (0.5, 3.0),
    };
    [0; 3].map(|_| rng.random_range(lo..hi))
}

pub fn sample_quad_alpha(model: &QuadModel, rng: &mut impl Rng) -> [f64; 3] {
    let (lo, hi) = match model {
        QuadModel::Q3Zero => (0.2, 1.0),
        _ => (0.5, 3.0),
    };
    [0; 3].map(|_| rng.random_range(lo..hi))
}

/// Slopes `s_d` of a linear field `sum s_d n_d` on which every exponential leg is
/// defined: `s_d < log alpha_d` and `|s_i - s_j| > |log(alpha_i / alpha_j)|`.
pub fn exp_slopes(alpha: &[f64], rng: &mut impl Rng) -> Option<Vec<f64>> {
    for _ in 0..50 {
        let s: Vec<f64> = alpha
            .iter()
            .map(|a| rng.random_range(-1.5..a.ln() - 0.05))
            .collect();
        let ok = (0..s.len())
            .all(|i| (0..i).all(|j| (s[i] - s[j]).abs() > (alpha[i] / alpha[j]).ln().abs() + 0.05));
        if ok {
            return Some(s);
        }
    }
    None
}

/// A random octahedron on which the model's legs are defined with margin.
pub fn sample_octahedron(
    model: &LagrangianModel,
    alpha: [f64; 3],
    rng: &mut impl Rng,
) -> Option<Octahedron> {
    let o = match model {
        LagrangianModel::Exponential { .. } => {
            let s = exp_slopes(&alpha, rng)?;
            let mut o = Octahedron([0.0; 6]);
            for l in CubeLabel::OCTAHEDRON {
                let lin: f64 = l
                    .offsets()
                    .iter()
                    .zip(&s)
                    .filter(|p| *p.0)
                    .map(|p| p.1)
                    .sum();
                o.set(l, lin + rng.random_range(-0.1..0.1));
            }
            o
        }
        _ => Octahedron([0; 6].map(|_| rng.random_range(-1.5..1.5))),
    };
    (model.admissibility_margin(&o, alpha) >= MIN_MARGIN).then_some(o)
}

/// Whether solved data are admissible and of desk scale.
pub fn accept(model: &LagrangianModel, o: &Octahedron, alpha: [f64; 3]) -> bool {
    o.max_abs() <= MAX_FIELD && model.admissibility_margin(o, alpha) >= MIN_MARGIN
}

/// The twelve pairs of octahedron labels that are not opposite vertices of the cube.
///
/// Given the four fields around an opposite pair, a real consistent completion need
/// not exist, so those pairs are left out of random sampling.
pub fn target_pairs() -> Vec<[CubeLabel; 2]> {
    let o = CubeLabel::OCTAHEDRON;
    let mut out = Vec::with_capacity(12);
    for a in 0..6 {
        for b in a + 1..6 {
            if o[a].opposite() != o[b] {
                out.push([o[a], o[b]]);
            }
        }
    }
    out
}
