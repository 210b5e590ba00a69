//! Scalar root finding: bracketed Brent iteration, bracket expansion and grid scanning.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change found on [{lo}, {hi}] after expansion")]
    NoBracket { lo: f64, hi: f64 },
    #[error("no convergence after {0} iterations")]
    MaxIterations(usize),
    #[error("residual left its domain at {0}")]
    Domain(f64),
    #[error("residual {residual:e} at {x} exceeds tolerance")]
    Tolerance { x: f64, residual: f64 },
}

/// Geometric widening of a seed interval in search of a sign change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansion {
    pub factor: f64,
    pub max_steps: usize,
}

impl Default for Expansion {
    fn default() -> Self {
        Expansion {
            factor: 1.6,
            max_steps: 40,
        }
    }
}

/// Tolerances for one-dimensional root finding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootConfig {
    /// Bound on `|f(root)|`.
    pub abs_tol: f64,
    pub max_iter: usize,
    pub expansion: Expansion,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            abs_tol: 1e-12,
            max_iter: 80,
            expansion: Expansion::default(),
        }
    }
}

/// A root located by [`scan_roots`] together with `|f|` there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
}

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Iterates until the bracket shrinks to machine resolution; the residual
/// tolerance is checked by [`root_1d`].
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &RootConfig,
) -> Result<f64, RootError> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(RootError::Domain(a));
    }
    if !fb.is_finite() {
        return Err(RootError::Domain(b));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NoBracket {
            lo: a.min(b),
            hi: a.max(b),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::Domain(b));
        }
    }
    Err(RootError::MaxIterations(cfg.max_iter))
}

/// Root of `f` starting from the seed interval `[lo, hi]`, widened geometrically
/// on the side with the smaller `|f|` until `f` changes sign. Widening into a
/// region where `f` is not finite ends the search.
pub fn root_1d<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &RootConfig,
) -> Result<f64, RootError> {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (mut fa, mut fb) = (f(a), f(b));
    let mut steps = 0;
    while !(fa.is_finite()
        && fb.is_finite()
        && (fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum()))
    {
        if steps == cfg.expansion.max_steps || (!fa.is_finite() && !fb.is_finite()) {
            return Err(RootError::NoBracket { lo: a, hi: b });
        }
        steps += 1;
        let grow = (cfg.expansion.factor - 1.0) * (b - a).max(f64::EPSILON);
        if fa.is_finite() && (!fb.is_finite() || fa.abs() < fb.abs()) {
            let t = a - grow;
            let ft = f(t);
            if ft.is_finite() {
                a = t;
                fa = ft;
            } else {
                return Err(RootError::NoBracket { lo: t, hi: b });
            }
        } else {
            let t = b + grow;
            let ft = f(t);
            if ft.is_finite() {
                b = t;
                fb = ft;
            } else {
                return Err(RootError::NoBracket { lo: a, hi: t });
            }
        }
    }
    let x = brent(&mut f, a, b, cfg)?;
    let residual = f(x).abs();
    if residual < cfg.abs_tol {
        Ok(x)
    } else {
        Err(RootError::Tolerance { x, residual })
    }
}

/// All sign changes of `f` on a uniform grid of `points` nodes over `[lo, hi]`,
/// refined by [`brent`].
///
/// Nodes where `f` is non-finite are treated as outside the domain, so brackets
/// never straddle them. Sign changes across a pole survive refinement with a
/// large residual; callers filter on [`Root::residual`].
pub fn scan_roots<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    cfg: &RootConfig,
) -> Vec<Root> {
    let n = points.max(2);
    let xs: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for k in 0..n - 1 {
        let (fa, fb) = (fs[k], fs[k + 1]);
        if !fa.is_finite() || !fb.is_finite() {
            continue;
        }
        if fa == 0.0 {
            roots.push(Root {
                x: xs[k],
                residual: 0.0,
            });
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        if let Ok(x) = brent(&mut f, xs[k], xs[k + 1], cfg) {
            let r = f(x);
            if r.is_finite() {
                roots.push(Root {
                    x,
                    residual: r.abs(),
                });
            }
        }
    }
    if fs[n - 1] == 0.0 {
        roots.push(Root {
            x: xs[n - 1],
            residual: 0.0,
        });
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_sqrt_two() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, &RootConfig::default()).unwrap();
        assert!((r * r - 2.0).abs() < 1e-15);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_non_bracket() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, &RootConfig::default()),
            Err(RootError::NoBracket { .. })
        ));
    }

    #[test]
    fn root_1d_examples() {
        let cfg = RootConfig::default();
        assert_eq!(root_1d(|t| t - 1.0, 0.0, 2.0, &cfg).unwrap(), 1.0);
        let r = root_1d(|t| t - 40.0, 0.0, 1.0, &cfg).unwrap();
        assert!((r - 40.0).abs() < 1e-12);
        let r = root_1d(|t| t.exp() - 1e-3, 4.0, 5.0, &cfg).unwrap();
        assert!((r - 1e-3f64.ln()).abs() < 1e-12);
        assert!(matches!(
            root_1d(|t: f64| t * t + 1.0, -1.0, 1.0, &cfg),
            Err(RootError::NoBracket { .. })
        ));
        // no sign change before the domain edge at 0
        assert!(matches!(
            root_1d(|t: f64| t.ln().exp() + 1.0, 1.0, 2.0, &cfg),
            Err(RootError::NoBracket { .. })
        ));
    }

    #[test]
    fn scan_finds_all_roots_of_cubic() {
        let roots = scan_roots(
            |x| (x - 1.0) * (x + 0.5) * (x - 2.5),
            -3.0,
            3.0,
            97,
            &RootConfig::default(),
        );
        let xs: Vec<f64> = roots.iter().map(|r| r.x).collect();
        assert_eq!(xs.len(), 3);
        for (x, e) in xs.iter().zip([-0.5, 1.0, 2.5]) {
            assert!((x - e).abs() < 1e-12, "{x} vs {e}");
        }
    }

    #[test]
    fn pole_has_large_residual() {
        let roots = scan_roots(|x| 1.0 / (x - 0.3), -1.0, 1.0, 50, &RootConfig::default());
        assert_eq!(roots.len(), 1);
        assert!(roots[0].residual > 1e6);
    }

    #[test]
    fn skips_domain_holes() {
        let roots = scan_roots(
            |x| if x > 0.0 { x.ln() } else { f64::NAN },
            -2.0,
            3.0,
            60,
            &RootConfig::default(),
        );
        assert_eq!(roots.len(), 1);
        assert!((roots[0].x - 1.0).abs() < 1e-13);
    }
}
