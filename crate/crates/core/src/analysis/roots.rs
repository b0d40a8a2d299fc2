//! Small 1-D numerical routines: golden-section minimization, a safeguarded
//! Newton/bisection root finder, nonnegative real roots of a cubic, and the
//! principal branch of the Lambert W function.

use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// Minimizes a unimodal `f` on `[lo, hi]` to absolute tolerance `tol`.
///
/// Fails when the initial probes show no interior point below both ends,
/// which means the minimum is not bracketed.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let (fa, fb) = (f(a), f(b));
    if !(fc.min(fd) < fa && fc.min(fd) < fb) {
        return Err(Error::NonConvergence(format!(
            "minimum not bracketed in [{lo}, {hi}]"
        )));
    }
    for _ in 0..MAX_ITER {
        if (b - a).abs() <= tol {
            return Ok(0.5 * (a + b));
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::NonConvergence(format!(
        "golden section did not reach tolerance {tol} in {MAX_ITER} iterations"
    )))
}

/// Finds a root of `f` in `[lo, hi]`, where `f(lo)` and `f(hi)` have opposite
/// signs, using Newton steps that fall back to bisection whenever they leave
/// the bracket. `fdf` returns `(f(x), f'(x))`.
pub fn newton_bisect<F: Fn(f64) -> (f64, f64)>(fdf: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NonConvergence(format!(
            "no sign change in [{lo}, {hi}]"
        )));
    }
    // orient so that f(neg) < 0 < f(pos)
    let (mut neg, mut pos) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            neg = x;
        } else {
            pos = x;
        }
        let (a, b) = if neg < pos { (neg, pos) } else { (pos, neg) };
        let newton = x - fx / dfx;
        let next = if dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let scale = next.abs().max(f64::MIN_POSITIVE);
        if (next - x).abs() <= rel_tol * scale || (b - a) <= rel_tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence(format!(
        "root finder did not converge in [{lo}, {hi}]"
    )))
}

/// All real roots in `[0, inf)` of `a3 x^3 + a2 x^2 + a1 x + a0` with `a3 > 0`,
/// in increasing order, each to relative tolerance `rel_tol`.
///
/// The half-line is split at the nonnegative critical points of the cubic;
/// every monotone piece with a sign change holds exactly one root.
pub fn nonnegative_cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64, rel_tol: f64) -> Result<Vec<f64>> {
    if !(a3 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "leading cubic coefficient must be positive, got {a3}"
        )));
    }
    let poly = |x: f64| ((a3 * x + a2) * x + a1) * x + a0;
    let fdf = |x: f64| (poly(x), (3.0 * a3 * x + 2.0 * a2) * x + a1);

    // critical points: 3 a3 x^2 + 2 a2 x + a1 = 0
    let mut knots = vec![0.0];
    let disc = a2 * a2 - 3.0 * a3 * a1;
    if disc > 0.0 {
        let sq = disc.sqrt();
        // numerically stable quadratic roots
        let q = -(a2 + a2.signum() * sq);
        let mut crit = if q != 0.0 {
            vec![q / (3.0 * a3), a1 / q]
        } else {
            vec![sq / (3.0 * a3), -sq / (3.0 * a3)]
        };
        crit.sort_by(f64::total_cmp);
        knots.extend(crit.into_iter().filter(|&c| c > 0.0));
    }

    // upper end: a root bound for the monic polynomial
    let bound = 1.0 + [a2, a1, a0].iter().map(|c| (c / a3).abs()).fold(0.0, f64::max);
    knots.push(bound.max(*knots.last().unwrap_or(&0.0) * 2.0 + 1.0));

    let mut roots: Vec<f64> = Vec::new();
    if poly(0.0) == 0.0 {
        roots.push(0.0);
    }
    for pair in knots.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let (flo, fhi) = (poly(lo), poly(hi));
        if fhi == 0.0 {
            roots.push(hi);
            continue;
        }
        if flo == 0.0 || flo.signum() == fhi.signum() {
            continue;
        }
        roots.push(newton_bisect(fdf, lo, hi, rel_tol)?);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= rel_tol * a.abs().max(1.0));
    Ok(roots)
}

/// Principal branch `W0` of the Lambert function on `[-1/e, inf)`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    let branch = -(-1f64).exp();
    if z.is_nan() || z < branch {
        return Err(Error::InvalidParameter(format!(
            "Lambert W0 undefined at {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    // initial guess: branch-point series near -1/e, log asymptotics for large z
    let mut w = if z < -0.25 {
        let p = (2.0 * (std::f64::consts::E * z + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if z < 3.0 {
        (1.0 + z).ln()
    } else {
        let l = z.ln();
        l - l.ln()
    };
    // Halley iterations on w e^w - z
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}
