//! Safeguarded Newton iteration inside a sign-change bracket.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError<E> {
    #[error("endpoints do not bracket a root: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("no convergence after {iterations} iterations (|f| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Eval(E),
}

const MAX_ITER: usize = 200;

/// Finds a root of `f` in `[lo, hi]` given `f(lo)` and `f(hi)` of opposite sign.
///
/// `f` returns the value and first derivative. Newton steps are taken when they
/// stay inside the current bracket and shrink the residual fast enough; otherwise
/// the bracket is bisected. Iteration stops once the bracket collapses to
/// adjacent floats or the Newton step is negligible, and the returned point then
/// has `|f| <= ftol`, or the call fails.
pub fn hybrid_newton<F, E>(mut f: F, lo: f64, hi: f64, ftol: f64) -> Result<f64, RootError<E>>
where
    F: FnMut(f64) -> Result<(f64, f64), E>,
{
    let (f_lo, _) = f(lo).map_err(RootError::Eval)?;
    let (f_hi, _) = f(hi).map_err(RootError::Eval)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NotBracketed { lo, hi, f_lo, f_hi });
    }
    // orient so that f(neg) < 0 < f(pos)
    let (mut neg, mut pos) = if f_lo < 0.0 { (lo, hi) } else { (hi, lo) };
    let mut x = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, x);
    let mut prev_step = (hi - lo).abs();
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x).map_err(RootError::Eval)?;
        if fx.abs() < best.0 {
            best = (fx.abs(), x);
        }
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
        let step;
        if dfx != 0.0 && newton > a && newton < b && (fx / dfx).abs() < 0.5 * prev_step {
            step = (fx / dfx).abs();
            x = newton;
        } else {
            step = 0.5 * (b - a);
            x = a + step;
        }
        prev_step = step;
        let scale = x.abs().max(f64::MIN_POSITIVE);
        if step <= 2.0 * f64::EPSILON * scale || b - a <= 2.0 * f64::EPSILON * scale {
            let (fx, _) = f(x).map_err(RootError::Eval)?;
            if fx.abs() < best.0 {
                best = (fx.abs(), x);
            }
            break;
        }
    }
    if best.0 <= ftol {
        Ok(best.1)
    } else {
        Err(RootError::NoConvergence {
            iterations: MAX_ITER,
            residual: best.0,
        })
    }
}
