//! Adaptive Simpson quadrature over a fixed-size vector of integrands.
//!
//! All components share the same subdivision; a panel is accepted only when
//! every component meets its own absolute tolerance. Accepted panels carry the
//! usual `(S2 - S1) / 15` Richardson correction.

use thiserror::Error;

pub const MAX_DEPTH: u32 = 40;
const INITIAL_PANELS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError<E> {
    #[error("tolerance not met after {MAX_DEPTH} bisections near x = {at}")]
    ToleranceNotMet { at: f64 },
    #[error(transparent)]
    Eval(E),
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    fa: [f64; N],
    fm: [f64; N],
    fb: [f64; N],
    whole: [f64; N],
}

fn simpson<const N: usize>(h: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]))
}

/// Integrates the vector function `f` over `[a, b]` with per-component
/// absolute tolerances `tol`.
pub fn adaptive_simpson<const N: usize, F, E>(
    f: &F,
    a: f64,
    b: f64,
    tol: [f64; N],
) -> Result<[f64; N], QuadratureError<E>>
where
    F: Fn(f64) -> Result<[f64; N], E>,
{
    let mut total = [0.0; N];
    if a == b {
        return Ok(total);
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol.map(|t| t / INITIAL_PANELS as f64);
    let mut fa = f(a).map_err(QuadratureError::Eval)?;
    for k in 0..INITIAL_PANELS {
        let pa = a + k as f64 * width;
        let pb = if k + 1 == INITIAL_PANELS {
            b
        } else {
            pa + width
        };
        let fm = f(0.5 * (pa + pb)).map_err(QuadratureError::Eval)?;
        let fb = f(pb).map_err(QuadratureError::Eval)?;
        let whole = simpson(pb - pa, &fa, &fm, &fb);
        let panel = Panel {
            a: pa,
            b: pb,
            fa,
            fm,
            fb,
            whole,
        };
        let part = refine(f, panel, panel_tol, MAX_DEPTH)?;
        for i in 0..N {
            total[i] += part[i];
        }
        fa = fb;
    }
    Ok(total)
}

fn refine<const N: usize, F, E>(
    f: &F,
    p: Panel<N>,
    tol: [f64; N],
    depth: u32,
) -> Result<[f64; N], QuadratureError<E>>
where
    F: Fn(f64) -> Result<[f64; N], E>,
{
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm).map_err(QuadratureError::Eval)?;
    let frm = f(rm).map_err(QuadratureError::Eval)?;
    let left = simpson(m - p.a, &p.fa, &flm, &p.fm);
    let right = simpson(p.b - m, &p.fm, &frm, &p.fb);
    let converged = (0..N).all(|i| (left[i] + right[i] - p.whole[i]).abs() <= 15.0 * tol[i]);
    // panel is down to a handful of ulps; no further splitting is meaningful
    let exhausted = lm <= p.a || rm >= p.b || m <= p.a || m >= p.b;
    if converged || exhausted {
        return Ok(std::array::from_fn(|i| {
            let s2 = left[i] + right[i];
            s2 + (s2 - p.whole[i]) / 15.0
        }));
    }
    if depth == 0 {
        return Err(QuadratureError::ToleranceNotMet { at: m });
    }
    let half = tol.map(|t| 0.5 * t);
    let l = refine(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        half,
        depth - 1,
    )?;
    let r = refine(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        half,
        depth - 1,
    )?;
    Ok(std::array::from_fn(|i| l[i] + r[i]))
}
