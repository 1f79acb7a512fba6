//! `h → 0` limits of normalized section quantities.
//!
//! Ratios are sampled on the geometric schedule `h_k = h0·2^{-k}` and fitted by
//! least squares to `c0 + c1·√h + c2·h + c3·h√h`; `c0` is the limit. The
//! expansion variable is `√h` because chord endpoints of a convex curve move
//! like `√h`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curve::RotatedChart;
use crate::section::{compute_section, Section, SectionError};

pub const DEFAULT_SAMPLES: usize = 8;
const MODEL_TERMS: usize = 4;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError<E = SectionError> {
    #[error("need at least {MODEL_TERMS} samples, got {0}")]
    TooFewSamples(usize),
    #[error("starting offset must be positive and finite, got {0}")]
    InvalidStart(f64),
    #[error("ratio evaluation failed at h = {h}: {source}")]
    Sample { h: f64, source: E },
    #[error("ratio is not finite at h = {h}")]
    NonFinite { h: f64 },
    #[error("ill-conditioned fit (condition number {condition:e})")]
    IllConditioned { condition: f64 },
}

/// An extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// heuristic: worst fit residual plus the size of the last fitted term at the smallest `h`
    pub error_est: f64,
    /// `(h, ratio)`, strictly decreasing in `h`
    pub samples: Vec<(f64, f64)>,
    /// number of `√h` powers in the model, constant term included
    pub model_order: usize,
}

/// Limits of `φ/(h²√h)`, `S/(h√h)` and `φ₂/(h²√h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentLimits {
    pub phi: LimitEstimate,
    pub area: LimitEstimate,
    pub phi2: LimitEstimate,
}

fn schedule(h0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| h0 * 0.5f64.powi(k as i32)).collect()
}

fn check_schedule<E>(h0: f64, n: usize) -> Result<(), LimitError<E>> {
    if n < MODEL_TERMS {
        return Err(LimitError::TooFewSamples(n));
    }
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(LimitError::InvalidStart(h0));
    }
    Ok(())
}

/// Fits the `√h` model to precomputed samples (decreasing `h`).
pub fn extrapolate_samples<E>(samples: Vec<(f64, f64)>) -> Result<LimitEstimate, LimitError<E>> {
    let n = samples.len();
    if n < MODEL_TERMS {
        return Err(LimitError::TooFewSamples(n));
    }
    if let Some(&(h, _)) = samples.iter().find(|(_, r)| !r.is_finite()) {
        return Err(LimitError::NonFinite { h });
    }
    let h0 = samples[0].0;
    // scaled abscissa s = √(h/h0) ∈ (0, 1] keeps the design matrix well conditioned
    let s: Vec<f64> = samples.iter().map(|(h, _)| (h / h0).sqrt()).collect();
    let a = DMatrix::from_fn(n, MODEL_TERMS, |i, j| s[i].powi(j as i32));
    let y = DVector::from_iterator(n, samples.iter().map(|(_, r)| *r));
    let svd = a.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(LimitError::IllConditioned { condition });
    }
    let coef = svd
        .solve(&y, 0.0)
        .map_err(|_| LimitError::IllConditioned { condition })?;
    let residual = (&a * &coef - &y).amax();
    let s_min = s[n - 1];
    let tail = (coef[MODEL_TERMS - 1] * s_min.powi(MODEL_TERMS as i32 - 1)).abs();
    Ok(LimitEstimate {
        value: coef[0],
        error_est: residual + tail,
        samples,
        model_order: MODEL_TERMS,
    })
}

/// Samples `ratio` at `h0·2^{-k}`, `k = 0..n`, and extrapolates to `h = 0`.
pub fn extrapolate<F, E>(ratio: F, h0: f64, n: usize) -> Result<LimitEstimate, LimitError<E>>
where
    F: Fn(f64) -> Result<f64, E>,
{
    check_schedule(h0, n)?;
    let samples = schedule(h0, n)
        .into_iter()
        .map(|h| {
            ratio(h)
                .map(|r| (h, r))
                .map_err(|source| LimitError::Sample { h, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    extrapolate_samples(samples)
}

/// Largest offset of the default schedule, in units of the radius of curvature.
pub const DEFAULT_H0_SCALE: f64 = 0.005;

/// `0.005/κ(P)`: small enough that the neglected `h²` term stays below `1e-6`
/// relative on the builtin catalog.
pub fn default_h0(chart: &RotatedChart) -> f64 {
    DEFAULT_H0_SCALE / chart.frame().kappa
}

fn sections(chart: &RotatedChart, h0: f64, n: usize) -> Result<Vec<Section>, LimitError> {
    check_schedule(h0, n)?;
    schedule(h0, n)
        .into_par_iter()
        .map(|h| compute_section(chart, h).map_err(|source| LimitError::Sample { h, source }))
        .collect()
}

fn fit(secs: &[Section], ratio: impl Fn(&Section) -> f64) -> Result<LimitEstimate, LimitError> {
    extrapolate_samples(secs.iter().map(|s| (s.h, ratio(s))).collect())
}

/// Curvature as the limit of `8h/L²`.
pub fn curvature_from_chords(
    chart: &RotatedChart,
    h0: f64,
    n: usize,
) -> Result<LimitEstimate, LimitError> {
    fit(&sections(chart, h0, n)?, |s| {
        8.0 * s.h / (s.length * s.length)
    })
}

/// Limit of `L/√h`, equal to `2√2/√κ`.
pub fn chord_constant(
    chart: &RotatedChart,
    h0: f64,
    n: usize,
) -> Result<LimitEstimate, LimitError> {
    fit(&sections(chart, h0, n)?, |s| s.length / s.h.sqrt())
}

/// Limit of `d/h`, which is 3/5 for every strictly convex curve.
pub fn centroid_ratio_limit(
    chart: &RotatedChart,
    h0: f64,
    n: usize,
) -> Result<LimitEstimate, LimitError> {
    fit(&sections(chart, h0, n)?, |s| s.d / s.h)
}

/// Limits of `φ/(h²√h)`, `S/(h√h)`, `φ₂/(h²√h)`: `4√2/(5√κ)`, `4√2/(3√κ)`, `√2/(5√κ)`.
pub fn moment_constants(
    chart: &RotatedChart,
    h0: f64,
    n: usize,
) -> Result<MomentLimits, LimitError> {
    let secs = sections(chart, h0, n)?;
    Ok(MomentLimits {
        phi: fit(&secs, |s| s.phi / (s.h * s.h * s.h.sqrt()))?,
        area: fit(&secs, |s| s.area / (s.h * s.h.sqrt()))?,
        phi2: fit(&secs, |s| s.phi2 / (s.h * s.h * s.h.sqrt()))?,
    })
}
