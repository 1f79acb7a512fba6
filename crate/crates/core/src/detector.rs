//! Finite-`h` parabola tests and reconstruction.
//!
//! Three identities hold exactly on parabolas for every `h`:
//!
//! * (C) the section area is 4/3 of the triangle `ABP`;
//! * (D) for a graph, the centroid lies on the vertical segment `PV` with `PG = 3/5·PV`;
//! * (E) the centroid sits at distance `3/5·h` from the tangent.
//!
//! Residuals are maxima over a grid of `(u, h)` pairs. Only (C) and (E) enter
//! the verdict since they do not depend on how the curve sits in the plane.

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::curve::{Curve, CurveError, FramedPoint};
use crate::section::{compute_section, point_v, Section, SectionError};

pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Offsets of the default grid, in units of the radius of curvature at `P`.
pub const DEFAULT_H_FRACTIONS: [f64; 4] = [0.025, 0.05, 0.1, 0.2];
/// Positions of the default grid points as fractions of the domain.
pub const DEFAULT_POINT_FRACTIONS: [f64; 5] = [0.45, 0.475, 0.5, 0.525, 0.55];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("empty grid")]
    EmptyGrid,
    #[error("point u = {u} has {count} distinct offsets, need at least 3")]
    TooFewOffsets { u: f64, count: usize },
    #[error("threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("section at u = {u}, h = {h}: {source}")]
    Section {
        u: f64,
        h: f64,
        source: SectionError,
    },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub u: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConditionResiduals {
    /// `max |S/(½hL) − 4/3| / (4/3)`
    #[serde(rename = "cond_C")]
    pub cond_c: f64,
    /// `max |G_u − b| / (w h)`
    #[serde(rename = "cond_D_axis")]
    pub cond_d_axis: f64,
    /// `max | |PG|/|PV| − 3/5 |`
    #[serde(rename = "cond_D_ratio")]
    pub cond_d_ratio: f64,
    /// `max |d/h − 3/5|`
    #[serde(rename = "cond_E")]
    pub cond_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "parabola")]
    Parabola,
    #[serde(rename = "not-parabola")]
    NotParabola,
}

impl Verdict {
    pub fn is_parabola(self) -> bool {
        self == Verdict::Parabola
    }
}

/// Quadratic `g(u) = a w³ (u−b)² + α (u−b) + c` with vertical axis through the
/// osculating data at `P`. For a downward convex side the leading term changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolaCoefficients {
    /// `κ(P)/2`
    pub a: f64,
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub w: f64,
    pub orientation: f64,
}

impl ParabolaCoefficients {
    /// Coefficient of `(u − b)²`.
    pub fn leading(&self) -> f64 {
        self.orientation * self.a * self.w.powi(3)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let t = u - self.b;
        self.leading() * t * t + self.alpha * t + self.c
    }

    /// Chart form of the parabola: `y = f(x)` with axis direction `(α, 1)`.
    ///
    /// `f(x) = 2a x² / (1 + 2aαx + √(1 + 4aαx))`, defined where `1 + 4aαx > 0`.
    pub fn chart_f(&self, x: f64) -> Option<f64> {
        let q = 1.0 + 4.0 * self.a * self.alpha * x;
        (q > 0.0).then(|| 2.0 * self.a * x * x / (1.0 + 2.0 * self.a * self.alpha * x + q.sqrt()))
    }

    /// Implicit chart conic `A x² + B xy + C y² + D x + E y + F = 0`,
    /// i.e. `a x² − 2aα xy + aα² y² − y = 0`.
    pub fn chart_conic(&self) -> [f64; 6] {
        let (a, al) = (self.a, self.alpha);
        [a, -2.0 * a * al, a * al * al, 0.0, -1.0, 0.0]
    }

    /// Expression text of the reconstructed quadratic.
    pub fn expression(&self) -> String {
        let shift = if self.b < 0.0 {
            format!("(u + {})", -self.b)
        } else {
            format!("(u - {})", self.b)
        };
        let signed = |x: f64| {
            if x < 0.0 {
                format!("- {}", -x)
            } else {
                format!("+ {x}")
            }
        };
        format!(
            "{} * {shift}^2 {} * {shift} {}",
            self.leading(),
            signed(self.alpha),
            signed(self.c)
        )
    }

    pub fn to_curve(&self, domain: (f64, f64)) -> Result<Curve, CurveError> {
        Curve::graph(&self.expression(), domain)
    }
}

impl Serialize for ParabolaCoefficients {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ParabolaCoefficients", 8)?;
        st.serialize_field("a", &self.a)?;
        st.serialize_field("alpha", &self.alpha)?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("c", &self.c)?;
        st.serialize_field("w", &self.w)?;
        st.serialize_field("leading", &self.leading())?;
        st.serialize_field("expression", &self.expression())?;
        st.serialize_field("chart_conic", &self.chart_conic())?;
        st.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub verdict: Verdict,
    pub residuals: ConditionResiduals,
    pub threshold: f64,
    pub grid: Vec<GridPoint>,
    pub reconstruction: Option<ParabolaCoefficients>,
    /// the verdict only covers the sampled points and offsets
    pub scope: &'static str,
}

/// Reads off the vertical-axis parabola osculating the curve at `fp`.
pub fn reconstruct_parabola(fp: &FramedPoint) -> ParabolaCoefficients {
    ParabolaCoefficients {
        a: 0.5 * fp.kappa,
        alpha: fp.alpha,
        b: fp.b,
        c: fp.c,
        w: fp.w,
        orientation: fp.orientation,
    }
}

/// Grid with offsets `{0.025, 0.05, 0.1, 0.2}/κ(P)` at each of `points`.
pub fn grid_for_points(curve: &Curve, points: &[f64]) -> Result<Vec<GridPoint>, CurveError> {
    let mut grid = Vec::with_capacity(points.len() * DEFAULT_H_FRACTIONS.len());
    for &u in points {
        let kappa = curve.frame_at(u)?.kappa;
        grid.extend(
            DEFAULT_H_FRACTIONS
                .iter()
                .map(|f| GridPoint { u, h: f / kappa }),
        );
    }
    Ok(grid)
}

/// Five points around the middle of the domain, four offsets each.
pub fn default_grid(curve: &Curve) -> Result<Vec<GridPoint>, CurveError> {
    let (lo, hi) = curve.domain();
    let points: Vec<f64> = DEFAULT_POINT_FRACTIONS
        .iter()
        .map(|f| lo + f * (hi - lo))
        .collect();
    grid_for_points(curve, &points)
}

struct Evaluated {
    frame: FramedPoint,
    section: Section,
}

fn evaluate(curve: &Curve, grid: &[GridPoint]) -> Result<Vec<Evaluated>, DetectError> {
    if grid.is_empty() {
        return Err(DetectError::EmptyGrid);
    }
    grid.par_iter()
        .map(|&GridPoint { u, h }| {
            let chart = curve.chart_at(u)?;
            let section = compute_section(&chart, h).map_err(|source| DetectError::Section {
                u,
                h,
                source,
            })?;
            Ok(Evaluated {
                frame: *chart.frame(),
                section,
            })
        })
        .collect()
}

fn residual_c(s: &Section) -> f64 {
    let four_thirds = 4.0 / 3.0;
    (s.area_over_triangle() - four_thirds).abs() / four_thirds
}

fn residual_e(s: &Section) -> f64 {
    (s.d_over_h() - 0.6).abs()
}

fn residual_d(fp: &FramedPoint, s: &Section) -> (f64, f64) {
    let g = s.centroid_world;
    let p = fp.point();
    let v = point_v(fp, s.h);
    let pv = (v[0] - p[0]).hypot(v[1] - p[1]);
    let pg = (g[0] - p[0]).hypot(g[1] - p[1]);
    ((g[0] - fp.b).abs() / (fp.w * s.h), (pg / pv - 0.6).abs())
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// `max |d/h − 3/5|` over the grid.
pub fn check_condition_e(curve: &Curve, grid: &[GridPoint]) -> Result<f64, DetectError> {
    Ok(max_of(
        evaluate(curve, grid)?
            .iter()
            .map(|e| residual_e(&e.section)),
    ))
}

/// `max |S/(½hL) − 4/3| / (4/3)` over the grid.
pub fn check_condition_c(curve: &Curve, grid: &[GridPoint]) -> Result<f64, DetectError> {
    Ok(max_of(
        evaluate(curve, grid)?
            .iter()
            .map(|e| residual_c(&e.section)),
    ))
}

/// `(axis, ratio)` residuals of the centroid-on-`PV` condition.
pub fn check_condition_d(curve: &Curve, grid: &[GridPoint]) -> Result<(f64, f64), DetectError> {
    let ev = evaluate(curve, grid)?;
    let d: Vec<_> = ev
        .iter()
        .map(|e| residual_d(&e.frame, &e.section))
        .collect();
    Ok((max_of(d.iter().map(|r| r.0)), max_of(d.iter().map(|r| r.1))))
}

fn check_grid(grid: &[GridPoint]) -> Result<(), DetectError> {
    if grid.is_empty() {
        return Err(DetectError::EmptyGrid);
    }
    let mut points: Vec<f64> = grid.iter().map(|g| g.u).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    for u in points {
        let mut hs: Vec<f64> = grid.iter().filter(|g| g.u == u).map(|g| g.h).collect();
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        if hs.len() < 3 {
            return Err(DetectError::TooFewOffsets { u, count: hs.len() });
        }
    }
    Ok(())
}

/// Parabola iff the (C) and (E) residuals are both within `threshold`.
pub fn classify(
    curve: &Curve,
    grid: &[GridPoint],
    threshold: f64,
) -> Result<DetectionReport, DetectError> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(DetectError::InvalidThreshold(threshold));
    }
    check_grid(grid)?;
    let ev = evaluate(curve, grid)?;
    let d: Vec<_> = ev
        .iter()
        .map(|e| residual_d(&e.frame, &e.section))
        .collect();
    let residuals = ConditionResiduals {
        cond_c: max_of(ev.iter().map(|e| residual_c(&e.section))),
        cond_d_axis: max_of(d.iter().map(|r| r.0)),
        cond_d_ratio: max_of(d.iter().map(|r| r.1)),
        cond_e: max_of(ev.iter().map(|e| residual_e(&e.section))),
    };
    let verdict = if residuals.cond_c <= threshold && residuals.cond_e <= threshold {
        Verdict::Parabola
    } else {
        Verdict::NotParabola
    };
    // read the parabola off at the middle grid point
    let mut points: Vec<f64> = grid.iter().map(|g| g.u).collect();
    points.sort_by(f64::total_cmp);
    let middle = points[points.len() / 2];
    let reconstruction = verdict.is_parabola().then(|| {
        let e = ev.iter().find(|e| e.frame.b == middle).unwrap_or(&ev[0]);
        reconstruct_parabola(&e.frame)
    });
    Ok(DetectionReport {
        verdict,
        residuals,
        threshold,
        grid: grid.to_vec(),
        reconstruction,
        scope: "tested grid only",
    })
}
