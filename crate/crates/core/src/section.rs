//! The region cut off from a curve by a line parallel to the tangent at `P`.
//!
//! Everything is computed in the chart of [`RotatedChart`]: the cutting line is
//! `y = h`, the section is `{(x, y) : f(x) < y < h}` over the connected
//! component of `{f < h}` that contains the origin. Integrals are taken along
//! the curve parameter `u` (`dx = x'(u) du`), which keeps every integrand
//! smooth and avoids inverting the chart.

use serde::Serialize;
use thiserror::Error;

use crate::curve::{ChartSample, CurveError, FramedPoint, RotatedChart};
use crate::quadrature::{adaptive_simpson, QuadratureError};
use crate::roots::{hybrid_newton, RootError};

/// Relative tolerance of the adaptive quadrature (scaled per component).
pub const QUAD_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error("h must be positive and finite, got {0}")]
    InvalidOffset(f64),
    #[error("h = {h} is too large: the cutting line leaves the curve's domain on the {side} side")]
    HTooLarge { h: f64, side: Side },
    #[error("chord endpoint search failed on the {side} side: {message}")]
    Bounds { side: Side, message: String },
    #[error("section quadrature failed: {message}")]
    Quadrature { message: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Chord endpoints in chart abscissa (`x1 < 0 < x2`) and curve parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionBounds {
    pub x1: f64,
    pub x2: f64,
    pub u1: f64,
    pub u2: f64,
}

/// All quantities of the section at offset `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub h: f64,
    pub x1: f64,
    pub x2: f64,
    /// chord length `x2 - x1`
    #[serde(rename = "L")]
    pub length: f64,
    /// area between curve and chord
    #[serde(rename = "S")]
    pub area: f64,
    /// rectangle `h·L`
    #[serde(rename = "R")]
    pub rectangle: f64,
    /// `½∫(h² − f²) dx`, first moment about the tangent
    pub phi: f64,
    /// `∫x(h − f) dx`, first moment about the normal
    pub psi: f64,
    /// `½∫f² dx`
    pub phi2: f64,
    pub centroid_chart: [f64; 2],
    pub centroid_world: [f64; 2],
    /// distance from the centroid to the tangent at `P`
    pub d: f64,
    #[serde(rename = "P_world")]
    pub p_world: [f64; 2],
    #[serde(rename = "V_world")]
    pub v_world: [f64; 2],
    #[serde(skip)]
    pub u1: f64,
    #[serde(skip)]
    pub u2: f64,
}

impl Section {
    /// Area of the triangle with base on the chord and apex at `P`.
    pub fn triangle_area(&self) -> f64 {
        triangle_area(self)
    }

    /// `φ₁ = ½h²L`
    pub fn phi1(&self) -> f64 {
        0.5 * self.h * self.h * self.length
    }

    pub fn d_over_h(&self) -> f64 {
        self.d / self.h
    }

    pub fn area_over_triangle(&self) -> f64 {
        self.area / self.triangle_area()
    }
}

pub fn triangle_area(sec: &Section) -> f64 {
    0.5 * sec.length * sec.h
}

/// `V = (b, c + w·h)`: where the vertical through `P` meets the cutting line.
pub fn point_v(fp: &FramedPoint, h: f64) -> [f64; 2] {
    [fp.b, fp.c + fp.orientation * fp.w * h]
}

fn root_message<E: std::fmt::Display>(e: RootError<E>) -> String {
    e.to_string()
}

/// Finds the chord endpoints of the section at offset `h`.
///
/// Brackets outward from `P` using the osculating-parabola half-width as the
/// first step, then refines each endpoint with a safeguarded Newton iteration.
pub fn section_bounds(chart: &RotatedChart, h: f64) -> Result<SectionBounds, SectionError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(SectionError::InvalidOffset(h));
    }
    let fp = chart.frame();
    let (lo, hi) = chart.curve().domain();
    let margin = 1e-9 * (hi - lo);
    let half_width = (2.0 * h / fp.kappa).sqrt() / fp.w;
    let ftol = 1e-12 * h.max(1.0);

    let endpoint = |side: Side| -> Result<f64, SectionError> {
        let (dir, limit) = match side {
            Side::Left => (-1.0, lo + margin),
            Side::Right => (1.0, hi - margin),
        };
        let mut inner = fp.b;
        let mut step = 0.5 * half_width;
        let outer = loop {
            let mut next = inner + dir * step;
            let clamped = (next - limit) * dir >= 0.0;
            if clamped {
                next = limit;
            }
            let y = match chart.sample(next) {
                Ok(s) => s.y,
                Err(_) if clamped => return Err(SectionError::HTooLarge { h, side }),
                Err(e) => return Err(e.into()),
            };
            if y >= h {
                break next;
            }
            if clamped {
                return Err(SectionError::HTooLarge { h, side });
            }
            inner = next;
            step *= 1.6;
        };
        let g = |u: f64| -> Result<(f64, f64), CurveError> {
            let s = chart.sample(u)?;
            Ok((s.y - h, s.dy))
        };
        hybrid_newton(g, inner, outer, ftol).map_err(|e| SectionError::Bounds {
            side,
            message: root_message(e),
        })
    };

    let u1 = endpoint(Side::Left)?;
    let u2 = endpoint(Side::Right)?;
    let x1 = chart.sample(u1)?.x;
    let x2 = chart.sample(u2)?.x;
    Ok(SectionBounds { x1, x2, u1, u2 })
}

fn moments(s: &ChartSample, h: f64) -> [f64; 4] {
    let gap = h - s.y;
    [
        gap * s.dx,
        0.5 * (h * h - s.y * s.y) * s.dx,
        s.x * gap * s.dx,
        0.5 * s.y * s.y * s.dx,
    ]
}

/// Computes every section quantity at offset `h`.
pub fn compute_section(chart: &RotatedChart, h: f64) -> Result<Section, SectionError> {
    let bounds = section_bounds(chart, h)?;
    let SectionBounds { x1, x2, u1, u2 } = bounds;
    let length = x2 - x1;
    let tol_area = QUAD_RTOL * h * length.max(1.0);
    let tol = [
        tol_area,
        tol_area * h,
        tol_area * x1.abs().max(x2.abs()),
        tol_area * h,
    ];
    let integrand = |u: f64| -> Result<[f64; 4], CurveError> { Ok(moments(&chart.sample(u)?, h)) };
    let [area, phi, psi, phi2] =
        adaptive_simpson(&integrand, u1, u2, tol).map_err(|e| match e {
            QuadratureError::Eval(e) => SectionError::Curve(e),
            e => SectionError::Quadrature {
                message: e.to_string(),
            },
        })?;
    let fp = chart.frame();
    let centroid_chart = [psi / area, phi / area];
    let centroid_world = chart.forward(centroid_chart[0], centroid_chart[1]);
    Ok(Section {
        h,
        x1,
        x2,
        length,
        area,
        rectangle: h * length,
        phi,
        psi,
        phi2,
        centroid_chart,
        centroid_world,
        d: centroid_chart[1],
        p_world: fp.point(),
        v_world: point_v(fp, h),
        u1,
        u2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Builtin, Curve};

    fn chart(name: Builtin, param: f64, u: f64) -> RotatedChart {
        Curve::builtin(name, param).unwrap().chart_at(u).unwrap()
    }

    #[test]
    fn unit_parabola_bounds() {
        let c = chart(Builtin::Parabola, 1.0, 0.0);
        let b = section_bounds(&c, 1.0).unwrap();
        assert!((b.x1 + 1.0).abs() < 1e-14 && (b.x2 - 1.0).abs() < 1e-14);
        let b = section_bounds(&c, 0.25).unwrap();
        assert!((b.x1 + 0.5).abs() < 1e-14 && (b.x2 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bounds_lie_on_the_cutting_line() {
        let c = chart(Builtin::Catenary, 1.0, 0.7);
        for h in [1e-4, 0.01, 0.3] {
            let b = section_bounds(&c, h).unwrap();
            assert!(b.x1 < 0.0 && 0.0 < b.x2);
            for u in [b.u1, b.u2] {
                assert!((c.sample(u).unwrap().y - h).abs() <= 1e-12 * h.max(1.0));
            }
        }
    }

    #[test]
    fn tilted_parabola_chord_midpoint() {
        // x1 + x2 = 2αh for a parabola with vertical axis, α = 1 here
        let c = chart(Builtin::TiltedParabola, 1.0, 0.0);
        let b = section_bounds(&c, 0.01).unwrap();
        assert!((b.x1 + b.x2 - 0.02).abs() < 1e-14);
    }

    #[test]
    fn invalid_and_oversized_offsets() {
        let c = chart(Builtin::Parabola, 1.0, 0.0);
        assert_eq!(
            section_bounds(&c, 0.0).unwrap_err(),
            SectionError::InvalidOffset(0.0)
        );
        assert!(section_bounds(&c, f64::NAN).is_err());
        assert!(matches!(
            section_bounds(&c, 200.0),
            Err(SectionError::HTooLarge { .. })
        ));
        let c = chart(Builtin::Circle, 1.0, 0.0);
        assert!(matches!(
            section_bounds(&c, 1.5),
            Err(SectionError::HTooLarge { .. })
        ));
    }

    #[test]
    fn unit_parabola_section() {
        let s = compute_section(&chart(Builtin::Parabola, 1.0, 0.0), 1.0).unwrap();
        assert!((s.length - 2.0).abs() < 1e-14);
        assert!((s.area - 4.0 / 3.0).abs() < 1e-13);
        assert!((s.d - 0.6).abs() < 1e-13);
        assert!(s.centroid_chart[0].abs() < 1e-14);
        assert_eq!(s.rectangle, s.h * s.length);
        assert!((s.triangle_area() - 1.0).abs() < 1e-14);
        assert!((s.area_over_triangle() - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn unit_circle_section_matches_segment_formulas() {
        // chord at height h of the unit circle: half-angle t with cos t = 1 - h
        let s = compute_section(&chart(Builtin::Circle, 1.0, 0.0), 0.5).unwrap();
        let t = (0.5f64).acos();
        let area = t - t.sin() * t.cos();
        let ybar = 1.0 - 2.0 * t.sin().powi(3) / (3.0 * area);
        assert!((s.length - 3f64.sqrt()).abs() < 1e-13);
        assert!((s.area - area).abs() < 1e-13);
        assert!((s.d - ybar).abs() < 1e-12);
        assert!((s.d / 0.5 - 0.58996).abs() < 1e-5);
        assert!((s.triangle_area() - 0.4330127).abs() < 1e-7);
        assert!((s.area_over_triangle() - area / (0.25 * 3f64.sqrt())).abs() < 1e-12);
        assert!((s.area_over_triangle() - 1.41840).abs() < 1e-5);
    }

    #[test]
    fn parabola_area_is_two_thirds_of_rectangle() {
        let c = chart(Builtin::Parabola, 1.0, 0.4);
        for h in [0.01, 0.1, 0.7] {
            let s = compute_section(&c, h).unwrap();
            assert!((s.area - 2.0 / 3.0 * h * s.length).abs() < 1e-12 * s.area);
        }
    }

    #[test]
    fn section_invariants() {
        let c = chart(Builtin::Quartic, 1.0, 0.3);
        for h in [0.001, 0.05, 0.4] {
            let s = compute_section(&c, h).unwrap();
            assert!(s.x1 < 0.0 && s.x2 > 0.0);
            assert!(s.d > 0.0 && s.d < h && s.area > 0.0 && s.length > 0.0);
            let back = c.forward(s.centroid_chart[0], s.centroid_chart[1]);
            assert!((back[0] - s.centroid_world[0]).abs() < 1e-12);
            assert!((back[1] - s.centroid_world[1]).abs() < 1e-12);
            assert!((s.phi - (s.phi1() - s.phi2)).abs() < 1e-11 * s.phi);
        }
    }

    #[test]
    fn v_point() {
        let p = Curve::builtin(Builtin::Parabola, 1.0)
            .unwrap()
            .frame_at(0.0)
            .unwrap();
        assert_eq!(point_v(&p, 0.3), [0.0, 0.3]);
        assert_eq!(point_v(&p, 0.0), p.point());
        let t = Curve::builtin(Builtin::TiltedParabola, 1.0)
            .unwrap()
            .frame_at(0.0)
            .unwrap();
        let v = point_v(&t, 0.1);
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 0.1414214).abs() < 1e-7);
    }

    #[test]
    fn tilted_parabola_world_centroid() {
        let s = compute_section(&chart(Builtin::TiltedParabola, 1.0, 0.0), 0.1).unwrap();
        assert!(s.centroid_world[0].abs() < 1e-14);
        assert!((s.centroid_world[1] - 0.6 * 2f64.sqrt() * 0.1).abs() < 1e-14);
        assert!((s.centroid_world[1] - 0.0848528).abs() < 1e-7);
    }
}
