//! Strictly locally convex plane curves given as graphs `v = g(u)`.
//!
//! A [`Curve`] owns a parsed expression and an open domain. Values and exact
//! first/second derivatives come from [`Expr::eval_jet2`]. [`FramedPoint`]
//! carries the tangent/normal frame at a base point, and [`RotatedChart`] is
//! the rigid change of coordinates that puts that point at the origin with the
//! tangent along the x-axis and the convex side up.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expression, EvalError, Expr, ParseError};
use crate::jet::Jet2;
use crate::roots::{hybrid_newton, RootError};

/// Minimum curvature accepted by the convexity screen.
pub const MIN_CURVATURE: f64 = 1e-9;
/// Number of interior samples used by the convexity screen.
pub const SCREEN_SAMPLES: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("expression: {0}")]
    Parse(#[from] ParseError),
    #[error("evaluation at u = {u}: {source}")]
    Eval { u: f64, source: EvalError },
    #[error("u = {u} lies outside the domain ({lo}, {hi})")]
    OutsideDomain { u: f64, lo: f64, hi: f64 },
    #[error("invalid domain ({lo}, {hi})")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("invalid parameter {param} for builtin `{name}`")]
    InvalidParam { name: &'static str, param: f64 },
    #[error("curve is not strictly convex: curvature {kappa:e} at u = {u}")]
    NotConvex { u: f64, kappa: f64 },
    #[error("chart inversion failed at x = {x}")]
    ChartInversion { x: f64 },
}

/// The builtin curve catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `a u²`
    Parabola,
    /// `a u² + u`
    TiltedParabola,
    /// lower half of the circle of radius `r` touching the origin
    Circle,
    /// `1 - sqrt(1 - (u/A)²)`, semi-axes `A` (horizontal) and 1
    Ellipse,
    /// `c (cosh(u/c) - 1)`
    Catenary,
    /// `p u⁴ + u²`
    Quartic,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Parabola,
        Builtin::TiltedParabola,
        Builtin::Circle,
        Builtin::Ellipse,
        Builtin::Catenary,
        Builtin::Quartic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Parabola => "parabola",
            Builtin::TiltedParabola => "tilted_parabola",
            Builtin::Circle => "circle",
            Builtin::Ellipse => "ellipse",
            Builtin::Catenary => "catenary",
            Builtin::Quartic => "quartic",
        }
    }

    pub fn default_param(self) -> f64 {
        match self {
            Builtin::Ellipse => 2.0,
            _ => 1.0,
        }
    }

    pub fn is_parabola(self) -> bool {
        matches!(self, Builtin::Parabola | Builtin::TiltedParabola)
    }

    fn source(self, p: f64) -> (String, (f64, f64)) {
        match self {
            Builtin::Parabola => (format!("{p} * u^2"), (-10.0, 10.0)),
            Builtin::TiltedParabola => (format!("{p} * u^2 + u"), (-10.0, 10.0)),
            Builtin::Circle => (format!("{p} - sqrt({} - u^2)", p * p), (-p, p)),
            Builtin::Ellipse => (format!("1 - sqrt(1 - (u / {p})^2)"), (-p, p)),
            Builtin::Catenary => (
                format!("{p} * ((exp(u / {p}) + exp(-u / {p})) / 2 - 1)"),
                (-4.0 * p, 4.0 * p),
            ),
            Builtin::Quartic => (format!("{p} * u^4 + u^2"), (-3.0, 3.0)),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// JSON curve description: `{"kind":"builtin","name":"parabola","param":1.0}`
/// or `{"kind":"graph","expr":"u^2 + u","domain":[-2.0,2.0]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Builtin {
        name: Builtin,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        param: Option<f64>,
    },
    Graph {
        expr: String,
        domain: [f64; 2],
    },
}

/// Graph of a strictly convex (or strictly concave) function on an open interval.
///
/// Immutable; cloning shares the expression tree.
#[derive(Debug, Clone)]
pub struct Curve {
    spec: CurveSpec,
    expr: Arc<Expr>,
    domain: (f64, f64),
    orientation: f64,
}

impl Curve {
    pub fn from_spec(spec: &CurveSpec) -> Result<Self, CurveError> {
        match spec {
            CurveSpec::Builtin { name, param } => {
                Self::builtin(*name, param.unwrap_or(name.default_param()))
            }
            CurveSpec::Graph { expr, domain } => Self::graph(expr, (domain[0], domain[1])),
        }
    }

    pub fn builtin(name: Builtin, param: f64) -> Result<Self, CurveError> {
        if !(param.is_finite() && param > 0.0) {
            return Err(CurveError::InvalidParam {
                name: name.name(),
                param,
            });
        }
        let (src, domain) = name.source(param);
        let mut c = Self::graph(&src, domain)?;
        c.spec = CurveSpec::Builtin {
            name,
            param: Some(param),
        };
        Ok(c)
    }

    /// Parses `text` and screens it for strict convexity on `domain`.
    pub fn graph(text: &str, domain: (f64, f64)) -> Result<Self, CurveError> {
        let expr = parse_expression(text)?;
        Self::from_expr(
            expr,
            domain,
            CurveSpec::Graph {
                expr: text.to_string(),
                domain: [domain.0, domain.1],
            },
        )
    }

    fn from_expr(expr: Expr, domain: (f64, f64), spec: CurveSpec) -> Result<Self, CurveError> {
        let (lo, hi) = domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CurveError::InvalidDomain { lo, hi });
        }
        let mut curve = Curve {
            spec,
            expr: Arc::new(expr),
            domain,
            orientation: 1.0,
        };
        let mid = curve.jet(0.5 * (lo + hi))?;
        curve.orientation = if mid.d2 < 0.0 { -1.0 } else { 1.0 };
        for k in 0..SCREEN_SAMPLES {
            let u = lo + (hi - lo) * (k + 1) as f64 / (SCREEN_SAMPLES + 1) as f64;
            let kappa = curve.curvature(u)?;
            if kappa.is_nan() || kappa <= MIN_CURVATURE {
                return Err(CurveError::NotConvex { u, kappa });
            }
        }
        Ok(curve)
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `+1` when the convex side is up (`g'' > 0`), `-1` when it is down.
    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn contains(&self, u: f64) -> bool {
        u > self.domain.0 && u < self.domain.1
    }

    fn check(&self, u: f64) -> Result<(), CurveError> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(CurveError::OutsideDomain {
                u,
                lo: self.domain.0,
                hi: self.domain.1,
            })
        }
    }

    pub fn eval(&self, u: f64) -> Result<f64, CurveError> {
        self.check(u)?;
        self.expr
            .eval(u)
            .map_err(|source| CurveError::Eval { u, source })
    }

    /// `(g, g', g'')` at `u`, exact up to rounding.
    pub fn jet(&self, u: f64) -> Result<Jet2, CurveError> {
        self.check(u)?;
        self.expr
            .eval_jet2(u)
            .map_err(|source| CurveError::Eval { u, source })
    }

    /// Curvature with respect to the convex-side normal.
    pub fn curvature(&self, u: f64) -> Result<f64, CurveError> {
        let j = self.jet(u)?;
        Ok(self.orientation * j.d2 / (1.0 + j.d1 * j.d1).powf(1.5))
    }

    pub fn frame_at(&self, u: f64) -> Result<FramedPoint, CurveError> {
        let j = self.jet(u)?;
        let alpha = j.d1;
        let w = (1.0 + alpha * alpha).sqrt();
        let kappa = self.orientation * j.d2 / (w * w * w);
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(CurveError::NotConvex { u, kappa });
        }
        let theta = alpha.atan();
        let (sin, cos) = (alpha / w, 1.0 / w);
        Ok(FramedPoint {
            b: u,
            c: j.v,
            tangent: [cos, sin],
            normal: [-self.orientation * sin, self.orientation * cos],
            theta,
            alpha,
            w,
            kappa,
            orientation: self.orientation,
        })
    }

    /// Chart at the point above `u`.
    pub fn chart_at(&self, u: f64) -> Result<RotatedChart, CurveError> {
        Ok(RotatedChart::new(self.clone(), self.frame_at(u)?))
    }
}

/// A base point `P = (b, c)` on a curve with its tangent/normal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FramedPoint {
    pub b: f64,
    pub c: f64,
    /// unit tangent `(cos θ, sin θ)`
    pub tangent: [f64; 2],
    /// unit normal toward the convex side
    pub normal: [f64; 2],
    /// tangent angle, equal to the angle between the upward normal and the v-axis
    pub theta: f64,
    /// slope `g'(b) = tan θ`
    pub alpha: f64,
    /// `sec θ = sqrt(1 + α²)`
    pub w: f64,
    pub kappa: f64,
    pub orientation: f64,
}

impl FramedPoint {
    pub fn point(&self) -> [f64; 2] {
        [self.b, self.c]
    }
}

/// Rigid chart centred at a framed point: chart `(x, y)` maps to
/// `P + x·t + y·N`. For an upward convex side this is the rotation by θ
/// followed by translation to `P`.
#[derive(Debug, Clone)]
pub struct RotatedChart {
    curve: Curve,
    frame: FramedPoint,
}

/// Chart-coordinate data of the curve point above parameter `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartSample {
    pub x: f64,
    pub y: f64,
    /// `dx/du`
    pub dx: f64,
    /// `dy/du`
    pub dy: f64,
    pub d2x: f64,
    pub d2y: f64,
}

impl RotatedChart {
    pub fn new(curve: Curve, frame: FramedPoint) -> Self {
        Self { curve, frame }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn frame(&self) -> &FramedPoint {
        &self.frame
    }

    /// Chart → world.
    pub fn forward(&self, x: f64, y: f64) -> [f64; 2] {
        let FramedPoint {
            b,
            c,
            tangent: t,
            normal: n,
            ..
        } = self.frame;
        [b + x * t[0] + y * n[0], c + x * t[1] + y * n[1]]
    }

    /// World → chart.
    pub fn inverse(&self, u: f64, v: f64) -> [f64; 2] {
        let FramedPoint {
            b,
            c,
            tangent: t,
            normal: n,
            ..
        } = self.frame;
        let (du, dv) = (u - b, v - c);
        [du * t[0] + dv * t[1], du * n[0] + dv * n[1]]
    }

    /// Chart coordinates of the curve point `(u, g(u))` and their `u`-derivatives.
    pub fn sample(&self, u: f64) -> Result<ChartSample, CurveError> {
        let j = self.curve.jet(u)?;
        let FramedPoint {
            b,
            c,
            tangent: t,
            normal: n,
            ..
        } = self.frame;
        let (du, dv) = (u - b, j.v - c);
        Ok(ChartSample {
            x: du * t[0] + dv * t[1],
            y: du * n[0] + dv * n[1],
            dx: t[0] + j.d1 * t[1],
            dy: n[0] + j.d1 * n[1],
            d2x: j.d2 * t[1],
            d2y: j.d2 * n[1],
        })
    }

    /// Curve parameter `u` whose chart abscissa is `x`.
    ///
    /// Walks outward from `P` along the branch on which the abscissa is
    /// increasing in `u`; fails if the curve turns back before reaching `x`.
    pub fn param_at(&self, x: f64) -> Result<f64, CurveError> {
        let b = self.frame.b;
        if x == 0.0 {
            return Ok(b);
        }
        let (lo, hi) = self.curve.domain();
        let margin = 1e-12 * (hi - lo);
        let dir = x.signum();
        let limit = if dir > 0.0 { hi - margin } else { lo + margin };
        let fail = CurveError::ChartInversion { x };
        let mut inner = b;
        let mut step = x.abs() / self.frame.w;
        let outer = loop {
            let mut next = inner + dir * step;
            let clamped = (next - limit) * dir >= 0.0;
            if clamped {
                next = limit;
            }
            let s = match self.sample(next) {
                Ok(s) if s.dx > 0.0 => s,
                // overshot the fold of x(u) or left the valid range: shorten the step
                _ => {
                    step *= 0.5;
                    if step <= 1e-15 * (hi - lo) {
                        return Err(fail);
                    }
                    continue;
                }
            };
            if (s.x - x) * dir >= 0.0 {
                break next;
            }
            if clamped {
                return Err(fail);
            }
            inner = next;
            step *= 1.6;
        };
        let f = |u: f64| -> Result<(f64, f64), CurveError> {
            let s = self.sample(u)?;
            Ok((s.x - x, s.dx))
        };
        hybrid_newton(f, inner, outer, 1e-13 * x.abs().max(1.0)).map_err(|e| match e {
            RootError::Eval(e) => e,
            _ => fail,
        })
    }

    /// `(f, f', f'')` of the chart graph `y = f(x)` at `x`.
    pub fn chart_jet(&self, x: f64) -> Result<Jet2, CurveError> {
        let u = self.param_at(x)?;
        let s = self.sample(u)?;
        let fp = s.dy / s.dx;
        let fpp = (s.d2y * s.dx - s.dy * s.d2x) / (s.dx * s.dx * s.dx);
        Ok(Jet2::new(s.y, fp, fpp))
    }
}

/// A parabola with focal parameter `a` (`y' = a x'²` in its own frame),
/// rotated by `angle` about its vertex and then translated to `vertex`,
/// expressed as the graph of a function of `u`.
pub fn rotated_parabola(
    a: f64,
    angle: f64,
    vertex: [f64; 2],
    domain: (f64, f64),
) -> Result<Curve, CurveError> {
    let (s, c) = angle.sin_cos();
    let [u0, v0] = vertex;
    let du = format!("(u - {u0})");
    // lower branch of a s² v² + (2acs u − c) v + a c² u² + s u = 0, rationalised
    let text = format!(
        "2 * ({s} * {du} + {a} * {c2} * {du}^2) / ({c} - 2 * {acs} * {du} + sqrt({c2} - 4 * {as_} * {du})) + {v0}",
        c2 = c * c,
        acs = a * c * s,
        as_ = a * s,
    );
    Curve::graph(&text, domain)
}
