//! Chord-section geometry of strictly locally convex plane curves.
//!
//! For a point `P` on a convex curve and an offset `h`, the line parallel to
//! the tangent at distance `h` on the convex side cuts off a section. This
//! crate computes that section (chord, area, moments, centroid), extrapolates
//! the `h → 0` limits of its normalized quantities, and tests the finite-`h`
//! identities that hold exactly on parabolas.
//!
//! ```
//! use chordgeom::{Builtin, Curve, compute_section};
//!
//! let curve = Curve::builtin(Builtin::Parabola, 1.0).unwrap();
//! let chart = curve.chart_at(0.0).unwrap();
//! let sec = compute_section(&chart, 1.0).unwrap();
//! assert!((sec.d / sec.h - 0.6).abs() < 1e-12);
//! ```

pub mod curve;
pub mod detector;
pub mod expr;
pub mod jet;
pub mod limits;
pub mod quadrature;
pub mod roots;
pub mod section;

pub use curve::{
    rotated_parabola, Builtin, Curve, CurveError, CurveSpec, FramedPoint, RotatedChart,
};
pub use detector::{
    check_condition_c, check_condition_d, check_condition_e, classify, default_grid,
    grid_for_points, reconstruct_parabola, ConditionResiduals, DetectError, DetectionReport,
    GridPoint, ParabolaCoefficients, Verdict, DEFAULT_THRESHOLD,
};
pub use expr::{parse_expression, Expr, ParseError};
pub use jet::Jet2;
pub use limits::{
    centroid_ratio_limit, chord_constant, curvature_from_chords, default_h0, extrapolate,
    moment_constants, LimitError, LimitEstimate, MomentLimits, DEFAULT_SAMPLES,
};
pub use section::{
    compute_section, point_v, section_bounds, triangle_area, Section, SectionBounds, SectionError,
};
