//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Reference values come from closed forms or from oracles written here
//! independently of the library (hand-derived curvature, polygon sums over
//! plain function values).

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chordgeom::{
    centroid_ratio_limit, chord_constant, classify, compute_section, curvature_from_chords,
    default_grid, default_h0, moment_constants, reconstruct_parabola, rotated_parabola, Builtin,
    Curve, Section, DEFAULT_SAMPLES, DEFAULT_THRESHOLD,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn builtin(name: Builtin) -> Curve {
    Curve::builtin(name, name.default_param()).unwrap()
}

fn section(c: &Curve, u: f64, h: f64) -> Result<Section, String> {
    let chart = c.chart_at(u).map_err(|e| e.to_string())?;
    compute_section(&chart, h).map_err(|e| format!("u = {u}, h = {h}: {e}"))
}

fn three_points(c: &Curve) -> [f64; 3] {
    let (lo, hi) = c.domain();
    [0.42, 0.5, 0.57].map(|f| lo + f * (hi - lo))
}

/// Curvature from hand-differentiated closed forms of the catalog curves.
fn analytic_curvature(name: Builtin, u: f64) -> f64 {
    let (d1, d2) = match name {
        Builtin::Parabola => (2.0 * u, 2.0),
        Builtin::TiltedParabola => (2.0 * u + 1.0, 2.0),
        Builtin::Circle => {
            let r = (1.0 - u * u).sqrt();
            (u / r, 1.0 / (r * r * r))
        }
        Builtin::Ellipse => {
            // 1 − √(1 − (u/2)²)
            let q = 1.0 - u * u / 4.0;
            (u / (4.0 * q.sqrt()), 1.0 / (4.0 * q.powf(1.5)))
        }
        Builtin::Catenary => (u.sinh(), u.cosh()),
        Builtin::Quartic => (4.0 * u.powi(3) + 2.0 * u, 12.0 * u * u + 2.0),
    };
    d2 / (1.0 + d1 * d1).powf(1.5)
}

fn parabola_exactness() -> Outcome {
    let start = Instant::now();
    let (mut worst_d, mut worst_s) = (0.0f64, 0.0f64);
    for a in [0.5, 1.0, 4.0] {
        let c = Curve::builtin(Builtin::Parabola, a).unwrap();
        for u in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for h in [0.01, 0.05, 0.2, 1.0] {
                let s = section(&c, u, h)?;
                worst_d = worst_d.max((s.d / h - 0.6).abs());
                worst_s = worst_s.max((s.area / (0.5 * h * s.length) - 4.0 / 3.0).abs());
            }
        }
    }
    let took = start.elapsed();
    ensure(worst_d < 1e-9 && worst_s < 1e-9, || {
        format!("max |d/h - 0.6| = {worst_d:e}, max area residual = {worst_s:e}")
    })?;
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!(
        "max |d/h - 0.6| = {worst_d:.1e}, max |S/(hL/2) - 4/3| = {worst_s:.1e}, {took:.2?}"
    ))
}

fn universality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for name in [
        Builtin::Circle,
        Builtin::Ellipse,
        Builtin::Catenary,
        Builtin::Quartic,
    ] {
        let c = builtin(name);
        for u in three_points(&c) {
            let chart = c.chart_at(u).unwrap();
            let e = centroid_ratio_limit(&chart, default_h0(&chart), DEFAULT_SAMPLES)
                .map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max((e.value - 0.6).abs());
        }
    }
    let took = start.elapsed();
    ensure(worst < 1e-4, || format!("max |limit - 0.6| = {worst:e}"))?;
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))?;
    Ok(format!("max |limit - 0.6| = {worst:.1e}, {took:.2?}"))
}

fn curvature_recovery() -> Outcome {
    let mut worst = 0.0f64;
    for name in Builtin::ALL {
        let c = builtin(name);
        for u in three_points(&c) {
            let chart = c.chart_at(u).unwrap();
            let k = curvature_from_chords(&chart, default_h0(&chart), DEFAULT_SAMPLES)
                .map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max(rel(k.value, analytic_curvature(name, u)));
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

fn chord_and_moment_constants() -> Outcome {
    let (mut chord, mut moments) = (0.0f64, 0.0f64);
    for name in Builtin::ALL {
        let c = builtin(name);
        for u in three_points(&c) {
            let chart = c.chart_at(u).unwrap();
            let kappa = analytic_curvature(name, u);
            let root = (2.0 / kappa).sqrt();
            let h0 = default_h0(&chart);
            let l =
                chord_constant(&chart, h0, DEFAULT_SAMPLES).map_err(|e| format!("{name}: {e}"))?;
            chord = chord.max(rel(l.value, 2.0 * root));
            let m = moment_constants(&chart, h0, DEFAULT_SAMPLES)
                .map_err(|e| format!("{name}: {e}"))?;
            moments = moments
                .max(rel(m.phi.value, 0.8 * root))
                .max(rel(m.area.value, 4.0 / 3.0 * root))
                .max(rel(m.phi2.value, 0.2 * root));
        }
    }
    ensure(chord < 1e-4 && moments < 1e-4, || {
        format!("chord {chord:e}, moments {moments:e}")
    })?;
    Ok(format!(
        "max relative error: chord {chord:.1e}, moments {moments:.1e}"
    ))
}

fn circle_oracle() -> Outcome {
    let s = section(&builtin(Builtin::Circle), 0.0, 0.5)?;
    let t = std::f64::consts::FRAC_PI_3;
    let area = t - t.sin() * t.cos();
    let d = 1.0 - 2.0 * t.sin().powi(3) / (3.0 * area);
    let errs = [
        (s.area - (std::f64::consts::PI / 3.0 - 3f64.sqrt() / 4.0)).abs(),
        (s.length - 3f64.sqrt()).abs(),
        (s.d / s.h - d / 0.5).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    ensure(worst < 1e-9, || format!("errors (S, L, d/h) = {errs:?}"))?;
    Ok(format!(
        "S = {:.10}, L = {:.10}, d/h = {:.8}, max error {worst:.1e}",
        s.area,
        s.length,
        s.d / s.h
    ))
}

fn random_case(rng: &mut ChaCha8Rng) -> (Curve, f64, f64) {
    let name = Builtin::ALL[rng.gen_range(0..Builtin::ALL.len())];
    let c = builtin(name);
    let (lo, hi) = c.domain();
    let u = lo + rng.gen_range(0.4..0.6) * (hi - lo);
    let h = rng.gen_range(0.01..0.2) / analytic_curvature(name, u);
    (c, u, h)
}

fn derivative_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (c, u, h) = random_case(&mut rng);
        let delta = 1e-4 * h;
        let lo = section(&c, u, h - delta)?;
        let mid = section(&c, u, h)?;
        let hi = section(&c, u, h + delta)?;
        let fd = |f: fn(&Section) -> f64| (f(&hi) - f(&lo)) / (2.0 * delta);
        let scale = 0.5 * (mid.x1 * mid.x1 + mid.x2 * mid.x2);
        worst = worst
            .max(rel(fd(|s| s.area), mid.length))
            .max(rel(fd(|s| s.phi), h * mid.length))
            .max((fd(|s| s.psi) - 0.5 * (mid.x2 * mid.x2 - mid.x1 * mid.x1)).abs() / scale);
    }
    ensure(worst < 1e-5, || format!("max relative mismatch {worst:e}"))?;
    Ok(format!("20 triples, max relative mismatch {worst:.1e}"))
}

fn confusion_matrix() -> Outcome {
    let moved = rotated_parabola(1.0, 0.3, [0.5, -0.2], (-0.1, 1.1)).map_err(|e| e.to_string())?;
    let cases = [
        ("parabola", builtin(Builtin::Parabola), true),
        ("tilted parabola", builtin(Builtin::TiltedParabola), true),
        ("rotated parabola", moved, true),
        ("circle", builtin(Builtin::Circle), false),
        ("ellipse", builtin(Builtin::Ellipse), false),
        ("catenary", builtin(Builtin::Catenary), false),
        ("quartic", builtin(Builtin::Quartic), false),
    ];
    let mut errors = Vec::new();
    let mut smallest_negative = f64::INFINITY;
    for (label, c, positive) in cases {
        let grid = default_grid(&c).map_err(|e| format!("{label}: {e}"))?;
        let report = classify(&c, &grid, DEFAULT_THRESHOLD).map_err(|e| format!("{label}: {e}"))?;
        if report.verdict.is_parabola() != positive {
            errors.push(label);
        }
        if !positive {
            smallest_negative =
                smallest_negative.min(report.residuals.cond_e.max(report.residuals.cond_c));
        }
    }
    ensure(errors.is_empty(), || format!("misclassified: {errors:?}"))?;
    Ok(format!(
        "7/7 correct, smallest non-parabola residual {smallest_negative:.2e}"
    ))
}

fn reconstruction() -> Outcome {
    let c = Curve::graph("u^2 + u", (-2.0, 2.0)).unwrap();
    let p = reconstruct_parabola(&c.frame_at(0.0).unwrap());
    let leading = p.a * p.w.powi(3);
    ensure((leading - 1.0).abs() < 1e-12, || {
        format!("a w^3 = {leading}")
    })?;
    ensure(p.alpha == 1.0 && p.b == 0.0 && p.c == 0.0, || {
        format!("alpha, b, c = {}, {}, {}", p.alpha, p.b, p.c)
    })?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let u = -2.0 + 4.0 * k as f64 / 99.0;
        worst = worst.max((p.eval(u) - (u * u + u)).abs());
    }
    ensure(worst < 1e-10, || format!("max |g - (u^2 + u)| = {worst:e}"))?;
    Ok(format!(
        "a w^3 = {leading}, alpha = 1, b = c = 0, max deviation {worst:.1e}"
    ))
}

fn tilted_centroid() -> Outcome {
    let c = builtin(Builtin::TiltedParabola);
    let alpha = c.frame_at(0.0).unwrap().alpha;
    let mut worst = 0.0f64;
    for h in [0.02, 0.05, 0.1, 0.2] {
        let s = section(&c, 0.0, h)?;
        worst = worst
            .max(rel(s.centroid_chart[0], 0.6 * alpha * h))
            .max(rel(s.psi, alpha * s.phi));
    }
    ensure(worst < 1e-8, || format!("max relative error {worst:e}"))?;
    Ok(format!("alpha = {alpha}, max relative error {worst:.1e}"))
}

fn offset(c: &Curve, b: f64, u: f64) -> f64 {
    let (gb, gu) = (c.eval(b).unwrap(), c.eval(u).unwrap());
    let j = c.jet(b).unwrap();
    j.d2.signum() * ((gu - gb) - j.d1 * (u - b)) / j.d1.hypot(1.0)
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Area, chord and centroid distance from a closed polygon through `n` arc points.
fn riemann_oracle(c: &Curve, b: f64, h: f64, n: usize) -> (f64, f64, f64) {
    let (lo, hi) = c.domain();
    let (lo, hi) = (lo + 1e-12 * (hi - lo), hi - 1e-12 * (hi - lo));
    let f = |u: f64| offset(c, b, u) - h;
    let reach = |dir: f64, limit: f64| {
        let (mut x, mut step) = (b, 1e-3 * (hi - lo));
        while f(x) < 0.0 {
            x = if dir > 0.0 {
                (x + step).min(limit)
            } else {
                (x - step).max(limit)
            };
            step *= 1.5;
        }
        x
    };
    let u1 = bisect(reach(-1.0, lo), b, f);
    let u2 = bisect(b, reach(1.0, hi), f);
    let pt = |u: f64| [u - b, c.eval(u).unwrap() - c.eval(b).unwrap()];
    let (mut a2, mut gx, mut gy) = (0.0, 0.0, 0.0);
    let mut prev = pt(u1);
    for k in 1..=n + 1 {
        let cur = if k == n + 1 {
            pt(u1)
        } else {
            pt(u1 + (u2 - u1) * k as f64 / n as f64)
        };
        let cross = prev[0] * cur[1] - cur[0] * prev[1];
        a2 += cross;
        gx += (prev[0] + cur[0]) * cross;
        gy += (prev[1] + cur[1]) * cross;
        prev = cur;
    }
    let (p1, p2) = (pt(u1), pt(u2));
    let j = c.jet(b).unwrap();
    let d = j.d2.signum() * (gy - j.d1 * gx) / (3.0 * a2) / j.d1.hypot(1.0);
    (0.5 * a2.abs(), (p2[0] - p1[0]).hypot(p2[1] - p1[1]), d)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (c, u, h) = random_case(&mut rng);
        let s = section(&c, u, h)?;
        let (area, length, d) = riemann_oracle(&c, u, h, 1_000_000);
        worst = worst
            .max(rel(s.area, area))
            .max(rel(s.length, length))
            .max(rel(s.d, d));
    }
    ensure(worst < 1e-7, || {
        format!("max relative deviation from oracle {worst:e}")
    })?;

    let args = [
        "sweep",
        "--curve",
        r#"{"kind":"builtin","name":"catenary"}"#,
        "--u",
        "0.4",
        "--h-min",
        "0.001",
        "--h-max",
        "0.5",
        "--steps",
        "20",
    ];
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_chordgeom"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success() && b.status.success(), || {
        "sweep failed".into()
    })?;
    ensure(a.stdout == b.stdout, || {
        "CSV output differs between runs".into()
    })?;
    Ok(format!(
        "max relative deviation {worst:.1e}; CSV identical ({} bytes)",
        a.stdout.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("parabola exactness", parabola_exactness),
        ("centroid ratio universality", universality),
        ("curvature recovery", curvature_recovery),
        ("chord and moment constants", chord_and_moment_constants),
        ("circle finite-h oracle", circle_oracle),
        ("derivative identities", derivative_identities),
        ("detection confusion matrix", confusion_matrix),
        ("parabola reconstruction", reconstruction),
        ("tilted parabola centroid", tilted_centroid),
        ("oracle equivalence and byte-stable CSV", oracle_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
