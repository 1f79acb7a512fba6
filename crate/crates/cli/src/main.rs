use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chordgeom::{
    centroid_ratio_limit, chord_constant, classify, compute_section, curvature_from_chords,
    default_grid, default_h0, grid_for_points, moment_constants, reconstruct_parabola, Curve,
    CurveSpec, DetectError, GridPoint, LimitError, ParabolaCoefficients, RotatedChart, Section,
    DEFAULT_SAMPLES, DEFAULT_THRESHOLD,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const CSV_HEADER: &str = "h,L,S,phi,psi,d,d_over_h,S_over_triangle";

#[derive(Parser)]
#[command(
    name = "chordgeom",
    version,
    about = "Chord sections of convex plane curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the section at one point and offset
    Analyze {
        #[command(flatten)]
        io: Io,
        /// curve parameter of P (default: middle of the domain)
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        h: f64,
    },
    /// Tabulate the section over a range of offsets
    Sweep {
        #[command(flatten)]
        io: Io,
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        /// explicit offsets (repeatable); replaces the range flags
        #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["h_min", "h_max"])]
        h: Vec<f64>,
        #[arg(long, allow_negative_numbers = true, requires = "h_max")]
        h_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true, requires = "h_min")]
        h_max: Option<f64>,
        #[arg(long, default_value_t = 16)]
        steps: usize,
        /// space the offsets linearly instead of geometrically
        #[arg(long)]
        linear: bool,
    },
    /// Extrapolate the h → 0 limits at one point
    Limit {
        #[command(flatten)]
        io: Io,
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        /// largest sampled offset (default: 0.005/κ)
        #[arg(long, allow_negative_numbers = true)]
        h0: Option<f64>,
        /// number of halvings sampled
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n: usize,
    },
    /// Test the parabola conditions over a grid; exits 1 if the curve is not a parabola
    Detect {
        #[command(flatten)]
        io: Io,
        /// grid points (repeatable; default: five points around the middle of the domain)
        #[arg(long, allow_negative_numbers = true)]
        u: Vec<f64>,
        /// offsets used at every point (repeatable; default: {0.025, 0.05, 0.1, 0.2}/κ)
        #[arg(long, allow_negative_numbers = true)]
        h: Vec<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// draw this many grid points at random from the middle fifth of the domain
        #[arg(long, conflicts_with = "u")]
        random_points: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Osculating vertical-axis parabola at a point
    Reconstruct {
        #[command(flatten)]
        io: Io,
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
    },
}

#[derive(Args)]
struct Io {
    /// curve spec: a JSON file or inline JSON
    #[arg(long)]
    curve: String,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => m,
        }
    }
}

type Outcome = Result<(String, u8), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn numeric(msg: impl Into<String>) -> Failure {
    Failure::Numeric(msg.into())
}

fn load_curve(arg: &str) -> Result<Curve, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_owned()
    } else {
        fs::read_to_string(arg).map_err(|e| usage(format!("cannot read curve spec {arg}: {e}")))?
    };
    let spec: CurveSpec =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid curve spec: {e}")))?;
    Curve::from_spec(&spec).map_err(|e| usage(format!("invalid curve: {e}")))
}

fn point(curve: &Curve, u: Option<f64>) -> Result<f64, Failure> {
    let (lo, hi) = curve.domain();
    let u = u.unwrap_or(0.5 * (lo + hi));
    if !curve.contains(u) {
        return Err(usage(format!("u = {u} is outside the domain ({lo}, {hi})")));
    }
    Ok(u)
}

fn check_h(h: f64) -> Result<f64, Failure> {
    if h.is_finite() && h > 0.0 {
        Ok(h)
    } else {
        Err(usage(format!("h must be positive, got {h}")))
    }
}

fn chart(curve: &Curve, u: f64) -> Result<RotatedChart, Failure> {
    curve
        .chart_at(u)
        .map_err(|e| numeric(format!("frame at u = {u}: {e}")))
}

fn section(chart: &RotatedChart, u: f64, h: f64) -> Result<Section, Failure> {
    compute_section(chart, h).map_err(|e| numeric(format!("section at u = {u}, h = {h}: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn format_or(
    io: &Io,
    default: Format,
    allowed: &[Format],
    command: &str,
) -> Result<Format, Failure> {
    let f = io.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!("{command} does not support csv output")))
    }
}

fn csv(rows: &[Section]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let fields = [
            r.h,
            r.length,
            r.area,
            r.phi,
            r.psi,
            r.d,
            r.d_over_h(),
            r.area_over_triangle(),
        ];
        let line: Vec<String> = fields.iter().map(|x| format!("{x:.16e}")).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

#[derive(Serialize)]
struct SweepRow {
    h: f64,
    #[serde(rename = "L")]
    length: f64,
    #[serde(rename = "S")]
    area: f64,
    phi: f64,
    psi: f64,
    d: f64,
    d_over_h: f64,
    #[serde(rename = "S_over_triangle")]
    s_over_triangle: f64,
}

impl From<&Section> for SweepRow {
    fn from(r: &Section) -> Self {
        SweepRow {
            h: r.h,
            length: r.length,
            area: r.area,
            phi: r.phi,
            psi: r.psi,
            d: r.d,
            d_over_h: r.d_over_h(),
            s_over_triangle: r.area_over_triangle(),
        }
    }
}

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    u: f64,
    #[serde(flatten)]
    section: &'a Section,
    d_over_h: f64,
    #[serde(rename = "S_over_triangle")]
    s_over_triangle: f64,
}

#[derive(Serialize)]
struct LimitErrors {
    kappa_est: f64,
    centroid_ratio: f64,
    chord_constant: f64,
    phi: f64,
    area: f64,
    phi2: f64,
}

#[derive(Serialize)]
struct Moments {
    phi: f64,
    area: f64,
    phi2: f64,
}

#[derive(Serialize)]
struct LimitReport {
    u: f64,
    h0: f64,
    n: usize,
    kappa: f64,
    kappa_est: f64,
    centroid_ratio: f64,
    chord_constant: f64,
    moments: Moments,
    errors: LimitErrors,
    samples_h: Vec<f64>,
}

#[derive(Serialize)]
struct ReconstructReport {
    u: f64,
    kappa: f64,
    #[serde(flatten)]
    coefficients: ParabolaCoefficients,
}

fn analyze(io: &Io, u: Option<f64>, h: f64) -> Outcome {
    let format = format_or(io, Format::Json, &[Format::Json, Format::Csv], "analyze")?;
    let curve = load_curve(&io.curve)?;
    let u = point(&curve, u)?;
    let h = check_h(h)?;
    let s = section(&chart(&curve, u)?, u, h)?;
    let text = match format {
        Format::Csv => csv(std::slice::from_ref(&s)),
        Format::Json => to_json(&AnalyzeReport {
            u,
            section: &s,
            d_over_h: s.d_over_h(),
            s_over_triangle: s.area_over_triangle(),
        }),
    };
    Ok((text, 0))
}

fn sweep_offsets(
    h: &[f64],
    h_min: Option<f64>,
    h_max: Option<f64>,
    steps: usize,
    linear: bool,
) -> Result<Vec<f64>, Failure> {
    if !h.is_empty() {
        let mut hs = h
            .iter()
            .map(|&x| check_h(x))
            .collect::<Result<Vec<_>, _>>()?;
        hs.sort_by(f64::total_cmp);
        hs.dedup();
        return Ok(hs);
    }
    let (Some(lo), Some(hi)) = (h_min, h_max) else {
        return Err(usage("sweep needs --h or both --h-min and --h-max"));
    };
    let (lo, hi) = (check_h(lo)?, check_h(hi)?);
    if lo >= hi {
        return Err(usage(format!(
            "--h-min ({lo}) must be below --h-max ({hi})"
        )));
    }
    if steps < 2 {
        return Err(usage(format!("--steps must be at least 2, got {steps}")));
    }
    let last = (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| {
            let t = k as f64 / last;
            match k {
                0 => lo,
                _ if k + 1 == steps => hi,
                _ if linear => lo + t * (hi - lo),
                _ => lo * (hi / lo).powf(t),
            }
        })
        .collect())
}

fn sweep(io: &Io, u: Option<f64>, hs: Vec<f64>) -> Outcome {
    let format = format_or(io, Format::Csv, &[Format::Json, Format::Csv], "sweep")?;
    let curve = load_curve(&io.curve)?;
    let u = point(&curve, u)?;
    let chart = chart(&curve, u)?;
    let rows = hs
        .par_iter()
        .map(|&h| section(&chart, u, h))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match format {
        Format::Csv => csv(&rows),
        Format::Json => to_json(&rows.iter().map(SweepRow::from).collect::<Vec<_>>()),
    };
    Ok((text, 0))
}

fn limit_failure(what: &str, e: LimitError) -> Failure {
    match e {
        LimitError::TooFewSamples(_) | LimitError::InvalidStart(_) => usage(format!("{what}: {e}")),
        e => numeric(format!("{what}: {e}")),
    }
}

fn limit(io: &Io, u: Option<f64>, h0: Option<f64>, n: usize) -> Outcome {
    format_or(io, Format::Json, &[Format::Json], "limit")?;
    let curve = load_curve(&io.curve)?;
    let u = point(&curve, u)?;
    let chart = chart(&curve, u)?;
    let h0 = match h0 {
        Some(h) => check_h(h)?,
        None => default_h0(&chart),
    };
    let kappa = curvature_from_chords(&chart, h0, n)
        .map_err(|e| limit_failure("curvature extrapolation", e))?;
    let ratio = centroid_ratio_limit(&chart, h0, n)
        .map_err(|e| limit_failure("centroid ratio extrapolation", e))?;
    let chord = chord_constant(&chart, h0, n)
        .map_err(|e| limit_failure("chord constant extrapolation", e))?;
    let m =
        moment_constants(&chart, h0, n).map_err(|e| limit_failure("moment extrapolation", e))?;
    let report = LimitReport {
        u,
        h0,
        n,
        kappa: chart.frame().kappa,
        kappa_est: kappa.value,
        centroid_ratio: ratio.value,
        chord_constant: chord.value,
        moments: Moments {
            phi: m.phi.value,
            area: m.area.value,
            phi2: m.phi2.value,
        },
        errors: LimitErrors {
            kappa_est: kappa.error_est,
            centroid_ratio: ratio.error_est,
            chord_constant: chord.error_est,
            phi: m.phi.error_est,
            area: m.area.error_est,
            phi2: m.phi2.error_est,
        },
        samples_h: kappa.samples.iter().map(|s| s.0).collect(),
    };
    Ok((to_json(&report), 0))
}

fn detect(
    io: &Io,
    us: &[f64],
    hs: &[f64],
    threshold: f64,
    random_points: Option<usize>,
    seed: u64,
) -> Outcome {
    format_or(io, Format::Json, &[Format::Json], "detect")?;
    let curve = load_curve(&io.curve)?;
    let hs = hs
        .iter()
        .map(|&h| check_h(h))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Option<Vec<f64>> = match random_points {
        Some(0) => return Err(usage("--random-points must be at least 1")),
        Some(count) => {
            let (lo, hi) = curve.domain();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ps: Vec<f64> = (0..count)
                .map(|_| lo + rng.gen_range(0.4..0.6) * (hi - lo))
                .collect();
            ps.sort_by(f64::total_cmp);
            Some(ps)
        }
        None if us.is_empty() => None,
        None => Some(
            us.iter()
                .map(|&u| point(&curve, Some(u)))
                .collect::<Result<_, _>>()?,
        ),
    };
    let grid: Vec<GridPoint> = match (points, hs.is_empty()) {
        (None, true) => default_grid(&curve).map_err(|e| numeric(format!("default grid: {e}")))?,
        (Some(ps), true) => {
            grid_for_points(&curve, &ps).map_err(|e| numeric(format!("grid: {e}")))?
        }
        (points, false) => {
            let ps = match points {
                Some(ps) => ps,
                None => {
                    let (lo, hi) = curve.domain();
                    vec![0.5 * (lo + hi)]
                }
            };
            ps.iter()
                .flat_map(|&u| hs.iter().map(move |&h| GridPoint { u, h }))
                .collect()
        }
    };
    let report = classify(&curve, &grid, threshold).map_err(|e| match e {
        DetectError::Section { .. } | DetectError::Curve(_) => numeric(format!("detection: {e}")),
        e => usage(format!("detection: {e}")),
    })?;
    let code = if report.verdict.is_parabola() { 0 } else { 1 };
    Ok((to_json(&report), code))
}

fn reconstruct(io: &Io, u: Option<f64>) -> Outcome {
    format_or(io, Format::Json, &[Format::Json], "reconstruct")?;
    let curve = load_curve(&io.curve)?;
    let u = point(&curve, u)?;
    let fp = curve
        .frame_at(u)
        .map_err(|e| numeric(format!("frame at u = {u}: {e}")))?;
    let report = ReconstructReport {
        u,
        kappa: fp.kappa,
        coefficients: reconstruct_parabola(&fp),
    };
    Ok((to_json(&report), 0))
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a truncated file at `path`.
fn write_atomically(path: &Path, text: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = fs::write(&tmp, text).and_then(|()| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let (io, outcome) = match &cli.command {
        Command::Analyze { io, u, h } => (io, analyze(io, *u, *h)),
        Command::Sweep {
            io,
            u,
            h,
            h_min,
            h_max,
            steps,
            linear,
        } => (
            io,
            sweep_offsets(h, *h_min, *h_max, *steps, *linear).and_then(|hs| sweep(io, *u, hs)),
        ),
        Command::Limit { io, u, h0, n } => (io, limit(io, *u, *h0, *n)),
        Command::Detect {
            io,
            u,
            h,
            threshold,
            random_points,
            seed,
        } => (io, detect(io, u, h, *threshold, *random_points, *seed)),
        Command::Reconstruct { io, u } => (io, reconstruct(io, *u)),
    };
    let (text, code) = outcome?;
    match &io.out {
        Some(path) => write_atomically(path, &text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
