//! Command line front end: construct point sets, run discrepancy, bound,
//! intersection, and separation analyses, and emit CSV/JSON artifacts.
//!
//! Exit codes: 0 success; 2 invalid configuration or unusable input
//! (actionable message on stderr); 3 numerical failure (singular matrix,
//! degenerate geometry).
//!
//! Every JSON artifact carries a `"schema": "capdisc/1"` field and no
//! timestamps, so identical configurations produce byte-identical output.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{BoundReport, ClqChoice};
use crate::curves;
use crate::discrepancy::{
    estimate_discrepancy, exact_discrepancy, polar_certificate, separation_distance,
    DiscrepancyReport, SpherePointSet, EXACT_LIMIT_DEFAULT,
};
use crate::error::{Error, Result};
use crate::intersect::IntersectionReport;
use crate::lambert::clq_estimate;
use crate::lattice::{
    build_point_set, modified_point_set, LatticeConfig, Perturbation, PlanarPointSet,
};
use crate::planar::{Mat2, Polyline, Vec2};

/// Version tag embedded in every JSON artifact.
pub const SCHEMA: &str = "capdisc/1";

const DEFAULT_TRIALS: u64 = 10_000;
const DEFAULT_CLQ_CENTERS: usize = 64;
const DEFAULT_CLQ_HEIGHTS: usize = 64;
const DEFAULT_CLQ_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Generate,
    Discrepancy,
    Bounds,
    Intersect,
    Clq,
    Separation,
    PaperSuite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// Cell centers (the canonical deterministic choice).
    Center,
    /// Lattice corners of each cell.
    LatticePoint,
    /// Seeded uniform draw per cell.
    Uniform,
    /// One fixed offset in [0,1)^2 for every cell; needs `u`.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    Exact,
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatKind {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ClqSourceKind {
    #[serde(rename = "analytic-3")]
    #[value(name = "analytic-3")]
    Analytic3,
    CertifiedUpper,
    NumericEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Diagonal,
    Segment,
    Circle,
    Spiral,
}

/// One fully described run. This is the canonical configuration object:
/// the flag parser lowers into it, and `--config FILE` loads it from JSON.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Row-major [a, b, c, d].
    pub matrix: [f64; 4],
    pub k: u32,
    pub offset: [f64; 2],
    pub perturbation: PerturbationKind,
    /// Seeds both the uniform perturbation and the discrepancy estimator.
    pub seed: u64,
    /// Offset for the custom perturbation.
    pub u: Option<[f64; 2]>,
    /// Trim or pad the set to the area-predicted count.
    pub modified: bool,
    pub mode: Option<ModeKind>,
    pub trials: Option<u64>,
    /// Exact-mode size refusal threshold.
    pub limit: Option<usize>,
    /// Point CSV to analyze instead of constructing a set
    /// (planar "px,py,ix,iy" or spherical "x,y,z").
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: FormatKind,
    pub clq_source: Option<ClqSourceKind>,
    pub centers: Option<usize>,
    pub heights: Option<usize>,
    pub samples: Option<usize>,
    pub curve: Option<CurveKind>,
    pub curve_offset: Option<f64>,
    pub p0: Option<[f64; 2]>,
    pub p1: Option<[f64; 2]>,
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub spacing: Option<f64>,
    pub half_turns: Option<usize>,
    pub curve_samples: Option<usize>,
    /// Polyline CSV ("component,px,py") to intersect instead of a preset
    /// curve; needs `convex_pieces`.
    pub curve_csv: Option<PathBuf>,
    /// Convexity annotation for curves loaded from CSV.
    pub convex_pieces: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: CommandKind::PaperSuite,
            matrix: [1.0, 0.0, 0.0, 1.0],
            k: 0,
            offset: [0.0, 0.0],
            perturbation: PerturbationKind::Center,
            seed: 0,
            u: None,
            modified: false,
            mode: None,
            trials: None,
            limit: None,
            input: None,
            output: None,
            format: FormatKind::Json,
            clq_source: None,
            centers: None,
            heights: None,
            samples: None,
            curve: None,
            curve_offset: None,
            p0: None,
            p1: None,
            center: None,
            radius: None,
            spacing: None,
            half_turns: None,
            curve_samples: None,
            curve_csv: None,
            convex_pieces: None,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "capdisc",
    version,
    about = "Spherical point sets from planar lattices: cap discrepancy, separation and error bounds"
)]
pub struct Cli {
    /// JSON file holding a RunConfig; replaces the subcommand entirely.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Clone, clap::Args)]
pub struct LatticeArgs {
    /// Row-major matrix entries a b c d.
    #[arg(long, num_args = 4, allow_hyphen_values = true, value_names = ["A", "B", "C", "D"], default_values_t = [1.0, 0.0, 0.0, 1.0])]
    pub matrix: Vec<f64>,

    /// Tiling scale: cells have side 1/K in lattice units.
    #[arg(long)]
    pub k: u32,

    /// Lattice translation, two reals.
    #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["X", "Y"], default_values_t = [0.0, 0.0])]
    pub offset: Vec<f64>,

    /// Where each cell's point sits.
    #[arg(long, value_enum, default_value_t = PerturbationKind::Center)]
    pub perturbation: PerturbationKind,

    /// Seed for the uniform perturbation and the estimator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fixed in-cell offset for the custom perturbation.
    #[arg(long, num_args = 2, value_names = ["UX", "UY"])]
    pub u: Option<Vec<f64>>,

    /// Trim or pad to the area-predicted point count.
    #[arg(long)]
    pub modified: bool,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Construct a planar point set and write it as CSV or JSON.
    Generate {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum, default_value_t = FormatKind::Csv)]
        format: FormatKind,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure the cap discrepancy of a constructed or ingested set.
    Discrepancy {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Point CSV (planar "px,py,ix,iy" or spherical "x,y,z") to
        /// analyze instead of constructing a set.
        #[arg(long, conflicts_with_all = ["matrix", "offset", "perturbation", "u", "modified"])]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeKind>,
        /// Random cap centers for estimate mode.
        #[arg(long)]
        trials: Option<u64>,
        /// Exact-mode size refusal threshold.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatKind::Json)]
        format: FormatKind,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate every closed-form bound for a lattice configuration.
    Bounds {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum)]
        clq_source: Option<ClqSourceKind>,
        #[arg(long)]
        centers: Option<usize>,
        #[arg(long)]
        heights: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatKind::Json)]
        format: FormatKind,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Count tiling cells a curve touches and compare with the bound.
    Intersect {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[arg(long, value_enum)]
        curve: Option<CurveKind>,
        /// Horizontal shift of the diagonal curve.
        #[arg(long)]
        curve_offset: Option<f64>,
        /// Segment start.
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["X", "Y"])]
        p0: Option<Vec<f64>>,
        /// Segment end.
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["X", "Y"])]
        p1: Option<Vec<f64>>,
        /// Circle or spiral center.
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["X", "Y"])]
        center: Option<Vec<f64>>,
        #[arg(long)]
        radius: Option<f64>,
        /// Radial growth per full turn of the spiral.
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        half_turns: Option<usize>,
        /// Vertex count of the sampled curve.
        #[arg(long)]
        curve_samples: Option<usize>,
        /// Polyline CSV ("component,px,py") to intersect instead.
        #[arg(long, conflicts_with = "curve")]
        curve_csv: Option<PathBuf>,
        /// Convexity annotation for a CSV curve.
        #[arg(long)]
        convex_pieces: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate the supremum of cap boundary preimage lengths.
    Clq {
        /// Row-major matrix entries a b c d.
        #[arg(long, num_args = 4, allow_hyphen_values = true, value_names = ["A", "B", "C", "D"], default_values_t = [1.0, 0.0, 0.0, 1.0])]
        matrix: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_CLQ_CENTERS)]
        centers: usize,
        #[arg(long, default_value_t = DEFAULT_CLQ_HEIGHTS)]
        heights: usize,
        #[arg(long, default_value_t = DEFAULT_CLQ_SAMPLES)]
        samples: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Smallest pairwise distance of the spherical set.
    Separation {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Point CSV to analyze instead of constructing a set.
        #[arg(long, conflicts_with_all = ["matrix", "offset", "perturbation", "u", "modified"])]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Reproduce the reference experiments and print a summary table.
    PaperSuite {
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn quad(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

fn pair(v: &[f64]) -> [f64; 2] {
    [v[0], v[1]]
}

impl CliCommand {
    pub fn to_run_config(&self) -> RunConfig {
        let mut cfg = RunConfig::default();
        match self {
            CliCommand::Generate {
                lattice,
                format,
                output,
            } => {
                cfg.command = CommandKind::Generate;
                apply_lattice(&mut cfg, lattice);
                cfg.format = *format;
                cfg.output = output.clone();
            }
            CliCommand::Discrepancy {
                lattice,
                input,
                mode,
                trials,
                limit,
                format,
                output,
            } => {
                cfg.command = CommandKind::Discrepancy;
                apply_lattice(&mut cfg, lattice);
                cfg.input = input.clone();
                cfg.mode = *mode;
                cfg.trials = *trials;
                cfg.limit = *limit;
                cfg.format = *format;
                cfg.output = output.clone();
            }
            CliCommand::Bounds {
                lattice,
                clq_source,
                centers,
                heights,
                samples,
                format,
                output,
            } => {
                cfg.command = CommandKind::Bounds;
                apply_lattice(&mut cfg, lattice);
                cfg.clq_source = *clq_source;
                cfg.centers = *centers;
                cfg.heights = *heights;
                cfg.samples = *samples;
                cfg.format = *format;
                cfg.output = output.clone();
            }
            CliCommand::Intersect {
                lattice,
                curve,
                curve_offset,
                p0,
                p1,
                center,
                radius,
                spacing,
                half_turns,
                curve_samples,
                curve_csv,
                convex_pieces,
                output,
            } => {
                cfg.command = CommandKind::Intersect;
                apply_lattice(&mut cfg, lattice);
                cfg.curve = *curve;
                cfg.curve_offset = *curve_offset;
                cfg.p0 = p0.as_deref().map(pair);
                cfg.p1 = p1.as_deref().map(pair);
                cfg.center = center.as_deref().map(pair);
                cfg.radius = *radius;
                cfg.spacing = *spacing;
                cfg.half_turns = *half_turns;
                cfg.curve_samples = *curve_samples;
                cfg.curve_csv = curve_csv.clone();
                cfg.convex_pieces = *convex_pieces;
                cfg.output = output.clone();
            }
            CliCommand::Clq {
                matrix,
                centers,
                heights,
                samples,
                output,
            } => {
                cfg.command = CommandKind::Clq;
                cfg.matrix = quad(matrix);
                cfg.centers = Some(*centers);
                cfg.heights = Some(*heights);
                cfg.samples = Some(*samples);
                cfg.output = output.clone();
            }
            CliCommand::Separation {
                lattice,
                input,
                output,
            } => {
                cfg.command = CommandKind::Separation;
                apply_lattice(&mut cfg, lattice);
                cfg.input = input.clone();
                cfg.output = output.clone();
            }
            CliCommand::PaperSuite {
                trials,
                seed,
                output,
            } => {
                cfg.command = CommandKind::PaperSuite;
                cfg.trials = *trials;
                cfg.seed = *seed;
                cfg.output = output.clone();
            }
        }
        cfg
    }
}

fn apply_lattice(cfg: &mut RunConfig, lattice: &LatticeArgs) {
    cfg.matrix = quad(&lattice.matrix);
    cfg.k = lattice.k;
    cfg.offset = pair(&lattice.offset);
    cfg.perturbation = lattice.perturbation;
    cfg.seed = lattice.seed;
    cfg.u = lattice.u.as_deref().map(pair);
    cfg.modified = lattice.modified;
}

/// Everything a run produces: a human table for stdout and/or a payload
/// artifact (written to `output` when set, stdout otherwise).
#[derive(Debug)]
pub struct RunOutput {
    pub payload: Option<String>,
    pub table: Option<String>,
}

fn matrix_of(cfg: &RunConfig) -> Mat2 {
    Mat2::new(cfg.matrix[0], cfg.matrix[1], cfg.matrix[2], cfg.matrix[3])
}

fn perturbation_of(cfg: &RunConfig) -> Result<Perturbation> {
    Ok(match cfg.perturbation {
        PerturbationKind::Center => Perturbation::CellCenter,
        PerturbationKind::LatticePoint => Perturbation::LatticePoint,
        PerturbationKind::Uniform => Perturbation::UniformRandom { seed: cfg.seed },
        PerturbationKind::Custom => {
            let u = cfg.u.ok_or_else(|| {
                Error::InvalidConfig(
                    "custom perturbation needs an in-cell offset: pass --u UX UY".into(),
                )
            })?;
            Perturbation::CustomOffset { u }
        }
    })
}

fn lattice_config_of(cfg: &RunConfig) -> Result<LatticeConfig> {
    if cfg.k == 0 {
        return Err(Error::InvalidConfig(
            "this command constructs a point set and needs --k K >= 1".into(),
        ));
    }
    let lat = LatticeConfig::new(matrix_of(cfg), cfg.k, perturbation_of(cfg)?)
        .with_offset(Vec2::new(cfg.offset[0], cfg.offset[1]));
    lat.validate()?;
    Ok(lat)
}

fn build_planar(cfg: &RunConfig) -> Result<PlanarPointSet> {
    let lat = lattice_config_of(cfg)?;
    if cfg.modified {
        modified_point_set(&lat)
    } else {
        build_point_set(&lat)
    }
}

/// Load points from CSV, accepting either the planar or the spherical
/// header.
fn load_sphere_set(path: &Path) -> Result<SpherePointSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, &e))?;
    let header = text.lines().next().unwrap_or("").trim();
    match header {
        "px,py,ix,iy" => {
            let planar = PlanarPointSet::from_csv(&text)?;
            SpherePointSet::from_planar(&planar)
        }
        "x,y,z" => SpherePointSet::from_csv(&text),
        other => Err(Error::InvalidConfig(format!(
            "unrecognized point CSV header {other:?} in {}; expected \"px,py,ix,iy\" or \"x,y,z\"",
            path.display()
        ))),
    }
}

fn envelope(command: &str, body: serde_json::Value) -> String {
    let mut doc = json!({ "schema": SCHEMA, "command": command });
    let obj = doc.as_object_mut().expect("object literal");
    if let serde_json::Value::Object(map) = body {
        for (k, v) in map {
            obj.insert(k, v);
        }
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable report");
    text.push('\n');
    text
}

fn reject_csv_report(format: FormatKind) -> Result<()> {
    if format == FormatKind::Csv {
        return Err(Error::InvalidConfig(
            "reports serialize to JSON; use --format json".into(),
        ));
    }
    Ok(())
}

fn run_generate(cfg: &RunConfig) -> Result<RunOutput> {
    let planar = build_planar(cfg)?;
    let payload = match cfg.format {
        FormatKind::Csv => planar.to_csv(),
        FormatKind::Json => envelope(
            "generate",
            json!({ "point_set": serde_json::to_value(&planar).expect("serializable set") }),
        ),
    };
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

fn resolve_set(cfg: &RunConfig) -> Result<SpherePointSet> {
    match &cfg.input {
        Some(path) => load_sphere_set(path),
        None => SpherePointSet::from_planar(&build_planar(cfg)?),
    }
}

fn run_discrepancy(cfg: &RunConfig) -> Result<RunOutput> {
    reject_csv_report(cfg.format)?;
    let set = resolve_set(cfg)?;
    let n = set.len();
    let limit = cfg.limit.unwrap_or(EXACT_LIMIT_DEFAULT);
    let mode = match cfg.mode {
        Some(m) => m,
        None if n <= limit => ModeKind::Exact,
        None => {
            eprintln!(
                "warning: N = {n} exceeds the exact-mode limit {limit}; \
                 falling back to the estimator ({DEFAULT_TRIALS} trials)"
            );
            ModeKind::Estimate
        }
    };
    if mode == ModeKind::Exact && cfg.trials.is_some() {
        return Err(Error::InvalidConfig(
            "trials only apply to estimate mode; drop --trials or pass --mode estimate".into(),
        ));
    }
    let report = match mode {
        ModeKind::Exact => exact_discrepancy(&set, limit)?,
        ModeKind::Estimate => {
            estimate_discrepancy(&set, cfg.trials.unwrap_or(DEFAULT_TRIALS), cfg.seed)?
        }
    };
    let payload = envelope(
        "discrepancy",
        json!({
            "report": serde_json::to_value(&report).expect("serializable report"),
            "sqrt_n_scaled": report.value * (report.n as f64).sqrt(),
        }),
    );
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

fn identity_matrix(cfg: &RunConfig) -> bool {
    cfg.matrix == [1.0, 0.0, 0.0, 1.0]
}

fn run_bounds(cfg: &RunConfig) -> Result<RunOutput> {
    reject_csv_report(cfg.format)?;
    let planar = build_planar(cfg)?;
    let q = matrix_of(cfg);
    let kind = cfg.clq_source.unwrap_or(if identity_matrix(cfg) {
        ClqSourceKind::Analytic3
    } else {
        ClqSourceKind::CertifiedUpper
    });
    if kind == ClqSourceKind::Analytic3 && !identity_matrix(cfg) {
        eprintln!(
            "warning: the analytic constant 3 is certified for the unit matrix only; \
             the report may understate the bound"
        );
    }
    let choice = match kind {
        ClqSourceKind::Analytic3 => ClqChoice::Analytic3,
        ClqSourceKind::CertifiedUpper => ClqChoice::CertifiedUpper,
        ClqSourceKind::NumericEstimate => ClqChoice::NumericEstimate(clq_estimate(
            q,
            cfg.centers.unwrap_or(DEFAULT_CLQ_CENTERS),
            cfg.heights.unwrap_or(DEFAULT_CLQ_HEIGHTS),
            cfg.samples.unwrap_or(DEFAULT_CLQ_SAMPLES),
        )?),
    };
    let report = BoundReport::compute(q, cfg.k, planar.len(), planar.count_deviation(), choice)?;
    let payload = envelope(
        "bounds",
        json!({ "report": serde_json::to_value(&report).expect("serializable report") }),
    );
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

fn curve_center(cfg: &RunConfig) -> Vec2 {
    let c = cfg.center.unwrap_or([0.5, 0.5]);
    Vec2::new(c[0], c[1])
}

fn resolve_curve(cfg: &RunConfig) -> Result<Polyline> {
    if let Some(path) = &cfg.curve_csv {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, &e))?;
        return polyline_from_csv(&text, cfg.convex_pieces);
    }
    let kind = cfg.curve.ok_or_else(|| {
        Error::InvalidConfig("pass --curve {diagonal,segment,circle,spiral} or --curve-csv FILE".into())
    })?;
    match kind {
        CurveKind::Diagonal => curves::translated_diagonal(cfg.curve_offset.unwrap_or(0.05)),
        CurveKind::Segment => {
            let (p0, p1) = match (cfg.p0, cfg.p1) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::InvalidConfig(
                        "segment curve needs --p0 X Y and --p1 X Y".into(),
                    ))
                }
            };
            curves::segment(Vec2::new(p0[0], p0[1]), Vec2::new(p1[0], p1[1]))
        }
        CurveKind::Circle => {
            let radius = cfg.radius.ok_or_else(|| {
                Error::InvalidConfig("circle curve needs --radius R > 0".into())
            })?;
            curves::circle(curve_center(cfg), radius, cfg.curve_samples.unwrap_or(512))
        }
        CurveKind::Spiral => {
            let spacing = cfg.spacing.ok_or_else(|| {
                Error::InvalidConfig("spiral curve needs --spacing S > 0".into())
            })?;
            let half_turns = cfg.half_turns.ok_or_else(|| {
                Error::InvalidConfig("spiral curve needs --half-turns H >= 1".into())
            })?;
            let samples = cfg
                .curve_samples
                .unwrap_or_else(|| (64 * half_turns).max(256));
            curves::archimedean_spiral(curve_center(cfg), spacing, half_turns, samples)
        }
    }
}

/// Parse the "component,px,py" polyline format. Only single-component
/// files can be intersected; a closed curve repeats its first vertex last.
fn polyline_from_csv(text: &str, convex_pieces: Option<usize>) -> Result<Polyline> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "component,px,py" => {}
        other => {
            return Err(Error::InvalidConfig(format!(
                "expected polyline header \"component,px,py\", got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut vertices: Vec<Vec2> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let comp = parts
            .next()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: bad component index", i + 2))
            })?;
        if comp != 0 {
            return Err(Error::InvalidConfig(
                "curve CSV holds multiple components; intersect one at a time".into(),
            ));
        }
        let mut coord = [0.0_f64; 2];
        for c in &mut coord {
            let field = parts.next().ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected component,px,py", i + 2))
            })?;
            *c = field.trim().parse::<f64>().map_err(|e| {
                Error::InvalidConfig(format!("line {}: {e}", i + 2))
            })?;
        }
        vertices.push(Vec2::new(coord[0], coord[1]));
    }
    let pieces = convex_pieces.ok_or_else(|| {
        Error::InvalidConfig(
            "curves loaded from CSV carry no convexity metadata; pass --convex-pieces N".into(),
        )
    })?;
    let closed = vertices.len() >= 4 && {
        let first = vertices[0];
        let last = vertices[vertices.len() - 1];
        first.x == last.x && first.y == last.y
    };
    let poly = if closed {
        vertices.pop();
        Polyline::closed(vertices)?
    } else {
        Polyline::open(vertices)?
    };
    Ok(poly.with_convexity(pieces))
}

fn run_intersect(cfg: &RunConfig) -> Result<RunOutput> {
    let lat = lattice_config_of(cfg)?;
    let beta = resolve_curve(cfg)?;
    let report = IntersectionReport::compute(&beta, matrix_of(cfg), cfg.k, lat.offset_vec())?;
    let payload = envelope(
        "intersect",
        json!({ "report": serde_json::to_value(&report).expect("serializable report") }),
    );
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

fn run_clq(cfg: &RunConfig) -> Result<RunOutput> {
    let q = matrix_of(cfg);
    if q.is_singular() {
        return Err(Error::SingularMatrix { det: q.det() });
    }
    let centers = cfg.centers.unwrap_or(DEFAULT_CLQ_CENTERS);
    let heights = cfg.heights.unwrap_or(DEFAULT_CLQ_HEIGHTS);
    let samples = cfg.samples.unwrap_or(DEFAULT_CLQ_SAMPLES);
    let value = clq_estimate(q, centers, heights, samples)?;
    let payload = envelope(
        "clq",
        json!({
            "matrix": cfg.matrix,
            "centers": centers,
            "heights": heights,
            "samples": samples,
            "clq": value,
        }),
    );
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

fn run_separation(cfg: &RunConfig) -> Result<RunOutput> {
    let set = resolve_set(cfg)?;
    let sep = separation_distance(&set)?;
    let n = set.len() as f64;
    let payload = envelope(
        "separation",
        json!({
            "n": set.len(),
            "separation": sep,
            "scaled_by_n_three_quarters": sep * n.powf(0.75),
        }),
    );
    Ok(RunOutput {
        payload: Some(payload),
        table: None,
    })
}

struct SuiteRow {
    label: String,
    k: u32,
    n: usize,
    report: DiscrepancyReport,
    certificate: Option<f64>,
    theorem: f64,
    corollary: f64,
}

fn suite_row(
    label: &str,
    q: Mat2,
    k: u32,
    modified: bool,
    trials: u64,
    seed: u64,
) -> Result<SuiteRow> {
    let lat = LatticeConfig::new(q, k, Perturbation::CellCenter);
    let planar = if modified {
        modified_point_set(&lat)?
    } else {
        build_point_set(&lat)?
    };
    let set = SpherePointSet::from_planar(&planar)?;
    let n = set.len();
    let report = if n <= EXACT_LIMIT_DEFAULT {
        exact_discrepancy(&set, EXACT_LIMIT_DEFAULT)?
    } else {
        estimate_discrepancy(&set, trials, seed)?
    };
    let identity = q == Mat2::identity();
    let certificate = if identity {
        Some(polar_certificate(k)?.value)
    } else {
        None
    };
    let choice = if identity {
        ClqChoice::Analytic3
    } else {
        ClqChoice::CertifiedUpper
    };
    let bounds = BoundReport::compute(q, k, n, planar.count_deviation(), choice)?;
    Ok(SuiteRow {
        label: label.to_string(),
        k,
        n,
        report,
        certificate,
        theorem: bounds.theorem_leading,
        corollary: bounds.corollary_leading,
    })
}

fn run_paper_suite(cfg: &RunConfig) -> Result<RunOutput> {
    let trials = cfg.trials.unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(Error::InvalidConfig("paper-suite needs trials >= 1".into()));
    }
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut rows = Vec::new();
    for k in [8u32, 10, 12, 50] {
        rows.push(suite_row(
            &format!("unit K={k}"),
            Mat2::identity(),
            k,
            false,
            trials,
            cfg.seed,
        )?);
    }
    rows.push(suite_row(
        "golden K=50 modified",
        Mat2::rotation_like(phi),
        50,
        true,
        trials,
        cfg.seed,
    )?);

    let mut table = String::new();
    table.push_str(&format!(
        "{:<22} {:>6} {:>10} {:>9} {:>12} {:>10} {:>10}\n",
        "set", "N", "sqrtN*D", "method", "certificate", "theorem", "corollary"
    ));
    for row in &rows {
        let scaled = row.report.value * (row.n as f64).sqrt();
        let method = match row.report.method {
            crate::discrepancy::Method::Exact => "exact",
            crate::discrepancy::Method::Estimate { .. } => "estimate",
            crate::discrepancy::Method::Certificate => "certificate",
        };
        let cert = row
            .certificate
            .map(|c| format!("{:.6}", c * (row.n as f64).sqrt()))
            .unwrap_or_else(|| "-".to_string());
        table.push_str(&format!(
            "{:<22} {:>6} {:>10.6} {:>9} {:>12} {:>10.6} {:>10.6}\n",
            row.label,
            row.n,
            scaled,
            method,
            cert,
            row.theorem * (row.n as f64).sqrt(),
            row.corollary * (row.n as f64).sqrt()
        ));
    }

    let json_rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|row| {
            json!({
                "label": row.label,
                "k": row.k,
                "n": row.n,
                "discrepancy": serde_json::to_value(&row.report).expect("serializable report"),
                "sqrt_n_scaled": row.report.value * (row.n as f64).sqrt(),
                "certificate": row.certificate,
                "theorem_leading": row.theorem,
                "corollary_leading": row.corollary,
            })
        })
        .collect();
    let payload = envelope("paper-suite", json!({ "rows": json_rows }));
    Ok(RunOutput {
        payload: Some(payload),
        table: Some(table),
    })
}

/// Execute a validated configuration, producing artifacts in memory.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.command {
        CommandKind::Generate => run_generate(cfg),
        CommandKind::Discrepancy => run_discrepancy(cfg),
        CommandKind::Bounds => run_bounds(cfg),
        CommandKind::Intersect => run_intersect(cfg),
        CommandKind::Clq => run_clq(cfg),
        CommandKind::Separation => run_separation(cfg),
        CommandKind::PaperSuite => run_paper_suite(cfg),
    }
}

/// Write through a sibling temp file and rename, so readers never observe
/// a partial artifact.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut name = path
        .file_name()
        .ok_or_else(|| Error::InvalidConfig(format!("output path {} has no file name", path.display())))?
        .to_os_string();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, &e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, &e))
}

/// Map failures to process exit codes: configuration and input problems
/// exit 2, numerical failures exit 3.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::Io { .. }
        | Error::TooLarge { .. }
        | Error::TooFew { .. } => 2,
        _ => 3,
    }
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("CAPDISC_THREADS") {
        let n: usize = raw.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!(
                "CAPDISC_THREADS must be a positive integer, got {raw:?}"
            ))
        })?;
        if n == 0 {
            return Err(Error::InvalidConfig(
                "CAPDISC_THREADS must be a positive integer, got 0".into(),
            ));
        }
        // a second init in the same process keeps the first pool; fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    match (&cli.config, &cli.command) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(
            "--config replaces the subcommand; pass one or the other".into(),
        )),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, &e))?;
            serde_json::from_str(&text).map_err(|e| {
                Error::InvalidConfig(format!("config {}: {e}", path.display()))
            })
        }
        (None, Some(cmd)) => Ok(cmd.to_run_config()),
        (None, None) => Err(Error::InvalidConfig(
            "nothing to do; pass a subcommand or --config FILE (try --help)".into(),
        )),
    }
}

fn execute(cfg: &RunConfig) -> Result<()> {
    let out = run(cfg)?;
    if let Some(table) = &out.table {
        print!("{table}");
    }
    if let Some(payload) = &out.payload {
        match &cfg.output {
            Some(path) => write_atomic(path, payload)?,
            None => {
                if out.table.is_none() {
                    print!("{payload}");
                }
            }
        }
    }
    Ok(())
}

/// Full process entry: parse, run, map errors to exit codes.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output and picks the stream
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let cfg = match resolve_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
