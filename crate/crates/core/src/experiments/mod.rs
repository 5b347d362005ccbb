//! Experiment configuration, the five named code presets, the figure runner
//! and the bound verifier.

mod bounds;
mod figure;
pub mod svg;

pub use bounds::{verify_bounds, BoundsReport};
pub use figure::{fit_through_origin, run_figure, shape_checks, Figure, LeftRow, RightRow, ShapeReport};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{geometric_grid, log_grid};
use crate::codes::{Code, Inner, ModuleSpec};
use crate::geometry::CirclePoint;
use crate::{Error, Result};

pub const PRESETS: [&str; 5] = [
    "place-adaptive",
    "place-random",
    "grid-adaptive-balanced",
    "grid-adaptive-decreasing",
    "grid-random-balanced",
];

/// Module sizes of the `grid-adaptive-decreasing` preset.
pub const DECREASING_SIZES: [usize; 20] = [15, 13, 11, 10, 8, 7, 6, 5, 4, 4, 3, 3, 2, 2, 2, 1, 1, 1, 1, 1];

/// Seed of the random layouts in the random presets.
pub const PRESET_LAYOUT_SEED: u64 = 1;

pub const DEFAULT_MU: f64 = 30.0;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_TRIALS: u64 = 5000;
pub const DEFAULT_SEED: u64 = 20_170_601;
pub const FAST_TRIALS: u64 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InnerKind {
    #[default]
    Adaptive,
    Random,
    Explicit,
}

/// A code family with its parameters. `mu` comes from the enclosing config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodeSpec {
    Preset {
        name: String,
    },
    Place {
        fields: Vec<(f64, f64)>,
    },
    UniformPlace {
        n: usize,
        d: usize,
    },
    AdaptivePlace {
        n: usize,
    },
    RandomPlace {
        n: usize,
        seed: u64,
    },
    Grid {
        modules: Vec<ModuleSpec>,
        #[serde(default)]
        inner: InnerKind,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        layout: Option<Vec<Vec<(f64, f64)>>>,
    },
    BalancedGrid {
        n: usize,
        m: usize,
        #[serde(default)]
        inner: InnerKind,
        #[serde(default)]
        seed: u64,
    },
    ExtremeDyadic {
        n: usize,
    },
    /// A full code document as written by `gen-code`; its own `mu` wins.
    Explicit {
        code: Value,
    },
}

/// What the bound verifier may assume about a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Place,
    AdaptivePlace,
    UniformPlace { d: usize },
    RandomPlace,
    AdaptiveGrid { balanced: Option<usize> },
    OtherGrid,
    Dyadic,
    General,
}

fn inner(kind: InnerKind, seed: u64, layout: &Option<Vec<Vec<(f64, f64)>>>) -> Result<Inner> {
    Ok(match kind {
        InnerKind::Adaptive => Inner::Adaptive,
        InnerKind::Random => Inner::Random { seed },
        InnerKind::Explicit => Inner::Explicit(
            layout
                .clone()
                .ok_or_else(|| Error::InvalidCode("explicit inner layout needs \"layout\"".into()))?,
        ),
    })
}

impl CodeSpec {
    pub fn preset(name: &str) -> Result<CodeSpec> {
        let adaptive = InnerKind::Adaptive;
        Ok(match name {
            "place-adaptive" => CodeSpec::AdaptivePlace { n: 100 },
            "place-random" => CodeSpec::RandomPlace {
                n: 100,
                seed: PRESET_LAYOUT_SEED,
            },
            "grid-adaptive-balanced" => CodeSpec::BalancedGrid {
                n: 100,
                m: 20,
                inner: adaptive,
                seed: 0,
            },
            "grid-adaptive-decreasing" => CodeSpec::Grid {
                modules: DECREASING_SIZES
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| ModuleSpec {
                        n,
                        lambda: 0.5f64.powi(i as i32),
                    })
                    .collect(),
                inner: adaptive,
                seed: 0,
                layout: None,
            },
            "grid-random-balanced" => CodeSpec::BalancedGrid {
                n: 100,
                m: 20,
                inner: InnerKind::Random,
                seed: PRESET_LAYOUT_SEED,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    fn resolved(&self) -> Result<CodeSpec> {
        match self {
            CodeSpec::Preset { name } => CodeSpec::preset(name),
            other => Ok(other.clone()),
        }
    }

    pub fn build(&self, mu: f64) -> Result<Code> {
        Ok(match self.resolved()? {
            CodeSpec::Preset { .. } => unreachable!("presets resolve to a family"),
            CodeSpec::Place { fields } => Code::place(mu, &fields)?,
            CodeSpec::UniformPlace { n, d } => Code::uniform_place(n, d, mu)?,
            CodeSpec::AdaptivePlace { n } => Code::adaptive_place(n, mu)?,
            CodeSpec::RandomPlace { n, seed } => Code::random_place(n, mu, seed)?,
            CodeSpec::Grid {
                modules,
                inner: k,
                seed,
                layout,
            } => Code::grid(&modules, &inner(k, seed, &layout)?, mu)?,
            CodeSpec::BalancedGrid { n, m, inner: k, seed } => Code::balanced_grid(n, m, &inner(k, seed, &None)?, mu)?,
            CodeSpec::ExtremeDyadic { n } => Code::extreme_dyadic(n, mu)?,
            CodeSpec::Explicit { code } => Code::from_json(&code.to_string())?,
        })
    }

    pub fn kind(&self) -> Result<Kind> {
        Ok(match self.resolved()? {
            CodeSpec::Place { .. } => Kind::Place,
            CodeSpec::UniformPlace { d, .. } => Kind::UniformPlace { d },
            CodeSpec::AdaptivePlace { .. } => Kind::AdaptivePlace,
            CodeSpec::RandomPlace { .. } => Kind::RandomPlace,
            CodeSpec::Grid { inner: InnerKind::Adaptive, .. } => Kind::AdaptiveGrid { balanced: None },
            CodeSpec::BalancedGrid {
                m,
                inner: InnerKind::Adaptive,
                ..
            } => Kind::AdaptiveGrid { balanced: Some(m) },
            CodeSpec::Grid { .. } | CodeSpec::BalancedGrid { .. } => Kind::OtherGrid,
            CodeSpec::ExtremeDyadic { .. } => Kind::Dyadic,
            CodeSpec::Explicit { .. } => Kind::General,
            CodeSpec::Preset { .. } => unreachable!("presets resolve to a family"),
        })
    }

    /// Short identifier used in CSV rows.
    pub fn id(&self) -> String {
        match self {
            CodeSpec::Preset { name } => name.clone(),
            CodeSpec::Place { fields } => format!("place-{}", fields.len()),
            CodeSpec::UniformPlace { n, d } => format!("uniform-{n}-{d}"),
            CodeSpec::AdaptivePlace { n } => format!("adaptive-place-{n}"),
            CodeSpec::RandomPlace { n, seed } => format!("random-place-{n}-s{seed}"),
            CodeSpec::Grid { modules, .. } => format!("grid-{}m", modules.len()),
            CodeSpec::BalancedGrid { n, m, .. } => format!("balanced-grid-{n}-{m}"),
            CodeSpec::ExtremeDyadic { n } => format!("dyadic-{n}"),
            CodeSpec::Explicit { .. } => "explicit".into(),
        }
    }
}

/// Either an explicit ascending list or a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridDef {
    Points(Vec<f64>),
    Geometric { min: f64, max: f64, ratio: f64 },
    Log { min: f64, max: f64, points: usize },
}

impl GridDef {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            GridDef::Points(p) => Ok(p.clone()),
            GridDef::Geometric { min, max, ratio } => geometric_grid(*min, *max, *ratio),
            GridDef::Log { min, max, points } => log_grid(*min, *max, *points),
        }
    }
}

fn default_rho_grid() -> GridDef {
    GridDef::Geometric {
        min: 2f64.powi(-21),
        max: 0.5,
        ratio: std::f64::consts::SQRT_2,
    }
}

fn default_t_grid() -> GridDef {
    GridDef::Log {
        min: 0.001,
        max: 20.0,
        points: 200,
    }
}

fn default_mu() -> f64 {
    DEFAULT_MU
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn default_anchor() -> f64 {
    1.0 / 3.0
}
fn default_trials() -> u64 {
    DEFAULT_TRIALS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_budget() -> usize {
    1 << 12
}

/// One experiment, as a single JSON document. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A single code; when absent the named presets are used.
    #[serde(default)]
    pub code: Option<CodeSpec>,
    #[serde(default = "all_presets")]
    pub presets: Vec<String>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Argument of the anchor stimulus `s`.
    #[serde(default = "default_anchor")]
    pub anchor: f64,
    #[serde(default = "default_rho_grid")]
    pub rho_grid: GridDef,
    #[serde(default = "default_t_grid")]
    pub t_grid: GridDef,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_budget")]
    pub cell_budget: usize,
    #[serde(default)]
    pub out: Option<String>,
}

fn all_presets() -> Vec<String> {
    PRESETS.iter().map(|s| s.to_string()).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

/// 1-based line of the first occurrence of `"key"` in `src`.
fn line_of(src: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    src.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn ascending(points: &[f64]) -> bool {
    points.windows(2).all(|w| w[0] < w[1])
}

impl ExperimentConfig {
    /// Parses and validates; messages read `line L[, column C]: ...`.
    pub fn from_json_str(src: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(src)
            .map_err(|e| Error::Config(format!("line {}, column {}: {}", e.line(), e.column(), e)))?;
        cfg.validate().map_err(|(key, msg)| Error::Config(format!("line {}: {msg}", line_of(src, key))))?;
        Ok(cfg)
    }

    /// Checks every invariant, naming the offending key.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.mu.is_finite() && self.mu > 1.0) {
            return Err(("mu", format!("mu must exceed 1, got {}", self.mu)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(("alpha", format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.anchor) {
            return Err(("anchor", format!("anchor must lie in [0, 1), got {}", self.anchor)));
        }
        if self.trials == 0 {
            return Err(("trials", "trials must be at least 1".into()));
        }
        if self.cell_budget == 0 {
            return Err(("cell_budget", "cell_budget must be at least 1".into()));
        }
        let rho = self.rho_grid.points().map_err(|e| ("rho_grid", e.to_string()))?;
        if rho.is_empty() || !ascending(&rho) || rho[0] <= 0.0 || *rho.last().unwrap() > 0.5 {
            return Err(("rho_grid", "rho_grid must be strictly ascending within (0, 1/2]".into()));
        }
        let t = self.t_grid.points().map_err(|e| ("t_grid", e.to_string()))?;
        if t.is_empty() || !ascending(&t) || t[0] <= 0.0 || !t.iter().all(|x| x.is_finite()) {
            return Err(("t_grid", "t_grid must be strictly ascending and positive".into()));
        }
        if self.code.is_none() && self.presets.is_empty() {
            return Err(("presets", "no code and no presets".into()));
        }
        for (id, spec) in self.codes().map_err(|e| ("presets", e.to_string()))? {
            let key = if self.code.is_some() { "code" } else { "presets" };
            spec.build(self.mu).map_err(|e| (key, format!("{id}: {e}")))?;
        }
        Ok(())
    }

    /// `(id, spec)` of every code the experiment runs on, in order.
    pub fn codes(&self) -> Result<Vec<(String, CodeSpec)>> {
        match &self.code {
            Some(spec) => Ok(vec![(spec.id(), spec.clone())]),
            None => self
                .presets
                .iter()
                .map(|p| Ok((p.clone(), CodeSpec::preset(p)?)))
                .collect(),
        }
    }

    pub fn anchor_point(&self) -> CirclePoint {
        CirclePoint::unit(self.anchor).expect("validated anchor")
    }

    pub fn rho_points(&self) -> Result<Vec<f64>> {
        self.rho_grid.points()
    }

    pub fn t_points(&self) -> Result<Vec<f64>> {
        self.t_grid.points()
    }
}

/// One verified inequality or shape property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub code: String,
    pub pass: bool,
    /// Slack by which the property holds (negative when it fails).
    pub margin: f64,
    pub params: Value,
}

/// Formats a float with 17 significant digits; `inf` for infinity.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}
