//! Run configuration: strict JSON schema, defaults and validation.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Channel length along x, m.
    pub width: f64,
    /// Channel height along y, m.
    pub height: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            width: 0.04,
            height: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwimmerConfig {
    /// Position of the head/tail junction midpoint.
    pub center: Point,
    /// Head extent along the swimming axis, m.
    pub head_height: f64,
    /// Head extent across the swimming axis, m.
    pub head_width: f64,
    pub tail_length: f64,
    /// Tail thickness at the junction.
    pub tail_diameter: f64,
    pub tail_tip_diameter: f64,
    pub head_density: f64,
    pub tail_density: f64,
    /// Magnetization 𝗆, A/m.
    pub magnetization: f64,
    /// Unit magnetic moment M in the body frame.
    pub moment_direction: Point,
    /// Initial orientation θ (rad).
    pub initial_angle: f64,
    /// Tail Young modulus E, Pa.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub head_young_modulus: f64,
    pub head_poisson_ratio: f64,
}

impl Default for SwimmerConfig {
    fn default() -> Self {
        Self {
            center: [3.5e-3, 0.0],
            head_height: 0.5e-3,
            head_width: 1.5e-3,
            tail_length: 7.5e-3,
            tail_diameter: 1.5e-3,
            tail_tip_diameter: 0.2e-3,
            head_density: 7000.0,
            tail_density: 1300.0,
            magnetization: 1e5,
            moment_direction: [-1.0, 0.0],
            initial_angle: PI,
            young_modulus: 1e5,
            poisson_ratio: 0.4,
            head_young_modulus: 41e9,
            head_poisson_ratio: 0.281,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidConfig {
    pub viscosity: f64,
    pub density: f64,
}

impl Default for FluidConfig {
    fn default() -> Self {
        Self {
            viscosity: 1.0,
            density: 970.0,
        }
    }
}

/// B(t) = (b_x, b_y sin(2π f t)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub bx: f64,
    pub by: f64,
    pub frequency: f64,
    /// Period used to size the time step when the frequency is zero.
    pub nominal_period: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            bx: 0.005,
            by: 0.005,
            frequency: 0.8,
            nominal_period: 1.25,
        }
    }
}

impl FieldConfig {
    /// Actuation period, or the nominal one for a static field.
    pub fn period(&self) -> f64 {
        if self.frequency > 0.0 {
            1.0 / self.frequency
        } else {
            self.nominal_period
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    /// Fixed-point tolerance on the RMS displacement change, m.
    pub tol: f64,
    pub max_iterations: usize,
    /// Relaxation strategy name ("aitken" or "constant").
    pub relaxation: String,
    pub initial_relaxation: f64,
    pub min_relaxation: f64,
    pub max_relaxation: f64,
    pub newton_tol: f64,
    pub newton_max_iterations: usize,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 50,
            relaxation: "aitken".into(),
            initial_relaxation: 0.5,
            min_relaxation: 0.05,
            max_relaxation: 1.0,
            newton_tol: 1e-8,
            newton_max_iterations: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub steps_per_period: usize,
    pub periods: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 200,
            periods: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Element size on the swimmer (solid mesh and fluid interface), m.
    pub h_min: f64,
    /// Element size far from the swimmer, m.
    pub h_max: f64,
    /// Growth of the fluid element size per unit distance.
    pub gradation: f64,
    /// Remesh when the moved fluid mesh falls below this quality.
    pub quality_threshold: f64,
    /// Remesh at least every this many steps (0 disables).
    pub remesh_every: usize,
    /// Perturbation seed for inserted mesh points.
    pub seed: Option<u64>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            h_min: 1.5e-4,
            h_max: 2e-3,
            gradation: 0.3,
            quality_threshold: 0.2,
            remesh_every: 50,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Linear solver name ("lu", "cg", "cg-jacobi").
    pub linear: String,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            linear: "lu".into(),
            tolerance: 1e-12,
            max_iterations: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a VTK snapshot every this many steps.
    pub stride: usize,
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            stride: 10,
            vtk: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelConfig,
    pub swimmer: SwimmerConfig,
    pub fluid: FluidConfig,
    pub field: FieldConfig,
    pub coupling: CouplingConfig,
    pub time: TimeConfig,
    pub mesh: MeshConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("", &["channel", "swimmer", "fluid", "field", "coupling", "time", "mesh", "solver", "output"]),
    ("channel", &["width", "height"]),
    (
        "swimmer",
        &[
            "center",
            "head_height",
            "head_width",
            "tail_length",
            "tail_diameter",
            "tail_tip_diameter",
            "head_density",
            "tail_density",
            "magnetization",
            "moment_direction",
            "initial_angle",
            "young_modulus",
            "poisson_ratio",
            "head_young_modulus",
            "head_poisson_ratio",
        ],
    ),
    ("fluid", &["viscosity", "density"]),
    ("field", &["bx", "by", "frequency", "nominal_period"]),
    (
        "coupling",
        &[
            "tol",
            "max_iterations",
            "relaxation",
            "initial_relaxation",
            "min_relaxation",
            "max_relaxation",
            "newton_tol",
            "newton_max_iterations",
        ],
    ),
    ("time", &["steps_per_period", "periods"]),
    ("mesh", &["h_min", "h_max", "gradation", "quality_threshold", "remesh_every", "seed"]),
    ("solver", &["linear", "tolerance", "max_iterations"]),
    ("output", &["directory", "stride", "vtk"]),
];

/// Closest known key, if any is reasonably close.
fn suggest(unknown: &str) -> Option<&'static str> {
    SECTIONS
        .iter()
        .flat_map(|(_, keys)| keys.iter().copied())
        .map(|k| (strsim::jaro_winkler(unknown, k), k))
        .filter(|(s, _)| *s > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
}

fn parse_error(e: serde_json::Error) -> Error {
    let mut message = e.to_string();
    // serde_json appends " at line L column C"; the variant carries those.
    if let Some(i) = message.rfind(" at line ") {
        message.truncate(i);
    }
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(name) = rest.split('`').next() {
            if let Some(k) = suggest(name) {
                message = format!("{message}; did you mean `{k}`?");
            }
        }
    }
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message,
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(parse_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn time_step(&self) -> f64 {
        self.field.period() / self.time.steps_per_period as f64
    }

    pub fn num_steps(&self) -> usize {
        (self.time.periods * self.time.steps_per_period as f64).round() as usize
    }

    /// Every violated invariant, or `Ok` if there are none.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name} must be positive (got {x})"));
            }
        };
        let s = &self.swimmer;
        positive("channel.width", self.channel.width);
        positive("channel.height", self.channel.height);
        positive("swimmer.head_height", s.head_height);
        positive("swimmer.head_width", s.head_width);
        positive("swimmer.tail_length", s.tail_length);
        positive("swimmer.tail_diameter", s.tail_diameter);
        positive("swimmer.tail_tip_diameter", s.tail_tip_diameter);
        positive("swimmer.head_density", s.head_density);
        positive("swimmer.tail_density", s.tail_density);
        positive("swimmer.magnetization", s.magnetization);
        positive("swimmer.young_modulus", s.young_modulus);
        positive("swimmer.head_young_modulus", s.head_young_modulus);
        positive("fluid.viscosity", self.fluid.viscosity);
        positive("fluid.density", self.fluid.density);
        positive("field.nominal_period", self.field.nominal_period);
        positive("coupling.tol", self.coupling.tol);
        positive("coupling.newton_tol", self.coupling.newton_tol);
        positive("time.periods", self.time.periods);
        positive("mesh.h_min", self.mesh.h_min);
        positive("mesh.h_max", self.mesh.h_max);
        positive("mesh.gradation", self.mesh.gradation);
        positive("solver.tolerance", self.solver.tolerance);

        for (name, nu) in [
            ("swimmer.poisson_ratio", s.poisson_ratio),
            ("swimmer.head_poisson_ratio", s.head_poisson_ratio),
        ] {
            if !(nu > -1.0 && nu <= 0.45) {
                v.push(format!("{name} must lie in (-1, 0.45] (got {nu})"));
            }
        }
        let m = s.moment_direction;
        if ((m[0] * m[0] + m[1] * m[1]).sqrt() - 1.0).abs() > 1e-9 {
            v.push(format!("swimmer.moment_direction must be a unit vector (got {m:?})"));
        }
        if s.tail_tip_diameter > s.tail_diameter {
            v.push("swimmer.tail_tip_diameter must not exceed swimmer.tail_diameter".into());
        }
        if s.tail_diameter > s.head_width {
            v.push("swimmer.tail_diameter must not exceed swimmer.head_width".into());
        }
        let (hw, hh) = (0.5 * self.channel.width, 0.5 * self.channel.height);
        let c = s.center;
        if c[0] + s.head_height >= hw || c[0] - s.tail_length <= -hw || c[1].abs() + 0.5 * s.head_width >= hh {
            v.push("the swimmer must lie strictly inside the channel".into());
        }
        if !(self.field.frequency >= 0.0 && self.field.frequency.is_finite()) {
            v.push(format!("field.frequency must be non-negative (got {})", self.field.frequency));
        }
        if self.coupling.max_iterations < 1 {
            v.push("coupling.max_iterations must be at least 1".into());
        }
        if self.coupling.newton_max_iterations < 1 {
            v.push("coupling.newton_max_iterations must be at least 1".into());
        }
        let (t0, tmin, tmax) = (
            self.coupling.initial_relaxation,
            self.coupling.min_relaxation,
            self.coupling.max_relaxation,
        );
        if !(0.0 < tmin && tmin <= tmax && tmax <= 1.0) {
            v.push(format!("coupling relaxation bounds need 0 < min <= max <= 1 (got [{tmin}, {tmax}])"));
        } else if !(tmin <= t0 && t0 <= tmax) {
            v.push(format!("coupling.initial_relaxation {t0} lies outside [{tmin}, {tmax}]"));
        }
        if !crate::swimmer::RELAXATION_NAMES.contains(&self.coupling.relaxation.as_str()) {
            v.push(format!(
                "coupling.relaxation `{}` is not one of {:?}",
                self.coupling.relaxation,
                crate::swimmer::RELAXATION_NAMES
            ));
        }
        if !crate::fem::SOLVER_NAMES.contains(&self.solver.linear.as_str()) {
            v.push(format!(
                "solver.linear `{}` is not one of {:?}",
                self.solver.linear,
                crate::fem::SOLVER_NAMES
            ));
        }
        if self.time.steps_per_period < 2 {
            v.push("time.steps_per_period must be at least 2".into());
        }
        if self.mesh.h_min > self.mesh.h_max {
            v.push("mesh.h_min must not exceed mesh.h_max".into());
        }
        if !(self.mesh.quality_threshold > 0.0 && self.mesh.quality_threshold < 1.0) {
            v.push(format!("mesh.quality_threshold must lie in (0, 1) (got {})", self.mesh.quality_threshold));
        }
        if self.output.stride < 1 {
            v.push("output.stride must be at least 1".into());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_json(&text)
}
