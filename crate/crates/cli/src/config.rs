//! Scenario presets and the flat `key = value` configuration format.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use ks_core::initial::{blowup_data, nonblowup_data, Gaussian};
use ks_core::{MacroKind, Point2, SchemeConfig, SolverKind};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    NonBlowup,
    Blowup,
    Custom,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NonBlowup => "nonblowup",
            Self::Blowup => "blowup",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nonblowup" | "non-blowup" | "bounded" => Ok(Self::NonBlowup),
            "blowup" | "blow-up" => Ok(Self::Blowup),
            "custom" => Ok(Self::Custom),
            other => Err(CliError::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Initial data of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialData {
    /// Gaussians of amplitude and rate `C0`.
    NonBlowup { c0: f64 },
    /// Concentrated Gaussians with amplitudes `Cu`, `Cv`.
    Blowup { cu: f64, cv: f64 },
    /// Arbitrary Gaussian pair; a zero rate gives a constant.
    Custom { u0: Gaussian, v0: Gaussian },
}

impl InitialData {
    pub fn gaussians(&self) -> (Gaussian, Gaussian) {
        match *self {
            Self::NonBlowup { c0 } => nonblowup_data(c0),
            Self::Blowup { cu, cv } => blowup_data(cu, cv),
            Self::Custom { u0, v0 } => (u0, v0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub nsquare: usize,
    pub macro_kind: MacroKind,
    pub k: f64,
    pub n_steps: usize,
    pub data: InitialData,
    pub output_dir: PathBuf,
    pub snapshot_steps: Vec<usize>,
    pub solver: SolverKind,
    /// Mesh file overriding the generated macroelement mesh.
    pub mesh_file: Option<PathBuf>,
    pub run_id: Option<String>,
}

impl Scenario {
    pub fn preset(kind: ScenarioKind) -> Self {
        let (nsquare, k, n_steps, data, snapshot_steps) = match kind {
            ScenarioKind::NonBlowup => (
                50,
                1e-4,
                50,
                InitialData::NonBlowup { c0: 70.0 },
                vec![0, 25, 50],
            ),
            ScenarioKind::Blowup => (
                100,
                1e-6,
                100,
                InitialData::Blowup {
                    cu: 1000.0,
                    cv: 500.0,
                },
                vec![0, 50, 100],
            ),
            ScenarioKind::Custom => (
                10,
                1e-4,
                10,
                InitialData::Custom {
                    u0: Gaussian {
                        amplitude: 1.0,
                        rate: 0.0,
                        center: Point2::new(0.0, 0.0),
                    },
                    v0: Gaussian {
                        amplitude: 0.0,
                        rate: 0.0,
                        center: Point2::new(0.0, 0.0),
                    },
                },
                vec![0, 10],
            ),
        };
        Self {
            kind,
            nsquare,
            macro_kind: MacroKind::Acute,
            k,
            n_steps,
            data,
            output_dir: PathBuf::from("runs"),
            snapshot_steps,
            solver: SolverKind::Direct,
            mesh_file: None,
            run_id: None,
        }
    }

    /// Builds a scenario from `key = value` pairs on top of the preset
    /// selected by the `scenario` key.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let kind = match pairs.get("scenario") {
            Some(s) => s.parse()?,
            None => ScenarioKind::NonBlowup,
        };
        let mut sc = Self::preset(kind);
        let mut snapshots_set = false;
        let mut steps_set = false;
        for (key, value) in pairs {
            match key.as_str() {
                "scenario" => {}
                "nsquare" => sc.nsquare = parse(key, value)?,
                "macro" => {
                    sc.macro_kind = value.parse().map_err(|e| config(format!("macro: {e}")))?
                }
                "k" => sc.k = parse(key, value)?,
                "steps" => {
                    sc.n_steps = parse(key, value)?;
                    steps_set = true;
                }
                "c0" => match &mut sc.data {
                    InitialData::NonBlowup { c0 } => *c0 = parse(key, value)?,
                    _ => {
                        return Err(config(format!(
                            "`c0` does not apply to the {kind} scenario"
                        )))
                    }
                },
                "cu" | "cv" => match &mut sc.data {
                    InitialData::Blowup { cu, cv } => {
                        let slot = if key == "cu" { cu } else { cv };
                        *slot = parse(key, value)?;
                    }
                    _ => {
                        return Err(config(format!(
                            "`{key}` does not apply to the {kind} scenario"
                        )))
                    }
                },
                "u0" | "v0" => match &mut sc.data {
                    InitialData::Custom { u0, v0 } => {
                        let slot = if key == "u0" { u0 } else { v0 };
                        *slot = parse_gaussian(key, value)?;
                    }
                    _ => {
                        return Err(config(format!(
                            "`{key}` only applies to the custom scenario"
                        )))
                    }
                },
                "out" => sc.output_dir = PathBuf::from(value),
                "snapshots" => {
                    sc.snapshot_steps = parse_list(key, value)?;
                    snapshots_set = true;
                }
                "solver" => {
                    sc.solver = value.parse().map_err(|e| config(format!("solver: {e}")))?
                }
                "mesh" => sc.mesh_file = Some(PathBuf::from(value)),
                "run_id" => sc.run_id = Some(value.clone()),
                other => return Err(config(format!("unknown key `{other}`"))),
            }
        }
        if steps_set && !snapshots_set {
            sc.snapshot_steps = default_snapshots(kind, sc.n_steps);
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.nsquare == 0 && self.mesh_file.is_none() {
            return Err(config("nsquare must be positive"));
        }
        if self.macro_kind == MacroKind::External && self.mesh_file.is_none() {
            return Err(config("macro = external requires a mesh file"));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(config(format!(
                "time step must be positive, got {}",
                self.k
            )));
        }
        match self.data {
            InitialData::NonBlowup { c0 } if !(c0.is_finite() && c0 > 0.0) => {
                return Err(config(format!("c0 must be positive, got {c0}")));
            }
            InitialData::Blowup { cu, cv }
                if !(cu.is_finite() && cu > 0.0 && cv.is_finite() && cv > 0.0) =>
            {
                return Err(config(format!(
                    "cu and cv must be positive, got {cu}, {cv}"
                )));
            }
            _ => {}
        }
        if let Some(&bad) = self.snapshot_steps.iter().find(|&&s| s > self.n_steps) {
            return Err(config(format!(
                "snapshot step {bad} exceeds steps = {}",
                self.n_steps
            )));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id == "." || id == ".." {
                return Err(config(format!("invalid run id `{id}`")));
            }
        }
        Ok(())
    }

    /// Below `C0 = 40` the Gaussians are too large at the boundary to be
    /// compatible with the Neumann condition.
    pub fn low_c0_warning(&self) -> Option<String> {
        match self.data {
            InitialData::NonBlowup { c0 } if c0 < 40.0 => Some(format!(
                "C0 = {c0} is below 40; the initial data are not compatible with the boundary condition"
            )),
            _ => None,
        }
    }

    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig::new(self.k, self.n_steps).with_solver(self.solver)
    }

    pub fn run_id(&self) -> String {
        if let Some(id) = &self.run_id {
            return id.clone();
        }
        let params = match self.data {
            InitialData::NonBlowup { c0 } => format!("c0-{c0}"),
            InitialData::Blowup { cu, cv } => format!("cu-{cu}-cv-{cv}"),
            InitialData::Custom { .. } => "custom".to_string(),
        };
        let mesh = match &self.mesh_file {
            Some(p) => p
                .file_stem()
                .map_or_else(|| "mesh".into(), |s| s.to_string_lossy().into_owned()),
            None => format!("{}-n{}", self.macro_kind, self.nsquare),
        };
        format!("{}-{mesh}-k{:e}-{params}", self.kind, self.k)
    }

    /// Renders the resolved configuration in the input format; feeding the
    /// output back through [`parse_config`] reproduces the scenario.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.kind);
        let _ = writeln!(s, "nsquare = {}", self.nsquare);
        let _ = writeln!(s, "macro = {}", self.macro_kind);
        let _ = writeln!(s, "k = {:e}", self.k);
        let _ = writeln!(s, "steps = {}", self.n_steps);
        match self.data {
            InitialData::NonBlowup { c0 } => {
                let _ = writeln!(s, "c0 = {c0:e}");
            }
            InitialData::Blowup { cu, cv } => {
                let _ = writeln!(s, "cu = {cu:e}\ncv = {cv:e}");
            }
            InitialData::Custom { u0, v0 } => {
                for (name, g) in [("u0", u0), ("v0", v0)] {
                    let _ = writeln!(
                        s,
                        "{name} = {:e} {:e} {:e} {:e}",
                        g.amplitude, g.rate, g.center.x, g.center.y
                    );
                }
            }
        }
        let _ = writeln!(s, "out = {}", self.output_dir.display());
        let snaps: Vec<String> = self
            .snapshot_steps
            .iter()
            .map(ToString::to_string)
            .collect();
        let _ = writeln!(s, "snapshots = {}", snaps.join(","));
        let _ = writeln!(s, "solver = {}", solver_name(self.solver));
        if let Some(m) = &self.mesh_file {
            let _ = writeln!(s, "mesh = {}", m.display());
        }
        if let Some(id) = &self.run_id {
            let _ = writeln!(s, "run_id = {id}");
        }
        s
    }
}

fn solver_name(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Direct => "direct",
        SolverKind::Iterative => "iterative",
    }
}

fn default_snapshots(kind: ScenarioKind, n_steps: usize) -> Vec<usize> {
    let mut v = match kind {
        ScenarioKind::NonBlowup | ScenarioKind::Blowup => vec![0, n_steps / 2, n_steps],
        ScenarioKind::Custom => vec![0, n_steps],
    };
    v.dedup();
    v
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| config(format!("bad value `{value}` for `{key}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    let mut out: Vec<usize> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn parse_gaussian(key: &str, value: &str) -> Result<Gaussian, CliError> {
    let nums: Vec<f64> = value
        .split_whitespace()
        .map(|s| parse(key, s))
        .collect::<Result<_, _>>()?;
    match nums[..] {
        [amplitude, rate, x, y] if nums.iter().all(|v| v.is_finite()) => Ok(Gaussian {
            amplitude,
            rate,
            center: Point2::new(x, y),
        }),
        _ => Err(config(format!(
            "`{key}` expects `amplitude rate center_x center_y`, got `{value}`"
        ))),
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(config(format!("line {}: empty key", i + 1)));
        }
        if pairs
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(pairs)
}
