//! JSON run configuration.

use std::path::{Path, PathBuf};

use cini_core::grid::TimeGrid;
use cini_core::model::{DetectorParams, LevelParams, SubspaceLabel};
use cini_core::phase::AuxInit;
use serde::{Deserialize, Serialize};

use crate::error::{RunError, RunResult};

pub const DEFAULT_EPS_SING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

/// Detector state at `t0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// The Fock state `|n1, n2>` named by the label.
    #[default]
    Fock,
    /// Eigenstate of level 0's initial invariant with eigenvalue `m`.
    AlignedM(f64),
    /// Components `[re, im]`, `m = j` first.
    Explicit(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleInit {
    pub lambda0: f64,
    pub gamma0: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AuxInitSpec {
    #[default]
    Aligned,
    /// One entry per level.
    Explicit(Vec<AngleInit>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Decohere {
        k: usize,
        l: usize,
    },
    /// Branch amplitudes `c_k` as `[re, im]`.
    ReducedCoherence {
        amplitudes: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub label: SubspaceLabel,
    pub detector: DetectorParams,
    pub levels: Vec<LevelParams>,
    pub grid: GridSpec,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub aux_init: AuxInitSpec,
    #[serde(default = "default_eps_sing")]
    pub eps_sing: f64,
    /// Projection `m` of the decoherence factor; the label's `m` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence_m: Option<f64>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_eps_sing() -> f64 {
    DEFAULT_EPS_SING
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> RunError {
    RunError::Config(format!("{path}: {msg}"))
}

/// `2m` if `m` is a valid projection for `2j`.
pub fn two_m_of(two_j: u32, m: f64, path: &str) -> RunResult<i64> {
    let twice = 2.0 * m;
    if !twice.is_finite() || twice.fract() != 0.0 {
        return Err(invalid(path, format!("m = {m} is not a multiple of 1/2")));
    }
    let two_m = twice as i64;
    let tj = two_j as i64;
    if two_m.abs() > tj || (tj - two_m) % 2 != 0 {
        return Err(invalid(path, format!("m = {m} not allowed for j = {}", tj as f64 / 2.0)));
    }
    Ok(two_m)
}

impl RunConfig {
    pub fn validate(&self) -> RunResult<()> {
        if self.levels.is_empty() {
            return Err(invalid("levels", "at least one level is required"));
        }
        if self.grid.steps < 2 {
            return Err(invalid("grid.steps", format!("must be at least 2, got {}", self.grid.steps)));
        }
        TimeGrid::new(self.grid.t0, self.grid.t1, self.grid.steps).map_err(|e| invalid("grid", e))?;
        if !(self.eps_sing.is_finite() && self.eps_sing > 0.0) {
            return Err(invalid("eps_sing", "must be positive and finite"));
        }
        let two_j = self.label.two_j();
        let dim = two_j as usize + 1;
        match &self.initial_state {
            InitialState::Fock => {}
            InitialState::AlignedM(m) => {
                two_m_of(two_j, *m, "initial_state.aligned_m")?;
            }
            InitialState::Explicit(v) => {
                if v.len() != dim {
                    return Err(invalid(
                        "initial_state.explicit",
                        format!("expected {dim} components, got {}", v.len()),
                    ));
                }
                let norm: f64 = v.iter().map(|[a, b]| a * a + b * b).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(invalid("initial_state.explicit", format!("norm {norm} is not 1")));
                }
            }
        }
        if let AuxInitSpec::Explicit(v) = &self.aux_init {
            if v.len() != self.levels.len() {
                return Err(invalid(
                    "aux_init.explicit",
                    format!("expected {} entries, got {}", self.levels.len(), v.len()),
                ));
            }
            if v.iter().any(|a| !a.lambda0.is_finite() || !a.gamma0.is_finite()) {
                return Err(invalid("aux_init.explicit", "angles must be finite"));
            }
        }
        if let Some(m) = self.decoherence_m {
            two_m_of(two_j, m, "decoherence_m")?;
        }
        for (i, task) in self.tasks.iter().enumerate() {
            match task {
                Task::Decohere { k, l } => {
                    for (name, idx) in [("k", k), ("l", l)] {
                        if *idx >= self.levels.len() {
                            return Err(invalid(
                                &format!("tasks[{i}].decohere.{name}"),
                                format!("level {idx} out of range"),
                            ));
                        }
                    }
                }
                Task::ReducedCoherence { amplitudes } => {
                    let path = format!("tasks[{i}].reduced_coherence.amplitudes");
                    if amplitudes.len() != self.levels.len() {
                        return Err(invalid(
                            &path,
                            format!("expected {} amplitudes, got {}", self.levels.len(), amplitudes.len()),
                        ));
                    }
                    let total: f64 = amplitudes.iter().map(|[a, b]| a * a + b * b).sum();
                    if (total - 1.0).abs() > 1e-10 {
                        return Err(invalid(&path, format!("sum of |c_k|^2 is {total}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn time_grid(&self) -> RunResult<TimeGrid> {
        TimeGrid::new(self.grid.t0, self.grid.t1, self.grid.steps).map_err(|e| invalid("grid", e))
    }

    pub fn aux_init_for(&self, level: usize) -> AuxInit {
        match &self.aux_init {
            AuxInitSpec::Aligned => AuxInit::Aligned,
            AuxInitSpec::Explicit(v) => {
                AuxInit::Explicit { lambda0: v[level].lambda0, gamma0: v[level].gamma0 }
            }
        }
    }

    /// `2m` used by the decoherence factor.
    pub fn decoherence_two_m(&self) -> i64 {
        match self.decoherence_m {
            Some(m) => (2.0 * m) as i64,
            None => self.label.two_m(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Parse and validate a JSON document.
pub fn parse_config(text: &str) -> RunResult<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            RunError::Config(inner.to_string())
        } else {
            RunError::Config(format!("{path}: {inner}"))
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> RunResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_config(&text)
}

/// Configs shipped with the binary.
pub const BUILTIN: &[(&str, &str)] = &[
    ("fixed_point", include_str!("../configs/fixed_point.json")),
    ("sinusoidal_drive", include_str!("../configs/sinusoidal_drive.json")),
    ("special_case", include_str!("../configs/special_case.json")),
    ("uncoupled", include_str!("../configs/uncoupled.json")),
    ("collapse", include_str!("../configs/collapse.json")),
];

pub fn builtin(name: &str) -> RunResult<RunConfig> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| RunError::Usage(format!("no built-in config named {name}")))?;
    parse_config(text)
}
