//! The JSON run configuration: one schema shared by every subcommand.
//!
//! Every key is optional; omitted keys take the documented defaults
//! (natural units, the `[-8, 8]^2` window at 256 samples per axis, the
//! ground state, and the matched smoothing width).  Unknown keys are
//! rejected so typos cannot silently fall back to defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evolution::EvolutionConfig;
use crate::numerics::PhaseSpaceGrid;
use crate::states::{OscillatorParams, StateKind, WavefunctionSpec};
use crate::transforms::SmoothingParams;

/// Grid section: either `half_width`/`n` for a square window or the six
/// explicit bounds; mixing the two forms is rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub n_q: Option<usize>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub n_p: Option<usize>,
}

impl GridSection {
    pub fn resolve(&self) -> Result<PhaseSpaceGrid> {
        let explicit = [
            self.q_min.is_some(),
            self.q_max.is_some(),
            self.n_q.is_some(),
            self.p_min.is_some(),
            self.p_max.is_some(),
            self.n_p.is_some(),
        ];
        if explicit.iter().any(|&b| b) {
            if self.half_width.is_some() || self.n.is_some() {
                return Err(Error::Config(
                    "grid: give either half_width/n or the six explicit bounds, not both".into(),
                ));
            }
            if !explicit.iter().all(|&b| b) {
                return Err(Error::Config(
                    "grid: explicit form needs all of q_min, q_max, n_q, p_min, p_max, n_p".into(),
                ));
            }
            let grid = PhaseSpaceGrid::new(
                self.q_min.unwrap(),
                self.q_max.unwrap(),
                self.n_q.unwrap(),
                self.p_min.unwrap(),
                self.p_max.unwrap(),
                self.n_p.unwrap(),
            )
            .map_err(|e| Error::Config(format!("grid: {e}")))?;
            grid.validate().map_err(|e| Error::Config(format!("grid: {e}")))?;
            Ok(grid)
        } else {
            let half = self.half_width.unwrap_or(8.0);
            if !(half > 0.0 && half.is_finite()) {
                return Err(Error::Config(format!(
                    "grid: half_width must be positive and finite, got {half}"
                )));
            }
            let grid = PhaseSpaceGrid::square(half, self.n.unwrap_or(256))
                .map_err(|e| Error::Config(format!("grid: {e}")))?;
            grid.validate().map_err(|e| Error::Config(format!("grid: {e}")))?;
            Ok(grid)
        }
    }
}

/// Smoothing width: a positive number, or the token `"q-function"` meaning
/// the width matched to the oscillator, `hbar / (m omega)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum WidthChoice {
    Token(String),
    Value(f64),
}

impl WidthChoice {
    pub fn resolve(&self, params: &OscillatorParams) -> Result<f64> {
        match self {
            WidthChoice::Value(f) => {
                if f.is_finite() && *f > 0.0 {
                    Ok(*f)
                } else {
                    Err(Error::Config(format!("f must be positive and finite, got {f}")))
                }
            }
            WidthChoice::Token(s) if s == "q-function" => params.matched_f(),
            WidthChoice::Token(s) => Err(Error::Config(format!(
                "f must be a number or the token \"q-function\", got \"{s}\""
            ))),
        }
    }
}

/// Per-check tolerance overrides; accessors fall back to the pinned
/// defaults when a key is absent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub phase_equation: Option<f64>,
    pub phase_equation_moving: Option<f64>,
    pub amplitude_transport: Option<f64>,
    pub q_transport: Option<f64>,
    pub evolution_equation: Option<f64>,
    pub cross_path: Option<f64>,
}

impl Tolerances {
    pub fn phase_equation(&self) -> f64 {
        self.phase_equation.unwrap_or(1e-5)
    }
    /// Gradient-form reading for moving states carries finite-difference
    /// rate error, so its default is looser.
    pub fn phase_equation_moving(&self) -> f64 {
        self.phase_equation_moving.unwrap_or(1e-3)
    }
    pub fn amplitude_transport(&self) -> f64 {
        self.amplitude_transport.unwrap_or(1e-5)
    }
    pub fn q_transport(&self) -> f64 {
        self.q_transport.unwrap_or(1e-4)
    }
    pub fn evolution_equation(&self) -> f64 {
        self.evolution_equation.unwrap_or(1e-4)
    }
    pub fn cross_path(&self) -> f64 {
        self.cross_path.unwrap_or(1e-6)
    }
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("phase_equation", self.phase_equation),
            ("phase_equation_moving", self.phase_equation_moving),
            ("amplitude_transport", self.amplitude_transport),
            ("q_transport", self.q_transport),
            ("evolution_equation", self.evolution_equation),
            ("cross_path", self.cross_path),
        ] {
            if let Some(t) = v {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Config(format!(
                        "tolerances.{name} must be positive and finite, got {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn default_params() -> OscillatorParams {
    OscillatorParams::natural()
}

fn default_state() -> StateKind {
    StateKind::Eigenstate { n: 0 }
}

/// The full run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(default = "default_params")]
    pub params: OscillatorParams,
    pub grid: GridSection,
    #[serde(default = "default_state")]
    pub state: StateKind,
    pub f: Option<WidthChoice>,
    pub evolution: Option<EvolutionConfig>,
    pub tolerances: Tolerances,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: default_params(),
            grid: GridSection::default(),
            state: default_state(),
            f: None,
            evolution: None,
            tolerances: Tolerances::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.resolve()?;
        self.spec()?;
        if let Some(w) = &self.f {
            w.resolve(&self.params)?;
        }
        if let Some(evo) = &self.evolution {
            evo.validate(&self.params)?;
        }
        self.tolerances.validate()
    }

    /// The configured state in its oscillator.  Levels and centers are
    /// validated; a superposition may be all-zero (some commands accept the
    /// zero state and the rest reject it when they need unit norm).
    pub fn spec(&self) -> Result<WavefunctionSpec> {
        match &self.state {
            StateKind::Eigenstate { n } => WavefunctionSpec::eigenstate(*n, self.params),
            StateKind::Coherent { q0, p0 } => WavefunctionSpec::coherent(*q0, *p0, self.params),
            StateKind::Superposition { coefficients } => {
                if coefficients.is_empty() {
                    return Err(Error::Config("superposition needs at least one coefficient".into()));
                }
                if coefficients.iter().any(|(re, im)| !re.is_finite() || !im.is_finite()) {
                    return Err(Error::Config("superposition coefficients must be finite".into()));
                }
                if coefficients.len() > crate::states::MAX_LEVEL as usize + 1 {
                    return Err(Error::Config(format!(
                        "superposition uses {} levels; at most {} are supported",
                        coefficients.len(),
                        crate::states::MAX_LEVEL + 1
                    )));
                }
                Ok(WavefunctionSpec { kind: self.state.clone(), params: self.params })
            }
        }
    }

    pub fn grid(&self) -> Result<PhaseSpaceGrid> {
        self.grid.resolve()
    }

    /// Smoothing width: the `f` key, or the matched width by default.
    pub fn smoothing(&self) -> Result<SmoothingParams> {
        let f = match &self.f {
            Some(w) => w.resolve(&self.params)?,
            None => self.params.matched_f()?,
        };
        SmoothingParams::new(f)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("eps-out"))
    }
}

/// Reads and validates `EPS_THREADS`.  Computation is single-threaded; the
/// variable is honored as an upper bound, so any positive value is
/// accepted and anything else is a configuration error.
pub fn thread_cap_from_env(value: Option<&str>) -> Result<usize> {
    match value {
        None => Ok(1),
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!(
                "EPS_THREADS must be a positive integer, got \"{raw}\""
            ))),
        },
    }
}
