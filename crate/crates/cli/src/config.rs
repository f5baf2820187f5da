//! Run configuration: a JSON file, overridden field by field by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use defect_forge::closure::ClosureOptions;
use defect_forge::profile::{SolveOptions, TruncationPolicy, FAR_LOG_STEP};
use defect_forge::stability::{SearchOptions, VerdictOptions};
use defect_forge::QuadratureSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Finite {
        radius: f64,
    },
    /// Truncated radii doubled until the energy on [0, core_radius] settles.
    Infinite {
        #[serde(default = "d_core")]
        core_radius: f64,
        #[serde(default = "d_initial")]
        initial_radius: f64,
        #[serde(default = "d_doublings")]
        max_doublings: usize,
        #[serde(default = "d_window_tol")]
        tol: f64,
        #[serde(default)]
        min_radius: f64,
        /// Step in ln r of the far-field lattice; tent breakpoints snap to its multiples.
        #[serde(default = "d_log_step")]
        log_step: f64,
    },
}

fn d_core() -> f64 {
    20.0
}
fn d_initial() -> f64 {
    40.0
}
fn d_doublings() -> usize {
    10
}
fn d_window_tol() -> f64 {
    1e-6
}
fn d_log_step() -> f64 {
    FAR_LOG_STEP
}

impl Domain {
    pub fn infinite_default() -> Self {
        Domain::Infinite {
            core_radius: d_core(),
            initial_radius: d_initial(),
            max_doublings: d_doublings(),
            tol: d_window_tol(),
            min_radius: 0.0,
            log_step: d_log_step(),
        }
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::Finite { radius: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Total nodes (finite domain) or nodes on (0, core_radius] (infinite domain).
    pub nodes: usize,
    pub ratio: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nodes: 2000,
            ratio: 1.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solve: f64,
    pub max_iter: usize,
    pub margin: f64,
    pub closure: f64,
    pub closure_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self {
            solve: s.tol,
            max_iter: s.max_iter,
            margin: s.margin,
            closure: s.closure.tol,
            closure_max_iter: s.closure.max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub n_max: u32,
    pub m_max: u32,
    pub eigen_count: usize,
    pub cross_check_nodes: Option<usize>,
    pub plateau_tol: f64,
    pub tent_widths: Vec<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        let v = VerdictOptions::default();
        Self {
            n_max: v.n_max,
            m_max: v.m_max,
            eigen_count: v.eigen_count,
            cross_check_nodes: v.cross_check_nodes,
            plateau_tol: v.search.plateau_tol,
            tent_widths: v.search.widths.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub samples: usize,
    pub n_eta: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            n_eta: 10,
        }
    }
}

/// Output paths. Not part of the hashed configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub profile: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub ledger: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub scan: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub alpha: Option<f64>,
    pub k: Option<i32>,
    pub domain: Domain,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub quadrature_order: usize,
    pub stability: StabilityConfig,
    pub identities: IdentityConfig,
    #[serde(skip_serializing)]
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            k: None,
            domain: Domain::default(),
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            quadrature_order: QuadratureSpec::default().order,
            stability: StabilityConfig::default(),
            identities: IdentityConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| {
            UsageError(format!("invalid config {}: {e}", path.display())).into()
        })
    }

    /// sha256 of the canonical JSON of every field except the output paths.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn alpha(&self) -> Result<f64, UsageError> {
        self.alpha
            .ok_or_else(|| UsageError("missing --alpha (or \"alpha\" in the config file)".into()))
    }

    pub fn k(&self) -> Result<i32, UsageError> {
        let k = self
            .k
            .ok_or_else(|| UsageError("missing --k (or \"k\" in the config file)".into()))?;
        if k == 0 {
            return Err(UsageError("k must be nonzero".into()));
        }
        Ok(k)
    }

    /// alpha for profile and stability runs, which need alpha > 7.5.
    pub fn profile_alpha(&self) -> Result<f64, UsageError> {
        let a = self.alpha()?;
        if !(a > 7.5 && a.is_finite()) {
            return Err(UsageError(format!("alpha must exceed 7.5 for this command, got {a}")));
        }
        Ok(a)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            order: self.quadrature_order,
            ..QuadratureSpec::default()
        }
    }

    pub fn closure(&self) -> ClosureOptions {
        ClosureOptions {
            tol: self.tolerances.closure,
            max_iter: self.tolerances.closure_max_iter,
            quad: self.quadrature(),
            ..ClosureOptions::default()
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tolerances.solve,
            max_iter: self.tolerances.max_iter,
            margin: self.tolerances.margin,
            closure: self.closure(),
            ..SolveOptions::default()
        }
    }

    pub fn truncation(&self) -> Option<TruncationPolicy> {
        match self.domain {
            Domain::Finite { .. } => None,
            Domain::Infinite {
                core_radius,
                initial_radius,
                max_doublings,
                tol,
                min_radius,
                log_step,
            } => Some(TruncationPolicy {
                inner_nodes: self.grid.nodes,
                core_radius,
                initial_radius,
                max_doublings,
                tol,
                min_radius,
                ratio: self.grid.ratio,
                log_step,
            }),
        }
    }

    pub fn verdict_options(&self) -> VerdictOptions {
        let s = &self.stability;
        VerdictOptions {
            n_max: s.n_max,
            m_max: s.m_max,
            eigen_count: s.eigen_count,
            cross_check_nodes: s.cross_check_nodes,
            search: SearchOptions {
                plateau_tol: s.plateau_tol,
                widths: s.tent_widths.clone(),
                log_step: match self.domain {
                    Domain::Infinite { log_step, .. } => log_step,
                    Domain::Finite { .. } => FAR_LOG_STEP,
                },
                ..SearchOptions::default()
            },
            ..VerdictOptions::default()
        }
    }
}
