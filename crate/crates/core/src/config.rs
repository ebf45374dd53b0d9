//! Experiment configuration: one JSON document, every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cloud::Aabb;
use crate::effective::DEFAULT_UNIFORM_COEFFICIENT;
use crate::reflections::{ReflectionOptions, Summation, DEFAULT_GATE};
use crate::sym3::SymTraceFree3;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudSpec {
    Lattice { n_per_axis: usize, a: f64 },
    Rsa { n: usize, a: f64, dmin: f64, max_attempts: Option<usize> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Lattice,
    Rsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep this many reflection levels instead of iterating to tolerance.
    pub fixed_n: Option<usize>,
    pub deterministic: bool,
    /// Largest accepted `a³/d³`.
    pub gate: f64,
    /// Skip the gate check.
    pub force: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = ReflectionOptions::default();
        SolverSettings {
            tol: d.tol,
            max_iter: d.max_iter,
            fixed_n: None,
            deterministic: true,
            gate: DEFAULT_GATE,
            force: false,
        }
    }
}

impl SolverSettings {
    pub fn options(&self) -> ReflectionOptions {
        ReflectionOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            gate: (!self.force).then_some(self.gate),
            summation: if self.deterministic { Summation::Deterministic } else { Summation::Chunked },
            fixed_levels: self.fixed_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Cells per axis of the velocity grid over the box.
    pub n: usize,
    /// Cells per axis of the padded grid used for `Ḣ⁻¹`.
    pub hminus1_n: usize,
    /// Margin added on every side of the box for `Ḣ⁻¹`, as a fraction of
    /// the box side.
    pub padding: f64,
    /// Sub-samples per axis when rasterizing balls; `None` picks enough to
    /// resolve the radius.
    pub supersample: Option<usize>,
}

impl Default for GridSettings {
    fn default() -> Self {
        GridSettings { n: 32, hminus1_n: 64, padding: 0.5, supersample: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EinsteinSettings {
    pub phis: Vec<f64>,
    pub counts: Vec<usize>,
    pub generators: Vec<GeneratorKind>,
}

impl Default for EinsteinSettings {
    fn default() -> Self {
        EinsteinSettings {
            phis: vec![1e-4, 1e-3, 1e-2],
            counts: vec![27, 125, 500],
            generators: vec![GeneratorKind::Lattice, GeneratorKind::Rsa],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub phis: Vec<f64>,
    /// Lattice points per axis of the compared clouds.
    pub n_per_axis: usize,
    pub p: f64,
    /// Reflection levels kept in `u_app`.
    pub levels: usize,
    /// `c` in the uniform model `c·φ·I`.
    pub coefficient: f64,
}

impl Default for CompareSettings {
    fn default() -> Self {
        CompareSettings {
            phis: vec![1e-2, 1e-3, 1e-4],
            n_per_axis: 4,
            p: 1.2,
            levels: 3,
            coefficient: DEFAULT_UNIFORM_COEFFICIENT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Directory receiving all written files; `None` writes to stdout only.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(rename = "box")]
    pub bbox: Aabb,
    pub cloud: CloudSpec,
    /// Background strain `A` in basis coordinates.
    pub strain: SymTraceFree3,
    pub solver: SolverSettings,
    pub grid: GridSettings,
    pub einstein: EinsteinSettings,
    pub compare: CompareSettings,
    pub output: OutputSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            bbox: Aabb::unit(),
            cloud: CloudSpec::Lattice { n_per_axis: 3, a: 0.02 },
            strain: SymTraceFree3::new([1.0, 0.0, 0.0, 0.0, 0.0]),
            solver: SolverSettings::default(),
            grid: GridSettings::default(),
            einstein: EinsteinSettings::default(),
            compare: CompareSettings::default(),
            output: OutputSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Range checks on the numeric parameters.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.bbox.is_valid() {
            return bad("box is degenerate".into());
        }
        if !self.strain.is_finite() {
            return bad("strain must be finite".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return bad("solver needs tol > 0 and max_iter >= 1".into());
        }
        if self.solver.fixed_n == Some(0) {
            return bad("fixed_n must be >= 1".into());
        }
        if !(self.solver.gate > 0.0) {
            return bad("gate must be positive".into());
        }
        for (name, n) in [("grid.n", self.grid.n), ("grid.hminus1_n", self.grid.hminus1_n)] {
            if n < 2 || !n.is_power_of_two() {
                return bad(format!("{name} must be a power of two >= 2, got {n}"));
            }
        }
        if !(self.grid.padding >= 0.5 && self.grid.padding.is_finite()) {
            return bad(format!("grid.padding must be >= 0.5, got {}", self.grid.padding));
        }
        if self.grid.supersample == Some(0) {
            return bad("grid.supersample must be >= 1".into());
        }
        if !(1.0..1.5).contains(&self.compare.p) {
            return bad(format!("compare.p must lie in [1, 3/2), got {}", self.compare.p));
        }
        if self.compare.levels == 0 || self.compare.n_per_axis == 0 {
            return bad("compare needs levels >= 1 and n_per_axis >= 1".into());
        }
        for phi in self.einstein.phis.iter().chain(&self.compare.phis) {
            if !(*phi > 0.0 && *phi < 1.0) {
                return bad(format!("volume fractions must lie in (0, 1), got {phi}"));
            }
        }
        if self.einstein.counts.contains(&0) {
            return bad("einstein.counts must be positive".into());
        }
        match &self.cloud {
            CloudSpec::Lattice { n_per_axis, a } if *n_per_axis == 0 || !(*a > 0.0) => {
                bad("lattice needs n_per_axis >= 1 and a > 0".into())
            }
            CloudSpec::Rsa { n, a, dmin, .. } if *n == 0 || !(*a > 0.0) || !(*dmin > 0.0) => {
                bad("rsa needs n >= 1, a > 0 and dmin > 0".into())
            }
            _ => Ok(()),
        }
    }
}
