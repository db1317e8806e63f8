//! Run configuration: a TOML file that fully determines every artifact.
//!
//! Every section is optional; the defaults describe the 1-D product fixture
//! `(2 + cos 2 pi y)(2 + cos 2 pi z)` with `f = 1`, `g = x1 + x2 / 2` on `[0, 1]`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cell::CellOptions;
use crate::coeff::{builtin_family, parse_coefficient, CoefficientSpec};
use crate::domain::{ScalarFn, Shape, SolverOptions};
use crate::flux::FluxTolerances;
use crate::harness::{SweepSpec, Thresholds};
use crate::{Error, Result};

/// Environment variable naming the corrector cache directory.
pub const CACHE_ENV: &str = "TWOSCALE_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub coefficient: CoefficientConfig,
    pub cell: CellConfig,
    pub domain: DomainConfig,
    pub sweep: SweepConfig,
    pub thresholds: ThresholdConfig,
    pub lipschitz: LipschitzConfig,
    pub lambda: LambdaConfig,
    pub flux: FluxConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            coefficient: CoefficientConfig::default(),
            cell: CellConfig::default(),
            domain: DomainConfig::Interval { a: 0.0, b: 1.0 },
            sweep: SweepConfig::default(),
            thresholds: ThresholdConfig::default(),
            lipschitz: LipschitzConfig::default(),
            lambda: LambdaConfig::default(),
            flux: FluxConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Exactly one of `family`, `dsl` or `file`. A `[coefficient]` table
/// replaces the default fixture as a whole.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig {
            family: Some("trig_product".into()),
            params: vec![2.0, 1.0, 2.0, 1.0],
            dsl: None,
            file: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellConfig {
    pub n_y: usize,
    pub n_z: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CellConfig {
    fn default() -> Self {
        let o = CellOptions::default();
        CellConfig {
            n_y: 64,
            n_z: 64,
            tol: o.tol,
            max_iter: o.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    Interval { a: f64, b: f64 },
    Square,
    Ball { center: [f64; 2], radius: f64 },
}

impl DomainConfig {
    pub fn shape(&self) -> Shape {
        match *self {
            DomainConfig::Interval { a, b } => Shape::Interval { a, b },
            DomainConfig::Square => Shape::Square,
            DomainConfig::Ball { center, radius } => Shape::Ball { center, radius },
        }
    }
}

/// Named load fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadFixture {
    Zero,
    One,
    /// `cos(2 pi x1)`.
    Cos,
}

impl LoadFixture {
    pub fn function(self) -> ScalarFn {
        match self {
            LoadFixture::Zero => Arc::new(|_| 0.0),
            LoadFixture::One => Arc::new(|_| 1.0),
            LoadFixture::Cos => Arc::new(|x: [f64; 2]| (2.0 * std::f64::consts::PI * x[0]).cos()),
        }
    }
}

/// Named Dirichlet data fixtures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFixture {
    Zero,
    /// `x1 + x2 / 2`.
    Linear,
    /// `e^{pi (x1 - 1)} sin(pi x2)`, harmonic in 2-D.
    Harmonic,
}

impl BoundaryFixture {
    pub fn function(self) -> ScalarFn {
        use std::f64::consts::PI;
        match self {
            BoundaryFixture::Zero => Arc::new(|_| 0.0),
            BoundaryFixture::Linear => Arc::new(|x: [f64; 2]| x[0] + 0.5 * x[1]),
            BoundaryFixture::Harmonic => Arc::new(|x: [f64; 2]| (PI * (x[0] - 1.0)).exp() * (PI * x[1]).sin()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub load: LoadFixture,
    pub boundary: BoundaryFixture,
    /// Meshes satisfy `h <= eps^2 / mesh_divisor`.
    pub mesh_divisor: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
    pub milu_omega: f64,
    /// Use closed-form solutions (1-D only).
    pub closed_form: bool,
    /// Cell budget per axis; defaults to `2^20` in 1-D and `4096` in 2-D.
    pub max_cells: Option<usize>,
    /// Assemble `w_eps` for each sweep point.
    pub expansion: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let s = SolverOptions::default();
        SweepConfig {
            eps: vec![0.25, 0.125, 0.0625, 0.03125, 0.015625],
            load: LoadFixture::One,
            boundary: BoundaryFixture::Linear,
            mesh_divisor: s.mesh_divisor,
            solver_tol: s.tol,
            max_iter: s.max_iter,
            milu_omega: s.milu_omega,
            closed_form: true,
            max_cells: None,
            expansion: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdConfig {
    pub slope_min: f64,
    pub slope_max: Option<f64>,
    pub fit_residual: f64,
    pub lipschitz_factor: f64,
    pub monotone_slack: f64,
    pub degenerate: f64,
    pub min_points: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        let t = Thresholds::default();
        ThresholdConfig {
            slope_min: t.slope_min,
            slope_max: Some(1.3),
            fit_residual: t.fit_residual,
            lipschitz_factor: t.lipschitz_factor,
            monotone_slack: t.monotone_slack,
            degenerate: t.degenerate,
            min_points: t.min_points,
        }
    }
}

impl ThresholdConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            slope_min: self.slope_min,
            slope_max: self.slope_max.unwrap_or(f64::INFINITY),
            fit_residual: self.fit_residual,
            lipschitz_factor: self.lipschitz_factor,
            monotone_slack: self.monotone_slack,
            degenerate: self.degenerate,
            min_points: self.min_points,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzConfig {
    /// Defaults to the centre of the domain.
    pub center: Option<[f64; 2]>,
    /// Defaults to the inradius of the domain.
    pub radius: Option<f64>,
    /// Exponent of the load average; must exceed the dimension.
    pub p: f64,
    /// Ratio of the affine-defect chain.
    pub theta: f64,
    /// Number of radii in the chain.
    pub chain: usize,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig {
            center: None,
            radius: None,
            p: 4.0,
            theta: 0.125,
            chain: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub eps: f64,
    pub values: Vec<f64>,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig {
            eps: 0.0625,
            values: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxConfig {
    pub mean: f64,
    pub divergence: f64,
    pub reconstruction: f64,
}

impl Default for FluxConfig {
    fn default() -> Self {
        let t = FluxTolerances::default();
        FluxConfig {
            mean: t.mean,
            divergence: t.divergence,
            reconstruction: t.reconstruction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub cache_dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("twoscale-out"),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        let c = &self.coefficient;
        let sources = c.family.is_some() as u8 + c.dsl.is_some() as u8 + c.file.is_some() as u8;
        if sources != 1 {
            return Err(Error::Config("give exactly one of coefficient.family, .dsl and .file".into()));
        }
        if self.lipschitz.p <= self.domain.shape().dim() as f64 {
            return Err(Error::Config(format!(
                "lipschitz.p = {} must exceed the dimension",
                self.lipschitz.p
            )));
        }
        Ok(())
    }

    /// Parse or build the coefficient.
    pub fn coefficient_spec(&self) -> Result<CoefficientSpec> {
        let c = &self.coefficient;
        if let Some(name) = &c.family {
            builtin_family(name, &c.params)
        } else if let Some(dsl) = &c.dsl {
            parse_coefficient(dsl)
        } else {
            let path = c.file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            parse_coefficient(&text)
        }
    }

    /// SHA-256 over the canonical serialization without the output section,
    /// plus the coefficient hash (which covers coefficient files).
    pub fn config_hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let mut h = Sha256::new();
        h.update(canonical.to_toml().as_bytes());
        h.update(self.coefficient_spec()?.hash_hex().as_bytes());
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn cell_options(&self) -> CellOptions {
        CellOptions {
            tol: self.cell.tol,
            max_iter: self.cell.max_iter,
        }
    }

    pub fn flux_tolerances(&self) -> FluxTolerances {
        FluxTolerances {
            mean: self.flux.mean,
            divergence: self.flux.divergence,
            reconstruction: self.flux.reconstruction,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.sweep.solver_tol,
            max_iter: self.sweep.max_iter,
            mesh_divisor: self.sweep.mesh_divisor,
            milu_omega: self.sweep.milu_omega,
        }
    }

    /// Cache directory: explicit choice (flag or environment), then the
    /// config, then `<output dir>/cache`.
    pub fn cache_dir(&self, explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| self.output.cache_dir.clone())
            .unwrap_or_else(|| self.output.dir.join("cache"))
    }

    pub fn sweep_spec(&self, spec: Arc<CoefficientSpec>, jobs: usize) -> SweepSpec {
        let shape = self.domain.shape();
        let center = self.lipschitz.center.unwrap_or(match shape {
            Shape::Interval { a, b } => [0.5 * (a + b), 0.0],
            Shape::Square => [0.5, 0.5],
            Shape::Ball { center, .. } => center,
        });
        let max_cells = self
            .sweep
            .max_cells
            .unwrap_or(if shape.dim() == 1 { 1 << 20 } else { 4096 });
        SweepSpec {
            spec,
            shape,
            eps: self.sweep.eps.clone(),
            load: self.sweep.load.function(),
            boundary: self.sweep.boundary.function(),
            solver: self.solver_options(),
            closed_form: self.sweep.closed_form && shape.dim() == 1,
            max_cells,
            expansion: self.sweep.expansion,
            center,
            radius: self.lipschitz.radius.unwrap_or(shape.inradius()),
            p: self.lipschitz.p,
            thresholds: self.thresholds.thresholds(),
            jobs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_and_hash_ignore_output() {
        let text = r#"
            [coefficient]
            family = "trig_general"
            params = [1.0, 0.5]
            [domain]
            shape = "square"
            [sweep]
            eps = [0.25, 0.125]
            load = "cos"
            [output]
            dir = "elsewhere"
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.domain, DomainConfig::Square);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let mut moved = cfg.clone();
        moved.output.dir = PathBuf::from("other");
        assert_eq!(cfg.config_hash().unwrap(), moved.config_hash().unwrap());
        let mut changed = cfg.clone();
        changed.sweep.eps.push(0.0625);
        assert_ne!(cfg.config_hash().unwrap(), changed.config_hash().unwrap());
    }

    #[test]
    fn conflicting_sources_and_unknown_keys_are_rejected() {
        let both = "[coefficient]\nfamily = \"constant\"\ndsl = \"a11 = 1\"\n";
        assert!(matches!(RunConfig::from_toml(both), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[sweep]\nepsilon = [0.5]\n"), Err(Error::Config(_))));
    }

    #[test]
    fn cache_precedence() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.cache_dir(None), PathBuf::from("twoscale-out/cache"));
        cfg.output.cache_dir = Some(PathBuf::from("c"));
        assert_eq!(cfg.cache_dir(None), PathBuf::from("c"));
        assert_eq!(cfg.cache_dir(Some(Path::new("flag"))), PathBuf::from("flag"));
    }
}
