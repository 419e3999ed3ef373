//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! threads = 2
//!
//! [mesh]
//! n = 6
//! boxes = [{ lo = [2, 2, 2], hi = [4, 4, 4] }]
//!
//! [materials]
//! sigma = 1.0
//! mu = 1.0
//!
//! [time]
//! horizon = 1.0
//! steps = 50
//! rho = 1.0
//!
//! [source]
//! space = { kind = "random_in_h0", seed = 3 }
//! time = { kind = "smooth_ramp", start = 0.0, width = 0.5 }
//! ```
//!
//! Optional sections: `[magnetic_source]` (random face pattern times a time
//! profile), `[limit]`, `[bidomain]`, `[check]`, `[saddle]`.

use std::path::Path;

use serde::Deserialize;

use evosys::discrete_complex::{CellBox, StaggeredMesh};
use evosys::eddy_current::{EddyProblem, SpatialProfile};
use evosys::sources::TimeProfile;
use evosys::weighted_time::WeightedTimeGrid;

use crate::report::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_thread")]
    pub threads: usize,
    pub mesh: Option<MeshConfig>,
    #[serde(default)]
    pub materials: Materials,
    pub time: Option<TimeConfig>,
    pub source: Option<SourceConfig>,
    pub magnetic_source: Option<FaceSource>,
    pub limit: Option<LimitConfig>,
    pub bidomain: Option<BidomainConfig>,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub saddle: SaddleConfig,
}

fn one_thread() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n: usize,
    #[serde(default)]
    pub boxes: Vec<BoxConfig>,
}

/// Conducting cells `lo ≤ c < hi` per axis.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

/// Scalar materials `σ̃ = sigma·I` on conducting edges, `μ = mu·I` on faces.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Materials {
    pub sigma: f64,
    pub mu: f64,
}

impl Default for Materials {
    fn default() -> Self {
        Self { sigma: 1.0, mu: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub steps: usize,
    #[serde(default = "unit_rho")]
    pub rho: f64,
}

fn unit_rho() -> f64 {
    1.0
}

/// Current density `J = space(x)·time(t)` on interior edges.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub space: SpatialProfile,
    pub time: TimeProfile,
}

/// `K = g·time(t)` with random face values `g` drawn from `seed`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaceSource {
    pub seed: u64,
    pub time: TimeProfile,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub k: i32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidomainConfig {
    pub shape: Vec<usize>,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Source-free energy window `(t0, t1]`, both grid nodes.
    pub window: [f64; 2],
    pub pulse: TimeProfile,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

/// `perturbation > 0` adds `perturbation·G·r` (random `r`, outside `H0`) to the saddle source.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaddleConfig {
    #[serde(default)]
    pub perturbation: f64,
}

fn default_samples() -> usize {
    100
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { samples: default_samples() }
    }
}

fn missing(section: &str, command: &str) -> CliError {
    CliError::Config(format!("section [{section}] is required by `{command}`"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("materials.sigma", self.materials.sigma)?;
        positive("materials.mu", self.materials.mu)?;
        if self.threads == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if let Some(t) = &self.time {
            positive("time.horizon", t.horizon)?;
            positive("time.rho", t.rho)?;
            if t.steps == 0 {
                return Err(CliError::Config("time.steps must be at least 1".into()));
            }
        }
        if !(self.saddle.perturbation >= 0.0 && self.saddle.perturbation.is_finite()) {
            return Err(CliError::Config("saddle.perturbation must be nonnegative".into()));
        }
        if let Some(s) = &self.source {
            s.time.validate()?;
        }
        if let Some(k) = &self.magnetic_source {
            k.time.validate()?;
        }
        if let Some(b) = &self.bidomain {
            positive("bidomain.sigma1", b.sigma1)?;
            positive("bidomain.sigma2", b.sigma2)?;
            b.pulse.validate()?;
        }
        Ok(())
    }

    /// `--seed` replaces the config seed and the seeds of random source patterns.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(s) = &mut self.source {
            match &mut s.space {
                SpatialProfile::RandomInH0 { seed: x } | SpatialProfile::CurlRange { seed: x } => *x = seed,
                _ => {}
            }
        }
        if let Some(k) = &mut self.magnetic_source {
            k.seed = seed;
        }
    }

    pub fn mesh(&self, command: &str) -> Result<StaggeredMesh, CliError> {
        let m = self.mesh.as_ref().ok_or_else(|| missing("mesh", command))?;
        let boxes: Vec<CellBox> = m.boxes.iter().map(|b| CellBox::new(b.lo, b.hi)).collect();
        Ok(StaggeredMesh::new(m.n, &boxes)?)
    }

    pub fn eddy(&self, command: &str) -> Result<EddyProblem<f64>, CliError> {
        Ok(EddyProblem::with_scalar_materials(self.mesh(command)?, self.materials.sigma, self.materials.mu)?)
    }

    pub fn grid(&self, command: &str) -> Result<WeightedTimeGrid<f64>, CliError> {
        let t = self.time.ok_or_else(|| missing("time", command))?;
        Ok(WeightedTimeGrid::new(t.horizon, t.steps, t.rho)?)
    }

    pub fn source(&self, command: &str) -> Result<SourceConfig, CliError> {
        self.source.ok_or_else(|| missing("source", command))
    }

    pub fn limit(&self, command: &str) -> Result<&LimitConfig, CliError> {
        self.limit.as_ref().ok_or_else(|| missing("limit", command))
    }

    pub fn bidomain(&self, command: &str) -> Result<&BidomainConfig, CliError> {
        self.bidomain.as_ref().ok_or_else(|| missing("bidomain", command))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_optional_fields() {
        let c = Config::parse("[mesh]\nn = 4\n").unwrap();
        assert_eq!((c.seed, c.threads, c.check.samples), (0, 1, 100));
        assert_eq!(c.materials.sigma, 1.0);
        assert!(c.mesh.unwrap().boxes.is_empty());
    }

    #[test]
    fn unknown_key_is_reported_with_its_name() {
        let err = Config::parse("[mesh]\nn = 4\nbox = 3\n").unwrap_err().to_string();
        assert!(err.contains("box"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn nonpositive_material_rejected() {
        assert!(Config::parse("[materials]\nsigma = 0.0\nmu = 1.0\n").is_err());
    }

    #[test]
    fn seed_override_reaches_sources() {
        let mut c = Config::parse(
            "[source]\nspace = { kind = \"curl_range\", seed = 1 }\ntime = { kind = \"zero\" }\n[magnetic_source]\nseed = 2\ntime = { kind = \"zero\" }\n",
        )
        .unwrap();
        c.override_seed(9);
        assert_eq!(c.source.unwrap().space, SpatialProfile::CurlRange { seed: 9 });
        assert_eq!(c.magnetic_source.unwrap().seed, 9);
    }
}
