//! Run configuration: TOML file plus flag overrides. The fully resolved
//! configuration is written next to every run's outputs so any run can be
//! reproduced byte-identically from it.

use semcode_core::{Error, PenaltyCase, PenaltyConfig, Result, SourcePmf};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Source distribution selector, `zipf:<n>:<s>`, `uniform:<n>`, or
/// `file:<path>` on the command line.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PmfSpec {
    Zipf { n: usize, s: f64 },
    Uniform { n: usize },
    File { path: String },
}

impl PmfSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        match parts.as_slice() {
            ["zipf", n, s] => Ok(PmfSpec::Zipf {
                n: n.parse().map_err(|e| Error::Parse(format!("pmf n: {e}")))?,
                s: s.parse().map_err(|e| Error::Parse(format!("pmf s: {e}")))?,
            }),
            ["uniform", n] => Ok(PmfSpec::Uniform {
                n: n.parse().map_err(|e| Error::Parse(format!("pmf n: {e}")))?,
            }),
            ["file", rest @ ..] => Ok(PmfSpec::File {
                path: rest.join(":"),
            }),
            _ => Err(Error::Parse(format!(
                "pmf spec `{text}` (expected zipf:<n>:<s>, uniform:<n>, or file:<path>)"
            ))),
        }
    }

    pub fn build(&self) -> Result<SourcePmf> {
        match self {
            PmfSpec::Zipf { n, s } => SourcePmf::zipf(*n, *s),
            PmfSpec::Uniform { n } => SourcePmf::uniform(*n),
            PmfSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                SourcePmf::from_csv(&text, format!("file:{path}"))
            }
        }
    }

    pub fn zipf_s(&self) -> Option<f64> {
        match self {
            PmfSpec::Zipf { s, .. } => Some(*s),
            _ => None,
        }
    }
}

fn default_kappa() -> u32 {
    1
}
fn default_one() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1e5
}
fn default_seed() -> u64 {
    1
}
fn default_warmup() -> f64 {
    0.01
}
fn default_replications() -> u64 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub case: String,
    pub rho: f64,
    #[serde(default = "default_kappa")]
    pub kappa: u32,
    #[serde(default = "default_one")]
    pub w: f64,
    #[serde(default = "default_one")]
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub use_integer_lengths: bool,
    #[serde(default = "default_replications")]
    pub replications: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon: default_horizon(),
            seed: default_seed(),
            warmup_fraction: default_warmup(),
            use_integer_lengths: false,
            replications: default_replications(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<f64>>,
}

/// The fully-resolved run configuration, written to `resolved.toml` in the
/// output directory of every command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pmf: PmfSpec,
    pub penalty: PenaltySection,
    pub lambda: f64,
    pub k: usize,
    #[serde(default)]
    pub calibrate_w: bool,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub grids: GridSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn penalty_config(&self) -> Result<PenaltyConfig> {
        PenaltyConfig::new(
            PenaltyCase::parse(&self.penalty.case)?,
            self.penalty.rho,
            self.penalty.kappa,
            self.penalty.w,
            self.penalty.alpha,
            self.penalty.beta,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty_config()?;
        if self.k == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite and > 0"));
        }
        if !(self.sim.horizon > 0.0) {
            return Err(Error::invalid("horizon", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.sim.warmup_fraction) {
            return Err(Error::invalid("warmup_fraction", "must be in [0, 1)"));
        }
        if self.sim.replications == 0 {
            return Err(Error::invalid("replications", "must be >= 1"));
        }
        Ok(())
    }

    pub fn write_resolved(&self, out_dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::create_dir_all(out_dir)?;
        std::fs::write(out_dir.join("resolved.toml"), text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_pmf_specs() {
        assert_eq!(PmfSpec::parse("zipf:100:0.4").unwrap(), PmfSpec::Zipf { n: 100, s: 0.4 });
        assert_eq!(PmfSpec::parse("uniform:8").unwrap(), PmfSpec::Uniform { n: 8 });
        assert_eq!(
            PmfSpec::parse("file:data/pmf.csv").unwrap(),
            PmfSpec::File { path: "data/pmf.csv".into() }
        );
        assert!(PmfSpec::parse("gauss:3").is_err());
    }

    #[test]
    fn toml_roundtrip_and_unknown_keys() {
        let cfg = RunConfig {
            pmf: PmfSpec::Zipf { n: 100, s: 0.4 },
            penalty: PenaltySection {
                case: "edt".into(),
                rho: 0.5,
                kappa: 1,
                w: 1.0,
                alpha: 1.0,
                beta: 1.0,
            },
            lambda: 1.0,
            k: 18,
            calibrate_w: false,
            sim: SimSection::default(),
            grids: GridSection::default(),
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(toml::from_str::<RunConfig>(&format!("{text}\nbogus_key = 1")).is_err());
    }
}
