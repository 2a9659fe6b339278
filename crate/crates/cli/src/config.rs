//! Experiment configuration: a single TOML file with defaults for every
//! section, validated before any computation runs.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use schwinger_core::mitigation::FitModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub couplings: CouplingsSection,
    pub trotter: TrotterSection,
    pub embedding: EmbeddingSection,
    pub noise: NoiseSection,
    pub mitigation: MitigationSection,
    pub run: RunSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSection::default(),
            couplings: CouplingsSection::default(),
            trotter: TrotterSection::default(),
            embedding: EmbeddingSection::default(),
            noise: NoiseSection::default(),
            mitigation: MitigationSection::default(),
            run: RunSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub num_sites: usize,
    pub group_order: usize,
    /// Defaults to half filling when absent.
    pub filling: Option<usize>,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { num_sites: 4, group_order: 3, filling: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingsSection {
    pub xi: f64,
    pub mu: f64,
}

impl Default for CouplingsSection {
    fn default() -> Self {
        Self { xi: 0.6, mu: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrotterSection {
    pub dt: f64,
}

impl Default for TrotterSection {
    fn default() -> Self {
        Self { dt: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    /// paper | identity | brute | greedy | fixed
    pub mode: String,
    pub restarts: usize,
    pub seed: u64,
    /// 1-indexed, used with mode = "fixed".
    pub fixed_permutation: Option<Vec<usize>>,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self { mode: "paper".into(), restarts: 5, seed: 7, fixed_permutation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub readout_flip: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { p1: 0.001, p2: 0.01, p3: 0.03, readout_flip: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationSection {
    pub trex: TrexSection,
    pub zne: ZneSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrexSection {
    pub twirls: usize,
    /// Calibration shots; 0 runs the calibration in expectation mode.
    pub shots: u64,
}

impl Default for TrexSection {
    fn default() -> Self {
        Self { twirls: 16, shots: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneSection {
    pub scales: Vec<f64>,
    /// auto | linear | quadratic | cubic | exponential
    pub model: String,
}

impl Default for ZneSection {
    fn default() -> Self {
        Self { scales: vec![1.0, 3.0, 5.0], model: "auto".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub shots: u64,
    pub seed: u64,
    pub t_max: f64,
    pub s_values: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { shots: 10_000, seed: 7, t_max: 2.5, s_values: vec![0.1, 0.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.lattice.num_sites == 0 || self.lattice.num_sites % 2 != 0 {
            bail!("lattice.num_sites must be even and positive");
        }
        if self.lattice.group_order == 0 {
            bail!("lattice.group_order must be at least 1");
        }
        if !(self.trotter.dt > 0.0) {
            bail!("trotter.dt must be positive");
        }
        for (name, p) in [
            ("noise.p1", self.noise.p1),
            ("noise.p2", self.noise.p2),
            ("noise.p3", self.noise.p3),
            ("noise.readout_flip", self.noise.readout_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                bail!("{name} must be a probability, got {p}");
            }
        }
        if !matches!(self.embedding.mode.as_str(), "paper" | "identity" | "brute" | "greedy" | "fixed")
        {
            bail!("embedding.mode must be paper|identity|brute|greedy|fixed");
        }
        if self.embedding.mode == "fixed" && self.embedding.fixed_permutation.is_none() {
            bail!("embedding.mode = \"fixed\" requires embedding.fixed_permutation");
        }
        if self.run.t_max < 0.0 {
            bail!("run.t_max must be nonnegative");
        }
        self.fit_model()?;
        Ok(())
    }

    pub fn fit_model(&self) -> anyhow::Result<FitModel> {
        Ok(match self.mitigation.zne.model.as_str() {
            "auto" => FitModel::Auto,
            "linear" => FitModel::Linear,
            "quadratic" => FitModel::Polynomial(2),
            "cubic" => FitModel::Polynomial(3),
            "exponential" => FitModel::Exponential,
            other => bail!("unknown zne model {other:?}"),
        })
    }

    pub fn filling(&self) -> usize {
        self.lattice.filling.unwrap_or(self.lattice.num_sites / 2)
    }
}
