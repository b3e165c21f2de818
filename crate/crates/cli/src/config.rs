//! Pipeline configuration file. Every section is optional and overlays the
//! library defaults for the declared grid size, so a minimal config is just
//! `{"dims": [12, 16, 14]}`. Unknown keys are rejected at every level: a
//! typo'd knob must fail loudly, not silently fall back to a default.

use std::path::{Path, PathBuf};

use dcvae::{DcvaeConfig, Mode};
use design_gen::{InterfaceSpec, NoiseParams};
use design_opt::FnetConfig;
use serde::{Deserialize, Serialize};
use voxel_core::Dims;

use crate::errors::{At, CliError};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "VOXELFORGE_SEED";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Grid extents `[j, k, l]`.
    pub dims: [u32; 3],
    #[serde(default)]
    pub noise: NoiseSection,
    /// Full interface layout; omitted means the built-in layout for `dims`.
    #[serde(default)]
    pub interfaces: Option<InterfaceSpec>,
    #[serde(default)]
    pub surrogates: SurrogateSection,
    #[serde(default)]
    pub dcvae: DcvaeSection,
    #[serde(default)]
    pub fnet: FnetSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).at(path)?;
        let cfg: PipelineConfig = serde_json::from_str(&text).at(path)?;
        cfg.dims().at(path)?;
        Ok(cfg)
    }

    pub fn dims(&self) -> Result<Dims, CliError> {
        let [j, k, l] = self.dims;
        Dims::new(j, k, l).map_err(|e| CliError::validation(format!("dims: {e}")))
    }

    pub fn interface_spec(&self, dims: Dims) -> Result<InterfaceSpec, CliError> {
        match &self.interfaces {
            Some(spec) => Ok(spec.clone()),
            None => Ok(InterfaceSpec::default_for(dims)?),
        }
    }
}

/// Noise overrides; the generator seed always comes from the resolved run
/// seed, never from a config field, so one knob controls reproducibility.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub octaves: Option<u32>,
    pub base_frequency: Option<f64>,
    pub lacunarity: Option<f64>,
    pub persistence: Option<f64>,
    pub fill_threshold: Option<f64>,
}

impl NoiseSection {
    pub fn build(&self, dims: Dims, seed: u64) -> NoiseParams {
        let mut p = NoiseParams::defaults_for(dims, seed);
        if let Some(v) = self.octaves {
            p.octaves = v;
        }
        if let Some(v) = self.base_frequency {
            p.base_frequency = v;
        }
        if let Some(v) = self.lacunarity {
            p.lacunarity = v;
        }
        if let Some(v) = self.persistence {
            p.persistence = v;
        }
        if let Some(v) = self.fill_threshold {
            p.fill_threshold = v;
        }
        p
    }
}

/// The condition evaluators run with fixed settings shared by every stage;
/// the section exists so configs that mention it stay schema-checked.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateSection {}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcvaeSection {
    pub encoder_widths: Option<Vec<usize>>,
    pub latent_dim: Option<usize>,
    pub branch_widths: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub mode: Option<Mode>,
}

impl DcvaeSection {
    pub fn build(&self, dims: Dims, seed: u64) -> DcvaeConfig {
        let mut c = DcvaeConfig::desk_scale(dims, seed);
        if let Some(v) = &self.encoder_widths {
            c.encoder_widths = v.clone();
        }
        if let Some(v) = self.latent_dim {
            c.latent_dim = v;
        }
        if let Some(v) = &self.branch_widths {
            c.branch_widths = v.clone();
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        if let Some(v) = self.mode {
            c.mode = v;
        }
        c
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FnetSection {
    pub hidden_widths: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
}

impl FnetSection {
    pub fn build(&self, latent_dim: usize, seed: u64) -> FnetConfig {
        let mut c = FnetConfig::defaults(latent_dim, seed);
        if let Some(v) = &self.hidden_widths {
            c.hidden_widths = v.clone();
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.lr {
            c.lr = v;
        }
        c
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Number of schedule rows decoded during a sweep.
    pub q: Option<usize>,
    /// Tail fraction of the sweep searched for the optimum.
    pub pmin: Option<f64>,
}

/// Artifact locations used when the matching command flag is omitted. All
/// relative entries hang off `root`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub root: PathBuf,
    pub dataset: String,
    pub labels: String,
    pub stats: String,
    pub model: String,
    pub sweep: String,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            root: PathBuf::from("."),
            dataset: "dataset".into(),
            labels: "labels.jsonl".into(),
            stats: "stats.json".into(),
            model: "model".into(),
            sweep: "sweep".into(),
        }
    }
}

impl PathsSection {
    pub fn dataset_dir(&self) -> PathBuf {
        self.root.join(&self.dataset)
    }

    pub fn labels_file(&self) -> PathBuf {
        self.root.join(&self.labels)
    }

    pub fn stats_file(&self) -> PathBuf {
        self.root.join(&self.stats)
    }

    pub fn model_dir(&self) -> PathBuf {
        self.root.join(&self.model)
    }

    pub fn sweep_dir(&self) -> PathBuf {
        self.root.join(&self.sweep)
    }
}

/// Seed precedence: `--seed` flag, then the config's `seed`, then the
/// `VOXELFORGE_SEED` environment variable, then 42.
pub fn resolve_seed(flag: Option<u64>, config: Option<&PipelineConfig>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = config.and_then(|c| c.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.parse().map_err(|_| {
            CliError::validation(format!("{SEED_ENV} must be an unsigned integer, got {text:?}"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Loads the config when a path was given; commands that can run without one
/// fall back to flag-only operation.
pub fn maybe_load(path: Option<&Path>) -> Result<Option<PipelineConfig>, CliError> {
    path.map(PipelineConfig::load).transpose()
}

/// First present value wins: explicit flag, then the config-derived default.
pub fn pick_path(
    flag: Option<PathBuf>,
    config: Option<&PipelineConfig>,
    from_paths: impl Fn(&PathsSection) -> PathBuf,
    what: &str,
) -> Result<PathBuf, CliError> {
    if let Some(p) = flag {
        return Ok(p);
    }
    if let Some(cfg) = config {
        return Ok(from_paths(&cfg.paths));
    }
    Err(CliError::validation(format!("missing --{what} (no config supplies a default)")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<PipelineConfig, serde_json::Error> {
        serde_json::from_str(text)
    }

    #[test]
    fn minimal_config_gets_full_defaults() {
        let cfg = parse(r#"{"dims": [12, 16, 14]}"#).unwrap();
        let dims = cfg.dims().unwrap();
        let noise = cfg.noise.build(dims, 7);
        assert_eq!(noise.octaves, 4);
        assert_eq!(noise.seed, 7);

        let dc = cfg.dcvae.build(dims, 7);
        assert_eq!(dc.latent_dim, 8);
        assert_eq!(dc.mode, Mode::DeepInput);

        assert_eq!(cfg.paths.dataset_dir(), PathBuf::from("./dataset"));
        assert!(cfg.sweep.q.is_none());
    }

    #[test]
    fn section_overrides_land_in_the_built_configs() {
        let cfg = parse(
            r#"{
                "dims": [8, 8, 8],
                "noise": {"octaves": 2, "fill_threshold": 0.1},
                "dcvae": {"latent_dim": 4, "epochs": 3, "mode": "fc-baseline"},
                "fnet": {"epochs": 11, "hidden_widths": [8, 8]},
                "sweep": {"q": 25, "pmin": 0.5},
                "paths": {"root": "/work", "dataset": "pop"},
                "seed": 99
            }"#,
        )
        .unwrap();
        let dims = cfg.dims().unwrap();

        let noise = cfg.noise.build(dims, 99);
        assert_eq!(noise.octaves, 2);
        assert_eq!(noise.fill_threshold, 0.1);
        // Unset knobs keep their dims-derived defaults.
        assert_eq!(noise.lacunarity, 2.0);

        let dc = cfg.dcvae.build(dims, 99);
        assert_eq!(dc.latent_dim, 4);
        assert_eq!(dc.epochs, 3);
        assert_eq!(dc.mode, Mode::FcBaseline);

        let fc = cfg.fnet.build(dc.latent_dim, 99);
        assert_eq!(fc.epochs, 11);
        assert_eq!(fc.hidden_widths, vec![8, 8]);
        assert_eq!(fc.latent_dim, 4);

        assert_eq!(cfg.sweep.q, Some(25));
        assert_eq!(cfg.paths.dataset_dir(), PathBuf::from("/work/pop"));
        assert_eq!(cfg.paths.labels_file(), PathBuf::from("/work/labels.jsonl"));
        assert_eq!(cfg.seed, Some(99));
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        assert!(parse(r#"{"dims": [4, 4, 4], "dim": 3}"#).is_err());
        assert!(parse(r#"{"dims": [4, 4, 4], "noise": {"octave": 2}}"#).is_err());
        assert!(parse(r#"{"dims": [4, 4, 4], "dcvae": {"latentdim": 2}}"#).is_err());
        assert!(parse(r#"{"dims": [4, 4, 4], "surrogates": {"tol": 1e-9}}"#).is_err());
        assert!(parse(r#"{"dims": [4, 4, 4], "paths": {"toot": "x"}}"#).is_err());
    }

    #[test]
    fn seed_precedence_prefers_flag_then_config() {
        let cfg = parse(r#"{"dims": [4, 4, 4], "seed": 5}"#).unwrap();
        assert_eq!(resolve_seed(Some(10), Some(&cfg)).unwrap(), 10);
        assert_eq!(resolve_seed(None, Some(&cfg)).unwrap(), 5);
        // Environment fallback is exercised end-to-end in the binary tests;
        // mutating the process environment here would race other tests.
    }

    #[test]
    fn zero_dims_fail_validation() {
        let cfg = parse(r#"{"dims": [0, 4, 4]}"#).unwrap();
        assert!(cfg.dims().is_err());
    }

    #[test]
    fn pick_path_reports_the_missing_flag() {
        let err = pick_path(None, None, |p| p.dataset_dir(), "dataset").unwrap_err();
        assert!(err.msg.contains("--dataset"));
        let got = pick_path(Some(PathBuf::from("x")), None, |p| p.dataset_dir(), "dataset");
        assert_eq!(got.unwrap(), PathBuf::from("x"));
    }
}
