use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use aiq_core::{BankDocument, IntelligenceScale, QuestionBank, DEFAULT_TIMEOUT_MS};
use serde::{Deserialize, Serialize};

use crate::registry::Registry;

pub const DATA_DIR_ENV: &str = "AIQ_DATA_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("timeout_ms must be positive")]
    ZeroTimeout,
    #[error("{0} does not exist")]
    Missing(PathBuf),
    #[error(transparent)]
    Bank(#[from] aiq_core::BankError),
    #[error(transparent)]
    Registry(#[from] crate::registry::RegistryError),
}

/// Which seed a subject's paper is drawn with. By default every subject of
/// a cohort gets the same paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    #[serde(default = "default_seed")]
    pub default_seed: u64,
    /// Per-cohort seeds overriding `default_seed`.
    #[serde(default)]
    pub cohorts: BTreeMap<String, u64>,
}

fn default_seed() -> u64 {
    42
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy {
            default_seed: default_seed(),
            cohorts: BTreeMap::new(),
        }
    }
}

impl SeedPolicy {
    /// The seed for `cohort`, unless the caller overrides it for one subject.
    pub fn seed_for(&self, cohort: &str, subject_override: Option<u64>) -> u64 {
        subject_override
            .or_else(|| self.cohorts.get(cohort).copied())
            .unwrap_or(self.default_seed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    /// Question bank file; the built-in sample bank when absent.
    #[serde(default)]
    pub bank_path: Option<PathBuf>,
    /// Subject registry file; the built-in example registry when absent.
    #[serde(default)]
    pub registry_path: Option<PathBuf>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    #[serde(default = "default_listen")]
    pub listen: String,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from("aiq-data")
}

fn default_timeout_ms() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            data_dir: default_data_dir(),
            bank_path: None,
            registry_path: None,
            timeout_ms: default_timeout_ms(),
            seed_policy: SeedPolicy::default(),
            listen: default_listen(),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

impl HarnessConfig {
    /// Reads a config file (or starts from defaults) and applies
    /// `AIQ_DATA_DIR` when set.
    pub fn load(path: Option<&Path>, data_dir_env: Option<PathBuf>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|source| ConfigError::Parse {
                path: p.to_path_buf(),
                source,
            })?,
            None => HarnessConfig::default(),
        };
        if let Some(dir) = data_dir_env {
            config.data_dir = dir;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout_ms == 0 {
            return Err(ConfigError::ZeroTimeout);
        }
        Ok(())
    }

    /// Checks that every configured path exists, as service mode requires.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let paths = self.bank_path.iter().chain(self.registry_path.iter());
        for p in paths.chain(std::iter::once(&self.data_dir)) {
            if !p.exists() {
                return Err(ConfigError::Missing(p.clone()));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }

    pub fn load_bank(&self, scale: &IntelligenceScale) -> Result<QuestionBank, ConfigError> {
        let (text, path) = match &self.bank_path {
            Some(p) => (read(p)?, p.clone()),
            None => (
                crate::SAMPLE_BANK.to_string(),
                PathBuf::from("<sample bank>"),
            ),
        };
        let doc: BankDocument =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path, source })?;
        Ok(QuestionBank::load(doc, scale)?)
    }

    pub fn load_registry(&self) -> Result<Registry, ConfigError> {
        let (text, path) = match &self.registry_path {
            Some(p) => (read(p)?, p.clone()),
            None => (
                crate::SAMPLE_SUBJECTS.to_string(),
                PathBuf::from("<sample registry>"),
            ),
        };
        let entries =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path, source })?;
        Ok(Registry::new(entries)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = HarnessConfig::load(None, None).unwrap();
        assert_eq!(c.timeout(), Duration::from_secs(180));
        assert_eq!(c.seed_policy.seed_for("any", None), 42);
        assert_eq!(c.sessions_dir(), Path::new("aiq-data/sessions"));
    }

    #[test]
    fn env_overrides_data_dir() {
        let c = HarnessConfig::load(None, Some("/tmp/x".into())).unwrap();
        assert_eq!(c.data_dir, Path::new("/tmp/x"));
    }

    #[test]
    fn seed_policy_precedence() {
        let mut p = SeedPolicy::default();
        p.cohorts.insert("2014".into(), 7);
        assert_eq!(p.seed_for("2014", None), 7);
        assert_eq!(p.seed_for("2014", Some(9)), 9);
        assert_eq!(p.seed_for("other", None), 42);
    }

    #[test]
    fn zero_timeout_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"timeout_ms": 0}"#).unwrap();
        assert!(matches!(
            HarnessConfig::load(Some(&path), None),
            Err(ConfigError::ZeroTimeout)
        ));
        std::fs::write(&path, r#"{"timeout": 5}"#).unwrap();
        assert!(matches!(
            HarnessConfig::load(Some(&path), None),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn sample_bank_loads() {
        let scale = IntelligenceScale::default_scale();
        let bank = HarnessConfig::default().load_bank(&scale).unwrap();
        assert_eq!(bank.len(), 60);
        assert!(!bank.is_conforming());
    }
}
