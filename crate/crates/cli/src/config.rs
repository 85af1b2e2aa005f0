//! Pipeline configuration: defaults, a flat `key = value` file, and
//! command-line overrides applied in that order.

use std::path::{Path, PathBuf};

use evbias_core::calibrate::DEFAULT_GATE;
use evbias_core::corpus::{normalize_section_key, CAREER};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub section: String,
    pub occupation: Option<String>,
    pub k: usize,
    pub min_count: u64,
    pub smoothing: bool,
    pub gate: f64,
    /// Skewed events per gender considered for template harvesting.
    pub window: usize,
    /// Sentences of leading context in each template.
    pub context: usize,
    pub names: Option<PathBuf>,
    pub swaps: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub review: Option<PathBuf>,
    pub out: PathBuf,
    /// Downsample each occupation to equal female/male document counts.
    pub balance: bool,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            annotations: None,
            lexicon: None,
            section: CAREER.to_string(),
            occupation: None,
            k: 5,
            min_count: 1,
            smoothing: false,
            gate: DEFAULT_GATE,
            window: 50,
            context: 2,
            names: None,
            swaps: None,
            attributes: None,
            stop_words: None,
            embeddings: None,
            review: None,
            out: PathBuf::from("out"),
            balance: false,
            seed: 0,
            threads: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "corpus",
    "annotations",
    "lexicon",
    "section",
    "occupation",
    "k",
    "min_count",
    "smoothing",
    "gate",
    "window",
    "context",
    "names",
    "swaps",
    "attributes",
    "stop_words",
    "embeddings",
    "review",
    "out",
    "balance",
    "seed",
    "threads",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key}: {value:?} is not a valid number"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{key}: {value:?} is not a boolean")),
    }
}

impl PipelineConfig {
    /// Sets one key. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), String> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let path = || {
            let p = PathBuf::from(value);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        match key.as_str() {
            "corpus" => self.corpus = Some(path()),
            "annotations" => self.annotations = Some(path()),
            "lexicon" => self.lexicon = Some(path()),
            "section" => self.section = normalize_section_key(value),
            "occupation" => self.occupation = (!value.is_empty()).then(|| value.to_string()),
            "k" => self.k = number(&key, value)?,
            "min_count" => self.min_count = number(&key, value)?,
            "smoothing" => self.smoothing = boolean(&key, value)?,
            "gate" => self.gate = number(&key, value)?,
            "window" => self.window = number(&key, value)?,
            "context" => self.context = number(&key, value)?,
            "names" => self.names = Some(path()),
            "swaps" => self.swaps = Some(path()),
            "attributes" => self.attributes = Some(path()),
            "stop_words" => self.stop_words = Some(path()),
            "embeddings" => self.embeddings = Some(path()),
            "review" => self.review = Some(path()),
            "out" => self.out = path(),
            "balance" => self.balance = boolean(&key, value)?,
            "seed" => self.seed = number(&key, value)?,
            "threads" => self.threads = Some(number(&key, value)?),
            other => return Err(format!("unknown configuration key {other:?} (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Applies a config file's `key = value` lines.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config file {}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("{}:{}: expected `key = value`", path.display(), i + 1));
                continue;
            };
            if let Err(e) = self.set(k, v, base) {
                errors.push(format!("{}:{}: {e}", path.display(), i + 1));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors.join("\n")))
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut errors = Vec::new();
        if self.k == 0 {
            errors.push("k must be at least 1".to_string());
        }
        if self.min_count == 0 {
            errors.push("min_count must be at least 1".into());
        }
        if self.gate.is_nan() || self.gate < 0.0 {
            errors.push(format!("gate must be non-negative, got {}", self.gate));
        }
        if self.window == 0 {
            errors.push("window must be at least 1".into());
        }
        if self.threads == Some(0) {
            errors.push("threads must be at least 1".into());
        }
        if self.section.is_empty() {
            errors.push("section must not be empty".into());
        }
        for (key, p) in [
            ("corpus", &self.corpus),
            ("annotations", &self.annotations),
            ("lexicon", &self.lexicon),
            ("names", &self.names),
            ("swaps", &self.swaps),
            ("attributes", &self.attributes),
            ("stop_words", &self.stop_words),
            ("embeddings", &self.embeddings),
            ("review", &self.review),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    errors.push(format!("{key}: {} does not exist", p.display()));
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errors.join("\n")))
        }
    }

    pub fn corpus_path(&self) -> Result<&Path, CliError> {
        self.corpus
            .as_deref()
            .ok_or_else(|| CliError::Validation("no corpus given (use --corpus or `corpus =` in the config file)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_pipeline_constants() {
        let c = PipelineConfig::default();
        assert_eq!((c.k, c.gate, c.window, c.section.as_str()), (5, 0.05, 50, "career"));
    }

    #[test]
    fn file_then_override() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "# comment\nk = 10\ngate=inf\nsection = Personal Life\ncorpus = data/c.jsonl\n").unwrap();
        let mut c = PipelineConfig::default();
        c.apply_file(&p).unwrap();
        assert_eq!(c.k, 10);
        assert!(c.gate.is_infinite());
        assert_eq!(c.section, "personal_life");
        assert_eq!(c.corpus.as_deref(), Some(dir.path().join("data/c.jsonl").as_path()));
        c.set("k", "3", None).unwrap();
        assert_eq!(c.k, 3);
    }

    #[test]
    fn bad_keys_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "k = five\nbogus = 1\nnot a pair\n").unwrap();
        let err = PipelineConfig::default().apply_file(&p).unwrap_err().to_string();
        assert!(err.contains(":1:") && err.contains(":2:") && err.contains(":3:"), "{err}");
    }

    #[test]
    fn validation() {
        let c = PipelineConfig { k: 0, gate: -1.0, corpus: Some("/nonexistent/x".into()), ..Default::default() };
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("k must") && err.contains("gate") && err.contains("does not exist"));
    }
}
