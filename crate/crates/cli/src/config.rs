use std::path::{Path, PathBuf};

use msgnav_core::reasoning::{HttpConfig, MockScript, DEFAULT_API_KEY_ENV};
use msgnav_core::sim::EpisodeParams;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{read_text, CliError};

/// Version of the run configuration document.
pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LastMileConfig {
    pub variants: usize,
    pub seed: u64,
}

/// Settings for an `http:` reasoner. The endpoint comes from the reasoner string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HttpOptions {
    pub model: Option<String>,
    pub api_key_env: String,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for HttpOptions {
    fn default() -> Self {
        Self { model: None, api_key_env: DEFAULT_API_KEY_ENV.to_string(), max_retries: 3, backoff_ms: 500, timeout_secs: 60 }
    }
}

/// Everything `msgnav run` needs. Built from flags, then overlaid with the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    #[serde(default)]
    pub scenes: Vec<PathBuf>,
    #[serde(default)]
    pub last_mile: Option<LastMileConfig>,
    /// Goal index within each scene; every goal when absent.
    #[serde(default)]
    pub goal: Option<usize>,
    /// One agent per scene that keeps its graph, vocabulary and memory across goals.
    #[serde(default)]
    pub lifelong: bool,
    /// `oracle`, `mock:<script.json>` or `http:<endpoint>`.
    pub reasoner: String,
    #[serde(default)]
    pub http: HttpOptions,
    pub out: PathBuf,
    #[serde(default)]
    pub episode: EpisodeParams,
}

#[derive(Clone, Debug)]
pub enum ReasonerSpec {
    Oracle,
    Mock(MockScript),
    Http(HttpConfig),
}

impl ReasonerSpec {
    pub fn parse(spec: &str, http: &HttpOptions) -> Result<Self, CliError> {
        let bad = |m: &str| CliError::Config(format!("reasoner {spec:?}: {m}"));
        match spec.split_once(':') {
            None if spec == "oracle" => Ok(ReasonerSpec::Oracle),
            Some(("mock", path)) if !path.is_empty() => MockScript::load(Path::new(path))
                .map(ReasonerSpec::Mock)
                .map_err(|e| CliError::config(format!("reasoner {spec:?}"), e)),
            Some(("http", endpoint)) if !endpoint.is_empty() => {
                let model = http.model.clone().ok_or_else(|| bad("an http reasoner needs a model (--model)"))?;
                Ok(ReasonerSpec::Http(HttpConfig {
                    endpoint: endpoint.to_string(),
                    model,
                    api_key_env: http.api_key_env.clone(),
                    max_retries: http.max_retries,
                    backoff_ms: http.backoff_ms,
                    timeout_secs: http.timeout_secs,
                    transcript: None,
                }))
            }
            _ => Err(bad("expected oracle, mock:<script> or http:<endpoint>")),
        }
    }
}

/// Recursively overlays `top` onto `base`; objects merge key by key, anything else replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Defaults, then `flags`, then the config file at `file`.
pub fn resolve(flags: Map<String, Value>, file: Option<&Path>) -> Result<RunConfig, CliError> {
    let mut doc = serde_json::json!({
        "format_version": CONFIG_FORMAT_VERSION,
        "reasoner": "oracle",
        "out": "msgnav-out",
        "http": HttpOptions::default(),
        "episode": EpisodeParams::default(),
    });
    merge(&mut doc, Value::Object(flags));
    if let Some(path) = file {
        let text = read_text(path)?;
        let overlay: Value = serde_json::from_str(&text).map_err(|e| CliError::config(path.display(), e))?;
        if !overlay.is_object() {
            return Err(CliError::Config(format!("{}: config must be a JSON object", path.display())));
        }
        merge(&mut doc, overlay);
    }
    let config: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::config("invalid configuration", e))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(CliError::Config(format!("unsupported config format_version {}", self.format_version)));
        }
        match (self.scenes.is_empty(), &self.last_mile) {
            (true, None) => return Err(CliError::Config("no scenes given (--scene or --last-mile)".into())),
            (false, Some(_)) => return Err(CliError::Config("--scene and --last-mile are exclusive".into())),
            (_, Some(lm)) if lm.variants == 0 => return Err(CliError::Config("--last-mile needs at least 1 variant".into())),
            _ => {}
        }
        if self.lifelong && self.goal.is_some() {
            return Err(CliError::Config("--lifelong runs every goal; drop --goal".into()));
        }
        self.episode.validate().map_err(|e| CliError::config("episode parameters", e))
    }
}
