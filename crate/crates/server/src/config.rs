use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use dixit_core::agents::AgentSpec;
use serde::{Deserialize, Serialize};

use crate::session::LobbyConfig;
use crate::ServerError;

/// Environment variable naming the config file when none is given.
pub const CONFIG_ENV: &str = "DIXIT_SERVER_CONFIG";
pub const DEFAULT_CONFIG: &str = "server.toml";

fn default_bind() -> String {
    "127.0.0.1:8080".into()
}

/// Server config file. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub deck: PathBuf,
    pub lexicon: PathBuf,
    /// Built web client, served at `/`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_dir: Option<PathBuf>,
    /// Finished games are written here as transcript plus message log.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_dir: Option<PathBuf>,
    /// Table settings for every new game; `seed` is ignored here.
    #[serde(default)]
    pub lobby: LobbyConfig,
    /// Agent seated when a seat request names none.
    #[serde(default)]
    pub agent: AgentSpec,
}

impl ServerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServerError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ServerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut cfg: ServerConfig = toml::from_str(&text).map_err(|source| ServerError::Config {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.deck = base.join(&cfg.deck);
        cfg.lexicon = base.join(&cfg.lexicon);
        cfg.static_dir = cfg.static_dir.map(|d| base.join(d));
        cfg.transcript_dir = cfg.transcript_dir.map(|d| base.join(d));
        cfg.lobby.seed = None;
        Ok(cfg)
    }

    /// The explicit path if given, else `$DIXIT_SERVER_CONFIG`, else
    /// `server.toml`.
    pub fn resolve_path(explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| env::var_os(CONFIG_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG))
    }
}
