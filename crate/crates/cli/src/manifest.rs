//! Run manifests: every file the tool writes is accompanied by
//! `<path>.manifest.json` holding the resolved configuration, so identical
//! manifests (up to timing) imply identical outputs.

use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::{runtime, CliResult};

#[derive(Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub duration_ms: u128,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        seed: u64,
        config: serde_json::Value,
        duration: Duration,
    ) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            duration_ms: duration.as_millis(),
        }
    }

    /// Writes the manifest next to `output`, as `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> CliResult {
        let mut name = output.as_os_str().to_os_string();
        name.push(".manifest.json");
        let body = serde_json::to_string_pretty(self).map_err(runtime)?;
        std::fs::write(&name, body + "\n").map_err(runtime)
    }
}
