//! Output envelopes: every file carries the schema tag, the toolkit version
//! and the resolved run configuration.

use std::path::{Path, PathBuf};

use serde::Serialize;

use bergman_osc::anchors::{write_atomic, SCHEMA};

use crate::config::{Format, RunConfig};

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: &'a T,
}

pub fn json_text<T: Serialize>(cfg: &RunConfig, result: &T) -> String {
    let env = Envelope {
        schema: SCHEMA,
        version: bergman_osc::VERSION,
        config: cfg,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("results serialize");
    s.push('\n');
    s
}

/// CSV body behind a `#` line holding schema, version and the config as JSON.
pub fn csv_text(cfg: &RunConfig, body: &str) -> String {
    let config = serde_json::to_string(cfg).expect("config serializes");
    format!("# {SCHEMA} {} {config}\n{body}", bergman_osc::VERSION)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Files written for one command, relative to the `--out` prefix.
pub struct Outputs<'a> {
    pub cfg: &'a RunConfig,
    pub written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self { cfg, written: Vec::new() }
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, result: &T) -> bergman_osc::Result<()> {
        if let Some(prefix) = &self.cfg.out {
            if self.cfg.format != Format::Csv {
                let path = with_suffix(prefix, suffix);
                write_atomic(&path, json_text(self.cfg, result).as_bytes())?;
                self.written.push(path);
            }
        }
        Ok(())
    }

    pub fn csv(&mut self, suffix: &str, body: &str) -> bergman_osc::Result<()> {
        if let Some(prefix) = &self.cfg.out {
            if self.cfg.format != Format::Json {
                let path = with_suffix(prefix, suffix);
                write_atomic(&path, csv_text(self.cfg, body).as_bytes())?;
                self.written.push(path);
            }
        }
        Ok(())
    }
}
