//! Output envelopes. Every artifact carries the tool version, the resolved
//! configuration and the seed, so it can be regenerated.

use std::fs;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::{data_error, CliResult};

#[derive(Copy, Clone, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Serialize)]
pub struct Envelope {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: Value,
    seed: Option<u64>,
    result: Value,
}

impl Envelope {
    pub fn new(command: &'static str, config: &impl Serialize, seed: Option<u64>, result: Value) -> Self {
        Self {
            tool: "cpcox",
            version: cpcox::VERSION,
            command,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            seed,
            result,
        }
    }

    fn render(&self, format: Format, csv: impl FnOnce() -> String) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
                s.push_str(&format!("# config: {}\n", self.config));
                if let Some(seed) = self.seed {
                    s.push_str(&format!("# seed: {seed}\n"));
                }
                s.push_str(&csv());
                s
            }
        }
    }

    pub fn emit(&self, format: Format, csv: impl FnOnce() -> String, output: Option<&Path>) -> CliResult<()> {
        let text = self.render(format, csv);
        match output {
            Some(path) => fs::write(path, text).map_err(|e| data_error(format!("{}: {e}", path.display()))),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| data_error(format!("stdout: {e}"))),
        }
    }
}
