use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// The result of one command in every supported rendering.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub text: String,
    /// `None` when the command has no tabular form.
    pub csv: Option<String>,
    /// `false` makes the process exit with status 1.
    pub passed: bool,
}

impl Report {
    pub fn new(json: impl Serialize, text: impl Into<String>) -> Result<Report, CliError> {
        let json = serde_json::to_value(json).map_err(|e| CliError::Domain(format!("serialization failed: {e}")))?;
        Ok(Report { json, text: text.into(), csv: None, passed: true })
    }

    pub fn with_csv(mut self, csv: String) -> Report {
        self.csv = Some(csv);
        self
    }

    pub fn passed(mut self, passed: bool) -> Report {
        self.passed = passed;
        self
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        let mut out = match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("values always serialize"),
            Format::Text => self.text.trim_end().to_string(),
            Format::Csv => self
                .csv
                .clone()
                .ok_or_else(|| CliError::Input("this command has no CSV output".into()))?
                .trim_end()
                .to_string(),
        };
        out.push('\n');
        Ok(out)
    }
}

pub fn csv_table<R: AsRef<[String]>>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.as_ref().join(","));
        out.push('\n');
    }
    out
}
