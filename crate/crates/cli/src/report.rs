//! Plain-text run reports.

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportSection {
    pub title: String,
    pub lines: Vec<String>,
}

impl ReportSection {
    pub fn new(title: &str) -> Self {
        Self { title: title.to_string(), lines: Vec::new() }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.lines.push(text.into());
    }
}

/// Renders the sections as UTF-8 text; refuses to write an empty report.
pub fn emit_report(sections: &[ReportSection]) -> Result<String> {
    if sections.is_empty() {
        return Err(CliError::IoFailure("no results to report".into()));
    }
    let mut out = String::new();
    for s in sections {
        out.push_str(&format!("== {} ==\n", s.title));
        for l in &s.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}
