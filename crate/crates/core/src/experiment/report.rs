use std::fs::File;
use std::path::Path;

use crate::error::Result;

/// Formats a real with 17 significant digits, enough to round-trip any `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV artifact with a header row and LF line endings.
pub(crate) struct CsvReport {
    writer: csv::Writer<File>,
}

impl CsvReport {
    pub(crate) fn create(path: &Path, header: &[String]) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(std::io::Error::from)?;
        writer.write_record(header).map_err(std::io::Error::from)?;
        Ok(Self { writer })
    }

    pub(crate) fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields).map_err(std::io::Error::from)?;
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

/// Header from string literals.
pub(crate) fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
