//! CSV emission helpers: `#`-prefixed metadata lines, a fixed header, then
//! data rows with floats at 12 significant digits.

use std::io::{self, Write};

/// Format a float with 12 significant digits (scientific notation), the
/// stable on-disk representation for all data columns.
pub fn fmt_float(value: f64) -> String {
    if value == 0.0 {
        return "0.00000000000e0".to_string();
    }
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{value:.11e}")
}

/// Buffered CSV writer enforcing the metadata/header/rows layout.
pub struct CsvWriter<W: Write> {
    out: W,
    header_written: bool,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W) -> Self {
        Self {
            out,
            header_written: false,
        }
    }

    /// A `# `-prefixed metadata line; only valid before the header.
    pub fn metadata(&mut self, line: &str) -> io::Result<()> {
        assert!(!self.header_written, "metadata must precede the header");
        writeln!(self.out, "# {line}")
    }

    pub fn header(&mut self, columns: &[&str]) -> io::Result<()> {
        assert!(!self.header_written, "header written twice");
        self.header_written = true;
        writeln!(self.out, "{}", columns.join(","))
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        assert!(self.header_written, "rows must follow the header");
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}
