//! Newline-delimited JSON input and output.

use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::CliError;

/// Parsed records tagged with their 1-based line numbers; blank lines are
/// skipped.
pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CliError::at(path, line_no, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| CliError::at(path, line_no, e))?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Writes every float with 17 significant digits so values round-trip
/// exactly.
struct ExactFloats;

impl Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn to_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value
        .serialize(&mut ser)
        .expect("records serialize to JSON");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub struct Output {
    sink: Box<dyn Write>,
}

impl Output {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(io::BufWriter::new(
                std::fs::File::create(p)
                    .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { sink })
    }

    pub fn record<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        writeln!(self.sink, "{}", to_line(value)).map_err(CliError::io)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.sink.flush().map_err(CliError::io)
    }
}
