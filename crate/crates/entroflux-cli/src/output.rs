use std::fmt;

use entroflux::Extended;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or environment; exit code 2.
    Usage(String),
    /// A computation failed; exit code 3.
    Numeric(String),
    /// A verification check did not pass; exit code 3.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Failed(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Failed(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<entroflux::Error> for CliError {
    fn from(e: entroflux::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}

pub fn usage(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        format!("{:.16e}", 0.0)
    } else if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

pub fn ext(x: Extended) -> String {
    num(x.to_f64())
}

/// An in-memory CSV table written in row order.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.writer
            .write_record(fields.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}
