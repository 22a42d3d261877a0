use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Everything echoed at the top of every output file.
pub struct Meta {
    pub command: String,
    pub seed: u64,
    pub config: String,
}

impl Meta {
    pub fn new<C: Serialize>(command: &str, seed: u64, config: &C) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config: serde_json::to_string(config).expect("configs serialize"),
        }
    }
}

/// CSV file with `#`-prefixed metadata lines before the header row.
pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(
        dir: &Path,
        name: &str,
        meta: &Meta,
        extra: &[(&str, String)],
        header: &[&str],
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let mut file = BufWriter::new(File::create(&path)?);
        writeln!(file, "# nsbandit {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(file, "# command: {}", meta.command)?;
        writeln!(file, "# seed: {}", meta.seed)?;
        writeln!(file, "# config: {}", meta.config)?;
        for (k, v) in extra {
            writeln!(file, "# {k}: {v}")?;
        }
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let record: Vec<String> = fields.into_iter().map(|f| f.to_string()).collect();
        self.writer.write_record(&record)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    fs::write(&path, text + "\n")?;
    Ok(path)
}
