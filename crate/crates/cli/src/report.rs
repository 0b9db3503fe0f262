use std::fs;
use std::path::Path;

use agmon_core::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const PASS: u8 = 0;
pub const VALIDATION_FAILURE: u8 = 2;
pub const CERTIFICATE_FAILURE: u8 = 3;
pub const IO_FAILURE: u8 = 4;

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Expr(_) => IO_FAILURE,
        Error::Chain(_) | Error::Hypothesis(_) | Error::NonSymmetric { .. } => VALIDATION_FAILURE,
        _ => CERTIFICATE_FAILURE,
    }
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub config: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub exit_code: u8,
    pub passed: bool,
    pub warnings: Vec<String>,
    pub report: T,
}

pub fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(file), text + "\n")?;
    Ok(())
}

pub fn write_rows<T: Serialize>(dir: &Path, file: &str, rows: &[T]) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(file))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(dir: &Path, file: &str) -> Result<fs::File, Error> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(file))?)
}
