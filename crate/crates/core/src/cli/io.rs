use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::learner::Pool;
use crate::synthdata::{read_sample_table, write_samples, LabeledSample};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn load_samples(path: &Path) -> Result<Vec<LabeledSample>> {
    Ok(load_sample_table(path)?.1)
}

/// Samples and the feature count declared by the header.
pub fn load_sample_table(path: &Path) -> Result<(usize, Vec<LabeledSample>)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_sample_table(BufReader::new(f))
}

pub fn save_samples(path: &Path, dim: usize, samples: &[LabeledSample]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_samples(BufWriter::new(f), dim, samples)
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    save_text(path, &text)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Loads a pool snapshot and checks its invariants.
pub fn load_pool(path: &Path) -> Result<Pool> {
    let pool: Pool = load_json(path)?;
    pool.validate()?;
    Ok(pool)
}
