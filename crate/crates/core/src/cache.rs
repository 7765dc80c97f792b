//! On-disk cache of potential coefficient tables.
//!
//! One JSON file per `(surface, H, theta, Nx, Ny)`. Floating-point values
//! are stored as the hex of their IEEE bits so a reload is bit-identical.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::CoefficientTable;
use crate::error::{Error, Result};
use crate::surface::{SurfaceLabel, SurfaceParams};

pub const CACHE_MAGIC: &str = "WENTE-FOURIER";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CacheKey {
    pub label: SurfaceLabel,
    pub mean_curvature: f64,
    pub theta_degrees: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CacheKey {
    pub fn new(p: &SurfaceParams, nx: usize, ny: usize) -> Self {
        Self {
            label: p.label,
            mean_curvature: p.mean_curvature,
            theta_degrees: p.theta_degrees,
            nx,
            ny,
        }
    }

    fn file_name(&self) -> String {
        format!(
            "w{}-{}_h{:016x}_t{:016x}_{}x{}.json",
            self.label.ell(),
            self.label.n(),
            self.mean_curvature.to_bits(),
            self.theta_degrees.to_bits(),
            self.nx,
            self.ny
        )
    }
}

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheRecord {
    magic: String,
    version: u32,
    surface: SurfaceLabel,
    mean_curvature: String,
    theta_degrees: String,
    nx: usize,
    ny: usize,
    stride_p: i64,
    stride_q: i64,
    a_max: usize,
    b_max: usize,
    sine_residual: String,
    values: Vec<String>,
}

/// Summary of one cache file, for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntryInfo {
    pub file: String,
    pub surface: SurfaceLabel,
    pub mean_curvature: f64,
    pub theta_degrees: f64,
    pub nx: usize,
    pub ny: usize,
    pub coefficients: usize,
}

#[derive(Debug, Clone)]
pub struct FourierCache {
    dir: PathBuf,
}

impl FourierCache {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn cache_err(path: &Path, message: impl Into<String>) -> Error {
        Error::Cache {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    fn read_record(path: &Path) -> Result<CacheRecord> {
        let text = fs::read_to_string(path)?;
        let record: CacheRecord =
            serde_json::from_str(&text).map_err(|e| Self::cache_err(path, e.to_string()))?;
        if record.magic != CACHE_MAGIC {
            return Err(Self::cache_err(path, "not a coefficient cache file"));
        }
        if record.version != CACHE_VERSION {
            return Err(Self::cache_err(
                path,
                format!("version {} (expected {CACHE_VERSION})", record.version),
            ));
        }
        Ok(record)
    }

    /// Stored table for `key`, or `None` if absent.
    pub fn load(&self, key: &CacheKey) -> Result<Option<(CoefficientTable, f64)>> {
        let path = self.dir.join(key.file_name());
        if !path.exists() {
            return Ok(None);
        }
        let record = Self::read_record(&path)?;
        let bad = |what: &str| Self::cache_err(&path, format!("malformed {what}"));
        if record.surface != key.label
            || record.nx != key.nx
            || record.ny != key.ny
            || unhex(&record.mean_curvature) != Some(key.mean_curvature)
            || unhex(&record.theta_degrees) != Some(key.theta_degrees)
        {
            return Err(Self::cache_err(&path, "contents do not match the file name"));
        }
        if record.stride_p < 1 || record.stride_q < 1 {
            return Err(bad("strides"));
        }
        if record.values.len() != (record.a_max + 1) * (record.b_max + 1) {
            return Err(bad("coefficient count"));
        }
        let values = record
            .values
            .iter()
            .map(|s| unhex(s).ok_or_else(|| bad("coefficient")))
            .collect::<Result<Vec<f64>>>()?;
        let residual = unhex(&record.sine_residual).ok_or_else(|| bad("residual"))?;
        log::debug!("cache hit {}", path.display());
        Ok(Some((
            CoefficientTable {
                stride_p: record.stride_p,
                stride_q: record.stride_q,
                a_max: record.a_max,
                b_max: record.b_max,
                values,
            },
            residual,
        )))
    }

    /// Writes the table atomically (temporary file, then rename).
    pub fn store(&self, key: &CacheKey, table: &CoefficientTable, sine_residual: f64) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let record = CacheRecord {
            magic: CACHE_MAGIC.into(),
            version: CACHE_VERSION,
            surface: key.label,
            mean_curvature: hex(key.mean_curvature),
            theta_degrees: hex(key.theta_degrees),
            nx: key.nx,
            ny: key.ny,
            stride_p: table.stride_p,
            stride_q: table.stride_q,
            a_max: table.a_max,
            b_max: table.b_max,
            sine_residual: hex(sine_residual),
            values: table.values.iter().map(|&v| hex(v)).collect(),
        };
        let path = self.dir.join(key.file_name());
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let text = serde_json::to_string(&record).map_err(|e| Self::cache_err(&path, e.to_string()))?;
        fs::write(&tmp, text)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// All readable cache files, sorted by file name.
    pub fn entries(&self) -> Result<Vec<CacheEntryInfo>> {
        let mut out = Vec::new();
        if !self.dir.exists() {
            return Ok(out);
        }
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Ok(record) = Self::read_record(&path) else {
                log::warn!("skipping unreadable cache file {}", path.display());
                continue;
            };
            out.push(CacheEntryInfo {
                file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                surface: record.surface,
                mean_curvature: unhex(&record.mean_curvature).unwrap_or(f64::NAN),
                theta_degrees: unhex(&record.theta_degrees).unwrap_or(f64::NAN),
                nx: record.nx,
                ny: record.ny,
                coefficients: record.values.len(),
            });
        }
        out.sort_by(|a, b| a.file.cmp(&b.file));
        Ok(out)
    }

    /// Removes every cache file; returns how many were deleted.
    pub fn clear(&self) -> Result<usize> {
        let entries = self.entries()?;
        for e in &entries {
            fs::remove_file(self.dir.join(&e.file))?;
        }
        Ok(entries.len())
    }
}
