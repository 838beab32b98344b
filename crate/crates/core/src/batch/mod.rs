//! Batch engine behind the command-line tool: partial-data generation, σ
//! calibration, evaluation of submissions and report comparison.
//!
//! Every per-sample random stream is seeded with `base seed ^ stable_hash(id)`
//! so adding or removing samples never shifts another sample's randomness,
//! and outputs are written in sorted sample order after all work finishes,
//! which keeps them byte-identical for any worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::mesh::RegionMask;

pub mod calibrate;
pub mod eval;
pub mod partial;
pub mod report;

pub use calibrate::{calibrate, CalibrationOptions, CalibrationOutcome};
pub use eval::{eval, AggregateReport, BatchManifest, EvalOptions, SampleRow, SampleStatus};
pub use partial::{gen_partial, GenPartialOptions, GenPartialSummary};
pub use report::{report, ReportOutput};

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn stable_hash(id: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in id.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

pub fn sample_seed(base: u64, id: &str) -> u64 {
    base ^ stable_hash(id)
}

/// `*.obj` files directly inside `dir`, keyed by file stem.
pub fn list_meshes(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        let is_obj = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("obj"));
        if path.is_file() && is_obj {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path.clone());
            }
        }
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `jobs` workers (0 = one per core).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

/// Eligible vertex indices, one per line; blank lines and `#` comments are
/// skipped.
pub fn read_mask_indices(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading mask {}", path.display()))?;
    let mut indices = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.parse() {
            Ok(v) => indices.push(v),
            Err(_) => bail!("{}:{}: bad vertex index {line:?}", path.display(), i + 1),
        }
    }
    Ok(indices)
}

pub fn mask_for(indices: &[usize], vertex_count: usize) -> Result<RegionMask> {
    Ok(RegionMask::from_indices(vertex_count, indices)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(""), 0xcbf29ce484222325);
        assert_eq!(stable_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(stable_hash("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn mask_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        fs::write(&p, "# eligible\n3\n\n7\r\n1\n").unwrap();
        assert_eq!(read_mask_indices(&p).unwrap(), vec![3, 7, 1]);
        fs::write(&p, "3\nx\n").unwrap();
        assert!(read_mask_indices(&p).is_err());
    }
}
