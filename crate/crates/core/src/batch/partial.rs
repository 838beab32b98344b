use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use super::{list_meshes, mask_for, read_mask_indices, sample_seed, with_pool};
use crate::degrade::{generate_partial, HoleSpec};
use crate::obj::{load_mesh, save_mesh};

#[derive(Debug, Clone)]
pub struct GenPartialOptions {
    pub holes: usize,
    pub fraction: f64,
    pub seed: u64,
    pub mask: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for GenPartialOptions {
    fn default() -> Self {
        let spec = HoleSpec::default();
        Self {
            holes: spec.holes,
            fraction: spec.fraction,
            seed: spec.seed,
            mask: None,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestRow {
    pub id: String,
    pub seed: u64,
    pub vertices_in: Option<usize>,
    pub vertices_out: Option<usize>,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct GenPartialSummary {
    pub rows: Vec<ManifestRow>,
    pub manifest: PathBuf,
}

impl GenPartialSummary {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }
}

pub const MANIFEST_NAME: &str = "partial_manifest.csv";

/// Cuts holes into every mesh of `input`, writing bundles with the same
/// stems to `output` plus a manifest of per-sample seeds.
pub fn gen_partial(input: &Path, output: &Path, options: &GenPartialOptions) -> Result<GenPartialSummary> {
    let meshes = list_meshes(input)?;
    if meshes.is_empty() {
        log::warn!("no .obj files found in {}", input.display());
    }
    fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let mask = options.mask.as_deref().map(read_mask_indices).transpose()?;
    let items: Vec<(String, PathBuf)> = meshes.into_iter().collect();
    let rows = with_pool(options.jobs, || {
        items
            .par_iter()
            .map(|(id, path)| {
                let seed = sample_seed(options.seed, id);
                let mut row = ManifestRow {
                    id: id.clone(),
                    seed,
                    vertices_in: None,
                    vertices_out: None,
                    status: "ok".into(),
                };
                let result = (|| -> Result<()> {
                    let mesh = load_mesh(path)?.mesh;
                    row.vertices_in = Some(mesh.vertex_count());
                    let spec = HoleSpec {
                        holes: options.holes,
                        fraction: options.fraction,
                        seed,
                        mask: mask.as_deref().map(|m| mask_for(m, mesh.vertex_count())).transpose()?,
                    };
                    let partial = generate_partial(&mesh, &spec)?;
                    row.vertices_out = Some(partial.vertex_count());
                    save_mesh(&partial, &output.join(format!("{id}.obj")))?;
                    Ok(())
                })();
                if let Err(e) = result {
                    log::error!("{id}: {e:#}");
                    row.status = format!("error: {e:#}");
                }
                row
            })
            .collect::<Vec<_>>()
    })?;
    let manifest = output.join(MANIFEST_NAME);
    let mut writer = csv::Writer::from_path(&manifest)?;
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(GenPartialSummary { rows, manifest })
}
