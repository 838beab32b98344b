use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{list_meshes, sample_seed, with_pool};
use crate::bvh::build_index;
use crate::degrade::{add_mesh_texture_noise, add_shape_noise, fill_holes_baseline, generate_partial, HoleSpec, NoiseMode};
use crate::measure::directed_measure;
use crate::mesh::TexturedMesh;
use crate::obj::load_mesh;
use crate::scoring::{calibrate_sigma, ScoreConfig, ScoreError, DEFAULT_SAMPLES};

/// Synthetic degradations of a ground-truth mesh used as calibration anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Identity,
    Partial,
    HoleFilled,
    GlobalShapeNoise,
    LocalShapeNoise,
    TextureNoise,
}

impl Baseline {
    pub const ALL: [Baseline; 6] = [
        Baseline::Identity,
        Baseline::Partial,
        Baseline::HoleFilled,
        Baseline::GlobalShapeNoise,
        Baseline::LocalShapeNoise,
        Baseline::TextureNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Identity => "identity",
            Baseline::Partial => "partial",
            Baseline::HoleFilled => "hole_filled",
            Baseline::GlobalShapeNoise => "global_shape_noise",
            Baseline::LocalShapeNoise => "local_shape_noise",
            Baseline::TextureNoise => "texture_noise",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| anyhow!("unknown baseline {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Shape,
    Texture,
}

/// "Baseline `baseline` should score `score` on `channel`", written
/// `channel:baseline=score` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub channel: Channel,
    pub baseline: Baseline,
    pub score: f64,
}

impl FromStr for Target {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lhs, score) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("target {s:?} is not of the form channel:baseline=score"))?;
        let (channel, baseline) = lhs
            .split_once(':')
            .ok_or_else(|| anyhow!("target {s:?} is not of the form channel:baseline=score"))?;
        let channel = match channel.trim() {
            "shape" => Channel::Shape,
            "texture" => Channel::Texture,
            other => bail!("unknown channel {other:?} (expected shape or texture)"),
        };
        let score: f64 = score.trim().parse().with_context(|| format!("bad score in target {s:?}"))?;
        if !(score > 0.0 && score < 1.0) {
            bail!("target score must lie strictly between 0 and 1, got {score}");
        }
        Ok(Target {
            channel,
            baseline: baseline.trim().parse()?,
            score,
        })
    }
}

/// Degradation levels used to build the baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineParams {
    pub holes: HoleSpec,
    /// Per-coordinate vertex noise, meters.
    pub shape_noise: f64,
    /// Radius of the regions displaced by local shape noise, meters.
    pub local_radius: f64,
    pub local_regions: usize,
    /// Per-channel texel noise, RGB units in `[0, 1]`.
    pub texture_noise: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            holes: HoleSpec::default(),
            shape_noise: 0.005,
            local_radius: 0.1,
            local_regions: 5,
            texture_noise: 0.05,
        }
    }
}

/// Builds one baseline from a ground-truth mesh. All randomness derives
/// from `seed`.
pub fn build_baseline(gt: &TexturedMesh, baseline: Baseline, params: &BaselineParams, seed: u64) -> Result<TexturedMesh> {
    let partial = || {
        let spec = HoleSpec {
            seed,
            ..params.holes.clone()
        };
        generate_partial(gt, &spec)
    };
    let mesh = match baseline {
        Baseline::Identity => gt.clone(),
        Baseline::Partial => partial()?,
        Baseline::HoleFilled => fill_holes_baseline(&partial()?)?,
        Baseline::GlobalShapeNoise => add_shape_noise(gt, params.shape_noise, NoiseMode::Global, seed)?,
        Baseline::LocalShapeNoise => add_shape_noise(
            gt,
            params.shape_noise,
            NoiseMode::Local {
                radius: params.local_radius,
                regions: params.local_regions,
            },
            seed,
        )?,
        Baseline::TextureNoise => add_mesh_texture_noise(gt, params.texture_noise, seed)?,
    };
    Ok(mesh)
}

/// Symmetrised distances of a baseline: the mean of the two directed mean
/// distances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BaselineDistance {
    pub shape: f64,
    pub texture: f64,
}

pub fn measure_baseline(gt: &TexturedMesh, degraded: &TexturedMesh, samples: usize, seed: u64) -> Result<BaselineDistance> {
    let config = ScoreConfig {
        seed,
        ..ScoreConfig::new(1.0, 1.0)
    };
    let gt_index = build_index(gt);
    let degraded_index = build_index(degraded);
    let xy = directed_measure(degraded, &gt_index, samples, config.seed_xy())?;
    let yx = directed_measure(gt, &degraded_index, samples, config.seed_yx())?;
    Ok(BaselineDistance {
        shape: (xy.mean_shape_distance + yx.mean_shape_distance) / 2.0,
        texture: (xy.mean_texture_distance + yx.mean_texture_distance) / 2.0,
    })
}

/// Averages baseline distances over a set of ground-truth meshes. Each mesh
/// uses its own seed so results do not depend on evaluation order.
pub fn measure_baselines(
    meshes: &[(String, TexturedMesh)],
    baselines: &[Baseline],
    params: &BaselineParams,
    samples: usize,
    seed: u64,
) -> Result<BTreeMap<Baseline, BaselineDistance>> {
    if meshes.is_empty() {
        bail!("no meshes to calibrate on");
    }
    let per_mesh = meshes
        .par_iter()
        .map(|(id, gt)| {
            let seed = sample_seed(seed, id);
            baselines
                .iter()
                .map(|&b| {
                    let degraded = build_baseline(gt, b, params, seed).with_context(|| format!("{id}: building {b}"))?;
                    measure_baseline(gt, &degraded, samples, seed).with_context(|| format!("{id}: measuring {b}"))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_mesh.len() as f64;
    Ok(baselines
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let sum = per_mesh.iter().fold(BaselineDistance::default(), |acc, m| BaselineDistance {
                shape: acc.shape + m[i].shape,
                texture: acc.texture + m[i].texture,
            });
            (
                b,
                BaselineDistance {
                    shape: sum.shape / n,
                    texture: sum.texture / n,
                },
            )
        })
        .collect())
}

/// Measured distances below this are treated as exact matches.
pub const ZERO_DISTANCE: f64 = 1e-12;

fn fit_channel(measurements: &BTreeMap<Baseline, BaselineDistance>, targets: &[Target], channel: Channel) -> Result<Option<f64>> {
    let mut pairs = Vec::new();
    for t in targets.iter().filter(|t| t.channel == channel) {
        let m = measurements
            .get(&t.baseline)
            .ok_or_else(|| anyhow!("baseline {} was not measured", t.baseline))?;
        let d = match channel {
            Channel::Shape => m.shape,
            Channel::Texture => m.texture,
        };
        pairs.push((d, t.score));
    }
    if pairs.is_empty() {
        return Ok(None);
    }
    // A baseline that reproduces the ground truth still measures rounding
    // noise rather than exactly 0.
    for pair in &mut pairs {
        if pair.0 < ZERO_DISTANCE {
            pair.0 = 0.0;
        }
    }
    match calibrate_sigma(&pairs) {
        Ok(sigma) => Ok(Some(sigma)),
        Err(ScoreError::ZeroDistance) => bail!(
            "cannot calibrate from zero distances: a {} target baseline matches the ground truth exactly",
            if channel == Channel::Shape { "shape" } else { "texture" }
        ),
        Err(e) => Err(e.into()),
    }
}

/// Shape and texture σ fitted to the targets. The texture σ is `None` when
/// there are no texture targets.
pub fn fit_sigmas(measurements: &BTreeMap<Baseline, BaselineDistance>, targets: &[Target]) -> Result<(f64, Option<f64>)> {
    let shape = fit_channel(measurements, targets, Channel::Shape)?.ok_or_else(|| anyhow!("no shape calibration target given"))?;
    let texture = fit_channel(measurements, targets, Channel::Texture)?;
    Ok((shape, texture))
}

pub fn default_targets(texture: bool) -> Vec<Target> {
    let mut targets = vec![Target {
        channel: Channel::Shape,
        baseline: Baseline::HoleFilled,
        score: 0.5,
    }];
    if texture {
        targets.push(Target {
            channel: Channel::Texture,
            baseline: Baseline::HoleFilled,
            score: 0.5,
        });
    }
    targets
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    /// Empty means [`default_targets`].
    pub targets: Vec<Target>,
    pub params: BaselineParams,
    /// Use only the first `subset` ground-truth meshes in id order.
    pub subset: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub texture: bool,
    pub jobs: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            params: BaselineParams::default(),
            subset: None,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            texture: true,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub config: ScoreConfig,
    pub measurements: BTreeMap<Baseline, BaselineDistance>,
    pub meshes: Vec<String>,
}

/// Fits σ on the ground-truth meshes of `gt_dir` and writes the resulting
/// scoring config to `output`.
pub fn calibrate(gt_dir: &Path, output: &Path, options: &CalibrationOptions) -> Result<CalibrationOutcome> {
    let targets = if options.targets.is_empty() {
        default_targets(options.texture)
    } else {
        options.targets.clone()
    };
    if !options.texture && targets.iter().any(|t| t.channel == Channel::Texture) {
        bail!("texture targets given while texture scoring is disabled");
    }
    if options.texture && !targets.iter().any(|t| t.channel == Channel::Texture) {
        bail!("texture scoring is enabled but no texture target was given");
    }
    let mut baselines: Vec<Baseline> = targets.iter().map(|t| t.baseline).collect();
    baselines.sort();
    baselines.dedup();

    let mut listed: Vec<(String, std::path::PathBuf)> = list_meshes(gt_dir)?.into_iter().collect();
    if let Some(n) = options.subset {
        listed.truncate(n);
    }
    let meshes = listed
        .into_iter()
        .map(|(id, path)| Ok((id, load_mesh(&path)?.mesh)))
        .collect::<Result<Vec<_>>>()?;
    let measurements = with_pool(options.jobs, || {
        measure_baselines(&meshes, &baselines, &options.params, options.samples, options.seed)
    })??;
    let (sigma_shape, sigma_texture) = fit_sigmas(&measurements, &targets)?;
    let config = ScoreConfig {
        sigma_shape,
        sigma_texture: sigma_texture.unwrap_or(1.0),
        samples: options.samples,
        seed: options.seed,
        texture: options.texture,
    };
    config.validate()?;

    let mut header = vec![format!("calibrated on {} ground-truth meshes", meshes.len())];
    for (b, d) in &measurements {
        header.push(format!("{b}: shape distance {:e} m, texture distance {:e}", d.shape, d.texture));
    }
    for t in &targets {
        header.push(format!(
            "target {}:{}={}",
            if t.channel == Channel::Shape { "shape" } else { "texture" },
            t.baseline,
            t.score
        ));
    }
    if !options.texture {
        header.push("texture disabled; sigma_texture is a placeholder".into());
    }
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    config.save(output, &header)?;
    Ok(CalibrationOutcome {
        config,
        measurements,
        meshes: meshes.into_iter().map(|(id, _)| id).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_parsing() {
        let t: Target = "texture:global_shape_noise=0.25".parse().unwrap();
        assert_eq!(t.channel, Channel::Texture);
        assert_eq!(t.baseline, Baseline::GlobalShapeNoise);
        assert_eq!(t.score, 0.25);
        assert!("shape:hole_filled=1".parse::<Target>().is_err());
        assert!("shape=0.5".parse::<Target>().is_err());
        assert!("colour:hole_filled=0.5".parse::<Target>().is_err());
        assert!("shape:melted=0.5".parse::<Target>().is_err());
    }

    #[test]
    fn fit_inverts_single_target() {
        let mut m = BTreeMap::new();
        m.insert(Baseline::HoleFilled, BaselineDistance { shape: 0.02, texture: 0.1 });
        let (s, t) = fit_sigmas(&m, &default_targets(true)).unwrap();
        let phi = |d: f64, sigma: f64| (-d * d / (2.0 * sigma * sigma)).exp();
        assert!((phi(0.02, s) - 0.5).abs() < 1e-12);
        assert!((phi(0.1, t.unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_is_rejected() {
        let mut m = BTreeMap::new();
        m.insert(Baseline::Identity, BaselineDistance::default());
        let targets = ["shape:identity=0.9".parse().unwrap()];
        let err = fit_sigmas(&m, &targets).unwrap_err();
        assert!(err.to_string().contains("cannot calibrate from zero distances"));
    }

    #[test]
    fn baselines_degrade_as_expected() {
        let gt = crate::synth::uv_sphere(20, 20, 1.0);
        let params = BaselineParams::default();
        let identity = build_baseline(&gt, Baseline::Identity, &params, 1).unwrap();
        assert_eq!(identity, gt);
        let partial = build_baseline(&gt, Baseline::Partial, &params, 1).unwrap();
        assert!(partial.vertex_count() < gt.vertex_count());
        let filled = build_baseline(&gt, Baseline::HoleFilled, &params, 1).unwrap();
        assert_eq!(crate::mesh::boundary_edge_count(&filled).unwrap(), 0);
        let noisy = build_baseline(&gt, Baseline::GlobalShapeNoise, &params, 1).unwrap();
        let d = measure_baseline(&gt, &noisy, 2000, 3).unwrap();
        assert!(d.shape > 0.0);
        let d = measure_baseline(&gt, &identity, 2000, 3).unwrap();
        assert!(d.shape < 1e-12);
    }
}
