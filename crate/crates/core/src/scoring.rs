//! Distance-to-score mapping and the per-pair score suite.
//!
//! `X` is the reconstruction and `Y` the ground truth throughout. The overall
//! score is `S = S_area * (S_shape + S_texture) / 2`; each of the shape and
//! texture scores averages two directed terms `h * phi(d)`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::build_index;
use crate::measure::{directed_measure, DirectedMeasure};
use crate::mesh::{mesh_surface_area, MeshError, TexturedMesh};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("mapping scale must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("distance must be non-negative and finite, got {0}")]
    InvalidDistance(f64),
    #[error("both surface areas are zero")]
    BothAreasZero,
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("target score {0} is unreachable; it must lie strictly between 0 and 1")]
    UnreachableTarget(f64),
    #[error("a zero distance cannot map to a score below 1")]
    ZeroDistance,
    #[error("no calibration pairs supplied")]
    NoCalibrationPairs,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config file {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Unit-peak Gaussian `exp(-d² / 2σ²)`: 1 at `d = 0`, 0.5 at `d = σ√(2 ln 2)`.
pub fn phi(distance: f64, sigma: f64) -> Result<f64, ScoreError> {
    check_sigma(sigma)?;
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(ScoreError::InvalidDistance(distance));
    }
    let z = distance / sigma;
    Ok((-0.5 * z * z).exp())
}

fn check_sigma(sigma: f64) -> Result<(), ScoreError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(ScoreError::InvalidSigma(sigma))
    }
}

/// `1 - |Ā_X - Ā_Y|` with areas normalised by their sum.
pub fn area_score(area_x: f64, area_y: f64) -> Result<f64, ScoreError> {
    for a in [area_x, area_y] {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(ScoreError::InvalidDistance(a));
        }
    }
    let total = area_x + area_y;
    if total == 0.0 {
        return Err(ScoreError::BothAreasZero);
    }
    Ok(1.0 - (area_x / total - area_y / total).abs())
}

pub fn shape_score(xy: &DirectedMeasure, yx: &DirectedMeasure, sigma_shape: f64) -> Result<f64, ScoreError> {
    symmetric_score(
        (xy.hit_rate, xy.mean_shape_distance),
        (yx.hit_rate, yx.mean_shape_distance),
        sigma_shape,
    )
}

pub fn texture_score(xy: &DirectedMeasure, yx: &DirectedMeasure, sigma_texture: f64) -> Result<f64, ScoreError> {
    symmetric_score(
        (xy.hit_rate, xy.mean_texture_distance),
        (yx.hit_rate, yx.mean_texture_distance),
        sigma_texture,
    )
}

fn symmetric_score(xy: (f64, f64), yx: (f64, f64), sigma: f64) -> Result<f64, ScoreError> {
    Ok((xy.0 * phi(xy.1, sigma)? + yx.0 * phi(yx.1, sigma)?) / 2.0)
}

/// `S_area * (S_shape + S_texture) / 2`, or `S_area * S_shape` when texture
/// is not evaluated.
pub fn overall_score(area: f64, shape: f64, texture: Option<f64>) -> Result<f64, ScoreError> {
    check_unit("area score", area)?;
    check_unit("shape score", shape)?;
    match texture {
        Some(t) => {
            check_unit("texture score", t)?;
            Ok(area * (shape + t) / 2.0)
        }
        None => Ok(area * shape),
    }
}

fn check_unit(name: &'static str, value: f64) -> Result<(), ScoreError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ScoreError::OutOfRange { name, value })
    }
}

/// Fits the mapping scale so that `phi(dᵢ, σ) ≈ sᵢ`.
///
/// One pair is inverted in closed form, `σ = d / √(-2 ln s)`. Several pairs
/// are fitted by least squares over `σ`; the optimum lies between the
/// smallest and largest single-pair inversions, which bound the search.
pub fn calibrate_sigma(pairs: &[(f64, f64)]) -> Result<f64, ScoreError> {
    if pairs.is_empty() {
        return Err(ScoreError::NoCalibrationPairs);
    }
    let mut inversions = Vec::with_capacity(pairs.len());
    for &(d, s) in pairs {
        if !(s > 0.0 && s < 1.0) {
            return Err(ScoreError::UnreachableTarget(s));
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(ScoreError::InvalidDistance(d));
        }
        if d == 0.0 {
            return Err(ScoreError::ZeroDistance);
        }
        inversions.push(d / (-2.0 * s.ln()).sqrt());
    }
    if inversions.len() == 1 {
        return Ok(inversions[0]);
    }
    let lo = inversions.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inversions.iter().copied().fold(0.0, f64::max);
    if lo == hi {
        return Ok(lo);
    }
    let cost = |sigma: f64| -> f64 {
        pairs
            .iter()
            .map(|&(d, s)| {
                let z = d / sigma;
                let r = (-0.5 * z * z).exp() - s;
                r * r
            })
            .sum()
    };
    // Coarse log-spaced scan, then golden-section refinement around the best
    // grid point.
    const GRID: usize = 256;
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let at = |i: usize| (ln_lo + (ln_hi - ln_lo) * i as f64 / GRID as f64).exp();
    let best = (0..=GRID)
        .min_by(|&a, &b| cost(at(a)).total_cmp(&cost(at(b))).then(a.cmp(&b)))
        .unwrap();
    let mut a = at(best.saturating_sub(1));
    let mut b = at((best + 1).min(GRID));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    for _ in 0..200 {
        if cost(c) <= cost(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
        if (b - a) <= 1e-15 * b {
            break;
        }
    }
    Ok((a + b) / 2.0)
}

/// Scoring parameters, stored as a small TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    /// Shape mapping scale, meters.
    pub sigma_shape: f64,
    /// Texture mapping scale, RGB units.
    pub sigma_texture: f64,
    /// Surface samples per directed pass.
    pub samples: usize,
    pub seed: u64,
    /// When false the texture score is dropped and `S = S_area * S_shape`.
    pub texture: bool,
}

pub const DEFAULT_SAMPLES: usize = 100_000;

impl ScoreConfig {
    pub fn new(sigma_shape: f64, sigma_texture: f64) -> Self {
        Self {
            sigma_shape,
            sigma_texture,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            texture: true,
        }
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        check_sigma(self.sigma_shape)?;
        check_sigma(self.sigma_texture)?;
        if self.samples == 0 {
            return Err(ScoreError::InvalidConfig("samples must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String, ScoreError> {
        toml::to_string(self).map_err(|e| ScoreError::InvalidConfig(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, ScoreError> {
        let config: Self = toml::from_str(text).map_err(|e| ScoreError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScoreError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| ScoreError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Writes the config, prefixed by `header` lines as TOML comments.
    pub fn save(&self, path: &Path, header: &[String]) -> Result<(), ScoreError> {
        let mut text = String::new();
        for line in header {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
        text.push_str(&self.to_toml()?);
        std::fs::write(path, text).map_err(|e| ScoreError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Seed of the reconstruction-to-ground-truth pass.
    pub fn seed_xy(&self) -> u64 {
        self.seed
    }

    /// Seed of the ground-truth-to-reconstruction pass.
    pub fn seed_yx(&self) -> u64 {
        self.seed ^ 0x9E37_79B9_7F4A_7C15
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// Reconstruction has no surface; every score is 0.
    ZeroAreaReconstruction,
    /// Ground truth has no surface; every score is 0.
    ZeroAreaGroundTruth,
    /// Texture scoring requested but at least one mesh is untextured, so
    /// texture distances are 0 and the texture score reduces to hit rates.
    TextureDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub area_score: f64,
    pub shape_score: f64,
    /// `None` when texture is switched off.
    pub texture_score: Option<f64>,
    pub overall: f64,
    /// `S_area * S_shape`, reported for shape-only comparisons.
    pub area_shape_score: f64,
    /// Reconstruction to ground truth.
    pub recon_to_gt: Option<DirectedMeasure>,
    /// Ground truth to reconstruction.
    pub gt_to_recon: Option<DirectedMeasure>,
    pub area_recon: f64,
    pub area_gt: f64,
    pub diagnostics: Vec<Diagnostic>,
    pub config: ScoreConfig,
}

impl ScoreReport {
    /// A report scoring 0 on every term, for missing or unusable inputs.
    pub fn zero(config: &ScoreConfig, area_recon: f64, area_gt: f64, diagnostics: Vec<Diagnostic>) -> Self {
        Self {
            area_score: area_score(area_recon, area_gt).unwrap_or(0.0),
            shape_score: 0.0,
            texture_score: config.texture.then_some(0.0),
            overall: 0.0,
            area_shape_score: 0.0,
            recon_to_gt: None,
            gt_to_recon: None,
            area_recon,
            area_gt,
            diagnostics,
            config: config.clone(),
        }
    }
}

/// Scores a reconstruction against its ground truth.
pub fn score_pair(gt: &TexturedMesh, recon: &TexturedMesh, config: &ScoreConfig) -> Result<ScoreReport, ScoreError> {
    config.validate()?;
    let area_gt = mesh_surface_area(gt);
    let area_recon = mesh_surface_area(recon);
    let mut diagnostics = Vec::new();
    if !(area_recon > 0.0) {
        diagnostics.push(Diagnostic::ZeroAreaReconstruction);
    }
    if !(area_gt > 0.0) {
        diagnostics.push(Diagnostic::ZeroAreaGroundTruth);
    }
    if !diagnostics.is_empty() {
        return Ok(ScoreReport::zero(config, area_recon, area_gt, diagnostics));
    }

    let (gt_index, recon_index) = rayon::join(|| build_index(gt), || build_index(recon));
    let (xy, yx) = rayon::join(
        || directed_measure(recon, &gt_index, config.samples, config.seed_xy()),
        || directed_measure(gt, &recon_index, config.samples, config.seed_yx()),
    );
    let (xy, yx) = (xy?, yx?);

    let s_area = area_score(area_recon, area_gt)?;
    let s_shape = shape_score(&xy, &yx, config.sigma_shape)?;
    let s_texture = if config.texture {
        if !(gt.is_textured() && recon.is_textured()) {
            diagnostics.push(Diagnostic::TextureDegenerate);
        }
        Some(texture_score(&xy, &yx, config.sigma_texture)?)
    } else {
        None
    };
    Ok(ScoreReport {
        area_score: s_area,
        shape_score: s_shape,
        texture_score: s_texture,
        overall: overall_score(s_area, s_shape, s_texture)?,
        area_shape_score: s_area * s_shape,
        recon_to_gt: Some(xy),
        gt_to_recon: Some(yx),
        area_recon,
        area_gt,
        diagnostics,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use proptest::prelude::*;

    fn measure(hit_rate: f64, shape: f64, texture: f64) -> DirectedMeasure {
        DirectedMeasure {
            mean_shape_distance: shape,
            mean_texture_distance: texture,
            hit_rate,
            hits: 0,
            samples: 0,
        }
    }

    #[test]
    fn phi_examples() {
        for sigma in [1e-3, 0.5, 7.0] {
            assert_eq!(phi(0.0, sigma).unwrap(), 1.0);
            let half = sigma * (2.0 * 2f64.ln()).sqrt();
            assert!((phi(half, sigma).unwrap() - 0.5).abs() < 1e-12);
            assert!((phi(2.0 * sigma, sigma).unwrap() - 0.1353352832366127).abs() < 1e-12);
        }
        assert!(matches!(phi(1.0, 0.0), Err(ScoreError::InvalidSigma(_))));
        assert!(matches!(phi(1.0, -2.0), Err(ScoreError::InvalidSigma(_))));
        assert!(matches!(phi(-1.0, 1.0), Err(ScoreError::InvalidDistance(_))));
    }

    #[test]
    fn area_score_examples() {
        assert_eq!(area_score(2.5, 2.5).unwrap(), 1.0);
        assert_eq!(area_score(0.0, 4.0).unwrap(), 0.0);
        assert!((area_score(3.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(area_score(0.0, 0.0), Err(ScoreError::BothAreasZero)));
    }

    #[test]
    fn shape_score_examples() {
        let perfect = measure(1.0, 0.0, 0.0);
        assert_eq!(shape_score(&perfect, &perfect, 0.01).unwrap(), 1.0);
        let sigma = 0.02;
        let half = measure(1.0, sigma * (2.0 * 2f64.ln()).sqrt(), 0.0);
        assert!((shape_score(&half, &half, sigma).unwrap() - 0.5).abs() < 1e-12);
        let partial = measure(0.5, 0.0, 0.0);
        assert!((shape_score(&partial, &perfect, sigma).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn texture_score_examples() {
        let a = measure(0.8, 0.3, 0.0);
        let b = measure(0.6, 0.1, 0.0);
        assert!((texture_score(&a, &b, 0.1).unwrap() - 0.7).abs() < 1e-12);
        let red_blue = measure(1.0, 0.0, 2f64.sqrt());
        assert!(
            (texture_score(&red_blue, &red_blue, 0.5).unwrap() - phi(2f64.sqrt(), 0.5).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn overall_examples() {
        assert_eq!(overall_score(1.0, 1.0, Some(1.0)).unwrap(), 1.0);
        assert_eq!(overall_score(0.0, 0.7, Some(0.2)).unwrap(), 0.0);
        assert!((overall_score(1.0, 0.8, Some(0.9)).unwrap() - 0.85).abs() < 1e-12);
        assert!((overall_score(0.5, 0.8, None).unwrap() - 0.4).abs() < 1e-12);
        assert!(matches!(overall_score(1.2, 0.5, Some(0.5)), Err(ScoreError::OutOfRange { .. })));
    }

    #[test]
    fn calibration_inverts_phi() {
        let sigma = calibrate_sigma(&[(0.05, 0.5)]).unwrap();
        assert!((sigma - 0.05 / (2.0 * 2f64.ln()).sqrt()).abs() < 1e-12);
        assert!((sigma - 0.0424661).abs() < 1e-7);
        assert!((phi(0.05, sigma).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(calibrate_sigma(&[(0.05, 1.0)]), Err(ScoreError::UnreachableTarget(_))));
        assert!(matches!(calibrate_sigma(&[(0.0, 0.5)]), Err(ScoreError::ZeroDistance)));
        assert!(matches!(calibrate_sigma(&[]), Err(ScoreError::NoCalibrationPairs)));
    }

    #[test]
    fn calibration_least_squares_matches_scan() {
        let pairs = [(0.01, 0.8), (0.03, 0.4), (0.05, 0.25)];
        let sigma = calibrate_sigma(&pairs).unwrap();
        let cost = |s: f64| pairs.iter().map(|&(d, t)| (phi(d, s).unwrap() - t).powi(2)).sum::<f64>();
        // Independent fine linear scan of the cost.
        let best = (1..=200_000)
            .map(|i| 0.001 + 0.1 * i as f64 / 200_000.0)
            .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
            .unwrap();
        assert!((sigma - best).abs() < 1e-6, "{sigma} vs {best}");
        // Consistent pairs recover the exact scale.
        let exact = [(0.02, phi(0.02, 0.03).unwrap()), (0.05, phi(0.05, 0.03).unwrap())];
        assert!((calibrate_sigma(&exact).unwrap() - 0.03).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let config = ScoreConfig {
            sigma_shape: 0.012345678901234567,
            sigma_texture: 0.1 / 3.0,
            samples: 1234,
            seed: 99,
            texture: false,
        };
        let back = ScoreConfig::from_toml(&config.to_toml().unwrap()).unwrap();
        assert_eq!(back, config);
        assert!(ScoreConfig::from_toml("sigma_shape = -1.0\nsigma_texture = 1.0\nsamples = 1\nseed = 0\ntexture = true").is_err());
    }

    #[test]
    fn identical_meshes_score_one() {
        let sphere = synth::uv_sphere(30, 40, 1.0);
        let mut config = ScoreConfig::new(0.01, 0.05);
        config.samples = 5000;
        let report = score_pair(&sphere, &sphere, &config).unwrap();
        assert!(report.overall >= 0.999, "{report:?}");
        assert!(report.diagnostics.is_empty());
        let recomputed = report.area_score * (report.shape_score + report.texture_score.unwrap()) / 2.0;
        assert!((recomputed - report.overall).abs() < 1e-12);
    }

    #[test]
    fn empty_reconstruction_scores_zero() {
        let sphere = synth::uv_sphere(10, 12, 1.0);
        let report = score_pair(&sphere, &TexturedMesh::empty(), &ScoreConfig::new(0.01, 0.05)).unwrap();
        assert_eq!(report.overall, 0.0);
        assert_eq!(report.area_score, 0.0);
        assert_eq!(report.diagnostics, vec![Diagnostic::ZeroAreaReconstruction]);
    }

    #[test]
    fn untextured_pair_reduces_texture_to_hit_rate() {
        let cube = synth::unit_cube();
        let mut config = ScoreConfig::new(0.01, 0.05);
        config.samples = 2000;
        let report = score_pair(&cube, &cube, &config).unwrap();
        let (xy, yx) = (report.recon_to_gt.unwrap(), report.gt_to_recon.unwrap());
        assert_eq!(report.texture_score.unwrap(), (xy.hit_rate + yx.hit_rate) / 2.0);
        assert_eq!(report.diagnostics, vec![Diagnostic::TextureDegenerate]);

        config.texture = false;
        let shape_only = score_pair(&cube, &cube, &config).unwrap();
        assert_eq!(shape_only.texture_score, None);
        assert_eq!(shape_only.overall, shape_only.area_shape_score);
    }

    proptest! {
        #[test]
        fn phi_decreases(d in 0.0..10.0f64, step in 1e-6..1.0f64, sigma in 0.01..5.0f64) {
            prop_assert!(phi(d + step, sigma).unwrap() < phi(d, sigma).unwrap() || phi(d, sigma).unwrap() == 0.0);
        }

        #[test]
        fn area_score_symmetric_and_scale_free(a in 0.0..100.0f64, b in 1e-3..100.0f64, c in 1e-3..1e3f64) {
            let s = area_score(a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s - area_score(b, a).unwrap()).abs() < 1e-12);
            prop_assert!((s - area_score(c * a, c * b).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn scores_are_symmetric_bounded_and_monotone(
            h1 in 0.0..=1.0f64, h2 in 0.0..=1.0f64,
            d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, bump in 0.0..1.0f64,
        ) {
            let xy = measure(h1, d1, d2);
            let yx = measure(h2, d2, d1);
            let s = shape_score(&xy, &yx, 0.1).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert_eq!(s, shape_score(&yx, &xy, 0.1).unwrap());
            prop_assert_eq!(texture_score(&xy, &yx, 0.2).unwrap(), texture_score(&yx, &xy, 0.2).unwrap());
            let worse = measure(h1, d1 + bump, d2);
            prop_assert!(shape_score(&worse, &yx, 0.1).unwrap() <= s);
        }
    }
}
