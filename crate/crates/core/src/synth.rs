//! Seeded synthetic trace generator.
//!
//! Emits labeled popularity series following four trend archetypes:
//!
//! * template 0: sustained growth, no dominant peak (linear ramp)
//! * template 1: peak with slow decay
//! * template 2: peak with fast decay
//! * template 3: sharp spike
//!
//! Peaked templates use a Gaussian rise into the peak and an exponential
//! decay tail whose half-life shrinks from template 1 to 3, so average
//! peak fractions are ordered 0 < 1 < 2 < 3. Each series is scaled by a
//! log-normal volume draw and perturbed by multiplicative noise truncated
//! at zero. Object features correlate with the template: categories are
//! drawn with a template-dependent skew and referrers of peaked templates
//! first appear near the peak.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, DatasetSource};
use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::ugc::{Referrer, UGCObject};

pub const NUM_TEMPLATES: usize = 4;

/// Shape family of one peaked template. Per-object parameters are drawn
/// uniformly from the ranges, giving each trend genuine within-class
/// diversity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakShape {
    /// Standard deviation range of the Gaussian rise, in windows.
    pub rise_width: (f64, f64),
    /// Exponential decay constant range of the tail, in windows.
    pub decay_tau: (f64, f64),
    /// Flat pre-rise activity level relative to the peak.
    pub base_level: f64,
}

/// Secondary-bump configuration: most real popularity curves carry echo
/// peaks (reposts, renewed attention), which give every trend class
/// within-class shape diversity that shift and scale invariance cannot
/// absorb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoConfig {
    /// Probability an object carries echo bumps at all.
    pub probability: f64,
    /// Inclusive range for how many bumps an echoing object carries.
    pub count: (usize, usize),
    /// Echo strength as a fraction of the shape's l2 norm, so the bump
    /// perturbs a flat ramp and a sharp spike by the same relative amount.
    pub energy_fraction: (f64, f64),
    /// Echo width range (Gaussian sigma, windows).
    pub width: (f64, f64),
}

/// Blended objects mix a second template into the shape, populating the
/// region between trend archetypes the way real traces do. The label
/// stays with the dominant template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendConfig {
    /// Fraction of objects that carry a secondary template component.
    pub fraction: f64,
    /// Mixing weight range of the secondary component (below 0.5 so the
    /// dominant template keeps its label).
    pub weight: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub count: usize,
    pub seed: u64,
    /// Series length; every generated object shares it.
    pub n: usize,
    /// Mixture weights over the four templates; must sum to 1.
    pub weights: [f64; 4],
    /// Multiplicative noise level (standard deviation of the factor).
    pub noise: f64,
    /// Peak placement range for templates 1-3, as fractions of `n`.
    pub peak_position: (f64, f64),
    /// Slope range of the template-0 growth ramp.
    pub growth_slope: (f64, f64),
    /// Intercept of the template-0 ramp.
    pub growth_intercept: f64,
    /// Shapes for templates 1, 2, 3.
    pub peak_shapes: [PeakShape; 3],
    pub echo: EchoConfig,
    pub blend: BlendConfig,
    /// Log-normal volume distribution (ln-space mean and sigma).
    pub volume_log_mean: f64,
    pub volume_log_sigma: f64,
    /// Number of category codes and the probability mass placed on the
    /// template-favored one.
    pub categories: u32,
    pub category_skew: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            count: 100,
            seed: 0,
            n: 100,
            weights: [0.25, 0.25, 0.25, 0.25],
            noise: 0.1,
            peak_position: (0.12, 0.45),
            growth_slope: (0.5, 1.5),
            growth_intercept: 0.3,
            peak_shapes: [
                PeakShape { rise_width: (2.5, 5.5), decay_tau: (12.0, 26.0), base_level: 0.02 },
                PeakShape { rise_width: (0.8, 2.2), decay_tau: (5.0, 10.5), base_level: 0.006 },
                PeakShape { rise_width: (0.4, 1.0), decay_tau: (1.4, 3.2), base_level: 0.003 },
            ],
            echo: EchoConfig {
                probability: 1.0,
                count: (1, 1),
                energy_fraction: (0.45, 0.55),
                width: (1.5, 2.5),
            },
            blend: BlendConfig { fraction: 0.0, weight: (0.2, 0.4) },
            volume_log_mean: 9.0,
            volume_log_sigma: 1.0,
            categories: 8,
            category_skew: 0.55,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::Config("count must be at least 1".into()));
        }
        if self.n < 4 {
            return Err(Error::Config("series length must be at least 4".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| *w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "mixture weights {:?} must be non-negative and sum to 1",
                self.weights
            )));
        }
        if self.noise < 0.0 {
            return Err(Error::Config("noise level must be non-negative".into()));
        }
        let (lo, hi) = self.peak_position;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "peak position range ({lo}, {hi}) must satisfy 0 < lo <= hi < 1"
            )));
        }
        if self.categories < 1 || self.categories as usize > 63 {
            return Err(Error::Config("categories must be in 1..=63".into()));
        }
        if !(0.0..=1.0).contains(&self.category_skew) {
            return Err(Error::Config("category_skew must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.blend.fraction) {
            return Err(Error::Config("blend fraction must be in [0, 1]".into()));
        }
        if !(self.blend.weight.0 <= self.blend.weight.1 && self.blend.weight.1 < 0.5) {
            return Err(Error::Config(
                "blend weights must be ordered and below 0.5 so the dominant label holds".into(),
            ));
        }
        Ok(())
    }
}

fn pick_template(weights: &[f64; 4], rng: &mut ChaCha8Rng) -> usize {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return i;
        }
    }
    NUM_TEMPLATES - 1
}

/// Draws the per-object shape parameters for a template and renders the
/// shape; returns the shape with its peak window.
fn draw_shape(
    template: usize,
    n: usize,
    config: &SyntheticConfig,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, usize) {
    let peak_lo = (config.peak_position.0 * n as f64) as usize;
    let peak_hi = ((config.peak_position.1 * n as f64) as usize).max(peak_lo + 1);
    let peak_window = rng.random_range(peak_lo..peak_hi);
    let slope = rng.random_range(config.growth_slope.0..config.growth_slope.1);
    let (rise_width, decay_tau) = if template == 0 {
        (1.0, 1.0)
    } else {
        let shape = config.peak_shapes[template - 1];
        (
            rng.random_range(shape.rise_width.0..=shape.rise_width.1),
            rng.random_range(shape.decay_tau.0..=shape.decay_tau.1),
        )
    };
    (template_shape(template, n, peak_window, slope, rise_width, decay_tau, config), peak_window)
}

/// Deterministic shape of one object before volume scaling and noise.
fn template_shape(
    template: usize,
    n: usize,
    peak_window: usize,
    slope: f64,
    rise_width: f64,
    decay_tau: f64,
    cfg: &SyntheticConfig,
) -> Vec<f64> {
    match template {
        0 => (0..n)
            .map(|i| cfg.growth_intercept + slope * (i + 1) as f64 / n as f64)
            .collect(),
        t => {
            let base = cfg.peak_shapes[t - 1].base_level;
            let p = peak_window as f64;
            (0..n)
                .map(|i| {
                    let x = i as f64;
                    let v = if x <= p {
                        (-(p - x).powi(2) / (2.0 * rise_width.powi(2))).exp()
                    } else {
                        (-(x - p) / decay_tau).exp()
                    };
                    base + v
                })
                .collect()
        }
    }
}

fn noisy_series(
    shape: &[f64],
    volume: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let total: f64 = shape.iter().sum();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values: Vec<f64> = shape
        .iter()
        .map(|s| {
            let base = volume * s / total;
            let factor = 1.0 + noise * normal.sample(rng);
            (base * factor).max(0.0)
        })
        .collect();
    // An all-zero series would be degenerate downstream; keep the largest
    // shape window alive. Unreachable for noise below ~0.3.
    if values.iter().all(|v| *v == 0.0) {
        let peak = shape
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        values[peak] = volume * shape[peak] / total;
    }
    values
}

/// Generates a labeled synthetic dataset. Identical configs produce
/// bit-identical manifests.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<DatasetManifest> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let volume_dist = LogNormal::new(config.volume_log_mean, config.volume_log_sigma)
        .map_err(|e| Error::Config(format!("invalid volume distribution: {e}")))?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let epoch = NaiveDate::from_ymd_opt(2011, 1, 1).unwrap();
    let n = config.n;

    let mut objects = Vec::with_capacity(config.count);
    for index in 0..config.count {
        let template = pick_template(&config.weights, &mut rng);
        let window_days: f64 = rng.random_range(3.0..9.0);
        let upload_date = epoch + chrono::Duration::days(rng.random_range(0..730));
        let age_days = ((window_days * (n - 1) as f64).ceil() as u32).max(100);

        let (mut shape, peak_window) = draw_shape(template, n, config, &mut rng);
        if rng.random::<f64>() < config.blend.fraction {
            let partner = (template + 1 + rng.random_range(0..3)) % NUM_TEMPLATES;
            let weight = rng.random_range(config.blend.weight.0..=config.blend.weight.1);
            let (partner_shape, _) = draw_shape(partner, n, config, &mut rng);
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let scale = norm(&shape) / norm(&partner_shape);
            for (s, p) in shape.iter_mut().zip(&partner_shape) {
                *s = *s * (1.0 - weight) + p * scale * weight;
            }
        }
        if rng.random::<f64>() < config.echo.probability {
            let bumps = rng.random_range(config.echo.count.0..=config.echo.count.1);
            for _ in 0..bumps {
                let fraction = rng
                    .random_range(config.echo.energy_fraction.0..=config.echo.energy_fraction.1);
                let width = rng.random_range(config.echo.width.0..=config.echo.width.1);
                // A Gaussian bump of amplitude a and sigma w carries
                // l2 norm a * (w * sqrt(pi))^(1/2); pick a so the bump is
                // the requested fraction of the shape's norm.
                let shape_norm = shape.iter().map(|v| v * v).sum::<f64>().sqrt();
                let amp = fraction * shape_norm
                    / (width * std::f64::consts::PI.sqrt()).sqrt();
                // Land the echo away from the main peak (wrapping), so it
                // adds genuine shape structure rather than widening the
                // peak.
                let offset = rng.random_range((0.12 * n as f64)..(0.88 * n as f64)) as usize;
                let center = ((peak_window + offset) % n) as f64;
                for (i, v) in shape.iter_mut().enumerate() {
                    *v += amp * (-(i as f64 - center).powi(2) / (2.0 * width * width)).exp();
                }
            }
        }

        let volume = volume_dist.sample(&mut rng);
        let views = noisy_series(&shape, volume, config.noise, &mut rng);
        let comment_ratio = 0.01 * rng.random_range(0.5..1.5);
        let favorite_ratio = 0.002 * rng.random_range(0.5..1.5);
        let comments: Vec<f64> = views
            .iter()
            .map(|v| (v * comment_ratio * (1.0 + config.noise * normal.sample(&mut rng))).max(0.0))
            .collect();
        let favorites: Vec<f64> = views
            .iter()
            .map(|v| (v * favorite_ratio * (1.0 + config.noise * normal.sample(&mut rng))).max(0.0))
            .collect();

        let category = if rng.random::<f64>() < config.category_skew {
            (template as u32 * 2) % config.categories
        } else {
            rng.random_range(0..config.categories)
        };

        let referrer_count = rng.random_range(1..=3usize);
        let mut referrers = Vec::with_capacity(referrer_count);
        for _ in 0..referrer_count {
            let offset_days = if template == 0 {
                rng.random_range(0.0..(0.5 * n as f64 * window_days))
            } else {
                let jitter = 2.0 * window_days * normal.sample(&mut rng);
                (peak_window as f64 * window_days + jitter).max(0.0)
            };
            referrers.push(Referrer {
                kind: rng.random_range(0..5),
                first_date: upload_date + chrono::Duration::days(offset_days as i64),
                views: volume * rng.random_range(0.05..0.25),
            });
        }

        objects.push(UGCObject {
            object_id: format!("synth-{index:05}"),
            upload_date,
            category,
            age_days,
            window_days,
            views: TimeSeries::new(views, window_days)?,
            comments: TimeSeries::new(comments, window_days)?,
            favorites: TimeSeries::new(favorites, window_days)?,
            referrers,
            template_label: Some(template),
        });
    }

    Ok(DatasetManifest {
        objects,
        source: DatasetSource::Synthetic,
        seed: Some(config.seed),
        n,
        warnings: Vec::new(),
    })
}
