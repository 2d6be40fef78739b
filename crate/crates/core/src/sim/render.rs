use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scene::{SceneObject, SyntheticScene};
use crate::geometry::{segment_clear, Point3};
use crate::reasoning::Vocabulary;
use crate::scene_graph::{BBox, Detection, FrameObservation, ImageRef, Pose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub range: f64,
    pub camera_height: f64,
    /// Fraction of sampled object points that must be in line of sight.
    pub min_visible_fraction: f64,
    pub visibility_samples: usize,
    pub confidence: f64,
    pub embedding_dim: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            range: 5.0,
            camera_height: 1.5,
            min_visible_fraction: 0.1,
            visibility_samples: 32,
            confidence: 0.9,
            embedding_dim: 16,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Probability that a visible object is not reported.
    #[serde(default)]
    pub p_miss: f64,
    /// Standard deviation of a per-detection cloud offset (meters).
    #[serde(default)]
    pub sigma_pos: f64,
    /// Probability that a detection carries another scene category.
    #[serde(default)]
    pub p_flip: f64,
    /// Standard deviation of additive embedding noise.
    #[serde(default)]
    pub sigma_embedding: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        let p = |v: f64| (0.0..=1.0).contains(&v);
        if !p(self.p_miss) || !p(self.p_flip) {
            return Err("noise probabilities must lie in [0, 1]");
        }
        if !(self.sigma_pos >= 0.0 && self.sigma_embedding >= 0.0) {
            return Err("noise deviations must be non-negative");
        }
        Ok(())
    }
}

fn seeded(parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

fn unit_gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    v.into_iter().map(|x| x / n).collect()
}

/// Appearance embedding shared by a category, nudged per instance.
pub fn instance_embedding(category: &str, instance: u64, dim: usize) -> Vec<f64> {
    let base = unit_gaussian(&mut seeded(&[b"category", category.as_bytes()]), dim);
    let own = unit_gaussian(&mut seeded(&[b"instance", category.as_bytes(), &instance.to_le_bytes()]), dim);
    let mixed: Vec<f64> = base.iter().zip(&own).map(|(b, o)| b + 0.3 * o).collect();
    let n = mixed.iter().map(|x| x * x).sum::<f64>().sqrt();
    mixed.into_iter().map(|x| x / n).collect()
}

/// Random stream for one frame, derived from the episode seed and frame id.
pub fn frame_rng(seed: u64, frame_id: u64) -> ChaCha8Rng {
    seeded(&[b"frame", &seed.to_le_bytes(), &frame_id.to_le_bytes()])
}

fn wrap_angle(a: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let r = a.rem_euclid(t);
    if r > std::f64::consts::PI {
        r - t
    } else {
        r
    }
}

/// Whether `object` would appear in a frame taken from `eye` facing `yaw`.
pub fn object_in_view(scene: &SyntheticScene, object: &SceneObject, eye: &Point3<f64>, yaw: f64, sensor: &SensorConfig) -> bool {
    let c = object.centroid;
    let (dx, dz) = (c.x - eye.x, c.z - eye.z);
    let ground = dx.hypot(dz);
    if ground > sensor.range {
        return false;
    }
    if ground > 1e-9 && wrap_angle(dz.atan2(dx) - yaw).abs() > sensor.fov_deg.to_radians() / 2.0 {
        return false;
    }
    visible_fraction(scene, object, eye, sensor) >= sensor.min_visible_fraction
}

/// Share of an evenly strided subset of the object's points in clear line of sight,
/// judged against walls and every other object.
pub fn visible_fraction(scene: &SyntheticScene, object: &SceneObject, eye: &Point3<f64>, sensor: &SensorConfig) -> f64 {
    let pts = object.cloud.points();
    let stride = pts.len().div_ceil(sensor.visibility_samples.max(1)).max(1);
    let tau = 0.1;
    let occluders = scene.occluders_without(object.id);
    let mut seen = 0usize;
    let mut total = 0usize;
    for p in pts.iter().step_by(stride) {
        total += 1;
        if segment_clear(eye, p, occluders, tau, tau / 2.0).unwrap_or(false) {
            seen += 1;
        }
    }
    seen as f64 / total.max(1) as f64
}

/// Synthetic detector output for one camera pose.
///
/// Every object in the field of view, within range and in sufficient line of sight, whose
/// (possibly flipped) category is in `vocab`, becomes one detection carrying its full cloud.
pub fn render_frame(
    scene: &SyntheticScene,
    pose: &Pose<f64>,
    frame_id: u64,
    timestamp: f64,
    sensor: &SensorConfig,
    noise: &NoiseConfig,
    vocab: &Vocabulary,
    rng: &mut ChaCha8Rng,
) -> FrameObservation<f64> {
    let eye = Point3::new(pose.position.x, sensor.camera_height, pose.position.z);
    let categories: Vec<&str> = {
        let mut c: Vec<&str> = scene.objects.iter().map(|o| o.category.as_str()).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let mut detections = Vec::new();
    for object in &scene.objects {
        if !object_in_view(scene, object, &eye, pose.yaw, sensor) {
            continue;
        }
        // draw every random value up front so the stream does not depend on outcomes
        let miss = rng.random::<f64>() < noise.p_miss;
        let flip = rng.random::<f64>() < noise.p_flip;
        let flip_pick = rng.random_range(0..categories.len().max(1));
        let offset = if noise.sigma_pos > 0.0 {
            let n = Normal::new(0.0, noise.sigma_pos).expect("valid deviation");
            Point3::new(n.sample(rng), n.sample(rng), n.sample(rng))
        } else {
            Point3::origin()
        };
        let mut embedding = instance_embedding(&object.category, object.id, sensor.embedding_dim);
        if noise.sigma_embedding > 0.0 {
            let n = Normal::new(0.0, noise.sigma_embedding).expect("valid deviation");
            for e in &mut embedding {
                *e += n.sample(rng);
            }
        }
        if miss {
            continue;
        }
        let category = if flip && categories.len() > 1 {
            let others: Vec<&str> = categories.iter().copied().filter(|c| *c != object.category).collect();
            others[flip_pick % others.len()].to_string()
        } else {
            object.category.clone()
        };
        if !vocab.contains(&category) {
            continue;
        }
        let cloud: Vec<Point3<f64>> = object.cloud.points().iter().map(|p| *p + offset).collect();
        let bbox = BBox::from_points(&cloud).expect("object clouds are non-empty");
        detections.push(Detection { category, confidence: sensor.confidence, cloud, embedding, bbox });
    }
    FrameObservation { frame_id, timestamp, camera_pose: *pose, detections, image_ref: ImageRef(frame_id) }
}
