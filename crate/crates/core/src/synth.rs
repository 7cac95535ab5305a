//! Seeded synthetic LiDAR-like scenes with ASPRS class labels.
//!
//! The scene is a 100 m x 100 m tile over rolling terrain. Each class has its
//! own geometry:
//!
//! * ground (2): the terrain surface with centimetre noise;
//! * building (6): box footprints, mostly flat roof returns plus wall returns;
//! * high vegetation (5): ellipsoidal crowns filled through their volume, with
//!   a few trunk returns below;
//! * low vegetation (3): a thin layer 0.2 to 1 m above the ground, spread over
//!   the same area as the ground returns, so x, y, z alone barely separate it;
//! * water (9): a flat pond surface below the surrounding terrain.
//!
//! With `separation < 1` each point is, with probability `1 - separation`,
//! replaced by a draw from a class-independent clutter distribution (uniform
//! over the tile, 0 to 15 m above the terrain). At `separation = 0` every
//! class has the same distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloud::{ClassLabel, Point3, PointCloud};
use crate::error::{Error, Result};

pub const GROUND: ClassLabel = 2;
pub const LOW_VEGETATION: ClassLabel = 3;
pub const HIGH_VEGETATION: ClassLabel = 5;
pub const BUILDING: ClassLabel = 6;
pub const WATER: ClassLabel = 9;

/// Classes in the order they are added as `classes` grows.
pub const CLASS_ORDER: [ClassLabel; 5] = [GROUND, BUILDING, HIGH_VEGETATION, LOW_VEGETATION, WATER];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub classes: usize,
    pub points_per_class: usize,
    /// 1 keeps every class on its own geometry, 0 mixes them completely.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            classes: 4,
            points_per_class: 500,
            separation: 1.0,
            seed: 7,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        if !(2..=CLASS_ORDER.len()).contains(&self.classes) {
            return Err(Error::Configuration(format!(
                "classes must be between 2 and {}, got {}",
                CLASS_ORDER.len(),
                self.classes
            )));
        }
        if self.points_per_class == 0 {
            return Err(Error::Configuration("points per class must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.separation) {
            return Err(Error::Configuration(format!("separation must lie in [0, 1], got {}", self.separation)));
        }
        Ok(())
    }
}

const EXTENT: f64 = 100.0;

fn terrain(x: f64, y: f64) -> f64 {
    3.0 * (x / 30.0).sin() + 2.0 * (y / 40.0).cos()
}

struct Building {
    x0: f64,
    y0: f64,
    w: f64,
    d: f64,
    base: f64,
    height: f64,
}

struct Crown {
    x: f64,
    y: f64,
    ground: f64,
    trunk: f64,
    radius: f64,
    half_height: f64,
}

struct Layout {
    buildings: Vec<Building>,
    crowns: Vec<Crown>,
    pond: (f64, f64, f64, f64, f64),
}

impl Layout {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let buildings = (0..4)
            .map(|_| {
                let (w, d) = (rng.random_range(14.0..24.0), rng.random_range(14.0..24.0));
                let (x0, y0) = (rng.random_range(0.0..EXTENT - w), rng.random_range(0.0..EXTENT - d));
                Building {
                    x0,
                    y0,
                    w,
                    d,
                    base: terrain(x0 + w / 2.0, y0 + d / 2.0),
                    height: rng.random_range(5.0..12.0),
                }
            })
            .collect();
        let crowns = (0..20)
            .map(|_| {
                let (x, y) = (rng.random_range(5.0..EXTENT - 5.0), rng.random_range(5.0..EXTENT - 5.0));
                Crown {
                    x,
                    y,
                    ground: terrain(x, y),
                    trunk: rng.random_range(3.0..7.0),
                    radius: rng.random_range(2.0..3.5),
                    half_height: rng.random_range(2.0..4.0),
                }
            })
            .collect();
        let (px, py) = (rng.random_range(10.0..70.0), rng.random_range(10.0..70.0));
        let pond = (px, py, 20.0, 15.0, terrain(px + 10.0, py + 7.5) - 0.5);
        Layout {
            buildings,
            crowns,
            pond,
        }
    }
}

fn sample_class(class: ClassLabel, layout: &Layout, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let noise = |sd: f64, rng: &mut ChaCha8Rng| Normal::new(0.0, sd).unwrap().sample(rng);
    match class {
        GROUND => {
            let (x, y) = (rng.random_range(0.0..EXTENT), rng.random_range(0.0..EXTENT));
            [x, y, terrain(x, y) + noise(0.05, rng)]
        }
        BUILDING => {
            let b = &layout.buildings[rng.random_range(0..layout.buildings.len())];
            if rng.random_bool(0.9) {
                let (x, y) = (b.x0 + rng.random_range(0.0..b.w), b.y0 + rng.random_range(0.0..b.d));
                [x, y, b.base + b.height + noise(0.02, rng)]
            } else {
                let t = rng.random_range(0.0..2.0 * (b.w + b.d));
                let (x, y) = if t < b.w {
                    (b.x0 + t, b.y0)
                } else if t < b.w + b.d {
                    (b.x0 + b.w, b.y0 + t - b.w)
                } else if t < 2.0 * b.w + b.d {
                    (b.x0 + t - b.w - b.d, b.y0 + b.d)
                } else {
                    (b.x0, b.y0 + t - 2.0 * b.w - b.d)
                };
                [x, y, b.base + rng.random_range(0.0..b.height)]
            }
        }
        HIGH_VEGETATION => {
            let c = &layout.crowns[rng.random_range(0..layout.crowns.len())];
            if rng.random_bool(0.1) {
                [c.x + noise(0.15, rng), c.y + noise(0.15, rng), c.ground + rng.random_range(0.0..c.trunk)]
            } else {
                loop {
                    let u: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                    if u.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                        break [
                            c.x + c.radius * u[0],
                            c.y + c.radius * u[1],
                            c.ground + c.trunk + c.half_height * (1.0 + u[2]),
                        ];
                    }
                }
            }
        }
        LOW_VEGETATION => {
            let (x, y) = (rng.random_range(0.0..EXTENT), rng.random_range(0.0..EXTENT));
            [x, y, terrain(x, y) + rng.random_range(0.2..1.0)]
        }
        WATER => {
            let (px, py, w, d, level) = layout.pond;
            [px + rng.random_range(0.0..w), py + rng.random_range(0.0..d), level + noise(0.01, rng)]
        }
        other => unreachable!("no geometry for class {other}"),
    }
}

fn sample_clutter(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let (x, y) = (rng.random_range(0.0..EXTENT), rng.random_range(0.0..EXTENT));
    [x, y, terrain(x, y) + rng.random_range(0.0..15.0)]
}

/// Generates the scene. Points are grouped by class in [`CLASS_ORDER`].
pub fn generate_scene(params: &SceneParams) -> Result<PointCloud> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let layout = Layout::new(&mut rng);
    let mut points = Vec::with_capacity(params.classes * params.points_per_class);
    for &class in &CLASS_ORDER[..params.classes] {
        for _ in 0..params.points_per_class {
            let [x, y, z] = if rng.random_bool(params.separation) {
                sample_class(class, &layout, &mut rng)
            } else {
                sample_clutter(&mut rng)
            };
            points.push(Point3::labeled(x, y, z, class));
        }
    }
    PointCloud::new(points, format!("synthetic(seed={})", params.seed))
}

/// `x,y,z,label` CSV with a header row.
pub fn scene_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::from("x,y,z,label\n");
    for p in &cloud.points {
        out.push_str(&format!("{},{},{},{}\n", p.x, p.y, p.z, p.label.unwrap_or(0)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_labels_and_determinism() {
        let p = SceneParams::default();
        let a = generate_scene(&p).unwrap();
        assert_eq!(a.len(), 2000);
        for class in &CLASS_ORDER[..4] {
            assert_eq!(a.points.iter().filter(|q| q.label == Some(*class)).count(), 500);
        }
        assert_eq!(scene_to_csv(&a), scene_to_csv(&generate_scene(&p).unwrap()));
        let other = generate_scene(&SceneParams { seed: 8, ..p }).unwrap();
        assert_ne!(a.points, other.points);
    }

    #[test]
    fn class_geometry_is_distinct() {
        let c = generate_scene(&SceneParams {
            classes: 5,
            points_per_class: 300,
            ..Default::default()
        })
        .unwrap();
        let mean_height = |class| {
            let pts: Vec<_> = c.points.iter().filter(|p| p.label == Some(class)).collect();
            pts.iter().map(|p| p.z - terrain(p.x, p.y)).sum::<f64>() / pts.len() as f64
        };
        assert!(mean_height(GROUND).abs() < 0.05);
        assert!(mean_height(LOW_VEGETATION) > 0.2 && mean_height(LOW_VEGETATION) < 1.2);
        assert!(mean_height(HIGH_VEGETATION) > 3.0);
        assert!(mean_height(BUILDING) > 3.0);
    }

    #[test]
    fn validation() {
        for bad in [
            SceneParams { classes: 1, ..Default::default() },
            SceneParams { classes: 6, ..Default::default() },
            SceneParams { points_per_class: 0, ..Default::default() },
            SceneParams { separation: 1.5, ..Default::default() },
        ] {
            assert!(matches!(generate_scene(&bad), Err(Error::Configuration(_))));
        }
    }
}
