//! Synthetic labeled point clouds drawn from eight parametric surfaces.
//!
//! One generator stream (`numerics::rng::seeded(seed)`) drives a whole
//! dataset. Sample `i` has label `i % 8` and consumes draws in this order:
//!
//! 1. shape parameters (class-specific, see [`ShapeClass::sample_surface`]),
//! 2. per point, the surface coordinates,
//! 3. three uniforms for the rotation quaternion,
//! 4. per point, three jitter normals (x, y, z), each clipped at 3 sigma.
//!
//! The jittered, rotated cloud is then centered on its centroid and scaled
//! so that the farthest point lies on the unit sphere.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{seeded, SeededRng};
use crate::numerics::Tensor;
use crate::pointcloud::PointCloud;

pub const NUM_CLASSES: usize = 8;
pub const JITTER_SIGMA: f64 = 0.01;
pub const MIN_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeClass {
    Sphere,
    CubeSurface,
    Cylinder,
    Cone,
    Torus,
    Plane,
    TwoSpheres,
    LineSegment,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; NUM_CLASSES] = [
        ShapeClass::Sphere,
        ShapeClass::CubeSurface,
        ShapeClass::Cylinder,
        ShapeClass::Cone,
        ShapeClass::Torus,
        ShapeClass::Plane,
        ShapeClass::TwoSpheres,
        ShapeClass::LineSegment,
    ];

    pub fn from_label(label: usize) -> Option<Self> {
        Self::ALL.get(label).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Sphere => "sphere",
            ShapeClass::CubeSurface => "cube-surface",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Cone => "cone",
            ShapeClass::Torus => "torus",
            ShapeClass::Plane => "plane",
            ShapeClass::TwoSpheres => "two-spheres",
            ShapeClass::LineSegment => "line-segment",
        }
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|c| c.name().to_string()).collect()
    }

    /// Draws the shape parameters then `n` surface points.
    ///
    /// Returns the points and the shape's characteristic size (the radius
    /// for spheres).
    pub fn sample_surface(self, n: usize, rng: &mut SeededRng) -> (Vec<[f64; 3]>, f64) {
        match self {
            ShapeClass::Sphere => {
                let r = 0.6 + 0.4 * rng.gen::<f64>();
                let pts = (0..n).map(|_| scale(unit_vector(rng), r)).collect();
                (pts, r)
            }
            ShapeClass::CubeSurface => {
                let h = 0.5 + 0.3 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        let face = (rng.gen::<f64>() * 6.0) as usize % 6;
                        let a = (2.0 * rng.gen::<f64>() - 1.0) * h;
                        let b = (2.0 * rng.gen::<f64>() - 1.0) * h;
                        let s = if face.is_multiple_of(2) { h } else { -h };
                        match face / 2 {
                            0 => [s, a, b],
                            1 => [a, s, b],
                            _ => [a, b, s],
                        }
                    })
                    .collect();
                (pts, h)
            }
            ShapeClass::Cylinder => {
                let r = 0.3 + 0.3 * rng.gen::<f64>();
                let half = 0.5 + 0.4 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        let t = TAU * rng.gen::<f64>();
                        let z = (2.0 * rng.gen::<f64>() - 1.0) * half;
                        [r * t.cos(), r * t.sin(), z]
                    })
                    .collect();
                (pts, r)
            }
            ShapeClass::Cone => {
                let r = 0.4 + 0.4 * rng.gen::<f64>();
                let h = 0.8 + 0.7 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        // sqrt makes the lateral surface area-uniform
                        let t = rng.gen::<f64>().sqrt();
                        let a = TAU * rng.gen::<f64>();
                        [t * r * a.cos(), t * r * a.sin(), h * (0.5 - t)]
                    })
                    .collect();
                (pts, r)
            }
            ShapeClass::Torus => {
                let big = 0.6 + 0.3 * rng.gen::<f64>();
                let small = 0.15 + 0.15 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        let t = TAU * rng.gen::<f64>();
                        let p = TAU * rng.gen::<f64>();
                        let ring = big + small * p.cos();
                        [ring * t.cos(), ring * t.sin(), small * p.sin()]
                    })
                    .collect();
                (pts, big)
            }
            ShapeClass::Plane => {
                let a = 0.5 + 0.5 * rng.gen::<f64>();
                let b = 0.3 + 0.5 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        let x = (2.0 * rng.gen::<f64>() - 1.0) * a;
                        let y = (2.0 * rng.gen::<f64>() - 1.0) * b;
                        [x, y, 0.0]
                    })
                    .collect();
                (pts, a)
            }
            ShapeClass::TwoSpheres => {
                let r = 0.25 + 0.2 * rng.gen::<f64>();
                let offset = r + 0.2 + 0.4 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| {
                        let side = if rng.gen::<bool>() { offset } else { -offset };
                        let p = scale(unit_vector(rng), r);
                        [p[0] + side, p[1], p[2]]
                    })
                    .collect();
                (pts, r)
            }
            ShapeClass::LineSegment => {
                let half = 0.5 + 0.5 * rng.gen::<f64>();
                let pts = (0..n)
                    .map(|_| [(2.0 * rng.gen::<f64>() - 1.0) * half, 0.0, 0.0])
                    .collect();
                (pts, half)
            }
        }
    }
}

fn unit_vector(rng: &mut SeededRng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return scale(v, 1.0 / n);
        }
    }
}

fn scale(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Uniformly distributed rotation matrix from three uniforms (Shoemake).
pub fn random_rotation(rng: &mut SeededRng) -> [[f64; 3]; 3] {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (x, y, z, w) = (
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
        b * (TAU * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
        r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
        r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
    ]
}

/// A generated sample together with what is needed to undo normalization.
#[derive(Debug, Clone)]
pub struct GeneratedSample {
    pub cloud: PointCloud,
    pub class: ShapeClass,
    /// Characteristic size of the shape before normalization.
    pub size: f64,
    /// Centroid subtracted during normalization.
    pub center: [f64; 3],
    /// Divisor applied after centering.
    pub scale: f64,
}

impl GeneratedSample {
    /// Coordinates mapped back to the pre-normalization frame.
    pub fn denormalized(&self) -> Vec<[f64; 3]> {
        (0..self.cloud.num_points())
            .map(|i| {
                let p = self.cloud.point(i);
                [
                    p[0] as f64 * self.scale + self.center[0],
                    p[1] as f64 * self.scale + self.center[1],
                    p[2] as f64 * self.scale + self.center[2],
                ]
            })
            .collect()
    }
}

pub fn generate_sample(class: ShapeClass, n: usize, rng: &mut SeededRng) -> Result<GeneratedSample> {
    let (surface, size) = class.sample_surface(n, rng);
    let rot = random_rotation(rng);
    let jitter = Normal::new(0.0, JITTER_SIGMA).expect("valid sigma");
    let clip = 3.0 * JITTER_SIGMA;
    let pts: Vec<[f64; 3]> = surface
        .into_iter()
        .map(|p| {
            let q = rotate(&rot, p);
            let mut j = [0.0; 3];
            for v in &mut j {
                *v = jitter.sample(rng).clamp(-clip, clip);
            }
            [q[0] + j[0], q[1] + j[1], q[2] + j[2]]
        })
        .collect();

    let mut center = [0.0; 3];
    for p in &pts {
        for a in 0..3 {
            center[a] += p[a];
        }
    }
    for c in &mut center {
        *c /= n as f64;
    }
    let scale = pts
        .iter()
        .map(|p| {
            let d = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let data = pts
        .iter()
        .flat_map(|p| (0..3).map(move |a| ((p[a] - center[a]) / scale) as f32))
        .collect();
    let coords = Tensor::new(vec![n, 3], data)?;
    Ok(GeneratedSample {
        cloud: PointCloud::new(coords, None, class as usize)?,
        class,
        size,
        center,
        scale,
    })
}

/// `num_samples` clouds with labels cycling through the eight classes.
pub fn generate_dataset(seed: u64, num_samples: usize, points_per_cloud: usize) -> Result<Vec<PointCloud>> {
    Ok(generate_samples(seed, num_samples, points_per_cloud)?
        .into_iter()
        .map(|s| s.cloud)
        .collect())
}

pub fn generate_samples(seed: u64, num_samples: usize, points_per_cloud: usize) -> Result<Vec<GeneratedSample>> {
    if points_per_cloud < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "points_per_cloud must be >= {MIN_POINTS}, got {points_per_cloud}"
        )));
    }
    let mut rng = seeded(seed);
    (0..num_samples)
        .map(|i| generate_sample(ShapeClass::ALL[i % NUM_CLASSES], points_per_cloud, &mut rng))
        .collect()
}
