//! Synthetic test scenes with a known ground truth.
//!
//! Coordinates are normalized: pixel `(r, c)` has center
//! `((c + 0.5) h, (r + 0.5) h)` with `x` horizontal and `y` pointing down.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, ImageGrid, Shape};

/// Identifier of the noise generator, written into scene metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9), Normal (rand_distr 0.5)";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scene {
    TwoDiscsLine,
    StarNoise,
    DiscsWithHoles,
    PatternInterior,
}

impl Scene {
    pub const ALL: [Scene; 4] = [
        Scene::TwoDiscsLine,
        Scene::StarNoise,
        Scene::DiscsWithHoles,
        Scene::PatternInterior,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scene::TwoDiscsLine => "two-discs-line",
            Scene::StarNoise => "star-noise",
            Scene::DiscsWithHoles => "discs-with-holes",
            Scene::PatternInterior => "pattern-interior",
        }
    }
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scene::ALL
            .into_iter()
            .find(|scene| scene.name() == s)
            .ok_or_else(|| Error::UnknownName {
                kind: "scene",
                name: s.to_string(),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub scene: Scene,
    pub size: usize,
    pub sigma: f64,
    /// Fraction of interior pixels punched out in `pattern-interior`.
    pub density: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(scene: Scene, size: usize) -> Self {
        SyntheticSpec {
            scene,
            size,
            sigma: 0.0,
            density: 0.1,
            seed: 0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_density(mut self, density: f64) -> Self {
        self.density = density;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Shape::new(self.size, self.size)?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and >= 0, got {}", self.sigma),
            });
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "density",
                reason: format!("must lie in (0, 1], got {}", self.density),
            });
        }
        Ok(())
    }
}

/// Returns the (possibly noisy) image and its noiseless ground truth.
pub fn generate(spec: &SyntheticSpec) -> Result<(ImageGrid, BinaryMask)> {
    spec.validate()?;
    let shape = Shape::new(spec.size, spec.size)?;
    let truth = match spec.scene {
        Scene::TwoDiscsLine => two_discs_line(shape),
        Scene::StarNoise => star(shape),
        Scene::DiscsWithHoles => discs_with_holes(shape),
        Scene::PatternInterior => pattern_interior(shape, spec.density),
    };
    let mut values: Vec<f64> = truth.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    if spec.sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.sigma).expect("sigma validated");
        for v in &mut values {
            *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    let image = ImageGrid::new(shape.rows(), shape.cols(), 1, values)?;
    Ok((image, truth))
}

fn center(shape: Shape, r: usize, c: usize) -> (f64, f64) {
    let h = shape.spacing();
    ((c as f64 + 0.5) * h, (r as f64 + 0.5) * h)
}

fn in_disc(p: (f64, f64), c: (f64, f64), radius: f64) -> bool {
    let (dx, dy) = (p.0 - c.0, p.1 - c.1);
    dx * dx + dy * dy <= radius * radius
}

fn two_discs_line(shape: Shape) -> BinaryMask {
    let mid = shape.rows() / 2;
    let (_, cy) = center(shape, mid, 0);
    let left = (0.28, cy);
    let right = (0.72, cy);
    BinaryMask::from_fn(shape, |r, c| {
        let p = center(shape, r, c);
        in_disc(p, left, 0.15) || in_disc(p, right, 0.15) || (r == mid && p.0 >= left.0 && p.0 <= right.0)
    })
}

fn star(shape: Shape) -> BinaryMask {
    let (outer, inner) = (0.38, 0.16);
    let vertices: Vec<(f64, f64)> = (0..10)
        .map(|k| {
            let angle = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / 5.0;
            let radius = if k % 2 == 0 { outer } else { inner };
            (0.5 + radius * angle.cos(), 0.5 + radius * angle.sin())
        })
        .collect();
    BinaryMask::from_fn(shape, |r, c| point_in_polygon(center(shape, r, c), &vertices))
}

fn point_in_polygon(p: (f64, f64), poly: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn discs_with_holes(shape: Shape) -> BinaryMask {
    let centers = [(0.3, 0.5), (0.7, 0.5)];
    BinaryMask::from_fn(shape, |r, c| {
        let p = center(shape, r, c);
        centers
            .iter()
            .any(|&cc| in_disc(p, cc, 0.18) && !in_disc(p, cc, 0.06))
    })
}

/// Lattice period giving roughly `density` holes per interior pixel.
pub fn pattern_period(density: f64) -> usize {
    ((1.0 / density.sqrt()).round() as usize).max(2)
}

fn pattern_interior(shape: Shape, density: f64) -> BinaryMask {
    let n = shape.rows();
    let lo = (0.2 * n as f64).round() as usize;
    let hi = (0.8 * n as f64).round() as usize;
    let period = pattern_period(density);
    // Keep a solid rim so the outline stays intact.
    let (ilo, ihi) = (lo + 2, hi.saturating_sub(2));
    BinaryMask::from_fn(shape, |r, c| {
        let inside = (lo..hi).contains(&r) && (lo..hi).contains(&c);
        let hole = (ilo..ihi).contains(&r)
            && (ilo..ihi).contains(&c)
            && (r - ilo) % period == 0
            && (c - ilo) % period == 0;
        inside && !hole
    })
}
