//! Two-dimensional isotropic Gaussian mixtures with uniform weights.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{param_err, Result};
use crate::{Matrix, Rng};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub mean: Point,
    pub stddev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    modes: Vec<Mode>,
}

impl GaussianMixture {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(param_err!("a mixture needs at least one mode"));
        }
        for (i, m) in modes.iter().enumerate() {
            if !(m.stddev > 0.0 && m.stddev.is_finite()) {
                return Err(param_err!("mode {i} has stddev {}", m.stddev));
            }
            if !(m.mean[0].is_finite() && m.mean[1].is_finite()) {
                return Err(param_err!("mode {i} has a non-finite mean"));
            }
            if modes[..i].iter().any(|o| o.mean == m.mean) {
                return Err(param_err!(
                    "mode {i} duplicates an earlier mean {:?}",
                    m.mean
                ));
            }
        }
        Ok(GaussianMixture { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_stddev(&self) -> f64 {
        self.modes.iter().map(|m| m.stddev).fold(0.0, f64::max)
    }
}

/// Sampled points (`n x 2`) and the mode each row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub points: Matrix,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn contains(&self, p: Point) -> bool {
        (0..2).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

/// `n_modes` means equally spaced on a circular arc, inclusive of both ends.
pub fn make_arc_domain(
    n_modes: usize,
    center: Point,
    radius: f64,
    angle_start: f64,
    angle_end: f64,
    stddev: f64,
) -> Result<GaussianMixture> {
    if n_modes < 2 {
        return Err(param_err!("an arc needs at least two modes, got {n_modes}"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(param_err!("arc radius {radius} must be positive"));
    }
    if angle_start == angle_end || !angle_start.is_finite() || !angle_end.is_finite() {
        return Err(param_err!(
            "arc angles [{angle_start}, {angle_end}] are degenerate"
        ));
    }
    let step = (angle_end - angle_start) / (n_modes - 1) as f64;
    let modes = (0..n_modes)
        .map(|k| {
            let theta = angle_start + k as f64 * step;
            Mode {
                mean: [
                    center[0] + radius * libm::cos(theta),
                    center[1] + radius * libm::sin(theta),
                ],
                stddev,
            }
        })
        .collect();
    GaussianMixture::new(modes)
}

/// Means at `start + k * step`, `k = 0..n_modes`.
pub fn make_row_domain(
    n_modes: usize,
    start: Point,
    step: Point,
    stddev: f64,
) -> Result<GaussianMixture> {
    if n_modes == 0 {
        return Err(param_err!("a row needs at least one mode"));
    }
    if n_modes > 1 && step == [0.0, 0.0] {
        return Err(param_err!(
            "zero step would place {n_modes} modes on one point"
        ));
    }
    let modes = (0..n_modes)
        .map(|k| Mode {
            mean: [start[0] + k as f64 * step[0], start[1] + k as f64 * step[1]],
            stddev,
        })
        .collect();
    GaussianMixture::new(modes)
}

/// Standard-normal draws behind a [`LabeledBatch`], one pair per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTrace {
    pub normals: Vec<(f64, f64)>,
}

/// Draws `n` points, each from a uniformly chosen mode.
pub fn sample(mix: &GaussianMixture, n: usize, rng: &mut Rng) -> LabeledBatch {
    sample_traced(mix, n, rng).0
}

/// [`sample`] that also returns the normal draws used for each point.
pub fn sample_traced(
    mix: &GaussianMixture,
    n: usize,
    rng: &mut Rng,
) -> (LabeledBatch, SampleTrace) {
    let mut points = Matrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for i in 0..n {
        let l = rng.below(mix.len());
        let z = rng.normal_pair();
        let row = points.row_mut(i);
        row.copy_from_slice(&point_from_draw(&mix.modes[l], z));
        labels.push(l);
        normals.push(z);
    }
    (LabeledBatch { points, labels }, SampleTrace { normals })
}

/// `mean + stddev * z`.
pub fn point_from_draw(mode: &Mode, z: (f64, f64)) -> Point {
    [
        mode.mean[0] + mode.stddev * z.0,
        mode.mean[1] + mode.stddev * z.1,
    ]
}

/// Draws `n` points from mode `mode` only.
pub fn sample_mode(mix: &GaussianMixture, mode: usize, n: usize, rng: &mut Rng) -> Result<Matrix> {
    let m = mix
        .modes
        .get(mode)
        .ok_or_else(|| param_err!("mode {mode} out of range for {} modes", mix.len()))?;
    let mut points = Matrix::zeros(n, 2);
    for i in 0..n {
        points
            .row_mut(i)
            .copy_from_slice(&point_from_draw(m, rng.normal_pair()));
    }
    Ok(points)
}

/// Index of the closest mean in Euclidean distance; ties go to the lowest index.
pub fn nearest_mode(mix: &GaussianMixture, point: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, m) in mix.modes.iter().enumerate() {
        let dx = point[0] - m.mean[0];
        let dy = point[1] - m.mean[1];
        let d = dx * dx + dy * dy;
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Hull of the means padded by `margin_stddevs * max stddev` on every side.
pub fn bounding_box(mix: &GaussianMixture, margin_stddevs: f64) -> BoundingBox {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for m in &mix.modes {
        for k in 0..2 {
            min[k] = min[k].min(m.mean[k]);
            max[k] = max[k].max(m.mean[k]);
        }
    }
    let pad = margin_stddevs * mix.max_stddev();
    BoundingBox {
        min: [min[0] - pad, min[1] - pad],
        max: [max[0] + pad, max[1] + pad],
    }
}

/// How a domain is built; stored in configs and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Row {
        modes: usize,
        start: Point,
        step: Point,
        stddev: f64,
    },
    Arc {
        modes: usize,
        center: Point,
        radius: f64,
        angle_start: f64,
        angle_end: f64,
        stddev: f64,
    },
}

impl DomainSpec {
    /// Five modes along `y = 0.5`, `x = 1..5`.
    pub fn default_a() -> Self {
        DomainSpec::Row {
            modes: 5,
            start: [1.0, 0.5],
            step: [1.0, 0.0],
            stddev: 0.1,
        }
    }

    /// Ten modes on the upper half circle of radius 2 around `(3, 0.5)`.
    pub fn default_b() -> Self {
        DomainSpec::Arc {
            modes: 10,
            center: [3.0, 0.5],
            radius: 2.0,
            angle_start: 0.0,
            angle_end: PI,
            stddev: 0.1,
        }
    }

    pub fn build(&self) -> Result<GaussianMixture> {
        match *self {
            DomainSpec::Row {
                modes,
                start,
                step,
                stddev,
            } => make_row_domain(modes, start, step, stddev),
            DomainSpec::Arc {
                modes,
                center,
                radius,
                angle_start,
                angle_end,
                stddev,
            } => make_arc_domain(modes, center, radius, angle_start, angle_end, stddev),
        }
    }
}
