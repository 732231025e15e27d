//! Mode coverage, mode collapse, round-trip fidelity and discriminator
//! landscapes.

use alloc::vec;
use alloc::vec::Vec;

use crate::domains::{
    bounding_box, nearest_mode, sample, sample_mode, BoundingBox, GaussianMixture, LabeledBatch,
    Point,
};
use crate::error::{param_err, Result};
use crate::models::{discriminate, roundtrip, translate, ModelSet, Network};
use crate::{Matrix, Rng};

/// Row `i`, column `j`: fraction of samples from source mode `i` whose
/// translation is nearest to target mode `j`. Rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    entries: Matrix,
    samples_per_mode: usize,
}

impl AssignmentMatrix {
    /// Wraps a row-stochastic matrix (rows must sum to 1 within `1e-9`).
    pub fn new(entries: Matrix, samples_per_mode: usize) -> Result<Self> {
        if entries.rows() == 0 || entries.cols() == 0 {
            return Err(param_err!("assignment matrix must be non-empty"));
        }
        for i in 0..entries.rows() {
            let row = entries.row(i);
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(param_err!("assignment row {i} has entries outside [0, 1]"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(param_err!("assignment row {i} sums to {s}"));
            }
        }
        Ok(AssignmentMatrix {
            entries,
            samples_per_mode,
        })
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn source_modes(&self) -> usize {
        self.entries.rows()
    }

    pub fn target_modes(&self) -> usize {
        self.entries.cols()
    }

    pub fn samples_per_mode(&self) -> usize {
        self.samples_per_mode
    }

    pub fn get(&self, source: usize, target: usize) -> f64 {
        self.entries[(source, target)]
    }

    /// Column index of each row's maximum; ties resolve to the lowest column.
    pub fn row_argmax(&self) -> Vec<usize> {
        (0..self.entries.rows())
            .map(|i| {
                let row = self.entries.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport {
    pub covered_modes: usize,
    pub coverage_fraction: f64,
    pub collapse_count: usize,
    pub tau: f64,
    pub samples_per_mode: usize,
}

/// Translates `per_mode` samples from every source mode, labelled by source.
pub fn translate_per_mode(
    gen: &Network,
    source: &GaussianMixture,
    per_mode: usize,
    rng: &mut Rng,
) -> Result<LabeledBatch> {
    let mut rows = Vec::with_capacity(source.len() * per_mode * 2);
    let mut labels = Vec::with_capacity(source.len() * per_mode);
    for mode in 0..source.len() {
        let x = sample_mode(source, mode, per_mode, rng)?;
        rows.extend_from_slice(translate(gen, &x)?.as_slice());
        labels.extend(core::iter::repeat_n(mode, per_mode));
    }
    Ok(LabeledBatch {
        points: Matrix::from_vec(labels.len(), 2, rows)?,
        labels,
    })
}

/// Counts nearest target modes of labelled points and normalises per source.
pub fn assignment_from_batch(
    batch: &LabeledBatch,
    source_modes: usize,
    target: &GaussianMixture,
) -> Result<AssignmentMatrix> {
    let mut counts = Matrix::zeros(source_modes, target.len());
    let mut totals = vec![0usize; source_modes];
    for (i, &label) in batch.labels.iter().enumerate() {
        if label >= source_modes {
            return Err(param_err!(
                "label {label} out of range for {source_modes} source modes"
            ));
        }
        let row = batch.points.row(i);
        let j = nearest_mode(target, [row[0], row[1]]);
        counts[(label, j)] += 1.0;
        totals[label] += 1;
    }
    if let Some(empty) = totals.iter().position(|&t| t == 0) {
        return Err(param_err!("source mode {empty} has no samples"));
    }
    for (i, &t) in totals.iter().enumerate() {
        for v in counts.row_mut(i) {
            *v /= t as f64;
        }
    }
    let per_mode = totals.iter().copied().min().unwrap_or(0);
    AssignmentMatrix::new(counts, per_mode)
}

/// Mode-conditional assignment of `gen`'s translations from `source` onto
/// the modes of `target`.
pub fn assignment_matrix(
    gen: &Network,
    source: &GaussianMixture,
    target: &GaussianMixture,
    samples_per_mode: usize,
    rng: &mut Rng,
) -> Result<AssignmentMatrix> {
    if samples_per_mode == 0 {
        return Err(param_err!("samples_per_mode must be at least 1"));
    }
    let batch = translate_per_mode(gen, source, samples_per_mode, rng)?;
    assignment_from_batch(&batch, source.len(), target)
}

/// Coverage and collapse summary of an assignment matrix.
///
/// A target mode is covered when its incoming mass, averaged over source
/// modes, is at least `tau`. The collapse count is the number of source modes
/// minus the number of distinct per-row argmax targets.
pub fn coverage(am: &AssignmentMatrix, tau: f64) -> Result<CoverageReport> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(param_err!("tau = {tau} outside (0, 1)"));
    }
    let rows = am.source_modes() as f64;
    let covered_modes = am
        .entries
        .column_sums()
        .iter()
        .filter(|&&s| s / rows >= tau)
        .count();
    let mut targets = am.row_argmax();
    targets.sort_unstable();
    targets.dedup();
    Ok(CoverageReport {
        covered_modes,
        coverage_fraction: covered_modes as f64 / am.target_modes() as f64,
        collapse_count: am.source_modes() - targets.len(),
        tau,
        samples_per_mode: am.samples_per_mode,
    })
}

/// Root-mean-square Euclidean error of `g_back(g_fwd(x))` against `x` over
/// `n` samples of `source`.
pub fn roundtrip_rmse(
    g_fwd: &Network,
    g_back: &Network,
    source: &GaussianMixture,
    n: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if n == 0 {
        return Err(param_err!("roundtrip_rmse needs at least one sample"));
    }
    let x = sample(source, n, rng).points;
    let (_, rec) = roundtrip(g_fwd, g_back, &x)?;
    let sq: f64 = x
        .as_slice()
        .iter()
        .zip(rec.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(libm::sqrt(sq / n as f64))
}

/// Discriminator output on an inclusive `nx x ny` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub bbox: BoundingBox,
    pub nx: usize,
    pub ny: usize,
    /// Row-major by `y`: the value at grid point `(i, j)` is `values[j * nx + i]`.
    pub values: Vec<f64>,
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    let t = i as f64 / (n - 1) as f64;
    (1.0 - t) * lo + t * hi
}

impl LandscapeGrid {
    pub fn point(&self, i: usize, j: usize) -> Point {
        [
            lerp(self.bbox.min[0], self.bbox.max[0], i, self.nx),
            lerp(self.bbox.min[1], self.bbox.max[1], j, self.ny),
        ]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }
}

pub fn landscape(d: &Network, bbox: BoundingBox, nx: usize, ny: usize) -> Result<LandscapeGrid> {
    if nx < 2 || ny < 2 {
        return Err(param_err!(
            "landscape grid needs at least 2x2 points, got {nx}x{ny}"
        ));
    }
    let mut grid = LandscapeGrid {
        bbox,
        nx,
        ny,
        values: Vec::new(),
    };
    let mut pts = Matrix::zeros(nx * ny, 2);
    for j in 0..ny {
        for i in 0..nx {
            pts.row_mut(j * nx + i).copy_from_slice(&grid.point(i, j));
        }
    }
    grid.values = discriminate(d, &pts)?.into_vec();
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub tau: f64,
    pub samples_per_mode: usize,
    pub rmse_samples: usize,
    pub landscape_nx: usize,
    pub landscape_ny: usize,
    /// Landscape padding around the target means, in units of the largest
    /// mode stddev.
    pub landscape_margin: f64,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tau: 0.05,
            samples_per_mode: 1000,
            rmse_samples: 1000,
            landscape_nx: 200,
            landscape_ny: 200,
            landscape_margin: 5.0,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(param_err!("tau = {} outside (0, 1)", self.tau));
        }
        if self.samples_per_mode == 0 || self.rmse_samples == 0 {
            return Err(param_err!("evaluation sample counts must be positive"));
        }
        if self.landscape_nx < 2 || self.landscape_ny < 2 {
            return Err(param_err!("landscape resolution must be at least 2x2"));
        }
        if !(self.landscape_margin >= 0.0) {
            return Err(param_err!("landscape margin must be nonnegative"));
        }
        Ok(())
    }
}

/// All metrics for one trained model set. B-to-A entries exist when the set
/// has `g_ba`; `landscape_a` when it has `d_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBundle {
    pub a_to_b: AssignmentMatrix,
    pub coverage_a_to_b: CoverageReport,
    pub b_to_a: Option<AssignmentMatrix>,
    pub coverage_b_to_a: Option<CoverageReport>,
    pub rmse_aba: Option<f64>,
    pub rmse_bab: Option<f64>,
    pub landscape_b: LandscapeGrid,
    pub landscape_a: Option<LandscapeGrid>,
}

pub fn evaluate_run(
    set: &ModelSet,
    domain_a: &GaussianMixture,
    domain_b: &GaussianMixture,
    eval: &EvalConfig,
) -> Result<MetricBundle> {
    eval.validate()?;
    let stream = |k| Rng::stream(eval.seed, k);
    let a_to_b = assignment_matrix(
        &set.g_ab,
        domain_a,
        domain_b,
        eval.samples_per_mode,
        &mut stream(0),
    )?;
    let coverage_a_to_b = coverage(&a_to_b, eval.tau)?;
    let landscape_b = landscape(
        &set.d_b,
        bounding_box(domain_b, eval.landscape_margin),
        eval.landscape_nx,
        eval.landscape_ny,
    )?;

    let (mut b_to_a, mut coverage_b_to_a, mut rmse_aba, mut rmse_bab) = (None, None, None, None);
    if let Some(g_ba) = &set.g_ba {
        let am = assignment_matrix(
            g_ba,
            domain_b,
            domain_a,
            eval.samples_per_mode,
            &mut stream(1),
        )?;
        coverage_b_to_a = Some(coverage(&am, eval.tau)?);
        b_to_a = Some(am);
        rmse_aba = Some(roundtrip_rmse(
            &set.g_ab,
            g_ba,
            domain_a,
            eval.rmse_samples,
            &mut stream(2),
        )?);
        rmse_bab = Some(roundtrip_rmse(
            g_ba,
            &set.g_ab,
            domain_b,
            eval.rmse_samples,
            &mut stream(3),
        )?);
    }
    let landscape_a = match &set.d_a {
        Some(d_a) => Some(landscape(
            d_a,
            bounding_box(domain_a, eval.landscape_margin),
            eval.landscape_nx,
            eval.landscape_ny,
        )?),
        None => None,
    };
    Ok(MetricBundle {
        a_to_b,
        coverage_a_to_b,
        b_to_a,
        coverage_b_to_a,
        rmse_aba,
        rmse_bab,
        landscape_b,
        landscape_a,
    })
}
