//! Gaussian Process Regression with a squared-exponential kernel: posterior
//! mean and standard-deviation over the domain grid, batch updates, and an
//! incremental grid predictor used by the 1 Hz refit loop.
//!
//! Models are immutable after fitting; `fit_batch` returns a new model, so a
//! reader can never observe a partially updated factorization.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::grid::{GridSpec, ScalarGrid, Vec2};
use crate::linalg::PackedChol;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GprError {
    /// Hyperparameters must all be strictly positive.
    InvalidHyper,
    /// Kernel matrix factorization failed; with positive noise variance this
    /// signals near-duplicate inputs or degenerate hyperparameters.
    IllConditionedKernel,
    /// Training outputs must be finite.
    NonFiniteData,
}

impl fmt::Display for GprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GprError::InvalidHyper => write!(f, "hyperparameters must be strictly positive"),
            GprError::IllConditionedKernel => {
                write!(f, "kernel matrix is ill-conditioned (duplicate points with zero noise?)")
            }
            GprError::NonFiniteData => write!(f, "training outputs must be finite"),
        }
    }
}

impl core::error::Error for GprError {}

/// Squared-exponential kernel hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpHyper {
    /// Length scale (mm).
    pub length_scale: f64,
    /// Signal variance (kPa^2).
    pub signal_variance: f64,
    /// Observation noise variance (kPa^2).
    pub noise_variance: f64,
}

impl GpHyper {
    pub fn new(length_scale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self, GprError> {
        if length_scale > 0.0 && signal_variance > 0.0 && noise_variance > 0.0 {
            Ok(GpHyper { length_scale, signal_variance, noise_variance })
        } else {
            Err(GprError::InvalidHyper)
        }
    }
}

/// Squared-exponential kernel: signal_variance * exp(-|x - x'|^2 / (2 l^2)).
#[inline]
pub fn kernel_se(x: Vec2, y: Vec2, hyper: &GpHyper) -> f64 {
    let d2 = (x - y).norm_squared();
    hyper.signal_variance * (-d2 / (2.0 * hyper.length_scale * hyper.length_scale)).exp()
}

/// Exact GP posterior over 2D inputs with cached Cholesky factorization.
///
/// The prior mean is the running mean of the observed outputs, recomputed on
/// every fit; stiffness is strictly positive, so centering on the data keeps
/// far-from-data predictions from sagging toward zero.
#[derive(Clone, Debug)]
pub struct GpModel {
    hyper: GpHyper,
    inputs: Vec<Vec2>,
    outputs: Vec<f64>,
    prior_mean: f64,
    chol: PackedChol,
    /// alpha = (K + noise I)^-1 (y - prior_mean)
    alpha: Vec<f64>,
}

impl GpModel {
    pub fn new(hyper: GpHyper) -> Self {
        GpModel {
            hyper,
            inputs: Vec::new(),
            outputs: Vec::new(),
            prior_mean: 0.0,
            chol: PackedChol::empty(),
            alpha: Vec::new(),
        }
    }

    #[inline]
    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    #[inline]
    pub fn inputs(&self) -> &[Vec2] {
        &self.inputs
    }

    #[inline]
    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    #[inline]
    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    /// Prior predictive standard deviation (kPa).
    #[inline]
    pub fn prior_std(&self) -> f64 {
        self.hyper.signal_variance.sqrt()
    }

    /// Append observations and refresh the factorization and dual weights.
    /// The kernel matrix rows for existing data are unchanged, so the
    /// Cholesky factor is extended rather than rebuilt.
    pub fn fit_batch(&self, points: &[(Vec2, f64)]) -> Result<GpModel, GprError> {
        if points.iter().any(|(_, y)| !y.is_finite()) {
            return Err(GprError::NonFiniteData);
        }
        let mut m = self.clone();
        let n0 = m.inputs.len();
        let rows: Vec<Vec<f64>> = points
            .iter()
            .enumerate()
            .map(|(t, (p, _))| {
                let mut row = Vec::with_capacity(n0 + t + 1);
                for q in m.inputs.iter().chain(points[..=t].iter().map(|(q, _)| q)) {
                    row.push(kernel_se(*p, *q, &m.hyper));
                }
                let last = row.len() - 1;
                row[last] += m.hyper.noise_variance;
                row
            })
            .collect();
        m.chol.extend_rows(&rows).map_err(|_| GprError::IllConditionedKernel)?;
        for (p, y) in points {
            m.inputs.push(*p);
            m.outputs.push(*y);
        }
        m.prior_mean = if m.outputs.is_empty() {
            0.0
        } else {
            m.outputs.iter().sum::<f64>() / m.outputs.len() as f64
        };
        m.alpha = m.outputs.iter().map(|y| y - m.prior_mean).collect();
        m.chol.solve(&mut m.alpha);
        Ok(m)
    }

    /// Posterior mean and standard deviation at a single point.
    pub fn predict_point(&self, p: Vec2) -> (f64, f64) {
        if self.is_empty() {
            return (self.prior_mean, self.prior_std());
        }
        let mut kstar: Vec<f64> =
            self.inputs.iter().map(|q| kernel_se(p, *q, &self.hyper)).collect();
        let mean = self.prior_mean
            + kstar.iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>();
        self.chol.solve_lower(&mut kstar);
        let var = self.hyper.signal_variance - kstar.iter().map(|v| v * v).sum::<f64>();
        (mean, var.max(0.0).sqrt())
    }

    /// Posterior mean and standard deviation at every cell center.
    pub fn predict_grids(&self, spec: GridSpec) -> (ScalarGrid, ScalarGrid) {
        let mut predictor = GridPredictor::new(spec);
        predictor.sync(self);
        (predictor.mean_grid(self), predictor.std_grid(self))
    }
}

/// Incremental posterior evaluation over a fixed grid.
///
/// Keeps V = L^-1 K(train, grid) and its column sums of squares in step with
/// a growing model, so each refit only back-substitutes the new rows. Calling
/// `sync` with a model whose factor is not an extension of the previously
/// synced one (different hyperparameters, reset data) falls back to a full
/// rebuild.
#[derive(Clone, Debug)]
pub struct GridPredictor {
    spec: GridSpec,
    cells: Vec<Vec2>,
    hyper: Option<GpHyper>,
    rows: usize,
    /// Row-major V (rows = training points, columns = grid cells).
    v: Vec<f64>,
    /// Per-cell sum over rows of V^2.
    col_sq: Vec<f64>,
    /// Per-cell dot(K*, alpha); recomputed each sync (alpha changes wholly).
    kdot: Vec<f64>,
    /// Row-major K* rows for incremental kdot recomputation.
    kstar: Vec<f64>,
}

impl GridPredictor {
    pub fn new(spec: GridSpec) -> Self {
        let cells: Vec<Vec2> = (0..spec.ny)
            .flat_map(|iy| (0..spec.nx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| spec.cell_center(ix, iy))
            .collect();
        let m = cells.len();
        GridPredictor {
            spec,
            cells,
            hyper: None,
            rows: 0,
            v: Vec::new(),
            col_sq: vec![0.0; m],
            kdot: vec![0.0; m],
            kstar: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.rows = 0;
        self.v.clear();
        self.kstar.clear();
        self.col_sq.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Bring the cached solves in step with `model`.
    pub fn sync(&mut self, model: &GpModel) {
        if self.hyper != Some(*model.hyper()) || model.len() < self.rows {
            self.reset();
            self.hyper = Some(*model.hyper());
        }
        let m = self.cells.len();
        while self.rows < model.len() {
            let i = self.rows;
            let p = model.inputs()[i];
            let lrow = model.chol.row(i);
            let diag = lrow[i];
            // New K* row.
            let base = i * m;
            self.kstar.reserve(m);
            for c in &self.cells {
                self.kstar.push(kernel_se(p, *c, model.hyper()));
            }
            // New V row: (K*_i - L[i,:i] . V[:i]) / L[i,i]
            self.v.extend_from_slice(&self.kstar[base..base + m]);
            for j in 0..i {
                let lij = lrow[j];
                if lij == 0.0 {
                    continue;
                }
                let (head, tail) = self.v.split_at_mut(base);
                let vrow_j = &head[j * m..j * m + m];
                for (vn, vj) in tail[..m].iter_mut().zip(vrow_j) {
                    *vn -= lij * vj;
                }
            }
            for (vn, cs) in self.v[base..base + m].iter_mut().zip(self.col_sq.iter_mut()) {
                *vn /= diag;
                *cs += *vn * *vn;
            }
            self.rows += 1;
        }
        // mean offset: dot of K* columns with alpha.
        self.kdot.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.rows {
            let a = model.alpha[i];
            if a == 0.0 {
                continue;
            }
            let row = &self.kstar[i * m..i * m + m];
            for (kd, k) in self.kdot.iter_mut().zip(row) {
                *kd += a * k;
            }
        }
    }

    /// Posterior mean grid for the model last passed to `sync`.
    pub fn mean_grid(&self, model: &GpModel) -> ScalarGrid {
        debug_assert_eq!(self.rows, model.len());
        let values: Vec<f64> = self.kdot.iter().map(|kd| model.prior_mean() + kd).collect();
        ScalarGrid::from_values(self.spec, values).expect("finite mean")
    }

    /// Posterior standard-deviation grid for the model last passed to `sync`.
    pub fn std_grid(&self, model: &GpModel) -> ScalarGrid {
        debug_assert_eq!(self.rows, model.len());
        let sf2 = model.hyper().signal_variance;
        let values: Vec<f64> =
            self.col_sq.iter().map(|cs| (sf2 - cs).max(0.0).sqrt()).collect();
        ScalarGrid::from_values(self.spec, values).expect("finite std")
    }
}
