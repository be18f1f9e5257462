//! Uniform 2D scalar grids over the palpation domain, with the calculus
//! utilities the planner and estimator stack is built on: bilinear sampling,
//! gradient norms, midpoint-rule integration, density normalisation, and
//! 4-connected component labeling of boolean masks.
//!
//! Grids are row-major with row 0 at the bottom of the domain; values are
//! stored at cell centers. Lengths are millimetres, stiffness values kPa.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


/// 2D point / vector in the plane (mm).
pub type Vec2 = nalgebra::Vector2<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridError {
    /// Grid geometry violates `nx >= 2, ny >= 2, dx > 0, dy > 0`.
    InvalidSpec,
    /// Point lies outside the closed domain rectangle.
    OutOfDomain,
    /// Operation on grids with different specs.
    SpecMismatch,
    /// Density normalisation of a grid with non-positive integral.
    DegenerateDensity,
    /// Value array length does not match the spec, or contains non-finite values.
    InvalidValues,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::InvalidSpec => write!(f, "grid spec must have nx,ny >= 2 and dx,dy > 0"),
            GridError::OutOfDomain => write!(f, "point lies outside the grid domain"),
            GridError::SpecMismatch => write!(f, "grids have mismatched specs"),
            GridError::DegenerateDensity => {
                write!(f, "density normalisation requires a positive integral")
            }
            GridError::InvalidValues => write!(f, "value array does not match spec or is non-finite"),
        }
    }
}

impl core::error::Error for GridError {}

/// Geometry of a uniform 2D grid: cell counts, cell size (mm), and the
/// lower-left corner of the domain (mm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub origin: Vec2,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin: Vec2) -> Result<Self, GridError> {
        if nx < 2 || ny < 2 || !(dx > 0.0) || !(dy > 0.0) {
            return Err(GridError::InvalidSpec);
        }
        Ok(GridSpec { nx, ny, dx, dy, origin })
    }

    /// Square domain of the given side length starting at the origin (0,0).
    pub fn square(n: usize, side: f64) -> Result<Self, GridError> {
        let d = side / n as f64;
        GridSpec::new(n, n, d, d, Vec2::new(0.0, 0.0))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Center of cell (ix, iy) in domain coordinates (mm).
    #[inline]
    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.origin.x + (ix as f64 + 0.5) * self.dx,
            self.origin.y + (iy as f64 + 0.5) * self.dy,
        )
    }

    /// Domain width and height (mm).
    #[inline]
    pub fn extent(&self) -> Vec2 {
        Vec2::new(self.nx as f64 * self.dx, self.ny as f64 * self.dy)
    }

    /// Domain area (mm^2).
    #[inline]
    pub fn area(&self) -> f64 {
        self.extent().x * self.extent().y
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// True iff `p` lies inside the closed domain rectangle.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        let e = self.extent();
        p.x >= self.origin.x
            && p.y >= self.origin.y
            && p.x <= self.origin.x + e.x
            && p.y <= self.origin.y + e.y
    }

    /// Center of the domain (mm).
    #[inline]
    pub fn center(&self) -> Vec2 {
        self.origin + self.extent() * 0.5
    }
}

/// Scalar field sampled at cell centers. Units depend on context
/// (kPa for stiffness maps, dimensionless for densities and potentials).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn constant(spec: GridSpec, value: f64) -> Self {
        ScalarGrid { spec, values: vec![value; spec.len()] }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != spec.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(GridError::InvalidValues);
        }
        Ok(ScalarGrid { spec, values })
    }

    /// Build by evaluating `f` at every cell center.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Vec2) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                values.push(f(spec.cell_center(ix, iy)));
            }
        }
        ScalarGrid { spec, values }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.spec.idx(ix, iy)]
    }

    #[inline]
    pub fn at_mut(&mut self, ix: usize, iy: usize) -> &mut f64 {
        let i = self.spec.idx(ix, iy);
        &mut self.values[i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarGrid {
        ScalarGrid {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise clamp to `[lo, +inf)`.
    pub fn clamp_min(&self, lo: f64) -> ScalarGrid {
        self.map(|v| if v < lo { lo } else { v })
    }

    /// Swap the backing storage with an equally sized buffer.
    pub(crate) fn swap_values(&mut self, buf: &mut Vec<f64>) {
        debug_assert_eq!(buf.len(), self.values.len());
        core::mem::swap(&mut self.values, buf);
    }
}

/// Boolean mask over a grid spec (stiff-cluster masks, ground-truth regions).
#[derive(Clone, Debug, PartialEq)]
pub struct MaskGrid {
    spec: GridSpec,
    values: Vec<bool>,
}

impl MaskGrid {
    pub fn all_false(spec: GridSpec) -> Self {
        MaskGrid { spec, values: vec![false; spec.len()] }
    }

    pub fn from_values(spec: GridSpec, values: Vec<bool>) -> Result<Self, GridError> {
        if values.len() != spec.len() {
            return Err(GridError::InvalidValues);
        }
        Ok(MaskGrid { spec, values })
    }

    /// Mask of cells where `f(value)` holds.
    pub fn from_grid(grid: &ScalarGrid, f: impl Fn(f64) -> bool) -> Self {
        MaskGrid {
            spec: *grid.spec(),
            values: grid.values().iter().map(|&v| f(v)).collect(),
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> bool {
        self.values[self.spec.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: bool) {
        let i = self.spec.idx(ix, iy);
        self.values[i] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }
}

/// Bilinear interpolation of the grid at `p` (mm). Nodes are cell centers;
/// inside the outer half-cell band the interpolant extends with the border
/// values. Errors if `p` lies outside the closed domain.
pub fn sample_bilinear(grid: &ScalarGrid, p: Vec2) -> Result<f64, GridError> {
    let spec = grid.spec();
    if !spec.contains(p) {
        return Err(GridError::OutOfDomain);
    }
    // Fractional index in cell-center coordinates, clamped to the node hull.
    let fx = ((p.x - spec.origin.x) / spec.dx - 0.5).clamp(0.0, (spec.nx - 1) as f64);
    let fy = ((p.y - spec.origin.y) / spec.dy - 0.5).clamp(0.0, (spec.ny - 1) as f64);
    let ix = (fx.floor() as usize).min(spec.nx - 2);
    let iy = (fy.floor() as usize).min(spec.ny - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let v00 = grid.at(ix, iy);
    let v10 = grid.at(ix + 1, iy);
    let v01 = grid.at(ix, iy + 1);
    let v11 = grid.at(ix + 1, iy + 1);
    Ok(v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty)
}

/// Per-cell gradient of the grid: central differences in the interior,
/// one-sided differences on the boundary. Returns (d/dx, d/dy) grids.
pub fn gradient(grid: &ScalarGrid) -> (ScalarGrid, ScalarGrid) {
    let spec = *grid.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let mut gx = ScalarGrid::zeros(spec);
    let mut gy = ScalarGrid::zeros(spec);
    for iy in 0..ny {
        for ix in 0..nx {
            let ddx = if ix == 0 {
                (grid.at(1, iy) - grid.at(0, iy)) / spec.dx
            } else if ix == nx - 1 {
                (grid.at(nx - 1, iy) - grid.at(nx - 2, iy)) / spec.dx
            } else {
                (grid.at(ix + 1, iy) - grid.at(ix - 1, iy)) / (2.0 * spec.dx)
            };
            let ddy = if iy == 0 {
                (grid.at(ix, 1) - grid.at(ix, 0)) / spec.dy
            } else if iy == ny - 1 {
                (grid.at(ix, ny - 1) - grid.at(ix, ny - 2)) / spec.dy
            } else {
                (grid.at(ix, iy + 1) - grid.at(ix, iy - 1)) / (2.0 * spec.dy)
            };
            *gx.at_mut(ix, iy) = ddx;
            *gy.at_mut(ix, iy) = ddy;
        }
    }
    (gx, gy)
}

/// Per-cell Euclidean norm of the gradient (kPa/mm for stiffness maps).
pub fn gradient_norm(grid: &ScalarGrid) -> ScalarGrid {
    let (gx, gy) = gradient(grid);
    let mut out = gx;
    for (o, &y) in out.values_mut().iter_mut().zip(gy.values()) {
        *o = (*o * *o + y * y).sqrt();
    }
    out
}

/// Midpoint-rule integral over the domain: sum of values times cell area.
pub fn integrate(grid: &ScalarGrid) -> f64 {
    let da = grid.spec().cell_area();
    grid.values().iter().sum::<f64>() * da
}

/// Scale a nonnegative grid so it integrates to one.
pub fn normalize_density(grid: &ScalarGrid) -> Result<ScalarGrid, GridError> {
    if grid.values().iter().any(|&v| v < 0.0) {
        return Err(GridError::InvalidValues);
    }
    let total = integrate(grid);
    if !(total > 0.0) {
        return Err(GridError::DegenerateDensity);
    }
    Ok(grid.map(|v| v / total))
}

/// The uniform probability density over the domain.
pub fn uniform_density(spec: GridSpec) -> ScalarGrid {
    ScalarGrid::constant(spec, 1.0 / spec.area())
}

/// Label the connected components of a boolean mask under 4-connectivity.
/// Returns row-major labels (0 = background, components numbered from 1 in
/// scan order) and the component count.
pub fn connected_components(mask: &MaskGrid) -> (Vec<u32>, u32) {
    let spec = *mask.spec();
    let (nx, ny) = (spec.nx, spec.ny);
    let mut labels = vec![0u32; spec.len()];
    let mut count = 0u32;
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            if !mask.at(ix, iy) || labels[spec.idx(ix, iy)] != 0 {
                continue;
            }
            count += 1;
            labels[spec.idx(ix, iy)] = count;
            stack.push((ix, iy));
            while let Some((cx, cy)) = stack.pop() {
                let mut visit = |nx_, ny_: usize| {
                    let i = spec.idx(nx_, ny_);
                    if mask.at(nx_, ny_) && labels[i] == 0 {
                        labels[i] = count;
                        stack.push((nx_, ny_));
                    }
                };
                if cx > 0 {
                    visit(cx - 1, cy);
                }
                if cx + 1 < nx {
                    visit(cx + 1, cy);
                }
                if cy > 0 {
                    visit(cx, cy - 1);
                }
                if cy + 1 < ny {
                    visit(cx, cy + 1);
                }
            }
        }
    }
    (labels, count)
}
