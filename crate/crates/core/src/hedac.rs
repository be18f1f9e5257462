//! Heat-equation-driven ergodic controller: kernel coverage accounting, the
//! ergodic error and its scalar summary alpha, source construction from
//! undercoverage, explicit heat diffusion of the source into a potential,
//! and second-order agent steering along the potential gradient.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;


use crate::grid::{self, GridSpec, ScalarGrid, Vec2};

/// Kernel stencils are truncated at this many standard deviations.
const KERNEL_SUPPORT_SIGMAS: f64 = 4.0;
/// Gradient magnitudes below this are treated as a flat potential.
const FLAT_GRADIENT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HedacError {
    /// Explicit diffusion step exceeds the stability bound min(dx,dy)^2 / 4.
    UnstableDiffusion,
    /// Parameter out of range (nonpositive dt, sigma, speed or step limits).
    InvalidParameter,
    /// Agent or deposit position outside the domain.
    OutOfDomain,
    /// Target density is degenerate (zero undercoverage normaliser).
    DegenerateTarget,
}

impl fmt::Display for HedacError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HedacError::UnstableDiffusion => {
                write!(f, "diffusion_dt violates the explicit-scheme stability bound")
            }
            HedacError::InvalidParameter => write!(f, "parameter out of range"),
            HedacError::OutOfDomain => write!(f, "position outside the domain"),
            HedacError::DegenerateTarget => write!(f, "target density has no undercoverage mass"),
        }
    }
}

impl core::error::Error for HedacError {}

/// Controller parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HedacParams {
    /// Coverage kernel width sigma (mm).
    pub kernel_sigma: f64,
    /// Maximum agent speed (mm/s).
    pub v_max: f64,
    /// Maximum agent acceleration (mm/s^2).
    pub a_max: f64,
    /// Explicit heat steps applied when the potential is rebuilt.
    pub diffusion_steps: usize,
    /// Heat-equation step (s, unit diffusivity); must satisfy the
    /// explicit-scheme stability bound for the grid in use.
    pub diffusion_dt: f64,
    /// Control period Delta T (s).
    pub control_dt: f64,
}

impl HedacParams {
    /// Defaults tuned for the 45 mm domain: kernel at half the sample
    /// spacing envelope, 100 Hz control, diffusion step at 80% of the
    /// stability bound for the given grid.
    pub fn for_grid(spec: &GridSpec) -> Self {
        let h2 = spec.dx.min(spec.dy).powi(2);
        HedacParams {
            kernel_sigma: 2.5,
            v_max: 10.0,
            a_max: 50.0,
            diffusion_steps: 20,
            diffusion_dt: 0.2 * h2,
            control_dt: 0.01,
        }
    }

    pub fn validate(&self, spec: &GridSpec) -> Result<(), HedacError> {
        if !(self.kernel_sigma > 0.0)
            || !(self.v_max > 0.0)
            || !(self.a_max > 0.0)
            || !(self.diffusion_dt > 0.0)
            || !(self.control_dt > 0.0)
        {
            return Err(HedacError::InvalidParameter);
        }
        let bound = spec.dx.min(spec.dy).powi(2) / 4.0;
        if self.diffusion_dt > bound * (1.0 + 1e-12) {
            return Err(HedacError::UnstableDiffusion);
        }
        Ok(())
    }
}

/// Probe agent with second-order dynamics and trajectory history.
#[derive(Clone, Debug)]
pub struct AgentState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Time-stamped positions (s, mm).
    pub history: Vec<(f64, Vec2)>,
}

impl AgentState {
    pub fn at_rest(position: Vec2) -> Self {
        AgentState { position, velocity: Vec2::zeros(), history: Vec::new() }
    }

    pub fn record(&mut self, t: f64) {
        self.history.push((t, self.position));
    }

    /// Total path length of the recorded history (mm).
    pub fn path_length(&self) -> f64 {
        self.history
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).norm())
            .sum()
    }
}

/// Accumulated kernel coverage, elapsed time, and the heat potential.
#[derive(Clone, Debug)]
pub struct CoverageState {
    /// Unnormalised kernel mass (integral grows linearly with dwell time).
    mass: ScalarGrid,
    /// Elapsed coverage time (s).
    time: f64,
    /// Heat potential steering the agent.
    potential: ScalarGrid,
    scratch: Vec<f64>,
}

impl CoverageState {
    pub fn new(spec: GridSpec) -> Self {
        CoverageState {
            mass: ScalarGrid::zeros(spec),
            time: 0.0,
            potential: ScalarGrid::zeros(spec),
            scratch: vec![0.0; spec.len()],
        }
    }

    #[inline]
    pub fn spec(&self) -> &GridSpec {
        self.mass.spec()
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    #[inline]
    pub fn potential(&self) -> &ScalarGrid {
        &self.potential
    }

    /// Normalised coverage density c(x, t); identically zero before any
    /// coverage has been deposited.
    pub fn coverage_density(&self) -> ScalarGrid {
        grid::normalize_density(&self.mass)
            .unwrap_or_else(|_| ScalarGrid::zeros(*self.mass.spec()))
    }

    /// Test/bootstrap hook: overwrite the accumulated kernel mass.
    pub fn set_mass(&mut self, mass: ScalarGrid, time: f64) {
        self.mass = mass;
        self.time = time;
    }
}

/// Accumulate the coverage kernel around `z` for a dwell of `dt` seconds.
pub fn deposit_coverage(
    state: &mut CoverageState,
    z: Vec2,
    dt: f64,
    params: &HedacParams,
) -> Result<(), HedacError> {
    if !(dt > 0.0) {
        return Err(HedacError::InvalidParameter);
    }
    let spec = *state.spec();
    if !spec.contains(z) {
        return Err(HedacError::OutOfDomain);
    }
    let sigma = params.kernel_sigma;
    let rx = ((KERNEL_SUPPORT_SIGMAS * sigma) / spec.dx).ceil() as isize;
    let ry = ((KERNEL_SUPPORT_SIGMAS * sigma) / spec.dy).ceil() as isize;
    let fx = (z.x - spec.origin.x) / spec.dx - 0.5;
    let fy = (z.y - spec.origin.y) / spec.dy - 0.5;
    let cx = fx.round() as isize;
    let cy = fy.round() as isize;
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    // Separable evaluation: one exp per axis offset instead of per cell.
    // Each deposit is normalised over its in-domain stencil so it carries
    // exactly dt of discrete kernel mass; a dwell split across deposits is
    // then exactly the weighted mixture of the individual kernels.
    let mut wx = Vec::with_capacity((2 * rx + 1) as usize);
    let mut ix_range = Vec::with_capacity((2 * rx + 1) as usize);
    for ix in cx - rx..=cx + rx {
        if ix < 0 || ix >= spec.nx as isize {
            continue;
        }
        let d = (ix as f64 - fx) * spec.dx;
        wx.push((-d * d * inv2s2).exp());
        ix_range.push(ix as usize);
    }
    let mut wy = Vec::with_capacity((2 * ry + 1) as usize);
    let mut iy_range = Vec::with_capacity((2 * ry + 1) as usize);
    for iy in cy - ry..=cy + ry {
        if iy < 0 || iy >= spec.ny as isize {
            continue;
        }
        let d = (iy as f64 - fy) * spec.dy;
        wy.push((-d * d * inv2s2).exp());
        iy_range.push(iy as usize);
    }
    let sum_x: f64 = wx.iter().sum();
    let sum_y: f64 = wy.iter().sum();
    let scale = dt / (sum_x * sum_y * spec.cell_area());
    for (ky, &iy) in iy_range.iter().enumerate() {
        let wyv = scale * wy[ky];
        let row = iy * spec.nx;
        let values = state.mass.values_mut();
        for (kx, &ix) in ix_range.iter().enumerate() {
            values[row + ix] += wyv * wx[kx];
        }
    }
    state.time += dt;
    Ok(())
}

/// Discrete 1D Gaussian kernel over integer cell offsets, normalised to
/// sum 1, truncated at the support radius.
fn kernel_1d(sigma: f64, cell: f64) -> Vec<f64> {
    let r = ((KERNEL_SUPPORT_SIGMAS * sigma) / cell).ceil() as isize;
    let inv2s2 = 1.0 / (2.0 * sigma * sigma);
    let mut w: Vec<f64> = (-r..=r)
        .map(|k| {
            let d = k as f64 * cell;
            (-d * d * inv2s2).exp()
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

#[inline]
fn reflect(i: isize, n: isize) -> usize {
    // Half-sample symmetric reflection: -1 -> 0, n -> n-1.
    let mut k = i;
    loop {
        if k < 0 {
            k = -k - 1;
        } else if k >= n {
            k = 2 * n - 1 - k;
        } else {
            return k as usize;
        }
    }
}

/// Kernel smoothing of the target density: (phi_sigma * m) with zero-flux
/// (reflective) padding. Conserves the integral exactly for the symmetric
/// kernel, so the smoothed target remains a probability density.
pub fn smooth_target(m: &ScalarGrid, sigma: f64) -> ScalarGrid {
    let spec = *m.spec();
    let (nx, ny) = (spec.nx as isize, spec.ny as isize);
    let wx = kernel_1d(sigma, spec.dx);
    let wy = kernel_1d(sigma, spec.dy);
    let rx = (wx.len() / 2) as isize;
    let ry = (wy.len() / 2) as isize;

    // Pass along x.
    let mut tmp = vec![0.0; spec.len()];
    for iy in 0..ny {
        let row = (iy as usize) * spec.nx;
        for ix in 0..nx {
            let mut s = 0.0;
            for (k, w) in wx.iter().enumerate() {
                let j = reflect(ix + k as isize - rx, nx);
                s += w * m.values()[row + j];
            }
            tmp[row + ix as usize] = s;
        }
    }
    // Pass along y.
    let mut out = ScalarGrid::zeros(spec);
    for ix in 0..nx {
        for iy in 0..ny {
            let mut s = 0.0;
            for (k, w) in wy.iter().enumerate() {
                let j = reflect(iy + k as isize - ry, ny);
                s += w * tmp[j * spec.nx as usize + ix as usize];
            }
            *out.at_mut(ix as usize, iy as usize) = s;
        }
    }
    out
}

/// Ergodic error e(x, t) = (phi_sigma * m)(x) - c(x, t). At t = 0 the
/// coverage density is identically zero, so e is the smoothed target.
pub fn ergodic_error(m: &ScalarGrid, state: &CoverageState, params: &HedacParams) -> ScalarGrid {
    let smoothed = smooth_target(m, params.kernel_sigma);
    let c = state.coverage_density();
    let mut e = smoothed;
    for (ev, cv) in e.values_mut().iter_mut().zip(c.values()) {
        *ev -= cv;
    }
    e
}

/// Undercoverage integral of an ergodic-error grid: integral of max(e, 0).
pub fn undercoverage(e: &ScalarGrid) -> f64 {
    grid::integrate(&e.clamp_min(0.0))
}

/// Exploration weight alpha(t): undercoverage of the current error
/// normalised by the undercoverage at t = 0 (where e = phi * m), clamped to
/// [0, 1]. The raw signed integral of e is ~0 by construction, so the
/// positive part is used.
pub fn alpha(m: &ScalarGrid, state: &CoverageState, params: &HedacParams) -> Result<f64, HedacError> {
    let smoothed = smooth_target(m, params.kernel_sigma);
    let denom = undercoverage(&smoothed);
    if !(denom > 1e-300) {
        return Err(HedacError::DegenerateTarget);
    }
    let c = state.coverage_density();
    let mut e = smoothed;
    for (ev, cv) in e.values_mut().iter_mut().zip(c.values()) {
        *ev -= cv;
    }
    Ok((undercoverage(&e) / denom).clamp(0.0, 1.0))
}

/// Source term for the heat equation: squared positive part of the ergodic
/// error, normalised to a density; uniform if there is no undercoverage.
pub fn source_from_error(e: &ScalarGrid) -> ScalarGrid {
    let s = e.map(|v| if v > 0.0 { v * v } else { 0.0 });
    grid::normalize_density(&s).unwrap_or_else(|_| grid::uniform_density(*e.spec()))
}

/// Rebuild the heat potential: reset u to the source and apply
/// `diffusion_steps` explicit Euler steps of the heat equation with
/// zero-flux (Neumann) boundaries.
pub fn diffuse_potential(
    state: &mut CoverageState,
    source: &ScalarGrid,
    params: &HedacParams,
) -> Result<(), HedacError> {
    let spec = *state.spec();
    params.validate(&spec)?;
    state.potential = source.clone();
    let (nx, ny) = (spec.nx, spec.ny);
    let kx = params.diffusion_dt / (spec.dx * spec.dx);
    let ky = params.diffusion_dt / (spec.dy * spec.dy);
    for _ in 0..params.diffusion_steps {
        let u = state.potential.values();
        let next = &mut state.scratch;
        for iy in 0..ny {
            let row = iy * nx;
            let below = if iy == 0 { row } else { row - nx };
            let above = if iy == ny - 1 { row } else { row + nx };
            for ix in 0..nx {
                let c = u[row + ix];
                let w = if ix == 0 { c } else { u[row + ix - 1] };
                let e = if ix == nx - 1 { c } else { u[row + ix + 1] };
                let s = u[below + ix];
                let n = u[above + ix];
                next[row + ix] = c + kx * (w + e - 2.0 * c) + ky * (s + n - 2.0 * c);
            }
        }
        state.potential.swap_values(next);
    }
    Ok(())
}

/// Gradient of the potential bilinearly interpolated at `p`: per-node
/// central differences (one-sided at the boundary) on the four surrounding
/// cell centers.
pub fn potential_gradient(u: &ScalarGrid, p: Vec2) -> Vec2 {
    let spec = *u.spec();
    let node = |ix: usize, iy: usize| -> Vec2 {
        let ddx = if ix == 0 {
            (u.at(1, iy) - u.at(0, iy)) / spec.dx
        } else if ix == spec.nx - 1 {
            (u.at(spec.nx - 1, iy) - u.at(spec.nx - 2, iy)) / spec.dx
        } else {
            (u.at(ix + 1, iy) - u.at(ix - 1, iy)) / (2.0 * spec.dx)
        };
        let ddy = if iy == 0 {
            (u.at(ix, 1) - u.at(ix, 0)) / spec.dy
        } else if iy == spec.ny - 1 {
            (u.at(ix, spec.ny - 1) - u.at(ix, spec.ny - 2)) / spec.dy
        } else {
            (u.at(ix, iy + 1) - u.at(ix, iy - 1)) / (2.0 * spec.dy)
        };
        Vec2::new(ddx, ddy)
    };
    let fx = ((p.x - spec.origin.x) / spec.dx - 0.5).clamp(0.0, (spec.nx - 1) as f64);
    let fy = ((p.y - spec.origin.y) / spec.dy - 0.5).clamp(0.0, (spec.ny - 1) as f64);
    let ix = (fx.floor() as usize).min(spec.nx - 2);
    let iy = (fy.floor() as usize).min(spec.ny - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    node(ix, iy) * (1.0 - tx) * (1.0 - ty)
        + node(ix + 1, iy) * tx * (1.0 - ty)
        + node(ix, iy + 1) * (1.0 - tx) * ty
        + node(ix + 1, iy + 1) * tx * ty
}

/// Advance the second-order agent one control step: accelerate at `a_max`
/// up the potential gradient, clip speed to `v_max`, integrate, and reflect
/// specularly off the domain boundary. A flat potential leaves the current
/// velocity unchanged.
pub fn steer(
    agent: &mut AgentState,
    u: &ScalarGrid,
    params: &HedacParams,
    dt: f64,
) -> Result<(), HedacError> {
    let spec = *u.spec();
    if !spec.contains(agent.position) {
        return Err(HedacError::OutOfDomain);
    }
    let g = potential_gradient(u, agent.position);
    let gn = g.norm();
    if gn >= FLAT_GRADIENT_EPS {
        agent.velocity += g * (params.a_max / gn) * dt;
    }
    let speed = agent.velocity.norm();
    if speed > params.v_max {
        agent.velocity *= params.v_max / speed;
    }
    let mut p = agent.position + agent.velocity * dt;
    // Specular reflection keeps the agent inside the closed domain.
    let lo = spec.origin;
    let hi = spec.origin + spec.extent();
    for axis in 0..2 {
        let (l, h) = (lo[axis], hi[axis]);
        let mut guard = 0;
        while (p[axis] < l || p[axis] > h) && guard < 64 {
            if p[axis] < l {
                p[axis] = 2.0 * l - p[axis];
            } else {
                p[axis] = 2.0 * h - p[axis];
            }
            agent.velocity[axis] = -agent.velocity[axis];
            guard += 1;
        }
        p[axis] = p[axis].clamp(l, h);
    }
    agent.position = p;
    Ok(())
}
