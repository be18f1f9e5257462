//! Viscoelastic spherical-indenter contact model via dimensionality
//! reduction: Hertzian elastic term plus a damping term, both scaling with
//! sqrt(R d). All quantities are SI (m, Pa, N, s); conversion to the kPa/mm
//! world of the maps happens at the harness boundary.

use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Operating envelope for continuous estimation (m/s).
pub const MAX_INDENTATION_SPEED: f64 = 5.0e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ContactError {
    /// Material parameters violate E > 0, eta >= 0, 0 <= nu < 0.5, R > 0.
    InvalidMaterial,
    /// Penetration depth must be nonnegative.
    InvalidPenetration,
    /// Profile leaves d >= 0 or exceeds the indentation-speed envelope.
    InvalidProfile,
}

impl fmt::Display for ContactError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContactError::InvalidMaterial => write!(f, "invalid material parameters"),
            ContactError::InvalidPenetration => write!(f, "penetration depth must be >= 0"),
            ContactError::InvalidProfile => {
                write!(f, "profile violates d >= 0 or the indentation-speed envelope")
            }
        }
    }
}

impl core::error::Error for ContactError {}

/// Material and indenter parameters of the contact pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus (Pa).
    pub young_modulus: f64,
    /// Viscosity coefficient (Pa s).
    pub viscosity: f64,
    /// Poisson ratio.
    pub poisson_ratio: f64,
    /// Spherical indenter radius (m).
    pub indenter_radius: f64,
}

impl MaterialParams {
    pub fn new(
        young_modulus: f64,
        viscosity: f64,
        poisson_ratio: f64,
        indenter_radius: f64,
    ) -> Result<Self, ContactError> {
        if young_modulus > 0.0
            && viscosity >= 0.0
            && (0.0..0.5).contains(&poisson_ratio)
            && indenter_radius > 0.0
        {
            Ok(MaterialParams { young_modulus, viscosity, poisson_ratio, indenter_radius })
        } else {
            Err(ContactError::InvalidMaterial)
        }
    }
}

/// Lumped force-law coefficients: F = k d^(3/2) + lambda sqrt(d) d_dot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LumpedParams {
    /// Stiffness (N / m^(3/2)).
    pub stiffness: f64,
    /// Damping (N s / m^(3/2)).
    pub damping: f64,
}

impl LumpedParams {
    /// Contact force (N) from the lumped form. `d` is clamped at 0 from
    /// below by the caller; negative stiffness estimates (transients in the
    /// filter) are evaluated as-is.
    #[inline]
    pub fn force(&self, d: f64, d_dot: f64) -> f64 {
        let sqrt_d = d.max(0.0).sqrt();
        self.stiffness * sqrt_d * d + self.damping * sqrt_d * d_dot
    }
}

/// Total contact force (N): Hertzian elastic term plus viscous damping.
pub fn total_force(params: &MaterialParams, d: f64, d_dot: f64) -> Result<f64, ContactError> {
    if d < 0.0 {
        return Err(ContactError::InvalidPenetration);
    }
    let sqrt_rd = (params.indenter_radius * d).sqrt();
    let elastic = 4.0 / 3.0 * params.young_modulus / (1.0 - params.poisson_ratio.powi(2))
        * sqrt_rd
        * d;
    let damping = 4.0 / (1.0 - params.poisson_ratio) * params.viscosity * sqrt_rd * d_dot;
    Ok(elastic + damping)
}

/// Aggregate material parameters into the lumped coefficients.
pub fn to_lumped(params: &MaterialParams) -> LumpedParams {
    let sqrt_r = params.indenter_radius.sqrt();
    LumpedParams {
        stiffness: 4.0 / 3.0 * params.young_modulus / (1.0 - params.poisson_ratio.powi(2))
            * sqrt_r,
        damping: 4.0 * params.viscosity * sqrt_r / (1.0 - params.poisson_ratio),
    }
}

/// Recover material parameters from lumped coefficients at known Poisson
/// ratio and indenter radius. Exact inverse of `to_lumped`.
pub fn from_lumped(
    lumped: &LumpedParams,
    poisson_ratio: f64,
    indenter_radius: f64,
) -> MaterialParams {
    let sqrt_r = indenter_radius.sqrt();
    MaterialParams {
        young_modulus: lumped.stiffness * 3.0 * (1.0 - poisson_ratio.powi(2)) / (4.0 * sqrt_r),
        viscosity: lumped.damping * (1.0 - poisson_ratio) / (4.0 * sqrt_r),
        poisson_ratio,
        indenter_radius,
    }
}

/// Piecewise-constant-rate indentation schedule starting from d = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct IndentationSchedule {
    /// Sample period (s).
    pub dt: f64,
    /// (duration s, rate m/s) segments.
    pub segments: Vec<(f64, f64)>,
}

impl IndentationSchedule {
    /// Probing cycle used for full-physics sampling: descend at
    /// `approach_speed` to `target_depth`, then hold. With the defaults
    /// (2 mm/s, 2 mm, 0.25 s) the cycle lasts 1.25 s.
    pub fn dwell(approach_speed: f64, target_depth: f64, hold_time: f64, dt: f64) -> Self {
        let descend = target_depth / approach_speed;
        IndentationSchedule {
            dt,
            segments: alloc::vec![(descend, approach_speed), (hold_time, 0.0)],
        }
    }

    /// Dwell cycle followed by retraction to the surface.
    pub fn dwell_with_retract(
        approach_speed: f64,
        target_depth: f64,
        hold_time: f64,
        dt: f64,
    ) -> Self {
        let descend = target_depth / approach_speed;
        IndentationSchedule {
            dt,
            segments: alloc::vec![
                (descend, approach_speed),
                (hold_time, 0.0),
                (descend, -approach_speed),
            ],
        }
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|(len, _)| len).sum()
    }
}

/// Time-stamped indentation trace: penetration, rate, and contact force.
#[derive(Clone, Debug, PartialEq)]
pub struct IndentationTrace {
    pub time: Vec<f64>,
    pub depth: Vec<f64>,
    pub rate: Vec<f64>,
    pub force: Vec<f64>,
}

impl IndentationTrace {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }
}

/// Generate a synthetic indentation trace for the given material and
/// schedule, with optional Gaussian force noise. Deterministic per seed.
pub fn synth_trace(
    params: &MaterialParams,
    schedule: &IndentationSchedule,
    force_noise_std: f64,
    seed: u64,
) -> Result<IndentationTrace, ContactError> {
    if !(schedule.dt > 0.0) || force_noise_std < 0.0 {
        return Err(ContactError::InvalidProfile);
    }
    if schedule.segments.iter().any(|(_, rate)| rate.abs() > MAX_INDENTATION_SPEED) {
        return Err(ContactError::InvalidProfile);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, force_noise_std.max(f64::MIN_POSITIVE))
        .map_err(|_| ContactError::InvalidProfile)?;

    let steps = (schedule.total_time() / schedule.dt).round() as usize;
    let mut trace = IndentationTrace {
        time: Vec::with_capacity(steps + 1),
        depth: Vec::with_capacity(steps + 1),
        rate: Vec::with_capacity(steps + 1),
        force: Vec::with_capacity(steps + 1),
    };
    let mut d = 0.0f64;
    let mut seg = 0usize;
    let mut seg_left = schedule.segments.first().map(|s| s.0).unwrap_or(0.0);
    for k in 0..=steps {
        let t = k as f64 * schedule.dt;
        let rate = schedule.segments.get(seg).map(|s| s.1).unwrap_or(0.0);
        if d < -1e-12 {
            return Err(ContactError::InvalidProfile);
        }
        d = d.max(0.0);
        let mut f = total_force(params, d, rate)?;
        if force_noise_std > 0.0 {
            f += noise.sample(&mut rng);
        }
        trace.time.push(t);
        trace.depth.push(d);
        trace.rate.push(rate);
        trace.force.push(f);
        // Advance within the schedule.
        d += rate * schedule.dt;
        seg_left -= schedule.dt;
        while seg_left <= 1e-12 && seg + 1 < schedule.segments.len() {
            seg += 1;
            seg_left += schedule.segments[seg].0;
        }
    }
    Ok(trace)
}
