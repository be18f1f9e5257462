//! Expected Information Density: the target distribution for the ergodic
//! planner, blending predicted stiffness magnitude, stiffness-gradient norm,
//! and model uncertainty under a time-varying exploration weight alpha.

use crate::grid::{self, GridError, ScalarGrid};

/// Normalise a nonnegative term to a probability density, replacing a
/// zero-integral term by the uniform density. Before any data exists the
/// gradient and mean terms are identically zero; the uniform fallback keeps
/// the three-term structure well defined from the first tick.
fn term_density(term: &ScalarGrid) -> ScalarGrid {
    grid::normalize_density(term).unwrap_or_else(|_| grid::uniform_density(*term.spec()))
}

/// Compose the EID from the GP posterior mean and standard-deviation grids.
///
/// Weighted sum of three self-normalised terms: `(1 - alpha)` on the gradient
/// norm of the mean and on the (clamped nonnegative) mean itself, `alpha` on
/// the standard deviation; the result is normalised to a probability density.
pub fn compose_eid(
    mean: &ScalarGrid,
    std: &ScalarGrid,
    alpha: f64,
) -> Result<ScalarGrid, GridError> {
    if mean.spec() != std.spec() {
        return Err(GridError::SpecMismatch);
    }
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(GridError::InvalidValues);
    }
    let grad = term_density(&grid::gradient_norm(mean));
    let mean_pos = term_density(&mean.clamp_min(0.0));
    let std_term = term_density(std);

    let mut out = ScalarGrid::zeros(*mean.spec());
    let values = out.values_mut();
    for i in 0..values.len() {
        values[i] = (1.0 - alpha) * (grad.values()[i] + mean_pos.values()[i])
            + alpha * std_term.values()[i];
    }
    grid::normalize_density(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, Vec2};
    use approx::assert_relative_eq;

    fn spec() -> GridSpec {
        GridSpec::square(32, 45.0).unwrap()
    }

    fn bump(s: GridSpec, c: Vec2, w: f64, amp: f64) -> ScalarGrid {
        ScalarGrid::from_fn(s, |p| amp * (-(p - c).norm_squared() / (2.0 * w * w)).exp())
    }

    #[test]
    fn alpha_one_returns_normalized_std() {
        let s = spec();
        let mean = bump(s, Vec2::new(10.0, 10.0), 4.0, 80.0);
        let std = bump(s, Vec2::new(30.0, 30.0), 6.0, 3.0);
        let eid = compose_eid(&mean, &std, 1.0).unwrap();
        let want = grid::normalize_density(&std).unwrap();
        for i in 0..s.len() {
            assert_relative_eq!(eid.values()[i], want.values()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn alpha_zero_uniform_terms_give_uniform_density() {
        let s = spec();
        let mean = ScalarGrid::constant(s, 42.0); // gradient is zero -> uniform fallback
        let std = bump(s, Vec2::new(20.0, 20.0), 5.0, 2.0);
        let eid = compose_eid(&mean, &std, 0.0).unwrap();
        let unif = 1.0 / s.area();
        for &v in eid.values() {
            assert_relative_eq!(v, unif, epsilon = 1e-12);
        }
    }

    #[test]
    fn matches_cell_by_cell_formula_oracle() {
        let s = spec();
        let mean = bump(s, Vec2::new(15.0, 25.0), 5.0, 90.0);
        let std = bump(s, Vec2::new(32.0, 12.0), 7.0, 4.0);
        let alpha = 0.5;
        let eid = compose_eid(&mean, &std, alpha).unwrap();

        // Independent direct evaluation of the two-equation pipeline.
        let g = grid::gradient_norm(&mean);
        let ig = grid::integrate(&g);
        let im = grid::integrate(&mean);
        let is = grid::integrate(&std);
        let da = s.cell_area();
        let mut raw: alloc::vec::Vec<f64> = (0..s.len())
            .map(|i| {
                (1.0 - alpha) * (g.values()[i] / ig + mean.values()[i] / im)
                    + alpha * std.values()[i] / is
            })
            .collect();
        let total: f64 = raw.iter().sum::<f64>() * da;
        raw.iter_mut().for_each(|v| *v /= total);
        for i in 0..s.len() {
            assert_relative_eq!(eid.values()[i], raw[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn output_is_probability_density() {
        let s = spec();
        let mean = bump(s, Vec2::new(15.0, 25.0), 5.0, 90.0);
        let std = bump(s, Vec2::new(32.0, 12.0), 7.0, 4.0);
        for alpha in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let eid = compose_eid(&mean, &std, alpha).unwrap();
            assert!(eid.values().iter().all(|&v| v >= 0.0));
            assert_relative_eq!(grid::integrate(&eid), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn invariant_under_positive_rescaling_of_inputs() {
        let s = spec();
        let mean = bump(s, Vec2::new(15.0, 25.0), 5.0, 90.0);
        let std = bump(s, Vec2::new(32.0, 12.0), 7.0, 4.0);
        let a = compose_eid(&mean, &std, 0.4).unwrap();
        let b = compose_eid(&mean.map(|v| 3.7 * v), &std, 0.4).unwrap();
        let c = compose_eid(&mean, &std.map(|v| 0.01 * v), 0.4).unwrap();
        for i in 0..s.len() {
            assert_relative_eq!(a.values()[i], b.values()[i], epsilon = 1e-10);
            assert_relative_eq!(a.values()[i], c.values()[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn extreme_alphas_ignore_the_other_grid() {
        let s = spec();
        let mean1 = bump(s, Vec2::new(15.0, 25.0), 5.0, 90.0);
        let mean2 = bump(s, Vec2::new(40.0, 5.0), 3.0, 10.0);
        let std1 = bump(s, Vec2::new(32.0, 12.0), 7.0, 4.0);
        let std2 = bump(s, Vec2::new(5.0, 40.0), 2.0, 9.0);
        let a1 = compose_eid(&mean1, &std1, 1.0).unwrap();
        let a2 = compose_eid(&mean2, &std1, 1.0).unwrap();
        let b1 = compose_eid(&mean1, &std1, 0.0).unwrap();
        let b2 = compose_eid(&mean1, &std2, 0.0).unwrap();
        for i in 0..s.len() {
            assert_relative_eq!(a1.values()[i], a2.values()[i], epsilon = 1e-12);
            assert_relative_eq!(b1.values()[i], b2.values()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn mismatched_specs_rejected() {
        let a = ScalarGrid::constant(GridSpec::square(8, 45.0).unwrap(), 1.0);
        let b = ScalarGrid::constant(GridSpec::square(16, 45.0).unwrap(), 1.0);
        assert_eq!(compose_eid(&a, &b, 0.5), Err(GridError::SpecMismatch));
    }
}
