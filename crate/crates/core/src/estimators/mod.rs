//! Estimators for the random attracting and repelling points, the extremal
//! derivative exponents, stationary measures and the quantities built from
//! them. Every estimator is a pure function of its explicit seed.

mod exponents;
mod measure_stats;
mod points;

pub use exponents::{
    arc_dichotomy, exponents_integral, extremal_exponents_kingman, pi_attraction_rate,
    pointwise_exponent, sync_rate,
};
pub use measure_stats::{
    dimension_identity_residual, furstenberg_entropy, local_dimension, sample_stationary,
    suggested_entropy_radius, telescoping_residual, DimensionIdentity, DimensionRunConfig,
    StationarySample,
};
pub use points::{estimate_pi, estimate_theta, estimate_theta_argmax, equivariance_residuals};

const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of f on [lo, hi]; returns (argmax, max).
/// Correct when f is unimodal on the bracket; on anything else it still
/// returns a genuine evaluation, so using it for refinement can only
/// sharpen a grid bound, never fake one.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut c = hi - INVPHI * (hi - lo);
    let mut d = lo + INVPHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INVPHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INVPHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
