//! Thin wrappers over the DOP853 integrator.

use nalgebra::{Matrix3, SVector, Vector2};
use num_complex::Complex64;
use ode_solvers::{Dop853, OutputType, System};

use crate::error::{Result, WaveError};
use crate::nonlinearity::Nonlinearity;
use crate::wave_family::Oscillator;

pub(crate) const RTOL: f64 = 1e-12;
pub(crate) const ATOL: f64 = 1e-14;
const MAX_STEPS: u32 = 2_000_000;

/// Integrate `sys` from `x0` to `x1` and return the final state.
pub(crate) fn integrate<const N: usize, S>(sys: S, x0: f64, x1: f64, y0: SVector<f64, N>) -> Result<SVector<f64, N>>
where
    S: System<f64, SVector<f64, N>>,
{
    if x1 == x0 {
        return Ok(y0);
    }
    let mut solver = Dop853::from_param(
        sys,
        x0,
        x1,
        x1 - x0,
        y0,
        RTOL,
        ATOL,
        0.9,
        0.0,
        0.333,
        6.0,
        (x1 - x0).abs(),
        0.0,
        MAX_STEPS,
        // the variational system is stiff for large |mu|; accuracy is what matters here
        u32::MAX,
        OutputType::Sparse,
    );
    solver.integrate().map_err(|e| WaveError::IntegrationFailure { detail: e.to_string() })?;
    let last = solver.y_out().last().ok_or_else(|| WaveError::IntegrationFailure { detail: "no output".into() })?;
    if last.iter().any(|v| !v.is_finite()) {
        return Err(WaveError::IntegrationFailure { detail: "non-finite state".into() });
    }
    Ok(*last)
}

/// m u_xx = -V'(u).
pub(crate) struct ProfileSystem {
    pub osc: Oscillator,
    pub nl: Nonlinearity,
}

impl System<f64, Vector2<f64>> for ProfileSystem {
    fn system(&self, _x: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = y[1];
        dy[1] = -self.osc.potential_slope(&self.nl, y[0]) / self.osc.kinetic;
    }
}

/// States of the profile at each abscissa in `xs` (increasing, starting at or
/// after 0), starting from `(u0, 0)` at x = 0.
pub(crate) fn profile_at(osc: Oscillator, nl: &Nonlinearity, u0: f64, xs: &[f64]) -> Result<Vec<Vector2<f64>>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut x = 0.0;
    let mut y = Vector2::new(u0, 0.0);
    for &target in xs {
        y = integrate(ProfileSystem { osc, nl: nl.clone() }, x, target, y)?;
        x = target;
        out.push(y);
    }
    Ok(out)
}

/// Profile (u, u_x) and the 3x3 complex fundamental matrix, integrated jointly.
///
/// State layout: `[u, u_x, Re Phi (row-major), Im Phi (row-major)]`.
pub(crate) struct VariationalSystem {
    pub a: f64,
    pub c: f64,
    pub mu: Complex64,
    pub nl: Nonlinearity,
}

impl System<f64, SVector<f64, 20>> for VariationalSystem {
    fn system(&self, _x: f64, y: &SVector<f64, 20>, dy: &mut SVector<f64, 20>) {
        let (u, ux) = (y[0], y[1]);
        let c = self.c;
        dy[0] = ux;
        dy[1] = -(self.nl.f(u) - (c - 1.0) * u - self.a) / c;
        let h20 = -(self.mu + ux * self.nl.d2f(u)) / c;
        let h21 = (c - 1.0 - self.nl.df(u)) / c;
        let h22 = self.mu / c;
        for col in 0..3 {
            let phi = |row: usize| Complex64::new(y[2 + 3 * row + col], y[11 + 3 * row + col]);
            let (p0, p1, p2) = (phi(0), phi(1), phi(2));
            let d = [p1, p2, h20 * p0 + p1 * h21 + h22 * p2];
            for (row, v) in d.iter().enumerate() {
                dy[2 + 3 * row + col] = v.re;
                dy[11 + 3 * row + col] = v.im;
            }
        }
    }
}

pub(crate) fn variational_initial(u0: f64) -> SVector<f64, 20> {
    let mut y = SVector::<f64, 20>::zeros();
    y[0] = u0;
    for k in 0..3 {
        y[2 + 4 * k] = 1.0;
    }
    y
}

pub(crate) fn unpack_matrix(y: &SVector<f64, 20>) -> Matrix3<Complex64> {
    Matrix3::from_fn(|r, c| Complex64::new(y[2 + 3 * r + c], y[11 + 3 * r + c]))
}
