//! Periodic traveling waves by quadrature.
//!
//! A wave with speed c and integration constants (a, E) is an orbit of
//! (c/2) u_x^2 + V(u) = E inside one well of the effective potential
//! V(u) = F(u) - ((c-1)/2) u^2 - a u.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::nonlinearity::Nonlinearity;
use crate::ode;

const QUAD_RTOL: f64 = 1e-10;
const QUAD_MIN_NODES: usize = 32;
const QUAD_MAX_NODES: usize = 8192;
const SLOPE_NODES: usize = 16;
const FD_REL_STEP: f64 = 1e-5;

/// Integration constants and speed selecting one periodic orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub a: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub c: f64,
    /// A point strictly inside the intended orbit's turning-point interval.
    pub branch_hint: f64,
}

impl WaveParams {
    pub fn new(a: f64, energy: f64, c: f64, branch_hint: f64) -> Self {
        Self { a, energy, c, branch_hint }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.energy, self.c, self.branch_hint].iter().all(|v| v.is_finite());
        if !finite {
            return Err(WaveError::invalid("wave parameters must be finite"));
        }
        if self.c <= 1.0 {
            return Err(WaveError::invalid(format!("wave speed must exceed 1, got {}", self.c)));
        }
        Ok(())
    }

    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::A => self.a,
            Param::E => self.energy,
            Param::C => self.c,
        }
    }

    pub fn with(&self, param: Param, value: f64) -> Self {
        let mut out = *self;
        match param {
            Param::A => out.a = value,
            Param::E => out.energy = value,
            Param::C => out.c = value,
        }
        out
    }
}

/// Functionals of the wave that are differentiated with respect to (a, E, c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Functional {
    T,
    M,
    P,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::T, Functional::M, Functional::P];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Wave parameters with respect to which gradients are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    A,
    E,
    C,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::A, Param::E, Param::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::E => "E",
            Param::C => "c",
        }
    }
}

/// Orbit of (m/2) u_x^2 + F(u) - q u^2 - a u = E.
///
/// The traveling-wave equation has m = c and q = (c-1)/2; the rescaled
/// equations used by the asymptotics module use other values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Oscillator {
    pub kinetic: f64,
    pub quadratic: f64,
    pub a: f64,
    pub energy: f64,
}

impl Oscillator {
    pub fn of_wave(p: &WaveParams) -> Self {
        Self { kinetic: p.c, quadratic: 0.5 * (p.c - 1.0), a: p.a, energy: p.energy }
    }

    pub fn potential(&self, nl: &Nonlinearity, u: f64) -> f64 {
        nl.antiderivative(u) - self.quadratic * u * u - self.a * u
    }

    pub fn potential_slope(&self, nl: &Nonlinearity, u: f64) -> f64 {
        nl.f(u) - 2.0 * self.quadratic * u - self.a
    }

    pub fn potential_curvature(&self, nl: &Nonlinearity, u: f64) -> f64 {
        nl.df(u) - 2.0 * self.quadratic
    }

    fn gap(&self, nl: &Nonlinearity, u: f64) -> f64 {
        self.energy - self.potential(nl, u)
    }

    /// Consecutive simple roots of E - V bracketing `hint`.
    pub fn turning_points(&self, nl: &Nonlinearity, hint: f64) -> Result<TurningPoints> {
        let g0 = self.gap(nl, hint);
        if !(g0 > 0.0) {
            if let Some(bottom) = self.well_bottom(nl, hint) {
                if self.gap(nl, bottom).abs() <= 1e-12 * (1.0 + self.energy.abs()) {
                    return Err(WaveError::DegenerateTurningPoint { u: bottom, slope: 0.0 });
                }
            }
            return Err(WaveError::NoOrbit { hint, gap: g0 });
        }
        let mut last_err = WaveError::NoBracket { side: "left" };
        for refine in [1.0, 0.1, 0.01] {
            let lo = self.scan(nl, hint, -1.0, refine)?;
            let hi = self.scan(nl, hint, 1.0, refine)?;
            if self.interior_allowed(nl, lo, hi) {
                return self.check_simple(nl, lo, hi);
            }
            last_err = WaveError::NoBracket { side: "interior" };
        }
        Err(last_err)
    }

    fn well_bottom(&self, nl: &Nonlinearity, start: f64) -> Option<f64> {
        let mut u = start;
        for _ in 0..60 {
            let curv = self.potential_curvature(nl, u);
            if !(curv > 0.0) {
                return None;
            }
            let step = self.potential_slope(nl, u) / curv;
            u -= step;
            if step.abs() <= 1e-15 * u.abs().max(1.0) {
                return ((u - start).abs() < start.abs().max(1.0)).then_some(u);
            }
        }
        None
    }

    /// Walk away from `hint` until E - V changes sign, then bisect.
    fn scan(&self, nl: &Nonlinearity, hint: f64, dir: f64, refine: f64) -> Result<f64> {
        let side = if dir < 0.0 { "left" } else { "right" };
        let scale = hint.abs().max(1.0);
        let min_step = 1e-7 * scale * refine;
        let mut max_step = 1e-3 * scale * refine;
        let mut x = hint;
        let mut gx = self.gap(nl, hint);
        let mut g_before = f64::NAN;
        let mut g_peak = gx;
        loop {
            // slope of the gap along the walk; a convex gap cannot be overshot by
            // much when the step follows the tangent
            let slope = dir * -self.potential_slope(nl, x);
            let mut step = max_step;
            if slope < 0.0 {
                step = step.min((1.2 * gx / -slope).max(min_step));
            }
            let next = x + dir * step;
            let gn = self.gap(nl, next);
            if !(gn > 0.0) {
                return Ok(self.bisect(nl, x, next));
            }
            if gx < g_before && gn > gx && gx <= 1e-8 * g_peak {
                // E - V touches zero without crossing: a separatrix passes here
                return Err(WaveError::DegenerateTurningPoint { u: x, slope: self.potential_slope(nl, x).abs() });
            }
            g_peak = g_peak.max(gn);
            g_before = gx;
            x = next;
            gx = gn;
            max_step = (max_step * 1.25).min(0.1 * scale.max((x - hint).abs()));
            if (x - hint).abs() > 1e4 * scale {
                return Err(WaveError::NoBracket { side });
            }
        }
    }

    fn bisect(&self, nl: &Nonlinearity, allowed: f64, forbidden: f64) -> f64 {
        let (mut lo, mut hi) = (allowed, forbidden);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.gap(nl, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (glo, ghi) = (self.gap(nl, lo), self.gap(nl, hi));
        if ghi.is_finite() && ghi.abs() < glo.abs() {
            hi
        } else {
            lo
        }
    }

    fn interior_allowed(&self, nl: &Nonlinearity, lo: f64, hi: f64) -> bool {
        (1..64).all(|k| self.gap(nl, lo + (hi - lo) * k as f64 / 64.0) > 0.0)
    }

    fn check_simple(&self, nl: &Nonlinearity, lo: f64, hi: f64) -> Result<TurningPoints> {
        let (sm, sp) = (self.potential_slope(nl, lo), self.potential_slope(nl, hi));
        let tol = |u: f64| 1e-8 * u.abs().max(1.0);
        if sm.abs() < tol(lo) {
            return Err(WaveError::DegenerateTurningPoint { u: lo, slope: sm.abs() });
        }
        if sp.abs() < tol(hi) {
            return Err(WaveError::DegenerateTurningPoint { u: hi, slope: sp.abs() });
        }
        Ok(TurningPoints { u_minus: lo, u_plus: hi, v_prime_at_minus: sm, v_prime_at_plus: sp, simple: [true, true] })
    }

    /// Half-cycle integrals over [u_-, u_+]:
    /// du/sqrt(2R), u du/sqrt(2R), u^2 du/sqrt(2R) and sqrt(R) du with R = E - V.
    pub(crate) fn half_cycle_integrals(&self, nl: &Nonlinearity, tp: &TurningPoints) -> Result<HalfCycle> {
        let slope_rule: Vec<(f64, f64)> =
            legendre(SLOPE_NODES).into_iter().map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();
        let mean_slope = |lo: f64, hi: f64| -> f64 {
            slope_rule.iter().map(|&(t, w)| w * self.potential_slope(nl, lo + t * (hi - lo))).sum()
        };
        let (um, up) = (tp.u_minus, tp.u_plus);
        let d = up - um;
        let umax = um.abs().max(up.abs()).max(1.0);
        let eval = |n: usize| -> [f64; 4] {
            let mut acc = [0.0; 4];
            for (x, w) in legendre(n) {
                let theta = 0.25 * PI * (x + 1.0);
                let wt = 0.25 * PI * w;
                let (sn, cs) = theta.sin_cos();
                let (s, cc) = (sn * sn, cs * cs);
                let u = um + d * s;
                // R/((u-u_-)(u_+-u)) from a one-sided mean of V', free of cancellation
                let q = if s <= 0.5 { -mean_slope(um, u) / (d * cc) } else { mean_slope(u, up) / (d * s) };
                let base = 2.0 / (2.0 * q).sqrt();
                acc[0] += wt * base;
                acc[1] += wt * base * u;
                acc[2] += wt * base * u * u;
                acc[3] += wt * 2.0 * d * d * q.sqrt() * s * cc;
            }
            acc
        };
        let mut n = QUAD_MIN_NODES;
        let mut prev = eval(n);
        loop {
            n *= 2;
            let cur = eval(n);
            let scales = [cur[0].abs(), cur[0].abs() * umax, cur[0].abs() * umax * umax, cur[3].abs()];
            let delta: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).collect();
            if cur.iter().any(|v| !v.is_finite()) {
                return Err(WaveError::QuadratureNoConvergence { nodes: n, delta: f64::NAN });
            }
            let worst = delta.iter().zip(&scales).map(|(d, s)| d / s.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
            if worst <= QUAD_RTOL {
                return Ok(HalfCycle { values: cur, delta: [delta[0], delta[1], delta[2], delta[3]], nodes: n });
            }
            if n >= QUAD_MAX_NODES {
                return Err(WaveError::QuadratureNoConvergence { nodes: n, delta: worst });
            }
            prev = cur;
        }
    }

    /// Period of the orbit, 2 sqrt(m) times the first half-cycle integral.
    pub fn period(&self, nl: &Nonlinearity, tp: &TurningPoints) -> Result<f64> {
        Ok(2.0 * self.kinetic.sqrt() * self.half_cycle_integrals(nl, tp)?.values[0])
    }
}

pub(crate) struct HalfCycle {
    pub values: [f64; 4],
    pub delta: [f64; 4],
    pub nodes: usize,
}

pub(crate) fn legendre(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n).expect("positive node count"));
    rule.as_node_weight_pairs().to_vec()
}

/// Simple roots u_- < u_+ of E = V(u) bounding the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoints {
    pub u_minus: f64,
    pub u_plus: f64,
    pub v_prime_at_minus: f64,
    pub v_prime_at_plus: f64,
    pub simple: [bool; 2],
}

/// Period, mass, momentum and action of one wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(rename = "P")]
    pub momentum: f64,
    #[serde(rename = "K")]
    pub action: f64,
    /// Closed-cycle moment of u^2 / sqrt(E - V).
    pub moment2: f64,
    /// Last quadrature delta for T, M, P, K.
    pub err: [f64; 4],
    pub nodes: usize,
}

impl ConservedSet {
    fn from_half_cycle(c: f64, h: &HalfCycle) -> Self {
        let [j0, j1, j2, kr] = h.values;
        let [e0, e1, e2, ek] = h.delta;
        let sc = c.sqrt();
        let k2 = (2.0 / c).sqrt();
        Self {
            period: 2.0 * sc * j0,
            mass: 2.0 * sc * j1,
            momentum: sc * j2 + k2 * kr,
            action: 2.0 * k2 * kr,
            moment2: 2.0 * 2f64.sqrt() * j2,
            err: [2.0 * sc * e0, 2.0 * sc * e1, sc * e2 + k2 * ek, 2.0 * k2 * ek],
            nodes: h.nodes,
        }
    }

    pub fn get(&self, f: Functional) -> f64 {
        match f {
            Functional::T => self.period,
            Functional::M => self.mass,
            Functional::P => self.momentum,
        }
    }
}

/// How a gradient table was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    FiniteDifference,
    RegularizedQuadrature,
}

/// Relative residuals of the identities implied by the action gradient, plus
/// the alternative forms that appear in the solitary-limit argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// T_a - M_E
    pub ta_me: f64,
    /// T_c - P_E
    pub tc_pe: f64,
    /// M_c - P_a
    pub mc_pa: f64,
    /// M_c - (2 P_a + T/c)
    pub alt_mc: f64,
    /// T_c - (2 P_E + T/c)
    pub alt_tc: f64,
}

/// Partials of (T, M, P) with respect to (a, E, c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientTable {
    /// rows T, M, P; columns a, E, c
    pub rows: [[f64; 3]; 3],
    pub method: GradientMethod,
    pub residuals: IdentityResiduals,
}

impl GradientTable {
    pub fn new(rows: [[f64; 3]; 3], method: GradientMethod, t_over_c: f64) -> Self {
        let g = |f: Functional, p: Param| rows[f.index()][p.index()];
        use Functional::{M, P, T};
        use Param::{A, C, E};
        let rel = |x: f64, y: f64, others: &[f64]| {
            let scale = others.iter().chain([x, y].iter()).fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
            (x - y).abs() / scale
        };
        let residuals = IdentityResiduals {
            ta_me: rel(g(T, A), g(M, E), &[g(T, E), g(M, A)]),
            tc_pe: rel(g(T, C), g(P, E), &[g(T, E), g(P, C)]),
            mc_pa: rel(g(M, C), g(P, A), &[g(M, A), g(P, C)]),
            alt_mc: rel(g(M, C), 2.0 * g(P, A) + t_over_c, &[g(M, A), g(P, C)]),
            alt_tc: rel(g(T, C), 2.0 * g(P, E) + t_over_c, &[g(T, E), g(P, C)]),
        };
        Self { rows, method, residuals }
    }

    pub fn get(&self, f: Functional, p: Param) -> f64 {
        self.rows[f.index()][p.index()]
    }
}

/// Raw profile samples on one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
    pub period: f64,
    /// |u(T) - u_-| + |u_x(T)|
    pub closure_error: f64,
    /// Return time estimated from the ODE state at x = T.
    pub ode_period: f64,
}

/// A resolved orbit: parameters, turning points and conserved quantities.
#[derive(Debug, Clone)]
pub struct PeriodicWave {
    params: WaveParams,
    nl: Nonlinearity,
    turning: TurningPoints,
    conserved: ConservedSet,
}

impl PeriodicWave {
    pub fn new(params: WaveParams, nl: &Nonlinearity) -> Result<Self> {
        params.validate()?;
        let osc = Oscillator::of_wave(&params);
        let turning = osc.turning_points(nl, params.branch_hint)?;
        let conserved = ConservedSet::from_half_cycle(params.c, &osc.half_cycle_integrals(nl, &turning)?);
        Ok(Self { params, nl: nl.clone(), turning, conserved })
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn turning_points(&self) -> &TurningPoints {
        &self.turning
    }

    pub fn conserved(&self) -> &ConservedSet {
        &self.conserved
    }

    pub fn period(&self) -> f64 {
        self.conserved.period
    }

    pub fn oscillator(&self) -> Oscillator {
        Oscillator::of_wave(&self.params)
    }

    /// Midpoint of the turning-point interval; a safe hint for nearby waves.
    pub fn center(&self) -> f64 {
        0.5 * (self.turning.u_minus + self.turning.u_plus)
    }

    /// (u, u_x) at the given abscissae, starting from u(0) = u_-.
    pub fn profile_at(&self, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
        let states = ode::profile_at(self.oscillator(), &self.nl, self.turning.u_minus, xs)?;
        Ok(states.iter().map(|y| (y[0], y[1])).collect())
    }

    /// `n` equispaced samples on [0, T), with closure checks at x = T.
    pub fn sample_profile(&self, n: usize) -> Result<Profile> {
        if n == 0 {
            return Err(WaveError::invalid("sample count must be positive"));
        }
        let t = self.period();
        let mut xs: Vec<f64> = (0..n).map(|j| t * j as f64 / n as f64).collect();
        xs.push(t);
        let mut states = self.profile_at(&xs)?;
        let (u_end, ux_end) = states.pop().expect("end state");
        xs.pop();
        let um = self.turning.u_minus;
        let closure_error = (u_end - um).abs() + ux_end.abs();
        let tolerance = 1e-8 * (self.turning.u_plus - um).max(1.0);
        if closure_error > tolerance {
            return Err(WaveError::ClosureFailure { mismatch: closure_error, tolerance });
        }
        let osc = self.oscillator();
        let uxx = -osc.potential_slope(&self.nl, u_end) / osc.kinetic;
        let ode_period = t - ux_end / uxx;
        if (ode_period - t).abs() > 1e-7 * t {
            return Err(WaveError::ClosureFailure { mismatch: (ode_period - t).abs(), tolerance: 1e-7 * t });
        }
        Ok(Profile {
            x: xs,
            u: states.iter().map(|s| s.0).collect(),
            ux: states.iter().map(|s| s.1).collect(),
            period: t,
            closure_error,
            ode_period,
        })
    }

    /// max |(c/2) u_x^2 + V(u) - E| over the samples.
    pub fn energy_residual(&self, profile: &Profile) -> f64 {
        let osc = self.oscillator();
        profile
            .u
            .iter()
            .zip(&profile.ux)
            .map(|(&u, &ux)| (0.5 * osc.kinetic * ux * ux + osc.potential(&self.nl, u) - osc.energy).abs())
            .fold(0.0, f64::max)
    }

    pub fn gradient_table(&self) -> Result<GradientTable> {
        self.gradient_table_with_step(FD_REL_STEP)
    }

    /// Central differences with step `rel_step * max(1, |x|)` and one level of
    /// Richardson extrapolation.
    pub fn gradient_table_with_step(&self, rel_step: f64) -> Result<GradientTable> {
        let hint = self.center();
        let mut rows = [[0.0; 3]; 3];
        for param in Param::ALL {
            let x = self.params.get(param);
            let h = rel_step * x.abs().max(1.0);
            let eval = |s: f64| -> Result<ConservedSet> {
                let p = WaveParams { branch_hint: hint, ..self.params.with(param, x + s) };
                PeriodicWave::new(p, &self.nl).map(|w| w.conserved).map_err(|e| match e {
                    WaveError::NoOrbit { .. }
                    | WaveError::DegenerateTurningPoint { .. }
                    | WaveError::NoBracket { .. }
                    | WaveError::InvalidInput { .. } => {
                        WaveError::StencilCrossesSeparatrix { parameter: param.name(), detail: e.to_string() }
                    }
                    other => other,
                })
            };
            let (p1, m1, p2, m2) = (eval(h)?, eval(-h)?, eval(0.5 * h)?, eval(-0.5 * h)?);
            for f in Functional::ALL {
                let d1 = (p1.get(f) - m1.get(f)) / (2.0 * h);
                let d2 = (p2.get(f) - m2.get(f)) / h;
                rows[f.index()][param.index()] = (4.0 * d2 - d1) / 3.0;
            }
        }
        Ok(GradientTable::new(rows, GradientMethod::FiniteDifference, self.period() / self.params.c))
    }
}

/// V(u; a, c) = F(u) - ((c-1)/2) u^2 - a u.
pub fn eval_potential(u: f64, params: &WaveParams, nl: &Nonlinearity) -> f64 {
    Oscillator::of_wave(params).potential(nl, u)
}

pub fn find_turning_points(params: &WaveParams, nl: &Nonlinearity) -> Result<TurningPoints> {
    params.validate()?;
    Oscillator::of_wave(params).turning_points(nl, params.branch_hint)
}

pub fn conserved_set(params: &WaveParams, nl: &Nonlinearity) -> Result<ConservedSet> {
    Ok(PeriodicWave::new(*params, nl)?.conserved)
}

pub fn gradient_table(params: &WaveParams, nl: &Nonlinearity) -> Result<GradientTable> {
    PeriodicWave::new(*params, nl)?.gradient_table()
}

pub fn sample_profile(params: &WaveParams, nl: &Nonlinearity, n: usize) -> Result<Profile> {
    PeriodicWave::new(*params, nl)?.sample_profile(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn w0() -> WaveParams {
        WaveParams::new(0.0, -0.05, 2.0, 1.0)
    }

    #[test]
    fn potential_examples() {
        let nl = Nonlinearity::mbbm();
        assert_eq!(eval_potential(0.0, &w0(), &nl), 0.0);
        assert_relative_eq!(eval_potential(1.0, &w0(), &nl), -0.25, epsilon = 1e-15);
        let p = WaveParams::new(0.1, 0.0, 2.0, 1.0);
        assert_relative_eq!(eval_potential(1.0, &p, &nl), -0.35, epsilon = 1e-15);
    }

    #[test]
    fn dnoidal_turning_points_match_quartic_formula() {
        let tp = find_turning_points(&w0(), &Nonlinearity::mbbm()).unwrap();
        let r = 3.2f64.sqrt() / 2.0;
        assert_relative_eq!(tp.u_minus, (1.0 - r).sqrt(), max_relative = 1e-14);
        assert_relative_eq!(tp.u_plus, (1.0 + r).sqrt(), max_relative = 1e-14);
        assert!(tp.v_prime_at_minus < 0.0 && tp.v_prime_at_plus > 0.0);
    }

    #[test]
    fn cnoidal_turning_points_are_symmetric() {
        let p = WaveParams::new(0.0, 0.1, 2.0, 0.0);
        let tp = find_turning_points(&p, &Nonlinearity::mbbm()).unwrap();
        let up = (1.0 + 1.4f64.sqrt()).sqrt();
        assert_relative_eq!(tp.u_plus, up, max_relative = 1e-14);
        assert_relative_eq!(tp.u_minus, -up, max_relative = 1e-14);
    }

    #[test]
    fn well_bottom_is_degenerate() {
        let p = WaveParams::new(0.0, -0.25, 2.0, 1.0);
        let err = find_turning_points(&p, &Nonlinearity::mbbm()).unwrap_err();
        assert_eq!(err.kind(), "DegenerateTurningPoint");
    }

    #[test]
    fn separatrix_is_degenerate() {
        let p = WaveParams::new(0.0, 0.0, 2.0, 1.0);
        let err = find_turning_points(&p, &Nonlinearity::mbbm()).unwrap_err();
        assert_eq!(err.kind(), "DegenerateTurningPoint");
    }

    #[test]
    fn below_the_well_is_no_orbit() {
        let p = WaveParams::new(0.0, -0.3, 2.0, 1.0);
        let err = find_turning_points(&p, &Nonlinearity::mbbm()).unwrap_err();
        assert_eq!(err.kind(), "NoOrbit");
    }

    #[test]
    fn unbounded_direction_is_no_bracket() {
        // BBM with E above the local maximum of V escapes to -infinity
        let p = WaveParams::new(0.0, 0.5, 2.0, 1.0);
        let err = find_turning_points(&p, &Nonlinearity::bbm()).unwrap_err();
        assert_eq!(err.kind(), "NoBracket");
    }

    #[test]
    fn rejects_slow_waves() {
        let p = WaveParams::new(0.0, -0.05, 1.0, 1.0);
        assert_eq!(conserved_set(&p, &Nonlinearity::mbbm()).unwrap_err().kind(), "InvalidInput");
    }

    #[test]
    fn reference_conserved_set() {
        let cs = conserved_set(&w0(), &Nonlinearity::mbbm()).unwrap();
        assert_relative_eq!(cs.period, 8.300542091082, max_relative = 1e-11);
        assert_relative_eq!(cs.mass, 2.0 * PI, max_relative = 1e-11);
        assert_relative_eq!(cs.momentum, 3.285090705447, max_relative = 1e-11);
        assert_relative_eq!(cs.action, 0.701438998954, max_relative = 1e-11);
        assert!(cs.err.iter().all(|e| *e < 1e-8));
    }

    #[test]
    fn cnoidal_mass_vanishes() {
        let p = WaveParams::new(0.0, 0.1, 2.0, 0.0);
        let cs = conserved_set(&p, &Nonlinearity::mbbm()).unwrap();
        assert!(cs.mass.abs() < 1e-12, "M = {}", cs.mass);
        assert_relative_eq!(cs.period, 14.036605159, max_relative = 1e-9);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn reference_gradient_table() {
        let g = gradient_table(&w0(), &Nonlinearity::mbbm()).unwrap();
        let expect = [
            [0.0, 26.30396246077, 0.5552607233],
            [-3.039749598917, 0.0, 1.570796326796],
            [1.5707963268, 0.5552607233, 2.694703851154],
        ];
        for (r, (row, exp)) in g.rows.iter().zip(expect).enumerate() {
            for (c, (x, y)) in row.iter().zip(exp).enumerate() {
                assert!((x - y).abs() < 1e-7 * 26.3, "({r},{c}) {x}");
            }
        }
        assert!(g.residuals.ta_me < 1e-6);
        assert!(g.residuals.tc_pe < 1e-6);
        assert!(g.residuals.alt_tc > 1e-2);
    }

    #[test]
    fn profile_is_symmetric_and_conserves_energy() {
        let wave = PeriodicWave::new(w0(), &Nonlinearity::mbbm()).unwrap();
        let prof = wave.sample_profile(64).unwrap();
        assert!(wave.energy_residual(&prof) < 1e-9 * 1.05);
        assert_relative_eq!(prof.u[32], wave.turning_points().u_plus, max_relative = 1e-9);
        assert!((prof.ode_period - prof.period).abs() < 1e-7 * prof.period);
    }
}
