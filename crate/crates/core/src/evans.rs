//! Monodromy matrix of the linearized problem and the periodic Evans function
//! D(mu, lambda) = det(M(mu) - lambda I).

use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::nonlinearity::Nonlinearity;
use crate::ode::{self, VariationalSystem};
use crate::wave_family::{PeriodicWave, WaveParams};

const CONTOUR_START_NODES: usize = 32;
const CONTOUR_MAX_NODES: usize = 1024;
const CONTOUR_TOL: f64 = 1e-8;
const CONTOUR_RADIUS_FACTOR: f64 = 0.1;
const TAIL_RATIO_MAX: f64 = 0.1;
const SIGN_MAX_DOUBLINGS: i32 = 12;
const MAX_SEGMENTS: usize = 64;

/// H(x, mu) evaluated at a profile state (u, u_x).
pub fn coefficient_matrix(c: f64, nl: &Nonlinearity, u: f64, ux: f64, mu: Complex64) -> Matrix3<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Matrix3::new(
        z,
        one,
        z,
        z,
        z,
        one,
        -(mu + ux * nl.d2f(u)) / c,
        Complex64::new((c - 1.0 - nl.df(u)) / c, 0.0),
        mu / c,
    )
}

/// Period map M(mu) = Phi(T; mu).
#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyMatrix {
    pub mu: Complex64,
    pub mat: Matrix3<Complex64>,
    pub integ_tol: f64,
    /// det M as the product of determinants over sub-intervals of the period,
    /// which avoids the cancellation in det of the assembled matrix when the
    /// Floquet multipliers are widely spread
    pub det: Complex64,
    /// |det M - e^(mu T/c)| / |e^(mu T/c)|
    pub abel_residual: f64,
    /// e^(mu T/c)
    pub exp_term: Complex64,
}

impl MonodromyMatrix {
    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// Sum of the principal 2x2 minors.
    pub fn sigma2(&self) -> Complex64 {
        let m = &self.mat;
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
            + m[(1, 1)] * m[(2, 2)]
            - m[(1, 2)] * m[(2, 1)]
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    /// det(M - lambda I)
    pub fn evans(&self, lambda: Complex64) -> Complex64 {
        let mut shifted = self.mat;
        for k in 0..3 {
            shifted[(k, k)] -= lambda;
        }
        shifted.determinant()
    }

    /// Eigenvalues of M(mu), i.e. the Floquet multipliers.
    pub fn eigenvalues(&self) -> [Complex64; 3] {
        if let Some(ev) = self.mat.schur().eigenvalues() {
            return [ev[0], ev[1], ev[2]];
        }
        let (a, b, e) = (self.trace(), -self.sigma2(), self.det());
        crate::spectrum::cubic_roots([-Complex64::new(1.0, 0.0), a, b, e])
    }
}

pub fn monodromy_of(wave: &PeriodicWave, mu: Complex64) -> Result<MonodromyMatrix> {
    let p = wave.params();
    let t = wave.period();
    // sub-intervals short enough that each segment map stays well conditioned
    let segments = ((t * (1.0 + mu.norm()) / p.c).ceil() as usize).clamp(1, MAX_SEGMENTS);
    let mut mat = Matrix3::<Complex64>::identity();
    let mut det = Complex64::new(1.0, 0.0);
    let mut y = ode::variational_initial(wave.turning_points().u_minus);
    for k in 0..segments {
        let (x0, x1) = (t * k as f64 / segments as f64, t * (k + 1) as f64 / segments as f64);
        let sys = VariationalSystem { a: p.a, c: p.c, mu, nl: wave.nonlinearity().clone() };
        let end = ode::integrate(sys, x0, x1, y)?;
        let seg = ode::unpack_matrix(&end);
        mat = seg * mat;
        det *= seg.determinant();
        y = ode::variational_initial(end[0]);
        y[1] = end[1];
    }
    let exp_term = (mu * t / p.c).exp();
    let abel_residual = (det - exp_term).norm() / exp_term.norm();
    Ok(MonodromyMatrix { mu, mat, integ_tol: ode::RTOL, det, abel_residual, exp_term })
}

pub fn monodromy(params: &WaveParams, nl: &Nonlinearity, mu: Complex64) -> Result<MonodromyMatrix> {
    monodromy_of(&PeriodicWave::new(*params, nl)?, mu)
}

pub fn evans_of(wave: &PeriodicWave, mu: Complex64, lambda: Complex64) -> Result<Complex64> {
    Ok(monodromy_of(wave, mu)?.evans(lambda))
}

pub fn evans(params: &WaveParams, nl: &Nonlinearity, mu: Complex64, lambda: Complex64) -> Result<Complex64> {
    evans_of(&PeriodicWave::new(*params, nl)?, mu, lambda)
}

/// D(mu, lambda) = -lambda^3 + a(mu) lambda^2 + b(mu) lambda + e^(mu T/c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvansCoefficients {
    pub mu: Complex64,
    pub a_mu: Complex64,
    pub b_mu: Complex64,
    pub exp_term: Complex64,
    /// a(-mu), from a second monodromy.
    pub a_neg_mu: Complex64,
    /// |b(mu) + e^(mu T/c) a(-mu)| relative to the larger term
    pub symmetry_residual: f64,
}

pub fn evans_coeffs_of(wave: &PeriodicWave, mu: Complex64) -> Result<EvansCoefficients> {
    let (m, m_neg) = rayon::join(|| monodromy_of(wave, mu), || monodromy_of(wave, -mu));
    let (m, m_neg) = (m?, m_neg?);
    let a_mu = m.trace();
    let b_mu = -m.sigma2();
    let a_neg_mu = m_neg.trace();
    let other = m.exp_term * a_neg_mu;
    let symmetry_residual = (b_mu + other).norm() / b_mu.norm().max(other.norm()).max(f64::MIN_POSITIVE);
    Ok(EvansCoefficients { mu, a_mu, b_mu, exp_term: m.exp_term, a_neg_mu, symmetry_residual })
}

pub fn evans_coeffs(params: &WaveParams, nl: &Nonlinearity, mu: Complex64) -> Result<EvansCoefficients> {
    evans_coeffs_of(&PeriodicWave::new(*params, nl)?, mu)
}

/// Taylor data of D(mu, 1) and a(mu) at mu = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginDerivatives {
    pub d0_evans: f64,
    pub d1_evans: f64,
    pub d2_evans: f64,
    pub d3_evans: f64,
    /// trace of M_mumu(0), equal to a''(0)
    pub tr_m2: f64,
    pub a_prime: f64,
    pub contour_radius: f64,
    pub nodes: usize,
    /// max over k < 3 of |c_k| r^k / (|c_3| r^3) for the Taylor coefficients c_k of D(., 1)
    pub lower_order_ratio: f64,
    /// |c_4| r / |c_3|
    pub tail_ratio: f64,
}

impl OriginDerivatives {
    /// mu^3 Taylor coefficient of D(mu, 1).
    pub fn cubic_coefficient(&self) -> f64 {
        self.d3_evans / 6.0
    }
}

/// Trapezoid-rule Taylor coefficients of sampled values on |mu| = r.
fn taylor(values: &[Complex64], r: f64, kmax: usize) -> Vec<Complex64> {
    let n = values.len() as f64;
    (0..=kmax)
        .map(|k| {
            let s: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n))
                .sum();
            s / n / r.powi(k as i32)
        })
        .collect()
}

fn contour_values(wave: &PeriodicWave, r: f64, n: usize, odd_only: bool) -> Result<Vec<(Complex64, Complex64)>> {
    let idx: Vec<usize> = if odd_only { (1..n).step_by(2).collect() } else { (0..n).collect() };
    idx.par_iter()
        .map(|&j| {
            let mu = Complex64::from_polar(r, 2.0 * PI * j as f64 / n as f64);
            let m = monodromy_of(wave, mu)?;
            Ok((m.evans(Complex64::new(1.0, 0.0)), m.trace()))
        })
        .collect()
}

fn weighted_delta(new: &[Complex64], old: &[Complex64], r: f64) -> f64 {
    let scale = new.iter().enumerate().map(|(k, c)| c.norm() * r.powi(k as i32)).fold(f64::MIN_POSITIVE, f64::max);
    new.iter().zip(old).enumerate().map(|(k, (a, b))| (a - b).norm() * r.powi(k as i32)).fold(0.0, f64::max) / scale
}

pub fn origin_derivatives_of(wave: &PeriodicWave) -> Result<OriginDerivatives> {
    let c = wave.params().c;
    let mut r = CONTOUR_RADIUS_FACTOR * c / wave.period();
    let mut last_delta = f64::NAN;
    for _ in 0..8 {
        let mut n = CONTOUR_START_NODES;
        let mut vals = contour_values(wave, r, n, false)?;
        let split = |v: &[(Complex64, Complex64)]| -> (Vec<Complex64>, Vec<Complex64>) { v.iter().cloned().unzip() };
        let (d, a) = split(&vals);
        let mut cd = taylor(&d, r, 5);
        let mut ca = taylor(&a, r, 3);
        let mut converged = false;
        while n < CONTOUR_MAX_NODES {
            let extra = contour_values(wave, r, 2 * n, true)?;
            let mut merged = Vec::with_capacity(2 * n);
            for (j, v) in vals.iter().enumerate() {
                merged.push(*v);
                merged.push(extra[j]);
            }
            vals = merged;
            n *= 2;
            let (d, a) = split(&vals);
            let (cd_new, ca_new) = (taylor(&d, r, 5), taylor(&a, r, 3));
            last_delta = weighted_delta(&cd_new[..5], &cd[..5], r).max(weighted_delta(&ca_new, &ca, r));
            cd = cd_new;
            ca = ca_new;
            if last_delta <= CONTOUR_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(WaveError::ContourNotResolved { radius: r, delta: last_delta });
        }
        let c3 = cd[3].norm();
        let tail_ratio = cd[4].norm() * r / c3;
        if tail_ratio > TAIL_RATIO_MAX {
            log::debug!("contour radius {r:e}: tail ratio {tail_ratio:.3}, halving");
            r *= 0.5;
            continue;
        }
        let lower_order_ratio = (0..3).map(|k| cd[k].norm() * r.powi(k as i32)).fold(0.0, f64::max) / (c3 * r.powi(3));
        return Ok(OriginDerivatives {
            d0_evans: cd[0].re,
            d1_evans: cd[1].re,
            d2_evans: 2.0 * cd[2].re,
            d3_evans: 6.0 * cd[3].re,
            tr_m2: 2.0 * ca[2].re,
            a_prime: ca[1].re,
            contour_radius: r,
            nodes: n,
            lower_order_ratio,
            tail_ratio,
        });
    }
    Err(WaveError::ContourNotResolved { radius: r, delta: last_delta })
}

pub fn origin_derivatives(params: &WaveParams, nl: &Nonlinearity) -> Result<OriginDerivatives> {
    origin_derivatives_of(&PeriodicWave::new(*params, nl)?)
}

/// Limiting sign of D(mu, 1) along the positive real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAtInfinity {
    pub sign: i8,
    pub mus: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates D(2^k c/T, 1) for k = 0, 1, ... until three consecutive values
/// share a sign and grow in magnitude.
pub fn sign_at_infinity_of(wave: &PeriodicWave) -> Result<SignAtInfinity> {
    let base = wave.params().c / wave.period();
    let one = Complex64::new(1.0, 0.0);
    let mut mus = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for k in 0..=SIGN_MAX_DOUBLINGS {
        let mu = base * 2f64.powi(k);
        let d = evans_of(wave, Complex64::new(mu, 0.0), one)?.re;
        mus.push(mu);
        values.push(d);
        if let [x, y, z] = values[values.len().saturating_sub(3)..] {
            let same = x.signum() == y.signum() && y.signum() == z.signum() && x != 0.0;
            if same && z.abs() > y.abs() && y.abs() > x.abs() {
                return Ok(SignAtInfinity { sign: z.signum() as i8, mus, values });
            }
        }
    }
    Err(WaveError::NoStabilization { last_mu: *mus.last().unwrap_or(&base) })
}

pub fn sign_at_infinity(params: &WaveParams, nl: &Nonlinearity) -> Result<SignAtInfinity> {
    sign_at_infinity_of(&PeriodicWave::new(*params, nl)?)
}
