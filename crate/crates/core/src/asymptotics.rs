//! Power-law scaling, solitary-limit closed forms and the mBBM Picard-Fuchs system.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::indices::classify;
use crate::nonlinearity::{Nonlinearity, PowerConvention};
use crate::ode::profile_at;
use crate::wave_family::{Functional, Oscillator, Param, PeriodicWave, WaveParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub p: f64,
    pub convention: PowerConvention,
}

impl PowerLaw {
    pub fn new(p: f64, convention: PowerConvention) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(WaveError::invalid(format!("power law needs p >= 1, got {p}")));
        }
        Ok(Self { p, convention })
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::power(self.p, self.convention)
    }

    /// Positive minimum of the a = 0 potential well.
    pub fn well_minimum(&self, c: f64) -> f64 {
        let k = match self.convention {
            PowerConvention::Plain => 1.0,
            PowerConvention::Normalized => self.p + 1.0,
        };
        (k * (c - 1.0)).powf(1.0 / self.p)
    }
}

/// Where the speed enters the rescaled parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingConvention {
    /// v solves v'^2/2 - v^2 + F(v) = a'v + E' with a' = a/c^(1+1/p), E' = E/c^(1+2/p)
    AsPrinted,
    /// v solves v'^2/2 - v^2/2 + F(v) = a'v + E' with a' = a/(c-1)^(1+1/p), E' = E/(c-1)^(1+2/p)
    SpeedMinusOne,
}

impl ScalingConvention {
    pub const ALL: [ScalingConvention; 2] = [ScalingConvention::AsPrinted, ScalingConvention::SpeedMinusOne];
}

/// u(x; a, E, c) = amplitude * v(stretch * x; a_v, e_v)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    pub convention: ScalingConvention,
    pub amplitude: f64,
    pub stretch: f64,
    pub a_v: f64,
    pub e_v: f64,
}

impl ScalingMap {
    pub fn new(params: &WaveParams, p: f64, convention: ScalingConvention) -> Self {
        let c = params.c;
        let base = match convention {
            ScalingConvention::AsPrinted => c,
            ScalingConvention::SpeedMinusOne => c - 1.0,
        };
        Self {
            convention,
            amplitude: (c - 1.0).powf(1.0 / p),
            stretch: ((c - 1.0) / c).sqrt(),
            a_v: params.a / base.powf(1.0 + 1.0 / p),
            e_v: params.energy / base.powf(1.0 + 2.0 / p),
        }
    }

    /// Inverse direction: the wave parameters reached from (a_v, E_v) at speed c.
    pub fn wave_params(a_v: f64, e_v: f64, c: f64, p: f64, convention: ScalingConvention) -> WaveParams {
        let base = match convention {
            ScalingConvention::AsPrinted => c,
            ScalingConvention::SpeedMinusOne => c - 1.0,
        };
        WaveParams::new(a_v * base.powf(1.0 + 1.0 / p), e_v * base.powf(1.0 + 2.0 / p), c, f64::NAN)
    }

    pub fn oscillator(&self) -> Oscillator {
        let quadratic = match self.convention {
            ScalingConvention::AsPrinted => 1.0,
            ScalingConvention::SpeedMinusOne => 0.5,
        };
        Oscillator { kinetic: 1.0, quadratic, a: self.a_v, energy: self.e_v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub map: ScalingMap,
    /// sup |u - amplitude v(stretch x)| over one period, relative to max |u|; infinite if v has no orbit
    pub mismatch: f64,
    /// |T_u - T_v / stretch| / T_u
    pub period_mismatch: f64,
}

/// Solves both sides of the scaling relation and compares them on `n` points.
pub fn verify_scaling(
    params: &WaveParams,
    law: &PowerLaw,
    convention: ScalingConvention,
    n: usize,
) -> Result<ScalingCheck> {
    let nl = law.nonlinearity()?;
    let wave = PeriodicWave::new(*params, &nl)?;
    let map = ScalingMap::new(params, law.p, convention);
    let failed = ScalingCheck { map, mismatch: f64::INFINITY, period_mismatch: f64::INFINITY };
    let osc = map.oscillator();
    let Ok(tp) = osc.turning_points(&nl, wave.center() / map.amplitude) else {
        return Ok(failed);
    };
    let t_u = wave.period();
    let t_v = osc.period(&nl, &tp)?;
    let xs: Vec<f64> = (0..n).map(|j| t_u * j as f64 / n as f64).collect();
    let us = wave.profile_at(&xs)?;
    let vx: Vec<f64> = xs.iter().map(|x| map.stretch * x).collect();
    let vs = profile_at(osc, &nl, tp.u_minus, &vx)?;
    let scale = us.iter().fold(0.0f64, |m, s| m.max(s.0.abs())).max(f64::MIN_POSITIVE);
    let mismatch = us.iter().zip(&vs).fold(0.0f64, |m, (u, v)| m.max((u.0 - map.amplitude * v[0]).abs())) / scale;
    Ok(ScalingCheck { map, mismatch, period_mismatch: (t_u - t_v / map.stretch).abs() / t_u })
}

/// Both conventions side by side, with the one of smaller mismatch named.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingArbitration {
    pub as_printed: ScalingCheck,
    pub speed_minus_one: ScalingCheck,
    pub preferred: ScalingConvention,
}

pub fn arbitrate_scaling(params: &WaveParams, law: &PowerLaw, n: usize) -> Result<ScalingArbitration> {
    let as_printed = verify_scaling(params, law, ScalingConvention::AsPrinted, n)?;
    let speed_minus_one = verify_scaling(params, law, ScalingConvention::SpeedMinusOne, n)?;
    let preferred = if speed_minus_one.mismatch <= as_printed.mismatch {
        ScalingConvention::SpeedMinusOne
    } else {
        ScalingConvention::AsPrinted
    };
    Ok(ScalingArbitration { as_printed, speed_minus_one, preferred })
}

/// Integral of sech^r over the real line.
pub fn sech_integral(r: f64) -> f64 {
    std::f64::consts::PI.sqrt() * (libm::lgamma(0.5 * r) - libm::lgamma(0.5 * (r + 1.0))).exp()
}

/// Leading term of P_c in the solitary limit of a normalized power law.
pub fn momentum_dc_limit(p: f64, c: f64) -> f64 {
    let pre = (c - 1.0).powf(2.0 / p - 0.5) * c.sqrt() * sech_integral(4.0 / p) / (2.0 * p * c * (c - 1.0));
    pre * (4.0 * c - p + (4.0 * c + p) * (c - 1.0) * p / ((4.0 + p) * c))
}

pub fn critical_speed(p: f64) -> f64 {
    p * (1.0 + (2.0 + 0.5 * p).sqrt()) / (4.0 + 2.0 * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitaryVerdict {
    Stable,
    Unstable,
    Critical,
}

pub fn classify_solitary_limit(p: f64, c: f64) -> SolitaryVerdict {
    const TOL: f64 = 1e-9;
    if (p - 4.0).abs() <= TOL {
        return SolitaryVerdict::Critical;
    }
    if p < 4.0 {
        return SolitaryVerdict::Stable;
    }
    let c0 = critical_speed(p);
    if (c - c0).abs() <= TOL * c0 {
        SolitaryVerdict::Critical
    } else if c > c0 {
        SolitaryVerdict::Stable
    } else {
        SolitaryVerdict::Unstable
    }
}

fn pf_matrix(e: f64, c: f64) -> SMatrix<f64, 7, 7> {
    let a = 0.0;
    let mut m = SMatrix::<f64, 7, 7>::zeros();
    for s in 0..3 {
        for (k, v) in [e, a, 0.5 * (c - 1.0), 0.0, -0.25].into_iter().enumerate() {
            m[(s, s + k)] = v;
        }
    }
    for s in 0..4 {
        for (k, v) in [a, c - 1.0, 0.0, -1.0].into_iter().enumerate() {
            m[(3 + s, s + k)] = v;
        }
    }
    m
}

/// Discriminant of R(u) = E + (c-1)u^2/2 - u^4/4, from the Sylvester-type matrix.
pub fn pf_discriminant(e: f64, c: f64) -> f64 {
    -4.0 * pf_matrix(e, c).determinant()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PFSolution {
    #[serde(rename = "I")]
    pub i: [f64; 7],
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub cond: f64,
    pub det: f64,
}

impl PFSolution {
    /// M_a = -(1/2) sqrt(c/2) I_2
    pub fn mass_a(&self, c: f64) -> f64 {
        -0.5 * (0.5 * c).sqrt() * self.i[2]
    }

    pub fn norm(&self) -> f64 {
        self.i.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Singular moments of the mBBM cnoidal cycle at a = 0.
pub fn picard_fuchs(e: f64, c: f64) -> Result<PFSolution> {
    if !(c > 1.0) || !e.is_finite() {
        return Err(WaveError::invalid(format!("Picard-Fuchs needs c > 1 and finite E, got E={e}, c={c}")));
    }
    let m = pf_matrix(e, c);
    let det = m.determinant();
    let hadamard: f64 = m.row_iter().map(|r| r.norm()).product();
    if det.abs() <= 1e-12 * hadamard {
        return Err(WaveError::SingularSystem { det });
    }
    if e < 0.0 {
        return Err(WaveError::invalid("Picard-Fuchs is set up on the cnoidal branch E > 0"));
    }
    let wave = PeriodicWave::new(WaveParams::new(0.0, e, c, 0.0), &Nonlinearity::mbbm())?;
    let cs = wave.conserved();
    let s = (2.0 / c).sqrt();
    let (mu0, mu1, mu2) = (s * cs.period, s * cs.mass, cs.moment2);
    let rhs = SVector::<f64, 7>::from([s * cs.period, s * cs.mass, mu2, 0.0, 2.0 * mu0, 4.0 * mu1, 6.0 * mu2]);
    let sol = m.lu().solve(&rhs).ok_or(WaveError::SingularSystem { det })?;
    let sv = m.svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    let mut i = [0.0; 7];
    i.copy_from_slice(sol.as_slice());
    Ok(PFSolution { i, mu0, mu1, mu2, cond, det })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassRatio {
    /// disc(R) M_a / ((c-1) T)
    pub ratio: f64,
    /// M_a (c-1) / T
    pub scaled_mass_a: f64,
    pub disc: f64,
    #[serde(rename = "M_a")]
    pub mass_a: f64,
    #[serde(rename = "T")]
    pub period: f64,
}

pub fn mass_a_ratio(e: f64, c: f64) -> Result<MassRatio> {
    let pf = picard_fuchs(e, c)?;
    let disc = pf_discriminant(e, c);
    let mass_a = pf.mass_a(c);
    let period = pf.mu0 / (2.0 / c).sqrt();
    Ok(MassRatio {
        ratio: disc * mass_a / ((c - 1.0) * period),
        scaled_mass_a: mass_a * (c - 1.0) / period,
        disc,
        mass_a,
        period,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitaryPoint {
    #[serde(rename = "E")]
    pub energy: f64,
    /// distance below the separatrix level
    pub distance: f64,
    #[serde(rename = "T")]
    pub period: f64,
    pub jac3: f64,
    pub delta: f64,
    #[serde(rename = "M_a")]
    pub mass_a: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitaryConsistency {
    pub p: f64,
    pub c: f64,
    pub predicted: SolitaryVerdict,
    pub momentum_dc: f64,
    pub points: Vec<SolitaryPoint>,
    pub agreement: f64,
    /// the point closest to the separatrix agrees
    pub eventually_agrees: bool,
    /// least-squares slope of T against -ln(distance) over the last decade
    pub log_slope: f64,
    /// sqrt(c/(c-1))
    pub expected_log_slope: f64,
}

impl SolitaryConsistency {
    pub fn slope_error(&self) -> f64 {
        (self.log_slope - self.expected_log_slope).abs() / self.expected_log_slope
    }
}

/// Index signs along a dnoidal sequence at a = 0 against the solitary-limit prediction.
pub fn solitary_limit_consistency(law: &PowerLaw, c: f64, e_seq: &[f64]) -> Result<SolitaryConsistency> {
    if e_seq.len() < 2 || e_seq.iter().any(|&e| !(e < 0.0)) {
        return Err(WaveError::invalid("the dnoidal sequence needs at least two energies below zero"));
    }
    let nl = law.nonlinearity()?;
    let hint = law.well_minimum(c);
    let momentum_dc = momentum_dc_limit(law.p, c);
    let predicted = classify_solitary_limit(law.p, c);
    let sign = momentum_dc.signum();
    let points = e_seq
        .par_iter()
        .map(|&e| {
            let params = WaveParams::new(0.0, e, c, hint);
            let r = classify(&params, &nl)?;
            let period = r.t_over_c * c;
            let agrees = r.jac3.signum() == sign && r.delta.signum() == sign;
            Ok(SolitaryPoint { energy: e, distance: -e, period, jac3: r.jac3, delta: r.delta, mass_a: r.m_a, agrees })
        })
        .collect::<Result<Vec<_>>>()?;
    let agreement = points.iter().filter(|p| p.agrees).count() as f64 / points.len() as f64;
    let closest = points.iter().min_by(|a, b| a.distance.total_cmp(&b.distance)).expect("non-empty");
    let d_min = closest.distance;
    let tail: Vec<(f64, f64)> =
        points.iter().filter(|p| p.distance <= 10.0 * d_min).map(|p| (-p.distance.ln(), p.period)).collect();
    let fit = if tail.len() >= 2 { &tail[..] } else { &[] };
    let log_slope = if fit.is_empty() {
        let far = points.iter().max_by(|a, b| a.distance.total_cmp(&b.distance)).expect("non-empty");
        (closest.period - far.period) / (far.distance.ln() - closest.distance.ln())
    } else {
        let n = fit.len() as f64;
        let mx = fit.iter().map(|v| v.0).sum::<f64>() / n;
        let my = fit.iter().map(|v| v.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|v| (v.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(SolitaryConsistency {
        p: law.p,
        c,
        predicted,
        momentum_dc,
        eventually_agrees: closest.agrees,
        points,
        agreement,
        log_slope,
        expected_log_slope: (c / (c - 1.0)).sqrt(),
    })
}

/// M_a by finite differences of the mass, for comparison with the Picard-Fuchs value.
pub fn mass_a_direct(params: &WaveParams, nl: &Nonlinearity) -> Result<f64> {
    Ok(PeriodicWave::new(*params, nl)?.gradient_table()?.get(Functional::M, Param::A))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sech_integral_values() {
        assert!((sech_integral(2.0) - 2.0).abs() < 1e-12);
        assert!((sech_integral(1.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((sech_integral(4.0) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn critical_speed_values() {
        assert!((critical_speed(4.0) - 1.0).abs() < 1e-12);
        assert!((critical_speed(5.0) - 1.114757).abs() < 1e-6);
        for p in [4.5, 5.0, 6.0, 8.0] {
            assert!(momentum_dc_limit(p, critical_speed(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn solitary_verdicts() {
        assert_eq!(classify_solitary_limit(2.0, 2.0), SolitaryVerdict::Stable);
        assert_eq!(classify_solitary_limit(5.0, 1.05), SolitaryVerdict::Unstable);
        assert_eq!(classify_solitary_limit(5.0, 1.2), SolitaryVerdict::Stable);
        assert_eq!(classify_solitary_limit(4.0, 3.0), SolitaryVerdict::Critical);
        assert!(momentum_dc_limit(2.0, 2.0) > 0.0);
        assert!(momentum_dc_limit(5.0, 1.05) < 0.0);
    }

    #[test]
    fn pf_is_singular_at_the_separatrix() {
        assert!(matches!(picard_fuchs(0.0, 2.0), Err(WaveError::SingularSystem { .. })));
    }

    #[test]
    fn pf_odd_moments_vanish() {
        let s = picard_fuchs(0.1, 2.0).unwrap();
        for k in [1, 3, 5] {
            assert!(s.i[k].abs() < 1e-8 * s.norm(), "I{k} = {}", s.i[k]);
        }
        assert!(s.mu1.abs() < 1e-10);
    }

    #[test]
    fn pf_mass_derivative_matches_finite_differences() {
        let s = picard_fuchs(0.1, 2.0).unwrap();
        let fd = mass_a_direct(&WaveParams::new(0.0, 0.1, 2.0, 0.0), &Nonlinearity::mbbm()).unwrap();
        assert!((s.mass_a(2.0) - fd).abs() < 1e-6 * fd.abs(), "{} vs {fd}", s.mass_a(2.0));
    }

    #[test]
    fn discriminant_matches_root_product() {
        // R = -1/4 (u^2 - r1)(u^2 - r2) with r1, r2 the roots in u^2
        let (e, c) = (0.05, 2.0);
        let s = ((c - 1.0f64).powi(2) + 4.0 * e).sqrt();
        let (r1, r2) = ((c - 1.0) + s, (c - 1.0) - s);
        let roots = [r1.sqrt(), -r1.sqrt()];
        let im = (-r2).sqrt();
        // product over pairs of (x_i - x_j)^2 with the conjugate pair +-i*im
        let mut prod = num_complex::Complex64::new(1.0, 0.0);
        let all = [
            num_complex::Complex64::new(roots[0], 0.0),
            num_complex::Complex64::new(roots[1], 0.0),
            num_complex::Complex64::new(0.0, im),
            num_complex::Complex64::new(0.0, -im),
        ];
        for i in 0..4 {
            for j in i + 1..4 {
                prod *= (all[i] - all[j]).powu(2);
            }
        }
        let disc = 0.25f64.powi(6) * prod.re;
        assert!((pf_discriminant(e, c) - disc).abs() < 1e-10 * disc.abs(), "{} vs {disc}", pf_discriminant(e, c));
    }
}
