//! Orientation index {T,M,P}_{a,E,c}, the modulational discriminant and the
//! classification built on them.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::evans::{origin_derivatives_of, OriginDerivatives};
use crate::nonlinearity::Nonlinearity;
use crate::spectrum::ProjectiveCubic;
use crate::wave_family::{Functional, GradientTable, IdentityResiduals, Param, PeriodicWave, WaveParams};

const NULLSPACE_GRID: usize = 64;
const NULLSPACE_REL_STEP: f64 = 1e-3;

/// {g, h}_{x, y} = g_x h_y - g_y h_x
pub fn bracket2(g: Functional, h: Functional, x: Param, y: Param, table: &GradientTable) -> f64 {
    table.get(g, x) * table.get(h, y) - table.get(g, y) * table.get(h, x)
}

/// Jacobian determinant of (T, M, P) with respect to (a, E, c).
pub fn bracket3(table: &GradientTable) -> f64 {
    let m = &table.rows;
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Candidate closed forms for tr M_mumu(0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalIndexVariants {
    /// 2({T,P}_{E,c} + 2{M,P}_{a,E} - V'(u_-){T,M}_{a,E})
    pub statement: f64,
    /// 2{T,P}_{E,c} + 2{M,P}_{a,E} + 2{T,M}_{a,c} - (2/c)V'(u_-){T,M}_{a,E}
    pub proof: f64,
    /// 2{T,P}_{E,c} + 4{M,P}_{a,E} + (T/c)^2, which the contour values satisfy
    pub identity: f64,
}

pub fn eval_index_formula(wave: &PeriodicWave, table: &GradientTable) -> EvalIndexVariants {
    use Functional::{M, P, T};
    use Param::{A, C, E};
    let c = wave.params().c;
    let vp = wave.turning_points().v_prime_at_minus;
    let tau = wave.period() / c;
    let tp_ec = bracket2(T, P, E, C, table);
    let mp_ae = bracket2(M, P, A, E, table);
    let tm_ae = bracket2(T, M, A, E, table);
    let tm_ac = bracket2(T, M, A, C, table);
    EvalIndexVariants {
        statement: 2.0 * (tp_ec + 2.0 * mp_ae - vp * tm_ae),
        proof: 2.0 * tp_ec + 2.0 * mp_ae + 2.0 * tm_ac - (2.0 / c) * vp * tm_ae,
        identity: 2.0 * tp_ec + 4.0 * mp_ae + tau * tau,
    }
}

/// Which closed form for tr M_mumu(0) agrees with the contour value to 1e-3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalIndexMatch {
    Statement,
    Proof,
    Both,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulational {
    StableTripleAxis,
    UnstableTwoCurves,
    Degenerate,
}

/// Numbers a report is assembled from.
#[derive(Debug, Clone, Copy)]
pub struct ReportInputs {
    pub table: GradientTable,
    pub origin: OriginDerivatives,
    pub eval_index: EvalIndexVariants,
    pub t_over_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub jac3: f64,
    #[serde(rename = "jac_TM_aE")]
    pub jac_tm_ae: f64,
    #[serde(rename = "jac_TP_aE")]
    pub jac_tp_ae: f64,
    #[serde(rename = "jac_TP_Ec")]
    pub jac_tp_ec: f64,
    #[serde(rename = "jac_MP_aE")]
    pub jac_mp_ae: f64,
    #[serde(rename = "T_E")]
    pub t_e: f64,
    #[serde(rename = "M_a")]
    pub m_a: f64,
    pub t_over_c: f64,
    /// trace of M_mumu(0) from the contour integral
    pub tr_m2: f64,
    pub tr_m2_statement: f64,
    pub tr_m2_proof: f64,
    pub tr_m2_identity: f64,
    pub eval_index_match: EvalIndexMatch,
    /// discriminant of the projective cubic
    pub delta: f64,
    /// the discriminant expression exactly as printed
    pub delta_printed: f64,
    /// delta with tr M_mumu(0) taken from the statement closed form
    pub delta_eval_index: f64,
    pub jac3_tolerance: f64,
    pub delta_tolerance: f64,
    pub jacobian_degenerate: bool,
    pub orientation_unstable: bool,
    /// T_E > 0, under which the orientation criterion is claimed to be sharp
    pub fw_iff_applies: bool,
    pub orbital_stable_sufficient: bool,
    pub modulational: Modulational,
    /// |statement - contour| / |contour|
    pub residual_eval_index: f64,
    pub residual_eval_index_proof: f64,
    pub residual_eval_index_identity: f64,
    /// |D_mumumu(0,1)/6 + jac3| / |jac3|
    pub residual_d3: f64,
    /// |a'(0) - T/c| / (T/c)
    pub residual_a_prime: f64,
    pub lower_order_ratio: f64,
    pub contour_radius: f64,
    #[serde(flatten)]
    pub gradient_residuals: IdentityResiduals,
}

/// Discriminant exactly as printed, with the contour trace.
pub fn printed_delta(t_over_c: f64, tr_m2: f64, jac3: f64) -> f64 {
    let t2 = t_over_c * t_over_c;
    0.25 * (tr_m2 - t2).powi(2) * (2.0 * tr_m2 - t2) - 27.0 * jac3 * jac3
        + 6.0 * jac3 * (1.5 * tr_m2 - 5.0 * t2 / 3.0) * t_over_c
}

fn delta_scale(t_over_c: f64, tr_m2: f64, jac3: f64) -> f64 {
    let [d, c, b, a] = ProjectiveCubic::from_indices(t_over_c, tr_m2, jac3).coeffs;
    [18.0 * a * b * c * d, 4.0 * b * b * b * d, b * b * c * c, 4.0 * a * c * c * c, 27.0 * a * a * d * d]
        .iter()
        .map(|v| v.abs())
        .sum()
}

fn rel(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(f64::MIN_POSITIVE)
}

impl StabilityReport {
    pub fn assemble(inp: &ReportInputs) -> Self {
        use Functional::{M, P, T};
        use Param::{A, C, E};
        let table = &inp.table;
        let tau = inp.t_over_c;
        let tr = inp.origin.tr_m2;
        let jac3 = bracket3(table);
        let hadamard: f64 = table.rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product();
        let jac3_tolerance = 1e-8 * hadamard;
        let jacobian_degenerate = jac3.abs() <= jac3_tolerance;
        let cubic = ProjectiveCubic::from_indices(tau, tr, jac3);
        let delta = cubic.discriminant();
        let delta_tolerance = 1e-8 * delta_scale(tau, tr, jac3);
        let modulational = if jacobian_degenerate || delta.abs() <= delta_tolerance {
            Modulational::Degenerate
        } else if delta > 0.0 {
            Modulational::StableTripleAxis
        } else {
            Modulational::UnstableTwoCurves
        };
        let t_e = table.get(T, E);
        let jac_tm_ae = bracket2(T, M, A, E, table);
        let ev = inp.eval_index;
        let (s_ok, p_ok) = (rel(ev.statement, tr) < 1e-3, rel(ev.proof, tr) < 1e-3);
        let eval_index_match = match (s_ok, p_ok) {
            (true, true) => EvalIndexMatch::Both,
            (true, false) => EvalIndexMatch::Statement,
            (false, true) => EvalIndexMatch::Proof,
            (false, false) => EvalIndexMatch::Neither,
        };
        let strict = |v: bool| !jacobian_degenerate && v;
        Self {
            jac3,
            jac_tm_ae,
            jac_tp_ae: bracket2(T, P, A, E, table),
            jac_tp_ec: bracket2(T, P, E, C, table),
            jac_mp_ae: bracket2(M, P, A, E, table),
            t_e,
            m_a: table.get(M, A),
            t_over_c: tau,
            tr_m2: tr,
            tr_m2_statement: ev.statement,
            tr_m2_proof: ev.proof,
            tr_m2_identity: ev.identity,
            eval_index_match,
            delta,
            delta_printed: printed_delta(tau, tr, jac3),
            delta_eval_index: ProjectiveCubic::from_indices(tau, ev.statement, jac3).discriminant(),
            jac3_tolerance,
            delta_tolerance,
            jacobian_degenerate,
            orientation_unstable: strict(jac3 < 0.0),
            fw_iff_applies: t_e > 0.0,
            orbital_stable_sufficient: strict(t_e > 0.0 && jac_tm_ae > 0.0 && jac3 > 0.0),
            modulational,
            residual_eval_index: rel(ev.statement, tr),
            residual_eval_index_proof: rel(ev.proof, tr),
            residual_eval_index_identity: rel(ev.identity, tr),
            residual_d3: rel(-inp.origin.cubic_coefficient(), jac3),
            residual_a_prime: rel(inp.origin.a_prime, tau),
            lower_order_ratio: inp.origin.lower_order_ratio,
            contour_radius: inp.origin.contour_radius,
            gradient_residuals: table.residuals,
        }
    }
}

pub fn classify_wave(wave: &PeriodicWave) -> Result<StabilityReport> {
    let (table, origin) = rayon::join(|| wave.gradient_table(), || origin_derivatives_of(wave));
    let table = table?;
    let origin = origin?;
    let eval_index = eval_index_formula(wave, &table);
    let t_over_c = wave.period() / wave.params().c;
    Ok(StabilityReport::assemble(&ReportInputs { table, origin, eval_index, t_over_c }))
}

pub fn classify(params: &WaveParams, nl: &Nonlinearity) -> Result<StabilityReport> {
    classify_wave(&PeriodicWave::new(*params, nl)?)
}

/// Delta from the contour trace; errors when the orientation index vanishes.
pub fn modulational_delta(params: &WaveParams, nl: &Nonlinearity) -> Result<f64> {
    let r = classify(params, nl)?;
    if r.jacobian_degenerate {
        return Err(WaveError::DegenerateJacobian { jac3: r.jac3, tolerance: r.jac3_tolerance });
    }
    Ok(r.delta)
}

/// Residuals of the generalized-kernel relations on a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullspaceResiduals {
    /// ||J L phi0|| / ||phi0||
    pub phi0: f64,
    /// ||J L phi1|| / ||phi1||
    pub phi1: f64,
    /// ||J L phi2 + D phi1|| / ||phi2||
    pub phi2: f64,
    /// <phi2, D u>, to compare with jac3
    pub phi2_du: f64,
    /// <phi0, 1>, to compare with {T,M}_{a,E}
    pub phi0_one: f64,
    /// <phi0, D u>, to compare with {T,P}_{a,E}
    pub phi0_du: f64,
    pub jac3: f64,
    #[serde(rename = "jac_TM_aE")]
    pub jac_tm_ae: f64,
    #[serde(rename = "jac_TP_aE")]
    pub jac_tp_ae: f64,
}

/// Spectral derivative of a periodic sample vector.
fn spectral_derivative(v: &[f64], period: f64, order: u32, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = v.len();
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *z = Complex::new(0.0, 0.0);
            continue;
        }
        let ik = Complex::new(0.0, 2.0 * std::f64::consts::PI * kk / period);
        *z *= ik.powu(order);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

pub fn nullspace_residuals_of(wave: &PeriodicWave) -> Result<NullspaceResiduals> {
    use Functional::{M, T};
    use Param::{A, C, E};
    let n = NULLSPACE_GRID;
    let period = wave.period();
    let c = wave.params().c;
    let nl = wave.nonlinearity();
    let xs: Vec<f64> = (0..n).map(|j| period * j as f64 / n as f64).collect();
    let base = wave.profile_at(&xs)?;
    let u: Vec<f64> = base.iter().map(|s| s.0).collect();
    let ux: Vec<f64> = base.iter().map(|s| s.1).collect();
    let hint = wave.center();
    let mut du: Vec<Vec<f64>> = Vec::with_capacity(3);
    for param in Param::ALL {
        let x = wave.params().get(param);
        let h = NULLSPACE_REL_STEP * x.abs().max(1.0);
        let at = |s: f64| -> Result<Vec<f64>> {
            let p = WaveParams { branch_hint: hint, ..wave.params().with(param, x + s) };
            let w = PeriodicWave::new(p, nl).map_err(|e| match e {
                WaveError::NoOrbit { .. } | WaveError::DegenerateTurningPoint { .. } | WaveError::NoBracket { .. } => {
                    WaveError::StencilCrossesSeparatrix { parameter: param.name(), detail: e.to_string() }
                }
                other => other,
            })?;
            Ok(w.profile_at(&xs)?.iter().map(|s| s.0).collect())
        };
        let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(0.5 * h)?, at(-0.5 * h)?);
        du.push(
            (0..n)
                .map(|j| {
                    let d1 = (p1[j] - m1[j]) / (2.0 * h);
                    let d2 = (p2[j] - m2[j]) / h;
                    (4.0 * d2 - d1) / 3.0
                })
                .collect(),
        );
    }
    let table = wave.gradient_table()?;
    let g = |f, p| table.get(f, p);
    let (ua, ue, uc) = (&du[0], &du[1], &du[2]);
    let tm_ae = bracket2(T, M, A, E, &table);
    let phi0: Vec<f64> = (0..n).map(|j| g(T, A) * ue[j] - g(T, E) * ua[j]).collect();
    let phi1: Vec<f64> = ux.iter().map(|v| tm_ae * v).collect();
    let k_ec = g(T, E) * g(M, C) - g(T, C) * g(M, E);
    let k_ac = g(T, A) * g(M, C) - g(T, C) * g(M, A);
    let k_ae = g(T, A) * g(M, E) - g(T, E) * g(M, A);
    let phi2: Vec<f64> = (0..n).map(|j| ua[j] * k_ec - ue[j] * k_ac + uc[j] * k_ae).collect();

    let mut planner = FftPlanner::new();
    let mut d = |v: &[f64], k: u32| spectral_derivative(v, period, k, &mut planner);
    let fp: Vec<f64> = u.iter().map(|&x| nl.df(x)).collect();
    let mut jl = |v: &[f64]| -> Vec<f64> {
        let v2 = d(v, 2);
        let lv: Vec<f64> = (0..n).map(|j| -c * v2[j] + (c - 1.0) * v[j] - fp[j] * v[j]).collect();
        d(&lv, 1)
    };
    let jl0 = jl(&phi0);
    let jl1 = jl(&phi1);
    let jl2 = jl(&phi2);
    let dop = |v: &[f64], v2: Vec<f64>| -> Vec<f64> { v.iter().zip(v2).map(|(a, b)| a - b).collect() };
    let dphi1 = dop(&phi1, d(&phi1, 2));
    let du_op = dop(&u, d(&u, 2));
    let dx = period / n as f64;
    let norm = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() * dx).sqrt();
    let inner = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dx;
    let r2: Vec<f64> = jl2.iter().zip(&dphi1).map(|(a, b)| a + b).collect();
    Ok(NullspaceResiduals {
        phi0: norm(&jl0) / norm(&phi0),
        phi1: norm(&jl1) / norm(&phi1),
        phi2: norm(&r2) / norm(&phi2),
        phi2_du: inner(&phi2, &du_op),
        phi0_one: phi0.iter().sum::<f64>() * dx,
        phi0_du: inner(&phi0, &du_op),
        jac3: bracket3(&table),
        jac_tm_ae: tm_ae,
        jac_tp_ae: bracket2(T, Functional::P, A, E, &table),
    })
}

pub fn nullspace_residuals(params: &WaveParams, nl: &Nonlinearity) -> Result<NullspaceResiduals> {
    nullspace_residuals_of(&PeriodicWave::new(*params, nl)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_family::GradientMethod;

    fn table(rows: [[f64; 3]; 3]) -> GradientTable {
        GradientTable::new(rows, GradientMethod::FiniteDifference, 1.0)
    }

    #[test]
    fn brackets_are_antisymmetric() {
        let t = table([[1.0, 2.0, 3.0], [-4.0, 5.0, 0.5], [7.0, 8.0, -9.0]]);
        use Functional::{M, T};
        use Param::{A, E};
        assert_eq!(bracket2(T, T, A, E, &t), 0.0);
        assert_eq!(bracket2(T, M, A, E, &t), -bracket2(M, T, A, E, &t));
        assert_eq!(bracket2(T, M, A, E, &t), -bracket2(T, M, E, A, &t));
    }

    #[test]
    fn repeated_rows_give_zero_orientation_index() {
        let t = table([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [7.0, 8.0, -9.0]]);
        assert_eq!(bracket3(&t), 0.0);
    }

    #[test]
    fn spectral_derivative_of_a_mode() {
        let n = 32;
        let period = 3.0;
        let w = 2.0 * std::f64::consts::PI / period;
        let v: Vec<f64> = (0..n).map(|j| (2.0 * w * period * j as f64 / n as f64).sin()).collect();
        let mut planner = FftPlanner::new();
        let d1 = spectral_derivative(&v, period, 1, &mut planner);
        for (j, x) in d1.iter().enumerate() {
            let exact = 2.0 * w * (2.0 * w * period * j as f64 / n as f64).cos();
            assert!((x - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_jacobian_is_flagged_not_classified() {
        let t = table([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [7.0, 8.0, -9.0]]);
        let origin = OriginDerivatives {
            d0_evans: 0.0,
            d1_evans: 0.0,
            d2_evans: 0.0,
            d3_evans: 0.0,
            tr_m2: 2.0,
            a_prime: 1.0,
            contour_radius: 0.01,
            nodes: 32,
            lower_order_ratio: 0.0,
            tail_ratio: 0.0,
        };
        let ev = EvalIndexVariants { statement: 2.0, proof: 2.0, identity: 2.0 };
        let r = StabilityReport::assemble(&ReportInputs { table: t, origin, eval_index: ev, t_over_c: 1.0 });
        assert!(r.jacobian_degenerate);
        assert_eq!(r.modulational, Modulational::Degenerate);
        assert!(!r.orientation_unstable && !r.orbital_stable_sufficient);
    }

    #[test]
    fn printed_delta_differs_from_discriminant_by_one_term() {
        let (tau, tr, j) = (4.15, 151.6, 279.4);
        let disc = ProjectiveCubic::from_indices(tau, tr, j).discriminant();
        let gap = printed_delta(tau, tr, j) - disc;
        assert!((gap + 5.0 * j * tau.powi(3)).abs() < 1e-9 * disc.abs());
    }
}
