//! L2 spectrum through the Floquet parameterization: mu is in the spectrum
//! when M(mu) has an eigenvalue e^(i kappa) on the unit circle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::evans::{monodromy_of, MonodromyMatrix};
use crate::indices::StabilityReport;
use crate::wave_family::PeriodicWave;

const KAPPA_MIN: f64 = 1e-4;
const NEWTON_MAX_ITERS: usize = 40;
const STENCIL_REL: f64 = 1e-2;

/// Roots of c[0] x^3 + c[1] x^2 + c[2] x + c[3] via the companion matrix,
/// polished by Newton steps.
pub fn cubic_roots(c: [Complex64; 4]) -> [Complex64; 3] {
    let (b, cc, d) = (c[1] / c[0], c[2] / c[0], c[3] / c[0]);
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let companion = Matrix3::new(-b, -cc, -d, one, z, z, z, one, z);
    let ev = companion.schur().eigenvalues().expect("complex Schur form is triangular");
    let p = |x: Complex64| ((x + b) * x + cc) * x + d;
    let dp = |x: Complex64| (3.0 * x + 2.0 * b) * x + cc;
    let mut roots = [ev[0], ev[1], ev[2]];
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let der = dp(*r);
            if der.norm() == 0.0 {
                break;
            }
            let next = *r - p(*r) / der;
            if p(next).norm() >= p(*r).norm() {
                break;
            }
            *r = next;
        }
    }
    roots
}

/// Roots of p[0] x^n + ... + p[n] as eigenvalues of the companion matrix.
fn companion_roots(p: &[Complex64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -p[j + 1] / p[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    m.schur().eigenvalues().expect("complex Schur form is triangular").iter().copied().collect()
}

/// How the roots of a projective cubic were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    ClosedForm,
    Companion,
}

/// 1 + (T/c) y - (y^2/2)(tr M_mumu(0) - (T/c)^2) - {T,M,P} y^3, stored as
/// coefficients of y^0 .. y^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveCubic {
    pub coeffs: [f64; 4],
}

/// Finite roots of a projective cubic, plus how many escaped to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveRoots {
    pub roots: Vec<Complex64>,
    pub at_infinity: usize,
    pub method: RootMethod,
}

impl ProjectiveRoots {
    pub fn all_real(&self, tol: f64) -> bool {
        self.at_infinity == 0 && self.roots.iter().all(|r| r.im.abs() <= tol * r.norm().max(1.0))
    }
}

impl ProjectiveCubic {
    pub fn from_indices(t_over_c: f64, tr_m2: f64, jac3: f64) -> Self {
        Self { coeffs: [1.0, t_over_c, -0.5 * (tr_m2 - t_over_c * t_over_c), -jac3] }
    }

    pub fn from_report(r: &StabilityReport) -> Self {
        Self::from_indices(r.t_over_c, r.tr_m2, r.jac3)
    }

    pub fn eval(&self, y: Complex64) -> Complex64 {
        let [c0, c1, c2, c3] = self.coeffs;
        ((y * c3 + c2) * y + c1) * y + c0
    }

    /// Discriminant of the cubic in y; positive iff three distinct real roots.
    pub fn discriminant(&self) -> f64 {
        let [d, c, b, a] = self.coeffs;
        18.0 * a * b * c * d - 4.0 * b * b * b * d + b * b * c * c - 4.0 * a * c * c * c - 27.0 * a * a * d * d
    }

    pub fn roots(&self) -> ProjectiveRoots {
        let [c0, c1, c2, c3] = self.coeffs;
        let scale = c0.abs().max(c1.abs()).max(c2.abs());
        if c3.abs() > 1e-12 * scale {
            let mut roots = real_cubic_roots(c3, c2, c1, c0).to_vec();
            for r in roots.iter_mut() {
                *r = self.polish(*r);
            }
            return ProjectiveRoots { roots, at_infinity: 0, method: RootMethod::ClosedForm };
        }
        // y = 1/z turns vanishing leading coefficients into roots z = 0, deflated exactly
        let at_infinity = if c2.abs() <= 1e-12 * scale { 2 } else { 1 };
        let zpoly: Vec<Complex64> =
            [c0, c1, c2, c3][..4 - at_infinity].iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let roots = companion_roots(&zpoly).into_iter().map(|z| 1.0 / z).collect();
        ProjectiveRoots { roots, at_infinity, method: RootMethod::Companion }
    }

    fn polish(&self, mut y: Complex64) -> Complex64 {
        let [_, c1, c2, c3] = self.coeffs;
        for _ in 0..3 {
            let der = (y * (3.0 * c3) + 2.0 * c2) * y + c1;
            if der.norm() == 0.0 {
                break;
            }
            let next = y - self.eval(y) / der;
            if self.eval(next).norm() >= self.eval(y).norm() {
                break;
            }
            y = next;
        }
        y
    }
}

/// Closed-form roots of a y^3 + b y^2 + c y + d with real coefficients.
fn real_cubic_roots(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let (aa, bb, cc) = (b / a, c / a, d / a);
    let shift = aa / 3.0;
    let p = bb - aa * aa / 3.0;
    let q = 2.0 * aa * aa * aa / 27.0 - aa * bb / 3.0 + cc;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        let t = |k: f64| m * (phi - 2.0 * PI * k / 3.0).cos() - shift;
        [Complex64::new(t(0.0), 0.0), Complex64::new(t(1.0), 0.0), Complex64::new(t(2.0), 0.0)]
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        let t1 = (-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt();
        let im = (3.0 * t1 * t1 + 4.0 * p).max(0.0).sqrt() / 2.0;
        [Complex64::new(t1 - shift, 0.0), Complex64::new(-t1 / 2.0 - shift, im), Complex64::new(-t1 / 2.0 - shift, -im)]
    }
}

pub fn projective_roots(report: &StabilityReport) -> Result<ProjectiveRoots> {
    if report.jacobian_degenerate {
        return Err(WaveError::DegenerateJacobian { jac3: report.jac3, tolerance: report.jac3_tolerance });
    }
    Ok(ProjectiveCubic::from_report(report).roots())
}

/// One branch mu_j(kappa) of roots of D(mu, e^(i kappa)) leaving the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBranch {
    pub index: usize,
    pub y_seed: Complex64,
    pub kappas: Vec<f64>,
    pub mus: Vec<Complex64>,
    /// |D| / (|mu| |dD/dmu|) at each accepted point
    pub residuals: Vec<f64>,
}

/// Root of mu -> D(mu, e^(i kappa)) by Newton's method with a four-point
/// complex-stencil derivative. Returns the root and |D| / (|mu| |dD/dmu|).
///
/// Close to the origin D is tiny and its rounding noise can exceed
/// 1e-8 |mu| |dD/dmu|; the noise is measured from the stencil (the mean of
/// the four values equals the centre value to O(h^4)) and a root resolved
/// down to that floor is accepted.
pub fn branch_point(wave: &PeriodicWave, seed: Complex64, kappa: f64) -> Result<(Complex64, f64)> {
    let lambda = Complex64::from_polar(1.0, kappa);
    let d = |mu: Complex64| -> Result<Complex64> { Ok(monodromy_of(wave, mu)?.evans(lambda)) };
    let reach = seed.norm().max(kappa * wave.params().c / wave.period());
    // value, derivative and noise estimate at mu
    let probe = |mu: Complex64| -> Result<(Complex64, Complex64, f64)> {
        let h = STENCIL_REL * mu.norm().max(1e-3 * reach);
        let dirs =
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];
        let mut pts: Vec<Complex64> = dirs.iter().map(|w| mu + w * h).collect();
        pts.push(mu);
        let vals: Vec<Complex64> = pts.par_iter().map(|&m| d(m)).collect::<Result<_>>()?;
        let der = vals.iter().zip(&dirs).map(|(v, w)| v / w).sum::<Complex64>() / (4.0 * h);
        let mean = vals[..4].iter().sum::<Complex64>() / 4.0;
        Ok((vals[4], der, (mean - vals[4]).norm()))
    };
    let mut mu = seed;
    let mut last_step = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITERS {
        let (val, der, noise) = probe(mu)?;
        if der.norm() == 0.0 || !der.norm().is_finite() {
            break;
        }
        let step = val / der;
        if step.norm() <= 2.0 * noise / der.norm() && last_step.is_finite() {
            last_step = step.norm();
            break;
        }
        mu -= step;
        last_step = step.norm();
        if !mu.norm().is_finite() || (mu - seed).norm() > 0.5 * reach.max(seed.norm()) + reach {
            return Err(WaveError::NewtonDivergence { kappa, branch: usize::MAX });
        }
        if last_step <= 1e-12 * mu.norm() {
            break;
        }
    }
    let (val, der, noise) = probe(mu)?;
    let scale = (mu.norm() * der.norm()).max(f64::MIN_POSITIVE);
    let floor = 10.0 * noise;
    let residual = val.norm() / scale;
    let resolved = last_step <= (1e-8 * mu.norm()).max(floor / der.norm()) && val.norm() <= (1e-8 * scale).max(floor);
    if !resolved {
        return Err(WaveError::NewtonDivergence { kappa, branch: usize::MAX });
    }
    Ok((mu, residual))
}

fn kappa_grid(kappa_max: f64, n: usize) -> Vec<f64> {
    if n < 2 || kappa_max <= KAPPA_MIN {
        return vec![kappa_max.clamp(f64::MIN_POSITIVE, KAPPA_MIN)];
    }
    let ratio = (kappa_max / KAPPA_MIN).ln();
    (0..n).map(|i| KAPPA_MIN * (ratio * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Follows the three branches from mu = -i y_j kappa on a geometric kappa grid
/// from 1e-4 to `kappa_max`.
pub fn track_branches(
    wave: &PeriodicWave,
    roots: &ProjectiveRoots,
    kappa_max: f64,
    n: usize,
) -> Result<Vec<SpectrumBranch>> {
    if roots.at_infinity > 0 || roots.roots.len() != 3 {
        return Err(WaveError::invalid("branch tracking needs three finite projective roots"));
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (roots.roots[i], roots.roots[j]);
            if (a - b).norm() <= 1e-8 * a.norm().max(b.norm()) {
                return Err(WaveError::BranchCollision { kappa: 0.0, first: i, second: j });
            }
        }
    }
    let kappas = kappa_grid(kappa_max, n);
    let minus_i = Complex64::new(0.0, -1.0);
    let branches: Vec<SpectrumBranch> = (0..3)
        .into_par_iter()
        .map(|j| {
            let y = roots.roots[j];
            let mut mus: Vec<Complex64> = Vec::with_capacity(kappas.len());
            let mut residuals = Vec::with_capacity(kappas.len());
            for (i, &kappa) in kappas.iter().enumerate() {
                let seed = match i {
                    0 => minus_i * y * kappa,
                    1 => mus[0] * (kappa / kappas[0]),
                    _ => {
                        let (k1, k2) = (kappas[i - 1], kappas[i - 2]);
                        let (m1, m2) = (mus[i - 1], mus[i - 2]);
                        m1 + (m1 - m2) * ((kappa - k1) / (k1 - k2))
                    }
                };
                let (mu, res) = branch_point(wave, seed, kappa).map_err(|e| match e {
                    WaveError::NewtonDivergence { kappa, .. } => WaveError::NewtonDivergence { kappa, branch: j },
                    other => other,
                })?;
                mus.push(mu);
                residuals.push(res);
            }
            Ok(SpectrumBranch { index: j, y_seed: y, kappas: kappas.clone(), mus, residuals })
        })
        .collect::<Result<_>>()?;
    for (i, &kappa) in kappas.iter().enumerate() {
        for a in 0..3 {
            for b in a + 1..3 {
                let (ma, mb) = (branches[a].mus[i], branches[b].mus[i]);
                if (ma - mb).norm() <= 1e-6 * ma.norm().max(mb.norm()) {
                    return Err(WaveError::BranchCollision { kappa, first: a, second: b });
                }
            }
        }
    }
    Ok(branches)
}

/// Rectangle in the mu plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Point of the computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub mu: Complex64,
    pub kappa: f64,
    /// min over multipliers of ||lambda| - 1|
    pub unit_circle_residual: f64,
    /// |D(mu, e^(i kappa))| / (1 + |e^(mu T/c)|)
    pub evans_residual: f64,
    /// true if the point was moved onto the spectrum by bisection along a grid edge
    pub refined: bool,
}

struct Node {
    mu: Complex64,
    outside: usize,
    residual: f64,
}

fn node(wave: &PeriodicWave, mu: Complex64) -> Result<(Node, MonodromyMatrix)> {
    let m = monodromy_of(wave, mu)?;
    let ev = m.eigenvalues();
    let outside = ev.iter().filter(|l| l.norm() > 1.0).count();
    let residual = ev.iter().map(|l| (l.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    Ok((Node { mu, outside, residual }, m))
}

fn spectrum_point(m: &MonodromyMatrix, refined: bool) -> SpectrumPoint {
    let ev = m.eigenvalues();
    let nearest = ev
        .iter()
        .min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()))
        .copied()
        .expect("three multipliers");
    let mut kappa = nearest.arg();
    if kappa >= PI {
        kappa -= 2.0 * PI;
    }
    let d = m.evans(Complex64::from_polar(1.0, kappa));
    SpectrumPoint {
        mu: m.mu,
        kappa,
        unit_circle_residual: (nearest.norm() - 1.0).abs(),
        evans_residual: d.norm() / (1.0 + m.exp_term.norm()),
        refined,
    }
}

fn bisect_edge(wave: &PeriodicWave, a: &Node, b: &Node) -> Result<SpectrumPoint> {
    let (mut lo, mut hi) = (a.mu, b.mu);
    let mut best: Option<MonodromyMatrix> = None;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (nd, m) = node(wave, mid)?;
        let done = nd.residual <= 1e-11;
        if nd.outside == a.outside {
            lo = mid;
        } else {
            hi = mid;
        }
        best = Some(m);
        if done || (hi - lo).norm() <= 1e-15 * mid.norm().max(1.0) {
            break;
        }
    }
    Ok(spectrum_point(&best.expect("at least one bisection step"), true))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid scan of a rectangle. Nodes within `tol` of the unit circle are
/// accepted; edges across which the number of multipliers outside the unit
/// circle changes are bisected onto the spectrum.
pub fn scan(
    wave: &PeriodicWave,
    region: &ScanRegion,
    n_re: usize,
    n_im: usize,
    tol: f64,
) -> Result<Vec<SpectrumPoint>> {
    let res = linspace(region.re_min, region.re_max, n_re);
    let ims = linspace(region.im_min, region.im_max, n_im);
    let mus: Vec<Complex64> = ims.iter().flat_map(|&im| res.iter().map(move |&re| Complex64::new(re, im))).collect();
    let evaluated: Vec<(Node, MonodromyMatrix)> = mus.par_iter().map(|&mu| node(wave, mu)).collect::<Result<_>>()?;
    let at = |i: usize, j: usize| &evaluated[j * res.len() + i].0;

    let mut points: Vec<SpectrumPoint> =
        evaluated.iter().filter(|(nd, _)| nd.residual < tol).map(|(_, m)| spectrum_point(m, false)).collect();

    let mut edges = Vec::new();
    for j in 0..ims.len() {
        for i in 0..res.len() {
            if i + 1 < res.len() {
                edges.push(((i, j), (i + 1, j)));
            }
            if j + 1 < ims.len() {
                edges.push(((i, j), (i, j + 1)));
            }
        }
    }
    let crossings: Vec<SpectrumPoint> = edges
        .par_iter()
        .filter(|(p, q)| at(p.0, p.1).outside != at(q.0, q.1).outside)
        .map(|(p, q)| bisect_edge(wave, at(p.0, p.1), at(q.0, q.1)))
        .collect::<Result<_>>()?;
    points.extend(crossings.into_iter().filter(|p| p.unit_circle_residual < tol));
    Ok(points)
}

/// Three independent views of modulational stability at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationalAgreement {
    pub delta: f64,
    pub roots: Vec<Complex64>,
    pub roots_real: bool,
    /// branches whose mu at kappa = `kappa` leaves the imaginary axis
    pub off_axis: Vec<bool>,
    pub kappa: f64,
    /// |arg mu_j(kappa) - arg(-i y_j)| per branch
    pub slope_errors: Vec<f64>,
    pub agree: bool,
}

/// Compares sign(Delta), the reality of the projective roots and the position
/// of the three branch points at a small kappa.
pub fn modulational_agreement(
    wave: &PeriodicWave,
    report: &StabilityReport,
    kappa: f64,
) -> Result<ModulationalAgreement> {
    let roots = projective_roots(report)?;
    let roots_real = roots.all_real(1e-8);
    let minus_i = Complex64::new(0.0, -1.0);
    let solved: Vec<(Complex64, f64)> =
        roots.roots.par_iter().map(|y| branch_point(wave, minus_i * y * kappa, kappa)).collect::<Result<_>>()?;
    let off_axis: Vec<bool> = solved.iter().map(|(mu, _)| mu.re.abs() > 1e-3 * mu.norm()).collect();
    let slope_errors: Vec<f64> = solved
        .iter()
        .zip(&roots.roots)
        .map(|((mu, _), y)| {
            let diff = mu.arg() - (minus_i * y).arg();
            (diff + PI).rem_euclid(2.0 * PI) - PI
        })
        .map(f64::abs)
        .collect();
    let n_off = off_axis.iter().filter(|v| **v).count();
    let slopes_ok = slope_errors.iter().all(|e| *e < 1e-2);
    let agree = slopes_ok && if report.delta > 0.0 { roots_real && n_off == 0 } else { !roots_real && n_off == 2 };
    Ok(ModulationalAgreement {
        delta: report.delta,
        roots: roots.roots,
        roots_real,
        off_axis,
        kappa,
        slope_errors,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_three_real_roots() {
        // (y - 1)(y + 2)(y - 3) = y^3 - 2y^2 - 5y + 6, reversed to y^0..y^3
        let cubic = ProjectiveCubic { coeffs: [6.0, -5.0, -2.0, 1.0] };
        let r = cubic.roots();
        assert_eq!(r.method, RootMethod::ClosedForm);
        assert!(r.all_real(1e-12));
        let mut re: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(cubic.discriminant() > 0.0);
    }

    #[test]
    fn closed_form_complex_pair() {
        // (y - 1)(y^2 + 1) = y^3 - y^2 + y - 1
        let cubic = ProjectiveCubic { coeffs: [-1.0, 1.0, -1.0, 1.0] };
        let r = cubic.roots();
        assert!(!r.all_real(1e-8));
        assert!(cubic.discriminant() < 0.0);
        for z in &r.roots {
            assert!(cubic.eval(*z).norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_linear_case_uses_companion() {
        let t_over_c = 4.15;
        let cubic = ProjectiveCubic { coeffs: [1.0, t_over_c, 0.0, 0.0] };
        let r = cubic.roots();
        assert_eq!(r.method, RootMethod::Companion);
        assert_eq!(r.at_infinity, 2);
        assert_eq!(r.roots.len(), 1);
        assert!((r.roots[0].re + 1.0 / t_over_c).abs() < 1e-12);
    }

    #[test]
    fn complex_cubic_roots() {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // (x - i)(x + 2)(x - 1 - i)
        let roots = cubic_roots([one, 1.0 - 2.0 * i, -3.0 - 3.0 * i, -2.0 + 2.0 * i]);
        for want in [i, -2.0 * one, one + i] {
            assert!(roots.iter().any(|r| (r - want).norm() < 1e-12), "{roots:?}");
        }
    }

    #[test]
    fn kappa_grid_is_geometric() {
        let g = kappa_grid(0.1, 7);
        assert!((g[0] - 1e-4).abs() < 1e-18);
        assert!((g[2] - 1e-3).abs() < 1e-15);
        assert!((g[6] - 0.1).abs() < 1e-14);
    }
}
