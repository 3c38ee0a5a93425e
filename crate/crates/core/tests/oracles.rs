//! Independent numerical oracles and frozen reference values.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use wavelab_core::asymptotics::{picard_fuchs, sech_integral};
use wavelab_core::indices::bracket3;
use wavelab_core::{Functional, Nonlinearity, Param, PeriodicWave, WaveParams};

fn gl(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n).unwrap()).as_node_weight_pairs().to_vec()
}

/// Adaptive 10-point Gauss-Legendre on [a, b], bisecting until panels agree.
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let rule = gl(10);
    let panel = |lo: f64, hi: f64| {
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        rule.iter().map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
    };
    let whole = panel(a, b);
    let mid = 0.5 * (a + b);
    let halves = panel(a, mid) + panel(mid, b);
    if depth == 0 || (whole - halves).abs() <= tol * halves.abs().max(1e-300) {
        return halves;
    }
    adaptive(f, a, mid, tol, depth - 1) + adaptive(f, mid, b, tol, depth - 1)
}

fn w0() -> WaveParams {
    WaveParams::new(0.0, -0.05, 2.0, 1.0)
}

fn w1() -> WaveParams {
    WaveParams::new(0.0, 0.1, 2.0, 0.0)
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

#[test]
fn mass_matches_adaptive_quadrature_with_sine_substitution() {
    let (c, e) = (2.0, -0.05);
    // u^4 - 2u^2 + 0.2 = 0
    let um = (1.0 - 0.8f64.sqrt()).sqrt();
    let up = (1.0 + 0.8f64.sqrt()).sqrt();
    let v = |u: f64| u.powi(4) / 4.0 - 0.5 * (c - 1.0) * u * u;
    let (mid, half) = (0.5 * (um + up), 0.5 * (up - um));
    let integrand = |k: i32| {
        move |phi: f64| {
            let u = mid + half * phi.sin();
            u.powi(k) * half * phi.cos() / (2.0 * (e - v(u))).sqrt()
        }
    };
    let t = 2.0 * c.sqrt() * adaptive(&integrand(0), -PI / 2.0, PI / 2.0, 1e-13, 30);
    let m = 2.0 * c.sqrt() * adaptive(&integrand(1), -PI / 2.0, PI / 2.0, 1e-13, 30);
    let wave = PeriodicWave::new(w0(), &Nonlinearity::mbbm()).unwrap();
    let cs = wave.conserved();
    assert!(rel(cs.period, t) < 1e-8, "T {} vs {t}", cs.period);
    assert!(rel(cs.mass, m) < 1e-8, "M {} vs {m}", cs.mass);
}

#[test]
fn frozen_conserved_values() {
    let nl = Nonlinearity::mbbm();
    let cs = *PeriodicWave::new(w0(), &nl).unwrap().conserved();
    assert!(rel(cs.period, 8.300542091082) < 1e-10);
    assert!(rel(cs.mass, 2.0 * PI) < 1e-10);
    assert!(rel(cs.momentum, 3.285090705447) < 1e-10);
    assert!(rel(cs.action, 0.701438998954) < 1e-10);
    let cs = *PeriodicWave::new(w1(), &nl).unwrap().conserved();
    assert!(rel(cs.period, 14.036605159) < 1e-9);
    assert!(cs.mass.abs() < 1e-10);
    assert!(rel(cs.momentum, 6.761721578) < 1e-9);
    assert!(rel(cs.action, 2.734012174) < 1e-9);
}

#[test]
#[allow(clippy::approx_constant)]
fn frozen_gradient_table() {
    let wave = PeriodicWave::new(w0(), &Nonlinearity::mbbm()).unwrap();
    let g = wave.gradient_table().unwrap();
    let expected = [
        [0.0, 26.30396246077, 0.5552607233],
        [-3.039749598917, 0.0, 1.570796326796],
        [1.5707963268, 0.5552607233, 2.694703851154],
    ];
    for (row, exp) in g.rows.iter().zip(expected) {
        for (x, y) in row.iter().zip(exp) {
            assert!((x - y).abs() < 1e-7 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
    assert!(rel(bracket3(&g), 279.4269007406) < 1e-8);
}

#[test]
fn harmonic_limit_of_the_period() {
    // mBBM: u* = 1, V'' = 2; BBM: u* = 1, V'' = 1
    let cases = [(Nonlinearity::mbbm(), -0.25, 2.0), (Nonlinearity::bbm(), -1.0 / 6.0, 1.0)];
    for (nl, vmin, vpp) in cases {
        let c = 2.0;
        let wave = PeriodicWave::new(WaveParams::new(0.0, vmin + 1e-4, c, 1.0), &nl).unwrap();
        let limit = 2.0 * PI * (c / vpp).sqrt();
        assert!(rel(wave.period(), limit) < 1e-2, "{} vs {limit}", wave.period());
    }
}

/// Finite part of the closed-cycle integral of u^k R^(-3/2) on the a = 0 cnoidal
/// cycle, written as R = -(1/4)(u - u_-)(u - u_+)(u^2 + beta^2) and integrated
/// by parts in theta once the u = u_- + D sin^2(theta) substitution is made.
fn finite_part_moment(e: f64, c: f64, k: i32) -> f64 {
    let s = ((c - 1.0f64).powi(2) + 4.0 * e).sqrt();
    let up = ((c - 1.0) + s).sqrt();
    let um = -up;
    let beta2 = s - (c - 1.0);
    let d = up - um;
    let g_prime = |u: f64| {
        let q = 0.25 * (u * u + beta2);
        let dq = 0.5 * u;
        let lead = if k > 0 { k as f64 * u.powi(k - 1) * q.powf(-1.5) } else { 0.0 };
        lead - 1.5 * u.powi(k) * q.powf(-2.5) * dq
    };
    let total: f64 = gl(200)
        .iter()
        .map(|(x, w)| {
            let th = (x + 1.0) * PI / 4.0;
            let u = um + d * th.sin().powi(2);
            w * PI / 4.0 * g_prime(u) * (2.0 * th).cos()
        })
        .sum();
    2.0 * (4.0 / d) * total
}

#[test]
fn picard_fuchs_matches_finite_part_quadrature() {
    for e in [0.02, 0.05, 0.1] {
        for c in [1.5, 2.0, 3.0] {
            let sol = picard_fuchs(e, c).unwrap();
            let oracle = finite_part_moment(e, c, 2);
            assert!(rel(sol.i[2], oracle) < 1e-5, "E={e} c={c}: {} vs {oracle}", sol.i[2]);
            for k in [1, 3, 5] {
                assert!(sol.i[k].abs() < 1e-8 * sol.norm());
            }
        }
    }
}

#[test]
fn frozen_picard_fuchs_solution() {
    let sol = picard_fuchs(0.1, 2.0).unwrap();
    let expected = [58.585975163, 0.0, 4.63882025364, 0.0, -23.434390065, 0.0, -88.170975956];
    for (x, y) in sol.i.iter().zip(expected) {
        assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "{x} vs {y}");
    }
    assert!(rel(sol.mass_a(2.0), -2.3194101268) < 1e-9);
}

#[test]
fn sech_integral_matches_quadrature() {
    for r in [1.0, 2.0, 3.0, 4.0, 4.0 / 3.0, 0.5] {
        let f = |x: f64| (1.0 / x.cosh()).powf(r);
        let len = 60.0 / r;
        let body = adaptive(&f, 0.0, len, 1e-14, 40);
        // sech^r(x) ~ 2^r e^(-r x) beyond len
        let tail = 2f64.powf(r) * (-r * len).exp() / r;
        let quad = 2.0 * (body + tail);
        assert!(rel(sech_integral(r), quad) < 1e-10, "r={r}: {} vs {quad}", sech_integral(r));
    }
}

#[test]
fn period_from_profile_matches_quadrature() {
    let wave = PeriodicWave::new(w0(), &Nonlinearity::mbbm()).unwrap();
    let profile = wave.sample_profile(64).unwrap();
    assert!((profile.ode_period - wave.period()).abs() < 1e-7 * wave.period());
    let g = wave.gradient_table().unwrap();
    assert!(g.get(Functional::T, Param::E) > 0.0);
}
