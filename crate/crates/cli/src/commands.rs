use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::Value;
use wavelab_core::asymptotics::{
    classify_solitary_limit, critical_speed, mass_a_ratio, picard_fuchs, solitary_limit_consistency, PowerLaw,
};
use wavelab_core::evans::sign_at_infinity_of;
use wavelab_core::indices::classify_wave;
use wavelab_core::spectrum::{modulational_agreement, projective_roots, scan, track_branches};
use wavelab_core::{Functional, Nonlinearity, Param, PeriodicWave, WaveError, WaveParams};

use crate::config::RunConfig;
use crate::output::{flat, num, Record, Sink};

pub type Outcome = Result<Vec<PathBuf>, WaveError>;

fn params_record(nl: &Nonlinearity, p: &WaveParams) -> Record {
    let mut r = Record::new();
    r.insert("nonlinearity".into(), Value::String(nl.label().to_string()));
    r.extend(flat(p));
    r
}

fn error_fields(r: &mut Record, e: Option<&WaveError>) {
    r.insert("status".into(), Value::String(e.map_or("ok", |e| e.kind()).into()));
    r.insert("error".into(), Value::String(e.map(|e| e.to_string()).unwrap_or_default()));
}

pub fn solve(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let nl = cfg.nonlinearity.build()?;
    let params = cfg.wave_params()?;
    let wave = PeriodicWave::new(params, &nl)?;
    let (table, profile) = rayon::join(|| wave.gradient_table(), || wave.sample_profile(cfg.profile_points));
    let (table, profile) = (table?, profile?);

    let mut rec = params_record(&nl, &params);
    rec.extend(flat(wave.turning_points()));
    rec.extend(flat(wave.conserved()));
    for f in [Functional::T, Functional::M, Functional::P] {
        for p in [Param::A, Param::E, Param::C] {
            rec.insert(format!("{f:?}_{}", p.name()), num(table.get(f, p)));
        }
    }
    rec.insert("gradient_method".into(), serde_json::to_value(table.method).expect("enum serializes"));
    rec.extend(flat(&table.residuals));
    rec.insert("closure_error".into(), num(profile.closure_error));
    rec.insert("ode_period".into(), num(profile.ode_period));
    rec.insert("energy_residual".into(), num(wave.energy_residual(&profile)));

    let rows: Vec<Record> = (0..profile.x.len())
        .map(|i| {
            let mut r = Record::new();
            r.insert("x".into(), num(profile.x[i]));
            r.insert("u".into(), num(profile.u[i]));
            r.insert("ux".into(), num(profile.ux[i]));
            r
        })
        .collect();
    let cols = ["x", "u", "ux"].map(String::from);
    Ok(vec![sink.record("solve", &rec)?, sink.table("profile", &cols, &rows)?])
}

/// Full index record of one wave, shared by `indices` and `sweep`.
pub fn indices_record(nl: &Nonlinearity, params: &WaveParams) -> Result<Record, WaveError> {
    let wave = PeriodicWave::new(*params, nl)?;
    let (report, sign) = rayon::join(|| classify_wave(&wave), || sign_at_infinity_of(&wave));
    let report = report?;
    let cs = wave.conserved();
    let mut rec = params_record(nl, params);
    rec.insert("T".into(), num(cs.period));
    rec.insert("M".into(), num(cs.mass));
    rec.insert("P".into(), num(cs.momentum));
    rec.insert("K".into(), num(cs.action));
    rec.insert("sign_at_infinity".into(), sign.map_or(Value::Null, |s| Value::from(s.sign)));
    rec.extend(flat(&report));
    Ok(rec)
}

pub fn indices(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let nl = cfg.nonlinearity.build()?;
    let rec = indices_record(&nl, &cfg.wave_params()?)?;
    Ok(vec![sink.record("indices", &rec)?])
}

fn mu_fields(r: &mut Record, prefix: &str, z: Complex64) {
    r.insert(format!("{prefix}_re"), num(z.re));
    r.insert(format!("{prefix}_im"), num(z.im));
}

fn point_row(kappa: f64, mu: Complex64, residual: f64) -> Record {
    let mut r = Record::new();
    r.insert("kappa".into(), num(kappa));
    r.insert("re_mu".into(), num(mu.re));
    r.insert("im_mu".into(), num(mu.im));
    r.insert("residual".into(), num(residual));
    r
}

const POINT_COLS: [&str; 4] = ["kappa", "re_mu", "im_mu", "residual"];

pub fn spectrum(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let nl = cfg.nonlinearity.build()?;
    let params = cfg.wave_params()?;
    let wave = PeriodicWave::new(params, &nl)?;
    let report = classify_wave(&wave)?;
    let cols = POINT_COLS.map(String::from);
    let mut files = Vec::new();

    let mut rec = params_record(&nl, &params);
    rec.insert("jac3".into(), num(report.jac3));
    rec.insert("delta".into(), num(report.delta));
    rec.insert("modulational".into(), serde_json::to_value(report.modulational).expect("enum serializes"));

    match projective_roots(&report) {
        Ok(roots) => {
            rec.insert("roots_at_infinity".into(), Value::from(roots.at_infinity));
            for (j, y) in roots.roots.iter().enumerate() {
                mu_fields(&mut rec, &format!("y{j}"), *y);
            }
            match track_branches(&wave, &roots, cfg.kappa_max, cfg.kappa_points) {
                Ok(branches) => {
                    error_fields(&mut rec, None);
                    for b in &branches {
                        let max_re = b.mus.iter().map(|m| m.re.abs()).fold(0.0, f64::max);
                        rec.insert(format!("branch{}_max_abs_re_mu", b.index), num(max_re));
                        let rows: Vec<Record> =
                            (0..b.mus.len()).map(|i| point_row(b.kappas[i], b.mus[i], b.residuals[i])).collect();
                        files.push(sink.table(&format!("branch_{}", b.index), &cols, &rows)?);
                    }
                }
                Err(e) if e.kind() == "BranchCollision" => {
                    log::warn!("branch tracking stopped: {e}");
                    error_fields(&mut rec, Some(&e));
                }
                Err(e) => return Err(e),
            }
        }
        Err(e) => {
            log::warn!("no projective roots: {e}");
            error_fields(&mut rec, Some(&e));
        }
    }

    match modulational_agreement(&wave, &report, cfg.agreement_kappa) {
        Ok(ag) => {
            rec.insert("agreement_kappa".into(), num(ag.kappa));
            rec.insert("roots_real".into(), Value::Bool(ag.roots_real));
            for (j, (off, err)) in ag.off_axis.iter().zip(&ag.slope_errors).enumerate() {
                rec.insert(format!("off_axis_{j}"), Value::Bool(*off));
                rec.insert(format!("slope_error_{j}"), num(*err));
            }
            rec.insert("agree".into(), Value::Bool(ag.agree));
        }
        Err(e) if matches!(e.kind(), "BranchCollision" | "DegenerateJacobian") => {
            rec.insert("agree".into(), Value::Null);
            rec.insert("agreement_error".into(), Value::String(e.to_string()));
        }
        Err(e) => return Err(e),
    }

    if let Some(s) = &cfg.scan {
        let points = scan(&wave, &s.region(), s.n_re, s.n_im, s.tol)?;
        let rows: Vec<Record> = points.iter().map(|p| point_row(p.kappa, p.mu, p.unit_circle_residual)).collect();
        rec.insert("scan_points".into(), Value::from(points.len()));
        rec.insert("scan_grid_points".into(), Value::from(points.iter().filter(|p| !p.refined).count()));
        files.push(sink.table("scan", &cols, &rows)?);
    }

    files.insert(0, sink.record("spectrum", &rec)?);
    Ok(files)
}

pub fn sweep(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let nl = cfg.nonlinearity.build()?;
    let base = cfg.wave_params()?;
    let axis = |a: &Option<crate::config::Axis>, v: f64| a.as_ref().map_or(vec![v], |a| a.values());
    let (aa, ee, cc) = (axis(&cfg.sweep.a, base.a), axis(&cfg.sweep.energy, base.energy), axis(&cfg.sweep.c, base.c));
    let mut points = Vec::with_capacity(aa.len() * ee.len() * cc.len());
    for &a in &aa {
        for &e in &ee {
            points.extend(cc.iter().map(|&c| WaveParams::new(a, e, c, base.branch_hint)));
        }
    }
    if points.is_empty() {
        return Err(WaveError::InvalidInput { detail: "sweep grid is empty".into() });
    }

    let rows: Vec<Record> = points
        .par_iter()
        .map(|p| {
            let result = p.validate().and_then(|_| indices_record(&nl, p));
            let mut row = params_record(&nl, p);
            match result {
                Ok(rec) => {
                    error_fields(&mut row, None);
                    row.extend(rec);
                }
                Err(e) => {
                    log::info!("sweep point {p:?}: {e}");
                    error_fields(&mut row, Some(&e));
                }
            }
            row
        })
        .collect();

    let mut cols: Vec<String> = params_record(&nl, &base).keys().cloned().collect();
    cols.extend(["status".to_string(), "error".to_string()]);
    if let Some(ok) = rows.iter().find(|r| r["status"] == "ok") {
        cols.extend(ok.keys().filter(|k| !cols.contains(k)).cloned().collect::<Vec<_>>());
    }
    Ok(vec![sink.table("sweep", &cols, &rows)?])
}

pub fn pf(cfg: &RunConfig, sink: &Sink) -> Outcome {
    if cfg.pf.energies.is_empty() && cfg.solitary.is_none() {
        return Err(WaveError::InvalidInput { detail: "pf needs an (E, c) grid or a solitary sequence".into() });
    }
    let mut files = Vec::new();
    if !cfg.pf.energies.is_empty() {
        let grid: Vec<(f64, f64)> =
            cfg.pf.energies.iter().flat_map(|&e| cfg.pf.c.iter().map(move |&c| (e, c))).collect();
        let rows: Vec<Record> = grid
            .par_iter()
            .map(|&(e, c)| {
                let mut row = Record::new();
                row.insert("E".into(), num(e));
                row.insert("c".into(), num(c));
                match picard_fuchs(e, c).and_then(|s| mass_a_ratio(e, c).map(|m| (s, m))) {
                    Ok((sol, ratio)) => {
                        error_fields(&mut row, None);
                        row.extend(flat(&sol));
                        row.extend(flat(&ratio));
                    }
                    Err(err) => error_fields(&mut row, Some(&err)),
                }
                row
            })
            .collect();
        let mut cols: Vec<String> = ["E", "c", "status", "error"].map(String::from).to_vec();
        for i in 0..7 {
            cols.push(format!("I_{i}"));
        }
        cols.extend(
            ["mu0", "mu1", "mu2", "cond", "det", "disc", "M_a", "T", "ratio", "scaled_mass_a"].map(String::from),
        );
        files.push(sink.table("pf", &cols, &rows)?);
    }
    if let Some(s) = &cfg.solitary {
        let law = PowerLaw::new(s.p, s.convention)?;
        let cons = solitary_limit_consistency(&law, s.c, &s.energies)?;
        let mut rec = Record::new();
        rec.insert("p".into(), num(cons.p));
        rec.insert("c".into(), num(cons.c));
        rec.insert("predicted".into(), serde_json::to_value(cons.predicted).expect("enum serializes"));
        rec.insert(
            "closed_form_verdict".into(),
            serde_json::to_value(classify_solitary_limit(s.p, s.c)).expect("enum serializes"),
        );
        rec.insert("critical_speed".into(), num(critical_speed(s.p)));
        rec.insert("momentum_dc".into(), num(cons.momentum_dc));
        rec.insert("agreement".into(), num(cons.agreement));
        rec.insert("eventually_agrees".into(), Value::Bool(cons.eventually_agrees));
        rec.insert("log_slope".into(), num(cons.log_slope));
        rec.insert("expected_log_slope".into(), num(cons.expected_log_slope));
        rec.insert("slope_error".into(), num(cons.slope_error()));
        files.push(sink.record("solitary", &rec)?);
        let rows: Vec<Record> = cons.points.iter().map(flat).collect();
        let cols: Vec<String> = rows.first().map(|r| r.keys().cloned().collect()).unwrap_or_default();
        files.push(sink.table("solitary_points", &cols, &rows)?);
    }
    Ok(files)
}
