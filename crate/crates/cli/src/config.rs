//! Run configuration: a single JSON document, with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavelab_core::spectrum::ScanRegion;
use wavelab_core::{Nonlinearity, PowerConvention, WaveError, WaveParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearitySpec {
    Named(String),
    Power {
        p: f64,
        #[serde(default = "plain")]
        convention: PowerConvention,
    },
}

fn plain() -> PowerConvention {
    PowerConvention::Plain
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Named("mbbm".into())
    }
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity, WaveError> {
        match self {
            NonlinearitySpec::Named(n) => match n.as_str() {
                "bbm" => Ok(Nonlinearity::bbm()),
                "mbbm" => Ok(Nonlinearity::mbbm()),
                other => Err(WaveError::InvalidInput { detail: format!("unknown nonlinearity '{other}'") }),
            },
            NonlinearitySpec::Power { p, convention } => Nonlinearity::power(*p, *convention),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub a: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    pub c: f64,
    pub branch_hint: f64,
}

/// One sweep axis: a list, a single value or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Single(f64),
    Values(Vec<f64>),
    Range { from: f64, to: f64, n: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Single(v) => vec![*v],
            Axis::Values(v) => v.clone(),
            Axis::Range { from, to, n } => match n {
                0 => vec![],
                1 => vec![*from],
                _ => (0..*n).map(|i| from + (to - from) * i as f64 / (*n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub a: Option<Axis>,
    #[serde(rename = "E")]
    pub energy: Option<Axis>,
    pub c: Option<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
    #[serde(default = "default_scan_tol")]
    pub tol: f64,
}

fn default_scan_tol() -> f64 {
    1e-3
}

impl ScanSpec {
    pub fn region(&self) -> ScanRegion {
        ScanRegion { re_min: self.re_min, re_max: self.re_max, im_min: self.im_min, im_max: self.im_max }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfSpec {
    #[serde(rename = "E")]
    pub energies: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitarySpec {
    pub p: f64,
    #[serde(default = "normalized")]
    pub convention: PowerConvention,
    pub c: f64,
    #[serde(rename = "E")]
    pub energies: Vec<f64>,
}

fn normalized() -> PowerConvention {
    PowerConvention::Normalized
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: NonlinearitySpec,
    pub params: Option<ParamsSpec>,
    pub profile_points: usize,
    pub kappa_max: f64,
    pub kappa_points: usize,
    pub agreement_kappa: f64,
    pub scan: Option<ScanSpec>,
    pub sweep: SweepSpec,
    pub pf: PfSpec,
    pub solitary: Option<SolitarySpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nonlinearity: NonlinearitySpec::default(),
            params: None,
            profile_points: 64,
            kappa_max: 0.1,
            kappa_points: 12,
            agreement_kappa: 1e-3,
            scan: None,
            sweep: SweepSpec::default(),
            pf: PfSpec::default(),
            solitary: None,
            out: None,
            format: None,
            jobs: None,
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Named nonlinearity: bbm or mbbm
    #[arg(long)]
    pub nonlinearity: Option<String>,
    /// Power-law exponent p for f = u^(p+1) (plain) or u^(p+1)/(p+1) (normalized)
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, value_parser = parse_convention)]
    pub convention: Option<PowerConvention>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long = "energy", short = 'E', allow_hyphen_values = true)]
    pub energy: Option<f64>,
    #[arg(long = "speed", short = 'c')]
    pub c: Option<f64>,
    #[arg(long = "hint", allow_hyphen_values = true)]
    pub branch_hint: Option<f64>,
    #[arg(long)]
    pub profile_points: Option<usize>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub kappa_points: Option<usize>,
}

fn parse_convention(s: &str) -> Result<PowerConvention, String> {
    match s {
        "plain" => Ok(PowerConvention::Plain),
        "normalized" => Ok(PowerConvention::Normalized),
        _ => Err(format!("expected plain or normalized, got '{s}'")),
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, WaveError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| WaveError::InvalidInput { detail: format!("cannot read {}: {e}", path.display()) })?;
        serde_json::from_str(&text)
            .map_err(|e| WaveError::InvalidInput { detail: format!("bad config {}: {e}", path.display()) })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = &o.nonlinearity {
            self.nonlinearity = NonlinearitySpec::Named(n.clone());
        }
        if o.power.is_some() || o.convention.is_some() {
            let (p0, c0) = match &self.nonlinearity {
                NonlinearitySpec::Power { p, convention } => (*p, *convention),
                NonlinearitySpec::Named(n) if n == "bbm" => (1.0, PowerConvention::Plain),
                NonlinearitySpec::Named(_) => (2.0, PowerConvention::Plain),
            };
            self.nonlinearity =
                NonlinearitySpec::Power { p: o.power.unwrap_or(p0), convention: o.convention.unwrap_or(c0) };
        }
        if o.a.is_some() || o.energy.is_some() || o.c.is_some() || o.branch_hint.is_some() {
            let base =
                self.params.unwrap_or(ParamsSpec { a: 0.0, energy: f64::NAN, c: f64::NAN, branch_hint: f64::NAN });
            self.params = Some(ParamsSpec {
                a: o.a.unwrap_or(base.a),
                energy: o.energy.unwrap_or(base.energy),
                c: o.c.unwrap_or(base.c),
                branch_hint: o.branch_hint.unwrap_or(base.branch_hint),
            });
        }
        if let Some(v) = o.profile_points {
            self.profile_points = v;
        }
        if let Some(v) = o.kappa_max {
            self.kappa_max = v;
        }
        if let Some(v) = o.kappa_points {
            self.kappa_points = v;
        }
    }

    pub fn validate(&self) -> Result<(), WaveError> {
        let bad = |detail: String| Err(WaveError::InvalidInput { detail });
        if self.profile_points < 2 || self.kappa_points < 2 {
            return bad("grid counts must be at least 2".into());
        }
        if !(self.kappa_max > 0.0) || !(self.agreement_kappa > 0.0) {
            return bad("kappa values must be positive".into());
        }
        if let Some(s) = &self.scan {
            if !(s.tol > 0.0) {
                return bad("scan tolerance must be positive".into());
            }
            let axis_ok = |lo: f64, hi: f64, n: usize| if lo == hi { n >= 1 } else { n >= 2 && lo < hi };
            if !axis_ok(s.re_min, s.re_max, s.n_re) || !axis_ok(s.im_min, s.im_max, s.n_im) {
                return bad("scan axes need lo < hi with at least 2 points, or lo = hi".into());
            }
        }
        if self.jobs == Some(0) {
            return bad("jobs must be positive".into());
        }
        Ok(())
    }

    pub fn wave_params(&self) -> Result<WaveParams, WaveError> {
        let p = self
            .params
            .ok_or_else(|| WaveError::InvalidInput { detail: "params (a, E, c, branch_hint) are required".into() })?;
        let out = WaveParams::new(p.a, p.energy, p.c, p.branch_hint);
        out.validate()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut cfg: RunConfig =
            serde_json::from_str(r#"{"params": {"a": 0.0, "E": -0.05, "c": 2.0, "branch_hint": 1.0}}"#).unwrap();
        cfg.apply(&Overrides { energy: Some(-0.1), ..Overrides::default() });
        let p = cfg.params.unwrap();
        assert_eq!((p.energy, p.c), (-0.1, 2.0));
    }

    #[test]
    fn axis_forms() {
        let a: Axis = serde_json::from_str("0.5").unwrap();
        assert_eq!(a.values(), vec![0.5]);
        let a: Axis = serde_json::from_str(r#"{"from": 0.0, "to": 1.0, "n": 3}"#).unwrap();
        assert_eq!(a.values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn nonlinearity_forms() {
        let n: NonlinearitySpec = serde_json::from_str(r#""bbm""#).unwrap();
        assert_eq!(n.build().unwrap().label(), Nonlinearity::bbm().label());
        let n: NonlinearitySpec = serde_json::from_str(r#"{"p": 3, "convention": "normalized"}"#).unwrap();
        assert!(n.build().is_ok());
        assert!(NonlinearitySpec::Named("kdv".into()).build().is_err());
    }

    #[test]
    fn rejects_small_grids() {
        let cfg = RunConfig { kappa_points: 1, ..RunConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
