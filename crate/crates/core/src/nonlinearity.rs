use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Scaling of a power-law nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerConvention {
    /// f(u) = u^(p+1)
    Plain,
    /// f(u) = u^(p+1) / (p+1)
    Normalized,
}

/// Evaluators for f, f', f'' and the antiderivative F with F(0) = 0.
#[derive(Clone)]
pub struct Nonlinearity {
    f: Eval,
    df: Eval,
    d2f: Eval,
    antiderivative: Eval,
    label: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Nonlinearity").field("label", &self.label).finish()
    }
}

impl Nonlinearity {
    pub fn new<F0, F1, F2, FI>(label: impl Into<String>, f: F0, df: F1, d2f: F2, antiderivative: FI) -> Result<Self>
    where
        F0: Fn(f64) -> f64 + Send + Sync + 'static,
        F1: Fn(f64) -> f64 + Send + Sync + 'static,
        F2: Fn(f64) -> f64 + Send + Sync + 'static,
        FI: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let at_zero = antiderivative(0.0);
        if at_zero != 0.0 {
            return Err(WaveError::invalid(format!("antiderivative must vanish at 0, got {at_zero}")));
        }
        Ok(Self {
            f: Arc::new(f),
            df: Arc::new(df),
            d2f: Arc::new(d2f),
            antiderivative: Arc::new(antiderivative),
            label: label.into(),
        })
    }

    /// Power law u^(p+1), optionally divided by p+1.
    ///
    /// Integer p uses exact integer powers and is defined on all of R. Other
    /// values of p are only defined for u >= 0; negative arguments give NaN,
    /// which the turning-point scan treats as forbidden.
    pub fn power(p: f64, convention: PowerConvention) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(WaveError::invalid(format!("power-law exponent p must be positive, got {p}")));
        }
        let k = match convention {
            PowerConvention::Plain => 1.0,
            PowerConvention::Normalized => 1.0 / (p + 1.0),
        };
        let label = match convention {
            PowerConvention::Plain => format!("u^{}", p + 1.0),
            PowerConvention::Normalized => format!("u^{}/{}", p + 1.0, p + 1.0),
        };
        let rounded = p.round();
        if (p - rounded).abs() < 1e-12 && rounded < 64.0 {
            let n = rounded as i32;
            let nf = rounded;
            Self::new(
                label,
                move |u: f64| k * u.powi(n + 1),
                move |u: f64| k * (nf + 1.0) * u.powi(n),
                move |u: f64| k * (nf + 1.0) * nf * u.powi(n - 1),
                move |u: f64| k * u.powi(n + 2) / (nf + 2.0),
            )
        } else {
            Self::new(
                label,
                move |u: f64| k * u.powf(p + 1.0),
                move |u: f64| k * (p + 1.0) * u.powf(p),
                move |u: f64| k * (p + 1.0) * p * u.powf(p - 1.0),
                move |u: f64| k * u.powf(p + 2.0) / (p + 2.0),
            )
        }
    }

    /// BBM: f(u) = u^2.
    pub fn bbm() -> Self {
        Self::power(1.0, PowerConvention::Plain).expect("p = 1 is valid")
    }

    /// Modified BBM: f(u) = u^3.
    pub fn mbbm() -> Self {
        Self::power(2.0, PowerConvention::Plain).expect("p = 2 is valid")
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        (self.d2f)(u)
    }

    #[inline]
    pub fn antiderivative(&self, u: f64) -> f64 {
        (self.antiderivative)(u)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest relative mismatch between each evaluator and a central
    /// difference of the one above it (F' = f, f' = df, df' = d2f).
    pub fn consistency_residual(&self, samples: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &u in samples {
            let h = 1e-5 * u.abs().max(1.0);
            let pairs: [(&Eval, &Eval); 3] =
                [(&self.antiderivative, &self.f), (&self.f, &self.df), (&self.df, &self.d2f)];
            for (g, dg) in pairs {
                let fd = (g(u + h) - g(u - h)) / (2.0 * h);
                let exact = dg(u);
                worst = worst.max((fd - exact).abs() / (1.0 + exact.abs()));
            }
        }
        worst
    }
}
