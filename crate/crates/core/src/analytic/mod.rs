//! Closed-form and contour-integral distributions and secrecy metrics.

pub mod asymptotic;
pub mod foxh;
pub mod gaindist;
pub mod metrics;
pub mod sinr;
pub mod terms;

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

pub use asymptotic::{diversity_order, op_asymptotic};
pub use foxh::{asr_fox_h, pnsc_fox_h, sop_fox_h};
pub use gaindist::{GainDist, GainTable};
pub use metrics::{asr_metric, evaluate, op_metric, pnsc_metric, sop_metric};
pub use sinr::{
    analytic_contour, cdf_direct, cdf_s1_approx, cdf_s1_exact, cdf_s2_approx, cdf_s2_exact,
    gain_mb, pdf_s1_exact, pdf_s2_exact, Method, SinrDistribution,
};
pub use terms::{exact_terms, gain_model, surrogate_for_terms, GainModel, GainTerm, Receiver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Op,
    Sop,
    Pnsc,
    Asr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Op, Metric::Sop, Metric::Pnsc, Metric::Asr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Op => "op",
            Metric::Sop => "sop",
            Metric::Pnsc => "pnsc",
            Metric::Asr => "asr",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| domain("metric", format!("unknown metric `{s}`")))
    }
}

/// Evaluation path of a metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricMethod {
    /// Exact gain distributions (contour integrals over every gain term).
    Exact,
    /// Moment-matched single-F surrogates.
    Approx,
    /// High-SNR power law; outage probability only.
    Asymptotic,
    /// Full multivariate contour forms; single-term links only.
    FoxH,
    /// Monte-Carlo simulation.
    MonteCarlo,
}

impl MetricMethod {
    pub const ALL: [MetricMethod; 5] = [
        MetricMethod::Exact,
        MetricMethod::Approx,
        MetricMethod::Asymptotic,
        MetricMethod::FoxH,
        MetricMethod::MonteCarlo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricMethod::Exact => "exact",
            MetricMethod::Approx => "approx",
            MetricMethod::Asymptotic => "asymptotic",
            MetricMethod::FoxH => "foxh",
            MetricMethod::MonteCarlo => "mc",
        }
    }
}

impl fmt::Display for MetricMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| domain("method", format!("unknown method `{s}`")))
    }
}

/// Secrecy targets and thresholds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecrecyParams {
    /// Target secrecy rate in bits/s/Hz.
    pub r_t: f64,
    /// `2^r_t`.
    pub r_s: f64,
    /// Outage threshold on the SINR (linear).
    pub z_th: f64,
    /// Regulariser for the contour SOP at zero target rate.
    pub e_reg: f64,
    /// Ratio `ρ` in `PNSC = Pr(Z_user > ρ Z_eve)`.
    pub pnsc_ratio: f64,
}

impl Default for SecrecyParams {
    fn default() -> Self {
        Self::new(1.0, 1.0).expect("valid defaults")
    }
}

impl SecrecyParams {
    pub fn new(r_t: f64, z_th: f64) -> Result<Self> {
        let s = Self {
            r_t,
            r_s: 2f64.powf(r_t),
            z_th,
            e_reg: 1e-6,
            pnsc_ratio: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_r_t(mut self, r_t: f64) -> Result<Self> {
        self.r_t = r_t;
        self.r_s = 2f64.powf(r_t);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_t >= 0.0 && self.r_t.is_finite()) {
            return Err(domain("r_t", format!("{} must be non-negative", self.r_t)));
        }
        if (self.r_s - 2f64.powf(self.r_t)).abs() > 1e-12 * self.r_s {
            return Err(domain("r_s", "must equal 2^r_t"));
        }
        if !(self.z_th > 0.0 && self.z_th.is_finite()) {
            return Err(domain("z_th", format!("{} must be positive", self.z_th)));
        }
        if !(self.e_reg > 0.0 && self.e_reg <= 1e-3) {
            return Err(domain("e_reg", format!("{} outside (0, 1e-3]", self.e_reg)));
        }
        if !(self.pnsc_ratio > 0.0 && self.pnsc_ratio.is_finite()) {
            return Err(domain(
                "pnsc_ratio",
                format!("{} must be positive", self.pnsc_ratio),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub folds: usize,
    pub nodes: usize,
    pub flags: Vec<String>,
}

impl Diagnostics {
    pub fn flag(&mut self, f: impl Into<String>) {
        let f = f.into();
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }

    pub fn merge(&mut self, other: Diagnostics) {
        self.folds = self.folds.max(other.folds);
        self.nodes += other.nodes;
        for f in other.flags {
            self.flag(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricResult {
    pub metric: Metric,
    pub value: f64,
    pub method: MetricMethod,
    pub error_estimate: f64,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in MetricMethod::ALL {
            assert_eq!(m.name().parse::<MetricMethod>().unwrap(), m);
        }
        for m in Metric::ALL {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("bogus".parse::<Metric>().is_err());
    }

    #[test]
    fn secrecy_defaults_and_checks() {
        let s = SecrecyParams::default();
        assert_eq!(s.r_s, 2.0);
        assert!(SecrecyParams::new(-1.0, 1.0).is_err());
        assert!(SecrecyParams::new(1.0, 0.0).is_err());
        let mut bad = s;
        bad.e_reg = 0.1;
        assert!(bad.validate().is_err());
    }
}
