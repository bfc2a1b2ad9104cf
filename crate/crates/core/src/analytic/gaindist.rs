//! Distance-free gain distributions used inside the metric integrals.
//!
//! A single F term has a closed form. Sums are tabulated once on a
//! logarithmic grid from their contour-integral CDF and density, then read
//! back through cubic Hermite interpolation with power-law tails.

use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::sinr::{analytic_contour, gain_mb};
use super::terms::{surrogate_for_terms, GainModel, GainTerm};
use crate::error::Result;
use crate::fading::{f_power_cdf, f_power_pdf, f_power_sf, FisherFParams};
use crate::specfun::FOLD_LIMIT;

const STEP: f64 = 0.05;

#[derive(Clone, Debug)]
pub enum GainDist {
    Closed(FisherFParams),
    Table(Arc<GainTable>),
}

impl GainDist {
    pub fn from_model(model: &GainModel) -> Result<Self> {
        match model {
            GainModel::Surrogate(p) => Ok(GainDist::Closed(*p)),
            GainModel::Exact(t) if t.len() == 1 => match t[0] {
                GainTerm::Single(p) => Ok(GainDist::Closed(p)),
                GainTerm::Product(..) => Ok(GainDist::Table(GainTable::cached(t)?)),
            },
            other => Ok(GainDist::Table(GainTable::cached(&other.terms())?)),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            GainDist::Closed(p) => f_power_cdf(y, p).unwrap_or(0.0),
            GainDist::Table(t) => t.cdf(y),
        }
    }

    pub fn sf(&self, y: f64) -> f64 {
        match self {
            GainDist::Closed(p) => f_power_sf(y, p).unwrap_or(1.0),
            GainDist::Table(t) => t.sf(y),
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        match self {
            GainDist::Closed(p) => f_power_pdf(y, p).unwrap_or(0.0),
            GainDist::Table(t) => t.pdf(y),
        }
    }

    /// `ln y` interval that holds all but a negligible part of the mass.
    pub fn log_support(&self) -> (f64, f64) {
        match self {
            GainDist::Closed(p) => closed_support(p),
            GainDist::Table(t) => (t.v0, t.v0 + STEP * (t.cdf.len() - 1) as f64),
        }
    }
}

fn quantile_log(p: &FisherFParams, target: f64, upper: bool) -> f64 {
    // bisection in ln y on the CDF (lower) or survival function (upper)
    let (mut lo, mut hi) = (p.gamma_bar.ln() - 200.0, p.gamma_bar.ln() + 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = if upper {
            f_power_sf(mid.exp(), p).unwrap_or(0.0)
        } else {
            f_power_cdf(mid.exp(), p).unwrap_or(0.0)
        };
        let go_right = if upper { v > target } else { v < target };
        if go_right {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn closed_support(p: &FisherFParams) -> (f64, f64) {
    (quantile_log(p, 1e-14, false), quantile_log(p, 1e-12, true))
}

/// Tabulated CDF of a sum of gain terms on an even grid in `v = ln y`.
#[derive(Debug)]
pub struct GainTable {
    v0: f64,
    cdf: Vec<f64>,
    /// `dF/dv = y f(y)` at the nodes.
    slope: Vec<f64>,
    lower_exponent: f64,
    upper_exponent: f64,
}

fn cache() -> &'static Mutex<HashMap<String, Arc<GainTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<GainTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl GainTable {
    /// Table for `terms`, shared between callers asking for the same terms.
    pub fn cached(terms: &[GainTerm]) -> Result<Arc<Self>> {
        let key = format!("{terms:?}");
        if let Some(t) = cache().lock().expect("cache lock").get(&key) {
            return Ok(t.clone());
        }
        let t = Arc::new(Self::build(terms)?);
        cache().lock().expect("cache lock").insert(key, t.clone());
        Ok(t)
    }

    pub fn build(terms: &[GainTerm]) -> Result<Self> {
        if terms.len() > FOLD_LIMIT {
            return Err(crate::Error::FoldLimitExceeded {
                folds: terms.len(),
                limit: FOLD_LIMIT,
            });
        }
        let guide = surrogate_for_terms(terms)?.params;
        let (lo, hi) = closed_support(&guide);
        let (v0, v1) = (lo - 1.0, hi + 1.0);
        let n = ((v1 - v0) / STEP).ceil() as usize + 1;
        let contour = analytic_contour();
        let values: Vec<Result<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let y = (v0 + STEP * i as f64).exp();
                let f = gain_mb(terms, y, false, &contour)?;
                let d = gain_mb(terms, y, true, &contour)?;
                Ok((f, (d * y).max(0.0)))
            })
            .collect();
        let mut cdf = Vec::with_capacity(n);
        let mut slope = Vec::with_capacity(n);
        for v in values {
            let (f, s) = v?;
            cdf.push(f);
            slope.push(s);
        }
        // enforce monotonicity against round-off in the far tails
        for i in 1..n {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        let lower_exponent = GainModel::Exact(terms.to_vec()).lower_tail_exponent();
        let upper_exponent = terms
            .iter()
            .map(|t| t.moment_bound())
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            v0,
            cdf,
            slope,
            lower_exponent,
            upper_exponent,
        })
    }

    fn locate(&self, v: f64) -> Option<(usize, f64)> {
        let x = (v - self.v0) / STEP;
        if x < 0.0 || x >= (self.cdf.len() - 1) as f64 {
            return None;
        }
        let i = x.floor() as usize;
        Some((i, x - i as f64))
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slope[i] * STEP, self.slope[i + 1] * STEP);
        let (t2, t3) = (t * t, t * t * t);
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1;
        let deriv = (6.0 * t2 - 6.0 * t) * f0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * f1
            + (3.0 * t2 - 2.0 * t) * d1;
        (value, deriv / STEP)
    }

    fn last(&self) -> usize {
        self.cdf.len() - 1
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let v = y.ln();
        match self.locate(v) {
            Some((i, t)) => self.hermite(i, t).0.clamp(0.0, 1.0),
            None if v < self.v0 => self.cdf[0] * (self.lower_exponent * (v - self.v0)).exp(),
            None => 1.0 - self.sf(y),
        }
    }

    pub fn sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        let v = y.ln();
        let end = self.v0 + STEP * self.last() as f64;
        if v >= end {
            let tail = 1.0 - self.cdf[self.last()];
            return tail.max(0.0) * (-self.upper_exponent * (v - end)).exp();
        }
        1.0 - self.cdf(y)
    }

    pub fn pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let v = y.ln();
        let end = self.v0 + STEP * self.last() as f64;
        let dv = match self.locate(v) {
            Some((i, t)) => self.hermite(i, t).1.max(0.0),
            None if v < self.v0 => self.lower_exponent * self.cdf(y),
            None => self.upper_exponent * self.sf(y) * if v >= end { 1.0 } else { 0.0 },
        };
        dv / y
    }
}
