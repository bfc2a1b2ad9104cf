//! Fisher-Snedecor F composite fading in the power domain.
//!
//! A link with severity `m`, shadowing `m_s` and mean power `γ̄` has power
//! `γ = γ̄ (X/m) / (Y/(m_s − 1))` with `X ~ Gamma(m)`, `Y ~ Gamma(m_s)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{beta_reg_pair, ln_beta, ln_gamma, polygamma};

/// Shape value used at the boundary of the two-moment fallback.
pub const SHAPE_CAP: f64 = 1.0e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherFParams {
    pub m: f64,
    pub m_s: f64,
    pub gamma_bar: f64,
}

impl FisherFParams {
    pub fn new(m: f64, m_s: f64, gamma_bar: f64) -> Result<Self> {
        let p = Self { m, m_s, gamma_bar };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(domain("m", format!("{} must be positive", self.m)));
        }
        if !(self.m_s > 1.0 && self.m_s.is_finite()) {
            return Err(domain("m_s", format!("{} must exceed 1", self.m_s)));
        }
        if !(self.gamma_bar > 0.0 && self.gamma_bar.is_finite()) {
            return Err(domain(
                "gamma_bar",
                format!("{} must be positive", self.gamma_bar),
            ));
        }
        Ok(())
    }

    /// Rate `c = m / ((m_s − 1) γ̄)`; `E[γ^{-s}] = c^s Γ(m − s) Γ(m_s + s) / (Γ(m) Γ(m_s))`.
    pub fn rate(&self) -> f64 {
        self.m / ((self.m_s - 1.0) * self.gamma_bar)
    }

    /// Same shapes with the mean power multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            gamma_bar: self.gamma_bar * k,
            ..*self
        }
    }

    /// `ln E[γ^s]` for real `−m < s < m_s`.
    pub fn ln_mellin_moment(&self, s: f64) -> f64 {
        -s * self.rate().ln() + ln_gamma(self.m + s) + ln_gamma(self.m_s - s)
            - ln_gamma(self.m)
            - ln_gamma(self.m_s)
    }

    fn beta_argument(&self, gamma: f64) -> f64 {
        let a = self.m * gamma;
        a / (a + (self.m_s - 1.0) * self.gamma_bar)
    }
}

/// Power-domain density.
pub fn f_power_pdf(gamma: f64, p: &FisherFParams) -> Result<f64> {
    p.validate()?;
    if gamma < 0.0 {
        return Ok(0.0);
    }
    let (m, ms) = (p.m, p.m_s);
    let d = (ms - 1.0) * p.gamma_bar;
    if gamma == 0.0 {
        return Ok(match m {
            m if m < 1.0 => f64::INFINITY,
            m if m == 1.0 => m * (-(ln_beta(m, ms)) - d.ln()).exp(),
            _ => 0.0,
        });
    }
    let ln = m * m.ln() + ms * d.ln() + (m - 1.0) * gamma.ln()
        - ln_beta(m, ms)
        - (m + ms) * (m * gamma + d).ln();
    Ok(ln.exp())
}

/// Distribution function, the regularized incomplete beta `I_t(m, m_s)` with
/// `t = mγ / (mγ + (m_s − 1)γ̄)`. For `t < 1/2` this is the ₂F₁ series
/// `(mγ/((m_s−1)γ̄))^m / (m B(m, m_s)) ₂F₁(m, m + m_s; m + 1; −mγ/((m_s−1)γ̄))`.
pub fn f_power_cdf(gamma: f64, p: &FisherFParams) -> Result<f64> {
    p.validate()?;
    if gamma <= 0.0 {
        return Ok(0.0);
    }
    Ok(beta_reg_pair(p.m, p.m_s, p.beta_argument(gamma))?.0)
}

/// Survival function `1 − F(γ)` without cancellation in the tail.
pub fn f_power_sf(gamma: f64, p: &FisherFParams) -> Result<f64> {
    p.validate()?;
    if gamma <= 0.0 {
        return Ok(1.0);
    }
    Ok(beta_reg_pair(p.m, p.m_s, p.beta_argument(gamma))?.1)
}

/// Raw moment `E[γⁿ]`.
pub fn f_moment(n: u32, p: &FisherFParams) -> Result<f64> {
    p.validate()?;
    let nf = n as f64;
    if p.m_s <= nf {
        return Err(Error::MomentDoesNotExist {
            order: n,
            m_s: p.m_s,
        });
    }
    let mut v = p.gamma_bar.powi(n as i32);
    for k in 0..n {
        let k = k as f64;
        v *= (p.m + k) / p.m * (p.m_s - 1.0) / (p.m_s - 1.0 - k);
    }
    Ok(v)
}

/// Reusable sampler; avoids rebuilding the gamma generators per draw.
#[derive(Clone, Debug)]
pub struct FSampler {
    x: Gamma<f64>,
    y: Gamma<f64>,
    scale: f64,
}

impl FSampler {
    pub fn new(p: &FisherFParams) -> Result<Self> {
        p.validate()?;
        let x = Gamma::new(p.m, 1.0).map_err(|e| domain("m", e.to_string()))?;
        let y = Gamma::new(p.m_s, 1.0).map_err(|e| domain("m_s", e.to_string()))?;
        Ok(Self {
            x,
            y,
            scale: p.gamma_bar * (p.m_s - 1.0) / p.m,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = self.x.sample(rng);
        let y = self.y.sample(rng);
        self.scale * x / y
    }
}

/// One draw from the F distribution.
pub fn sample_f<R: Rng + ?Sized>(p: &FisherFParams, rng: &mut R) -> Result<f64> {
    Ok(FSampler::new(p)?.sample(rng))
}

/// How a surrogate was fitted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchKind {
    /// Single component, returned as is.
    Identity,
    /// First three moments matched.
    ThreeMoment,
    /// First two moments matched with `m` pinned at [`SHAPE_CAP`]; the target
    /// third moment was larger than any F distribution with these two moments.
    TwoMomentHeavyTail,
    /// First two moments matched with `m_s` pinned at [`SHAPE_CAP`]; the target
    /// third moment was smaller than any F distribution with these two moments.
    TwoMomentLightTail,
    /// Second and third log-cumulants matched, mean kept exact.
    LogCumulant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Surrogate {
    pub params: FisherFParams,
    pub kind: MatchKind,
}

/// Fit a single F distribution to raw moments `μ1, μ2, μ3` (`μ3` may be `∞`).
pub fn match_moments(mu1: f64, mu2: f64, mu3: f64) -> Result<Surrogate> {
    if !(mu1 > 0.0 && mu2.is_finite() && mu2 > mu1 * mu1) {
        return Err(Error::MomentMatchInfeasible(format!(
            "need finite mean and variance, got μ1 = {mu1}, μ2 = {mu2}"
        )));
    }
    let r2 = mu2 / (mu1 * mu1);
    if mu3.is_finite() {
        let q = mu3 / (mu1 * mu1 * mu1) / r2;
        let ms = (4.0 * r2 - 1.0 - 3.0 * q) / (2.0 * r2 - 1.0 - q);
        let inv_m = r2 * (ms - 2.0) / (ms - 1.0) - 1.0;
        if ms > 3.0 && inv_m > 0.0 && ms.is_finite() {
            return Ok(Surrogate {
                params: FisherFParams::new(1.0 / inv_m, ms, mu1)?,
                kind: MatchKind::ThreeMoment,
            });
        }
        // below the gamma boundary: lighter tail than any F with this variance
        if q < 2.0 * r2 - 1.0 {
            let ms = SHAPE_CAP;
            let inv_m = r2 * (ms - 2.0) / (ms - 1.0) - 1.0;
            if inv_m > 0.0 {
                return Ok(Surrogate {
                    params: FisherFParams::new(1.0 / inv_m, ms, mu1)?,
                    kind: MatchKind::TwoMomentLightTail,
                });
            }
        }
    }
    let m = SHAPE_CAP;
    let k = r2 / (1.0 + 1.0 / m);
    if !(k > 1.0) {
        return Err(Error::MomentMatchInfeasible(format!(
            "variance ratio {r2} too small for m = {m}"
        )));
    }
    let ms = (2.0 * k - 1.0) / (k - 1.0);
    Ok(Surrogate {
        params: FisherFParams::new(m, ms, mu1)?,
        kind: MatchKind::TwoMomentHeavyTail,
    })
}

fn moments3(p: &FisherFParams) -> Result<(f64, f64, f64)> {
    let mu1 = f_moment(1, p)?;
    let mu2 = f_moment(2, p).map_err(|_| {
        Error::MomentMatchInfeasible(format!("component with m_s = {} has no variance", p.m_s))
    })?;
    let mu3 = f_moment(3, p).unwrap_or(f64::INFINITY);
    Ok((mu1, mu2, mu3))
}

/// Surrogate for a sum of independent F variables, with the fit kind.
pub fn approx_sum_f_detailed(components: &[FisherFParams]) -> Result<Surrogate> {
    match components {
        [] => Err(domain("components", "empty sum")),
        [only] => {
            only.validate()?;
            Ok(Surrogate {
                params: *only,
                kind: MatchKind::Identity,
            })
        }
        _ => {
            let (mut k1, mut k2, mut k3) = (0.0, 0.0, 0.0);
            for c in components {
                let (m1, m2, m3) = moments3(c)?;
                k1 += m1;
                k2 += m2 - m1 * m1;
                k3 += m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
            }
            let mu1 = k1;
            let mu2 = k2 + k1 * k1;
            let mu3 = k3 + 3.0 * k2 * k1 + k1 * k1 * k1;
            match_moments(mu1, mu2, mu3)
        }
    }
}

/// Single-F surrogate for a sum of independent F variables.
pub fn approx_sum_f(components: &[FisherFParams]) -> Result<FisherFParams> {
    approx_sum_f_detailed(components).map(|s| s.params)
}

/// Shapes `(m, m_s)` with `ψ'(m) + ψ'(m_s) = k2` and `ψ''(m) − ψ''(m_s) = k3`,
/// by damped Newton iteration in log coordinates.
fn solve_log_cumulants(k2: f64, k3: f64) -> Option<(f64, f64)> {
    let residual = |u: [f64; 2]| {
        let (m, ms) = (u[0].exp(), u[1].exp());
        [
            polygamma(1, m) + polygamma(1, ms) - k2,
            polygamma(2, m) - polygamma(2, ms) - k3,
        ]
    };
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    // equal shapes with ψ'(x) ≈ 1/x + 1/(2x²) = k2/2
    let c = 0.5 * k2;
    let x0 = (1.0 + (1.0 + 2.0 * c).sqrt()) / (2.0 * c);
    let mut u = [x0.ln(), x0.ln()];
    let mut r = residual(u);
    for _ in 0..200 {
        if norm(r) <= 1e-13 * (1.0 + k2) {
            let (m, ms) = (u[0].exp(), u[1].exp());
            return (m.is_finite() && ms > 1.0 && m <= SHAPE_CAP && ms <= SHAPE_CAP)
                .then_some((m, ms));
        }
        let (m, ms) = (u[0].exp(), u[1].exp());
        let j = [
            [m * polygamma(2, m), ms * polygamma(2, ms)],
            [m * polygamma(3, m), -ms * polygamma(3, ms)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) {
            return None;
        }
        let du = [
            (r[0] * j[1][1] - r[1] * j[0][1]) / det,
            (j[0][0] * r[1] - j[1][0] * r[0]) / det,
        ];
        let mut t = 1.0;
        loop {
            let trial = [u[0] - t * du[0], u[1] - t * du[1]];
            let rt = residual(trial);
            if norm(rt).is_finite() && norm(rt) < norm(r) {
                u = trial;
                r = rt;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return None;
            }
        }
    }
    None
}

/// Surrogate for the product of two independent F variables, with the fit kind.
///
/// The shapes match the second and third cumulants of `ln(X_1 X_2)`, which
/// exist for every valid pair; the scale keeps the product mean. Pairs without
/// a solution fall back to matching the first three raw moments.
pub fn approx_product_pair_detailed(p1: &FisherFParams, p2: &FisherFParams) -> Result<Surrogate> {
    p1.validate()?;
    p2.validate()?;
    let k2 = [p1.m, p1.m_s, p2.m, p2.m_s]
        .iter()
        .map(|&x| polygamma(1, x))
        .sum();
    let k3 = polygamma(2, p1.m) - polygamma(2, p1.m_s) + polygamma(2, p2.m) - polygamma(2, p2.m_s);
    if let Some((m, m_s)) = solve_log_cumulants(k2, k3) {
        return Ok(Surrogate {
            params: FisherFParams::new(m, m_s, p1.gamma_bar * p2.gamma_bar)?,
            kind: MatchKind::LogCumulant,
        });
    }
    let a = moments3(p1)?;
    let b = moments3(p2)?;
    match_moments(a.0 * b.0, a.1 * b.1, a.2 * b.2)
}

/// Single-F surrogate for the product of two independent F variables.
pub fn approx_product_pair(p1: &FisherFParams, p2: &FisherFParams) -> Result<FisherFParams> {
    approx_product_pair_detailed(p1, p2).map(|s| s.params)
}
