//! Outage and secrecy metrics from the branch distributions.
//!
//! Every metric is a mixture over the LoS and non-LoS branches and, for the
//! secrecy metrics, over the eavesdropper's main and side lobes. Inside a
//! branch the user and the eavesdropper either share one distance draw or
//! draw independently from the branch distance law.

use std::f64::consts::LN_2;

use super::gaindist::GainDist;
use super::sinr::{Method, SinrDistribution};
use super::terms::{gain_model, GainModel, Receiver};
use super::{Diagnostics, Metric, MetricMethod, MetricResult, SecrecyParams};
use crate::channel::{sinr_scale, LinkKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::fading::MatchKind;
use crate::geometry::{branch_laws, prob_vectors, DistanceCoupling, DistanceLaw};
use crate::quad::{integrate, QuadSettings};
use crate::specfun::FOLD_LIMIT;

const OUTER: QuadSettings = QuadSettings {
    abs_tol: 1e-8,
    rel_tol: 1e-8,
    max_intervals: 400,
};
const INNER: QuadSettings = QuadSettings {
    abs_tol: 1e-10,
    rel_tol: 1e-9,
    max_intervals: 400,
};

/// One link branch with its probability and distance law.
#[derive(Clone, Debug)]
pub(crate) struct Branch {
    pub kind: LinkKind,
    pub prob: f64,
    pub law: DistanceLaw,
    pub alpha: f64,
    pub a_user: f64,
    /// Eavesdropper scale in the main and side lobe.
    pub a_eve: [f64; 2],
}

/// The active branches of a configuration and the main-lobe probability.
pub(crate) fn branches(cfg: &ScenarioConfig) -> Result<(Vec<Branch>, f64)> {
    cfg.validate()?;
    let (pa, _) = prob_vectors(&cfg.geometry, &cfg.blockage, cfg.pattern_eve.theta_c)?;
    let (los, nlos) = branch_laws(&cfg.geometry, &cfg.blockage, cfg.blockage_coupling);
    let mut out = Vec::new();
    for (kind, prob, law) in [
        (LinkKind::LoS, pa[0], los),
        (cfg.non_los_kind(), pa[1], nlos),
    ] {
        if prob <= 0.0 || law.is_empty() {
            continue;
        }
        let (a_user, alpha) = sinr_scale(kind, cfg, Receiver::User.antenna_gain(cfg));
        let main = sinr_scale(
            kind,
            cfg,
            Receiver::Eve { main_lobe: true }.antenna_gain(cfg),
        )
        .0;
        let side = sinr_scale(
            kind,
            cfg,
            Receiver::Eve { main_lobe: false }.antenna_gain(cfg),
        )
        .0;
        out.push(Branch {
            kind,
            prob,
            law,
            alpha,
            a_user,
            a_eve: [main, side],
        });
    }
    Ok((out, cfg.pattern_eve.main_lobe_probability()))
}

fn exactness(method: MetricMethod) -> Result<bool> {
    match method {
        MetricMethod::Exact => Ok(true),
        MetricMethod::Approx => Ok(false),
        other => Err(Error::MethodUnavailable {
            method: other.to_string(),
            reason: "not a quadrature path".into(),
        }),
    }
}

fn note_matches(diag: &mut Diagnostics, kinds: &[MatchKind]) {
    for k in kinds {
        match k {
            MatchKind::TwoMomentHeavyTail => diag.flag("two_moment_heavy_tail"),
            MatchKind::TwoMomentLightTail => diag.flag("two_moment_light_tail"),
            _ => {}
        }
    }
}

fn unavailable_if_too_wide(model: &GainModel, method: MetricMethod) -> Result<()> {
    if method == MetricMethod::Exact && model.folds() > FOLD_LIMIT {
        return Err(Error::MethodUnavailable {
            method: method.to_string(),
            reason: format!(
                "{} gain terms exceed the fold limit {FOLD_LIMIT}",
                model.folds()
            ),
        });
    }
    Ok(())
}

fn branch_gain(
    cfg: &ScenarioConfig,
    kind: LinkKind,
    rx: Receiver,
    method: MetricMethod,
    diag: &mut Diagnostics,
) -> Result<GainDist> {
    let (model, kinds) = gain_model(cfg, kind, rx, exactness(method)?)?;
    unavailable_if_too_wide(&model, method)?;
    note_matches(diag, &kinds);
    diag.folds = diag.folds.max(model.folds());
    GainDist::from_model(&model)
}

/// Outage probability `Σ P_A[b] F_b(z_th)`.
pub fn op_metric(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    method: MetricMethod,
) -> Result<MetricResult> {
    secrecy.validate()?;
    if method == MetricMethod::Asymptotic {
        return super::asymptotic::op_asymptotic(cfg, secrecy);
    }
    let exact = exactness(method)?;
    let (bs, _) = branches(cfg)?;
    let mut diag = Diagnostics::default();
    let mut value = 0.0;
    for b in &bs {
        let m = if exact {
            Method::ExactFoxH
        } else {
            Method::SingleFApprox
        };
        let d = SinrDistribution::new(cfg, b.kind, Receiver::User, b.law.clone(), m)?;
        if let Some(model) = &d.model {
            unavailable_if_too_wide(model, method)?;
        }
        note_matches(&mut diag, &d.matches);
        diag.folds = diag.folds.max(d.folds());
        value += b.prob * d.cdf(secrecy.z_th)?;
    }
    Ok(MetricResult {
        metric: Metric::Op,
        value: value.clamp(0.0, 1.0),
        method,
        error_estimate: 1e-8,
        diagnostics: diag,
    })
}

/// `E[g(d^α)]` under a distance law, integrating in `ln d²`.
fn distance_average(
    law: &DistanceLaw,
    alpha: f64,
    nodes: &mut usize,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for s in &law.segments {
        let area = s.hi * s.hi - s.lo * s.lo;
        let r = integrate(
            |w| {
                let u = w.exp();
                g(u.powf(alpha / 2.0)) * u
            },
            2.0 * s.lo.ln(),
            2.0 * s.hi.ln(),
            OUTER,
        );
        *nodes += r.evaluations;
        total += s.weight * r.value / area;
    }
    total
}

/// `∫ g(y) dy` over a log-range, integrating in `ln y`.
fn log_integral(
    range: (f64, f64),
    settings: QuadSettings,
    nodes: &mut usize,
    mut g: impl FnMut(f64) -> f64,
) -> f64 {
    let r = integrate(
        |v| {
            let y = v.exp();
            g(y) * y
        },
        range.0,
        range.1,
        settings,
    );
    *nodes += r.evaluations;
    r.value
}

/// Distance-averaged SINR distribution of one receiver, `Z = a X d^(−α)`.
struct Marginal<'a> {
    gain: &'a GainDist,
    scale: f64,
    alpha: f64,
    law: &'a DistanceLaw,
}

impl Marginal<'_> {
    fn cdf(&self, z: f64, nodes: &mut usize) -> f64 {
        distance_average(self.law, self.alpha, nodes, |x| {
            self.gain.cdf(z * x / self.scale)
        })
    }

    fn pdf(&self, z: f64, nodes: &mut usize) -> f64 {
        distance_average(self.law, self.alpha, nodes, |x| {
            x / self.scale * self.gain.pdf(z * x / self.scale)
        })
    }

    fn log_support(&self) -> (f64, f64) {
        let (lo, hi) = self.gain.log_support();
        let dmin = self
            .law
            .segments
            .iter()
            .map(|s| s.lo)
            .fold(f64::INFINITY, f64::min);
        let dmax = self.law.segments.iter().map(|s| s.hi).fold(0.0, f64::max);
        (
            lo + self.scale.ln() - self.alpha * dmax.ln(),
            hi + self.scale.ln() - self.alpha * dmin.ln(),
        )
    }
}

/// Per-branch, per-lobe secrecy quantity; `main` selects the eavesdropper lobe.
struct Pair<'a> {
    branch: &'a Branch,
    user: &'a GainDist,
    eve: &'a GainDist,
    a_eve: f64,
    coupling: DistanceCoupling,
}

impl Pair<'_> {
    fn user_marginal(&self) -> Marginal<'_> {
        Marginal {
            gain: self.user,
            scale: self.branch.a_user,
            alpha: self.branch.alpha,
            law: &self.branch.law,
        }
    }

    fn eve_marginal(&self) -> Marginal<'_> {
        Marginal {
            gain: self.eve,
            scale: self.a_eve,
            alpha: self.branch.alpha,
            law: &self.branch.law,
        }
    }

    /// `Pr(Z_u < R_s Z_e + R_s − 1)`.
    fn sop(&self, r_s: f64, nodes: &mut usize) -> f64 {
        let (au, ae) = (self.branch.a_user, self.a_eve);
        match self.coupling {
            DistanceCoupling::Shared => {
                let k = r_s * ae / au;
                let b = (r_s - 1.0) / au;
                let range = self.eve.log_support();
                let inner = |x: f64, nodes: &mut usize| {
                    log_integral(range, INNER, nodes, |y| {
                        self.user.cdf(k * y + b * x) * self.eve.pdf(y)
                    })
                };
                if b == 0.0 {
                    inner(1.0, nodes)
                } else {
                    let mut n = 0;
                    let v = distance_average(&self.branch.law, self.branch.alpha, &mut n, |x| {
                        inner(x, &mut 0)
                    });
                    *nodes += n;
                    v
                }
            }
            DistanceCoupling::Independent => {
                let (mu, me) = (self.user_marginal(), self.eve_marginal());
                let mut n = 0;
                let v = log_integral(me.log_support(), OUTER, &mut n, |z| {
                    mu.cdf(r_s * z + r_s - 1.0, &mut 0) * me.pdf(z, &mut 0)
                });
                *nodes += n;
                v
            }
        }
    }

    /// `Pr(Z_u > ρ Z_e)`.
    fn pnsc(&self, rho: f64, nodes: &mut usize) -> f64 {
        let (au, ae) = (self.branch.a_user, self.a_eve);
        match self.coupling {
            DistanceCoupling::Shared => {
                let k = au / (rho * ae);
                log_integral(self.user.log_support(), INNER, nodes, |y| {
                    self.eve.cdf(k * y) * self.user.pdf(y)
                })
            }
            DistanceCoupling::Independent => {
                let (mu, me) = (self.user_marginal(), self.eve_marginal());
                let mut n = 0;
                let v = log_integral(mu.log_support(), OUTER, &mut n, |z| {
                    me.cdf(z / rho, &mut 0) * mu.pdf(z, &mut 0)
                });
                *nodes += n;
                v
            }
        }
    }

    /// `I1 + I2 − I3` in bits.
    fn asr(&self, nodes: &mut usize) -> f64 {
        let (au, ae) = (self.branch.a_user, self.a_eve);
        let lg = |v: f64| v.ln_1p() / LN_2;
        match self.coupling {
            DistanceCoupling::Shared => {
                let (ru, re) = (self.user.log_support(), self.eve.log_support());
                let at = |x: f64| {
                    let mut n = 0;
                    let i1 = log_integral(ru, INNER, &mut n, |y| {
                        lg(au * y / x) * self.user.pdf(y) * self.eve.cdf(au * y / ae)
                    });
                    let i2 = log_integral(re, INNER, &mut n, |y| {
                        lg(ae * y / x) * self.eve.pdf(y) * self.user.cdf(ae * y / au)
                    });
                    let i3 = log_integral(re, INNER, &mut n, |y| lg(ae * y / x) * self.eve.pdf(y));
                    i1 + i2 - i3
                };
                distance_average(&self.branch.law, self.branch.alpha, nodes, at)
            }
            DistanceCoupling::Independent => {
                let (mu, me) = (self.user_marginal(), self.eve_marginal());
                let mut n = 0;
                let i1 = log_integral(mu.log_support(), OUTER, &mut n, |z| {
                    lg(z) * mu.pdf(z, &mut 0) * me.cdf(z, &mut 0)
                });
                let i2 = log_integral(me.log_support(), OUTER, &mut n, |z| {
                    lg(z) * me.pdf(z, &mut 0) * mu.cdf(z, &mut 0)
                });
                let i3 = log_integral(me.log_support(), OUTER, &mut n, |z| {
                    lg(z) * me.pdf(z, &mut 0)
                });
                *nodes += n;
                i1 + i2 - i3
            }
        }
    }
}

/// P_B-weighted mixture of a per-branch, per-lobe secrecy quantity.
fn secrecy_mixture(
    cfg: &ScenarioConfig,
    method: MetricMethod,
    metric: Metric,
    mut f: impl FnMut(&Pair<'_>, &mut usize) -> f64,
) -> Result<MetricResult> {
    let (bs, pg) = branches(cfg)?;
    let mut diag = Diagnostics::default();
    let mut value = 0.0;
    for b in &bs {
        let user = branch_gain(cfg, b.kind, Receiver::User, method, &mut diag)?;
        let eve = branch_gain(
            cfg,
            b.kind,
            Receiver::Eve { main_lobe: true },
            method,
            &mut diag,
        )?;
        for (lobe, w) in [(0, pg), (1, 1.0 - pg)] {
            if w <= 0.0 {
                continue;
            }
            let pair = Pair {
                branch: b,
                user: &user,
                eve: &eve,
                a_eve: b.a_eve[lobe],
                coupling: cfg.distance_coupling,
            };
            value += b.prob * w * f(&pair, &mut diag.nodes);
        }
    }
    if !value.is_finite() {
        return Err(Error::NonConvergence {
            what: "metric quadrature",
            terms: diag.nodes,
        });
    }
    let value = match metric {
        Metric::Asr => value.max(0.0),
        _ => value.clamp(0.0, 1.0),
    };
    Ok(MetricResult {
        metric,
        value,
        method,
        error_estimate: 1e-6,
        diagnostics: diag,
    })
}

/// Secrecy outage probability `Pr(C_s < R_t)`.
pub fn sop_metric(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    method: MetricMethod,
) -> Result<MetricResult> {
    secrecy.validate()?;
    if method == MetricMethod::FoxH {
        return super::foxh::sop_fox_h(cfg, secrecy);
    }
    let r_s = secrecy.r_s;
    secrecy_mixture(cfg, method, Metric::Sop, |p, n| p.sop(r_s, n))
}

/// Probability of non-zero secrecy capacity `Pr(Z_u > ρ Z_e)`.
pub fn pnsc_metric(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    method: MetricMethod,
) -> Result<MetricResult> {
    secrecy.validate()?;
    if method == MetricMethod::FoxH {
        return super::foxh::pnsc_fox_h(cfg, secrecy);
    }
    let rho = secrecy.pnsc_ratio;
    secrecy_mixture(cfg, method, Metric::Pnsc, |p, n| p.pnsc(rho, n))
}

/// Average secrecy rate in bits/s/Hz.
pub fn asr_metric(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    method: MetricMethod,
) -> Result<MetricResult> {
    secrecy.validate()?;
    if method == MetricMethod::FoxH {
        return super::foxh::asr_fox_h(cfg, secrecy);
    }
    secrecy_mixture(cfg, method, Metric::Asr, |p, n| p.asr(n))
}

/// Dispatch on the metric. Monte-Carlo is not handled here.
pub fn evaluate(
    metric: Metric,
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    method: MetricMethod,
) -> Result<MetricResult> {
    if method == MetricMethod::Asymptotic && metric != Metric::Op {
        return Err(Error::MethodUnavailable {
            method: method.to_string(),
            reason: "the asymptotic form covers the outage probability only".into(),
        });
    }
    match metric {
        Metric::Op => op_metric(cfg, secrecy, method),
        Metric::Sop => sop_metric(cfg, secrecy, method),
        Metric::Pnsc => pnsc_metric(cfg, secrecy, method),
        Metric::Asr => asr_metric(cfg, secrecy, method),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockageModel;

    fn small() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::reference();
        cfg.k = 3;
        cfg.m = 1;
        cfg
    }

    #[test]
    fn op_with_certain_los_is_the_los_cdf() {
        let mut cfg = small();
        cfg.blockage = BlockageModel::new(1.0).unwrap();
        cfg.geometry.r1 = cfg.geometry.r2;
        let s = SecrecyParams::default();
        let op = op_metric(&cfg, &s, MetricMethod::Approx).unwrap();
        let law = DistanceLaw::annulus(cfg.geometry.r0, cfg.geometry.r2);
        let d = SinrDistribution::new(&cfg, LinkKind::LoS, Receiver::User, law, Method::ExactFoxH)
            .unwrap();
        assert!((op.value - d.cdf(1.0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn complement_identity_at_zero_rate() {
        for coupling in [DistanceCoupling::Shared, DistanceCoupling::Independent] {
            let mut cfg = small();
            cfg.distance_coupling = coupling;
            let s = SecrecyParams::default().with_r_t(0.0).unwrap();
            let sop = sop_metric(&cfg, &s, MetricMethod::Approx).unwrap().value;
            let pnsc = pnsc_metric(&cfg, &s, MetricMethod::Approx).unwrap().value;
            assert!(
                (sop + pnsc - 1.0).abs() < 1e-6,
                "{coupling:?}: {sop} + {pnsc}"
            );
        }
    }

    #[test]
    fn symmetric_links_give_even_odds() {
        let mut cfg = small();
        cfg.fading_eve = cfg.fading_user.clone();
        cfg.pattern_eve = crate::channel::AntennaPattern::new(1000.0, 0.1, 180.0).unwrap();
        cfg.pattern_user = cfg.pattern_eve;
        let s = SecrecyParams::default();
        let pnsc = pnsc_metric(&cfg, &s, MetricMethod::Approx).unwrap().value;
        assert!((pnsc - 0.5).abs() < 1e-6, "{pnsc}");
        let asr = asr_metric(&cfg, &s, MetricMethod::Approx).unwrap().value;
        assert!(asr >= 0.0);
    }

    #[test]
    fn asr_matches_survival_form() {
        // E[(log2(1+Z_u) − log2(1+Z_e))⁺] = (1/ln 2) ∫ F_e(t) S_u(t) / (1 + t) dt at fixed distance
        let cfg = small();
        let (bs, _) = branches(&cfg).unwrap();
        let b = DistanceLaw::annulus(50.0, 50.0 + 1e-9);
        let mut diag = Diagnostics::default();
        let user = branch_gain(
            &cfg,
            LinkKind::NLoS,
            Receiver::User,
            MetricMethod::Approx,
            &mut diag,
        )
        .unwrap();
        let eve = branch_gain(
            &cfg,
            LinkKind::NLoS,
            Receiver::User,
            MetricMethod::Approx,
            &mut diag,
        )
        .unwrap();
        let eve = match eve {
            GainDist::Closed(p) => {
                GainDist::Closed(crate::fading::FisherFParams::new(3.0, 3.0, p.gamma_bar).unwrap())
            }
            t => t,
        };
        let branch = Branch {
            law: b,
            ..bs[1].clone()
        };
        let pair = Pair {
            branch: &branch,
            user: &user,
            eve: &eve,
            a_eve: branch.a_eve[0],
            coupling: DistanceCoupling::Shared,
        };
        let x = 50f64.powf(branch.alpha);
        let asr = pair.asr(&mut 0);
        let (au, ae) = (branch.a_user, branch.a_eve[0]);
        let want = integrate(
            |v| {
                let t = v.exp();
                eve.cdf(t * x / ae) * user.sf(t * x / au) / (1.0 + t) * t
            },
            -40.0,
            40.0,
            QuadSettings::new(1e-12, 1e-10),
        )
        .value
            / LN_2;
        assert!((asr - want).abs() < 1e-5, "{asr} vs {want}");
    }

    #[test]
    fn asymptotic_is_op_only() {
        let cfg = small();
        let s = SecrecyParams::default();
        assert!(matches!(
            evaluate(Metric::Sop, &cfg, &s, MetricMethod::Asymptotic),
            Err(Error::MethodUnavailable { .. })
        ));
    }

    #[test]
    fn exact_unavailable_beyond_fold_limit() {
        let mut cfg = ScenarioConfig::reference();
        cfg.scenario = crate::channel::Scenario::Ris;
        let s = SecrecyParams::default();
        assert!(matches!(
            op_metric(&cfg, &s, MetricMethod::Exact),
            Err(Error::MethodUnavailable { .. })
        ));
    }
}
