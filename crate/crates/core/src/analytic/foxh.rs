//! Secrecy metrics as multivariate Mellin-Barnes integrals.
//!
//! These forms need single-term gains on both links and serve mainly as an
//! independent check of the quadrature path. Fold variables are `s` (index 0)
//! and `t` (index 1).

use std::f64::consts::LN_2;

use super::metrics::{branches, Branch};
use super::sinr::{analytic_contour, annulus_pieces, run_contour};
use super::terms::{exact_terms, GainTerm, Receiver};
use super::{Diagnostics, Metric, MetricMethod, MetricResult, SecrecyParams};
use crate::channel::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::DistanceCoupling;
use crate::specfun::{FoxHMultivarSpec, GammaFactorGroup, GammaTerm, Sign, FOLD_LIMIT};

/// `Γ(shift + Σ coeffs_i s_i)`.
fn lin(shift: f64, coeffs: &[f64]) -> GammaTerm {
    GammaTerm::new(shift, Sign::Plus, coeffs.to_vec())
}

fn join(mut a: GammaFactorGroup, b: GammaFactorGroup) -> GammaFactorGroup {
    a.numerator.extend(b.numerator);
    a.denominator.extend(b.denominator);
    a
}

/// `E[d^(α w)]` ratio `Γ(w + 2/α) / Γ(w + 2/α + 1)` for `w = κ·s`.
fn distance_ratio(alpha: f64, kappa: &[f64]) -> GammaFactorGroup {
    let two = 2.0 / alpha;
    GammaFactorGroup::new()
        .num(lin(two, kappa))
        .den(lin(1.0 + two, kappa))
}

struct Links {
    user: GainTerm,
    eve: GainTerm,
}

fn single_terms(cfg: &ScenarioConfig, b: &Branch) -> Result<Links> {
    let u = exact_terms(cfg, b.kind, Receiver::User);
    let e = exact_terms(cfg, b.kind, Receiver::Eve { main_lobe: true });
    let folds = 2 * u.len().max(e.len()) + 1;
    if u.len() != 1 || e.len() != 1 || folds > FOLD_LIMIT {
        return Err(Error::MethodUnavailable {
            method: MetricMethod::FoxH.to_string(),
            reason: format!(
                "needs one gain term per link, got {} and {}",
                u.len(),
                e.len()
            ),
        });
    }
    Ok(Links {
        user: u[0],
        eve: e[0],
    })
}

struct Acc {
    value: f64,
    diag: Diagnostics,
}

impl Acc {
    fn add(&mut self, coef: f64, spec: FoxHMultivarSpec, anchors: Vec<f64>) -> Result<()> {
        let contour = analytic_contour().with_anchors(anchors);
        let r = run_contour(&spec, &contour)?;
        self.diag.folds = self.diag.folds.max(spec.folds());
        self.diag.nodes += r.nodes_used;
        self.value += coef * r.value;
        Ok(())
    }
}

fn mixture(
    cfg: &ScenarioConfig,
    metric: Metric,
    mut f: impl FnMut(&Branch, &Links, f64, &mut Acc) -> Result<()>,
) -> Result<MetricResult> {
    let (bs, pg) = branches(cfg)?;
    let mut total = 0.0;
    let mut diag = Diagnostics::default();
    for b in &bs {
        let links = single_terms(cfg, b)?;
        for (lobe, w) in [(0, pg), (1, 1.0 - pg)] {
            if w <= 0.0 {
                continue;
            }
            let mut acc = Acc {
                value: 0.0,
                diag: Diagnostics::default(),
            };
            f(b, &links, b.a_eve[lobe], &mut acc)?;
            total += b.prob * w * acc.value;
            diag.merge(acc.diag);
        }
    }
    let value = match metric {
        Metric::Asr => total.max(0.0),
        _ => total.clamp(0.0, 1.0),
    };
    Ok(MetricResult {
        metric,
        value,
        method: MetricMethod::FoxH,
        error_estimate: 1e-7,
        diagnostics: diag,
    })
}

fn norm(l: &Links) -> f64 {
    (-l.user.ln_norm() - l.eve.ln_norm()).exp()
}

/// `Pr(Z_u ≤ ρ Z_e)` for one branch and lobe.
fn below(
    b: &Branch,
    l: &Links,
    a_eve: f64,
    rho: f64,
    coupling: DistanceCoupling,
    acc: &mut Acc,
) -> Result<()> {
    let (u, e) = (&l.user, &l.eve);
    let base = GammaFactorGroup::new()
        .num(GammaTerm::plus(0.0))
        .den(GammaTerm::plus(1.0));
    let fold = join(
        join(base, u.mellin_factors(Sign::Plus)),
        e.mellin_factors(Sign::Minus),
    );
    let x = u.rate() / e.rate() * rho * a_eve / b.a_user;
    let c = 0.5 * u.lower_bound().min(e.moment_bound()).min(1.0);
    match coupling {
        DistanceCoupling::Shared => {
            let spec = FoxHMultivarSpec::new(vec![fold], GammaFactorGroup::new(), vec![x]);
            acc.add(norm(l), spec, vec![c])?;
        }
        DistanceCoupling::Independent => {
            let two = 2.0 / b.alpha;
            let fold = join(
                join(fold, distance_ratio(b.alpha, &[1.0])),
                distance_ratio(b.alpha, &[-1.0]),
            );
            let c = c.min(0.5 * two);
            for (cu, ru) in annulus_pieces(&b.law, b.alpha) {
                for (ce, re) in annulus_pieces(&b.law, b.alpha) {
                    let xr = x * (ru / re).powf(b.alpha);
                    let spec = FoxHMultivarSpec::new(
                        vec![fold.clone()],
                        GammaFactorGroup::new(),
                        vec![xr],
                    );
                    acc.add(norm(l) * cu * ce, spec, vec![c])?;
                }
            }
        }
    }
    Ok(())
}

/// Probability of non-zero secrecy capacity by contour integration.
pub fn pnsc_fox_h(cfg: &ScenarioConfig, secrecy: &SecrecyParams) -> Result<MetricResult> {
    secrecy.validate()?;
    let rho = secrecy.pnsc_ratio;
    let coupling = cfg.distance_coupling;
    mixture(cfg, Metric::Pnsc, |b, l, ae, acc| {
        let mut inner = Acc {
            value: 0.0,
            diag: Diagnostics::default(),
        };
        below(b, l, ae, rho, coupling, &mut inner)?;
        acc.value += 1.0 - inner.value;
        acc.diag.merge(inner.diag);
        Ok(())
    })
}

/// Secrecy outage probability by contour integration. At zero target rate
/// the offset `R_s − 1` is replaced by the regulariser `e`.
pub fn sop_fox_h(cfg: &ScenarioConfig, secrecy: &SecrecyParams) -> Result<MetricResult> {
    secrecy.validate()?;
    let r_s = secrecy.r_s;
    let beta = (r_s - 1.0).max(secrecy.e_reg);
    let coupling = cfg.distance_coupling;
    mixture(cfg, Metric::Sop, |b, l, ae, acc| {
        let (u, e) = (&l.user, &l.eve);
        let two = 2.0 / b.alpha;
        // Pr(Z_u > R_s Z_e + β): survival kernel in s, binomial split in t
        let fold_s = join(
            GammaFactorGroup::new().den(GammaTerm::plus(1.0)),
            u.mellin_factors(Sign::Minus),
        );
        let fold_t = join(
            GammaFactorGroup::new().num(GammaTerm::plus(0.0)),
            e.mellin_factors(Sign::Plus),
        );
        let c_t = 0.25 * e.lower_bound().min(u.moment_bound()).min(two);
        let mut tail = Acc {
            value: 0.0,
            diag: Diagnostics::default(),
        };
        match coupling {
            DistanceCoupling::Shared => {
                let k = r_s * ae / b.a_user;
                let bb = beta / b.a_user;
                let outer = join(
                    GammaFactorGroup::new().num(lin(0.0, &[1.0, -1.0])),
                    distance_ratio(b.alpha, &[-1.0, 1.0]),
                );
                let c_s = c_t + 0.5 * two.min(u.moment_bound() - c_t);
                for (coef, r) in annulus_pieces(&b.law, b.alpha) {
                    let ra = r.powf(b.alpha);
                    let spec = FoxHMultivarSpec::new(
                        vec![fold_s.clone(), fold_t.clone()],
                        outer.clone(),
                        vec![1.0 / (u.rate() * bb * ra), e.rate() * bb * ra / k],
                    );
                    tail.add(coef * norm(l), spec, vec![c_s, c_t])?;
                }
            }
            DistanceCoupling::Independent => {
                let fold_s = join(fold_s, distance_ratio(b.alpha, &[-1.0]));
                let fold_t = join(fold_t, distance_ratio(b.alpha, &[1.0]));
                let outer = GammaFactorGroup::new().num(lin(0.0, &[1.0, -1.0]));
                let c_t = c_t.min(0.25 * two);
                let c_s = c_t + 0.5 * (two.min(u.moment_bound()) - c_t);
                for (cu, ru) in annulus_pieces(&b.law, b.alpha) {
                    for (ce, re) in annulus_pieces(&b.law, b.alpha) {
                        let spec = FoxHMultivarSpec::new(
                            vec![fold_s.clone(), fold_t.clone()],
                            outer.clone(),
                            vec![
                                b.a_user / (u.rate() * ru.powf(b.alpha) * beta),
                                e.rate() * re.powf(b.alpha) * beta / (r_s * ae),
                            ],
                        );
                        tail.add(cu * ce * norm(l), spec, vec![c_s, c_t])?;
                    }
                }
            }
        }
        acc.value += 1.0 - tail.value;
        acc.diag.merge(tail.diag);
        Ok(())
    })
}

/// `E[ln(1 + Z_a) 1{Z_b ≤ Z_a}]` for the pair `(a, b)`; `J3` when `b` is absent.
#[allow(clippy::too_many_arguments)]
fn log_term(
    b: &Branch,
    own: &GainTerm,
    a_own: f64,
    other: Option<(&GainTerm, f64)>,
    coupling: DistanceCoupling,
    acc: &mut Acc,
    sign: f64,
) -> Result<()> {
    let two = 2.0 / b.alpha;
    // ln(1 + w) = (1/2πi) ∫ Γ(s)² Γ(1−s) / Γ(1+s) w^s ds, 0 < Re s < 1
    let kernel = GammaFactorGroup::new()
        .num(GammaTerm::plus(0.0))
        .num(GammaTerm::plus(0.0))
        .num(GammaTerm::minus(1.0))
        .den(GammaTerm::plus(1.0));
    let Some((oth, a_oth)) = other else {
        let fold = join(
            join(kernel, own.mellin_factors(Sign::Minus)),
            distance_ratio(b.alpha, &[-1.0]),
        );
        let c = 0.5 * own.moment_bound().min(1.0).min(two);
        let n = (-own.ln_norm()).exp();
        for (coef, r) in annulus_pieces(&b.law, b.alpha) {
            let x = a_own / (own.rate() * r.powf(b.alpha));
            let spec = FoxHMultivarSpec::new(vec![fold.clone()], GammaFactorGroup::new(), vec![x]);
            acc.add(sign * coef * n, spec, vec![c])?;
        }
        return Ok(());
    };
    // F_other(a_own X / a_oth) kernel in t
    let fold_t = join(
        GammaFactorGroup::new()
            .num(GammaTerm::plus(0.0))
            .den(GammaTerm::plus(1.0)),
        oth.mellin_factors(Sign::Plus),
    );
    let n = (-own.ln_norm() - oth.ln_norm()).exp();
    let c_s = 0.25 * own.moment_bound().min(1.0).min(two);
    let c_t = 0.25 * oth.lower_bound().min(own.moment_bound()).min(two);
    let moment = own.mellin_outer(&[1.0, 1.0], Sign::Minus);
    match coupling {
        DistanceCoupling::Shared => {
            let fold_s = join(kernel, distance_ratio(b.alpha, &[-1.0]));
            for (coef, r) in annulus_pieces(&b.law, b.alpha) {
                let spec = FoxHMultivarSpec::new(
                    vec![fold_s.clone(), fold_t.clone()],
                    moment.clone(),
                    vec![
                        a_own / (own.rate() * r.powf(b.alpha)),
                        oth.rate() * a_own / (a_oth * own.rate()),
                    ],
                );
                acc.add(sign * coef * n, spec, vec![c_s, c_t])?;
            }
        }
        DistanceCoupling::Independent => {
            let fold_t = join(fold_t, distance_ratio(b.alpha, &[1.0]));
            let outer = join(moment, distance_ratio(b.alpha, &[-1.0, -1.0]));
            for (co, ro) in annulus_pieces(&b.law, b.alpha) {
                for (ct, rt) in annulus_pieces(&b.law, b.alpha) {
                    let (po, pt) = (ro.powf(b.alpha), rt.powf(b.alpha));
                    let spec = FoxHMultivarSpec::new(
                        vec![kernel.clone(), fold_t.clone()],
                        outer.clone(),
                        vec![
                            a_own / (own.rate() * po),
                            oth.rate() * a_own * pt / (a_oth * own.rate() * po),
                        ],
                    );
                    acc.add(sign * co * ct * n, spec, vec![c_s, c_t])?;
                }
            }
        }
    }
    Ok(())
}

/// Average secrecy rate by contour integration of `I1 + I2 − I3`.
pub fn asr_fox_h(cfg: &ScenarioConfig, secrecy: &SecrecyParams) -> Result<MetricResult> {
    secrecy.validate()?;
    let coupling = cfg.distance_coupling;
    let mut res = mixture(cfg, Metric::Asr, |b, l, ae, acc| {
        log_term(b, &l.user, b.a_user, Some((&l.eve, ae)), coupling, acc, 1.0)?;
        log_term(b, &l.eve, ae, Some((&l.user, b.a_user)), coupling, acc, 1.0)?;
        log_term(b, &l.eve, ae, None, coupling, acc, -1.0)
    })?;
    res.value /= LN_2;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{asr_metric, pnsc_metric, sop_metric};

    fn qm1() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::reference();
        cfg.k = 3;
        cfg.m = 1;
        cfg
    }

    #[test]
    fn pnsc_agrees_with_quadrature() {
        for coupling in [DistanceCoupling::Shared, DistanceCoupling::Independent] {
            let mut cfg = qm1();
            cfg.distance_coupling = coupling;
            let s = SecrecyParams::default();
            let a = pnsc_fox_h(&cfg, &s).unwrap().value;
            let q = pnsc_metric(&cfg, &s, MetricMethod::Exact).unwrap().value;
            assert!((a - q).abs() < 1e-5, "{coupling:?}: {a} vs {q}");
        }
    }

    #[test]
    fn sop_agrees_with_quadrature() {
        for coupling in [DistanceCoupling::Shared, DistanceCoupling::Independent] {
            let mut cfg = qm1();
            cfg.distance_coupling = coupling;
            let s = SecrecyParams::default();
            let a = sop_fox_h(&cfg, &s).unwrap().value;
            let q = sop_metric(&cfg, &s, MetricMethod::Exact).unwrap().value;
            assert!((a - q).abs() < 1e-5, "{coupling:?}: {a} vs {q}");
        }
    }

    #[test]
    fn asr_agrees_with_quadrature() {
        for coupling in [DistanceCoupling::Shared, DistanceCoupling::Independent] {
            let mut cfg = qm1();
            cfg.distance_coupling = coupling;
            let s = SecrecyParams::default();
            let a = asr_fox_h(&cfg, &s).unwrap().value;
            let q = asr_metric(&cfg, &s, MetricMethod::Exact).unwrap().value;
            assert!(
                (a - q).abs() < 1e-4 * q.max(1.0),
                "{coupling:?}: {a} vs {q}"
            );
        }
    }

    #[test]
    fn gated_beyond_one_term() {
        let cfg = ScenarioConfig::reference();
        assert!(matches!(
            sop_fox_h(&cfg, &SecrecyParams::default()),
            Err(Error::MethodUnavailable { .. })
        ));
    }
}
