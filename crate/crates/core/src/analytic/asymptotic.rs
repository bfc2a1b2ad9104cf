//! High-SNR power law of the outage probability.
//!
//! With a surrogate `F(m, m_s, γ̄)` gain the CDF behaves as
//! `(c y)^m / (m B(m, m_s))` near zero, `c = m / ((m_s − 1) γ̄)`. Averaging
//! over `y = z d^α / a` gives the branch outage as a pure power of `z / a`.

use super::metrics::branches;
use super::terms::{gain_model, GainModel, Receiver};
use super::{Diagnostics, Metric, MetricMethod, MetricResult, SecrecyParams};
use crate::channel::ScenarioConfig;
use crate::error::Result;
use crate::fading::FisherFParams;
use crate::specfun::ln_beta;

/// `(ln C, d)` with `F(y) ≈ C y^d` as `y → 0`.
fn small_gain_law(model: &GainModel) -> (f64, f64) {
    let single = |p: &FisherFParams| (p.m * p.rate().ln() - p.m.ln() - ln_beta(p.m, p.m_s), p.m);
    match model {
        GainModel::Surrogate(p) => single(p),
        GainModel::SurrogatePair(p1, p2) => {
            // density K_i y^(m_i − 1), K_i = c_i^m_i / B(m_i, m_s,i), convolved
            let ln_k = |p: &FisherFParams| p.m * p.rate().ln() - ln_beta(p.m, p.m_s);
            let d = p1.m + p2.m;
            (ln_k(p1) + ln_k(p2) + ln_beta(p1.m, p2.m) - d.ln(), d)
        }
        GainModel::Exact(_) => unreachable!("asymptotic law uses surrogates"),
    }
}

/// Asymptotic outage probability.
pub fn op_asymptotic(cfg: &ScenarioConfig, secrecy: &SecrecyParams) -> Result<MetricResult> {
    secrecy.validate()?;
    let (bs, _) = branches(cfg)?;
    let mut value = 0.0;
    let mut diag = Diagnostics::default();
    for b in &bs {
        let (model, _) = gain_model(cfg, b.kind, Receiver::User, false)?;
        let (ln_c, d) = small_gain_law(&model);
        let scale = (secrecy.z_th / b.a_user).ln() * d;
        value += b.prob * (ln_c + scale).exp() * b.law.moment(b.alpha * d);
        diag.folds = diag.folds.max(model.folds());
    }
    if value > 1.0 {
        diag.flag("outside_high_snr_regime");
    }
    Ok(MetricResult {
        metric: Metric::Op,
        value,
        method: MetricMethod::Asymptotic,
        error_estimate: 0.0,
        diagnostics: diag,
    })
}

/// High-SNR slope of the outage probability: the smallest branch exponent.
pub fn diversity_order(cfg: &ScenarioConfig) -> Result<f64> {
    let (bs, _) = branches(cfg)?;
    let mut order = f64::INFINITY;
    for b in &bs {
        let (model, _) = gain_model(cfg, b.kind, Receiver::User, false)?;
        order = order.min(small_gain_law(&model).1);
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::op_metric;
    use crate::channel::FadingTable;
    use crate::fading::approx_sum_f;

    fn with_user_mean(mut cfg: ScenarioConfig, g: f64) -> ScenarioConfig {
        cfg.fading_user = FadingTable::iid(FisherFParams::new(5.0, 5.0, g).unwrap());
        cfg
    }

    #[test]
    fn pure_power_law() {
        let cfg = ScenarioConfig::reference();
        let s = SecrecyParams::default();
        let a = op_asymptotic(&with_user_mean(cfg.clone(), 1.0), &s)
            .unwrap()
            .value;
        let b = op_asymptotic(&with_user_mean(cfg.clone(), 2.0), &s)
            .unwrap()
            .value;
        let d = diversity_order(&cfg).unwrap();
        assert!((b / a - 2f64.powf(-d)).abs() < 1e-6 * 2f64.powf(-d));
    }

    #[test]
    fn single_term_order_is_m() {
        let mut cfg = ScenarioConfig::reference();
        cfg.k = 3;
        cfg.m = 1;
        assert_eq!(diversity_order(&cfg).unwrap(), 5.0);
        let cfg = ScenarioConfig::reference();
        let p = FisherFParams::new(5.0, 5.0, 0.1).unwrap();
        assert_eq!(
            diversity_order(&cfg).unwrap(),
            approx_sum_f(&[p, p]).unwrap().m
        );
    }

    #[test]
    fn approaches_exact_outage() {
        let mut cfg = ScenarioConfig::reference();
        cfg.k = 3;
        cfg.m = 1;
        let s = SecrecyParams::default();
        let cfg = with_user_mean(cfg, 1e6);
        let a = op_asymptotic(&cfg, &s).unwrap().value;
        let e = op_metric(&cfg, &s, MetricMethod::Exact).unwrap().value;
        assert!((a / e - 1.0).abs() < 0.05, "{a} vs {e}");
    }

    #[test]
    fn low_snr_power_law_is_flagged() {
        let s = SecrecyParams::default();
        let low = op_asymptotic(&ScenarioConfig::reference(), &s).unwrap();
        assert!(low.value > 1.0);
        assert_eq!(low.diagnostics.flags, ["outside_high_snr_regime"]);
        let high = op_asymptotic(&with_user_mean(ScenarioConfig::reference(), 1e6), &s);
        assert!(high.unwrap().diagnostics.flags.is_empty());
    }
}
