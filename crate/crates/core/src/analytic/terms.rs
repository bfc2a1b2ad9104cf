//! Gain models and their Mellin-Barnes building blocks.
//!
//! Every gain term `X` has a Mellin moment of the form
//! `E[X^{-s}] = rate^s Π Γ(left_i + s) Π Γ(right_j − s) / norm`,
//! which is all the contour integrals need.

use crate::channel::{LinkKind, ScenarioConfig};
use crate::error::Result;
use crate::fading::{
    approx_product_pair_detailed, approx_sum_f_detailed, f_moment, match_moments, FisherFParams,
    MatchKind, Surrogate,
};
use crate::specfun::{ln_gamma, GammaFactorGroup, GammaTerm, Sign};

/// A single independent summand of an effective gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GainTerm {
    Single(FisherFParams),
    Product(FisherFParams, FisherFParams),
}

impl GainTerm {
    fn parts(&self) -> Vec<FisherFParams> {
        match *self {
            GainTerm::Single(p) => vec![p],
            GainTerm::Product(a, b) => vec![a, b],
        }
    }

    pub fn rate(&self) -> f64 {
        self.parts().iter().map(|p| p.rate()).product()
    }

    /// `ln norm` so that `E[X^{-s}] = rate^s Π Γ(m_s + s) Γ(m − s) / norm`.
    pub fn ln_norm(&self) -> f64 {
        self.parts()
            .iter()
            .map(|p| ln_gamma(p.m) + ln_gamma(p.m_s))
            .sum()
    }

    /// Shifts of `Γ(shift + s)` in `E[X^{-s}]`.
    pub fn left(&self) -> Vec<f64> {
        self.parts().iter().map(|p| p.m_s).collect()
    }

    /// Shifts of `Γ(shift − s)` in `E[X^{-s}]`.
    pub fn right(&self) -> Vec<f64> {
        self.parts().iter().map(|p| p.m).collect()
    }

    /// Factors of `E[X^{-σ s}]` in one fold variable, `σ = ±1`.
    pub fn mellin_factors(&self, sign: Sign) -> GammaFactorGroup {
        let mut g = GammaFactorGroup::new();
        for l in self.left() {
            g = g.num(GammaTerm::new(l, sign, vec![1.0]));
        }
        let flip = match sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        for r in self.right() {
            g = g.num(GammaTerm::new(r, flip, vec![1.0]));
        }
        g
    }

    /// Factors of `E[X^{-σ·(κ·s)}]` as outer terms over `n` variables.
    pub fn mellin_outer(&self, coeffs: &[f64], sign: Sign) -> GammaFactorGroup {
        let flip = match sign {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
        let mut g = GammaFactorGroup::new();
        for l in self.left() {
            g = g.num(GammaTerm::new(l, sign, coeffs.to_vec()));
        }
        for r in self.right() {
            g = g.num(GammaTerm::new(r, flip, coeffs.to_vec()));
        }
        g
    }

    /// Largest `k` with a finite `E[X^k]`.
    pub fn moment_bound(&self) -> f64 {
        self.parts()
            .iter()
            .map(|p| p.m_s)
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest exponent rate `m` of the lower tail.
    pub fn lower_bound(&self) -> f64 {
        self.parts()
            .iter()
            .map(|p| p.m)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.parts().iter().map(|p| p.gamma_bar).product()
    }

    fn raw_moments(&self) -> Result<(f64, f64, f64)> {
        let mut out = (1.0, 1.0, 1.0);
        for p in self.parts() {
            out.0 *= f_moment(1, &p)?;
            out.1 *= f_moment(2, &p).map_err(|_| {
                crate::Error::MomentMatchInfeasible(format!(
                    "component with m_s = {} has no variance",
                    p.m_s
                ))
            })?;
            out.2 *= f_moment(3, &p).unwrap_or(f64::INFINITY);
        }
        Ok(out)
    }
}

/// Distribution of an effective (distance-free) gain.
#[derive(Clone, Debug, PartialEq)]
pub enum GainModel {
    /// Exact sum of independent terms.
    Exact(Vec<GainTerm>),
    /// One moment-matched F variable.
    Surrogate(FisherFParams),
    /// Sum of two independent surrogates (direct path plus RIS path).
    SurrogatePair(FisherFParams, FisherFParams),
}

impl GainModel {
    /// Number of contour folds the model needs.
    pub fn folds(&self) -> usize {
        match self {
            GainModel::Exact(t) => t.len(),
            GainModel::Surrogate(_) => 1,
            GainModel::SurrogatePair(..) => 2,
        }
    }

    pub fn terms(&self) -> Vec<GainTerm> {
        match self {
            GainModel::Exact(t) => t.clone(),
            GainModel::Surrogate(p) => vec![GainTerm::Single(*p)],
            GainModel::SurrogatePair(a, b) => vec![GainTerm::Single(*a), GainTerm::Single(*b)],
        }
    }

    pub fn mean(&self) -> f64 {
        self.terms().iter().map(|t| t.mean()).sum()
    }

    /// Exponent of the lower tail, `F(y) ~ y^d` as `y → 0`.
    pub fn lower_tail_exponent(&self) -> f64 {
        self.terms().iter().map(|t| t.lower_bound()).sum()
    }
}

/// Surrogate for a sum of terms; products are matched from their exact moments.
pub fn surrogate_for_terms(terms: &[GainTerm]) -> Result<Surrogate> {
    if terms.iter().all(|t| matches!(t, GainTerm::Single(_))) {
        let singles: Vec<FisherFParams> = terms
            .iter()
            .map(|t| match t {
                GainTerm::Single(p) => *p,
                GainTerm::Product(..) => unreachable!(),
            })
            .collect();
        return approx_sum_f_detailed(&singles);
    }
    if let [GainTerm::Product(a, b)] = terms {
        return approx_product_pair_detailed(a, b);
    }
    let (mut k1, mut k2, mut k3) = (0.0, 0.0, 0.0);
    for t in terms {
        let (m1, m2, m3) = t.raw_moments()?;
        k1 += m1;
        k2 += m2 - m1 * m1;
        k3 += m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
    }
    match_moments(k1, k2 + k1 * k1, k3 + 3.0 * k2 * k1 + k1 * k1 * k1)
}

/// Which receiver a distribution describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Receiver {
    User,
    /// Eavesdropper in the main lobe (`true`) or a side lobe (`false`).
    Eve {
        main_lobe: bool,
    },
}

impl Receiver {
    pub fn antenna_gain(&self, cfg: &ScenarioConfig) -> f64 {
        match self {
            Receiver::User => cfg.pattern_user.g_main,
            Receiver::Eve { main_lobe: true } => cfg.pattern_eve.g_main,
            Receiver::Eve { main_lobe: false } => cfg.pattern_eve.g_side,
        }
    }

    pub fn table<'a>(&self, cfg: &'a ScenarioConfig) -> &'a crate::channel::FadingTable {
        match self {
            Receiver::User => &cfg.fading_user,
            Receiver::Eve { .. } => &cfg.fading_eve,
        }
    }
}

/// Exact gain terms of a link.
pub fn exact_terms(cfg: &ScenarioConfig, kind: LinkKind, rx: Receiver) -> Vec<GainTerm> {
    let table = rx.table(cfg);
    let direct = || cfg.direct_elements(table).into_iter().map(GainTerm::Single);
    let ris = || {
        cfg.ris_elements(table)
            .into_iter()
            .map(|(a, b)| GainTerm::Product(a, b))
    };
    match kind {
        LinkKind::LoS | LinkKind::NLoS => direct().collect(),
        LinkKind::RisReflected => ris().collect(),
        LinkKind::RisWithDirect => direct().chain(ris()).collect(),
    }
}

/// Gain model of a link; `exact = false` selects the surrogate path.
pub fn gain_model(
    cfg: &ScenarioConfig,
    kind: LinkKind,
    rx: Receiver,
    exact: bool,
) -> Result<(GainModel, Vec<MatchKind>)> {
    let terms = exact_terms(cfg, kind, rx);
    if exact {
        return Ok((GainModel::Exact(terms), vec![]));
    }
    match kind {
        LinkKind::RisWithDirect => {
            let n = cfg.direct_terms();
            let a = surrogate_for_terms(&terms[..n])?;
            let b = surrogate_for_terms(&terms[n..])?;
            Ok((
                GainModel::SurrogatePair(a.params, b.params),
                vec![a.kind, b.kind],
            ))
        }
        _ => {
            let s = surrogate_for_terms(&terms)?;
            Ok((GainModel::Surrogate(s.params), vec![s.kind]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_term_moments() {
        let a = FisherFParams::new(5.0, 5.0, 0.1).unwrap();
        let b = FisherFParams::new(4.0, 6.0, 2.0).unwrap();
        let t = GainTerm::Product(a, b);
        assert!((t.mean() - 0.2).abs() < 1e-15);
        assert!((t.rate() - a.rate() * b.rate()).abs() < 1e-12);
        assert_eq!(t.moment_bound(), 5.0);
        assert_eq!(t.lower_bound(), 4.0);
    }

    #[test]
    fn composed_surrogate_keeps_mean() {
        let a = FisherFParams::new(5.0, 5.0, 0.1).unwrap();
        let b = FisherFParams::new(5.0, 5.0, 1.0).unwrap();
        let terms = vec![GainTerm::Product(a, b); 16];
        let s = surrogate_for_terms(&terms).unwrap();
        assert!((s.params.gamma_bar - 1.6).abs() < 1e-12);
    }

    #[test]
    fn receivers_pick_tables_and_gains() {
        let cfg = ScenarioConfig::reference();
        assert_eq!(Receiver::User.antenna_gain(&cfg), 1000.0);
        assert_eq!(Receiver::Eve { main_lobe: false }.antenna_gain(&cfg), 0.1);
        assert_eq!(exact_terms(&cfg, LinkKind::NLoS, Receiver::User).len(), 2);
        assert_eq!(
            exact_terms(&cfg, LinkKind::RisReflected, Receiver::User).len(),
            16
        );
        assert_eq!(
            exact_terms(&cfg, LinkKind::RisWithDirect, Receiver::User).len(),
            18
        );
    }
}
