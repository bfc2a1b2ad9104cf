//! Antenna pattern, effective channel gains and SINR models.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fading::{FSampler, FisherFParams};
use crate::geometry::{
    AnnulusGeometry, BlockageCoupling, BlockageModel, DistanceCoupling, PathLossParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    LoS,
    NLoS,
    RisReflected,
    RisWithDirect,
}

/// Which path serves users without a LoS link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Scenario 1: blocked users are served over the NLoS direct link.
    #[default]
    Direct,
    /// Scenario 2: blocked users are served through the RIS.
    Ris,
    /// Blocked users combine the direct link and the RIS path.
    RisWithDirect,
}

impl Scenario {
    pub fn non_los_kind(self) -> LinkKind {
        match self {
            Scenario::Direct => LinkKind::NLoS,
            Scenario::Ris => LinkKind::RisReflected,
            Scenario::RisWithDirect => LinkKind::RisWithDirect,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub g_main: f64,
    pub g_side: f64,
    pub theta_c: f64,
}

impl AntennaPattern {
    pub fn new(g_main: f64, g_side: f64, theta_c: f64) -> Result<Self> {
        let p = Self {
            g_main,
            g_side,
            theta_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_side > 0.0 && self.g_main >= self.g_side && self.g_main.is_finite()) {
            return Err(domain("antenna gain", "need g_main >= g_side > 0"));
        }
        if !(self.theta_c > 0.0 && self.theta_c <= 180.0) {
            return Err(domain(
                "theta_c",
                format!("{} outside (0, 180]", self.theta_c),
            ));
        }
        Ok(())
    }

    /// Probability that a uniformly oriented receiver sits in the main lobe.
    pub fn main_lobe_probability(&self) -> f64 {
        self.theta_c / 180.0
    }
}

/// Sectored antenna gain at angle `theta` (degrees).
pub fn antenna_gain(theta: f64, pattern: &AntennaPattern) -> f64 {
    if theta.abs() <= pattern.theta_c {
        pattern.g_main
    } else {
        pattern.g_side
    }
}

/// Per-element fading parameters. Element `i` uses entry `i mod len`, so a
/// single entry describes i.i.d. elements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FadingTable {
    pub params: Vec<FisherFParams>,
}

impl FadingTable {
    pub fn iid(p: FisherFParams) -> Self {
        Self { params: vec![p] }
    }

    pub fn get(&self, i: usize) -> FisherFParams {
        self.params[i % self.params.len()]
    }

    /// The first `n` element parameters.
    pub fn take(&self, n: usize) -> Vec<FisherFParams> {
        (0..n).map(|i| self.get(i)).collect()
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.params.is_empty() {
            return Err(domain(name, "fading table is empty"));
        }
        for p in &self.params {
            p.validate().map_err(|e| domain(name, e.to_string()))?;
        }
        Ok(())
    }

    /// Same shapes with every mean power multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            params: self.params.iter().map(|p| p.scaled(k)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub beta_max: f64,
    pub sigma_n_sq: f64,
    pub p_un: f64,
    pub path_loss: PathLossParams,
    pub geometry: AnnulusGeometry,
    pub blockage: BlockageModel,
    pub pattern_user: AntennaPattern,
    pub pattern_eve: AntennaPattern,
    /// Direct BS-user elements (index `q·M + n`) and RIS-user elements (index `q·L + n`).
    pub fading_user: FadingTable,
    pub fading_eve: FadingTable,
    /// BS-RIS elements, indexed by RIS element.
    pub fading_bs_ris: FadingTable,
    pub scenario: Scenario,
    pub blockage_coupling: BlockageCoupling,
    pub distance_coupling: DistanceCoupling,
}

impl ScenarioConfig {
    /// Evaluation setting of the reference system: K = 4, M = 2, L = 16,
    /// G = 30 dB, g = −10 dB, user fading (5, 5, −10 dB), eavesdropper
    /// fading (3, 3, −10 dB), r0 = 1, r1 = 300, r2 = 400, d_uR = 30, B1 = 0.3.
    pub fn reference() -> Self {
        let user = FisherFParams::new(5.0, 5.0, 0.1).expect("valid");
        let eve = FisherFParams::new(3.0, 3.0, 0.1).expect("valid");
        let bs_ris = FisherFParams::new(5.0, 5.0, 1.0).expect("valid");
        let pattern = AntennaPattern::new(1000.0, 0.1, 30.0).expect("valid");
        Self {
            k: 4,
            m: 2,
            l: 16,
            beta_max: 1.0,
            sigma_n_sq: 1.0,
            p_un: 100.0,
            path_loss: PathLossParams::new(2.0, 3.0, 1.0, 1.0).expect("valid"),
            geometry: AnnulusGeometry::new(1.0, 300.0, 400.0, 30.0, 1e-4).expect("valid"),
            blockage: BlockageModel::new(0.3).expect("valid"),
            pattern_user: pattern,
            pattern_eve: pattern,
            fading_user: FadingTable::iid(user),
            fading_eve: FadingTable::iid(eve),
            fading_bs_ris: FadingTable::iid(bs_ris),
            scenario: Scenario::Direct,
            blockage_coupling: BlockageCoupling::DistanceGated,
            distance_coupling: DistanceCoupling::Shared,
        }
    }

    /// Effective antenna gain `Q = K − M − 1` (zero if `K < M + 1`).
    pub fn q_eff(&self) -> usize {
        self.k.saturating_sub(self.m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < self.m + 2 {
            return Err(domain(
                "K",
                format!("need K >= M + 2, got K = {}, M = {}", self.k, self.m),
            ));
        }
        if self.m == 0 {
            return Err(domain("M", "need at least one transmit antenna"));
        }
        if self.l == 0 {
            return Err(domain("L", "need at least one RIS element"));
        }
        if !(self.beta_max > 0.0 && self.beta_max <= 1.0) {
            return Err(domain(
                "beta_max",
                format!("{} outside (0, 1]", self.beta_max),
            ));
        }
        for (name, v) in [("sigma_n_sq", self.sigma_n_sq), ("p_un", self.p_un)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(name, format!("{v} must be positive")));
            }
        }
        self.path_loss.validate()?;
        self.geometry.validate()?;
        BlockageModel::new(self.blockage.b1)?;
        self.pattern_user.validate()?;
        self.pattern_eve.validate()?;
        self.fading_user.validate("fading.user")?;
        self.fading_eve.validate("fading.eve")?;
        self.fading_bs_ris.validate("fading.bs_ris")?;
        Ok(())
    }

    pub fn non_los_kind(&self) -> LinkKind {
        self.scenario.non_los_kind()
    }

    /// Number of direct-link gain terms, `Q·M`.
    pub fn direct_terms(&self) -> usize {
        self.q_eff() * self.m
    }

    /// Number of RIS product terms, `Q·L`.
    pub fn ris_terms(&self) -> usize {
        self.q_eff() * self.l
    }

    /// Direct-link element parameters of the given table.
    pub fn direct_elements(&self, table: &FadingTable) -> Vec<FisherFParams> {
        table.take(self.direct_terms())
    }

    /// `(RIS-side, BS-RIS)` parameter pairs of the RIS product terms.
    pub fn ris_elements(&self, table: &FadingTable) -> Vec<(FisherFParams, FisherFParams)> {
        (0..self.ris_terms())
            .map(|i| (table.get(i), self.fading_bs_ris.get(i % self.l)))
            .collect()
    }
}

/// Sampler for a sum of independent F terms.
#[derive(Clone, Debug)]
pub struct SumSampler {
    terms: Vec<FSampler>,
}

impl SumSampler {
    pub fn new(params: &[FisherFParams]) -> Result<Self> {
        Ok(Self {
            terms: params.iter().map(FSampler::new).collect::<Result<_>>()?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.terms.iter().map(|t| t.sample(rng)).sum()
    }
}

/// Sampler for a sum of products of two independent F terms.
#[derive(Clone, Debug)]
pub struct ProductSumSampler {
    terms: Vec<(FSampler, FSampler)>,
}

impl ProductSumSampler {
    pub fn new(pairs: &[(FisherFParams, FisherFParams)]) -> Result<Self> {
        Ok(Self {
            terms: pairs
                .iter()
                .map(|(a, b)| Ok((FSampler::new(a)?, FSampler::new(b)?)))
                .collect::<Result<_>>()?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| a.sample(rng) * b.sample(rng))
            .sum()
    }
}

/// One draw of the scenario-1 effective gain, a sum of `Q·M` F variables.
pub fn effective_gain_s1<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    table: &FadingTable,
    rng: &mut R,
) -> Result<f64> {
    Ok(SumSampler::new(&cfg.direct_elements(table))?.sample(rng))
}

/// One draw of the scenario-2 effective gain, a sum of `Q·L` products of F variables.
pub fn effective_gain_s2<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    table: &FadingTable,
    rng: &mut R,
) -> Result<f64> {
    Ok(ProductSumSampler::new(&cfg.ris_elements(table))?.sample(rng))
}

/// Scale constants `(A1, A2)` for a receiver with antenna gain `antenna_gain`:
/// `A1 = 𝒢 p / (β² Q² σ²)` and `A2 = A1 C_L1 C_L2 / d_uR²`.
pub fn a_constants(cfg: &ScenarioConfig, antenna_gain: f64) -> (f64, f64) {
    let q = cfg.q_eff() as f64;
    let a1 = antenna_gain * cfg.p_un / (cfg.beta_max * cfg.beta_max * q * q * cfg.sigma_n_sq);
    let a2 = a1 * cfg.path_loss.c_l1 * cfg.path_loss.c_l2 / (cfg.geometry.d_ur * cfg.geometry.d_ur);
    (a1, a2)
}

/// SINR scale `a` and distance exponent `α` such that `SINR = a · gain · d^(−α)`.
pub fn sinr_scale(kind: LinkKind, cfg: &ScenarioConfig, antenna_gain: f64) -> (f64, f64) {
    let (a1, a2) = a_constants(cfg, antenna_gain);
    match kind {
        LinkKind::LoS => (a1, cfg.path_loss.alpha1),
        LinkKind::NLoS => (a1, cfg.path_loss.alpha2),
        LinkKind::RisReflected | LinkKind::RisWithDirect => (a2, 2.0),
    }
}

/// Effective SINR. For [`LinkKind::RisWithDirect`] `gain` is the sum of the
/// direct and RIS gains.
pub fn sinr(kind: LinkKind, gain: f64, d: f64, cfg: &ScenarioConfig, antenna_gain: f64) -> f64 {
    let (a, alpha) = sinr_scale(kind, cfg, antenna_gain);
    a * gain * d.powf(-alpha)
}
