//! SINR distributions of a single link: `Z = a · X · d^(−α)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::terms::{gain_model, GainModel, GainTerm, Receiver};
use crate::channel::{sinr_scale, LinkKind, ProductSumSampler, ScenarioConfig, SumSampler};
use crate::error::{domain, Error, Result};
use crate::fading::{FisherFParams, MatchKind};
use crate::geometry::DistanceLaw;
use crate::specfun::{
    fox_h_multivariate, BivariateMeijerGSpec, ContourConfig, CoupledBlock, FoxHMultivarSpec,
    GammaFactorGroup, GammaTerm, MeijerBlock, MeijerGSpec, QuadratureResult, Sign,
};

/// How a distribution is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// N-fold Mellin-Barnes integral over the exact gain terms.
    ExactFoxH,
    /// One-fold Meijer kernel over a moment-matched F surrogate.
    SingleFApprox,
    /// Average over sampled gains.
    Empirical,
}

/// Contour settings used by the analytic layer. Integrands carry their gamma
/// normalisation, so the absolute tolerance is in probability units.
pub fn analytic_contour() -> ContourConfig {
    ContourConfig::balanced().with_tolerances(1e-8, 1e-12)
}

fn rescaled(contour: &ContourConfig, factor: f64) -> ContourConfig {
    let mut c = contour.clone();
    c.abs_tol *= factor;
    c
}

/// Run a contour integral and reject results that clearly did not settle.
pub(crate) fn run_contour(
    spec: &FoxHMultivarSpec,
    contour: &ContourConfig,
) -> Result<QuadratureResult> {
    let r = fox_h_multivariate(spec, contour)?;
    check(r, spec.folds())
}

fn check(r: QuadratureResult, folds: usize) -> Result<QuadratureResult> {
    if !r.value.is_finite() || (!r.converged && r.error_estimate > 1e-6 * r.value.abs().max(1e-3)) {
        return Err(Error::NonConvergence {
            what: if folds > 1 {
                "multi-fold contour integral"
            } else {
                "contour integral"
            },
            terms: r.nodes_used,
        });
    }
    Ok(r)
}

/// Endpoint pieces `(coef, r)` of a distance law such that
/// `E[d^(α w)] = Σ coef · r^(α w) · Γ(w + 2/α) / Γ(w + 2/α + 1)`.
pub(crate) fn annulus_pieces(law: &DistanceLaw, alpha: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(2 * law.segments.len());
    for s in &law.segments {
        let k = s.weight * 2.0 / (alpha * (s.hi * s.hi - s.lo * s.lo));
        out.push((k * s.hi * s.hi, s.hi));
        out.push((-k * s.lo * s.lo, s.lo));
    }
    out
}

/// Per-fold factors `Γ(s) E[X^{-s}]` of every term, with their rates.
fn gain_folds(terms: &[GainTerm]) -> (Vec<GammaFactorGroup>, Vec<f64>, f64) {
    let mut folds = Vec::with_capacity(terms.len());
    let mut rates = Vec::with_capacity(terms.len());
    let mut ln_norm = 0.0;
    for t in terms {
        let g = t.mellin_factors(Sign::Plus);
        folds.push(GammaFactorGroup {
            numerator: std::iter::once(GammaTerm::plus(0.0))
                .chain(g.numerator)
                .collect(),
            denominator: g.denominator,
        });
        rates.push(t.rate());
        ln_norm += t.ln_norm();
    }
    (folds, rates, ln_norm)
}

/// CDF (`density = false`) or density of `Σ X_ℓ` at `y` by contour integration.
pub fn gain_mb(terms: &[GainTerm], y: f64, density: bool, contour: &ContourConfig) -> Result<f64> {
    if y <= 0.0 {
        return Ok(0.0);
    }
    let (folds, rates, ln_norm) = gain_folds(terms);
    let n = terms.len();
    let outer = GammaFactorGroup::new().den(GammaTerm::sum(if density { 0.0 } else { 1.0 }, n));
    let args = rates.iter().map(|c| c * y).collect();
    let tol = if density { y } else { 1.0 };
    let r = run_contour(
        &FoxHMultivarSpec::new(folds, outer, args).with_ln_scale(-ln_norm),
        &rescaled(contour, tol),
    )?;
    let v = r.value;
    Ok(if density { v / y } else { v.clamp(0.0, 1.0) })
}

/// CDF or density of `a X d^(−α)` for exact gain terms and a distance law.
pub fn sinr_exact(
    terms: &[GainTerm],
    scale: f64,
    alpha: f64,
    law: &DistanceLaw,
    z: f64,
    density: bool,
    contour: &ContourConfig,
) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let (folds, rates, ln_norm) = gain_folds(terms);
    let n = terms.len();
    let two = 2.0 / alpha;
    let outer = GammaFactorGroup::new()
        .num(GammaTerm::sum(two, n))
        .den(GammaTerm::sum(if density { 0.0 } else { 1.0 }, n))
        .den(GammaTerm::sum(1.0 + two, n));
    let contour = rescaled(contour, if density { z } else { 1.0 });
    let mut total = 0.0;
    for (coef, r) in annulus_pieces(law, alpha) {
        let x = z * r.powf(alpha) / scale;
        let spec = FoxHMultivarSpec::new(
            folds.clone(),
            outer.clone(),
            rates.iter().map(|c| c * x).collect(),
        )
        .with_ln_scale(-ln_norm);
        total += coef * run_contour(&spec, &contour)?.value;
    }
    let v = total;
    Ok(if density { v / z } else { v.clamp(0.0, 1.0) })
}

/// CDF or density of `a X d^(−α)` for one F surrogate, through the kernel
/// `G^{1,3}_{3,3}(c z r^α / a | 1, 1−m_s, 1−2/α; m, 0, −2/α)`.
pub fn sinr_single_f(
    p: &FisherFParams,
    scale: f64,
    alpha: f64,
    law: &DistanceLaw,
    z: f64,
    density: bool,
    contour: &ContourConfig,
) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let two = 2.0 / alpha;
    // the density drops the factor Γ(s)/Γ(1+s) of the CDF kernel
    let (n, a, b) = if density {
        (2, vec![1.0 - p.m_s, 1.0 - two], vec![p.m, -two])
    } else {
        (3, vec![1.0, 1.0 - p.m_s, 1.0 - two], vec![p.m, 0.0, -two])
    };
    let ln_norm = crate::specfun::ln_gamma(p.m) + crate::specfun::ln_gamma(p.m_s);
    let contour = rescaled(contour, if density { z } else { 1.0 });
    let mut total = 0.0;
    for (coef, r) in annulus_pieces(law, alpha) {
        let x = p.rate() * z * r.powf(alpha) / scale;
        let spec = MeijerGSpec::new(1, n, a.clone(), b.clone(), x)?;
        total += coef * run_contour(&spec.to_fox_h().with_ln_scale(-ln_norm), &contour)?.value;
    }
    let v = total;
    Ok(if density { v / z } else { v.clamp(0.0, 1.0) })
}

/// CDF of `a (X_1 + X_2) d^(−2)` for two F surrogates through a bivariate Meijer kernel.
pub fn sinr_pair(
    p1: &FisherFParams,
    p2: &FisherFParams,
    scale: f64,
    alpha: f64,
    law: &DistanceLaw,
    z: f64,
    contour: &ContourConfig,
) -> Result<f64> {
    if z <= 0.0 {
        return Ok(0.0);
    }
    let two = 2.0 / alpha;
    let coupled = CoupledBlock {
        n: 1,
        a: vec![1.0 - two],
        b: vec![0.0, -two],
    };
    let block = |p: &FisherFParams| MeijerBlock::new(1, 2, vec![1.0, 1.0 - p.m_s], vec![p.m]);
    let ln_norm: f64 = [p1, p2]
        .iter()
        .map(|p| crate::specfun::ln_gamma(p.m) + crate::specfun::ln_gamma(p.m_s))
        .sum();
    let mut total = 0.0;
    for (coef, r) in annulus_pieces(law, alpha) {
        let x = z * r.powf(alpha) / scale;
        let spec = BivariateMeijerGSpec::new(
            coupled.clone(),
            block(p1)?,
            block(p2)?,
            (p1.rate() * x, p2.rate() * x),
        )?;
        total += coef * run_contour(&spec.to_fox_h().with_ln_scale(-ln_norm), contour)?.value;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// SINR distribution of one link, receiver and distance law.
#[derive(Clone, Debug)]
pub struct SinrDistribution {
    pub method: Method,
    pub kind: LinkKind,
    pub scale: f64,
    pub alpha: f64,
    pub law: DistanceLaw,
    pub model: Option<GainModel>,
    pub matches: Vec<MatchKind>,
    samples: Vec<f64>,
    contour: ContourConfig,
}

impl SinrDistribution {
    /// Distribution over `law` using the exact or surrogate gain model.
    pub fn new(
        cfg: &ScenarioConfig,
        kind: LinkKind,
        rx: Receiver,
        law: DistanceLaw,
        method: Method,
    ) -> Result<Self> {
        cfg.validate()?;
        if law.is_empty() {
            return Err(domain("law", "distance law has no support"));
        }
        let (scale, alpha) = sinr_scale(kind, cfg, rx.antenna_gain(cfg));
        let (model, matches) = match method {
            Method::ExactFoxH => {
                let (m, k) = gain_model(cfg, kind, rx, true)?;
                (Some(m), k)
            }
            Method::SingleFApprox => {
                let (m, k) = gain_model(cfg, kind, rx, false)?;
                (Some(m), k)
            }
            Method::Empirical => (None, vec![]),
        };
        Ok(Self {
            method,
            kind,
            scale,
            alpha,
            law,
            model,
            matches,
            samples: vec![],
            contour: analytic_contour(),
        })
    }

    /// Empirical distribution from `n` sampled gains and the same distance law.
    pub fn empirical(
        cfg: &ScenarioConfig,
        kind: LinkKind,
        rx: Receiver,
        law: DistanceLaw,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut d = Self::new(cfg, kind, rx, law, Method::Empirical)?;
        let table = rx.table(cfg);
        let direct = SumSampler::new(&cfg.direct_elements(table))?;
        let ris = ProductSumSampler::new(&cfg.ris_elements(table))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        d.samples = (0..n)
            .map(|_| match kind {
                LinkKind::LoS | LinkKind::NLoS => direct.sample(&mut rng),
                LinkKind::RisReflected => ris.sample(&mut rng),
                LinkKind::RisWithDirect => direct.sample(&mut rng) + ris.sample(&mut rng),
            })
            .collect();
        Ok(d)
    }

    pub fn with_contour(mut self, contour: ContourConfig) -> Self {
        self.contour = contour;
        self
    }

    /// Number of contour folds used per evaluation (zero for the empirical method).
    pub fn folds(&self) -> usize {
        self.model.as_ref().map_or(0, |m| m.folds())
    }

    pub fn cdf(&self, z: f64) -> Result<f64> {
        self.eval(z, false)
    }

    pub fn pdf(&self, z: f64) -> Result<f64> {
        self.eval(z, true)
    }

    fn eval(&self, z: f64, density: bool) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(domain("z", format!("{z} is not a non-negative threshold")));
        }
        // lower-tail CDF values carry no cancellation, so they are held to a relative tolerance
        let mut contour = self.contour.clone();
        if !density {
            contour.abs_tol = 0.0;
        }
        match &self.model {
            None => Ok(self.empirical_eval(z, density)),
            Some(GainModel::Exact(terms)) => sinr_exact(
                terms, self.scale, self.alpha, &self.law, z, density, &contour,
            ),
            Some(GainModel::Surrogate(p)) => {
                sinr_single_f(p, self.scale, self.alpha, &self.law, z, density, &contour)
            }
            Some(GainModel::SurrogatePair(p1, p2)) => {
                if density {
                    let terms = [GainTerm::Single(*p1), GainTerm::Single(*p2)];
                    sinr_exact(&terms, self.scale, self.alpha, &self.law, z, true, &contour)
                } else {
                    sinr_pair(p1, p2, self.scale, self.alpha, &self.law, z, &contour)
                }
            }
        }
    }

    fn empirical_eval(&self, z: f64, density: bool) -> f64 {
        if z <= 0.0 || self.samples.is_empty() {
            return 0.0;
        }
        let n = self.samples.len() as f64;
        let total: f64 = self
            .samples
            .iter()
            .map(|&x| {
                // Z ≤ z  ⇔  d ≥ (a x / z)^(1/α)
                let r = (self.scale * x / z).powf(1.0 / self.alpha);
                if density {
                    law_density(&self.law, r) * r / (self.alpha * z)
                } else {
                    1.0 - self.law.cdf(r)
                }
            })
            .sum();
        total / n
    }
}

fn law_density(law: &DistanceLaw, r: f64) -> f64 {
    law.segments
        .iter()
        .filter(|s| r >= s.lo && r <= s.hi)
        .map(|s| s.weight * 2.0 * r / (s.hi * s.hi - s.lo * s.lo))
        .sum()
}

fn full_annulus(cfg: &ScenarioConfig) -> DistanceLaw {
    DistanceLaw::annulus(cfg.geometry.r0, cfg.geometry.r2)
}

/// Exact SINR CDF of a direct link (scenario 1) with `d` uniform on the annulus.
pub fn cdf_s1_exact(z: f64, cfg: &ScenarioConfig, kind: LinkKind, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        direct_kind(kind)?,
        rx,
        full_annulus(cfg),
        Method::ExactFoxH,
    )?
    .cdf(z)
}

pub fn pdf_s1_exact(z: f64, cfg: &ScenarioConfig, kind: LinkKind, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        direct_kind(kind)?,
        rx,
        full_annulus(cfg),
        Method::ExactFoxH,
    )?
    .pdf(z)
}

pub fn cdf_s1_approx(z: f64, cfg: &ScenarioConfig, kind: LinkKind, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        direct_kind(kind)?,
        rx,
        full_annulus(cfg),
        Method::SingleFApprox,
    )?
    .cdf(z)
}

/// Exact SINR CDF of the RIS-reflected link (scenario 2).
pub fn cdf_s2_exact(z: f64, cfg: &ScenarioConfig, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        LinkKind::RisReflected,
        rx,
        full_annulus(cfg),
        Method::ExactFoxH,
    )?
    .cdf(z)
}

pub fn pdf_s2_exact(z: f64, cfg: &ScenarioConfig, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        LinkKind::RisReflected,
        rx,
        full_annulus(cfg),
        Method::ExactFoxH,
    )?
    .pdf(z)
}

pub fn cdf_s2_approx(z: f64, cfg: &ScenarioConfig, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        LinkKind::RisReflected,
        rx,
        full_annulus(cfg),
        Method::SingleFApprox,
    )?
    .cdf(z)
}

/// SINR CDF of the combined direct and RIS link with two surrogates.
pub fn cdf_direct(z: f64, cfg: &ScenarioConfig, rx: Receiver) -> Result<f64> {
    SinrDistribution::new(
        cfg,
        LinkKind::RisWithDirect,
        rx,
        full_annulus(cfg),
        Method::SingleFApprox,
    )?
    .cdf(z)
}

fn direct_kind(kind: LinkKind) -> Result<LinkKind> {
    match kind {
        LinkKind::LoS | LinkKind::NLoS => Ok(kind),
        _ => Err(domain(
            "kind",
            "direct-link formula needs a LoS or NLoS link",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{f_power_cdf, f_power_pdf};
    use crate::quad::{integrate, QuadSettings};

    fn one(m: f64, ms: f64, g: f64) -> FisherFParams {
        FisherFParams::new(m, ms, g).unwrap()
    }

    /// `E_d[F_X(z d^α / a)]` by direct quadrature in `u = d²`.
    fn brute_cdf(p: &FisherFParams, scale: f64, alpha: f64, lo: f64, hi: f64, z: f64) -> f64 {
        let f = |u: f64| f_power_cdf(z * u.powf(alpha / 2.0) / scale, p).unwrap();
        integrate(f, lo * lo, hi * hi, QuadSettings::new(1e-14, 1e-12)).value / (hi * hi - lo * lo)
    }

    #[test]
    fn single_term_exact_matches_quadrature() {
        let p = one(5.0, 5.0, 0.1);
        let law = DistanceLaw::annulus(1.0, 400.0);
        let c = analytic_contour();
        for &(scale, alpha, z) in &[(1e5, 2.0, 1.0), (1e5, 3.0, 0.01), (50.0, 2.0, 3e-4)] {
            let want = brute_cdf(&p, scale, alpha, 1.0, 400.0, z);
            let got = sinr_exact(&[GainTerm::Single(p)], scale, alpha, &law, z, false, &c).unwrap();
            let kern = sinr_single_f(&p, scale, alpha, &law, z, false, &c).unwrap();
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
            assert!((kern - want).abs() < 1e-8, "{kern} vs {want}");
        }
    }

    #[test]
    fn capped_shape_surrogate_matches_quadrature() {
        let p = one(1000.0, 12.373, 1.6);
        let law = DistanceLaw::annulus(1.0, 400.0);
        let c = analytic_contour();
        for &z in &[1e-4, 1e-2, 1.0] {
            let want = brute_cdf(&p, 111.111, 2.0, 1.0, 400.0, z);
            let got = sinr_single_f(&p, 111.111, 2.0, &law, z, false, &c).unwrap();
            assert!((got - want).abs() < 1e-7, "z = {z}: {got} vs {want}");
        }
    }

    #[test]
    fn density_is_derivative_of_cdf() {
        let p = one(3.0, 4.0, 0.5);
        let law = DistanceLaw::annulus(1.0, 50.0);
        let c = analytic_contour();
        let terms = [GainTerm::Single(p), GainTerm::Single(one(2.0, 5.0, 1.0))];
        let (z, h) = (0.2, 1e-4);
        let fd = (sinr_exact(&terms, 100.0, 2.5, &law, z + h, false, &c).unwrap()
            - sinr_exact(&terms, 100.0, 2.5, &law, z - h, false, &c).unwrap())
            / (2.0 * h);
        let pdf = sinr_exact(&terms, 100.0, 2.5, &law, z, true, &c).unwrap();
        assert!((fd / pdf - 1.0).abs() < 1e-5, "{fd} vs {pdf}");
        let fd1 = (sinr_single_f(&p, 100.0, 2.5, &law, z + h, false, &c).unwrap()
            - sinr_single_f(&p, 100.0, 2.5, &law, z - h, false, &c).unwrap())
            / (2.0 * h);
        let pdf1 = sinr_single_f(&p, 100.0, 2.5, &law, z, true, &c).unwrap();
        assert!((fd1 / pdf1 - 1.0).abs() < 1e-5, "{fd1} vs {pdf1}");
    }

    #[test]
    fn pair_kernel_equals_two_fold_exact() {
        let (p1, p2) = (one(4.0, 6.0, 0.3), one(2.5, 3.5, 1.2));
        let law = DistanceLaw::annulus(2.0, 40.0);
        let c = analytic_contour();
        let terms = [GainTerm::Single(p1), GainTerm::Single(p2)];
        for &z in &[0.05, 0.5, 5.0] {
            let a = sinr_pair(&p1, &p2, 300.0, 2.0, &law, z, &c).unwrap();
            let b = sinr_exact(&terms, 300.0, 2.0, &law, z, false, &c).unwrap();
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn gain_cdf_of_exponential_sum() {
        let p = one(2.0, 6.0, 1.0);
        let terms = [GainTerm::Single(p), GainTerm::Single(p)];
        let c = analytic_contour();
        let y = 2.0;
        let mb = gain_mb(&terms, y, false, &c).unwrap();
        // convolution by quadrature
        let conv = integrate(
            |x| f_power_pdf(x, &p).unwrap() * f_power_cdf(y - x, &p).unwrap(),
            0.0,
            y,
            QuadSettings::new(1e-14, 1e-12),
        )
        .value;
        assert!((mb - conv).abs() < 1e-9, "{mb} vs {conv}");
        let dens = gain_mb(&terms, y, true, &c).unwrap();
        let conv_d = integrate(
            |x| f_power_pdf(x, &p).unwrap() * f_power_pdf(y - x, &p).unwrap(),
            0.0,
            y,
            QuadSettings::new(1e-14, 1e-12),
        )
        .value;
        assert!((dens - conv_d).abs() < 1e-9, "{dens} vs {conv_d}");
    }

    #[test]
    fn empirical_tracks_exact() {
        let mut cfg = ScenarioConfig::reference();
        cfg.k = 3;
        cfg.m = 1;
        let law = DistanceLaw::annulus(1.0, 400.0);
        let ex = SinrDistribution::new(
            &cfg,
            LinkKind::NLoS,
            Receiver::User,
            law.clone(),
            Method::ExactFoxH,
        )
        .unwrap();
        let em = SinrDistribution::empirical(&cfg, LinkKind::NLoS, Receiver::User, law, 20000, 7)
            .unwrap();
        for &z in &[0.3, 3.0, 30.0] {
            let (a, b) = (ex.cdf(z).unwrap(), em.cdf(z).unwrap());
            assert!((a - b).abs() < 0.02, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn rejects_negative_threshold() {
        let cfg = ScenarioConfig::reference();
        assert!(cdf_s1_exact(-1.0, &cfg, LinkKind::LoS, Receiver::User).is_err());
        assert!(cdf_s1_exact(1.0, &cfg, LinkKind::RisReflected, Receiver::User).is_err());
    }
}
