//! Annulus user placement, LoS blockage, path loss and distance laws.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::LinkKind;
use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusGeometry {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub d_ur: f64,
    /// Recorded for completeness; no metric depends on it.
    pub density_lambda: f64,
}

impl AnnulusGeometry {
    pub fn new(r0: f64, r1: f64, r2: f64, d_ur: f64, density_lambda: f64) -> Result<Self> {
        let g = Self {
            r0,
            r1,
            r2,
            d_ur,
            density_lambda,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.r0 < self.r1 && self.r1 <= self.r2 && self.r2.is_finite()) {
            return Err(domain(
                "geometry",
                format!(
                    "need 0 < r0 < r1 <= r2, got {}, {}, {}",
                    self.r0, self.r1, self.r2
                ),
            ));
        }
        if !(self.d_ur > 0.0 && self.d_ur.is_finite()) {
            return Err(domain("d_ur", format!("{} must be positive", self.d_ur)));
        }
        if !(self.density_lambda >= 0.0) {
            return Err(domain("density_lambda", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockageModel {
    pub b1: f64,
}

impl BlockageModel {
    pub fn new(b1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b1) {
            return Err(domain("b1", format!("{b1} is not a probability")));
        }
        Ok(Self { b1 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub c_l1: f64,
    pub c_l2: f64,
}

impl PathLossParams {
    pub fn new(alpha1: f64, alpha2: f64, c_l1: f64, c_l2: f64) -> Result<Self> {
        let p = Self {
            alpha1,
            alpha2,
            c_l1,
            c_l2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2.0 <= self.alpha1 && self.alpha1 <= self.alpha2 && self.alpha2.is_finite()) {
            return Err(domain(
                "alpha",
                format!(
                    "need 2 <= alpha1 <= alpha2, got {} and {}",
                    self.alpha1, self.alpha2
                ),
            ));
        }
        if !(self.c_l1 > 0.0 && self.c_l2 > 0.0) {
            return Err(domain("c_l", "intercepts must be positive"));
        }
        Ok(())
    }
}

/// CDF of the user distance, `(r² − r0²) / (r2² − r0²)`.
pub fn user_distance_cdf(r: f64, g: &AnnulusGeometry) -> Result<f64> {
    if !(g.r0..=g.r2).contains(&r) {
        return Err(domain("r", format!("{r} outside [{}, {}]", g.r0, g.r2)));
    }
    Ok((r * r - g.r0 * g.r0) / (g.r2 * g.r2 - g.r0 * g.r0))
}

/// Inverse of [`user_distance_cdf`].
pub fn distance_from_uniform(u: f64, g: &AnnulusGeometry) -> f64 {
    (u * (g.r2 * g.r2 - g.r0 * g.r0) + g.r0 * g.r0).sqrt()
}

pub fn sample_user_distance<R: Rng + ?Sized>(g: &AnnulusGeometry, rng: &mut R) -> f64 {
    distance_from_uniform(rng.random::<f64>(), g)
}

/// Probability that the user lies within the LoS ball.
pub fn b2(g: &AnnulusGeometry) -> f64 {
    (g.r1 * g.r1 - g.r0 * g.r0) / (g.r2 * g.r2 - g.r0 * g.r0)
}

/// `P_A = [Pr_LoS, Pr_NLoS]` and
/// `P_B = [Pr_LoS Pr_G, Pr_LoS Pr_g, Pr_NLoS Pr_G, Pr_NLoS Pr_g]`.
pub fn prob_vectors(
    g: &AnnulusGeometry,
    blockage: &BlockageModel,
    theta_c: f64,
) -> Result<([f64; 2], [f64; 4])> {
    if !(theta_c > 0.0 && theta_c <= 180.0) {
        return Err(domain("theta_c", format!("{theta_c} outside (0, 180]")));
    }
    let p_los = blockage.b1 * b2(g);
    let p_nlos = 1.0 - p_los;
    let pg = theta_c / 180.0;
    let (los_main, nlos_main) = (p_los * pg, p_nlos * pg);
    Ok((
        [p_los, p_nlos],
        [los_main, p_los - los_main, nlos_main, p_nlos - nlos_main],
    ))
}

/// Density of `D = d^α` for a user uniform on the annulus.
pub fn d_alpha_pdf(x: f64, alpha: f64, g: &AnnulusGeometry) -> Result<f64> {
    let (lo, hi) = (g.r0.powf(alpha), g.r2.powf(alpha));
    if !(lo..=hi).contains(&x) {
        return Err(domain("x", format!("{x} outside [{lo}, {hi}]")));
    }
    Ok(2.0 * x.powf(2.0 / alpha - 1.0) / ((g.r2 * g.r2 - g.r0 * g.r0) * alpha))
}

/// Large-scale gain of a link of length `d`.
pub fn path_loss(kind: LinkKind, d: f64, plp: &PathLossParams, g: &AnnulusGeometry) -> f64 {
    match kind {
        LinkKind::LoS => d.powf(-plp.alpha1),
        LinkKind::NLoS => d.powf(-plp.alpha2),
        LinkKind::RisReflected | LinkKind::RisWithDirect => {
            plp.c_l1 * plp.c_l2 * (g.d_ur * d).powi(-2)
        }
    }
}

/// How the LoS state relates to the user distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockageCoupling {
    /// LoS with probability `B1` only when `d ≤ r1`; each branch sees the
    /// conditional distance law.
    #[default]
    DistanceGated,
    /// LoS with probability `B1·B2` independently of the distance; both branches
    /// see the full annulus.
    Independent,
}

/// Whether the eavesdropper shares the user's distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistanceCoupling {
    #[default]
    Shared,
    /// Independent draw from the same branch distance law.
    Independent,
}

/// One annulus piece `[lo, hi]` of a distance law, uniform in `d²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub weight: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    fn area(&self) -> f64 {
        self.hi * self.hi - self.lo * self.lo
    }
}

/// Mixture of annulus pieces; the distance law of one link branch.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceLaw {
    pub segments: Vec<Segment>,
}

impl DistanceLaw {
    pub fn annulus(lo: f64, hi: f64) -> Self {
        Self {
            segments: vec![Segment {
                weight: 1.0,
                lo,
                hi,
            }],
        }
    }

    fn from_pieces(pieces: &[(f64, f64, f64)]) -> Self {
        let segments: Vec<Segment> = pieces
            .iter()
            .filter(|(w, lo, hi)| *w > 0.0 && hi > lo)
            .map(|&(weight, lo, hi)| Segment { weight, lo, hi })
            .collect();
        let total: f64 = segments.iter().map(|s| s.weight).sum();
        Self {
            segments: segments
                .into_iter()
                .map(|s| Segment {
                    weight: s.weight / total,
                    ..s
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// `Pr(d ≤ r)`.
    pub fn cdf(&self, r: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let rr = r.clamp(s.lo, s.hi);
                s.weight * (rr * rr - s.lo * s.lo) / s.area()
            })
            .sum()
    }

    /// `E[d^k]` for real `k`.
    pub fn moment(&self, k: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let e = 2.0 + k;
                let v = if e.abs() < 1e-12 {
                    2.0 * (s.hi / s.lo).ln() / s.area()
                } else {
                    2.0 * (s.hi.powf(e) - s.lo.powf(e)) / (e * s.area())
                };
                s.weight * v
            })
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let mut acc = 0.0;
        let last = self.segments.len() - 1;
        for (i, s) in self.segments.iter().enumerate() {
            acc += s.weight;
            if u < acc || i == last {
                return (v * s.area() + s.lo * s.lo).sqrt();
            }
        }
        unreachable!("distance law without segments")
    }
}

/// Distance laws of the LoS and non-LoS branches.
pub fn branch_laws(
    g: &AnnulusGeometry,
    blockage: &BlockageModel,
    coupling: BlockageCoupling,
) -> (DistanceLaw, DistanceLaw) {
    match coupling {
        BlockageCoupling::Independent => (
            DistanceLaw::annulus(g.r0, g.r2),
            DistanceLaw::annulus(g.r0, g.r2),
        ),
        BlockageCoupling::DistanceGated => {
            let b = b2(g);
            let los = DistanceLaw::from_pieces(&[(1.0, g.r0, g.r1)]);
            let nlos = DistanceLaw::from_pieces(&[
                (b * (1.0 - blockage.b1), g.r0, g.r1),
                (1.0 - b, g.r1, g.r2),
            ]);
            (los, nlos)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_geometry() -> AnnulusGeometry {
        AnnulusGeometry::new(1.0, 300.0, 400.0, 30.0, 1e-4).unwrap()
    }

    #[test]
    fn distance_cdf_values() {
        let g = reference_geometry();
        assert_eq!(user_distance_cdf(1.0, &g).unwrap(), 0.0);
        assert_eq!(user_distance_cdf(400.0, &g).unwrap(), 1.0);
        assert!((user_distance_cdf(282.843, &g).unwrap() - 0.5).abs() < 1e-4);
        assert!(user_distance_cdf(0.5, &g).is_err());
    }

    #[test]
    fn inverse_transform() {
        let g = reference_geometry();
        assert_eq!(distance_from_uniform(0.0, &g), 1.0);
        assert_eq!(distance_from_uniform(1.0, &g), 400.0);
        assert!((distance_from_uniform(0.5, &g) - 80000.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn b2_values() {
        let g = reference_geometry();
        assert!((b2(&g) - 89999.0 / 159999.0).abs() < 1e-15);
        let full = AnnulusGeometry::new(1.0, 400.0, 400.0, 30.0, 0.0).unwrap();
        assert_eq!(b2(&full), 1.0);
    }

    #[test]
    fn probability_vectors() {
        let g = reference_geometry();
        let (pa, pb) = prob_vectors(&g, &BlockageModel::new(0.3).unwrap(), 30.0).unwrap();
        assert!((pa[0] - 0.3 * 89999.0 / 159999.0).abs() < 1e-15);
        assert!((pa[0] - 0.168_749).abs() < 1e-6);
        assert!((pb[0] + pb[1] - pa[0]).abs() < 1e-16);
        let full = AnnulusGeometry::new(1.0, 400.0, 400.0, 30.0, 0.0).unwrap();
        let (pa, pb) = prob_vectors(&full, &BlockageModel::new(1.0).unwrap(), 180.0).unwrap();
        assert_eq!(pa, [1.0, 0.0]);
        assert_eq!(pb, [1.0, 0.0, 0.0, 0.0]);
        assert!(prob_vectors(&g, &BlockageModel::new(0.3).unwrap(), 0.0).is_err());
    }

    #[test]
    fn d_alpha_density() {
        let g = reference_geometry();
        for &alpha in &[2.0, 2.5, 3.0, 4.0] {
            let (lo, hi) = (g.r0.powf(alpha), g.r2.powf(alpha));
            // substitute x = u^{α/2}, u uniform in r² (smooth integrand)
            let r = crate::quad::integrate(
                |u: f64| {
                    let x = u.powf(alpha / 2.0);
                    d_alpha_pdf(x.clamp(lo, hi), alpha, &g).unwrap() * alpha / 2.0
                        * u.powf(alpha / 2.0 - 1.0)
                },
                1.0,
                160_000.0,
                crate::quad::QuadSettings::new(1e-13, 1e-13),
            );
            assert!((r.value - 1.0).abs() < 1e-10, "alpha {alpha}: {}", r.value);
        }
        assert!((d_alpha_pdf(5.0, 2.0, &g).unwrap() - 1.0 / 159_999.0).abs() < 1e-18);
        let want = (2.0 / 3.0) * 8f64.powf(-1.0 / 3.0) / 159_999.0;
        assert!((d_alpha_pdf(8.0, 3.0, &g).unwrap() - want).abs() < 1e-18);
    }

    #[test]
    fn path_losses() {
        let g = reference_geometry();
        let plp = PathLossParams::new(2.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(path_loss(LinkKind::LoS, 1.0, &plp, &g), 1.0);
        assert!((path_loss(LinkKind::NLoS, 10.0, &plp, &g) - 1e-3).abs() < 1e-15);
        assert!((path_loss(LinkKind::RisReflected, 10.0, &plp, &g) - 1.0 / 90_000.0).abs() < 1e-15);
    }

    #[test]
    fn gated_laws_recombine_to_annulus() {
        let g = reference_geometry();
        let bl = BlockageModel::new(0.3).unwrap();
        let (pa, _) = prob_vectors(&g, &bl, 30.0).unwrap();
        let (los, nlos) = branch_laws(&g, &bl, BlockageCoupling::DistanceGated);
        for &r in &[1.0, 50.0, 299.0, 300.0, 350.0, 400.0] {
            let mix = pa[0] * los.cdf(r) + pa[1] * nlos.cdf(r);
            assert!((mix - user_distance_cdf(r, &g).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn law_moment_matches_quadrature() {
        let law = DistanceLaw::annulus(1.0, 400.0);
        let want = crate::quad::integrate(
            |r: f64| r.powi(3) * 2.0 * r / 159_999.0,
            1.0,
            400.0,
            crate::quad::QuadSettings::new(1e-6, 1e-13),
        );
        assert!((law.moment(3.0) / want.value - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn p_b_refines_p_a(b1 in 0.0f64..=1.0, r1 in 2.0f64..400.0, theta in 1.0f64..=180.0) {
            let g = AnnulusGeometry::new(1.0, r1, 400.0, 30.0, 0.0).unwrap();
            let (pa, pb) = prob_vectors(&g, &BlockageModel::new(b1).unwrap(), theta).unwrap();
            prop_assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((pb.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((pb[0] + pb[1] - pa[0]).abs() < 1e-15);
            let b = b2(&g);
            prop_assert!((0.0..=1.0).contains(&b));
        }

        #[test]
        fn b2_monotone_in_r1(r1a in 2.0f64..399.0, dr in 0.0f64..1.0) {
            let ga = AnnulusGeometry::new(1.0, r1a, 400.0, 30.0, 0.0).unwrap();
            let gb = AnnulusGeometry::new(1.0, r1a + dr, 400.0, 30.0, 0.0).unwrap();
            prop_assert!(b2(&gb) >= b2(&ga));
        }
    }
}
