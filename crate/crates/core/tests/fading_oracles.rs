use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use ris_secrecy::fading::{f_moment, f_power_cdf, FSampler, FisherFParams};

/// `γ = γ̄ ((m_s − 1) / m_s) X` with `X ~ F(2m, 2m_s)`.
fn reference(p: &FisherFParams) -> (FisherSnedecor, f64) {
    let f = FisherSnedecor::new(2.0 * p.m, 2.0 * p.m_s).unwrap();
    (f, p.gamma_bar * (p.m_s - 1.0) / p.m_s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cdf_matches_snedecor_law(
        m in 0.5f64..12.0,
        m_s in 1.2f64..12.0,
        g in 0.01f64..10.0,
        q in 0.001f64..0.999,
    ) {
        let p = FisherFParams::new(m, m_s, g).unwrap();
        let (f, scale) = reference(&p);
        let x = f.inverse_cdf(q) * scale;
        let got = f_power_cdf(x, &p).unwrap();
        prop_assert!((got - q).abs() < 1e-9, "{got} vs {q}");
    }

    #[test]
    fn mean_is_gamma_bar(m in 0.5f64..12.0, m_s in 1.2f64..12.0, g in 0.01f64..10.0) {
        let p = FisherFParams::new(m, m_s, g).unwrap();
        prop_assert!((f_moment(1, &p).unwrap() - g).abs() < 1e-12 * g);
    }
}

#[test]
fn sampler_passes_ks_against_snedecor_law() {
    let n = 200_000;
    for (i, &(m, m_s, g)) in [
        (5.0, 5.0, 0.1),
        (3.0, 3.0, 0.1),
        (0.8, 2.5, 1.0),
        (9.0, 1.6, 4.0),
    ]
    .iter()
    .enumerate()
    {
        let p = FisherFParams::new(m, m_s, g).unwrap();
        let (f, scale) = reference(&p);
        let sampler = FSampler::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let c = f.cdf(x / scale);
                (c - k as f64 / n as f64).max((k + 1) as f64 / n as f64 - c)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / (n as f64).sqrt(), "{p:?}: D = {d}");
    }
}
