//! Monte-Carlo simulation of the downlink and its secrecy metrics.
//!
//! Every trial owns a ChaCha8 stream selected by `(master_seed, trial_index)`,
//! so results do not depend on how trials are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analytic::{Metric, Receiver, SecrecyParams};
use crate::channel::{sinr, LinkKind, ProductSumSampler, ScenarioConfig, SumSampler};
use crate::error::{domain, Error, Result};
use crate::geometry::{b2, branch_laws, BlockageCoupling, DistanceCoupling, DistanceLaw};

/// Smallest number of trials behind any reported estimate.
pub const MIN_TRIALS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub batch_size: u64,
    pub workers: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            master_seed: 2024,
            batch_size: 4096,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::InsufficientTrials {
                needed: MIN_TRIALS as usize,
                got: self.trials as usize,
            });
        }
        if self.batch_size == 0 {
            return Err(domain("batch_size", "must be positive"));
        }
        if self.workers == 0 {
            return Err(domain("workers", "must be positive"));
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }

    fn batches(&self) -> Vec<(u64, u64)> {
        (0..self.trials.div_ceil(self.batch_size))
            .map(|b| {
                let start = b * self.batch_size;
                (start, (start + self.batch_size).min(self.trials))
            })
            .collect()
    }
}

/// The random stream of one trial.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials_used: u64,
}

impl McEstimate {
    fn from_sums(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        Self {
            mean,
            stderr: (var / nf).sqrt(),
            trials_used: n,
        }
    }
}

/// One joint draw of the user and eavesdropper SINRs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trial {
    pub sinr_user: f64,
    pub sinr_eve: f64,
    pub kind: LinkKind,
    pub eve_main_lobe: bool,
}

struct LinkGains {
    direct: SumSampler,
    ris: ProductSumSampler,
}

impl LinkGains {
    fn new(cfg: &ScenarioConfig, rx: Receiver) -> Result<Self> {
        let table = rx.table(cfg);
        Ok(Self {
            direct: SumSampler::new(&cfg.direct_elements(table))?,
            ris: ProductSumSampler::new(&cfg.ris_elements(table))?,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, kind: LinkKind, rng: &mut R) -> f64 {
        match kind {
            LinkKind::LoS | LinkKind::NLoS => self.direct.sample(rng),
            LinkKind::RisReflected => self.ris.sample(rng),
            LinkKind::RisWithDirect => self.direct.sample(rng) + self.ris.sample(rng),
        }
    }
}

/// Precomputed samplers for repeated trials of one configuration.
pub struct TrialSampler {
    cfg: ScenarioConfig,
    user: LinkGains,
    eve: LinkGains,
    laws: (DistanceLaw, DistanceLaw),
    p_los_independent: f64,
    /// Diagnostic mode: the eavesdropper observes exactly the user's SINR.
    pub mirror_eve: bool,
}

impl TrialSampler {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg: cfg.clone(),
            user: LinkGains::new(cfg, Receiver::User)?,
            eve: LinkGains::new(cfg, Receiver::Eve { main_lobe: true })?,
            laws: branch_laws(&cfg.geometry, &cfg.blockage, cfg.blockage_coupling),
            p_los_independent: cfg.blockage.b1 * b2(&cfg.geometry),
            mirror_eve: false,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Trial {
        let cfg = &self.cfg;
        let d = crate::geometry::sample_user_distance(&cfg.geometry, rng);
        let u: f64 = rng.random();
        let los = match cfg.blockage_coupling {
            BlockageCoupling::DistanceGated => u < cfg.blockage.b1 && d <= cfg.geometry.r1,
            BlockageCoupling::Independent => u < self.p_los_independent,
        };
        let kind = if los {
            LinkKind::LoS
        } else {
            cfg.non_los_kind()
        };
        let d_eve = match cfg.distance_coupling {
            DistanceCoupling::Shared => d,
            DistanceCoupling::Independent => {
                let law = if los { &self.laws.0 } else { &self.laws.1 };
                law.sample(rng)
            }
        };
        let eve_main_lobe = rng.random::<f64>() < cfg.pattern_eve.main_lobe_probability();
        let g_eve = if eve_main_lobe {
            cfg.pattern_eve.g_main
        } else {
            cfg.pattern_eve.g_side
        };
        let gain_user = self.user.sample(kind, rng);
        let gain_eve = self.eve.sample(kind, rng);
        let sinr_user = sinr(kind, gain_user, d, cfg, cfg.pattern_user.g_main);
        let sinr_eve = if self.mirror_eve {
            sinr_user
        } else {
            sinr(kind, gain_eve, d_eve, cfg, g_eve)
        };
        Trial {
            sinr_user,
            sinr_eve,
            kind,
            eve_main_lobe,
        }
    }
}

/// One joint draw for `cfg`.
pub fn simulate_trial<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Trial> {
    Ok(TrialSampler::new(cfg)?.draw(rng))
}

/// Estimates of all four metrics from one set of trials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSummary {
    pub op: McEstimate,
    pub sop: McEstimate,
    pub pnsc: McEstimate,
    pub asr: McEstimate,
}

impl McSummary {
    pub fn get(&self, metric: Metric) -> McEstimate {
        match metric {
            Metric::Op => self.op,
            Metric::Sop => self.sop,
            Metric::Pnsc => self.pnsc,
            Metric::Asr => self.asr,
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    op: u64,
    sop: u64,
    pnsc: u64,
    asr: f64,
    asr_sq: f64,
}

/// Outage, secrecy-outage and non-zero-capacity indicators and the secrecy rate of one trial.
pub fn trial_indicators(t: &Trial, secrecy: &SecrecyParams) -> (bool, bool, bool, f64) {
    let (zu, ze) = (t.sinr_user, t.sinr_eve);
    let op = zu < secrecy.z_th;
    let sop = zu <= secrecy.r_s * ze + (secrecy.r_s - 1.0);
    let pnsc = zu > secrecy.pnsc_ratio * ze;
    let rate = ((1.0 + zu).log2() - (1.0 + ze).log2()).max(0.0);
    (op, sop, pnsc, rate)
}

fn run(sampler: &TrialSampler, secrecy: &SecrecyParams, mc: &McConfig) -> Result<McSummary> {
    mc.validate()?;
    mc.pool()?.install(|| run_here(sampler, secrecy, mc))
}

fn run_here(sampler: &TrialSampler, secrecy: &SecrecyParams, mc: &McConfig) -> Result<McSummary> {
    mc.validate()?;
    secrecy.validate()?;
    let tallies: Vec<Tally> = mc
        .batches()
        .into_par_iter()
        .map(|(start, end)| {
            let mut t = Tally::default();
            for i in start..end {
                let trial = sampler.draw(&mut trial_rng(mc.master_seed, i));
                let (op, sop, pnsc, rate) = trial_indicators(&trial, secrecy);
                t.op += op as u64;
                t.sop += sop as u64;
                t.pnsc += pnsc as u64;
                t.asr += rate;
                t.asr_sq += rate * rate;
            }
            t
        })
        .collect();
    let total = tallies.iter().fold(Tally::default(), |a, b| Tally {
        op: a.op + b.op,
        sop: a.sop + b.sop,
        pnsc: a.pnsc + b.pnsc,
        asr: a.asr + b.asr,
        asr_sq: a.asr_sq + b.asr_sq,
    });
    let n = mc.trials;
    let freq = |c: u64| McEstimate::from_sums(c as f64, c as f64, n);
    Ok(McSummary {
        op: freq(total.op),
        sop: freq(total.sop),
        pnsc: freq(total.pnsc),
        asr: McEstimate::from_sums(total.asr, total.asr_sq, n),
    })
}

/// All four metrics from one simulation pass.
pub fn estimate_all(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McSummary> {
    run(&TrialSampler::new(cfg)?, secrecy, mc)
}

/// Same as [`estimate_all`] but runs on the calling thread pool and ignores `mc.workers`.
pub fn estimate_all_in_current_pool(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McSummary> {
    run_here(&TrialSampler::new(cfg)?, secrecy, mc)
}

/// Same as [`estimate_all`] with the eavesdropper forced to see the user's SINR.
pub fn estimate_all_mirrored(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McSummary> {
    let mut s = TrialSampler::new(cfg)?;
    s.mirror_eve = true;
    run(&s, secrecy, mc)
}

pub fn estimate_op(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    Ok(estimate_all(cfg, secrecy, mc)?.op)
}

pub fn estimate_sop(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    Ok(estimate_all(cfg, secrecy, mc)?.sop)
}

pub fn estimate_pnsc(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    Ok(estimate_all(cfg, secrecy, mc)?.pnsc)
}

pub fn estimate_asr(
    cfg: &ScenarioConfig,
    secrecy: &SecrecyParams,
    mc: &McConfig,
) -> Result<McEstimate> {
    Ok(estimate_all(cfg, secrecy, mc)?.asr)
}

/// SINR draws of one link with `d` from `law`, in trial order.
pub fn sinr_samples(
    cfg: &ScenarioConfig,
    kind: LinkKind,
    rx: Receiver,
    law: &DistanceLaw,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    mc.validate()?;
    cfg.validate()?;
    let gains = LinkGains::new(cfg, rx)?;
    let g = rx.antenna_gain(cfg);
    let chunks: Vec<Vec<f64>> = mc.pool()?.install(|| {
        mc.batches()
            .into_par_iter()
            .map(|(start, end)| {
                (start..end)
                    .map(|i| {
                        let mut rng = trial_rng(mc.master_seed, i);
                        let d = law.sample(&mut rng);
                        sinr(kind, gains.sample(kind, &mut rng), d, cfg, g)
                    })
                    .collect()
            })
            .collect()
    });
    Ok(chunks.concat())
}

/// Right-continuous empirical distribution function.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|v| *v <= x) as f64 / self.sorted.len() as f64
    }

    /// Dvoretzky-Kiefer-Wolfowitz half-width at confidence `1 − alpha`.
    pub fn dkw_band(&self, alpha: f64) -> f64 {
        ((2.0 / alpha).ln() / (2.0 * self.sorted.len() as f64)).sqrt()
    }

    /// Kolmogorov distance to a continuous reference CDF.
    pub fn sup_distance(&self, mut reference: impl FnMut(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut worst: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            let f = reference(x);
            worst = worst
                .max((f - i as f64 / n).abs())
                .max(((i + 1) as f64 / n - f).abs());
        }
        worst
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf> {
    if (samples.len() as u64) < MIN_TRIALS {
        return Err(Error::InsufficientTrials {
            needed: MIN_TRIALS as usize,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(domain("samples", "contain NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(EmpiricalCdf { sorted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AntennaPattern;
    use crate::geometry::BlockageModel;

    fn mc(trials: u64, workers: usize) -> McConfig {
        McConfig {
            trials,
            master_seed: 11,
            batch_size: 1000,
            workers,
        }
    }

    #[test]
    fn certain_los_when_ball_covers_annulus() {
        let mut cfg = ScenarioConfig::reference();
        cfg.blockage = BlockageModel::new(1.0).unwrap();
        cfg.geometry.r1 = cfg.geometry.r2;
        let s = TrialSampler::new(&cfg).unwrap();
        for i in 0..2000 {
            assert_eq!(s.draw(&mut trial_rng(1, i)).kind, LinkKind::LoS);
        }
    }

    #[test]
    fn full_beamwidth_is_always_main_lobe() {
        let mut cfg = ScenarioConfig::reference();
        cfg.pattern_eve = AntennaPattern::new(1000.0, 0.1, 180.0).unwrap();
        let s = TrialSampler::new(&cfg).unwrap();
        assert!((0..2000).all(|i| s.draw(&mut trial_rng(2, i)).eve_main_lobe));
    }

    #[test]
    fn los_frequency_matches_geometry() {
        let cfg = ScenarioConfig::reference();
        let s = TrialSampler::new(&cfg).unwrap();
        let n = 100_000;
        let hits = (0..n)
            .filter(|&i| s.draw(&mut trial_rng(3, i)).kind == LinkKind::LoS)
            .count();
        let p = cfg.blockage.b1 * b2(&cfg.geometry);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se);
        assert!((p - 0.1687).abs() < 1e-4);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = ScenarioConfig::reference();
        let s = SecrecyParams::default();
        let a = estimate_all(&cfg, &s, &mc(20_000, 1)).unwrap();
        let b = estimate_all(&cfg, &s, &mc(20_000, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_threshold_never_outage_and_mirror_never_secure() {
        let cfg = ScenarioConfig::reference();
        let s = SecrecyParams {
            z_th: 1e-300,
            ..SecrecyParams::default()
        };
        assert_eq!(estimate_op(&cfg, &s, &mc(5000, 2)).unwrap().mean, 0.0);
        let m = estimate_all_mirrored(&cfg, &SecrecyParams::default(), &mc(5000, 2)).unwrap();
        assert_eq!(m.pnsc.mean, 0.0);
        assert_eq!(m.asr.mean, 0.0);
    }

    #[test]
    fn complement_at_zero_rate_is_exact() {
        let cfg = ScenarioConfig::reference();
        let s = SecrecyParams::default().with_r_t(0.0).unwrap();
        let e = estimate_all(&cfg, &s, &mc(10_000, 4)).unwrap();
        assert_eq!(e.sop.mean + e.pnsc.mean, 1.0);
    }

    #[test]
    fn stderr_halves_with_four_times_the_trials() {
        let cfg = ScenarioConfig::reference();
        let s = SecrecyParams::default();
        let a = estimate_all(&cfg, &s, &mc(20_000, 4)).unwrap();
        let b = estimate_all(&cfg, &s, &mc(80_000, 4)).unwrap();
        let r = a.op.stderr / b.op.stderr;
        assert!((r - 2.0).abs() < 0.4, "{r}");
    }

    #[test]
    fn too_few_trials_rejected() {
        let cfg = ScenarioConfig::reference();
        assert!(matches!(
            estimate_all(&cfg, &SecrecyParams::default(), &mc(999, 1)),
            Err(Error::InsufficientTrials { .. })
        ));
        assert!(empirical_cdf(&[1.0; 10]).is_err());
    }

    #[test]
    fn empirical_cdf_steps_and_dkw() {
        let c = empirical_cdf(&[2.5; 1000]).unwrap();
        assert_eq!(c.eval(2.4999), 0.0);
        assert_eq!(c.eval(2.5), 1.0);
        let mut rng = trial_rng(5, 0);
        let u: Vec<f64> = (0..5000).map(|_| rng.random()).collect();
        let c = empirical_cdf(&u).unwrap();
        assert!(c.sup_distance(|x| x.clamp(0.0, 1.0)) < c.dkw_band(0.01));
    }
}
