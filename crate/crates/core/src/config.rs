//! TOML configuration files.
//!
//! Powers, gains and path-loss intercepts are written in dB and converted to
//! linear values once, when a file is loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::SecrecyParams;
use crate::channel::{AntennaPattern, FadingTable, Scenario, ScenarioConfig};
use crate::error::{domain, Error, Result};
use crate::fading::FisherFParams;
use crate::geometry::{
    AnnulusGeometry, BlockageCoupling, BlockageModel, DistanceCoupling, PathLossParams,
};
use crate::montecarlo::McConfig;

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "RIS_PLS_THREADS";

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub beta_max: f64,
    pub noise_db: f64,
    pub power_db: f64,
    pub scenario: Scenario,
    pub blockage_coupling: BlockageCoupling,
    pub distance_coupling: DistanceCoupling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub d_ur: f64,
    pub density_lambda: f64,
    pub b1: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub c_l1_db: f64,
    pub c_l2_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSection {
    pub g_main_db: f64,
    pub g_side_db: f64,
    pub theta_c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaSection {
    pub user: PatternSection,
    pub eve: PatternSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementFading {
    pub m: f64,
    pub m_s: f64,
    pub gamma_bar_db: f64,
}

/// Fading of one link. `elements`, when present, lists per-element parameters
/// and replaces the i.i.d. triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFading {
    pub m: f64,
    pub m_s: f64,
    pub gamma_bar_db: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<ElementFading>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingSection {
    pub user: LinkFading,
    pub eve: LinkFading,
    pub bs_ris: LinkFading,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecrecySection {
    pub r_t: f64,
    pub z_th_db: f64,
    pub e_reg: f64,
    pub pnsc_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub trials: u64,
    pub seed: u64,
    pub batch_size: u64,
    /// Defaults to the available parallelism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// The file form of a configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub system: SystemSection,
    pub geometry: GeometrySection,
    pub antenna: AntennaSection,
    pub fading: FadingSection,
    pub secrecy: SecrecySection,
    pub mc: McSection,
}

/// A validated configuration in linear units.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedConfig {
    pub scenario: ScenarioConfig,
    pub secrecy: SecrecyParams,
    pub mc: McConfig,
}

impl Default for LoadedConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::reference(),
            secrecy: SecrecyParams::default(),
            mc: McConfig::default(),
        }
    }
}

fn pattern_section(p: &AntennaPattern) -> PatternSection {
    PatternSection {
        g_main_db: linear_to_db(p.g_main),
        g_side_db: linear_to_db(p.g_side),
        theta_c: p.theta_c,
    }
}

fn link_fading(t: &FadingTable) -> LinkFading {
    let el = |p: &FisherFParams| ElementFading {
        m: p.m,
        m_s: p.m_s,
        gamma_bar_db: linear_to_db(p.gamma_bar),
    };
    let first = el(&t.params[0]);
    LinkFading {
        m: first.m,
        m_s: first.m_s,
        gamma_bar_db: first.gamma_bar_db,
        elements: if t.params.len() > 1 {
            t.params.iter().map(el).collect()
        } else {
            Vec::new()
        },
    }
}

impl LinkFading {
    fn table(&self, name: &str) -> Result<FadingTable> {
        let build = |m: f64, m_s: f64, db: f64| {
            FisherFParams::new(m, m_s, db_to_linear(db)).map_err(|e| domain(name, e.to_string()))
        };
        let params = if self.elements.is_empty() {
            vec![build(self.m, self.m_s, self.gamma_bar_db)?]
        } else {
            self.elements
                .iter()
                .map(|e| build(e.m, e.m_s, e.gamma_bar_db))
                .collect::<Result<_>>()?
        };
        Ok(FadingTable { params })
    }
}

impl ConfigFile {
    /// File form of a configuration.
    pub fn from_loaded(c: &LoadedConfig) -> Self {
        let s = &c.scenario;
        Self {
            system: SystemSection {
                k: s.k,
                m: s.m,
                l: s.l,
                beta_max: s.beta_max,
                noise_db: linear_to_db(s.sigma_n_sq),
                power_db: linear_to_db(s.p_un),
                scenario: s.scenario,
                blockage_coupling: s.blockage_coupling,
                distance_coupling: s.distance_coupling,
            },
            geometry: GeometrySection {
                r0: s.geometry.r0,
                r1: s.geometry.r1,
                r2: s.geometry.r2,
                d_ur: s.geometry.d_ur,
                density_lambda: s.geometry.density_lambda,
                b1: s.blockage.b1,
                alpha1: s.path_loss.alpha1,
                alpha2: s.path_loss.alpha2,
                c_l1_db: linear_to_db(s.path_loss.c_l1),
                c_l2_db: linear_to_db(s.path_loss.c_l2),
            },
            antenna: AntennaSection {
                user: pattern_section(&s.pattern_user),
                eve: pattern_section(&s.pattern_eve),
            },
            fading: FadingSection {
                user: link_fading(&s.fading_user),
                eve: link_fading(&s.fading_eve),
                bs_ris: link_fading(&s.fading_bs_ris),
            },
            secrecy: SecrecySection {
                r_t: c.secrecy.r_t,
                z_th_db: linear_to_db(c.secrecy.z_th),
                e_reg: c.secrecy.e_reg,
                pnsc_ratio: c.secrecy.pnsc_ratio,
            },
            mc: McSection {
                trials: c.mc.trials,
                seed: c.mc.master_seed,
                batch_size: c.mc.batch_size,
                workers: None,
            },
        }
    }

    /// Converts to linear units and validates every field.
    pub fn resolve(&self) -> Result<LoadedConfig> {
        let (sys, geo) = (&self.system, &self.geometry);
        let pattern = |p: &PatternSection, name: &str| {
            AntennaPattern::new(
                db_to_linear(p.g_main_db),
                db_to_linear(p.g_side_db),
                p.theta_c,
            )
            .map_err(|e| domain(name, e.to_string()))
        };
        let scenario = ScenarioConfig {
            k: sys.k,
            m: sys.m,
            l: sys.l,
            beta_max: sys.beta_max,
            sigma_n_sq: db_to_linear(sys.noise_db),
            p_un: db_to_linear(sys.power_db),
            path_loss: PathLossParams::new(
                geo.alpha1,
                geo.alpha2,
                db_to_linear(geo.c_l1_db),
                db_to_linear(geo.c_l2_db),
            )?,
            geometry: AnnulusGeometry::new(geo.r0, geo.r1, geo.r2, geo.d_ur, geo.density_lambda)?,
            blockage: BlockageModel::new(geo.b1)?,
            pattern_user: pattern(&self.antenna.user, "antenna.user")?,
            pattern_eve: pattern(&self.antenna.eve, "antenna.eve")?,
            fading_user: self.fading.user.table("fading.user")?,
            fading_eve: self.fading.eve.table("fading.eve")?,
            fading_bs_ris: self.fading.bs_ris.table("fading.bs_ris")?,
            scenario: sys.scenario,
            blockage_coupling: sys.blockage_coupling,
            distance_coupling: sys.distance_coupling,
        };
        scenario.validate()?;
        let sec = &self.secrecy;
        let mut secrecy = SecrecyParams::new(sec.r_t, db_to_linear(sec.z_th_db))?;
        secrecy.e_reg = sec.e_reg;
        secrecy.pnsc_ratio = sec.pnsc_ratio;
        secrecy.validate()?;
        let mc = McConfig {
            trials: self.mc.trials,
            master_seed: self.mc.seed,
            batch_size: self.mc.batch_size,
            workers: resolve_workers(self.mc.workers),
        };
        mc.validate()?;
        Ok(LoadedConfig {
            scenario,
            secrecy,
            mc,
        })
    }

    /// Sets one named parameter, in file units.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let count = || -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(domain(name, format!("{value} is not a count")))
            }
        };
        match name {
            "power_db" => self.system.power_db = value,
            "noise_db" => self.system.noise_db = value,
            "k" => self.system.k = count()?,
            "m" => self.system.m = count()?,
            "l" => self.system.l = count()?,
            "beta_max" => self.system.beta_max = value,
            "alpha1" => self.geometry.alpha1 = value,
            "alpha2" => self.geometry.alpha2 = value,
            "b1" => self.geometry.b1 = value,
            "theta_c" => {
                self.antenna.user.theta_c = value;
                self.antenna.eve.theta_c = value;
            }
            "eve_theta_c" => self.antenna.eve.theta_c = value,
            "user_gamma_bar_db" => self.fading.user.gamma_bar_db = value,
            "eve_gamma_bar_db" => self.fading.eve.gamma_bar_db = value,
            "r_t" => self.secrecy.r_t = value,
            "z_th_db" => self.secrecy.z_th_db = value,
            _ => return Err(domain("parameter", format!("`{name}` cannot be swept"))),
        }
        Ok(())
    }
}

/// Names accepted by [`ConfigFile::set`].
pub const SWEEPABLE: [&str; 15] = [
    "power_db",
    "noise_db",
    "k",
    "m",
    "l",
    "beta_max",
    "alpha1",
    "alpha2",
    "b1",
    "theta_c",
    "eve_theta_c",
    "user_gamma_bar_db",
    "eve_gamma_bar_db",
    "r_t",
    "z_th_db",
];

fn defaults() -> ConfigFile {
    ConfigFile::from_loaded(&LoadedConfig::default())
}

impl Default for ConfigFile {
    fn default() -> Self {
        defaults()
    }
}

impl Default for SystemSection {
    fn default() -> Self {
        defaults().system
    }
}

impl Default for GeometrySection {
    fn default() -> Self {
        defaults().geometry
    }
}

impl Default for AntennaSection {
    fn default() -> Self {
        defaults().antenna
    }
}

impl Default for FadingSection {
    fn default() -> Self {
        defaults().fading
    }
}

impl Default for SecrecySection {
    fn default() -> Self {
        defaults().secrecy
    }
}

impl Default for McSection {
    fn default() -> Self {
        defaults().mc
    }
}

/// Worker count: the request (or the available parallelism), capped by `RIS_PLS_THREADS`.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    let base =
        requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

/// Parses the file form without resolving it.
pub fn parse_config_file(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    parse_config_file(text)?.resolve()
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn emit_config(c: &LoadedConfig) -> String {
    toml::to_string(&ConfigFile::from_loaded(c)).expect("config serializes")
}
