//! Special functions: complex log-gamma, Gauss ₂F₁, incomplete beta and
//! Mellin-Barnes integrals (Meijer G, bivariate Meijer G, multivariate Fox H).

pub mod gamma;
pub mod hyper;
pub mod meijer;
pub mod mellin;

pub use gamma::{complex_log_gamma, gamma, ln_beta, ln_gamma, ln_gamma_fast, polygamma};
pub use hyper::{beta_reg, beta_reg_pair, gauss_2f1};
pub use meijer::{
    bivariate_meijer_g, meijer_g, BivariateMeijerGSpec, CoupledBlock, MeijerBlock, MeijerGSpec,
};
pub use mellin::{
    fox_h_multivariate, resolve_anchors, AnchorRule, ContourConfig, FoxHMultivarSpec,
    GammaFactorGroup, GammaTerm, QuadratureResult, Sign, FOLD_LIMIT,
};
