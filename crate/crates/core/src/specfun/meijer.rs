//! Univariate and bivariate Meijer G-functions on top of the contour engine.
//!
//! `G^{m,n}_{p,q}(x | a; b) = (1/2πi) ∫ Π_{j≤m} Γ(b_j − s) Π_{j≤n} Γ(1 − a_j + s)
//!   / (Π_{j>m} Γ(1 − b_j + s) Π_{j>n} Γ(a_j − s)) x^s ds`.

use crate::error::{domain, Result};
use crate::specfun::mellin::{
    fox_h_multivariate, ContourConfig, FoxHMultivarSpec, GammaFactorGroup, GammaTerm,
    QuadratureResult, Sign,
};

/// Order and parameter block of a Meijer kernel in one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct MeijerBlock {
    pub m: usize,
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl MeijerBlock {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if m > b.len() {
            return Err(domain("m", format!("{m} exceeds q = {}", b.len())));
        }
        if n > a.len() {
            return Err(domain("n", format!("{n} exceeds p = {}", a.len())));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(domain("a, b", "parameters must be finite"));
        }
        Ok(Self { m, n, a, b })
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    /// The gamma factors of the kernel as a single-fold group.
    pub fn factors(&self) -> GammaFactorGroup {
        let mut g = GammaFactorGroup::new();
        for (j, &b) in self.b.iter().enumerate() {
            g = if j < self.m {
                g.num(GammaTerm::minus(b))
            } else {
                g.den(GammaTerm::plus(1.0 - b))
            };
        }
        for (j, &a) in self.a.iter().enumerate() {
            g = if j < self.n {
                g.num(GammaTerm::plus(1.0 - a))
            } else {
                g.den(GammaTerm::minus(a))
            };
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeijerGSpec {
    pub block: MeijerBlock,
    pub argument: f64,
}

impl MeijerGSpec {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, argument: f64) -> Result<Self> {
        if !(argument > 0.0 && argument.is_finite()) {
            return Err(domain("argument", format!("{argument} is not positive")));
        }
        Ok(Self {
            block: MeijerBlock::new(m, n, a, b)?,
            argument,
        })
    }

    pub fn to_fox_h(&self) -> FoxHMultivarSpec {
        FoxHMultivarSpec::new(
            vec![self.block.factors()],
            GammaFactorGroup::new(),
            vec![self.argument],
        )
    }
}

/// Univariate Meijer G-function.
pub fn meijer_g(spec: &MeijerGSpec, contour: &ContourConfig) -> Result<QuadratureResult> {
    fox_h_multivariate(&spec.to_fox_h(), contour)
}

/// Coupling block in `s + t`: numerator `Γ(1 − a_j + s + t)` for `j < n`,
/// denominator `Γ(a_j − s − t)` for `j ≥ n` and `Γ(1 − b_j + s + t)` for all `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledBlock {
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CoupledBlock {
    fn factors(&self) -> GammaFactorGroup {
        let mut g = GammaFactorGroup::new();
        for (j, &a) in self.a.iter().enumerate() {
            g = if j < self.n {
                g.num(GammaTerm::sum(1.0 - a, 2))
            } else {
                g.den(GammaTerm::new(a, Sign::Minus, vec![1.0, 1.0]))
            };
        }
        for &b in &self.b {
            g = g.den(GammaTerm::sum(1.0 - b, 2));
        }
        g
    }
}

/// Bivariate Meijer G-function
/// `(2πi)^{-2} ∫∫ φ_0(s + t) φ_1(s) φ_2(t) x^s y^t ds dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateMeijerGSpec {
    pub coupled: CoupledBlock,
    pub first: MeijerBlock,
    pub second: MeijerBlock,
    pub arguments: (f64, f64),
}

impl BivariateMeijerGSpec {
    pub fn new(
        coupled: CoupledBlock,
        first: MeijerBlock,
        second: MeijerBlock,
        arguments: (f64, f64),
    ) -> Result<Self> {
        if coupled.n > coupled.a.len() {
            return Err(domain("coupled.n", "exceeds the number of a-parameters"));
        }
        for (name, x) in [("x", arguments.0), ("y", arguments.1)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(domain(name, format!("{x} is not positive")));
            }
        }
        Ok(Self {
            coupled,
            first,
            second,
            arguments,
        })
    }

    pub fn to_fox_h(&self) -> FoxHMultivarSpec {
        FoxHMultivarSpec::new(
            vec![self.first.factors(), self.second.factors()],
            self.coupled.factors(),
            vec![self.arguments.0, self.arguments.1],
        )
    }
}

/// Bivariate Meijer G-function by two-fold contour quadrature.
pub fn bivariate_meijer_g(
    spec: &BivariateMeijerGSpec,
    contour: &ContourConfig,
) -> Result<QuadratureResult> {
    fox_h_multivariate(&spec.to_fox_h(), contour)
}
