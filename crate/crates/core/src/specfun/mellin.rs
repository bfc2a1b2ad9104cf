//! N-fold Mellin-Barnes contour quadrature.
//!
//! An integral is described by a [`FoxHMultivarSpec`]: per-fold gamma products in
//! one variable `s_i` each, an outer gamma product coupling all variables, and one
//! power `x_i^(±s_i)` per fold. The value returned is
//!
//! ```text
//! (2πi)^(-N) ∫…∫ Π Γ(num) / Π Γ(den) · Π x_i^(σ_i s_i) ds_1 … ds_N
//! ```
//!
//! along vertical lines `Re s_i = c_i`. Each line is sampled with a trapezoid rule
//! in `u`, where `t = a_i sinh(u)`, and the step is halved until two consecutive
//! grids agree.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::gamma::ln_gamma_fast;

/// Largest number of folds evaluated directly.
pub const FOLD_LIMIT: usize = 4;

const TRAILING_SMALL: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `Γ(shift + sign · Σ coeffs_i s_i)`. Missing trailing coefficients are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaTerm {
    pub coeffs: Vec<f64>,
    pub shift: f64,
    pub sign: Sign,
}

impl GammaTerm {
    pub fn new(shift: f64, sign: Sign, coeffs: Vec<f64>) -> Self {
        Self {
            coeffs,
            shift,
            sign,
        }
    }

    /// `Γ(shift + s)` in a single fold variable.
    pub fn plus(shift: f64) -> Self {
        Self::new(shift, Sign::Plus, vec![1.0])
    }

    /// `Γ(shift − s)` in a single fold variable.
    pub fn minus(shift: f64) -> Self {
        Self::new(shift, Sign::Minus, vec![1.0])
    }

    /// `Γ(shift + s_1 + … + s_n)`.
    pub fn sum(shift: f64, n: usize) -> Self {
        Self::new(shift, Sign::Plus, vec![1.0; n])
    }

    fn slope(&self, i: usize) -> f64 {
        self.sign.value() * self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    fn slopes(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.slope(i)).collect()
    }
}

/// Numerator and denominator gamma factors of an integrand.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GammaFactorGroup {
    pub numerator: Vec<GammaTerm>,
    pub denominator: Vec<GammaTerm>,
}

impl GammaFactorGroup {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, term: GammaTerm) -> Self {
        self.numerator.push(term);
        self
    }

    pub fn den(mut self, term: GammaTerm) -> Self {
        self.denominator.push(term);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.numerator.is_empty() && self.denominator.is_empty()
    }
}

/// Symbolic N-fold Mellin-Barnes integral.
#[derive(Clone, Debug, PartialEq)]
pub struct FoxHMultivarSpec {
    pub outer: GammaFactorGroup,
    pub per_fold: Vec<GammaFactorGroup>,
    pub arguments: Vec<f64>,
    pub exponent_signs: Vec<Sign>,
    /// Logarithm of a constant factor applied to the integrand, so large gamma
    /// normalisations cancel before exponentiation.
    pub ln_scale: f64,
}

impl FoxHMultivarSpec {
    /// Spec with every argument raised to `+s_i`.
    pub fn new(
        per_fold: Vec<GammaFactorGroup>,
        outer: GammaFactorGroup,
        arguments: Vec<f64>,
    ) -> Self {
        let n = per_fold.len();
        Self {
            outer,
            per_fold,
            arguments,
            exponent_signs: vec![Sign::Plus; n],
            ln_scale: 0.0,
        }
    }

    /// Multiplies the integral by `exp(ln_scale)`.
    pub fn with_ln_scale(mut self, ln_scale: f64) -> Self {
        self.ln_scale = ln_scale;
        self
    }

    pub fn folds(&self) -> usize {
        self.per_fold.len()
    }
}

/// How contour abscissae are picked when none are given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnchorRule {
    /// Midpoint of each fold's pole-free strip.
    Midpoint,
    /// Coordinate-wise minimisation of the integrand magnitude inside the
    /// feasible region, starting from the given anchors or the midpoints.
    Balanced,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourConfig {
    pub anchors: Option<Vec<f64>>,
    pub anchor_rule: AnchorRule,
    /// Hard cap on `|Im s_i|`.
    pub half_height: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_nodes_per_fold: usize,
    /// Sum only half of the grid and use the conjugate symmetry of the integrand.
    pub hermitian: bool,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self {
            anchors: None,
            anchor_rule: AnchorRule::Midpoint,
            half_height: 2000.0,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_nodes_per_fold: 8192,
            hermitian: true,
        }
    }
}

impl ContourConfig {
    pub fn balanced() -> Self {
        Self {
            anchor_rule: AnchorRule::Balanced,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_anchors(mut self, anchors: Vec<f64>) -> Self {
        self.anchors = Some(anchors);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes_used: usize,
    pub converged: bool,
    /// Imaginary part of the full-grid sum; zero when the half grid is used.
    pub imag_residue: f64,
    pub anchors: Vec<f64>,
}

struct Term {
    shift: f64,
    slopes: Vec<f64>,
}

struct Prepared {
    n: usize,
    fold_num: Vec<Vec<(f64, f64)>>,
    fold_den: Vec<Vec<(f64, f64)>>,
    outer_num: Vec<Term>,
    outer_den: Vec<Term>,
    ln_x: Vec<f64>,
    ln_scale: f64,
    /// All pole constraints as `shift + slopes · c > 0`.
    constraints: Vec<Term>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ContourSeparation(msg.into())
}

impl Prepared {
    fn new(spec: &FoxHMultivarSpec) -> Result<Self> {
        let n = spec.folds();
        if n == 0 {
            return Err(Error::Domain {
                field: "folds".into(),
                reason: "at least one fold required".into(),
            });
        }
        if n > FOLD_LIMIT {
            return Err(Error::FoldLimitExceeded {
                folds: n,
                limit: FOLD_LIMIT,
            });
        }
        if spec.arguments.len() != n || spec.exponent_signs.len() != n {
            return Err(Error::Domain {
                field: "arguments".into(),
                reason: format!("expected {n} arguments and exponent signs"),
            });
        }
        if let Some(x) = spec
            .arguments
            .iter()
            .find(|x| !(**x > 0.0 && x.is_finite()))
        {
            return Err(Error::Domain {
                field: "arguments".into(),
                reason: format!("{x} is not a positive finite real"),
            });
        }
        if !spec.ln_scale.is_finite() {
            return Err(Error::Domain {
                field: "ln_scale".into(),
                reason: "must be finite".into(),
            });
        }
        let mut constraints = Vec::new();
        let mut fold_num = Vec::with_capacity(n);
        let mut fold_den = Vec::with_capacity(n);
        for (i, group) in spec.per_fold.iter().enumerate() {
            let mut num = Vec::new();
            for t in &group.numerator {
                if t.coeffs.len() > 1 {
                    return Err(invalid(format!("fold {i} term couples several variables")));
                }
                let k = t.slope(0);
                num.push((t.shift, k));
                let mut slopes = vec![0.0; n];
                slopes[i] = k;
                constraints.push(Term {
                    shift: t.shift,
                    slopes,
                });
            }
            let den = group
                .denominator
                .iter()
                .map(|t| (t.shift, t.slope(0)))
                .collect();
            fold_num.push(num);
            fold_den.push(den);
        }
        let outer_num: Vec<Term> = spec
            .outer
            .numerator
            .iter()
            .map(|t| Term {
                shift: t.shift,
                slopes: t.slopes(n),
            })
            .collect();
        for t in &outer_num {
            constraints.push(Term {
                shift: t.shift,
                slopes: t.slopes.clone(),
            });
        }
        let outer_den = spec
            .outer
            .denominator
            .iter()
            .map(|t| Term {
                shift: t.shift,
                slopes: t.slopes(n),
            })
            .collect();
        let ln_x = spec
            .arguments
            .iter()
            .zip(&spec.exponent_signs)
            .map(|(x, s)| s.value() * x.ln())
            .collect();
        Ok(Self {
            n,
            fold_num,
            fold_den,
            outer_num,
            outer_den,
            ln_x,
            ln_scale: spec.ln_scale,
            constraints,
        })
    }

    /// Pole-free strip of fold `i` from its own numerator factors.
    fn fold_strip(&self, i: usize) -> Result<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &(shift, k) in &self.fold_num[i] {
            if k > 0.0 {
                lo = lo.max(-shift / k);
            } else if k < 0.0 {
                hi = hi.min(shift / -k);
            } else if shift <= 0.0 && shift == shift.round() {
                return Err(invalid(format!("fold {i} has a constant factor at a pole")));
            }
        }
        if lo >= hi {
            return Err(invalid(format!(
                "fold {i}: left poles reach {lo}, right poles start at {hi}"
            )));
        }
        Ok((lo, hi))
    }

    fn midpoints(&self) -> Result<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.fold_strip(i)?;
                Ok(match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 0.5,
                    (false, true) => hi - 0.5,
                    (false, false) => 0.0,
                })
            })
            .collect()
    }

    fn check_feasible(&self, c: &[f64]) -> Result<()> {
        for t in &self.constraints {
            let arg = t.shift + dot(&t.slopes, c);
            if !(arg > 0.0) {
                return Err(invalid(format!(
                    "anchors {c:?} put a numerator gamma argument at {arg}"
                )));
            }
        }
        Ok(())
    }

    /// Feasible interval for coordinate `i` with the others held at `c`.
    fn coordinate_interval(&self, c: &[f64], i: usize) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for t in &self.constraints {
            let k = t.slopes[i];
            if k == 0.0 {
                continue;
            }
            let rest = t.shift + dot(&t.slopes, c) - k * c[i];
            if k > 0.0 {
                lo = lo.max(-rest / k);
            } else {
                hi = hi.min(rest / -k);
            }
        }
        (lo, hi)
    }

    fn fold_log(&self, i: usize, s: Complex64) -> Complex64 {
        let mut acc = s * self.ln_x[i];
        for &(shift, k) in &self.fold_num[i] {
            acc += ln_gamma_fast(s * k + shift);
        }
        for &(shift, k) in &self.fold_den[i] {
            acc -= ln_gamma_fast(s * k + shift);
        }
        acc
    }

    fn outer_log(&self, args_num: &[Complex64], args_den: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in args_num {
            acc += ln_gamma_fast(*a);
        }
        for a in args_den {
            acc -= ln_gamma_fast(*a);
        }
        acc
    }

    fn full_log(&self, s: &[Complex64]) -> Complex64 {
        let mut acc: Complex64 = (0..self.n).map(|i| self.fold_log(i, s[i])).sum();
        for t in &self.outer_num {
            acc += ln_gamma_fast(cdot(&t.slopes, s) + t.shift);
        }
        for t in &self.outer_den {
            acc -= ln_gamma_fast(cdot(&t.slopes, s) + t.shift);
        }
        acc
    }

    fn objective(&self, c: &[f64]) -> f64 {
        let s0: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let s1: Vec<Complex64> = c.iter().map(|&x| Complex64::new(x, 0.5)).collect();
        let a = self.full_log(&s0).re;
        let b = self.full_log(&s1).re;
        let m = a.max(b);
        if m == f64::INFINITY {
            return m;
        }
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + ((a - m).exp() + (b - m).exp()).ln()
    }

    fn balance(&self, start: Vec<f64>) -> Vec<f64> {
        let mut c = start;
        for _sweep in 0..3 {
            for i in 0..self.n {
                let (lo, hi) = self.coordinate_interval(&c, i);
                let lo = if lo.is_finite() { lo } else { c[i] - 40.0 };
                let hi = if hi.is_finite() { hi } else { c[i] + 40.0 };
                let width = hi - lo;
                if !(width > 0.0) {
                    continue;
                }
                let margin = (0.02 * width).clamp(1e-3, 0.25).min(0.25 * width);
                let (a, b) = (lo + margin, hi - margin);
                let mut trial = c.clone();
                let mut f = |x: f64| {
                    trial[i] = x;
                    self.objective(&trial)
                };
                let best = golden_min(&mut f, a, b, 48);
                if f(best) <= f(c[i]) {
                    c[i] = best;
                }
            }
        }
        c
    }

    /// Sinh-map scale for fold `i`: distance to the nearest pole constraint.
    fn scale(&self, c: &[f64], i: usize) -> f64 {
        let (lo, hi) = self.coordinate_interval(c, i);
        let d = (c[i] - lo).min(hi - c[i]);
        d.clamp(1e-3, 1.0)
    }

    /// Exponential growth rate of the outer factors along fold `i`. Terms are
    /// grouped by direction, so a numerator and a denominator in the same
    /// linear form cancel.
    fn growth_rate(&self, i: usize) -> f64 {
        let mut dirs: Vec<(Vec<f64>, f64)> = Vec::new();
        let terms = self
            .outer_den
            .iter()
            .map(|t| (t, 1.0))
            .chain(self.outer_num.iter().map(|t| (t, -1.0)));
        for (t, sign) in terms {
            let Some(lead) = t.slopes.iter().copied().find(|v| *v != 0.0) else {
                continue;
            };
            let dir: Vec<f64> = t.slopes.iter().map(|v| v / lead).collect();
            let weight = sign * lead.abs();
            match dirs
                .iter_mut()
                .find(|(d, _)| d.iter().zip(&dir).all(|(a, b)| (a - b).abs() < 1e-12))
            {
                Some(entry) => entry.1 += weight,
                None => dirs.push((dir, weight)),
            }
        }
        dirs.iter()
            .filter(|(_, net)| *net > 0.0)
            .map(|(d, net)| 0.5 * PI * net * d[i].abs())
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cdot(a: &[f64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| y * *x).sum()
}

fn golden_min<F: FnMut(f64) -> f64>(f: &mut F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

struct FoldGrid {
    /// Trapezoid index `k` (signed); parity drives the coarse sub-grid.
    index: Vec<i64>,
    s: Vec<Complex64>,
    /// `log(weight) + fold log-integrand`.
    log_term: Vec<Complex64>,
    /// Real envelope used for pruning.
    envelope: Vec<f64>,
    peak: f64,
    truncated: bool,
}

fn build_fold(
    p: &Prepared,
    i: usize,
    anchor: f64,
    scale: f64,
    h: f64,
    cfg: &ContourConfig,
    half: bool,
) -> FoldGrid {
    let growth = p.growth_rate(i);
    let ln_tail = (cfg.rel_tol * 1e-3).ln();
    let mut positive = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    let mut small = 0;
    let mut truncated = false;
    let max_k = if half {
        cfg.max_nodes_per_fold
    } else {
        cfg.max_nodes_per_fold / 2
    };
    for k in 0..max_k as i64 {
        let u = k as f64 * h;
        let t = scale * u.sinh();
        if t > cfg.half_height {
            truncated = true;
            break;
        }
        let w = scale * h * u.cosh();
        let s = Complex64::new(anchor, t);
        let lf = p.fold_log(i, s);
        let env = lf.re + w.ln() + growth * t;
        positive.push((k, s, lf + w.ln(), env));
        let env_neg = if half {
            env
        } else {
            let sn = Complex64::new(anchor, -t);
            let lfn = p.fold_log(i, sn);
            let e = lfn.re + w.ln() + growth * t;
            if k > 0 {
                positive.push((-k, sn, lfn + w.ln(), e));
            }
            e
        };
        let e = env.max(env_neg);
        if e > peak {
            peak = e;
        }
        if e < peak + ln_tail || !e.is_finite() {
            small += 1;
            if small >= TRAILING_SMALL {
                truncated = true;
                break;
            }
        } else {
            small = 0;
        }
    }
    positive.sort_by_key(|v| v.0);
    let mut grid = FoldGrid {
        index: Vec::with_capacity(positive.len()),
        s: Vec::with_capacity(positive.len()),
        log_term: Vec::with_capacity(positive.len()),
        envelope: Vec::with_capacity(positive.len()),
        peak,
        truncated,
    };
    for (k, s, lt, env) in positive {
        grid.index.push(k);
        grid.s.push(s);
        grid.log_term.push(lt);
        grid.envelope.push(env);
    }
    grid
}

struct Sums {
    fine: Complex64,
    coarse: Complex64,
    count: usize,
    /// Set when a retained node overflowed.
    overflow: bool,
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    p: &Prepared,
    grids: &[FoldGrid],
    depth: usize,
    acc_log: Complex64,
    acc_env: f64,
    even: bool,
    args_num: &mut Vec<Vec<Complex64>>,
    args_den: &mut Vec<Vec<Complex64>>,
    rest_peak: &[f64],
    cutoff: f64,
    out: &mut Sums,
) {
    let grid = &grids[depth];
    for j in 0..grid.s.len() {
        let env = acc_env + grid.envelope[j];
        if env + rest_peak[depth + 1] < cutoff {
            continue;
        }
        let s = grid.s[j];
        let log = acc_log + grid.log_term[j];
        let ev = even && grid.index[j] % 2 == 0;
        for (ti, t) in p.outer_num.iter().enumerate() {
            args_num[depth + 1][ti] = args_num[depth][ti] + s * t.slopes[depth];
        }
        for (ti, t) in p.outer_den.iter().enumerate() {
            args_den[depth + 1][ti] = args_den[depth][ti] + s * t.slopes[depth];
        }
        if depth + 1 == grids.len() {
            let total = log + p.outer_log(&args_num[depth + 1], &args_den[depth + 1]) + p.ln_scale;
            let v = total.exp();
            if v.re.is_finite() && v.im.is_finite() {
                out.fine += v;
                if ev {
                    out.coarse += v;
                }
            } else if !total.re.is_nan() && total.re > 0.0 {
                out.overflow = true;
            }
            out.count += 1;
        } else {
            accumulate(
                p,
                grids,
                depth + 1,
                log,
                env,
                ev,
                args_num,
                args_den,
                rest_peak,
                cutoff,
                out,
            );
        }
    }
}

fn grid_sum(p: &Prepared, grids: &[FoldGrid], cfg: &ContourConfig) -> Sums {
    let n = grids.len();
    let mut rest_peak = vec![0.0; n + 1];
    for i in (0..n).rev() {
        rest_peak[i] = rest_peak[i + 1] + grids[i].peak;
    }
    let cutoff = rest_peak[0] + (cfg.rel_tol * 1e-4).ln();
    let base_num: Vec<Complex64> = p
        .outer_num
        .iter()
        .map(|t| Complex64::new(t.shift, 0.0))
        .collect();
    let base_den: Vec<Complex64> = p
        .outer_den
        .iter()
        .map(|t| Complex64::new(t.shift, 0.0))
        .collect();
    let g0 = &grids[0];
    let partials: Vec<Sums> = (0..g0.s.len())
        .into_par_iter()
        .map(|j| {
            let mut out = Sums {
                fine: Complex64::new(0.0, 0.0),
                coarse: Complex64::new(0.0, 0.0),
                count: 0,
                overflow: false,
            };
            let env = g0.envelope[j];
            if env + rest_peak[1] < cutoff {
                return out;
            }
            let s = g0.s[j];
            let mut args_num = vec![base_num.clone(); n + 1];
            let mut args_den = vec![base_den.clone(); n + 1];
            for (ti, t) in p.outer_num.iter().enumerate() {
                args_num[1][ti] = base_num[ti] + s * t.slopes[0];
            }
            for (ti, t) in p.outer_den.iter().enumerate() {
                args_den[1][ti] = base_den[ti] + s * t.slopes[0];
            }
            let even = g0.index[j] % 2 == 0;
            if n == 1 {
                let total = g0.log_term[j] + p.outer_log(&args_num[1], &args_den[1]) + p.ln_scale;
                let v = total.exp();
                if v.re.is_finite() && v.im.is_finite() {
                    out.fine += v;
                    if even {
                        out.coarse += v;
                    }
                } else if !total.re.is_nan() && total.re > 0.0 {
                    out.overflow = true;
                }
                out.count += 1;
            } else {
                accumulate(
                    p,
                    grids,
                    1,
                    g0.log_term[j],
                    env,
                    even,
                    &mut args_num,
                    &mut args_den,
                    &rest_peak,
                    cutoff,
                    &mut out,
                );
            }
            // the half grid stores k >= 0 on fold 0 only; k > 0 stands for ±k
            if cfg.hermitian && g0.index[j] > 0 {
                out.fine = Complex64::new(2.0 * out.fine.re, 0.0);
                out.coarse = Complex64::new(2.0 * out.coarse.re, 0.0);
            } else if cfg.hermitian {
                out.fine = Complex64::new(out.fine.re, 0.0);
                out.coarse = Complex64::new(out.coarse.re, 0.0);
            }
            out
        })
        .collect();
    let mut total = Sums {
        fine: Complex64::new(0.0, 0.0),
        coarse: Complex64::new(0.0, 0.0),
        count: 0,
        overflow: false,
    };
    for s in partials {
        total.fine += s.fine;
        total.coarse += s.coarse;
        total.count += s.count;
        total.overflow |= s.overflow;
    }
    total.coarse *= 2f64.powi(n as i32);
    total
}

/// Resolve the contour abscissae for `spec` under `cfg`.
pub fn resolve_anchors(spec: &FoxHMultivarSpec, cfg: &ContourConfig) -> Result<Vec<f64>> {
    let p = Prepared::new(spec)?;
    anchors_for(&p, cfg)
}

fn anchors_for(p: &Prepared, cfg: &ContourConfig) -> Result<Vec<f64>> {
    let start = match &cfg.anchors {
        Some(a) => {
            if a.len() != p.n {
                return Err(invalid(format!(
                    "expected {} anchors, got {}",
                    p.n,
                    a.len()
                )));
            }
            a.clone()
        }
        None => p.midpoints()?,
    };
    for i in 0..p.n {
        p.fold_strip(i)?;
    }
    p.check_feasible(&start)?;
    let c = match cfg.anchor_rule {
        AnchorRule::Midpoint => start,
        AnchorRule::Balanced => p.balance(start),
    };
    p.check_feasible(&c)?;
    Ok(c)
}

/// Evaluate an N-fold Mellin-Barnes integral.
pub fn fox_h_multivariate(
    spec: &FoxHMultivarSpec,
    cfg: &ContourConfig,
) -> Result<QuadratureResult> {
    let p = Prepared::new(spec)?;
    let anchors = anchors_for(&p, cfg)?;
    let scales: Vec<f64> = (0..p.n).map(|i| p.scale(&anchors, i)).collect();
    let norm = (2.0 * PI).powi(p.n as i32);
    let mut h = 0.5;
    let mut best: Option<QuadratureResult> = None;
    let mut nodes_used = 0usize;
    loop {
        let grids: Vec<FoldGrid> = (0..p.n)
            .map(|i| {
                build_fold(
                    &p,
                    i,
                    anchors[i],
                    scales[i],
                    h,
                    cfg,
                    cfg.hermitian && i == 0,
                )
            })
            .collect();
        let all_truncated = grids.iter().all(|g| g.truncated);
        let sums = grid_sum(&p, &grids, cfg);
        nodes_used += sums.count;
        let value = if sums.overflow {
            f64::NAN
        } else {
            sums.fine.re / norm
        };
        let coarse = sums.coarse.re / norm;
        let err = (value - coarse).abs();
        let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
        let converged = all_truncated && err <= tol && value.is_finite() && h < 0.5;
        let result = QuadratureResult {
            value,
            error_estimate: err,
            nodes_used,
            converged,
            imag_residue: if cfg.hermitian {
                0.0
            } else {
                sums.fine.im / norm
            },
            anchors: anchors.clone(),
        };
        let longest = grids.iter().map(|g| g.s.len()).max().unwrap_or(0);
        if converged || 2 * longest > cfg.max_nodes_per_fold || h < 1e-4 {
            return Ok(if converged {
                result
            } else {
                match best {
                    Some(b) if b.error_estimate < result.error_estimate && b.value.is_finite() => {
                        QuadratureResult { nodes_used, ..b }
                    }
                    _ => result,
                }
            });
        }
        best = Some(result);
        h *= 0.5;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_fold(num: Vec<GammaTerm>, den: Vec<GammaTerm>, x: f64) -> FoxHMultivarSpec {
        FoxHMultivarSpec::new(
            vec![GammaFactorGroup {
                numerator: num,
                denominator: den,
            }],
            GammaFactorGroup::new(),
            vec![x],
        )
    }

    #[test]
    fn exponential_kernel() {
        // (1/2πi) ∫ Γ(−s) x^s ds = e^{−x}
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            let spec = one_fold(vec![GammaTerm::minus(0.0)], vec![], x);
            let r = fox_h_multivariate(&spec, &ContourConfig::default()).unwrap();
            assert!(r.converged);
            assert!((r.value - (-x).exp()).abs() < 1e-11, "x={x}: {}", r.value);
        }
    }

    #[test]
    fn binomial_kernel() {
        // (1/2πi) ∫ Γ(−s) Γ(a+s) x^s ds = Γ(a) (1+x)^{−a}
        let a = 2.0;
        for &x in &[0.2, 1.0, 5.0] {
            let spec = one_fold(vec![GammaTerm::minus(0.0), GammaTerm::plus(a)], vec![], x);
            let r = fox_h_multivariate(&spec, &ContourConfig::default()).unwrap();
            let want = (1.0 + x).powf(-a);
            assert!(
                (r.value - want).abs() < 1e-11,
                "x={x}: {} vs {want}",
                r.value
            );
        }
    }

    #[test]
    fn separable_two_fold_is_product() {
        let f1 = GammaFactorGroup::new().num(GammaTerm::minus(0.0));
        let f2 = GammaFactorGroup::new()
            .num(GammaTerm::minus(0.0))
            .num(GammaTerm::plus(1.5));
        let spec = FoxHMultivarSpec::new(vec![f1, f2], GammaFactorGroup::new(), vec![0.7, 2.0]);
        let r = fox_h_multivariate(&spec, &ContourConfig::default()).unwrap();
        let want = (-0.7f64).exp() * crate::specfun::gamma::gamma(1.5) * 3f64.powf(-1.5);
        assert!((r.value / want - 1.0).abs() < 1e-9, "{} vs {want}", r.value);
    }

    #[test]
    fn full_grid_imaginary_residue_small() {
        let spec = one_fold(
            vec![GammaTerm::minus(0.0), GammaTerm::plus(2.0)],
            vec![],
            1.0,
        );
        let cfg = ContourConfig {
            hermitian: false,
            ..ContourConfig::default()
        };
        let r = fox_h_multivariate(&spec, &cfg).unwrap();
        assert!((r.value - 0.25).abs() < 1e-11);
        assert!(r.imag_residue.abs() < 1e-12);
    }

    #[test]
    fn cancelling_outer_pair() {
        // the outer pair cancels, leaving e^{−x} e^{−y}
        let f = |shift| GammaFactorGroup::new().num(GammaTerm::minus(shift));
        let outer = GammaFactorGroup::new()
            .num(GammaTerm::sum(3.0, 2))
            .den(GammaTerm::sum(3.0, 2));
        let spec = FoxHMultivarSpec::new(vec![f(0.0), f(0.0)], outer, vec![0.5, 1.5]);
        let r = fox_h_multivariate(&spec, &ContourConfig::default()).unwrap();
        assert!((r.value - (-2.0f64).exp()).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn coupled_sum_of_exponentials() {
        // CDF of a sum of two unit exponentials, 1 − e^{−z}(1 + z), written as
        // (2πi)^{-2} ∫∫ Γ(s1)Γ(1−s1)Γ(s2)Γ(1−s2) z^{s1+s2} / Γ(1+s1+s2)
        let f = GammaFactorGroup::new()
            .num(GammaTerm::plus(0.0))
            .num(GammaTerm::minus(1.0));
        let outer = GammaFactorGroup::new().den(GammaTerm::sum(1.0, 2));
        for &z in &[0.3, 1.0, 4.0] {
            let spec = FoxHMultivarSpec::new(vec![f.clone(), f.clone()], outer.clone(), vec![z, z]);
            let r = fox_h_multivariate(&spec, &ContourConfig::default()).unwrap();
            let want = 1.0 - (-z).exp() * (1.0 + z);
            assert!(
                (r.value - want).abs() < 1e-9,
                "z={z}: {} vs {want}",
                r.value
            );
        }
    }

    #[test]
    fn coupled_numerators_offset_denominator_growth() {
        // Γ(1−s+t)/Γ(2−s+t) is algebraic; reference from a direct 2-D trapezoid sum
        // (step 0.05, |Im| ≤ 60) on Re s = 0.75, Re t = 0.25
        let fs = GammaFactorGroup::new()
            .num(GammaTerm::minus(5.0))
            .num(GammaTerm::plus(5.0))
            .den(GammaTerm::plus(1.0));
        let ft = GammaFactorGroup::new()
            .num(GammaTerm::plus(0.0))
            .num(GammaTerm::plus(3.0))
            .num(GammaTerm::minus(3.0));
        let outer = GammaFactorGroup::new()
            .num(GammaTerm::new(0.0, Sign::Plus, vec![1.0, -1.0]))
            .num(GammaTerm::new(1.0, Sign::Plus, vec![-1.0, 1.0]))
            .den(GammaTerm::new(2.0, Sign::Plus, vec![-1.0, 1.0]));
        let spec = FoxHMultivarSpec::new(vec![fs, ft], outer, vec![0.0889, 6.75]);
        let r = fox_h_multivariate(
            &spec,
            &ContourConfig::default().with_anchors(vec![0.75, 0.25]),
        )
        .unwrap();
        assert!(
            (r.value / 60.41663777257354 - 1.0).abs() < 1e-9,
            "{}",
            r.value
        );
    }

    #[test]
    fn rejects_overlapping_strips() {
        // Γ(s − 1) needs c > 1, Γ(0.5 − s) needs c < 0.5
        let spec = one_fold(
            vec![GammaTerm::plus(-1.0), GammaTerm::minus(0.5)],
            vec![],
            1.0,
        );
        assert!(matches!(
            fox_h_multivariate(&spec, &ContourConfig::default()),
            Err(Error::ContourSeparation(_))
        ));
    }

    #[test]
    fn rejects_too_many_folds() {
        let f = GammaFactorGroup::new().num(GammaTerm::minus(0.0));
        let spec = FoxHMultivarSpec::new(vec![f; 5], GammaFactorGroup::new(), vec![1.0; 5]);
        assert!(matches!(
            fox_h_multivariate(&spec, &ContourConfig::default()),
            Err(Error::FoldLimitExceeded { folds: 5, limit: 4 })
        ));
    }

    #[test]
    fn balanced_anchor_handles_large_argument() {
        let spec = one_fold(
            vec![GammaTerm::minus(0.0), GammaTerm::plus(3.0)],
            vec![],
            1e6,
        );
        let cfg = ContourConfig::balanced().with_tolerances(1e-10, 0.0);
        let r = fox_h_multivariate(&spec, &cfg).unwrap();
        let want = 2.0 * (1.0 + 1e6f64).powf(-3.0);
        assert!((r.value / want - 1.0).abs() < 1e-8, "{} vs {want}", r.value);
    }
}
