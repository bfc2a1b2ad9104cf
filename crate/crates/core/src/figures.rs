//! Reproduction recipes for the five performance figures and the structural
//! properties each one is expected to show.

use std::fmt;
use std::str::FromStr;

use crate::analytic::{Metric, MetricMethod};
use crate::channel::Scenario;
use crate::config::ConfigFile;
use crate::error::{domain, Error, Result};
use crate::sweep::{render_svg, run_sweep, ResultRow, Series, SweepSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// OP versus transmit power.
    Fig3,
    /// OP versus the number of RIS elements.
    Fig4,
    /// SOP versus transmit power for several beamwidths.
    Fig5,
    /// PNSC versus transmit power for several beamwidths.
    Fig6,
    /// ASR versus transmit power for several RIS sizes.
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s.to_ascii_lowercase())
            .ok_or_else(|| domain("figure", format!("unknown figure `{s}`")))
    }
}

/// One curve: a label and the configuration it is computed on.
#[derive(Clone, Debug)]
pub struct Curve {
    pub label: String,
    pub config: ConfigFile,
}

#[derive(Clone, Debug)]
pub struct Recipe {
    pub figure: Figure,
    pub parameter: &'static str,
    pub values: Vec<f64>,
    pub metric: Metric,
    pub curves: Vec<Curve>,
}

fn curve(
    base: &ConfigFile,
    scenario: Scenario,
    l: usize,
    alpha2: f64,
    theta_c: Option<f64>,
) -> Curve {
    let mut c = base.clone();
    c.system.scenario = scenario;
    c.system.k = 4;
    c.system.m = 2;
    c.system.l = l;
    c.geometry.alpha2 = alpha2;
    let mut label = match scenario {
        Scenario::Direct => format!("no_ris_a{alpha2}"),
        Scenario::Ris => format!("ris_l{l}_a{alpha2}"),
        Scenario::RisWithDirect => format!("ris_direct_l{l}_a{alpha2}"),
    };
    if let Some(t) = theta_c {
        c.antenna.eve.theta_c = t;
        label.push_str(&format!("_th{t}"));
    }
    Curve { label, config: c }
}

fn power_grid(step: f64) -> Vec<f64> {
    let n = (30.0 / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Beamwidths (degrees) of the eavesdropper curves in the secrecy figures.
pub const THETA_GRID: [f64; 3] = [15.0, 30.0, 60.0];

impl Recipe {
    pub fn new(figure: Figure, base: &ConfigFile) -> Self {
        let mut base = base.clone();
        base.secrecy.z_th_db = 0.0;
        base.secrecy.r_t = 1.0;
        let (d, r, rd) = (Scenario::Direct, Scenario::Ris, Scenario::RisWithDirect);
        let (parameter, values, metric, curves) = match figure {
            Figure::Fig3 => (
                "power_db",
                power_grid(2.0),
                Metric::Op,
                vec![
                    curve(&base, d, 16, 2.5, None),
                    curve(&base, d, 16, 3.0, None),
                    curve(&base, r, 16, 2.5, None),
                    curve(&base, r, 16, 3.0, None),
                    curve(&base, r, 36, 2.5, None),
                    curve(&base, r, 36, 3.0, None),
                    curve(&base, rd, 36, 3.0, None),
                ],
            ),
            Figure::Fig4 => {
                base.system.power_db = 25.0;
                (
                    "l",
                    vec![
                        1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 20.0, 25.0, 30.0, 36.0, 49.0, 64.0,
                    ],
                    Metric::Op,
                    [(d, 2.5), (d, 3.0), (r, 2.5), (r, 3.0)]
                        .into_iter()
                        .map(|(s, a)| {
                            let mut c = curve(&base, s, 1, a, None);
                            c.label = c.label.replace("_l1_", "_");
                            c
                        })
                        .collect(),
                )
            }
            Figure::Fig5 | Figure::Fig6 => (
                "power_db",
                power_grid(5.0),
                if figure == Figure::Fig5 {
                    Metric::Sop
                } else {
                    Metric::Pnsc
                },
                [d, r]
                    .into_iter()
                    .flat_map(|s| THETA_GRID.map(|t| curve(&base, s, 16, 3.0, Some(t))))
                    .collect(),
            ),
            Figure::Fig7 => (
                "power_db",
                power_grid(5.0),
                Metric::Asr,
                vec![
                    curve(&base, d, 16, 3.0, None),
                    curve(&base, r, 16, 3.0, None),
                    curve(&base, r, 36, 3.0, None),
                    curve(&base, r, 64, 3.0, None),
                ],
            ),
        };
        for c in &curves {
            debug_assert!(c.config.resolve().is_ok(), "{}", c.label);
        }
        Self {
            figure,
            parameter,
            values,
            metric,
            curves,
        }
    }
}

/// Outcome of one structural check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub recipe: Recipe,
    /// Curve label of each row.
    pub labels: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub checks: Vec<Check>,
}

impl FigureOutput {
    pub fn series(&self) -> Vec<Series> {
        let mut out: Vec<Series> = Vec::new();
        for (label, row) in self.labels.iter().zip(&self.rows) {
            let (Some(x), Some(y)) = (row.swept_value, row.value) else {
                continue;
            };
            let name = format!("{label} {}", row.method);
            match out.iter_mut().find(|s| s.label == name) {
                Some(s) => s.points.push((x, y)),
                None => out.push(Series {
                    label: name,
                    points: vec![(x, y)],
                }),
            }
        }
        out
    }

    pub fn svg(&self) -> String {
        let x_label = match self.recipe.parameter {
            "l" => "RIS elements L",
            _ => "transmit power (dB)",
        };
        let metric = self.recipe.metric;
        render_svg(
            &format!("{} {}", self.recipe.figure, metric.name().to_uppercase()),
            x_label,
            &metric.name().to_uppercase(),
            &self.series(),
            metric != Metric::Asr,
        )
    }
}

/// Values of one curve under `method`, `None` where the evaluation failed.
type Curves = Vec<(String, Vec<(f64, Option<f64>)>)>;

fn curves_for(labels: &[String], rows: &[ResultRow], method: MetricMethod) -> Curves {
    let mut out: Curves = Vec::new();
    for (label, row) in labels.iter().zip(rows) {
        if row.method != method {
            continue;
        }
        let x = row.swept_value.unwrap_or(f64::NAN);
        match out.iter_mut().find(|c| &c.0 == label) {
            Some(c) => c.1.push((x, row.value)),
            None => out.push((label.clone(), vec![(x, row.value)])),
        }
    }
    out
}

fn get<'a>(curves: &'a Curves, label: &str) -> &'a [(f64, Option<f64>)] {
    curves
        .iter()
        .find(|c| c.0 == label)
        .map(|c| c.1.as_slice())
        .unwrap_or(&[])
}

/// Absolute slack for comparisons between numerically evaluated values.
const SLACK: f64 = 1e-6;

fn monotone(name: &str, pts: &[(f64, Option<f64>)], increasing: bool, slack: f64) -> Check {
    let mut worst: Option<String> = None;
    for w in pts.windows(2) {
        match (w[0].1, w[1].1) {
            (Some(a), Some(b)) => {
                let bad = if increasing {
                    b < a - slack
                } else {
                    b > a + slack
                };
                if bad && worst.is_none() {
                    worst = Some(format!(
                        "{a:.6e} -> {b:.6e} between {} and {}",
                        w[0].0, w[1].0
                    ));
                }
            }
            _ => {
                worst.get_or_insert_with(|| format!("missing value near {}", w[0].0));
            }
        }
    }
    Check {
        name: name.to_string(),
        passed: worst.is_none() && !pts.is_empty(),
        detail: worst.unwrap_or_else(|| format!("{} points", pts.len())),
    }
}

/// Checks `lo[i] ≤ hi[i]` at every swept value selected by `keep`.
fn ordered(
    name: &str,
    lo: &[(f64, Option<f64>)],
    hi: &[(f64, Option<f64>)],
    keep: impl Fn(f64) -> bool,
    slack: f64,
) -> Check {
    let mut count = 0;
    let mut fail = None;
    for (a, b) in lo.iter().zip(hi) {
        if !keep(a.0) {
            continue;
        }
        count += 1;
        match (a.1, b.1) {
            (Some(x), Some(y)) if x <= y + slack => {}
            (Some(x), Some(y)) => {
                fail.get_or_insert(format!("{x:.6e} > {y:.6e} at {}", a.0));
            }
            _ => {
                fail.get_or_insert(format!("missing value at {}", a.0));
            }
        }
    }
    Check {
        name: name.to_string(),
        passed: fail.is_none() && count > 0,
        detail: fail.unwrap_or_else(|| format!("{count} points")),
    }
}

fn checks(recipe: &Recipe, c: &Curves) -> Vec<Check> {
    let mut out = Vec::new();
    let labels: Vec<&str> = recipe.curves.iter().map(|c| c.label.as_str()).collect();
    match recipe.figure {
        Figure::Fig3 => {
            for l in &labels {
                out.push(monotone(
                    &format!("{l}: OP non-increasing in p"),
                    get(c, l),
                    false,
                    SLACK,
                ));
            }
            out.push(ordered(
                "RIS L=36 (alpha2=3) OP <= no-RIS OP for p >= 20 dB",
                get(c, "ris_l36_a3"),
                get(c, "no_ris_a3"),
                |p| p >= 20.0,
                SLACK,
            ));
            for a in ["2.5", "3"] {
                out.push(ordered(
                    &format!("OP decreases with L at alpha2={a}"),
                    get(c, &format!("ris_l36_a{a}")),
                    get(c, &format!("ris_l16_a{a}")),
                    |_| true,
                    SLACK,
                ));
            }
            out.push(ordered(
                "direct link lowers RIS OP (L=36, alpha2=3)",
                get(c, "ris_direct_l36_a3"),
                get(c, "ris_l36_a3"),
                |_| true,
                SLACK,
            ));
        }
        Figure::Fig4 => {
            for a in ["2.5", "3"] {
                out.push(monotone(
                    &format!("RIS OP non-increasing in L at alpha2={a}"),
                    get(c, &format!("ris_a{a}")),
                    false,
                    SLACK,
                ));
            }
            let (ris, base) = (get(c, "ris_a2.5"), get(c, "no_ris_a2.5"));
            let diff: Vec<Option<f64>> = ris
                .iter()
                .zip(base)
                .map(|(r, b)| Some(r.1? - b.1?))
                .collect();
            let worse = diff.iter().flatten().any(|&d| d > 0.0);
            let better = diff.iter().flatten().any(|&d| d < 0.0);
            let crossing = diff
                .windows(2)
                .zip(ris)
                .find(|(w, _)| matches!((w[0], w[1]), (Some(a), Some(b)) if a > 0.0 && b <= 0.0))
                .map(|(_, r)| r.0);
            out.push(Check {
                name: "crossover between RIS and no-RIS OP at alpha2=2.5".into(),
                passed: worse && better && diff.iter().all(Option::is_some),
                detail: match crossing {
                    Some(l) => format!("RIS overtakes after L = {l}"),
                    None => format!("RIS worse somewhere: {worse}, better somewhere: {better}"),
                },
            });
            let (ris3, base3) = (get(c, "ris_a3"), get(c, "no_ris_a3"));
            out.push(ordered(
                "RIS beats no-RIS at the largest L (alpha2=3)",
                &ris3[ris3.len().saturating_sub(1)..],
                &base3[base3.len().saturating_sub(1)..],
                |_| true,
                0.0,
            ));
        }
        Figure::Fig5 | Figure::Fig6 => {
            let sop = recipe.figure == Figure::Fig5;
            for l in &labels {
                if sop {
                    out.push(monotone(
                        &format!("{l}: SOP non-increasing in p"),
                        get(c, l),
                        false,
                        SLACK,
                    ));
                }
            }
            for s in ["no_ris_a3", "ris_l16_a3"] {
                for w in THETA_GRID.windows(2) {
                    let narrow = get(c, &format!("{s}_th{}", w[0]));
                    let wide = get(c, &format!("{s}_th{}", w[1]));
                    out.push(if sop {
                        ordered(
                            &format!("{s}: SOP(theta_c={}) <= SOP(theta_c={})", w[0], w[1]),
                            narrow,
                            wide,
                            |_| true,
                            SLACK,
                        )
                    } else {
                        ordered(
                            &format!("{s}: PNSC(theta_c={}) <= PNSC(theta_c={})", w[1], w[0]),
                            wide,
                            narrow,
                            |_| true,
                            SLACK,
                        )
                    });
                }
            }
        }
        Figure::Fig7 => {
            for l in &labels {
                let pts = get(c, l);
                let neg = pts.iter().filter_map(|p| p.1).find(|&v| v < 0.0);
                out.push(Check {
                    name: format!("{l}: ASR >= 0"),
                    passed: neg.is_none() && pts.iter().all(|p| p.1.is_some()),
                    detail: neg.map_or_else(|| format!("{} points", pts.len()), |v| format!("{v}")),
                });
                out.push(monotone(
                    &format!("{l}: ASR non-decreasing in p"),
                    pts,
                    true,
                    SLACK,
                ));
            }
            let top = |l: &str| get(c, l).last().copied().into_iter().collect::<Vec<_>>();
            out.push(ordered(
                "ASR grows with L at 30 dB (16 -> 36)",
                &top("ris_l16_a3"),
                &top("ris_l36_a3"),
                |_| true,
                0.0,
            ));
            out.push(ordered(
                "ASR grows with L at 30 dB (36 -> 64)",
                &top("ris_l36_a3"),
                &top("ris_l64_a3"),
                |_| true,
                0.0,
            ));
            out.push(ordered(
                "RIS L=64 beats no-RIS ASR at 30 dB",
                &top("no_ris_a3"),
                &top("ris_l64_a3"),
                |_| true,
                0.0,
            ));
        }
    }
    out
}

/// Computes every curve of `figure` with each method and runs the checks on
/// the first analytic method (Monte Carlo if it is the only one).
pub fn reproduce(
    figure: Figure,
    base: &ConfigFile,
    methods: &[MetricMethod],
    workers: usize,
) -> Result<FigureOutput> {
    let recipe = Recipe::new(figure, base);
    let methods: Vec<MetricMethod> = methods
        .iter()
        .copied()
        .filter(|&m| m != MetricMethod::Asymptotic || recipe.metric == Metric::Op)
        .collect();
    let spec = SweepSpec::new(
        recipe.parameter,
        recipe.values.clone(),
        recipe.metric,
        methods.clone(),
    )?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for c in &recipe.curves {
        let r = run_sweep(&spec, &c.config, workers)?;
        labels.extend(std::iter::repeat_n(c.label.clone(), r.len()));
        rows.extend(r);
    }
    let judge = methods
        .iter()
        .copied()
        .find(|m| !matches!(m, MetricMethod::MonteCarlo | MetricMethod::Asymptotic))
        .unwrap_or(methods[0]);
    let checks = checks(&recipe, &curves_for(&labels, &rows, judge));
    Ok(FigureOutput {
        recipe,
        labels,
        rows,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        assert!("fig9".parse::<Figure>().is_err());
    }

    #[test]
    fn recipes_resolve() {
        for f in Figure::ALL {
            let r = Recipe::new(f, &ConfigFile::default());
            assert!(!r.curves.is_empty());
            for c in &r.curves {
                for &v in &r.values {
                    let mut file = c.config.clone();
                    file.set(r.parameter, v).unwrap();
                    file.resolve().unwrap();
                }
            }
        }
    }

    #[test]
    fn monotone_and_ordered_helpers() {
        let up = [(0.0, Some(0.1)), (1.0, Some(0.2)), (2.0, Some(0.2))];
        assert!(monotone("x", &up, true, 0.0).passed);
        assert!(!monotone("x", &up, false, 0.0).passed);
        let gap = [(0.0, Some(0.1)), (1.0, None)];
        assert!(!monotone("x", &gap, true, 0.0).passed);
        let lo = [(0.0, Some(0.1)), (20.0, Some(0.5))];
        let hi = [(0.0, Some(0.0)), (20.0, Some(0.6))];
        assert!(ordered("x", &lo, &hi, |p| p >= 20.0, 0.0).passed);
        assert!(!ordered("x", &lo, &hi, |_| true, 0.0).passed);
    }

    #[test]
    fn fig7_structure_holds() {
        let out = reproduce(
            Figure::Fig7,
            &ConfigFile::default(),
            &[MetricMethod::Approx],
            4,
        )
        .unwrap();
        assert_eq!(out.rows.len(), 4 * 7);
        for c in &out.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
