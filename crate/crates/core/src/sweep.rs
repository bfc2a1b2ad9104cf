//! Parameter sweeps, CSV output and a small SVG line plotter.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::analytic::{evaluate, Metric, MetricMethod};
use crate::config::{ConfigFile, LoadedConfig, SWEEPABLE};
use crate::error::{domain, Error, Result};
use crate::montecarlo::estimate_all_in_current_pool;

/// CSV header of sweep tables.
pub const CSV_HEADER: [&str; 7] = [
    "swept_value",
    "metric",
    "method",
    "value",
    "stderr",
    "wall_ms",
    "flags",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub metric: Metric,
    pub methods: Vec<MetricMethod>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: String,
    values: Vec<f64>,
    metric: String,
    #[serde(default = "default_methods")]
    methods: Vec<String>,
}

fn default_methods() -> Vec<String> {
    vec!["approx".into()]
}

impl SweepSpec {
    pub fn new(
        parameter: &str,
        values: Vec<f64>,
        metric: Metric,
        methods: Vec<MetricMethod>,
    ) -> Result<Self> {
        let s = Self {
            parameter: parameter.to_string(),
            values,
            metric,
            methods,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !SWEEPABLE.contains(&self.parameter.as_str()) {
            return Err(domain(
                "parameter",
                format!("`{}` cannot be swept", self.parameter),
            ));
        }
        if self.values.is_empty() {
            return Err(domain("values", "need at least one value"));
        }
        if self.methods.is_empty() {
            return Err(domain("methods", "need at least one method"));
        }
        if self.metric != Metric::Op && self.methods.contains(&MetricMethod::Asymptotic) {
            return Err(domain(
                "methods",
                "the asymptotic method applies to op only",
            ));
        }
        Ok(())
    }

    /// Parses a sweep file. The `[sweep]` table holds the spec; any other
    /// tables form the base configuration.
    pub fn parse_file(text: &str) -> Result<(SweepSpec, ConfigFile)> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let section = table
            .remove("sweep")
            .ok_or_else(|| Error::Config("missing [sweep] table".into()))?;
        let section: SweepSection = section
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("[sweep]: {e}")))?;
        let base: ConfigFile = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let spec = SweepSpec::new(
            &section.parameter,
            section.values,
            section.metric.parse()?,
            parse_methods(&section.methods.join(","))?,
        )?;
        Ok((spec, base))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<MetricMethod>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m: MetricMethod = name.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(domain("methods", "empty method list"));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub swept_value: Option<f64>,
    pub metric: Metric,
    pub method: MetricMethod,
    /// `None` when the method failed at this point.
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub wall_ms: Option<f64>,
    pub flags: Vec<String>,
}

impl ResultRow {
    pub fn is_na(&self) -> bool {
        self.value.is_none()
    }

    fn record(&self, timing: bool) -> [String; 7] {
        let num = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        [
            num(self.swept_value),
            self.metric.to_string(),
            self.method.to_string(),
            self.value
                .map_or_else(|| "NA".to_string(), |x| x.to_string()),
            num(self.stderr),
            if timing {
                num(self.wall_ms)
            } else {
                String::new()
            },
            self.flags.join(";"),
        ]
    }
}

/// Evaluates one metric with each method at a single configuration.
pub fn evaluate_point(
    cfg: &LoadedConfig,
    metric: Metric,
    methods: &[MetricMethod],
    swept_value: Option<f64>,
) -> Vec<ResultRow> {
    methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = if method == MetricMethod::MonteCarlo {
                estimate_all_in_current_pool(&cfg.scenario, &cfg.secrecy, &cfg.mc).map(|s| {
                    let e = s.get(metric);
                    (
                        e.mean,
                        Some(e.stderr),
                        vec![format!("trials={}", e.trials_used)],
                    )
                })
            } else {
                evaluate(metric, &cfg.scenario, &cfg.secrecy, method)
                    .map(|r| (r.value, None, r.diagnostics.flags))
            };
            let wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            match outcome {
                Ok((value, stderr, flags)) => ResultRow {
                    swept_value,
                    metric,
                    method,
                    value: Some(value),
                    stderr,
                    wall_ms,
                    flags,
                },
                Err(e) => ResultRow {
                    swept_value,
                    metric,
                    method,
                    value: None,
                    stderr: None,
                    wall_ms,
                    flags: vec![format!("error: {e}")],
                },
            }
        })
        .collect()
}

/// Runs a sweep on a pool of `workers` threads. Rows come back in sweep order,
/// one per (value, method).
pub fn run_sweep(spec: &SweepSpec, base: &ConfigFile, workers: usize) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    base.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<Vec<ResultRow>> = pool.install(|| {
        spec.values
            .par_iter()
            .map(|&v| {
                let mut file = base.clone();
                match file.set(&spec.parameter, v).and_then(|_| file.resolve()) {
                    Ok(cfg) => evaluate_point(&cfg, spec.metric, &spec.methods, Some(v)),
                    Err(e) => spec
                        .methods
                        .iter()
                        .map(|&method| ResultRow {
                            swept_value: Some(v),
                            metric: spec.metric,
                            method,
                            value: None,
                            stderr: None,
                            wall_ms: None,
                            flags: vec![format!("error: {e}")],
                        })
                        .collect(),
                }
            })
            .collect()
    });
    Ok(rows.concat())
}

/// CSV text of the rows. `extra` prepends a leading column to every record.
pub fn rows_to_csv(rows: &[ResultRow], timing: bool, extra: Option<(&str, &[String])>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = Vec::new();
    if let Some((name, _)) = extra {
        header.push(name);
    }
    header.extend(CSV_HEADER);
    w.write_record(&header).expect("in-memory write");
    for (i, row) in rows.iter().enumerate() {
        let mut rec: Vec<String> = Vec::new();
        if let Some((_, labels)) = extra {
            rec.push(labels[i].clone());
        }
        rec.extend(row.record(timing));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Writes `contents` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// One curve of a plot.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Curves of one method per series, taken from sweep rows.
pub fn series_by_method(rows: &[ResultRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let (Some(x), Some(y)) = (r.swept_value, r.value) else {
            continue;
        };
        let label = r.method.to_string();
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x, y)),
            None => out.push(Series {
                label,
                points: vec![(x, y)],
            }),
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|k| k * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

/// A minimal SVG line chart. With `log_y` the vertical axis is logarithmic and
/// non-positive values are dropped.
pub fn render_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_y: bool,
) -> String {
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (80.0, 180.0, 40.0, 60.0);
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|p| !log_y || p.1 > 0.0)
        .map(|(x, y)| (x, ty(y)))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| {
        pts.iter().map(sel).fold(init, f)
    };
    let (mut x0, mut x1) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.0),
    );
    let (mut y0, mut y1) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.1),
    );
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    } else if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in nice_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
            top + ph,
            top + ph + 16.0,
            t
        );
    }
    let yticks: Vec<f64> = if log_y {
        (y0 as i64..=y1 as i64).map(|k| k as f64).collect()
    } else {
        nice_ticks(y0, y1)
    };
    for t in yticks {
        let y = sy(t);
        let label = if log_y {
            format!("1e{t}")
        } else {
            format!("{t}")
        };
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{label}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| !log_y || p.1 > 0.0)
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(ty(y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
            path.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::estimate_op;

    fn small_mc(file: &mut ConfigFile) {
        file.mc.trials = 4000;
        file.mc.batch_size = 500;
        file.mc.seed = 3;
    }

    #[test]
    fn single_point_mc_matches_estimator() {
        let mut base = ConfigFile::default();
        small_mc(&mut base);
        let spec = SweepSpec::new(
            "power_db",
            vec![20.0],
            Metric::Op,
            vec![MetricMethod::MonteCarlo],
        )
        .unwrap();
        let rows = run_sweep(&spec, &base, 2).unwrap();
        assert_eq!(rows.len(), 1);
        let cfg = base.resolve().unwrap();
        let want = estimate_op(&cfg.scenario, &cfg.secrecy, &cfg.mc).unwrap();
        assert_eq!(rows[0].value, Some(want.mean));
        assert_eq!(rows[0].stderr, Some(want.stderr));
    }

    #[test]
    fn failures_become_na_rows() {
        let mut base = ConfigFile::default();
        base.system.scenario = crate::channel::Scenario::Ris;
        let spec = SweepSpec::new(
            "power_db",
            vec![0.0, 10.0],
            Metric::Op,
            vec![MetricMethod::Exact, MetricMethod::Approx],
        )
        .unwrap();
        let rows = run_sweep(&spec, &base, 2).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].is_na() && rows[2].is_na());
        assert!(!rows[1].is_na() && !rows[3].is_na());
        let csv = rows_to_csv(&rows, false, None);
        assert!(csv.starts_with("swept_value,metric,method,value,stderr,wall_ms,flags\n"));
        assert!(csv.contains("0,op,exact,NA,,,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn spec_checks() {
        assert!(
            SweepSpec::new("power_db", vec![], Metric::Op, vec![MetricMethod::Approx]).is_err()
        );
        assert!(SweepSpec::new(
            "power_db",
            vec![1.0],
            Metric::Sop,
            vec![MetricMethod::Asymptotic]
        )
        .is_err());
        assert!(SweepSpec::new("nope", vec![1.0], Metric::Op, vec![MetricMethod::Approx]).is_err());
        assert_eq!(
            parse_methods("approx, mc,approx").unwrap(),
            vec![MetricMethod::Approx, MetricMethod::MonteCarlo]
        );
    }

    #[test]
    fn sweep_file_with_base_sections() {
        let text = "[system]\nl = 36\n\n[sweep]\nparameter = \"power_db\"\nvalues = [0, 30]\nmetric = \"asr\"\nmethods = [\"approx\", \"mc\"]\n";
        let (spec, base) = SweepSpec::parse_file(text).unwrap();
        assert_eq!(base.system.l, 36);
        assert_eq!(spec.metric, Metric::Asr);
        assert_eq!(spec.methods.len(), 2);
        assert!(SweepSpec::parse_file(
            "[sweep]\nparameter = \"l\"\nvalues = [1]\nmetric = \"op\"\nbogus = 1\n"
        )
        .is_err());
    }

    #[test]
    fn svg_contains_every_series() {
        let series = vec![
            Series {
                label: "a".into(),
                points: vec![(0.0, 0.5), (10.0, 0.1), (20.0, 0.01)],
            },
            Series {
                label: "b<c".into(),
                points: vec![(0.0, 0.9), (20.0, 0.0)],
            },
        ];
        let svg = render_svg("OP", "p (dB)", "OP", &series, true);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
