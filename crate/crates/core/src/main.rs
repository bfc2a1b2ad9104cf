use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ris_secrecy::analytic::{evaluate, Metric, MetricMethod};
use ris_secrecy::channel::Scenario;
use ris_secrecy::config::{parse_config_file, ConfigFile, LoadedConfig};
use ris_secrecy::figures::{reproduce, Figure};
use ris_secrecy::montecarlo::estimate_all;
use ris_secrecy::sweep::{
    evaluate_point, parse_methods, render_svg, rows_to_csv, run_sweep, series_by_method,
    write_atomic, ResultRow, SweepSpec,
};
use ris_secrecy::Error;

/// Secrecy metrics of RIS-aided MIMO downlinks under F fading.
#[derive(Parser, Debug)]
#[command(name = "ris-secrecy", version)]
struct Cli {
    /// TOML configuration file (defaults to the reference setting).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed of the Monte-Carlo engine.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo trials per point.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Comma-separated methods: exact, approx, asymptotic, foxh, mc.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Output file (eval, sweep) or directory (reproduce).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the CSV output.
    #[arg(long, global = true)]
    svg: bool,
    /// Fill the wall_ms column.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one metric at one configuration.
    Eval {
        /// op, sop, pnsc or asr.
        #[arg(long)]
        metric: String,
    },
    /// Run the sweep described by a sweep file.
    Sweep {
        /// TOML file with a [sweep] table and optional configuration tables.
        spec: PathBuf,
    },
    /// Compare analytic values with Monte Carlo over a grid of powers and scenarios.
    Validate,
    /// Recompute one of the performance figures and check its structure.
    Reproduce {
        /// fig3, fig4, fig5, fig6 or fig7.
        figure: String,
    },
}

enum Failure {
    Config(String),
    Numeric(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain { .. } => Failure::Config(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Other(e.to_string())
}

fn read_file(path: &Path) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config_file(&text).map_err(Failure::from)
}

impl Cli {
    fn apply(&self, mut file: ConfigFile) -> ConfigFile {
        if let Some(s) = self.seed {
            file.mc.seed = s;
        }
        if let Some(t) = self.trials {
            file.mc.trials = t;
        }
        file
    }

    fn base(&self) -> Result<ConfigFile, Failure> {
        let file = match &self.config {
            Some(p) => read_file(p)?,
            None => ConfigFile::default(),
        };
        Ok(self.apply(file))
    }

    fn methods(&self, default: &str) -> Result<Vec<MetricMethod>, Failure> {
        parse_methods(self.method.as_deref().unwrap_or(default)).map_err(Failure::from)
    }

    fn svg_path(&self) -> Result<Option<PathBuf>, Failure> {
        match (&self.out, self.svg) {
            (_, false) => Ok(None),
            (Some(p), true) => Ok(Some(p.with_extension("svg"))),
            (None, true) => Err(Failure::Config("--svg needs --out".into())),
        }
    }

    fn emit(&self, csv: &str) -> Result<(), Failure> {
        match &self.out {
            Some(p) => write_atomic(p, csv).map_err(io),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    }
}

/// Exit status from the NA pattern of a run.
fn row_status(rows: &[ResultRow]) -> u8 {
    let na = rows.iter().filter(|r| r.is_na()).count();
    if rows.is_empty() || na == 0 {
        0
    } else if na == rows.len() {
        3
    } else {
        4
    }
}

fn report_na(rows: &[ResultRow]) {
    for r in rows.iter().filter(|r| r.is_na()) {
        eprintln!(
            "NA {} {} at {}: {}",
            r.metric,
            r.method,
            r.swept_value.map_or("-".into(), |v| v.to_string()),
            r.flags.join(";")
        );
    }
}

fn run_eval(cli: &Cli, metric: &str) -> Result<u8, Failure> {
    let metric: Metric = metric.parse()?;
    let methods = cli.methods("approx")?;
    let cfg = cli.base()?.resolve()?;
    let rows = evaluate_point(&cfg, metric, &methods, None);
    cli.emit(&rows_to_csv(&rows, cli.timing, None))?;
    report_na(&rows);
    Ok(row_status(&rows))
}

fn run_sweep_cmd(cli: &Cli, spec_path: &Path) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| Failure::Config(format!("{}: {e}", spec_path.display())))?;
    let (mut spec, inline) = SweepSpec::parse_file(&text)?;
    let base = match &cli.config {
        Some(p) => {
            if inline != ConfigFile::default() {
                return Err(Failure::Config(
                    "configuration given both inline and with --config".into(),
                ));
            }
            cli.apply(read_file(p)?)
        }
        None => cli.apply(inline),
    };
    if cli.method.is_some() {
        spec.methods = cli.methods("approx")?;
        spec.validate()?;
    }
    let svg = cli.svg_path()?;
    let workers = base.resolve()?.mc.workers;
    let rows = run_sweep(&spec, &base, workers)?;
    cli.emit(&rows_to_csv(&rows, cli.timing, None))?;
    if let Some(path) = svg {
        let plot = render_svg(
            &format!("{} sweep", spec.metric),
            &spec.parameter,
            spec.metric.name(),
            &series_by_method(&rows),
            spec.metric != Metric::Asr,
        );
        write_atomic(&path, &plot).map_err(io)?;
    }
    report_na(&rows);
    Ok(row_status(&rows))
}

fn tolerance(metric: Metric, reference: f64, stderr: f64) -> f64 {
    match metric {
        Metric::Op => 0.005f64.max(3.0 * stderr),
        Metric::Sop | Metric::Pnsc => 0.01f64.max(3.0 * stderr),
        Metric::Asr => (0.05 * reference.abs()).max(0.01),
    }
}

fn run_validate(cli: &Cli) -> Result<u8, Failure> {
    let methods: Vec<MetricMethod> = cli
        .methods("approx")?
        .into_iter()
        .filter(|&m| m != MetricMethod::MonteCarlo)
        .collect();
    let base = cli.base()?;
    println!("scenario,power_db,metric,method,value,mc,stderr,tolerance,status");
    let mut breaches = 0;
    let mut failures = 0;
    let mut total = 0;
    for scenario in [Scenario::Direct, Scenario::Ris] {
        for p in [0.0, 10.0, 20.0, 30.0] {
            let mut file = base.clone();
            file.system.scenario = scenario;
            file.system.power_db = p;
            let cfg: LoadedConfig = file.resolve()?;
            let mc = estimate_all(&cfg.scenario, &cfg.secrecy, &cfg.mc)?;
            for metric in Metric::ALL {
                let reference = mc.get(metric);
                for &method in &methods {
                    if method == MetricMethod::Asymptotic && metric != Metric::Op {
                        continue;
                    }
                    total += 1;
                    let name = format!("{scenario:?},{p},{metric},{method}").to_lowercase();
                    match evaluate(metric, &cfg.scenario, &cfg.secrecy, method) {
                        Ok(r) => {
                            let tol = tolerance(metric, reference.mean, reference.stderr);
                            let ok = (r.value - reference.mean).abs() <= tol;
                            if !ok && method != MetricMethod::Asymptotic {
                                breaches += 1;
                            }
                            println!(
                                "{name},{},{},{},{tol},{}",
                                r.value,
                                reference.mean,
                                reference.stderr,
                                if ok { "ok" } else { "breach" }
                            );
                        }
                        Err(e) => {
                            failures += 1;
                            println!("{name},NA,{},{},,na", reference.mean, reference.stderr);
                            eprintln!("{name}: {e}");
                        }
                    }
                }
            }
        }
    }
    eprintln!("{breaches} tolerance breaches, {failures} unavailable, {total} comparisons");
    Ok(if breaches > 0 {
        1
    } else if failures == total {
        3
    } else if failures > 0 {
        4
    } else {
        0
    })
}

fn run_reproduce(cli: &Cli, figure: &str) -> Result<u8, Failure> {
    let figure: Figure = figure.parse()?;
    let methods = cli.methods("approx")?;
    let base = cli.base()?;
    let workers = base.resolve()?.mc.workers;
    let out = reproduce(figure, &base, &methods, workers)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let csv_path = dir.join(format!("{figure}.csv"));
    write_atomic(
        &csv_path,
        &rows_to_csv(&out.rows, cli.timing, Some(("series", &out.labels))),
    )
    .map_err(io)?;
    if cli.svg {
        write_atomic(&dir.join(format!("{figure}.svg")), &out.svg()).map_err(io)?;
    }
    let mut failed = 0;
    for c in &out.checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        failed += usize::from(!c.passed);
    }
    println!("wrote {}", csv_path.display());
    report_na(&out.rows);
    Ok(if failed > 0 { 1 } else { row_status(&out.rows) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Eval { metric } => run_eval(&cli, metric),
        Command::Sweep { spec } => run_sweep_cmd(&cli, spec),
        Command::Validate => run_validate(&cli),
        Command::Reproduce { figure } => run_reproduce(&cli, figure),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
