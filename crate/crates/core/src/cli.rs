//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for usage and configuration errors and 2
//! when a solver fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::liouvillian::steady_state;
use crate::model::{Chirality, Coupling};
use crate::protocol::{critical_deviation, run_two_detections, DeviationAxis, Mixture};
use crate::sweep::{self, format_value, linspace, Axis, Metadata, SweepKind, SweepTable};
use crate::switch::{find_switch, switch_curve, SwitchPoint};

#[derive(Parser, Debug)]
#[command(name = "chiral-switch", version, about = "Enantiomer-selective switch in cyclic three-level molecules")]
struct Cli {
    /// TOML configuration file or preset name (baseline, medium, large).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Resolution override for every sweep axis.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// No progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig1ab,
    Fig1cd,
    Fig1ef,
    Fig2b,
    Fig2cd,
    Fig2ef,
}

impl From<Figure> for SweepKind {
    fn from(f: Figure) -> Self {
        match f {
            Figure::Fig1ab => SweepKind::Fig1ab,
            Figure::Fig1cd => SweepKind::Fig1cd,
            Figure::Fig1ef => SweepKind::Fig1ef,
            Figure::Fig2b => SweepKind::Fig2b,
            Figure::Fig2cd => SweepKind::Fig2cd,
            Figure::Fig2ef => SweepKind::Fig2ef,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Hand {
    Left,
    Right,
}

impl From<Hand> for Chirality {
    fn from(h: Hand) -> Self {
        match h {
            Hand::Left => Chirality::Left,
            Hand::Right => Chirality::Right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    Amplitude,
    Phase,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steady-state density matrix of both enantiomers.
    Steady {
        /// |Ω21| override.
        #[arg(long)]
        omega21: Option<f64>,
        /// Ω21 phase override in degrees.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
    },
    /// Switch point that silences one enantiomer.
    Switch {
        #[arg(long, value_enum)]
        silenced: Option<Hand>,
    },
    /// Switch point along the configured detuning grid.
    Curve {
        #[arg(long, value_enum)]
        silenced: Option<Hand>,
    },
    /// Figure data.
    Sweep {
        #[arg(value_enum)]
        figure: Figure,
    },
    /// Two-detection enantiomeric-excess estimate at the switch point.
    Ee {
        #[arg(long)]
        n_left: Option<f64>,
        #[arg(long)]
        n_right: Option<f64>,
    },
    /// Critical amplitude and phase deviations at the switch point.
    Robust {
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
}

fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        1
    } else {
        2
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if args.len() <= 1 {
        let _ = writeln!(stderr, "{}", <Cli as clap::CommandFactory>::command().render_help());
        return 1;
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::resolve(cli.config.as_deref())?;
    if let Some(n) = cli.grid {
        cfg.sweep = cfg.sweep.with_grid(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cli: &Cli, text: &str, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            if !cli.quiet {
                let _ = writeln!(stderr, "wrote {}", path.display());
            }
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Error::InvalidConfig(format!("stdout: {e}")))?,
    }
    Ok(())
}

/// `key,value` lines for CSV output, a JSON object otherwise.
fn record<T: Serialize>(cli: &Cli, value: &T) -> String {
    let json = serde_json::to_value(value).expect("records serialize");
    match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json).expect("records serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from("key,value\n");
            flatten("", &json, &mut out);
            out
        }
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Number(n) => {
            let text = n.as_f64().filter(|_| n.is_f64()).map_or(n.to_string(), format_value);
            out.push_str(&format!("{prefix},{text}\n"));
        }
        Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
        other => out.push_str(&format!("{prefix},{other}\n")),
    }
}

fn configured_switch(cfg: &Config, silenced: Chirality) -> Result<SwitchPoint> {
    let d = &cfg.drives;
    find_switch(d.omega31, d.omega32, d.delta, &cfg.decoherence, &cfg.equilibrium, silenced)
}

#[derive(Serialize)]
struct SteadyRecord {
    chirality: Chirality,
    rho21_re: f64,
    rho21_im: f64,
    rho21_abs: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    rho31_re: f64,
    rho31_im: f64,
    rho32_re: f64,
    rho32_im: f64,
}

#[derive(Serialize)]
struct EeRecord {
    n_left: f64,
    n_right: f64,
    ee_true: f64,
    ee_estimate: f64,
    e_d1: f64,
    e_d2: f64,
    omega0: f64,
    phi0_deg: f64,
}

#[derive(Serialize)]
struct RobustRecord {
    target_eta: f64,
    omega0: f64,
    phi0_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    domega_rel_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dphi_c_deg: Option<f64>,
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let text = match &cli.command {
        Command::Steady { omega21, phi, delta } => {
            let mut d = cfg.drives;
            d.omega21 = Coupling::new(
                omega21.unwrap_or(d.omega21.amplitude),
                phi.unwrap_or(d.omega21.phase_deg),
            );
            d.delta = delta.unwrap_or(d.delta);
            d.validate()?;
            let mut records = Vec::new();
            for q in Chirality::BOTH {
                let rho = steady_state(&d, &cfg.decoherence, q)?;
                let [p1, p2, p3] = rho.populations();
                records.push(SteadyRecord {
                    chirality: q,
                    rho21_re: rho.rho21().re,
                    rho21_im: rho.rho21().im,
                    rho21_abs: rho.rho21().norm(),
                    p1,
                    p2,
                    p3,
                    rho31_re: rho.get(2, 0).re,
                    rho31_im: rho.get(2, 0).im,
                    rho32_re: rho.get(2, 1).re,
                    rho32_im: rho.get(2, 1).im,
                });
            }
            match cli.format {
                Format::Json => record(cli, &records),
                Format::Csv => {
                    let mut out = String::new();
                    for r in &records {
                        let json = serde_json::to_value(r).expect("records serialize");
                        flatten(&r.chirality.to_string(), &json, &mut out);
                    }
                    format!("key,value\n{out}")
                }
            }
        }
        Command::Switch { silenced } => {
            let q = silenced.map_or(cfg.switch.silenced, Chirality::from);
            record(cli, &configured_switch(&cfg, q)?)
        }
        Command::Curve { silenced } => {
            let q = silenced.map_or(cfg.sweep.curve_silenced, Chirality::from);
            let table = curve_table(&cfg, q)?;
            render(cli, &table)
        }
        Command::Sweep { figure } => {
            let kind = SweepKind::from(*figure);
            if !cli.quiet {
                let _ = writeln!(stderr, "running {kind}");
            }
            let table = sweep::run(kind, &cfg)?;
            render(cli, &table)
        }
        Command::Ee { n_left, n_right } => {
            let mix = Mixture::new(
                n_left.unwrap_or(cfg.mixture.n_left),
                n_right.unwrap_or(cfg.mixture.n_right),
            )?;
            let p = configured_switch(&cfg, cfg.switch.silenced)?;
            let r = run_two_detections(&mix, &p, &cfg.drives, &cfg.decoherence, cfg.robustness.summation)?;
            record(
                cli,
                &EeRecord {
                    n_left: mix.n_left,
                    n_right: mix.n_right,
                    ee_true: mix.ee(),
                    ee_estimate: r.ee_estimate,
                    e_d1: r.e_d1,
                    e_d2: r.e_d2,
                    omega0: p.omega0,
                    phi0_deg: p.phi0_deg,
                },
            )
        }
        Command::Robust { target, axis } => {
            let target = target.unwrap_or(cfg.robustness.target_eta);
            if !(target > 0.0 && target.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "target must be positive, got {target}"
                )));
            }
            let p = configured_switch(&cfg, cfg.switch.silenced)?;
            let crit = |a| critical_deviation(a, target, &p, &cfg.drives, &cfg.decoherence);
            let want = |a: AxisArg| axis.is_none_or(|x| x == a);
            let domega_rel_c = if want(AxisArg::Amplitude) {
                Some(crit(DeviationAxis::Amplitude)?)
            } else {
                None
            };
            let dphi_c_deg = if want(AxisArg::Phase) {
                Some(crit(DeviationAxis::Phase)?)
            } else {
                None
            };
            record(
                cli,
                &RobustRecord {
                    target_eta: target,
                    omega0: p.omega0,
                    phi0_deg: p.phi0_deg,
                    domega_rel_c,
                    dphi_c_deg,
                },
            )
        }
    };
    emit(cli, &text, stdout, stderr)
}

fn render(cli: &Cli, table: &SweepTable) -> String {
    match cli.format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn curve_table(cfg: &Config, silenced: Chirality) -> Result<SweepTable> {
    let s = &cfg.sweep;
    let deltas = linspace(s.delta_min, s.delta_max, s.delta_points);
    let d = &cfg.drives;
    let curve = switch_curve(&deltas, d.omega31, d.omega32, &cfg.decoherence, &cfg.equilibrium, silenced)?;
    let rows = curve
        .iter()
        .map(|c| match &c.outcome {
            Ok(p) => vec![c.delta, p.omega0, p.phi0_deg, p.residual, 1.0],
            Err(_) => vec![c.delta, f64::NAN, f64::NAN, f64::NAN, 0.0],
        })
        .collect();
    Ok(SweepTable {
        name: "curve".into(),
        axes: vec![Axis {
            name: "delta".into(),
            unit: "2pi MHz".into(),
            values: deltas,
        }],
        columns: ["delta", "omega0", "phi0_deg", "residual", "converged"]
            .iter()
            .map(|c| c.to_string())
            .collect(),
        rows,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            sweep: "curve".into(),
            derived: [("silenced_sign".to_string(), silenced.sign())].into(),
            config: cfg.clone(),
        },
    })
}
