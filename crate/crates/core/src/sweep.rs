//! Parameter sweeps behind the figure data and their CSV/JSON writers.
//!
//! Rows are ordered lexicographically over the axes, first axis slowest.
//! Evaluation is parallel; the output does not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::liouvillian::steady_state;
use crate::model::{Chirality, Coupling, DecoherenceConfig, DriveConfig};
use crate::protocol::{critical_deviation, relative_error, DeviationAxis};
use crate::switch::{find_switch, switch_curve, SwitchPoint};

/// Written in place of `log10(0)`.
pub const LOG10_ZERO: f64 = -99.0;

/// Environment variable that fixes the worker count.
pub const THREADS_ENV: &str = "CHIRAL_SWITCH_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// log10 |ρ21| of both enantiomers over the (|Ω21|, φ) plane.
    Fig1ab,
    /// |ρ21| along φ at the switch amplitude.
    Fig1cd,
    /// Switch point against detuning for several decoherence regimes.
    Fig1ef,
    /// Relative error over the (δφ, δΩ) plane.
    Fig2b,
    /// Relative error along each deviation axis separately.
    Fig2cd,
    /// Critical deviations against detuning for several decoherence regimes.
    Fig2ef,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::Fig1ab,
        SweepKind::Fig1cd,
        SweepKind::Fig1ef,
        SweepKind::Fig2b,
        SweepKind::Fig2cd,
        SweepKind::Fig2ef,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Fig1ab => "fig1ab",
            SweepKind::Fig1cd => "fig1cd",
            SweepKind::Fig1ef => "fig1ef",
            SweepKind::Fig2b => "fig2b",
            SweepKind::Fig2cd => "fig2cd",
            SweepKind::Fig2ef => "fig2ef",
        }
    }
}

impl std::fmt::Display for SweepKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Axis {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub version: String,
    pub sweep: String,
    /// Scalars computed along the way, such as the switch point used.
    pub derived: BTreeMap<String, f64>,
    pub config: Config,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepTable {
    pub name: String,
    pub axes: Vec<Axis>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: Metadata,
}

/// Twelve significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.11e}")
    }
}

fn round_sig(x: f64) -> Option<f64> {
    if x.is_finite() {
        format_value(x).parse().ok()
    } else {
        None
    }
}

pub fn log10_abs(x: f64) -> f64 {
    if x == 0.0 {
        LOG10_ZERO
    } else {
        x.abs().log10()
    }
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# chiral-switch {}", self.metadata.version);
        let _ = writeln!(out, "# sweep = {}", self.name);
        for a in &self.axes {
            let _ = writeln!(out, "# axis {} [{}] x{}", a.name, a.unit, a.values.len());
        }
        for (k, v) in &self.metadata.derived {
            let _ = writeln!(out, "# {k} = {}", format_value(*v));
        }
        for line in self.metadata.config.to_toml().lines() {
            if line.is_empty() {
                continue;
            }
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format_value(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Values rounded to twelve significant digits; non-finite values become
    /// `null`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            name: &'a str,
            axes: &'a [Axis],
            columns: &'a [String],
            rows: Vec<Vec<Option<f64>>>,
            metadata: &'a Metadata,
        }
        let doc = Doc {
            name: &self.name,
            axes: &self.axes,
            columns: &self.columns,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| round_sig(*x)).collect())
                .collect(),
            metadata: &self.metadata,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("sweep tables serialize");
        s.push('\n');
        s
    }
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// `n` points covering `[lo, lo + span)`.
fn periodic(lo: f64, span: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + span * k as f64 / n as f64).collect()
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be an integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn par_map<T, F>(items: &[T], f: F) -> Result<Vec<Vec<f64>>>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<f64>> + Sync + Send,
{
    items.par_iter().map(f).collect()
}

fn table(
    kind: SweepKind,
    cfg: &Config,
    axes: Vec<Axis>,
    columns: &[&str],
    rows: Vec<Vec<f64>>,
    derived: BTreeMap<String, f64>,
) -> SweepTable {
    SweepTable {
        name: kind.name().into(),
        axes,
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            sweep: kind.name().into(),
            derived,
            config: cfg.clone(),
        },
    }
}

fn configured_switch(cfg: &Config) -> Result<SwitchPoint> {
    let d = &cfg.drives;
    find_switch(
        d.omega31,
        d.omega32,
        d.delta,
        &cfg.decoherence,
        &cfg.equilibrium,
        cfg.switch.silenced,
    )
}

fn switch_metadata(p: &SwitchPoint) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("omega0".to_string(), p.omega0),
        ("phi0_deg".to_string(), p.phi0_deg),
        ("switch_residual".to_string(), p.residual),
        ("silenced_sign".to_string(), p.silenced.sign()),
    ])
}

fn rho21_pair(drives: &DriveConfig, dec: &DecoherenceConfig) -> Result<(f64, f64)> {
    let l = steady_state(drives, dec, Chirality::Left)?.rho21().norm();
    let r = steady_state(drives, dec, Chirality::Right)?.rho21().norm();
    Ok((l, r))
}

pub fn run(kind: SweepKind, cfg: &Config) -> Result<SweepTable> {
    cfg.validate()?;
    let pool = thread_pool()?;
    pool.install(|| match kind {
        SweepKind::Fig1ab => fig1ab(cfg),
        SweepKind::Fig1cd => fig1cd(cfg),
        SweepKind::Fig1ef => fig1ef(cfg),
        SweepKind::Fig2b => fig2b(cfg),
        SweepKind::Fig2cd => fig2cd(cfg),
        SweepKind::Fig2ef => fig2ef(cfg),
    })
}

fn fig1ab(cfg: &Config) -> Result<SweepTable> {
    let s = &cfg.sweep;
    let omegas = linspace(s.omega_min, s.omega_max, s.omega_points);
    let phis = periodic(s.phi_min_deg, s.phi_span_deg, s.phi_points);
    let points: Vec<(f64, f64)> = omegas
        .iter()
        .flat_map(|&o| phis.iter().map(move |&p| (o, p)))
        .collect();
    let rows = par_map(&points, |&(o, p)| {
        let d = cfg.drives.with_omega21(Coupling::new(o, p));
        let (l, r) = rho21_pair(&d, &cfg.decoherence)?;
        Ok(vec![o, p, log10_abs(l), log10_abs(r)])
    })?;
    Ok(table(
        SweepKind::Fig1ab,
        cfg,
        vec![
            Axis::new("omega", "2pi MHz", omegas),
            Axis::new("phi_deg", "deg", phis),
        ],
        &["omega", "phi_deg", "log10_rho21_L", "log10_rho21_R"],
        rows,
        BTreeMap::new(),
    ))
}

fn fig1cd(cfg: &Config) -> Result<SweepTable> {
    let p = configured_switch(cfg)?;
    let phis = periodic(0.0, 360.0, cfg.sweep.line_points);
    let rows = par_map(&phis, |&phi| {
        let d = cfg.drives.with_omega21(Coupling::new(p.omega0, phi));
        let (l, r) = rho21_pair(&d, &cfg.decoherence)?;
        Ok(vec![phi, l, r])
    })?;
    Ok(table(
        SweepKind::Fig1cd,
        cfg,
        vec![Axis::new("phi_deg", "deg", phis)],
        &["phi_deg", "abs_rho21_L", "abs_rho21_R"],
        rows,
        switch_metadata(&p),
    ))
}

fn regime(cfg: &Config, ratio: f64) -> DecoherenceConfig {
    DecoherenceConfig::uniform(ratio * cfg.mean_coupling())
}

fn detunings(cfg: &Config) -> Vec<f64> {
    let s = &cfg.sweep;
    linspace(s.delta_min, s.delta_max, s.delta_points)
}

/// Switch curves for every decoherence regime, each tracked sequentially.
fn curves(cfg: &Config, silenced: Chirality) -> Result<Vec<(f64, f64, Result<SwitchPoint>)>> {
    let deltas = detunings(cfg);
    let per_ratio: Result<Vec<Vec<_>>> = cfg
        .sweep
        .gamma_ratios
        .par_iter()
        .map(|&ratio| {
            let dec = regime(cfg, ratio);
            let curve = switch_curve(
                &deltas,
                cfg.drives.omega31,
                cfg.drives.omega32,
                &dec,
                &cfg.equilibrium,
                silenced,
            )?;
            Ok(curve
                .into_iter()
                .map(|c| (ratio, c.delta, c.outcome))
                .collect())
        })
        .collect();
    Ok(per_ratio?.into_iter().flatten().collect())
}

fn fig1ef(cfg: &Config) -> Result<SweepTable> {
    let rows = curves(cfg, cfg.sweep.curve_silenced)?
        .into_iter()
        .map(|(ratio, delta, outcome)| match outcome {
            Ok(p) => vec![ratio, delta, p.omega0, p.phi0_deg, p.residual, p.surviving_amp, 1.0],
            Err(_) => vec![ratio, delta, f64::NAN, f64::NAN, f64::NAN, f64::NAN, 0.0],
        })
        .collect();
    Ok(table(
        SweepKind::Fig1ef,
        cfg,
        vec![
            Axis::new("gamma_ratio", "1", cfg.sweep.gamma_ratios.clone()),
            Axis::new("delta", "2pi MHz", detunings(cfg)),
        ],
        &[
            "gamma_ratio",
            "delta",
            "omega0",
            "phi0_deg",
            "residual",
            "surviving_abs_rho21",
            "converged",
        ],
        rows,
        BTreeMap::from([("silenced_sign".to_string(), cfg.sweep.curve_silenced.sign())]),
    ))
}

/// Deviation windows: configured half-widths, or three times the critical
/// deviations at the configured target.
fn deviation_windows(cfg: &Config, p: &SwitchPoint) -> Result<(f64, f64, BTreeMap<String, f64>)> {
    let mut derived = switch_metadata(p);
    let target = cfg.robustness.target_eta;
    let mut window = |given: Option<f64>, axis: DeviationAxis, key: &str| -> Result<f64> {
        if let Some(w) = given {
            return Ok(w);
        }
        let c = critical_deviation(axis, target, p, &cfg.drives, &cfg.decoherence)?;
        derived.insert(key.into(), c);
        Ok(3.0 * c)
    };
    let a = window(cfg.sweep.domega_rel_max, DeviationAxis::Amplitude, "domega_rel_c")?;
    let b = window(cfg.sweep.dphi_max_deg, DeviationAxis::Phase, "dphi_c_deg")?;
    derived.insert("target_eta".into(), target);
    Ok((a, b, derived))
}

fn fig2b(cfg: &Config) -> Result<SweepTable> {
    let p = configured_switch(cfg)?;
    let (amp_max, phi_max, derived) = deviation_windows(cfg, &p)?;
    let n = cfg.sweep.deviation_points;
    let dphis = linspace(-phi_max, phi_max, n);
    let domegas = linspace(-amp_max, amp_max, n);
    let points: Vec<(f64, f64)> = dphis
        .iter()
        .flat_map(|&a| domegas.iter().map(move |&b| (a, b)))
        .collect();
    let rows = par_map(&points, |&(dphi, domega)| {
        let eta = relative_error(domega, dphi, &p, &cfg.drives, &cfg.decoherence)?;
        Ok(vec![dphi, domega, eta])
    })?;
    Ok(table(
        SweepKind::Fig2b,
        cfg,
        vec![
            Axis::new("dphi_deg", "deg", dphis),
            Axis::new("domega_rel", "1", domegas),
        ],
        &["dphi_deg", "domega_rel", "eta"],
        rows,
        derived,
    ))
}

fn fig2cd(cfg: &Config) -> Result<SweepTable> {
    let p = configured_switch(cfg)?;
    let (amp_max, phi_max, derived) = deviation_windows(cfg, &p)?;
    let n = cfg.sweep.deviation_points;
    let dphis = linspace(-phi_max, phi_max, n);
    let domegas = linspace(-amp_max, amp_max, n);
    let steps: Vec<usize> = (0..n).collect();
    let rows = par_map(&steps, |&k| {
        let amp = relative_error(domegas[k], 0.0, &p, &cfg.drives, &cfg.decoherence)?;
        let phase = relative_error(0.0, dphis[k], &p, &cfg.drives, &cfg.decoherence)?;
        Ok(vec![k as f64, domegas[k], amp, dphis[k], phase])
    })?;
    Ok(table(
        SweepKind::Fig2cd,
        cfg,
        vec![Axis::new("step", "1", steps.iter().map(|&k| k as f64).collect())],
        &["step", "domega_rel", "eta_amplitude", "dphi_deg", "eta_phase"],
        rows,
        derived,
    ))
}

fn fig2ef(cfg: &Config) -> Result<SweepTable> {
    let target = cfg.robustness.target_eta;
    let points = curves(cfg, cfg.switch.silenced)?;
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|(ratio, delta, outcome)| {
            let base = cfg.drives.with_delta(*delta);
            let dec = regime(cfg, *ratio);
            let crit = |axis| {
                outcome
                    .as_ref()
                    .ok()
                    .and_then(|p| critical_deviation(axis, target, p, &base, &dec).ok())
                    .unwrap_or(f64::NAN)
            };
            let converged = if outcome.is_ok() { 1.0 } else { 0.0 };
            vec![
                *ratio,
                *delta,
                crit(DeviationAxis::Amplitude),
                crit(DeviationAxis::Phase),
                converged,
            ]
        })
        .collect();
    Ok(table(
        SweepKind::Fig2ef,
        cfg,
        vec![
            Axis::new("gamma_ratio", "1", cfg.sweep.gamma_ratios.clone()),
            Axis::new("delta", "2pi MHz", detunings(cfg)),
        ],
        &["gamma_ratio", "delta", "domega_rel_c", "dphi_c_deg", "converged"],
        rows,
        BTreeMap::from([("target_eta".to_string(), target)]),
    ))
}
