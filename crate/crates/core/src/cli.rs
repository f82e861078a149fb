//! Command-line front end.
//!
//! Settings are resolved in four layers, each overriding the previous one:
//! built-in defaults, a flat TOML file (`--config`), environment variables
//! named `CARSQFI_<KEY>` and finally the command-line flags. Every output
//! file starts with the tool version and the resolved configuration.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjudication::adjudicate;
use crate::fisher::{
    fi_direct_with, fi_spade, fi_spade_partial_sums, optimize_waist, qfi_separation, Family,
    WAIST_BOUNDS,
};
use crate::montecarlo::{run_campaign, BinnedDirectModel, CampaignConfig, SourceModel, SpadeModel};
use crate::numerics::QuadratureSpec;
use crate::psf_modes::{GaussianPsf, HermiteGaussBasis};
use crate::spectral::{normalize_phi, PulseSpectrum, RamanResonance};
use crate::{Error, Result};

pub const ENV_PREFIX: &str = "CARSQFI_";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "cars-qfi", version, about = "Fisher information limits for two-emitter CARS imaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat TOML file with run settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// SPADE truncation: modes `0..=M` are counted.
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Absolute direct-imaging quadrature tolerance, in units of `2κg²/w²`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Emit raw Fisher values in `1/w²` instead of `w²F/(2κg²)`.
    #[arg(long, global = true)]
    pub raw: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// QFI, direct imaging and SPADE versus separation for plane waves.
    Figure2,
    /// The same for vortex excitation, with the waist-optimized envelope.
    Figure3,
    /// SPADE information versus mode truncation.
    Convergence,
    /// Checks every closed form against its oracle.
    Adjudicate,
    /// Monte Carlo maximum-likelihood campaign.
    Simulate,
    /// Normalized anti-Stokes spectral mode.
    SpectralDump,
    /// Vortex waist ratio maximizing the QFI.
    OptimizeWaist,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Figure2 => "figure2",
            Command::Figure3 => "figure3",
            Command::Convergence => "convergence",
            Command::Adjudicate => "adjudicate",
            Command::Simulate => "simulate",
            Command::SpectralDump => "spectral-dump",
            Command::OptimizeWaist => "optimize-waist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Plane,
    Vortex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    Spade,
    Direct,
}

/// Every setting a subcommand can read. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Excitation for `simulate`; the figure commands fix their own.
    pub family: FamilyKind,
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
    pub ktilde: Vec<f64>,
    pub a: Vec<f64>,
    pub psi: Vec<f64>,
    pub modes: usize,
    /// Truncations tabulated by `convergence`.
    pub mode_grid: Vec<usize>,
    pub format: Format,
    pub seed: u64,
    pub raw: bool,
    pub kappa: f64,
    pub g: f64,
    pub width: f64,
    pub di_abs_tol: f64,
    pub di_rel_tol: f64,
    pub di_max_depth: usize,
    pub a_min: f64,
    pub a_max: f64,
    pub true_s: f64,
    pub mu: u64,
    pub batches: usize,
    pub estimates_per_batch: usize,
    pub photons_per_shot: f64,
    pub measurement: Measurement,
    pub omega_vib: f64,
    pub gamma_vib: f64,
    pub polarizability: f64,
    pub pump_center: f64,
    pub pump_bandwidth: f64,
    pub pump_amplitude: f64,
    pub stokes_center: f64,
    pub stokes_bandwidth: f64,
    pub stokes_amplitude: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilyKind::Vortex,
            s_min: 0.01,
            s_max: 3.0,
            s_points: 120,
            ktilde: vec![0.0, 1.0, 2.0, 4.0],
            a: vec![std::f64::consts::FRAC_1_SQRT_2],
            psi: vec![0.0, 0.1, 0.2, 0.3],
            modes: 10,
            mode_grid: vec![5, 10, 15, 20, 25],
            format: Format::Csv,
            seed: 1,
            raw: false,
            kappa: 1.0,
            g: 1.0,
            width: 1.0,
            di_abs_tol: 1e-12,
            di_rel_tol: 1e-9,
            di_max_depth: 40,
            a_min: WAIST_BOUNDS.0,
            a_max: WAIST_BOUNDS.1,
            true_s: 1.0,
            mu: 10_000,
            batches: 50,
            estimates_per_batch: 40,
            photons_per_shot: 10.0,
            measurement: Measurement::Spade,
            omega_vib: 20.0,
            gamma_vib: 0.5,
            polarizability: 1.0,
            pump_center: 100.0,
            pump_bandwidth: 1.0,
            pump_amplitude: 1.0,
            stokes_center: 80.0,
            stokes_bandwidth: 0.7,
            stokes_amplitude: 1.0,
        }
    }
}

fn config_error(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

/// Parses an environment value as a TOML value, falling back to a string so
/// that `CARSQFI_FORMAT=json` works without quotes.
fn env_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl RunConfig {
    /// Layers a TOML document and `CARSQFI_*` variables over the defaults.
    pub fn resolve(file_text: Option<&str>, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut table = match file_text {
            Some(text) => text.parse::<toml::Table>().map_err(config_error)?,
            None => toml::Table::new(),
        };
        let mut env: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| k.strip_prefix(ENV_PREFIX).map(|k| (k.to_ascii_lowercase(), v)))
            .collect();
        env.sort();
        for (key, value) in env {
            table.insert(key, env_value(&value));
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_error)?;
        Ok(cfg)
    }

    /// Applies command-line flags on top of the file and environment.
    pub fn apply_flags(&mut self, cli: &Cli) {
        if let Some(f) = cli.format {
            self.format = f;
        }
        if let Some(seed) = cli.seed {
            self.seed = seed;
        }
        if let Some(m) = cli.modes {
            self.modes = m;
        }
        if let Some(t) = cli.tol {
            self.di_abs_tol = t;
        }
        if cli.raw {
            self.raw = true;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config_error(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        let nonempty = |name: &str, len: usize| {
            if len == 0 {
                Err(config_error(format!("{name} grid is empty")))
            } else {
                Ok(())
            }
        };
        if !(self.s_min > 0.0 && self.s_max >= self.s_min && self.s_max.is_finite()) {
            return Err(config_error(format!(
                "separation range needs 0 < s_min <= s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if self.s_points == 0 {
            return Err(config_error("s_points must be >= 1"));
        }
        nonempty("ktilde", self.ktilde.len())?;
        nonempty("a", self.a.len())?;
        nonempty("psi", self.psi.len())?;
        nonempty("mode_grid", self.mode_grid.len())?;
        if self.ktilde.iter().chain(&self.psi).any(|v| !v.is_finite()) {
            return Err(config_error("ktilde and psi values must be finite"));
        }
        for &a in &self.a {
            finite_pos("a", a)?;
        }
        finite_pos("kappa", self.kappa)?;
        finite_pos("g", self.g)?;
        finite_pos("width", self.width)?;
        finite_pos("di_abs_tol", self.di_abs_tol)?;
        finite_pos("photons_per_shot", self.photons_per_shot)?;
        if !(self.di_rel_tol >= 0.0) || self.di_max_depth == 0 {
            return Err(config_error("di_rel_tol must be >= 0 and di_max_depth >= 1"));
        }
        if !(self.a_min > 0.0 && self.a_max > self.a_min && self.a_max.is_finite()) {
            return Err(config_error(format!("waist bounds need 0 < a_min < a_max, got [{}, {}]", self.a_min, self.a_max)));
        }
        if !(self.true_s.is_finite() && self.true_s >= 0.0) {
            return Err(config_error(format!("true_s must be >= 0, got {}", self.true_s)));
        }
        Ok(())
    }

    /// Evenly spaced separations from `s_min` to `s_max`.
    pub fn s_grid(&self) -> Vec<f64> {
        let n = self.s_points;
        if n == 1 {
            return vec![self.s_min];
        }
        (0..n)
            .map(|i| self.s_min + (self.s_max - self.s_min) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn di_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            abs_tol: self.di_abs_tol * 2.0,
            rel_tol: self.di_rel_tol,
            max_depth: self.di_max_depth,
        }
    }

    /// Converts a normalized value to the requested output units.
    fn scale(&self, normalized: f64) -> f64 {
        if self.raw {
            normalized * 2.0 * self.kappa * self.g * self.g / (self.width * self.width)
        } else {
            normalized
        }
    }

    fn first(v: &[f64]) -> f64 {
        v[0]
    }

    fn family(&self) -> Family {
        match self.family {
            FamilyKind::Plane => Family::Plane {
                ktilde: Self::first(&self.ktilde),
            },
            FamilyKind::Vortex => Family::Vortex {
                a: Self::first(&self.a),
                psi: Self::first(&self.psi),
            },
        }
    }
}

/// A table of named columns, rendered as CSV or JSON.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub command: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key = value` lines for the header.
    pub notes: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(t) => csv_field(t),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(x) => serde_json::Value::from(*x),
            Cell::Int(n) => serde_json::Value::from(*n),
            Cell::Bool(b) => serde_json::Value::from(*b),
            Cell::Text(t) => serde_json::Value::from(t.as_str()),
        }
    }
}

/// 17 significant digits, `.` as decimal separator.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(t: &str) -> String {
    if t.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", t.replace('"', "\"\""))
    } else {
        t.to_string()
    }
}

fn header_lines(command: &str, cfg: &RunConfig, notes: &[(String, String)]) -> Vec<String> {
    let mut lines = vec![format!("cars-qfi {VERSION} {command}")];
    let resolved = toml::to_string(cfg).expect("config serializes");
    lines.extend(resolved.lines().filter(|l| !l.is_empty()).map(str::to_string));
    lines.extend(notes.iter().map(|(k, v)| format!("{k} = {v}")));
    lines
}

impl Dataset {
    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => {
                let mut out = String::new();
                for line in header_lines(self.command, cfg, &self.notes) {
                    let _ = writeln!(out, "# {line}");
                }
                out.push_str(&self.columns.join(","));
                out.push_str("\r\n");
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push_str("\r\n");
                }
                out
            }
            Format::Json => {
                let rows: Vec<serde_json::Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, serde_json::Value> =
                            self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                        serde_json::Value::Object(obj)
                    })
                    .collect();
                let notes: serde_json::Map<String, serde_json::Value> =
                    self.notes.iter().map(|(k, v)| (k.clone(), serde_json::Value::from(v.as_str()))).collect();
                let doc = serde_json::json!({
                    "tool": "cars-qfi",
                    "version": VERSION,
                    "command": self.command,
                    "config": cfg,
                    "notes": notes,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("dataset serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

pub fn cmd_figure2(cfg: &RunConfig) -> Result<Dataset> {
    let basis = HermiteGaussBasis::new(1.0, cfg.modes)?;
    let psf = GaussianPsf::unit();
    let spec = cfg.di_spec();
    let points: Vec<(f64, f64)> = cfg
        .ktilde
        .iter()
        .flat_map(|&k| cfg.s_grid().into_iter().map(move |s| (k, s)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(ktilde, s)| {
            let (amps, geom) = Family::Plane { ktilde }.unit_amplitudes(s)?;
            let qfi = qfi_separation(&amps, &geom).normalized_value;
            let di = fi_direct_with(&amps, &psf, &spec)?.normalized_value;
            let sp = fi_spade(&amps, &basis).normalized_value;
            Ok(vec![
                num(s),
                num(ktilde),
                num(cfg.scale(qfi)),
                num(cfg.scale(di)),
                num(cfg.scale(sp)),
                Cell::Int(cfg.modes as u64),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        command: "figure2",
        columns: vec!["s", "ktilde", "qfi", "fi_di", "fi_spade_M", "M"],
        rows,
        notes: vec![units_note(cfg)],
    })
}

fn units_note(cfg: &RunConfig) -> (String, String) {
    let units = if cfg.raw { "w^-2 (raw)" } else { "w^2 F / (2 kappa g^2)" };
    ("units".into(), format!("\"{units}\""))
}

pub fn cmd_figure3(cfg: &RunConfig) -> Result<Dataset> {
    let basis = HermiteGaussBasis::new(1.0, cfg.modes)?;
    let psf = GaussianPsf::unit();
    let spec = cfg.di_spec();
    let s_grid = cfg.s_grid();
    let mut envelopes = Vec::with_capacity(cfg.psi.len());
    for &psi in &cfg.psi {
        envelopes.push(optimize_waist(psi, &s_grid, (cfg.a_min, cfg.a_max))?);
    }
    let mut points = Vec::new();
    for (pi, &psi) in cfg.psi.iter().enumerate() {
        for &a in &cfg.a {
            for (si, &s) in s_grid.iter().enumerate() {
                points.push((psi, a, s, envelopes[pi][si]));
            }
        }
    }
    let rows = points
        .par_iter()
        .map(|&(psi, a, s, opt)| {
            let (amps, geom) = Family::Vortex { a, psi }.unit_amplitudes(s)?;
            let qfi = qfi_separation(&amps, &geom).normalized_value;
            let di = fi_direct_with(&amps, &psf, &spec)?.normalized_value;
            let sp = fi_spade(&amps, &basis).normalized_value;
            Ok(vec![
                num(s),
                num(psi),
                num(a),
                num(cfg.scale(qfi)),
                num(cfg.scale(di)),
                num(cfg.scale(sp)),
                num(di / qfi),
                num(cfg.scale(opt.qfi)),
                num(opt.a),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        command: "figure3",
        columns: vec!["s", "psi", "a", "qfi", "fi_di", "fi_spade_M", "di_over_qfi", "qfi_opt", "a_opt"],
        rows,
        notes: vec![units_note(cfg)],
    })
}

pub fn cmd_convergence(cfg: &RunConfig) -> Result<Dataset> {
    let max_m = *cfg.mode_grid.iter().max().expect("validated nonempty");
    let ktilde = RunConfig::first(&cfg.ktilde);
    let rows: Vec<Vec<Vec<Cell>>> = cfg
        .s_grid()
        .par_iter()
        .map(|&s| {
            let (amps, geom) = Family::Plane { ktilde }.unit_amplitudes(s)?;
            let qfi = qfi_separation(&amps, &geom).normalized_value;
            // Partial sums are in units of w²F; halve for the normalized scale.
            let sums = fi_spade_partial_sums(&amps, max_m);
            Ok(cfg
                .mode_grid
                .iter()
                .map(|&m| {
                    let fi = 0.5 * sums[m];
                    vec![num(s), num(ktilde), Cell::Int(m as u64), num(cfg.scale(fi)), num(cfg.scale(qfi)), num(fi / qfi)]
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        command: "convergence",
        columns: vec!["s", "ktilde", "M", "fi_spade", "qfi", "ratio"],
        rows: rows.into_iter().flatten().collect(),
        notes: vec![units_note(cfg)],
    })
}

pub fn cmd_optimize_waist(cfg: &RunConfig) -> Result<Dataset> {
    let s_grid = cfg.s_grid();
    let a_ref = RunConfig::first(&cfg.a);
    let mut rows = Vec::new();
    for &psi in &cfg.psi {
        let opts = optimize_waist(psi, &s_grid, (cfg.a_min, cfg.a_max))?;
        for o in opts {
            let (amps, geom) = Family::Vortex { a: a_ref, psi }.unit_amplitudes(o.s)?;
            let q_ref = qfi_separation(&amps, &geom).normalized_value;
            rows.push(vec![num(o.s), num(psi), num(o.a), num(cfg.scale(o.qfi)), num(a_ref), num(cfg.scale(q_ref))]);
        }
    }
    Ok(Dataset {
        command: "optimize-waist",
        columns: vec!["s", "psi", "a_opt", "qfi_opt", "a_ref", "qfi_ref"],
        rows,
        notes: vec![units_note(cfg)],
    })
}

pub fn cmd_spectral_dump(cfg: &RunConfig) -> Result<Dataset> {
    use num_complex::Complex64;
    let res = RamanResonance::new(cfg.omega_vib, cfg.gamma_vib, cfg.polarizability)?;
    let pump = PulseSpectrum::gaussian(cfg.pump_center, cfg.pump_bandwidth, Complex64::new(cfg.pump_amplitude, 0.0))?;
    let stokes =
        PulseSpectrum::gaussian(cfg.stokes_center, cfg.stokes_bandwidth, Complex64::new(cfg.stokes_amplitude, 0.0))?;
    let spec = normalize_phi(&res, &pump, &stokes)?;
    let rows = spec
        .omega
        .iter()
        .zip(&spec.phi)
        .map(|(&w, z)| vec![num(w), num(z.re), num(z.im), num(z.norm_sqr())])
        .collect();
    Ok(Dataset {
        command: "spectral-dump",
        columns: vec!["omega", "phi_re", "phi_im", "phi_abs2"],
        rows,
        notes: vec![("spectral_coupling_g".into(), format_number(spec.g))],
    })
}

fn estimation_dataset(report: &crate::montecarlo::EstimationReport) -> Dataset {
    Dataset {
        command: "simulate",
        columns: vec![
            "measurement",
            "true_s",
            "mean_estimate",
            "empirical_variance",
            "crb",
            "ratio",
            "fisher_per_shot",
            "photons_per_shot",
            "mu",
            "batches",
            "estimates_per_batch",
            "seed",
        ],
        rows: vec![vec![
            Cell::Text(report.measurement.clone()),
            num(report.true_s),
            num(report.mean_estimate),
            num(report.empirical_variance),
            num(report.crb),
            num(report.ratio),
            num(report.fisher_per_shot),
            num(report.photons_per_shot),
            Cell::Int(report.mu),
            Cell::Int(report.batches as u64),
            Cell::Int(report.estimates_per_batch as u64),
            Cell::Int(report.seed),
        ]],
        notes: Vec::new(),
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<crate::montecarlo::EstimationReport> {
    let s = cfg.true_s;
    if s == 0.0 {
        return Err(Error::NonIdentifiable("the QFI vanishes at s = 0".into()));
    }
    let source = SourceModel::with_photon_budget(cfg.family(), s, cfg.kappa, cfg.photons_per_shot)?;
    let campaign = CampaignConfig {
        batches: cfg.batches,
        estimates_per_batch: cfg.estimates_per_batch,
        ..CampaignConfig::new(s, cfg.mu, cfg.seed)
    };
    match cfg.measurement {
        Measurement::Spade => run_campaign(&SpadeModel::new(source, cfg.modes)?, &campaign),
        Measurement::Direct => {
            let model = BinnedDirectModel::covering(source, s)?;
            model.check_resolution(s)?;
            run_campaign(&model, &campaign)
        }
    }
}

/// Runs the adjudication and renders it; the error, if any, is returned
/// alongside the rendered report so the caller can still write it.
pub fn cmd_adjudicate(cfg: &RunConfig) -> Result<(String, Result<()>)> {
    let report = adjudicate()?;
    let verdict = report.check();
    let text = match cfg.format {
        Format::Json => {
            let doc = serde_json::json!({
                "tool": "cars-qfi",
                "version": VERSION,
                "command": "adjudicate",
                "all_shipped_match": report.all_shipped_match(),
                "report": report,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => Dataset {
            command: "adjudicate",
            columns: vec!["formula", "oracle", "grid", "points", "max_deviation", "tolerance", "matches", "shipped"],
            rows: report
                .verdicts
                .iter()
                .map(|v| {
                    vec![
                        Cell::Text(v.formula.clone()),
                        Cell::Text(v.oracle.clone()),
                        Cell::Text(v.grid.clone()),
                        Cell::Int(v.points as u64),
                        num(v.max_deviation),
                        num(v.tolerance),
                        Cell::Bool(v.matches),
                        Cell::Bool(v.shipped),
                    ]
                })
                .collect(),
            notes: vec![(
                "vortex_qfi_selected".into(),
                report.vortex_qfi_selected.clone().unwrap_or_else(|| "none".into()),
            )],
        }
        .render(cfg),
    };
    Ok((text, verdict))
}

/// Renders the output of one subcommand. A mismatch found by `adjudicate`
/// is returned as the second element after the report text.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<(String, Result<()>)> {
    let text = match command {
        Command::Figure2 => cmd_figure2(cfg)?.render(cfg),
        Command::Figure3 => cmd_figure3(cfg)?.render(cfg),
        Command::Convergence => cmd_convergence(cfg)?.render(cfg),
        Command::OptimizeWaist => cmd_optimize_waist(cfg)?.render(cfg),
        Command::SpectralDump => cmd_spectral_dump(cfg)?.render(cfg),
        Command::Adjudicate => return cmd_adjudicate(cfg),
        Command::Simulate => {
            let report = cmd_simulate(cfg)?;
            match cfg.format {
                Format::Csv => estimation_dataset(&report).render(cfg),
                Format::Json => {
                    let doc = serde_json::json!({
                        "tool": "cars-qfi",
                        "version": VERSION,
                        "command": "simulate",
                        "config": cfg,
                        "report": report,
                    });
                    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                    s.push('\n');
                    s
                }
            }
        }
    };
    Ok((text, Ok(())))
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) | Error::NonIdentifiable(_) | Error::ModeOutOfRange { .. } => 2,
        Error::QuadratureNonConvergence { .. } | Error::SeriesNonConvergence { .. } => 3,
        Error::AdjudicationMismatch { .. } => 4,
        _ => 1,
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Resolves the configuration, runs the command and writes its output.
pub fn run(cli: &Cli, env: impl IntoIterator<Item = (String, String)>) -> Result<()> {
    let file_text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let mut cfg = RunConfig::resolve(file_text.as_deref(), env)?;
    cfg.apply_flags(cli);
    cfg.validate()?;
    let (text, verdict) = execute(cli.command, &cfg)?;
    write_output(cli, &text)?;
    verdict
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli, std::env::vars()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cars-qfi {}: {e}", cli.command.name());
            exit_code(&e)
        }
    }
}
