//! Flag definitions, JSON config files and value parsers.
//!
//! Every subcommand's arguments are a flat struct of optional fields. A config
//! file supplies the same keys; explicit flags override it, then defaults are
//! filled in. The resolved struct is what `--print-config` echoes and what
//! reports embed for provenance.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pspec_core::gallery::ModelKind;
use pspec_core::{Complex64, ComplexGrid, Rectangle};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "PSPEC_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "pspec", version, about = "Pseudospectra, quasimodes and random-perturbation spectra of model operators")]
pub struct Cli {
    /// JSON file with values for the chosen subcommand; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the fully resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid scan of σ_min(P − z) written as CSV.
    Scan(ScanArgs),
    /// Isolines of σ_min(P − z) as SVG (and optionally JSON).
    Contours(ContoursArgs),
    /// Symbol-level computations.
    #[command(subcommand)]
    Symbol(SymbolCommand),
    /// Gaussian-beam quasimode residuals along an h list.
    Quasimode(QuasimodeArgs),
    /// Random-perturbation experiments.
    #[command(subcommand)]
    Lab(LabCommand),
    /// Resolvent growth fits.
    #[command(subcommand)]
    Fit(FitCommand),
}

#[derive(Debug, Subcommand)]
pub enum SymbolCommand {
    /// Membership of grid nodes in the closure of p0(T*X).
    Sigma(SymbolGridArgs),
    /// Λ+ / Λ− classification of grid nodes.
    Lambda(SymbolGridArgs),
    /// Order of the first non-vanishing iterated bracket over p0^{-1}(z).
    Order(OrderArgs),
    /// Sublevel volumes V_z(t).
    Volume(VolumeArgs),
    /// Fitted exponent κ in V_z(t) ~ t^κ.
    Kappa(VolumeArgs),
}

#[derive(Debug, Subcommand)]
pub enum LabCommand {
    /// Eigenvalue counts of P + δQ against the Weyl prediction.
    Weyl(WeylArgs),
    /// Tail of the smallest singular value of X0 + δQ.
    Ssv(SsvArgs),
}

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Slope of log‖(P_h − z)^{-1}‖ against log(1/h), or against 1/h.
    Boundary(BoundaryArgs),
}

macro_rules! config_struct {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $($(#[$fmeta])* pub $field: Option<$ty>,)*
        }
    };
}

config_struct!(ScanArgs {
    /// jordan, ho, davies or hager.
    #[arg(long)]
    model: String,
    /// Semiclassical parameter (default 4/N for hager, 0.1 for ho/davies).
    #[arg(long)]
    h: f64,
    /// Matrix dimension.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    /// re_min,re_max,im_min,im_max,nx,ny
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Output CSV (stdout if absent).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores); default from PSPEC_WORKERS.
    #[arg(long)]
    workers: usize,
});

config_struct!(ContoursArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    h: f64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Read the field from a CSV written by `scan` instead of computing it.
    #[arg(long)]
    field: PathBuf,
    /// Comma-separated ε levels.
    #[arg(long)]
    levels: String,
    /// Output SVG.
    #[arg(long)]
    svg: PathBuf,
    /// Output JSON with the polylines.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: usize,
});

config_struct!(SymbolGridArgs {
    /// ho, davies or hager.
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    /// Phase-space samples per axis.
    #[arg(long)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
});

config_struct!(OrderArgs {
    #[arg(long)]
    model: String,
    /// Spectral parameter, e.g. 1+1i.
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// Largest bracket order tried.
    #[arg(long)]
    cap: usize,
    #[arg(long)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
});

config_struct!(VolumeArgs {
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// Comma-separated t values, or lo:hi:count for a geometric grid.
    #[arg(long)]
    t: String,
    #[arg(long)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
});

config_struct!(QuasimodeArgs {
    /// ho, davies or hager.
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    /// Comma-separated h values.
    #[arg(long)]
    hlist: String,
    /// plus or minus.
    #[arg(long)]
    sign: String,
    /// Output JSON report.
    #[arg(long)]
    out: PathBuf,
});

config_struct!(WeylArgs {
    /// ho, davies or hager.
    #[arg(long)]
    model: String,
    #[arg(long)]
    h: f64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    /// `auto` (N^-4) or a number.
    #[arg(long)]
    delta: String,
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    gamma: String,
    #[arg(long)]
    draws: usize,
    #[arg(long)]
    seed: u64,
    /// matrix, potential, pm1 or uniform.
    #[arg(long)]
    perturbation: String,
    /// Allow potential perturbations for symbols without ξ ↦ −ξ symmetry.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    force_potential: bool,
    /// Output JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Eigenvalue dump (re,im,draw).
    #[arg(long)]
    eigs: PathBuf,
    /// Two-panel figure.
    #[arg(long)]
    svg: PathBuf,
    #[arg(long)]
    workers: usize,
});

config_struct!(SsvArgs {
    /// Model supplying X0.
    #[arg(long)]
    model: String,
    #[arg(long)]
    h: f64,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: usize,
    #[arg(long)]
    delta: f64,
    /// Comma-separated t values, or lo:hi:count for a geometric grid.
    #[arg(long)]
    t: String,
    #[arg(long)]
    draws: usize,
    #[arg(long)]
    seed: u64,
    /// gaussian, pm1 or uniform.
    #[arg(long)]
    law: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    workers: usize,
});

config_struct!(BoundaryArgs {
    /// ho, davies or hager.
    #[arg(long)]
    model: String,
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    #[arg(long)]
    hlist: String,
    /// Multiplier on the default dimension rule (2 doubles N).
    #[arg(long)]
    n_scale: usize,
    /// power (log-log) or exponential (log vs 1/h).
    #[arg(long)]
    law: String,
    #[arg(long)]
    out: PathBuf,
});

/// Overlays non-null flag values onto the config file and deserialises.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&Path>) -> Result<T, CliError> {
    let mut base = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            match v {
                Value::Object(m) => m,
                _ => return Err(CliError::Usage("config must be a JSON object".into())),
            }
        }
        None => Map::new(),
    };
    let over = serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Value::Object(m) = over {
        for (k, v) in m {
            // boolean switches are only overrides when set
            if !v.is_null() && v != Value::Bool(false) {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

pub fn workers_default(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a nonnegative integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

pub fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.parse().map_err(CliError::from)
}

/// `4/N` on the circle, `0.1` on the line, `1` for the plain Jordan block.
pub fn default_h(model: ModelKind, n: usize) -> f64 {
    match model {
        ModelKind::Jordan => 1.0,
        ModelKind::Ho | ModelKind::Davies => 0.1,
        ModelKind::Hager => 4.0 / n as f64,
    }
}

fn num(field: &'static str, s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| CliError::Usage(format!("`{field}`: cannot parse `{s}` as a number")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!("`{field}`: `{s}` is not finite")));
    }
    Ok(v)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i` (also with `j`).
pub fn parse_complex(field: &'static str, s: &str) -> Result<Complex64, CliError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(Complex64::new(num(field, &t)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |part: &str| match part {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        p => num(field, p),
    };
    match split {
        Some(k) => Ok(Complex64::new(num(field, &body[..k])?, imag(&body[k..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_list(field: &'static str, s: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s.split(',').map(|p| num(field, p)).collect::<Result<_, _>>()?;
    if v.is_empty() {
        return Err(CliError::Usage(format!("`{field}` is empty")));
    }
    Ok(v)
}

/// Comma list, or `lo:hi:count` for a geometric grid.
pub fn parse_t_grid(field: &'static str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (lo, hi) = (num(field, parts[0])?, num(field, parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|_| CliError::Usage(format!("`{field}`: bad count `{}`", parts[2])))?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(CliError::Usage(format!("`{field}`: need 0 < lo < hi and count ≥ 2")));
        }
        return Ok(pspec_core::lab::geometric_grid(lo, hi, count));
    }
    parse_list(field, s)
}

pub fn parse_grid(s: &str) -> Result<ComplexGrid, CliError> {
    let p: Vec<&str> = s.split(',').collect();
    if p.len() != 6 {
        return Err(CliError::Usage(format!("`grid`: expected re_min,re_max,im_min,im_max,nx,ny, got `{s}`")));
    }
    let count = |t: &str| t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("`grid`: bad node count `{t}`")));
    Ok(ComplexGrid::new(num("grid", p[0])?, num("grid", p[1])?, num("grid", p[2])?, num("grid", p[3])?, count(p[4])?, count(p[5])?)?)
}

pub fn parse_rectangle(field: &'static str, s: &str) -> Result<Rectangle, CliError> {
    let v = parse_list(field, s)?;
    if v.len() != 4 {
        return Err(CliError::Usage(format!("`{field}`: expected re_min,re_max,im_min,im_max")));
    }
    Ok(Rectangle::new(v[0], v[1], v[2], v[3])?)
}

/// Fills every unset field of `args` from `defaults`.
pub fn with_defaults<T: Serialize + DeserializeOwned>(args: T, defaults: T) -> Result<T, CliError> {
    let mut out = serde_json::to_value(defaults).map_err(|e| CliError::Usage(e.to_string()))?;
    let set = serde_json::to_value(args).map_err(|e| CliError::Usage(e.to_string()))?;
    if let (Value::Object(o), Value::Object(s)) = (&mut out, set) {
        for (k, v) in s {
            if !v.is_null() {
                o.insert(k, v);
            }
        }
    }
    serde_json::from_value(out).map_err(|e| CliError::Usage(e.to_string()))
}
