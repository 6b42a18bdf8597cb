//! CSV emitters and the σ_min field reader.
//!
//! Every file starts with `#` provenance lines. Floats use Rust's shortest
//! round-trip formatting, so a field written and read back is bit-identical.

use std::fmt::Write as _;

use pspec_core::pseudospectrum::Fingerprint;
use pspec_core::{Complex64, ComplexGrid, SigmaMinField};

use crate::CliError;

pub const FIELD_HEADER: &str = "re,im,sigma_min";

fn provenance(out: &mut String, lines: &[(&str, String)]) {
    for (k, v) in lines {
        let _ = writeln!(out, "# {k}: {v}");
    }
}

pub fn field_csv(field: &SigmaMinField, config: &str) -> String {
    let g = &field.grid;
    let fp = &field.fingerprint;
    let mut out = String::new();
    provenance(
        &mut out,
        &[
            ("pspec", env!("CARGO_PKG_VERSION").to_string()),
            ("model", fp.model.clone()),
            ("h", format!("{:?}", fp.h)),
            ("N", fp.n.to_string()),
            ("grid", format!("{:?},{:?},{:?},{:?},{},{}", g.re_min, g.re_max, g.im_min, g.im_max, g.nx, g.ny)),
            ("missing", field.missing.to_string()),
            ("config", config.to_string()),
        ],
    );
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            let _ = writeln!(out, "{:?},{:?},{:?}", z.re, z.im, field.value(i, j));
        }
    }
    out
}

fn meta<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().filter_map(|l| l.strip_prefix("# ")).find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("field CSV: {}", msg.into()))
}

/// Reads a field written by [`field_csv`].
pub fn read_field_csv(text: &str) -> Result<SigmaMinField, CliError> {
    let grid_spec = meta(text, "grid").ok_or_else(|| bad("missing `# grid:` line"))?;
    let grid = crate::config::parse_grid(grid_spec)?;
    let fingerprint = Fingerprint {
        model: meta(text, "model").unwrap_or("unknown").to_string(),
        h: meta(text, "h").and_then(|s| s.parse().ok()).unwrap_or(f64::NAN),
        n: meta(text, "N").and_then(|s| s.parse().ok()).unwrap_or(0),
    };
    let mut rows = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    if rows.next() != Some(FIELD_HEADER) {
        return Err(bad(format!("expected header `{FIELD_HEADER}`")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (k, row) in rows.enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(format!("row {k}: expected 3 columns")));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("row {k}: bad number `{s}`")));
        let (re, im, v) = (parse(cols[0])?, parse(cols[1])?, parse(cols[2])?);
        if k >= grid.len() {
            return Err(bad("more rows than grid nodes"));
        }
        let expected = grid.node(k % grid.nx, k / grid.nx);
        if expected != Complex64::new(re, im) {
            return Err(bad(format!("row {k}: node ({re}, {im}) does not match the grid")));
        }
        values.push(v);
    }
    Ok(SigmaMinField::from_values(grid, values, fingerprint)?)
}

/// Grid nodes with one value column.
pub fn grid_csv(grid: &ComplexGrid, column: &str, values: &[String], config: &str) -> String {
    let mut out = String::new();
    provenance(&mut out, &[("pspec", env!("CARGO_PKG_VERSION").to_string()), ("config", config.to_string())]);
    let _ = writeln!(out, "z_re,z_im,{column}");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.node(i, j);
            let _ = writeln!(out, "{:?},{:?},{}", z.re, z.im, values[grid.index(i, j)]);
        }
    }
    out
}

/// Arbitrary rows under a header, with provenance.
pub fn table_csv(header: &str, rows: &[String], config: &str) -> String {
    let mut out = String::new();
    provenance(&mut out, &[("pspec", env!("CARGO_PKG_VERSION").to_string()), ("config", config.to_string())]);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// `re,im,draw` dump of every kept draw.
pub fn eigenvalue_csv(eigenvalues: &[Vec<Complex64>], seed: u64, config: &str) -> String {
    let mut rows = Vec::new();
    for (d, ev) in eigenvalues.iter().enumerate() {
        for z in ev {
            rows.push(format!("{:?},{:?},{d}", z.re, z.im));
        }
    }
    let mut out = String::new();
    provenance(&mut out, &[("pspec", env!("CARGO_PKG_VERSION").to_string()), ("seed", seed.to_string()), ("config", config.to_string())]);
    out.push_str("re,im,draw\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out
}
