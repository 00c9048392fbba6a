//! Scenario files: TOML is canonical, JSON with the same field names is
//! accepted too.
//!
//! ```toml
//! p = 0.5
//! q = 1.0
//! schedule = { d = 0.5, rho = 0.5 }
//!
//! [mu0]
//! atoms = [
//!     { x = 0, y = 0, prob = 0.948 },
//!     { x = 0, y = 1, prob = 0.004 },
//!     { x = 1, y = 0, prob = 0.048 },
//! ]
//! ```
//!
//! `mu1` and `nu` follow the same layout; `y` may be omitted for `nu`.

use std::fmt::Write as _;
use std::path::Path;

use stripwalk_core::scenarios::{self, NamedScenario};
use stripwalk_core::{OfferDistribution, Scenario};

use crate::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON for a `.json` extension, TOML otherwise.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Toml,
        }
    }

    /// JSON when the text starts with `{`.
    pub fn sniff(text: &str) -> Format {
        if text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

/// Parses without validating.
pub fn parse(text: &str, format: Format) -> Result<Scenario, String> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| e.to_string()),
        Format::Json => serde_json::from_str(text).map_err(|e| e.to_string()),
    }
}

fn toml_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:?}")
    }
}

fn write_law(out: &mut String, name: &str, law: &OfferDistribution) {
    let _ = writeln!(out, "\n[{name}]\natoms = [");
    for a in &law.atoms {
        let _ = writeln!(out, "    {{ x = {}, y = {}, prob = {} }},", a.x, a.y, toml_float(a.prob));
    }
    out.push_str("]\n");
}

pub fn render_toml(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p = {}", toml_float(s.p));
    let _ = writeln!(out, "q = {}", toml_float(s.q));
    let _ = writeln!(
        out,
        "schedule = {{ d = {}, rho = {} }}",
        toml_float(s.schedule.d),
        toml_float(s.schedule.rho)
    );
    write_law(&mut out, "mu0", &s.mu0);
    write_law(&mut out, "mu1", &s.mu1);
    write_law(&mut out, "nu", &s.nu);
    out
}

pub fn render_json(s: &Scenario) -> String {
    let mut out = serde_json::to_string_pretty(s).expect("scenario serializes");
    out.push('\n');
    out
}

pub fn render(s: &Scenario, format: Format) -> String {
    match format {
        Format::Toml => render_toml(s),
        Format::Json => render_json(s),
    }
}

/// Reads and parses a scenario file; the format follows the extension, or
/// the content when the extension is neither.
pub fn load(path: &Path) -> AppResult<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        Some(e) if e.eq_ignore_ascii_case("toml") => Format::Toml,
        _ => Format::sniff(&text),
    };
    parse(&text, format).map_err(|message| AppError::Parse { path: path.display().to_string(), message })
}

/// A scenario named on the command line.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Built-in id, or the file stem.
    pub id: String,
    pub scenario: Scenario,
    pub builtin: Option<NamedScenario>,
}

/// An existing file wins over a built-in id of the same name.
pub fn resolve(arg: &str) -> AppResult<Resolved> {
    let path = Path::new(arg);
    if path.exists() {
        let scenario = load(path)?;
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
        return Ok(Resolved { id, scenario, builtin: None });
    }
    if scenarios::IDS.contains(&arg) {
        let named = scenarios::get(arg)?;
        return Ok(Resolved { id: named.id.clone(), scenario: named.scenario.clone(), builtin: Some(named) });
    }
    Err(AppError::Usage(format!(
        "'{arg}' is neither a readable file nor a built-in scenario ({})",
        scenarios::IDS.join(", ")
    )))
}
