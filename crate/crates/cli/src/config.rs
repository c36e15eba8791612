//! Run settings: command-line flags over config-file keys over built-in defaults.
//!
//! A config file is TOML with one table per command (`phi_sweep`,
//! `rsr_sweep`, `ber`, `trace_curve`). Keys match the long flag names with
//! dashes replaced by underscores; list-valued keys take TOML arrays. The
//! manifest written next to every output uses the same layout, so
//! `--config <manifest>` replays a run.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_errors: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qam: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rsr_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_v_sq: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<bool>,
}

impl Settings {
    /// Fills every unset field of `self` from `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            seed: self.seed.or(lower.seed),
            threads: self.threads.or(lower.threads),
            trials: self.trials.or(lower.trials),
            target_errors: self.target_errors.or(lower.target_errors),
            m: self.m.or(lower.m),
            n: self.n.or(lower.n),
            qam: self.qam.or(lower.qam),
            rsr_db: self.rsr_db.or(lower.rsr_db),
            snr_db_list: self.snr_db_list.or(lower.snr_db_list),
            sigma_v_sq: self.sigma_v_sq.or(lower.sigma_v_sq),
            phi_grid: self.phi_grid.or(lower.phi_grid),
            scheme: self.scheme.or(lower.scheme),
            detector: self.detector.or(lower.detector),
            svg: self.svg.or(lower.svg),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct ConfigFile {
    phi_sweep: Option<Settings>,
    rsr_sweep: Option<Settings>,
    ber: Option<Settings>,
    trace_curve: Option<Settings>,
    /// Run metadata of a manifest; ignored on input.
    #[allow(dead_code)]
    run: Option<toml::Table>,
}

/// Reads the table for `section` from a config file; a missing table is empty.
pub fn load_section(path: &Path, section: &str) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    let file: ConfigFile = toml::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))?;
    let table = match section {
        "phi_sweep" => file.phi_sweep,
        "rsr_sweep" => file.rsr_sweep,
        "ber" => file.ber,
        "trace_curve" => file.trace_curve,
        other => return Err(format!("unknown config section '{other}'")),
    };
    Ok(table.unwrap_or_default())
}

/// Default φ grid: multiples of π/36 in (−π, π), without the singular point 0.
pub fn default_phi_grid() -> Vec<f64> {
    (-35..=35).filter(|&k| k != 0).map(|k| k as f64 * PI / 36.0).collect()
}

fn parse_term(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let bad = || format!("cannot parse '{s}' as a number");
    let Some(at) = t.find("pi") else {
        return t.parse().map_err(|_| bad());
    };
    let coef = match t[..at].trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
    };
    let rest = t[at + 2..].trim();
    let div = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/').ok_or_else(bad)?.trim().parse::<f64>().map_err(|_| bad())?
    };
    Ok(coef * PI / div)
}

/// Parses a comma-separated list. Each entry is a number, a multiple of
/// `pi` (`pi/2`, `-3pi/4`, `0.5*pi`) or an inclusive range `start:step:stop`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(parse_term(one)?),
            [a, step, b] => {
                let (a, step, b) = (parse_term(a)?, parse_term(step)?, parse_term(b)?);
                if !(step > 0.0) || b < a {
                    return Err(format!("range '{item}' must have a positive step and start <= stop"));
                }
                let count = ((b - a) / step + 1e-9).floor() as u64;
                if count > 1_000_000 {
                    return Err(format!("range '{item}' is too long"));
                }
                out.extend((0..=count).map(|k| a + k as f64 * step));
            }
            _ => return Err(format!("cannot parse list entry '{item}'")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn parse_names(s: &str) -> Result<Vec<String>, String> {
    let v: Vec<String> = s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect();
    if v.is_empty() {
        return Err("empty list".into());
    }
    Ok(v)
}
