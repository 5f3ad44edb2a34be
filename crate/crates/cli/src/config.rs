//! Run configuration documents.
//!
//! The format is one `key = value` pair per line. `#` starts a comment that
//! runs to the end of the line; blank lines are ignored. Keys are strict:
//! anything not listed below for the chosen scenario is rejected.
//!
//! Common keys:
//!
//! | key | value |
//! |-----|-------|
//! | `scenario` | `pendulum` or `tracking` (required) |
//! | `seed` | single seed |
//! | `seed_list` | comma-separated seeds |
//! | `seeds`, `base_seed` | seed count, seeds run `base_seed .. base_seed + seeds` |
//! | `output_dir` | directory for output files |
//! | `emit_trace_csv`, `emit_summary`, `emit_plot_data` | `true` / `false` |
//!
//! Pendulum keys: `g_mps2`, `length_m`, `mass_kg`, `theta0_deg` or
//! `theta0_rad`, `theta_dot0_deg_s` or `theta_dot0_rad_s`, `sigma_r_nm`,
//! `filter_sigma_r_nm`, `sigma_o_rad`, `dt_s`, `duration_s`, `rate_hz`,
//! `truth` (`nonlinear` / `linear`).
//!
//! Tracking keys: `dt_s`, `duration_s`, `sigma_a_mps2`, `sigma_pos_m`,
//! `px0_m`, `vx0_mps`, `py0_m`, `vy0_mps`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use fusekit_core::scenarios::{PendulumParams, Scenario, TrackingParams, TruthModel};

pub const DEFAULT_OUTPUT_DIR: &str = "fusekit_out";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` already set on line {first}")]
    DuplicateKey { line: usize, first: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("line {line}: `{key}` cannot parse `{value}` as {expected}")]
    Value {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("`{key}` {reason}")]
    Domain { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    List(Vec<u64>),
    Count { count: u64, base: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Count { count, base } => (0..*count).map(|i| base.wrapping_add(i)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub trace_csv: bool,
    pub summary: bool,
    pub plot_data: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            trace_csv: true,
            summary: true,
            plot_data: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seeds: Seeds,
    pub output_dir: PathBuf,
    pub emit: Emit,
}

impl RunConfig {
    /// Defaults for everything except the scenario parameters.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            seeds: Seeds::List(vec![0]),
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            emit: Emit::default(),
        }
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

/// Parsed `key = value` pairs, consumed key by key.
struct Fields<'a> {
    entries: BTreeMap<&'a str, Entry<'a>>,
}

impl<'a> Fields<'a> {
    fn tokenize(text: &'a str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, Entry> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    reason: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || !key.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("invalid key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("empty value for `{key}`"),
                });
            }
            if let Some(first) = entries.get(key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    first: first.line,
                    key: key.into(),
                });
            }
            entries.insert(key, Entry { line, value });
        }
        Ok(Self { entries })
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry<'a>> {
        self.entries.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        let Some(e) = self.take_raw(key) else {
            return Ok(None);
        };
        e.value.parse().map(Some).map_err(|_| ConfigError::Value {
            line: e.line,
            key: key.into(),
            value: e.value.into(),
            expected,
        })
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.take(key, "a real number")
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.take(key, "`true` or `false`")
    }

    /// Value of one of two mutually exclusive keys, the second in degrees.
    fn take_angle(&mut self, rad_key: &str, deg_key: &str) -> Result<Option<f64>, ConfigError> {
        match (self.take_f64(rad_key)?, self.take_f64(deg_key)?) {
            (Some(_), Some(_)) => Err(ConfigError::Domain {
                key: deg_key.into(),
                reason: format!("conflicts with `{rad_key}`"),
            }),
            (Some(r), None) => Ok(Some(r)),
            (None, Some(d)) => Ok(Some(d.to_radians())),
            (None, None) => Ok(None),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => Err(ConfigError::UnknownKey {
                line: e.line,
                key: key.into(),
            }),
            None => Ok(()),
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_pendulum(f: &mut Fields) -> Result<PendulumParams, ConfigError> {
    let mut p = PendulumParams::default();
    set(&mut p.gravity, f.take_f64("g_mps2")?);
    set(&mut p.length, f.take_f64("length_m")?);
    set(&mut p.mass, f.take_f64("mass_kg")?);
    set(&mut p.theta0, f.take_angle("theta0_rad", "theta0_deg")?);
    set(&mut p.theta_dot0, f.take_angle("theta_dot0_rad_s", "theta_dot0_deg_s")?);
    set(&mut p.sigma_r, f.take_f64("sigma_r_nm")?);
    p.filter_sigma_r = f.take_f64("filter_sigma_r_nm")?;
    set(&mut p.sigma_o, f.take_f64("sigma_o_rad")?);
    set(&mut p.dt, f.take_f64("dt_s")?);
    set(&mut p.duration, f.take_f64("duration_s")?);
    set(&mut p.rate_hz, f.take_f64("rate_hz")?);
    if let Some(e) = f.take_raw("truth") {
        p.truth = match e.value {
            "nonlinear" => TruthModel::Nonlinear,
            "linear" => TruthModel::Linear,
            other => {
                return Err(ConfigError::Value {
                    line: e.line,
                    key: "truth".into(),
                    value: other.into(),
                    expected: "`nonlinear` or `linear`",
                })
            }
        };
    }
    Ok(p)
}

fn parse_tracking(f: &mut Fields) -> Result<TrackingParams, ConfigError> {
    let mut p = TrackingParams::default();
    set(&mut p.dt, f.take_f64("dt_s")?);
    set(&mut p.duration, f.take_f64("duration_s")?);
    set(&mut p.sigma_a, f.take_f64("sigma_a_mps2")?);
    set(&mut p.sigma_pos, f.take_f64("sigma_pos_m")?);
    for (i, key) in TRACKING_X0_KEYS.iter().enumerate() {
        set(&mut p.x0[i], f.take_f64(key)?);
    }
    Ok(p)
}

const TRACKING_X0_KEYS: [&str; 4] = ["px0_m", "vx0_mps", "py0_m", "vy0_mps"];

/// Config key for a parameter name reported by scenario validation.
fn config_key(scenario: &Scenario, what: &str) -> String {
    let key = match (scenario, what) {
        (_, "dt") => "dt_s",
        (_, "duration") => "duration_s",
        (_, "rate_hz") => "rate_hz",
        (Scenario::Pendulum(_), "gravity") => "g_mps2",
        (Scenario::Pendulum(_), "length") => "length_m",
        (Scenario::Pendulum(_), "mass") => "mass_kg",
        (Scenario::Pendulum(_), "theta0") => "theta0_rad",
        (Scenario::Pendulum(_), "theta_dot0") => "theta_dot0_rad_s",
        (Scenario::Pendulum(_), "sigma_r") => "sigma_r_nm",
        (Scenario::Pendulum(_), "filter_sigma_r") => "filter_sigma_r_nm",
        (Scenario::Pendulum(_), "sigma_o") => "sigma_o_rad",
        (Scenario::Tracking(_), "sigma_a") => "sigma_a_mps2",
        (Scenario::Tracking(_), "sigma_pos") => "sigma_pos_m",
        (Scenario::Tracking(_), "x0") => "px0_m/vx0_mps/py0_m/vy0_mps",
        _ => what,
    };
    key.to_string()
}

fn parse_seed_list(e: &Entry) -> Result<Vec<u64>, ConfigError> {
    let bad = || ConfigError::Value {
        line: e.line,
        key: "seed_list".into(),
        value: e.value.into(),
        expected: "comma-separated non-negative integers",
    };
    e.value
        .split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|_| bad()))
        .collect()
}

fn parse_seeds(f: &mut Fields) -> Result<Seeds, ConfigError> {
    let single: Option<u64> = f.take("seed", "a non-negative integer")?;
    let list = f.take_raw("seed_list").map(|e| parse_seed_list(&e)).transpose()?;
    let count: Option<u64> = f.take("seeds", "a positive integer")?;
    let base: Option<u64> = f.take("base_seed", "a non-negative integer")?;
    let given = [single.is_some(), list.is_some(), count.is_some()];
    if given.iter().filter(|g| **g).count() > 1 {
        return Err(ConfigError::Domain {
            key: "seed".into(),
            reason: "only one of `seed`, `seed_list`, `seeds` may be given".into(),
        });
    }
    if base.is_some() && count.is_none() {
        return Err(ConfigError::Domain {
            key: "base_seed".into(),
            reason: "requires `seeds`".into(),
        });
    }
    Ok(match (single, list, count) {
        (Some(s), _, _) => Seeds::List(vec![s]),
        (_, Some(l), _) => Seeds::List(l),
        (_, _, Some(0)) => {
            return Err(ConfigError::Domain {
                key: "seeds".into(),
                reason: "must be at least 1".into(),
            })
        }
        (_, _, Some(count)) => Seeds::Count {
            count,
            base: base.unwrap_or(0),
        },
        _ => Seeds::List(vec![0]),
    })
}

/// Parses and validates a configuration document, filling defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut f = Fields::tokenize(text)?;
    let entry = f.take_raw("scenario").ok_or(ConfigError::Missing("scenario"))?;
    let scenario = match entry.value {
        "pendulum" => Scenario::Pendulum(parse_pendulum(&mut f)?),
        "tracking" => Scenario::Tracking(parse_tracking(&mut f)?),
        other => {
            return Err(ConfigError::Value {
                line: entry.line,
                key: "scenario".into(),
                value: other.into(),
                expected: "`pendulum` or `tracking`",
            })
        }
    };
    let seeds = parse_seeds(&mut f)?;
    let output_dir = f
        .take_raw("output_dir")
        .map(|e| PathBuf::from(e.value))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let mut emit = Emit::default();
    set(&mut emit.trace_csv, f.take_bool("emit_trace_csv")?);
    set(&mut emit.summary, f.take_bool("emit_summary")?);
    set(&mut emit.plot_data, f.take_bool("emit_plot_data")?);
    f.finish()?;
    validate_scenario(&scenario)?;
    Ok(RunConfig {
        scenario,
        seeds,
        output_dir,
        emit,
    })
}

/// Scenario validation with errors named by config key.
pub fn validate_scenario(scenario: &Scenario) -> Result<(), ConfigError> {
    scenario.validate().map_err(|e| match e {
        fusekit_core::Error::Domain { what, reason } => ConfigError::Domain {
            key: config_key(scenario, what),
            reason,
        },
        other => ConfigError::Domain {
            key: "scenario".into(),
            reason: other.to_string(),
        },
    })
}

/// Canonical `(key, value)` pairs for a config, with every default spelled
/// out and angles in radians.
pub fn config_pairs(c: &RunConfig) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| out.push((k.to_string(), v));
    put("scenario", c.scenario.name().into());
    match &c.seeds {
        Seeds::List(l) => put(
            "seed_list",
            l.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
        ),
        Seeds::Count { count, base } => {
            put("seeds", count.to_string());
            put("base_seed", base.to_string());
        }
    }
    put("output_dir", c.output_dir.display().to_string());
    put("emit_trace_csv", c.emit.trace_csv.to_string());
    put("emit_summary", c.emit.summary.to_string());
    put("emit_plot_data", c.emit.plot_data.to_string());
    match &c.scenario {
        Scenario::Pendulum(p) => {
            put("g_mps2", p.gravity.to_string());
            put("length_m", p.length.to_string());
            put("mass_kg", p.mass.to_string());
            put("theta0_rad", p.theta0.to_string());
            put("theta_dot0_rad_s", p.theta_dot0.to_string());
            put("sigma_r_nm", p.sigma_r.to_string());
            if let Some(s) = p.filter_sigma_r {
                put("filter_sigma_r_nm", s.to_string());
            }
            put("sigma_o_rad", p.sigma_o.to_string());
            put("dt_s", p.dt.to_string());
            put("duration_s", p.duration.to_string());
            put("rate_hz", p.rate_hz.to_string());
            let truth = match p.truth {
                TruthModel::Nonlinear => "nonlinear",
                TruthModel::Linear => "linear",
            };
            put("truth", truth.into());
        }
        Scenario::Tracking(p) => {
            put("dt_s", p.dt.to_string());
            put("duration_s", p.duration.to_string());
            put("sigma_a_mps2", p.sigma_a.to_string());
            put("sigma_pos_m", p.sigma_pos.to_string());
            for (key, v) in TRACKING_X0_KEYS.iter().zip(p.x0) {
                put(key, v.to_string());
            }
        }
    }
    out
}

/// Renders a config document that parses back to `c`.
pub fn render(c: &RunConfig) -> String {
    let mut s = String::new();
    for (k, v) in config_pairs(c) {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_shape_with_defaults() {
        let c = parse_config("scenario = pendulum\nduration_s = 10\nrate_hz = 10\ntheta0_deg = 10\n").unwrap();
        let Scenario::Pendulum(p) = &c.scenario else {
            panic!("wrong scenario")
        };
        assert_eq!(p, &PendulumParams::default());
        assert_eq!(c.seeds, Seeds::List(vec![0]));
        assert_eq!(c.emit, Emit::default());
    }

    #[test]
    fn empty_document_misses_scenario() {
        assert_eq!(parse_config(""), Err(ConfigError::Missing("scenario")));
        assert_eq!(parse_config("# nothing\n\n"), Err(ConfigError::Missing("scenario")));
    }

    #[test]
    fn negative_dt_names_key() {
        match parse_config("scenario = pendulum\ndt_s = -0.1") {
            Err(ConfigError::Domain { key, .. }) => assert_eq!(key, "dt_s"),
            other => panic!("{other:?}"),
        }
        match parse_config("scenario = tracking\nsigma_pos_m = -1") {
            Err(ConfigError::Domain { key, .. }) => assert_eq!(key, "sigma_pos_m"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line() {
        assert!(matches!(
            parse_config("scenario = pendulum\n\njust words\n"),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
        assert!(matches!(
            parse_config("scenario = pendulum\ndt_s =\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn strict_keys() {
        assert_eq!(
            parse_config("scenario = pendulum\nsigma_a_mps2 = 1\n"),
            Err(ConfigError::UnknownKey {
                line: 2,
                key: "sigma_a_mps2".into()
            })
        );
        assert!(matches!(
            parse_config("scenario = pendulum\ndt_s = 0.01\ndt_s = 0.01\n"),
            Err(ConfigError::DuplicateKey { line: 3, first: 2, .. })
        ));
        assert!(matches!(
            parse_config("scenario = pendulum\ntheta0_deg = 10\ntheta0_rad = 0.1\n"),
            Err(ConfigError::Domain { .. })
        ));
    }

    #[test]
    fn bad_values() {
        assert!(matches!(
            parse_config("scenario = pendulum\ndt_s = fast\n"),
            Err(ConfigError::Value { line: 2, .. })
        ));
        assert!(matches!(parse_config("scenario = rocket\n"), Err(ConfigError::Value { .. })));
        assert!(matches!(
            parse_config("scenario = pendulum\nseed_list = 1, x\n"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            parse_config("scenario = pendulum\nseeds = 0\n"),
            Err(ConfigError::Domain { .. })
        ));
        assert!(matches!(
            parse_config("scenario = pendulum\nbase_seed = 4\n"),
            Err(ConfigError::Domain { .. })
        ));
    }

    #[test]
    fn comments_and_seeds() {
        let c = parse_config(
            "# divergence study\nscenario = pendulum # inline\nseeds = 20\nbase_seed = 100\nfilter_sigma_r_nm = 0\ntruth = linear\n",
        )
        .unwrap();
        assert_eq!(c.seeds.expand(), (100..120).collect::<Vec<_>>());
        let Scenario::Pendulum(p) = &c.scenario else {
            panic!()
        };
        assert_eq!(p.filter_sigma_r, Some(0.0));
        assert_eq!(p.truth, TruthModel::Linear);
    }

    #[test]
    fn degrees_render_as_radians() {
        let c = parse_config("scenario = pendulum\ntheta0_deg = 45\ntheta_dot0_deg_s = -3\n").unwrap();
        let text = render(&c);
        assert!(text.contains("theta0_rad = "));
        assert!(!text.contains("_deg"));
        assert_eq!(parse_config(&text).unwrap(), c);
    }
}
