//! Key-value run configuration.
//!
//! One `key = value` per line; `#` starts a comment. Every key has a default,
//! so an empty file is a valid configuration. Flag overrides use the same
//! syntax and win over the file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chiprobe_core::model::DecoherenceParams;
use chiprobe_core::reconstruction::{FMode, PlanConfig, ShotPolicy};
use chiprobe_core::states::{parse_angle, OscillatorState, Parity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Scan,
    Reconstruct,
    Moments,
    Cat,
    OracleCheck,
    Budget,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Scan,
        Command::Reconstruct,
        Command::Moments,
        Command::Cat,
        Command::OracleCheck,
        Command::Budget,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Reconstruct => "reconstruct",
            Command::Moments => "moments",
            Command::Cat => "cat",
            Command::OracleCheck => "oracle-check",
            Command::Budget => "budget",
        }
    }

    fn uses_grid_reach(self) -> bool {
        matches!(self, Command::Scan | Command::Reconstruct | Command::OracleCheck)
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Analytic,
    Oracle,
}

/// `(key, default, description)`. An empty default means "unset".
pub const KEYS: &[(&str, &str, &str)] = &[
    ("command", "scan", "subcommand; normally taken from the command line"),
    ("state", "fock:5", "oscillator state: fock:N, coherent:a+bi, thermal:NBAR, cat:ALPHA,VARPHI,+|-"),
    ("omega", "2pi*100 MHz", "coupling modulation frequency Ω"),
    ("kappa", "2pi*0.05 MHz", "oscillator damping rate κ"),
    ("kappa_delta", "2pi*1 MHz", "thermal heating rate κΔ; sets N_m = Δ − 1/2"),
    ("n_m", "", "oscillator bath occupation N_m (instead of kappa_delta)"),
    ("gamma1", "2pi*0.4 MHz", "qubit relaxation rate Γ1"),
    ("gamma2", "2pi*0.4 MHz", "qubit pure-dephasing rate Γ2"),
    ("n_q", "0", "qubit bath occupation N_q"),
    ("r0", "0", "constant part of the harmonic coupling"),
    ("r_max", "0.5", "largest per-period step r"),
    ("n_max", "10", "largest number of drive periods"),
    ("f_mode", "exact", "damping exponent used for correction: exact | approx"),
    ("shots", "infinite", "shots per axis: infinite | budget:EPS | fixed:M"),
    ("seed", "0", "master random seed"),
    ("engine", "analytic", "signal source: analytic | oracle"),
    ("oracle_dim", "30", "Fock truncation of the master-equation oracle"),
    ("grid_extent", "3.5", "grid covers [-extent, extent]^2"),
    ("grid_resolution", "41", "grid points per axis"),
    ("ray_phi", "-pi/2", "direction arg(β) of the moment ray"),
    ("fit_order", "4", "highest moment fitted"),
    ("fit_radii", "12", "number of radii on the moment ray"),
    ("r_fit_max", "0.5", "largest radius on the moment ray"),
    ("cat_r", "0.5", "per-period step of the cat-preparation coupling"),
    ("cat_n", "4", "periods of the cat-preparation coupling"),
    ("cat_phi", "pi/2", "phase of the cat-preparation coupling"),
    ("varphi", "pi/2", "post-selection phase φ"),
    ("parity", "+", "post-selection outcome: + | -"),
    ("f_values", "0.5, 1, 2, 3, 4, 5, 6", "damping exponents for the budget table"),
    ("target_rel_error", "0.2", "target relative error ε for budgets"),
];

pub const RATE_HELP: &str = "Rates and frequencies need a unit: `<x> MHz` or `<x> kHz` is a cyclic frequency, \
stored as the angular 2π·x (so `100 MHz`, `2pi*100 MHz` and `100*2pi MHz` are the same value); \
`<x> rad/us` is taken as is; `<x> omega` is a multiple of Ω. Internal units are rad/µs and µs.";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub state: OscillatorState,
    pub omega: f64,
    pub params: DecoherenceParams,
    pub plan: PlanConfig,
    pub seed: u64,
    pub engine: EngineChoice,
    pub oracle_dim: usize,
    pub grid_extent: f64,
    pub grid_resolution: usize,
    pub ray_phi: f64,
    pub fit_order: usize,
    pub fit_radii: usize,
    pub r_fit_max: f64,
    pub cat_r: f64,
    pub cat_n: u32,
    pub cat_phi: f64,
    pub varphi: f64,
    pub parity: Parity,
    pub f_values: Vec<f64>,
    pub target_rel_error: f64,
    /// Resolved `key = value` text for every key, in [`KEYS`] order.
    pub echo: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: Option<usize>,
    explicit: bool,
}

fn number_and_unit(text: &str) -> (&str, &str) {
    let t = text.trim();
    match t.rfind(|c: char| c.is_whitespace()) {
        Some(k) => (t[..k].trim(), t[k..].trim()),
        None => (t, ""),
    }
}

/// Value of `2pi*x`, `x*2pi`, `2π*x` or `x`.
fn strip_two_pi(num: &str) -> Result<(f64, bool), String> {
    let s: String = num.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.replace('π', "pi").to_ascii_lowercase();
    let body = s
        .strip_prefix("2pi*")
        .or_else(|| s.strip_suffix("*2pi"))
        .map(|b| (b, true))
        .unwrap_or((s.as_str(), false));
    let v = body.0.parse::<f64>().map_err(|_| format!("cannot parse number `{num}`"))?;
    Ok((v, body.1))
}

/// Angular rate in rad/µs. `omega` resolves the `omega` unit.
pub fn parse_rate(text: &str, omega: Option<f64>) -> Result<f64, String> {
    let (num, unit) = number_and_unit(text);
    if unit.is_empty() {
        return Err(format!("`{text}` has no unit; {RATE_HELP}"));
    }
    let (v, two_pi) = strip_two_pi(num)?;
    let value = match unit.to_ascii_lowercase().as_str() {
        "mhz" => 2.0 * PI * v,
        "khz" => 2.0 * PI * v * 1e-3,
        "rad/us" | "rad/µs" => {
            if two_pi {
                2.0 * PI * v
            } else {
                v
            }
        }
        "omega" => match omega {
            Some(w) => v * w * if two_pi { 2.0 * PI } else { 1.0 },
            None => return Err("the `omega` unit is not available here".into()),
        },
        other => return Err(format!("unknown unit `{other}`; {RATE_HELP}")),
    };
    if !value.is_finite() || value < 0.0 {
        return Err(format!("must be finite and >= 0, got {value}"));
    }
    Ok(value)
}

fn parse_shots(text: &str) -> Result<ShotPolicy, String> {
    let t = text.trim().to_ascii_lowercase();
    if t == "infinite" {
        return Ok(ShotPolicy::Infinite);
    }
    if let Some(eps) = t.strip_prefix("budget:") {
        let e = eps.trim().parse::<f64>().map_err(|_| format!("bad ε `{eps}`"))?;
        if !(e > 0.0 && e <= 1.0) {
            return Err(format!("ε must be in (0, 1], got {e}"));
        }
        return Ok(ShotPolicy::Budgeted { target_rel_error: e });
    }
    if let Some(m) = t.strip_prefix("fixed:") {
        let m = m.trim().parse::<u64>().map_err(|_| format!("bad shot count `{m}`"))?;
        if m == 0 {
            return Err("shot count must be >= 1".into());
        }
        return Ok(ShotPolicy::Fixed { shots: m });
    }
    Err(format!("expected infinite | budget:EPS | fixed:M, got `{text}`"))
}

/// Collects typed values, recording every failure instead of stopping.
struct Reader<'a> {
    entries: &'a BTreeMap<&'static str, Entry>,
    errors: Vec<ConfigError>,
}

impl Reader<'_> {
    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let line = self.entries.get(key).and_then(|e| e.line);
        self.errors.push(ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        });
    }

    fn raw(&self, key: &str) -> &str {
        self.entries[key].value.as_str()
    }

    fn explicit(&self, key: &str) -> bool {
        self.entries[key].explicit
    }

    fn get<T>(&mut self, key: &str, default: T, parse: impl FnOnce(&str) -> Result<T, String>) -> T {
        match parse(self.raw(key)) {
            Ok(v) => v,
            Err(m) => {
                self.fail(key, m);
                default
            }
        }
    }

    fn float(&mut self, key: &str, check: impl FnOnce(f64) -> bool, need: &str) -> f64 {
        let need = need.to_string();
        self.get(key, f64::NAN, |s| {
            let v = s.trim().parse::<f64>().map_err(|_| format!("cannot parse number `{s}`"))?;
            if v.is_finite() && check(v) {
                Ok(v)
            } else {
                Err(format!("must be {need}, got {v}"))
            }
        })
    }

    fn int<T: FromStr>(&mut self, key: &str, default: T, check: impl FnOnce(&T) -> bool, need: &str) -> T {
        let need = need.to_string();
        self.get(key, default, |s| {
            let v = s.trim().parse::<T>().map_err(|_| format!("expected an integer, got `{s}`"))?;
            if check(&v) {
                Ok(v)
            } else {
                Err(format!("must be {need}"))
            }
        })
    }

    fn angle(&mut self, key: &str) -> f64 {
        self.get(key, 0.0, |s| parse_angle(s).ok_or_else(|| format!("cannot parse angle `{s}`")))
    }

    fn rate(&mut self, key: &str, omega: Option<f64>) -> f64 {
        self.get(key, f64::NAN, |s| parse_rate(s, omega))
    }
}

fn parse_lines(
    text: &str,
    entries: &mut BTreeMap<&'static str, Entry>,
    from_file: bool,
    errors: &mut Vec<ConfigError>,
) {
    let mut seen = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = from_file.then_some(k + 1);
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError {
                line: lineno,
                key: line.to_string(),
                message: "expected `key = value`".into(),
            });
            continue;
        };
        let key = key.trim();
        let Some(&(name, _, _)) = KEYS.iter().find(|(n, _, _)| *n == key) else {
            errors.push(ConfigError {
                line: lineno,
                key: key.to_string(),
                message: "unknown key".into(),
            });
            continue;
        };
        if from_file && seen.contains(&name) {
            errors.push(ConfigError {
                line: lineno,
                key: key.to_string(),
                message: "key given more than once".into(),
            });
            continue;
        }
        seen.push(name);
        entries.insert(
            name,
            Entry {
                value: value.trim().to_string(),
                line: lineno,
                explicit: true,
            },
        );
    }
}

/// Parses a configuration file with the documented defaults filled in.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    parse_config_with(text, &[])
}

/// As [`parse_config`], then applies `key=value` overrides in order.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, Vec<ConfigError>> {
    let mut entries: BTreeMap<&'static str, Entry> = KEYS
        .iter()
        .map(|&(k, d, _)| {
            (
                k,
                Entry {
                    value: d.to_string(),
                    line: None,
                    explicit: false,
                },
            )
        })
        .collect();
    let mut errors = Vec::new();
    parse_lines(text, &mut entries, true, &mut errors);
    parse_lines(&overrides.join("\n"), &mut entries, false, &mut errors);

    let mut r = Reader {
        entries: &entries,
        errors,
    };
    let command = r.get("command", Command::Scan, |s| s.parse());
    let state = r.get("state", OscillatorState::vacuum(), |s| s.parse().map_err(|e| format!("{e}")));
    let omega = r.rate("omega", None);
    let omega_ok = omega > 0.0;
    if !omega_ok && omega.is_finite() {
        r.fail("omega", "must be > 0");
    }
    let w = omega_ok.then_some(omega);
    let kappa = r.rate("kappa", w);
    let gamma1 = r.rate("gamma1", w);
    let gamma2 = r.rate("gamma2", w);
    let n_q = r.float("n_q", |v| v >= 0.0, ">= 0");

    let n_m = if r.explicit("n_m") {
        if r.explicit("kappa_delta") {
            r.fail("n_m", "give either n_m or kappa_delta, not both");
        }
        r.float("n_m", |v| v >= 0.0, ">= 0")
    } else {
        let kd = r.rate("kappa_delta", w);
        if kd.is_finite() && kappa.is_finite() {
            if kappa > 0.0 {
                let n = kd / kappa - 0.5;
                if n < 0.0 {
                    r.fail("kappa_delta", "implies N_m < 0; need kappa_delta >= kappa/2");
                }
                n
            } else if kd > 0.0 {
                r.fail("kappa_delta", "needs kappa > 0; set n_m instead");
                f64::NAN
            } else {
                0.0
            }
        } else {
            f64::NAN
        }
    };

    let r0 = r.float("r0", |_| true, "finite");
    let r_max = r.float("r_max", |v| v > 0.0, "> 0");
    let n_max = r.int::<u32>("n_max", 10, |&n| n >= 1, ">= 1");
    let f_mode = r.get("f_mode", FMode::Exact, |s| match s.trim() {
        "exact" => Ok(FMode::Exact),
        "approx" => Ok(FMode::Approx),
        o => Err(format!("expected exact | approx, got `{o}`")),
    });
    let shots = r.get("shots", ShotPolicy::Infinite, parse_shots);
    let seed = r.int::<u64>("seed", 0, |_| true, "a nonnegative integer");
    let engine = r.get("engine", EngineChoice::Analytic, |s| match s.trim() {
        "analytic" => Ok(EngineChoice::Analytic),
        "oracle" => Ok(EngineChoice::Oracle),
        o => Err(format!("expected analytic | oracle, got `{o}`")),
    });
    let oracle_dim = r.int::<usize>("oracle_dim", 30, |&d| (4..=400).contains(&d), "in [4, 400]");
    let grid_extent = r.float("grid_extent", |v| v > 0.0, "> 0");
    let grid_resolution = r.int::<usize>("grid_resolution", 41, |&n| (2..=2001).contains(&n), "in [2, 2001]");
    let ray_phi = r.angle("ray_phi");
    let fit_order = r.int::<usize>("fit_order", 4, |&n| (1..=16).contains(&n), "in [1, 16]");
    let fit_radii = r.int::<usize>("fit_radii", 12, |&n| n >= 2, ">= 2");
    let r_fit_max = r.float("r_fit_max", |v| v > 0.0 && v <= 1.0, "in (0, 1]");
    let cat_r = r.float("cat_r", |v| v >= 0.0, ">= 0");
    let cat_n = r.int::<u32>("cat_n", 4, |&n| n >= 1, ">= 1");
    let cat_phi = r.angle("cat_phi");
    let varphi = r.angle("varphi");
    let parity = r.get("parity", Parity::Plus, |s| match s.trim() {
        "+" | "plus" => Ok(Parity::Plus),
        "-" | "minus" => Ok(Parity::Minus),
        o => Err(format!("expected + or -, got `{o}`")),
    });
    let f_values = r.get("f_values", Vec::new(), |s| {
        s.split(',')
            .map(|v| {
                let f = v.trim().parse::<f64>().map_err(|_| format!("cannot parse `{}`", v.trim()))?;
                if f.is_finite() && f >= 0.0 {
                    Ok(f)
                } else {
                    Err(format!("f values must be finite and >= 0, got {f}"))
                }
            })
            .collect()
    });
    let target_rel_error = r.float("target_rel_error", |v| v > 0.0 && v <= 1.0, "in (0, 1]");

    let params = match (kappa.is_finite() && gamma1.is_finite() && gamma2.is_finite() && n_m.is_finite() && n_q.is_finite())
        .then(|| DecoherenceParams::new(kappa, gamma1, gamma2, n_m, n_q))
    {
        Some(Ok(p)) => Some(p),
        Some(Err(e)) => {
            r.fail("kappa", format!("{e}"));
            None
        }
        None => None,
    };

    if grid_extent.is_finite() && r_max.is_finite() && command.uses_grid_reach() {
        let corner = grid_extent * 2f64.sqrt();
        let reach = n_max as f64 * r_max;
        if corner >= reach {
            r.fail(
                "grid_extent",
                format!("grid corner |beta| = {corner:.4} exceeds reach n_max * r_max = {reach:.4}"),
            );
        }
    }

    let errors = std::mem::take(&mut r.errors);
    if !errors.is_empty() {
        return Err(errors);
    }
    let echo = KEYS
        .iter()
        .map(|&(k, _, _)| (k.to_string(), entries[k].value.clone()))
        .collect();
    Ok(RunConfig {
        command,
        state,
        omega,
        params: params.expect("validated above"),
        plan: PlanConfig {
            r_max,
            n_max,
            r0,
            f_mode,
            shots,
        },
        seed,
        engine,
        oracle_dim,
        grid_extent,
        grid_resolution,
        ray_phi,
        fit_order,
        fit_radii,
        r_fit_max,
        cat_r,
        cat_n,
        cat_phi,
        varphi,
        parity,
        f_values,
        target_rel_error,
        echo,
    })
}

/// Help text listing every key with its default.
pub fn schema_help() -> String {
    let mut out = String::from("Configuration keys (file lines or --set key=value):\n");
    for (k, d, h) in KEYS {
        let d = if d.is_empty() { "(unset)" } else { d };
        out.push_str(&format!("  {k:<17} {h} [default: {d}]\n"));
    }
    out.push('\n');
    out.push_str(RATE_HELP);
    out
}
