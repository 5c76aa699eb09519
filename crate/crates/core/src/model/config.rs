//! Flat `key = value` configuration.
//!
//! One entry per line, `#` starts a comment, lists are comma separated:
//!
//! ```text
//! # full-scale setup
//! M = 300
//! K = 40
//! B = 5
//! delta = pi/10
//! snr_db = -10,-5,0,5
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::ModelError;

/// One parsed `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    /// 1-based line number in the source text, 0 for overrides.
    pub line: usize,
}

/// Parses the key-value text format. Later duplicates override earlier ones.
pub fn parse_key_values(text: &str) -> Result<Vec<ConfigEntry>, ModelError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ModelError::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ModelError::Config {
                line,
                message: format!("invalid key `{key}`"),
            });
        }
        entries.push(ConfigEntry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(entries)
}

/// Message schedule of the decentralized receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// LPUs visited left to right inside each outer iteration.
    #[default]
    Sequential,
    /// All LPUs update from the previous sweep's messages at once.
    Flooding,
}

/// Noise level fed to the MRC initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaInit {
    /// `||y_b||² / M_b`, computed locally from the residual.
    #[default]
    FromData,
    /// The true noise variance of the trial.
    TrueNoise,
}

/// How `mu_l`/`sigma2_l` parameterize the visibility-region length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VrLengthModel {
    /// Mean and variance of the logarithm of the length.
    #[default]
    LogParams,
    /// Mean and variance of the length itself.
    LengthMoments,
}

macro_rules! keyword_enum {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.trim() {
                    $($name => Ok($variant),)+
                    other => Err(format!(
                        "unknown value `{other}`, expected one of: {}",
                        [$($name),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Schedule { "sequential" => Schedule::Sequential, "flooding" => Schedule::Flooding });
keyword_enum!(LambdaInit { "data" => LambdaInit::FromData, "true" => LambdaInit::TrueNoise });
keyword_enum!(VrLengthModel {
    "log" => VrLengthModel::LogParams,
    "moments" => VrLengthModel::LengthMoments,
});

/// System, channel and receiver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Antenna count.
    pub m: usize,
    /// User count.
    pub k: usize,
    /// Sub-array (LPU) count; must divide `m`.
    pub b: usize,
    /// Angular spread of the one-ring model, radians.
    pub delta: f64,
    pub snr_db: Vec<f64>,
    /// VMP iterations per LPU visit.
    pub j: usize,
    /// Outer sweeps over the chain.
    pub t: usize,
    /// LR threshold for local SIC; `inf` disables SIC.
    pub gamma_thr: f64,
    pub mu_l: f64,
    pub sigma2_l: f64,
    pub vr_length_model: VrLengthModel,
    /// Antenna spacing in wavelengths.
    pub antenna_spacing: f64,
    /// Multiplier turning a lognormal draw into a fraction of the array;
    /// `None` puts the median VR at half the array.
    pub vr_length_scale: Option<f64>,
    pub seed: u64,
    /// Trials between covariance and VR refreshes.
    pub cov_refresh: usize,
    pub schedule: Schedule,
    pub lambda_init: LambdaInit,
    /// Inner iterations of the central VMP baseline; `None` means `j * t`.
    pub j_central: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 300,
            k: 40,
            b: 5,
            delta: PI / 10.0,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0],
            j: 2,
            t: 10,
            gamma_thr: 1e3,
            mu_l: 0.7,
            sigma2_l: 0.2,
            vr_length_model: VrLengthModel::LogParams,
            antenna_spacing: 0.5,
            vr_length_scale: None,
            seed: 1,
            cov_refresh: 50,
            schedule: Schedule::Sequential,
            lambda_init: LambdaInit::FromData,
            j_central: None,
        }
    }
}

/// Documentation for every key understood by [`SystemConfig`].
pub const SYSTEM_KEYS: &[(&str, &str)] = &[
    ("M", "antenna count"),
    ("K", "user count"),
    ("B", "sub-array (LPU) count, must divide M"),
    ("delta", "angular spread in radians (accepts `pi/10` style values)"),
    ("snr_db", "comma-separated SNR points in dB"),
    ("J", "VMP iterations per LPU visit"),
    ("T", "outer sweeps over the LPU chain"),
    ("gamma_thr", "LR threshold for local SIC (`inf` disables SIC)"),
    ("mu_l", "lognormal location of the VR length"),
    ("sigma2_l", "lognormal scale (variance) of the VR length"),
    ("vr_length_model", "`log` (mu_l/sigma2_l describe log-length) or `moments`"),
    ("antenna_spacing", "ULA spacing in wavelengths"),
    ("vr_length_scale", "lognormal draw to array-fraction multiplier, or `auto`"),
    ("seed", "64-bit master seed"),
    ("cov_refresh", "trials between covariance/VR refreshes"),
    ("schedule", "`sequential` or `flooding`"),
    ("lambda_init", "MRC noise level: `data` (local estimate) or `true`"),
    ("j_central", "central VMP inner iterations, or `auto` for J*T"),
];

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V, String>
where
    V::Err: fmt::Display,
{
    value
        .trim()
        .parse::<V>()
        .map_err(|e| format!("invalid value `{value}` for `{key}`: {e}"))
}

/// Parses a real number, allowing `pi`, `pi/N`, `X*pi` and `X*pi/N`.
pub fn parse_real(value: &str) -> Result<f64, String> {
    let v = value.trim();
    if !v.contains("pi") {
        return v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    }
    let (numer, denom) = match v.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (v, None),
    };
    let factor = match numer.strip_suffix("pi").map(str::trim) {
        Some("") => 1.0,
        Some(f) => f
            .trim_end_matches('*')
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("`{v}`: {e}"))?,
        None => return Err(format!("`{v}`: malformed pi expression")),
    };
    let denom = match denom {
        Some(d) => d.parse::<f64>().map_err(|e| format!("`{v}`: {e}"))?,
        None => 1.0,
    };
    Ok(factor * PI / denom)
}

pub fn parse_real_list(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_real)
        .collect()
}

fn auto_or<V: FromStr>(key: &str, value: &str) -> Result<Option<V>, String>
where
    V::Err: fmt::Display,
{
    if value.trim() == "auto" {
        Ok(None)
    } else {
        parse_value(key, value).map(Some)
    }
}

impl SystemConfig {
    /// Applies one key. Returns `Ok(false)` for keys this type does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        match key {
            "M" => self.m = parse_value(key, value)?,
            "K" => self.k = parse_value(key, value)?,
            "B" => self.b = parse_value(key, value)?,
            "delta" => self.delta = parse_real(value)?,
            "snr_db" => self.snr_db = parse_real_list(value)?,
            "J" => self.j = parse_value(key, value)?,
            "T" => self.t = parse_value(key, value)?,
            "gamma_thr" => self.gamma_thr = parse_real(value)?,
            "mu_l" => self.mu_l = parse_real(value)?,
            "sigma2_l" => self.sigma2_l = parse_real(value)?,
            "vr_length_model" => self.vr_length_model = parse_value(key, value)?,
            "antenna_spacing" => self.antenna_spacing = parse_real(value)?,
            "vr_length_scale" => {
                self.vr_length_scale = if value.trim() == "auto" {
                    None
                } else {
                    Some(parse_real(value)?)
                }
            }
            "seed" => self.seed = parse_value(key, value)?,
            "cov_refresh" => self.cov_refresh = parse_value(key, value)?,
            "schedule" => self.schedule = parse_value(key, value)?,
            "lambda_init" => self.lambda_init = parse_value(key, value)?,
            "j_central" => self.j_central = auto_or(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Parses a whole config text, rejecting unknown keys.
    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut cfg = Self::default();
        for e in parse_key_values(text)? {
            match cfg.set(&e.key, &e.value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ModelError::Config {
                        line: e.line,
                        message: format!("unknown key `{}`", e.key),
                    })
                }
                Err(message) => return Err(ModelError::Config { line: e.line, message }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.m == 0 || self.k == 0 || self.b == 0 {
            return bad("M, K and B must be positive".into());
        }
        if self.m % self.b != 0 {
            return bad(format!("B = {} does not divide M = {}", self.b, self.m));
        }
        if self.j == 0 || self.t == 0 {
            return bad("J and T must be at least 1".into());
        }
        if !(self.gamma_thr > 1.0) {
            return bad(format!("gamma_thr must exceed 1, got {}", self.gamma_thr));
        }
        if !(self.delta > 0.0 && self.delta <= PI / 2.0) {
            return bad(format!("delta must lie in (0, pi/2], got {}", self.delta));
        }
        if !(self.sigma2_l >= 0.0) || !self.mu_l.is_finite() {
            return bad("lognormal VR parameters must be finite with sigma2_l >= 0".into());
        }
        if self.vr_length_model == VrLengthModel::LengthMoments && !(self.mu_l > 0.0) {
            return bad("moment-parameterized VR length needs mu_l > 0".into());
        }
        if !(self.antenna_spacing > 0.0) {
            return bad("antenna_spacing must be positive".into());
        }
        if let Some(s) = self.vr_length_scale {
            if !(s > 0.0) {
                return bad("vr_length_scale must be positive".into());
            }
        }
        if self.cov_refresh == 0 {
            return bad("cov_refresh must be at least 1".into());
        }
        if self.j_central == Some(0) {
            return bad("j_central must be at least 1".into());
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return bad("snr_db entries must be numbers (`inf` means noiseless)".into());
        }
        Ok(())
    }

    /// Antennas per sub-array.
    pub fn antennas_per_lpu(&self) -> usize {
        self.m / self.b
    }

    pub fn sic_enabled(&self) -> bool {
        self.gamma_thr.is_finite()
    }

    /// Iteration budget of the central VMP baseline.
    pub fn central_iterations(&self) -> usize {
        self.j_central.unwrap_or(self.j * self.t)
    }

    /// `(log-mean, log-variance)` of the VR length draw.
    pub fn vr_log_params(&self) -> (f64, f64) {
        match self.vr_length_model {
            VrLengthModel::LogParams => (self.mu_l, self.sigma2_l),
            VrLengthModel::LengthMoments => {
                let var_log = (1.0 + self.sigma2_l / (self.mu_l * self.mu_l)).ln();
                (self.mu_l.ln() - var_log / 2.0, var_log)
            }
        }
    }

    /// Effective VR length scale; `auto` puts the median VR at half the array.
    pub fn effective_vr_scale(&self) -> f64 {
        self.vr_length_scale
            .unwrap_or_else(|| 0.5 / self.vr_log_params().0.exp())
    }

    /// Serializes every key in the config-file format.
    pub fn to_key_values(&self) -> BTreeMap<&'static str, String> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut kv = BTreeMap::new();
        kv.insert("M", self.m.to_string());
        kv.insert("K", self.k.to_string());
        kv.insert("B", self.b.to_string());
        kv.insert("delta", format!("{}", self.delta));
        kv.insert("snr_db", list(&self.snr_db));
        kv.insert("J", self.j.to_string());
        kv.insert("T", self.t.to_string());
        kv.insert("gamma_thr", format!("{}", self.gamma_thr));
        kv.insert("mu_l", format!("{}", self.mu_l));
        kv.insert("sigma2_l", format!("{}", self.sigma2_l));
        kv.insert("vr_length_model", self.vr_length_model.to_string());
        kv.insert("antenna_spacing", format!("{}", self.antenna_spacing));
        kv.insert(
            "vr_length_scale",
            self.vr_length_scale
                .map_or_else(|| "auto".to_string(), |s| format!("{s}")),
        );
        kv.insert("seed", self.seed.to_string());
        kv.insert("cov_refresh", self.cov_refresh.to_string());
        kv.insert("schedule", self.schedule.to_string());
        kv.insert("lambda_init", self.lambda_init.to_string());
        kv.insert(
            "j_central",
            self.j_central.map_or_else(|| "auto".to_string(), |j| j.to_string()),
        );
        kv
    }
}
