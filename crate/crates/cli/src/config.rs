//! Flat `key = value` configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value            # trailing comments are allowed
//! key = v1, v2, v3       # lists are comma separated
//! snr_db = 0:5:20        # inclusive range start:step:stop
//! ```
//!
//! Keys are case-sensitive; unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;

use effq_core::validation::ValidationConfig;
use effq_core::{BitsRule, CodebookPolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line; `None` for whole-file problems such as a missing key.
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn file(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw entries with the line each came from.
#[derive(Debug, Default)]
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                ConfigError::at(line, format!("expected `key = value`, got `{content}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::at(line, "missing key before `=`"));
            }
            if !allowed.contains(&key) {
                return Err(ConfigError::at(
                    line,
                    format!(
                        "unknown key `{key}` (expected one of: {})",
                        allowed.join(", ")
                    ),
                ));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(ConfigError::at(
                    line,
                    format!("`{key}` already set on line {first}"),
                ));
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(l, _)| *l)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(line, format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.get(key)?
            .ok_or_else(|| ConfigError::file(format!("missing required key `{key}`")))
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        let Some((line, v)) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|_| {
                    ConfigError::at(line, format!("`{key}`: cannot parse list item `{item}`"))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

const SWEEP_KEYS: &[&str] = &[
    "m",
    "n",
    "snr_db",
    "bits_rule",
    "bits",
    "rate_gap",
    "trials",
    "seed",
    "codebook_policy",
];

const VALIDATE_KEYS: &[&str] = &["m", "n", "bits", "samples", "seed", "debug_shape_offset"];

/// Parsed `sweep` configuration. One experiment runs per receive-antenna
/// count in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m: usize,
    pub n: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub bits_rule: BitsRule,
    pub trials: u64,
    /// `None` until resolved from `--seed` or auto-generation.
    pub seed: Option<u64>,
    pub codebook_policy: CodebookPolicy,
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
fn parse_snr(entries: &Entries) -> Result<Vec<f64>, ConfigError> {
    let (line, v) = entries
        .raw("snr_db")
        .ok_or_else(|| ConfigError::file("missing required key `snr_db`"))?;
    if !v.contains(':') {
        return entries.list("snr_db").map(|l| l.unwrap_or_default());
    }
    let parts: Vec<f64> = v
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError::at(line, format!("`snr_db`: cannot parse range `{v}`")))?;
    let [start, step, stop] = parts[..] else {
        return Err(ConfigError::at(
            line,
            "`snr_db` range must be start:step:stop",
        ));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(ConfigError::at(
            line,
            "`snr_db` range needs a positive step and stop >= start",
        ));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(ConfigError::at(line, "`snr_db` range has too many points"));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub fn parse_sweep(text: &str) -> Result<SweepConfig, ConfigError> {
    let e = Entries::parse(text, SWEEP_KEYS)?;
    let m: usize = e.require("m")?;
    let n: Vec<usize> = e
        .list("n")?
        .ok_or_else(|| ConfigError::file("missing required key `n`"))?;
    let snr_db = parse_snr(&e)?;
    let trials: u64 = e.require("trials")?;
    let seed: Option<u64> = e.get("seed")?;

    let rule_line = e.line_of("bits_rule");
    let bits_rule = match e.raw("bits_rule").map(|(_, v)| v) {
        Some("fixed") => {
            if let Some(l) = e.line_of("rate_gap") {
                return Err(ConfigError::at(
                    l,
                    "`rate_gap` applies only to bits_rule = scaling",
                ));
            }
            let bits: u32 = e.require("bits")?;
            if bits == 0 {
                let l = e.line_of("bits").unwrap_or(0);
                return Err(ConfigError::at(l, "`bits` must be at least 1"));
            }
            BitsRule::Fixed { bits }
        }
        Some("scaling") => {
            if let Some(l) = e.line_of("bits") {
                return Err(ConfigError::at(
                    l,
                    "`bits` applies only to bits_rule = fixed",
                ));
            }
            BitsRule::Scaling {
                rate_gap: e.get("rate_gap")?.unwrap_or(1.0),
            }
        }
        Some(other) => {
            return Err(ConfigError::at(
                rule_line.unwrap_or(0),
                format!("`bits_rule` must be `fixed` or `scaling`, got `{other}`"),
            ))
        }
        None => return Err(ConfigError::file("missing required key `bits_rule`")),
    };
    let codebook_policy = match e.raw("codebook_policy") {
        None | Some((_, "per-block")) => CodebookPolicy::PerBlock,
        Some((_, "fixed")) => CodebookPolicy::Fixed,
        Some((line, other)) => {
            return Err(ConfigError::at(
                line,
                format!("`codebook_policy` must be `per-block` or `fixed`, got `{other}`"),
            ))
        }
    };

    let cfg = SweepConfig {
        m,
        n,
        snr_db,
        bits_rule,
        trials,
        seed,
        codebook_policy,
    };
    check_sweep(&cfg, &e)?;
    Ok(cfg)
}

/// Validates each per-N experiment, anchoring failures to the likeliest line.
fn check_sweep(cfg: &SweepConfig, e: &Entries) -> Result<(), ConfigError> {
    if cfg.n.is_empty() {
        return Err(ConfigError::at(e.line_of("n").unwrap_or(0), "`n` is empty"));
    }
    for exp in cfg.experiments(cfg.seed.unwrap_or(0)) {
        exp.validate().map_err(|err| {
            let msg = err.to_string();
            let key = if msg.contains("M must") {
                "m"
            } else if msg.contains("N must") {
                "n"
            } else if msg.contains("trials") {
                "trials"
            } else if msg.contains("SNR") {
                "snr_db"
            } else if msg.contains("rate gap") {
                "rate_gap"
            } else {
                "bits"
            };
            match e.line_of(key).or_else(|| e.line_of("bits_rule")) {
                Some(l) => ConfigError::at(l, msg),
                None => ConfigError::file(msg),
            }
        })?;
    }
    Ok(())
}

impl SweepConfig {
    pub fn experiments(&self, seed: u64) -> Vec<effq_core::ExperimentConfig> {
        self.n
            .iter()
            .map(|&n| effq_core::ExperimentConfig {
                m: self.m,
                n,
                snr_db: self.snr_db.clone(),
                bits_rule: self.bits_rule,
                trials: self.trials,
                seed,
                codebook_policy: self.codebook_policy,
            })
            .collect()
    }
}

/// Parsed `validate` configuration and its seed, if given. Absent keys take
/// the library defaults.
pub fn parse_validate(text: &str) -> Result<(ValidationConfig, Option<u64>), ConfigError> {
    let e = Entries::parse(text, VALIDATE_KEYS)?;
    let d = ValidationConfig::default();
    let seed: Option<u64> = e.get("seed")?;
    let cfg = ValidationConfig {
        m: e.get("m")?.unwrap_or(d.m),
        n: e.get("n")?.unwrap_or(d.n),
        bits: e.get("bits")?.unwrap_or(d.bits),
        samples: e.get("samples")?.unwrap_or(d.samples),
        seed: seed.unwrap_or(d.seed),
        shape_offset: e.get("debug_shape_offset")?.unwrap_or(0),
    };
    if cfg.m < 2 {
        return Err(ConfigError::at(
            e.line_of("m").unwrap_or(0),
            "`m` must be at least 2",
        ));
    }
    if cfg.n == 0 || cfg.n > cfg.m {
        return Err(ConfigError::at(
            e.line_of("n").or(e.line_of("m")).unwrap_or(0),
            format!("`n` must be in [1, m = {}]", cfg.m),
        ));
    }
    if cfg.bits == 0 || cfg.bits > effq_core::quantize::MAX_BITS {
        return Err(ConfigError::at(
            e.line_of("bits").unwrap_or(0),
            format!("`bits` must be in [1, {}]", effq_core::quantize::MAX_BITS),
        ));
    }
    if cfg.samples < 1000 {
        return Err(ConfigError::at(
            e.line_of("samples").unwrap_or(0),
            "`samples` must be at least 1000",
        ));
    }
    Ok((cfg, seed))
}
