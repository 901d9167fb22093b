//! Parametric timing/truncation models of the four vendor chips.
//!
//! The latency of a call returning `k` bytes is
//!
//! ```text
//! base + per_byte * k + per_chunk * ceil(k / chunk_size) [+ reseed_penalty]
//! ```
//!
//! where the reseed penalty lands on every `reseed_period`-th call (1-based). All
//! coefficients are synthetic: they reproduce the shape of the measured curves
//! (truncation points, discontinuity spacing, second latency line) and two anchors,
//! a ~500 B/s intel plateau and a ~30x gap between infineon and sinosun peaks.
//! Values are whole microseconds so curve differences are exact in `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Deserializer};
use thiserror::Error;

pub const BUILTIN_PROFILES: [&str; 4] = ["infineon", "intel", "atmel", "sinosun"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("unknown profile `{name}` (valid: {})", valid.join(", "))]
    Unknown { name: String, valid: Vec<String> },

    #[error("profile `{profile}`: invalid {field}: {reason}")]
    Invalid {
        profile: String,
        field: &'static str,
        reason: String,
    },

    #[error("profile `{profile}` is not built in and lacks required key `{field}`")]
    MissingKey { profile: String, field: &'static str },

    #[error("malformed profile configuration: {0}")]
    Parse(String),
}

/// How often the modeled reseed operation fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReseedPeriod {
    #[default]
    Never,
    Every(NonZeroU32),
}

impl ReseedPeriod {
    pub fn every(calls: u32) -> Self {
        NonZeroU32::new(calls).map_or(ReseedPeriod::Never, ReseedPeriod::Every)
    }

    /// Whether the `call`-th call (1-based) pays the reseed penalty.
    pub fn fires_on(self, call: u64) -> bool {
        match self {
            ReseedPeriod::Never => false,
            ReseedPeriod::Every(p) => call % u64::from(p.get()) == 0,
        }
    }
}

impl fmt::Display for ReseedPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReseedPeriod::Never => f.write_str("never"),
            ReseedPeriod::Every(p) => write!(f, "{p}"),
        }
    }
}

impl<'de> Deserialize<'de> for ReseedPeriod {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(i64),
            Word(String),
        }
        match Raw::deserialize(de)? {
            Raw::Count(n) if n >= 1 && n <= i64::from(u32::MAX) => Ok(ReseedPeriod::every(n as u32)),
            Raw::Count(n) => Err(serde::de::Error::custom(format!(
                "reseed_period must be a positive call count or \"never\", got {n}"
            ))),
            Raw::Word(w) if w.eq_ignore_ascii_case("never") => Ok(ReseedPeriod::Never),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "reseed_period must be a positive call count or \"never\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipProfile {
    pub name: String,
    /// Hard cap on bytes returned per call; larger requests are truncated, not refused.
    pub max_request: u32,
    /// Internal refill granularity in bytes.
    pub chunk_size: u32,
    /// Fixed per-call cost, microseconds.
    pub base_latency: f64,
    /// Microseconds per returned byte.
    pub per_byte_latency: f64,
    /// Microseconds per chunk touched.
    pub per_chunk_latency: f64,
    pub reseed_period: ReseedPeriod,
    /// Microseconds added on reseed calls.
    pub reseed_penalty: f64,
}

impl ChipProfile {
    pub fn infineon() -> Self {
        Self {
            name: "infineon".into(),
            max_request: 1259,
            chunk_size: 1259,
            base_latency: 40_000.0,
            per_byte_latency: 80.0,
            per_chunk_latency: 0.0,
            reseed_period: ReseedPeriod::every(30),
            reseed_penalty: 60_000.0,
        }
    }

    pub fn intel() -> Self {
        Self {
            name: "intel".into(),
            max_request: 1226,
            chunk_size: 64,
            base_latency: 204_800.0,
            per_byte_latency: 1_700.0,
            per_chunk_latency: 6_400.0,
            reseed_period: ReseedPeriod::Never,
            reseed_penalty: 0.0,
        }
    }

    pub fn atmel() -> Self {
        Self {
            name: "atmel".into(),
            max_request: 768,
            chunk_size: 538,
            base_latency: 100_000.0,
            per_byte_latency: 40.0,
            per_chunk_latency: 100_000.0,
            reseed_period: ReseedPeriod::Never,
            reseed_penalty: 0.0,
        }
    }

    pub fn sinosun() -> Self {
        Self {
            name: "sinosun".into(),
            max_request: 2048,
            chunk_size: 20,
            base_latency: 60_000.0,
            per_byte_latency: 2_300.0,
            per_chunk_latency: 20_000.0,
            reseed_period: ReseedPeriod::Never,
            reseed_penalty: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let bad = |field, reason: &str| ProfileError::Invalid {
            profile: self.name.clone(),
            field,
            reason: reason.to_string(),
        };
        if self.max_request == 0 {
            return Err(bad("max_request", "must be at least 1"));
        }
        if self.chunk_size == 0 {
            return Err(bad("chunk_size", "must be at least 1"));
        }
        for (field, v) in [
            ("base_latency", self.base_latency),
            ("per_byte_latency", self.per_byte_latency),
            ("per_chunk_latency", self.per_chunk_latency),
            ("reseed_penalty", self.reseed_penalty),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(bad(field, "must be a finite value >= 0"));
            }
        }
        Ok(())
    }

    /// Bytes a call asking for `requested` actually yields.
    pub fn returned_len(&self, requested: usize) -> usize {
        requested.min(self.max_request as usize)
    }

    /// Modeled duration in microseconds of a call returning `k` bytes, with or
    /// without the reseed penalty.
    pub fn latency(&self, k: usize, reseed: bool) -> f64 {
        let chunks = k.div_ceil(self.chunk_size as usize);
        let mut d = self.base_latency + self.per_byte_latency * k as f64 + self.per_chunk_latency * chunks as f64;
        if reseed {
            d += self.reseed_penalty;
        }
        d
    }

    /// Duration of the `call`-th call (1-based) when it asks for `requested` bytes.
    pub fn call_latency(&self, requested: usize, call: u64) -> f64 {
        self.latency(self.returned_len(requested), self.reseed_period.fires_on(call))
    }

    /// Noise-free, reseed-free throughput in bytes per second at a request size.
    pub fn modeled_throughput(&self, requested: usize) -> f64 {
        let k = self.returned_len(requested);
        let d = self.latency(k, false);
        if d > 0.0 {
            k as f64 * 1e6 / d
        } else {
            f64::INFINITY
        }
    }

    /// Highest modeled throughput over request sizes `1..=max_request`, with the size
    /// that attains it.
    pub fn peak_throughput(&self) -> (usize, f64) {
        (1..=self.max_request as usize)
            .map(|k| (k, self.modeled_throughput(k)))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
    }

    fn apply(&mut self, ov: ProfileOverride) {
        if let Some(v) = ov.max_request {
            self.max_request = v;
        }
        if let Some(v) = ov.chunk_size {
            self.chunk_size = v;
        }
        if let Some(v) = ov.base_latency {
            self.base_latency = v;
        }
        if let Some(v) = ov.per_byte_latency {
            self.per_byte_latency = v;
        }
        if let Some(v) = ov.per_chunk_latency {
            self.per_chunk_latency = v;
        }
        if let Some(v) = ov.reseed_period {
            self.reseed_period = v;
        }
        if let Some(v) = ov.reseed_penalty {
            self.reseed_penalty = v;
        }
    }
}

/// Returns one of the built-in profiles by name.
pub fn make_profile(name: &str) -> Result<ChipProfile, ProfileError> {
    match name {
        "infineon" => Ok(ChipProfile::infineon()),
        "intel" => Ok(ChipProfile::intel()),
        "atmel" => Ok(ChipProfile::atmel()),
        "sinosun" => Ok(ChipProfile::sinosun()),
        other => Err(ProfileError::Unknown {
            name: other.to_string(),
            valid: BUILTIN_PROFILES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileOverride {
    max_request: Option<u32>,
    chunk_size: Option<u32>,
    base_latency: Option<f64>,
    per_byte_latency: Option<f64>,
    per_chunk_latency: Option<f64>,
    reseed_period: Option<ReseedPeriod>,
    reseed_penalty: Option<f64>,
}

/// Built-in profiles plus any overrides or additions loaded from configuration.
#[derive(Debug, Clone)]
pub struct ProfileSet {
    profiles: BTreeMap<String, ChipProfile>,
}

impl Default for ProfileSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProfileSet {
    pub fn builtin() -> Self {
        let profiles = BUILTIN_PROFILES
            .iter()
            .map(|n| (n.to_string(), make_profile(n).expect("builtin")))
            .collect();
        Self { profiles }
    }

    pub fn names(&self) -> Vec<String> {
        self.profiles.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Result<ChipProfile, ProfileError> {
        self.profiles.get(name).cloned().ok_or_else(|| ProfileError::Unknown {
            name: name.to_string(),
            valid: self.names(),
        })
    }

    /// Merges profile sections from TOML text. Each table is one profile keyed by
    /// name, with keys mirroring [`ChipProfile`] fields; top-level scalars are
    /// ignored so the same file can carry run settings. Sections naming a built-in
    /// profile override only the keys they set; new names need `max_request` and
    /// `chunk_size` and default every latency to zero.
    pub fn load_toml(&mut self, text: &str) -> Result<(), ProfileError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ProfileError::Parse(e.to_string()))?;
        self.load_table(&table)
    }

    pub fn load_table(&mut self, table: &toml::Table) -> Result<(), ProfileError> {
        for (name, value) in table {
            let toml::Value::Table(section) = value else {
                continue;
            };
            let ov: ProfileOverride = section
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| ProfileError::Parse(format!("[{name}]: {e}")))?;
            let mut profile = match self.profiles.get(name) {
                Some(p) => p.clone(),
                None => {
                    let need = |v: Option<u32>, field| {
                        v.ok_or_else(|| ProfileError::MissingKey {
                            profile: name.clone(),
                            field,
                        })
                    };
                    ChipProfile {
                        name: name.clone(),
                        max_request: need(ov.max_request, "max_request")?,
                        chunk_size: need(ov.chunk_size, "chunk_size")?,
                        base_latency: 0.0,
                        per_byte_latency: 0.0,
                        per_chunk_latency: 0.0,
                        reseed_period: ReseedPeriod::Never,
                        reseed_penalty: 0.0,
                    }
                }
            };
            profile.apply(ov);
            profile.validate()?;
            self.profiles.insert(name.clone(), profile);
        }
        Ok(())
    }
}
