//! Random sources behind a single `GetRandom`-shaped interface.
//!
//! Three backend families are supported: simulated vendor chips (virtual time,
//! deterministic bytes), the operating system's entropy source, and replay of a raw
//! binary file. A [`Device`] is single-owner state; move it between threads freely but
//! never share it.

mod generator;
mod profile;

pub use generator::{BiasError, BiasedBytes, ByteSource, SeededStream};
pub use profile::{make_profile, ChipProfile, ProfileError, ProfileSet, ReseedPeriod, BUILTIN_PROFILES};

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::rngs::OsRng;
use rand::TryRngCore;
use thiserror::Error;

use crate::wire::{self, GetRandomRequest, GetRandomResponse};

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("request size must be at least 1 byte")]
    ZeroLength,

    #[error("{} exhausted at offset {position}: requested {requested} bytes, {available} left", path.display())]
    SourceExhausted {
        path: PathBuf,
        position: u64,
        requested: usize,
        available: u64,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("operating system entropy source failed: {0}")]
    Entropy(String),

    #[error(transparent)]
    Profile(#[from] ProfileError),

    #[error(transparent)]
    Bias(#[from] BiasError),
}

/// Which backend a device should be built from: a profile name, `os`, or `file:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Profile(String),
    Os,
    File(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty backend selector".into());
        }
        if s == "os" {
            return Ok(BackendSpec::Os);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file backend needs a path, as in file:<path>".into());
            }
            return Ok(BackendSpec::File(PathBuf::from(path)));
        }
        Ok(BackendSpec::Profile(s.to_string()))
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Profile(name) => f.write_str(name),
            BackendSpec::Os => f.write_str("os"),
            BackendSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Bytes from one call and how long the call took, in microseconds. Simulated
/// chips report virtual time; other backends report wall-clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawResult {
    pub bytes: Vec<u8>,
    pub duration_us: f64,
}

#[derive(Debug)]
enum Backend {
    Simulated {
        profile: ChipProfile,
        source: Box<ByteSource>,
    },
    OsEntropy,
    FileReplay {
        path: PathBuf,
        reader: BufReader<File>,
        position: u64,
        len: u64,
    },
}

#[derive(Debug)]
pub struct Device {
    backend: Backend,
    calls: u64,
}

impl Device {
    pub fn simulated(profile: ChipProfile, seed: u64) -> Result<Self, DeviceError> {
        profile.validate()?;
        Ok(Self::new(Backend::Simulated {
            profile,
            source: Box::new(ByteSource::uniform(seed)),
        }))
    }

    /// A simulated chip whose bytes follow the linear bias `P(v) ∝ 1 + epsilon·v`.
    pub fn simulated_biased(profile: ChipProfile, seed: u64, epsilon: f64) -> Result<Self, DeviceError> {
        profile.validate()?;
        Ok(Self::new(Backend::Simulated {
            profile,
            source: Box::new(ByteSource::biased(seed, epsilon)?),
        }))
    }

    pub fn os_entropy() -> Self {
        Self::new(Backend::OsEntropy)
    }

    pub fn file_replay(path: impl AsRef<Path>) -> Result<Self, DeviceError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| DeviceError::Io {
            context: format!("opening {}", path.display()),
            source,
        })?;
        let len = file
            .metadata()
            .map_err(|source| DeviceError::Io {
                context: format!("reading metadata of {}", path.display()),
                source,
            })?
            .len();
        Ok(Self::new(Backend::FileReplay {
            path,
            reader: BufReader::with_capacity(1 << 16, file),
            position: 0,
            len,
        }))
    }

    /// Builds a device from a selector. `bias` only applies to simulated chips.
    pub fn open(
        backend: &BackendSpec,
        profiles: &ProfileSet,
        seed: u64,
        bias: Option<f64>,
    ) -> Result<Self, DeviceError> {
        match backend {
            BackendSpec::Profile(name) => {
                let profile = profiles.get(name)?;
                match bias {
                    Some(eps) => Self::simulated_biased(profile, seed, eps),
                    None => Self::simulated(profile, seed),
                }
            }
            BackendSpec::Os => Ok(Self::os_entropy()),
            BackendSpec::File(p) => Self::file_replay(p),
        }
    }

    fn new(backend: Backend) -> Self {
        Self { backend, calls: 0 }
    }

    /// Number of requests serviced so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn profile(&self) -> Option<&ChipProfile> {
        match &self.backend {
            Backend::Simulated { profile, .. } => Some(profile),
            _ => None,
        }
    }

    /// Largest number of bytes one call can return, if the backend caps it.
    pub fn max_request(&self) -> Option<usize> {
        self.profile().map(|p| p.max_request as usize)
    }

    pub fn is_virtual_time(&self) -> bool {
        matches!(self.backend, Backend::Simulated { .. })
    }

    pub fn describe(&self) -> String {
        match &self.backend {
            Backend::Simulated { profile, source } => match source.as_ref() {
                ByteSource::Uniform(_) => format!("simulated {}", profile.name),
                ByteSource::Biased(b) => format!("simulated {} (biased, epsilon {})", profile.name, b.epsilon()),
            },
            Backend::OsEntropy => "os entropy".to_string(),
            Backend::FileReplay { path, .. } => format!("file replay {}", path.display()),
        }
    }

    /// Services one request for `n` bytes. Simulated chips return
    /// `min(n, max_request)` bytes without error; other backends return exactly `n`.
    pub fn get_random(&mut self, n: usize) -> Result<DrawResult, DeviceError> {
        if n == 0 {
            return Err(DeviceError::ZeroLength);
        }
        let call = self.calls + 1;
        let result = match &mut self.backend {
            Backend::Simulated { profile, source } => {
                let k = profile.returned_len(n);
                let mut bytes = vec![0u8; k];
                source.fill(&mut bytes);
                DrawResult {
                    bytes,
                    duration_us: profile.call_latency(n, call),
                }
            }
            Backend::OsEntropy => {
                let mut bytes = vec![0u8; n];
                let start = Instant::now();
                OsRng
                    .try_fill_bytes(&mut bytes)
                    .map_err(|e| DeviceError::Entropy(e.to_string()))?;
                let duration_us = start.elapsed().as_secs_f64() * 1e6;
                DrawResult { bytes, duration_us }
            }
            Backend::FileReplay {
                path,
                reader,
                position,
                len,
            } => {
                let available = len.saturating_sub(*position);
                if (n as u64) > available {
                    return Err(DeviceError::SourceExhausted {
                        path: path.clone(),
                        position: *position,
                        requested: n,
                        available,
                    });
                }
                let mut bytes = vec![0u8; n];
                let start = Instant::now();
                reader.read_exact(&mut bytes).map_err(|source| DeviceError::Io {
                    context: format!("reading {} at offset {}", path.display(), position),
                    source,
                })?;
                let duration_us = start.elapsed().as_secs_f64() * 1e6;
                *position += n as u64;
                DrawResult { bytes, duration_us }
            }
        };
        self.calls = call;
        Ok(result)
    }

    /// Raw command-buffer entry point. Every outcome, including malformed input,
    /// comes back as an encoded response.
    pub fn submit_command(&mut self, raw: &[u8]) -> Vec<u8> {
        let resp = match wire::decode_request(raw) {
            Ok(req) => self.service(&req),
            Err(e) => GetRandomResponse::failure(e.return_code()),
        };
        resp.encode().expect("device responses satisfy wire invariants")
    }

    fn service(&mut self, req: &GetRandomRequest) -> GetRandomResponse {
        match self.get_random(req.bytes_requested as usize) {
            Ok(draw) => GetRandomResponse::success(draw.bytes),
            Err(_) => GetRandomResponse::failure(wire::rc::FAIL),
        }
    }
}
