//! Request-size sweeps and bulk collection over any [`Device`].

use std::fmt::Write as _;
use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::device::{Device, DeviceError};

pub const CSV_HEADER: &str = "request_size,returned_size,mean_duration_us,throughput_bps";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub min_size: usize,
    pub max_size: usize,
    pub step: usize,
    pub repetitions: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            min_size: 1,
            max_size: 2048,
            step: 1,
            repetitions: 10,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_size < 1 {
            return Err("min size must be at least 1".into());
        }
        if self.max_size < self.min_size {
            return Err(format!(
                "max size {} is below min size {}",
                self.max_size, self.min_size
            ));
        }
        if self.step < 1 {
            return Err("step must be at least 1".into());
        }
        if self.repetitions < 1 {
            return Err("repetitions must be at least 1".into());
        }
        Ok(())
    }

    /// Number of request sizes the sweep visits.
    pub fn record_count(&self) -> usize {
        (self.max_size - self.min_size) / self.step + 1
    }

    pub fn sizes(&self) -> impl Iterator<Item = usize> {
        (self.min_size..=self.max_size).step_by(self.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRecord {
    pub request_size: usize,
    pub returned_size: usize,
    pub mean_duration_us: f64,
    /// Bytes per second; 0 when the mean duration is 0.
    pub throughput_bps: f64,
}

impl BenchRecord {
    pub fn new(request_size: usize, returned_size: usize, mean_duration_us: f64) -> Self {
        let throughput_bps = if mean_duration_us > 0.0 {
            returned_size as f64 * 1e6 / mean_duration_us
        } else {
            0.0
        };
        Self {
            request_size,
            returned_size,
            mean_duration_us,
            throughput_bps,
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),

    #[error("device failed at request size {failed_size} after {} completed records: {source}", completed.len())]
    Device {
        completed: Vec<BenchRecord>,
        failed_size: usize,
        #[source]
        source: DeviceError,
    },
}

/// Times every request size in the configured range, `repetitions` consecutive calls
/// each, and averages the durations.
pub fn sweep(device: &mut Device, config: &SweepConfig) -> Result<Vec<BenchRecord>, SweepError> {
    config.validate().map_err(SweepError::Config)?;
    let mut records = Vec::with_capacity(config.record_count());
    for size in config.sizes() {
        let mut total_us = 0.0;
        let mut returned = usize::MAX;
        for _ in 0..config.repetitions {
            match device.get_random(size) {
                Ok(draw) => {
                    total_us += draw.duration_us;
                    returned = returned.min(draw.bytes.len());
                }
                Err(source) => {
                    return Err(SweepError::Device {
                        completed: records,
                        failed_size: size,
                        source,
                    })
                }
            }
        }
        records.push(BenchRecord::new(size, returned, total_us / config.repetitions as f64));
    }
    Ok(records)
}

/// Record with the highest throughput, if any; the earliest one on ties.
pub fn peak(records: &[BenchRecord]) -> Option<&BenchRecord> {
    records.iter().reduce(|best, r| {
        if r.throughput_bps.total_cmp(&best.throughput_bps).is_gt() {
            r
        } else {
            best
        }
    })
}

pub fn write_csv<W: Write>(records: &[BenchRecord], mut sink: W) -> io::Result<usize> {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{:.3},{:.2}",
            r.request_size, r.returned_size, r.mean_duration_us, r.throughput_bps
        )
        .expect("writing to a String");
    }
    sink.write_all(out.as_bytes())?;
    Ok(out.len())
}

/// Parses text produced by [`write_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(format!("line {}: expected 4 columns, got {}", i + 2, cols.len()));
            }
            let bad = |c: &str| format!("line {}: bad value {c:?}", i + 2);
            Ok(BenchRecord {
                request_size: cols[0].parse().map_err(|_| bad(cols[0]))?,
                returned_size: cols[1].parse().map_err(|_| bad(cols[1]))?,
                mean_duration_us: cols[2].parse().map_err(|_| bad(cols[2]))?,
                throughput_bps: cols[3].parse().map_err(|_| bad(cols[3]))?,
            })
        })
        .collect()
}

/// Cloneable cancellation flag shared between a collection job and its controller.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectProgress {
    pub calls: u64,
    pub bytes_written: u64,
    pub total: u64,
    /// Running mean, bytes per second over the summed call durations.
    pub mean_throughput_bps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectSummary {
    pub bytes_written: u64,
    pub mean_throughput_bps: f64,
    pub status: CollectStatus,
    pub calls: u64,
    /// Calls that returned fewer bytes than requested.
    pub truncated_calls: u64,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("invalid collection request: {0}")]
    Config(String),

    #[error("write failed after {bytes_written} bytes: {source}")]
    Sink {
        bytes_written: u64,
        #[source]
        source: io::Error,
    },

    #[error("device failed after {bytes_written} bytes: {source}")]
    Device {
        bytes_written: u64,
        #[source]
        source: DeviceError,
    },
}

impl CollectError {
    pub fn bytes_written(&self) -> u64 {
        match self {
            CollectError::Config(_) => 0,
            CollectError::Sink { bytes_written, .. } | CollectError::Device { bytes_written, .. } => *bytes_written,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectOptions {
    pub total: u64,
    pub request_size: usize,
    /// Progress is reported after every `progress_every` calls.
    pub progress_every: u64,
}

impl CollectOptions {
    pub fn new(total: u64, request_size: usize) -> Self {
        Self {
            total,
            request_size,
            progress_every: 100,
        }
    }
}

fn throughput(bytes: u64, micros: f64) -> f64 {
    if micros > 0.0 {
        bytes as f64 * 1e6 / micros
    } else {
        0.0
    }
}

/// Pulls `total` bytes from the device in `request_size` requests and streams them to
/// `sink`. Only bytes the device actually returned are written; a truncated call just
/// means more calls. When the last call overshoots `total`, the surplus is dropped.
/// `cancel` is checked before every call.
pub fn collect<W, F>(
    device: &mut Device,
    opts: &CollectOptions,
    mut sink: W,
    mut progress: F,
    cancel: &CancelToken,
) -> Result<CollectSummary, CollectError>
where
    W: Write,
    F: FnMut(&CollectProgress),
{
    if opts.total < 1 {
        return Err(CollectError::Config("total must be at least 1 byte".into()));
    }
    if opts.request_size < 1 {
        return Err(CollectError::Config("request size must be at least 1 byte".into()));
    }
    let every = opts.progress_every.max(1);

    let mut written = 0u64;
    let mut elapsed_us = 0.0;
    let mut calls = 0u64;
    let mut truncated_calls = 0u64;
    let mut status = CollectStatus::Completed;

    while written < opts.total {
        if cancel.is_cancelled() {
            status = CollectStatus::Aborted;
            break;
        }
        let draw = device
            .get_random(opts.request_size)
            .map_err(|source| CollectError::Device {
                bytes_written: written,
                source,
            })?;
        calls += 1;
        elapsed_us += draw.duration_us;
        if draw.bytes.len() < opts.request_size {
            truncated_calls += 1;
        }
        let remaining = opts.total - written;
        let take = draw.bytes.len().min(usize::try_from(remaining).unwrap_or(usize::MAX));
        sink.write_all(&draw.bytes[..take])
            .map_err(|source| CollectError::Sink {
                bytes_written: written,
                source,
            })?;
        written += take as u64;

        if calls % every == 0 {
            progress(&CollectProgress {
                calls,
                bytes_written: written,
                total: opts.total,
                mean_throughput_bps: throughput(written, elapsed_us),
            });
        }
    }
    sink.flush().map_err(|source| CollectError::Sink {
        bytes_written: written,
        source,
    })?;

    Ok(CollectSummary {
        bytes_written: written,
        mean_throughput_bps: throughput(written, elapsed_us),
        status,
        calls,
        truncated_calls,
    })
}
