//! Ent-equivalent randomness battery: entropy, chi-square, arithmetic mean, Monte
//! Carlo pi and serial correlation, each at byte and bit level.

mod gamma;
mod metrics;
pub mod report;

pub use gamma::{chi_square_exceedance, gamma_pq, gamma_q, ln_gamma};
pub use metrics::{
    analyze, arithmetic_mean, chi_square, entropy, monte_carlo_pi, serial_correlation, Analyzer, BitHistogram,
    ByteHistogram, ChiSquare, Histogram, Level, MetricSet, MonteCarloPi, QualityReport,
};

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("empty input")]
    Empty,

    #[error("input too short: need at least {needed} symbols, got {got}")]
    TooShort { needed: u64, got: u64 },

    #[error("cannot split into {0} pieces")]
    InvalidPieces(usize),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Verdict attached to a reported metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Pass,
    Suspect,
    Fail,
    /// Descriptive value without a decision rule.
    Info,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Pass => "pass",
            Label::Suspect => "suspect",
            Label::Fail => "fail",
            Label::Info => "info",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Labels a chi-square exceedance: outside 1..99% fails, 1..5% or 95..99% is suspect.
pub fn chi_square_label(exceed_prob: f64) -> Label {
    if !(0.01..=0.99).contains(&exceed_prob) {
        Label::Fail
    } else if !(0.05..=0.95).contains(&exceed_prob) {
        Label::Suspect
    } else {
        Label::Pass
    }
}

/// Conventional percentage bucket closest to an exceedance probability, the way
/// Ent-style tables quote it ("50%", "<1%", ...).
pub fn chi_square_bucket(exceed_prob: f64) -> &'static str {
    const BUCKETS: [(f64, &str); 9] = [
        (0.01, "1%"),
        (0.05, "5%"),
        (0.10, "10%"),
        (0.25, "25%"),
        (0.50, "50%"),
        (0.75, "75%"),
        (0.90, "90%"),
        (0.95, "95%"),
        (0.99, "99%"),
    ];
    if exceed_prob < 0.01 {
        return "<1%";
    }
    if exceed_prob > 0.99 {
        return ">99%";
    }
    BUCKETS
        .iter()
        .min_by(|a, b| (a.0 - exceed_prob).abs().total_cmp(&(b.0 - exceed_prob).abs()))
        .map(|b| b.1)
        .expect("non-empty")
}

impl MetricSet {
    /// `(metric, label)` for every labelled metric, in report order. Only the
    /// chi-square exceedance and an undefined serial correlation carry verdicts.
    pub fn labels(&self) -> [(&'static str, Label); 5] {
        [
            ("entropy", Label::Info),
            ("chi_square", chi_square_label(self.chi_square_exceed_prob)),
            ("mean", Label::Info),
            ("monte_carlo_pi", Label::Info),
            (
                "serial_correlation",
                if self.serial_correlation.is_some() {
                    Label::Info
                } else {
                    Label::Fail
                },
            ),
        ]
    }

    pub fn has_failure(&self) -> bool {
        self.labels().iter().any(|(_, l)| *l == Label::Fail)
    }
}

impl QualityReport {
    pub fn has_failure(&self) -> bool {
        self.byte_level.has_failure() || self.bit_level.has_failure()
    }
}

/// Whole-file report plus one report per contiguous piece.
#[derive(Debug, Clone, PartialEq)]
pub struct FileAnalysis {
    pub whole: QualityReport,
    pub pieces: Vec<QualityReport>,
}

/// Byte ranges of `pieces` contiguous segments over `len` bytes; the remainder goes
/// to the last segment.
pub fn segment_bounds(len: u64, pieces: usize) -> Vec<(u64, u64)> {
    let pieces = pieces.max(1) as u64;
    let seg = len / pieces;
    (0..pieces)
        .map(|i| {
            let start = i * seg;
            let end = if i + 1 == pieces { len } else { start + seg };
            (start, end)
        })
        .collect()
}

fn check_pieces(len: u64, pieces: usize) -> Result<(), QualityError> {
    if pieces == 0 {
        return Err(QualityError::InvalidPieces(0));
    }
    let needed = 6 * pieces as u64;
    if len < needed {
        return Err(QualityError::TooShort { needed, got: len });
    }
    Ok(())
}

/// Analyzes in-memory data split into `pieces` contiguous segments.
pub fn split_analyze_bytes(data: &[u8], pieces: usize) -> Result<Vec<QualityReport>, QualityError> {
    check_pieces(data.len() as u64, pieces)?;
    segment_bounds(data.len() as u64, pieces)
        .into_iter()
        .map(|(s, e)| analyze(&data[s as usize..e as usize]))
        .collect()
}

/// Streams a file once, producing the whole-file report and `pieces` segment reports.
pub fn analyze_file(path: impl AsRef<Path>, pieces: usize) -> Result<FileAnalysis, QualityError> {
    let path = path.as_ref();
    let io_err = |source| QualityError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let len = file.metadata().map_err(io_err)?.len();
    check_pieces(len, pieces)?;
    let bounds = segment_bounds(len, pieces);

    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut whole = Analyzer::new();
    let mut segments: Vec<Analyzer> = bounds.iter().map(|_| Analyzer::new()).collect();
    let mut buf = vec![0u8; 1 << 20];
    let mut offset = 0u64;
    let mut seg = 0usize;
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(io_err(e)),
        };
        let mut chunk = &buf[..n];
        whole.update(chunk);
        while !chunk.is_empty() {
            if offset >= len {
                return Err(io_err(io::Error::other(format!(
                    "file grew while reading past {len} bytes"
                ))));
            }
            let seg_end = bounds[seg].1;
            let take = ((seg_end - offset) as usize).min(chunk.len());
            segments[seg].update(&chunk[..take]);
            offset += take as u64;
            chunk = &chunk[take..];
            if offset == seg_end && seg + 1 < bounds.len() {
                seg += 1;
            }
        }
    }
    if offset != len {
        return Err(io_err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            format!("file shrank while reading: expected {len} bytes, read {offset}"),
        )));
    }
    Ok(FileAnalysis {
        whole: whole.finish()?,
        pieces: segments.iter().map(Analyzer::finish).collect::<Result<_, _>>()?,
    })
}

/// One report per contiguous segment of the file, in segment order.
pub fn split_analyze(path: impl AsRef<Path>, pieces: usize) -> Result<Vec<QualityReport>, QualityError> {
    analyze_file(path, pieces).map(|a| a.pieces)
}
