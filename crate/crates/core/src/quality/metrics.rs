//! The five Ent-style metrics, as standalone functions and as one streaming pass.
//!
//! Every accumulator is an exact integer sum; floating point only enters when a
//! metric is finalized. That makes the streaming analyzer bit-identical to the
//! one-shot functions whatever the chunking, and immune to drift on very long inputs.

use std::f64::consts::PI;

use super::gamma::chi_square_exceedance;
use super::QualityError;

/// Symbol granularity of a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Byte,
    /// Bytes unpacked most-significant bit first.
    Bit,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Byte => "byte",
            Level::Bit => "bit",
        }
    }
}

/// Occurrence counts over a fixed alphabet.
pub trait Histogram {
    fn counts(&self) -> &[u64];

    fn total(&self) -> u64 {
        self.counts().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteHistogram {
    counts: [u64; 256],
    total: u64,
}

impl Default for ByteHistogram {
    fn default() -> Self {
        Self {
            counts: [0; 256],
            total: 0,
        }
    }
}

impl ByteHistogram {
    pub fn from_bytes(data: &[u8]) -> Self {
        let mut h = Self::default();
        h.update(data);
        h
    }

    pub fn from_counts(counts: [u64; 256]) -> Self {
        Self {
            total: counts.iter().sum(),
            counts,
        }
    }

    pub fn update(&mut self, data: &[u8]) {
        for &b in data {
            self.counts[b as usize] += 1;
        }
        self.total += data.len() as u64;
    }

    /// Sum of all byte values seen.
    pub fn value_sum(&self) -> u64 {
        self.counts.iter().enumerate().map(|(v, &c)| v as u64 * c).sum()
    }

    pub fn value_square_sum(&self) -> u64 {
        self.counts.iter().enumerate().map(|(v, &c)| (v * v) as u64 * c).sum()
    }

    /// Histogram of the bits of every byte seen.
    pub fn bits(&self) -> BitHistogram {
        let ones = self
            .counts
            .iter()
            .enumerate()
            .map(|(v, &c)| u64::from((v as u8).count_ones()) * c)
            .sum::<u64>();
        BitHistogram::new(self.total * 8 - ones, ones)
    }

    /// Adjacent 1-1 bit pairs inside bytes (seven pairs per byte).
    fn intra_byte_one_pairs(&self) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(v, &c)| u64::from((v as u8 & (v as u8 >> 1)).count_ones()) * c)
            .sum()
    }
}

impl Histogram for ByteHistogram {
    fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn total(&self) -> u64 {
        self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitHistogram {
    counts: [u64; 2],
}

impl BitHistogram {
    pub fn new(zeros: u64, ones: u64) -> Self {
        Self { counts: [zeros, ones] }
    }

    pub fn from_bytes(data: &[u8]) -> Self {
        ByteHistogram::from_bytes(data).bits()
    }

    pub fn ones(&self) -> u64 {
        self.counts[1]
    }
}

impl Histogram for BitHistogram {
    fn counts(&self) -> &[u64] {
        &self.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    /// Probability that a uniform source exceeds `statistic`.
    pub exceed_prob: f64,
}

/// Shannon entropy in bits per symbol.
pub fn entropy<H: Histogram + ?Sized>(hist: &H) -> Result<f64, QualityError> {
    let total = hist.total();
    if total == 0 {
        return Err(QualityError::Empty);
    }
    let n = total as f64;
    let h = hist
        .counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Chi-square statistic against the uniform distribution, with `k - 1` degrees of freedom.
pub fn chi_square<H: Histogram + ?Sized>(hist: &H) -> Result<ChiSquare, QualityError> {
    let total = hist.total();
    if total == 0 {
        return Err(QualityError::Empty);
    }
    let k = hist.counts().len();
    let expected = total as f64 / k as f64;
    let statistic = hist
        .counts()
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    Ok(ChiSquare {
        statistic,
        exceed_prob: chi_square_exceedance(statistic, (k - 1) as f64),
    })
}

/// Mean symbol value: byte values in `[0, 255]`, bits in `[0, 1]`.
pub fn arithmetic_mean(data: &[u8], level: Level) -> Result<f64, QualityError> {
    if data.is_empty() {
        return Err(QualityError::Empty);
    }
    let h = ByteHistogram::from_bytes(data);
    Ok(match level {
        Level::Byte => ratio(h.value_sum(), h.total()),
        Level::Bit => ratio(h.bits().ones(), h.total() * 8),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloPi {
    pub estimate: f64,
    pub error_pct: f64,
    pub points: u64,
    pub inside: u64,
}

impl MonteCarloPi {
    fn from_counts(points: u64, inside: u64) -> Result<Self, QualityError> {
        if points == 0 {
            return Err(QualityError::TooShort { needed: 6, got: 0 });
        }
        let estimate = 4.0 * inside as f64 / points as f64;
        Ok(Self {
            estimate,
            error_pct: 100.0 * (estimate - PI).abs() / PI,
            points,
            inside,
        })
    }
}

const MC_RADIUS: u64 = (1 << 24) - 1;
const MC_RADIUS_SQ: u64 = MC_RADIUS * MC_RADIUS;

#[inline]
fn mc_inside(group: &[u8]) -> bool {
    let x = u64::from(group[0]) << 16 | u64::from(group[1]) << 8 | u64::from(group[2]);
    let y = u64::from(group[3]) << 16 | u64::from(group[4]) << 8 | u64::from(group[5]);
    x * x + y * y <= MC_RADIUS_SQ
}

/// Monte Carlo estimate of pi from consecutive 6-byte groups (24-bit big-endian x
/// then y). Trailing bytes that do not fill a group are ignored.
pub fn monte_carlo_pi(data: &[u8]) -> Result<MonteCarloPi, QualityError> {
    if data.len() < 6 {
        return Err(QualityError::TooShort {
            needed: 6,
            got: data.len() as u64,
        });
    }
    let mut inside = 0u64;
    let mut points = 0u64;
    for g in data.chunks_exact(6) {
        points += 1;
        inside += u64::from(mc_inside(g));
    }
    MonteCarloPi::from_counts(points, inside)
}

/// Lag-1 Pearson correlation with wraparound (the last symbol pairs with the first).
/// `None` when the input is constant.
pub fn serial_correlation(data: &[u8], level: Level) -> Result<Option<f64>, QualityError> {
    let symbols = match level {
        Level::Byte => data.len() as u64,
        Level::Bit => data.len() as u64 * 8,
    };
    if symbols < 2 {
        return Err(QualityError::TooShort {
            needed: 2,
            got: symbols,
        });
    }
    let h = ByteHistogram::from_bytes(data);
    let first = data[0];
    let last = data[data.len() - 1];
    match level {
        Level::Byte => {
            let mut lag: u64 = data.windows(2).map(|w| u64::from(w[0]) * u64::from(w[1])).sum();
            lag += u64::from(last) * u64::from(first);
            Ok(pearson_from_sums(symbols, h.value_sum(), h.value_square_sum(), lag))
        }
        Level::Bit => {
            let mut lag = h.intra_byte_one_pairs();
            lag += data.windows(2).map(|w| u64::from(w[0] & 1 & (w[1] >> 7))).sum::<u64>();
            lag += u64::from(last & 1 & (first >> 7));
            let ones = h.bits().ones();
            Ok(pearson_from_sums(symbols, ones, ones, lag))
        }
    }
}

/// `(n·Σxy − (Σx)²) / (n·Σx² − (Σx)²)`, evaluated exactly in integers.
fn pearson_from_sums(n: u64, sum: u64, sum_sq: u64, lag: u64) -> Option<f64> {
    let (n, sum, sum_sq, lag) = (n as i128, sum as i128, sum_sq as i128, lag as i128);
    let den = n * sum_sq - sum * sum;
    if den == 0 {
        return None;
    }
    let num = n * lag - sum * sum;
    Some(num as f64 / den as f64)
}

fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

/// One level's worth of metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub level: Level,
    pub entropy: f64,
    pub chi_square: f64,
    pub chi_square_exceed_prob: f64,
    pub mean: f64,
    pub mc_pi_estimate: f64,
    pub mc_pi_error_pct: f64,
    /// `None` when undefined (constant input).
    pub serial_correlation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub byte_level: MetricSet,
    pub bit_level: MetricSet,
    pub input_length: u64,
}

impl QualityReport {
    pub fn level(&self, level: Level) -> &MetricSet {
        match level {
            Level::Byte => &self.byte_level,
            Level::Bit => &self.bit_level,
        }
    }
}

/// Single-pass accumulator for every metric at both levels. Feed it chunks of any
/// size; the result does not depend on how the input was split.
#[derive(Debug, Clone, Default)]
pub struct Analyzer {
    hist: ByteHistogram,
    first: Option<u8>,
    prev: u8,
    byte_lag: u64,
    cross_bit_lag: u64,
    mc_pending: [u8; 6],
    mc_pending_len: usize,
    mc_points: u64,
    mc_inside: u64,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> u64 {
        self.hist.total
    }

    pub fn is_empty(&self) -> bool {
        self.hist.total == 0
    }

    pub fn update(&mut self, data: &[u8]) {
        let Some((&head, tail)) = data.split_first() else {
            return;
        };
        // The very first byte has no predecessor; it is paired with the last one in
        // `finish` instead.
        let (mut prev, body) = match self.first {
            None => {
                self.first = Some(head);
                self.hist.counts[head as usize] += 1;
                (head, tail)
            }
            Some(_) => (self.prev, data),
        };
        let mut byte_lag = 0u64;
        let mut cross = 0u64;
        for &b in body {
            self.hist.counts[b as usize] += 1;
            byte_lag += u64::from(prev) * u64::from(b);
            cross += u64::from(prev & 1 & (b >> 7));
            prev = b;
        }
        self.hist.total += data.len() as u64;
        self.byte_lag += byte_lag;
        self.cross_bit_lag += cross;
        self.prev = prev;
        self.mc_feed(data);
    }

    fn mc_feed(&mut self, mut data: &[u8]) {
        if self.mc_pending_len > 0 {
            let need = (6 - self.mc_pending_len).min(data.len());
            self.mc_pending[self.mc_pending_len..self.mc_pending_len + need].copy_from_slice(&data[..need]);
            self.mc_pending_len += need;
            data = &data[need..];
            if self.mc_pending_len < 6 {
                return;
            }
            self.mc_points += 1;
            self.mc_inside += u64::from(mc_inside(&self.mc_pending));
            self.mc_pending_len = 0;
        }
        let groups = data.chunks_exact(6);
        let rest = groups.remainder();
        for g in groups {
            self.mc_points += 1;
            self.mc_inside += u64::from(mc_inside(g));
        }
        self.mc_pending[..rest.len()].copy_from_slice(rest);
        self.mc_pending_len = rest.len();
    }

    pub fn finish(&self) -> Result<QualityReport, QualityError> {
        let n = self.hist.total;
        if n < 6 {
            return Err(QualityError::TooShort { needed: 6, got: n });
        }
        let first = self.first.expect("non-empty");
        let last = self.prev;
        let mc = MonteCarloPi::from_counts(self.mc_points, self.mc_inside)?;

        let byte_chi = chi_square(&self.hist)?;
        let byte_level = MetricSet {
            level: Level::Byte,
            entropy: entropy(&self.hist)?,
            chi_square: byte_chi.statistic,
            chi_square_exceed_prob: byte_chi.exceed_prob,
            mean: ratio(self.hist.value_sum(), n),
            mc_pi_estimate: mc.estimate,
            mc_pi_error_pct: mc.error_pct,
            serial_correlation: pearson_from_sums(
                n,
                self.hist.value_sum(),
                self.hist.value_square_sum(),
                self.byte_lag + u64::from(last) * u64::from(first),
            ),
        };

        let bits = self.hist.bits();
        let bit_chi = chi_square(&bits)?;
        let bit_lag = self.hist.intra_byte_one_pairs() + self.cross_bit_lag + u64::from(last & 1 & (first >> 7));
        let bit_level = MetricSet {
            level: Level::Bit,
            entropy: entropy(&bits)?,
            chi_square: bit_chi.statistic,
            chi_square_exceed_prob: bit_chi.exceed_prob,
            mean: ratio(bits.ones(), n * 8),
            // Grouping bits back into 24-bit coordinates reproduces the byte
            // grouping exactly, so the byte-level figures carry over.
            mc_pi_estimate: mc.estimate,
            mc_pi_error_pct: mc.error_pct,
            serial_correlation: pearson_from_sums(n * 8, bits.ones(), bits.ones(), bit_lag),
        };

        Ok(QualityReport {
            byte_level,
            bit_level,
            input_length: n,
        })
    }
}

/// All metrics at byte and bit level for an in-memory buffer.
pub fn analyze(data: &[u8]) -> Result<QualityReport, QualityError> {
    let mut a = Analyzer::new();
    a.update(data);
    a.finish()
}
