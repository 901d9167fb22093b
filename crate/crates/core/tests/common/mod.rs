//! Straightforward reference implementations used as test oracles. They share no
//! code with the library: floating-point accumulation, explicit bit unpacking,
//! two-pass centered correlation, and quadrature for the chi-square tail.

#![allow(dead_code)]

use std::f64::consts::PI;

pub struct Naive {
    pub entropy: f64,
    pub chi_square: f64,
    pub mean: f64,
    pub pi_estimate: f64,
    pub serial: Option<f64>,
}

pub fn unpack_bits(data: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(data.len() * 8);
    for &b in data {
        for shift in (0..8).rev() {
            bits.push((b >> shift) & 1);
        }
    }
    bits
}

/// Neumaier-compensated running sum; plain accumulation over millions of centered
/// terms loses too many digits to serve as a 1e-9 reference.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Metrics over a symbol sequence with alphabet size `k`.
pub fn naive_metrics(symbols: &[u8], k: usize) -> Naive {
    let n = symbols.len() as f64;
    let mut counts = vec![0f64; k];
    for &s in symbols {
        counts[s as usize] += 1.0;
    }
    let mut entropy = 0.0;
    for &c in &counts {
        if c > 0.0 {
            let p = c / n;
            entropy -= p * p.log2();
        }
    }
    let e = n / k as f64;
    let chi_square = counts.iter().map(|c| (c - e) * (c - e) / e).sum();
    let mut sum = Compensated::default();
    symbols.iter().for_each(|&s| sum.add(s as f64));
    let mean = sum.value() / n;

    let mut cov = Compensated::default();
    let mut var = Compensated::default();
    for i in 0..symbols.len() {
        let a = symbols[i] as f64 - mean;
        let b = symbols[(i + 1) % symbols.len()] as f64 - mean;
        cov.add(a * b);
        var.add(a * a);
    }
    let serial = if var.value() == 0.0 {
        None
    } else {
        Some(cov.value() / var.value())
    };

    Naive {
        entropy,
        chi_square,
        mean,
        pi_estimate: f64::NAN,
        serial,
    }
}

/// Pi from 6-byte groups read as normalized 24-bit coordinates.
pub fn naive_pi(data: &[u8]) -> f64 {
    let scale = 16_777_215.0f64;
    let mut inside = 0usize;
    let mut points = 0usize;
    let mut i = 0;
    while i + 6 <= data.len() {
        let x = ((data[i] as u32) << 16 | (data[i + 1] as u32) << 8 | data[i + 2] as u32) as f64 / scale;
        let y = ((data[i + 3] as u32) << 16 | (data[i + 4] as u32) << 8 | data[i + 5] as u32) as f64 / scale;
        if x * x + y * y <= 1.0 {
            inside += 1;
        }
        points += 1;
        i += 6;
    }
    4.0 * inside as f64 / points as f64
}

pub fn naive_byte(data: &[u8]) -> Naive {
    let mut m = naive_metrics(data, 256);
    m.pi_estimate = naive_pi(data);
    m
}

pub fn naive_bit(data: &[u8]) -> Naive {
    let mut m = naive_metrics(&unpack_bits(data), 2);
    m.pi_estimate = naive_pi(data);
    m
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Worst relative disagreement between a library metric set and the oracle.
/// Values that are exactly zero in the oracle are compared absolutely.
pub fn worst_disagreement(lib: &trngbench::MetricSet, naive: &Naive) -> f64 {
    let cmp = |a: f64, b: f64| if b == 0.0 { a.abs() } else { rel_err(a, b) };
    let serial = match (lib.serial_correlation, naive.serial) {
        (None, None) => 0.0,
        (Some(a), Some(b)) => cmp(a, b),
        _ => f64::INFINITY,
    };
    [
        cmp(lib.entropy, naive.entropy),
        cmp(lib.chi_square, naive.chi_square),
        cmp(lib.mean, naive.mean),
        cmp(lib.mc_pi_estimate, naive.pi_estimate),
        serial,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn ln_gamma_half_integer_or_int(a: f64) -> f64 {
    // Gamma(a) by recurrence down to Gamma(1/2) = sqrt(pi) or Gamma(1) = 1.
    let mut x = a;
    let mut acc = 0.0;
    while x > 1.0 {
        x -= 1.0;
        acc += x.ln();
    }
    if (x - 0.5).abs() < 1e-12 {
        acc + PI.sqrt().ln()
    } else {
        assert!((x - 1.0).abs() < 1e-12, "order must be an integer or half-integer");
        acc
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Chi-square upper tail by quadrature of the density.
pub fn tail_by_quadrature(stat: f64, df: u32) -> f64 {
    let k = df as f64 / 2.0;
    let ln_norm = -(k * 2f64.ln() + ln_gamma_half_integer_or_int(k));
    if df == 1 {
        // t = s^2 removes the t^{-1/2} singularity: tail = 2 * int_{sqrt(stat)}^inf phi(s) ds
        let lo = stat.sqrt();
        let phi = |s: f64| (-s * s / 2.0).exp() / (2.0 * PI).sqrt();
        return 2.0 * simpson(phi, lo, lo + 40.0, 400_000);
    }
    let density = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            (ln_norm + (k - 1.0) * t.ln() - t / 2.0).exp()
        }
    };
    simpson(density, stat, stat + 2000.0, 2_000_000)
}

pub fn chi_square_cases() -> Vec<(f64, u32)> {
    let mut cases = Vec::new();
    for s in [0.0001, 0.004, 0.1, 0.455, 1.0, 2.706, 3.841, 6.635, 10.0, 15.0, 25.0] {
        cases.push((s, 1));
    }
    for s in [
        150.0, 200.0, 219.0, 230.0, 254.0, 255.0, 256.0, 284.0, 293.0, 310.0, 330.0, 400.0,
    ] {
        cases.push((s, 255));
    }
    cases
}
