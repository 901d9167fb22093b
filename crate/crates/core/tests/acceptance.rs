//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each, and exits
//! non-zero if any failed. Tolerances are fixed here and must not be loosened.

mod common;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trngbench::bench::{self, CancelToken, CollectOptions, CollectStatus, SweepConfig};
use trngbench::device::{make_profile, ChipProfile, Device, ReseedPeriod, SeededStream};
use trngbench::quality::{self, report, Analyzer, Label};
use trngbench::wire::{self, GetRandomRequest, GetRandomResponse};

const BIN: &str = env!("CARGO_BIN_EXE_trngbench");
const MIB: usize = 1 << 20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("wire golden bytes and round trip", wire_golden_and_round_trip),
        ("truncation per profile at 2048 bytes", truncation),
        ("chunk-boundary discontinuities", discontinuities),
        ("two latency modes from reseeding", dual_mode),
        ("throughput anchors", throughput_anchors),
        ("seeded generator within quality envelope", quality_envelope),
        ("metrics match independent oracles", oracle_equivalence),
        ("degenerate inputs", degenerate_inputs),
        ("biased generator is flagged", negative_control),
        ("sweep determinism, shape and speed", sweep_determinism),
        ("collection correctness and interrupt", collection),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  AC{:02}  {name} [{secs:.2}s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  AC{:02}  {name} [{secs:.2}s] {why}", i + 1);
            }
        }
        std::io::stdout().flush().ok();
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn wire_golden_and_round_trip() -> Outcome {
    let start = Instant::now();
    let golden = [0x00, 0xC1, 0, 0, 0, 0x0E, 0, 0, 0, 0x46, 0, 0, 0, 0x10];
    let raw = wire::encode_request(&GetRandomRequest::new(16)).map_err(|e| e.to_string())?;
    ensure!(raw == golden, "encoded {raw:02X?}");

    let mut rng = ChaCha8Rng::seed_from_u64(0xAC01);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n: u32 = rng.random();
        let req = GetRandomRequest::new(n);
        let bytes = wire::encode_request(&req).map_err(|e| e.to_string())?;
        if wire::decode_request(&bytes).ok() != Some(req) {
            mismatches += 1;
        }

        let resp = if rng.random_bool(0.9) {
            let mut payload = vec![0u8; rng.random_range(0..=4096)];
            rng.fill_bytes(&mut payload);
            GetRandomResponse::success(payload)
        } else {
            GetRandomResponse::failure(rng.random_range(1..=u32::MAX))
        };
        let bytes = wire::encode_response(&resp).map_err(|e| e.to_string())?;
        if wire::decode_response(&bytes).ok().as_ref() != Some(&resp) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(mismatches == 0, "{mismatches} round-trip mismatches");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "20000 messages, 0 mismatches, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn truncation() -> Outcome {
    let mut seen = Vec::new();
    for (name, expected) in [
        ("infineon", 1259usize),
        ("intel", 1226),
        ("atmel", 768),
        ("sinosun", 2048),
    ] {
        let mut dev = Device::simulated(make_profile(name).unwrap(), 1).unwrap();
        let draw = dev.get_random(2048).map_err(|e| e.to_string())?;
        ensure!(
            draw.bytes.len() == expected,
            "{name}: get_random returned {}",
            draw.bytes.len()
        );

        let cmd = wire::encode_request(&GetRandomRequest::new(2048)).unwrap();
        let resp = wire::decode_response(&dev.submit_command(&cmd)).map_err(|e| e.to_string())?;
        ensure!(resp.is_success(), "{name}: return code {}", resp.return_code);
        ensure!(
            resp.random_bytes_size as usize == expected && resp.random_bytes.len() == expected,
            "{name}: header says {}, payload {}",
            resp.random_bytes_size,
            resp.random_bytes.len()
        );
        seen.push(format!("{name}={expected}"));
    }
    Ok(seen.join(" "))
}

fn durations(profile: &str, max: usize) -> Result<Vec<f64>, String> {
    let mut dev = Device::simulated(make_profile(profile).unwrap(), 0).unwrap();
    let cfg = SweepConfig {
        min_size: 1,
        max_size: max,
        step: 1,
        repetitions: 1,
    };
    let recs = bench::sweep(&mut dev, &cfg).map_err(|e| e.to_string())?;
    // index by request size
    Ok(std::iter::once(f64::NAN)
        .chain(recs.iter().map(|r| r.mean_duration_us))
        .collect())
}

fn discontinuities() -> Outcome {
    let intel = ChipProfile::intel();
    let d = durations("intel", 1300)?;
    let jump = intel.per_byte_latency + intel.per_chunk_latency;
    for m in 1..=19 {
        let s = 64 * m;
        ensure!(d[s + 1] - d[s] == jump, "intel {s}->{}: {}", s + 1, d[s + 1] - d[s]);
        ensure!(
            d[s] - d[s - 1] == intel.per_byte_latency,
            "intel {}->{s} not smooth",
            s - 1
        );
    }

    let sino = ChipProfile::sinosun();
    let d = durations("sinosun", 2048)?;
    let jump_s = sino.per_byte_latency + sino.per_chunk_latency;
    for m in 1..=19 {
        let s = 20 * m;
        ensure!(d[s + 1] - d[s] == jump_s, "sinosun {s}->{}: {}", s + 1, d[s + 1] - d[s]);
    }

    let atmel = ChipProfile::atmel();
    let d = durations("atmel", 768)?;
    let jumps: Vec<usize> = (1..768)
        .filter(|&s| d[s + 1] - d[s] != atmel.per_byte_latency)
        .collect();
    ensure!(jumps == [538], "atmel jumps at {jumps:?}");
    ensure!(
        d[539] - d[538] == atmel.per_byte_latency + atmel.per_chunk_latency,
        "atmel jump size {}",
        d[539] - d[538]
    );
    Ok(format!(
        "intel +{jump} us every 64 B, sinosun +{jump_s} us every 20 B, atmel single jump 538->539"
    ))
}

fn dual_mode() -> Outcome {
    let p = ChipProfile::infineon();
    let period = match p.reseed_period {
        ReseedPeriod::Every(n) => n.get() as usize,
        ReseedPeriod::Never => return Err("infineon has no reseed period".into()),
    };
    let mut dev = Device::simulated(p.clone(), 0).unwrap();
    let mut ds = Vec::with_capacity(300);
    for _ in 0..300 {
        ds.push(dev.get_random(1000).map_err(|e| e.to_string())?.duration_us);
    }
    let low = p.latency(1000, false);
    let high = p.latency(1000, true);
    let slow = ds.iter().filter(|&&d| d == high).count();
    let fast = ds.iter().filter(|&&d| d == low).count();
    ensure!(
        slow == 300 / period,
        "{slow} penalized calls, expected {}",
        300 / period
    );
    ensure!(slow + fast == 300, "{} calls on neither line", 300 - slow - fast);
    Ok(format!("{fast} calls at {low} us, {slow} at {high} us"))
}

fn throughput_anchors() -> Outcome {
    let intel = ChipProfile::intel();
    let modeled = intel.modeled_throughput(1024);
    let mut dev = Device::simulated(intel, 0).unwrap();
    let cfg = SweepConfig {
        min_size: 1024,
        max_size: 1024,
        step: 1,
        repetitions: 10,
    };
    let measured = bench::sweep(&mut dev, &cfg).map_err(|e| e.to_string())?[0].throughput_bps;
    for v in [modeled, measured] {
        ensure!((v - 500.0).abs() <= 0.10 * 500.0, "intel at 1024 B: {v} B/s");
    }

    let (_, inf_peak) = ChipProfile::infineon().peak_throughput();
    let (_, sino_peak) = ChipProfile::sinosun().peak_throughput();
    let target = inf_peak / 30.0;
    ensure!(
        (sino_peak - target).abs() <= 0.15 * target,
        "sinosun peak {sino_peak} vs infineon/30 {target}"
    );
    Ok(format!(
        "intel@1024 {measured:.1} B/s; sinosun peak {sino_peak:.1} vs infineon/30 {target:.1} B/s"
    ))
}

fn collect_to_vec(dev: &mut Device, total: usize, request_size: usize) -> Result<Vec<u8>, String> {
    let mut out = Vec::with_capacity(total);
    let opts = CollectOptions {
        total: total as u64,
        request_size,
        progress_every: u64::MAX,
    };
    let s = bench::collect(dev, &opts, &mut out, |_| {}, &CancelToken::new()).map_err(|e| e.to_string())?;
    if s.status != CollectStatus::Completed {
        return Err("collection aborted".into());
    }
    Ok(out)
}

fn quality_envelope() -> Outcome {
    let mut dev = Device::simulated(ChipProfile::sinosun(), 2024).unwrap();
    let data = collect_to_vec(&mut dev, 10 * MIB, 2048)?;
    let r = quality::analyze(&data).map_err(|e| e.to_string())?;
    let b = r.byte_level;
    ensure!(b.entropy >= 7.99, "entropy {}", b.entropy);
    ensure!((b.mean - 127.5).abs() <= 0.15, "mean {}", b.mean);
    for m in [r.byte_level, r.bit_level] {
        let s = m.serial_correlation.ok_or("serial correlation undefined")?;
        ensure!(s.abs() <= 0.002, "{} serial correlation {s}", m.level.name());
    }
    ensure!(b.mc_pi_error_pct <= 0.2, "pi error {}%", b.mc_pi_error_pct);
    ensure!(
        (0.01..=0.99).contains(&b.chi_square_exceed_prob),
        "chi-square exceedance {}",
        b.chi_square_exceed_prob
    );

    // 100 MiB streamed straight from the generator, never materialized.
    let mut stream = SeededStream::new(2025);
    let mut a = Analyzer::new();
    let mut buf = vec![0u8; 4 * MIB];
    for _ in 0..25 {
        stream.fill(&mut buf);
        a.update(&buf);
    }
    let big = a.finish().map_err(|e| e.to_string())?;
    ensure!(
        (big.byte_level.mean - 127.5).abs() <= 0.05,
        "100 MiB mean {}",
        big.byte_level.mean
    );
    Ok(format!(
        "10 MiB: entropy {:.6}, mean {:.4}, serial {:.6}, pi error {:.4}%, chi-square p {:.4}; 100 MiB mean {:.4}",
        b.entropy,
        b.mean,
        b.serial_correlation.unwrap(),
        b.mc_pi_error_pct,
        b.chi_square_exceed_prob,
        big.byte_level.mean
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xAC07);
    let (lo, hi) = (6f64.ln(), 1e6f64.ln());
    let mut worst = 0f64;
    let mut total = 0usize;
    for i in 0..1000 {
        let len = rng.random_range(lo..=hi).exp().round() as usize;
        let mut data = vec![0u8; len];
        rng.fill_bytes(&mut data);
        // Mix in low-entropy shapes so the oracle sees more than uniform noise.
        match i % 4 {
            1 => data.iter_mut().for_each(|b| *b &= 0x03),
            2 => data.iter_mut().for_each(|b| *b = if *b < 230 { 0 } else { *b }),
            3 => data
                .iter_mut()
                .enumerate()
                .for_each(|(j, b)| *b = b.wrapping_add(j as u8)),
            _ => {}
        }
        total += len;
        let r = quality::analyze(&data).map_err(|e| e.to_string())?;
        let byte = common::worst_disagreement(&r.byte_level, &common::naive_byte(&data));
        let bit = common::worst_disagreement(&r.bit_level, &common::naive_bit(&data));
        ensure!(
            byte <= 1e-9 && bit <= 1e-9,
            "input {i} (len {len}): byte {byte:e}, bit {bit:e}"
        );
        worst = worst.max(byte).max(bit);
    }

    let mut worst_tail = 0f64;
    for (stat, df) in common::chi_square_cases() {
        let lib = quality::chi_square_exceedance(stat, df as f64);
        let oracle = common::tail_by_quadrature(stat, df);
        let err = (lib - oracle).abs();
        ensure!(err <= 1e-8, "tail stat={stat} df={df}: {lib} vs {oracle}");
        worst_tail = worst_tail.max(err);
    }
    Ok(format!(
        "1000 inputs ({total} bytes), worst relative error {worst:.1e}; tail worst absolute error {worst_tail:.1e}"
    ))
}

fn degenerate_inputs() -> Outcome {
    let zeros = vec![0u8; 65_536];
    let r = quality::analyze(&zeros).map_err(|e| e.to_string())?;
    for m in [r.byte_level, r.bit_level] {
        let lvl = m.level.name();
        ensure!(m.entropy == 0.0, "{lvl} entropy {}", m.entropy);
        ensure!(m.mean == 0.0, "{lvl} mean {}", m.mean);
        ensure!(m.mc_pi_estimate == 4.0, "{lvl} pi {}", m.mc_pi_estimate);
        ensure!(
            m.serial_correlation.is_none(),
            "{lvl} serial {:?}",
            m.serial_correlation
        );
        let labels = m.labels();
        ensure!(
            labels[1] == ("chi_square", Label::Fail),
            "{lvl} chi-square label {:?}",
            labels[1]
        );
    }
    let text = report::render_text(&r, report::Piece::Whole, 1);
    ensure!(
        text.matches("undefined").count() == 2,
        "report text lacks 'undefined':\n{text}"
    );

    let cycle: Vec<u8> = (0..=255u8).cycle().take(256 * 1000).collect();
    let r = quality::analyze(&cycle).map_err(|e| e.to_string())?;
    ensure!(r.byte_level.entropy == 8.0, "cycle entropy {}", r.byte_level.entropy);
    ensure!(r.byte_level.mean == 127.5, "cycle mean {}", r.byte_level.mean);
    Ok("all-zero and 0..255 cycle exact".into())
}

fn negative_control() -> Outcome {
    let mut dev = Device::simulated_biased(ChipProfile::sinosun(), 7, 0.1).map_err(|e| e.to_string())?;
    let data = collect_to_vec(&mut dev, 10 * MIB, 2048)?;
    let r = quality::analyze(&data).map_err(|e| e.to_string())?;
    let p = r.byte_level.chi_square_exceed_prob;
    ensure!(p < 1e-4, "chi-square exceedance {p}");

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f = dir.path().join("biased.bin");
    std::fs::write(&f, &data).map_err(|e| e.to_string())?;
    let out = Command::new(BIN)
        .arg("analyze")
        .arg(&f)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.code() == Some(4), "analyze exit {:?}", out.status.code());
    Ok(format!(
        "exceedance {p:.1e}, mean {:.3}, analyze exit 4",
        r.byte_level.mean
    ))
}

fn bench_csv(profile: &str, seed: &str, extra: &[&str], out: &Path) -> Result<(Vec<u8>, Duration), String> {
    let start = Instant::now();
    let status = Command::new(BIN)
        .args(["bench", "--backend", profile, "--seed", seed, "--out"])
        .arg(out)
        .args(extra)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !status.success() {
        return Err(format!("bench {profile} {extra:?} exited {status}"));
    }
    Ok((std::fs::read(out).map_err(|e| e.to_string())?, elapsed))
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("sweep.csv");
    let mut slowest = Duration::ZERO;
    for profile in ["infineon", "intel", "atmel", "sinosun"] {
        let (a, t1) = bench_csv(profile, "17", &[], &out)?;
        let (b, t2) = bench_csv(profile, "17", &[], &out)?;
        ensure!(a == b, "{profile}: CSV differs between runs");
        let rows = bench::parse_csv(std::str::from_utf8(&a).unwrap())?;
        ensure!(rows.len() == 2048, "{profile}: {} rows", rows.len());
        slowest = slowest.max(t1).max(t2);
    }
    ensure!(slowest < Duration::from_secs(10), "slowest full sweep {slowest:?}");

    for (min, max, step) in [
        (3usize, 2000usize, 7usize),
        (100, 100, 5),
        (10, 95, 20),
        (1, 2048, 2048),
    ] {
        let extra = [min.to_string(), max.to_string(), step.to_string()];
        let args = [
            "--min", &extra[0], "--max", &extra[1], "--step", &extra[2], "--reps", "2",
        ];
        let (csv, _) = bench_csv("atmel", "1", &args, &out)?;
        let rows = bench::parse_csv(std::str::from_utf8(&csv).unwrap())?;
        let expected = (max - min) / step + 1;
        ensure!(
            rows.len() == expected,
            "{min}..{max} step {step}: {} rows, expected {expected}",
            rows.len()
        );
    }
    Ok(format!(
        "byte-identical CSVs, row counts exact, slowest full sweep {:.2}s",
        slowest.as_secs_f64()
    ))
}

fn collection() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f = dir.path().join("atmel.bin");
    let total = 10 * MIB;
    let out = Command::new(BIN)
        .args([
            "collect",
            "--backend",
            "atmel",
            "--seed",
            "31",
            "--request-size",
            "2048",
            "--total",
        ])
        .arg(total.to_string())
        .arg("--out")
        .arg(&f)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "collect exited {:?}", out.status.code());
    let data = std::fs::read(&f).map_err(|e| e.to_string())?;
    ensure!(data.len() == total, "wrote {} bytes", data.len());
    let mut expected = vec![0u8; total];
    SeededStream::new(31).fill(&mut expected);
    ensure!(
        data == expected,
        "file differs from independent replay of the seeded generator"
    );

    let big = dir.path().join("interrupted.bin");
    let mut child = Command::new(BIN)
        .args([
            "collect",
            "--backend",
            "atmel",
            "--seed",
            "32",
            "--total",
            "50000000000",
            "--progress-every",
            "500",
        ])
        .arg("--out")
        .arg(&big)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| e.to_string())?;
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    while !line.starts_with("collected") {
        line.clear();
        ensure!(
            stderr.read_line(&mut line).map_err(|e| e.to_string())? > 0,
            "no progress before exit"
        );
    }
    // SAFETY: plain signal delivery to a child we own.
    unsafe { libc::kill(child.id() as libc::pid_t, libc::SIGINT) };
    let drain = std::thread::spawn(move || std::io::copy(&mut stderr, &mut std::io::sink()));
    let res = child.wait_with_output().map_err(|e| e.to_string())?;
    let _ = drain.join();
    let summary = String::from_utf8_lossy(&res.stdout).into_owned();
    ensure!(
        res.status.code() == Some(3),
        "interrupted collect exited {:?}",
        res.status.code()
    );
    ensure!(summary.starts_with("aborted"), "summary: {summary}");
    let partial = std::fs::read(&big).map_err(|e| e.to_string())?;
    ensure!(
        !partial.is_empty() && partial.len() < 50_000_000_000,
        "partial size {}",
        partial.len()
    );
    let mut expected = vec![0u8; partial.len()];
    SeededStream::new(32).fill(&mut expected);
    ensure!(partial == expected, "partial file is not a prefix of the stream");
    Ok(format!(
        "{total} bytes exact; interrupt kept {} bytes, status aborted",
        partial.len()
    ))
}
