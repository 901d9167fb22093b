//! Text and CSV rendering of quality reports.

use std::fmt::Write as _;

use super::{chi_square_bucket, chi_square_label, Label, Level, MetricSet, QualityReport};

pub const CSV_HEADER: &str = "piece,level,metric,value,label";

/// Which block of an analysis a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Piece {
    Whole,
    /// 1-based segment index.
    Segment(usize),
}

impl Piece {
    fn csv_key(self) -> String {
        match self {
            Piece::Whole => "all".to_string(),
            Piece::Segment(i) => i.to_string(),
        }
    }

    fn title(self, total: usize) -> String {
        match self {
            Piece::Whole => "whole input".to_string(),
            Piece::Segment(i) => format!("piece {i} of {total}"),
        }
    }
}

fn serial_text(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

fn serial_label(v: Option<f64>) -> Label {
    if v.is_some() {
        Label::Info
    } else {
        Label::Fail
    }
}

fn write_level(out: &mut String, m: &MetricSet) {
    let chi_label = chi_square_label(m.chi_square_exceed_prob);
    let rows = [
        ("entropy", format!("{:.6}", m.entropy), Label::Info),
        (
            "chi square",
            format!(
                "{:.2}% (statistic {:.4}, bucket {})",
                m.chi_square_exceed_prob * 100.0,
                m.chi_square,
                chi_square_bucket(m.chi_square_exceed_prob)
            ),
            chi_label,
        ),
        ("arithmetic mean", format!("{:.4}", m.mean), Label::Info),
        (
            "monte carlo pi",
            format!("{:.9} (error {:.2}%)", m.mc_pi_estimate, m.mc_pi_error_pct),
            Label::Info,
        ),
        (
            "serial correlation",
            serial_text(m.serial_correlation),
            serial_label(m.serial_correlation),
        ),
    ];
    let _ = writeln!(out, "{} level", m.level.name());
    for (name, value, label) in rows {
        let _ = writeln!(out, "  {name:<20}{value:<44}{label}");
    }
}

/// Table-style text block for one report.
pub fn render_text(report: &QualityReport, piece: Piece, total_pieces: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ({} bytes)", piece.title(total_pieces), report.input_length);
    write_level(&mut out, &report.byte_level);
    write_level(&mut out, &report.bit_level);
    out
}

/// CSV rows (no header) for one report: one row per level and metric.
pub fn render_csv_rows(report: &QualityReport, piece: Piece) -> String {
    let mut out = String::new();
    let key = piece.csv_key();
    for level in [Level::Byte, Level::Bit] {
        let m = report.level(level);
        let chi_label = chi_square_label(m.chi_square_exceed_prob);
        let rows: [(&str, String, Label); 7] = [
            ("entropy", m.entropy.to_string(), Label::Info),
            ("chi_square_stat", m.chi_square.to_string(), Label::Info),
            (
                "chi_square_exceed_prob",
                m.chi_square_exceed_prob.to_string(),
                chi_label,
            ),
            ("mean", m.mean.to_string(), Label::Info),
            ("mc_pi_estimate", m.mc_pi_estimate.to_string(), Label::Info),
            ("mc_pi_error_pct", m.mc_pi_error_pct.to_string(), Label::Info),
            (
                "serial_correlation",
                m.serial_correlation
                    .map_or_else(|| "undefined".to_string(), |v| v.to_string()),
                serial_label(m.serial_correlation),
            ),
        ];
        for (metric, value, label) in rows {
            let _ = writeln!(out, "{key},{},{metric},{value},{label}", level.name());
        }
    }
    out
}
