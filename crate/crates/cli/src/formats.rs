//! Readers and writers for the interchange file formats.
//!
//! Writers render the complete file into a string first and hand it to the
//! caller for a single atomic-enough write, so a failure mid-computation
//! never leaves a partial file behind.

use std::path::Path;

use superburst_core::hbt::{DiagPoint, G2Map, SumRuleReport};
use superburst_core::jump::TimeTagRecord;
use superburst_core::obe::TabulatedPulse;

use crate::CliError;

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// `nan` literal for undefined entries; finite values with 6 fractional
/// digits (enough for counts-derived ratios, stable across platforms).
fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        "nan".to_owned()
    }
}

// ---------------------------------------------------------------------------
// timetag-v1
// ---------------------------------------------------------------------------

/// Parsed time-tag file: header metadata plus validated records.
#[derive(Debug)]
pub struct TimeTagFile {
    pub bin_origin_ns: f64,
    /// Total repetitions in the dataset, including click-less ones, when
    /// the generator recorded it.
    pub n_repetitions: Option<u64>,
    /// Fixed per-repetition emitted photon number, when guaranteed.
    pub fixed_nph: Option<u32>,
    pub records: Vec<TimeTagRecord>,
}

pub fn render_timetag(
    records: &[TimeTagRecord],
    bin_origin_ns: f64,
    n_repetitions: u64,
    fixed_nph: Option<u32>,
) -> String {
    let mut out = String::with_capacity(32 + records.len() * 24);
    out.push_str(&format!("#timetag-v1 bin_origin_ns={bin_origin_ns:.3}"));
    out.push_str(&format!(" n_repetitions={n_repetitions}"));
    if let Some(nph) = fixed_nph {
        out.push_str(&format!(" fixed_nph={nph}"));
    }
    out.push('\n');
    for rec in records {
        out.push_str(&format!(
            "{},{},{:.3}\n",
            rec.repetition, rec.channel, rec.time_ns
        ));
    }
    out
}

pub fn parse_timetag(text: &str, path: &Path) -> Result<TimeTagFile, CliError> {
    let name = path.display();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| input_err(format!("{name}: empty file, missing #timetag-v1 header")))?;
    let mut tokens = header.split_whitespace();
    let magic = tokens.next().unwrap_or("");
    if magic != "#timetag-v1" {
        return Err(input_err(format!(
            "{name}:1: expected #timetag-v1 header, got {magic:?}"
        )));
    }
    let mut bin_origin_ns: Option<f64> = None;
    let mut n_repetitions: Option<u64> = None;
    let mut fixed_nph: Option<u32> = None;
    for token in tokens {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| input_err(format!("{name}:1: bad header token {token:?}")))?;
        match key {
            "bin_origin_ns" => {
                bin_origin_ns = Some(value.parse::<f64>().map_err(|_| {
                    input_err(format!("{name}:1: bad bin_origin_ns value {value:?}"))
                })?)
            }
            "n_repetitions" => {
                n_repetitions = Some(value.parse::<u64>().map_err(|_| {
                    input_err(format!("{name}:1: bad n_repetitions value {value:?}"))
                })?)
            }
            "fixed_nph" => {
                fixed_nph = Some(value.parse::<u32>().map_err(|_| {
                    input_err(format!("{name}:1: bad fixed_nph value {value:?}"))
                })?)
            }
            other => {
                return Err(input_err(format!(
                    "{name}:1: unknown header key {other:?}"
                )))
            }
        }
    }
    let bin_origin_ns = bin_origin_ns
        .ok_or_else(|| input_err(format!("{name}:1: header missing bin_origin_ns")))?;

    let mut records = Vec::new();
    let mut prev: Option<(u64, f64)> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (rep, channel, time) = match (fields.next(), fields.next(), fields.next(), fields.next())
        {
            (Some(r), Some(c), Some(t), None) => (r, c, t),
            _ => {
                return Err(input_err(format!(
                    "{name}:{lineno}: expected repetition,channel,time_ns"
                )))
            }
        };
        let repetition = rep
            .parse::<u64>()
            .map_err(|_| input_err(format!("{name}:{lineno}: bad repetition {rep:?}")))?;
        let channel = channel
            .parse::<u8>()
            .map_err(|_| input_err(format!("{name}:{lineno}: bad channel {channel:?}")))?;
        if channel != 1 && channel != 2 {
            return Err(input_err(format!(
                "{name}:{lineno}: unknown channel {channel} (expected 1 or 2)"
            )));
        }
        let time_ns = time
            .parse::<f64>()
            .map_err(|_| input_err(format!("{name}:{lineno}: bad time {time:?}")))?;
        if !time_ns.is_finite() {
            return Err(input_err(format!("{name}:{lineno}: non-finite time")));
        }
        if let Some((prev_rep, prev_time)) = prev {
            if repetition < prev_rep || (repetition == prev_rep && time_ns < prev_time) {
                return Err(input_err(format!(
                    "{name}:{lineno}: records not sorted by (repetition, time)"
                )));
            }
        }
        prev = Some((repetition, time_ns));
        records.push(TimeTagRecord {
            repetition,
            channel,
            time_ns,
        });
    }
    Ok(TimeTagFile {
        bin_origin_ns,
        n_repetitions,
        fixed_nph,
        records,
    })
}

pub fn read_timetag(path: &Path) -> Result<TimeTagFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    parse_timetag(&text, path)
}

// ---------------------------------------------------------------------------
// g2map-v1 and the diagonal summary
// ---------------------------------------------------------------------------

pub fn render_g2map(est: &G2Map, nc: &[u64], n1: &[u64], n2: &[u64]) -> String {
    let n = est.spec.n_bins();
    let mut out = String::with_capacity(64 + n * n * 40);
    out.push_str("#g2map-v1\n");
    out.push_str("t1_ns,t2_ns,g2,sigma,nc,n1,n2\n");
    for b1 in 0..n {
        for b2 in 0..n {
            let (g2, sigma) = est.at(b1, b2);
            out.push_str(&format!(
                "{:.3},{:.3},{},{},{},{},{}\n",
                est.spec.bin_center(b1),
                est.spec.bin_center(b2),
                fmt_value(g2),
                fmt_value(sigma),
                nc[b1 * n + b2],
                n1[b1],
                n2[b2],
            ));
        }
    }
    out
}

/// One `g2map-v1` row.
#[derive(Clone, Copy, Debug)]
pub struct G2MapRow {
    pub t1_ns: f64,
    pub t2_ns: f64,
    pub g2: f64,
    pub sigma: f64,
}

pub fn parse_g2map(text: &str, path: &Path) -> Result<Vec<G2MapRow>, CliError> {
    let name = path.display();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line.trim() == "#g2map-v1" => {}
        _ => {
            return Err(input_err(format!(
                "{name}:1: expected #g2map-v1 header"
            )))
        }
    }
    match lines.next() {
        Some((_, line)) if line.trim() == "t1_ns,t2_ns,g2,sigma,nc,n1,n2" => {}
        _ => {
            return Err(input_err(format!(
                "{name}:2: expected t1_ns,t2_ns,g2,sigma,nc,n1,n2 column line"
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(input_err(format!("{name}:{lineno}: expected 7 fields")));
        }
        let num = |s: &str| -> Result<f64, CliError> {
            if s == "nan" {
                Ok(f64::NAN)
            } else {
                s.parse::<f64>()
                    .map_err(|_| input_err(format!("{name}:{lineno}: bad number {s:?}")))
            }
        };
        rows.push(G2MapRow {
            t1_ns: num(fields[0])?,
            t2_ns: num(fields[1])?,
            g2: num(fields[2])?,
            sigma: num(fields[3])?,
        });
    }
    Ok(rows)
}

pub fn render_diagonal(points: &[DiagPoint]) -> String {
    let mut out = String::from("t_ns,g2,sigma\n");
    for p in points {
        out.push_str(&format!(
            "{:.3},{},{}\n",
            p.t_ns,
            fmt_value(p.g2),
            fmt_value(p.sigma)
        ));
    }
    out
}

/// A `(t, value, sigma)` series: the diagonal summary and any model curve
/// reduce to this for comparison purposes.
#[derive(Clone, Copy, Debug)]
pub struct SeriesPoint {
    pub t_ns: f64,
    pub value: f64,
    pub sigma: f64,
}

pub fn parse_diagonal(text: &str, path: &Path) -> Result<Vec<SeriesPoint>, CliError> {
    parse_three_column(text, path, "t_ns,g2,sigma")
}

fn parse_three_column(
    text: &str,
    path: &Path,
    expected_header: &str,
) -> Result<Vec<SeriesPoint>, CliError> {
    let name = path.display();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line.trim() == expected_header => {}
        other => {
            return Err(input_err(format!(
                "{name}:1: expected header {expected_header:?}, got {:?}",
                other.map(|(_, l)| l).unwrap_or("")
            )))
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(input_err(format!("{name}:{lineno}: expected 3 fields")));
        }
        let num = |s: &str| -> Result<f64, CliError> {
            if s == "nan" {
                Ok(f64::NAN)
            } else {
                s.parse::<f64>()
                    .map_err(|_| input_err(format!("{name}:{lineno}: bad number {s:?}")))
            }
        };
        points.push(SeriesPoint {
            t_ns: num(fields[0])?,
            value: num(fields[1])?,
            sigma: num(fields[2])?,
        });
    }
    Ok(points)
}

// ---------------------------------------------------------------------------
// Model curves
// ---------------------------------------------------------------------------

/// `time_ns,gamma,g2` — emission rate (units of Γ) and equal-time g².
pub fn render_dicke_curve(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("time_ns,gamma,g2\n");
    for &(t, gamma, g2) in rows {
        out.push_str(&format!("{t:.3},{},{}\n", fmt_value(gamma), fmt_value(g2)));
    }
    out
}

/// Parse a `time_ns,gamma,g2` model curve into a `(t, g2)` series.
pub fn parse_dicke_curve_g2(text: &str, path: &Path) -> Result<Vec<SeriesPoint>, CliError> {
    let raw = parse_three_column(text, path, "time_ns,gamma,g2")?;
    Ok(raw
        .into_iter()
        .map(|p| SeriesPoint {
            t_ns: p.t_ns,
            value: p.sigma, // third column is g2 here
            sigma: 0.0,
        })
        .collect())
}

/// `t1_ns,t2_ns,g2` regression rows for a list of t₁ values.
pub fn render_regression(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("t1_ns,t2_ns,g2\n");
    for &(t1, t2, g2) in rows {
        out.push_str(&format!("{t1:.3},{t2:.3},{}\n", fmt_value(g2)));
    }
    out
}

/// Parse regression rows, keeping only the block whose t₁ is nearest to
/// `t1_ns`, as a `(t2, g2)` series.
pub fn parse_regression_slice(
    text: &str,
    path: &Path,
    t1_ns: f64,
) -> Result<Vec<SeriesPoint>, CliError> {
    let raw = parse_three_column(text, path, "t1_ns,t2_ns,g2")?;
    if raw.is_empty() {
        return Err(input_err(format!("{}: no regression rows", path.display())));
    }
    let nearest = raw
        .iter()
        .map(|p| p.t_ns)
        .fold(raw[0].t_ns, |best, t| {
            if (t - t1_ns).abs() < (best - t1_ns).abs() {
                t
            } else {
                best
            }
        });
    Ok(raw
        .into_iter()
        .filter(|p| (p.t_ns - nearest).abs() < 1e-9)
        .map(|p| SeriesPoint {
            t_ns: p.value,  // second column is t2
            value: p.sigma, // third column is g2
            sigma: 0.0,
        })
        .collect())
}

/// `time_ns,rho_ee,rate` for the OBE solution.
pub fn render_obe_curve(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("time_ns,rho_ee,rate\n");
    for &(t, rho_ee, rate) in rows {
        out.push_str(&format!(
            "{t:.3},{},{}\n",
            fmt_value(rho_ee),
            fmt_value(rate)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Sum-rule report
// ---------------------------------------------------------------------------

pub fn render_sum_rule(report: &SumRuleReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("lhs={}\n", fmt_value(report.lhs)));
    out.push_str(&format!("rhs={}\n", fmt_value(report.rhs)));
    out.push_str(&format!("rel_dev={}\n", fmt_value(report.rel_dev)));
    out.push_str(&format!("sigma_rel={}\n", fmt_value(report.sigma_rel)));
    match report.fixed_nph {
        Some(n) => out.push_str(&format!("fixed_nph={n}\n")),
        None => out.push_str("fixed_nph=none\n"),
    }
    match report.expected_dev {
        Some(d) => out.push_str(&format!("expected_dev={}\n", fmt_value(d))),
        None => out.push_str("expected_dev=none\n"),
    }
    match report.consistent {
        Some(true) => out.push_str("consistent=true\n"),
        Some(false) => out.push_str("consistent=false\n"),
        // Without the fixed-photon-number flag the identity need not hold;
        // we can only warn, not judge.
        None => out.push_str("consistent=unknown\n"),
    }
    out
}

// ---------------------------------------------------------------------------
// Tabulated pulse input
// ---------------------------------------------------------------------------

/// CSV `time_ns,omega` samples (omega in units of Γ), header required.
pub fn read_tabulated_pulse(path: &Path, detuning: f64) -> Result<TabulatedPulse, CliError> {
    let name = path.display();
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {name}: {e}")))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, line)) if line.trim() == "time_ns,omega" => {}
        _ => {
            return Err(input_err(format!(
                "{name}:1: expected time_ns,omega header"
            )))
        }
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (t, w) = line
            .split_once(',')
            .ok_or_else(|| input_err(format!("{name}:{lineno}: expected time_ns,omega")))?;
        let t = t
            .parse::<f64>()
            .map_err(|_| input_err(format!("{name}:{lineno}: bad time {t:?}")))?;
        let w = w
            .parse::<f64>()
            .map_err(|_| input_err(format!("{name}:{lineno}: bad omega {w:?}")))?;
        samples.push((t, w));
    }
    let pulse = TabulatedPulse { samples, detuning };
    pulse
        .validate()
        .map_err(|e| input_err(format!("{name}: {e}")))?;
    Ok(pulse)
}

/// Write a fully rendered file, creating parent directories as needed.
pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                input_err(format!("cannot create directory {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

/// Validate a binning spec against a parsed time-tag header: spec times are
/// absolute, record times are relative to `bin_origin_ns`.
pub fn shifted_records(file: &TimeTagFile) -> Vec<TimeTagRecord> {
    if file.bin_origin_ns == 0.0 {
        return file.records.clone();
    }
    file.records
        .iter()
        .map(|r| TimeTagRecord {
            repetition: r.repetition,
            channel: r.channel,
            time_ns: r.time_ns + file.bin_origin_ns,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.csv")
    }

    #[test]
    fn timetag_round_trip() {
        let records = vec![
            TimeTagRecord {
                repetition: 0,
                channel: 1,
                time_ns: 1.25,
            },
            TimeTagRecord {
                repetition: 0,
                channel: 2,
                time_ns: 3.5,
            },
            TimeTagRecord {
                repetition: 2,
                channel: 1,
                time_ns: 0.125,
            },
        ];
        let text = render_timetag(&records, 0.0, 5, Some(6));
        let parsed = parse_timetag(&text, &p()).unwrap();
        assert_eq!(parsed.records.len(), 3);
        assert_eq!(parsed.n_repetitions, Some(5));
        assert_eq!(parsed.fixed_nph, Some(6));
        assert_eq!(parsed.records[0].time_ns, 1.25);
        assert_eq!(parsed.records[2].repetition, 2);
    }

    #[test]
    fn timetag_times_have_three_fraction_digits() {
        let records = vec![TimeTagRecord {
            repetition: 0,
            channel: 1,
            time_ns: 2.0,
        }];
        let text = render_timetag(&records, 0.0, 1, None);
        assert!(text.contains("0,1,2.000\n"), "{text}");
        assert!(text.starts_with("#timetag-v1 bin_origin_ns=0.000"));
    }

    #[test]
    fn timetag_rejects_bad_channel_with_line_number() {
        let text = "#timetag-v1 bin_origin_ns=0.000\n0,3,1.000\n";
        let err = parse_timetag(text, &p()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn timetag_rejects_unsorted_records() {
        let text = "#timetag-v1 bin_origin_ns=0.000\n1,1,1.000\n0,1,2.000\n";
        assert!(parse_timetag(text, &p()).is_err());
        let text = "#timetag-v1 bin_origin_ns=0.000\n0,1,5.000\n0,1,2.000\n";
        assert!(parse_timetag(text, &p()).is_err());
    }

    #[test]
    fn timetag_rejects_wrong_version() {
        let text = "#timetag-v2 bin_origin_ns=0.000\n";
        assert!(parse_timetag(text, &p()).is_err());
    }

    #[test]
    fn empty_timetag_with_header_is_valid() {
        let text = "#timetag-v1 bin_origin_ns=0.000\n";
        let parsed = parse_timetag(text, &p()).unwrap();
        assert!(parsed.records.is_empty());
        assert_eq!(parsed.n_repetitions, None);
    }

    #[test]
    fn diagonal_round_trip_preserves_nan() {
        let points = vec![
            DiagPoint {
                t_ns: 1.0,
                half_width_ns: 1.0,
                g2: 1.5,
                sigma: 0.1,
            },
            DiagPoint {
                t_ns: 3.0,
                half_width_ns: 1.0,
                g2: f64::NAN,
                sigma: f64::NAN,
            },
        ];
        let text = render_diagonal(&points);
        assert!(text.contains("3.000,nan,nan"));
        let parsed = parse_diagonal(&text, &p()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert!((parsed[0].value - 1.5).abs() < 1e-12);
        assert!(parsed[1].value.is_nan());
    }

    #[test]
    fn regression_slice_picks_nearest_t1() {
        let text = "t1_ns,t2_ns,g2\n4.000,4.000,1.200\n4.000,5.000,1.100\n8.000,8.000,1.050\n";
        let slice = parse_regression_slice(text, &p(), 4.2).unwrap();
        assert_eq!(slice.len(), 2);
        assert_eq!(slice[0].t_ns, 4.0);
        assert!((slice[1].value - 1.1).abs() < 1e-12);
    }

    #[test]
    fn dicke_curve_parses_g2_column() {
        let text = "time_ns,gamma,g2\n0.000,6.000000,1.666667\n0.500,5.900000,nan\n";
        let series = parse_dicke_curve_g2(text, &p()).unwrap();
        assert!((series[0].value - 1.666667).abs() < 1e-9);
        assert!(series[1].value.is_nan());
    }

    #[test]
    fn tabulated_pulse_rejects_non_monotonic_times() {
        let dir = std::env::temp_dir().join("superburst-pulse-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pulse.csv");
        std::fs::write(&path, "time_ns,omega\n0.0,1.0\n0.0,2.0\n").unwrap();
        assert!(read_tabulated_pulse(&path, 0.0).is_err());
        std::fs::write(&path, "time_ns,omega\n0.0,0.0\n1.0,6.5\n12.0,6.5\n13.0,0.0\n").unwrap();
        let pulse = read_tabulated_pulse(&path, 0.0).unwrap();
        assert_eq!(pulse.samples.len(), 4);
    }
}
