//! CSV and SVG emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::ExperimentRecord;
use crate::stats::quantile;

pub const CSV_HEADER: &str = "seed,algorithm,t,cumulative_regret";

/// One cumulative-regret curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub seed: u64,
    pub algorithm: String,
    pub t: Vec<usize>,
    pub values: Vec<f64>,
}

impl From<&ExperimentRecord> for Series {
    fn from(r: &ExperimentRecord) -> Self {
        Series {
            seed: r.seed,
            algorithm: r.algorithm.to_string(),
            t: r.t.clone(),
            values: r.cumulative_regret.clone(),
        }
    }
}

/// Floats use Rust's shortest round-trip formatting, which never depends on
/// locale.
pub fn csv_string(series: &[Series]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in series {
        for (t, v) in s.t.iter().zip(&s.values) {
            let _ = writeln!(out, "{},{},{},{}", s.seed, s.algorithm, t, v);
        }
    }
    out
}

pub fn emit_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Argument("no records to write".into()));
    }
    let series: Vec<Series> = records.iter().map(Series::from).collect();
    fs::write(path, csv_string(&series))?;
    Ok(())
}

/// Groups rows by `(algorithm, seed)` in first-appearance order.
pub fn parse_csv(text: &str) -> Result<Vec<Series>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::Parse {
                input: other.unwrap_or("").to_string(),
                reason: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, u64), Series> = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let bad = |reason: &str| Error::Parse {
            input: line.to_string(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let seed: u64 = fields[0].trim().parse().map_err(|_| bad("bad seed"))?;
        let algorithm = fields[1].trim().to_string();
        let t: usize = fields[2].trim().parse().map_err(|_| bad("bad t"))?;
        let v: f64 = fields[3].trim().parse().map_err(|_| bad("bad regret"))?;
        let key = (algorithm.clone(), seed);
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Series {
                seed,
                algorithm,
                t: Vec::new(),
                values: Vec::new(),
            }
        });
        entry.t.push(t);
        entry.values.push(v);
    }
    Ok(order
        .into_iter()
        .map(|k| groups.remove(&k).expect("inserted above"))
        .collect())
}

pub fn read_csv(path: &Path) -> Result<Vec<Series>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Median and interquartile band across seeds, on the shortest common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub algorithm: String,
    pub t: Vec<usize>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
}

pub fn bands(series: &[Series]) -> Vec<Band> {
    let mut groups: BTreeMap<&str, Vec<&Series>> = BTreeMap::new();
    for s in series {
        groups.entry(s.algorithm.as_str()).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|(alg, ss)| {
            let len = ss.iter().map(|s| s.values.len().min(s.t.len())).min().unwrap_or(0);
            let mut band = Band {
                algorithm: alg.to_string(),
                t: ss[0].t[..len].to_vec(),
                median: Vec::with_capacity(len),
                q25: Vec::with_capacity(len),
                q75: Vec::with_capacity(len),
            };
            for i in 0..len {
                let column: Vec<f64> = ss.iter().map(|s| s.values[i]).collect();
                band.median.push(quantile(&column, 0.5));
                band.q25.push(quantile(&column, 0.25));
                band.q75.push(quantile(&column, 0.75));
            }
            band
        })
        .collect()
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn nice_ticks(max: f64) -> Vec<f64> {
    if max.is_nan() || max <= 0.0 {
        return vec![0.0];
    }
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| max / s <= 6.0)
        .unwrap_or(10.0 * mag);
    (0..)
        .map(|i| i as f64 * step)
        .take_while(|v| *v <= max * (1.0 + 1e-9))
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// One median polyline and one shaded IQR polygon per algorithm.
pub fn render_svg(series: &[Series]) -> String {
    let bands = bands(series);
    let t_max = bands.iter().flat_map(|b| b.t.last().copied()).max().unwrap_or(1).max(1) as f64;
    let y_max = bands
        .iter()
        .flat_map(|b| b.q75.iter().chain(&b.median).copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + plot_w * t / t_max;
    let sy = |v: f64| TOP + plot_h * (1.0 - v / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g id="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{y0}" x2="{x1}" y2="{y0}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{y0}"/></g>"#,
        y0 = TOP + plot_h,
        x1 = LEFT + plot_w
    );
    let _ = writeln!(svg, r#"<g id="ticks" font-family="sans-serif" font-size="11">"#);
    for v in nice_ticks(t_max) {
        let x = sx(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="black"/><text x="{x:.2}" y="{yt}" text-anchor="middle">{}</text>"#,
            fmt_tick(v),
            y0 = TOP + plot_h,
            y1 = TOP + plot_h + 5.0,
            yt = TOP + plot_h + 18.0
        );
    }
    for v in nice_ticks(y_max) {
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{xt}" y="{yt:.2}" text-anchor="end">{}</text>"#,
            fmt_tick(v),
            x0 = LEFT - 5.0,
            xt = LEFT - 8.0,
            yt = y + 4.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text id="x-label" x="{x}" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="14">t</text>"#,
        x = LEFT + plot_w / 2.0,
        y = HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text id="y-label" x="20" y="{y}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 20 {y})">cumulative regret</text>"#,
        y = TOP + plot_h / 2.0
    );

    for (i, band) in bands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut upper: Vec<String> = band
            .t
            .iter()
            .zip(&band.q75)
            .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t as f64), sy(v)))
            .collect();
        let lower: Vec<String> = band
            .t
            .iter()
            .zip(&band.q25)
            .rev()
            .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t as f64), sy(v)))
            .collect();
        upper.extend(lower);
        let _ = writeln!(
            svg,
            r#"<polygon class="iqr" data-algorithm="{alg}" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            alg = band.algorithm
        );
        let line: Vec<String> = band
            .t
            .iter()
            .zip(&band.median)
            .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t as f64), sy(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="median" data-algorithm="{alg}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" "),
            alg = band.algorithm
        );
        let ly = TOP + 20.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ty}" font-family="sans-serif" font-size="12">{alg}</text>"#,
            lx2 = lx + 20.0,
            tx = lx + 26.0,
            ty = ly + 4.0,
            alg = band.algorithm
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn render_svg_records(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Argument("no records to plot".into()));
    }
    let series: Vec<Series> = records.iter().map(Series::from).collect();
    write_svg(&series, path)
}

pub fn write_svg(series: &[Series], path: &Path) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Argument("no series to plot".into()));
    }
    fs::write(path, render_svg(series))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(seed: u64, alg: &str, scale: f64, len: usize) -> Series {
        Series {
            seed,
            algorithm: alg.to_string(),
            t: (1..=len).collect(),
            values: (1..=len).map(|t| scale * (t as f64).sqrt()).collect(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = curve(3, "EMC", 0.1, 10);
        s.values[4] = 1.0 / 3.0;
        s.values[9] = 123456.789e-20;
        let text = csv_string(std::slice::from_ref(&s));
        assert_eq!(text.lines().count(), 11);
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, vec![s]);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(parse_csv("a,b\n").is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,EMC,x,2\n")).is_err());
        assert!(parse_csv(&format!("{CSV_HEADER}\n1,EMC,2\n")).is_err());
    }

    #[test]
    fn bands_are_ordered() {
        let series: Vec<Series> = (0..7).map(|s| curve(s, "EMC", 1.0 + s as f64, 20)).collect();
        let b = bands(&series);
        assert_eq!(b.len(), 1);
        for i in 0..20 {
            assert!(b[0].q25[i] <= b[0].median[i] && b[0].median[i] <= b[0].q75[i]);
        }
        assert!((b[0].median[3] - 4.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn svg_has_one_line_per_algorithm() {
        let mut series: Vec<Series> = (0..3).map(|s| curve(s, "EMC", 1.0, 50)).collect();
        series.extend((0..3).map(|s| curve(s, "ESTC_LASSO", 2.0, 50)));
        let svg = render_svg(&series);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains(">t</text>"));
        assert!(svg.contains(">cumulative regret</text>"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn tick_helpers() {
        assert_eq!(nice_ticks(10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(fmt_tick(2.5), "2.5");
        assert_eq!(fmt_tick(20000.0), "20000");
    }
}
