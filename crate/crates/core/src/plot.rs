//! Small deterministic SVG line plots of computed series, written next to a
//! long-format CSV of the plotted data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::biphoton::{G2Curve, Spectrum};
use crate::error::{Error, Result};
use crate::output::{csv, write_artifact};
use crate::source::FreeSpaceOutputs;
use crate::units::{rad_s_to_mhz, rad_s_to_wavenumber_cm, s_to_ns};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    /// vertical lines at each x; y is ignored
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub color: &'static str,
    pub style: Style,
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub config_hash: String,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

pub fn render_svg(fig: &Figure) -> Result<String> {
    if fig.series.is_empty() || fig.series.iter().all(|s| s.x.is_empty()) {
        return Err(Error::InvalidParameter(format!("plot \"{}\" has no data", fig.title)));
    }
    let lines = || fig.series.iter().filter(|s| s.style == Style::Line);
    let (x0, x1) = bounds(lines().flat_map(|s| s.x.iter().cloned()))
        .or_else(|| bounds(fig.series.iter().flat_map(|s| s.x.iter().cloned())))
        .expect("non-empty series");
    let (ymin, ymax) = bounds(lines().flat_map(|s| s.y.iter().cloned())).unwrap_or((0.0, 1.0));
    let (y0, y1) = (ymin.min(0.0), ymax + 0.05 * (ymax - ymin.min(0.0)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(o, "<desc>config_hash={}</desc>", escape(&fig.config_hash));
    let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        o,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let xs = nice_step(x1 - x0);
    for t in ticks(x0, x1) {
        let px = sx(t);
        let _ = writeln!(
            o,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(t, xs)
        );
    }
    let ys = nice_step(y1 - y0);
    for t in ticks(y0, y1) {
        let py = sy(t);
        let _ = writeln!(
            o,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick_label(t, ys)
        );
    }
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&fig.x_label)
    );
    let _ = writeln!(
        o,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.y_label)
    );
    for (k, s) in fig.series.iter().enumerate() {
        match s.style {
            Style::Line => {
                let mut d = String::new();
                for (i, (&x, &y)) in s.x.iter().zip(&s.y).enumerate() {
                    let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, sx(x), sy(y));
                }
                let _ = writeln!(
                    o,
                    r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    s.color
                );
            }
            Style::Markers => {
                for &x in s.x.iter().filter(|&&x| x >= x0 && x <= x1) {
                    let px = sx(x);
                    let _ = writeln!(
                        o,
                        r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="{}" stroke-dasharray="4 3"/>"#,
                        TOP + ph,
                        s.color
                    );
                }
            }
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = LEFT + pw - 170.0;
        let _ = writeln!(
            o,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            s.color,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    o.push_str("</svg>\n");
    Ok(o)
}

/// Long-format CSV of every series: series,x,y.
pub fn series_csv(fig: &Figure) -> String {
    let rows = fig.series.iter().flat_map(|s| {
        s.x.iter().enumerate().map(move |(i, &x)| {
            let y = s.y.get(i).map_or(String::new(), |y| format!("{y:.10e}"));
            vec![s.label.clone(), format!("{x:.10e}"), y]
        })
    });
    csv(&fig.config_hash, &["series", "x", "y"], rows)
}

/// Write `<stem>.csv` and `<stem>.svg`.
pub fn emit_plot_grid(fig: &Figure, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    let svg = render_svg(fig)?;
    Ok((
        write_artifact(dir, &format!("{stem}.csv"), &series_csv(fig))?,
        write_artifact(dir, &format!("{stem}.svg"), &svg)?,
    ))
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let max = v.iter().cloned().fold(0.0, f64::max);
    v.iter().map(|&y| if max > 0.0 { y / max } else { 0.0 }).collect()
}

/// Backward and forward sinc^2 gain with the neighbouring mode pairs.
pub fn gain_overlay(fs: &FreeSpaceOutputs, hash: &str) -> Figure {
    let x: Vec<f64> = fs.omega.iter().map(|&w| rad_s_to_wavenumber_cm(w - fs.center)).collect();
    Figure {
        title: "Parametric gain, backward vs forward".into(),
        x_label: "signal detuning / 2pi (cm^-1)".into(),
        y_label: "normalized spectral density".into(),
        series: vec![
            Series {
                label: "backward".into(),
                x: x.clone(),
                y: normalized(&fs.backward),
                color: "#1f4e9c",
                style: Style::Line,
            },
            Series {
                label: "forward".into(),
                x,
                y: normalized(&fs.forward),
                color: "#2a8a3e",
                style: Style::Line,
            },
            Series {
                label: "mode pairs".into(),
                x: fs
                    .mode_pair_markers
                    .iter()
                    .map(|&w| rad_s_to_wavenumber_cm(w - fs.center))
                    .collect(),
                y: Vec::new(),
                color: "#c0392b",
                style: Style::Markers,
            },
        ],
        config_hash: hash.into(),
    }
}

pub fn g2_figure(g2: &G2Curve, hash: &str) -> Figure {
    Figure {
        title: "Glauber correlation".into(),
        x_label: "tau (ns)".into(),
        y_label: "G2 / max".into(),
        series: vec![Series {
            label: "G2".into(),
            x: g2.tau.iter().map(|&t| s_to_ns(t)).collect(),
            y: normalized(&g2.g2),
            color: "#1f4e9c",
            style: Style::Line,
        }],
        config_hash: hash.into(),
    }
}

pub fn spectrum_figure(s: &Spectrum, omega_q: f64, hash: &str) -> Figure {
    Figure {
        title: "Signal spectral density".into(),
        x_label: "detuning / 2pi (MHz)".into(),
        y_label: "S1 / max".into(),
        series: vec![Series {
            label: "S1".into(),
            x: s.omega.iter().map(|&w| rad_s_to_mhz(w - omega_q)).collect(),
            y: normalized(&s.density),
            color: "#1f4e9c",
            style: Style::Line,
        }],
        config_hash: hash.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> Figure {
        Figure {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series {
                label: "s".into(),
                x: vec![0.0, 1.0, 2.0],
                y: vec![0.0, 1.0, 0.5],
                color: "black",
                style: Style::Line,
            }],
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn deterministic_and_escaped() {
        let a = render_svg(&fig()).unwrap();
        assert_eq!(a, render_svg(&fig()).unwrap());
        assert!(a.contains("a &lt; b"));
        assert!(a.contains("config_hash=abc"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_figure_rejected() {
        let mut f = fig();
        f.series.clear();
        assert!(render_svg(&f).is_err());
    }

    #[test]
    fn tick_steps() {
        assert_eq!(nice_step(10.0), 2.0);
        assert_eq!(ticks(-1.0, 1.0), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
