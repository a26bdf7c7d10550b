//! Static SVG plots of a trajectory log: per-axis position and velocity time
//! series, and the x-y ground track, one line per agent with a legend.

use super::log::TrajectoryLog;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum PlotError {
    #[error("nothing to plot: the trajectory log is empty")]
    EmptyLog,
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which plot families to emit.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlotFlags {
    pub position: bool,
    pub velocity: bool,
}

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 42.0;
const MARGIN_B: f64 = 58.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
];

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn data_range(series: &[Series], pick: impl Fn(&(f64, f64)) -> f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for p in &s.points {
            let v = pick(p);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Round a raw tick step to 1, 2 or 5 times a power of ten.
fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let factor = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x_lo, x_hi) = data_range(series, |p| p.0);
    let (y_lo, y_hi) = data_range(series, |p| p.1);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg.push_str(&format!(
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        MARGIN_L + plot_w / 2.0
    ));

    // Grid lines and tick labels.
    let x_step = nice_step(x_hi - x_lo);
    let mut x = (x_lo / x_step).ceil() * x_step;
    while x <= x_hi {
        let px = sx(x);
        svg.push_str(&format!(
            r##"<line x1="{px:.1}" y1="{MARGIN_T}" x2="{px:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            MARGIN_T + plot_h
        ));
        svg.push_str(&format!(
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN_T + plot_h + 16.0,
            fmt_tick(x)
        ));
        x += x_step;
    }
    let y_step = nice_step(y_hi - y_lo);
    let mut y = (y_lo / y_step).ceil() * y_step;
    while y <= y_hi {
        let py = sy(y);
        svg.push_str(&format!(
            r##"<line x1="{MARGIN_L}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#dddddd"/>"##,
            MARGIN_L + plot_w
        ));
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            MARGIN_L - 6.0,
            py + 4.0,
            fmt_tick(y)
        ));
        y += y_step;
    }

    // Axes.
    svg.push_str(&format!(
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    ));
    svg.push_str(&format!(
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{x_label}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0
    ));
    svg.push_str(&format!(
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {})">{y_label}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    ));

    // Traces.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (k, &(px, py)) in s.points.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.2} {:.2} ", sx(px), sy(py)));
        }
        svg.push_str(&format!(
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            d.trim_end()
        ));
        // Legend entry.
        let ly = MARGIN_T + 14.0 + 20.0 * i as f64;
        let lx = MARGIN_L + plot_w + 12.0;
        svg.push_str(&format!(
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2.5"/>"#,
            lx + 22.0
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            s.label
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

/// Cap traces at about this many vertices; beyond it ticks are strided,
/// always keeping the final sample.
const MAX_TRACE_POINTS: usize = 2000;

fn agent_series(log: &TrajectoryLog, value: impl Fn(usize, usize) -> (f64, f64)) -> Vec<Series> {
    let n = log.tick_count();
    let stride = n.div_ceil(MAX_TRACE_POINTS).max(1);
    (0..log.agent_count)
        .map(|a| {
            let mut points: Vec<(f64, f64)> = (0..n).step_by(stride).map(|k| value(k, a)).collect();
            if n > 0 && !(n - 1).is_multiple_of(stride) {
                points.push(value(n - 1, a));
            }
            Series { label: format!("agent {}", a + 1), points }
        })
        .collect()
}

pub fn render_position_axis(log: &TrajectoryLog, axis: char) -> String {
    let series = agent_series(log, |k, a| {
        let s = &log.samples[k][a];
        let v = if axis == 'x' { s.position.x } else { s.position.y };
        (log.times[k], v)
    });
    line_chart(
        &format!("Position in {}-axis", axis.to_ascii_uppercase()),
        "time (s)",
        "position (m)",
        &series,
    )
}

pub fn render_velocity_axis(log: &TrajectoryLog, axis: char) -> String {
    let series = agent_series(log, |k, a| {
        let s = &log.samples[k][a];
        let v = if axis == 'x' { s.velocity.x } else { s.velocity.y };
        (log.times[k], v)
    });
    line_chart(
        &format!("Velocity in {}-axis", axis.to_ascii_uppercase()),
        "time (s)",
        "velocity (m/s)",
        &series,
    )
}

pub fn render_trajectory_xy(log: &TrajectoryLog) -> String {
    let series = agent_series(log, |k, a| {
        let s = &log.samples[k][a];
        (s.position.x, s.position.y)
    });
    line_chart("Trajectory", "x (m)", "y (m)", &series)
}

/// Write the enabled plot files next to `stem` inside `dir` and return their
/// paths. An empty log is an error and produces no files.
pub fn emit_plots(
    log: &TrajectoryLog,
    dir: &Path,
    stem: &str,
    flags: PlotFlags,
) -> Result<Vec<PathBuf>, PlotError> {
    if log.is_empty() {
        return Err(PlotError::EmptyLog);
    }
    let mut written = Vec::new();
    let mut write = |name: String, content: String| -> Result<(), PlotError> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|source| PlotError::Io { path: path.clone(), source })?;
        written.push(path);
        Ok(())
    };
    if flags.position {
        write(format!("{stem}_position_x.svg"), render_position_axis(log, 'x'))?;
        write(format!("{stem}_position_y.svg"), render_position_axis(log, 'y'))?;
        write(format!("{stem}_trajectory_xy.svg"), render_trajectory_xy(log))?;
    }
    if flags.velocity {
        write(format!("{stem}_velocity_x.svg"), render_velocity_axis(log, 'x'))?;
        write(format!("{stem}_velocity_y.svg"), render_velocity_axis(log, 'y'))?;
    }
    Ok(written)
}
