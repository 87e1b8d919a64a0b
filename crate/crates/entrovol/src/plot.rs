//! Deterministic SVG charts. Pure string building: fixed canvas sizes,
//! fixed-precision coordinates, no timestamps or generator metadata, so
//! identical inputs render byte-identical files.

const CHART_W: f64 = 960.0;
const CHART_H: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 45.0;

pub const COLOR_PRIMARY: &str = "#1f6fb2";
pub const COLOR_SECONDARY: &str = "#d1495b";
pub const COLOR_TERTIARY: &str = "#3a7d44";
pub const COLOR_BAND_WIDE: &str = "#9ecae9";
pub const COLOR_BAND_NARROW: &str = "#5a9bd4";

#[derive(Debug, Clone)]
pub struct ChartConfig {
    pub title: String,
    pub y_label: String,
    /// Tick marks on the x axis: data coordinate plus label.
    pub x_ticks: Vec<(f64, String)>,
}

#[derive(Debug, Clone)]
pub struct LineSeries {
    pub label: String,
    pub color: String,
    /// Disconnected polyline segments (gaps between segments are pen-up).
    pub segments: Vec<Vec<(f64, f64)>>,
}

impl LineSeries {
    pub fn contiguous(label: &str, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.to_string(), color: color.to_string(), segments: vec![points] }
    }
}

/// Shaded interval: (x, lower, upper) triples.
#[derive(Debug, Clone)]
pub struct Band {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64, f64)>,
}

// ==================== scaling helpers ====================

struct Frame {
    px: f64,
    py: f64,
    pw: f64,
    ph: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn sx(&self, v: f64) -> f64 {
        self.px + (v - self.x_lo) / (self.x_hi - self.x_lo) * self.pw
    }

    fn sy(&self, v: f64) -> f64 {
        self.py + self.ph - (v - self.y_lo) / (self.y_hi - self.y_lo) * self.ph
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Round tick step to 1/2/5 times a power of ten and emit ticks covering
/// [lo, hi] with roughly `target` marks.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let span = hi - lo;
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut v = first;
    while v <= hi + step * 1e-9 {
        // snap tiny float drift onto the grid
        ticks.push((v / step).round() * step);
        v += step;
    }
    (ticks, step)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor() as i32).clamp(0, 12) as usize
    };
    let s = format!("{v:.decimals$}");
    // avoid the "-0" label
    if s.starts_with("-0") && s.parse::<f64>() == Ok(0.0) {
        s[1..].to_string()
    } else {
        s
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

fn path_for(frame: &Frame, segments: &[Vec<(f64, f64)>]) -> String {
    let mut d = String::new();
    for seg in segments {
        for (i, &(x, y)) in seg.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{} {} ", coord(frame.sx(x)), coord(frame.sy(y))));
        }
    }
    d.trim_end().to_string()
}

// ==================== drawing primitives ====================

fn open_svg(out: &mut String, w: f64, h: f64) {
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    ));
}

fn draw_title(out: &mut String, title: &str, y_label: &str, x: f64, y: f64) {
    out.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" font-size=\"16\" fill=\"#222222\">{}</text>\n",
        esc(title)
    ));
    if !y_label.is_empty() {
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" fill=\"#555555\">{}</text>\n",
            y + 16.0,
            esc(y_label)
        ));
    }
}

fn draw_axes(out: &mut String, frame: &Frame, x_ticks: &[(f64, String)]) {
    let (y_ticks, y_step) = nice_ticks(frame.y_lo, frame.y_hi, 6);
    for &t in &y_ticks {
        let y = coord(frame.sy(t));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n",
            coord(frame.px),
            coord(frame.px + frame.pw)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#444444\" text-anchor=\"end\">{}</text>\n",
            coord(frame.px - 6.0),
            coord(frame.sy(t) + 4.0),
            fmt_tick(t, y_step)
        ));
    }
    for (v, label) in x_ticks {
        if *v < frame.x_lo || *v > frame.x_hi {
            continue;
        }
        let x = coord(frame.sx(*v));
        out.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#999999\" stroke-width=\"1\"/>\n",
            coord(frame.py + frame.ph),
            coord(frame.py + frame.ph + 4.0)
        ));
        out.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"11\" fill=\"#444444\" text-anchor=\"middle\">{}</text>\n",
            coord(frame.py + frame.ph + 18.0),
            esc(label)
        ));
    }
    // axis frame
    out.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        coord(frame.px),
        coord(frame.py),
        coord(frame.pw),
        coord(frame.ph)
    ));
}

fn draw_legend(out: &mut String, frame: &Frame, entries: &[(String, String)]) {
    let mut y = frame.py + 14.0;
    let x = frame.px + frame.pw - 160.0;
    for (label, color) in entries {
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
            coord(x),
            coord(y - 4.0),
            coord(x + 22.0),
            coord(y - 4.0)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" fill=\"#333333\">{}</text>\n",
            coord(x + 28.0),
            coord(y),
            esc(label)
        ));
        y += 16.0;
    }
}

fn data_bounds(series: &[LineSeries], bands: &[Band]) -> (f64, f64, f64, f64) {
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        for seg in &s.segments {
            for &(x, y) in seg {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
    }
    for b in bands {
        for &(x, lo, hi) in &b.points {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(lo);
            y_hi = y_hi.max(hi);
        }
    }
    if !x_lo.is_finite() {
        (0.0, 1.0, 0.0, 1.0)
    } else {
        (x_lo, x_hi, y_lo, y_hi)
    }
}

// ==================== public charts ====================

/// Line chart with optional shaded bands behind the lines.
pub fn line_chart(cfg: &ChartConfig, series: &[LineSeries], bands: &[Band]) -> String {
    let (x_lo, x_hi, y_lo, y_hi) = data_bounds(series, bands);
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 0.5, x_hi + 0.5) };
    let (y_lo, y_hi) = pad_range(y_lo, y_hi);
    let frame = Frame {
        px: MARGIN_L,
        py: MARGIN_T,
        pw: CHART_W - MARGIN_L - MARGIN_R,
        ph: CHART_H - MARGIN_T - MARGIN_B,
        x_lo,
        x_hi,
        y_lo,
        y_hi,
    };

    let mut out = String::new();
    open_svg(&mut out, CHART_W, CHART_H);
    draw_title(&mut out, &cfg.title, &cfg.y_label, MARGIN_L, 22.0);
    draw_axes(&mut out, &frame, &cfg.x_ticks);

    for band in bands {
        if band.points.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (i, &(x, _, hi)) in band.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{} {} ", coord(frame.sx(x)), coord(frame.sy(hi))));
        }
        for &(x, lo, _) in band.points.iter().rev() {
            d.push_str(&format!("L{} {} ", coord(frame.sx(x)), coord(frame.sy(lo))));
        }
        d.push('Z');
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"{}\" fill-opacity=\"0.35\" stroke=\"none\"/>\n",
            band.color
        ));
    }
    for s in series {
        let d = path_for(&frame, &s.segments);
        if d.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\"/>\n",
            s.color
        ));
    }

    let mut legend: Vec<(String, String)> = Vec::new();
    for b in bands {
        legend.push((b.label.clone(), b.color.clone()));
    }
    for s in series {
        legend.push((s.label.clone(), s.color.clone()));
    }
    if legend.len() > 1 {
        draw_legend(&mut out, &frame, &legend);
    }
    out.push_str("</svg>\n");
    out
}

/// Three stacked panes: residual trace, residual ACF with confidence
/// guides, and a residual histogram.
pub fn residual_panel(
    title: &str,
    x_ticks: &[(f64, String)],
    residuals: &[(f64, f64)],
    acf: &[f64],
    conf_bound: f64,
    hist: &[(f64, f64, usize)],
) -> String {
    let total_h = 900.0;
    let pane_h = 250.0;
    let gap = 45.0;
    let pw = CHART_W - MARGIN_L - MARGIN_R;

    let mut out = String::new();
    open_svg(&mut out, CHART_W, total_h);
    draw_title(&mut out, title, "", MARGIN_L, 22.0);

    // pane 1: residual trace
    {
        let (y_lo, y_hi) = residuals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                (lo.min(v), hi.max(v))
            });
        let (y_lo, y_hi) = pad_range(y_lo, y_hi);
        let (x_lo, x_hi) = match (residuals.first(), residuals.last()) {
            (Some(&(a, _)), Some(&(b, _))) if b > a => (a, b),
            (Some(&(a, _)), _) => (a - 0.5, a + 0.5),
            _ => (0.0, 1.0),
        };
        let frame =
            Frame { px: MARGIN_L, py: MARGIN_T, pw, ph: pane_h, x_lo, x_hi, y_lo, y_hi };
        label_pane(&mut out, &frame, "innovations");
        draw_axes(&mut out, &frame, x_ticks);
        let zero_y = coord(frame.sy(0.0));
        if y_lo < 0.0 && y_hi > 0.0 {
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{zero_y}\" x2=\"{}\" y2=\"{zero_y}\" stroke=\"#aaaaaa\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
                coord(frame.px),
                coord(frame.px + frame.pw)
            ));
        }
        let d = path_for(&frame, &[residuals.to_vec()]);
        out.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{COLOR_PRIMARY}\" stroke-width=\"0.8\"/>\n"
        ));
    }

    // pane 2: ACF bars
    {
        let py = MARGIN_T + pane_h + gap;
        let max_abs = acf.iter().fold(conf_bound, |m, v| m.max(v.abs()));
        let y_hi = (max_abs * 1.15).min(1.0).max(conf_bound * 1.3);
        let frame = Frame {
            px: MARGIN_L,
            py,
            pw,
            ph: pane_h,
            x_lo: 0.0,
            x_hi: acf.len() as f64 + 1.0,
            y_lo: -y_hi,
            y_hi,
        };
        label_pane(&mut out, &frame, "residual acf");
        let lag_ticks: Vec<(f64, String)> = (0..=acf.len())
            .step_by((acf.len() / 6).max(1))
            .skip(1)
            .map(|l| (l as f64, l.to_string()))
            .collect();
        draw_axes(&mut out, &frame, &lag_ticks);
        let zero_y = coord(frame.sy(0.0));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{zero_y}\" x2=\"{}\" y2=\"{zero_y}\" stroke=\"#888888\" stroke-width=\"1\"/>\n",
            coord(frame.px),
            coord(frame.px + frame.pw)
        ));
        for guide in [conf_bound, -conf_bound] {
            let gy = coord(frame.sy(guide));
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{gy}\" x2=\"{}\" y2=\"{gy}\" stroke=\"{COLOR_SECONDARY}\" stroke-width=\"1\" stroke-dasharray=\"5 4\"/>\n",
                coord(frame.px),
                coord(frame.px + frame.pw)
            ));
        }
        let half_w = (frame.pw / (acf.len() as f64 + 1.0) * 0.3).max(1.0);
        for (lag, &v) in acf.iter().enumerate() {
            let x = frame.sx((lag + 1) as f64);
            let (top, bottom) =
                if v >= 0.0 { (frame.sy(v), frame.sy(0.0)) } else { (frame.sy(0.0), frame.sy(v)) };
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{COLOR_PRIMARY}\"/>\n",
                coord(x - half_w),
                coord(top),
                coord(half_w * 2.0),
                coord((bottom - top).max(0.5))
            ));
        }
    }

    // pane 3: histogram
    {
        let py = MARGIN_T + 2.0 * (pane_h + gap);
        let max_count = hist.iter().map(|&(_, _, c)| c).max().unwrap_or(1) as f64;
        let (x_lo, x_hi) = match (hist.first(), hist.last()) {
            (Some(&(lo, _, _)), Some(&(_, hi, _))) if hi > lo => (lo, hi),
            _ => (0.0, 1.0),
        };
        let frame = Frame {
            px: MARGIN_L,
            py,
            pw,
            ph: pane_h,
            x_lo,
            x_hi,
            y_lo: 0.0,
            y_hi: max_count * 1.08,
        };
        label_pane(&mut out, &frame, "innovation histogram");
        let (ticks, step) = nice_ticks(x_lo, x_hi, 7);
        let hist_ticks: Vec<(f64, String)> =
            ticks.iter().map(|&t| (t, fmt_tick(t, step))).collect();
        draw_axes(&mut out, &frame, &hist_ticks);
        for &(lo, hi, count) in hist {
            let x = frame.sx(lo);
            let w = (frame.sx(hi) - frame.sx(lo)).max(0.5);
            let top = frame.sy(count as f64);
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{COLOR_TERTIARY}\" fill-opacity=\"0.8\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n",
                coord(x),
                coord(top),
                coord(w),
                coord(frame.sy(0.0) - top)
            ));
        }
    }

    out.push_str("</svg>\n");
    out
}

fn label_pane(out: &mut String, frame: &Frame, label: &str) {
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"#555555\">{}</text>\n",
        coord(frame.px),
        coord(frame.py - 8.0),
        esc(label)
    ));
}
