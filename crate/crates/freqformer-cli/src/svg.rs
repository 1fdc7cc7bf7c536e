//! Minimal self-contained SVG charts: log-log line plots and a roofline
//! view. No external services or assets; output is plain markup.

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 90.0;
const MARGIN_R: f64 = 30.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 70.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series {
    pub name: String,
    /// (x, y) points; both must be positive for log axes.
    pub points: Vec<(f64, f64)>,
}

struct LogAxis {
    min_pow: i32,
    max_pow: i32,
}

impl LogAxis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            if v > 0.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            lo = 1.0;
            hi = 10.0;
        }
        let min_pow = lo.log10().floor() as i32;
        let max_pow = hi.log10().ceil() as i32;
        Self {
            min_pow,
            max_pow: max_pow.max(min_pow + 1),
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let span = (self.max_pow - self.min_pow) as f64;
        (v.log10() - self.min_pow as f64) / span
    }

    fn decades(&self) -> Vec<i32> {
        let span = self.max_pow - self.min_pow;
        let step = (span / 8).max(1);
        (self.min_pow..=self.max_pow).step_by(step as usize).collect()
    }
}

fn plot_x(frac: f64) -> f64 {
    MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)
}

fn plot_y(frac: f64) -> f64 {
    HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axes(x_label: &str, y_label: &str, xs: &LogAxis, ys: &LogAxis) -> String {
    let mut out = String::new();
    let x0 = plot_x(0.0);
    let x1 = plot_x(1.0);
    let y0 = plot_y(0.0);
    let y1 = plot_y(1.0);
    out.push_str(&format!(
        "<line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x1:.1}\" y2=\"{y0:.1}\" stroke=\"black\"/>\n\
         <line x1=\"{x0:.1}\" y1=\"{y0:.1}\" x2=\"{x0:.1}\" y2=\"{y1:.1}\" stroke=\"black\"/>\n"
    ));
    for p in xs.decades() {
        let fx = plot_x(xs.frac(10f64.powi(p)));
        out.push_str(&format!(
            "<line x1=\"{fx:.1}\" y1=\"{y0:.1}\" x2=\"{fx:.1}\" y2=\"{:.1}\" stroke=\"#cccccc\" stroke-dasharray=\"3,3\"/>\n\
             <text x=\"{fx:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{p}</text>\n",
            y1, y0 + 18.0
        ));
    }
    for p in ys.decades() {
        let fy = plot_y(ys.frac(10f64.powi(p)));
        out.push_str(&format!(
            "<line x1=\"{x0:.1}\" y1=\"{fy:.1}\" x2=\"{x1:.1}\" y2=\"{fy:.1}\" stroke=\"#cccccc\" stroke-dasharray=\"3,3\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{p}</text>\n",
            x0 - 6.0, fy + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 16.0
    ));
    out.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{y_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    out
}

/// Log-log line chart of one or more series.
pub fn log_log_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = LogAxis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = LogAxis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut out = header(title);
    out.push_str(&axes(x_label, y_label, &xs, &ys));
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|&(x, y)| format!("{:.1},{:.1}", plot_x(xs.frac(x)), plot_y(ys.frac(y))))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            pts.join(" ")
        ));
        for &(x, y) in s.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
            out.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                plot_x(xs.frac(x)),
                plot_y(ys.frac(y))
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            plot_x(1.0) - 210.0,
            MARGIN_T + 16.0 * idx as f64 + 8.0,
            s.name
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Roofline view: bandwidth slope and compute ceiling of one profile, with
/// labeled workload points placed at their attainable throughput.
pub fn roofline_chart(
    title: &str,
    peak_flops: f64,
    peak_bandwidth: f64,
    points: &[(String, f64)],
) -> String {
    let ridge = peak_flops / peak_bandwidth;
    let x_vals: Vec<f64> = points
        .iter()
        .map(|p| p.1)
        .chain([ridge / 16.0, ridge * 16.0])
        .collect();
    let xs = LogAxis::fit(x_vals.iter().cloned());
    let y_vals: Vec<f64> = x_vals
        .iter()
        .map(|&x| (peak_bandwidth * x).min(peak_flops))
        .chain([peak_flops / 256.0, peak_flops * 2.0])
        .collect();
    let ys = LogAxis::fit(y_vals.into_iter());

    let mut out = header(title);
    out.push_str(&axes(
        "arithmetic intensity (FLOPs/byte)",
        "attainable FLOP/s",
        &xs,
        &ys,
    ));
    // roofline: bandwidth-limited slope up to the ridge, flat after
    let mut pts = Vec::new();
    for i in 0..=60 {
        let x = 10f64.powf(
            xs.min_pow as f64 + (xs.max_pow - xs.min_pow) as f64 * i as f64 / 60.0,
        );
        let y = (peak_bandwidth * x).min(peak_flops);
        pts.push(format!(
            "{:.1},{:.1}",
            plot_x(xs.frac(x)),
            plot_y(ys.frac(y))
        ));
    }
    out.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    ));
    for (idx, (name, intensity)) in points.iter().enumerate() {
        let attainable = (peak_bandwidth * intensity).min(peak_flops);
        let cx = plot_x(xs.frac(*intensity));
        let cy = plot_y(ys.frac(attainable));
        let color = PALETTE[(idx + 1) % PALETTE.len()];
        out.push_str(&format!(
            "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"4\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            cx + 6.0,
            cy - 6.0
        ));
    }
    out.push_str("</svg>\n");
    out
}
