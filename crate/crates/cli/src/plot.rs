//! Self-contained SVG plots: line charts and a shaded quad-mesh surface.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Camera of [`surface_svg`]: azimuth and elevation in degrees.
pub const CAMERA_AZIMUTH: f64 = -55.0;
pub const CAMERA_ELEVATION: f64 = 28.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Line chart; with `log_y` non-positive values are dropped.
pub fn line_svg(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>], log_y: bool) -> String {
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, ty(y)))
                .collect()
        })
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 <= 0.0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    }
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * ph;

    let mut s = header(title);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=5 {
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#ddd"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"##,
            sx(x),
            MARGIN,
            HEIGHT - MARGIN,
            HEIGHT - MARGIN + 16.0,
            tick_label(x)
        );
    }
    let y_ticks: Vec<f64> = if log_y {
        let step = ((y1 - y0) / 8.0).ceil().max(1.0);
        let mut v = Vec::new();
        let mut y = y0;
        while y <= y1 + 1e-9 {
            v.push(y);
            y += step;
        }
        v
    } else {
        (0..=5).map(|i| y0 + (y1 - y0) * i as f64 / 5.0).collect()
    };
    for y in y_ticks {
        let label = if log_y { format!("1e{}", y.round() as i64) } else { tick_label(y) };
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="#ddd"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"##,
            MARGIN,
            sy(y),
            WIDTH - MARGIN,
            MARGIN - 6.0,
            sy(y) + 4.0,
            label
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let mut d = String::new();
        for &(x, y) in p {
            let _ = write!(d, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
            d.trim_end()
        );
        let ly = MARGIN + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{3:.2}" y="{4:.2}">{5}</text>"#,
            WIDTH - MARGIN - 170.0,
            ly,
            WIDTH - MARGIN - 145.0,
            WIDTH - MARGIN - 140.0,
            ly + 4.0,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn ramp(t: f64) -> (f64, f64, f64) {
    // blue -> white -> red
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let u = t / 0.5;
        (0.23 + 0.77 * u, 0.30 + 0.70 * u, 0.75 + 0.25 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (1.0 - 0.3 * u, 1.0 - 0.8 * u, 1.0 - 0.85 * u)
    }
}

/// Shaded quad mesh of `z[i][j]` over `xs[i] × ys[j]`, orthographic view at
/// the fixed camera, painted back to front.
pub fn surface_svg(title: &str, labels: [&str; 3], xs: &[f64], ys: &[f64], z: &[Vec<f64>]) -> String {
    assert!(xs.len() >= 2 && ys.len() >= 2 && z.len() == xs.len() && z.iter().all(|r| r.len() == ys.len()));
    let span = |v: &[f64]| (v[0], v[v.len() - 1]);
    let (xa, xb) = span(xs);
    let (ya, yb) = span(ys);
    let (za, zb) = z
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let zr = if zb > za { zb - za } else { 1.0 };
    let unit = |v: f64, a: f64, b: f64| 2.0 * (v - a) / (b - a) - 1.0;
    let (az, el) = (CAMERA_AZIMUTH.to_radians(), CAMERA_ELEVATION.to_radians());
    // returns (screen x, screen y up, depth away from the viewer)
    let project = |x: f64, y: f64, zz: f64| {
        let xr = x * az.cos() - y * az.sin();
        let yr = x * az.sin() + y * az.cos();
        (xr, yr * el.sin() + zz * el.cos(), yr * el.cos() - zz * el.sin())
    };
    let point = |i: usize, j: usize| {
        let zz = 0.7 * unit(z[i][j], za, za + zr);
        (unit(xs[i], xa, xb), unit(ys[j], ya, yb), zz)
    };
    let scale = 0.36 * WIDTH.min(HEIGHT * 1.4);
    let to_screen = |(px, py, _): (f64, f64, f64)| (WIDTH / 2.0 + scale * px / 1.4, HEIGHT / 2.0 + 20.0 - scale * py / 1.4);

    let light = {
        let l: [f64; 3] = [-0.4, -0.5, 0.77];
        let n = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
        [l[0] / n, l[1] / n, l[2] / n]
    };
    let mut quads = Vec::new();
    for i in 0..xs.len() - 1 {
        for j in 0..ys.len() - 1 {
            let c = [point(i, j), point(i + 1, j), point(i + 1, j + 1), point(i, j + 1)];
            let u = [c[2].0 - c[0].0, c[2].1 - c[0].1, c[2].2 - c[0].2];
            let v = [c[3].0 - c[1].0, c[3].1 - c[1].1, c[3].2 - c[1].2];
            let nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            let nn = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt().max(1e-300);
            let lambert = ((nrm[0] * light[0] + nrm[1] * light[1] + nrm[2] * light[2]) / nn).abs();
            let zmean = (z[i][j] + z[i + 1][j] + z[i + 1][j + 1] + z[i][j + 1]) / 4.0;
            let depth = c.iter().map(|&(x, y, zz)| project(x, y, zz).2).sum::<f64>() / 4.0;
            let screen: Vec<(f64, f64)> = c.iter().map(|&(x, y, zz)| to_screen(project(x, y, zz))).collect();
            quads.push((depth, (zmean - za) / zr, lambert, screen));
        }
    }
    quads.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut s = header(title);
    // floor frame
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    let mut d = String::new();
    for &(x, y) in &corners {
        let (sx, sy) = to_screen(project(x, y, -0.7));
        let _ = write!(d, "{sx:.2},{sy:.2} ");
    }
    let _ = writeln!(s, r##"<polygon points="{}" fill="#f4f4f4" stroke="#999"/>"##, d.trim_end());
    for (_, t, lambert, pts) in &quads {
        let (r, g, b) = ramp(*t);
        let shade = 0.55 + 0.45 * lambert;
        let hex = |c: f64| (255.0 * (c * shade).clamp(0.0, 1.0)).round() as u8;
        let mut d = String::new();
        for &(x, y) in pts {
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#{:02x}{:02x}{:02x}" stroke="#333" stroke-width="0.3"/>"##,
            d.trim_end(),
            hex(r),
            hex(g),
            hex(b)
        );
    }
    let axis_label = |s: &mut String, at: (f64, f64, f64), text: &str| {
        let (x, y) = to_screen(project(at.0, at.1, at.2));
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">{}</text>"#, escape(text));
    };
    axis_label(&mut s, (0.0, -1.35, -0.7), &format!("{} [{}, {}]", labels[0], tick_label(xa), tick_label(xb)));
    axis_label(&mut s, (1.35, 0.0, -0.7), &format!("{} [{}, {}]", labels[1], tick_label(ya), tick_label(yb)));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="start">{}: {} .. {}</text>"#,
        MARGIN / 2.0,
        HEIGHT - 16.0,
        escape(labels[2]),
        tick_label(za),
        tick_label(zb)
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_is_well_formed() {
        let s = line_svg(
            "t",
            "x",
            "y",
            &[Series { name: "a<b", points: vec![(0.0, 1.0), (1.0, 1e-3)], dashed: false }],
            true,
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<polyline").count(), 1);
    }

    #[test]
    fn surface_has_one_polygon_per_quad() {
        let xs: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let z: Vec<Vec<f64>> = xs.iter().map(|x| ys.iter().map(|y| x * y).collect()).collect();
        let s = surface_svg("s", ["a", "b", "c"], &xs, &ys, &z);
        // 4 x 3 quads plus the floor
        assert_eq!(s.matches("<polygon").count(), 13);
        assert_eq!(s, surface_svg("s", ["a", "b", "c"], &xs, &ys, &z));
    }

    #[test]
    fn flat_data_does_not_divide_by_zero() {
        let s = line_svg("t", "x", "y", &[Series { name: "c", points: vec![(0.0, 0.0), (1.0, 0.0)], dashed: true }], false);
        assert!(!s.contains("NaN"));
        let z = vec![vec![0.0; 3]; 3];
        let s = surface_svg("s", ["a", "b", "c"], &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], &z);
        assert!(!s.contains("NaN"));
    }
}
