//! Minimal SVG output for curve snapshots: polyline paths in a fixed
//! viewBox with the axis line `y = 0` drawn across the frame.

use std::fmt::Write;

use crate::curve::DiscreteCurve;

/// Drawing region in curve coordinates (`y` up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl ViewBox {
    /// Bounding box of all curves plus a relative margin; degenerate extents
    /// are widened so the frame never has zero height.
    pub fn fit<'a>(curves: impl IntoIterator<Item = &'a DiscreteCurve>, margin: f64) -> Self {
        let mut b = ViewBox {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for c in curves {
            for p in c.points() {
                b.x_min = b.x_min.min(p.x);
                b.x_max = b.x_max.max(p.x);
                b.y_min = b.y_min.min(p.y);
                b.y_max = b.y_max.max(p.y);
            }
        }
        if !b.x_min.is_finite() {
            return ViewBox {
                x_min: -1.0,
                y_min: -1.0,
                x_max: 1.0,
                y_max: 1.0,
            };
        }
        b.y_min = b.y_min.min(0.0);
        b.y_max = b.y_max.max(0.0);
        let span = (b.x_max - b.x_min).max(b.y_max - b.y_min).max(1e-9);
        let pad = margin * span;
        ViewBox {
            x_min: b.x_min - pad,
            y_min: b.y_min - pad,
            x_max: b.x_max + pad,
            y_max: b.y_max + pad,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
}

fn path_data(curve: &DiscreteCurve) -> String {
    let mut d = String::new();
    for (i, p) in curve.points().iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        // y is flipped so that the picture has y pointing up
        let _ = write!(d, "{cmd}{:.6} {:.6} ", p.x, -p.y);
    }
    d.trim_end().to_string()
}

/// One SVG document with the given curves drawn on top of the axis line.
/// `opacities` has one entry per curve.
pub fn render(curves: &[&DiscreteCurve], opacities: &[f64], view: &ViewBox, title: &str) -> String {
    let w = view.width();
    let h = view.height();
    let stroke = 0.004 * w.max(h);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="800" height="{}">"#,
        view.x_min,
        -view.y_max,
        w,
        h,
        (800.0 * h / w).round().max(1.0)
    );
    let _ = writeln!(s, "  <title>{}</title>", escape(title));
    let _ = writeln!(
        s,
        r##"  <line class="axis" x1="{:.6}" y1="0" x2="{:.6}" y2="0" stroke="#888888" stroke-width="{stroke:.6}" stroke-dasharray="{:.6} {:.6}"/>"##,
        view.x_min,
        view.x_max,
        4.0 * stroke,
        2.0 * stroke
    );
    for (c, &a) in curves.iter().zip(opacities) {
        let _ = writeln!(
            s,
            r##"  <path d="{}" fill="none" stroke="#1f4e9c" stroke-opacity="{a:.3}" stroke-width="{stroke:.6}" stroke-linejoin="round"/>"##,
            path_data(c)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// A single curve at full opacity.
pub fn render_frame(curve: &DiscreteCurve, view: &ViewBox, title: &str) -> String {
    render(&[curve], &[1.0], view, title)
}

/// All curves in one frame, opacity rising linearly from `0.15` for the
/// first to `1` for the last.
pub fn render_overlay(curves: &[&DiscreteCurve], view: &ViewBox, title: &str) -> String {
    let n = curves.len();
    let opacities: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                0.15 + 0.85 * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    render(curves, &opacities, view, title)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::semicircle;

    #[test]
    fn frame_has_axis_and_path() {
        let c = semicircle(16).unwrap();
        let v = ViewBox::fit([&c], 0.05);
        let s = render_frame(&c, &v, "semi <1>");
        assert!(s.starts_with("<svg"));
        assert!(s.contains(r#"class="axis""#));
        assert_eq!(s.matches("<path").count(), 1);
        assert!(s.contains("semi &lt;1&gt;"));
    }

    #[test]
    fn view_contains_axis_and_curve() {
        let c = semicircle(16).unwrap();
        let v = ViewBox::fit([&c], 0.0);
        assert!(v.y_max >= 1.0 - 1e-12 && v.y_min <= 0.0);
        assert!(v.x_min <= 0.0 && v.x_max >= 2.0);
    }

    #[test]
    fn overlay_ramps_opacity() {
        let c = semicircle(16).unwrap();
        let d = c.reflect_axis();
        let v = ViewBox::fit([&c, &d], 0.05);
        let s = render_overlay(&[&c, &d], &v, "pair");
        assert!(s.contains(r#"stroke-opacity="0.150""#));
        assert!(s.contains(r#"stroke-opacity="1.000""#));
    }
}
