//! Deterministic SVG polylines for sampled conjugacies.

use std::fmt::Write as _;
use std::path::Path;

use crate::conjugacy::PhiSample;
use crate::error::{Error, Result};

pub const VIEW: f64 = 1000.0;

/// SVG text for a monotone sample: `x` to the right, `φ` upwards.
pub fn render_svg(sample: &PhiSample) -> Result<String> {
    if !sample.is_monotone() {
        return Err(Error::Hypothesis("sample is not monotone".into()));
    }
    let mut pts = String::new();
    for (k, p) in sample.points.iter().enumerate() {
        if k > 0 {
            pts.push(' ');
        }
        // `+ 0.0` turns a negative zero into zero so the text is stable.
        let x = p.x * VIEW + 0.0;
        let y = (1.0 - p.phi) * VIEW + 0.0;
        write!(pts, "{x:.4},{y:.4}").unwrap();
    }
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 1000 1000\" width=\"1000\" height=\"1000\">\n");
    s.push_str("<rect x=\"0\" y=\"0\" width=\"1000\" height=\"1000\" fill=\"white\" stroke=\"black\" stroke-width=\"1\"/>\n");
    writeln!(s, "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"{pts}\"/>").unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(sample: &PhiSample, path: &Path) -> Result<()> {
    let text = render_svg(sample)?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
