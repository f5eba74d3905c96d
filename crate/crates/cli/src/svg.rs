//! SVG rendering of a spectral network.

use std::fmt::Write;

use specnet::network::{SheetLabel, SpectralNetwork};
use specnet::qdiff::RationalQd;

/// Render the network: walls coloured by label (`+-` red, `-+` blue), zeros
/// as crosses, finite poles as circles and branch cuts dashed.  The view box
/// is 1.2 times the escape radius, with the imaginary axis pointing up.
pub fn render(qd: &RationalQd<f64>, net: &SpectralNetwork<f64>) -> String {
    let r = 1.2 * net.params.escape_radius;
    let stroke = r * 2e-3;
    let mark = r * 8e-3;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="800" height="800">"#,
        -r,
        -r,
        2.0 * r,
        2.0 * r
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)" fill="none" stroke-width="{stroke}">"#);
    for cut in &net.branch_cuts {
        let b = net.zeros[cut.zero];
        let end = b + num_complex::Complex64::from_polar(r * 2.0, cut.angle);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="{} {}"/>"#,
            b.re,
            b.im,
            end.re,
            end.im,
            4.0 * stroke,
            3.0 * stroke
        );
    }
    for w in &net.walls {
        let colour = match w.label {
            SheetLabel::PlusMinus => "red",
            SheetLabel::MinusPlus => "blue",
        };
        let pts: Vec<String> = w.dense.iter().map(|(z, _)| format!("{},{}", z.re, z.im)).collect();
        let _ = writeln!(s, r#"<polyline stroke="{colour}" points="{}"/>"#, pts.join(" "));
    }
    for z in &net.zeros {
        let _ = writeln!(
            s,
            r#"<path stroke="black" d="M{} {} L{} {} M{} {} L{} {}"/>"#,
            z.re - mark,
            z.im - mark,
            z.re + mark,
            z.im + mark,
            z.re - mark,
            z.im + mark,
            z.re + mark,
            z.im - mark
        );
    }
    for (p, _) in &qd.inventory().finite_poles {
        let _ = writeln!(s, r#"<circle stroke="black" cx="{}" cy="{}" r="{mark}"/>"#, p.re, p.im);
    }
    s.push_str("</g>\n</svg>\n");
    s
}
