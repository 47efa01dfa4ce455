//! Loss-curve figures written directly as SVG.

use std::fmt::Write as _;

use crate::analysis::{confidence_band, group_by_initialiser, BandPoint, LossKind};
use crate::error::{Error, Result};
use crate::experiment::RunLog;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Fixed colour per initialiser so figures are comparable between runs.
pub fn colour_for(initialiser: &str) -> &'static str {
    match initialiser {
        "straddled" => "#d62728",
        "glorotuniform" => "#1f77b4",
        "glorotnormal" => "#17becf",
        "identity" => "#2ca02c",
        "henormal" => "#9467bd",
        "heuniform" => "#e377c2",
        "orthogonal" => "#ff7f0e",
        "random" => "#7f7f7f",
        "recurrentidentity" => "#8c564b",
        _ => "#000000",
    }
}

/// 1, 2 or 5 times a power of ten, giving about `target` ticks over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Epoch-mean loss of each initialiser with a shaded 95% band.
pub fn loss_curves_svg(logs: &[RunLog], which: LossKind, title: &str) -> Result<String> {
    let groups = group_by_initialiser(logs);
    if groups.is_empty() {
        return Err(Error::InvalidArgument("no runs to plot".into()));
    }
    let mut curves: Vec<(String, Vec<BandPoint>)> = Vec::with_capacity(groups.len());
    for (name, runs) in &groups {
        let series: Vec<&[f64]> = runs.iter().map(|l| which.select(l)).collect();
        curves.push((name.clone(), confidence_band(&series, 0.95)?));
    }
    let epochs = curves.iter().map(|(_, c)| c.len()).max().unwrap_or(0);
    if epochs == 0 {
        return Err(Error::InvalidArgument("runs have no epochs".into()));
    }

    let finite = curves
        .iter()
        .flat_map(|(_, c)| c.iter().flat_map(|p| [p.lo, p.hi]))
        .filter(|v| v.is_finite());
    let (mut y_min, mut y_max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    y_min = y_min.max(0.0);
    if y_max - y_min < 1e-9 {
        y_max = y_min + 1e-3;
    }
    let y_step = nice_step(y_max - y_min, 6.0);
    y_min = (y_min / y_step).floor() * y_step;
    y_max = (y_max / y_step).ceil() * y_step;

    let x_last = (epochs - 1).max(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |epoch: f64| LEFT + epoch / x_last * plot_w;
    let py = |loss: f64| {
        let clamped = loss.clamp(y_min, y_max);
        TOP + (y_max - clamped) / (y_max - y_min) * plot_h
    };

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // Grid and ticks.
    let mut tick = y_min;
    while tick <= y_max + y_step * 1e-6 {
        let y = py(tick);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT:.1}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            format_tick(tick, y_step)
        );
        tick += y_step;
    }
    let x_step = nice_step(x_last, 8.0).max(1.0);
    let mut tick = 0.0;
    while tick <= x_last + 1e-9 {
        let x = px(tick);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.1}" x2="{x:.2}" y2="{:.1}" stroke="#000000"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            tick as usize
        );
        tick += x_step;
    }
    let _ = writeln!(
        w,
        r##"<rect x="{LEFT:.1}" y="{TOP:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#000000"/>"##
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Epoch</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">RMSE ({which} loss)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (name, band) in &curves {
        let colour = colour_for(name);
        let finite: Vec<(usize, &BandPoint)> =
            band.iter().enumerate().filter(|(_, p)| p.mean.is_finite()).collect();
        if finite.is_empty() {
            continue;
        }
        let mut area = String::new();
        for (e, p) in &finite {
            let _ = write!(area, "{:.2},{:.2} ", px(*e as f64), py(p.hi));
        }
        for (e, p) in finite.iter().rev() {
            let _ = write!(area, "{:.2},{:.2} ", px(*e as f64), py(p.lo));
        }
        let _ = writeln!(
            w,
            r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            area.trim_end()
        );
        let line: Vec<String> = finite
            .iter()
            .map(|(e, p)| format!("{:.2},{:.2}", px(*e as f64), py(p.mean)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
    }

    let legend_x = LEFT + plot_w + 15.0;
    for (i, (name, _)) in curves.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            w,
            r#"<line x1="{legend_x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="3"/>"#,
            legend_x + 24.0,
            colour_for(name)
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            legend_x + 30.0,
            y + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

fn format_tick(value: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{value:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn logs() -> Vec<RunLog> {
        let mk = |name: &str, run, scale: f64| RunLog {
            initialiser: name.into(),
            run,
            seed: 0,
            train_loss: (0..50).map(|e| scale / (1.0 + f64::from(e))).collect(),
            test_loss: (0..50).map(|e| scale / (1.0 + f64::from(e))).collect(),
            wall_clock: Duration::ZERO,
        };
        vec![mk("straddled", 0, 0.3), mk("straddled", 1, 0.31), mk("henormal", 0, 0.4), mk("henormal", 1, 0.45)]
    }

    #[test]
    fn svg_structure() {
        let svg = loss_curves_svg(&logs(), LossKind::Train, "demo <1>").unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("<polygon").count(), 2);
        assert!(svg.contains(colour_for("straddled")));
        assert!(svg.contains(">Epoch<"));
        assert!(svg.contains("demo &lt;1&gt;"));
    }

    #[test]
    fn svg_is_deterministic() {
        let a = loss_curves_svg(&logs(), LossKind::Train, "t").unwrap();
        let b = loss_curves_svg(&logs(), LossKind::Train, "t").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(1.0, 5.0), 0.2);
        assert_eq!(nice_step(1000.0, 8.0), 100.0);
        assert_eq!(format_tick(0.25, 0.05), "0.25");
    }
}
