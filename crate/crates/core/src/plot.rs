//! Headless SVG renderings of episodes and validation curves.
//!
//! Scene drawings keep world coordinates: every shape sits inside a group
//! whose transform flips the y axis and scales metres to pixels, so the
//! numbers in the file can be read back as positions. Output depends only on
//! the input, so identical records produce identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::episode::EpisodeRecord;
use crate::error::{Error, Result};
use crate::trainer::{parse_log, LogRecord};
use crate::vec2::Vec2;
use crate::world::AgentKind;

const PX_PER_M: f64 = 50.0;
const MARGIN_M: f64 = 1.0;
/// Path ticks are placed every this many seconds.
const TICK_S: f64 = 1.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Bounds {
    min: Vec2,
    max: Vec2,
}

impl Bounds {
    fn around(points: impl IntoIterator<Item = (Vec2, f64)>) -> Self {
        let mut b = Bounds {
            min: Vec2::new(f64::INFINITY, f64::INFINITY),
            max: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for (p, r) in points {
            b.min = Vec2::new(b.min.x.min(p.x - r), b.min.y.min(p.y - r));
            b.max = Vec2::new(b.max.x.max(p.x + r), b.max.y.max(p.y + r));
        }
        b.min -= Vec2::new(MARGIN_M, MARGIN_M);
        b.max += Vec2::new(MARGIN_M, MARGIN_M);
        b
    }

    fn to_px(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.min.x) * PX_PER_M, (self.max.y - p.y) * PX_PER_M)
    }
}

/// Scene rendering of an episode: obstacles as squares, humans and the robot
/// as circles at their final positions, a goal marker, and the robot path
/// with a tick every second.
pub fn trajectory_svg(record: &EpisodeRecord) -> Result<String> {
    let snaps = &record.trajectory;
    let last = snaps
        .last()
        .ok_or_else(|| Error::Config("episode record has no trajectory".into()))?;
    let h = &record.header;

    let bodies = snaps
        .iter()
        .flat_map(|s| std::iter::once(&s.robot).chain(&s.entities))
        .map(|b| (b.position, b.radius));
    let squares = h.obstacles.iter().map(|o| (o.center, o.side / 2.0));
    let bounds = Bounds::around(bodies.chain(squares).chain([(h.robot_goal, 0.3)]));
    let width = (bounds.max.x - bounds.min.x) * PX_PER_M;
    let height = (bounds.max.y - bounds.min.y) * PX_PER_M;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let _ = writeln!(
        s,
        r#"<g transform="translate({:.3} {:.3}) scale({PX_PER_M} -{PX_PER_M})" stroke-width="0.03">"#,
        -bounds.min.x * PX_PER_M,
        bounds.max.y * PX_PER_M
    );

    for o in &h.obstacles {
        let half = o.side / 2.0;
        let _ = writeln!(
            s,
            r##"<rect class="obstacle" x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="#888888" stroke="#444444"/>"##,
            o.center.x - half,
            o.center.y - half,
            o.side,
            o.side
        );
    }

    // Faint human paths, then the humans where the episode ended.
    let humans: Vec<_> = last.entities.iter().filter(|b| b.kind == AgentKind::Human).collect();
    for (k, human) in humans.iter().enumerate() {
        let colour = PALETTE[(k + 1) % PALETTE.len()];
        let points = polyline_points(snaps.iter().filter_map(|sn| {
            sn.entities.iter().find(|b| b.id == human.id).map(|b| b.position)
        }));
        let _ = writeln!(
            s,
            r#"<polyline class="human-path" points="{points}" fill="none" stroke="{colour}" stroke-opacity="0.4"/>"#
        );
        let _ = writeln!(
            s,
            r#"<circle class="human" cx="{:.4}" cy="{:.4}" r="{:.4}" fill="{colour}" fill-opacity="0.5" stroke="{colour}"/>"#,
            human.position.x, human.position.y, human.radius
        );
    }

    let g = h.robot_goal;
    let arm = 0.2;
    let _ = writeln!(
        s,
        r##"<path class="goal" d="M {:.4} {:.4} L {:.4} {:.4} M {:.4} {:.4} L {:.4} {:.4}" stroke="#d62728" stroke-width="0.06"/>"##,
        g.x - arm,
        g.y - arm,
        g.x + arm,
        g.y + arm,
        g.x - arm,
        g.y + arm,
        g.x + arm,
        g.y - arm
    );

    let path = polyline_points(snaps.iter().map(|sn| sn.robot.position));
    let _ = writeln!(
        s,
        r##"<polyline class="robot-path" points="{path}" fill="none" stroke="#000000"/>"##
    );
    let mut next_tick = TICK_S;
    let mut ticks = Vec::new();
    for sn in snaps {
        if sn.t + 1e-9 >= next_tick {
            ticks.push(sn);
            next_tick += TICK_S;
        }
    }
    for sn in &ticks {
        let p = sn.robot.position;
        let _ = writeln!(s, r##"<circle class="tick" cx="{:.4}" cy="{:.4}" r="0.05" fill="#000000"/>"##, p.x, p.y);
    }
    let robot = &last.robot;
    let _ = writeln!(
        s,
        r##"<circle class="robot" cx="{:.4}" cy="{:.4}" r="{:.4}" fill="#ffd700" stroke="#000000"/>"##,
        robot.position.x, robot.position.y, robot.radius
    );
    s.push_str("</g>\n");

    // Tick labels live outside the flipped group so the text reads upright.
    for sn in &ticks {
        let (x, y) = bounds.to_px(sn.robot.position);
        let _ = writeln!(
            s,
            r#"<text class="tick-label" x="{:.1}" y="{:.1}" font-size="10" font-family="sans-serif">{:.0}</text>"#,
            x + 6.0,
            y - 4.0,
            sn.t
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="6" y="14" font-size="12" font-family="sans-serif">env {} seed {}: {}</text>"#,
        h.env_id,
        h.seed,
        h.outcome.as_str()
    );
    s.push_str("</svg>\n");
    Ok(s)
}

fn polyline_points(points: impl Iterator<Item = Vec2>) -> String {
    points.map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect::<Vec<_>>().join(" ")
}

pub fn plot_trajectory(record: &EpisodeRecord, path: &Path) -> Result<()> {
    write_file(path, &trajectory_svg(record)?)
}

/// (episode, success rate) pairs of a training log, in log order.
pub fn validation_points(records: &[LogRecord]) -> Result<Vec<(usize, f64)>> {
    let points: Vec<_> = records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Validation { episode, metrics } => Some((*episode, metrics.success_rate)),
            _ => None,
        })
        .collect();
    if points.is_empty() {
        return Err(Error::NoValidation);
    }
    Ok(points)
}

/// Reads a JSON-lines training log and extracts its validation points.
pub fn read_validation_points(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    validation_points(&parse_log(&text)?)
}

/// Success rate against training episode, one labelled series per log.
pub fn validation_svg(series: &[(String, Vec<(usize, f64)>)]) -> Result<String> {
    if series.is_empty() || series.iter().any(|(_, pts)| pts.is_empty()) {
        return Err(Error::NoValidation);
    }
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let max_ep = series
        .iter()
        .flat_map(|(_, p)| p.iter().map(|(e, _)| *e))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let x = |e: usize| left + e as f64 / max_ep * plot_w;
    let y = |r: f64| top + (1.0 - r.clamp(0.0, 1.0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    for i in 0..=5 {
        let r = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#dddddd"/><text x="{2:.1}" y="{3:.1}" text-anchor="end">{r:.1}</text>"##,
            y(r),
            left + plot_w,
            left - 6.0,
            y(r) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#000000"/><line x1="{left}" y1="{top}" x2="{left}" y2="{0:.1}" stroke="#000000"/>"##,
        top + plot_h,
        left + plot_w
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">episode</text><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
        left + plot_w / 2.0,
        h - 10.0,
        left + plot_w,
        top + plot_h + 16.0,
        max_ep
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">success rate</text>"#,
        top + plot_h / 2.0
    );

    for (k, (label, points)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts = points
            .iter()
            .map(|&(e, r)| format!("{:.2},{:.2}", x(e), y(r)))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(
            s,
            r#"<g class="series" data-label="{}"><polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            escape(label)
        );
        for &(e, r) in points {
            let _ = writeln!(
                s,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                x(e),
                y(r)
            );
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{ly:.1}" x2="{1:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/><text x="{2:.1}" y="{3:.1}">{4}</text></g>"#,
            left + plot_w + 10.0,
            left + plot_w + 30.0,
            left + plot_w + 36.0,
            ly + 4.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn plot_validation_curve(series: &[(String, Vec<(usize, f64)>)], path: &Path) -> Result<()> {
    write_file(path, &validation_svg(series)?)
}
