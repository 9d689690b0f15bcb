//! Bare-bones SVG rendering of trajectory bundles and velocity-change maps.
//! Convenience output only; nothing downstream depends on these files.

use crate::io::TrajectoryRow;
use crate::trajectory::VelocityChangeMap;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 40.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn of(points: impl Iterator<Item = (f64, f64)>) -> Frame {
        let mut frame = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            frame.x_min = frame.x_min.min(x);
            frame.x_max = frame.x_max.max(x);
            frame.y_min = frame.y_min.min(y);
            frame.y_max = frame.y_max.max(y);
        }
        if !(frame.x_max > frame.x_min) {
            frame.x_min -= 0.5;
            frame.x_max += 0.5;
        }
        if !(frame.y_max > frame.y_min) {
            frame.y_min -= 0.5;
            frame.y_max += 0.5;
        }
        frame
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    /// y grows upward in data space, downward in SVG space
    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn document(body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// Trajectories as polylines over (z, x), steered segments in a second color,
/// with the midline x = 0 dashed.
pub fn render_trajectories(rows: &[TrajectoryRow]) -> String {
    let frame = Frame::of(rows.iter().map(|r| (r.z_m, r.x_m)));
    let mut body = String::new();
    if frame.y_min < 0.0 && frame.y_max > 0.0 {
        let y = frame.py(0.0);
        body.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n",
            frame.px(frame.x_min),
            frame.px(frame.x_max),
        ));
    }
    let mut id = None;
    let mut segments: Vec<(u8, Vec<(f64, f64)>)> = Vec::new();
    let flush = |segments: &mut Vec<(u8, Vec<(f64, f64)>)>, body: &mut String| {
        for (flag, pts) in segments.drain(..) {
            if pts.len() < 2 {
                continue;
            }
            let color = if flag == 1 { "#c0392b" } else { "#2c3e50" };
            let coords: Vec<String> = pts
                .iter()
                .map(|&(z, x)| format!("{:.2},{:.2}", frame.px(z), frame.py(x)))
                .collect();
            body.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\"/>\n",
                coords.join(" ")
            ));
        }
    };
    for r in rows {
        if id != Some(r.trajectory_id) {
            flush(&mut segments, &mut body);
            id = Some(r.trajectory_id);
        }
        match segments.last_mut() {
            Some((flag, pts)) if *flag == r.branch_flag => pts.push((r.z_m, r.x_m)),
            _ => {
                // continue the previous segment's last point so the path is unbroken
                let mut pts = Vec::new();
                if let Some((_, prev)) = segments.last() {
                    if let Some(&last) = prev.last() {
                        pts.push(last);
                    }
                }
                pts.push((r.z_m, r.x_m));
                segments.push((r.branch_flag, pts));
            }
        }
    }
    flush(&mut segments, &mut body);
    document(&body)
}

/// Velocity-change map as a grid of colored cells; missing cells are gray.
pub fn render_map(map: &VelocityChangeMap) -> String {
    let frame = Frame::of(
        map.zs
            .iter()
            .flat_map(|&z| map.xs.iter().map(move |&x| (z, x))),
    );
    let scale = map
        .dv_over_c
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let cell_w = (WIDTH - 2.0 * MARGIN) / map.zs.len() as f64;
    let cell_h = (HEIGHT - 2.0 * MARGIN) / map.xs.len() as f64;
    let mut body = String::new();
    for (iz, &z) in map.zs.iter().enumerate() {
        for (ix, &x) in map.xs.iter().enumerate() {
            let fill = match map.get(ix, iz) {
                None => "rgb(200,200,200)".to_string(),
                Some(v) => {
                    // blue for negative, red for positive
                    let t = (v / scale).clamp(-1.0, 1.0);
                    let other = (255.0 * (1.0 - t.abs())) as u8;
                    if t >= 0.0 {
                        format!("rgb(255,{other},{other})")
                    } else {
                        format!("rgb({other},{other},255)")
                    }
                }
            };
            body.push_str(&format!(
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>\n",
                frame.px(z) - cell_w / 2.0,
                frame.py(x) - cell_h / 2.0,
                cell_w,
                cell_h,
            ));
        }
    }
    document(&body)
}

/// Scatter variant for (x, z, value) rows that need not form a regular grid,
/// e.g. reconstructed velocity samples whose positions shift per plane.
pub fn render_points(rows: &[(f64, f64, Option<f64>)]) -> String {
    let frame = Frame::of(rows.iter().map(|&(x, z, _)| (z, x)));
    let scale = rows
        .iter()
        .filter_map(|&(_, _, v)| v)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut body = String::new();
    for &(x, z, value) in rows {
        let fill = match value {
            None => "rgb(200,200,200)".to_string(),
            Some(v) => {
                let t = (v / scale).clamp(-1.0, 1.0);
                let other = (255.0 * (1.0 - t.abs())) as u8;
                if t >= 0.0 {
                    format!("rgb(255,{other},{other})")
                } else {
                    format!("rgb({other},{other},255)")
                }
            }
        };
        body.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"2\" height=\"2\" fill=\"{fill}\"/>\n",
            frame.px(z) - 1.0,
            frame.py(x) - 1.0,
        ));
    }
    document(&body)
}
