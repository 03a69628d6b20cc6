//! Standalone SVG pictures of a planar Γ system: the hull of the base
//! points, every Γ boundary line, the covered part of the hull sampled on a
//! grid, and markers for the intersection witness and the KKM
//! counterexample.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{check_fip, check_kkm_capped, GammaSystem, KkmVerdict};
use crate::linalg::Vector;
use crate::polyhedra::{FeasibilityResult, Tolerance};

/// Side of the coverage sample grid.
pub const GRID: usize = 200;

const CANVAS: f64 = 600.0;
const PAD: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSummary {
    pub grid: usize,
    /// Grid cells whose centre lies in the hull.
    pub hull_cells: usize,
    /// Hull cells whose centre lies in some Γ value.
    pub covered_cells: usize,
    pub kkm: KkmVerdict,
    pub fip: FeasibilityResult,
}

/// Convex hull by Andrew's monotone chain, counter-clockwise, without
/// repeated or collinear points.
pub fn convex_hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` lies in the counter-clockwise convex polygon `hull`. Segments
/// and points are handled within `eps`.
fn in_polygon(hull: &[[f64; 2]], p: [f64; 2], eps: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => (hull[0][0] - p[0]).abs() <= eps && (hull[0][1] - p[1]).abs() <= eps,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + t * d[0], a[1] + t * d[1]];
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() <= eps
        }
        n => (0..n).all(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -eps
        }),
    }
}

/// Axis-aligned view box in world coordinates and the world → canvas map.
struct View {
    lo: [f64; 2],
    hi: [f64; 2],
    scale: f64,
}

impl View {
    fn new(points: &[[f64; 2]]) -> View {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let margin = 0.1 * span;
        for k in 0..2 {
            // centre the shorter side
            let extra = (span - (hi[k] - lo[k])) / 2.0;
            lo[k] -= extra + margin;
            hi[k] += extra + margin;
        }
        let scale = (CANVAS - 2.0 * PAD) / (hi[0] - lo[0]);
        View { lo, hi, scale }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        (
            PAD + (p[0] - self.lo[0]) * self.scale,
            CANVAS - PAD - (p[1] - self.lo[1]) * self.scale,
        )
    }

    fn cell_size(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / GRID as f64
    }

    /// Part of the line `⟨a, x⟩ = b` inside the view box.
    fn clip_line(&self, a: [f64; 2], b: f64) -> Option<([f64; 2], [f64; 2])> {
        let mut hits: Vec<[f64; 2]> = Vec::new();
        if a[1].abs() > 1e-15 {
            for x in [self.lo[0], self.hi[0]] {
                let y = (b - a[0] * x) / a[1];
                if (self.lo[1]..=self.hi[1]).contains(&y) {
                    hits.push([x, y]);
                }
            }
        }
        if a[0].abs() > 1e-15 {
            for y in [self.lo[1], self.hi[1]] {
                let x = (b - a[1] * y) / a[0];
                if (self.lo[0]..=self.hi[0]).contains(&x) {
                    hits.push([x, y]);
                }
            }
        }
        hits.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
        hits.dedup_by(|p, q| (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        (hits.len() >= 2).then(|| (hits[0], hits[hits.len() - 1]))
    }
}

fn xy(v: &Vector) -> [f64; 2] {
    [v[0], v[1]]
}

fn marker(svg: &mut String, view: &View, p: &Vector, class: &str, title: &str) {
    let (cx, cy) = view.px(xy(p));
    let _ = writeln!(
        svg,
        r#"<g class="{class}"><title>{title}</title><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"#,
        cx - 6.0,
        cy - 6.0,
        cx + 6.0,
        cy + 6.0,
        cx - 6.0,
        cy + 6.0,
        cx + 6.0,
        cy - 6.0
    );
}

/// Draws `sys`, which must be two-dimensional. `selection_cap` bounds the
/// KKM check whose counterexample is marked.
pub fn render_svg(
    sys: &GammaSystem,
    tol: &Tolerance,
    selection_cap: u64,
) -> Result<(String, RenderSummary)> {
    if sys.dim() != 2 {
        return Err(Error::InvalidSpec(format!(
            "rendering needs a two-dimensional instance, got dimension {}",
            sys.dim()
        )));
    }
    let kkm = check_kkm_capped(sys, tol, selection_cap)?;
    let fip = check_fip(sys, tol)?;
    let pts: Vec<[f64; 2]> = sys.base_points.iter().map(xy).collect();
    let hull = convex_hull_2d(&pts);
    let view = View::new(&pts);
    let h = view.cell_size();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    svg.push_str(
        "<style>.covered{fill:#b7e4c7}.uncovered{fill:#f4a6a6}.hull{fill:none;stroke:#222;stroke-width:1.5}\
.gamma{stroke:#4a6fa5;stroke-width:0.8;stroke-dasharray:4 3}.point{fill:#222}\
.witness line{stroke:#1d4ed8;stroke-width:2.5}.counterexample line{stroke:#b91c1c;stroke-width:2.5}</style>\n",
    );
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>"##
    );

    // coverage grid, merged into horizontal runs per row
    let (mut hull_cells, mut covered_cells) = (0, 0);
    let cell_px = h * view.scale;
    for row in 0..GRID {
        let y = view.lo[1] + (row as f64 + 0.5) * h;
        let mut run: Option<(usize, bool)> = None;
        let flush = |svg: &mut String, start: usize, end: usize, covered: bool| {
            let (x0, y0) = view.px([view.lo[0] + start as f64 * h, y + 0.5 * h]);
            let class = if covered { "covered" } else { "uncovered" };
            let _ = writeln!(
                svg,
                r#"<rect class="{class}" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{cell_px:.2}"/>"#,
                (end - start) as f64 * cell_px
            );
        };
        for col in 0..=GRID {
            let state = (col < GRID)
                .then(|| {
                    let p = [view.lo[0] + (col as f64 + 0.5) * h, y];
                    in_polygon(&hull, p, 0.5 * h)
                        .then(|| (0..sys.len()).any(|i| sys.violation(i, &p) <= tol.eq_tol))
                })
                .flatten();
            if let Some(covered) = state {
                hull_cells += 1;
                covered_cells += usize::from(covered);
            }
            match run {
                Some((_, c)) if state == Some(c) => {}
                Some((start, c)) => {
                    flush(&mut svg, start, col, c);
                    run = state.map(|s| (col, s));
                }
                None => run = state.map(|s| (col, s)),
            }
        }
    }

    for half in sys.all_constraints() {
        if half.is_all_space() {
            continue;
        }
        let a = [half.normal()[0], half.normal()[1]];
        if let Some((p, q)) = view.clip_line(a, half.offset()) {
            let ((x1, y1), (x2, y2)) = (view.px(p), view.px(q));
            let _ = writeln!(
                svg,
                r#"<line class="gamma" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
            );
        }
    }

    let outline: Vec<String> = hull
        .iter()
        .map(|&p| {
            let (x, y) = view.px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        svg,
        r#"<polygon class="hull" points="{}"/>"#,
        outline.join(" ")
    );
    for p in &pts {
        let (x, y) = view.px(*p);
        let _ = writeln!(
            svg,
            r#"<circle class="point" cx="{x:.2}" cy="{y:.2}" r="3.5"/>"#
        );
    }
    if let Some(w) = fip.witness() {
        marker(
            &mut svg,
            &view,
            w,
            "witness",
            "point of the hull in every Γ",
        );
    }
    if let Some(cx) = &kkm.counterexample {
        marker(
            &mut svg,
            &view,
            &cx.point,
            "counterexample",
            "point of the hull in no Γ",
        );
    }
    svg.push_str("</svg>\n");
    Ok((
        svg,
        RenderSummary {
            grid: GRID,
            hull_cells,
            covered_cells,
            kkm,
            fip,
        },
    ))
}
