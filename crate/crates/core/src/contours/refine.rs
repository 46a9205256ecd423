//! Sub-pixel corners from the pixel chain between simplified vertices.

use super::geometry::signed_area;
use super::Point;

#[derive(Debug, Clone, Copy)]
struct Line {
    origin: Point,
    dir: Point,
}

/// Total least squares line through `pts`, directed like `hint`.
fn fit_line(pts: &[Point], hint: Point) -> Option<Line> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let c = pts.iter().fold(Point::default(), |a, &p| a + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in pts {
        let d = p - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    // major axis of the scatter matrix
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let mut dir = Point::new(theta.cos(), theta.sin());
    if dir.x * hint.x + dir.y * hint.y < 0.0 {
        dir = dir * -1.0;
    }
    Some(Line { origin: c, dir })
}

fn intersect(a: &Line, b: &Line) -> Option<Point> {
    let cross = a.dir.x * b.dir.y - a.dir.y * b.dir.x;
    // below ~12 degrees the corner is too blunt to locate reliably
    if cross.abs() < 0.2 {
        return None;
    }
    let w = b.origin - a.origin;
    let t = (w.x * b.dir.y - w.y * b.dir.x) / cross;
    Some(a.origin + a.dir * t)
}

/// Refits every simplified edge to the chain points it replaces (dropping the
/// ones next to the corners), shifts it by `d` along the outward normal and
/// intersects neighbours. Corners that cannot be refined keep `fallback`.
///
/// A digital edge at direction `u` has its boundary pixel centres on average
/// `max(|u.x|, |u.y|) / 2` inside the true edge, so that is the shift applied
/// for `|d| = 0.5`.
pub(crate) fn refine_corners(chain: &[Point], idx: &[usize], d: f64, fallback: &[Point]) -> Vec<Point> {
    let n = chain.len();
    let m = idx.len();
    if m < 3 || n < 3 {
        return fallback.to_vec();
    }
    let corners: Vec<Point> = idx.iter().map(|&k| chain[k]).collect();
    let orient = if signed_area(&corners) >= 0.0 { 1.0 } else { -1.0 };

    let lines: Vec<Option<Line>> = (0..m)
        .map(|k| {
            let (a, b) = (idx[k], idx[(k + 1) % m]);
            let count = (b + n - a) % n + 1;
            let trim = ((count as f64 * 0.15).round() as usize).max(1);
            if count < 2 * trim + 3 {
                return None;
            }
            let pts: Vec<Point> = (trim..count - trim).map(|s| chain[(a + s) % n]).collect();
            let line = fit_line(&pts, chain[b] - chain[a])?;
            let normal = Point::new(line.dir.y, -line.dir.x) * orient;
            let shift = d * line.dir.x.abs().max(line.dir.y.abs());
            Some(Line { origin: line.origin + normal * shift, dir: line.dir })
        })
        .collect();

    (0..m)
        .map(|k| {
            let prev = &lines[(k + m - 1) % m];
            let next = &lines[k];
            match (prev, next) {
                (Some(p), Some(q)) => match intersect(p, q) {
                    Some(x) if x.dist(fallback[k]) <= 3.0 => x,
                    _ => fallback[k],
                },
                _ => fallback[k],
            }
        })
        .collect()
}
