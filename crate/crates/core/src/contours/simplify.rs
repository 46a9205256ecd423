//! Douglas-Peucker simplification.
//!
//! A chord is accepted when no intermediate point lies farther than `tol` from
//! it; otherwise the chain is split at the farthest point and both halves are
//! processed again. Closed curves are first cut at their two mutually farthest
//! points. Ties always resolve to the lowest index, which makes the result
//! idempotent.

use super::{convex_hull, Contour, Point, Polygon};

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Indices kept when simplifying the open chain `points` (endpoints always kept).
pub fn douglas_peucker_open(points: &[Point], tol: f64) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0usize, n - 1)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let (a, b) = (points[s], points[e]);
        let mut best = (s, -1.0f64);
        for (i, &p) in points.iter().enumerate().take(e).skip(s + 1) {
            let d = segment_distance(p, a, b);
            if d > best.1 {
                best = (i, d);
            }
        }
        if best.1 > tol {
            keep[best.0] = true;
            stack.push((best.0, e));
            stack.push((s, best.0));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

/// Lowest-index pair of points at maximal mutual distance.
fn farthest_pair(points: &[Point]) -> Option<(usize, usize)> {
    let mut hull = convex_hull(points);
    hull.sort_unstable();
    let mut best: Option<(usize, usize, f64)> = None;
    for (k, &i) in hull.iter().enumerate() {
        for &j in &hull[k + 1..] {
            let d = points[i].dist2(points[j]);
            if best.is_none_or(|(_, _, bd)| d > bd) {
                best = Some((i, j, d));
            }
        }
    }
    best.filter(|b| b.2 > 0.0).map(|(i, j, _)| (i, j))
}

/// Simplifies a closed curve given as a cyclic point sequence. The output
/// starts at the first point of the seeding pair.
pub(crate) fn simplify_closed(points: &[Point], tol: f64) -> Vec<Point> {
    simplify_closed_indices(points, tol).into_iter().map(|k| points[k]).collect()
}

/// Indices of the closed-curve simplification, in chain order starting from
/// the lower index of the farthest pair.
pub(crate) fn simplify_closed_indices(points: &[Point], tol: f64) -> Vec<usize> {
    let n = points.len();
    if n < 3 {
        return (0..n).collect();
    }
    let Some((i, j)) = farthest_pair(points) else {
        return vec![0];
    };
    let first = &points[i..=j];
    let second: Vec<Point> = points[j..].iter().chain(points[..=i].iter()).copied().collect();

    let mut out: Vec<usize> = douglas_peucker_open(first, tol).into_iter().map(|k| i + k).collect();
    let tail = douglas_peucker_open(&second, tol);
    // skip the shared endpoints
    out.extend(tail[1..tail.len() - 1].iter().map(|&k| (j + k) % n));
    out
}

/// Simplified polygon of a closed contour; vertices are contour points.
pub fn douglas_peucker(contour: &Contour, tol: f64) -> Polygon {
    Polygon::new(simplify_closed(&contour.points_f64(), tol))
}

/// Vertex count of the simplified contour.
pub fn inflection_count(contour: &Contour, tol: f64) -> usize {
    douglas_peucker(contour, tol).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::{extract_contours, Pixel};
    use crate::imaging::BinaryImage;
    use proptest::prelude::*;

    fn largest_contour(img: &BinaryImage) -> Contour {
        let tree = extract_contours(img);
        tree.nodes.into_iter().max_by_key(|c| c.points.len()).expect("a contour")
    }

    fn relative_tol(c: &Contour) -> f64 {
        0.02 * c.perimeter()
    }

    fn inside_polygon(x: f64, y: f64, poly: &[(f64, f64)]) -> bool {
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (xi, yi) = poly[i];
            let (xj, yj) = poly[(i + n - 1) % n];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
        }
        inside
    }

    fn render(w: usize, h: usize, poly: &[(f64, f64)]) -> BinaryImage {
        BinaryImage::from_fn(w, h, |x, y| inside_polygon(x as f64 + 0.5, y as f64 + 0.5, poly))
    }

    #[test]
    fn collinear_chain_keeps_endpoints() {
        let pts: Vec<Point> = (0..10).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert_eq!(douglas_peucker_open(&pts, 0.1), vec![0, 9]);
    }

    #[test]
    fn rasterized_square_has_four_vertices() {
        for angle in [0.0f64, 0.3, 0.7, 1.1] {
            let (c, s) = (angle.cos(), angle.sin());
            let sq: Vec<(f64, f64)> = [(-20.0, -20.0), (20.0, -20.0), (20.0, 20.0), (-20.0, 20.0)]
                .iter()
                .map(|&(x, y)| (50.0 + c * x - s * y, 50.0 + s * x + c * y))
                .collect();
            let contour = largest_contour(&render(100, 100, &sq));
            assert_eq!(inflection_count(&contour, relative_tol(&contour)), 4, "angle {angle}");
        }
    }

    #[test]
    fn rasterized_equilateral_triangle_has_three_vertices() {
        for angle in [0.0f64, 0.4, 1.3, 2.9] {
            let tri: Vec<(f64, f64)> = (0..3)
                .map(|k| {
                    let a = angle + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    (60.0 + 35.0 * a.cos(), 60.0 + 35.0 * a.sin())
                })
                .collect();
            let contour = largest_contour(&render(120, 120, &tri));
            assert_eq!(inflection_count(&contour, relative_tol(&contour)), 3, "angle {angle}");
        }
    }

    #[test]
    fn circle_is_not_a_quadrilateral() {
        let img = BinaryImage::from_fn(140, 140, |x, y| {
            (x as f64 - 70.0).powi(2) + (y as f64 - 70.0).powi(2) <= 50.0 * 50.0
        });
        let contour = largest_contour(&img);
        assert!(inflection_count(&contour, 2.0) > 4);
    }

    #[test]
    fn tiny_contours_pass_through() {
        let c = Contour { points: vec![Pixel::new(3, 3)], is_outer: true };
        assert_eq!(douglas_peucker(&c, 1.0).len(), 1);
        let c = Contour { points: vec![Pixel::new(3, 3), Pixel::new(4, 3)], is_outer: true };
        assert_eq!(douglas_peucker(&c, 1.0).len(), 2);
    }

    fn blob(seed: u64) -> Vec<Point> {
        // star-shaped closed curve with random radii
        let mut s = seed | 1;
        let n = 40;
        (0..n)
            .map(|k| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                let r = 20.0 + (s % 1000) as f64 / 50.0;
                let a = k as f64 * std::f64::consts::TAU / n as f64;
                Point::new((r * a.cos()).round(), (r * a.sin()).round())
            })
            .collect()
    }

    proptest! {
        #[test]
        fn output_is_subsequence_within_tolerance(seed in any::<u64>(), tol in 0.5f64..6.0) {
            let pts = blob(seed);
            let out = simplify_closed(&pts, tol);
            // subsequence, cyclically
            let start = pts.iter().position(|p| *p == out[0]).unwrap();
            let mut k = 0;
            for i in 0..pts.len() {
                if k < out.len() && pts[(start + i) % pts.len()] == out[k] {
                    k += 1;
                }
            }
            prop_assert_eq!(k, out.len());
            // every input point near the closed output polyline
            for &p in &pts {
                let d = (0..out.len())
                    .map(|i| segment_distance(p, out[i], out[(i + 1) % out.len()]))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(d <= tol + 1e-9, "point {:?} at {}", p, d);
            }
        }

        #[test]
        fn idempotent(seed in any::<u64>(), tol in 0.5f64..6.0) {
            let once = simplify_closed(&blob(seed), tol);
            let twice = simplify_closed(&once, tol);
            prop_assert_eq!(once, twice);
        }
    }
}
