use super::Point;

/// Shoelace sum halved; positive when counter-clockwise in a y-up frame.
pub fn signed_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        acc += a.x * b.y - b.x * a.y;
    }
    0.5 * acc
}

pub fn polygon_area(vertices: &[Point]) -> f64 {
    signed_area(vertices).abs()
}

pub fn perimeter(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| vertices[i].dist(vertices[(i + 1) % n])).sum()
}

/// Area centroid; falls back to the vertex mean for degenerate polygons.
pub fn polygon_centroid(vertices: &[Point]) -> Point {
    let n = vertices.len();
    if n == 0 {
        return Point::default();
    }
    let a = signed_area(vertices);
    if a.abs() < 1e-12 {
        let s = vertices.iter().fold(Point::default(), |acc, &p| acc + p);
        return s * (1.0 / n as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (vertices[i], vertices[(i + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    Point::new(cx / (6.0 * a), cy / (6.0 * a))
}

/// Moves every edge by `d` along its normal (positive grows the polygon) and
/// re-intersects neighbouring edges. Miters are capped at `4|d|`.
pub fn offset_polygon(vertices: &[Point], d: f64) -> Vec<Point> {
    let n = vertices.len();
    if n < 3 || d == 0.0 {
        return vertices.to_vec();
    }
    let orient = if signed_area(vertices) >= 0.0 { 1.0 } else { -1.0 };
    let normal = |a: Point, b: Point| -> Point {
        let e = b - a;
        let len = e.x.hypot(e.y);
        if len < 1e-12 {
            Point::default()
        } else {
            Point::new(e.y / len, -e.x / len) * orient
        }
    };
    (0..n)
        .map(|i| {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let n1 = normal(prev, cur);
            let n2 = normal(cur, next);
            let denom = 1.0 + n1.x * n2.x + n1.y * n2.y;
            let miter = if denom > 1e-6 { (n1 + n2) * (1.0 / denom) } else { n1 };
            let len = miter.x.hypot(miter.y);
            let miter = if len > 4.0 { miter * (4.0 / len) } else { miter };
            cur + miter * d
        })
        .collect()
}

/// Indices of the convex hull (monotone chain), counter-clockwise in y-up.
pub fn convex_hull(points: &[Point]) -> Vec<usize> {
    let n = points.len();
    if n < 3 {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        points[a]
            .x
            .total_cmp(&points[b].x)
            .then(points[a].y.total_cmp(&points[b].y))
    });
    idx.dedup_by(|a, b| points[*a] == points[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let cross = |o: Point, a: Point, b: Point| (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for pass in [idx.clone(), idx.iter().rev().copied().collect()] {
        let floor = hull.len() + 2;
        for &i in &pass {
            while hull.len() >= floor
                && cross(points[hull[hull.len() - 2]], points[hull[hull.len() - 1]], points[i]) <= 0.0
            {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}
