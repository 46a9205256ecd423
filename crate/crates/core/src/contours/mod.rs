//! Border following into a nesting tree, and polygon simplification of the
//! resulting pixel chains.

mod geometry;
mod refine;
mod simplify;
mod trace;

pub use geometry::{convex_hull, offset_polygon, perimeter, polygon_area, polygon_centroid, signed_area};
pub use simplify::{douglas_peucker, douglas_peucker_open, inflection_count};
pub use trace::extract_contours;

/// Real-valued 2-D point in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(self, other: Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Integer pixel coordinate on a traced border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pixel {
    pub x: i32,
    pub y: i32,
}

impl Pixel {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn to_point(self) -> Point {
        Point::new(self.x as f64, self.y as f64)
    }

    /// True for distinct 8-neighbours.
    pub fn touches(self, other: Pixel) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// Closed border between a white (8-connected) region and a black
/// (4-connected) region.
///
/// Points are centers of the white pixels along the border. Regions of one or
/// two pixels produce chains shorter than three points.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<Pixel>,
    /// Outer border of a white region; `false` for the border of a hole.
    pub is_outer: bool,
}

impl Contour {
    /// Length of the closed pixel chain.
    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        (0..n).map(|i| self.points[i].to_point().dist(self.points[(i + 1) % n].to_point())).sum()
    }

    pub fn points_f64(&self) -> Vec<Point> {
        self.points.iter().map(|p| p.to_point()).collect()
    }

    /// Simplified polygon placed on the crack between the white and black
    /// regions, in continuous image coordinates where pixel `(i, j)` covers
    /// `[i, i+1) x [j, j+1)`. Corners are refined with line fits through the
    /// chain, so the vertex count equals the Douglas-Peucker count.
    pub fn boundary_polygon(&self, tol: f64) -> Polygon {
        let chain = self.points_f64();
        let idx = simplify::simplify_closed_indices(&chain, tol);
        let simplified: Vec<Point> = idx.iter().map(|&k| chain[k]).collect();
        let d = if self.is_outer { 0.5 } else { -0.5 };
        let fallback = offset_polygon(&simplified, d);
        let refined = refine::refine_corners(&chain, &idx, d, &fallback);
        let half = Point::new(0.5, 0.5);
        Polygon { vertices: refined.into_iter().map(|p| p + half).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        polygon_centroid(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        perimeter(&self.vertices)
    }

    /// Longest edge, including the closing one.
    pub fn max_side(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n])).fold(0.0, f64::max)
    }
}

/// Contours with their nesting: a node's parent is the border immediately
/// enclosing it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContourTree {
    pub nodes: Vec<Contour>,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl ContourTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.parent[i].is_none())
    }

    /// Number of ancestors.
    pub fn depth(&self, mut idx: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[idx] {
            d += 1;
            idx = p;
        }
        d
    }

    pub(crate) fn from_parts(nodes: Vec<Contour>, parent: Vec<Option<usize>>) -> Self {
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }
        Self { nodes, parent, children }
    }
}
