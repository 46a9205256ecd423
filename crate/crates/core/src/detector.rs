//! Hierarchical landmark classifier.
//!
//! The landmark is five nested shapes, outer to inner: square, square,
//! triangle, triangle, square, with areas 32:16:4:2:1. A candidate is a chain
//! of singly nested contours whose vertex counts form one of the accepted
//! windows of that sequence and whose adjacent area ratios agree with the
//! pattern. When nothing matches, a close-range pass looks for the innermost
//! triangle holding the innermost square on its own.

use crate::contours::{ContourTree, Point, Polygon};
use crate::error::{Error, Result};
use crate::imaging::Roi;

/// Index of each shape in the outer-to-inner sequence.
pub const OUTER_SQUARE: usize = 0;
pub const INNER_SQUARE: usize = 1;
pub const LARGE_TRIANGLE: usize = 2;
pub const SMALL_TRIANGLE: usize = 3;
pub const CORE_SQUARE: usize = 4;

/// Prior knowledge about the landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSpec {
    /// Vertex counts, outer to inner.
    pub shape_codes: [usize; 5],
    /// `area[i] / area[i + 1]`.
    pub adjacent_ratios: [f64; 4],
    pub outer_side_m: f64,
    /// Side of the larger triangle.
    pub tri1_side_m: f64,
    /// Side of the smaller triangle.
    pub tri2_side_m: f64,
    /// Relative tolerance on each adjacent ratio.
    pub ratio_tolerance: f64,
}

impl Default for PatternSpec {
    fn default() -> Self {
        Self::from_outer_side(0.38)
    }
}

impl PatternSpec {
    /// Pattern with areas 32:16:4:2:1 scaled to an outer square of `side` meters.
    pub fn from_outer_side(side: f64) -> Self {
        let areas = Self::areas_for(side);
        let tri_side = |a: f64| (4.0 * a / 3f64.sqrt()).sqrt();
        Self {
            shape_codes: [4, 4, 3, 3, 4],
            adjacent_ratios: [2.0, 4.0, 2.0, 2.0],
            outer_side_m: side,
            tri1_side_m: tri_side(areas[LARGE_TRIANGLE]),
            tri2_side_m: tri_side(areas[SMALL_TRIANGLE]),
            ratio_tolerance: 0.25,
        }
    }

    fn areas_for(side: f64) -> [f64; 5] {
        let outer = side * side;
        [outer, outer / 2.0, outer / 8.0, outer / 16.0, outer / 32.0]
    }

    /// Shape areas in square meters, outer to inner.
    pub fn areas_m2(&self) -> [f64; 5] {
        let mut a = [self.outer_side_m * self.outer_side_m; 5];
        for i in 1..5 {
            a[i] = a[i - 1] / self.adjacent_ratios[i - 1];
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        if self.adjacent_ratios.iter().any(|&r| !(r > 1.0)) {
            return Err(Error::arg("adjacent area ratios must all exceed 1"));
        }
        if !(self.outer_side_m > 0.0 && self.tri1_side_m > 0.0 && self.tri2_side_m > 0.0) {
            return Err(Error::arg("pattern dimensions must be positive"));
        }
        if !(self.ratio_tolerance >= 0.0) {
            return Err(Error::arg("ratio tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Which part of the pattern a contour chain covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeWindow {
    /// Pattern index of the outermost matched contour.
    pub first: usize,
    pub len: usize,
    /// The innermost contour was accepted without checking it.
    pub ignore_last: bool,
}

impl ShapeWindow {
    pub fn shapes(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.len
    }

    pub fn contains(&self, shape: usize) -> bool {
        self.shapes().contains(&shape)
    }
}

/// Accepted outer-to-inner vertex-count sequences.
///
/// | contours | sequences          |
/// |----------|--------------------|
/// | 5        | 4 4 3 3 *          |
/// | 4        | 4 4 3 3, 4 3 3 4   |
/// | 3        | 4 4 3, 4 3 3, 3 3 4 |
/// | 2        | 3 3, 4 3           |
pub fn classify_sequence(codes: &[usize]) -> Option<ShapeWindow> {
    let w = |first, len, ignore_last| Some(ShapeWindow { first, len, ignore_last });
    match codes {
        [4, 4, 3, 3, _] => w(0, 5, true),
        [4, 4, 3, 3] => w(0, 4, false),
        [4, 3, 3, 4] => w(1, 4, false),
        [4, 4, 3] => w(0, 3, false),
        [4, 3, 3] => w(1, 3, false),
        [3, 3, 4] => w(2, 3, false),
        [3, 3] => w(2, 2, false),
        [4, 3] => w(1, 2, false),
        _ => None,
    }
}

/// True when every adjacent quotient lies within `tol * expected` of its
/// expected value.
pub fn check_area_ratios(areas: &[f64], expected: &[f64], tol: f64) -> Result<bool> {
    if let Some(a) = areas.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::arg(format!("contour area must be positive, got {a}")));
    }
    if expected.len() + 1 < areas.len() {
        return Err(Error::arg("fewer expected ratios than adjacent pairs"));
    }
    Ok(areas
        .windows(2)
        .zip(expected)
        .all(|(pair, &r)| (pair[0] / pair[1] - r).abs() <= tol * r))
}

/// Longest side and vertex mean of a triangle.
pub fn triangle_metrics(tri: &Polygon) -> Result<(f64, Point)> {
    if tri.len() != 3 {
        return Err(Error::arg(format!("triangle expected, got {} vertices", tri.len())));
    }
    let v = &tri.vertices;
    let sides = [v[0].dist(v[1]), v[1].dist(v[2]), v[2].dist(v[0])];
    if sides.iter().any(|&s| !(s > 1e-12)) {
        return Err(Error::arg("degenerate triangle"));
    }
    let l_pmax = sides.iter().copied().fold(0.0, f64::max);
    let center = Point::new((v[0].x + v[1].x + v[2].x) / 3.0, (v[0].y + v[1].y + v[2].y) / 3.0);
    Ok((l_pmax, center))
}

/// Tunables of the contour selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Douglas-Peucker tolerance as a fraction of the contour perimeter.
    pub simplify_fraction: f64,
    /// Floor on that tolerance in pixels. Rasterized corners are blunted by
    /// about a pixel whatever the shape's size, which a purely relative
    /// tolerance cannot absorb on small triangles.
    pub min_tolerance_px: f64,
    /// Contours below this boundary area (px^2) are treated as noise.
    pub min_area_px: f64,
    /// Smallest triangle side (px) accepted by the close-range pass.
    pub partial_min_side_px: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { simplify_fraction: 0.02, min_tolerance_px: 1.5, min_area_px: 12.0, partial_min_side_px: 40.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedShape {
    pub shape: usize,
    pub contour: usize,
    pub polygon: Polygon,
    pub area: f64,
}

/// Landmark found in one frame. Coordinates are continuous image coordinates
/// in which pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Outer to inner.
    pub matched: Vec<MatchedShape>,
    pub window: ShapeWindow,
    /// Centroid of the measured triangle.
    pub tri_center: Point,
    /// A point along the triangle-to-square arrow, `None` when no square matched.
    pub square_center: Option<Point>,
    pub landmark_center: Point,
    /// Longest side of the measured triangle. In a partial detection this is
    /// the smaller triangle and still needs rescaling.
    pub l_pmax: f64,
    pub partial: bool,
}

impl Detection {
    pub fn codes(&self) -> Vec<usize> {
        self.matched.iter().map(|m| m.polygon.len()).collect()
    }

    /// Bounding box of the outermost matched contour.
    pub fn bounding_box(&self) -> Roi {
        let pts = self.matched[0].polygon.vertices.iter().map(|p| (p.x, p.y));
        Roi::bounding(pts).expect("matched polygons are non-empty")
    }

    /// The matched contour playing pattern shape `shape`, if any.
    pub fn shape(&self, shape: usize) -> Option<&MatchedShape> {
        self.matched.iter().find(|m| m.shape == shape)
    }
}

struct NodeInfo {
    significant: bool,
    polygon: Polygon,
    area: f64,
}

fn analyse(tree: &ContourTree, cfg: &DetectorConfig) -> Vec<NodeInfo> {
    tree.nodes
        .iter()
        .map(|c| {
            if c.points.len() < 3 {
                return NodeInfo { significant: false, polygon: Polygon::default(), area: 0.0 };
            }
            let tol = (cfg.simplify_fraction * c.perimeter()).max(cfg.min_tolerance_px);
            let polygon = c.boundary_polygon(tol);
            let area = polygon.area();
            NodeInfo { significant: area >= cfg.min_area_px, polygon, area }
        })
        .collect()
}

/// The single significant nested chain starting at `top`, at most 5 long.
fn chain_from(tree: &ContourTree, info: &[NodeInfo], top: usize) -> Vec<usize> {
    let mut chain = vec![top];
    let mut cur = top;
    while chain.len() < 5 {
        let mut kids = tree.children[cur].iter().copied().filter(|&k| info[k].significant);
        match (kids.next(), kids.next()) {
            (Some(only), None) => {
                chain.push(only);
                cur = only;
            }
            _ => break,
        }
    }
    chain
}

fn build(info: &[NodeInfo], nodes: &[usize], window: ShapeWindow, partial: bool) -> Option<Detection> {
    let matched: Vec<MatchedShape> = nodes
        .iter()
        .zip(window.shapes())
        .map(|(&n, shape)| MatchedShape {
            shape,
            contour: n,
            polygon: info[n].polygon.clone(),
            area: info[n].area,
        })
        .collect();
    let find = |s: usize| matched.iter().find(|m| m.shape == s);
    let tri = if partial { find(SMALL_TRIANGLE)? } else { find(LARGE_TRIANGLE)? };
    let (l_pmax, landmark_center) = triangle_metrics(&tri.polygon).ok()?;
    let tri_center = tri.polygon.centroid();

    let checked = |m: &&MatchedShape| !(window.ignore_last && m.shape == window.first + window.len - 1);
    let square = [OUTER_SQUARE, INNER_SQUARE, CORE_SQUARE]
        .into_iter()
        .filter_map(|s| find(s).filter(checked))
        .next();
    let square_center = square.map(|sq| {
        let c = sq.polygon.centroid();
        if sq.shape == CORE_SQUARE {
            // the core square sits on the opposite side of the triangle center
            tri_center * 2.0 - c
        } else {
            c
        }
    });
    Some(Detection { matched, window, tri_center, square_center, landmark_center, l_pmax, partial })
}

/// Searches the contour tree for the landmark.
pub fn detect_landmark(tree: &ContourTree, spec: &PatternSpec, cfg: &DetectorConfig) -> Option<Detection> {
    let info = analyse(tree, cfg);
    let codes: Vec<usize> = info.iter().map(|n| n.polygon.len()).collect();

    let mut best: Option<(usize, f64, Detection)> = None;
    for top in (0..tree.len()).filter(|&i| info[i].significant) {
        let chain = chain_from(tree, &info, top);
        for len in (2..=chain.len()).rev() {
            let nodes = &chain[..len];
            let seq: Vec<usize> = nodes.iter().map(|&n| codes[n]).collect();
            let Some(window) = classify_sequence(&seq) else { continue };
            let checked = if window.ignore_last { len - 1 } else { len };
            let areas: Vec<f64> = nodes[..checked].iter().map(|&n| info[n].area).collect();
            let expected = &spec.adjacent_ratios[window.first..];
            if !check_area_ratios(&areas, expected, spec.ratio_tolerance).unwrap_or(false) {
                continue;
            }
            let outer_area = info[top].area;
            let better = best.as_ref().is_none_or(|(bl, ba, _)| len > *bl || (len == *bl && outer_area > *ba));
            if better {
                if let Some(det) = build(&info, nodes, window, false) {
                    best = Some((len, outer_area, det));
                }
            }
            // shorter prefixes of the same chain cannot win
            break;
        }
    }
    if let Some((_, _, det)) = best {
        return Some(det);
    }

    // close range: the smaller triangle holding the core square
    let window = ShapeWindow { first: SMALL_TRIANGLE, len: 2, ignore_last: false };
    let mut partial: Option<(f64, Detection)> = None;
    for top in (0..tree.len()).filter(|&i| info[i].significant && codes[i] == 3) {
        let chain = chain_from(tree, &info, top);
        if chain.len() != 2 || codes[chain[1]] != 4 || !tree.children[chain[1]].iter().all(|&k| !info[k].significant) {
            continue;
        }
        let areas = [info[chain[0]].area, info[chain[1]].area];
        if !check_area_ratios(&areas, &spec.adjacent_ratios[SMALL_TRIANGLE..], spec.ratio_tolerance).unwrap_or(false) {
            continue;
        }
        let Some(det) = build(&info, &chain, window, true) else { continue };
        if det.l_pmax < cfg.partial_min_side_px {
            continue;
        }
        if partial.as_ref().is_none_or(|(a, _)| areas[0] > *a) {
            partial = Some((areas[0], det));
        }
    }
    partial.map(|(_, d)| d)
}

impl Detection {
    /// Centroid of the given pattern shape, if it was matched.
    pub fn shape_centroid(&self, shape: usize) -> Option<Point> {
        self.shape(shape).map(|m| m.polygon.centroid())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::extract_contours;
    use crate::imaging::BinaryImage;

    #[test]
    fn derived_dimensions() {
        let spec = PatternSpec::default();
        assert!((spec.tri1_side_m - 0.20417).abs() < 5e-6, "{}", spec.tri1_side_m);
        assert!((spec.tri2_side_m - 0.14437).abs() < 5e-6, "{}", spec.tri2_side_m);
        assert!((spec.tri1_side_m / spec.tri2_side_m - 2f64.sqrt()).abs() < 1e-9);
        let areas = spec.areas_m2();
        let expected = [0.1444, 0.0722, 0.01805, 0.009025, 0.0045125];
        for (a, e) in areas.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn table_rows() {
        assert_eq!(classify_sequence(&[4, 4, 3, 3]), Some(ShapeWindow { first: 0, len: 4, ignore_last: false }));
        assert_eq!(classify_sequence(&[3, 3]), Some(ShapeWindow { first: 2, len: 2, ignore_last: false }));
        assert_eq!(classify_sequence(&[4, 4]), None);
        assert_eq!(classify_sequence(&[3, 4]), None);
        assert_eq!(classify_sequence(&[4, 4, 3, 3, 6]).map(|w| w.ignore_last), Some(true));
        assert_eq!(classify_sequence(&[]), None);
    }

    #[test]
    fn ratio_examples() {
        assert!(check_area_ratios(&[3200., 1600., 400., 200., 100.], &[2., 4., 2., 2.], 0.25).unwrap());
        assert!(check_area_ratios(&[3200., 1600.], &[2.], 0.0).unwrap());
        assert!(!check_area_ratios(&[3200., 3000.], &[2.], 0.25).unwrap());
        assert!(check_area_ratios(&[3200., 0.], &[2.], 0.25).is_err());
        assert!(check_area_ratios(&[-1., 2.], &[2.], 0.25).is_err());
    }

    #[test]
    fn triangle_metric_examples() {
        let tri = Polygon::new(vec![Point::new(0., 0.), Point::new(100., 0.), Point::new(50., 86.6)]);
        let (l, c) = triangle_metrics(&tri).unwrap();
        assert!((l - 100.0).abs() < 1e-3);
        assert!((c.x - 50.0).abs() < 1e-9 && (c.y - 28.8667).abs() < 1e-3);

        let tri = Polygon::new(vec![Point::new(0., 0.), Point::new(3., 0.), Point::new(0., 3.)]);
        let (l, c) = triangle_metrics(&tri).unwrap();
        assert!((l - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(c, Point::new(1.0, 1.0));

        let moved = Polygon::new(tri.vertices.iter().map(|&p| p + Point::new(7.5, -2.0)).collect());
        let (l2, c2) = triangle_metrics(&moved).unwrap();
        assert!((l2 - l).abs() < 1e-12);
        assert!((c2.x - 8.5).abs() < 1e-12 && (c2.y + 1.0).abs() < 1e-12);

        let degenerate = Polygon::new(vec![Point::new(1., 1.), Point::new(1., 1.), Point::new(4., 0.)]);
        assert!(triangle_metrics(&degenerate).is_err());
        assert!(triangle_metrics(&Polygon::new(vec![Point::new(0., 0.); 4])).is_err());
    }

    #[test]
    fn nested_plain_squares_are_rejected() {
        let img = BinaryImage::from_fn(200, 200, |x, y| {
            let d = (x as i64 - 100).abs().max((y as i64 - 100).abs());
            (64..90).contains(&d) || (32..45).contains(&d) || d < 22
        });
        let tree = extract_contours(&img);
        assert!(detect_landmark(&tree, &PatternSpec::default(), &DetectorConfig::default()).is_none());
    }
}
