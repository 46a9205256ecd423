//! Suzuki-Abe border following.
//!
//! White pixels are foreground with 8-connectivity, black is background with
//! 4-connectivity. The image is padded with a black frame, which acts as the
//! hole border numbered 1 that encloses every top-level outer border.

use super::{Contour, ContourTree, Pixel};
use crate::imaging::BinaryImage;

/// Neighbour offsets in clockwise order (y grows downward).
const DIRS: [(i32, i32); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_index(dx: i32, dy: i32) -> usize {
    DIRS.iter().position(|&d| d == (dx, dy)).expect("neighbour offset")
}

struct Labels {
    w: i32,
    data: Vec<i32>,
}

impl Labels {
    #[inline]
    fn at(&self, x: i32, y: i32) -> i32 {
        self.data[((y + 1) * self.w + (x + 1)) as usize]
    }

    #[inline]
    fn set(&mut self, x: i32, y: i32, v: i32) {
        self.data[((y + 1) * self.w + (x + 1)) as usize] = v;
    }
}

/// Every border of the binary image, with parent links by geometric nesting.
pub fn extract_contours(img: &BinaryImage) -> ContourTree {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let pw = w + 2;
    let mut labels = Labels { w: pw, data: vec![0; (pw * (h + 2)) as usize] };
    for y in 0..h {
        for x in 0..w {
            if img.is_set(x as usize, y as usize) {
                labels.set(x, y, 1);
            }
        }
    }

    // indexed by border number - 2; border 1 is the frame
    let mut nodes: Vec<Contour> = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut nbd: i32 = 1;

    for y in 0..h {
        let mut lnbd: i32 = 1;
        for x in 0..w {
            let v = labels.at(x, y);
            if v == 0 {
                continue;
            }
            let start = if v == 1 && labels.at(x - 1, y) == 0 {
                Some((x - 1, y, true))
            } else if v >= 1 && labels.at(x + 1, y) == 0 {
                if v > 1 {
                    lnbd = v;
                }
                Some((x + 1, y, false))
            } else {
                None
            };

            if let Some((sx, sy, is_outer)) = start {
                nbd += 1;
                // the frame is a hole border without a parent
                let parent = if lnbd <= 1 {
                    None
                } else {
                    let b = (lnbd - 2) as usize;
                    if nodes[b].is_outer == is_outer {
                        parents[b]
                    } else {
                        Some(b)
                    }
                };
                let points = follow(&mut labels, Pixel::new(x, y), Pixel::new(sx, sy), nbd);
                nodes.push(Contour { points, is_outer });
                parents.push(parent);
            }

            let v = labels.at(x, y);
            if v != 1 {
                lnbd = v.abs();
            }
        }
    }
    ContourTree::from_parts(nodes, parents)
}

/// Follows one border starting at `origin`, entering from the zero pixel `from`.
fn follow(labels: &mut Labels, origin: Pixel, from: Pixel, nbd: i32) -> Vec<Pixel> {
    let nonzero = |l: &Labels, x: i32, y: i32| l.at(x, y) != 0;

    // 3.1: clockwise search around the origin for the first nonzero pixel
    let d0 = dir_index(from.x - origin.x, from.y - origin.y);
    let first = (0..8).map(|k| (d0 + k) % 8).find(|&d| {
        let (dx, dy) = DIRS[d];
        nonzero(labels, origin.x + dx, origin.y + dy)
    });
    let Some(d1) = first else {
        labels.set(origin.x, origin.y, -nbd);
        return vec![origin];
    };
    let p1 = Pixel::new(origin.x + DIRS[d1].0, origin.y + DIRS[d1].1);

    let mut points = Vec::new();
    let mut p2 = p1;
    let mut p3 = origin;
    loop {
        points.push(p3);
        // 3.3: counter-clockwise from the element after p2
        let d2 = dir_index(p2.x - p3.x, p2.y - p3.y);
        let mut east_is_zero = false;
        let mut p4 = p3;
        for k in 1..=8 {
            let d = (d2 + 8 - k) % 8;
            let (dx, dy) = DIRS[d];
            if nonzero(labels, p3.x + dx, p3.y + dy) {
                p4 = Pixel::new(p3.x + dx, p3.y + dy);
                break;
            }
            if d == 0 {
                east_is_zero = true;
            }
        }
        // 3.4
        if east_is_zero {
            labels.set(p3.x, p3.y, -nbd);
        } else if labels.at(p3.x, p3.y) == 1 {
            labels.set(p3.x, p3.y, nbd);
        }
        // 3.5
        if p4 == origin && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    points
}
