//! Marching squares on binary slices.
//!
//! Samples sit at pixel centers `(u + 0.5, v + 0.5)` in pixel-corner
//! coordinates, and the image is padded with one ring of background, so
//! every contour is closed and lies within `[0, width] x [0, height]`.
//! Diagonal-only contacts are split (set pixels are 4-connected). Contours
//! keep set pixels on the same side throughout and collinear vertices are
//! dropped. The last vertex connects back to the first.

use std::collections::BTreeMap;

pub type Contour = Vec<[f64; 2]>;

/// Doubled coordinates, exact for midpoints of pixel centers.
type Key = (i64, i64);

#[derive(Clone, Copy, PartialEq, Eq)]
enum Edge {
    Top,
    Right,
    Bottom,
    Left,
}

pub fn trace_contours(width: usize, height: usize, set: &[bool]) -> Vec<Contour> {
    assert_eq!(set.len(), width * height);
    let at = |x: i64, y: i64| {
        x >= 0
            && y >= 0
            && (x as usize) < width
            && (y as usize) < height
            && set[y as usize * width + x as usize]
    };

    let mut next: BTreeMap<Key, Key> = BTreeMap::new();
    // cell (x, y) spans samples x..=x+1, y..=y+1
    for y in -1..height as i64 {
        for x in -1..width as i64 {
            let tl = at(x, y);
            let tr = at(x + 1, y);
            let br = at(x + 1, y + 1);
            let bl = at(x, y + 1);
            let case = (tl as u8) << 3 | (tr as u8) << 2 | (br as u8) << 1 | bl as u8;
            use Edge::*;
            let pairs: &[(Edge, Edge, (i64, i64))] = match case {
                0 | 15 => &[],
                1 => &[(Left, Bottom, (0, 1))],
                2 => &[(Bottom, Right, (1, 1))],
                3 => &[(Left, Right, (0, 1))],
                4 => &[(Top, Right, (1, 0))],
                5 => &[(Top, Right, (1, 0)), (Left, Bottom, (0, 1))],
                6 => &[(Top, Bottom, (1, 0))],
                7 => &[(Top, Left, (1, 0))],
                8 => &[(Top, Left, (0, 0))],
                9 => &[(Top, Bottom, (0, 0))],
                10 => &[(Top, Left, (0, 0)), (Bottom, Right, (1, 1))],
                11 => &[(Top, Right, (0, 0))],
                12 => &[(Left, Right, (0, 0))],
                13 => &[(Bottom, Right, (0, 0))],
                14 => &[(Left, Bottom, (0, 0))],
                _ => unreachable!(),
            };
            for &(e1, e2, (cx, cy)) in pairs {
                let a = midpoint(x, y, e1);
                let b = midpoint(x, y, e2);
                // set corner on the left of a -> b in doubled coordinates
                let c = (2 * (x + cx) + 1, 2 * (y + cy) + 1);
                let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                let (from, to) = if cross < 0 { (a, b) } else { (b, a) };
                let previous = next.insert(from, to);
                debug_assert!(previous.is_none());
            }
        }
    }

    let mut contours = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut ring = vec![start];
        let mut p = next.remove(&start).expect("start present");
        while p != start {
            ring.push(p);
            p = next.remove(&p).expect("contours are closed");
        }
        contours.push(simplify(&ring));
    }
    contours
}

fn midpoint(x: i64, y: i64, e: Edge) -> Key {
    let (cx, cy) = (2 * x + 1, 2 * y + 1);
    match e {
        Edge::Top => (cx + 1, cy),
        Edge::Bottom => (cx + 1, cy + 2),
        Edge::Left => (cx, cy + 1),
        Edge::Right => (cx + 2, cy + 1),
    }
}

fn simplify(ring: &[Key]) -> Contour {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let (a, b, c) = (ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]);
            (b.0 - a.0) * (c.1 - b.1) != (b.1 - a.1) * (c.0 - b.0)
        })
        .map(|i| [ring[i].0 as f64 / 2.0, ring[i].1 as f64 / 2.0])
        .collect()
}

/// Shoelace area in pixel units.
pub fn signed_area(c: &[[f64; 2]]) -> f64 {
    let n = c.len();
    (0..n)
        .map(|i| {
            let (a, b) = (c[i], c[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}
