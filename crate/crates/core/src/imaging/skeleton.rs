//! Zhang–Suen thinning.

use super::BinaryMask;

/// Neighbours P2..P9, clockwise from north.
const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

fn ring(m: &BinaryMask, x: usize, y: usize) -> [bool; 8] {
    let mut out = [false; 8];
    for (o, (dx, dy)) in out.iter_mut().zip(RING) {
        *o = m.get_or_false(x as isize + dx, y as isize + dy);
    }
    out
}

/// B(P): set neighbours. A(P): 0→1 transitions around the ring.
fn counts(n: &[bool; 8]) -> (usize, usize) {
    let b = n.iter().filter(|&&v| v).count();
    let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
    (a, b)
}

fn removable(n: &[bool; 8]) -> bool {
    let (a, b) = counts(n);
    a == 1 && (2..=6).contains(&b)
}

/// Iterative two-subcycle thinning until no pixel changes.
///
/// Candidates in each subcycle are chosen with the Zhang–Suen conditions on
/// the subcycle's starting raster. Deletions are then committed in raster
/// order, re-checking `A(P) = 1` and `2 <= B(P) <= 6` against the partially
/// thinned raster, so two-pixel-thick strokes and 2x2 blocks cannot vanish
/// and 8-connected components keep their connectivity.
pub fn skeletonize(a: &BinaryMask) -> BinaryMask {
    let mut m = a.clone();
    let (w, h) = (m.width(), m.height());
    loop {
        let mut changed = false;
        for first in [true, false] {
            let mut marked = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !m.get(x, y) {
                        continue;
                    }
                    let n = ring(&m, x, y);
                    if !removable(&n) {
                        continue;
                    }
                    let [p2, _, p4, _, p6, _, p8, _] = n;
                    let ok = if first {
                        !(p2 && p4 && p6) && !(p4 && p6 && p8)
                    } else {
                        !(p2 && p4 && p8) && !(p2 && p6 && p8)
                    };
                    if ok {
                        marked.push((x, y));
                    }
                }
            }
            for (x, y) in marked {
                if removable(&ring(&m, x, y)) {
                    m.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return m;
        }
    }
}
