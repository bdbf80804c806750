//! Uniform hash grid over affine coordinates `(u₁, u₂) ∈ ℂ² ≅ ℝ⁴` for
//! nearest-neighbour queries on curve nodes.

use std::collections::HashMap;

use crate::geometry::C64;

pub struct SpatialHash {
    cell: f64,
    buckets: HashMap<[i32; 4], Vec<usize>>,
    points: Vec<[f64; 4]>,
    max_reach: i32,
}

#[inline]
fn to_r4(u: &[C64; 2]) -> [f64; 4] {
    [u[0].re, u[0].im, u[1].re, u[1].im]
}

#[inline]
fn dist2(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum()
}

impl SpatialHash {
    /// Index the given points; query results refer to their positions.
    pub fn new(cell: f64, points: impl IntoIterator<Item = [C64; 2]>) -> SpatialHash {
        let mut s = SpatialHash { cell, buckets: HashMap::new(), points: Vec::new(), max_reach: 1 };
        let (mut lo, mut hi) = ([i32::MAX; 4], [i32::MIN; 4]);
        for u in points {
            let p = to_r4(&u);
            let key = s.key(&p);
            for k in 0..4 {
                lo[k] = lo[k].min(key[k]);
                hi[k] = hi[k].max(key[k]);
            }
            s.buckets.entry(key).or_default().push(s.points.len());
            s.points.push(p);
        }
        s.max_reach = (0..4).map(|k| hi[k].saturating_sub(lo[k])).max().unwrap_or(0).max(0) + 1;
        s
    }

    fn key(&self, p: &[f64; 4]) -> [i32; 4] {
        p.map(|x| (x / self.cell).floor() as i32)
    }

    fn visit_cube(&self, center: [i32; 4], m: i32, mut f: impl FnMut(usize)) {
        for a in -m..=m {
            for b in -m..=m {
                for cc in -m..=m {
                    for d in -m..=m {
                        let key = [center[0] + a, center[1] + b, center[2] + cc, center[3] + d];
                        if let Some(v) = self.buckets.get(&key) {
                            for &i in v {
                                f(i);
                            }
                        }
                    }
                }
            }
        }
    }

    /// The `k` nearest indexed points to `u` accepted by `filter`, sorted by
    /// distance (ties broken by index). Returns fewer when the index is small.
    pub fn nearest(&self, u: &[C64; 2], k: usize, filter: impl Fn(usize) -> bool) -> Vec<(usize, f64)> {
        let p = to_r4(u);
        let center = self.key(&p);
        let mut m = 1;
        loop {
            if m > 6 {
                // sparse neighbourhood: a linear scan is cheaper than a huge cube
                let mut all: Vec<(usize, f64)> = (0..self.points.len())
                    .filter(|&i| filter(i))
                    .map(|i| (i, dist2(&p, &self.points[i]).sqrt()))
                    .collect();
                all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                all.truncate(k);
                return all;
            }
            let mut found: Vec<(usize, f64)> = Vec::new();
            self.visit_cube(center, m, |i| {
                if filter(i) {
                    found.push((i, dist2(&p, &self.points[i]).sqrt()));
                }
            });
            found.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let reach = m as f64 * self.cell;
            let done = found.len() >= k && found[k - 1].1 <= reach;
            if done || m >= self.max_reach + 1 {
                found.truncate(k);
                return found;
            }
            m += 1;
        }
    }

    /// All indexed points within `radius` of `u`.
    pub fn within(&self, u: &[C64; 2], radius: f64) -> Vec<(usize, f64)> {
        let p = to_r4(u);
        let m = (radius / self.cell).ceil() as i32;
        let mut out = Vec::new();
        self.visit_cube(self.key(&p), m, |i| {
            let d = dist2(&p, &self.points[i]).sqrt();
            if d <= radius {
                out.push((i, d));
            }
        });
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}
