//! Tracing of the border `bV = V ∩ {|u| = R}`.
//!
//! The border is a real curve inside the complex curve. Along it the
//! direction `a·T` with `a = i·w̄/|w|`, `w = Σ ūⱼTⱼ`, keeps `ϱ = |u|² − R²`
//! stationary and has `V` on its left. Points are corrected back onto
//! `{p = 0, ϱ = 0}` by alternating a Newton projection on `p` with a
//! tangential step on `ϱ`.

use crate::error::{Error, Result};
use crate::geometry::{CurveDef, CurvePoint, C64};

use super::spatial::SpatialHash;

#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    pub point: CurvePoint,
    /// Arclength from the start of the component.
    pub s: f64,
    /// `dτ/ds` in the frame coordinate at this point.
    pub dtau_ds: C64,
}

#[derive(Clone, Debug)]
pub struct BoundaryLoop {
    pub points: Vec<BoundaryPoint>,
    pub length: f64,
}

fn dist(a: &[C64; 2], b: &[C64; 2]) -> f64 {
    ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
}

/// Bring `u` onto `{p = 0, ϱ = 0}`.
pub fn correct(curve: &CurveDef, u: [C64; 2]) -> Option<[C64; 2]> {
    let r2 = curve.radius * curve.radius;
    let mut u = u;
    for _ in 0..60 {
        u = curve.project(u);
        let g = curve.affine_grad(&u);
        let gn = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
        if gn < 1e-8 {
            return None;
        }
        let t = [g[1] / gn, -g[0] / gn];
        let w = u[0].conj() * t[0] + u[1].conj() * t[1];
        if w.norm() < 1e-12 {
            return None;
        }
        let rho = curve.rho(&u);
        if rho.abs() <= 1e-14 * r2 && curve.affine_p(&u).norm() <= 1e-14 * (1.0 + gn) {
            return Some(u);
        }
        let step = -rho * w.conj() / (2.0 * w.norm_sqr());
        u = [u[0] + step * t[0], u[1] + step * t[1]];
    }
    let u = curve.project(u);
    (curve.rho(&u).abs() <= 1e-11 * r2).then_some(u)
}

/// Unit ambient direction of the oriented border at `u` and its frame
/// coordinate `dτ/ds`.
pub fn direction(curve: &CurveDef, u: &[C64; 2]) -> ([C64; 2], C64) {
    let g = curve.affine_grad(u);
    let gn = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    let t = [g[1] / gn, -g[0] / gn];
    let w = u[0].conj() * t[0] + u[1].conj() * t[1];
    let a = C64::i() * w.conj() / w.norm();
    ([a * t[0], a * t[1]], a)
}

fn advance(curve: &CurveDef, u: &[C64; 2], step: f64) -> Option<[C64; 2]> {
    let (d1, _) = direction(curve, u);
    let mid = correct(curve, [u[0] + 0.5 * step * d1[0], u[1] + 0.5 * step * d1[1]])?;
    let (d2, _) = direction(curve, &mid);
    correct(curve, [u[0] + step * d2[0], u[1] + step * d2[1]])
}

fn trace_from(curve: &CurveDef, start: [C64; 2], step: f64) -> Result<Vec<[C64; 2]>> {
    let max_steps = (400.0 * curve.radius.max(1.0) / step) as usize + 10_000;
    let mut pts = vec![start];
    let mut u = start;
    for k in 1..max_steps {
        u = advance(curve, &u, step)
            .ok_or_else(|| Error::Meshing("border tracing hit a singular or tangential point".into()))?;
        if k >= 4 && dist(&u, &start) <= step {
            pts.push(u);
            return Ok(pts);
        }
        pts.push(u);
    }
    Err(Error::Meshing("border trace did not close".into()))
}

/// Trace every border component reachable from `seeds` and resample each
/// uniformly in arclength with `ceil(L/h)` points.
pub fn trace_boundary(curve: &CurveDef, seeds: &[[C64; 2]], h: f64) -> Result<Vec<BoundaryLoop>> {
    let step = h / 8.0;
    let index = SpatialHash::new(h, seeds.iter().cloned());
    let mut used = vec![false; seeds.len()];
    let mut loops = Vec::new();
    for s in 0..seeds.len() {
        if used[s] {
            continue;
        }
        used[s] = true;
        let Some(start) = correct(curve, seeds[s]) else { continue };
        if dist(&start, &seeds[s]) > 4.0 * h {
            continue;
        }
        let fine = trace_from(curve, start, step)?;
        for p in &fine {
            for (j, _) in index.within(p, 2.0 * h) {
                used[j] = true;
            }
        }
        // cumulative chord length, closing back to the start
        let mut cum = vec![0.0];
        for k in 1..=fine.len() {
            let d = dist(&fine[k - 1], &fine[k % fine.len()]);
            cum.push(cum[k - 1] + d);
        }
        let length = *cum.last().unwrap();
        let n = ((length / h).ceil() as usize).max(16);
        let mut points = Vec::with_capacity(n);
        let mut seg = 0;
        for m in 0..n {
            let target = m as f64 * length / n as f64;
            while cum[seg + 1] < target {
                seg += 1;
            }
            let (a, b) = (fine[seg], fine[(seg + 1) % fine.len()]);
            let t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]).max(1e-300);
            let guess = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let u = correct(curve, guess).ok_or_else(|| Error::Meshing("border resampling failed".into()))?;
            let (_, dtau_ds) = direction(curve, &u);
            points.push(BoundaryPoint { point: CurvePoint::new(curve, u)?, s: target, dtau_ds });
        }
        loops.push(BoundaryLoop { points, length });
    }
    Ok(loops)
}
