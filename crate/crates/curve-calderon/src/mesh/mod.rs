//! Quadrature nodes on the bordered curve.
//!
//! The curve is covered by two lattices. Patch 0 is a square lattice of step
//! `h` in `u₁` carrying every sheet `u₂(u₁)`; it owns the part where
//! `|p_{u₁}| ≤ |p_{u₂}|`. Patch 1 is the mirror image in `u₂`. Each lattice
//! cell is clipped against linear approximations of the patch interface and
//! of the level sets `|u| = R` (the border of `V`) and `|u| = R + collar`;
//! every non-empty piece becomes one node at its centroid with weight
//! `area · |∇p|² / |p_η|²` (the Jacobian of the graph over the chart).
//! Pieces smaller than `merge_fraction · h²` are absorbed by their nearest
//! full-size neighbour of the same kind.
//!
//! The border `bV` is traced separately (see [`boundary`]) and sampled
//! uniformly in arclength, so closed-curve integrals use the periodic
//! trapezoidal rule.

pub mod boundary;
pub mod quadrature;
pub mod spatial;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{c, CurveDef, CurvePoint, C64};
use crate::kernel::Cutoff;
use spatial::SpatialHash;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Collar,
    Boundary,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub point: CurvePoint,
    pub kind: NodeKind,
    /// 0: `u₁`-lattice, 1: `u₂`-lattice, 2: border.
    pub patch: u8,
    /// Affine coordinate used as holomorphic chart for stencils.
    pub chart: usize,
    /// Area (lattice nodes) or arclength (border nodes).
    pub weight: f64,
    /// Ordering parameter: lattice scan position or border arclength.
    pub param: f64,
    pub component: usize,
    /// `dτ/ds` along the oriented border (zero off the border).
    pub dtau_ds: C64,
}

#[derive(Clone, Debug)]
pub struct MeshOptions {
    pub h: f64,
    /// Width (in `|u|`) of the collar grown outside `bV`; 0 for none.
    pub collar: f64,
    pub merge_fraction: f64,
}

impl MeshOptions {
    pub fn new(h: f64) -> MeshOptions {
        MeshOptions { h, collar: 0.0, merge_fraction: 0.15 }
    }

    pub fn with_collar_cells(h: f64, cells: f64) -> MeshOptions {
        MeshOptions { h, collar: cells * h, merge_fraction: 0.15 }
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryComponent {
    /// Node indices in arclength order.
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(Clone, Debug)]
pub struct CurveMesh {
    pub h: f64,
    pub radius: f64,
    pub collar: f64,
    pub nodes: Vec<Node>,
    pub interior: Vec<usize>,
    pub collar_nodes: Vec<usize>,
    pub boundary: Vec<usize>,
    pub components: Vec<BoundaryComponent>,
    /// Smooth cutoff `ϑ`: 1 on `V̄`, decaying to 0 across the collar.
    pub theta: Vec<f64>,
    /// Signed distance to the nearest border node (negative in the collar).
    pub depth: Vec<f64>,
}

struct Piece {
    u: [C64; 2],
    var: usize,
    weight: f64,
    frac: f64,
    kind: NodeKind,
}

type Poly = Vec<(f64, f64)>;

/// Least-squares plane through the four corner values, as `a + b x + c y`
/// on the unit cell with corners ordered (0,0), (1,0), (1,1), (0,1).
fn corner_plane(v: &[f64; 4]) -> [f64; 3] {
    let mean = 0.25 * (v[0] + v[1] + v[2] + v[3]);
    let b = 0.5 * ((v[1] - v[0]) + (v[2] - v[3]));
    let cc = 0.5 * ((v[3] - v[0]) + (v[2] - v[1]));
    [mean - 0.5 * b - 0.5 * cc, b, cc]
}

/// Keep the part of the polygon where `a + b x + c y ≤ 0`.
fn clip(poly: &Poly, plane: [f64; 3]) -> Poly {
    let f = |p: &(f64, f64)| plane[0] + plane[1] * p.0 + plane[2] * p.1;
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (f(&a), f(&b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa <= 0.0) != (fb <= 0.0) {
            let t = fa / (fa - fb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// Clip against a corner-sampled level function, avoiding spurious cuts when
/// all corners agree in sign.
fn clip_level(poly: &Poly, corners: &[f64; 4]) -> Poly {
    let lo = corners.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= 0.0 {
        poly.clone()
    } else if lo > 0.0 {
        Vec::new()
    } else {
        clip(poly, corner_plane(corners))
    }
}

fn area_centroid(poly: &Poly) -> (f64, (f64, f64)) {
    if poly.len() < 3 {
        return (0.0, (0.0, 0.0));
    }
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        let cr = x0 * y1 - x1 * y0;
        a += cr;
        cx += (x0 + x1) * cr;
        cy += (y0 + y1) * cr;
    }
    a *= 0.5;
    if a.abs() < 1e-300 {
        return (0.0, (0.0, 0.0));
    }
    (a.abs(), (cx / (6.0 * a), cy / (6.0 * a)))
}

#[inline]
fn compose(var: usize, xi: C64, eta: C64) -> [C64; 2] {
    if var == 0 {
        [xi, eta]
    } else {
        [eta, xi]
    }
}

#[inline]
fn norm2(u: &[C64; 2]) -> f64 {
    (u[0].norm_sqr() + u[1].norm_sqr()).sqrt()
}

/// Signed patch indicator, `≤ 0` on the part owned by lattice `var`.
fn patch_level(curve: &CurveDef, var: usize, u: &[C64; 2]) -> f64 {
    let g = curve.affine_grad(u);
    let (a, b) = (g[var].norm_sqr(), g[1 - var].norm_sqr());
    (a - b) / (a + b).max(1e-300)
}

fn scan_patch(
    curve: &CurveDef,
    var: usize,
    opts: &MeshOptions,
    pieces: &mut Vec<Piece>,
    seeds: &mut Vec<[C64; 2]>,
) {
    let h = opts.h;
    let r_in = curve.radius;
    let r_out = curve.radius + opts.collar;
    let n = ((r_out + 2.0 * h) / h).ceil() as i64;
    let offs = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    for i in -n..n {
        for j in -n..n {
            let x0 = i as f64 * h;
            let y0 = j as f64 * h;
            let xc = c(x0 + 0.5 * h, y0 + 0.5 * h);
            if xc.norm() > r_out + 2.0 * h {
                continue;
            }
            for eta_c in curve.sheets(var, xc) {
                let uc = compose(var, xc, eta_c);
                let g = curve.affine_grad(&uc);
                let slope = g[var].norm() / g[1 - var].norm().max(1e-300);
                if norm2(&uc) - r_out > 2.0 * h * (1.0 + slope) {
                    continue;
                }
                if patch_level(curve, var, &uc) > 0.5 {
                    // deep inside the other lattice's territory
                    continue;
                }
                let mut corners_u = [[C64::new(0.0, 0.0); 2]; 4];
                let mut jumped = false;
                for (k, (dx, dy)) in offs.iter().enumerate() {
                    let xi = c(x0 + dx * h, y0 + dy * h);
                    let eta = curve.refine_sheet(var, xi, eta_c);
                    if (eta - eta_c).norm() > 4.0 * h * (1.0 + slope) || !eta.re.is_finite() {
                        jumped = true;
                    }
                    corners_u[k] = compose(var, xi, eta);
                }
                if jumped {
                    continue;
                }
                let psi: [f64; 4] = std::array::from_fn(|k| patch_level(curve, var, &corners_u[k]));
                let phi_out: [f64; 4] = std::array::from_fn(|k| norm2(&corners_u[k]) - r_out);
                let phi_in: [f64; 4] = std::array::from_fn(|k| norm2(&corners_u[k]) - r_in);
                let square: Poly = offs.to_vec();
                let mut region = clip_level(&square, &psi);
                if var == 1 {
                    // ties on the interface belong to lattice 0
                    region = clip_level(&region, &psi.map(|v| if v == 0.0 { 1e-300 } else { v }));
                }
                region = clip_level(&region, &phi_out);
                if region.len() < 3 {
                    continue;
                }
                let lo = phi_in.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = phi_in.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if lo <= 0.0 && hi > 0.0 && psi.iter().any(|v| *v <= 0.0) {
                    seeds.push(uc);
                }
                let parts: Vec<(Poly, NodeKind)> = if opts.collar > 0.0 {
                    vec![
                        (clip_level(&region, &phi_in), NodeKind::Interior),
                        (clip_level(&region, &phi_in.map(|v| -v)), NodeKind::Collar),
                    ]
                } else {
                    vec![(region, NodeKind::Interior)]
                };
                for (poly, kind) in parts {
                    let (area, (cx, cy)) = area_centroid(&poly);
                    if area < 1e-12 {
                        continue;
                    }
                    let xi = c(x0 + cx * h, y0 + cy * h);
                    let eta = curve.refine_sheet(var, xi, eta_c);
                    let u = compose(var, xi, eta);
                    let g = curve.affine_grad(&u);
                    let jac = (g[0].norm_sqr() + g[1].norm_sqr()) / g[1 - var].norm_sqr();
                    pieces.push(Piece { u, var, weight: area * h * h * jac, frac: area, kind });
                }
            }
        }
    }
}

pub fn build_mesh(curve: &CurveDef, opts: &MeshOptions) -> Result<CurveMesh> {
    if !(opts.h > 0.0 && opts.h.is_finite()) {
        return Err(Error::Meshing(format!("resolution h = {} must be positive", opts.h)));
    }
    let h = opts.h;
    let mut pieces = Vec::new();
    let mut seeds = Vec::new();
    scan_patch(curve, 0, opts, &mut pieces, &mut seeds);
    scan_patch(curve, 1, opts, &mut pieces, &mut seeds);
    if pieces.is_empty() {
        return Err(Error::Meshing(format!(
            "no curve points inside |u| < {} at h = {h}",
            curve.radius
        )));
    }

    // absorb slivers into the nearest full-size node of the same kind
    let big: Vec<usize> = (0..pieces.len()).filter(|&k| pieces[k].frac >= opts.merge_fraction).collect();
    let index = SpatialHash::new(h, big.iter().map(|&k| pieces[k].u));
    let mut keep = vec![true; pieces.len()];
    for k in 0..pieces.len() {
        if pieces[k].frac >= opts.merge_fraction {
            continue;
        }
        let kind = pieces[k].kind;
        let near = index.nearest(&pieces[k].u, 1, |b| pieces[big[b]].kind == kind);
        if let Some(&(b, d)) = near.first() {
            if d <= 3.0 * h {
                let w = pieces[k].weight;
                pieces[big[b]].weight += w;
                keep[k] = false;
            }
        }
    }

    let mut nodes = Vec::new();
    for (k, p) in pieces.iter().enumerate() {
        if !keep[k] {
            continue;
        }
        let point = CurvePoint::new(curve, p.u)?;
        if curve.affine_p(&p.u).norm() > curve.tolerance {
            return Err(Error::Meshing(format!("node off the curve: |p| = {:e}", curve.affine_p(&p.u).norm())));
        }
        nodes.push(Node {
            point,
            kind: p.kind,
            patch: p.var as u8,
            chart: p.var,
            weight: p.weight,
            param: nodes.len() as f64,
            component: 0,
            dtau_ds: C64::new(0.0, 0.0),
        });
    }

    let loops = boundary::trace_boundary(curve, &seeds, h)?;
    let mut components = Vec::new();
    for (ci, lp) in loops.iter().enumerate() {
        let mut ids = Vec::new();
        let wgt = lp.length / lp.points.len() as f64;
        for bp in &lp.points {
            let t = bp.point.frame.tangent;
            ids.push(nodes.len());
            nodes.push(Node {
                point: bp.point,
                kind: NodeKind::Boundary,
                patch: 2,
                chart: if t[0].norm() >= t[1].norm() { 0 } else { 1 },
                weight: wgt,
                param: bp.s,
                component: ci,
                dtau_ds: bp.dtau_ds,
            });
        }
        components.push(BoundaryComponent { nodes: ids, length: lp.length });
    }

    let cut = if opts.collar > 0.0 { Some(Cutoff::new(0.4 * opts.collar, 0.85 * opts.collar)) } else { None };
    let theta = nodes
        .iter()
        .map(|n| match (n.kind, cut) {
            (NodeKind::Collar, Some(cf)) => cf.value(norm2(&n.point.u) - curve.radius),
            (NodeKind::Collar, None) => 0.0,
            _ => 1.0,
        })
        .collect();
    let pick = |k: NodeKind| (0..nodes.len()).filter(|&i| nodes[i].kind == k).collect::<Vec<_>>();
    let border = pick(NodeKind::Boundary);
    let bindex = SpatialHash::new(h, border.iter().map(|&i| nodes[i].point.u));
    let depth = nodes
        .iter()
        .map(|n| {
            let d = bindex.nearest(&n.point.u, 1, |_| true).first().map_or(f64::INFINITY, |x| x.1);
            match n.kind {
                NodeKind::Interior => d,
                NodeKind::Collar => -d,
                NodeKind::Boundary => 0.0,
            }
        })
        .collect();
    Ok(CurveMesh {
        h,
        radius: curve.radius,
        collar: opts.collar,
        interior: pick(NodeKind::Interior),
        collar_nodes: pick(NodeKind::Collar),
        boundary: border,
        nodes,
        components,
        theta,
        depth,
    })
}

impl CurveMesh {
    /// Lattice nodes (interior and collar) in index order.
    pub fn area_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind != NodeKind::Boundary).collect()
    }

    /// Interior nodes at distance at least `dist` from the border.
    pub fn interior_margin(&self, dist: f64) -> Vec<usize> {
        self.interior.iter().cloned().filter(|&i| self.depth[i] >= dist).collect()
    }

    pub fn area(&self) -> f64 {
        self.interior.iter().map(|&i| self.nodes[i].weight).sum()
    }

    #[inline]
    pub fn depth(&self, i: usize) -> f64 {
        self.depth[i]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        w.write_record([
            "node_id", "patch_id", "re_z0", "im_z0", "re_z1", "im_z1", "re_z2", "im_z2", "re_u1", "im_u1",
            "re_u2", "im_u2", "weight", "is_boundary",
        ])
        .map_err(|e| Error::Io(e.into()))?;
        for (i, n) in self.nodes.iter().enumerate() {
            let z = n.point.z.0;
            let u = n.point.u;
            let rec = [
                i.to_string(),
                n.patch.to_string(),
                fmt17(z[0].re),
                fmt17(z[0].im),
                fmt17(z[1].re),
                fmt17(z[1].im),
                fmt17(z[2].re),
                fmt17(z[2].im),
                fmt17(u[0].re),
                fmt17(u[0].im),
                fmt17(u[1].re),
                fmt17(u[1].im),
                fmt17(n.weight),
                (n.kind == NodeKind::Boundary).to_string(),
            ];
            w.write_record(&rec).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fixed 17-significant-digit formatting used by every artifact.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "nan".to_string()
    }
}

/// Per-node complex field as CSV `(node_id, re, im)`.
pub fn write_field_csv(path: &Path, ids: &[usize], values: &[C64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "node_id,re,im")?;
    for (i, v) in ids.iter().zip(values) {
        writeln!(f, "{},{},{}", i, fmt17(v.re), fmt17(v.im))?;
    }
    f.flush()?;
    Ok(())
}
