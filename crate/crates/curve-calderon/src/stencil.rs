//! Least-squares derivative stencils in the local holomorphic chart.
//!
//! Around each node the field is fitted by the quadratic
//! `a₀ + a₁x + a₂x̄ + a₃x² + a₄xx̄ + a₅x̄²` in the scaled chart offset
//! `x = (ξ − ξ₀)/r`, `ξ = u_chart`. The fit splits the complex gradient into
//! its holomorphic and antiholomorphic parts directly. Lattice nodes use
//! their eight nearest lattice neighbours plus themselves; border nodes,
//! which carry no values of their own, are fitted from the twelve nearest
//! lattice nodes.
//!
//! Chart derivatives are converted to the unit frame by `dξ = T_chart dτ`.

use nalgebra::DMatrix;

use crate::geometry::C64;
use crate::mesh::spatial::SpatialHash;
use crate::mesh::{CurveMesh, NodeKind};

#[derive(Clone, Debug)]
pub struct Stencil {
    pub idx: Vec<usize>,
    pub value: Vec<C64>,
    /// `∂_τ`
    pub d: Vec<C64>,
    /// `∂_τ̄`
    pub dbar: Vec<C64>,
    /// `∂_τ∂_τ̄`
    pub ddbar: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct Stencils {
    pub rows: Vec<Stencil>,
}

pub const AREA_NEIGHBOURS: usize = 9;
pub const BORDER_NEIGHBOURS: usize = 12;

fn fit(center: C64, pts: &[C64]) -> Option<[Vec<C64>; 4]> {
    let r = pts.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if r == 0.0 {
        return None;
    }
    let m = DMatrix::from_fn(pts.len(), 6, |i, j| {
        let x = (pts[i] - center) / r;
        let xb = x.conj();
        match j {
            0 => C64::new(1.0, 0.0),
            1 => x,
            2 => xb,
            3 => x * x,
            4 => x * xb,
            _ => xb * xb,
        }
    });
    let pinv = m.svd(true, true).pseudo_inverse(1e-12).ok()?;
    let row = |k: usize, s: f64| (0..pts.len()).map(|j| pinv[(k, j)] * s).collect::<Vec<_>>();
    Some([row(0, 1.0), row(1, 1.0 / r), row(2, 1.0 / r), row(4, 1.0 / (r * r))])
}

pub fn build_stencils(mesh: &CurveMesh) -> Stencils {
    let area: Vec<usize> = mesh.area_nodes();
    let index = SpatialHash::new(mesh.h, area.iter().map(|&i| mesh.nodes[i].point.u));
    let rows = mesh
        .nodes
        .iter()
        .map(|node| {
            let k = if node.kind == NodeKind::Boundary { BORDER_NEIGHBOURS } else { AREA_NEIGHBOURS };
            let near = index.nearest(&node.point.u, k, |_| true);
            let idx: Vec<usize> = near.iter().map(|&(j, _)| area[j]).collect();
            let var = node.chart;
            let pts: Vec<C64> = idx.iter().map(|&j| mesh.nodes[j].point.u[var]).collect();
            let [value, dxi, dxib, lap] = fit(node.point.u[var], &pts).expect("degenerate stencil neighbourhood");
            let t = node.point.frame.tangent[var];
            let (tc, t2) = (t.conj(), t.norm_sqr());
            Stencil {
                idx,
                value,
                d: dxi.iter().map(|w| w * t).collect(),
                dbar: dxib.iter().map(|w| w * tc).collect(),
                ddbar: lap.iter().map(|w| w * t2).collect(),
            }
        })
        .collect();
    Stencils { rows }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Value,
    D,
    Dbar,
    DDbar,
}

impl Stencils {
    pub fn apply_at(&self, i: usize, op: Op, f: &[C64]) -> C64 {
        let s = &self.rows[i];
        let w = match op {
            Op::Value => &s.value,
            Op::D => &s.d,
            Op::Dbar => &s.dbar,
            Op::DDbar => &s.ddbar,
        };
        s.idx.iter().zip(w).map(|(&j, c)| c * f[j]).sum()
    }

    /// The operator applied at every node; `f` must be valid on lattice nodes.
    pub fn apply(&self, op: Op, f: &[C64]) -> Vec<C64> {
        (0..self.rows.len()).map(|i| self.apply_at(i, op, f)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{c, CurveDef};
    use crate::mesh::{build_mesh, MeshOptions};

    #[test]
    fn quadratics_are_differentiated_exactly() {
        let curve = CurveDef::graph_cubic(0.3, 0.05, 0.6).unwrap();
        let mesh = build_mesh(&curve, &MeshOptions::with_collar_cells(0.05, 5.0)).unwrap();
        let st = build_stencils(&mesh);
        // f = ξ² + 3ξ ξ̄ − 2i ξ̄ in the u₁ chart (the only chart on this mesh)
        let f: Vec<C64> = mesh
            .nodes
            .iter()
            .map(|n| {
                let x = n.point.u[0];
                x * x + 3.0 * x * x.conj() - c(0.0, 2.0) * x.conj()
            })
            .collect();
        for (i, n) in mesh.nodes.iter().enumerate() {
            assert_eq!(n.chart, 0, "{:?} {:?}", n.kind, n.point.u);
            let x = n.point.u[0];
            let t = n.point.frame.tangent[0];
            let dx = 2.0 * x + 3.0 * x.conj();
            let dxb = 3.0 * x - c(0.0, 2.0);
            assert!((st.apply_at(i, Op::Value, &f) - f_val(x)).norm() < 1e-9);
            assert!((st.apply_at(i, Op::D, &f) - t * dx).norm() < 1e-8);
            assert!((st.apply_at(i, Op::Dbar, &f) - t.conj() * dxb).norm() < 1e-8);
            assert!((st.apply_at(i, Op::DDbar, &f) - 3.0 * t.norm_sqr()).norm() < 1e-6);
        }
    }

    fn f_val(x: C64) -> C64 {
        x * x + 3.0 * x * x.conj() - c(0.0, 2.0) * x.conj()
    }
}
