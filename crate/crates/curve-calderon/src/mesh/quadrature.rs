//! Integration on the mesh: plain (1,1)-form sums, border integrals, the
//! residue reduction of tube integrals, and principal values with
//! excision `{|B(ζ,z)| ≤ η}`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{b_value, CurveDef, CurvePoint, HomPoint, C64};

use super::{CurveMesh, NodeKind};

/// `∫_V f dA` for a field sampled on every node (border entries ignored).
pub fn integrate_11(mesh: &CurveMesh, values: &[C64]) -> C64 {
    mesh.interior.iter().map(|&i| values[i] * mesh.nodes[i].weight).sum()
}

/// `∫ ϑ f dA` over the interior and the collar.
pub fn integrate_cutoff(mesh: &CurveMesh, values: &[C64]) -> C64 {
    mesh.nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.kind != NodeKind::Boundary)
        .map(|(i, n)| values[i] * mesh.theta[i] * n.weight)
        .sum()
}

/// `∮_{bV} f dτ` with the periodic trapezoidal rule.
pub fn border_integral(mesh: &CurveMesh, values: &[C64]) -> C64 {
    mesh.boundary.iter().map(|&i| values[i] * mesh.nodes[i].dtau_ds * mesh.nodes[i].weight).sum()
}

/// Area of `{ζ ∈ V : |B(ζ,z)| < δ}`.
pub fn region_area(mesh: &CurveMesh, z: &HomPoint, delta: f64) -> f64 {
    mesh.interior
        .iter()
        .filter(|&&i| b_value(&mesh.nodes[i].point.z, z).norm() < delta)
        .map(|&i| mesh.nodes[i].weight)
        .sum()
}

/// The factor replacing `1/P` and one transverse direction when an
/// `ε`-tube integral around `V` is sent to `ε → 0`.
#[derive(Clone, Copy, Debug)]
pub struct ResidueReduction;

impl ResidueReduction {
    /// `2πi / ∂ₙP`, with `∂ₙ` the unit normal derivative (so `∂ₙP = |∇P|`).
    pub fn factor(&self, point: &CurvePoint) -> C64 {
        C64::new(0.0, 2.0 * PI / point.frame.grad_norm)
    }
}

/// Only simple poles along `V` reduce to a curve integral.
pub fn residue_reduce(pole_order: u32) -> Result<ResidueReduction> {
    if pole_order == 1 {
        Ok(ResidueReduction)
    } else {
        Err(Error::UnsupportedPole(pole_order))
    }
}

/// `∮ φ dη / P` over the loop `{|P| = ε}` in the complex normal line through
/// `base`, by the trapezoidal rule in the argument of `P`.
pub fn tube_loop_integral(
    curve: &CurveDef,
    base: &CurvePoint,
    eps: f64,
    samples: usize,
    phi: impl Fn(&[C64; 2]) -> C64,
) -> Result<C64> {
    let g = curve.affine_grad(&base.u);
    let gn = base.frame.grad_norm;
    let nrm = [g[0].conj() / gn, g[1].conj() / gn];
    let at = |eta: C64| [base.u[0] + eta * nrm[0], base.u[1] + eta * nrm[1]];
    let dnp = |u: &[C64; 2]| {
        let g = curve.affine_grad(u);
        g[0] * nrm[0] + g[1] * nrm[1]
    };
    let mut sum = C64::new(0.0, 0.0);
    let mut eta = C64::new(eps / gn, 0.0);
    for m in 0..samples {
        let target = C64::from_polar(eps, 2.0 * PI * m as f64 / samples as f64);
        for _ in 0..50 {
            let u = at(eta);
            let d = (curve.affine_p(&u) - target) / dnp(&u);
            eta -= d;
            if d.norm() <= 1e-15 * eps / gn {
                break;
            }
        }
        let u = at(eta);
        if (curve.affine_p(&u) - target).norm() > 1e-9 * eps {
            return Err(Error::Meshing("tube loop did not converge".into()));
        }
        // dη = i P dθ / ∂ₙP, so dη/P = i dθ / ∂ₙP
        sum += phi(&u) / dnp(&u);
    }
    Ok(sum * C64::new(0.0, 2.0 * PI / samples as f64))
}

#[derive(Clone, Debug)]
pub struct PvOptions {
    pub eta0: f64,
    pub floor: f64,
    pub max_levels: usize,
}

impl PvOptions {
    /// Halving schedule from `0.1` down to the resolution floor `4h²`.
    pub fn for_mesh(h: f64) -> PvOptions {
        PvOptions { eta0: 0.1, floor: 4.0 * h * h, max_levels: 24 }
    }

    pub fn etas(&self) -> Vec<f64> {
        let mut out = vec![self.eta0];
        while out.len() < self.max_levels {
            let next = out.last().unwrap() * 0.5;
            if next < self.floor {
                break;
            }
            out.push(next);
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct PvResult {
    pub value: C64,
    pub etas: Vec<f64>,
    pub partials: Vec<C64>,
    pub exponent: f64,
    pub tail_ratio: f64,
    pub diverged: bool,
}

/// Principal value `lim_{η→0} Σ_{|B(ζ,z)|>η} k(ζ) f(ζ) dA(ζ)` over the
/// nodes `support`, with `kernel` and `density` indexed like `support`.
///
/// The partial sums on the halving schedule are extrapolated by Richardson
/// with an exponent fitted from the shell masses of `|k|`. That exponent
/// depends only on the kernel, so the result is linear in the density.
/// The tail ratio of the actual partial sums is reported as a convergence
/// diagnostic; a ratio above 0.9 marks the row as diverged.
pub fn pv_integrate(
    mesh: &CurveMesh,
    z: &HomPoint,
    support: &[usize],
    kernel: &[C64],
    density: &[C64],
    opts: &PvOptions,
) -> PvResult {
    let etas = opts.etas();
    let bs: Vec<f64> = support.iter().map(|&i| b_value(&mesh.nodes[i].point.z, z).norm()).collect();
    let mut partials = Vec::with_capacity(etas.len());
    let mut mass = Vec::with_capacity(etas.len());
    for &eta in &etas {
        let mut s = C64::new(0.0, 0.0);
        let mut m = 0.0;
        for (k, &i) in support.iter().enumerate() {
            if bs[k] > eta {
                let w = mesh.nodes[i].weight;
                s += kernel[k] * density[k] * w;
                m += kernel[k].norm() * w;
            }
        }
        partials.push(s);
        mass.push(m);
    }
    let n = partials.len();
    if n < 3 {
        return PvResult {
            value: partials[n - 1],
            etas,
            partials,
            exponent: f64::NAN,
            tail_ratio: 0.0,
            diverged: false,
        };
    }
    let (d1, d2) = (mass[n - 2] - mass[n - 3], mass[n - 1] - mass[n - 2]);
    let exponent = if d1 > 0.0 && d2 > 0.0 { (d1 / d2).log2().clamp(0.5, 2.0) } else { 0.5 };
    let last = partials[n - 1] - partials[n - 2];
    let prev = partials[n - 2] - partials[n - 3];
    let scale = 1e-12 * (1.0 + partials[n - 1].norm());
    let tail_ratio = if prev.norm() > scale { last.norm() / prev.norm() } else { 0.0 };
    let diverged = tail_ratio > 0.9 && last.norm() > scale;
    let value = partials[n - 1] + last / (2f64.powf(exponent) - 1.0);
    PvResult { value, etas, partials, exponent, tail_ratio, diverged }
}
