//! The CGO forward problem.
//!
//! For a conductivity `σ` the potential is `q = ∂∂̄√σ / √σ`, stored as the
//! coefficient `c` of `dτ ∧ dτ̄`. The CGO solution `f = e^{φ} μ`,
//! `φ = λ(u₁ + u₂)`, solves `∂∂̄ f = q f` when
//!
//! ```text
//!   μ = 1 + R μ,
//!   (R μ)(z) = E(z) ∫ k̄(z,ζ) Ē(ζ) ϑ(ζ) v(ζ) dA(ζ),
//!   v(ζ)     = ∫ k(ζ,w) ⟨T_ζ, T_w⟩ c(w) μ(w) dA(w),
//! ```
//!
//! with `E = exp(φ̄ − φ)`. The inner integral inverts `∂̄` on (1,0)-forms,
//! the outer one inverts `∂` on functions; together they give
//! `∂μ + φ′(μ − 1) = ϑ v` and hence `∂∂̄μ + φ′∂̄μ = c μ` where `ϑ = 1`.
//! Both integrals are discretized by the Nyström rule that omits the
//! coincident node.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{c, phase, CurveDef, C64};
use crate::kernel::{cauchy_leray, exp_factor};
use crate::linalg::{condition_estimate, vnorm_inf, CMat, Lu};
use crate::mesh::CurveMesh;
use crate::stencil::{Op, Stencils};

pub const SIGMA_FLOOR: f64 = 0.1;

/// Polynomial bump `(1 − s²)⁴` on `s < 1` (C³ across `s = 1`), with its first
/// two derivatives in `s`.
fn bump(s: f64) -> (f64, f64, f64) {
    if s >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - s * s;
    (w.powi(4), -8.0 * s * w.powi(3), -8.0 * w.powi(3) + 48.0 * s * s * w * w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    /// Centre in the affine coordinate `u₁`.
    pub center: [f64; 2],
    pub radius: f64,
}

/// Conductivity presets: `σ = 1 + Σ aₖ β(|u₁ − cₖ|/ρₖ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma {
    pub name: String,
    pub bumps: Vec<BumpSpec>,
}

impl Sigma {
    pub fn identity() -> Sigma {
        Sigma { name: "identity".into(), bumps: Vec::new() }
    }

    pub fn bump(amplitude: f64, radius: f64) -> Sigma {
        Sigma { name: "bump".into(), bumps: vec![BumpSpec { amplitude, center: [0.0, 0.0], radius }] }
    }

    pub fn two_bumps(amplitude: f64, radius: f64, offset: f64) -> Sigma {
        Sigma {
            name: "two-bumps".into(),
            bumps: vec![
                BumpSpec { amplitude, center: [-offset, 0.0], radius },
                BumpSpec { amplitude: -0.5 * amplitude, center: [offset, 0.0], radius },
            ],
        }
    }

    pub fn preset(name: &str, amplitude: f64, radius: f64) -> Result<Sigma> {
        match name {
            "identity" => Ok(Sigma::identity()),
            "bump" => Ok(Sigma::bump(amplitude, radius)),
            "two-bumps" => Ok(Sigma::two_bumps(amplitude, 0.55 * radius, 0.45 * radius)),
            other => Err(Error::Config(format!("unknown sigma preset '{other}'"))),
        }
    }

    /// `(F, ∂_ξ̄F, ∂_ξ∂_ξ̄F)` for `F = σ` as a function of `ξ = u₁`.
    fn jet(&self, xi: C64) -> (f64, C64, f64) {
        let mut f = 1.0;
        let mut dbar = C64::new(0.0, 0.0);
        let mut lap4 = 0.0;
        for b in &self.bumps {
            let d = xi - c(b.center[0], b.center[1]);
            let r = d.norm();
            let s = r / b.radius;
            let (v, v1, v2) = bump(s);
            f += b.amplitude * v;
            if s < 1.0 {
                if r > 0.0 {
                    dbar += b.amplitude * v1 / b.radius * d / (2.0 * r);
                    lap4 += b.amplitude * 0.25 * (v2 / (b.radius * b.radius) + v1 / (b.radius * r));
                } else {
                    lap4 += b.amplitude * 0.5 * v2 / (b.radius * b.radius);
                }
            }
        }
        (f, dbar, lap4)
    }

    pub fn value(&self, u: &[C64; 2]) -> f64 {
        self.jet(u[0]).0
    }

    /// Exact `q = ∂_τ∂_τ̄√σ / √σ` at a point with unit tangent `t`.
    pub fn q_exact(&self, u: &[C64; 2], t: &[C64; 2]) -> C64 {
        let (f, fb, lap) = self.jet(u[0]);
        let s = f.sqrt();
        let dd = lap / (2.0 * s) - fb.norm_sqr() / (4.0 * s * s * s);
        C64::new(t[0].norm_sqr() * dd / s, 0.0)
    }

    pub fn on_mesh(&self, mesh: &CurveMesh) -> Vec<f64> {
        mesh.nodes.iter().map(|n| self.value(&n.point.u)).collect()
    }

    /// Floor and border-margin checks; returns the exact potential per node.
    pub fn potential(&self, mesh: &CurveMesh) -> Result<Vec<C64>> {
        let margin = 3.0 * mesh.h;
        let mut q = Vec::with_capacity(mesh.nodes.len());
        let mut min_sigma = f64::INFINITY;
        for (i, n) in mesh.nodes.iter().enumerate() {
            let s = self.value(&n.point.u);
            min_sigma = min_sigma.min(s);
            if mesh.depth(i) < margin && (s - 1.0).abs() > 1e-14 {
                return Err(Error::Config(format!(
                    "sigma '{}' is not identically 1 within 3h of the border (node {i})",
                    self.name
                )));
            }
            q.push(if mesh.depth(i) < margin { C64::new(0.0, 0.0) } else { self.q_exact(&n.point.u, &n.point.frame.tangent) });
        }
        if min_sigma < SIGMA_FLOOR {
            return Err(Error::SigmaBelowFloor(min_sigma));
        }
        Ok(q)
    }
}

/// `q = ∂∂̄√σ/√σ` by the discrete stencils, zeroed within `3h` of `bV`.
pub fn sigma_to_q(mesh: &CurveMesh, stencils: &Stencils, sigma: &[f64]) -> Result<Vec<C64>> {
    let min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < SIGMA_FLOOR {
        return Err(Error::SigmaBelowFloor(min));
    }
    let root: Vec<C64> = sigma.iter().map(|s| C64::new(s.sqrt(), 0.0)).collect();
    let margin = 3.0 * mesh.h;
    Ok((0..mesh.nodes.len())
        .map(|i| {
            if mesh.nodes[i].kind == crate::mesh::NodeKind::Boundary || mesh.depth(i) < margin {
                C64::new(0.0, 0.0)
            } else {
                stencils.apply_at(i, Op::DDbar, &root) / root[i]
            }
        })
        .collect())
}

/// `φ′` in the unit frame: `∂_τ φ = λ (T₁ + T₂)`.
#[inline]
pub fn phase_derivative(lambda: C64, t: &[C64; 2]) -> C64 {
    lambda * (t[0] + t[1])
}

/// Dense `k(zᵢ, zⱼ)` over the given nodes, zero on the diagonal.
pub fn kernel_matrix(curve: &CurveDef, mesh: &CurveMesh, targets: &[usize], sources: &[usize]) -> CMat {
    CMat::from_fn(targets.len(), sources.len(), |a, b| {
        let (i, j) = (targets[a], sources[b]);
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            cauchy_leray(curve, &mesh.nodes[i].point, &mesh.nodes[j].point)
        }
    })
}

/// `R` restricted to the support of `q` as columns, all lattice nodes as rows,
/// plus the inner `∂̄`-inverse rows needed for `∂h`.
#[derive(Clone, Debug)]
pub struct ROperator {
    pub lambda: C64,
    /// Lattice nodes (rows of `r_all` and `inner`).
    pub targets: Vec<usize>,
    /// Nodes where `q ≠ 0` (columns).
    pub support: Vec<usize>,
    /// Row of each support node inside `targets`.
    pub support_rows: Vec<usize>,
    pub r_all: CMat,
    /// `v = inner · μ_support`.
    pub inner: CMat,
}

pub fn assemble_r(curve: &CurveDef, mesh: &CurveMesh, lambda: C64, q: &[C64]) -> Result<ROperator> {
    let targets = mesh.area_nodes();
    let support: Vec<usize> = targets.iter().cloned().filter(|&i| q[i] != C64::new(0.0, 0.0)).collect();
    let support_rows: Vec<usize> =
        support.iter().map(|s| targets.binary_search(s).expect("support is a subset of the lattice")).collect();
    if support.is_empty() {
        return Ok(ROperator {
            lambda,
            targets: targets.clone(),
            support,
            support_rows,
            r_all: CMat::zeros(targets.len(), 0),
            inner: CMat::zeros(targets.len(), 0),
        });
    }
    let kk = kernel_matrix(curve, mesh, &targets, &targets);
    let nt = targets.len();
    // inner: k(ζ,w)⟨T_ζ,T_w⟩ c(w) A_w, ζ over all lattice nodes
    let mut inner = CMat::from_fn(nt, support.len(), |a, b| {
        let (zi, wi) = (targets[a], support[b]);
        let (zp, wp) = (&mesh.nodes[zi].point, &mesh.nodes[wi].point);
        kk.at(a, support_rows[b]) * zp.tangent_pairing(wp)
    });
    let cw: Vec<C64> = support.iter().map(|&w| q[w] * mesh.nodes[w].weight).collect();
    inner.scale_cols(&cw);
    let mut mid = inner.clone();
    let row_scale: Vec<C64> = targets
        .iter()
        .map(|&z| exp_factor(lambda, &mesh.nodes[z].point.u).conj() * mesh.theta[z] * mesh.nodes[z].weight)
        .collect();
    mid.scale_rows(&row_scale);
    let mut outer = kk;
    outer.data.iter_mut().for_each(|x| *x = x.conj());
    let mut r_all = outer.matmul(&mid);
    let e: Vec<C64> = targets.iter().map(|&z| exp_factor(lambda, &mesh.nodes[z].point.u)).collect();
    r_all.scale_rows(&e);
    if r_all.data.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        let bad: Vec<usize> = (0..nt)
            .filter(|&a| r_all.row(a).iter().any(|x| !x.re.is_finite() || !x.im.is_finite()))
            .map(|a| targets[a])
            .collect();
        return Err(Error::PvDivergence(bad));
    }
    Ok(ROperator { lambda, targets, support, support_rows, r_all, inner })
}

impl ROperator {
    /// `R` acting on `μ` over its own support.
    pub fn r_support(&self) -> CMat {
        let cols: Vec<usize> = (0..self.support.len()).collect();
        self.r_all.select(&self.support_rows, &cols)
    }

    /// Max absolute row sum of `R` on the support (0 for `q = 0`).
    pub fn norm_estimate(&self) -> f64 {
        if self.support.is_empty() {
            0.0
        } else {
            self.r_support().norm_inf()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum SolveMethod {
    Trivial,
    Neumann { terms: usize },
    Direct { condition: f64 },
}

#[derive(Clone, Debug)]
pub struct MuSolution {
    /// `μ` on the support nodes.
    pub mu_support: Vec<C64>,
    pub method: SolveMethod,
    pub residual_inf: f64,
    pub norm_estimate: f64,
}

pub fn neumann(r: &CMat, max_terms: usize) -> Option<(Vec<C64>, usize)> {
    let n = r.rows;
    let one = vec![C64::new(1.0, 0.0); n];
    let mut mu = one.clone();
    let mut term = one;
    for k in 1..=max_terms {
        term = r.mul_vec(&term);
        for (m, t) in mu.iter_mut().zip(&term) {
            *m += t;
        }
        if vnorm_inf(&term) <= 1e-15 * vnorm_inf(&mu) {
            return Some((mu, k));
        }
    }
    None
}

pub fn direct(r: &CMat) -> Result<(Vec<C64>, f64)> {
    let n = r.rows;
    let mut a = CMat::identity(n);
    for (x, y) in a.data.iter_mut().zip(&r.data) {
        *x -= y;
    }
    let lu = Lu::factor(&a);
    let cond = condition_estimate(&a, &lu);
    if !(cond <= 1e12) {
        return Err(Error::IllConditioned(cond));
    }
    Ok((lu.solve(&vec![C64::new(1.0, 0.0); n]), cond))
}

/// Solve `(I − R) μ = 1` on the support: Neumann series when the norm
/// estimate is below 0.9, dense LU otherwise.
pub fn solve_mu(op: &ROperator) -> Result<MuSolution> {
    if op.support.is_empty() {
        return Ok(MuSolution { mu_support: Vec::new(), method: SolveMethod::Trivial, residual_inf: 0.0, norm_estimate: 0.0 });
    }
    let r = op.r_support();
    let norm = r.norm_inf();
    let (mu, method) = match (norm < 0.9).then(|| neumann(&r, 2000)).flatten() {
        Some((mu, terms)) => (mu, SolveMethod::Neumann { terms }),
        None => {
            let (mu, condition) = direct(&r)?;
            (mu, SolveMethod::Direct { condition })
        }
    };
    let rmu = r.mul_vec(&mu);
    let residual_inf = mu.iter().zip(&rmu).map(|(m, x)| (m - x - 1.0).norm()).fold(0.0, f64::max);
    Ok(MuSolution { mu_support: mu, method, residual_inf, norm_estimate: norm })
}

#[derive(Clone, Debug)]
pub struct CgoSolution {
    pub lambda: C64,
    pub mu: Vec<C64>,
    pub f: Vec<C64>,
    pub h: Vec<C64>,
    /// `∂h` coefficient in the unit frame.
    pub dh: Vec<C64>,
    /// `∂̄f` coefficient in the unit frame.
    pub dbar_f: Vec<C64>,
}

/// Fields of the CGO solution on every node. Lattice values come from the
/// Nyström interpolant; border values from the stencil fit. `∂h` uses the
/// identity `∂h = Ē(ϑv + φ′)`, `∂̄f = e^{φ}∂̄μ` the stencils.
pub fn cgo_fields(mesh: &CurveMesh, stencils: &Stencils, op: &ROperator, sol: &MuSolution) -> CgoSolution {
    let n = mesh.nodes.len();
    let lambda = op.lambda;
    let mut mu = vec![C64::new(1.0, 0.0); n];
    let mut v = vec![C64::new(0.0, 0.0); n];
    if !op.support.is_empty() {
        let rm = op.r_all.mul_vec(&sol.mu_support);
        let vv = op.inner.mul_vec(&sol.mu_support);
        for (a, &t) in op.targets.iter().enumerate() {
            mu[t] += rm[a];
            v[t] = vv[a];
        }
    }
    let mut dh: Vec<C64> = (0..n)
        .map(|i| {
            let p = &mesh.nodes[i].point;
            exp_factor(lambda, &p.u).conj() * (mesh.theta[i] * v[i] + phase_derivative(lambda, &p.frame.tangent))
        })
        .collect();
    for &b in &mesh.boundary {
        mu[b] = stencils.apply_at(b, Op::Value, &mu);
    }
    // border values of ∂h: fit the smooth factor E·∂h − φ′ = ϑv
    let inner_part: Vec<C64> = (0..n).map(|i| mesh.theta[i] * v[i]).collect();
    for &b in &mesh.boundary {
        let p = &mesh.nodes[b].point;
        let vb = stencils.apply_at(b, Op::Value, &inner_part);
        dh[b] = exp_factor(lambda, &p.u).conj() * (vb + phase_derivative(lambda, &p.frame.tangent));
    }
    let dbar_mu = stencils.apply(Op::Dbar, &mu);
    let f: Vec<C64> = (0..n).map(|i| phase(lambda, &mesh.nodes[i].point.u).exp() * mu[i]).collect();
    let h: Vec<C64> = (0..n).map(|i| exp_factor(lambda, &mesh.nodes[i].point.u).conj() * mu[i]).collect();
    let dbar_f = (0..n).map(|i| phase(lambda, &mesh.nodes[i].point.u).exp() * dbar_mu[i]).collect();
    CgoSolution { lambda, mu, f, h, dh, dbar_f }
}

/// `sup |∂∂̄μ + φ′∂̄μ − c μ|` over interior nodes at depth ≥ 3h: the
/// equation `∂∂̄f = q f` with the factor `e^{φ}` divided out.
pub fn pde_residual(mesh: &CurveMesh, stencils: &Stencils, lambda: C64, mu: &[C64], q: &[C64]) -> f64 {
    mesh.interior_margin(3.0 * mesh.h)
        .into_iter()
        .map(|i| {
            let t = &mesh.nodes[i].point.frame.tangent;
            let r = stencils.apply_at(i, Op::DDbar, mu) + phase_derivative(lambda, t) * stencils.apply_at(i, Op::Dbar, mu)
                - q[i] * mu[i];
            r.norm()
        })
        .fold(0.0, f64::max)
}

/// The same residual for `f` itself, without the gauge factor.
pub fn pde_residual_f(mesh: &CurveMesh, stencils: &Stencils, f: &[C64], q: &[C64]) -> f64 {
    mesh.interior_margin(3.0 * mesh.h)
        .into_iter()
        .map(|i| (stencils.apply_at(i, Op::DDbar, f) - q[i] * f[i]).norm())
        .fold(0.0, f64::max)
}

/// Largest step that resolves `exp(2i Im φ)` with eight points per period.
pub fn resolution_limit(lambda: C64) -> f64 {
    PI / (8.0 * lambda.norm())
}
