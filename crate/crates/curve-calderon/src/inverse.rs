//! The inverse problem: from boundary data to `∂h`, `h` and `q`.
//!
//! With `h = Ē μ` (so `f = e^{φ̄} h`) the unknowns satisfy two integral
//! equations on `V`. Writing `ρ̃(z,w) = Σⱼ Tⱼ(w) Dⱼ(z,w)` and
//! `ρ̂(z,w) = Σⱼ Tⱼ(z) Dⱼ(z,w)` with `Dⱼ = ∂_{τ̄_w}[k(z,w) T̄ⱼ(w)]`:
//!
//! ```text
//!   h(z) = I_∂[∂h](z) + M_b[h](z) − S[h](z)
//!   I_∂[g](z) = ∫ k̄(z,w) g(w) dA(w)
//!   M_b[h](z) = −(i/2) ∮ h(w) k̄(z,w) dτ̄_w
//!   S[h](z)   = −∫ h(w) conj ρ̃(z,w) dA(w)
//! ```
//!
//! which is the conjugate of the Cauchy–Pompeiu formula on the curve, and
//!
//! ```text
//!   𝒫[g](z) = Ē(z) ∫ ρ̂(z,w) E(w) g(w) dA(w)
//!           − Ē(z)/(2i) ∮ k(z,w) ⟨T_z,T_w⟩ E(w) g(w) dτ_w.
//! ```
//!
//! `𝒫[g] = −Ē v` off the diagonal, where `v` is the inner `∂̄`-inverse of
//! the forward problem expressed through `g = ∂h`. The diagonal of
//! `∂̄_w k` contributes `+E g`, so the forward `g` satisfies `𝒫[g] = Ē φ′`
//! while the literal second-kind form `(I + 𝒫) g = Ē φ′` carries an extra
//! `g`. Both residuals are reported; the solver uses the literal form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::phase_derivative;
use crate::geometry::{c, phase, CurveDef, C64};
use crate::kernel::{cauchy_leray, exp_factor, source_dbar};
use crate::linalg::{condition_estimate, residual_norm, solve_regularized, vnorm, CMat, Lu, SolveReport};
use crate::mesh::CurveMesh;
use crate::stencil::{Op, Stencils};

/// Condition estimate above which the Fredholm solves switch to Tikhonov.
pub const TIKHONOV_ABOVE: f64 = 1e10;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Kernel values between the `g`-nodes (interior then border) as targets and
/// interior / border nodes as sources. The coincident pair is left at zero.
#[derive(Clone, Debug)]
pub struct KernelTables {
    /// Interior nodes followed by border nodes.
    pub g_nodes: Vec<usize>,
    pub n_interior: usize,
    /// `k(z,w)`, `w` interior.
    pub k_dom: CMat,
    /// `ρ̃(z,w)`, `w` interior.
    pub rho_src: CMat,
    /// `ρ̂(z,w)`, `w` interior.
    pub rho_tgt: CMat,
    /// `k(z,b)`, `b` on the border.
    pub k_bdy: CMat,
}

pub fn kernel_tables(curve: &CurveDef, mesh: &CurveMesh) -> Result<KernelTables> {
    let interior = &mesh.interior;
    let border = &mesh.boundary;
    let g_nodes: Vec<usize> = interior.iter().chain(border.iter()).cloned().collect();
    let (nt, ni, nb) = (g_nodes.len(), interior.len(), border.len());
    let mut k_dom = CMat::zeros(nt, ni);
    let mut rho_src = CMat::zeros(nt, ni);
    let mut rho_tgt = CMat::zeros(nt, ni);
    let mut k_bdy = CMat::zeros(nt, nb);
    let mut bad = Vec::new();
    for (a, &zi) in g_nodes.iter().enumerate() {
        let zp = &mesh.nodes[zi].point;
        for (b, &wi) in interior.iter().enumerate() {
            if wi == zi {
                continue;
            }
            let wp = &mesh.nodes[wi].point;
            let d = source_dbar(curve, zp, wp);
            let k = cauchy_leray(curve, zp, wp);
            *k_dom.at_mut(a, b) = k;
            *rho_src.at_mut(a, b) = wp.frame.tangent[0] * d[0] + wp.frame.tangent[1] * d[1];
            *rho_tgt.at_mut(a, b) = zp.frame.tangent[0] * d[0] + zp.frame.tangent[1] * d[1];
        }
        for (b, &wi) in border.iter().enumerate() {
            if wi != zi {
                *k_bdy.at_mut(a, b) = cauchy_leray(curve, zp, &mesh.nodes[wi].point);
            }
        }
        let finite = |m: &CMat| m.row(a).iter().all(|x| x.re.is_finite() && x.im.is_finite());
        if !(finite(&k_dom) && finite(&rho_src) && finite(&rho_tgt) && finite(&k_bdy)) {
            bad.push(zi);
        }
    }
    if !bad.is_empty() {
        return Err(Error::PvDivergence(bad));
    }
    Ok(KernelTables { g_nodes, n_interior: ni, k_dom, rho_src, rho_tgt, k_bdy })
}

/// The scalar-side operators on interior targets.
#[derive(Clone, Debug)]
pub struct RepresentationOps {
    /// `I_∂`: interior × interior.
    pub i_d: CMat,
    /// `M_b`: interior × border.
    pub m_b: CMat,
    /// `S`: interior × interior.
    pub s: CMat,
}

pub fn representation_ops(mesh: &CurveMesh, tab: &KernelTables) -> RepresentationOps {
    let ni = tab.n_interior;
    let area: Vec<f64> = mesh.interior.iter().map(|&w| mesh.nodes[w].weight).collect();
    let i_d = CMat::from_fn(ni, ni, |a, b| tab.k_dom.at(a, b).conj() * area[b]);
    let s = CMat::from_fn(ni, ni, |a, b| -tab.rho_src.at(a, b).conj() * area[b]);
    let m_b = CMat::from_fn(ni, mesh.boundary.len(), |a, b| {
        let n = &mesh.nodes[mesh.boundary[b]];
        c(0.0, -0.5) * tab.k_bdy.at(a, b).conj() * n.dtau_ds.conj() * n.weight
    });
    RepresentationOps { i_d, m_b, s }
}

/// `h ↦ I_∂[∂h] + M_b[h] − S[h]` on interior nodes for a field given on
/// interior (`dh`, `h`) and border (`h`) nodes.
pub fn represent(mesh: &CurveMesh, ops: &RepresentationOps, dh: &[C64], h: &[C64]) -> Vec<C64> {
    let g_int: Vec<C64> = mesh.interior.iter().map(|&i| dh[i]).collect();
    let h_int: Vec<C64> = mesh.interior.iter().map(|&i| h[i]).collect();
    let h_bdy: Vec<C64> = mesh.boundary.iter().map(|&i| h[i]).collect();
    let a = ops.i_d.mul_vec(&g_int);
    let b = ops.m_b.mul_vec(&h_bdy);
    let s = ops.s.mul_vec(&h_int);
    (0..a.len()).map(|k| a[k] + b[k] - s[k]).collect()
}

/// `𝒫_λ` on `g`-nodes (interior then border), without the identity.
pub fn assemble_p(mesh: &CurveMesh, tab: &KernelTables, lambda: C64) -> CMat {
    let ni = tab.n_interior;
    let nt = tab.g_nodes.len();
    let e: Vec<C64> = tab.g_nodes.iter().map(|&i| exp_factor(lambda, &mesh.nodes[i].point.u)).collect();
    CMat::from_fn(nt, nt, |a, b| {
        let z = tab.g_nodes[a];
        if b < ni {
            e[a].conj() * tab.rho_tgt.at(a, b) * e[b] * mesh.nodes[tab.g_nodes[b]].weight
        } else {
            let w = tab.g_nodes[b];
            if w == z {
                return ZERO;
            }
            let (zn, wn) = (&mesh.nodes[z], &mesh.nodes[w]);
            let pair = zn.point.tangent_pairing(&wn.point);
            -e[a].conj() / c(0.0, 2.0) * tab.k_bdy.at(a, b - ni) * pair * e[b] * wn.dtau_ds * wn.weight
        }
    })
}

/// `Ē(z)·φ′(z)`, the right-hand side of the `g`-equation.
pub fn p_rhs(mesh: &CurveMesh, g_nodes: &[usize], lambda: C64) -> Vec<C64> {
    g_nodes
        .iter()
        .map(|&i| {
            let p = &mesh.nodes[i].point;
            exp_factor(lambda, &p.u).conj() * phase_derivative(lambda, &p.frame.tangent)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FredholmReport {
    pub condition: f64,
    pub residual: f64,
    pub regularization: Vec<f64>,
}

impl From<SolveReport> for FredholmReport {
    fn from(r: SolveReport) -> Self {
        FredholmReport { condition: r.condition, residual: r.residual, regularization: r.regularization }
    }
}

/// Solve `(I + 𝒫) g = rhs`.
pub fn solve_g(p: &CMat, rhs: &[C64]) -> Result<(Vec<C64>, FredholmReport)> {
    let a = plus_identity(p);
    let (g, rep) = solve_regularized(&a, rhs, TIKHONOV_ABOVE)?;
    Ok((g, rep.into()))
}

pub fn plus_identity(m: &CMat) -> CMat {
    let mut a = m.clone();
    for i in 0..a.rows.min(a.cols) {
        *a.at_mut(i, i) += 1.0;
    }
    a
}

/// `v = I_∂[g] + M_b[h_b]` on interior nodes; `g` over `g`-nodes (only its
/// interior part enters), `h_b` over border nodes.
pub fn compute_v(ops: &RepresentationOps, g: &[C64], h_b: &[C64]) -> Vec<C64> {
    let ni = ops.i_d.rows;
    let a = ops.i_d.mul_vec(&g[..ni]);
    let b = ops.m_b.mul_vec(h_b);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

/// Solve `h + S h = v` on interior nodes.
pub fn solve_h(ops: &RepresentationOps, v: &[C64]) -> Result<(Vec<C64>, FredholmReport)> {
    let a = plus_identity(&ops.s);
    let (h, rep) = solve_regularized(&a, v, TIKHONOV_ABOVE)?;
    Ok((h, rep.into()))
}

/// Relative residual of `(I + 𝒫) g = rhs` (literal) and `𝒫 g = rhs`
/// (diagonal-corrected) for a given `g`.
pub fn p_residuals(p: &CMat, g: &[C64], rhs: &[C64]) -> (f64, f64) {
    let pg = p.mul_vec(g);
    let lit: Vec<C64> = (0..g.len()).map(|k| g[k] + pg[k] - rhs[k]).collect();
    let cor: Vec<C64> = (0..g.len()).map(|k| pg[k] - rhs[k]).collect();
    let nb = vnorm(rhs).max(1e-300);
    (vnorm(&lit) / nb, vnorm(&cor) / nb)
}

/// Relative residual of `h + S h = v`.
pub fn h_residual(ops: &RepresentationOps, h: &[C64], v: &[C64]) -> f64 {
    residual_norm(&plus_identity(&ops.s), h, v)
}

/// Condition estimate of `I + M`.
pub fn condition_plus_identity(m: &CMat) -> f64 {
    let a = plus_identity(m);
    let lu = Lu::factor(&a);
    condition_estimate(&a, &lu)
}

/// `q` from `h` on every node: `μ = E h`, `q = (∂∂̄μ + φ′∂̄μ)/μ`, which is
/// `∂∂̄f/f` with the factor `e^{φ}` divided out. Values are kept on
/// interior nodes at depth ≥ `margin` and zero elsewhere.
pub fn reconstruct_q(
    mesh: &CurveMesh,
    stencils: &Stencils,
    lambda: C64,
    h: &[C64],
    margin: f64,
) -> Result<Vec<C64>> {
    let n = mesh.nodes.len();
    let mu: Vec<C64> = (0..n).map(|i| exp_factor(lambda, &mesh.nodes[i].point.u) * h[i]).collect();
    let eval = mesh.interior_margin(margin);
    let peak = eval.iter().map(|&i| mu[i].norm()).fold(0.0, f64::max);
    let low: Vec<usize> = eval.iter().cloned().filter(|&i| !(mu[i].norm() >= 1e-3 * peak)).collect();
    if !low.is_empty() || peak == 0.0 {
        return Err(Error::DivisionSingularity(low));
    }
    let mut q = vec![ZERO; n];
    for &i in &eval {
        let t = &mesh.nodes[i].point.frame.tangent;
        let num = stencils.apply_at(i, Op::DDbar, &mu) + phase_derivative(lambda, t) * stencils.apply_at(i, Op::Dbar, &mu);
        q[i] = num / mu[i];
    }
    Ok(q)
}

/// `f = e^{φ̄} h` — kept for reports.
pub fn f_from_h(mesh: &CurveMesh, lambda: C64, h: &[C64]) -> Vec<C64> {
    (0..h.len()).map(|i| phase(lambda, &mesh.nodes[i].point.u).conj().exp() * h[i]).collect()
}

/// Solve `∂∂̄u − q u = 0`, `u = 1` on `bV`, and return `σ = u²` on every
/// node (1 off the interior). Rows closer than `1.5h` to the border carry
/// the Dirichlet condition; stencil entries on collar nodes use `u = 1`.
pub fn recover_sigma(mesh: &CurveMesh, stencils: &Stencils, q: &[C64]) -> Result<Vec<f64>> {
    let unknown = &mesh.interior;
    let n = unknown.len();
    let mut slot = vec![usize::MAX; mesh.nodes.len()];
    for (k, &i) in unknown.iter().enumerate() {
        slot[i] = k;
    }
    let mut a = CMat::zeros(n, n);
    let mut b = vec![ZERO; n];
    for (k, &i) in unknown.iter().enumerate() {
        if mesh.depth[i] < 1.5 * mesh.h {
            *a.at_mut(k, k) = C64::new(1.0, 0.0);
            b[k] = C64::new(1.0, 0.0);
            continue;
        }
        let st = &stencils.rows[i];
        for (&j, w) in st.idx.iter().zip(&st.ddbar) {
            if slot[j] == usize::MAX {
                b[k] -= w;
            } else {
                *a.at_mut(k, slot[j]) += w;
            }
        }
        *a.at_mut(k, k) -= q[i];
    }
    let lu = Lu::factor(&a);
    let cond = condition_estimate(&a, &lu);
    if !(cond <= 1e12) {
        return Err(Error::EigenvalueObstruction(format!("Dirichlet system condition estimate {cond:e}")));
    }
    let u = lu.solve(&b);
    let mut sigma = vec![1.0; mesh.nodes.len()];
    for (k, &i) in unknown.iter().enumerate() {
        sigma[i] = (u[k] * u[k]).re;
    }
    Ok(sigma)
}

/// Relative L² distance over `nodes` with area weights; absolute when the
/// reference vanishes.
pub fn relative_l2(mesh: &CurveMesh, nodes: &[usize], x: &[C64], reference: &[C64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &i in nodes {
        let w = mesh.nodes[i].weight;
        num += (x[i] - reference[i]).norm_sqr() * w;
        den += reference[i].norm_sqr() * w;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InversionReport {
    pub lambda: [f64; 2],
    #[serde(rename = "cond_P")]
    pub cond_p: f64,
    #[serde(rename = "cond_IS")]
    pub cond_is: f64,
    pub residual_g: f64,
    pub residual_h: f64,
    pub q_error_rel: Option<f64>,
    pub sigma_error_rel: Option<f64>,
    pub regularization_used: Vec<f64>,
    /// `σ` recovery is an extension beyond the two integral equations.
    pub sigma_recovery: &'static str,
}

#[derive(Clone, Debug)]
pub struct Inversion {
    pub g: Vec<C64>,
    /// `h` on every node (interior solved, border from the trace map).
    pub h: Vec<C64>,
    pub q: Vec<C64>,
    pub sigma: Option<Vec<f64>>,
    pub report: InversionReport,
}

/// The full reconstruction from one measured pair.
pub fn invert(
    curve: &CurveDef,
    mesh: &CurveMesh,
    stencils: &Stencils,
    chi: &crate::data::ChiData,
    truth: Option<(&[C64], &[f64])>,
    with_sigma: bool,
) -> Result<Inversion> {
    let lambda = chi.lambda;
    let tab = kernel_tables(curve, mesh)?;
    let p = assemble_p(mesh, &tab, lambda);
    let rhs = p_rhs(mesh, &tab.g_nodes, lambda);
    let (g, rep_g) = solve_g(&p, &rhs)?;
    let ni = tab.n_interior;
    let h_b = crate::data::t_map(mesh, chi, &g[ni..], crate::data::LOOP_TOLERANCE)?;
    let ops = representation_ops(mesh, &tab);
    let v = compute_v(&ops, &g, &h_b);
    let (h_int, rep_h) = solve_h(&ops, &v)?;
    let mut h = vec![ZERO; mesh.nodes.len()];
    for (k, &i) in mesh.interior.iter().enumerate() {
        h[i] = h_int[k];
    }
    for (k, &i) in mesh.boundary.iter().enumerate() {
        h[i] = h_b[k];
    }
    let q = reconstruct_q(mesh, stencils, lambda, &h, 3.0 * mesh.h)?;
    let sigma = if with_sigma { Some(recover_sigma(mesh, stencils, &q)?) } else { None };
    let eval = mesh.interior_margin(3.0 * mesh.h);
    let q_error_rel = truth.map(|(qt, _)| relative_l2(mesh, &eval, &q, qt));
    let sigma_error_rel = match (truth, &sigma) {
        (Some((_, st)), Some(s)) => {
            let a: Vec<C64> = s.iter().map(|&x| C64::new(x, 0.0)).collect();
            let b: Vec<C64> = st.iter().map(|&x| C64::new(x, 0.0)).collect();
            Some(relative_l2(mesh, &mesh.interior, &a, &b))
        }
        _ => None,
    };
    let mut regularization_used = rep_g.regularization.clone();
    regularization_used.extend(rep_h.regularization.iter().cloned());
    let report = InversionReport {
        lambda: [lambda.re, lambda.im],
        cond_p: rep_g.condition,
        cond_is: rep_h.condition,
        residual_g: rep_g.residual,
        residual_h: rep_h.residual,
        q_error_rel,
        sigma_error_rel,
        regularization_used,
        sigma_recovery: "extension: Dirichlet problem for the recovered q",
    };
    Ok(Inversion { g, h, q, sigma, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{assemble_r, cgo_fields, solve_mu, Sigma};
    use crate::mesh::{build_mesh, MeshOptions};
    use crate::stencil::build_stencils;

    fn setup(h: f64) -> (CurveDef, CurveMesh, Stencils) {
        let curve = CurveDef::graph_cubic(0.3, 0.05, 0.6).unwrap();
        let mesh = build_mesh(&curve, &MeshOptions::with_collar_cells(h, 5.0)).unwrap();
        let st = build_stencils(&mesh);
        (curve, mesh, st)
    }

    fn smooth(u: &[C64; 2]) -> C64 {
        u[0].conj() * u[0].conj() * u[0] + u[1].sin() * u[1].conj() + u[0].conj()
    }

    fn smooth_d(u: &[C64; 2], t: &[C64; 2]) -> C64 {
        t[0] * u[0].conj() * u[0].conj() + t[1] * u[1].cos() * u[1].conj()
    }

    #[test]
    fn h_equation_round_trip_and_zero_data() {
        let (curve, mesh, _) = setup(0.08);
        let tab = kernel_tables(&curve, &mesh).unwrap();
        let ops = representation_ops(&mesh, &tab);
        let h: Vec<C64> = mesh.interior.iter().map(|&i| smooth(&mesh.nodes[i].point.u)).collect();
        let a = plus_identity(&ops.s);
        let v = a.mul_vec(&h);
        let (back, rep) = solve_h(&ops, &v).unwrap();
        assert!(rep.regularization.is_empty());
        assert!(rep.condition < 10.0);
        for (x, y) in back.iter().zip(&h) {
            assert!((x - y).norm() < 1e-8);
        }
        assert!(h_residual(&ops, &back, &v) < 1e-12);
        let g = vec![ZERO; tab.g_nodes.len()];
        let hb = vec![ZERO; mesh.boundary.len()];
        assert!(compute_v(&ops, &g, &hb).iter().all(|x| *x == ZERO));
    }

    #[test]
    fn representation_converges_for_a_smooth_field() {
        let mut errs = Vec::new();
        for hh in [0.08, 0.04] {
            let (curve, mesh, _) = setup(hh);
            let tab = kernel_tables(&curve, &mesh).unwrap();
            let ops = representation_ops(&mesh, &tab);
            let h: Vec<C64> = mesh.nodes.iter().map(|n| smooth(&n.point.u)).collect();
            let dh: Vec<C64> = mesh.nodes.iter().map(|n| smooth_d(&n.point.u, &n.point.frame.tangent)).collect();
            let rep = represent(&mesh, &ops, &dh, &h);
            let deep = mesh.interior_margin(3.0 * hh);
            let err = deep
                .iter()
                .map(|&i| {
                    let k = mesh.interior.binary_search(&i).unwrap();
                    (rep[k] - h[i]).norm()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 2e-3 && errs[1] < 0.5 * errs[0], "{errs:?}");
    }

    #[test]
    fn forward_g_satisfies_the_diagonal_corrected_equation() {
        let (curve, mesh, st) = setup(0.08);
        let lambda = C64::from_polar(5.0, std::f64::consts::FRAC_PI_4);
        let q = Sigma::bump(0.3, 0.25).potential(&mesh).unwrap();
        let op = assemble_r(&curve, &mesh, lambda, &q).unwrap();
        let cgo = cgo_fields(&mesh, &st, &op, &solve_mu(&op).unwrap());
        let tab = kernel_tables(&curve, &mesh).unwrap();
        let p = assemble_p(&mesh, &tab, lambda);
        let rhs = p_rhs(&mesh, &tab.g_nodes, lambda);
        let g: Vec<C64> = tab.g_nodes.iter().map(|&i| cgo.dh[i]).collect();
        let pg = p.mul_vec(&g);
        let deep: Vec<usize> = (0..tab.n_interior).filter(|&a| mesh.depth[tab.g_nodes[a]] >= 3.0 * mesh.h).collect();
        let cor = deep.iter().map(|&a| (pg[a] - rhs[a]).norm()).fold(0.0, f64::max);
        let lit = deep.iter().map(|&a| (g[a] + pg[a] - rhs[a]).norm()).fold(0.0, f64::max);
        let scale = deep.iter().map(|&a| rhs[a].norm()).fold(0.0, f64::max);
        assert!(cor < 0.01 * scale, "corrected {cor} scale {scale}");
        assert!(lit > 0.5 * scale, "literal {lit} scale {scale}");
        let (l, c) = p_residuals(&p, &g, &rhs);
        assert!(l > c);
    }

    #[test]
    fn q_reconstruction_is_scale_invariant_and_sigma_of_zero_q_is_one() {
        let (curve, mesh, st) = setup(0.08);
        let lambda = C64::from_polar(5.0, std::f64::consts::FRAC_PI_4);
        let qt = Sigma::bump(0.3, 0.25).potential(&mesh).unwrap();
        let op = assemble_r(&curve, &mesh, lambda, &qt).unwrap();
        let cgo = cgo_fields(&mesh, &st, &op, &solve_mu(&op).unwrap());
        let q1 = reconstruct_q(&mesh, &st, lambda, &cgo.h, 3.0 * mesh.h).unwrap();
        let scaled: Vec<C64> = cgo.h.iter().map(|x| x * c(2.0, -3.0)).collect();
        let q2 = reconstruct_q(&mesh, &st, lambda, &scaled, 3.0 * mesh.h).unwrap();
        for (a, b) in q1.iter().zip(&q2) {
            assert!((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
        }
        let zero = vec![ZERO; mesh.nodes.len()];
        assert!(matches!(reconstruct_q(&mesh, &st, lambda, &zero, 0.0), Err(Error::DivisionSingularity(_))));
        let sigma = recover_sigma(&mesh, &st, &zero).unwrap();
        assert!(sigma.iter().all(|s| (s - 1.0).abs() < 1e-10));
        let ones = vec![C64::new(1.0, 0.0); mesh.nodes.len()];
        assert_eq!(relative_l2(&mesh, &mesh.interior, &ones, &ones), 0.0);
        assert!((relative_l2(&mesh, &mesh.interior, &ones, &zero) - mesh.interior.iter().map(|&i| mesh.nodes[i].weight).sum::<f64>().sqrt()).abs() < 1e-12);
    }
}
