//! Pointwise kernels.
//!
//! The determinantal kernel `K(ζ,z) = det[z̄/B*, ζ̄/B, Q]` is available as is,
//! but assembly works with its residue-reduced form on the curve: after the
//! `1/P` pole and the free phase of the lift are integrated out, the
//! Cauchy–Leray operator becomes
//!
//! ```text
//!   I[a](z) = ∫_V k(z,w) a(w) dA(w),
//!   k(z,w)  = κ/(3π) · ŵ₀ · det[ẑ̄, ŵ̄, Q(s̄ŵ, ẑ)] · ẑ₀^{−ℓ} / (|∇p(w)| (1 − |s|²)),
//! ```
//!
//! with `s = Σ ẑ̄ⱼŵⱼ`, canonical lifts `ẑ, ŵ`, and `κ = −3` fixing the
//! normalization `k(z,w) ~ 1/(π(τ_z − τ_w))` so that `∂̄ I[a] = a`.
//! `k` is the coefficient of `dτ_w = Σ T̄ⱼ(w) duⱼ` and is holomorphic in `z`.

use crate::error::{Error, Result};
use crate::geometry::{b_pairing, c, phase, CurveDef, CurvePoint, HomPoint, C64};

pub const KAPPA: f64 = -3.0;

/// Determinant of the matrix with the given columns.
#[inline]
pub fn det3(a: &[C64; 3], b: &[C64; 3], cc: &[C64; 3]) -> C64 {
    a[0] * (b[1] * cc[2] - b[2] * cc[1]) - b[0] * (a[1] * cc[2] - a[2] * cc[1])
        + cc[0] * (a[1] * b[2] - a[2] * b[1])
}

/// `K(w,z) = det[z̄/B*(w,z), w̄/B(w,z), Q(w,z)]` on sphere lifts.
pub fn kernel_k(curve: &CurveDef, w: &HomPoint, z: &HomPoint) -> Result<C64> {
    let (b, bs) = b_pairing(w, z);
    if b.norm() == 0.0 || bs.norm() == 0.0 {
        return Err(Error::SingularPair(b.norm()));
    }
    let col1 = z.0.map(|x| x.conj() / bs);
    let col2 = w.0.map(|x| x.conj() / b);
    let q = curve.q_functions(&w.0, &z.0);
    Ok(det3(&col1, &col2, &q))
}

/// Residue-reduced Cauchy–Leray kernel; target `z`, source `w`.
#[inline]
pub fn cauchy_leray(curve: &CurveDef, z: &CurvePoint, w: &CurvePoint) -> C64 {
    reduced_kernel(curve, &z.z, &w.z, w.frame.grad_norm)
}

fn reduced_kernel(curve: &CurveDef, zh: &HomPoint, wh: &HomPoint, grad_norm: f64) -> C64 {
    let ze = &zh.0;
    let we = &wh.0;
    let s = ze[0].conj() * we[0] + ze[1].conj() * we[1] + ze[2].conj() * we[2];
    let denom = 1.0 - s.norm_sqr();
    let sc = s.conj();
    let scaled = [sc * we[0], sc * we[1], sc * we[2]];
    let q = curve.q_functions(&scaled, ze);
    let d = det3(&ze.map(|x| x.conj()), &we.map(|x| x.conj()), &q);
    let ell = curve.ell();
    let z0pow = if ell == 1 { ze[0] } else { ze[0].powi(ell) };
    KAPPA / (3.0 * std::f64::consts::PI) * we[0] * d / (z0pow * grad_norm * denom)
}

/// Kernel with the source given by bare affine coordinates (frame data
/// recomputed), used for ambient finite differences.
fn ambient_terms(curve: &CurveDef, zh: &HomPoint, u: [C64; 2]) -> (C64, [C64; 2]) {
    let g = curve.affine_grad(&u);
    let n = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    let t = [g[1] / n, -g[0] / n];
    let wh = HomPoint::lift(u);
    (reduced_kernel(curve, zh, &wh, n), t)
}

/// `Dⱼ(z,w) = ∂_{τ̄_w}[k(z,w) T̄ⱼ(w)]`, j = 1, 2, off the diagonal.
///
/// Central differences of the ambient extension along `±ε T, ±iε T`; the
/// departure of `w + tT` from the curve is quadratic in `t` and cancels
/// in the centered stencil.
pub fn source_dbar(curve: &CurveDef, z: &CurvePoint, w: &CurvePoint) -> [C64; 2] {
    let tau = w.frame.coord(&w.u, &z.u).norm();
    let eps = 1e-4 * tau.clamp(1e-6, 1.0);
    let tt = w.frame.tangent;
    let eval = |t: C64| {
        let (k, tan) = ambient_terms(curve, &z.z, [w.u[0] + t * tt[0], w.u[1] + t * tt[1]]);
        [k * tan[0].conj(), k * tan[1].conj()]
    };
    let fp = eval(c(eps, 0.0));
    let fm = eval(c(-eps, 0.0));
    let gp = eval(c(0.0, eps));
    let gm = eval(c(0.0, -eps));
    let mut out = [C64::new(0.0, 0.0); 2];
    for j in 0..2 {
        let dx = (fp[j] - fm[j]) / (2.0 * eps);
        let dy = (gp[j] - gm[j]) / (2.0 * eps);
        out[j] = 0.5 * (dx + c(0.0, 1.0) * dy);
    }
    out
}

/// `E(w,λ) = exp(conj⟨λ,w/w₀⟩ − ⟨λ,w/w₀⟩)`, a unit-modulus phase.
#[inline]
pub fn exp_factor(lambda: C64, u: &[C64; 2]) -> C64 {
    let p = phase(lambda, u);
    C64::from_polar(1.0, -2.0 * p.im)
}

/// The simplex integral `∫_{Δ²}(1−λ−μ) dλ dμ`, folded into the constant of
/// the reduced kernel.
pub fn simplex_weight() -> f64 {
    1.0 / 6.0
}

/// Quintic smoothstep cutoff: 1 below `inner`, 0 above `outer`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn new(inner: f64, outer: f64) -> Cutoff {
        assert!(0.0 < inner && inner < outer, "cutoff radii must satisfy 0 < inner < outer");
        Cutoff { inner, outer }
    }

    pub fn value(&self, s: f64) -> f64 {
        if s <= self.inner {
            1.0
        } else if s >= self.outer {
            0.0
        } else {
            let t = (s - self.inner) / (self.outer - self.inner);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }
}

/// Derivative kernels of the composite kernel `G` in the target variable.
///
/// `∂_z G` collapses onto the diagonal of the inner integral: for the
/// component `j`, `Nⱼ(z,w) = Ē(z) ϑ(z) Tⱼ(z) k(z,w)`.
pub fn kernel_n(
    curve: &CurveDef,
    lambda: C64,
    theta_z: f64,
    z: &CurvePoint,
    w: &CurvePoint,
) -> [C64; 2] {
    let pre = exp_factor(lambda, &z.u).conj() * theta_z;
    let k = cauchy_leray(curve, z, w);
    [pre * z.frame.tangent[0] * k, pre * z.frame.tangent[1] * k]
}

/// `Lⱼ(z,w) = Ē(z) ϑ(z) Tⱼ(z) ∂_{τ̄_w}[k(z,w) T̄ⱼ(w)]`: the off-diagonal part
/// of `∂_z ∂̄_w G`.
pub fn kernel_l(
    curve: &CurveDef,
    lambda: C64,
    theta_z: f64,
    z: &CurvePoint,
    w: &CurvePoint,
) -> [C64; 2] {
    let pre = exp_factor(lambda, &z.u).conj() * theta_z;
    let d = source_dbar(curve, z, w);
    [pre * z.frame.tangent[0] * d[0], pre * z.frame.tangent[1] * d[1]]
}
