//! Pointwise algebra on the projective plane.
//!
//! A point of CP² is carried by its canonical lift to the unit sphere S⁵(1)
//! (divide by the Euclidean norm, positive real scaling). The curve is a
//! homogeneous polynomial `P` given by monomials; everything the kernels need
//! — values, gradients, divided differences `Qⁱ`, the pairings `B`, `B*` and a
//! unit holomorphic tangent frame — is evaluated here exactly.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Point of ℂ³ normalized onto the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomPoint(pub [C64; 3]);

impl HomPoint {
    /// `(1, u₁, u₂)/√(1+|u₁|²+|u₂|²)`.
    pub fn lift(u: [C64; 2]) -> HomPoint {
        let n = (1.0 + u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
        HomPoint([c(1.0 / n, 0.0), u[0] / n, u[1] / n])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Affine coordinates `(z₁/z₀, z₂/z₀)`, refusing points too close to the
    /// line at infinity.
    pub fn affine(&self, c0: f64) -> Result<[C64; 2]> {
        let z0 = self.0[0].norm();
        if z0 < c0 {
            return Err(Error::ChartSingularity(z0, c0));
        }
        Ok([self.0[1] / self.0[0], self.0[2] / self.0[0]])
    }
}

/// `(B(ζ,z), B*(ζ,z)) = (1 − Σ ζ̄ⱼzⱼ, −1 + Σ z̄ⱼζⱼ)`.
#[inline]
pub fn b_pairing(zeta: &HomPoint, z: &HomPoint) -> (C64, C64) {
    let mut s = C64::new(0.0, 0.0);
    let mut t = C64::new(0.0, 0.0);
    for j in 0..3 {
        s += zeta.0[j].conj() * z.0[j];
        t += z.0[j].conj() * zeta.0[j];
    }
    (C64::new(1.0, 0.0) - s, t - 1.0)
}

#[inline]
pub fn b_value(zeta: &HomPoint, z: &HomPoint) -> C64 {
    b_pairing(zeta, z).0
}

/// `⟨λ, z/z₀⟩ = λ(z₁/z₀ + z₂/z₀)`.
pub fn pairing_lambda(lambda: C64, z: &HomPoint, c0: f64) -> Result<C64> {
    let u = z.affine(c0)?;
    Ok(lambda * (u[0] + u[1]))
}

/// Same pairing directly on affine coordinates (no floor check).
#[inline]
pub fn phase(lambda: C64, u: &[C64; 2]) -> C64 {
    lambda * (u[0] + u[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exps: [u32; 3],
    pub coef: C64,
}

/// `(xᵉ − yᵉ)/(x − y)` as the exact sum `Σ x^{e−1−k} yᵏ`.
#[inline]
fn divided_power(x: C64, y: C64, e: u32) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let mut yp = C64::new(1.0, 0.0);
    for _ in 0..e {
        acc = acc * x + yp;
        yp *= y;
    }
    acc
}

#[inline]
fn powu(x: C64, e: u32) -> C64 {
    match e {
        0 => C64::new(1.0, 0.0),
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powu(e),
    }
}

/// A smooth projective curve `{P = 0}` together with the affine disc
/// `ϱ = |u₁|² + |u₂|² − R² < 0` that cuts out the bordered surface `V`.
#[derive(Clone, Debug)]
pub struct CurveDef {
    pub name: String,
    pub degree: u32,
    pub terms: Vec<Monomial>,
    pub radius: f64,
    pub tolerance: f64,
    pub c0: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CurveFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub degree: Option<u32>,
    /// Rows `[e0, e1, e2, re, im]`.
    #[serde(default)]
    pub terms: Vec<[f64; 5]>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub c0: Option<f64>,
    /// Parameters of the `graph-cubic` preset.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
}

impl CurveDef {
    pub fn new(name: &str, degree: u32, terms: Vec<Monomial>, radius: f64) -> Result<CurveDef> {
        let curve = CurveDef {
            name: name.to_string(),
            degree,
            terms,
            radius,
            tolerance: 1e-10,
            c0: 0.25,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// The Fermat cubic `z₀³ + z₁³ + z₂³`.
    pub fn fermat_cubic(radius: f64) -> CurveDef {
        let one = c(1.0, 0.0);
        let terms = vec![
            Monomial { exps: [3, 0, 0], coef: one },
            Monomial { exps: [0, 3, 0], coef: one },
            Monomial { exps: [0, 0, 3], coef: one },
        ];
        CurveDef::new("fermat-cubic", 3, terms, radius).expect("Fermat cubic is valid")
    }

    /// `z₀²z₂ − ε(z₀³ + z₁³) + δz₂³`: a smooth cubic whose part over a small
    /// affine disc is the single graph `u₂ ≈ ε(1+u₁³)`; the two remaining
    /// sheets sit at `|u₂| ≈ δ^{-1/2}`, far outside the disc.
    pub fn graph_cubic(epsilon: f64, delta: f64, radius: f64) -> Result<CurveDef> {
        if !(epsilon > 0.0 && delta > 0.0) {
            return Err(Error::InvalidCurve(
                "graph-cubic needs epsilon > 0 and delta > 0 for smoothness".into(),
            ));
        }
        let terms = vec![
            Monomial { exps: [2, 0, 1], coef: c(1.0, 0.0) },
            Monomial { exps: [3, 0, 0], coef: c(-epsilon, 0.0) },
            Monomial { exps: [0, 3, 0], coef: c(-epsilon, 0.0) },
            Monomial { exps: [0, 0, 3], coef: c(delta, 0.0) },
        ];
        CurveDef::new("graph-cubic", 3, terms, radius)
    }

    pub fn from_file(file: &CurveFile) -> Result<CurveDef> {
        let radius = file.radius.unwrap_or(2.0);
        let mut curve = match file.preset.as_deref() {
            Some("fermat") | Some("fermat-cubic") => {
                if !file.terms.is_empty() {
                    return Err(Error::InvalidCurve("preset and explicit terms are exclusive".into()));
                }
                let cu = CurveDef::fermat_cubic(radius);
                cu.validate()?;
                cu
            }
            Some("graph-cubic") => {
                CurveDef::graph_cubic(file.epsilon.unwrap_or(0.5), file.delta.unwrap_or(0.05), radius)?
            }
            Some(other) => return Err(Error::InvalidCurve(format!("unknown curve preset '{other}'"))),
            None => {
                let degree = file
                    .degree
                    .ok_or_else(|| Error::InvalidCurve("missing degree".into()))?;
                let mut terms = Vec::with_capacity(file.terms.len());
                for row in &file.terms {
                    let e = [row[0], row[1], row[2]];
                    if e.iter().any(|x| *x < 0.0 || x.fract() != 0.0) {
                        return Err(Error::InvalidCurve(format!("bad exponent row {row:?}")));
                    }
                    terms.push(Monomial {
                        exps: [e[0] as u32, e[1] as u32, e[2] as u32],
                        coef: c(row[3], row[4]),
                    });
                }
                CurveDef::new(file.name.as_deref().unwrap_or("custom"), degree, terms, radius)?
            }
        };
        if let Some(t) = file.tolerance {
            curve.tolerance = t;
        }
        if let Some(c0) = file.c0 {
            curve.c0 = c0;
        }
        if let Some(n) = &file.name {
            curve.name = n.clone();
        }
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree <= 2 {
            return Err(Error::InvalidCurve(format!("degree {} must exceed 2", self.degree)));
        }
        if self.terms.is_empty() || self.terms.iter().all(|m| m.coef.norm() == 0.0) {
            return Err(Error::InvalidCurve("zero polynomial".into()));
        }
        for m in &self.terms {
            let s: u32 = m.exps.iter().sum();
            if s != self.degree {
                return Err(Error::InvalidCurve(format!(
                    "monomial {:?} has degree {s}, expected {}",
                    m.exps, self.degree
                )));
            }
            if !m.coef.re.is_finite() || !m.coef.im.is_finite() {
                return Err(Error::InvalidCurve("non-finite coefficient".into()));
            }
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidCurve(format!("radius {} must be positive", self.radius)));
        }
        if !(self.tolerance > 0.0) || !(self.c0 > 0.0) {
            return Err(Error::InvalidCurve("tolerance and c0 must be positive".into()));
        }
        Ok(())
    }

    /// Homogeneity weight `ℓ = d − 2` used throughout.
    pub fn ell(&self) -> i32 {
        self.degree as i32 - 2
    }

    pub fn eval_p(&self, z: &[C64; 3]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for m in &self.terms {
            acc += m.coef * powu(z[0], m.exps[0]) * powu(z[1], m.exps[1]) * powu(z[2], m.exps[2]);
        }
        acc
    }

    pub fn grad_p(&self, z: &[C64; 3]) -> [C64; 3] {
        let mut g = [C64::new(0.0, 0.0); 3];
        for m in &self.terms {
            for i in 0..3 {
                let e = m.exps[i];
                if e == 0 {
                    continue;
                }
                let mut term = m.coef * e as f64;
                for j in 0..3 {
                    let p = if j == i { e - 1 } else { m.exps[j] };
                    term *= powu(z[j], p);
                }
                g[i] += term;
            }
        }
        g
    }

    /// Divided differences with `P(ζ) − P(z) = Σ Qⁱ(ζ,z)(ζᵢ − zᵢ)`, built
    /// by telescoping one coordinate at a time; no division occurs.
    pub fn q_functions(&self, zeta: &[C64; 3], z: &[C64; 3]) -> [C64; 3] {
        let mut q = [C64::new(0.0, 0.0); 3];
        for m in &self.terms {
            let [a, b, cc] = m.exps;
            q[0] += m.coef * divided_power(zeta[0], z[0], a) * powu(zeta[1], b) * powu(zeta[2], cc);
            q[1] += m.coef * powu(z[0], a) * divided_power(zeta[1], z[1], b) * powu(zeta[2], cc);
            q[2] += m.coef * powu(z[0], a) * powu(z[1], b) * divided_power(zeta[2], z[2], cc);
        }
        q
    }

    #[inline]
    pub fn affine_p(&self, u: &[C64; 2]) -> C64 {
        self.eval_p(&[c(1.0, 0.0), u[0], u[1]])
    }

    #[inline]
    pub fn affine_grad(&self, u: &[C64; 2]) -> [C64; 2] {
        let g = self.grad_p(&[c(1.0, 0.0), u[0], u[1]]);
        [g[1], g[2]]
    }

    /// `ϱ(u) = |u|² − R²`.
    #[inline]
    pub fn rho(&self, u: &[C64; 2]) -> f64 {
        u[0].norm_sqr() + u[1].norm_sqr() - self.radius * self.radius
    }

    /// Newton projection onto `{p = 0}` along `conj ∇p`.
    pub fn project(&self, u: [C64; 2]) -> [C64; 2] {
        let mut u = u;
        for _ in 0..60 {
            let pv = self.affine_p(&u);
            let g = self.affine_grad(&u);
            let gn = g[0].norm_sqr() + g[1].norm_sqr();
            if gn == 0.0 {
                break;
            }
            let step = pv / gn;
            u[0] -= step * g[0].conj();
            u[1] -= step * g[1].conj();
            if pv.norm() <= 1e-15 * (1.0 + gn.sqrt()) {
                break;
            }
        }
        u
    }

    /// Coefficients of `p(u₁, ·)` (index `var = 0`) or `p(·, u₂)` (`var = 1`)
    /// as a polynomial in the other coordinate, lowest degree first.
    fn sheet_polynomial(&self, var: usize, fixed: C64) -> Vec<C64> {
        let mut coeffs = vec![C64::new(0.0, 0.0); self.degree as usize + 1];
        for m in &self.terms {
            let (fixed_e, free_e) = if var == 0 { (m.exps[1], m.exps[2]) } else { (m.exps[2], m.exps[1]) };
            coeffs[free_e as usize] += m.coef * powu(fixed, fixed_e);
        }
        coeffs
    }

    /// All roots of the curve equation over a fixed value of one affine
    /// coordinate: `var = 0` fixes `u₁` and returns the `u₂` values.
    pub fn sheets(&self, var: usize, fixed: C64) -> Vec<C64> {
        let mut coeffs = self.sheet_polynomial(var, fixed);
        let scale = coeffs.iter().map(|x| x.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= 1e-14 * scale {
            coeffs.pop();
        }
        let n = coeffs.len() - 1;
        if n == 0 {
            return vec![];
        }
        let lead = coeffs[n];
        let mut comp = DMatrix::<C64>::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -coeffs[n - 1 - j] / lead;
        }
        for i in 1..n {
            comp[(i, i - 1)] = c(1.0, 0.0);
        }
        let mut roots: Vec<C64> = match comp.clone().schur().eigenvalues() {
            Some(ev) => ev.iter().cloned().collect(),
            None => {
                let t = comp.schur().unpack().1;
                (0..n).map(|i| t[(i, i)]).collect()
            }
        };
        for r in roots.iter_mut() {
            for _ in 0..8 {
                let (mut pv, mut dp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for k in (0..=n).rev() {
                    dp = dp * *r + pv;
                    pv = pv * *r + coeffs[k];
                }
                if dp.norm() == 0.0 {
                    break;
                }
                let step = pv / dp;
                *r -= step;
                if step.norm() < 1e-16 * (1.0 + r.norm()) {
                    break;
                }
            }
        }
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        roots
    }

    /// Newton refinement of one sheet value with the other coordinate fixed.
    pub fn refine_sheet(&self, var: usize, fixed: C64, guess: C64) -> C64 {
        let mut x = guess;
        for _ in 0..40 {
            let u = if var == 0 { [fixed, x] } else { [x, fixed] };
            let pv = self.affine_p(&u);
            let g = self.affine_grad(&u);
            let d = g[1 - var];
            if d.norm() == 0.0 {
                break;
            }
            let step = pv / d;
            x -= step;
            if step.norm() < 1e-15 * (1.0 + x.norm()) {
                break;
            }
        }
        x
    }
}

/// Unit holomorphic tangent `T = (p_{u₂}, −p_{u₁})/|∇p|` and the gradient
/// norm at a smooth curve point. The local coordinate is
/// `F(z,ζ) = Σ T̄ⱼ (ζⱼ − zⱼ)` in affine coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub tangent: [C64; 2],
    pub grad_norm: f64,
}

impl Frame {
    #[inline]
    pub fn coord(&self, base: &[C64; 2], u: &[C64; 2]) -> C64 {
        self.tangent[0].conj() * (u[0] - base[0]) + self.tangent[1].conj() * (u[1] - base[1])
    }
}

pub fn local_frame(curve: &CurveDef, u: &[C64; 2]) -> Result<Frame> {
    let g = curve.affine_grad(u);
    let n = (g[0].norm_sqr() + g[1].norm_sqr()).sqrt();
    if n < 1e-8 {
        return Err(Error::SingularPoint(format!("{}", u[0]), format!("{}", u[1]), n));
    }
    Ok(Frame { tangent: [g[1] / n, -g[0] / n], grad_norm: n })
}

/// A curve point with its lift and frame cached; what kernels consume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub u: [C64; 2],
    pub z: HomPoint,
    pub frame: Frame,
}

impl CurvePoint {
    pub fn new(curve: &CurveDef, u: [C64; 2]) -> Result<CurvePoint> {
        Ok(CurvePoint { u, z: HomPoint::lift(u), frame: local_frame(curve, &u)? })
    }

    /// The curve point reached from `self` by moving `t` along the tangent
    /// and projecting back onto the curve.
    pub fn nearby(&self, curve: &CurveDef, t: C64) -> Result<CurvePoint> {
        let tt = self.frame.tangent;
        let u = curve.project([self.u[0] + t * tt[0], self.u[1] + t * tt[1]]);
        CurvePoint::new(curve, u)
    }

    /// `⟨T_self, T_other⟩ = Σ Tⱼ(self) T̄ⱼ(other)`.
    #[inline]
    pub fn tangent_pairing(&self, other: &CurvePoint) -> C64 {
        self.frame.tangent[0] * other.frame.tangent[0].conj()
            + self.frame.tangent[1] * other.frame.tangent[1].conj()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng, s: f64) -> C64 {
        c(rng.random_range(-s..s), rng.random_range(-s..s))
    }

    fn rand_sphere(rng: &mut ChaCha8Rng) -> HomPoint {
        let v = [rand_c(rng, 1.0), rand_c(rng, 1.0), rand_c(rng, 1.0)];
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        HomPoint([v[0] / n, v[1] / n, v[2] / n])
    }

    #[test]
    fn lift_examples() {
        let p = HomPoint::lift([c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.0, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let p = HomPoint::lift([c(1.0, 0.0), c(0.0, 0.0)]);
        let s = 1.0 / 2f64.sqrt();
        assert!((p.0[0] - s).norm() < 1e-15 && (p.0[1] - s).norm() < 1e-15 && p.0[2].norm() == 0.0);
        let p = HomPoint::lift([c(3.0, 0.0), c(4.0, 0.0)]);
        let r = 26f64.sqrt();
        assert!((p.0[1] - 3.0 / r).norm() < 1e-15 && (p.0[2] - 4.0 / r).norm() < 1e-15);
        assert!((p.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eval_p_examples() {
        let f = CurveDef::fermat_cubic(2.0);
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_eq!(f.eval_p(&[one, zero, zero]), one);
        assert_eq!(f.eval_p(&[one, -one, zero]), zero);
        assert_eq!(f.eval_p(&[one, one, one]), c(3.0, 0.0));
    }

    #[test]
    fn q_function_examples() {
        let f = CurveDef::fermat_cubic(2.0);
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let q = f.q_functions(&[one, one, zero], &[zero, one, zero]);
        assert_eq!(q, [one, c(3.0, 0.0), zero]);
        let z = [c(0.3, 0.1), c(-0.2, 0.7), c(1.1, -0.4)];
        let q = f.q_functions(&z, &z);
        for i in 0..3 {
            assert!((q[i] - 3.0 * z[i] * z[i]).norm() < 1e-14);
        }
    }

    #[test]
    fn q_telescoping_and_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let curves = [
            CurveDef::fermat_cubic(2.0),
            CurveDef::graph_cubic(0.5, 0.05, 0.5).unwrap(),
        ];
        for curve in &curves {
            for _ in 0..500 {
                let zeta = [rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0)];
                let z = [rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0)];
                let q = curve.q_functions(&zeta, &z);
                let lhs = curve.eval_p(&zeta) - curve.eval_p(&z);
                let rhs: C64 = (0..3).map(|i| q[i] * (zeta[i] - z[i])).sum();
                let scale = 1.0 + curve.eval_p(&zeta).norm() + curve.eval_p(&z).norm();
                assert!((lhs - rhs).norm() <= 1e-12 * scale);
                let t = C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..6.28));
                let qt = curve.q_functions(&zeta.map(|x| t * x), &z.map(|x| t * x));
                for i in 0..3 {
                    let expect = q[i] * t.powu(curve.degree - 1);
                    assert!((qt[i] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
                }
                let pt = curve.eval_p(&zeta.map(|x| t * x));
                assert!((pt - curve.eval_p(&zeta) * t.powu(curve.degree)).norm() <= 1e-10 * (1.0 + pt.norm()));
            }
        }
    }

    #[test]
    fn b_pairing_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e0 = HomPoint([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e1 = HomPoint([c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(b_pairing(&e1, &e0), (c(1.0, 0.0), c(-1.0, 0.0)));
        let w = HomPoint::lift([c(1.0, 0.0), c(0.0, 0.0)]);
        let b = b_value(&e0, &w);
        assert!((b - (2f64.sqrt() - 1.0) / 2f64.sqrt()).norm() < 1e-15);
        for _ in 0..1000 {
            let (z1, z2, w) = (rand_sphere(&mut rng), rand_sphere(&mut rng), rand_sphere(&mut rng));
            let (b, bs) = b_pairing(&z1, &z2);
            assert!((bs + b.conj()).norm() <= 1e-14);
            let (bzz, _) = b_pairing(&z1, &z1);
            assert!(bzz.norm() <= 1e-15);
            // difference identity in the first slot
            let lhs = b_value(&z2, &w) - b_value(&z1, &w);
            let rhs: C64 = (0..3).map(|j| (z2.0[j].conj() - z1.0[j].conj()) * (z2.0[j] - w.0[j])).sum::<C64>()
                - b_value(&z1, &z2);
            assert!((lhs - rhs).norm() <= 1e-13);
            let d: f64 = (0..3).map(|j| (w.0[j] - z1.0[j]).norm_sqr()).sum();
            assert!((b_value(&w, &z1).re - 0.5 * d).abs() <= 1e-13);
        }
    }

    #[test]
    fn pairing_lambda_examples() {
        let z = HomPoint::lift([c(0.7, 0.2), c(-0.1, 0.3)]);
        assert_eq!(pairing_lambda(c(0.0, 0.0), &z, 0.25).unwrap(), c(0.0, 0.0));
        let z = HomPoint::lift([c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((pairing_lambda(c(1.0, 0.0), &z, 0.25).unwrap() - 1.0).norm() < 1e-15);
        let z = HomPoint::lift([c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((pairing_lambda(c(2.0, 1.0), &z, 0.25).unwrap() - c(4.0, 2.0)).norm() < 1e-14);
        let far = HomPoint::lift([c(10.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(pairing_lambda(c(1.0, 0.0), &far, 0.25), Err(Error::ChartSingularity(..))));
    }

    #[test]
    fn frame_examples() {
        let f = CurveDef::fermat_cubic(2.0);
        let u = [c(-1.0, 0.0), c(0.0, 0.0)];
        let fr = local_frame(&f, &u).unwrap();
        assert!(fr.tangent[0].norm() < 1e-15 && (fr.tangent[1].norm() - 1.0).abs() < 1e-15);
        let u = f.project([c(0.8, 0.3), c(-1.0, 0.2)]);
        let p = CurvePoint::new(&f, u).unwrap();
        assert_eq!(p.frame.coord(&p.u, &p.u), c(0.0, 0.0));
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let t = c(0.6, 0.8) * 10f64.powi(-k);
            let q = p.nearby(&f, t).unwrap();
            let dist = ((q.u[0] - p.u[0]).norm_sqr() + (q.u[1] - p.u[1]).norm_sqr()).sqrt();
            let ratio = p.frame.coord(&p.u, &q.u).norm() / dist;
            assert!((ratio - 1.0).abs() < prev.max(1e-12));
            prev = (ratio - 1.0).abs() * 1.01 + 1e-14;
            assert!(f.affine_p(&q.u).norm() < 1e-12);
        }
        // singular point of the cone z1^3 + z2^3 at the affine origin
        let cone = CurveDef {
            name: "cone".into(),
            degree: 3,
            terms: vec![
                Monomial { exps: [0, 3, 0], coef: c(1.0, 0.0) },
                Monomial { exps: [0, 0, 3], coef: c(1.0, 0.0) },
            ],
            radius: 1.0,
            tolerance: 1e-10,
            c0: 0.25,
        };
        assert!(matches!(local_frame(&cone, &[c(0.0, 0.0), c(0.0, 0.0)]), Err(Error::SingularPoint(..))));
    }

    #[test]
    fn sheets_solve_curve() {
        let f = CurveDef::fermat_cubic(2.0);
        let roots = f.sheets(0, c(0.4, -0.3));
        assert_eq!(roots.len(), 3);
        for r in roots {
            assert!(f.affine_p(&[c(0.4, -0.3), r]).norm() < 1e-13);
        }
        let g = CurveDef::graph_cubic(0.5, 0.05, 0.5).unwrap();
        let roots = g.sheets(0, c(0.2, 0.1));
        assert_eq!(roots.len(), 3);
        let small: Vec<_> = roots.iter().filter(|r| r.norm() < 1.0).collect();
        assert_eq!(small.len(), 1);
    }

    #[test]
    fn invalid_curves_rejected() {
        let bad = CurveFile {
            name: None,
            preset: None,
            degree: Some(3),
            terms: vec![[2.0, 0.0, 0.0, 1.0, 0.0]],
            radius: Some(2.0),
            tolerance: None,
            c0: None,
            epsilon: None,
            delta: None,
        };
        assert!(matches!(CurveDef::from_file(&bad), Err(Error::InvalidCurve(_))));
        let quad = CurveFile { degree: Some(2), terms: vec![[2.0, 0.0, 0.0, 1.0, 0.0]], ..bad.clone() };
        assert!(CurveDef::from_file(&quad).is_err());
        let fermat = CurveFile { preset: Some("fermat".into()), terms: vec![], degree: None, ..bad };
        assert_eq!(CurveDef::from_file(&fermat).unwrap().degree, 3);
    }
}
