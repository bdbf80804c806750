//! Quantitative checks of the analytic estimates: fitted exponents,
//! envelopes and monotonicity, each summarized in an [`EstimateReport`].
//! Constants are fitted, never asserted; only exponents, brackets and
//! trends decide `pass`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::{b_value, c, CurveDef, CurvePoint, HomPoint, C64};
use crate::kernel::{cauchy_leray, det3, kernel_l, kernel_n, simplex_weight};
use crate::mesh::{CurveMesh, NodeKind};

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub estimate_id: String,
    pub samples: usize,
    pub exponent: Option<f64>,
    pub bracket: [f64; 2],
    pub envelope: Option<f64>,
    pub violations: usize,
    pub outlier_fraction: f64,
    pub pass: bool,
    pub inconclusive: bool,
    pub details: BTreeMap<String, f64>,
    /// Raw samples for the per-check CSV; not part of the JSON report.
    #[serde(skip)]
    pub columns: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<Vec<f64>>,
}

impl EstimateReport {
    fn new(id: &str, bracket: [f64; 2]) -> EstimateReport {
        EstimateReport {
            estimate_id: id.to_string(),
            samples: 0,
            exponent: None,
            bracket,
            envelope: None,
            violations: 0,
            outlier_fraction: 0.01,
            pass: false,
            inconclusive: false,
            details: BTreeMap::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    /// Write the raw samples as CSV.
    pub fn write_samples(&self, path: &std::path::Path) -> crate::Result<()> {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|&x| crate::mesh::fmt17(x)).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn fit_exponent(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn rand_c(rng: &mut ChaCha8Rng, s: f64) -> C64 {
    c(rng.random_range(-s..s), rng.random_range(-s..s))
}

fn rand_sphere(rng: &mut ChaCha8Rng) -> HomPoint {
    let v = [rand_c(rng, 1.0), rand_c(rng, 1.0), rand_c(rng, 1.0)];
    normalize(v)
}

fn normalize(v: [C64; 3]) -> HomPoint {
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    HomPoint(v.map(|x| x / n))
}

/// Sphere point at `w + s·v` (renormalized) for a random direction `v`.
fn sphere_near(rng: &mut ChaCha8Rng, w: &HomPoint, s: f64) -> HomPoint {
    let v = rand_sphere(rng);
    normalize(std::array::from_fn(|j| w.0[j] + s * v.0[j]))
}

/// A random point of `V` found by projection from a random affine point.
pub fn random_curve_point(curve: &CurveDef, rng: &mut ChaCha8Rng, radius: f64) -> CurvePoint {
    loop {
        let u = curve.project([rand_c(rng, radius), rand_c(rng, radius)]);
        if curve.rho(&u) < 0.0 && curve.affine_p(&u).norm() < 1e-12 {
            if let Ok(p) = CurvePoint::new(curve, u) {
                return p;
            }
        }
    }
}

/// Telescoping and homogeneity of `Q`, the `B` identities, the determinant
/// replacements and the simplex weight; the largest scaled residual must
/// stay below 1e−10.
pub fn check_algebraic_identities(curve: &CurveDef, samples: usize, seed: u64) -> EstimateReport {
    let mut rep = EstimateReport::new("algebraic_identities", [0.0, 1e-10]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |k: &'static str, v: f64| {
        let e = worst.entry(k).or_insert(0.0);
        *e = e.max(v);
    };
    rep.columns = vec!["sample".into(), "telescoping".into(), "b_difference".into(), "det_replacement".into()];
    for s in 0..samples {
        let zeta = [rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0)];
        let z = [rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0), rand_c(&mut rng, 2.0)];
        let q = curve.q_functions(&zeta, &z);
        let scale = 1.0 + curve.eval_p(&zeta).norm() + curve.eval_p(&z).norm();
        let tele = (curve.eval_p(&zeta) - curve.eval_p(&z) - (0..3).map(|i| q[i] * (zeta[i] - z[i])).sum::<C64>())
            .norm()
            / scale;
        note("q_telescoping", tele);
        let t = C64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..2.0 * PI));
        let qt = curve.q_functions(&zeta.map(|x| t * x), &z.map(|x| t * x));
        for i in 0..3 {
            let expect = q[i] * t.powu(curve.degree - 1);
            note("q_homogeneity", (qt[i] - expect).norm() / (1.0 + expect.norm()));
        }
        let (a, b, w) = (rand_sphere(&mut rng), rand_sphere(&mut rng), rand_sphere(&mut rng));
        let (bb, bs) = crate::geometry::b_pairing(&a, &b);
        note("b_star_conjugation", (bs + bb.conj()).norm());
        let lhs = b_value(&b, &w) - b_value(&a, &w);
        let rhs: C64 = (0..3).map(|j| (b.0[j].conj() - a.0[j].conj()) * (b.0[j] - w.0[j])).sum::<C64>() - b_value(&a, &b);
        let bdiff = (lhs - rhs).norm();
        note("b_difference", bdiff);
        let d2: f64 = (0..3).map(|j| (w.0[j] - a.0[j]).norm_sqr()).sum();
        note("re_b_half_distance", (b_value(&w, &a).re - 0.5 * d2).abs());
        let det = determinant_replacements(curve, &mut rng);
        note("determinant_replacement", det);
        rep.rows.push(vec![s as f64, tele, bdiff, det]);
    }
    note("simplex_weight", (simplex_weight() - 1.0 / 6.0).abs());
    let f = |l: f64| (1.0 - l) * (1.0 - l) / 2.0;
    note("simplex_iterated", ((f(0.0) + 4.0 * f(0.5) + f(1.0)) / 6.0 - 1.0 / 6.0).abs());
    let mut max = 0.0f64;
    for (k, v) in &worst {
        rep.detail(k, *v);
        max = max.max(*v);
    }
    rep.samples = samples;
    rep.envelope = Some(max);
    rep.pass = max <= 1e-10;
    rep
}

/// Scaled residuals of the two row-dependence identities behind the
/// determinant replacements, at one random configuration.
fn determinant_replacements(curve: &CurveDef, rng: &mut ChaCha8Rng) -> f64 {
    let z = random_curve_point(curve, rng, 1.2).z;
    let zeta = rand_sphere(rng);
    let mut v = [rand_c(rng, 1.0), rand_c(rng, 1.0), rand_c(rng, 1.0)];
    let pr: C64 = (0..3).map(|j| z.0[j].conj() * v[j]).sum();
    for j in 0..3 {
        v[j] -= pr * z.0[j];
    }
    let zc = z.0.map(|x| x.conj());
    let zetac = zeta.0.map(|x| x.conj());
    let bstar: C64 = (0..3).map(|j| zetac[j] * z.0[j]).sum::<C64>() - 1.0;
    let b: C64 = c(1.0, 0.0) - (0..3).map(|j| zeta.0[j] * zc[j]).sum::<C64>();
    let dzeta_v: C64 = (0..3).map(|j| zetac[j] * v[j]).sum();
    let col_a: [C64; 3] = std::array::from_fn(|j| v[j] / bstar - z.0[j] * dzeta_v / (bstar * bstar));
    let col_b = z.0.map(|x| x / bstar);
    let col_c = zeta.0.map(|x| x / b);
    let pz = curve.eval_p(&zetac);
    let col_d = curve.q_functions(&zetac, &zc).map(|x| x / pz);
    let m = Matrix4::from_fn(|i, j| {
        if i == 0 {
            [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)][j]
        } else {
            [col_a, col_b, col_c, col_d][j][i - 1]
        }
    });
    let scale = 1.0 + det3(&col_a, &col_b, &col_d).norm() + det3(&col_a, &col_b, &col_c).norm();
    let mut worst = m.determinant().norm() / scale;
    let lhs = det3(&col_a, &col_c, &col_d);
    let rhs = det3(&col_a, &col_b, &col_d) - det3(&col_a, &col_b, &col_c);
    worst = worst.max((lhs - rhs).norm() / scale);

    let zp = random_curve_point(curve, rng, 1.2).z;
    let w = zeta;
    let mut v = [rand_c(rng, 1.0), rand_c(rng, 1.0), rand_c(rng, 1.0)];
    let pr: C64 = (0..3).map(|j| w.0[j].conj() * v[j]).sum();
    for j in 0..3 {
        v[j] -= pr * w.0[j];
    }
    let (bw, bsw) = crate::geometry::b_pairing(&w, &zp);
    let vz: C64 = (0..3).map(|j| v[j].conj() * zp.0[j]).sum();
    let col1 = zp.0.map(|x| x.conj() / bsw);
    let col2: [C64; 3] = std::array::from_fn(|j| v[j].conj() / bw + w.0[j].conj() * vz / (bw * bw));
    let col3 = w.0.map(|x| x.conj() / bw);
    let col4 = curve.q_functions(&w.0, &zp.0);
    let pw = curve.eval_p(&w.0);
    let m = Matrix4::from_fn(|i, j| {
        if i == 0 {
            [c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), pw][j]
        } else {
            [col1, col2, col3, col4][j][i - 1]
        }
    });
    let scale = 1.0 + det3(&col1, &col2, &col4).norm() * (1.0 + pw.norm());
    worst = worst.max(m.determinant().norm() / scale);
    let lhs = det3(&col1, &col2, &col4);
    let rhs = det3(&col3, &col2, &col4) + pw * det3(&col1, &col2, &col3);
    worst.max((lhs - rhs).norm() / scale)
}

/// Sphere triples `(w, z, ζ)` with `|B(w,ζ)| ≤ γ/9`, `γ = |B(w,z)|`; every
/// triple must satisfy `(2/9)γ ≤ |B(z,ζ)| ≤ (16/9)γ` and
/// `|ζ − z| ≤ (4√2/3)√γ`.
pub fn check_gamma_bound(samples: usize, seed: u64) -> EstimateReport {
    let mut rep = EstimateReport::new("gamma_neighborhoods", [2.0 / 9.0, 16.0 / 9.0]);
    rep.outlier_fraction = 0.0;
    rep.columns = vec!["gamma".into(), "b_w_zeta".into(), "b_z_zeta_over_gamma".into(), "dist_over_sqrt_gamma".into()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi, mut dmax) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut n = 0;
    while n < samples {
        let w = rand_sphere(&mut rng);
        let scale = 10f64.powf(rng.random_range(-3.0..0.5));
        let z = sphere_near(&mut rng, &w, scale);
        let gamma = b_value(&w, &z).norm();
        if gamma == 0.0 {
            continue;
        }
        // ζ near w, either random inside the γ/9 neighbourhood or on its
        // shell in the direction of z
        let zeta = if n % 4 == 3 {
            let dir: [C64; 3] = std::array::from_fn(|j| z.0[j] - w.0[j]);
            let at = |t: f64| normalize(std::array::from_fn(|j| w.0[j] + t * dir[j]));
            let (mut a, mut b) = (0.0, 1.0);
            if b_value(&w, &at(b)).norm() < gamma / 9.0 {
                continue;
            }
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if b_value(&w, &at(m)).norm() <= gamma / 9.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            at(a)
        } else {
            let s = (2.0 * gamma / 9.0).sqrt() * rng.random_range(0.0..1.0f64);
            let cand = sphere_near(&mut rng, &w, s);
            if b_value(&w, &cand).norm() > gamma / 9.0 {
                continue;
            }
            cand
        };
        let bwz = b_value(&w, &zeta).norm();
        let r = b_value(&z, &zeta).norm() / gamma;
        let d = (0..3).map(|j| (zeta.0[j] - z.0[j]).norm_sqr()).sum::<f64>().sqrt() / gamma.sqrt();
        if r < 2.0 / 9.0 || r > 16.0 / 9.0 || d > 4.0 * 2f64.sqrt() / 3.0 {
            rep.violations += 1;
        }
        lo = lo.min(r);
        hi = hi.max(r);
        dmax = dmax.max(d);
        rep.rows.push(vec![gamma, bwz, r, d]);
        n += 1;
    }
    rep.samples = n;
    rep.detail("min_ratio", lo);
    rep.detail("max_ratio", hi);
    rep.detail("max_distance_ratio", dmax);
    rep.pass = rep.violations == 0;
    rep
}

/// Area of `{ζ ∈ V : |B(ζ,z)| < δ}` for each `δ`, resolving every lattice
/// cell into `sub × sub` sample points on the curve.
pub fn refined_region_areas(curve: &CurveDef, mesh: &CurveMesh, z: &HomPoint, deltas: &[f64], sub: usize) -> Vec<f64> {
    let dmax = deltas.iter().cloned().fold(0.0, f64::max);
    let h = mesh.h;
    let mut areas = vec![0.0; deltas.len()];
    for n in &mesh.nodes {
        if n.kind != NodeKind::Interior || n.patch > 1 {
            continue;
        }
        if b_value(&n.point.z, z).norm() > dmax + 2.0 * h {
            continue;
        }
        let var = n.patch as usize;
        let other = 1 - var;
        // the lattice cell holding this node's centroid, resolved in full and
        // clipped by the same patch and radius rules as the mesh
        let x0 = (n.point.u[var].re / h).floor() * h;
        let y0 = (n.point.u[var].im / h).floor() * h;
        for a in 0..sub {
            for b in 0..sub {
                let xi = c(x0 + (a as f64 + 0.5) * h / sub as f64, y0 + (b as f64 + 0.5) * h / sub as f64);
                let eta = curve.refine_sheet(var, xi, n.point.u[other]);
                let u = if var == 0 { [xi, eta] } else { [eta, xi] };
                if curve.rho(&u) > 0.0 {
                    continue;
                }
                let g = curve.affine_grad(&u);
                let (gv, go) = (g[var].norm_sqr(), g[other].norm_sqr());
                let level = gv - go;
                if level > 0.0 || (var == 1 && level == 0.0) {
                    continue;
                }
                let w = (h / sub as f64).powi(2) * (gv + go) / go;
                let bz = b_value(&HomPoint::lift(u), z).norm();
                for (k, &d) in deltas.iter().enumerate() {
                    if bz < d {
                        areas[k] += w;
                    }
                }
            }
        }
    }
    areas
}

/// Fitted exponent of `Area{|B(·,z)| < δ}` at each center; every center must
/// land in `[1.35, 1.65]`. Centers whose smallest `δ` region is not resolved
/// by the sub-sampled mesh are inconclusive.
pub fn check_area_scaling(
    curve: &CurveDef,
    mesh: &CurveMesh,
    centers: &[usize],
    deltas: &[f64],
    sub: usize,
) -> EstimateReport {
    let mut rep = EstimateReport::new("delta_area", [1.35, 1.65]);
    rep.columns = vec!["center".into(), "delta".into(), "area".into()];
    let cell = (mesh.h / sub as f64).powi(2);
    let mut exps = Vec::new();
    let mut conclusive = 0;
    for &ci in centers {
        let z = mesh.nodes[ci].point.z;
        let areas = refined_region_areas(curve, mesh, &z, deltas, sub);
        for (d, a) in deltas.iter().zip(&areas) {
            rep.rows.push(vec![ci as f64, *d, *a]);
        }
        if areas[0] < 20.0 * cell {
            continue;
        }
        conclusive += 1;
        let e = fit_exponent(deltas, &areas).unwrap_or(f64::NAN);
        rep.detail(&format!("exponent_center_{ci}"), e);
        if !(1.35..=1.65).contains(&e) {
            rep.violations += 1;
        }
        exps.push(e);
    }
    rep.samples = conclusive;
    rep.inconclusive = conclusive == 0;
    if !exps.is_empty() {
        rep.exponent = Some(exps.iter().sum::<f64>() / exps.len() as f64);
    }
    rep.pass = conclusive >= 5.min(centers.len()) && rep.violations == 0;
    rep
}

/// Area of the planar model `{(x,y) : |ix + x² + y²| < δ}` by quadrature
/// over `y`; its log-log slope is the reference `3/2`.
pub fn planar_model_area(delta: f64) -> f64 {
    let ymax = delta.sqrt();
    let n = 4000;
    let mut area = 0.0;
    for k in 0..n {
        let y = ymax * ((k as f64 + 0.5) / n as f64);
        let f = |x: f64| x * x + (x * x + y * y).powi(2) - delta * delta;
        if f(0.0) >= 0.0 {
            continue;
        }
        let (mut a, mut b) = (0.0, delta);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m) < 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        // both signs of x and of y
        area += 4.0 * a * ymax / n as f64;
    }
    area
}

impl EstimateReport {
    /// Record the planar-model slope over the same `δ` grid.
    pub fn detail_planar_model(&mut self, deltas: &[f64]) {
        let areas: Vec<f64> = deltas.iter().map(|&d| planar_model_area(d)).collect();
        if let Some(e) = fit_exponent(deltas, &areas) {
            self.detail("planar_model_exponent", e);
        }
    }
}

/// Interior lattice nodes suitable as area centers: depth at least `margin`
/// and a transverse `Im B` term, i.e. `|Σ ūⱼTⱼ| ≥ 0.3|u|`.
pub fn area_centers(mesh: &CurveMesh, margin: f64, count: usize, seed: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = mesh
        .interior_margin(margin)
        .into_iter()
        .filter(|&i| {
            let p = &mesh.nodes[i].point;
            let w = p.u[0].conj() * p.frame.tangent[0] + p.u[1].conj() * p.frame.tangent[1];
            let un = (p.u[0].norm_sqr() + p.u[1].norm_sqr()).sqrt();
            w.norm() >= 0.3 * un && un > 0.3
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count && !pool.is_empty() {
        let k = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(k));
    }
    out.sort_unstable();
    out
}

/// A curve point `t` along the unit tangent from `base`, or `None` if the
/// projection fails.
fn along(curve: &CurveDef, base: &CurvePoint, t: C64) -> Option<CurvePoint> {
    base.nearby(curve, t).ok()
}

/// Point at `|B(base, ·)| = target` along direction `dir` from `base`.
fn at_level(curve: &CurveDef, base: &CurvePoint, dir: C64, target: f64, rmax: f64) -> Option<CurvePoint> {
    let f = |r: f64| along(curve, base, dir * r).map(|p| b_value(&base.z, &p.z).norm());
    if f(rmax)? < target {
        return None;
    }
    let (mut a, mut b) = (0.0, rmax);
    for _ in 0..70 {
        let m = 0.5 * (a + b);
        if f(m)? < target {
            a = m;
        } else {
            b = m;
        }
    }
    along(curve, base, dir * (0.5 * (a + b)))
}

fn kernel_norm(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// Envelopes `|B|^{3/2}|N|`, `|B|²|L|` over pairs with `|B| ∈ [1e−3, 1]`,
/// four difference quotients against `δ` (with `|B(z¹,z²)| = δ²`,
/// `γ > 9δ²`), and the trend of the envelopes along the `λ` list.
pub fn check_kernel_decay(curve: &CurveDef, lambdas: &[C64], pairs: usize, seed: u64) -> Vec<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = 0.8 * curve.radius;
    // pair set: source w, target z at a prescribed |B|
    let mut pair_set: Vec<(CurvePoint, CurvePoint, f64)> = Vec::new();
    while pair_set.len() < pairs {
        let w = random_curve_point(curve, &mut rng, radius);
        let target = 10f64.powf(rng.random_range(-3.0..-0.3));
        let dir = C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        if let Some(z) = at_level(curve, &w, dir, target, 1.0) {
            if curve.rho(&z.u) < 0.0 {
                pair_set.push((z, w, b_value(&z.z, &w.z).norm()));
            }
        }
    }
    let mut out = Vec::new();
    let mut env_n = Vec::new();
    let mut env_l = Vec::new();
    for (li, &lambda) in lambdas.iter().enumerate() {
        let mut rn = EstimateReport::new(&format!("n_envelope_lambda{li}"), [f64::NEG_INFINITY, 0.1]);
        let mut rl = EstimateReport::new(&format!("l_envelope_lambda{li}"), [f64::NEG_INFINITY, 0.1]);
        rn.columns = vec!["abs_b".into(), "envelope".into()];
        rl.columns = rn.columns.clone();
        let (mut bs, mut en, mut el) = (Vec::new(), Vec::new(), Vec::new());
        for (z, w, b) in &pair_set {
            let n = kernel_norm(kernel_n(curve, lambda, 1.0, z, w));
            let l = kernel_norm(kernel_l(curve, lambda, 1.0, z, w));
            bs.push(*b);
            en.push(b.powf(1.5) * n);
            el.push(b * b * l);
            rn.rows.push(vec![*b, b.powf(1.5) * n]);
            rl.rows.push(vec![*b, b * b * l]);
        }
        for (rep, env, store) in [(&mut rn, &en, &mut env_n), (&mut rl, &el, &mut env_l)] {
            let finite = env.iter().all(|x| x.is_finite());
            let max = env.iter().cloned().fold(0.0, f64::max);
            // trend of the envelope towards small |B|: the slope of log env
            // against log(1/|B|) must not be positive
            let inv: Vec<f64> = bs.iter().map(|b| 1.0 / b).collect();
            let trend = binned_max_slope(&inv, env);
            rep.samples = env.len();
            rep.envelope = Some(max);
            rep.exponent = trend;
            rep.detail("lambda_abs", lambda.norm());
            rep.pass = finite && trend.is_some_and(|t| t <= 0.1);
            store.push(max);
        }
        out.push(rn);
        out.push(rl);
    }
    for (id, env) in [("n_envelope_lambda_trend", &env_n), ("l_envelope_lambda_trend", &env_l)] {
        let mut rep = EstimateReport::new(id, [0.0, 1.1]);
        rep.columns = vec!["lambda_abs".into(), "envelope".into()];
        for (l, e) in lambdas.iter().zip(env.iter()) {
            rep.rows.push(vec![l.norm(), *e]);
        }
        let worst = env.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        rep.samples = env.len();
        rep.detail("max_successive_ratio", worst);
        rep.pass = env.len() < 2 || worst <= 1.1;
        out.push(rep);
    }
    out.extend(difference_checks(curve, lambdas[0], seed ^ 0x5eed));
    out
}

/// Slope of the per-decade maxima of `y` against `x` on log axes.
fn binned_max_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut bins: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (a, b) in x.iter().zip(y) {
        let key = (a.log10() * 2.0).floor() as i64;
        let e = bins.entry(key).or_insert((*a, 0.0));
        if *b > e.1 {
            *e = (*a, *b);
        }
    }
    let (bx, by): (Vec<f64>, Vec<f64>) = bins.values().cloned().unzip();
    fit_exponent(&bx, &by)
}

/// Difference quotients: `N` and `L` in the target and in the source.
fn difference_checks(curve: &CurveDef, lambda: C64, seed: u64) -> Vec<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deltas: Vec<f64> = (0..7).map(|k| 1e-3 * 2f64.powi(k)).collect();
    let specs: [(&str, bool, bool, f64); 4] = [
        ("n_difference_z", false, false, 0.8),
        ("l_difference_z", true, false, 0.8),
        ("n_difference_w", false, true, 0.7),
        ("l_difference_w", true, true, 0.8),
    ];
    let mut reports: Vec<EstimateReport> = specs
        .iter()
        .map(|s| {
            let mut r = EstimateReport::new(s.0, [s.3, f64::INFINITY]);
            r.columns = vec!["base".into(), "delta".into(), "difference".into()];
            r
        })
        .collect();
    let mut exps: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let (mut bases, mut attempts) = (0, 0);
    while bases < 8 && attempts < 400 {
        attempts += 1;
        let z1 = random_curve_point(curve, &mut rng, 0.7 * curve.radius);
        let w = match at_level(curve, &z1, C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)), 0.2, 1.5) {
            Some(w) => w,
            None => continue,
        };
        let gamma = b_value(&z1.z, &w.z).norm();
        if 9.0 * deltas.last().unwrap().powi(2) >= gamma {
            continue;
        }
        bases += 1;
        for (k, &(_, is_l, in_w, _)) in specs.iter().enumerate() {
            let moving = if in_w { &w } else { &z1 };
            let eval = |z: &CurvePoint, w: &CurvePoint| {
                if is_l {
                    kernel_l(curve, lambda, 1.0, z, w)
                } else {
                    kernel_n(curve, lambda, 1.0, z, w)
                }
            };
            let base_val = eval(&z1, &w);
            let mut ys = Vec::new();
            for &d in &deltas {
                let mut worst = 0.0f64;
                for m in 0..8 {
                    let dir = C64::from_polar(1.0, PI * m as f64 / 8.0);
                    let Some(p) = at_level(curve, moving, dir, d * d, 0.5) else { continue };
                    let v = if in_w { eval(&z1, &p) } else { eval(&p, &w) };
                    worst = worst.max(kernel_norm([v[0] - base_val[0], v[1] - base_val[1]]));
                }
                reports[k].rows.push(vec![bases as f64, d, worst]);
                ys.push(worst);
            }
            if let Some(e) = fit_exponent(&deltas, &ys) {
                exps[k].push(e);
            }
        }
    }
    for (k, rep) in reports.iter_mut().enumerate() {
        let min = exps[k].iter().cloned().fold(f64::INFINITY, f64::min);
        rep.samples = exps[k].len();
        rep.exponent = Some(min);
        rep.violations = exps[k].iter().filter(|&&e| e < specs[k].3).count();
        rep.pass = !exps[k].is_empty() && rep.violations == 0;
    }
    reports
}

/// Boundary-circle integrals over `{|B(z,w)| = η}` for the smooth form
/// `g = ū₁`: the majorant `M(η) = ∮ |g(w) − g(z)|·|k(z,w)|·|dτ_w|` must scale
/// like `η^{1/2}` (circle length `~η^{1/2}` times a bounded integrand), and the
/// signed integral `Z(η) = ∮ (g(w) − g(z)) k(z,w) dτ_w` must vanish at least
/// as fast. The signed exponent is reported separately: the leading term of
/// `Z` cancels by the near-symmetry `τ ↦ −τ` of the level curve, so it is
/// typically close to 1.
pub fn check_zero_limit(curve: &CurveDef, centers: usize, etas: &[f64], seed: u64) -> EstimateReport {
    let mut rep = EstimateReport::new("zero_limit", [0.35, 0.65]);
    rep.columns = vec!["center".into(), "eta".into(), "majorant".into(), "abs_signed".into()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = |p: &CurvePoint| p.u[0].conj();
    let (mut exps, mut signed) = (Vec::new(), Vec::new());
    let mut found = 0;
    let mut attempts = 0;
    while found < centers && attempts < 50 * centers {
        attempts += 1;
        let z = random_curve_point(curve, &mut rng, 0.6 * curve.radius);
        let un = (z.u[0].norm_sqr() + z.u[1].norm_sqr()).sqrt();
        if un < 0.3 {
            continue;
        }
        let (mut maj, mut sig) = (Vec::new(), Vec::new());
        let mut ok = true;
        for &eta in etas {
            let m = 1024;
            let pts: Option<Vec<CurvePoint>> = (0..m)
                .map(|k| at_level(curve, &z, C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64), eta, 1.0))
                .collect();
            let Some(pts) = pts else {
                ok = false;
                break;
            };
            let taus: Vec<C64> = pts.iter().map(|p| z.frame.coord(&z.u, &p.u)).collect();
            let (mut s, mut a) = (C64::new(0.0, 0.0), 0.0);
            for k in 0..m {
                let dtau = 0.5 * (taus[(k + 1) % m] - taus[(k + m - 1) % m]);
                let term = (g(&pts[k]) - g(&z)) * cauchy_leray(curve, &z, &pts[k]);
                s += term * dtau;
                a += term.norm() * dtau.norm();
            }
            rep.rows.push(vec![found as f64, eta, a, s.norm()]);
            maj.push(a);
            sig.push(s.norm());
        }
        if !ok {
            continue;
        }
        found += 1;
        let e = fit_exponent(etas, &maj).unwrap_or(f64::NAN);
        let es = fit_exponent(etas, &sig).unwrap_or(f64::NAN);
        rep.detail(&format!("exponent_center_{found}"), e);
        rep.detail(&format!("signed_exponent_center_{found}"), es);
        if !(0.35..=0.65).contains(&e) || !(es >= 0.35) {
            rep.violations += 1;
        }
        exps.push(e);
        signed.push(es);
    }
    rep.samples = found;
    rep.exponent = (!exps.is_empty()).then(|| exps.iter().sum::<f64>() / exps.len() as f64);
    if !signed.is_empty() {
        rep.detail("signed_exponent_mean", signed.iter().sum::<f64>() / signed.len() as f64);
    }
    rep.pass = found > 0 && rep.violations == 0;
    rep
}

/// `∃ λ₀`: `‖R_λ‖ ≤ ½` for every listed `λ ≥ λ₀`, and beyond `λ₀` the
/// norms do not increase by more than 10%.
pub fn check_contraction(lambdas: &[f64], norms: &[f64]) -> EstimateReport {
    let mut rep = EstimateReport::new("contraction", [0.0, 0.5]);
    rep.columns = vec!["lambda_abs".into(), "norm_estimate".into()];
    for (l, n) in lambdas.iter().zip(norms) {
        rep.rows.push(vec![*l, *n]);
    }
    rep.samples = norms.len();
    let lambda0 = (0..norms.len()).find(|&k| norms[k..].iter().all(|&n| n <= 0.5));
    if let Some(k) = lambda0 {
        rep.detail("lambda0", lambdas[k]);
        let mono = norms[k..].windows(2).all(|w| w[1] <= 1.1 * w[0]);
        rep.detail("monotone_beyond_lambda0", if mono { 1.0 } else { 0.0 });
        rep.pass = mono && lambdas[k] <= 40.0;
    }
    rep.envelope = norms.iter().cloned().reduce(f64::max);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_fit_recovers_powers() {
        let x: Vec<f64> = (1..10).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(1.5)).collect();
        assert!((fit_exponent(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert!(fit_exponent(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn identities_hold_on_the_fermat_cubic() {
        let rep = check_algebraic_identities(&CurveDef::fermat_cubic(2.0), 200, 1);
        assert!(rep.pass, "{:?}", rep.details);
    }

    #[test]
    fn gamma_bound_has_no_violations() {
        let rep = check_gamma_bound(2000, 4);
        assert!(rep.pass, "{:?}", rep.details);
        // the shell samples get close to the lower bound
        assert!(rep.details["min_ratio"] < 0.5);
    }

    #[test]
    fn planar_model_has_exponent_three_halves() {
        let deltas = [1e-3, 3e-3, 1e-2, 3e-2];
        let a: Vec<f64> = deltas.iter().map(|&d| planar_model_area(d)).collect();
        let e = fit_exponent(&deltas, &a).unwrap();
        assert!((e - 1.5).abs() < 0.02, "{e}");
    }

    #[test]
    fn degenerate_triple_sits_inside_the_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = rand_sphere(&mut rng);
        let z = sphere_near(&mut rng, &w, 0.3);
        let gamma = b_value(&w, &z).norm();
        // ζ = w: |B(z,ζ)| = |B(z,w)| = γ by conjugate symmetry of |B|
        let r = b_value(&z, &w).norm() / gamma;
        assert!((r - 1.0).abs() < 1e-12);
        assert!((2.0 / 9.0..=16.0 / 9.0).contains(&r));
    }

    #[test]
    fn area_scaling_on_a_coarse_fermat_mesh() {
        let curve = CurveDef::fermat_cubic(1.5);
        let mesh = crate::mesh::build_mesh(&curve, &crate::mesh::MeshOptions::new(0.1)).unwrap();
        let centers = area_centers(&mesh, 0.3, 5, 3);
        assert_eq!(centers.len(), 5);
        let deltas: Vec<f64> = (0..8).map(|k| 2e-3 * 10f64.powf(k as f64 / 7.0)).collect();
        let rep = check_area_scaling(&curve, &mesh, &centers, &deltas, 16);
        assert!(rep.pass, "{:?}", rep.details);
        // a δ grid far below the sub-cell size is inconclusive, not failed
        let tiny = check_area_scaling(&curve, &mesh, &centers, &[1e-7, 2e-7], 2);
        assert!(tiny.inconclusive && !tiny.pass);
    }

    #[test]
    fn contraction_logic() {
        assert!(check_contraction(&[5.0, 10.0, 20.0, 40.0], &[0.9, 0.6, 0.4, 0.3]).pass);
        assert!(!check_contraction(&[5.0, 10.0, 20.0, 40.0], &[0.9, 0.6, 0.4, 0.6]).pass);
        assert!(check_contraction(&[5.0, 10.0], &[0.0, 0.0]).pass);
    }

    #[test]
    fn zero_limit_scales_like_sqrt_eta() {
        let rep = check_zero_limit(&CurveDef::fermat_cubic(2.0), 3, &[1e-3, 3e-3, 1e-2], 8);
        assert!(rep.pass, "{:?} {:?}", rep.exponent, rep.details);
    }
}
