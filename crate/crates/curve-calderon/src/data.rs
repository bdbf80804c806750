//! Boundary measurements: traces on `bV`, the `∂`-to-`∂̄` pair of one CGO
//! solution, and the trace map recovering `h|_{bV}` from `g = ∂h`.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::CgoSolution;
use crate::geometry::{phase, C64};
use crate::mesh::CurveMesh;

/// A field restricted to the border, in mesh border order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTrace {
    pub nodes: Vec<usize>,
    pub component: Vec<usize>,
    pub arclength: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<C64>,
}

pub fn boundary_trace(mesh: &CurveMesh, field: &[C64]) -> BoundaryTrace {
    let nodes = mesh.boundary.clone();
    BoundaryTrace {
        component: nodes.iter().map(|&i| mesh.nodes[i].component).collect(),
        arclength: nodes.iter().map(|&i| mesh.nodes[i].param).collect(),
        weights: nodes.iter().map(|&i| mesh.nodes[i].weight).collect(),
        values: nodes.iter().map(|&i| field[i]).collect(),
        nodes,
    }
}

impl BoundaryTrace {
    /// `∮ a dτ + b dτ̄` per component for coefficient traces `a`, `b`.
    pub fn loop_integrals(mesh: &CurveMesh, a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); mesh.components.len()];
        for (k, &i) in mesh.boundary.iter().enumerate() {
            let n = &mesh.nodes[i];
            out[n.component] += (a[k] * n.dtau_ds + b[k] * n.dtau_ds.conj()) * n.weight;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basepoint {
    pub component: usize,
    /// Position in the border list.
    pub index: usize,
    pub arclength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation relative to the RMS of each trace.
    pub level: f64,
    pub seed: u64,
}

/// The measured pair `(∂f, ∂̄f)` on `bV` for one `λ`, as unit-frame
/// coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiData {
    pub lambda: C64,
    pub trace_nodes: Vec<usize>,
    pub arclength: Vec<f64>,
    pub df: Vec<C64>,
    pub dbar_f: Vec<C64>,
    pub basepoints: Vec<Basepoint>,
    pub noise: Option<NoiseSpec>,
}

/// Package the border derivatives of a forward solution. `∂f = e^{φ̄} ∂h`
/// uses the solver's `∂h`; `∂̄f` comes from the stencils across the collar.
pub fn synth_chi(mesh: &CurveMesh, cgo: &CgoSolution, noise: Option<NoiseSpec>) -> Result<ChiData> {
    let min = 3.0 * mesh.h;
    if mesh.collar < min * (1.0 - 1e-12) {
        return Err(Error::CollarTooThin { width: mesh.collar, min });
    }
    let lambda = cgo.lambda;
    let nodes = mesh.boundary.clone();
    let mut df: Vec<C64> =
        nodes.iter().map(|&i| phase(lambda, &mesh.nodes[i].point.u).conj().exp() * cgo.dh[i]).collect();
    let mut dbar_f: Vec<C64> = nodes.iter().map(|&i| cgo.dbar_f[i]).collect();
    if let Some(spec) = noise {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for trace in [&mut df, &mut dbar_f] {
            let rms = (trace.iter().map(|x| x.norm_sqr()).sum::<f64>() / trace.len().max(1) as f64).sqrt();
            let sd = spec.level * rms / 2f64.sqrt();
            if sd > 0.0 {
                let normal = Normal::new(0.0, sd).expect("finite standard deviation");
                for x in trace.iter_mut() {
                    *x += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
                }
            }
        }
    }
    let basepoints = mesh
        .components
        .iter()
        .enumerate()
        .map(|(c, comp)| {
            let first = comp.nodes[0];
            Basepoint { component: c, index: nodes.iter().position(|&i| i == first).unwrap(), arclength: 0.0 }
        })
        .collect();
    Ok(ChiData {
        lambda,
        arclength: nodes.iter().map(|&i| mesh.nodes[i].param).collect(),
        trace_nodes: nodes,
        df,
        dbar_f,
        basepoints,
        noise,
    })
}

/// Default tolerance on `|∮ df| / ∮ |df|` for the single-valuedness test.
pub const LOOP_TOLERANCE: f64 = 0.05;

fn dft(d: &[C64]) -> Vec<C64> {
    let n = d.len();
    let nf = n as f64;
    (0..n)
        .map(|m| (0..n).map(|k| d[k] * C64::from_polar(1.0, -2.0 * PI * ((m * k) % n) as f64 / nf)).sum::<C64>() / nf)
        .collect()
}

/// Signed frequency of DFT mode `m`; `None` for the Nyquist mode.
fn frequency(m: usize, n: usize) -> Option<f64> {
    if 2 * m < n {
        Some(m as f64)
    } else if 2 * m > n {
        Some(m as f64 - n as f64)
    } else {
        None
    }
}

/// Spectral antiderivative of a periodic sample on a uniform loop of
/// length `len`; returns the antiderivative vanishing at index 0 and the
/// mean (the loop integral divided by `len`).
fn periodic_antiderivative(d: &[C64], len: f64) -> (Vec<C64>, C64) {
    let n = d.len();
    let coef = dft(d);
    let out = (0..n)
        .map(|k| {
            let s = k as f64 * len / n as f64;
            let mut acc = C64::new(0.0, 0.0);
            for (m, cm) in coef.iter().enumerate().skip(1) {
                let Some(freq) = frequency(m, n) else { continue };
                let w = 2.0 * PI * freq / len;
                acc += cm / C64::new(0.0, w) * (C64::new(0.0, w * s).exp() - 1.0);
            }
            acc
        })
        .collect();
    (out, coef[0])
}

/// Spectral derivative in the sample index of a periodic sequence.
fn periodic_derivative(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    let coef = dft(x);
    (0..n)
        .map(|k| {
            let mut acc = C64::new(0.0, 0.0);
            for (m, cm) in coef.iter().enumerate().skip(1) {
                let Some(freq) = frequency(m, n) else { continue };
                let w = 2.0 * PI * freq / n as f64;
                acc += cm * C64::new(0.0, w) * C64::from_polar(1.0, w * k as f64);
            }
            acc
        })
        .collect()
}

/// `h|_{bV} = e^{−φ̄} F`, `F(s) = f(s₀) + ∫_{s₀}^{s} (e^{φ̄} g dτ + ∂̄f dτ̄)`
/// along each border component, with `f(s₀) = e^{φ(s₀)}` (the `μ → 1`
/// normalization). `g` is given in border order. Fails when a component's
/// loop integral exceeds `tol` relative to its total variation.
pub fn t_map(mesh: &CurveMesh, chi: &ChiData, g: &[C64], tol: f64) -> Result<Vec<C64>> {
    let lambda = chi.lambda;
    let mut out = vec![C64::new(0.0, 0.0); chi.trace_nodes.len()];
    for (c, comp) in mesh.components.iter().enumerate() {
        let pos: Vec<usize> =
            comp.nodes.iter().map(|i| chi.trace_nodes.iter().position(|j| j == i).expect("trace covers the border")).collect();
        // parametrize by the sample index t; dτ/dt from the periodic positions
        let pts: Vec<&crate::geometry::CurvePoint> = pos.iter().map(|&k| &mesh.nodes[chi.trace_nodes[k]].point).collect();
        let du: [Vec<C64>; 2] =
            [0, 1].map(|j| periodic_derivative(&pts.iter().map(|p| p.u[j]).collect::<Vec<_>>()));
        let d: Vec<C64> = (0..pos.len())
            .map(|t| {
                let (p, k) = (pts[t], pos[t]);
                let dtau = p.frame.tangent[0].conj() * du[0][t] + p.frame.tangent[1].conj() * du[1][t];
                let e = phase(lambda, &p.u).conj().exp();
                e * g[k] * dtau + chi.dbar_f[k] * dtau.conj()
            })
            .collect();
        let nt = d.len() as f64;
        let variation: f64 = d.iter().map(|x| x.norm()).sum::<f64>();
        let (anti, mean) = periodic_antiderivative(&d, nt);
        let closure = mean.norm() * nt;
        if closure > tol * variation.max(1e-300) {
            return Err(Error::InconsistentData(closure / variation.max(1e-300), c));
        }
        let base = chi.trace_nodes[pos[0]];
        let f0 = phase(lambda, &mesh.nodes[base].point.u).exp();
        for (k, &p) in pos.iter().enumerate() {
            let u = &mesh.nodes[chi.trace_nodes[p]].point.u;
            out[p] = (-phase(lambda, u).conj()).exp() * (f0 + anti[k]);
        }
    }
    Ok(out)
}

/// On-disk form of the measurements.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryDataFile {
    pub lambda: [f64; 2],
    pub basepoints: Vec<Basepoint>,
    /// `(arclength, re ∂f, im ∂f, re ∂̄f, im ∂̄f)` in border order.
    pub nodes: Vec<[f64; 5]>,
    pub noise_seed: Option<u64>,
    pub noise_level: f64,
}

impl ChiData {
    pub fn to_file(&self) -> BoundaryDataFile {
        BoundaryDataFile {
            lambda: [self.lambda.re, self.lambda.im],
            basepoints: self.basepoints.clone(),
            nodes: (0..self.df.len())
                .map(|k| [self.arclength[k], self.df[k].re, self.df[k].im, self.dbar_f[k].re, self.dbar_f[k].im])
                .collect(),
            noise_seed: self.noise.map(|n| n.seed),
            noise_level: self.noise.map_or(0.0, |n| n.level),
        }
    }

    /// Rebuild from a file written for `mesh`.
    pub fn from_file(mesh: &CurveMesh, file: &BoundaryDataFile) -> Result<ChiData> {
        if file.nodes.len() != mesh.boundary.len() {
            return Err(Error::Config(format!(
                "boundary data has {} nodes, mesh border has {}",
                file.nodes.len(),
                mesh.boundary.len()
            )));
        }
        Ok(ChiData {
            lambda: C64::new(file.lambda[0], file.lambda[1]),
            trace_nodes: mesh.boundary.clone(),
            arclength: file.nodes.iter().map(|r| r[0]).collect(),
            df: file.nodes.iter().map(|r| C64::new(r[1], r[2])).collect(),
            dbar_f: file.nodes.iter().map(|r| C64::new(r[3], r[4])).collect(),
            basepoints: file.basepoints.clone(),
            noise: file.noise_seed.map(|seed| NoiseSpec { level: file.noise_level, seed }),
        })
    }

    pub fn read(mesh: &CurveMesh, path: &Path) -> Result<ChiData> {
        let text = std::fs::read_to_string(path)?;
        let file: BoundaryDataFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ChiData::from_file(mesh, &file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{assemble_r, cgo_fields, solve_mu, Sigma};
    use crate::geometry::{c, CurveDef};
    use crate::mesh::{build_mesh, MeshOptions};
    use crate::stencil::build_stencils;

    fn setup(sigma: &Sigma, lambda: C64) -> (CurveMesh, CgoSolution) {
        let curve = CurveDef::graph_cubic(0.3, 0.05, 0.6).unwrap();
        let mesh = build_mesh(&curve, &MeshOptions::with_collar_cells(0.08, 5.0)).unwrap();
        let st = build_stencils(&mesh);
        let q = sigma.potential(&mesh).unwrap();
        let op = assemble_r(&curve, &mesh, lambda, &q).unwrap();
        let sol = solve_mu(&op).unwrap();
        let cgo = cgo_fields(&mesh, &st, &op, &sol);
        (mesh, cgo)
    }

    #[test]
    fn traces_of_constants_and_exact_forms() {
        let curve = CurveDef::graph_cubic(0.3, 0.05, 0.6).unwrap();
        let mesh = build_mesh(&curve, &MeshOptions::new(0.05)).unwrap();
        let ones = vec![c(2.0, -1.0); mesh.nodes.len()];
        let tr = boundary_trace(&mesh, &ones);
        assert!(tr.values.iter().all(|&v| v == c(2.0, -1.0)));
        // d(u₁² ū₁) = 2u₁ū₁ du₁ + u₁² dū₁, coefficients in the unit frame
        let a: Vec<C64> = mesh
            .boundary
            .iter()
            .map(|&i| {
                let n = &mesh.nodes[i].point;
                2.0 * n.u[0] * n.u[0].conj() * n.frame.tangent[0]
            })
            .collect();
        let b: Vec<C64> = mesh
            .boundary
            .iter()
            .map(|&i| {
                let n = &mesh.nodes[i].point;
                n.u[0] * n.u[0] * n.frame.tangent[0].conj()
            })
            .collect();
        let loops = BoundaryTrace::loop_integrals(&mesh, &a, &b);
        let scale: f64 = a.iter().map(|x| x.norm()).sum::<f64>() * mesh.h;
        assert!(loops[0].norm() < 1e-6 * scale, "{}", loops[0]);
    }

    #[test]
    fn antiderivative_of_a_fourier_mode() {
        let n = 40;
        let len = 3.0;
        let d: Vec<C64> =
            (0..n).map(|k| C64::new(0.0, 2.0 * PI * 3.0 / len * k as f64 * len / n as f64).exp() + 0.5).collect();
        let (a, mean) = periodic_antiderivative(&d, len);
        assert!((mean - 0.5).norm() < 1e-12);
        for k in 0..n {
            let s = k as f64 * len / n as f64;
            let w = 2.0 * PI * 3.0 / len;
            let exact = (C64::new(0.0, w * s).exp() - 1.0) / C64::new(0.0, w);
            assert!((a[k] - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_potential_round_trip_and_holomorphic_data() {
        let lambda = C64::from_polar(5.0, PI / 4.0);
        let (mesh, cgo) = setup(&Sigma::identity(), lambda);
        let chi = synth_chi(&mesh, &cgo, None).unwrap();
        assert!(chi.dbar_f.iter().all(|x| x.norm() < 1e-9));
        let g: Vec<C64> = mesh.boundary.iter().map(|&i| cgo.dh[i]).collect();
        let hb = t_map(&mesh, &chi, &g, LOOP_TOLERANCE).unwrap();
        for (k, &i) in mesh.boundary.iter().enumerate() {
            assert!((hb[k] - cgo.h[i]).norm() < 1e-4, "{} {}", hb[k], cgo.h[i]);
        }
        // g = 0 and χ = 0 leave only the basepoint constant; scaling is affine
        let zero = ChiData { dbar_f: vec![c(0.0, 0.0); chi.df.len()], ..chi.clone() };
        let h0 = t_map(&mesh, &zero, &vec![c(0.0, 0.0); g.len()], LOOP_TOLERANCE).unwrap();
        let h2 = t_map(&mesh, &zero, &g.iter().map(|x| 2.0 * x).collect::<Vec<_>>(), LOOP_TOLERANCE).unwrap();
        for k in 0..g.len() {
            assert!((h2[k] - h0[k] - 2.0 * (hb[k] - h0[k])).norm() < 1e-9);
        }
    }

    #[test]
    fn bump_round_trip_and_collar_contract() {
        let lambda = C64::from_polar(5.0, PI / 4.0);
        let (mesh, cgo) = setup(&Sigma::bump(0.3, 0.25), lambda);
        let chi = synth_chi(&mesh, &cgo, None).unwrap();
        let g: Vec<C64> = mesh.boundary.iter().map(|&i| cgo.dh[i]).collect();
        let hb = t_map(&mesh, &chi, &g, LOOP_TOLERANCE).unwrap();
        let err = mesh.boundary.iter().enumerate().map(|(k, &i)| (hb[k] - cgo.h[i]).norm()).fold(0.0, f64::max);
        assert!(err < 0.1, "round trip error {err}");
        let noisy = synth_chi(&mesh, &cgo, Some(NoiseSpec { level: 0.01, seed: 7 })).unwrap();
        assert_eq!(noisy, synth_chi(&mesh, &cgo, Some(NoiseSpec { level: 0.01, seed: 7 })).unwrap());
        assert_ne!(noisy.df, chi.df);
        let thin = CurveMesh { collar: mesh.h, ..mesh.clone() };
        assert!(matches!(synth_chi(&thin, &cgo, None), Err(Error::CollarTooThin { .. })));
        let back = ChiData::from_file(&mesh, &chi.to_file()).unwrap();
        assert_eq!(back, chi);
    }
}
