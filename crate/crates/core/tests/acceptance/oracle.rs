//! Dense reference assembly on tiny meshes and finite-difference forcing.
//!
//! Nothing here calls the library's shape functions, quadrature or
//! assembly: basis functions are rebuilt from barycentric coordinates and
//! integrals use a collapsed Gauss-Legendre rule far above the needed order.

use std::f64::consts::PI;

use diffuse_fsi::fem::{CsrMatrix, FeFunction, FeSpace};
use diffuse_fsi::materials::MaterialParams;
use diffuse_fsi::mesh::Mesh;

const GAUSS_POINTS: usize = 9;

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            (0.5 * (x + 1.0), 0.5 * w)
        })
        .collect()
}

pub struct Triangle {
    pub v: [[f64; 2]; 3],
    pub area: f64,
    pub grad_l: [[f64; 2]; 3],
}

impl Triangle {
    pub fn new(v: [[f64; 2]; 3]) -> Self {
        let j = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // Rows of J⁻¹ are the gradients of λ1 and λ2.
        let g1 = [j[1][1] / det, -j[0][1] / det];
        let g2 = [-j[1][0] / det, j[0][0] / det];
        Triangle { v, area: 0.5 * det.abs(), grad_l: [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2] }
    }

    /// Points and weights of a collapsed tensor rule, exact to degree 2n − 2.
    pub fn quadrature(&self) -> Vec<([f64; 2], [f64; 3], f64)> {
        let gl = gauss_legendre(GAUSS_POINTS);
        let mut out = Vec::new();
        for &(u, wu) in &gl {
            for &(s, ws) in &gl {
                let (l1, l2) = (u, s * (1.0 - u));
                let l = [1.0 - l1 - l2, l1, l2];
                let x = [
                    l[0] * self.v[0][0] + l[1] * self.v[1][0] + l[2] * self.v[2][0],
                    l[0] * self.v[0][1] + l[1] * self.v[1][1] + l[2] * self.v[2][1],
                ];
                out.push((x, l, wu * ws * (1.0 - u) * 2.0 * self.area));
            }
        }
        out
    }

    fn local_nodes(&self) -> [[f64; 2]; 6] {
        let mid = |a: usize, b: usize| [0.5 * (self.v[a][0] + self.v[b][0]), 0.5 * (self.v[a][1] + self.v[b][1])];
        [self.v[0], self.v[1], self.v[2], mid(0, 1), mid(1, 2), mid(2, 0)]
    }
}

/// Value and gradient of one scalar basis function at barycentric point `l`.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub value: f64,
    pub grad: [f64; 2],
}

fn local_shape(p2: bool, tri: &Triangle, local: usize, l: [f64; 3]) -> Shape {
    let g = &tri.grad_l;
    if !p2 {
        return Shape { value: l[local], grad: g[local] };
    }
    match local {
        0..=2 => {
            let i = local;
            Shape { value: l[i] * (2.0 * l[i] - 1.0), grad: [(4.0 * l[i] - 1.0) * g[i][0], (4.0 * l[i] - 1.0) * g[i][1]] }
        }
        _ => {
            let (i, j) = [(0, 1), (1, 2), (2, 0)][local - 3];
            Shape {
                value: 4.0 * l[i] * l[j],
                grad: [4.0 * (l[i] * g[j][0] + l[j] * g[i][0]), 4.0 * (l[i] * g[j][1] + l[j] * g[i][1])],
            }
        }
    }
}

/// Scalar basis of a space restricted to each triangle: for every triangle,
/// (global scalar dof, local node) pairs found by matching nodal points.
pub struct Basis {
    pub p2: bool,
    pub n_scalar: usize,
    pub n_comp: usize,
    pub per_tri: Vec<Vec<(usize, usize)>>,
}

impl Basis {
    pub fn new(space: &FeSpace, tris: &[Triangle]) -> Self {
        let points = space.dof_points();
        let p2 = points.len() > space.mesh().n_vertices();
        let nl = if p2 { 6 } else { 3 };
        let per_tri = tris
            .iter()
            .map(|t| {
                let nodes = t.local_nodes();
                (0..nl)
                    .map(|a| {
                        let d = points
                            .iter()
                            .position(|p| (p[0] - nodes[a][0]).abs() < 1e-12 && (p[1] - nodes[a][1]).abs() < 1e-12)
                            .expect("every local node is a dof point");
                        (d, a)
                    })
                    .collect()
            })
            .collect();
        Basis { p2, n_scalar: points.len(), n_comp: space.dof_count() / points.len(), per_tri }
    }

    /// (global scalar dof, shape) for the basis functions living on triangle t.
    pub fn shapes(&self, tris: &[Triangle], t: usize, l: [f64; 3]) -> Vec<(usize, Shape)> {
        self.per_tri[t].iter().map(|&(d, a)| (d, local_shape(self.p2, &tris[t], a, l))).collect()
    }

    /// Component c of a coefficient vector at the point, with its gradient.
    pub fn eval(&self, tris: &[Triangle], t: usize, l: [f64; 3], coeffs: &[f64], c: usize) -> Shape {
        let mut out = Shape { value: 0.0, grad: [0.0; 2] };
        for (d, s) in self.shapes(tris, t, l) {
            let k = coeffs[c * self.n_scalar + d];
            out.value += k * s.value;
            out.grad[0] += k * s.grad[0];
            out.grad[1] += k * s.grad[1];
        }
        out
    }
}

pub fn triangles(mesh: &Mesh) -> Vec<Triangle> {
    let v = mesh.vertices();
    mesh.triangles().iter().map(|t| Triangle::new([v[t[0]], v[t[1]], v[t[2]]])).collect()
}

/// Field values available to integrands at a quadrature point.
pub struct Point<'a> {
    pub x: [f64; 2],
    pub tri: usize,
    pub l: [f64; 3],
    pub tris: &'a [Triangle],
}

impl Point<'_> {
    pub fn field(&self, f: &FeFunction, c: usize) -> Shape {
        let basis = Basis::new(f.space(), self.tris);
        basis.eval(self.tris, self.tri, self.l, f.coeffs(), c)
    }
}

/// Dense matrix of ∫ integrand(point, ci, test, cj, trial) over blocked
/// multi-component spaces.
pub fn dense_form(
    mesh: &Mesh,
    row: &FeSpace,
    col: &FeSpace,
    integrand: impl Fn(&Point, usize, &Shape, usize, &Shape) -> f64,
) -> Vec<Vec<f64>> {
    let tris = triangles(mesh);
    let (rb, cb) = (Basis::new(row, &tris), Basis::new(col, &tris));
    let mut out = vec![vec![0.0; col.dof_count()]; row.dof_count()];
    for t in 0..tris.len() {
        for (x, l, w) in tris[t].quadrature() {
            let pt = Point { x, tri: t, l, tris: &tris };
            let rs = rb.shapes(&tris, t, l);
            let cs = cb.shapes(&tris, t, l);
            for ci in 0..rb.n_comp {
                for (i, ti) in &rs {
                    for cj in 0..cb.n_comp {
                        for (j, sj) in &cs {
                            out[ci * rb.n_scalar + i][cj * cb.n_scalar + j] += w * integrand(&pt, ci, ti, cj, sj);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dense vector of ∫ integrand(point, c, test).
pub fn dense_load(mesh: &Mesh, space: &FeSpace, integrand: impl Fn(&Point, usize, &Shape) -> f64) -> Vec<f64> {
    let tris = triangles(mesh);
    let b = Basis::new(space, &tris);
    let mut out = vec![0.0; space.dof_count()];
    for t in 0..tris.len() {
        for (x, l, w) in tris[t].quadrature() {
            let pt = Point { x, tri: t, l, tris: &tris };
            for c in 0..b.n_comp {
                for (i, s) in b.shapes(&tris, t, l) {
                    out[c * b.n_scalar + i] += w * integrand(&pt, c, &s);
                }
            }
        }
    }
    out
}

/// Largest entrywise difference, relative to the largest entry when that exceeds 1.
pub fn matrix_gap(a: &CsrMatrix, dense: &[Vec<f64>]) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (dense.len(), dense[0].len()));
    let scale = dense.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut gap: f64 = 0.0;
    for (i, row) in dense.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            gap = gap.max((a.get(i, j) - d).abs());
        }
    }
    gap / scale
}

pub fn vector_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// (LB + BLᵀ) for the symmetric unit tensor of stored component d, read back
/// in stored components (xx, xy, yy), by full 2×2 products.
pub fn upper_convected_column(l: [[f64; 2]; 2], d: usize) -> [f64; 3] {
    let mut e = [[0.0; 2]; 2];
    match d {
        0 => e[0][0] = 1.0,
        1 => {
            e[0][1] = 1.0;
            e[1][0] = 1.0
        }
        _ => e[1][1] = 1.0,
    }
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                m[i][j] += l[i][k] * e[k][j] + e[i][k] * l[j][k];
            }
        }
    }
    [m[0][0], m[0][1], m[1][1]]
}

// ---------------------------------------------------------------------------
// Finite-difference forcing oracle.

pub const H: f64 = 1e-3;
/// Outer step when differentiating an already differenced quantity.
pub const OUTER: f64 = 4e-3;

pub fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

pub fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h)
}

pub fn grad(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> [f64; 2] {
    [d1(&|s| f([s, x[1]]), x[0], h), d1(&|s| f([x[0], s]), x[1], h)]
}

pub fn laplacian(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> f64 {
    d2(&|s| f([s, x[1]]), x[0], h) + d2(&|s| f([x[0], s]), x[1], h)
}

pub fn v_ref(x: [f64; 2], t: f64) -> [f64; 2] {
    let s = (PI * t).sin();
    [0.2 * s * (PI * x[0]).sin() * (PI * x[1]).cos(), -0.2 * s * (PI * x[0]).cos() * (PI * x[1]).sin()]
}

pub fn phi_ref(x: [f64; 2], t: f64) -> f64 {
    (PI * t).sin() * (PI * x[0]).cos() * (PI * x[1]).cos()
}

pub fn b_ref(x: [f64; 2], t: f64) -> [f64; 3] {
    let q = 1e-5 * (PI * t).sin() * (x[0] + 10.0).powi(2) * (x[1] + 10.0).powi(2);
    [q, 6.0 * q, 5.0 * q]
}

fn blend(fluid: f64, solid: f64, phi: f64) -> f64 {
    let c = phi.clamp(-1.0, 1.0);
    fluid * 0.5 * (1.0 + c) + solid * 0.5 * (1.0 - c)
}

/// Strong residuals of the closed-form fields, differentiated numerically.
pub struct ForcingOracle {
    pub p: MaterialParams,
}

impl ForcingOracle {
    fn rho(&self, phi: f64) -> f64 {
        blend(self.p.rho_f, self.p.rho_s, phi)
    }
    fn mu(&self, phi: f64) -> f64 {
        blend(self.p.mu_f, self.p.mu_s, phi)
    }
    fn g(&self, phi: f64) -> f64 {
        blend(self.p.g_f, self.p.g_s, phi)
    }
    fn alpha(&self, phi: f64) -> f64 {
        blend(self.p.alpha_f, 0.0, phi)
    }

    pub fn m(&self, x: [f64; 2], t: f64) -> f64 {
        let phi = phi_ref(x, t);
        let lap = laplacian(&|y| phi_ref(y, t), x, H);
        self.p.gamma * ((phi.powi(3) - phi) / self.p.epsilon - self.p.epsilon * lap)
    }

    pub fn phi_forcing(&self, x: [f64; 2], t: f64) -> f64 {
        let dt = d1(&|s| phi_ref(x, s), t, H);
        let v = v_ref(x, t);
        let g = grad(&|y| phi_ref(y, t), x, H);
        let lap_m = laplacian(&|y| self.m(y, t), x, OUTER);
        dt + v[0] * g[0] + v[1] * g[1] - self.p.mobility * lap_m
    }

    pub fn b_forcing(&self, x: [f64; 2], t: f64) -> [f64; 3] {
        let phi = phi_ref(x, t);
        let v = v_ref(x, t);
        let l: [[f64; 2]; 2] = std::array::from_fn(|i| grad(&|y| v_ref(y, t)[i], x, H));
        let b = b_ref(x, t);
        let bm = [[b[0], b[1]], [b[1], b[2]]];
        let mut lb = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    lb[i][j] += l[i][k] * bm[k][j] + bm[i][k] * l[j][k];
                }
            }
        }
        let comps = [(0, 0), (0, 1), (1, 1)];
        std::array::from_fn(|c| {
            let (i, j) = comps[c];
            let bt = d1(&|s| b_ref(x, s)[c], t, H);
            let gb = grad(&|y| b_ref(y, t)[c], x, H);
            let id = if i == j { 1.0 } else { 0.0 };
            self.g(phi) * (bt + v[0] * gb[0] + v[1] * gb[1] - lb[i][j]) + self.alpha(phi) * (bm[i][j] - id)
        })
    }

    /// Momentum residual; every divergence is differenced from its flux.
    pub fn momentum_forcing(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let p = &self.p;
        let rho_v = |y: [f64; 2], s: f64, i: usize| self.rho(phi_ref(y, s)) * v_ref(y, s)[i];
        let v = v_ref(x, t);
        let gm = grad(&|y| self.m(y, t), x, OUTER);
        let flux = |y: [f64; 2], i: usize, j: usize| {
            let phi = phi_ref(y, t);
            let gi = grad(&|z| v_ref(z, t)[i], y, H);
            let gj = grad(&|z| v_ref(z, t)[j], y, H);
            let b = b_ref(y, t);
            let bm = [[b[0], b[1]], [b[1], b[2]]];
            let gp = grad(&|z| phi_ref(z, t), y, H);
            self.mu(phi) * (gi[j] + gj[i]) + self.g(phi) * bm[i][j] - p.gamma * p.epsilon * gp[i] * gp[j]
        };
        std::array::from_fn(|i| {
            let dt = d1(&|s| rho_v(x, s, i), t, H);
            let gr = grad(&|y| rho_v(y, t, i), x, H);
            let gvi = grad(&|y| v_ref(y, t)[i], x, H);
            let mob = 0.5 * (p.rho_f - p.rho_s) * p.mobility * (gm[0] * gvi[0] + gm[1] * gvi[1]);
            let div = d1(&|s| flux([s, x[1]], i, 0), x[0], OUTER) + d1(&|s| flux([x[0], s], i, 1), x[1], OUTER);
            dt + v[0] * gr[0] + v[1] * gr[1] + mob - div
        })
    }
}
