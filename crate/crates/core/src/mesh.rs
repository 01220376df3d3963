//! Conforming triangulations of the unit square.

use std::collections::{BTreeSet, HashMap};

/// Side of the unit square a boundary edge lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
    /// Boundary of a mesh that does not cover the whole square.
    Other,
}

/// How each square cell of the structured grid is split into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshPattern {
    /// Two triangles per cell, split along the bottom-left to top-right diagonal.
    RightDiagonal,
    /// Four triangles per cell, meeting at the cell centroid.
    UnionJack,
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates, constant on the cell.
    pub grad_bary: [[f64; 2]; 3],
}

impl CellGeometry {
    pub fn from_vertices(vertices: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_bary = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        CellGeometry { vertices, area: 0.5 * det, grad_bary }
    }

    /// Maps barycentric coordinates to a physical point.
    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }

    /// Barycentric coordinates of a physical point (may lie outside the cell).
    pub fn barycentric(&self, p: [f64; 2]) -> [f64; 3] {
        let v0 = self.vertices[0];
        let d = [p[0] - v0[0], p[1] - v0[1]];
        let l1 = self.grad_bary[1][0] * d[0] + self.grad_bary[1][1] * d[1];
        let l2 = self.grad_bary[2][0] * d[0] + self.grad_bary[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }
}

/// Immutable triangulation of (0,1)² with edge connectivity.
///
/// Local edge `k` of a triangle joins local vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    boundary_tags: Vec<Option<BoundaryTag>>,
    cell_size: f64,
}

const COORD_TOL: f64 = 1e-12;

impl Mesh {
    /// Builds a mesh from raw vertices and counterclockwise triangles.
    ///
    /// Panics on a non-positive triangle or a non-manifold edge; both are
    /// construction bugs.
    pub fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, cell_size: f64) -> Self {
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());

        for (t, tri) in triangles.iter().enumerate() {
            let geom = CellGeometry::from_vertices([vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]]);
            assert!(geom.area > 0.0, "triangle {t} is not counterclockwise");
            let mut local = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    assert!(slot[1].is_none(), "edge {e} shared by more than two triangles");
                    slot[1] = Some(t);
                }
                local[k] = e;
            }
            triangle_edges.push(local);
        }

        let boundary_tags = edges
            .iter()
            .zip(&edge_triangles)
            .map(|(e, adj)| {
                if adj[1].is_some() {
                    return None;
                }
                let (p, q) = (vertices[e[0]], vertices[e[1]]);
                let on = |a: f64, b: f64, v: f64| (a - v).abs() < COORD_TOL && (b - v).abs() < COORD_TOL;
                Some(if on(p[0], q[0], 0.0) {
                    BoundaryTag::Left
                } else if on(p[0], q[0], 1.0) {
                    BoundaryTag::Right
                } else if on(p[1], q[1], 0.0) {
                    BoundaryTag::Bottom
                } else if on(p[1], q[1], 1.0) {
                    BoundaryTag::Top
                } else {
                    BoundaryTag::Other
                })
            })
            .collect();

        Mesh { vertices, triangles, edges, triangle_edges, edge_triangles, boundary_tags, cell_size }
    }

    /// Structured mesh with `n_per_side` cells along each side.
    pub fn build_uniform(n_per_side: usize, pattern: MeshPattern) -> Self {
        assert!(n_per_side >= 1, "n_per_side must be positive");
        let coords: Vec<f64> = (0..=n_per_side).map(|i| i as f64 / n_per_side as f64).collect();
        Self::tensor(&coords, &coords, pattern)
    }

    /// Union-jack mesh on a tensor grid that is `ratio` times finer inside
    /// the band `[center - radius - band, center + radius + band]` in each
    /// direction. The grid lines are fixed, so this is a static refinement.
    pub fn build_graded(n_per_side: usize, center: [f64; 2], radius: f64, band: f64, ratio: f64) -> Self {
        assert!(n_per_side >= 1 && ratio >= 1.0);
        let xs = graded_coords(n_per_side, center[0] - radius - band, center[0] + radius + band, ratio);
        let ys = graded_coords(n_per_side, center[1] - radius - band, center[1] + radius + band, ratio);
        Self::tensor(&xs, &ys, MeshPattern::UnionJack)
    }

    fn tensor(xs: &[f64], ys: &[f64], pattern: MeshPattern) -> Self {
        let (nx, ny) = (xs.len() - 1, ys.len() - 1);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for &y in ys {
            for &x in xs {
                vertices.push([x, y]);
            }
        }
        let grid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::new();
        match pattern {
            MeshPattern::RightDiagonal => {
                for j in 0..ny {
                    for i in 0..nx {
                        let (a, b, c, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                        triangles.push([a, b, c]);
                        triangles.push([a, c, d]);
                    }
                }
            }
            MeshPattern::UnionJack => {
                let first_center = vertices.len();
                for j in 0..ny {
                    for i in 0..nx {
                        vertices.push([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]);
                    }
                }
                for j in 0..ny {
                    for i in 0..nx {
                        let c = first_center + j * nx + i;
                        let (a, b, cc, d) = (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                        triangles.push([a, b, c]);
                        triangles.push([b, cc, c]);
                        triangles.push([cc, d, c]);
                        triangles.push([d, a, c]);
                    }
                }
            }
        }
        let widest = xs
            .windows(2)
            .chain(ys.windows(2))
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max);
        Self::from_parts(vertices, triangles, widest)
    }

    /// Copy with every coordinate multiplied by `factor` (boundary tags kept).
    pub fn scaled(&self, factor: f64) -> Mesh {
        let mut m = self.clone();
        m.vertices.iter_mut().for_each(|p| *p = [factor * p[0], factor * p[1]]);
        m.cell_size *= factor;
        m
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge indices of each triangle's local edges.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edge_triangles(&self) -> &[[Option<usize>; 2]] {
        &self.edge_triangles
    }

    /// `Some(tag)` for boundary edges, `None` for interior ones.
    pub fn boundary_tags(&self) -> &[Option<BoundaryTag>] {
        &self.boundary_tags
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Characteristic Δx: the widest grid spacing.
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell(&self, t: usize) -> CellGeometry {
        let tri = self.triangles[t];
        CellGeometry::from_vertices([self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]])
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Vertices lying on ∂Ω.
    pub fn boundary_vertices(&self) -> BTreeSet<usize> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(_, p)| on_boundary(**p))
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of edges lying on ∂Ω.
    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary_tags.iter().enumerate().filter_map(|(e, t)| t.map(|_| e))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.cell(t).area).sum()
    }

    /// Finds a triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        (0..self.n_triangles()).find_map(|t| {
            let b = self.cell(t).barycentric(p);
            (b.iter().all(|&l| l >= -TOL)).then_some((t, b))
        })
    }

    /// Legacy ASCII VTK unstructured grid (cell type 5) without point data.
    pub fn to_vtk(&self) -> String {
        crate::fem::vtk::VtkWriter::new(self).finish()
    }
}

pub(crate) fn on_boundary(p: [f64; 2]) -> bool {
    p[0].abs() < COORD_TOL || (p[0] - 1.0).abs() < COORD_TOL || p[1].abs() < COORD_TOL || (p[1] - 1.0).abs() < COORD_TOL
}

/// Grid coordinates on [0,1] with density `ratio` inside `[lo, hi]` and 1 outside.
fn graded_coords(n: usize, lo: f64, hi: f64, ratio: f64) -> Vec<f64> {
    let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
    let mass = lo + ratio * (hi - lo) + (1.0 - hi);
    let inverse = |m: f64| {
        if m <= lo {
            m
        } else if m <= lo + ratio * (hi - lo) {
            lo + (m - lo) / ratio
        } else {
            hi + (m - lo - ratio * (hi - lo))
        }
    };
    (0..=n)
        .map(|i| if i == n { 1.0 } else { inverse(mass * i as f64 / n as f64) })
        .collect()
}
