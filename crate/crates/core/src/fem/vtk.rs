//! Legacy ASCII VTK output (unstructured grid of linear triangles).

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::fem::space::{Degree, FeFunction, ValueKind};
use crate::mesh::Mesh;

const VTK_TRIANGLE: u8 = 5;

struct PointField {
    name: String,
    kind: ValueKind,
    /// Component-major values at the output points.
    values: Vec<Vec<f64>>,
}

/// Collects point fields and renders them on either the mesh itself or its
/// uniform once-refined version (vertices plus edge midpoints), which shows
/// every P2 nodal value.
pub struct VtkWriter<'a> {
    mesh: &'a Mesh,
    refine: bool,
    title: String,
    fields: Vec<PointField>,
}

impl<'a> VtkWriter<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        VtkWriter { mesh, refine: false, title: "diffuse-fsi".into(), fields: Vec::new() }
    }

    pub fn refined(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        // The title line may not contain newlines.
        self.title = title.into().replace('\n', " ");
        self
    }

    fn n_points(&self) -> usize {
        self.mesh.n_vertices() + if self.refine { self.mesh.n_edges() } else { 0 }
    }

    /// Adds a finite-element function as point data.
    pub fn add_function(&mut self, name: &str, f: &FeFunction) -> Result<()> {
        let space = f.space();
        if !std::ptr::eq(space.mesh().as_ref(), self.mesh) {
            return Err(Error::MeshMismatch);
        }
        let nv = self.mesh.n_vertices();
        let values = (0..space.n_components())
            .map(|c| {
                let comp = f.component(c);
                let mut out = comp[..nv].to_vec();
                if self.refine {
                    match space.degree() {
                        Degree::P2 => out.extend_from_slice(&comp[nv..]),
                        Degree::P1 => out.extend(self.mesh.edges().iter().map(|e| 0.5 * (comp[e[0]] + comp[e[1]]))),
                    }
                }
                out
            })
            .collect();
        self.fields.push(PointField { name: sanitize(name), kind: space.kind(), values });
        Ok(())
    }

    /// Adds raw scalar values, one per output point.
    pub fn add_point_scalars(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_points() {
            return Err(Error::SpaceMismatch(format!("{} values for {} points", values.len(), self.n_points())));
        }
        self.fields.push(PointField { name: sanitize(name), kind: ValueKind::Scalar, values: vec![values] });
        Ok(())
    }

    pub fn finish(self) -> String {
        let mesh = self.mesh;
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{}\nASCII\nDATASET UNSTRUCTURED_GRID", self.title);
        let _ = writeln!(s, "POINTS {} double", self.n_points());
        for p in mesh.vertices() {
            let _ = writeln!(s, "{} {} 0", p[0], p[1]);
        }
        if self.refine {
            for e in 0..mesh.n_edges() {
                let p = mesh.edge_midpoint(e);
                let _ = writeln!(s, "{} {} 0", p[0], p[1]);
            }
        }
        let cells: Vec<[usize; 3]> = if self.refine {
            let nv = mesh.n_vertices();
            mesh.triangles()
                .iter()
                .zip(mesh.triangle_edges())
                .flat_map(|(t, e)| {
                    let (m01, m12, m20) = (nv + e[0], nv + e[1], nv + e[2]);
                    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
                })
                .collect()
        } else {
            mesh.triangles().to_vec()
        };
        let _ = writeln!(s, "CELLS {} {}", cells.len(), 4 * cells.len());
        for c in &cells {
            let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", cells.len());
        for _ in &cells {
            let _ = writeln!(s, "{VTK_TRIANGLE}");
        }
        if !self.fields.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.n_points());
        }
        for f in &self.fields {
            let n = f.values[0].len();
            match f.kind {
                ValueKind::Scalar => {
                    let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
                    for v in &f.values[0] {
                        let _ = writeln!(s, "{v}");
                    }
                }
                ValueKind::Vector2 => {
                    let _ = writeln!(s, "VECTORS {} double", f.name);
                    for i in 0..n {
                        let _ = writeln!(s, "{} {} 0", f.values[0][i], f.values[1][i]);
                    }
                }
                ValueKind::SymTensor2 => {
                    let _ = writeln!(s, "TENSORS {} double", f.name);
                    for i in 0..n {
                        let (xx, xy, yy) = (f.values[0][i], f.values[1][i], f.values[2][i]);
                        let _ = writeln!(s, "{xx} {xy} 0\n{xy} {yy} 0\n0 0 0");
                    }
                }
            }
        }
        s
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect()
}
