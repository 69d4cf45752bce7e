//! File formats: mesh JSON, VTK legacy ASCII, report CSV and field JSON.
//!
//! Mesh JSON fields: `dim`, `element_type`, `nodes` (coordinate lists of
//! length `dim`), `elements` (vertex ids), `faces` (`nodes`, `kind` in
//! interior/dirichlet/neumann, `elements`).
//!
//! Field JSON: per element `vertices`, and nodal coefficients `u`
//! (`nsd x n_k`), `p`, `L` (`msd x n_k`), `ustar` (`nsd x n_{k+1}`); per face
//! `trace` (component-major, null on Dirichlet faces); per element `rho`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::analysis::study::{ReportRow, TauSweepReport};
use crate::error::Result;
use crate::local::Discretization;
use crate::mesh::{FaceKind, Mesh};
use crate::reference::{ElementType, ReferenceElement};
use crate::solver::HdgSolution;

/// Format used for every float in CSV and VTK output (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that writes floats like [`fmt_f64`]. Non-finite values
/// become `null` before they reach it.
struct FixedFloats<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for FixedFloats<F> {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

/// Serialize with every float written to 17 significant digits.
pub fn to_json<T: Serialize + ?Sized>(value: &T, pretty: bool) -> Result<String> {
    let mut buf = Vec::new();
    if pretty {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
        value.serialize(&mut ser)?;
        buf.push(b'\n');
    } else {
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(CompactFormatter));
        value.serialize(&mut ser)?;
    }
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

#[derive(Serialize)]
struct MeshFaceJson<'a> {
    nodes: &'a [usize],
    kind: FaceKind,
    elements: Vec<usize>,
}

#[derive(Serialize)]
struct MeshJson<'a> {
    dim: usize,
    element_type: ElementType,
    h: f64,
    nodes: Vec<&'a [f64]>,
    elements: Vec<&'a [usize]>,
    faces: Vec<MeshFaceJson<'a>>,
}

pub fn mesh_to_json(mesh: &Mesh) -> Result<String> {
    let doc = MeshJson {
        dim: mesh.dim,
        element_type: mesh.element_type,
        h: mesh.h,
        nodes: mesh.nodes.iter().map(|p| &p[..mesh.dim]).collect(),
        elements: mesh.elements.iter().map(|e| e.vertices.as_slice()).collect(),
        faces: mesh
            .faces
            .iter()
            .map(|f| MeshFaceJson {
                nodes: &f.nodes,
                kind: f.kind,
                elements: f.sides.iter().map(|s| s.element).collect(),
            })
            .collect(),
    };
    to_json(&doc, true)
}

fn vtk_cell(element: ElementType) -> (u8, &'static [usize]) {
    match element {
        ElementType::Line => (3, &[0, 1]),
        ElementType::Triangle => (5, &[0, 1, 2]),
        ElementType::Quadrilateral => (9, &[0, 1, 3, 2]),
        ElementType::Tetrahedron => (10, &[0, 1, 2, 3]),
        ElementType::Hexahedron => (12, &[0, 1, 3, 2, 4, 5, 7, 6]),
    }
}

/// VTK legacy unstructured grid. Element vertices are duplicated per element
/// so discontinuous fields can be stored as point data; each field holds one
/// value tuple per (element, vertex) pair.
pub fn write_vtk(
    out: &mut impl Write,
    mesh: &Mesh,
    point_fields: &[(&str, usize, Vec<f64>)],
    cell_fields: &[(&str, Vec<f64>)],
) -> Result<()> {
    let (cell_type, order) = vtk_cell(mesh.element_type);
    let nv = order.len();
    let ne = mesh.n_elements();
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "stokes-hdg output").unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {} double", ne * nv).unwrap();
    for el in &mesh.elements {
        for &v in &el.vertices {
            let p = mesh.nodes[v];
            writeln!(s, "{} {} {}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2])).unwrap();
        }
    }
    writeln!(s, "CELLS {} {}", ne, ne * (nv + 1)).unwrap();
    for e in 0..ne {
        let ids: Vec<String> = order.iter().map(|&l| (e * nv + l).to_string()).collect();
        writeln!(s, "{} {}", nv, ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        writeln!(s, "{cell_type}").unwrap();
    }
    if !cell_fields.is_empty() {
        writeln!(s, "CELL_DATA {ne}").unwrap();
        for (name, values) in cell_fields {
            writeln!(s, "SCALARS {name} double 1").unwrap();
            writeln!(s, "LOOKUP_TABLE default").unwrap();
            for v in values {
                writeln!(s, "{}", fmt_f64(*v)).unwrap();
            }
        }
    }
    if !point_fields.is_empty() {
        writeln!(s, "POINT_DATA {}", ne * nv).unwrap();
        writeln!(s, "FIELD fields {}", point_fields.len()).unwrap();
        for (name, comps, values) in point_fields {
            writeln!(s, "{name} {comps} {} double", ne * nv).unwrap();
            for chunk in values.chunks(*comps) {
                let line: Vec<String> = chunk.iter().map(|v| fmt_f64(*v)).collect();
                writeln!(s, "{}", line.join(" ")).unwrap();
            }
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Values of element-wise nodal fields at the element vertices.
fn vertex_values(basis: &ReferenceElement, coeffs: &[nalgebra::DMatrix<f64>], nv: usize) -> Vec<f64> {
    let vertices = basis.element().vertex_coordinates();
    let phi: Vec<Vec<f64>> = vertices[..nv].iter().map(|xi| basis.values_at(xi)).collect();
    let mut out = Vec::new();
    for c in coeffs {
        for pv in &phi {
            for comp in 0..c.nrows() {
                out.push((0..c.ncols()).map(|m| c[(comp, m)] * pv[m]).sum());
            }
        }
    }
    out
}

/// VTK dump of a solution: u, p, L and u* at element vertices, plus the
/// element mean pressure as cell data.
pub fn solution_to_vtk(out: &mut impl Write, mesh: &Mesh, disc: &Discretization, sol: &HdgSolution) -> Result<()> {
    let nv = mesh.element_type.n_vertices();
    let u: Vec<_> = sol.fields.elements.iter().map(|f| f.u.clone()).collect();
    let p: Vec<_> =
        sol.fields.elements.iter().map(|f| nalgebra::DMatrix::from_row_slice(1, f.p.len(), f.p.as_slice())).collect();
    let l: Vec<_> = sol.fields.elements.iter().map(|f| f.l.clone()).collect();
    let fields = vec![
        ("velocity", disc.nsd(), vertex_values(&disc.basis, &u, nv)),
        ("pressure", 1, vertex_values(&disc.basis, &p, nv)),
        ("L", disc.msd(), vertex_values(&disc.basis, &l, nv)),
        ("velocity_star", disc.nsd(), vertex_values(&disc.post, &sol.post.elements, nv)),
    ];
    write_vtk(out, mesh, &fields, &[("rho", sol.fields.rho.clone())])
}

/// Mesh-only VTK file with the boundary tags left out.
pub fn mesh_to_vtk(out: &mut impl Write, mesh: &Mesh) -> Result<()> {
    write_vtk(out, mesh, &[], &[])
}

pub const CSV_HEADER: &str = "family,k,tau,level,h,dofs,err_u,err_p,err_L,err_ustar";

pub fn rows_to_csv<'a>(rows: impl IntoIterator<Item = &'a ReportRow>) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family,
            r.k,
            fmt_f64(r.tau),
            r.level,
            fmt_f64(r.h),
            r.dofs,
            fmt_f64(r.err_u),
            fmt_f64(r.err_p),
            fmt_f64(r.err_l),
            fmt_f64(r.err_ustar)
        )
        .unwrap();
    }
    s
}

/// Sweep rows; failed entries keep their tau and leave the other columns empty.
pub fn sweep_to_csv(report: &TauSweepReport) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for e in &report.entries {
        match &e.row {
            Some(r) => s.push_str(rows_to_csv([r]).lines().nth(1).unwrap()),
            None => {
                write!(s, "{},{},{},{},,,,,,", report.family, report.k, fmt_f64(e.tau), report.level).unwrap();
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct ElementFieldsJson {
    vertices: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    p: Vec<f64>,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
    ustar: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct FieldsJson<'a> {
    k: usize,
    element_type: ElementType,
    basis_nodes: Vec<Vec<f64>>,
    post_basis_nodes: Vec<Vec<f64>>,
    elements: Vec<ElementFieldsJson>,
    trace: &'a [Option<Vec<f64>>],
    rho: &'a [f64],
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

pub fn fields_to_json(mesh: &Mesh, disc: &Discretization, sol: &HdgSolution) -> Result<String> {
    let dim = mesh.dim;
    let elements = (0..mesh.n_elements())
        .map(|e| {
            let f = &sol.fields.elements[e];
            let verts = mesh.element_vertices(e);
            ElementFieldsJson {
                vertices: verts.iter().map(|p| p[..dim].to_vec()).collect(),
                u: rows(&f.u),
                p: f.p.iter().copied().collect(),
                l: rows(&f.l),
                ustar: rows(&sol.post.elements[e]),
            }
        })
        .collect();
    let doc = FieldsJson {
        k: disc.k,
        element_type: mesh.element_type,
        basis_nodes: disc.basis.nodes().iter().map(|p| p[..dim].to_vec()).collect(),
        post_basis_nodes: disc.post.nodes().iter().map(|p| p[..dim].to_vec()).collect(),
        elements,
        trace: &sol.fields.trace,
        rho: &sol.fields.rho,
    };
    to_json(&doc, false)
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}
