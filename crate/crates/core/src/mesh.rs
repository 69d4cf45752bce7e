//! Structured meshes of the unit box, face adjacency and boundary tags.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HdgError, Result};
use crate::geometry::{cell_quadrature, CellTables};
use crate::quadrature::build_quadrature;
use crate::reference::{ElementType, ReferenceElement};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFamily {
    Quad,
    /// Each square split into 4 triangles through its barycenter.
    Tri1,
    /// Each square split into 2 triangles by the (0,0)-(1,1) diagonal.
    Tri2,
    Hex,
    /// Kuhn split of each cube into 6 tetrahedra sharing the main diagonal.
    Tet,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 5] =
        [MeshFamily::Quad, MeshFamily::Tri1, MeshFamily::Tri2, MeshFamily::Hex, MeshFamily::Tet];

    pub fn dim(self) -> usize {
        match self {
            MeshFamily::Quad | MeshFamily::Tri1 | MeshFamily::Tri2 => 2,
            MeshFamily::Hex | MeshFamily::Tet => 3,
        }
    }

    pub fn element_type(self) -> ElementType {
        match self {
            MeshFamily::Quad => ElementType::Quadrilateral,
            MeshFamily::Tri1 | MeshFamily::Tri2 => ElementType::Triangle,
            MeshFamily::Hex => ElementType::Hexahedron,
            MeshFamily::Tet => ElementType::Tetrahedron,
        }
    }

    /// Stabilization used in the reference studies.
    pub fn default_tau(self) -> f64 {
        match self {
            MeshFamily::Tri2 => 40.0,
            _ => 4.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Quad => "quad",
            MeshFamily::Tri1 => "tri1",
            MeshFamily::Tri2 => "tri2",
            MeshFamily::Hex => "hex",
            MeshFamily::Tet => "tet",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = HdgError;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            HdgError::Config(format!("unknown mesh family '{s}' (expected quad, tri1, tri2, hex or tet)"))
        })
    }
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub dim: usize,
    pub lower: Point,
    pub upper: Point,
}

impl BoxDomain {
    pub fn unit(dim: usize) -> Self {
        let mut upper = [0.0; 3];
        upper[..dim].iter_mut().for_each(|c| *c = 1.0);
        Self { dim, lower: [0.0; 3], upper }
    }

    pub fn side(&self) -> f64 {
        self.upper[0] - self.lower[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// One element's view of a face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceSide {
    pub element: usize,
    pub local_face: usize,
    /// Element-local vertex ids of the face, listed in the face's canonical order.
    pub local_vertices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Face {
    /// Global node ids in canonical order.
    pub nodes: Vec<usize>,
    /// First entry is the left element; internal faces have a second.
    pub sides: Vec<FaceSide>,
    pub kind: FaceKind,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.sides.len() == 1
    }

    pub fn centroid(&self, nodes: &[Point]) -> Point {
        let mut c = [0.0; 3];
        for &n in &self.nodes {
            for r in 0..3 {
                c[r] += nodes[n][r] / self.nodes.len() as f64;
            }
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub vertices: Vec<usize>,
    /// Global face id for every local face.
    pub faces: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub element_type: ElementType,
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    pub faces: Vec<Face>,
    /// Characteristic size (box side over subdivisions).
    pub h: f64,
}

/// Canonical ordering of a face's global nodes. Simplices and edges use the
/// ascending sort. A quadrilateral face starts at its smallest node, then its
/// two neighbours along edges (ascending), then the opposite node, matching
/// the lexicographic vertex order of the reference square.
fn canonical_order(element: ElementType, local: &[usize], global: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..local.len()).collect();
    if local.len() == 4 {
        let coords = element.vertex_coordinates();
        let adjacent = |a: usize, b: usize| {
            let (pa, pb) = (coords[local[a]], coords[local[b]]);
            (0..3).filter(|&d| pa[d] != pb[d]).count() == 1
        };
        let first = *idx.iter().min_by_key(|&&i| global[i]).unwrap();
        let mut nbrs: Vec<usize> = idx.iter().copied().filter(|&i| i != first && adjacent(first, i)).collect();
        nbrs.sort_by_key(|&i| global[i]);
        let opp = idx.iter().copied().find(|&i| i != first && !nbrs.contains(&i)).unwrap();
        idx = vec![first, nbrs[0], nbrs[1], opp];
    } else {
        idx.sort_by_key(|&i| global[i]);
    }
    idx
}

impl Mesh {
    /// Build faces and adjacency from element connectivity. Boundary faces
    /// start out as Dirichlet.
    pub fn from_elements(element_type: ElementType, nodes: Vec<Point>, cells: Vec<Vec<usize>>, h: f64) -> Result<Mesh> {
        let dim = element_type.dim();
        let nv = element_type.n_vertices();
        let mut faces: Vec<Face> = Vec::new();
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut elements = Vec::with_capacity(cells.len());
        for (e, cell) in cells.into_iter().enumerate() {
            if cell.len() != nv {
                return Err(HdgError::InvalidMesh(format!("element {e} has {} nodes, expected {nv}", cell.len())));
            }
            if let Some(&bad) = cell.iter().find(|&&n| n >= nodes.len()) {
                return Err(HdgError::InvalidMesh(format!("element {e} references node {bad} out of range")));
            }
            let mut sorted = cell.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != nv {
                return Err(HdgError::InvalidMesh(format!("element {e} repeats a node")));
            }
            let mut face_ids = Vec::with_capacity(element_type.local_faces().len());
            for (lf, local) in element_type.local_faces().iter().enumerate() {
                let global: Vec<usize> = local.iter().map(|&l| cell[l]).collect();
                let order = canonical_order(element_type, local, &global);
                let canon: Vec<usize> = order.iter().map(|&i| global[i]).collect();
                let side =
                    FaceSide { element: e, local_face: lf, local_vertices: order.iter().map(|&i| local[i]).collect() };
                let mut key = canon.clone();
                key.sort_unstable();
                let id = *lookup.entry(key).or_insert_with(|| {
                    faces.push(Face { nodes: canon.clone(), sides: Vec::new(), kind: FaceKind::Dirichlet });
                    faces.len() - 1
                });
                if faces[id].nodes != canon {
                    return Err(HdgError::InvalidMesh(format!(
                        "face {id} has inconsistent canonical order across elements"
                    )));
                }
                faces[id].sides.push(side);
                face_ids.push(id);
            }
            elements.push(Element { vertices: cell, faces: face_ids });
        }
        for (id, f) in faces.iter_mut().enumerate() {
            match f.sides.len() {
                1 => f.kind = FaceKind::Dirichlet,
                2 => f.kind = FaceKind::Interior,
                n => return Err(HdgError::InvalidMesh(format!("face {id} is shared by {n} elements"))),
            }
        }
        let mesh = Mesh { dim, element_type, nodes, elements, faces, h };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.kind == FaceKind::Interior).count()
    }

    pub fn count_kind(&self, kind: FaceKind) -> usize {
        self.faces.iter().filter(|f| f.kind == kind).count()
    }

    pub fn has_neumann(&self) -> bool {
        self.faces.iter().any(|f| f.kind == FaceKind::Neumann)
    }

    pub fn element_vertices(&self, e: usize) -> Vec<Point> {
        self.elements[e].vertices.iter().map(|&n| self.nodes[n]).collect()
    }

    /// Tag every boundary face Neumann if its centroid satisfies `is_neumann`,
    /// Dirichlet otherwise.
    pub fn classify_boundary(mut self, is_neumann: impl Fn(&Point) -> bool) -> Mesh {
        for i in 0..self.faces.len() {
            if self.faces[i].is_boundary() {
                let c = self.faces[i].centroid(&self.nodes);
                self.faces[i].kind = if is_neumann(&c) { FaceKind::Neumann } else { FaceKind::Dirichlet };
            }
        }
        self
    }

    /// Check connectivity, face sharing, tags and element orientation.
    pub fn validate(&self) -> Result<()> {
        for (id, f) in self.faces.iter().enumerate() {
            let ok = match f.sides.len() {
                1 => f.kind != FaceKind::Interior,
                2 => f.kind == FaceKind::Interior,
                _ => false,
            };
            if !ok {
                return Err(HdgError::InvalidMesh(format!(
                    "face {id} has {} sides but kind {:?}",
                    f.sides.len(),
                    f.kind
                )));
            }
            for s in &f.sides {
                if self.elements[s.element].faces[s.local_face] != id {
                    return Err(HdgError::InvalidMesh(format!("face {id} adjacency is not reciprocal")));
                }
            }
        }
        let geo = ReferenceElement::new(self.element_type, 1)?;
        let tables = CellTables::new(&geo, &geo, build_quadrature(self.element_type, 2)?);
        for e in 0..self.elements.len() {
            cell_quadrature(&self.element_vertices(e), self.dim, &tables).map_err(|err| match err {
                HdgError::InvertedElement { det_j, .. } => HdgError::InvertedElement { element: Some(e), det_j },
                other => other,
            })?;
        }
        Ok(())
    }
}

/// Uniform mesh of `domain` with `n` subdivisions per axis.
pub fn generate_box_mesh(domain: &BoxDomain, n: usize, family: MeshFamily) -> Result<Mesh> {
    if n == 0 {
        return Err(HdgError::InvalidMesh("number of subdivisions must be at least 1".into()));
    }
    if family.dim() != domain.dim {
        return Err(HdgError::InvalidMesh(format!(
            "family {family} is {}-dimensional but the domain is {}-dimensional",
            family.dim(),
            domain.dim
        )));
    }
    let dim = domain.dim;
    let m = n + 1;
    let layers = if dim == 3 { m } else { 1 };
    let mut nodes = Vec::with_capacity(m * m * layers);
    for l in 0..layers {
        for j in 0..m {
            for i in 0..m {
                let mut p = [0.0; 3];
                for (d, c) in [i, j, l].into_iter().enumerate().take(dim) {
                    p[d] = domain.lower[d] + (domain.upper[d] - domain.lower[d]) * c as f64 / n as f64;
                }
                nodes.push(p);
            }
        }
    }
    let id = |i: usize, j: usize, l: usize| i + m * (j + m * l);
    let mut cells = Vec::new();
    match family {
        MeshFamily::Quad => {
            for j in 0..n {
                for i in 0..n {
                    cells.push(vec![id(i, j, 0), id(i + 1, j, 0), id(i, j + 1, 0), id(i + 1, j + 1, 0)]);
                }
            }
        }
        MeshFamily::Tri2 => {
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, d) = (id(i, j, 0), id(i + 1, j, 0), id(i, j + 1, 0), id(i + 1, j + 1, 0));
                    cells.push(vec![a, b, d]);
                    cells.push(vec![a, d, c]);
                }
            }
        }
        MeshFamily::Tri1 => {
            for j in 0..n {
                for i in 0..n {
                    let (a, b, c, d) = (id(i, j, 0), id(i + 1, j, 0), id(i, j + 1, 0), id(i + 1, j + 1, 0));
                    let mut centre = [0.0; 3];
                    for v in [a, b, c, d] {
                        for r in 0..3 {
                            centre[r] += 0.25 * nodes[v][r];
                        }
                    }
                    let z = nodes.len();
                    nodes.push(centre);
                    cells.push(vec![a, b, z]);
                    cells.push(vec![b, d, z]);
                    cells.push(vec![d, c, z]);
                    cells.push(vec![c, a, z]);
                }
            }
        }
        MeshFamily::Hex => {
            for l in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        let mut cell = Vec::with_capacity(8);
                        for v in 0..8 {
                            cell.push(id(i + (v & 1), j + ((v >> 1) & 1), l + ((v >> 2) & 1)));
                        }
                        cells.push(cell);
                    }
                }
            }
        }
        MeshFamily::Tet => {
            const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for l in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for perm in PERMS {
                            let mut c = [i, j, l];
                            let mut cell = vec![id(c[0], c[1], c[2])];
                            for d in perm {
                                c[d] += 1;
                                cell.push(id(c[0], c[1], c[2]));
                            }
                            let x: Vec<Point> = cell.iter().map(|&v| nodes[v]).collect();
                            let e1 = crate::reference::sub(&x[1], &x[0]);
                            let e2 = crate::reference::sub(&x[2], &x[0]);
                            let e3 = crate::reference::sub(&x[3], &x[0]);
                            if crate::reference::dot(&crate::reference::cross(&e1, &e2), &e3) < 0.0 {
                                cell.swap(2, 3);
                            }
                            cells.push(cell);
                        }
                    }
                }
            }
        }
    }
    Mesh::from_elements(family.element_type(), nodes, cells, domain.side() / n as f64)
}

/// Uniform mesh of the unit square or cube.
pub fn generate_cartesian_mesh(family: MeshFamily, n: usize) -> Result<Mesh> {
    generate_box_mesh(&BoxDomain::unit(family.dim()), n, family)
}
