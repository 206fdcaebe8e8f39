use std::collections::HashMap;
use std::sync::Arc;

use super::element::{local_edges, Family};
use crate::geom::{self, Point};
use crate::mesh::{BoundaryTag, PipeMesh};

/// A Lagrange space on a pipe mesh. Nodes are the mesh vertices followed,
/// for P2, by one node per edge. Degrees of freedom are interleaved:
/// `dof = node * components + c`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<PipeMesh>,
    family: Family,
    components: usize,
    nodes_per_cell: usize,
    cell_nodes: Vec<usize>,
    node_coords: Vec<Point>,
    wall_nodes: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: Arc<PipeMesh>, family: Family, components: usize) -> Self {
        let dim = mesh.dim();
        let nloc = family.local_nodes(dim);
        let nv = mesh.num_vertices();
        let mut node_coords: Vec<Point> = mesh.vertices().to_vec();
        let mut cell_nodes = Vec::with_capacity(mesh.num_cells() * nloc);
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        for c in 0..mesh.num_cells() {
            let cell = mesh.cell(c);
            cell_nodes.extend_from_slice(cell);
            if family == Family::P2 {
                for &(i, j) in local_edges(dim) {
                    let key = (cell[i].min(cell[j]), cell[i].max(cell[j]));
                    let next = nv + edge_ids.len();
                    let id = *edge_ids.entry(key).or_insert_with(|| {
                        node_coords.push(geom::scale(
                            &geom::add(&mesh.vertices()[key.0], &mesh.vertices()[key.1]),
                            0.5,
                        ));
                        next
                    });
                    cell_nodes.push(id);
                }
            }
        }

        let mut wall_nodes = mesh.wall_vertices();
        wall_nodes.resize(node_coords.len(), false);
        if family == Family::P2 {
            for f in mesh.facets().iter().filter(|f| f.tag == BoundaryTag::Wall) {
                for a in 0..f.vertices.len() {
                    for b in a + 1..f.vertices.len() {
                        let (p, q) = (f.vertices[a], f.vertices[b]);
                        if let Some(&id) = edge_ids.get(&(p.min(q), p.max(q))) {
                            wall_nodes[id] = true;
                        }
                    }
                }
            }
        }

        Self {
            mesh,
            family,
            components,
            nodes_per_cell: nloc,
            cell_nodes,
            node_coords,
            wall_nodes,
        }
    }

    pub fn mesh(&self) -> &Arc<PipeMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn ndofs(&self) -> usize {
        self.node_coords.len() * self.components
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.nodes_per_cell
    }

    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c * self.nodes_per_cell..(c + 1) * self.nodes_per_cell]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    /// True on nodes in the closure of the wall, including the rim where walls
    /// meet cuts.
    pub fn wall_nodes(&self) -> &[bool] {
        &self.wall_nodes
    }

    /// Dirichlet mask over degrees of freedom.
    pub fn dirichlet_dofs(&self) -> Vec<bool> {
        let mut mask = Vec::with_capacity(self.ndofs());
        for &w in &self.wall_nodes {
            for _ in 0..self.components {
                mask.push(w);
            }
        }
        mask
    }

    /// Local-to-global dof map of cell `c`, ordered component-major within
    /// each node.
    pub fn cell_dofs(&self, c: usize, out: &mut Vec<usize>) {
        out.clear();
        for &n in self.cell_nodes(c) {
            for k in 0..self.components {
                out.push(n * self.components + k);
            }
        }
    }

    /// Nodal interpolant of `f`, which writes `components` values per point.
    pub fn interpolate(&self, f: impl Fn(&Point, &mut [f64])) -> Vec<f64> {
        let mut out = vec![0.0; self.ndofs()];
        for (n, x) in self.node_coords.iter().enumerate() {
            f(x, &mut out[n * self.components..(n + 1) * self.components]);
        }
        out
    }

    pub fn interpolate_scalar(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        assert_eq!(self.components, 1);
        self.node_coords.iter().map(f).collect()
    }

    pub fn same_layout(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
            && self.family == other.family
            && self.components == other.components
    }
}

/// Taylor–Hood velocity/pressure pair plus the enthalpy space, all on one
/// mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub velocity: FeSpace,
    pub pressure: FeSpace,
    pub enthalpy: FeSpace,
}

impl Discretization {
    pub fn taylor_hood(mesh: Arc<PipeMesh>, enthalpy: Family) -> Self {
        let d = mesh.dim();
        Self {
            velocity: FeSpace::new(mesh.clone(), Family::P2, d),
            pressure: FeSpace::new(mesh.clone(), Family::P1, 1),
            enthalpy: FeSpace::new(mesh, enthalpy, 1),
        }
    }

    pub fn mesh(&self) -> &Arc<PipeMesh> {
        self.velocity.mesh()
    }
}

/// Coefficients over a space at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    pub values: Vec<f64>,
    pub time: f64,
}

impl FieldVector {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    pub fn zeros(n: usize, time: f64) -> Self {
        Self {
            values: vec![0.0; n],
            time,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
