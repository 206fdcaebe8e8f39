//! Simplicial meshes of truncated pipe systems.
//!
//! Every boundary facet is tagged either as lateral wall (no-slip, Newton
//! heat exchange) or as part of a flat cut cross-section `Cut(i)` (do-nothing
//! outflow, adiabatic). Cut ids are 1-based.

mod generate;
mod msh;
mod validate;

pub use generate::{generate_pipe, Branch, PipeSpec};
pub use msh::{import_msh, read_msh, write_msh};
pub use validate::{validate_geometry, CutReport, GeometryReport};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Point};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("mesh has no cells")]
    Empty,
    #[error("cell {0} references vertex out of range")]
    BadIndex(usize),
    #[error("cell {0} is degenerate (zero measure)")]
    Degenerate(usize),
    #[error("boundary facet {0:?} carries no tag")]
    UntaggedFacet(Vec<usize>),
    #[error("tagged facet {0:?} is not a boundary facet of the mesh")]
    NonManifold(Vec<usize>),
    #[error("no wall facets (Γ₁ is empty)")]
    NoWall,
    #[error("no cut facets (Γ₂ is empty)")]
    NoCuts,
    #[error("cuts {0} and {1} share a vertex")]
    CutsTouch(usize, usize),
    #[error("degenerate pipe specification: {0}")]
    Spec(String),
    #[error("unsupported element type {0}")]
    UnsupportedElement(String),
    #[error("mixed volume element types")]
    MixedElements,
    #[error("unknown physical group `{0}`")]
    UnknownGroup(String),
    #[error("msh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Wall,
    Cut(usize),
}

#[derive(Debug, Clone)]
pub struct BoundaryFacet {
    pub vertices: Vec<usize>,
    pub tag: BoundaryTag,
    /// Outward unit normal.
    pub normal: Point,
    pub area: f64,
    /// Owning cell and the local index of the vertex opposite the facet.
    pub cell: usize,
    pub opposite: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct CutPlane {
    pub id: usize,
    pub point: Point,
    pub normal: Point,
}

#[derive(Debug, Clone)]
pub struct PipeMesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    facets: Vec<BoundaryFacet>,
    cuts: Vec<CutPlane>,
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

impl PipeMesh {
    /// Builds a mesh from raw arrays. Cells are reoriented to positive
    /// measure. `tags` maps boundary facets (any vertex order) to their tag.
    pub fn new(
        dim: usize,
        vertices: Vec<Point>,
        cells: Vec<usize>,
        tags: &[(Vec<usize>, BoundaryTag)],
    ) -> Result<Self, MeshError> {
        let mesh = Self::build(dim, vertices, cells, tags)?;
        if !mesh.facets.iter().any(|f| f.tag == BoundaryTag::Wall) {
            return Err(MeshError::NoWall);
        }
        if mesh.cuts.is_empty() {
            return Err(MeshError::NoCuts);
        }
        mesh.check_cuts_disjoint()?;
        Ok(mesh)
    }

    /// Like [`PipeMesh::new`] but accepts an enclosed cavity with no cut
    /// facets. Solvers on such a mesh see a pressure defined only up to a
    /// constant.
    pub fn new_enclosed(
        dim: usize,
        vertices: Vec<Point>,
        cells: Vec<usize>,
        tags: &[(Vec<usize>, BoundaryTag)],
    ) -> Result<Self, MeshError> {
        Self::build(dim, vertices, cells, tags)
    }

    fn build(
        dim: usize,
        vertices: Vec<Point>,
        mut cells: Vec<usize>,
        tags: &[(Vec<usize>, BoundaryTag)],
    ) -> Result<Self, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Dimension(dim));
        }
        let nv = dim + 1;
        if cells.is_empty() || !cells.len().is_multiple_of(nv) {
            return Err(MeshError::Empty);
        }
        let ncells = cells.len() / nv;
        for c in 0..ncells {
            let cell = &mut cells[c * nv..(c + 1) * nv];
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::BadIndex(c));
            }
            let pts: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let vol = geom::signed_volume(dim, &pts);
            let mut scale: f64 = 0.0;
            for i in 0..nv {
                for j in i + 1..nv {
                    scale = scale.max(geom::norm(&geom::sub(&pts[i], &pts[j])));
                }
            }
            if vol.abs() <= 1e-14 * scale.powi(dim as i32) {
                return Err(MeshError::Degenerate(c));
            }
            if vol < 0.0 {
                cell.swap(0, 1);
            }
        }

        // boundary facets: faces owned by exactly one cell
        let mut faces: HashMap<Vec<usize>, (usize, usize, usize)> = HashMap::new();
        let mut order = Vec::new();
        for c in 0..ncells {
            let cell = &cells[c * nv..(c + 1) * nv];
            for opp in 0..nv {
                let face: Vec<usize> = (0..nv).filter(|&k| k != opp).map(|k| cell[k]).collect();
                let key = sorted(&face);
                let entry = faces.entry(key.clone()).or_insert_with(|| {
                    order.push(key);
                    (c, opp, 0)
                });
                entry.2 += 1;
            }
        }
        let mut tag_map: HashMap<Vec<usize>, BoundaryTag> = HashMap::with_capacity(tags.len());
        for (f, t) in tags {
            let key = sorted(f);
            match faces.get(&key) {
                Some(&(_, _, 1)) => {
                    tag_map.insert(key, *t);
                }
                _ => return Err(MeshError::NonManifold(f.clone())),
            }
        }
        let mut facets = Vec::new();
        for key in order {
            let (c, opp, count) = faces[&key];
            if count != 1 {
                continue;
            }
            let tag = *tag_map
                .get(&key)
                .ok_or_else(|| MeshError::UntaggedFacet(key.clone()))?;
            let cell = &cells[c * nv..(c + 1) * nv];
            let fverts: Vec<usize> = (0..nv).filter(|&k| k != opp).map(|k| cell[k]).collect();
            let pts: Vec<Point> = fverts.iter().map(|&v| vertices[v]).collect();
            let mut n = geom::facet_area_normal(dim, &pts);
            let outward = geom::sub(&geom::centroid(&pts), &vertices[cell[opp]]);
            if geom::dot(&n, &outward) < 0.0 {
                n = geom::scale(&n, -1.0);
            }
            let area = geom::norm(&n);
            facets.push(BoundaryFacet {
                vertices: fverts,
                tag,
                normal: geom::scale(&n, 1.0 / area),
                area,
                cell: c,
                opposite: opp,
            });
        }
        facets.sort_by_key(|f| f.tag);

        let mut cut_ids: Vec<usize> = facets
            .iter()
            .filter_map(|f| match f.tag {
                BoundaryTag::Cut(i) => Some(i),
                BoundaryTag::Wall => None,
            })
            .collect();
        cut_ids.dedup();
        let cuts = cut_ids
            .into_iter()
            .map(|id| {
                let mut point = [0.0; 3];
                let mut normal = [0.0; 3];
                let mut total = 0.0;
                for f in facets.iter().filter(|f| f.tag == BoundaryTag::Cut(id)) {
                    let pts: Vec<Point> = f.vertices.iter().map(|&v| vertices[v]).collect();
                    point = geom::add(&point, &geom::scale(&geom::centroid(&pts), f.area));
                    normal = geom::add(&normal, &geom::scale(&f.normal, f.area));
                    total += f.area;
                }
                CutPlane {
                    id,
                    point: geom::scale(&point, 1.0 / total),
                    normal: geom::normalize(&normal),
                }
            })
            .collect();

        Ok(Self {
            dim,
            vertices,
            cells,
            facets,
            cuts,
        })
    }

    fn check_cuts_disjoint(&self) -> Result<(), MeshError> {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for f in &self.facets {
            if let BoundaryTag::Cut(i) = f.tag {
                for &v in &f.vertices {
                    if let Some(&j) = owner.get(&v) {
                        if j != i {
                            return Err(MeshError::CutsTouch(j.min(i), j.max(i)));
                        }
                    }
                    owner.insert(v, i);
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn cuts(&self) -> &[CutPlane] {
        &self.cuts
    }

    pub fn cut_ids(&self) -> Vec<usize> {
        self.cuts.iter().map(|c| c.id).collect()
    }

    pub fn volume(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| geom::signed_volume(self.dim, &self.cell_points(c)))
            .sum()
    }

    /// Total measure of the facets carrying `tag`.
    pub fn boundary_measure(&self, tag: BoundaryTag) -> f64 {
        self.facets.iter().filter(|f| f.tag == tag).map(|f| f.area).sum()
    }

    pub fn wall_measure(&self) -> f64 {
        self.boundary_measure(BoundaryTag::Wall)
    }

    /// Largest distance between two vertices along the coordinate axes.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        geom::norm(&geom::sub(&hi, &lo))
    }

    /// Vertices lying on the closure of the wall Γ₁ (includes the edge set M).
    pub fn wall_vertices(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in self.facets.iter().filter(|f| f.tag == BoundaryTag::Wall) {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    /// Longest cell edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for c in 0..self.num_cells() {
            let pts = self.cell_points(c);
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    h = h.max(geom::norm(&geom::sub(&pts[i], &pts[j])));
                }
            }
        }
        h
    }

    /// Applies `f` to every vertex. Boundary data are recomputed.
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Result<Self, MeshError> {
        let vertices = self.vertices.iter().map(f).collect();
        let tags: Vec<(Vec<usize>, BoundaryTag)> = self
            .facets
            .iter()
            .map(|f| (f.vertices.clone(), f.tag))
            .collect();
        let m = Self::build(self.dim, vertices, self.cells.clone(), &tags)?;
        Ok(m)
    }

    /// Facet vertex lists with tags, in the stored facet order.
    pub fn tagged_facets(&self) -> Vec<(Vec<usize>, BoundaryTag)> {
        self.facets
            .iter()
            .map(|f| (f.vertices.clone(), f.tag))
            .collect()
    }

    /// A short identifier for output metadata.
    pub fn fingerprint(&self) -> String {
        format!(
            "d{}-v{}-c{}-f{}",
            self.dim,
            self.vertices.len(),
            self.num_cells(),
            self.facets.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle_square() -> (Vec<Point>, Vec<usize>) {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ];
        (v, vec![0, 1, 2, 0, 2, 3])
    }

    #[test]
    fn square_with_tags() {
        let (v, c) = unit_triangle_square();
        let tags = vec![
            (vec![0, 1], BoundaryTag::Wall),
            (vec![2, 3], BoundaryTag::Wall),
            (vec![0, 3], BoundaryTag::Cut(1)),
            (vec![1, 2], BoundaryTag::Cut(2)),
        ];
        let m = PipeMesh::new(2, v, c, &tags).unwrap();
        assert_eq!(m.cuts().len(), 2);
        assert!((m.volume() - 1.0).abs() < 1e-15);
        assert!((m.wall_measure() - 2.0).abs() < 1e-15);
        let c1 = &m.cuts()[0];
        assert_eq!(c1.normal, [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_tag_and_missing_cuts() {
        let (v, c) = unit_triangle_square();
        let tags = vec![(vec![0, 1], BoundaryTag::Wall)];
        assert!(matches!(
            PipeMesh::new(2, v.clone(), c.clone(), &tags),
            Err(MeshError::UntaggedFacet(_))
        ));
        let all_wall = vec![
            (vec![0, 1], BoundaryTag::Wall),
            (vec![2, 3], BoundaryTag::Wall),
            (vec![0, 3], BoundaryTag::Wall),
            (vec![1, 2], BoundaryTag::Wall),
        ];
        assert!(matches!(
            PipeMesh::new(2, v.clone(), c.clone(), &all_wall),
            Err(MeshError::NoCuts)
        ));
        assert!(PipeMesh::new_enclosed(2, v, c, &all_wall).is_ok());
    }

    #[test]
    fn interior_facet_tag_is_non_manifold() {
        let (v, c) = unit_triangle_square();
        let tags = vec![
            (vec![0, 1], BoundaryTag::Wall),
            (vec![2, 3], BoundaryTag::Wall),
            (vec![0, 3], BoundaryTag::Cut(1)),
            (vec![1, 2], BoundaryTag::Cut(2)),
            (vec![0, 2], BoundaryTag::Wall),
        ];
        assert!(matches!(
            PipeMesh::new(2, v, c, &tags),
            Err(MeshError::NonManifold(_))
        ));
    }

    #[test]
    fn touching_cuts_rejected() {
        let (v, c) = unit_triangle_square();
        let tags = vec![
            (vec![0, 1], BoundaryTag::Cut(2)),
            (vec![2, 3], BoundaryTag::Wall),
            (vec![0, 3], BoundaryTag::Cut(1)),
            (vec![1, 2], BoundaryTag::Wall),
        ];
        assert!(matches!(
            PipeMesh::new(2, v, c, &tags),
            Err(MeshError::CutsTouch(1, 2))
        ));
    }

    #[test]
    fn inverted_cells_are_reoriented() {
        let (v, _) = unit_triangle_square();
        let tags = vec![
            (vec![0, 1], BoundaryTag::Wall),
            (vec![2, 3], BoundaryTag::Wall),
            (vec![0, 3], BoundaryTag::Cut(1)),
            (vec![1, 2], BoundaryTag::Cut(2)),
        ];
        let m = PipeMesh::new(2, v, vec![1, 0, 2, 2, 0, 3], &tags).unwrap();
        for c in 0..m.num_cells() {
            assert!(geom::signed_volume(2, &m.cell_points(c)) > 0.0);
        }
    }
}
