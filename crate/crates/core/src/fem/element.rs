//! Lagrange P1/P2 shape functions on simplices, written in barycentric
//! coordinates, and affine cell geometry.

use serde::{Deserialize, Serialize};

use super::quadrature::QuadratureRule;
use crate::geom::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    P1,
    P2,
}

impl Family {
    pub fn degree(self) -> usize {
        match self {
            Family::P1 => 1,
            Family::P2 => 2,
        }
    }

    pub fn local_nodes(self, dim: usize) -> usize {
        match self {
            Family::P1 => dim + 1,
            Family::P2 => (dim + 1) * (dim + 2) / 2,
        }
    }
}

const EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Local edges of a simplex, in the order of the P2 edge nodes.
pub fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    match dim {
        2 => &EDGES_2D,
        3 => &EDGES_3D,
        _ => &[(0, 1)],
    }
}

/// Shape function values at barycentric point `l`.
pub fn shape_values(family: Family, dim: usize, l: &[f64; 4], out: &mut [f64]) {
    let nv = dim + 1;
    match family {
        Family::P1 => out[..nv].copy_from_slice(&l[..nv]),
        Family::P2 => {
            for i in 0..nv {
                out[i] = l[i] * (2.0 * l[i] - 1.0);
            }
            for (k, &(i, j)) in local_edges(dim).iter().enumerate() {
                out[nv + k] = 4.0 * l[i] * l[j];
            }
        }
    }
}

/// Derivatives of the shape functions with respect to the barycentric
/// coordinates, treated as independent variables.
pub fn shape_dlambda(family: Family, dim: usize, l: &[f64; 4], out: &mut [[f64; 4]]) {
    let nv = dim + 1;
    for row in out.iter_mut().take(family.local_nodes(dim)) {
        *row = [0.0; 4];
    }
    match family {
        Family::P1 => {
            for i in 0..nv {
                out[i][i] = 1.0;
            }
        }
        Family::P2 => {
            for i in 0..nv {
                out[i][i] = 4.0 * l[i] - 1.0;
            }
            for (k, &(i, j)) in local_edges(dim).iter().enumerate() {
                out[nv + k][i] = 4.0 * l[j];
                out[nv + k][j] = 4.0 * l[i];
            }
        }
    }
}

/// Affine geometry of one cell.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub dim: usize,
    pub points: [Point; 4],
    pub volume: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [Point; 4],
}

impl CellGeometry {
    pub fn new(dim: usize, pts: &[Point]) -> Self {
        let mut points = [[0.0; 3]; 4];
        points[..=dim].copy_from_slice(&pts[..=dim]);
        let mut grad_lambda = [[0.0; 3]; 4];
        let volume = geom::signed_volume(dim, pts);
        match dim {
            2 => {
                let a = geom::sub(&pts[1], &pts[0]);
                let b = geom::sub(&pts[2], &pts[0]);
                let det = a[0] * b[1] - a[1] * b[0];
                // rows of J^{-1}, J = [a b]
                grad_lambda[1] = [b[1] / det, -b[0] / det, 0.0];
                grad_lambda[2] = [-a[1] / det, a[0] / det, 0.0];
            }
            3 => {
                let a = geom::sub(&pts[1], &pts[0]);
                let b = geom::sub(&pts[2], &pts[0]);
                let c = geom::sub(&pts[3], &pts[0]);
                let det = geom::dot(&a, &geom::cross(&b, &c));
                grad_lambda[1] = geom::scale(&geom::cross(&b, &c), 1.0 / det);
                grad_lambda[2] = geom::scale(&geom::cross(&c, &a), 1.0 / det);
                grad_lambda[3] = geom::scale(&geom::cross(&a, &b), 1.0 / det);
            }
            _ => panic!("unsupported dimension {dim}"),
        }
        let mut g0 = [0.0; 3];
        for g in &grad_lambda[1..=dim] {
            g0 = geom::sub(&g0, g);
        }
        grad_lambda[0] = g0;
        Self {
            dim,
            points,
            volume,
            grad_lambda,
        }
    }

    pub fn map(&self, l: &[f64; 4]) -> Point {
        let mut x = [0.0; 3];
        for k in 0..=self.dim {
            x = geom::add(&x, &geom::scale(&self.points[k], l[k]));
        }
        x
    }
}

/// Shape data of one family tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub family: Family,
    pub dim: usize,
    pub n: usize,
    pub values: Vec<Vec<f64>>,
    pub dlambda: Vec<Vec<[f64; 4]>>,
}

impl Tabulation {
    pub fn new(family: Family, dim: usize, bary: &[[f64; 4]]) -> Self {
        let n = family.local_nodes(dim);
        let mut values = Vec::with_capacity(bary.len());
        let mut dlambda = Vec::with_capacity(bary.len());
        for l in bary {
            let mut v = vec![0.0; n];
            let mut d = vec![[0.0; 4]; n];
            shape_values(family, dim, l, &mut v);
            shape_dlambda(family, dim, l, &mut d);
            values.push(v);
            dlambda.push(d);
        }
        Self {
            family,
            dim,
            n,
            values,
            dlambda,
        }
    }

    pub fn for_rule(family: Family, rule: &QuadratureRule) -> Self {
        Self::new(family, rule.dim, &rule.bary)
    }

    /// Physical gradients of all shape functions at point `q`.
    pub fn gradients(&self, q: &usize, geo: &CellGeometry, out: &mut [Point]) {
        for (i, d) in self.dlambda[*q].iter().enumerate() {
            let mut g = [0.0; 3];
            for k in 0..=self.dim {
                if d[k] != 0.0 {
                    g = geom::add(&g, &geom::scale(&geo.grad_lambda[k], d[k]));
                }
            }
            out[i] = g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_nodal_property() {
        for dim in [2, 3] {
            for family in [Family::P1, Family::P2] {
                let n = family.local_nodes(dim);
                // node positions in barycentrics
                let mut nodes = Vec::new();
                for i in 0..=dim {
                    let mut l = [0.0; 4];
                    l[i] = 1.0;
                    nodes.push(l);
                }
                if family == Family::P2 {
                    for &(i, j) in local_edges(dim) {
                        let mut l = [0.0; 4];
                        l[i] = 0.5;
                        l[j] = 0.5;
                        nodes.push(l);
                    }
                }
                let mut v = vec![0.0; n];
                for (a, l) in nodes.iter().enumerate() {
                    shape_values(family, dim, l, &mut v);
                    for (b, &vb) in v.iter().enumerate() {
                        let expected = if a == b { 1.0 } else { 0.0 };
                        assert!((vb - expected).abs() < 1e-15);
                    }
                }
                let l = [0.1, 0.2, 0.3, 0.4];
                let mut l = l;
                if dim == 2 {
                    l = [0.2, 0.3, 0.5, 0.0];
                }
                shape_values(family, dim, &l, &mut v);
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn barycentric_gradients_of_unit_triangle() {
        let g = CellGeometry::new(2, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(g.grad_lambda[0], [-1.0, -1.0, 0.0]);
        assert_eq!(g.grad_lambda[1], [1.0, 0.0, 0.0]);
        assert_eq!(g.grad_lambda[2], [0.0, 1.0, 0.0]);
        assert!((g.volume - 0.5).abs() < 1e-16);
    }

    #[test]
    fn tet_gradients_reproduce_linear_functions() {
        let pts = [
            [0.1, 0.0, 0.2],
            [1.3, 0.1, 0.0],
            [0.2, 0.9, 0.1],
            [0.3, 0.2, 1.1],
        ];
        let g = CellGeometry::new(3, &pts);
        // f(x) = 2x - y + 3z; gradient from nodal values
        let f = |p: &Point| 2.0 * p[0] - p[1] + 3.0 * p[2];
        let mut grad = [0.0; 3];
        for k in 0..4 {
            grad = geom::add(&grad, &geom::scale(&g.grad_lambda[k], f(&pts[k])));
        }
        assert!((grad[0] - 2.0).abs() < 1e-13);
        assert!((grad[1] + 1.0).abs() < 1e-13);
        assert!((grad[2] - 3.0).abs() < 1e-13);
    }
}
