//! Assembly of the bilinear, trilinear and linear forms of the flow and
//! enthalpy equations.

use std::sync::Arc;

use super::element::{shape_dlambda, shape_values, CellGeometry, Family, Tabulation};
use super::quadrature::QuadratureRule;
use super::sparse::SparseMatrix;
use super::space::FeSpace;
use super::FemError;
use crate::geom::{self, Point};
use crate::mesh::{BoundaryFacet, BoundaryTag};

/// Cell quadrature degree: exact for products of P2 gradients with a P2
/// coefficient, and for P2 mass matrices with a P1 weight.
pub const QUADRATURE_DEGREE: usize = 5;

/// Maps a barycentric point on a facet to the barycentrics of its cell.
pub fn facet_to_cell_bary(dim: usize, opposite: usize, fb: &[f64; 4]) -> [f64; 4] {
    let mut l = [0.0; 4];
    let mut k = 0;
    for (i, li) in l.iter_mut().enumerate().take(dim + 1) {
        if i != opposite {
            *li = fb[k];
            k += 1;
        }
    }
    l
}

/// Shape values and physical gradients of one family at one point.
#[derive(Debug, Clone)]
pub struct PointBasis {
    pub family: Family,
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
}

impl PointBasis {
    pub fn new(family: Family, dim: usize) -> Self {
        let n = family.local_nodes(dim);
        Self {
            family,
            values: vec![0.0; n],
            grads: vec![[0.0; 3]; n],
        }
    }

    pub fn eval(&mut self, geo: &CellGeometry, l: &[f64; 4]) {
        let dim = geo.dim;
        shape_values(self.family, dim, l, &mut self.values);
        let mut d = [[0.0; 4]; 10];
        shape_dlambda(self.family, dim, l, &mut d);
        for (i, g) in self.grads.iter_mut().enumerate() {
            let mut s = [0.0; 3];
            for k in 0..=dim {
                if d[i][k] != 0.0 {
                    s = geom::add(&s, &geom::scale(&geo.grad_lambda[k], d[i][k]));
                }
            }
            *g = s;
        }
    }

    fn load(&mut self, tab: &Tabulation, q: usize, geo: &CellGeometry) {
        self.values.copy_from_slice(&tab.values[q]);
        tab.gradients(&q, geo, &mut self.grads);
    }

    /// Value of a field with `nc` interleaved components.
    pub fn value(&self, nodes: &[usize], coeffs: &[f64], nc: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, &n) in nodes.iter().enumerate() {
            let phi = self.values[a];
            for (c, o) in out.iter_mut().enumerate().take(nc) {
                *o += phi * coeffs[n * nc + c];
            }
        }
        out
    }

    /// Gradient `g[c][j] = ∂_j u_c` of a field with `nc` components.
    pub fn gradient(&self, nodes: &[usize], coeffs: &[f64], nc: usize) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for (a, &n) in nodes.iter().enumerate() {
            let d = &self.grads[a];
            for (c, row) in g.iter_mut().enumerate().take(nc) {
                let u = coeffs[n * nc + c];
                for j in 0..3 {
                    row[j] += u * d[j];
                }
            }
        }
        g
    }
}

/// Visits every cell quadrature point with the bases of `spaces` evaluated
/// there: `f(cell, x, weight·|K|, bases)`.
pub fn for_each_cell_point(
    spaces: &[&FeSpace],
    degree: usize,
    mut f: impl FnMut(usize, &Point, f64, &[PointBasis]),
) {
    let mesh = spaces[0].mesh();
    let dim = mesh.dim();
    let rule = QuadratureRule::simplex(dim, degree);
    let tabs: Vec<Tabulation> = spaces
        .iter()
        .map(|s| Tabulation::for_rule(s.family(), &rule))
        .collect();
    let mut bases: Vec<PointBasis> = spaces
        .iter()
        .map(|s| PointBasis::new(s.family(), dim))
        .collect();
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(dim, &mesh.cell_points(c));
        for q in 0..rule.len() {
            for (b, t) in bases.iter_mut().zip(&tabs) {
                b.load(t, q, &geo);
            }
            let x = geo.map(&rule.bary[q]);
            f(c, &x, rule.weights[q] * geo.volume, &bases);
        }
    }
}

/// Visits quadrature points on boundary facets accepted by `select`:
/// `f(facet, x, weight·area, bases)`.
pub fn for_each_facet_point(
    spaces: &[&FeSpace],
    degree: usize,
    select: impl Fn(&BoundaryFacet) -> bool,
    mut f: impl FnMut(&BoundaryFacet, &Point, f64, &[PointBasis]),
) {
    let mesh = spaces[0].mesh();
    let dim = mesh.dim();
    let rule = QuadratureRule::simplex(dim - 1, degree);
    let mut bases: Vec<PointBasis> = spaces
        .iter()
        .map(|s| PointBasis::new(s.family(), dim))
        .collect();
    for facet in mesh.facets().iter().filter(|f| select(f)) {
        let geo = CellGeometry::new(dim, &mesh.cell_points(facet.cell));
        for (fb, w) in rule.bary.iter().zip(&rule.weights) {
            let l = facet_to_cell_bary(dim, facet.opposite, fb);
            for b in bases.iter_mut() {
                b.eval(&geo, &l);
            }
            let x = geo.map(&l);
            f(facet, &x, w * facet.area, &bases);
        }
    }
}

fn pattern(rows: &FeSpace, cols: &FeSpace) -> SparseMatrix {
    let mut pat = vec![Vec::new(); rows.ndofs()];
    let (mut rd, mut cd) = (Vec::new(), Vec::new());
    for c in 0..rows.mesh().num_cells() {
        rows.cell_dofs(c, &mut rd);
        cols.cell_dofs(c, &mut cd);
        for &i in &rd {
            pat[i].extend_from_slice(&cd);
        }
    }
    SparseMatrix::from_pattern(rows.ndofs(), cols.ndofs(), pat)
}

pub(crate) fn check_pair(a: &FeSpace, b: &FeSpace) -> Result<(), FemError> {
    if Arc::ptr_eq(a.mesh(), b.mesh()) {
        Ok(())
    } else {
        Err(FemError::SpaceMismatch(
            "spaces live on different meshes".into(),
        ))
    }
}

pub(crate) fn check_len(space: &FeSpace, v: &[f64], what: &str) -> Result<(), FemError> {
    if v.len() != space.ndofs() {
        return Err(FemError::SpaceMismatch(format!(
            "{what}: {} coefficients for a space with {} dofs",
            v.len(),
            space.ndofs()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(FemError::NonFinite(what.into()));
    }
    Ok(())
}

/// Assembles a scalar kernel `local[a][b]` on `space`, replicated
/// block-diagonally over its components. `aux` spaces are evaluated at the
/// same points and passed after the space's own basis.
fn assemble_kernel(
    space: &FeSpace,
    aux: &[&FeSpace],
    mut kernel: impl FnMut(usize, &Point, f64, &[PointBasis], &mut [f64]),
) -> SparseMatrix {
    let mut m = pattern(space, space);
    let dim = space.dim();
    let nc = space.components();
    let n = space.nodes_per_cell();
    let mut local = vec![0.0; n * n];
    let mut block = vec![0.0; n * nc * n * nc];
    let mut dofs = Vec::new();
    let mut spaces = vec![space];
    spaces.extend_from_slice(aux);
    let ncells = space.mesh().num_cells();
    let nq = QuadratureRule::simplex(dim, QUADRATURE_DEGREE).len();
    let mut count = 0;
    for_each_cell_point(&spaces, QUADRATURE_DEGREE, |c, x, w, bases| {
        kernel(c, x, w, bases, &mut local);
        count += 1;
        if count == nq {
            count = 0;
            block.iter_mut().for_each(|v| *v = 0.0);
            for a in 0..n {
                for b in 0..n {
                    for k in 0..nc {
                        block[(a * nc + k) * n * nc + b * nc + k] = local[a * n + b];
                    }
                }
            }
            space.cell_dofs(c, &mut dofs);
            m.add_local(&dofs, &dofs, &block);
            local.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    debug_assert!(ncells == 0 || count == 0);
    m
}

/// Mass matrix `(u, v)`, block-diagonal for vector spaces.
pub fn assemble_mass(space: &FeSpace) -> SparseMatrix {
    let n = space.nodes_per_cell();
    let mut m = assemble_kernel(space, &[], |_, _, w, b, local| {
        let b = &b[0];
        for i in 0..n {
            for j in 0..n {
                local[i * n + j] += w * b.values[i] * b.values[j];
            }
        }
    });
    m.symmetric = true;
    m
}

/// Stiffness matrix `∫ ∂_j u_i ∂_j v_i`.
pub fn assemble_a_u(space: &FeSpace) -> SparseMatrix {
    let n = space.nodes_per_cell();
    let mut m = assemble_kernel(space, &[], |_, _, w, b, local| {
        let b = &b[0];
        for i in 0..n {
            for j in 0..n {
                local[i * n + j] += w * geom::dot(&b.grads[i], &b.grads[j]);
            }
        }
    });
    m.symmetric = true;
    m
}

/// `∫ η ∇φ·∇ψ` with η given by nodal values on `space`.
pub fn assemble_a_e(eta: &[f64], space: &FeSpace) -> Result<SparseMatrix, FemError> {
    if space.components() != 1 {
        return Err(FemError::SpaceMismatch("a_e needs a scalar space".into()));
    }
    check_len(space, eta, "diffusivity")?;
    let n = space.nodes_per_cell();
    let mut m = assemble_kernel(space, &[], |c, _, w, b, local| {
        let b = &b[0];
        let e = b.value(space.cell_nodes(c), eta, 1)[0];
        for i in 0..n {
            for j in 0..n {
                local[i * n + j] += w * e * geom::dot(&b.grads[i], &b.grads[j]);
            }
        }
    });
    m.symmetric = true;
    Ok(m)
}

/// Convection operator with lagged transport field `w`:
/// `(C v)·z = ∫ w_j ∂_j v_i z_i`. Rows are test functions.
pub fn assemble_b_u(w: &[f64], space: &FeSpace) -> Result<SparseMatrix, FemError> {
    check_len(space, w, "transport velocity")?;
    let nc = space.components();
    let n = space.nodes_per_cell();
    Ok(assemble_kernel(space, &[], |c, _, wt, b, local| {
        let b = &b[0];
        let wv = b.value(space.cell_nodes(c), w, nc);
        for j in 0..n {
            let adv = geom::dot(&wv, &b.grads[j]);
            if adv != 0.0 {
                for i in 0..n {
                    local[i * n + j] += wt * adv * b.values[i];
                }
            }
        }
    }))
}

/// `∫ u_i ∂_i φ ψ` with transport velocity `u` on `space_u`; rows are ψ.
pub fn assemble_b_e(
    u: &[f64],
    space_u: &FeSpace,
    space_e: &FeSpace,
) -> Result<SparseMatrix, FemError> {
    check_pair(space_u, space_e)?;
    check_len(space_u, u, "transport velocity")?;
    let nc = space_u.components();
    let n = space_e.nodes_per_cell();
    Ok(assemble_kernel(space_e, &[space_u], |c, _, wt, b, local| {
        let uv = b[1].value(space_u.cell_nodes(c), u, nc);
        let b = &b[0];
        for j in 0..n {
            let adv = geom::dot(&uv, &b.grads[j]);
            if adv != 0.0 {
                for i in 0..n {
                    local[i * n + j] += wt * adv * b.values[i];
                }
            }
        }
    }))
}

/// `B[q, u] = ∫ q ∇·u` for pressure tests `q` and velocity trials `u`.
pub fn assemble_divergence(space_u: &FeSpace, space_p: &FeSpace) -> Result<SparseMatrix, FemError> {
    check_pair(space_u, space_p)?;
    let dim = space_u.dim();
    if space_u.components() != dim || space_p.components() != 1 {
        return Err(FemError::SpaceMismatch(
            "divergence needs a d-vector velocity space and a scalar pressure space".into(),
        ));
    }
    let mut m = pattern(space_p, space_u);
    let np = space_p.nodes_per_cell();
    let nu = space_u.nodes_per_cell();
    let ncol = nu * dim;
    let nq = QuadratureRule::simplex(dim, QUADRATURE_DEGREE).len();
    let mut local = vec![0.0; np * ncol];
    let (mut rd, mut cd) = (Vec::new(), Vec::new());
    let mut count = 0;
    for_each_cell_point(&[space_p, space_u], QUADRATURE_DEGREE, |c, _, w, b| {
        for a in 0..np {
            let q = w * b[0].values[a];
            for bb in 0..nu {
                for k in 0..dim {
                    local[a * ncol + bb * dim + k] += q * b[1].grads[bb][k];
                }
            }
        }
        count += 1;
        if count == nq {
            count = 0;
            space_p.cell_dofs(c, &mut rd);
            space_u.cell_dofs(c, &mut cd);
            m.add_local(&rd, &cd, &local);
            local.iter_mut().for_each(|v| *v = 0.0);
        }
    });
    Ok(m)
}

/// Boundary mass `∫_Σ φ ψ` over facets with the given tag.
pub fn assemble_boundary_mass(space: &FeSpace, tag: BoundaryTag) -> SparseMatrix {
    let mut m = pattern(space, space);
    let nc = space.components();
    let n = space.nodes_per_cell();
    let mut dofs = Vec::new();
    let mesh = space.mesh().clone();
    let dim = mesh.dim();
    let rule = QuadratureRule::simplex(dim - 1, QUADRATURE_DEGREE);
    let mut basis = PointBasis::new(space.family(), dim);
    let mut block = vec![0.0; n * nc * n * nc];
    for facet in mesh.facets().iter().filter(|f| f.tag == tag) {
        let geo = CellGeometry::new(dim, &mesh.cell_points(facet.cell));
        block.iter_mut().for_each(|v| *v = 0.0);
        for (fb, w) in rule.bary.iter().zip(&rule.weights) {
            basis.eval(&geo, &facet_to_cell_bary(dim, facet.opposite, fb));
            let wa = w * facet.area;
            for a in 0..n {
                for b in 0..n {
                    let v = wa * basis.values[a] * basis.values[b];
                    for k in 0..nc {
                        block[(a * nc + k) * n * nc + b * nc + k] += v;
                    }
                }
            }
        }
        space.cell_dofs(facet.cell, &mut dofs);
        m.add_local(&dofs, &dofs, &block);
    }
    m.symmetric = true;
    m
}

/// Wall mass used by the Newton heat-exchange term.
pub fn assemble_gamma_mass(space: &FeSpace) -> Result<SparseMatrix, FemError> {
    if !space
        .mesh()
        .facets()
        .iter()
        .any(|f| f.tag == BoundaryTag::Wall)
    {
        return Err(FemError::NoWall);
    }
    Ok(assemble_boundary_mass(space, BoundaryTag::Wall))
}

/// Load vector `∫ f·φ` for a vector or scalar source given pointwise.
pub fn assemble_load(space: &FeSpace, f: &dyn Fn(&Point, &mut [f64])) -> Vec<f64> {
    let nc = space.components();
    let mut out = vec![0.0; space.ndofs()];
    let mut fv = [0.0; 3];
    for_each_cell_point(&[space], QUADRATURE_DEGREE, |c, x, w, b| {
        f(x, &mut fv[..nc]);
        for (a, &node) in space.cell_nodes(c).iter().enumerate() {
            let phi = w * b[0].values[a];
            for k in 0..nc {
                out[node * nc + k] += phi * fv[k];
            }
        }
    });
    out
}

/// Load vector `∫ ϱ f·φ` with ϱ given by nodal values on `space_c`.
pub fn assemble_weighted_load(
    space: &FeSpace,
    weight: &[f64],
    space_c: &FeSpace,
    f: &dyn Fn(&Point, &mut [f64]),
) -> Result<Vec<f64>, FemError> {
    check_pair(space, space_c)?;
    check_len(space_c, weight, "load weight")?;
    let nc = space.components();
    let mut out = vec![0.0; space.ndofs()];
    let mut fv = [0.0; 3];
    for_each_cell_point(&[space, space_c], QUADRATURE_DEGREE, |c, x, w, b| {
        f(x, &mut fv[..nc]);
        let rho = b[1].value(space_c.cell_nodes(c), weight, 1)[0];
        for (a, &node) in space.cell_nodes(c).iter().enumerate() {
            let phi = w * rho * b[0].values[a];
            for k in 0..nc {
                out[node * nc + k] += phi * fv[k];
            }
        }
    });
    Ok(out)
}

/// Scalar boundary load `∫_Σ g φ` over facets with the given tag.
pub fn assemble_boundary_load(
    space: &FeSpace,
    tag: BoundaryTag,
    g: &dyn Fn(&Point) -> f64,
) -> Vec<f64> {
    let mut out = vec![0.0; space.ndofs()];
    for_each_facet_point(
        &[space],
        QUADRATURE_DEGREE,
        |f| f.tag == tag,
        |facet, x, w, b| {
            let gv = g(x);
            for (a, &node) in space.cell_nodes(facet.cell).iter().enumerate() {
                out[node] += w * gv * b[0].values[a];
            }
        },
    );
    out
}

/// `⟨g, φ⟩ = ∫_Γ₁ (α θ_∞ + q_e) φ + ∫_Ω h φ`.
pub fn assemble_rhs_g(
    space: &FeSpace,
    alpha: f64,
    theta_inf: &dyn Fn(&Point) -> f64,
    q_e: &dyn Fn(&Point) -> f64,
    h: &dyn Fn(&Point) -> f64,
) -> Vec<f64> {
    let wall = assemble_boundary_load(space, BoundaryTag::Wall, &|x| {
        alpha * theta_inf(x) + q_e(x)
    });
    let vol = assemble_load(space, &|x, out| out[0] = h(x));
    wall.iter().zip(&vol).map(|(a, b)| a + b).collect()
}

/// Symmetric gradient contraction `D(u):D(v)`.
pub fn sym_grad_contraction(gu: &[[f64; 3]; 3], gv: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let du = 0.5 * (gu[i][j] + gu[j][i]);
            let dv = 0.5 * (gv[i][j] + gv[j][i]);
            s += du * dv;
        }
    }
    s
}

/// Load vector `d(u, v, φ) = ∫ D(u):D(v) φ` on the scalar space `space_e`.
pub fn assemble_dissipation_load(
    u: &[f64],
    v: &[f64],
    space_u: &FeSpace,
    space_e: &FeSpace,
) -> Result<Vec<f64>, FemError> {
    check_pair(space_u, space_e)?;
    check_len(space_u, u, "velocity")?;
    check_len(space_u, v, "velocity")?;
    let nc = space_u.components();
    let mut out = vec![0.0; space_e.ndofs()];
    for_each_cell_point(&[space_e, space_u], QUADRATURE_DEGREE, |c, _, w, b| {
        let nodes = space_u.cell_nodes(c);
        let gu = b[1].gradient(nodes, u, nc);
        let gv = b[1].gradient(nodes, v, nc);
        let d = sym_grad_contraction(&gu, &gv);
        for (a, &node) in space_e.cell_nodes(c).iter().enumerate() {
            out[node] += w * d * b[0].values[a];
        }
    });
    Ok(out)
}

/// `∫ F(x, value, gradient)` for a field on `space`.
pub fn integrate_field(
    space: &FeSpace,
    coeffs: &[f64],
    degree: usize,
    f: impl Fn(&Point, &[f64; 3], &[[f64; 3]; 3]) -> f64,
) -> f64 {
    let nc = space.components();
    let mut total = 0.0;
    for_each_cell_point(&[space], degree, |c, x, w, b| {
        let nodes = space.cell_nodes(c);
        let val = b[0].value(nodes, coeffs, nc);
        let grad = b[0].gradient(nodes, coeffs, nc);
        total += w * f(x, &val, &grad);
    });
    total
}
