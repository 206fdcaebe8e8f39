use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{BoundaryTag, MeshError, PipeMesh};
use crate::geom::{self, Point};

/// A straight pipe segment between two axis points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub start: Point,
    pub end: Point,
    /// Radius in 3D, half-width in 2D.
    pub radius: f64,
}

/// Geometry of a pipe system.
///
/// In 2D the branches must be axis-aligned; the domain is the union of the
/// branch rectangles, which covers straight channels and T-junctions. In 3D
/// a single straight cylinder with arbitrary axis is supported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeSpec {
    pub dim: usize,
    pub branches: Vec<Branch>,
    /// Target mesh size.
    pub h: f64,
}

impl PipeSpec {
    /// Straight 2D channel `[x0, x1] × [-half_width, half_width]`.
    pub fn channel(x0: f64, x1: f64, half_width: f64, h: f64) -> Self {
        Self {
            dim: 2,
            branches: vec![Branch {
                start: [x0, 0.0, 0.0],
                end: [x1, 0.0, 0.0],
                radius: half_width,
            }],
            h,
        }
    }

    /// Unit square `[0,1]²`, walls at y = 0 and y = 1, cuts at x = 0 and x = 1.
    pub fn unit_square(h: f64) -> Self {
        Self {
            dim: 2,
            branches: vec![Branch {
                start: [0.0, 0.5, 0.0],
                end: [1.0, 0.5, 0.0],
                radius: 0.5,
            }],
            h,
        }
    }

    pub fn cylinder(start: Point, end: Point, radius: f64, h: f64) -> Self {
        Self {
            dim: 3,
            branches: vec![Branch { start, end, radius }],
            h,
        }
    }

    fn validate(&self) -> Result<(), MeshError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(MeshError::Dimension(self.dim));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(MeshError::Spec("mesh size must be positive".into()));
        }
        if self.branches.is_empty() {
            return Err(MeshError::Spec("no branches".into()));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(MeshError::Spec(format!("branch {i}: radius must be positive")));
            }
            if geom::norm(&geom::sub(&b.end, &b.start)) <= 0.0 {
                return Err(MeshError::Spec(format!("branch {i}: zero-length axis")));
            }
        }
        Ok(())
    }
}

pub fn generate_pipe(spec: &PipeSpec) -> Result<PipeMesh, MeshError> {
    spec.validate()?;
    match spec.dim {
        2 => generate_planar(spec),
        _ => generate_cylinder(spec),
    }
}

fn subdivide(breaks: &mut Vec<f64>, h: f64) -> Vec<f64> {
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let n = ((w[1] - w[0]) / h - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(if k == n {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * k as f64 / n as f64
            });
        }
    }
    out
}

struct CutCandidate {
    point: Point,
    axis: Point,
    radius: f64,
}

fn cut_candidates(spec: &PipeSpec) -> Vec<CutCandidate> {
    let mut out = Vec::new();
    for b in &spec.branches {
        let axis = geom::normalize(&geom::sub(&b.end, &b.start));
        out.push(CutCandidate {
            point: b.start,
            axis: geom::scale(&axis, -1.0),
            radius: b.radius,
        });
        out.push(CutCandidate {
            point: b.end,
            axis,
            radius: b.radius,
        });
    }
    out
}

/// Boundary faces (count == 1) with outward unit normals.
fn boundary_faces(dim: usize, vertices: &[Point], cells: &[usize]) -> Vec<(Vec<usize>, Point)> {
    let nv = dim + 1;
    let mut count: HashMap<Vec<usize>, (usize, usize, usize)> = HashMap::new();
    let mut order = Vec::new();
    for c in 0..cells.len() / nv {
        for opp in 0..nv {
            let mut key: Vec<usize> = (0..nv)
                .filter(|&k| k != opp)
                .map(|k| cells[c * nv + k])
                .collect();
            key.sort_unstable();
            let e = count.entry(key.clone()).or_insert_with(|| {
                order.push(key);
                (c, opp, 0)
            });
            e.2 += 1;
        }
    }
    order
        .into_iter()
        .filter_map(|key| {
            let (c, opp, n) = count[&key];
            if n != 1 {
                return None;
            }
            let pts: Vec<Point> = key.iter().map(|&v| vertices[v]).collect();
            let mut normal = geom::normalize(&geom::facet_area_normal(dim, &pts));
            let out = geom::sub(&geom::centroid(&pts), &vertices[cells[c * nv + opp]]);
            if geom::dot(&normal, &out) < 0.0 {
                normal = geom::scale(&normal, -1.0);
            }
            Some((key, normal))
        })
        .collect()
}

fn classify(
    vertices: &[Point],
    faces: Vec<(Vec<usize>, Point)>,
    candidates: &[CutCandidate],
    tol: f64,
) -> Vec<(Vec<usize>, BoundaryTag)> {
    let mut cand_of_face = vec![None; faces.len()];
    for (fi, (f, n)) in faces.iter().enumerate() {
        for (ci, c) in candidates.iter().enumerate() {
            if geom::dot(n, &c.axis) < 1.0 - 1e-9 {
                continue;
            }
            let on_cut = f.iter().all(|&v| {
                let d = geom::sub(&vertices[v], &c.point);
                let along = geom::dot(&d, &c.axis);
                let radial = geom::norm(&geom::sub(&d, &geom::scale(&c.axis, along)));
                along.abs() < tol && radial <= c.radius * (1.0 + 1e-9) + tol
            });
            if on_cut {
                cand_of_face[fi] = Some(ci);
                break;
            }
        }
    }
    // number the cuts in candidate order, skipping endpoints that are interior
    let mut id_of_cand = vec![0usize; candidates.len()];
    let mut next = 1;
    for (ci, slot) in id_of_cand.iter_mut().enumerate() {
        if cand_of_face.contains(&Some(ci)) {
            *slot = next;
            next += 1;
        }
    }
    faces
        .into_iter()
        .zip(cand_of_face)
        .map(|((f, _), c)| {
            let tag = match c {
                Some(ci) => BoundaryTag::Cut(id_of_cand[ci]),
                None => BoundaryTag::Wall,
            };
            (f, tag)
        })
        .collect()
}

fn generate_planar(spec: &PipeSpec) -> Result<PipeMesh, MeshError> {
    let mut rects = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, b) in spec.branches.iter().enumerate() {
        let d = geom::sub(&b.end, &b.start);
        let r = b.radius;
        let rect = if d[1].abs() < 1e-14 && d[2].abs() < 1e-14 {
            [b.start[0].min(b.end[0]), b.start[0].max(b.end[0]), b.start[1] - r, b.start[1] + r]
        } else if d[0].abs() < 1e-14 && d[2].abs() < 1e-14 {
            [b.start[0] - r, b.start[0] + r, b.start[1].min(b.end[1]), b.start[1].max(b.end[1])]
        } else {
            return Err(MeshError::Spec(format!(
                "branch {i}: 2D branches must be axis-aligned"
            )));
        };
        xs.extend_from_slice(&rect[0..2]);
        ys.extend_from_slice(&rect[2..4]);
        rects.push(rect);
    }
    let xs = subdivide(&mut xs, spec.h);
    let ys = subdivide(&mut ys, spec.h);
    let inside = |x: f64, y: f64| {
        rects
            .iter()
            .any(|r| x > r[0] && x < r[1] && y > r[2] && y < r[3])
    };

    let (nx, ny) = (xs.len(), ys.len());
    let mut index = vec![usize::MAX; nx * ny];
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut vid = |i: usize, j: usize, vertices: &mut Vec<Point>| {
        let k = j * nx + i;
        if index[k] == usize::MAX {
            index[k] = vertices.len();
            vertices.push([xs[i], ys[j], 0.0]);
        }
        index[k]
    };
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            if !inside(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])) {
                continue;
            }
            let v00 = vid(i, j, &mut vertices);
            let v10 = vid(i + 1, j, &mut vertices);
            let v11 = vid(i + 1, j + 1, &mut vertices);
            let v01 = vid(i, j + 1, &mut vertices);
            cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
        }
    }
    let faces = boundary_faces(2, &vertices, &cells);
    let tol = 1e-9 * spec.h;
    let tags = classify(&vertices, faces, &cut_candidates(spec), tol);
    PipeMesh::new(2, vertices, cells, &tags)
}

/// Triangulated disk of radius `radius` with `rings` concentric rings of
/// 6k points each, in the (y, z) plane.
fn disk(radius: f64, rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut pts = vec![[0.0, 0.0]];
    let mut ring_start = vec![0usize];
    for k in 1..=rings {
        ring_start.push(pts.len());
        let n = 6 * k;
        let r = radius * k as f64 / rings as f64;
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            pts.push([r * a.cos(), r * a.sin()]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..6 {
        tris.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    for k in 2..=rings {
        let (n_in, n_out) = (6 * (k - 1), 6 * k);
        let (s_in, s_out) = (ring_start[k - 1], ring_start[k]);
        let (mut i, mut o) = (0usize, 0usize);
        while i < n_in || o < n_out {
            let next_in = (i + 1) as f64 / n_in as f64;
            let next_out = (o + 1) as f64 / n_out as f64;
            if o < n_out && (i >= n_in || next_out <= next_in) {
                tris.push([s_in + i % n_in, s_out + o, s_out + (o + 1) % n_out]);
                o += 1;
            } else {
                tris.push([s_in + i, s_out + o % n_out, s_in + (i + 1) % n_in]);
                i += 1;
            }
        }
    }
    (pts, tris)
}

fn generate_cylinder(spec: &PipeSpec) -> Result<PipeMesh, MeshError> {
    if spec.branches.len() != 1 {
        return Err(MeshError::Spec(
            "3D generation supports a single straight cylinder".into(),
        ));
    }
    let b = spec.branches[0];
    let axis_vec = geom::sub(&b.end, &b.start);
    let length = geom::norm(&axis_vec);
    let axis = geom::scale(&axis_vec, 1.0 / length);
    let helper = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let t1 = geom::normalize(&geom::cross(&axis, &helper));
    let t2 = geom::cross(&axis, &t1);

    let rings = ((b.radius / spec.h) - 1e-9).ceil().max(1.0) as usize;
    let layers = ((length / spec.h) - 1e-9).ceil().max(1.0) as usize;
    let (pts2, tris) = disk(b.radius, rings);
    let n2 = pts2.len();

    let mut vertices = Vec::with_capacity(n2 * (layers + 1));
    for l in 0..=layers {
        let s = length * l as f64 / layers as f64;
        for p in &pts2 {
            let q = geom::add(
                &geom::add(&b.start, &geom::scale(&axis, s)),
                &geom::add(&geom::scale(&t1, p[0]), &geom::scale(&t2, p[1])),
            );
            vertices.push(q);
        }
    }
    let mut cells = Vec::with_capacity(tris.len() * layers * 12);
    for l in 0..layers {
        let lo = l * n2;
        let hi = (l + 1) * n2;
        for t in &tris {
            let mut s = *t;
            s.sort_unstable();
            let [a, b2, c] = s;
            cells.extend_from_slice(&[lo + a, lo + b2, lo + c, hi + c]);
            cells.extend_from_slice(&[lo + a, lo + b2, hi + b2, hi + c]);
            cells.extend_from_slice(&[lo + a, hi + a, hi + b2, hi + c]);
        }
    }
    let faces = boundary_faces(3, &vertices, &cells);
    let tol = 1e-9 * spec.h.max(length);
    let tags = classify(&vertices, faces, &cut_candidates(spec), tol);
    PipeMesh::new(3, vertices, cells, &tags)
}
