use std::collections::HashMap;

use serde::Serialize;

use super::{BoundaryTag, PipeMesh};
use crate::geom;

/// Flatness tolerance relative to the mesh diameter.
pub const FLATNESS_TOL: f64 = 1e-8;
/// Allowed deviation of the wall/cut angle from a right angle, in degrees.
pub const ANGLE_TOL_DEG: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct CutReport {
    pub id: usize,
    /// Largest distance of a cut vertex from the cut plane.
    pub flatness: f64,
    /// Largest wall/cut angle deviation from π/2 along this cut's rim, degrees.
    pub angle_deviation_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometryReport {
    pub cuts: Vec<CutReport>,
    pub min_quality: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl GeometryReport {
    pub fn max_flatness(&self) -> f64 {
        self.cuts.iter().map(|c| c.flatness).fold(0.0, f64::max)
    }

    pub fn max_angle_deviation_deg(&self) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.angle_deviation_deg)
            .fold(0.0, f64::max)
    }
}

fn cell_quality(dim: usize, pts: &[geom::Point]) -> f64 {
    let vol = geom::signed_volume(dim, pts);
    let mut sum_sq = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = geom::sub(&pts[i], &pts[j]);
            sum_sq += geom::dot(&d, &d);
        }
    }
    match dim {
        2 => 4.0 * 3f64.sqrt() * vol / sum_sq,
        _ => 12.0 * (3.0 * vol).abs().powf(2.0 / 3.0) * vol.signum() / sum_sq,
    }
}

/// Checks cut flatness, the right angle between walls and cuts, and cell
/// quality. Never fails; the outcome is carried in the report.
pub fn validate_geometry(mesh: &PipeMesh) -> GeometryReport {
    let dim = mesh.dim();
    let diameter = mesh.diameter();
    let verts = mesh.vertices();

    // (d-2)-subfaces shared by facets: vertices in 2D, edges in 3D
    let mut ridge_walls: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.facets().iter().enumerate() {
        if f.tag != BoundaryTag::Wall {
            continue;
        }
        for key in ridges(&f.vertices) {
            ridge_walls.entry(key).or_default().push(fi);
        }
    }

    let mut failures = Vec::new();
    let mut cuts = Vec::new();
    for plane in mesh.cuts() {
        let mut flatness: f64 = 0.0;
        let mut angle: f64 = 0.0;
        for f in mesh
            .facets()
            .iter()
            .filter(|f| f.tag == BoundaryTag::Cut(plane.id))
        {
            for &v in &f.vertices {
                let d = geom::dot(&geom::sub(&verts[v], &plane.point), &plane.normal);
                flatness = flatness.max(d.abs());
            }
            for key in ridges(&f.vertices) {
                if let Some(walls) = ridge_walls.get(&key) {
                    for &wi in walls {
                        let c = geom::dot(&f.normal, &mesh.facets()[wi].normal).clamp(-1.0, 1.0);
                        let dev = (c.acos() - std::f64::consts::FRAC_PI_2).abs().to_degrees();
                        angle = angle.max(dev);
                    }
                }
            }
        }
        if flatness > FLATNESS_TOL * diameter {
            failures.push(format!(
                "cut {} is not flat: deviation {flatness:.3e}",
                plane.id
            ));
        }
        if angle > ANGLE_TOL_DEG {
            failures.push(format!(
                "cut {} meets the wall at {angle:.3}° from a right angle",
                plane.id
            ));
        }
        cuts.push(CutReport {
            id: plane.id,
            flatness,
            angle_deviation_deg: angle,
        });
    }

    let min_quality = (0..mesh.num_cells())
        .map(|c| cell_quality(dim, &mesh.cell_points(c)))
        .fold(f64::INFINITY, f64::min);
    if min_quality <= 0.0 {
        failures.push("inverted or degenerate cell".into());
    }

    GeometryReport {
        cuts,
        min_quality,
        passed: failures.is_empty(),
        failures,
    }
}

fn ridges(facet: &[usize]) -> Vec<Vec<usize>> {
    (0..facet.len())
        .map(|skip| {
            let mut r: Vec<usize> = facet
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != skip)
                .map(|(_, &v)| v)
                .collect();
            r.sort_unstable();
            r
        })
        .collect()
}
