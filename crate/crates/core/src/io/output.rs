//! Legacy VTK and CSV writers, and a JSON container for field trajectories.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fem::FieldVector;
use crate::mesh::PipeMesh;

/// Point data on mesh vertices: name, components, values.
pub struct PointField<'a> {
    pub name: &'a str,
    pub components: usize,
    pub values: &'a [f64],
}

/// VTK legacy ASCII 3.0 unstructured grid. Vector fields are padded to three
/// components.
pub fn vtk_string(mesh: &PipeMesh, title: &str, fields: &[PointField]) -> String {
    let mut s = String::new();
    let nv = mesh.num_vertices();
    let nc = mesh.num_cells();
    let dim = mesh.dim();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{title}");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", num(p[0]), num(p[1]), num(p[2]));
    }
    let _ = writeln!(s, "CELLS {nc} {}", nc * (dim + 2));
    for c in 0..nc {
        let cell = mesh.cell(c);
        let _ = write!(s, "{}", cell.len());
        for v in cell {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    let ty = if dim == 2 { 5 } else { 10 };
    for _ in 0..nc {
        let _ = writeln!(s, "{ty}");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {nv}");
    }
    for f in fields {
        if f.components == 1 {
            let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
            for v in &f.values[..nv] {
                let _ = writeln!(s, "{}", num(*v));
            }
        } else {
            let _ = writeln!(s, "VECTORS {} double", f.name);
            for i in 0..nv {
                let c = |k: usize| {
                    if k < f.components {
                        f.values[i * f.components + k]
                    } else {
                        0.0
                    }
                };
                let _ = writeln!(s, "{} {} {}", num(c(0)), num(c(1)), num(c(2)));
            }
        }
    }
    s
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_vtk(path: impl AsRef<Path>, mesh: &PipeMesh, fields: &[PointField]) -> io::Result<()> {
    fs::write(path, vtk_string(mesh, "pipeflow", fields))
}

/// Rows keyed by an integer index followed by floating-point columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl CsvTable {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, key: usize, values: Vec<f64>) {
        debug_assert_eq!(values.len() + 1, self.header.len());
        self.rows.push((key, values));
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for (k, vals) in &self.rows {
            let _ = write!(s, "{k}");
            for v in vals {
                let _ = write!(s, ",{}", num(*v));
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or("empty CSV")?
            .split(',')
            .map(str::to_string)
            .collect();
        let mut t = Self::new(header);
        for (i, line) in lines.enumerate() {
            let mut cells = line.split(',');
            let key = cells
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or(format!("row {}: bad key", i + 1))?;
            let vals = cells
                .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() + 1 != t.header.len() {
                return Err(format!("row {}: {} columns", i + 1, vals.len() + 1));
            }
            t.rows.push((key, vals));
        }
        Ok(t)
    }
}

pub fn write_csv(path: impl AsRef<Path>, table: &CsvTable) -> io::Result<()> {
    fs::write(path, table.to_csv())
}

/// A stored field trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTrajectory {
    pub mesh: String,
    pub ndofs: usize,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl StoredTrajectory {
    pub fn new(mesh: String, traj: &[FieldVector]) -> Self {
        Self {
            mesh,
            ndofs: traj.first().map_or(0, |f| f.len()),
            times: traj.iter().map(|f| f.time).collect(),
            values: traj.iter().map(|f| f.values.clone()).collect(),
        }
    }

    pub fn fields(&self) -> Vec<FieldVector> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| FieldVector::new(v.clone(), t))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryTag;

    fn single_tet() -> PipeMesh {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let faces = vec![
            (vec![1, 2, 3], BoundaryTag::Cut(1)),
            (vec![0, 2, 3], BoundaryTag::Wall),
            (vec![0, 1, 3], BoundaryTag::Wall),
            (vec![0, 1, 2], BoundaryTag::Wall),
        ];
        PipeMesh::new(3, v, vec![0, 1, 2, 3], &faces).unwrap()
    }

    const GOLDEN: &str = "# vtk DataFile Version 3.0
pipeflow
ASCII
DATASET UNSTRUCTURED_GRID
POINTS 4 double
0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
1.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
0.0000000000000000e0 1.0000000000000000e0 0.0000000000000000e0
0.0000000000000000e0 0.0000000000000000e0 1.0000000000000000e0
CELLS 1 5
4 0 1 2 3
CELL_TYPES 1
10
POINT_DATA 4
VECTORS velocity double
0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
0.0000000000000000e0 0.0000000000000000e0 0.0000000000000000e0
SCALARS pressure double 1
LOOKUP_TABLE default
0.0000000000000000e0
0.0000000000000000e0
0.0000000000000000e0
0.0000000000000000e0
";

    #[test]
    fn single_tet_golden() {
        let m = single_tet();
        let z = [0.0; 12];
        let s = vtk_string(
            &m,
            "pipeflow",
            &[
                PointField { name: "velocity", components: 3, values: &z },
                PointField { name: "pressure", components: 1, values: &z[..4] },
            ],
        );
        assert_eq!(s, GOLDEN);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = CsvTable::new(vec!["step".into(), "a".into(), "b".into()]);
        t.push(0, vec![0.1, -1.0 / 3.0]);
        t.push(1, vec![f64::MIN_POSITIVE, 1e300]);
        t.push(2, vec![std::f64::consts::PI, -0.0]);
        let back = CsvTable::parse(&t.to_csv()).unwrap();
        for (a, b) in t.rows.iter().zip(&back.rows) {
            for (x, y) in a.1.iter().zip(&b.1) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
