//! Gmsh MSH 2.2 ASCII reader and writer.
//!
//! Boundary elements must belong to a physical group named `wall` or
//! `cut_<i>` (i ≥ 1). Volume elements may carry any group name.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryTag, MeshError, PipeMesh};
use crate::geom::Point;

fn element_dim(kind: u32) -> Option<usize> {
    match kind {
        15 => Some(0),
        1 | 8 => Some(1),
        2 | 3 | 9 | 10 | 16 => Some(2),
        4 | 5 | 6 | 7 | 11 | 12 => Some(3),
        _ => None,
    }
}

fn element_name(kind: u32) -> String {
    match kind {
        3 => "quadrilateral".into(),
        5 => "hexahedron".into(),
        6 => "prism".into(),
        7 => "pyramid".into(),
        8 | 9 | 11 => format!("second-order element (type {kind})"),
        _ => format!("type {kind}"),
    }
}

fn parse_tag(name: &str) -> Option<BoundaryTag> {
    if name == "wall" {
        return Some(BoundaryTag::Wall);
    }
    let id: usize = name.strip_prefix("cut_")?.parse().ok()?;
    (id >= 1).then_some(BoundaryTag::Cut(id))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, MeshError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim())
            }
            None => Err(MeshError::Parse {
                line: self.line + 1,
                msg: "unexpected end of file".into(),
            }),
        }
    }

    fn err(&self, msg: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), MeshError> {
        let l = self.next()?;
        if l == token {
            Ok(())
        } else {
            Err(self.err(format!("expected `{token}`, found `{l}`")))
        }
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let l = self.next()?;
        l.parse().map_err(|_| self.err(format!("expected a count, found `{l}`")))
    }
}

struct RawElement {
    kind: u32,
    physical: i64,
    nodes: Vec<usize>,
}

/// Parses MSH 2.2 ASCII text into a tagged mesh.
pub fn read_msh(text: &str) -> Result<PipeMesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut names: HashMap<i64, String> = HashMap::new();
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut points: Vec<Point> = Vec::new();
    let mut elements: Vec<RawElement> = Vec::new();

    while let Some((i, raw)) = lines.inner.next() {
        lines.line = i + 1;
        match raw.trim() {
            "" => continue,
            "$MeshFormat" => {
                let l = lines.next()?;
                let version = l.split_whitespace().next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version `{version}`")));
                }
                if l.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                lines.expect("$EndMeshFormat")?;
            }
            "$PhysicalNames" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let mut parts = l.splitn(3, char::is_whitespace);
                    let _dim = parts.next();
                    let tag: i64 = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lines.err("bad physical tag"))?;
                    let name = parts
                        .next()
                        .map(|s| s.trim().trim_matches('"').to_string())
                        .ok_or_else(|| lines.err("missing physical name"))?;
                    names.insert(tag, name);
                }
                lines.expect("$EndPhysicalNames")?;
            }
            "$Nodes" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let v: Vec<&str> = l.split_whitespace().collect();
                    if v.len() < 4 {
                        return Err(lines.err("node line needs id and three coordinates"));
                    }
                    let id: usize = v[0].parse().map_err(|_| lines.err("bad node id"))?;
                    let mut p = [0.0; 3];
                    for k in 0..3 {
                        p[k] = v[k + 1].parse().map_err(|_| lines.err("bad coordinate"))?;
                    }
                    node_index.insert(id, points.len());
                    points.push(p);
                }
                lines.expect("$EndNodes")?;
            }
            "$Elements" => {
                let n = lines.count()?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let v: Vec<i64> = l
                        .split_whitespace()
                        .map(|t| t.parse().map_err(|_| lines.err("bad element field")))
                        .collect::<Result<_, _>>()?;
                    if v.len() < 3 {
                        return Err(lines.err("truncated element line"));
                    }
                    let kind = v[1] as u32;
                    let ntags = v[2] as usize;
                    if v.len() < 3 + ntags {
                        return Err(lines.err("truncated element tags"));
                    }
                    let physical = if ntags > 0 { v[3] } else { 0 };
                    let mut nodes = Vec::new();
                    for &id in &v[3 + ntags..] {
                        let idx = *node_index
                            .get(&(id as usize))
                            .ok_or_else(|| lines.err(format!("unknown node {id}")))?;
                        nodes.push(idx);
                    }
                    elements.push(RawElement {
                        kind,
                        physical,
                        nodes,
                    });
                }
                lines.expect("$EndElements")?;
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.next()? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content `{other}`"))),
        }
    }

    let mut dim = 0;
    for e in &elements {
        match element_dim(e.kind) {
            Some(d) => dim = dim.max(d),
            None => return Err(MeshError::UnsupportedElement(element_name(e.kind))),
        }
    }
    if dim < 2 {
        return Err(MeshError::Empty);
    }
    let mut volume_kinds: Vec<u32> = elements
        .iter()
        .filter(|e| element_dim(e.kind) == Some(dim))
        .map(|e| e.kind)
        .collect();
    volume_kinds.sort_unstable();
    volume_kinds.dedup();
    if volume_kinds.len() > 1 {
        return Err(MeshError::MixedElements);
    }
    let cell_kind = if dim == 2 { 2 } else { 4 };
    let facet_kind = if dim == 2 { 1 } else { 2 };
    if volume_kinds[0] != cell_kind {
        return Err(MeshError::UnsupportedElement(element_name(volume_kinds[0])));
    }

    let mut cells = Vec::new();
    let mut tags = Vec::new();
    for e in &elements {
        match element_dim(e.kind) {
            Some(d) if d == dim => cells.extend_from_slice(&e.nodes),
            Some(d) if d + 1 == dim => {
                if e.kind != facet_kind {
                    return Err(MeshError::UnsupportedElement(element_name(e.kind)));
                }
                let name = names
                    .get(&e.physical)
                    .cloned()
                    .unwrap_or_else(|| e.physical.to_string());
                let tag = parse_tag(&name).ok_or(MeshError::UnknownGroup(name))?;
                tags.push((e.nodes.clone(), tag));
            }
            _ => {}
        }
    }
    PipeMesh::new(dim, points, cells, &tags)
}

pub fn import_msh(path: impl AsRef<Path>) -> Result<PipeMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    read_msh(&text)
}

/// Serializes a mesh with its boundary tags to MSH 2.2 ASCII.
pub fn write_msh(mesh: &PipeMesh) -> String {
    let d = mesh.dim();
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let cut_ids = mesh.cut_ids();
    let _ = writeln!(s, "$PhysicalNames\n{}", 2 + cut_ids.len());
    let _ = writeln!(s, "{d} 1 \"fluid\"");
    let _ = writeln!(s, "{} 2 \"wall\"", d - 1);
    for id in &cut_ids {
        let _ = writeln!(s, "{} {} \"cut_{id}\"", d - 1, 2 + id);
    }
    s.push_str("$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.num_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p[0], p[1], p[2]);
    }
    s.push_str("$EndNodes\n");
    let nf = mesh.facets().len();
    let _ = writeln!(s, "$Elements\n{}", nf + mesh.num_cells());
    let (facet_kind, cell_kind) = if d == 2 { (1, 2) } else { (2, 4) };
    let mut id = 1;
    for f in mesh.facets() {
        let phys = match f.tag {
            BoundaryTag::Wall => 2,
            BoundaryTag::Cut(i) => 2 + i,
        };
        let _ = write!(s, "{id} {facet_kind} 2 {phys} {phys}");
        for v in &f.vertices {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    for c in 0..mesh.num_cells() {
        let _ = write!(s, "{id} {cell_kind} 2 1 1");
        for v in mesh.cell(c) {
            let _ = write!(s, " {}", v + 1);
        }
        s.push('\n');
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_pipe, PipeSpec};

    fn tag_set(m: &PipeMesh) -> Vec<(Vec<usize>, BoundaryTag)> {
        let mut v: Vec<_> = m
            .tagged_facets()
            .into_iter()
            .map(|(mut f, t)| {
                f.sort_unstable();
                (f, t)
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn round_trip_channel() {
        let m = generate_pipe(&PipeSpec::channel(0.0, 4.0, 1.0, 0.5)).unwrap();
        let back = read_msh(&write_msh(&m)).unwrap();
        assert_eq!(tag_set(&m), tag_set(&back));
        assert_eq!(m.vertices(), back.vertices());
    }

    #[test]
    fn round_trip_cylinder() {
        let m = generate_pipe(&PipeSpec::cylinder([0.0; 3], [2.0, 0.0, 0.0], 0.5, 0.5)).unwrap();
        let back = read_msh(&write_msh(&m)).unwrap();
        assert_eq!(tag_set(&m), tag_set(&back));
    }

    const SQUARE_HEAD: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n";

    #[test]
    fn missing_cut_group() {
        let text = format!(
            "$PhysicalNames\n1\n1 2 \"wall\"\n$EndPhysicalNames\n{SQUARE_HEAD}$Elements\n6\n1 1 2 2 2 1 2\n2 1 2 2 2 2 3\n3 1 2 2 2 3 4\n4 1 2 2 2 4 1\n5 2 2 1 1 1 2 3\n6 2 2 1 1 1 3 4\n$EndElements\n"
        );
        assert!(matches!(read_msh(&text), Err(MeshError::NoCuts)));
    }

    #[test]
    fn unknown_group() {
        let text = format!(
            "$PhysicalNames\n1\n1 2 \"inlet\"\n$EndPhysicalNames\n{SQUARE_HEAD}$Elements\n3\n1 1 2 2 2 1 2\n5 2 2 1 1 1 2 3\n6 2 2 1 1 1 3 4\n$EndElements\n"
        );
        assert!(matches!(read_msh(&text), Err(MeshError::UnknownGroup(n)) if n == "inlet"));
    }

    #[test]
    fn quadrilateral_cells_unsupported() {
        let text = format!("{SQUARE_HEAD}$Elements\n1\n1 3 2 1 1 1 2 3 4\n$EndElements\n");
        assert!(matches!(
            read_msh(&text),
            Err(MeshError::UnsupportedElement(_))
        ));
        let mixed = format!(
            "{SQUARE_HEAD}$Elements\n2\n1 3 2 1 1 1 2 3 4\n2 2 2 1 1 1 2 3\n$EndElements\n"
        );
        assert!(matches!(read_msh(&mixed), Err(MeshError::MixedElements)));
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 zero 0\n$EndNodes\n";
        match read_msh(text) {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
