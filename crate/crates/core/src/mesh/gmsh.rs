//! Gmsh MSH 2.2 ASCII import/export (nodes, 2-node lines, 3-node triangles).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{BoundaryEdge, Marker, TriangleMesh};
use crate::error::{Error, Result};

pub fn write_msh(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    s.push_str("$PhysicalNames\n");
    let _ = writeln!(s, "{}", Marker::ALL.len() + 1);
    for m in Marker::ALL {
        let _ = writeln!(s, "1 {} \"{}\"", m.tag(), m.name());
    }
    s.push_str("2 100 \"domain\"\n$EndPhysicalNames\n");
    let _ = writeln!(s, "$Nodes\n{}", mesh.vertices.len());
    for (i, p) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} 0", i + 1, p[0], p[1]);
    }
    s.push_str("$EndNodes\n$Elements\n");
    let _ = writeln!(s, "{}", mesh.boundary_edges.len() + mesh.triangles.len());
    let mut id = 1;
    for e in &mesh.boundary_edges {
        let tag = e.marker.tag();
        let _ = writeln!(s, "{id} 1 2 {tag} {tag} {} {}", e.vertices[0] + 1, e.vertices[1] + 1);
        id += 1;
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let region = 100 + mesh.regions[t] as i32;
        let _ = writeln!(
            s,
            "{id} 2 2 {region} {region} {} {} {}",
            tri[0] + 1,
            tri[1] + 1,
            tri[2] + 1
        );
        id += 1;
    }
    s.push_str("$EndElements\n");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l.trim())
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: 1,
            message: msg.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, tok: Option<&str>, what: &str) -> Result<T> {
        tok.and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err(format!("expected {what}")))
    }
}

pub fn read_msh(text: &str) -> Result<TriangleMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut node_index: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let mut boundary_edges = Vec::new();
    let mut seen_format = false;
    while let Some((i, raw)) = lines.inner.next() {
        lines.line = i + 1;
        match raw.trim() {
            "$MeshFormat" => {
                let l = lines.next()?;
                let version = l.split_whitespace().next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {version}")));
                }
                if l.split_whitespace().nth(1) != Some("0") {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                seen_format = true;
            }
            "$Nodes" => {
                let l = lines.next()?;
                let n: usize = lines.parse(Some(l), "node count")?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let mut tok = l.split_whitespace();
                    let id: usize = lines.parse(tok.next(), "node id")?;
                    let x: f64 = lines.parse(tok.next(), "x coordinate")?;
                    let y: f64 = lines.parse(tok.next(), "y coordinate")?;
                    node_index.insert(id, vertices.len());
                    vertices.push([x, y]);
                }
            }
            "$Elements" => {
                let l = lines.next()?;
                let n: usize = lines.parse(Some(l), "element count")?;
                for _ in 0..n {
                    let l = lines.next()?;
                    let tok: Vec<&str> = l.split_whitespace().collect();
                    let ty: u32 = lines.parse(tok.get(1).copied(), "element type")?;
                    let ntags: usize = lines.parse(tok.get(2).copied(), "tag count")?;
                    let physical: i32 = if ntags > 0 {
                        lines.parse(tok.get(3).copied(), "physical tag")?
                    } else {
                        0
                    };
                    let nodes: Vec<usize> = tok[3 + ntags..]
                        .iter()
                        .map(|t| {
                            let id: usize = lines.parse(Some(*t), "node reference")?;
                            node_index
                                .get(&id)
                                .copied()
                                .ok_or_else(|| lines.err(format!("unknown node {id}")))
                        })
                        .collect::<Result<_>>()?;
                    match (ty, nodes.len()) {
                        (1, 2) => {
                            let marker = Marker::from_tag(physical).ok_or_else(|| {
                                lines.err(format!("unknown boundary physical tag {physical}"))
                            })?;
                            boundary_edges.push(BoundaryEdge {
                                vertices: [nodes[0], nodes[1]],
                                marker,
                            });
                        }
                        (2, 3) => {
                            triangles.push([nodes[0], nodes[1], nodes[2]]);
                            regions.push((physical - 100).clamp(0, 255) as u8);
                        }
                        (15, _) => {}
                        _ => return Err(lines.err(format!("unsupported element type {ty}"))),
                    }
                }
            }
            _ => {}
        }
    }
    if !seen_format {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "missing $MeshFormat section".into(),
        });
    }
    let mut mesh = TriangleMesh::new(vertices, triangles, boundary_edges)?;
    mesh.regions = regions;
    Ok(mesh)
}
