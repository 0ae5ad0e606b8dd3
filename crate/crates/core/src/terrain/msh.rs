//! Gmsh MSH 2.2 ASCII: `$Nodes`, `$Elements` (type 1 lines, type 2
//! triangles) and optional `$PhysicalNames`. Node `z` holds the elevation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{LoopKind, TaggedEdge, TerrainMesh};
use super::TerrainError;

struct Lines<'a> {
    name: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some(t);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, TerrainError> {
        self.next()
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, message: impl Into<String>) -> TerrainError {
        TerrainError::Parse {
            source_name: self.name.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize, TerrainError> {
        let l = self.expect(what)?;
        l.parse()
            .map_err(|_| self.err(format!("expected {what}, found `{l}`")))
    }
}

fn is_hole_name(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.contains("hole") || n.contains("nofly") || n.contains("no-fly") || n.contains("no_fly")
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TerrainMesh, TerrainError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TerrainError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_msh(&text, &path.display().to_string())
}

/// Parses MSH text; `name` labels parse errors.
pub fn parse_msh(text: &str, name: &str) -> Result<TerrainMesh, TerrainError> {
    let mut lines = Lines {
        name,
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut nodes: Vec<[f64; 3]> = Vec::new();
    let mut node_index: HashMap<u64, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut raw_lines: Vec<(u64, u64, u64, usize)> = Vec::new();
    let mut raw_triangles: Vec<([u64; 3], u64, usize)> = Vec::new();
    let mut physical_names: HashMap<u64, String> = HashMap::new();
    let mut saw_format = false;
    let mut saw_nodes = false;

    while let Some(header) = lines.next() {
        match header {
            "$MeshFormat" => {
                let l = lines.expect("format line")?;
                let mut it = l.split_whitespace();
                let version = it.next().unwrap_or("");
                let file_type = it.next().unwrap_or("");
                if !version.starts_with("2.") {
                    return Err(
                        lines.err(format!("unsupported MSH version {version}, expected 2.2"))
                    );
                }
                if file_type != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                if lines.expect("$EndMeshFormat")? != "$EndMeshFormat" {
                    return Err(lines.err("expected $EndMeshFormat"));
                }
                saw_format = true;
            }
            "$PhysicalNames" => {
                let n = lines.count("physical name count")?;
                for _ in 0..n {
                    let l = lines.expect("physical name")?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let _dim = it.next();
                    let tag: u64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lines.err("malformed physical name"))?;
                    let nm = it.next().unwrap_or("").trim().trim_matches('"');
                    physical_names.insert(tag, nm.to_string());
                }
                if lines.expect("$EndPhysicalNames")? != "$EndPhysicalNames" {
                    return Err(lines.err("expected $EndPhysicalNames"));
                }
            }
            "$Nodes" => {
                let n = lines.count("node count")?;
                nodes.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node")?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    if f.len() != 4 {
                        return Err(
                            lines.err(format!("node line needs 4 fields, found {}", f.len()))
                        );
                    }
                    let id: u64 = f[0].parse().map_err(|_| lines.err("bad node id"))?;
                    let mut xyz = [0.0; 3];
                    for k in 0..3 {
                        xyz[k] = f[k + 1]
                            .parse()
                            .map_err(|_| lines.err(format!("bad coordinate `{}`", f[k + 1])))?;
                    }
                    if node_index.insert(id, nodes.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    nodes.push(xyz);
                }
                if lines.expect("$EndNodes")? != "$EndNodes" {
                    return Err(lines.err("expected $EndNodes"));
                }
                saw_nodes = true;
            }
            "$Elements" => {
                let n = lines.count("element count")?;
                for _ in 0..n {
                    let l = lines.expect("element")?;
                    let f: Result<Vec<u64>, _> =
                        l.split_whitespace().map(str::parse::<u64>).collect();
                    let f = f.map_err(|_| lines.err("element line must hold integers"))?;
                    if f.len() < 3 {
                        return Err(lines.err("truncated element line"));
                    }
                    let (id, ty, ntags) = (f[0], f[1], f[2] as usize);
                    let rest = f
                        .get(3 + ntags..)
                        .ok_or_else(|| lines.err("element tag count exceeds line length"))?;
                    let physical = if ntags > 0 { f[3] } else { 0 };
                    let want = match ty {
                        1 => 2,
                        2 => 3,
                        15 => 1,
                        other => return Err(lines.err(format!("unsupported element type {other}"))),
                    };
                    if rest.len() != want {
                        return Err(lines.err(format!(
                            "element {id} of type {ty} needs {want} nodes, found {}",
                            rest.len()
                        )));
                    }
                    match ty {
                        1 => raw_lines.push((rest[0], rest[1], physical, lines.line)),
                        2 => raw_triangles.push(([rest[0], rest[1], rest[2]], id, lines.line)),
                        _ => {}
                    }
                }
                if lines.expect("$EndElements")? != "$EndElements" {
                    return Err(lines.err("expected $EndElements"));
                }
            }
            other if other.starts_with('$') => {
                // skip unknown sections
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.expect(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected content `{other}`"))),
        }
    }
    if !saw_format {
        return Err(lines.err("missing $MeshFormat section"));
    }
    if !saw_nodes {
        return Err(lines.err("missing $Nodes section"));
    }

    let lookup = |tag: u64, elem: String| {
        node_index
            .get(&tag)
            .copied()
            .ok_or_else(|| TerrainError::Validation {
                entity: elem,
                message: format!(
                    "references node {tag} which is not defined (mesh has {} nodes)",
                    nodes.len()
                ),
            })
    };
    for (vs, id, _) in &raw_triangles {
        let mut t = [0usize; 3];
        for k in 0..3 {
            t[k] = lookup(vs[k], format!("triangle element {id}"))?;
        }
        triangles.push(t);
    }
    let tagged = if raw_lines.is_empty() {
        None
    } else {
        let mut out = Vec::with_capacity(raw_lines.len());
        for &(a, b, phys, line) in &raw_lines {
            let kind = match physical_names.get(&phys) {
                Some(nm) if is_hole_name(nm) => LoopKind::Hole,
                Some(_) => LoopKind::Outer,
                None if phys == 1 => LoopKind::Outer,
                None => LoopKind::Hole,
            };
            out.push(TaggedEdge {
                a: lookup(a, format!("line element at line {line}"))?,
                b: lookup(b, format!("line element at line {line}"))?,
                kind,
            });
        }
        Some(out)
    };
    TerrainMesh::new(nodes, triangles, tagged)
}

/// Writes the mesh with tagged boundary lines (`outer` = 1, `hole` = 2).
pub fn write_msh(mesh: &TerrainMesh) -> String {
    let mut s = String::new();
    s.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    s.push_str(
        "$PhysicalNames\n3\n1 1 \"outer\"\n1 2 \"hole\"\n2 3 \"domain\"\n$EndPhysicalNames\n",
    );
    let _ = writeln!(s, "$Nodes\n{}", mesh.node_count());
    for (i, (p, z)) in mesh.points().iter().zip(mesh.elevations()).enumerate() {
        let _ = writeln!(s, "{} {:?} {:?} {:?}", i + 1, p.x, p.y, z);
    }
    s.push_str("$EndNodes\n");
    let mut body = String::new();
    let mut id = 0usize;
    for lp in mesh.loops() {
        let tag = match lp.kind {
            LoopKind::Outer => 1,
            LoopKind::Hole => 2,
        };
        let m = lp.nodes.len();
        for k in 0..m {
            id += 1;
            let _ = writeln!(
                body,
                "{id} 1 2 {tag} {tag} {} {}",
                lp.nodes[k] + 1,
                lp.nodes[(k + 1) % m] + 1
            );
        }
    }
    for t in mesh.triangles() {
        id += 1;
        let _ = writeln!(body, "{id} 2 2 3 3 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    let _ = write!(s, "$Elements\n{id}\n{body}$EndElements\n");
    s
}
