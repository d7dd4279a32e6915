//! Reader for ASCII Gmsh `.msh` files, versions 2.2 and 4.1.
//!
//! Only what the solver needs is imported: node coordinates, tetrahedral
//! elements (type 4), and physical-group tags. Lower-dimensional elements
//! are skipped. Parse failures report the 1-based line number.

use std::fs;
use std::path::Path;

use nalgebra::Point3;
use std::collections::HashMap;
use thiserror::Error;

use super::{MeshError, TetMesh};

#[derive(Debug, Error)]
pub enum MshError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}:{line}: unsupported MSH version {version}; expected 2.2 or 4.1 ASCII")]
    UnsupportedVersion { path: String, line: usize, version: String },
    #[error("{path}: no tetrahedral elements (type 4) found")]
    NoTets { path: String },
    #[error("{path}:{line}: element references unknown node tag {tag}")]
    DanglingNode { path: String, line: usize, tag: u64 },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Whitespace token stream that remembers line numbers for error reporting.
struct Cursor<'a> {
    tokens: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, path: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut last_line = 1;
        for (i, line) in text.lines().enumerate() {
            last_line = i + 1;
            for tok in line.split_whitespace() {
                tokens.push((i + 1, tok));
            }
        }
        Cursor { tokens, pos: 0, last_line, path }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> MshError {
        MshError::Parse { path: self.path.to_string(), line, msg: msg.into() }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), MshError> {
        match self.tokens.get(self.pos) {
            Some(&(line, tok)) => {
                self.pos += 1;
                Ok((line, tok))
            }
            None => Err(self.err(self.last_line, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn next_u64(&mut self, what: &str) -> Result<(usize, u64), MshError> {
        let (line, tok) = self.next(what)?;
        tok.parse()
            .map(|v| (line, v))
            .map_err(|_| self.err(line, format!("expected integer {what}, got {tok:?}")))
    }

    fn next_i64(&mut self, what: &str) -> Result<(usize, i64), MshError> {
        let (line, tok) = self.next(what)?;
        tok.parse()
            .map(|v| (line, v))
            .map_err(|_| self.err(line, format!("expected integer {what}, got {tok:?}")))
    }

    fn next_f64(&mut self, what: &str) -> Result<(usize, f64), MshError> {
        let (line, tok) = self.next(what)?;
        tok.parse()
            .map(|v| (line, v))
            .map_err(|_| self.err(line, format!("expected number {what}, got {tok:?}")))
    }

    /// Skips tokens until the given section terminator is consumed.
    fn skip_until(&mut self, end: &str) -> Result<(), MshError> {
        loop {
            let (_, tok) = self.next(end)?;
            if tok == end {
                return Ok(());
            }
        }
    }
}

/// Reads an ASCII MSH v2.2 or v4.1 file into a [`TetMesh`].
pub fn read_msh(path: impl AsRef<Path>) -> Result<TetMesh, MshError> {
    let path_str = path.as_ref().display().to_string();
    let text = fs::read_to_string(&path).map_err(|source| MshError::Io {
        path: path_str.clone(),
        source,
    })?;
    parse_msh(&text, &path_str)
}

/// Version-independent intermediate state.
#[derive(Default)]
struct RawMesh {
    /// node tag → coordinates, in file order.
    node_tags: Vec<u64>,
    coords: Vec<Point3<f64>>,
    /// tets as node tags + (physical tag, defining line).
    tets: Vec<([u64; 4], i32, usize)>,
    saw_elements: bool,
}

pub(crate) fn parse_msh(text: &str, path: &str) -> Result<TetMesh, MshError> {
    let mut cur = Cursor::new(text, path);
    let mut raw = RawMesh::default();
    let mut version: Option<f64> = None;
    // v4.1: physical tag of each 3-d entity, from $Entities.
    let mut volume_physical: HashMap<i64, i32> = HashMap::new();

    while let Some((line, tok)) = cur.peek() {
        if !tok.starts_with('$') {
            return Err(cur.err(line, format!("expected a section marker, got {tok:?}")));
        }
        cur.next("section")?;
        match tok {
            "$MeshFormat" => {
                let (vline, vtok) = cur.next("version")?;
                let v: f64 = vtok
                    .parse()
                    .map_err(|_| cur.err(vline, format!("bad version {vtok:?}")))?;
                let (fline, ftype) = cur.next_u64("file type")?;
                let _ = cur.next_u64("data size")?;
                if ftype != 0 {
                    return Err(cur.err(fline, "binary MSH files are not supported"));
                }
                if !(v - 2.2).abs().min((v - 4.1).abs()).le(&1e-9) {
                    return Err(MshError::UnsupportedVersion {
                        path: path.to_string(),
                        line: vline,
                        version: vtok.to_string(),
                    });
                }
                version = Some(v);
                cur.skip_until("$EndMeshFormat")?;
            }
            "$Entities" => parse_entities(&mut cur, &mut volume_physical)?,
            "$Nodes" => match version {
                Some(v) if (v - 2.2).abs() < 1e-9 => parse_nodes_v2(&mut cur, &mut raw)?,
                Some(_) => parse_nodes_v4(&mut cur, &mut raw)?,
                None => return Err(cur.err(line, "$Nodes before $MeshFormat")),
            },
            "$Elements" => match version {
                Some(v) if (v - 2.2).abs() < 1e-9 => parse_elements_v2(&mut cur, &mut raw)?,
                Some(_) => parse_elements_v4(&mut cur, &mut raw, &volume_physical)?,
                None => return Err(cur.err(line, "$Elements before $MeshFormat")),
            },
            other => {
                // Unknown or irrelevant section ($PhysicalNames, ...).
                let end = format!("$End{}", &other[1..]);
                cur.skip_until(&end)?;
            }
        }
    }

    if version.is_none() {
        return Err(cur.err(1, "missing $MeshFormat section"));
    }
    if raw.tets.is_empty() {
        return Err(if raw.saw_elements {
            MshError::NoTets { path: path.to_string() }
        } else {
            cur.err(cur.last_line, "missing $Elements section")
        });
    }

    // Map node tags to dense indices.
    let mut index_of: HashMap<u64, u32> = HashMap::with_capacity(raw.node_tags.len());
    for (i, &tag) in raw.node_tags.iter().enumerate() {
        index_of.insert(tag, i as u32);
    }
    let mut cells = Vec::with_capacity(raw.tets.len());
    let mut tags = Vec::with_capacity(raw.tets.len());
    let mut any_tag = false;
    for &(tet_tags, phys, line) in &raw.tets {
        let mut cell = [0u32; 4];
        for (k, &t) in tet_tags.iter().enumerate() {
            cell[k] = *index_of.get(&t).ok_or(MshError::DanglingNode {
                path: path.to_string(),
                line,
                tag: t,
            })?;
        }
        cells.push(cell);
        tags.push(phys);
        any_tag |= phys != 0;
    }

    let mesh = TetMesh::from_parts(raw.coords, cells, any_tag.then_some(tags))?;
    Ok(mesh)
}

fn parse_nodes_v2(cur: &mut Cursor, raw: &mut RawMesh) -> Result<(), MshError> {
    let (_, n) = cur.next_u64("node count")?;
    for _ in 0..n {
        let (_, tag) = cur.next_u64("node tag")?;
        let (_, x) = cur.next_f64("x")?;
        let (_, y) = cur.next_f64("y")?;
        let (_, z) = cur.next_f64("z")?;
        raw.node_tags.push(tag);
        raw.coords.push(Point3::new(x, y, z));
    }
    expect_end(cur, "$EndNodes")
}

fn parse_elements_v2(cur: &mut Cursor, raw: &mut RawMesh) -> Result<(), MshError> {
    raw.saw_elements = true;
    let (_, n) = cur.next_u64("element count")?;
    for _ in 0..n {
        let (_, _tag) = cur.next_u64("element tag")?;
        let (line, etype) = cur.next_u64("element type")?;
        let (_, ntags) = cur.next_u64("tag count")?;
        let mut phys = 0i32;
        for k in 0..ntags {
            let (_, t) = cur.next_i64("element tag value")?;
            if k == 0 {
                phys = t as i32;
            }
        }
        let nodes_per = element_node_count(etype)
            .ok_or_else(|| cur.err(line, format!("unknown element type {etype}")))?;
        if etype == 4 {
            let mut tet = [0u64; 4];
            for slot in tet.iter_mut() {
                *slot = cur.next_u64("tet node")?.1;
            }
            raw.tets.push((tet, phys, line));
        } else {
            for _ in 0..nodes_per {
                cur.next_u64("element node")?;
            }
        }
    }
    expect_end(cur, "$EndElements")
}

fn parse_entities(cur: &mut Cursor, volume_physical: &mut HashMap<i64, i32>) -> Result<(), MshError> {
    let (_, np) = cur.next_u64("point count")?;
    let (_, nc) = cur.next_u64("curve count")?;
    let (_, ns) = cur.next_u64("surface count")?;
    let (_, nv) = cur.next_u64("volume count")?;
    // Points: tag, x, y, z, numPhysical, tags...
    for _ in 0..np {
        let _ = cur.next_i64("point tag")?;
        for _ in 0..3 {
            cur.next_f64("point coordinate")?;
        }
        let (_, k) = cur.next_u64("physical tag count")?;
        for _ in 0..k {
            cur.next_i64("physical tag")?;
        }
    }
    // Curves/surfaces/volumes: tag, 6 bbox values, numPhysical, tags...,
    // numBounding, bounding tags...
    for (count, dim) in [(nc, 1u8), (ns, 2), (nv, 3)] {
        for _ in 0..count {
            let (_, tag) = cur.next_i64("entity tag")?;
            for _ in 0..6 {
                cur.next_f64("bounding box value")?;
            }
            let (_, k) = cur.next_u64("physical tag count")?;
            let mut first_phys = None;
            for _ in 0..k {
                let (_, p) = cur.next_i64("physical tag")?;
                first_phys.get_or_insert(p as i32);
            }
            let (_, nb) = cur.next_u64("bounding entity count")?;
            for _ in 0..nb {
                cur.next_i64("bounding entity tag")?;
            }
            if dim == 3 {
                volume_physical.insert(tag, first_phys.unwrap_or(0));
            }
        }
    }
    expect_end(cur, "$EndEntities")
}

fn parse_nodes_v4(cur: &mut Cursor, raw: &mut RawMesh) -> Result<(), MshError> {
    let (_, nblocks) = cur.next_u64("entity block count")?;
    let (_, _total) = cur.next_u64("node count")?;
    let _ = cur.next_u64("min node tag")?;
    let _ = cur.next_u64("max node tag")?;
    for _ in 0..nblocks {
        let _ = cur.next_i64("entity dimension")?;
        let _ = cur.next_i64("entity tag")?;
        let (pline, parametric) = cur.next_u64("parametric flag")?;
        if parametric != 0 {
            return Err(cur.err(pline, "parametric nodes are not supported"));
        }
        let (_, in_block) = cur.next_u64("block node count")?;
        let start = raw.node_tags.len();
        for _ in 0..in_block {
            raw.node_tags.push(cur.next_u64("node tag")?.1);
        }
        for i in 0..in_block as usize {
            let (_, x) = cur.next_f64("x")?;
            let (_, y) = cur.next_f64("y")?;
            let (_, z) = cur.next_f64("z")?;
            debug_assert_eq!(raw.coords.len(), start + i);
            raw.coords.push(Point3::new(x, y, z));
        }
    }
    expect_end(cur, "$EndNodes")
}

fn parse_elements_v4(
    cur: &mut Cursor,
    raw: &mut RawMesh,
    volume_physical: &HashMap<i64, i32>,
) -> Result<(), MshError> {
    raw.saw_elements = true;
    let (_, nblocks) = cur.next_u64("entity block count")?;
    let (_, _total) = cur.next_u64("element count")?;
    let _ = cur.next_u64("min element tag")?;
    let _ = cur.next_u64("max element tag")?;
    for _ in 0..nblocks {
        let _ = cur.next_i64("entity dimension")?;
        let (_, entity_tag) = cur.next_i64("entity tag")?;
        let (tline, etype) = cur.next_u64("element type")?;
        let (_, in_block) = cur.next_u64("block element count")?;
        let nodes_per = element_node_count(etype)
            .ok_or_else(|| cur.err(tline, format!("unknown element type {etype}")))?;
        let phys = volume_physical.get(&entity_tag).copied().unwrap_or(0);
        for _ in 0..in_block {
            let (line, _tag) = cur.next_u64("element tag")?;
            if etype == 4 {
                let mut tet = [0u64; 4];
                for slot in tet.iter_mut() {
                    *slot = cur.next_u64("tet node")?.1;
                }
                raw.tets.push((tet, phys, line));
            } else {
                for _ in 0..nodes_per {
                    cur.next_u64("element node")?;
                }
            }
        }
    }
    expect_end(cur, "$EndElements")
}

fn expect_end(cur: &mut Cursor, end: &str) -> Result<(), MshError> {
    let (line, tok) = cur.next(end)?;
    if tok != end {
        return Err(cur.err(line, format!("expected {end}, got {tok:?}")));
    }
    Ok(())
}

/// Node counts of the Gmsh element types we may encounter.
fn element_node_count(etype: u64) -> Option<u64> {
    Some(match etype {
        1 => 2,   // 2-node line
        2 => 3,   // 3-node triangle
        3 => 4,   // 4-node quad
        4 => 4,   // 4-node tetrahedron
        5 => 8,   // 8-node hexahedron
        6 => 6,   // 6-node prism
        7 => 5,   // 5-node pyramid
        8 => 3,   // 3-node second-order line
        9 => 6,   // 6-node second-order triangle
        11 => 10, // 10-node second-order tetrahedron
        15 => 1,  // 1-node point
        _ => return None,
    })
}
