//! OBJ and OFF readers, and an OBJ writer that stores a planar mapping as
//! per-vertex `vt` records.
//!
//! Only what the parameterizer needs is understood: `v`, `vt` and `f`
//! records in OBJ (other records are skipped), and the plain ASCII OFF layout.
//! Faces must be triangles.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result, Violation};
use crate::mesh::{Mapping, Mesh, Point2, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

/// Raw contents of an OBJ file before validation.
#[derive(Debug, Clone, Default)]
pub struct ObjData {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
    /// Per-vertex texture coordinates, present when every face corner
    /// carries a `vt` reference.
    pub uvs: Option<Vec<Point2>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats<const N: usize>(line: usize, fields: &[&str], what: &str) -> Result<[f64; N]> {
    if fields.len() < N {
        return Err(parse_err(line, format!("{what} needs {N} coordinates")));
    }
    let mut out = [0.0; N];
    for (o, s) in out.iter_mut().zip(fields) {
        *o = s
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad number {s:?} in {what}")))?;
        if !o.is_finite() {
            return Err(parse_err(line, format!("non-finite coordinate in {what}")));
        }
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index against `count` records.
fn resolve_index(line: usize, raw: &str, count: usize) -> Result<usize> {
    let k: i64 = raw
        .parse()
        .map_err(|_| parse_err(line, format!("bad index {raw:?}")))?;
    let idx = if k > 0 {
        k - 1
    } else if k < 0 {
        count as i64 + k
    } else {
        return Err(parse_err(line, "index 0 is not valid in OBJ"));
    };
    if idx < 0 {
        return Err(parse_err(line, format!("index {k} points before the first record")));
    }
    Ok(idx as usize)
}

pub fn parse_obj(text: &str) -> Result<ObjData> {
    let mut vertices = Vec::new();
    let mut texcoords: Vec<Point2> = Vec::new();
    let mut faces = Vec::new();
    let mut corner_uv: Vec<[Option<usize>; 3]> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("");
        let mut fields = line.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        match tag {
            "v" => vertices.push(parse_floats::<3>(ln, &rest, "vertex")?),
            "vt" => texcoords.push(parse_floats::<2>(ln, &rest, "texture coordinate")?),
            "f" => {
                if rest.len() != 3 {
                    return Err(Violation::NonTriangularFace {
                        record: faces.len(),
                        arity: rest.len(),
                    }
                    .into());
                }
                let mut face = [0usize; 3];
                let mut uv = [None; 3];
                for (k, corner) in rest.iter().enumerate() {
                    let mut parts = corner.split('/');
                    face[k] = resolve_index(ln, parts.next().unwrap_or(""), vertices.len())?;
                    if let Some(t) = parts.next().filter(|t| !t.is_empty()) {
                        let t = resolve_index(ln, t, texcoords.len())?;
                        if t >= texcoords.len() {
                            return Err(parse_err(ln, format!("vt index {} does not exist", t + 1)));
                        }
                        uv[k] = Some(t);
                    }
                }
                faces.push(face);
                corner_uv.push(uv);
            }
            _ => {}
        }
    }

    let uvs = if !corner_uv.is_empty() && corner_uv.iter().flatten().all(Option::is_some) {
        let mut per_vertex: Vec<Option<Point2>> = vec![None; vertices.len()];
        for (face, uv) in faces.iter().zip(&corner_uv) {
            for k in 0..3 {
                let (v, t) = (face[k], uv[k].unwrap());
                let Some(slot) = per_vertex.get_mut(v) else { continue };
                match slot {
                    Some(prev) if *prev != texcoords[t] => {
                        return Err(Error::InvalidInput(format!(
                            "vertex {v} has several texture coordinates (seams are not supported)"
                        )))
                    }
                    _ => *slot = Some(texcoords[t]),
                }
            }
        }
        Some(per_vertex.into_iter().map(|p| p.unwrap_or([0.0, 0.0])).collect())
    } else {
        None
    };

    Ok(ObjData {
        vertices,
        faces,
        uvs,
    })
}

pub fn parse_off(text: &str) -> Result<(Vec<Point3>, Vec<[usize; 3]>)> {
    let mut tokens = text.lines().enumerate().flat_map(|(ln, raw)| {
        raw.split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(move |t| (ln + 1, t))
    });
    let (ln, head) = tokens.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let first_count = if head == "OFF" {
        None
    } else if let Some(rest) = head.strip_prefix("OFF") {
        Some((ln, rest))
    } else {
        return Err(parse_err(ln, "missing OFF header"));
    };
    let mut next_usize = |what: &str| -> Result<usize> {
        let (ln, t) = tokens
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")))?;
        t.parse()
            .map_err(|_| parse_err(ln, format!("bad {what} {t:?}")))
    };
    let nv = match first_count {
        Some((ln, t)) if !t.is_empty() => t
            .parse()
            .map_err(|_| parse_err(ln, format!("bad vertex count {t:?}")))?,
        _ => next_usize("vertex count")?,
    };
    let nf = next_usize("face count")?;
    let _edges = next_usize("edge count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut p = [0.0; 3];
        for c in &mut p {
            let (ln, t) = tokens
                .next()
                .ok_or_else(|| parse_err(0, "unexpected end of file in vertex list"))?;
            *c = t
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(ln, format!("bad coordinate {t:?}")))?;
        }
        vertices.push(p);
    }

    // Faces are read line by line so that trailing colour values are ignored.
    let mut faces = Vec::with_capacity(nf);
    let mut rest: Vec<(usize, &str)> = tokens.collect();
    rest.reverse();
    for record in 0..nf {
        let (ln, t) = rest
            .pop()
            .ok_or_else(|| parse_err(0, "unexpected end of file in face list"))?;
        let arity: usize = t
            .parse()
            .map_err(|_| parse_err(ln, format!("bad face size {t:?}")))?;
        if arity != 3 {
            return Err(Violation::NonTriangularFace { record, arity }.into());
        }
        let mut face = [0usize; 3];
        for v in &mut face {
            let (ln2, t) = rest
                .pop()
                .filter(|(l, _)| *l == ln)
                .ok_or_else(|| parse_err(ln, "face record is truncated"))?;
            *v = t
                .parse()
                .map_err(|_| parse_err(ln2, format!("bad index {t:?}")))?;
        }
        faces.push(face);
        while rest.last().is_some_and(|(l, _)| *l == ln) {
            rest.pop();
        }
    }
    Ok((vertices, faces))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and validates a mesh file.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<Mesh> {
    let text = read_text(path)?;
    match format {
        MeshFormat::Obj => {
            let data = parse_obj(&text)?;
            Mesh::new(data.vertices, data.faces)
        }
        MeshFormat::Off => {
            let (v, f) = parse_off(&text)?;
            Mesh::new(v, f)
        }
    }
}

/// Reads an OBJ mesh together with its per-vertex texture coordinates, if any.
pub fn load_obj_with_uv(path: &Path) -> Result<(Mesh, Option<Mapping>)> {
    let data = parse_obj(&read_text(path)?)?;
    let mesh = Mesh::new(data.vertices, data.faces)?;
    let mapping = data.uvs.map(|uv| Mapping::for_mesh(&mesh, uv)).transpose()?;
    Ok((mesh, mapping))
}

/// Writes `v`/`f` records, plus one `vt` per vertex when `mapping` is given.
///
/// Numbers use the shortest representation that parses back to the same
/// `f64`, so a written mapping reloads bit for bit.
pub fn write_obj<W: Write>(out: W, mesh: &Mesh, mapping: Option<&Mapping>) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
    }
    if let Some(m) = mapping {
        for uv in m.coords() {
            writeln!(out, "vt {} {}", uv[0], uv[1])?;
        }
    }
    for f in mesh.faces() {
        let [a, b, c] = f.map(|i| i + 1);
        if mapping.is_some() {
            writeln!(out, "f {a}/{a} {b}/{b} {c}/{c}")?;
        } else {
            writeln!(out, "f {a} {b} {c}")?;
        }
    }
    out.flush()
}

pub fn save_obj(path: &Path, mesh: &Mesh, mapping: Option<&Mapping>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_obj(file, mesh, mapping).map_err(io_err)
}
