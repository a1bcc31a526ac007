//! Triangle meshes: procedural shapes, ASCII PLY load/save, and the object
//! diameter used by depth heuristics and correctness metrics.
//!
//! Winding convention: triangle vertices are ordered counter-clockwise as
//! seen from outside the object, so `(v1 - v0) x (v2 - v0)` points outward.
//! The renderer relies on this for back-face culling.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec::par_map_indexed;
use crate::pose::{vec3_cross, vec3_norm, vec3_scale, vec3_sub, Vec3};

/// Vertex color assigned when a PLY file carries no color properties.
pub const DEFAULT_COLOR: [u8; 3] = [180, 180, 180];

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    /// Per-vertex RGB, same length as `vertices`.
    pub colors: Vec<[u8; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn validate(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::EmptyInput("mesh vertices"));
        }
        if self.colors.len() != self.vertices.len() {
            return Err(Error::InvalidConfig(format!(
                "mesh has {} colors for {} vertices",
                self.colors.len(),
                self.vertices.len()
            )));
        }
        for (i, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= self.vertices.len() {
                    return Err(Error::InvalidConfig(format!(
                        "triangle {i} references vertex {v} of {}",
                        self.vertices.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest pairwise vertex distance. Exact O(n^2) scan; the outer loop
    /// fans out across threads.
    pub fn diameter(&self) -> f64 {
        let n = self.vertices.len();
        if n < 2 {
            return 0.0;
        }
        let per_vertex = par_map_indexed(n, |i| {
            let vi = self.vertices[i];
            let mut best = 0.0f64;
            for vj in &self.vertices[i + 1..] {
                let d = vec3_sub(*vj, vi);
                let sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                if sq > best {
                    best = sq;
                }
            }
            best
        });
        per_vertex.into_iter().fold(0.0f64, f64::max).sqrt()
    }

    /// Outward unit normal of triangle `t` (relies on the winding
    /// convention).
    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        let n = vec3_cross(
            vec3_sub(self.vertices[b], self.vertices[a]),
            vec3_sub(self.vertices[c], self.vertices[a]),
        );
        let len = vec3_norm(n);
        if len < 1e-18 {
            return [0.0, 0.0, 0.0];
        }
        vec3_scale(n, 1.0 / len)
    }

    /// Axis-aligned cube of side `size_m` centered at the origin. Vertices
    /// are colored by octant so every face renders distinguishably.
    pub fn cube(size_m: f64) -> Self {
        let a = size_m / 2.0;
        let vertices: Vec<Vec3> = vec![
            [-a, -a, -a],
            [a, -a, -a],
            [a, a, -a],
            [-a, a, -a],
            [-a, -a, a],
            [a, -a, a],
            [a, a, a],
            [-a, a, a],
        ];
        let colors = vertices
            .iter()
            .map(|v| {
                [
                    if v[0] > 0.0 { 220 } else { 40 },
                    if v[1] > 0.0 { 220 } else { 40 },
                    if v[2] > 0.0 { 220 } else { 40 },
                ]
            })
            .collect();
        let triangles = vec![
            // -z
            [0, 3, 2],
            [0, 2, 1],
            // +z
            [4, 5, 6],
            [4, 6, 7],
            // -y
            [0, 1, 5],
            [0, 5, 4],
            // +y
            [3, 7, 6],
            [3, 6, 2],
            // -x
            [0, 4, 7],
            [0, 7, 3],
            // +x
            [1, 2, 6],
            [1, 6, 5],
        ];
        Self {
            vertices,
            colors,
            triangles,
        }
    }

    /// Icosphere of radius `radius_m`: an icosahedron whose faces are
    /// subdivided `subdivisions` times, vertices projected onto the sphere.
    pub fn icosphere(radius_m: f64, subdivisions: u32) -> Self {
        let t = (1.0 + 5.0f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = vec![
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        for v in &mut vertices {
            *v = vec3_scale(*v, radius_m / vec3_norm(*v));
        }
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints: std::collections::HashMap<(usize, usize), usize> =
                std::collections::HashMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = vec3_scale(
                        [
                            vertices[a][0] + vertices[b][0],
                            vertices[a][1] + vertices[b][1],
                            vertices[a][2] + vertices[b][2],
                        ],
                        0.5,
                    );
                    vertices.push(vec3_scale(m, radius_m / vec3_norm(m)));
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            triangles = next;
        }
        let colors = vertices
            .iter()
            .map(|v| {
                let f = |x: f64| ((x / radius_m + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8;
                [f(v[0]), f(v[1]), f(v[2])]
            })
            .collect();
        Self {
            vertices,
            colors,
            triangles,
        }
    }

    /// Write as ASCII PLY with per-vertex colors.
    pub fn save_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "ply")?;
        writeln!(f, "format ascii 1.0")?;
        writeln!(f, "element vertex {}", self.vertices.len())?;
        writeln!(f, "property float x")?;
        writeln!(f, "property float y")?;
        writeln!(f, "property float z")?;
        writeln!(f, "property uchar red")?;
        writeln!(f, "property uchar green")?;
        writeln!(f, "property uchar blue")?;
        writeln!(f, "element face {}", self.triangles.len())?;
        writeln!(f, "property list uchar int vertex_indices")?;
        writeln!(f, "end_header")?;
        for (v, c) in self.vertices.iter().zip(&self.colors) {
            writeln!(f, "{} {} {} {} {} {}", v[0], v[1], v[2], c[0], c[1], c[2])?;
        }
        for t in &self.triangles {
            writeln!(f, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    /// Parse an ASCII PLY file. Supports float/double vertex coordinates,
    /// optional uchar red/green/blue, and faces with 3 or more indices
    /// (fan-triangulated). Other elements are rejected rather than skipped.
    pub fn load_ply(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::parse_ply(f)
    }

    pub fn parse_ply(reader: impl BufRead) -> Result<Self> {
        struct LineReader<R> {
            lines: std::io::Lines<R>,
            line_no: usize,
        }
        impl<R: BufRead> LineReader<R> {
            fn next(&mut self) -> Result<Option<String>> {
                match self.lines.next() {
                    None => Ok(None),
                    Some(l) => {
                        self.line_no += 1;
                        Ok(Some(l?))
                    }
                }
            }
        }

        let parse_err = |line: usize, message: String| Error::PlyParse { line, message };
        let mut reader = LineReader {
            lines: reader.lines(),
            line_no: 0,
        };

        // Header.
        let magic = reader
            .next()?
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        if magic.trim() != "ply" {
            return Err(parse_err(1, format!("expected \"ply\" magic, found {magic:?}")));
        }

        struct ElementDecl {
            name: String,
            count: usize,
            line: usize,
            properties: Vec<String>,
        }
        let mut elements: Vec<ElementDecl> = Vec::new();
        let mut format_seen = false;
        loop {
            let at = reader.line_no;
            let line = reader
                .next()?
                .ok_or_else(|| parse_err(at, "header missing end_header".into()))?;
            let at = reader.line_no;
            let line = line.trim();
            if line.is_empty() || line.starts_with("comment") {
                continue;
            }
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                Some("format") => {
                    let rest: Vec<&str> = tokens.collect();
                    if rest.first() != Some(&"ascii") {
                        return Err(parse_err(
                            at,
                            format!("only ascii format is supported, found {:?}", rest.join(" ")),
                        ));
                    }
                    format_seen = true;
                }
                Some("element") => {
                    let name = tokens
                        .next()
                        .ok_or_else(|| parse_err(at, "element without a name".into()))?;
                    let count: usize = tokens
                        .next()
                        .ok_or_else(|| parse_err(at, "element without a count".into()))?
                        .parse()
                        .map_err(|e| parse_err(at, format!("bad element count: {e}")))?;
                    elements.push(ElementDecl {
                        name: name.to_string(),
                        count,
                        line: at,
                        properties: Vec::new(),
                    });
                }
                Some("property") => {
                    let decl: Vec<&str> = tokens.collect();
                    let element = elements
                        .last_mut()
                        .ok_or_else(|| parse_err(at, "property before any element".into()))?;
                    element.properties.push(decl.join(" "));
                }
                Some("end_header") => break,
                Some(other) => {
                    return Err(parse_err(at, format!("unknown header keyword {other:?}")));
                }
                None => unreachable!("empty lines are skipped"),
            }
        }
        if !format_seen {
            return Err(parse_err(reader.line_no, "header missing format declaration".into()));
        }

        let mut vertices: Vec<Vec3> = Vec::new();
        let mut colors: Vec<[u8; 3]> = Vec::new();
        let mut triangles: Vec<[usize; 3]> = Vec::new();

        for element in &elements {
            match element.name.as_str() {
                "vertex" => {
                    // Column lookup by property name; coordinates are
                    // mandatory, colors optional.
                    let names: Vec<&str> = element
                        .properties
                        .iter()
                        .map(|p| p.split_whitespace().last().unwrap_or(""))
                        .collect();
                    let col = |name: &str| names.iter().position(|&n| n == name);
                    let (cx, cy, cz) = match (col("x"), col("y"), col("z")) {
                        (Some(a), Some(b), Some(c)) => (a, b, c),
                        _ => {
                            return Err(parse_err(
                                element.line,
                                "vertex element must declare x, y, z".into(),
                            ))
                        }
                    };
                    let color_cols = match (col("red"), col("green"), col("blue")) {
                        (Some(r), Some(g), Some(b)) => Some((r, g, b)),
                        _ => None,
                    };
                    for _ in 0..element.count {
                        let at = reader.line_no;
                        let line = reader
                            .next()?
                            .ok_or_else(|| parse_err(at, "truncated vertex data".into()))?;
                        let at = reader.line_no;
                        let fields: Vec<&str> = line.split_whitespace().collect();
                        if fields.len() < names.len() {
                            return Err(parse_err(
                                at,
                                format!("expected {} vertex fields, found {}", names.len(), fields.len()),
                            ));
                        }
                        let num = |i: usize| -> Result<f64> {
                            fields[i]
                                .parse()
                                .map_err(|e| parse_err(at, format!("bad vertex value: {e}")))
                        };
                        vertices.push([num(cx)?, num(cy)?, num(cz)?]);
                        colors.push(match color_cols {
                            Some((r, g, b)) => {
                                let byte = |i: usize| -> Result<u8> {
                                    fields[i].parse().map_err(|e| {
                                        parse_err(at, format!("bad color value: {e}"))
                                    })
                                };
                                [byte(r)?, byte(g)?, byte(b)?]
                            }
                            None => DEFAULT_COLOR,
                        });
                    }
                }
                "face" => {
                    for _ in 0..element.count {
                        let at = reader.line_no;
                        let line = reader
                            .next()?
                            .ok_or_else(|| parse_err(at, "truncated face data".into()))?;
                        let at = reader.line_no;
                        let fields: Vec<&str> = line.split_whitespace().collect();
                        let n: usize = fields
                            .first()
                            .ok_or_else(|| parse_err(at, "empty face row".into()))?
                            .parse()
                            .map_err(|e| parse_err(at, format!("bad face count: {e}")))?;
                        if n < 3 || fields.len() < n + 1 {
                            return Err(parse_err(
                                at,
                                format!("face row declares {n} indices, found {}", fields.len() - 1),
                            ));
                        }
                        let mut idx = Vec::with_capacity(n);
                        for f in &fields[1..=n] {
                            let i: usize = f
                                .parse()
                                .map_err(|e| parse_err(at, format!("bad face index: {e}")))?;
                            if i >= vertices.len() {
                                return Err(parse_err(
                                    at,
                                    format!("face index {i} out of range ({} vertices)", vertices.len()),
                                ));
                            }
                            idx.push(i);
                        }
                        // Fan triangulation preserves winding for convex
                        // polygons.
                        for k in 1..n - 1 {
                            triangles.push([idx[0], idx[k], idx[k + 1]]);
                        }
                    }
                }
                other => {
                    return Err(Error::UnsupportedElement {
                        line: element.line,
                        message: format!("element {other:?} with {} rows", element.count),
                    });
                }
            }
        }

        let mesh = Self {
            vertices,
            colors,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}
