//! Mesh, polyline and per-node CSV output with fixed float formatting.

use std::io::{self, BufRead, Write};

use crate::analysis::{FrameReport, GeometryReport};
use crate::grid::Grid2;
use crate::sym::{SurfaceGrid, Vec3};

/// 17 significant digits in exponent form, independent of locale.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn vec3(v: &Vec3) -> String {
    format!("{} {} {}", num(v.x), num(v.y), num(v.z))
}

/// Quads `(i,j), (i+1,j), (i+1,j+1), (i,j+1)` as 0-based vertex indices.
/// With this winding the face normal is along `f_x × f_y`, i.e. along `N`
/// where `sin ω > 0`.
pub fn quads(grid: &Grid2) -> Vec<[usize; 4]> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = Vec::with_capacity((nx - 1) * (ny - 1));
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            out.push([grid.idx(i, j), grid.idx(i + 1, j), grid.idx(i + 1, j + 1), grid.idx(i, j + 1)]);
        }
    }
    out
}

pub fn write_obj<W: Write>(w: &mut W, s: &SurfaceGrid) -> io::Result<()> {
    writeln!(w, "# lambda {}", num(s.lambda))?;
    writeln!(w, "# grid {} x {}", s.grid.nx(), s.grid.ny())?;
    for p in &s.f {
        writeln!(w, "v {}", vec3(p))?;
    }
    for n in &s.n {
        writeln!(w, "vn {}", vec3(n))?;
    }
    for q in quads(&s.grid) {
        let [a, b, c, d] = q.map(|k| k + 1);
        writeln!(w, "f {a}//{a} {b}//{b} {c}//{c} {d}//{d}")?;
    }
    Ok(())
}

pub fn write_ply<W: Write>(w: &mut W, s: &SurfaceGrid) -> io::Result<()> {
    let faces = quads(&s.grid);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "comment lambda {}", num(s.lambda))?;
    writeln!(w, "element vertex {}", s.f.len())?;
    for p in ["x", "y", "z", "nx", "ny", "nz"] {
        writeln!(w, "property double {p}")?;
    }
    writeln!(w, "element face {}", faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (p, n) in s.f.iter().zip(&s.n) {
        writeln!(w, "{} {}", vec3(p), vec3(n))?;
    }
    for [a, b, c, d] in faces {
        writeln!(w, "4 {a} {b} {c} {d}")?;
    }
    Ok(())
}

/// Vertices (position, normal) and faces of an ASCII PLY file.
#[derive(Clone, Debug, PartialEq)]
pub struct PlyMesh {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub faces: Vec<Vec<usize>>,
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Reads the ASCII PLY layout produced by [`write_ply`].
pub fn read_ply<R: BufRead>(r: R) -> io::Result<PlyMesh> {
    let mut lines = r.lines();
    let mut nv = None;
    let mut nf = None;
    let mut props = 0;
    loop {
        let line = lines.next().ok_or_else(|| bad("missing end_header"))??;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["end_header"] => break,
            ["element", "vertex", n] => nv = Some(n.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            ["element", "face", n] => nf = Some(n.parse::<usize>().map_err(|e| bad(e.to_string()))?),
            ["property", "double" | "float", _] => props += 1,
            ["format", fmt, ..] if *fmt != "ascii" => return Err(bad(format!("unsupported format {fmt}"))),
            _ => {}
        }
    }
    let (nv, nf) = (nv.ok_or_else(|| bad("no vertex element"))?, nf.unwrap_or(0));
    if props != 3 && props != 6 {
        return Err(bad(format!("expected 3 or 6 vertex properties, found {props}")));
    }
    let mut mesh = PlyMesh { positions: Vec::with_capacity(nv), normals: Vec::new(), faces: Vec::with_capacity(nf) };
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| bad("truncated vertex list"))??;
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| bad(e.to_string())))
            .collect::<io::Result<_>>()?;
        if v.len() != props {
            return Err(bad(format!("vertex line has {} values", v.len())));
        }
        mesh.positions.push(Vec3::new(v[0], v[1], v[2]));
        if props == 6 {
            mesh.normals.push(Vec3::new(v[3], v[4], v[5]));
        }
    }
    for _ in 0..nf {
        let line = lines.next().ok_or_else(|| bad("truncated face list"))??;
        let v: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| bad(e.to_string())))
            .collect::<io::Result<_>>()?;
        let (&count, idx) = v.split_first().ok_or_else(|| bad("empty face line"))?;
        if idx.len() != count || idx.iter().any(|&k| k >= nv) {
            return Err(bad(format!("malformed face `{line}`")));
        }
        mesh.faces.push(idx.to_vec());
    }
    Ok(mesh)
}

/// Per-node `f` and `N` with grid indices and coordinates.
pub fn write_surface_csv<W: Write>(w: &mut W, s: &SurfaceGrid) -> io::Result<()> {
    writeln!(w, "i,j,x,y,f1,f2,f3,n1,n2,n3")?;
    for k in 0..s.grid.len() {
        let (i, j) = s.grid.ij(k);
        let (x, y) = s.grid.point(i, j);
        let (f, n) = (s.f[k], s.n[k]);
        let vals = [x, y, f.x, f.y, f.z, n.x, n.y, n.z].map(num).join(",");
        writeln!(w, "{i},{j},{vals}")?;
    }
    Ok(())
}

/// Per-node geometry fields.
pub fn write_report_csv<W: Write>(w: &mut W, r: &GeometryReport) -> io::Result<()> {
    writeln!(w, "i,j,x,y,E,F,G,l,m,n,K,omega,h_harm,sine_gordon,harmonicity,cross")?;
    let f = &r.forms;
    for k in 0..r.grid.len() {
        let (i, j) = r.grid.ij(k);
        let (x, y) = r.grid.point(i, j);
        let vals = [
            x,
            y,
            f.e[k],
            f.f[k],
            f.g[k],
            f.l[k],
            f.m[k],
            f.n[k],
            f.k[k],
            r.omega.data[k],
            r.h_harm[k],
            r.sine_gordon[k],
            r.harmonicity[k],
            r.cross[k],
        ]
        .map(num)
        .join(",");
        writeln!(w, "{i},{j},{vals}")?;
    }
    Ok(())
}

/// Coordinate curves of `f` as OBJ polylines: every `every`-th `x`-curve and `y`-curve.
pub fn write_curves_obj<W: Write>(w: &mut W, s: &SurfaceGrid, every: usize) -> io::Result<()> {
    let every = every.max(1);
    let g = s.grid;
    for p in &s.f {
        writeln!(w, "v {}", vec3(p))?;
    }
    for j in (0..g.ny()).step_by(every) {
        let idx: Vec<String> = (0..g.nx()).map(|i| (g.idx(i, j) + 1).to_string()).collect();
        writeln!(w, "l {}", idx.join(" "))?;
    }
    for i in (0..g.nx()).step_by(every) {
        let idx: Vec<String> = (0..g.ny()).map(|j| (g.idx(i, j) + 1).to_string()).collect();
        writeln!(w, "l {}", idx.join(" "))?;
    }
    Ok(())
}

/// The frame `(e₁, e₂, N)` at one surface point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Glyph {
    pub x: f64,
    pub y: f64,
    pub point: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    pub n: Vec3,
}

impl Glyph {
    /// `max |⟨a, b⟩ − δ_ab|` over the three vectors.
    pub fn orthonormality(&self) -> f64 {
        let v = [self.e1, self.e2, self.n];
        let mut m = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let d = if a == b { 1.0 } else { 0.0 };
                m = m.max((v[a].dot(&v[b]) - d).abs());
            }
        }
        m
    }
}

/// Frames along the `x`-curve through row `j`.
pub fn glyphs_along_row(s: &SurfaceGrid, frames: &FrameReport, j: usize) -> Vec<Glyph> {
    (0..s.grid.nx())
        .map(|i| {
            let k = s.grid.idx(i, j);
            let (x, y) = s.grid.point(i, j);
            Glyph { x, y, point: s.f[k], e1: frames.e1[k], e2: frames.e2[k], n: s.n[k] }
        })
        .collect()
}

pub fn write_glyphs_csv<W: Write>(w: &mut W, glyphs: &[Glyph]) -> io::Result<()> {
    writeln!(w, "x,y,f1,f2,f3,e1_1,e1_2,e1_3,e2_1,e2_2,e2_3,n1,n2,n3")?;
    for g in glyphs {
        let mut vals = vec![g.x, g.y];
        for v in [g.point, g.e1, g.e2, g.n] {
            vals.extend([v.x, v.y, v.z]);
        }
        writeln!(w, "{}", vals.into_iter().map(num).collect::<Vec<_>>().join(","))?;
    }
    Ok(())
}
