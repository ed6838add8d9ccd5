use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use crate::brdf::Vec3;
use crate::error::{Error, Result};

/// Indexed triangle mesh with per-vertex normals and UVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub uvs: Vec<[f64; 2]>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if self.triangles.is_empty() {
            return Err(Error::InvalidInput("mesh has no triangles".into()));
        }
        if self.normals.len() != n || self.uvs.len() != n {
            return Err(Error::InvalidInput(format!(
                "mesh attribute counts differ: {n} positions, {} normals, {} uvs",
                self.normals.len(),
                self.uvs.len()
            )));
        }
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= n)) {
            return Err(Error::InvalidInput(format!("triangle {t:?} indexes past {n} vertices")));
        }
        Ok(())
    }

    /// Area-weighted per-vertex normals from the faces (counter-clockwise
    /// winding is front facing).
    pub fn compute_normals(&mut self) {
        let mut acc = vec![Vec3::zeros(); self.positions.len()];
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            // cross product magnitude is twice the area
            let fnrm = (b - a).cross(&(c - a));
            for &i in t {
                acc[i as usize] += fnrm;
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| {
                let l = n.norm();
                if l > 0.0 {
                    n / l
                } else {
                    Vec3::z()
                }
            })
            .collect();
    }

    /// Centers the bounding box at the origin and scales the farthest vertex
    /// to distance 1.
    pub fn normalized(mut self) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let center = (lo + hi) * 0.5;
        let r = self
            .positions
            .iter()
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        let s = if r > 0.0 { 1.0 / r } else { 1.0 };
        for p in &mut self.positions {
            *p = (*p - center) * s;
        }
        self
    }

    /// Icosahedron subdivided `subdivisions` times and projected onto the unit
    /// sphere; `20 · 4^subdivisions` faces.
    pub fn icosphere(subdivisions: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut pos: Vec<Vec3> = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut tris: Vec<[u32; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
            let mut next = Vec::with_capacity(tris.len() * 4);
            let mut midpoint = |a: u32, b: u32, pos: &mut Vec<Vec3>| -> u32 {
                let key = (a.min(b), a.max(b));
                *mid.entry(key).or_insert_with(|| {
                    pos.push(((pos[a as usize] + pos[b as usize]) * 0.5).normalize());
                    (pos.len() - 1) as u32
                })
            };
            for [a, b, c] in tris {
                let ab = midpoint(a, b, &mut pos);
                let bc = midpoint(b, c, &mut pos);
                let ca = midpoint(c, a, &mut pos);
                next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            tris = next;
        }
        let uvs = pos
            .iter()
            .map(|p| [0.5 + p.z.atan2(p.x) / (2.0 * PI), p.y.clamp(-1.0, 1.0).acos() / PI])
            .collect();
        Self {
            normals: pos.clone(),
            positions: pos,
            uvs,
            triangles: tris,
        }
    }

    /// Torus around the y axis, scaled to unit bounding radius.
    pub fn torus(minor_ratio: f64, segments: u32, rings: u32) -> Self {
        let major = 1.0 / (1.0 + minor_ratio);
        let minor = major * minor_ratio;
        let mut positions = Vec::new();
        let mut normals = Vec::new();
        let mut uvs = Vec::new();
        for i in 0..=segments {
            let u = i as f64 / segments as f64;
            let a = u * 2.0 * PI;
            for j in 0..=rings {
                let v = j as f64 / rings as f64;
                let b = v * 2.0 * PI;
                let dir = Vec3::new(a.cos(), 0.0, -a.sin());
                let n = dir * b.cos() + Vec3::y() * b.sin();
                positions.push(dir * major + n * minor);
                normals.push(n);
                uvs.push([u, v]);
            }
        }
        let stride = rings + 1;
        let mut triangles = Vec::new();
        for i in 0..segments {
            for j in 0..rings {
                let a = i * stride + j;
                let b = (i + 1) * stride + j;
                triangles.push([a, b, b + 1]);
                triangles.push([a, b + 1, a + 1]);
            }
        }
        Self {
            positions,
            normals,
            uvs,
            triangles,
        }
    }

    /// Sphere with smooth low-frequency radial bumps; deterministic in `seed`.
    pub fn blob(seed: u64, subdivisions: u32) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let lobes: Vec<(Vec3, f64)> = (0..5)
            .map(|_| {
                let d = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
                .try_normalize(1e-9)
                .unwrap_or_else(Vec3::x);
                (d, rng.random_range(-0.25..0.25))
            })
            .collect();
        let mut m = Self::icosphere(subdivisions);
        for p in &mut m.positions {
            let r = 1.0 + lobes.iter().map(|(d, a)| a * d.dot(p).powi(2)).sum::<f64>();
            *p *= r;
        }
        m.compute_normals();
        m.normalized()
    }

    /// Square `[-1, 1]²` in the z = 0 plane facing +z, split into a
    /// `cells × cells` grid.
    pub fn plane(cells: u32) -> Self {
        let mut positions = Vec::new();
        let mut uvs = Vec::new();
        for j in 0..=cells {
            for i in 0..=cells {
                let u = i as f64 / cells as f64;
                let v = j as f64 / cells as f64;
                positions.push(Vec3::new(2.0 * u - 1.0, 2.0 * v - 1.0, 0.0));
                uvs.push([u, v]);
            }
        }
        let stride = cells + 1;
        let mut triangles = Vec::new();
        for j in 0..cells {
            for i in 0..cells {
                let a = j * stride + i;
                triangles.push([a, a + 1, a + stride + 1]);
                triangles.push([a, a + stride + 1, a + stride]);
            }
        }
        Self {
            normals: vec![Vec3::z(); positions.len()],
            positions,
            uvs,
            triangles,
        }
    }

    pub fn to_obj_string(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for p in &self.positions {
            let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
        }
        for t in &self.uvs {
            let _ = writeln!(s, "vt {} {}", t[0], t[1]);
        }
        for n in &self.normals {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| i + 1);
            let _ = writeln!(s, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
        }
        s
    }
}

/// Loads the `v`/`vt`/`vn`/`f` subset of Wavefront OBJ. Polygons are
/// fan-triangulated; other statements are ignored.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path)
}

type Corner = (usize, Option<usize>, Option<usize>);

pub fn parse_obj(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut v: Vec<Vec3> = Vec::new();
    let mut vt: Vec<[f64; 2]> = Vec::new();
    let mut vn: Vec<Vec3> = Vec::new();
    // corners as (position, uv, normal) indices, zero-based
    let mut faces: Vec<Vec<Corner>> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        let floats = |it: std::str::SplitWhitespace, want: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = it
                .map(|t| t.parse::<f64>().map_err(|_| err(line_no, format!("bad number {t:?}"))))
                .collect::<Result<_>>()?;
            if vals.len() < want {
                return Err(err(line_no, format!("expected {want} numbers, found {}", vals.len())));
            }
            Ok(vals)
        };
        match tag {
            "v" => {
                let f = floats(it, 3)?;
                v.push(Vec3::new(f[0], f[1], f[2]));
            }
            "vt" => {
                let f = floats(it, 1)?;
                vt.push([f[0], f.get(1).copied().unwrap_or(0.0)]);
            }
            "vn" => {
                let f = floats(it, 3)?;
                vn.push(Vec3::new(f[0], f[1], f[2]));
            }
            "f" => {
                let mut corners = Vec::new();
                for tok in it {
                    let mut parts = tok.split('/');
                    let resolve = |s: Option<&str>, count: usize, what: &str| -> Result<Option<usize>> {
                        match s {
                            None | Some("") => Ok(None),
                            Some(s) => {
                                let i: i64 = s
                                    .parse()
                                    .map_err(|_| err(line_no, format!("bad {what} index {s:?}")))?;
                                let idx = if i > 0 {
                                    i - 1
                                } else if i < 0 {
                                    count as i64 + i
                                } else {
                                    return Err(err(line_no, format!("{what} index 0 (OBJ indices are 1-based)")));
                                };
                                if idx < 0 || idx as usize >= count {
                                    return Err(err(line_no, format!("{what} index {i} out of range ({count} defined)")));
                                }
                                Ok(Some(idx as usize))
                            }
                        }
                    };
                    let p = resolve(parts.next(), v.len(), "vertex")?
                        .ok_or_else(|| err(line_no, "face corner without vertex index".into()))?;
                    let t = resolve(parts.next(), vt.len(), "texture")?;
                    let n = resolve(parts.next(), vn.len(), "normal")?;
                    corners.push((p, t, n));
                }
                if corners.len() < 3 {
                    return Err(err(line_no, format!("face with {} corners", corners.len())));
                }
                faces.push(corners);
            }
            _ => {}
        }
    }
    if faces.is_empty() {
        return Err(err(text.lines().count(), "no faces".into()));
    }

    let has_normals = faces.iter().flatten().all(|c| c.2.is_some());
    let has_uvs = faces.iter().flatten().all(|c| c.1.is_some());
    let mut remap: HashMap<(usize, Option<usize>, Option<usize>), u32> = HashMap::new();
    let mut mesh = Mesh {
        positions: Vec::new(),
        normals: Vec::new(),
        uvs: Vec::new(),
        triangles: Vec::new(),
    };
    let mut position_of: Vec<usize> = Vec::new();
    for face in &faces {
        let ids: Vec<u32> = face
            .iter()
            .map(|&(p, t, n)| {
                let key = if has_normals && has_uvs {
                    (p, t, n)
                } else if has_uvs {
                    (p, t, None)
                } else if has_normals {
                    (p, None, n)
                } else {
                    (p, None, None)
                };
                *remap.entry(key).or_insert_with(|| {
                    mesh.positions.push(v[p]);
                    mesh.normals.push(key.2.map(|i| vn[i]).unwrap_or_else(Vec3::zeros));
                    mesh.uvs.push(key.1.map(|i| vt[i]).unwrap_or([0.0, 0.0]));
                    position_of.push(p);
                    (mesh.positions.len() - 1) as u32
                })
            })
            .collect();
        for k in 1..ids.len() - 1 {
            mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
        }
    }

    if has_normals {
        for n in &mut mesh.normals {
            *n = n.try_normalize(1e-300).unwrap_or_else(Vec3::z);
        }
    } else {
        // Accumulate over shared positions so seams in UV space stay smooth.
        let mut acc = vec![Vec3::zeros(); v.len()];
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.positions[i as usize]);
            let f = (b - a).cross(&(c - a));
            for &i in t {
                acc[position_of[i as usize]] += f;
            }
        }
        for (n, &p) in mesh.normals.iter_mut().zip(&position_of) {
            *n = acc[p].try_normalize(1e-300).unwrap_or_else(Vec3::z);
        }
    }
    if !has_uvs {
        log::warn!("{}: no texture coordinates, using planar projection", path.display());
        planar_uvs(&mut mesh);
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Projects positions onto the plane of the two largest bounding-box extents.
fn planar_uvs(mesh: &mut Mesh) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in &mesh.positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let ext = hi - lo;
    let mut axes = [0usize, 1, 2];
    axes.sort_by(|&a, &b| ext[b].total_cmp(&ext[a]));
    let (a, b) = (axes[0], axes[1]);
    for (uv, p) in mesh.uvs.iter_mut().zip(&mesh.positions) {
        let u = if ext[a] > 0.0 { (p[a] - lo[a]) / ext[a] } else { 0.0 };
        let v = if ext[b] > 0.0 { (p[b] - lo[b]) / ext[b] } else { 0.0 };
        *uv = [u, v];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Mesh> {
        parse_obj(s, Path::new("test.obj"))
    }

    #[test]
    fn quad_fan() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.positions.len(), 4);
        assert_eq!(m.triangles.len(), 2);
        for n in &m.normals {
            assert!((n - Vec3::z()).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_index_names_line() {
        let e = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\n# comment\nf 0 1 2\n").unwrap_err();
        match e {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 5);
                assert!(msg.contains("index 0"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_and_out_of_range() {
        assert!(matches!(parse("v 0 0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("v 0 0 0\nf 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("v 0 0 x\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn negative_indices_and_slashes() {
        let m = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 2\nf -3/1/1 -2/2/1 -1/3/1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert_eq!(m.uvs[2], [0.0, 1.0]);
        assert!((m.normals[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generators_are_valid() {
        for m in [
            Mesh::icosphere(2),
            Mesh::torus(0.35, 24, 12),
            Mesh::blob(5, 2),
            Mesh::plane(3),
        ] {
            m.validate().unwrap();
            for n in &m.normals {
                assert!((n.norm() - 1.0).abs() < 1e-9);
            }
        }
        assert_eq!(Mesh::icosphere(2).triangles.len(), 320);
    }

    #[test]
    fn builtin_winding_matches_normals() {
        for m in [Mesh::icosphere(2), Mesh::torus(0.35, 24, 16), Mesh::blob(3, 2), Mesh::plane(2)] {
            for t in &m.triangles {
                let [a, b, c] = t.map(|i| m.positions[i as usize]);
                let face = (b - a).cross(&(c - a));
                let avg: Vec3 = t.iter().map(|&i| m.normals[i as usize]).sum();
                assert!(face.dot(&avg) > 0.0);
            }
        }
    }

    #[test]
    fn obj_round_trip() {
        let m = Mesh::torus(0.3, 8, 6);
        let back = parse(&m.to_obj_string()).unwrap();
        assert_eq!(back.triangles.len(), m.triangles.len());
        for (ta, tb) in back.triangles.iter().zip(&m.triangles) {
            for k in 0..3 {
                let (a, b) = (ta[k] as usize, tb[k] as usize);
                assert!((back.positions[a] - m.positions[b]).norm() < 1e-12);
                assert!((back.normals[a] - m.normals[b]).norm() < 1e-12);
            }
        }
    }
}
