use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::MeshError;
use crate::extract::TriMesh;

/// Structural preconditions shared by every exporter.
fn check(m: &TriMesh) -> Result<(), MeshError> {
    for v in &m.vertices {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(MeshError::BadMesh("non-finite vertex coordinate".into()));
        }
    }
    for t in &m.triangles {
        if t.iter().any(|&i| i as usize >= m.vertices.len()) {
            return Err(MeshError::BadMesh(format!(
                "triangle {t:?} references past {} vertices",
                m.vertices.len()
            )));
        }
    }
    Ok(())
}

fn unit_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f64; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len == 0.0 {
        [0.0, 0.0, 0.0]
    } else {
        [n[0] / len, n[1] / len, n[2] / len]
    }
}

/// Writes binary STL: an 80-byte zero header, a little-endian `u32` triangle
/// count, then 50 bytes per triangle (normal, three vertices, a zero
/// attribute word). Identical meshes produce identical bytes.
pub fn write_stl(m: &TriMesh, w: &mut dyn Write) -> Result<(), MeshError> {
    check(m)?;
    if m.triangles.len() > u32::MAX as usize {
        return Err(MeshError::BadMesh("too many triangles for STL".into()));
    }
    w.write_all(&[0u8; 80])?;
    w.write_all(&(m.triangles.len() as u32).to_le_bytes())?;
    for t in &m.triangles {
        let [a, b, c] =
            [m.vertices[t[0] as usize], m.vertices[t[1] as usize], m.vertices[t[2] as usize]];
        for p in [unit_normal(a, b, c), a, b, c] {
            for x in p {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        w.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

/// Writes binary STL to a file.
pub fn export_stl(m: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_stl(m, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Parses binary STL bytes back into an indexed mesh. Vertices are merged
/// when their three `f32` bit patterns match exactly, which reconstructs the
/// exported vertex set verbatim.
pub fn parse_stl(bytes: &[u8]) -> Result<TriMesh, MeshError> {
    if bytes.len() < 84 {
        return Err(MeshError::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4-byte slice")) as usize;
    let expected = 84 + 50 * count;
    if bytes.len() != expected {
        return Err(MeshError::Format(format!(
            "expected {expected} bytes for {count} triangles, found {}",
            bytes.len()
        )));
    }
    let mut ids: HashMap<[u32; 3], u32> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles = Vec::with_capacity(count);
    for rec in bytes[84..].chunks_exact(50) {
        let mut tri = [0u32; 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            // Skip the 12-byte normal; it is derivable.
            let off = 12 + 12 * v;
            let mut bits = [0u32; 3];
            let mut pos = [0f64; 3];
            for a in 0..3 {
                let raw =
                    u32::from_le_bytes(rec[off + 4 * a..off + 4 * a + 4].try_into().unwrap());
                let x = f32::from_bits(raw);
                if !x.is_finite() {
                    return Err(MeshError::Format("non-finite vertex coordinate".into()));
                }
                bits[a] = raw;
                pos[a] = x as f64;
            }
            *slot = *ids.entry(bits).or_insert_with(|| {
                vertices.push(pos);
                vertices.len() as u32 - 1
            });
        }
        triangles.push(tri);
    }
    Ok(TriMesh { vertices, triangles })
}

/// Reads a binary STL file.
pub fn read_stl(path: impl AsRef<Path>) -> Result<TriMesh, MeshError> {
    parse_stl(&std::fs::read(path)?)
}

/// Writes a plain-text OBJ (`v`/`f` lines, 1-based indices) for inspection.
pub fn export_obj(m: &TriMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    check(m)?;
    let mut w = BufWriter::new(File::create(path)?);
    for v in &m.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for t in &m.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use voxel_core::{Dims, VoxelGrid};

    use super::*;
    use crate::extract::mesh_grid;

    fn one_triangle() -> TriMesh {
        TriMesh {
            vertices: vec![[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [0.0, 10.0, 0.0]],
            triangles: vec![[0, 1, 2]],
        }
    }

    fn blob(seed: u64) -> TriMesh {
        let dims = Dims::new(5, 4, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = VoxelGrid::new(dims);
        for i in 0..dims.total() {
            g.set_flat(i, rng.random_bool(0.5));
        }
        mesh_grid(&g, 0.5).unwrap()
    }

    #[test]
    fn one_triangle_stl_is_134_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.stl");
        export_stl(&one_triangle(), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 134);
        assert!(bytes[..80].iter().all(|&b| b == 0));
        assert_eq!(u32::from_le_bytes(bytes[80..84].try_into().unwrap()), 1);
        assert_eq!(&bytes[132..], &[0, 0]); // attribute word
    }

    #[test]
    fn stl_round_trip_preserves_the_vertex_set() {
        let m = blob(9001);
        assert!(!m.triangles.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blob.stl");
        export_stl(&m, &path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 84 + 50 * m.triangles.len() as u64);
        let back = read_stl(&path).unwrap();
        assert_eq!(back.triangles.len(), m.triangles.len());
        let as_bits = |vs: &[[f64; 3]]| {
            let mut set: Vec<[u32; 3]> =
                vs.iter().map(|v| [0, 1, 2].map(|a| (v[a] as f32).to_bits())).collect();
            set.sort_unstable();
            set.dedup();
            set
        };
        assert_eq!(as_bits(&back.vertices), as_bits(&m.vertices));
    }

    #[test]
    fn identical_meshes_export_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (pa, pb) = (dir.path().join("a.stl"), dir.path().join("b.stl"));
        export_stl(&blob(7), &pa).unwrap();
        export_stl(&blob(7), &pb).unwrap();
        assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    }

    #[test]
    fn truncated_or_garbled_stl_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.stl");
        export_stl(&one_triangle(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 10);
        assert!(matches!(parse_stl(&bytes), Err(MeshError::Format(_))));
        assert!(matches!(parse_stl(&[0u8; 40]), Err(MeshError::Format(_))));
        // NaN vertex coordinate inside the first triangle record.
        let mut nan = std::fs::read(&path).unwrap();
        nan[96..100].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(parse_stl(&nan), Err(MeshError::Format(_))));
    }

    #[test]
    fn exporters_validate_the_mesh_first() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = one_triangle();
        m.triangles[0][2] = 9;
        assert!(matches!(
            export_stl(&m, dir.path().join("bad.stl")),
            Err(MeshError::BadMesh(_))
        ));
        let mut m = one_triangle();
        m.vertices[1][0] = f64::NAN;
        assert!(matches!(
            export_obj(&m, dir.path().join("bad.obj")),
            Err(MeshError::BadMesh(_))
        ));
    }

    #[test]
    fn obj_lists_every_vertex_and_face() {
        let m = blob(13);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.obj");
        export_obj(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let vs: Vec<&str> = text.lines().filter(|l| l.starts_with("v ")).collect();
        let fs: Vec<&str> = text.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(vs.len(), m.vertices.len());
        assert_eq!(fs.len(), m.triangles.len());
        // f64 Display round-trips, so the first vertex parses back exactly.
        let first: Vec<f64> =
            vs[0][2..].split(' ').map(|s| s.parse().unwrap()).collect();
        assert_eq!(first, m.vertices[0].to_vec());
    }
}
