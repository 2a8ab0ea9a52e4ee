use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::math::Vec3;

/// Largest refinement level accepted by the icosphere builders
/// (`20 * 4^7 = 327680` panels).
pub const MAX_REFINEMENT: u32 = 7;

/// Closed triangulated body surface in body-frame coordinates.
///
/// Stored normals follow the fluid-side convention: `n` is the outward unit
/// normal of the fluid domain and therefore points *into* the body.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    centroids: Vec<Vec3>,
    areas: Vec<f64>,
    normals: Vec<Vec3>,
}

impl SurfaceMesh {
    /// Builds a mesh from raw data. Triangles must be ordered so that
    /// `(b - a) x (c - a)` points out of the body.
    pub fn from_parts(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Mesh("no triangles".into()));
        }
        let mut centroids = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut normals = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "triangle {k} references a missing vertex"
                )));
            }
            let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            let cross = (b - a).cross(&(c - a));
            let twice_area = cross.norm();
            if twice_area <= 0.0 || !twice_area.is_finite() {
                return Err(Error::Mesh(format!("triangle {k} has zero area")));
            }
            centroids.push((a + b + c) / 3.0);
            areas.push(0.5 * twice_area);
            normals.push(-cross / twice_area);
        }
        let mesh = SurfaceMesh {
            vertices,
            triangles,
            centroids,
            areas,
            normals,
        };
        mesh.check_closed()?;
        Ok(mesh)
    }

    fn check_closed(&self) -> Result<()> {
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                // orientation-aware count: a consistently oriented closed
                // surface traverses every edge once in each direction
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += if a < b { 1 } else { -1 };
            }
        }
        let mut uses: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        if let Some((e, n)) = uses.iter().find(|(_, &n)| n != 2) {
            return Err(Error::Mesh(format!(
                "edge {e:?} is shared by {n} triangles"
            )));
        }
        if let Some((e, _)) = edges.iter().find(|(_, &s)| s != 0) {
            return Err(Error::Mesh(format!(
                "inconsistent orientation across edge {e:?}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn corners(&self, panel: usize) -> [Vec3; 3] {
        let t = self.triangles[panel];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
        ]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// `sum area_k n_k`, which vanishes for a closed surface.
    pub fn normal_closure(&self) -> Vec3 {
        self.areas
            .iter()
            .zip(&self.normals)
            .fold(Vec3::zeros(), |acc, (a, n)| acc + *a * n)
    }

    /// Enclosed volume by the divergence theorem (normals point inward).
    pub fn volume(&self) -> f64 {
        -self
            .areas
            .iter()
            .zip(self.centroids.iter().zip(&self.normals))
            .map(|(a, (c, n))| a * c.dot(n))
            .sum::<f64>()
            / 3.0
    }

    /// Length scale of each panel (longest edge).
    pub fn panel_size(&self, panel: usize) -> f64 {
        let [a, b, c] = self.corners(panel);
        (b - a).norm().max((c - b).norm()).max((a - c).norm())
    }

    pub fn max_panel_size(&self) -> f64 {
        (0..self.len())
            .map(|k| self.panel_size(k))
            .fold(0.0, f64::max)
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest(p).1
    }

    /// Signed distance: positive in the fluid, negative inside the body.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        let (k, d, foot) = self.closest(p);
        let side = (p - foot).dot(&self.normals[k]);
        if side > 0.0 {
            -d
        } else {
            d
        }
    }

    fn closest(&self, p: &Vec3) -> (usize, f64, Vec3) {
        let mut best = (0, f64::INFINITY, Vec3::zeros());
        for k in 0..self.len() {
            let [a, b, c] = self.corners(k);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (p - q).norm();
            if d < best.1 {
                best = (k, d, q);
            }
        }
        best
    }

    /// SHA-256 over the vertex coordinates and connectivity.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.vertices {
            for x in v.iter() {
                hasher.update(x.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for i in t {
                hasher.update((*i as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// Minimal OFF text: header, counts, coordinates, index triples.
    pub fn to_off(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "OFF");
        let _ = writeln!(s, "{} {} 0", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_off(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split_whitespace());
        let bad = |m: &str| Error::Mesh(format!("OFF parse error: {m}"));
        if tokens.next() != Some("OFF") {
            return Err(bad("missing OFF header"));
        }
        let mut next_num = |what: &str| -> Result<f64> {
            tokens
                .next()
                .ok_or_else(|| bad(what))?
                .parse::<f64>()
                .map_err(|_| bad(what))
        };
        let nv = next_num("vertex count")? as usize;
        let nf = next_num("face count")? as usize;
        let _ = next_num("edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            vertices.push(Vec3::new(next_num("x")?, next_num("y")?, next_num("z")?));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            if next_num("face arity")? as usize != 3 {
                return Err(bad("only triangles are supported"));
            }
            triangles.push([
                next_num("index")? as usize,
                next_num("index")? as usize,
                next_num("index")? as usize,
            ]);
        }
        SurfaceMesh::from_parts(vertices, triangles)
    }

    pub fn write_off(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_off())?;
        Ok(())
    }

    pub fn read_off(path: &Path) -> Result<Self> {
        SurfaceMesh::from_off(&std::fs::read_to_string(path)?)
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

fn unit_icosphere(refinement: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
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
    for _ in 0..refinement {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let ab = mid(t[0], t[1], &mut vertices);
            let bc = mid(t[1], t[2], &mut vertices);
            let ca = mid(t[2], t[0], &mut vertices);
            next.push([t[0], ab, ca]);
            next.push([t[1], bc, ab]);
            next.push([t[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    // orient every face outward from the body
    for t in triangles.iter_mut() {
        let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            t.swap(1, 2);
        }
    }
    (vertices, triangles)
}

/// Icosphere of the given radius with `20 * 4^refinement` panels.
pub fn build_sphere_mesh(radius: f64, refinement: u32) -> Result<SurfaceMesh> {
    build_ellipsoid_mesh(&Vec3::new(radius, radius, radius), refinement)
}

/// Icosphere mapped by the axis scaling `diag(semiaxes)`.
pub fn build_ellipsoid_mesh(semiaxes: &Vec3, refinement: u32) -> Result<SurfaceMesh> {
    if semiaxes.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return Err(Error::Mesh(format!(
            "semiaxes must be positive, got {semiaxes:?}"
        )));
    }
    if refinement > MAX_REFINEMENT {
        return Err(Error::Mesh(format!(
            "refinement {refinement} exceeds the cap {MAX_REFINEMENT}"
        )));
    }
    let (vertices, triangles) = unit_icosphere(refinement);
    let vertices = vertices
        .into_iter()
        .map(|v| v.component_mul(semiaxes))
        .collect();
    SurfaceMesh::from_parts(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosahedron_has_twenty_panels() {
        let m = build_sphere_mesh(1.0, 0).unwrap();
        assert_eq!(m.len(), 20);
        assert_eq!(build_sphere_mesh(1.0, 2).unwrap().len(), 320);
    }

    #[test]
    fn sphere_area_and_closure() {
        let m = build_sphere_mesh(1.0, 3).unwrap();
        let rel = (m.total_area() - 4.0 * PI).abs() / (4.0 * PI);
        assert!(rel < 0.01, "area error {rel}");
        assert!(m.normal_closure().norm() < 1e-12 * m.total_area());
        for v in m.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
        }
        // normals point into the body
        for (c, n) in m.centroids().iter().zip(m.normals()) {
            assert!(c.dot(n) < 0.0);
        }
    }

    #[test]
    fn sphere_area_error_decays_geometrically() {
        let err = |k| (build_sphere_mesh(1.0, k).unwrap().total_area() - 4.0 * PI).abs();
        for k in 1..4 {
            let ratio = err(k + 1) / err(k);
            assert!(ratio <= 0.35, "ratio {ratio} at level {k}");
        }
    }

    #[test]
    fn ellipsoid_volume_and_normals() {
        let m = build_ellipsoid_mesh(&Vec3::new(2.0, 1.0, 0.5), 3).unwrap();
        let exact = 4.0 / 3.0 * PI * 2.0 * 1.0 * 0.5;
        assert!((m.volume() - exact).abs() / exact < 0.01);
        for n in m.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-14);
        }
        assert!(m.normal_closure().norm() < 1e-10 * m.total_area());
    }

    #[test]
    fn unit_ellipsoid_equals_sphere() {
        let a = build_ellipsoid_mesh(&Vec3::new(1.0, 1.0, 1.0), 2).unwrap();
        let b = build_sphere_mesh(1.0, 2).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_eq!(a.triangles(), b.triangles());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_sphere_mesh(1.0, 8).is_err());
        assert!(build_sphere_mesh(-1.0, 1).is_err());
        assert!(build_ellipsoid_mesh(&Vec3::new(1.0, 0.0, 1.0), 1).is_err());
    }

    #[test]
    fn off_round_trip_preserves_hash() {
        let m = build_ellipsoid_mesh(&Vec3::new(1.5, 1.0, 0.7), 1).unwrap();
        let back = SurfaceMesh::from_off(&m.to_off()).unwrap();
        assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn open_surface_is_rejected() {
        let m = build_sphere_mesh(1.0, 0).unwrap();
        let mut tris = m.triangles().to_vec();
        tris.pop();
        assert!(SurfaceMesh::from_parts(m.vertices().to_vec(), tris).is_err());
    }

    #[test]
    fn signed_distance_sign() {
        let m = build_sphere_mesh(1.0, 2).unwrap();
        assert!(m.signed_distance(&Vec3::new(2.0, 0.0, 0.0)) > 0.9);
        assert!(m.signed_distance(&Vec3::new(0.5, 0.0, 0.0)) < 0.0);
    }
}
