//! Boundary surface meshes.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::segment::BoundaryPlacement;
use crate::template::{Template, TemplateShape};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Counter-clockwise seen from outside.
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Every directed edge occurs once and its reverse occurs once: the
    /// surface is closed and consistently oriented.
    pub fn is_closed_and_oriented(&self) -> bool {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *directed.entry((a, b)).or_default() += 1;
            }
        }
        directed
            .iter()
            .all(|(&(a, b), &c)| c == 1 && directed.get(&(b, a)) == Some(&1))
    }

    /// Signed enclosed volume; positive for outward-facing triangles.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    /// ASCII STL with per-facet normals.
    pub fn write_stl<W: Write>(&self, mut w: W, name: &str) -> io::Result<()> {
        writeln!(w, "solid {name}")?;
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i]);
            let n = cross(sub(b, a), sub(c, a));
            let len = dot(n, n).sqrt();
            let n = if len > 0.0 {
                n.map(|x| x / len)
            } else {
                [0.0; 3]
            };
            writeln!(w, "  facet normal {} {} {}", n[0], n[1], n[2])?;
            writeln!(w, "    outer loop")?;
            for p in [a, b, c] {
                writeln!(w, "      vertex {} {} {}", p[0], p[1], p[2])?;
            }
            writeln!(w, "    endloop")?;
            writeln!(w, "  endfacet")?;
        }
        writeln!(w, "endsolid {name}")
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Surface through the per-ray boundaries: one vertex per ray, two
/// triangles per lattice quad (cube) or per latitude-longitude cell
/// (sphere), pole fans for the sphere.
///
/// Cube quads are split along the diagonal from the lowest to the highest
/// face coordinate.
pub fn triangulate(
    template: &Template,
    boundaries: &[usize],
    placement: BoundaryPlacement,
) -> Result<Mesh> {
    if boundaries.len() != template.ray_count() {
        return Err(Error::InvalidParameter(format!(
            "{} boundaries for {} rays",
            boundaries.len(),
            template.ray_count()
        )));
    }
    let vertices = boundaries
        .iter()
        .enumerate()
        .map(|(r, &b)| template.ray_point(r, placement.layer(b)))
        .collect();

    let triangles = match template.shape() {
        TemplateShape::Cube { lattice, .. } => {
            let m = lattice.m;
            let mut tris = Vec::with_capacity(12 * (m - 1) * (m - 1));
            for axis in 0..3 {
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                for outward in [false, true] {
                    let mut p = [0usize; 3];
                    p[axis] = if outward { m - 1 } else { 0 };
                    let mut ray = |cu: usize, cv: usize| {
                        p[u] = cu;
                        p[v] = cv;
                        lattice
                            .point_index(p)
                            .expect("face point is on the surface")
                    };
                    for cu in 0..m - 1 {
                        for cv in 0..m - 1 {
                            let p00 = ray(cu, cv);
                            let p10 = ray(cu + 1, cv);
                            let p11 = ray(cu + 1, cv + 1);
                            let p01 = ray(cu, cv + 1);
                            if outward {
                                tris.push([p00, p10, p11]);
                                tris.push([p00, p11, p01]);
                            } else {
                                tris.push([p00, p11, p10]);
                                tris.push([p00, p01, p11]);
                            }
                        }
                    }
                }
            }
            tris
        }
        TemplateShape::Sphere { n_theta, n_phi, .. } => {
            let (nt, np) = (*n_theta, *n_phi);
            let ring = |j: usize, l: usize| 1 + j * np + (l % np);
            let south = nt * np + 1;
            let mut tris = Vec::with_capacity(2 * np * nt);
            for l in 0..np {
                tris.push([0, ring(0, l), ring(0, l + 1)]);
            }
            for j in 0..nt - 1 {
                for l in 0..np {
                    let (a, b) = (ring(j, l), ring(j, l + 1));
                    let (c, d) = (ring(j + 1, l + 1), ring(j + 1, l));
                    tris.push([a, d, c]);
                    tris.push([a, c, b]);
                }
            }
            for l in 0..np {
                tris.push([south, ring(nt - 1, l + 1), ring(nt - 1, l)]);
            }
            tris
        }
        TemplateShape::Custom => {
            return Err(Error::UnsupportedTemplate(
                "meshing needs a cube or sphere template",
            ))
        }
    };

    Ok(Mesh {
        vertices,
        triangles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{build_cube_template, build_sphere_template};

    #[test]
    fn minimal_cube_mesh() {
        let t = build_cube_template([0.0; 3], 2.0, 2, 3).unwrap();
        let mesh = triangulate(&t, &[2; 8], BoundaryPlacement::Node).unwrap();
        assert_eq!(mesh.vertices.len(), 8);
        assert_eq!(mesh.triangles.len(), 12);
        assert!(mesh.is_closed_and_oriented());
        // cube of half-edge 0.5
        assert!((mesh.signed_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn euler_characteristic_for_any_m() {
        for m in 2..9 {
            let t = build_cube_template([1.0, 2.0, 3.0], 10.0, m, 4).unwrap();
            let b: Vec<usize> = (0..t.ray_count()).map(|r| 2 + r % 2).collect();
            let mesh = triangulate(&t, &b, BoundaryPlacement::Node).unwrap();
            assert_eq!(mesh.euler_characteristic(), 2, "m = {m}");
            assert!(mesh.is_closed_and_oriented());
            assert!(mesh.signed_volume() > 0.0);
        }
    }

    #[test]
    fn equal_boundaries_give_a_geometric_cube() {
        let seed = [3.0, -1.0, 0.5];
        let t = build_cube_template(seed, 20.0, 5, 11).unwrap();
        let mesh = triangulate(&t, &vec![6; t.ray_count()], BoundaryPlacement::Node).unwrap();
        // half-edge (6 - 1) / 10 * 10 = 5
        for v in &mesh.vertices {
            let inf = (0..3).map(|a| (v[a] - seed[a]).abs()).fold(0.0, f64::max);
            assert!((inf - 5.0).abs() < 1e-9);
        }
        assert!((mesh.signed_volume() - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_mesh_is_closed() {
        let t = build_sphere_template([0.0; 3], 10.0, 4, 7, 5).unwrap();
        let mesh = triangulate(&t, &vec![3; t.ray_count()], BoundaryPlacement::Node).unwrap();
        assert_eq!(mesh.euler_characteristic(), 2);
        assert!(mesh.is_closed_and_oriented());
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn stl_has_one_facet_per_triangle() {
        let t = build_cube_template([0.0; 3], 2.0, 2, 3).unwrap();
        let mesh = triangulate(&t, &[2; 8], BoundaryPlacement::Node).unwrap();
        let mut out = Vec::new();
        mesh.write_stl(&mut out, "cube").unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.matches("facet normal").count(), 12);
        assert!(text.starts_with("solid cube\n"));
        assert!(text.trim_end().ends_with("endsolid cube"));
    }
}
