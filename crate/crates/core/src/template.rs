//! Ray templates: the node subset the graph is built over.
//!
//! A template is `n` rays leaving a shared seed, each sampled at `k`
//! equidistant nodes. Layer 1 of every ray is the seed itself, so a template
//! has `n * (k - 1) + 1` distinct nodes. For the cube template the layer-`i`
//! nodes of all rays lie on the surface of an axis-aligned cube centered at
//! the seed; ray adjacency is the 4-neighborhood of the cube's surface
//! lattice, which wraps across cube edges.

use crate::error::{Error, Result};

/// Integer points on the surface of an `m x m x m` cube with their
/// 4-neighborhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceLattice {
    pub m: usize,
    pub points: Vec<[usize; 3]>,
    /// Unordered index pairs, `a < b`.
    pub adjacency: Vec<(usize, usize)>,
    lookup: Vec<Option<u32>>,
}

impl SurfaceLattice {
    /// Index of the point at lattice coordinate `p`, if it is on the surface.
    pub fn point_index(&self, p: [usize; 3]) -> Option<usize> {
        let m = self.m;
        if p.iter().any(|&c| c >= m) {
            return None;
        }
        self.lookup[p[0] + m * (p[1] + m * p[2])].map(|i| i as usize)
    }

    pub fn expected_len(m: usize) -> usize {
        6 * m * m - 12 * m + 8
    }
}

/// All integer points of `[0, m-1]^3` with at least one coordinate on the
/// boundary, ordered z-major then y then x. Two points are adjacent when they
/// differ by one step along a single axis.
pub fn cube_surface_lattice(m: usize) -> Result<SurfaceLattice> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "a cube lattice needs at least 2 points per edge, got {m}"
        )));
    }
    let on_surface = |c: usize| c == 0 || c == m - 1;
    let mut points = Vec::with_capacity(SurfaceLattice::expected_len(m));
    let mut lookup = vec![None; m * m * m];
    for z in 0..m {
        for y in 0..m {
            for x in 0..m {
                if on_surface(x) || on_surface(y) || on_surface(z) {
                    lookup[x + m * (y + m * z)] = Some(points.len() as u32);
                    points.push([x, y, z]);
                }
            }
        }
    }

    let mut lattice = SurfaceLattice {
        m,
        points,
        adjacency: Vec::new(),
        lookup,
    };
    let mut adjacency = Vec::new();
    for (a, p) in lattice.points.iter().enumerate() {
        for axis in 0..3 {
            let mut q = *p;
            q[axis] += 1;
            if let Some(b) = lattice.point_index(q) {
                adjacency.push((a, b));
            }
        }
    }
    lattice.adjacency = adjacency;
    Ok(lattice)
}

/// Geometry-specific part of a template.
#[derive(Clone, Debug)]
pub enum TemplateShape {
    Cube {
        lattice: SurfaceLattice,
        half_edge: f64,
    },
    Sphere {
        n_theta: usize,
        n_phi: usize,
        radius: f64,
    },
    /// Rays supplied by the caller; no voxelization or meshing.
    Custom,
}

/// Rays from a seed, sampled at `k` equidistant nodes each.
///
/// Node ids: the seed is node 0; node `(ray r, layer i)` for `i >= 2` is
/// `1 + r * (k - 1) + (i - 2)`.
#[derive(Clone, Debug)]
pub struct Template {
    seed: [f64; 3],
    k: usize,
    endpoints: Vec<[f64; 3]>,
    neighbors: Vec<(usize, usize)>,
    nodes: Vec<[f64; 3]>,
    shape: TemplateShape,
}

impl Template {
    /// Template over arbitrary ray endpoints. `neighbors` lists unordered
    /// adjacent ray pairs.
    pub fn from_rays(
        seed: [f64; 3],
        endpoints: Vec<[f64; 3]>,
        neighbors: Vec<(usize, usize)>,
        k: usize,
    ) -> Result<Self> {
        Self::assemble(seed, endpoints, neighbors, k, TemplateShape::Custom)
    }

    fn assemble(
        seed: [f64; 3],
        endpoints: Vec<[f64; 3]>,
        neighbors: Vec<(usize, usize)>,
        k: usize,
        shape: TemplateShape,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "rays need at least 2 nodes, got k = {k}"
            )));
        }
        if endpoints.is_empty() {
            return Err(Error::InvalidParameter("template has no rays".into()));
        }
        let n = endpoints.len();
        if let Some(&(a, b)) = neighbors.iter().find(|&&(a, b)| a >= n || b >= n || a == b) {
            return Err(Error::InvalidParameter(format!(
                "invalid neighbor pair ({a}, {b}) for {n} rays"
            )));
        }

        let mut nodes = Vec::with_capacity(n * (k - 1) + 1);
        nodes.push(seed);
        for end in &endpoints {
            for i in 2..=k {
                let t = (i - 1) as f64 / (k - 1) as f64;
                nodes.push(lerp3(seed, *end, t));
            }
        }
        Ok(Template {
            seed,
            k,
            endpoints,
            neighbors,
            nodes,
            shape,
        })
    }

    pub fn seed(&self) -> [f64; 3] {
        self.seed
    }

    /// Nodes per ray.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rays.
    pub fn ray_count(&self) -> usize {
        self.endpoints.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn endpoints(&self) -> &[[f64; 3]] {
        &self.endpoints
    }

    pub fn neighbors(&self) -> &[(usize, usize)] {
        &self.neighbors
    }

    pub fn shape(&self) -> &TemplateShape {
        &self.shape
    }

    /// World positions indexed by node id.
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    /// Node id of layer `layer` (1-based) on ray `ray`.
    #[inline]
    pub fn node_id(&self, ray: usize, layer: usize) -> usize {
        node_id(self.k, ray, layer)
    }

    #[inline]
    pub fn node_pos(&self, ray: usize, layer: usize) -> [f64; 3] {
        self.nodes[self.node_id(ray, layer)]
    }

    /// Point on ray `ray` at a continuous layer coordinate (1 = seed,
    /// `k` = endpoint).
    pub fn ray_point(&self, ray: usize, layer: f64) -> [f64; 3] {
        let t = (layer - 1.0) / (self.k - 1) as f64;
        lerp3(self.seed, self.endpoints[ray], t)
    }

    /// Outer half-extent: cube half-edge or sphere radius.
    pub fn scale(&self) -> Option<f64> {
        match &self.shape {
            TemplateShape::Cube { half_edge, .. } => Some(*half_edge),
            TemplateShape::Sphere { radius, .. } => Some(*radius),
            TemplateShape::Custom => None,
        }
    }
}

#[inline]
pub(crate) fn node_id(k: usize, ray: usize, layer: usize) -> usize {
    debug_assert!(layer >= 1 && layer <= k);
    if layer == 1 {
        0
    } else {
        1 + ray * (k - 1) + (layer - 2)
    }
}

#[inline]
fn lerp3(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// Cube template with one ray per surface-lattice point.
///
/// Lattice coordinate `p` maps to the endpoint
/// `seed + (edge_mm / 2) * (2p / (m - 1) - 1)`.
pub fn build_cube_template(seed: [f64; 3], edge_mm: f64, m: usize, k: usize) -> Result<Template> {
    if !(edge_mm.is_finite() && edge_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cube edge must be positive, got {edge_mm}"
        )));
    }
    let lattice = cube_surface_lattice(m)?;
    let half_edge = edge_mm / 2.0;
    let endpoints = lattice
        .points
        .iter()
        .map(|p| {
            let mut e = seed;
            for a in 0..3 {
                e[a] += half_edge * lattice_unit(p[a], m);
            }
            e
        })
        .collect();
    let neighbors = lattice.adjacency.clone();
    Template::assemble(
        seed,
        endpoints,
        neighbors,
        k,
        TemplateShape::Cube { lattice, half_edge },
    )
}

/// Lattice coordinate mapped to `[-1, 1]`.
#[inline]
pub(crate) fn lattice_unit(c: usize, m: usize) -> f64 {
    2.0 * c as f64 / (m - 1) as f64 - 1.0
}

/// Latitude-longitude sphere template.
///
/// Ray 0 points to the +z pole, rays `1 + j * n_phi + l` sample ring `j` at
/// polar angle `pi * (j + 1) / (n_theta + 1)` and azimuth `2 pi l / n_phi`,
/// and the last ray points to the -z pole. Ring rays are 4-adjacent with
/// wraparound in azimuth; each pole ray is adjacent to every ray of its
/// nearest ring.
pub fn build_sphere_template(
    seed: [f64; 3],
    diameter_mm: f64,
    n_theta: usize,
    n_phi: usize,
    k: usize,
) -> Result<Template> {
    if !(diameter_mm.is_finite() && diameter_mm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sphere diameter must be positive, got {diameter_mm}"
        )));
    }
    if n_theta < 2 || n_phi < 3 {
        return Err(Error::InvalidParameter(format!(
            "sphere template needs n_theta >= 2 and n_phi >= 3, got {n_theta} and {n_phi}"
        )));
    }
    let radius = diameter_mm / 2.0;
    let n = n_theta * n_phi + 2;
    let mut endpoints = Vec::with_capacity(n);
    endpoints.push(add(seed, [0.0, 0.0, radius]));
    for j in 0..n_theta {
        let theta = std::f64::consts::PI * (j + 1) as f64 / (n_theta + 1) as f64;
        for l in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * l as f64 / n_phi as f64;
            let dir = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            endpoints.push(add(seed, scale3(dir, radius)));
        }
    }
    endpoints.push(add(seed, [0.0, 0.0, -radius]));

    let ring = |j: usize, l: usize| 1 + j * n_phi + (l % n_phi);
    let south = n - 1;
    let mut neighbors = Vec::new();
    for l in 0..n_phi {
        neighbors.push((0, ring(0, l)));
    }
    for j in 0..n_theta {
        for l in 0..n_phi {
            neighbors.push((ring(j, l), ring(j, l + 1)));
            if j + 1 < n_theta {
                neighbors.push((ring(j, l), ring(j + 1, l)));
            }
        }
    }
    for l in 0..n_phi {
        neighbors.push((ring(n_theta - 1, l), south));
    }

    Template::assemble(
        seed,
        endpoints,
        neighbors,
        k,
        TemplateShape::Sphere {
            n_theta,
            n_phi,
            radius,
        },
    )
}

#[inline]
fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
fn scale3(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Whether the undirected graph on `n` vertices given by `edges` is connected.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}
