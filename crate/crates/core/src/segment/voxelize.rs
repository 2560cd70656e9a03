//! Rasterizing per-ray boundaries into a voxel mask.
//!
//! Cube templates: a voxel center `x` has cube scale
//! `s = max_a |x_a - seed_a| / half_edge` and continuous layer
//! `1 + s * (k - 1)`. The ray through `x` hits one face of the outer cube;
//! the boundary there is interpolated bilinearly from the four lattice rays
//! around the hit point. Sphere templates use the radial scale and the
//! boundary of the angularly nearest ray.

use crate::error::{Error, Result};
use crate::segment::BoundaryPlacement;
use crate::template::{Template, TemplateShape};
use crate::volume::{Geometry, Mask};

pub fn voxelize(
    template: &Template,
    boundaries: &[usize],
    geometry: &Geometry,
    placement: BoundaryPlacement,
) -> Result<Mask> {
    if boundaries.len() != template.ray_count() {
        return Err(Error::InvalidParameter(format!(
            "{} boundaries for {} rays",
            boundaries.len(),
            template.ray_count()
        )));
    }
    let scale = template.scale().ok_or(Error::UnsupportedTemplate(
        "voxelization needs a cube or sphere template",
    ))?;
    let seed = template.seed();
    let layers = (template.k() - 1) as f64;
    let offset = placement.offset();

    let inside: Box<dyn Fn([f64; 3]) -> bool + '_> = match template.shape() {
        TemplateShape::Cube { lattice, half_edge } => {
            let m = lattice.m;
            Box::new(move |d: [f64; 3]| {
                let ad = d.map(f64::abs);
                // dominant axis, ties resolved x before y before z
                let axis = if ad[0] >= ad[1] && ad[0] >= ad[2] {
                    0
                } else if ad[1] >= ad[2] {
                    1
                } else {
                    2
                };
                let reach = ad[axis];
                if reach == 0.0 {
                    return true;
                }
                let s = reach / half_edge;
                if s > 1.0 {
                    return false;
                }
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let face = |c: f64| {
                    let f = (c / reach + 1.0) * 0.5 * (m - 1) as f64;
                    let cell = (f.floor().max(0.0) as usize).min(m - 2);
                    (cell, f - cell as f64)
                };
                let (cu, tu) = face(d[u]);
                let (cv, tv) = face(d[v]);
                let mut p = [0usize; 3];
                p[axis] = if d[axis] > 0.0 { m - 1 } else { 0 };
                let mut b = |du: usize, dv: usize| {
                    p[u] = cu + du;
                    p[v] = cv + dv;
                    let r = lattice
                        .point_index(p)
                        .expect("face point is on the surface");
                    boundaries[r] as f64
                };
                let b_hat = (1.0 - tu) * (1.0 - tv) * b(0, 0)
                    + tu * (1.0 - tv) * b(1, 0)
                    + (1.0 - tu) * tv * b(0, 1)
                    + tu * tv * b(1, 1);
                1.0 + s * layers <= b_hat + offset
            })
        }
        TemplateShape::Sphere {
            n_theta,
            n_phi,
            radius,
        } => {
            let (nt, np, radius) = (*n_theta, *n_phi, *radius);
            let dirs: Vec<[f64; 3]> = template
                .endpoints()
                .iter()
                .map(|e| [0, 1, 2].map(|a| (e[a] - seed[a]) / radius))
                .collect();
            Box::new(move |d: [f64; 3]| {
                let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if len == 0.0 {
                    return true;
                }
                let s = len / radius;
                if s > 1.0 {
                    return false;
                }
                let r = nearest_sphere_ray(&dirs, nt, np, d.map(|x| x / len));
                1.0 + s * layers <= boundaries[r] as f64 + offset
            })
        }
        TemplateShape::Custom => unreachable!("custom templates have no scale"),
    };

    let mut mask = Mask::empty(*geometry);
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let c_lo = (seed[a] - scale - geometry.origin[a]) / geometry.spacing[a];
        let c_hi = (seed[a] + scale - geometry.origin[a]) / geometry.spacing[a];
        let n = geometry.dims[a] as f64;
        if c_hi < 0.0 || c_lo > n - 1.0 {
            return Ok(mask);
        }
        lo[a] = c_lo.ceil().max(0.0) as usize;
        hi[a] = (c_hi.floor().min(n - 1.0)) as usize;
    }
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let x = geometry.world(i, j, k);
                if inside([x[0] - seed[0], x[1] - seed[1], x[2] - seed[2]]) {
                    mask.set(i, j, k, true);
                }
            }
        }
    }
    Ok(mask)
}

/// Ray with the largest direction cosine to unit vector `u`, searched over
/// the latitude-longitude cells around `u` and both poles.
fn nearest_sphere_ray(dirs: &[[f64; 3]], nt: usize, np: usize, u: [f64; 3]) -> usize {
    use std::f64::consts::PI;
    let theta = u[2].clamp(-1.0, 1.0).acos();
    let phi = u[1].atan2(u[0]).rem_euclid(2.0 * PI);
    let ring = theta / (PI / (nt + 1) as f64) - 1.0;
    let col = phi / (2.0 * PI / np as f64);

    let j_lo = (ring.floor() - 1.0).max(0.0) as usize;
    let j_hi = ((ring.ceil() + 1.0).max(0.0) as usize).min(nt - 1);
    let l0 = col.floor() as isize;

    let mut candidates = vec![0, nt * np + 1];
    for j in j_lo..=j_hi {
        for dl in -1..=2 {
            let l = (l0 + dl).rem_euclid(np as isize) as usize;
            candidates.push(1 + j * np + l);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();

    let cosine = |r: usize| dirs[r][0] * u[0] + dirs[r][1] * u[1] + dirs[r][2] * u[2];
    let mut best = candidates[0];
    for &r in &candidates[1..] {
        if cosine(r) > cosine(best) {
            best = r;
        }
    }
    best
}
