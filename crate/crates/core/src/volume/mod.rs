//! Scalar volumes, binary masks and the sampling operations the template
//! graph is built from.
//!
//! Voxel `(i, j, k)` sits at `origin + (i * sx, j * sy, k * sz)`; data is
//! stored x-fastest, z-slowest.

mod mhd;

pub use mhd::{
    decode_mhd, load_mask_mhd, load_mhd, mask_to_local_mhd, parse_mhd, save_mask_mhd,
    save_volume_mhd, volume_to_local_mhd, ElementType, MhdHeader,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions, spacing (mm) and origin (mm) of a voxel grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be positive and finite, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "origin must be finite, got {origin:?}"
            )));
        }
        Ok(Geometry {
            dims,
            spacing,
            origin,
        })
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn world(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        ]
    }

    /// Continuous voxel coordinate of a world point.
    #[inline]
    pub fn continuous_index(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Physical extent covered by the voxels, half a voxel beyond the
    /// outermost centers on every side.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            lo[a] = self.origin[a] - 0.5 * self.spacing[a];
            hi[a] = self.origin[a] + (self.dims[a] as f64 - 0.5) * self.spacing[a];
        }
        (lo, hi)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let (lo, hi) = self.bounds();
        (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    /// Voxel whose center is nearest to `p`, or `None` when `p` is outside
    /// the grid's physical extent.
    pub fn nearest_voxel(&self, p: [f64; 3]) -> Option<[usize; 3]> {
        if !self.contains(p) {
            return None;
        }
        let c = self.continuous_index(p);
        let mut out = [0usize; 3];
        for a in 0..3 {
            out[a] = (c[a].round().max(0.0) as usize).min(self.dims[a] - 1);
        }
        Some(out)
    }

    pub(crate) fn seed_error(&self, seed: [f64; 3]) -> Error {
        let (min, max) = self.bounds();
        Error::SeedOutsideVolume { seed, min, max }
    }

    pub fn same_grid(&self, other: &Geometry) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimsMismatch {
                a: self.dims,
                b: other.dims,
            });
        }
        Ok(())
    }
}

/// A scalar image with per-axis spacing and origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    geometry: Geometry,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(geometry: Geometry, data: Vec<f64>) -> Result<Self> {
        let expected = geometry.voxel_count();
        if data.len() != expected {
            return Err(Error::DataSizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Volume { geometry, data })
    }

    pub fn filled(geometry: Geometry, value: f64) -> Self {
        Volume {
            data: vec![value; geometry.voxel_count()],
            geometry,
        }
    }

    /// Builds a volume by evaluating `f` at every voxel index.
    pub fn from_fn(geometry: Geometry, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let [nx, ny, nz] = geometry.dims;
        let mut data = Vec::with_capacity(geometry.voxel_count());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    data.push(f(i, j, k));
                }
            }
        }
        Volume { geometry, data }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.geometry.origin
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.geometry.index(i, j, k)]
    }

    /// Smallest and largest grey value.
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Trilinear interpolation between the eight surrounding voxel centers.
    ///
    /// Points outside the box spanned by the voxel centers are clamped onto
    /// it first, so the result always lies within the grey range of the grid.
    pub fn sample_trilinear(&self, p: [f64; 3]) -> f64 {
        let c = self.geometry.continuous_index(p);
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let n = self.geometry.dims[a];
            if n == 1 {
                continue;
            }
            let x = c[a].clamp(0.0, (n - 1) as f64);
            let i0 = (x.floor() as usize).min(n - 2);
            base[a] = i0;
            frac[a] = x - i0 as f64;
        }
        let step = |a: usize| usize::from(self.geometry.dims[a] > 1);
        let (sx, sy, sz) = (step(0), step(1), step(2));
        let [i, j, k] = base;
        let [fx, fy, fz] = frac;

        let c00 = lerp(self.get(i, j, k), self.get(i + sx, j, k), fx);
        let c10 = lerp(self.get(i, j + sy, k), self.get(i + sx, j + sy, k), fx);
        let c01 = lerp(self.get(i, j, k + sz), self.get(i + sx, j, k + sz), fx);
        let c11 = lerp(
            self.get(i, j + sy, k + sz),
            self.get(i + sx, j + sy, k + sz),
            fx,
        );
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    /// Resamples onto an isotropic grid with the same origin.
    ///
    /// New dimensions are `round(extent / target_spacing)` per axis, where
    /// the extent is `dims * spacing`, with a minimum of one voxel.
    pub fn resample_isotropic(&self, target_spacing: f64) -> Result<Volume> {
        let dims = resampled_dims(&self.geometry, target_spacing)?;
        let geometry = Geometry::new(dims, [target_spacing; 3], self.geometry.origin)?;
        Ok(Volume::from_fn(geometry, |i, j, k| {
            self.sample_trilinear(geometry.world(i, j, k))
        }))
    }
}

/// Grid dimensions produced by [`Volume::resample_isotropic`].
pub fn resampled_dims(geometry: &Geometry, target_spacing: f64) -> Result<[usize; 3]> {
    if !(target_spacing.is_finite() && target_spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target spacing must be positive, got {target_spacing}"
        )));
    }
    let mut dims = [0usize; 3];
    for a in 0..3 {
        let extent = geometry.dims[a] as f64 * geometry.spacing[a];
        dims[a] = ((extent / target_spacing).round() as usize).max(1);
    }
    Ok(dims)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Grey-value reference taken around the seed: interval `[g_min, g_max]`
/// and mean `g_avg`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub g_min: f64,
    pub g_max: f64,
    pub g_avg: f64,
    pub sample_count: usize,
}

impl SeedStats {
    /// Inclusive interval membership.
    #[inline]
    pub fn contains(&self, g: f64) -> bool {
        g >= self.g_min && g <= self.g_max
    }
}

/// Statistics of the `(2 * halfwidth + 1)^3` voxel block centered on the
/// voxel nearest `seed`. The block is clipped at the volume border.
pub fn seed_stats(volume: &Volume, seed: [f64; 3], halfwidth: usize) -> Result<SeedStats> {
    let geo = volume.geometry();
    let center = geo
        .nearest_voxel(seed)
        .ok_or_else(|| geo.seed_error(seed))?;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        lo[a] = center[a].saturating_sub(halfwidth);
        hi[a] = (center[a] + halfwidth).min(geo.dims[a] - 1);
    }

    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in lo[2]..=hi[2] {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let g = volume.get(i, j, k);
                g_min = g_min.min(g);
                g_max = g_max.max(g);
                sum += g;
                count += 1;
            }
        }
    }
    // the mean of a sum of rounded terms can stray outside [min, max] by an ulp
    let g_avg = (sum / count as f64).clamp(g_min, g_max);
    Ok(SeedStats {
        g_min,
        g_max,
        g_avg,
        sample_count: count,
    })
}

/// Binary voxel mask aligned to a [`Geometry`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    geometry: Geometry,
    data: Vec<bool>,
}

impl Mask {
    pub fn empty(geometry: Geometry) -> Self {
        Mask {
            data: vec![false; geometry.voxel_count()],
            geometry,
        }
    }

    pub fn new(geometry: Geometry, data: Vec<bool>) -> Result<Self> {
        let expected = geometry.voxel_count();
        if data.len() != expected {
            return Err(Error::DataSizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Mask { geometry, data })
    }

    /// Treats every non-zero grey as set.
    pub fn from_volume(volume: &Volume) -> Self {
        Mask {
            geometry: *volume.geometry(),
            data: volume.data().iter().map(|&g| g != 0.0).collect(),
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.data[self.geometry.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.geometry.index(i, j, k);
        self.data[idx] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&b| u8::from(b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo(dims: [usize; 3]) -> Geometry {
        Geometry::new(dims, [1.0; 3], [0.0; 3]).unwrap()
    }

    #[test]
    fn sample_at_voxel_center_is_identity() {
        let v = Volume::from_fn(geo([3, 3, 3]), |i, j, k| (i + 3 * j + 9 * k) as f64);
        let g = v.geometry().world(1, 2, 1);
        assert_eq!(v.sample_trilinear(g), v.get(1, 2, 1));

        let mut data = vec![0.0; 27];
        data[geo([3, 3, 3]).index(1, 1, 1)] = 42.0;
        let v = Volume::new(geo([3, 3, 3]), data).unwrap();
        assert_eq!(v.sample_trilinear([1.0, 1.0, 1.0]), 42.0);
    }

    #[test]
    fn sample_midpoint_between_two_centers() {
        let v = Volume::new(geo([2, 1, 1]), vec![10.0, 20.0]).unwrap();
        assert_eq!(v.sample_trilinear([0.5, 0.0, 0.0]), 15.0);
    }

    #[test]
    fn sample_cell_center_averages_corners() {
        // z = 0 plane all 0, z = 1 plane all 8: each corner weight is 1/8
        let v = Volume::from_fn(geo([2, 2, 2]), |_, _, k| if k == 1 { 8.0 } else { 0.0 });
        assert_eq!(v.sample_trilinear([0.5, 0.5, 0.5]), 4.0);
    }

    #[test]
    fn sample_clamps_outside_points() {
        let v = Volume::new(geo([2, 1, 1]), vec![10.0, 20.0]).unwrap();
        assert_eq!(v.sample_trilinear([-5.0, 3.0, -1.0]), 10.0);
        assert_eq!(v.sample_trilinear([9.0, 0.0, 0.0]), 20.0);
    }

    #[test]
    fn anisotropic_spacing_and_origin() {
        let g = Geometry::new([2, 2, 2], [2.0, 3.0, 4.0], [10.0, 20.0, 30.0]).unwrap();
        let v = Volume::from_fn(g, |i, j, k| (i * 100 + j * 10 + k) as f64);
        assert_eq!(v.sample_trilinear([11.0, 20.0, 30.0]), 50.0);
        assert_eq!(v.sample_trilinear([10.0, 21.5, 32.0]), 5.5);
    }

    #[test]
    fn geometry_rejects_bad_spacing() {
        assert!(Geometry::new([1, 1, 1], [0.0, 1.0, 1.0], [0.0; 3]).is_err());
        assert!(Geometry::new([1, 0, 1], [1.0; 3], [0.0; 3]).is_err());
        assert!(Geometry::new([1, 1, 1], [1.0, f64::NAN, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn volume_rejects_wrong_length() {
        let err = Volume::new(geo([2, 2, 2]), vec![0.0; 7]).unwrap_err();
        assert!(err.to_string().contains("data size mismatch"));
    }

    #[test]
    fn resample_identity_at_same_spacing() {
        let v = Volume::from_fn(geo([4, 3, 2]), |i, j, k| (i * j + k) as f64);
        let r = v.resample_isotropic(1.0).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn resampled_dims_of_clinical_scan() {
        let g = Geometry::new([512, 512, 16], [0.63, 0.63, 4.4], [0.0; 3]).unwrap();
        let dims = resampled_dims(&g, 2.01258).unwrap();
        assert_eq!(dims, [160, 160, 35]);
        // the reported grid was 159 x 159 x 35; one voxel per axis of slack
        for (ours, reported) in dims.iter().zip([159usize, 159, 35]) {
            assert!(ours.abs_diff(reported) <= 1);
        }
    }

    #[test]
    fn resample_rejects_non_positive_spacing() {
        let v = Volume::filled(geo([2, 2, 2]), 1.0);
        assert!(v.resample_isotropic(0.0).is_err());
        assert!(v.resample_isotropic(-1.0).is_err());
    }

    #[test]
    fn seed_stats_uniform_block() {
        let v = Volume::filled(geo([9, 9, 9]), 100.0);
        let s = seed_stats(&v, [4.0, 4.0, 4.0], 2).unwrap();
        assert_eq!(
            (s.g_min, s.g_max, s.g_avg, s.sample_count),
            (100.0, 100.0, 100.0, 125)
        );
    }

    #[test]
    fn seed_stats_enumerated_multiset() {
        // 27-voxel block: one 90, one 110, 25 of 100
        let mut v = Volume::filled(geo([3, 3, 3]), 100.0).data().to_vec();
        v[0] = 90.0;
        v[26] = 110.0;
        let v = Volume::new(geo([3, 3, 3]), v).unwrap();
        let s = seed_stats(&v, [1.0, 1.0, 1.0], 1).unwrap();
        assert_eq!(s.g_min, 90.0);
        assert_eq!(s.g_max, 110.0);
        assert_eq!(s.g_avg, 100.0);
        assert_eq!(s.sample_count, 27);
    }

    #[test]
    fn seed_stats_clamps_at_corner() {
        let v = Volume::filled(geo([10, 10, 10]), 1.0);
        let s = seed_stats(&v, [0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s.sample_count, 27);
    }

    #[test]
    fn seed_stats_rejects_outside_seed() {
        let v = Volume::filled(geo([4, 4, 4]), 1.0);
        let err = seed_stats(&v, [10.0, 1.0, 1.0], 1).unwrap_err();
        assert!(matches!(err, Error::SeedOutsideVolume { .. }));
    }

    fn arb_volume() -> impl Strategy<Value = Volume> {
        (1usize..5, 1usize..5, 1usize..5).prop_flat_map(|(nx, ny, nz)| {
            prop::collection::vec(0.0f64..1000.0, nx * ny * nz).prop_map(move |data| {
                Volume::new(
                    Geometry::new([nx, ny, nz], [0.7, 1.3, 2.0], [-1.0, 0.5, 3.0]).unwrap(),
                    data,
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn trilinear_stays_in_grey_range(
            v in arb_volume(),
            p in prop::array::uniform3(-10.0f64..20.0),
        ) {
            let (lo, hi) = v.min_max();
            let g = v.sample_trilinear(p);
            prop_assert!(g >= lo - 1e-9 && g <= hi + 1e-9);
        }

        #[test]
        fn seed_stats_mean_between_bounds(v in arb_volume(), hw in 0usize..3) {
            let seed = v.geometry().world(0, 0, 0);
            let s = seed_stats(&v, seed, hw).unwrap();
            prop_assert!(s.g_min <= s.g_avg && s.g_avg <= s.g_max);
            prop_assert!(s.sample_count >= 1);
        }

        #[test]
        fn resample_of_constant_is_constant(c in 0.0f64..500.0, t in 0.3f64..3.0) {
            let v = Volume::filled(Geometry::new([5, 4, 3], [0.9, 1.1, 2.5], [0.0; 3]).unwrap(), c);
            let r = v.resample_isotropic(t).unwrap();
            prop_assert!(r.data().iter().all(|&g| (g - c).abs() <= 1e-9 * c.max(1.0)));
        }
    }
}
