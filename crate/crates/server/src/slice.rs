//! Orthogonal slices of a voxel grid and their PNG rendering.
//!
//! Image axes per plane (column `u`, row `v`, slice index along the third
//! axis):
//!
//! | plane    | u | v | index |
//! |----------|---|---|-------|
//! | axial    | x | y | z     |
//! | coronal  | x | z | y     |
//! | sagittal | y | z | x     |
//!
//! Row 0 is the lowest coordinate along `v`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Axial,
    Coronal,
    Sagittal,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Axial, Plane::Coronal, Plane::Sagittal];

    /// Grid axes for `(u, v, index)`.
    pub fn axes(self) -> [usize; 3] {
        match self {
            Plane::Axial => [0, 1, 2],
            Plane::Coronal => [0, 2, 1],
            Plane::Sagittal => [1, 2, 0],
        }
    }

    /// `(width, height, slice count)` for a grid of `dims`.
    pub fn extent(self, dims: [usize; 3]) -> (usize, usize, usize) {
        let [u, v, w] = self.axes();
        (dims[u], dims[v], dims[w])
    }

    pub fn voxel(self, u: usize, v: usize, index: usize) -> [usize; 3] {
        let axes = self.axes();
        let mut ijk = [0; 3];
        ijk[axes[0]] = u;
        ijk[axes[1]] = v;
        ijk[axes[2]] = index;
        ijk
    }
}

impl FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "axial" => Ok(Plane::Axial),
            "coronal" => Ok(Plane::Coronal),
            "sagittal" => Ok(Plane::Sagittal),
            other => Err(format!(
                "unknown plane {other:?} (axial, coronal, sagittal)"
            )),
        }
    }
}

/// Row-major samples of one slice; `None` when `index` is out of range.
pub fn extract<T: Copy>(
    data: &[T],
    dims: [usize; 3],
    plane: Plane,
    index: usize,
) -> Option<(usize, usize, Vec<T>)> {
    let (w, h, depth) = plane.extent(dims);
    if index >= depth {
        return None;
    }
    let mut out = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let [i, j, k] = plane.voxel(u, v, index);
            out.push(data[i + dims[0] * (j + dims[1] * k)]);
        }
    }
    Some((w, h, out))
}

/// Linear window `[lo, hi]` onto 0..=255. A zero-width window thresholds
/// at `lo`.
pub fn window_to_u8(greys: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    greys
        .iter()
        .map(|&g| {
            if hi > lo {
                ((g - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
            } else if g >= lo {
                255
            } else {
                0
            }
        })
        .collect()
}

pub fn encode_png(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().expect("in-memory PNG header");
        writer.write_image_data(pixels).expect("in-memory PNG data");
    }
    out
}
