//! Overlap and volume measures, the CSV evaluation report, and synthetic
//! box phantoms with known ground truth.
//!
//! Phantom noise is reproducible across implementations: a ChaCha8 stream
//! seeded with `rng_seed` feeds Box-Muller pairs,
//! `u1 = 1 - U`, `u2 = U'` with `U, U'` uniform in `[0, 1)`,
//! `z0 = sqrt(-2 ln u1) cos(2 pi u2)`, `z1 = sqrt(-2 ln u1) sin(2 pi u2)`,
//! assigned to voxels in storage order (x fastest), two voxels per pair.
//! Outlier voxels are then drawn from the same stream.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask, Volume};

/// Dice similarity coefficient `2 |A n B| / (|A| + |B|)`.
pub fn dsc(a: &Mask, b: &Mask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimsMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    let (na, nb) = (a.count(), b.count());
    if na + nb == 0 {
        return Err(Error::BothMasksEmpty);
    }
    Ok(2.0 * intersection(a, b) as f64 / (na + nb) as f64)
}

/// Number of voxels set in both masks (grids assumed equal).
pub fn intersection(a: &Mask, b: &Mask) -> usize {
    a.data()
        .iter()
        .zip(b.data())
        .filter(|(x, y)| **x && **y)
        .count()
}

pub fn voxels_to_mm3(count: usize, spacing: [f64; 3]) -> f64 {
    count as f64 * spacing[0] * spacing[1] * spacing[2]
}

pub fn mask_volume_mm3(mask: &Mask, spacing: [f64; 3]) -> f64 {
    voxels_to_mm3(mask.count(), spacing)
}

/// One line of the evaluation report. Manual (reference) columns are empty
/// when no reference mask is available.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub case_id: String,
    pub manual_volume_mm3: Option<f64>,
    pub automatic_volume_mm3: f64,
    pub manual_voxels: Option<usize>,
    pub automatic_voxels: usize,
    /// Percent.
    pub dsc: Option<f64>,
}

impl ReportRow {
    pub fn new(case_id: &str, automatic: &Mask, manual: Option<&Mask>) -> Result<Self> {
        let spacing = automatic.geometry().spacing;
        let dsc = manual.map(|m| dsc(m, automatic)).transpose()?;
        Ok(ReportRow {
            case_id: case_id.to_string(),
            manual_volume_mm3: manual.map(|m| mask_volume_mm3(m, spacing)),
            automatic_volume_mm3: mask_volume_mm3(automatic, spacing),
            manual_voxels: manual.map(Mask::count),
            automatic_voxels: automatic.count(),
            dsc: dsc.map(|d| d * 100.0),
        })
    }
}

pub const REPORT_HEADER: &str =
    "case_id,manual_volume_mm3,automatic_volume_mm3,manual_voxels,automatic_voxels,dsc_percent";

pub fn write_report<W: Write>(mut w: W, rows: &[ReportRow]) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        writeln!(
            w,
            "{},{},{:.1},{},{},{}",
            csv_field(&r.case_id),
            opt(r.manual_volume_mm3.map(|v| format!("{v:.1}"))),
            r.automatic_volume_mm3,
            opt(r.manual_voxels.map(|v| v.to_string())),
            r.automatic_voxels,
            opt(r.dsc.map(|v| format!("{v:.2}"))),
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Axis-aligned box in world mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub center_mm: [f64; 3],
    pub half_extents_mm: [f64; 3],
}

impl BoxRegion {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| (p[a] - self.center_mm[a]).abs() <= self.half_extents_mm[a] + 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outliers {
    pub count: usize,
    pub grey: f64,
    /// Voxels eligible for outliers; the object box when absent.
    #[serde(default)]
    pub region: Option<BoxRegion>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-z")]
    NegZ,
    #[serde(rename = "+z")]
    PosZ,
}

impl Face {
    pub fn axis(self) -> usize {
        match self {
            Face::NegX | Face::PosX => 0,
            Face::NegY | Face::PosY => 1,
            Face::NegZ | Face::PosZ => 2,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Face::NegX | Face::NegY | Face::NegZ => -1.0,
            _ => 1.0,
        }
    }
}

/// A patch of one box face where object grey continues outward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGap {
    pub face: Face,
    /// Half-size of the square patch, centered on the face.
    pub patch_half_mm: f64,
    /// Depth of the leaked shell outside the face.
    pub thickness_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    #[serde(default)]
    pub origin: [f64; 3],
    pub background: f64,
    pub object: f64,
    #[serde(rename = "box")]
    pub object_box: BoxRegion,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub outliers: Option<Outliers>,
    #[serde(default)]
    pub boundary_gap: Option<BoundaryGap>,
    #[serde(default)]
    pub rng_seed: u64,
}

impl PhantomSpec {
    /// Box of half-extent `half_mm` centered in a cube volume of `n`
    /// voxels per axis at `spacing` mm, origin 0.
    pub fn centered_box(
        n: usize,
        spacing: f64,
        half_mm: f64,
        background: f64,
        object: f64,
    ) -> Self {
        let c = (n - 1) as f64 * spacing / 2.0;
        PhantomSpec {
            dims: [n; 3],
            spacing: [spacing; 3],
            origin: [0.0; 3],
            background,
            object,
            object_box: BoxRegion {
                center_mm: [c; 3],
                half_extents_mm: [half_mm; 3],
            },
            noise_sigma: 0.0,
            outliers: None,
            boundary_gap: None,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<Geometry> {
        let g = Geometry::new(self.dims, self.spacing, self.origin)?;
        let (lo, hi) = g.bounds();
        let b = &self.object_box;
        for a in 0..3 {
            let h = b.half_extents_mm[a];
            if h.is_nan()
                || h <= 0.0
                || b.center_mm[a] - h < lo[a] - 0.5 * g.spacing[a] - 1e-9
                || b.center_mm[a] + h > hi[a] + 0.5 * g.spacing[a] + 1e-9
            {
                return Err(Error::InvalidParameter(format!(
                    "object box does not fit inside the volume along axis {a}"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if let Some(gap) = &self.boundary_gap {
            if !(gap.patch_half_mm >= 0.0 && gap.thickness_mm >= 0.0) {
                return Err(Error::InvalidParameter(
                    "boundary gap sizes must be >= 0".into(),
                ));
            }
        }
        Ok(g)
    }
}

/// Noisy box phantom and its ground-truth mask (voxel centers inside the
/// box). Greys are rounded to `f32` so that saving as `MET_FLOAT` is
/// lossless.
pub fn gen_phantom(spec: &PhantomSpec) -> Result<(Volume, Mask)> {
    let g = spec.validate()?;
    let b = spec.object_box;
    let mut truth = Mask::empty(g);
    let mut data = vec![spec.background; g.voxel_count()];
    for k in 0..g.dims[2] {
        for j in 0..g.dims[1] {
            for i in 0..g.dims[0] {
                let p = g.world(i, j, k);
                let idx = g.index(i, j, k);
                if b.contains(p) {
                    truth.set(i, j, k, true);
                    data[idx] = spec.object;
                } else if let Some(gap) = &spec.boundary_gap {
                    if in_gap(&b, gap, p) {
                        data[idx] = spec.object;
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut pairs = data.chunks_mut(2);
    for pair in &mut pairs {
        let u1 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        pair[0] += spec.noise_sigma * r * theta.cos();
        if let Some(second) = pair.get_mut(1) {
            *second += spec.noise_sigma * r * theta.sin();
        }
    }

    if let Some(out) = &spec.outliers {
        let region = out.region.unwrap_or(b);
        let mut eligible: Vec<usize> = Vec::new();
        for k in 0..g.dims[2] {
            for j in 0..g.dims[1] {
                for i in 0..g.dims[0] {
                    if region.contains(g.world(i, j, k)) {
                        eligible.push(g.index(i, j, k));
                    }
                }
            }
        }
        if out.count > eligible.len() {
            return Err(Error::InvalidParameter(format!(
                "{} outliers requested, region holds {} voxels",
                out.count,
                eligible.len()
            )));
        }
        // partial Fisher-Yates
        for n in 0..out.count {
            let pick = rng.random_range(n..eligible.len());
            eligible.swap(n, pick);
            data[eligible[n]] = out.grey;
        }
    }

    for v in &mut data {
        *v = *v as f32 as f64;
    }
    Ok((Volume::new(g, data)?, truth))
}

fn in_gap(b: &BoxRegion, gap: &BoundaryGap, p: [f64; 3]) -> bool {
    let a = gap.face.axis();
    let face = b.center_mm[a] + gap.face.sign() * b.half_extents_mm[a];
    let beyond = gap.face.sign() * (p[a] - face);
    if !(beyond > 0.0 && beyond <= gap.thickness_mm + 1e-9) {
        return false;
    }
    (0..3)
        .filter(|&o| o != a)
        .all(|o| (p[o] - b.center_mm[o]).abs() <= gap.patch_half_mm + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_with(n: usize, set: &[usize]) -> Mask {
        let g = Geometry::new([n, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
        let mut data = vec![false; n];
        for &i in set {
            data[i] = true;
        }
        Mask::new(g, data).unwrap()
    }

    #[test]
    fn dsc_identity_and_disjoint() {
        let a = mask_with(6, &[0, 1, 2]);
        let b = mask_with(6, &[3, 4]);
        assert_eq!(dsc(&a, &a).unwrap(), 1.0);
        assert_eq!(dsc(&a, &b).unwrap(), 0.0);
        assert_eq!(dsc(&a, &mask_with(6, &[1, 2, 3])).unwrap(), 2.0 * 2.0 / 6.0);
    }

    #[test]
    fn dsc_errors() {
        let e = mask_with(4, &[]);
        assert!(matches!(dsc(&e, &e), Err(Error::BothMasksEmpty)));
        assert!(matches!(
            dsc(&mask_with(4, &[1]), &mask_with(5, &[1])),
            Err(Error::DimsMismatch { .. })
        ));
    }

    #[test]
    fn dsc_from_table_counts() {
        // first row of the clinical table: 2927 and 3228 voxels, 2668 shared
        let a = mask_with(6000, &(0..2927).collect::<Vec<_>>());
        let b = mask_with(6000, &(2927 - 2668..2927 - 2668 + 3228).collect::<Vec<_>>());
        assert_eq!(intersection(&a, &b), 2668);
        assert!((dsc(&a, &b).unwrap() - 0.8669).abs() <= 2e-4);
    }

    #[test]
    fn voxel_volumes() {
        let s = [2.01258; 3];
        assert!((voxels_to_mm3(2927, s) / 23860.6 - 1.0).abs() < 5e-4);
        assert!((voxels_to_mm3(3365, s) / 27431.1 - 1.0).abs() < 5e-4);
        assert_eq!(mask_volume_mm3(&mask_with(3, &[]), s), 0.0);
    }

    #[test]
    fn report_csv() {
        let auto = mask_with(4, &[0, 1]);
        let manual = mask_with(4, &[1, 2]);
        let rows = vec![
            ReportRow::new("case,1", &auto, Some(&manual)).unwrap(),
            ReportRow::new("case2", &auto, None).unwrap(),
        ];
        let mut out = Vec::new();
        write_report(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "\"case,1\",2.0,2.0,2,2,50.00");
        assert_eq!(lines[2], "case2,,2.0,,2,");
    }

    #[test]
    fn noiseless_phantom_has_two_greys() {
        let spec = PhantomSpec::centered_box(20, 1.0, 4.0, 10.0, 100.0);
        let (v, truth) = gen_phantom(&spec).unwrap();
        let mut greys: Vec<f64> = v.data().to_vec();
        greys.sort_by(f64::total_cmp);
        greys.dedup();
        assert_eq!(greys, vec![10.0, 100.0]);
        assert_eq!(truth.count(), 8 * 8 * 8);
    }

    #[test]
    fn acceptance_box_has_64000_voxels() {
        let spec = PhantomSpec::centered_box(160, 1.0, 20.0, 10.0, 100.0);
        let (_, truth) = gen_phantom(&spec).unwrap();
        assert_eq!(truth.count(), 64000);
    }

    #[test]
    fn phantom_is_deterministic() {
        let mut spec = PhantomSpec::centered_box(16, 1.0, 4.0, 10.0, 100.0);
        spec.noise_sigma = 5.0;
        spec.rng_seed = 42;
        spec.outliers = Some(Outliers {
            count: 5,
            grey: 0.0,
            region: None,
        });
        let (a, ta) = gen_phantom(&spec).unwrap();
        let (b, tb) = gen_phantom(&spec).unwrap();
        assert_eq!(a.data(), b.data());
        assert_eq!(ta, tb);
        let outliers = a.data().iter().filter(|&&g| g == 0.0).count();
        assert_eq!(outliers, 5);
        spec.rng_seed = 43;
        assert_ne!(gen_phantom(&spec).unwrap().0.data(), a.data());
    }

    #[test]
    fn noise_statistics() {
        let mut spec = PhantomSpec::centered_box(40, 1.0, 5.0, 0.0, 0.0);
        spec.noise_sigma = 5.0;
        spec.rng_seed = 7;
        let (v, _) = gen_phantom(&spec).unwrap();
        let n = v.data().len() as f64;
        let mean = v.data().iter().sum::<f64>() / n;
        let var = v.data().iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05);
        assert!((var.sqrt() - 5.0).abs() < 0.05);
    }

    #[test]
    fn boundary_gap_leaks_object_grey() {
        let mut spec = PhantomSpec::centered_box(21, 1.0, 4.0, 10.0, 100.0);
        spec.boundary_gap = Some(BoundaryGap {
            face: Face::PosX,
            patch_half_mm: 1.0,
            thickness_mm: 3.0,
        });
        let (v, truth) = gen_phantom(&spec).unwrap();
        assert_eq!(truth.count(), 9 * 9 * 9);
        // box spans 6..=14; gap spans x 15..=17, y and z 9..=11
        assert_eq!(v.get(17, 10, 10), 100.0);
        assert_eq!(v.get(18, 10, 10), 10.0);
        assert_eq!(v.get(16, 12, 10), 10.0);
        assert_eq!(v.get(5, 10, 10), 10.0);
        let leaked = v.data().iter().filter(|&&g| g == 100.0).count();
        assert_eq!(leaked, 9 * 9 * 9 + 3 * 3 * 3);
    }

    #[test]
    fn spec_validation() {
        let mut spec = PhantomSpec::centered_box(10, 1.0, 4.0, 10.0, 100.0);
        spec.object_box.half_extents_mm = [6.0; 3];
        assert!(gen_phantom(&spec).is_err());
        let mut spec = PhantomSpec::centered_box(10, 1.0, 2.0, 10.0, 100.0);
        spec.noise_sigma = -1.0;
        assert!(gen_phantom(&spec).is_err());
        spec.noise_sigma = 0.0;
        spec.outliers = Some(Outliers {
            count: 1000,
            grey: 0.0,
            region: None,
        });
        assert!(gen_phantom(&spec).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{
            "dims": [8, 8, 8], "spacing": [1, 1, 1],
            "background": 10, "object": 100,
            "box": {"center_mm": [3.5, 3.5, 3.5], "half_extents_mm": [2, 2, 2]},
            "boundary_gap": {"face": "-z", "patch_half_mm": 1, "thickness_mm": 1}
        }"#;
        let spec: PhantomSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.boundary_gap.unwrap().face, Face::NegZ);
        assert_eq!(spec.noise_sigma, 0.0);
        let again: PhantomSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    fn arb_pair() -> impl Strategy<Value = (Mask, Mask)> {
        (1usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(a, b)| {
                    let g = Geometry::new([n, 1, 1], [1.0; 3], [0.0; 3]).unwrap();
                    (Mask::new(g, a).unwrap(), Mask::new(g, b).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn dsc_is_symmetric_and_bounded((a, b) in arb_pair()) {
            match (dsc(&a, &b), dsc(&b, &a)) {
                (Ok(x), Ok(y)) => {
                    prop_assert_eq!(x, y);
                    prop_assert!((0.0..=1.0).contains(&x));
                }
                (Err(_), Err(_)) => prop_assert_eq!(a.count() + b.count(), 0),
                _ => prop_assert!(false),
            }
            if a.count() > 0 {
                prop_assert_eq!(dsc(&a, &a).unwrap(), 1.0);
            }
        }

        #[test]
        fn truth_ignores_noise(sigma in 0.0f64..20.0, seed in any::<u64>()) {
            let mut spec = PhantomSpec::centered_box(12, 1.0, 3.0, 10.0, 100.0);
            let (_, base) = gen_phantom(&spec).unwrap();
            spec.noise_sigma = sigma;
            spec.rng_seed = seed;
            let (_, noisy) = gen_phantom(&spec).unwrap();
            prop_assert_eq!(base, noisy);
        }
    }
}
