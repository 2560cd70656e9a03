//! Seeded 3-D segmentation with a cubic ray template and a minimum s-t cut.
//!
//! Rays are cast from a user seed to the surface of a cube (or sphere) and
//! sampled at equidistant nodes. Each node is tied to the source or the
//! sink depending on how its grey value compares with the statistics
//! around the seed; infinite arcs force every ray to be cut exactly once
//! and limit how far the cut may jump between neighboring rays. The
//! minimum cut yields one boundary layer per ray, from which a voxel mask
//! and a closed triangle mesh are built.
//!
//! ```
//! use cubecut::eval::{dsc, gen_phantom, PhantomSpec};
//! use cubecut::segment::{segment, Params, TemplateKind};
//!
//! let mut spec = PhantomSpec::centered_box(48, 1.0, 10.0, 10.0, 100.0);
//! spec.noise_sigma = 5.0;
//! let (volume, truth) = gen_phantom(&spec).unwrap();
//!
//! let mut params = Params::new([23.5; 3]);
//! params.template = TemplateKind::Cube { edge_mm: 36.0, m: 7 };
//! params.k = 19;
//! let seg = segment(&volume, &params).unwrap();
//! assert!(dsc(&seg.mask, &truth).unwrap() > 0.9);
//! ```

pub mod error;
pub mod eval;
pub mod maxflow;
pub mod netbuild;
pub mod segment;
pub mod template;
pub mod volume;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/volumes.md")]
    mod volumes {}
    #[doc = include_str!("../../../book/src/templates.md")]
    mod templates {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    mod segmentation {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/interfaces.md")]
    mod interfaces {}
}
