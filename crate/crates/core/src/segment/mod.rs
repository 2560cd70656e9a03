//! End-to-end segmentation: seed statistics, template, network, minimum
//! cut, then labels, per-ray boundaries, mask and surface mesh.

mod mesh;
mod voxelize;

use std::fmt;

pub use mesh::{triangulate, Mesh};
pub use voxelize::voxelize;

use crate::error::{Error, Result};
use crate::maxflow::{bk_maxflow, cut_capacity, min_cut_partition};
use crate::netbuild::{build_network, FlowNetwork};
use crate::template::{build_cube_template, build_sphere_template, Template};
use crate::volume::{seed_stats, Mask, SeedStats, Volume};

/// Share of rays cut at the last interior layer above which the template
/// is reported as too small.
pub const TOO_SMALL_FRACTION: f64 = 0.05;

/// Where the object surface sits relative to the last object node `b` of a
/// ray.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryPlacement {
    /// On node `b` itself.
    Node,
    /// Halfway between node `b` and node `b + 1`, the point where the cut
    /// actually separates the two.
    #[default]
    Midpoint,
}

impl BoundaryPlacement {
    pub fn offset(self) -> f64 {
        match self {
            BoundaryPlacement::Node => 0.0,
            BoundaryPlacement::Midpoint => 0.5,
        }
    }

    /// Continuous layer coordinate of the surface for boundary `b`.
    pub fn layer(self, b: usize) -> f64 {
        b as f64 + self.offset()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TemplateKind {
    Cube {
        edge_mm: f64,
        m: usize,
    },
    Sphere {
        diameter_mm: f64,
        n_theta: usize,
        n_phi: usize,
    },
}

impl TemplateKind {
    pub const DEFAULT_EDGE_MM: f64 = 80.0;
    pub const DEFAULT_RAYS_PER_EDGE: usize = 15;
    pub const DEFAULT_RINGS: usize = 15;
    pub const DEFAULT_RAYS_PER_RING: usize = 30;

    /// Sphere of the default ring layout.
    pub fn sphere(diameter_mm: f64) -> Self {
        TemplateKind::Sphere {
            diameter_mm,
            n_theta: Self::DEFAULT_RINGS,
            n_phi: Self::DEFAULT_RAYS_PER_RING,
        }
    }
}

impl Default for TemplateKind {
    fn default() -> Self {
        TemplateKind::Cube {
            edge_mm: Self::DEFAULT_EDGE_MM,
            m: Self::DEFAULT_RAYS_PER_EDGE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// World coordinates in mm.
    pub seed: [f64; 3],
    pub template: TemplateKind,
    /// Nodes per ray, seed included.
    pub k: usize,
    /// Largest layer difference allowed between adjacent rays.
    pub delta: usize,
    /// Half-width in voxels of the block sampled around the seed.
    pub stats_halfwidth: usize,
    pub placement: BoundaryPlacement,
}

impl Params {
    pub const DEFAULT_K: usize = 40;
    pub const DEFAULT_DELTA: usize = 2;
    pub const DEFAULT_STATS_HALFWIDTH: usize = 2;

    /// Defaults: 80 mm cube, 15 rays per edge, 40 nodes per ray, delta 2,
    /// 5x5x5 seed block.
    pub fn new(seed: [f64; 3]) -> Self {
        Params {
            seed,
            template: TemplateKind::default(),
            k: Self::DEFAULT_K,
            delta: Self::DEFAULT_DELTA,
            stats_halfwidth: Self::DEFAULT_STATS_HALFWIDTH,
            placement: BoundaryPlacement::default(),
        }
    }

    pub fn build_template(&self) -> Result<Template> {
        match self.template {
            TemplateKind::Cube { edge_mm, m } => build_cube_template(self.seed, edge_mm, m, self.k),
            TemplateKind::Sphere {
                diameter_mm,
                n_theta,
                n_phi,
            } => build_sphere_template(self.seed, diameter_mm, n_theta, n_phi, self.k),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Label {
    /// Source side.
    Object,
    /// Sink side.
    Background,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Many rays end at the last interior layer: the object probably
    /// extends past the template.
    TemplateTooSmall {
        rays_at_limit: usize,
        ray_count: usize,
    },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::TemplateTooSmall {
                rays_at_limit,
                ray_count,
            } => write!(
                f,
                "template may be too small: {rays_at_limit} of {ray_count} rays are cut \
                 at their last interior node; consider a larger edge or diameter"
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub template: Template,
    pub stats: SeedStats,
    /// Per template node, indexed by node id.
    pub labels: Vec<Label>,
    /// Per ray: last layer labeled [`Label::Object`].
    pub boundaries: Vec<usize>,
    pub mask: Mask,
    pub mesh: Mesh,
    /// Energy of `labels`, i.e. the capacity of the extracted cut.
    pub cut_value: f64,
    /// Maximum flow reported by the solver.
    pub flow_value: f64,
    pub warnings: Vec<Warning>,
}

pub fn segment(volume: &Volume, params: &Params) -> Result<Segmentation> {
    let geometry = volume.geometry();
    if !geometry.contains(params.seed) {
        return Err(geometry.seed_error(params.seed));
    }
    let stats = seed_stats(volume, params.seed, params.stats_halfwidth)?;
    let template = params.build_template()?;
    let network = build_network(&template, volume, &stats, params.delta)?;
    let flow = bk_maxflow(&network)?;
    let in_source = min_cut_partition(&network, &flow);

    let labels = labels_from_partition(&in_source[..template.node_count()]);
    let boundaries = ray_boundaries(&template, &in_source)?;
    let cut_value = energy(&network, &labels)?;
    let mask = voxelize(&template, &boundaries, geometry, params.placement)?;
    let mesh = triangulate(&template, &boundaries, params.placement)?;

    let mut warnings = Vec::new();
    let rays_at_limit = boundaries
        .iter()
        .filter(|&&b| b == template.k() - 1)
        .count();
    if rays_at_limit as f64 > TOO_SMALL_FRACTION * boundaries.len() as f64 {
        warnings.push(Warning::TemplateTooSmall {
            rays_at_limit,
            ray_count: boundaries.len(),
        });
    }

    Ok(Segmentation {
        template,
        stats,
        labels,
        boundaries,
        mask,
        mesh,
        cut_value,
        flow_value: flow.flow,
        warnings,
    })
}

pub fn labels_from_partition(in_source: &[bool]) -> Vec<Label> {
    in_source
        .iter()
        .map(|&s| if s { Label::Object } else { Label::Background })
        .collect()
}

/// Cost of a labeling: terminal capacities of the side each node is not
/// on, plus inner arcs from object to background.
///
/// `labels` covers the non-terminal nodes in increasing id order.
pub fn energy(network: &FlowNetwork, labels: &[Label]) -> Result<f64> {
    let (s, t) = (network.source(), network.sink());
    let inner = network.node_count() - 2;
    if labels.len() != inner {
        return Err(Error::IncompleteLabeling {
            expected: inner,
            got: labels.len(),
        });
    }
    let mut side = Vec::with_capacity(network.node_count());
    let mut next = labels.iter();
    for v in 0..network.node_count() {
        side.push(if v == s {
            true
        } else if v == t {
            false
        } else {
            next.next() == Some(&Label::Object)
        });
    }
    Ok(cut_capacity(network, &side))
}

/// Last source-side layer of every ray.
///
/// Fails when the source set is not a layer prefix on some ray, or misses
/// the seed.
pub fn ray_boundaries(template: &Template, in_source: &[bool]) -> Result<Vec<usize>> {
    if !in_source[0] {
        return Err(Error::NonPrefixCut(0));
    }
    let k = template.k();
    (0..template.ray_count())
        .map(|r| {
            let mut b = 1;
            while b < k && in_source[template.node_id(r, b + 1)] {
                b += 1;
            }
            if (b + 1..=k).any(|i| in_source[template.node_id(r, i)]) {
                return Err(Error::NonPrefixCut(r));
            }
            Ok(b)
        })
        .collect()
}
