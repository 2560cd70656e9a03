//! Two-terminal flow networks and their construction from a template.
//!
//! Terminal links (o-links) carry the data term: they mark where grey values
//! along a ray stop resembling the seed region. Infinite inner arcs carry
//! the constraints: z-edges force one cut per ray, xy-edges bound the
//! boundary-layer difference of adjacent rays by `delta`.
//!
//! Infinity is realized as `1 + sum of all finite capacities`, so a cut
//! containing an infinite arc always costs more than any finite cut.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::template::{node_id, Template};
use crate::volume::{SeedStats, Volume};

/// Capacity before the network's infinity is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Capacity {
    Finite(f64),
    Infinite,
}

impl Capacity {
    pub const ZERO: Capacity = Capacity::Finite(0.0);

    pub fn is_infinite(self) -> bool {
        matches!(self, Capacity::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub capacity: f64,
    pub infinite: bool,
}

/// Directed graph with a source, a sink and non-negative capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
    infinity: f64,
}

impl FlowNetwork {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Value standing in for an infinite capacity.
    pub fn infinity(&self) -> f64 {
        self.infinity
    }

    /// Sum of all finite capacities.
    pub fn finite_total(&self) -> f64 {
        self.arcs
            .iter()
            .filter(|a| !a.infinite)
            .map(|a| a.capacity)
            .sum()
    }

    /// Plain-text arc list, one `from to capacity` line per arc.
    pub fn write_arc_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# nodes {} source {} sink {} infinity {}",
            self.node_count, self.source, self.sink, self.infinity
        )?;
        for a in &self.arcs {
            writeln!(w, "{} {} {}", a.from, a.to, a.capacity)?;
        }
        Ok(())
    }
}

/// Accumulates arcs and fixes the value of infinity on [`finish`].
///
/// [`finish`]: NetworkBuilder::finish
#[derive(Clone, Debug)]
pub struct NetworkBuilder {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<(usize, usize, Capacity)>,
}

impl NetworkBuilder {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= node_count || sink >= node_count || source == sink {
            return Err(Error::InvalidParameter(format!(
                "bad terminals s = {source}, t = {sink} for {node_count} nodes"
            )));
        }
        Ok(NetworkBuilder {
            node_count,
            source,
            sink,
            arcs: Vec::new(),
        })
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: Capacity) -> Result<()> {
        if from >= self.node_count || to >= self.node_count {
            return Err(Error::InvalidParameter(format!(
                "arc ({from}, {to}) outside {} nodes",
                self.node_count
            )));
        }
        if let Capacity::Finite(c) = capacity {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidCapacity {
                    arc: self.arcs.len(),
                    capacity: c,
                });
            }
        }
        self.arcs.push((from, to, capacity));
        Ok(())
    }

    pub fn finish(self) -> FlowNetwork {
        let finite: f64 = self.arcs.iter().filter_map(|a| a.2.finite()).sum();
        let infinity = 1.0 + finite;
        let arcs = self
            .arcs
            .into_iter()
            .map(|(from, to, cap)| Arc {
                from,
                to,
                capacity: cap.finite().unwrap_or(infinity),
                infinite: cap.is_infinite(),
            })
            .collect();
        FlowNetwork {
            node_count: self.node_count,
            source: self.source,
            sink: self.sink,
            arcs,
            infinity,
        }
    }
}

/// Loading coefficient: 1 at the seed, 0 at the ray's last node, linear in
/// between (`m * i + b` with `m = -1 / (k - 1)`, `b = 1 - m`).
pub fn w_coeff(i: usize, k: usize) -> Result<f64> {
    if k < 2 || i < 1 || i > k {
        return Err(Error::InvalidParameter(format!(
            "layer {i} out of range for k = {k}"
        )));
    }
    // (k - i) / (k - 1) is m * i + b with the division done once
    Ok((k - i) as f64 / (k - 1) as f64)
}

/// Source and sink capacities of one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TerminalCaps {
    pub source: Capacity,
    pub sink: Capacity,
}

/// Terminal capacities along one ray from its sampled greys.
///
/// `greys[0]` is the seed grey; the result has one entry per layer.
pub fn olink_caps_for_ray(greys: &[f64], stats: &SeedStats) -> Vec<TerminalCaps> {
    let k = greys.len();
    let mut caps = Vec::with_capacity(k);
    caps.push(TerminalCaps {
        source: Capacity::Infinite,
        sink: Capacity::ZERO,
    });
    for i in 2..=k {
        let g = greys[i - 1];
        let prev = greys[i - 2];
        let caps_i = if i == k {
            TerminalCaps {
                source: Capacity::ZERO,
                sink: Capacity::Infinite,
            }
        } else {
            let here = (stats.g_avg - g).abs();
            let before = (stats.g_avg - prev).abs();
            let step = (here - before).abs();
            if stats.contains(g) || here <= before {
                let w = (k - i) as f64 / (k - 1) as f64;
                TerminalCaps {
                    source: Capacity::Finite(w * step),
                    sink: Capacity::ZERO,
                }
            } else {
                TerminalCaps {
                    source: Capacity::ZERO,
                    sink: Capacity::Finite(step),
                }
            }
        };
        caps.push(caps_i);
    }
    caps
}

/// Greys sampled at every template node, indexed by node id.
pub fn sample_node_greys(template: &Template, volume: &Volume) -> Vec<f64> {
    template
        .nodes()
        .iter()
        .map(|&p| volume.sample_trilinear(p))
        .collect()
}

/// Terminal capacities of every template node, indexed by node id.
pub fn weight_olinks(template: &Template, volume: &Volume, stats: &SeedStats) -> Vec<TerminalCaps> {
    olinks_from_greys(template, &sample_node_greys(template, volume), stats)
}

/// As [`weight_olinks`] with greys already sampled (indexed by node id).
pub fn olinks_from_greys(
    template: &Template,
    greys: &[f64],
    stats: &SeedStats,
) -> Vec<TerminalCaps> {
    let k = template.k();
    let mut out = vec![
        TerminalCaps {
            source: Capacity::ZERO,
            sink: Capacity::ZERO,
        };
        template.node_count()
    ];
    let mut ray = Vec::with_capacity(k);
    for r in 0..template.ray_count() {
        ray.clear();
        ray.extend((1..=k).map(|i| greys[template.node_id(r, i)]));
        for (i, caps) in olink_caps_for_ray(&ray, stats).into_iter().enumerate() {
            out[template.node_id(r, i + 1)] = caps;
        }
    }
    out
}

/// Template node addressed by ray and 1-based layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerNode {
    pub ray: usize,
    pub layer: usize,
}

/// Infinite inner arc between two template nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerArc {
    pub from: LayerNode,
    pub to: LayerNode,
}

/// Arcs `(r, i) -> (r, i - 1)` for every ray and every `1 < i <= k`.
pub fn add_zedges(ray_count: usize, k: usize) -> Vec<LayerArc> {
    let mut arcs = Vec::with_capacity(ray_count * (k - 1));
    for ray in 0..ray_count {
        for layer in 2..=k {
            arcs.push(LayerArc {
                from: LayerNode { ray, layer },
                to: LayerNode {
                    ray,
                    layer: layer - 1,
                },
            });
        }
    }
    arcs
}

/// Arcs `(r, i) -> (r', max(i - delta, 1))` for both orientations of every
/// adjacent ray pair and every layer `1..=k`.
///
/// Layer-1 targets all denote the shared seed node; the seed-to-seed pairs
/// are kept here and dropped when the arcs are mapped onto network nodes.
pub fn add_xyedges(neighbors: &[(usize, usize)], k: usize, delta: usize) -> Vec<LayerArc> {
    let mut arcs = Vec::with_capacity(neighbors.len() * 2 * k);
    for &(a, b) in neighbors {
        for (r, r2) in [(a, b), (b, a)] {
            for layer in 1..=k {
                arcs.push(LayerArc {
                    from: LayerNode { ray: r, layer },
                    to: LayerNode {
                        ray: r2,
                        layer: layer.saturating_sub(delta).max(1),
                    },
                });
            }
        }
    }
    arcs
}

/// Source node id of a template network (template nodes come first).
pub fn source_id(template: &Template) -> usize {
    template.node_count()
}

/// Sink node id of a template network.
pub fn sink_id(template: &Template) -> usize {
    template.node_count() + 1
}

/// Full network: o-links of every node (node-id order), then z-edges, then
/// xy-edges, each ray-major and layer-minor.
pub fn build_network(
    template: &Template,
    volume: &Volume,
    stats: &SeedStats,
    delta: usize,
) -> Result<FlowNetwork> {
    let olinks = weight_olinks(template, volume, stats);
    network_from_olinks(template, &olinks, delta)
}

/// Network assembly from precomputed terminal capacities.
pub fn network_from_olinks(
    template: &Template,
    olinks: &[TerminalCaps],
    delta: usize,
) -> Result<FlowNetwork> {
    let n_nodes = template.node_count();
    if olinks.len() != n_nodes {
        return Err(Error::InvalidParameter(format!(
            "{} terminal capacity pairs for {n_nodes} nodes",
            olinks.len()
        )));
    }
    let (s, t) = (source_id(template), sink_id(template));
    let k = template.k();
    let mut b = NetworkBuilder::new(n_nodes + 2, s, t)?;

    for (v, caps) in olinks.iter().enumerate() {
        b.add_arc(s, v, caps.source)?;
        b.add_arc(v, t, caps.sink)?;
    }
    let id = |n: LayerNode| node_id(k, n.ray, n.layer);
    for arc in add_zedges(template.ray_count(), k) {
        b.add_arc(id(arc.from), id(arc.to), Capacity::Infinite)?;
    }
    for arc in add_xyedges(template.neighbors(), k, delta) {
        let (u, v) = (id(arc.from), id(arc.to));
        if u != v {
            b.add_arc(u, v, Capacity::Infinite)?;
        }
    }
    Ok(b.finish())
}
