//! Maximum flow / minimum s-t cut.
//!
//! [`bk_maxflow`] is the production solver. [`reference`] holds slow,
//! independent solvers used to cross-check it.

mod bk;
pub mod reference;

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::netbuild::FlowNetwork;

use bk::BkGraph;

/// Residual capacities at or below this are treated as saturated.
pub const RESIDUAL_EPS: f64 = 1e-12;

/// Result of a max-flow computation, per network arc in arc order plus the
/// total flow value.
///
/// `arc_flow` is accumulated by the solver rather than derived from
/// `capacity - residual`, which loses precision on arcs with very large
/// capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub residual: Vec<f64>,
    pub arc_flow: Vec<f64>,
    pub flow: f64,
}

enum Route {
    Inner(usize),
    FromSource(usize),
    ToSink(usize),
    Direct,
    Unused,
}

fn validate(network: &FlowNetwork) -> Result<()> {
    for (i, a) in network.arcs().iter().enumerate() {
        if !(a.capacity.is_finite() && a.capacity >= 0.0) {
            return Err(Error::InvalidCapacity {
                arc: i,
                capacity: a.capacity,
            });
        }
    }
    Ok(())
}

/// Maximum flow from source to sink by the Boykov-Kolmogorov algorithm.
///
/// Arcs into the source, out of the sink, and self-loops never carry flow.
/// The result only depends on the network (arc order included).
pub fn bk_maxflow(network: &FlowNetwork) -> Result<FlowState> {
    validate(network)?;
    let (s, t) = (network.source(), network.sink());
    let n = network.node_count();

    // non-terminal nodes are renumbered densely
    let mut inner = vec![usize::MAX; n];
    let mut count = 0;
    for (v, slot) in inner.iter_mut().enumerate() {
        if v != s && v != t {
            *slot = count;
            count += 1;
        }
    }

    let mut g = BkGraph::new(count);
    let mut cap_source = vec![0.0; count];
    let mut cap_sink = vec![0.0; count];
    let mut direct = 0.0;
    let mut routes = Vec::with_capacity(network.arcs().len());
    for a in network.arcs() {
        let route = if a.from == a.to || a.to == s || a.from == t {
            Route::Unused
        } else if a.from == s && a.to == t {
            direct += a.capacity;
            Route::Direct
        } else if a.from == s {
            cap_source[inner[a.to]] += a.capacity;
            Route::FromSource(inner[a.to])
        } else if a.to == t {
            cap_sink[inner[a.from]] += a.capacity;
            Route::ToSink(inner[a.from])
        } else {
            Route::Inner(g.add_edge(inner[a.from], inner[a.to], a.capacity))
        };
        routes.push(route);
    }
    for v in 0..count {
        if cap_source[v] != 0.0 || cap_sink[v] != 0.0 {
            g.add_tweights(v, cap_source[v], cap_sink[v]);
        }
    }

    g.solve();

    // terminal flow per node, handed out to parallel terminal arcs in order
    let mut source_flow: Vec<f64> = (0..count)
        .map(|v| cap_source[v] - g.tr_cap[v].max(0.0))
        .collect();
    let mut sink_flow: Vec<f64> = (0..count)
        .map(|v| cap_sink[v] - (-g.tr_cap[v]).max(0.0))
        .collect();
    let take = |pool: &mut f64, cap: f64| {
        let f = pool.min(cap).max(0.0);
        *pool -= f;
        (cap - f, f)
    };
    let (residual, arc_flow) = network
        .arcs()
        .iter()
        .zip(&routes)
        .map(|(a, route)| match *route {
            // the sister arc starts empty, so its residual is the flow
            Route::Inner(e) => (g.rcap[e], g.rcap[e ^ 1]),
            Route::FromSource(v) => take(&mut source_flow[v], a.capacity),
            Route::ToSink(v) => take(&mut sink_flow[v], a.capacity),
            Route::Direct => (0.0, a.capacity),
            Route::Unused => (a.capacity, 0.0),
        })
        .unzip();

    Ok(FlowState {
        residual,
        arc_flow,
        flow: g.flow + direct,
    })
}

/// Source side of the minimum cut: the source plus every node reachable
/// from it through arcs with residual capacity. This is the smallest
/// source set among all minimum cuts.
pub fn min_cut_partition(network: &FlowNetwork, state: &FlowState) -> Vec<bool> {
    let n = network.node_count();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for ((a, r), f) in network
        .arcs()
        .iter()
        .zip(&state.residual)
        .zip(&state.arc_flow)
    {
        if *r > RESIDUAL_EPS {
            adj[a.from].push(a.to);
        }
        if *f > RESIDUAL_EPS {
            adj[a.to].push(a.from);
        }
    }
    let mut in_source = vec![false; n];
    let mut queue = VecDeque::from([network.source()]);
    in_source[network.source()] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !in_source[v] {
                in_source[v] = true;
                queue.push_back(v);
            }
        }
    }
    in_source
}

/// Total capacity of arcs leaving the source set.
pub fn cut_capacity(network: &FlowNetwork, in_source: &[bool]) -> f64 {
    network
        .arcs()
        .iter()
        .filter(|a| in_source[a.from] && !in_source[a.to])
        .map(|a| a.capacity)
        .sum()
}
