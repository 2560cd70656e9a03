//! Reference min-cut solvers, deliberately naive and independent of the
//! Boykov-Kolmogorov code path.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::netbuild::FlowNetwork;

/// Largest number of non-terminal nodes accepted by [`exhaustive_mincut`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Minimum cut by enumerating every assignment of the non-terminal nodes.
///
/// Returns the cut value and the first minimizing source set in
/// enumeration order (bit `i` of the counter puts the `i`-th non-terminal
/// node on the source side), so the all-sink assignment wins ties.
pub fn exhaustive_mincut(network: &FlowNetwork) -> Result<(f64, Vec<bool>)> {
    let (s, t) = (network.source(), network.sink());
    let inner: Vec<usize> = (0..network.node_count())
        .filter(|&v| v != s && v != t)
        .collect();
    if inner.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLargeForEnumeration(inner.len()));
    }

    let mut side = vec![false; network.node_count()];
    side[s] = true;
    let mut best = f64::INFINITY;
    let mut best_side = side.clone();
    for bits in 0u32..(1u32 << inner.len()) {
        for (i, &v) in inner.iter().enumerate() {
            side[v] = bits >> i & 1 == 1;
        }
        let value: f64 = network
            .arcs()
            .iter()
            .filter(|a| side[a.from] && !side[a.to])
            .map(|a| a.capacity)
            .sum();
        if value < best {
            best = value;
            best_side.clone_from(&side);
        }
    }
    Ok((best, best_side))
}

/// Max-flow value by shortest augmenting paths (Edmonds-Karp).
pub fn edmonds_karp(network: &FlowNetwork) -> f64 {
    let n = network.node_count();
    let (s, t) = (network.source(), network.sink());
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for a in network.arcs() {
        adj[a.from].push(to.len());
        to.push(a.to);
        cap.push(a.capacity);
        adj[a.to].push(to.len());
        to.push(a.from);
        cap.push(0.0);
    }

    let mut flow = 0.0;
    loop {
        let mut via = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &e in &adj[u] {
                let v = to[e];
                if !seen[v] && cap[e] > super::RESIDUAL_EPS {
                    seen[v] = true;
                    via[v] = e;
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let e = via[v];
            push = push.min(cap[e]);
            v = to[e ^ 1];
        }
        let mut v = t;
        while v != s {
            let e = via[v];
            cap[e] -= push;
            cap[e ^ 1] += push;
            v = to[e ^ 1];
        }
        flow += push;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netbuild::{Capacity, NetworkBuilder};

    #[test]
    fn diamond_by_enumeration() {
        let mut b = NetworkBuilder::new(4, 0, 3).unwrap();
        for (u, v, c) in [
            (0, 1, 3.0),
            (0, 2, 2.0),
            (1, 2, 1.0),
            (1, 3, 2.0),
            (2, 3, 3.0),
        ] {
            b.add_arc(u, v, Capacity::Finite(c)).unwrap();
        }
        let n = b.finish();
        let (value, side) = exhaustive_mincut(&n).unwrap();
        assert_eq!(value, 5.0);
        assert_eq!(side, vec![true, false, false, false]);
        assert_eq!(edmonds_karp(&n), 5.0);
    }

    #[test]
    fn empty_network() {
        let n = NetworkBuilder::new(2, 0, 1).unwrap().finish();
        assert_eq!(exhaustive_mincut(&n).unwrap(), (0.0, vec![true, false]));
        assert_eq!(edmonds_karp(&n), 0.0);
    }

    #[test]
    fn enumeration_limit() {
        let n = NetworkBuilder::new(23, 0, 22).unwrap().finish();
        assert!(matches!(
            exhaustive_mincut(&n),
            Err(Error::TooLargeForEnumeration(21))
        ));
    }
}
