//! Boykov-Kolmogorov augmenting-path max-flow.
//!
//! Two search trees grow from the terminals (grow), a path found where they
//! touch is saturated (augment), and nodes cut off from their tree by
//! saturated arcs look for a new parent or are freed (adopt). Trees persist
//! across iterations. Distance and timestamp marks steer adoption toward
//! short paths to the terminal.

use std::collections::VecDeque;

use super::RESIDUAL_EPS;

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parent {
    Free,
    Terminal,
    Orphan,
    /// Arc from the node to its parent.
    Arc(usize),
}

/// Residual graph over non-terminal nodes. Arcs come in pairs `a`, `a ^ 1`.
pub(crate) struct BkGraph {
    head: Vec<usize>,
    next: Vec<usize>,
    first: Vec<usize>,
    pub(crate) rcap: Vec<f64>,
    /// Residual source capacity when positive, residual sink capacity when
    /// negative.
    pub(crate) tr_cap: Vec<f64>,
    pub(crate) flow: f64,
}

impl BkGraph {
    pub(crate) fn new(nodes: usize) -> Self {
        BkGraph {
            head: Vec::new(),
            next: Vec::new(),
            first: vec![NONE; nodes],
            rcap: Vec::new(),
            tr_cap: vec![0.0; nodes],
            flow: 0.0,
        }
    }

    /// Adds `u -> v` with capacity `cap` (and a zero-capacity sister);
    /// returns the forward arc index.
    pub(crate) fn add_edge(&mut self, u: usize, v: usize, cap: f64) -> usize {
        let a = self.head.len();
        self.head.push(v);
        self.next.push(self.first[u]);
        self.first[u] = a;
        self.rcap.push(cap);

        self.head.push(u);
        self.next.push(self.first[v]);
        self.first[v] = a + 1;
        self.rcap.push(0.0);
        a
    }

    /// Adds terminal capacities; the common part flows straight through.
    pub(crate) fn add_tweights(&mut self, v: usize, cap_source: f64, cap_sink: f64) {
        let mut cs = cap_source;
        let mut ct = cap_sink;
        let delta = self.tr_cap[v];
        if delta > 0.0 {
            cs += delta;
        } else {
            ct -= delta;
        }
        self.flow += cs.min(ct);
        self.tr_cap[v] = cs - ct;
    }

    #[inline]
    fn tail(&self, a: usize) -> usize {
        self.head[a ^ 1]
    }

    pub(crate) fn solve(&mut self) {
        Solver::new(self).run();
    }
}

struct Solver<'g> {
    g: &'g mut BkGraph,
    parent: Vec<Parent>,
    is_sink: Vec<bool>,
    ts: Vec<u64>,
    dist: Vec<u32>,
    in_queue: Vec<bool>,
    active: VecDeque<usize>,
    orphans: VecDeque<usize>,
    time: u64,
}

impl<'g> Solver<'g> {
    fn new(g: &'g mut BkGraph) -> Self {
        let n = g.first.len();
        Solver {
            g,
            parent: vec![Parent::Free; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            in_queue: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
        }
    }

    fn set_active(&mut self, v: usize) {
        if !self.in_queue[v] {
            self.in_queue[v] = true;
            self.active.push_back(v);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(v) = self.active.pop_front() {
            self.in_queue[v] = false;
            if self.parent[v] != Parent::Free {
                return Some(v);
            }
        }
        None
    }

    fn run(&mut self) {
        for v in 0..self.g.first.len() {
            let tr = self.g.tr_cap[v];
            if tr > RESIDUAL_EPS {
                self.is_sink[v] = false;
            } else if tr < -RESIDUAL_EPS {
                self.is_sink[v] = true;
            } else {
                continue;
            }
            self.parent[v] = Parent::Terminal;
            self.ts[v] = 0;
            self.dist[v] = 1;
            self.set_active(v);
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current.take() {
                Some(i) if self.parent[i] != Parent::Free => i,
                _ => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };

            let bridge = self.grow(i);
            self.time += 1;

            if let Some(a) = bridge {
                self.augment(a);
                self.adopt();
                current = Some(i);
            }
        }
    }

    /// Expands the tree of `i` by one node's neighborhood. Returns an arc
    /// oriented source-tree to sink-tree when the trees meet.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let sink_side = self.is_sink[i];
        let mut a = self.g.first[i];
        while a != NONE {
            // source tree pushes along a, sink tree pulls along a ^ 1
            let cap = if sink_side {
                self.g.rcap[a ^ 1]
            } else {
                self.g.rcap[a]
            };
            if cap > RESIDUAL_EPS {
                let j = self.g.head[a];
                match self.parent[j] {
                    Parent::Free => {
                        self.is_sink[j] = sink_side;
                        self.parent[j] = Parent::Arc(a ^ 1);
                        self.ts[j] = self.ts[i];
                        self.dist[j] = self.dist[i] + 1;
                        self.set_active(j);
                    }
                    _ if self.is_sink[j] != sink_side => {
                        return Some(if sink_side { a ^ 1 } else { a });
                    }
                    _ => {
                        if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                            self.parent[j] = Parent::Arc(a ^ 1);
                            self.ts[j] = self.ts[i];
                            self.dist[j] = self.dist[i] + 1;
                        }
                    }
                }
            }
            a = self.g.next[a];
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        let g = &mut *self.g;
        let mut bottleneck = g.rcap[middle];

        let mut v = g.tail(middle);
        loop {
            match self.parent[v] {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(g.rcap[a ^ 1]);
                    v = g.head[a];
                }
                Parent::Terminal => {
                    bottleneck = bottleneck.min(g.tr_cap[v]);
                    break;
                }
                p => unreachable!("source path through {p:?} node"),
            }
        }
        let mut v = g.head[middle];
        loop {
            match self.parent[v] {
                Parent::Arc(a) => {
                    bottleneck = bottleneck.min(g.rcap[a]);
                    v = g.head[a];
                }
                Parent::Terminal => {
                    bottleneck = bottleneck.min(-g.tr_cap[v]);
                    break;
                }
                p => unreachable!("sink path through {p:?} node"),
            }
        }

        g.rcap[middle ^ 1] += bottleneck;
        g.rcap[middle] -= bottleneck;

        let mut v = g.tail(middle);
        loop {
            match self.parent[v] {
                Parent::Arc(a) => {
                    g.rcap[a] += bottleneck;
                    g.rcap[a ^ 1] -= bottleneck;
                    let next = g.head[a];
                    if g.rcap[a ^ 1] <= RESIDUAL_EPS {
                        self.parent[v] = Parent::Orphan;
                        self.orphans.push_front(v);
                    }
                    v = next;
                }
                _ => {
                    g.tr_cap[v] -= bottleneck;
                    if g.tr_cap[v] <= RESIDUAL_EPS {
                        self.parent[v] = Parent::Orphan;
                        self.orphans.push_front(v);
                    }
                    break;
                }
            }
        }
        let mut v = g.head[middle];
        loop {
            match self.parent[v] {
                Parent::Arc(a) => {
                    g.rcap[a ^ 1] += bottleneck;
                    g.rcap[a] -= bottleneck;
                    let next = g.head[a];
                    if g.rcap[a] <= RESIDUAL_EPS {
                        self.parent[v] = Parent::Orphan;
                        self.orphans.push_front(v);
                    }
                    v = next;
                }
                _ => {
                    g.tr_cap[v] += bottleneck;
                    if g.tr_cap[v] >= -RESIDUAL_EPS {
                        self.parent[v] = Parent::Orphan;
                        self.orphans.push_front(v);
                    }
                    break;
                }
            }
        }

        g.flow += bottleneck;
    }

    fn adopt(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i);
        }
    }

    /// Distance from `j` to its terminal along parent arcs, or `None` when
    /// the path hits an orphan. Marks along the way are refreshed by the
    /// caller.
    fn origin_distance(&mut self, mut j: usize) -> Option<u32> {
        let mut d = 0u32;
        loop {
            if self.ts[j] == self.time {
                return Some(d + self.dist[j]);
            }
            d += 1;
            match self.parent[j] {
                Parent::Terminal => {
                    self.ts[j] = self.time;
                    self.dist[j] = 1;
                    return Some(d);
                }
                Parent::Arc(a) => j = self.g.head[a],
                Parent::Orphan | Parent::Free => return None,
            }
        }
    }

    fn process_orphan(&mut self, i: usize) {
        let sink_side = self.is_sink[i];
        let mut best: Option<(usize, u32)> = None;

        let mut a0 = self.g.first[i];
        while a0 != NONE {
            // source orphans need capacity j -> i, sink orphans i -> j
            let cap = if sink_side {
                self.g.rcap[a0]
            } else {
                self.g.rcap[a0 ^ 1]
            };
            let j = self.g.head[a0];
            if cap > RESIDUAL_EPS
                && self.is_sink[j] == sink_side
                && !matches!(self.parent[j], Parent::Free)
            {
                if let Some(d) = self.origin_distance(j) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((a0, d));
                    }
                    let mut d = d;
                    let mut k = j;
                    while self.ts[k] != self.time {
                        self.ts[k] = self.time;
                        self.dist[k] = d;
                        d -= 1;
                        match self.parent[k] {
                            Parent::Arc(a) => k = self.g.head[a],
                            _ => break,
                        }
                    }
                }
            }
            a0 = self.g.next[a0];
        }

        if let Some((a, d)) = best {
            self.parent[i] = Parent::Arc(a);
            self.ts[i] = self.time;
            self.dist[i] = d + 1;
            return;
        }

        self.parent[i] = Parent::Free;
        let mut a0 = self.g.first[i];
        while a0 != NONE {
            let j = self.g.head[a0];
            if self.is_sink[j] == sink_side && !matches!(self.parent[j], Parent::Free) {
                let cap = if sink_side {
                    self.g.rcap[a0]
                } else {
                    self.g.rcap[a0 ^ 1]
                };
                if cap > RESIDUAL_EPS {
                    self.set_active(j);
                }
                if let Parent::Arc(a) = self.parent[j] {
                    if self.g.head[a] == i {
                        self.parent[j] = Parent::Orphan;
                        self.orphans.push_back(j);
                    }
                }
            }
            a0 = self.g.next[a0];
        }
    }
}
