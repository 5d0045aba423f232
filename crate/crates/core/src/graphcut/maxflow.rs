//! Boykov–Kolmogorov max-flow with search-tree reuse.
//!
//! Source and sink search trees are grown from the terminals, augmenting
//! paths are found where they touch, and trees are repaired by adopting
//! orphans instead of being rebuilt. Capacities are `f64`; a residual is
//! saturated when it reaches exactly zero, which holds for the bottleneck
//! edge of every augmentation.

use std::collections::VecDeque;

const NONE: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;
const ORPHAN: usize = usize::MAX - 2;
const INFINITE_DIST: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Sink,
}

#[derive(Clone, Debug)]
struct Node {
    first: usize,
    /// Arc to the parent in its search tree, `TERMINAL`, `ORPHAN` or `NONE`.
    parent: usize,
    ts: u64,
    dist: u32,
    is_sink: bool,
    /// Residual source capacity if positive, residual sink capacity if negative.
    tr_cap: f64,
}

#[derive(Clone, Debug)]
struct Arc {
    head: usize,
    next: usize,
    r_cap: f64,
}

#[inline]
fn sister(a: usize) -> usize {
    a ^ 1
}

/// s-t flow network over `n` nodes.
#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    /// Flow already routed directly source → node → sink by `add_tedge`.
    flow: f64,
    active: VecDeque<usize>,
    in_active: Vec<bool>,
    orphans: VecDeque<usize>,
    time: u64,
    solved: bool,
}

impl FlowNetwork {
    pub fn new(node_count: usize) -> Self {
        let mut net = FlowNetwork::default();
        for _ in 0..node_count {
            net.add_node();
        }
        net
    }

    pub fn add_node(&mut self) -> usize {
        self.nodes.push(Node {
            first: NONE,
            parent: NONE,
            ts: 0,
            dist: 0,
            is_sink: false,
            tr_cap: 0.0,
        });
        self.in_active.push(false);
        self.nodes.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Adds terminal capacities `source → i` and `i → sink`.
    pub fn add_tedge(&mut self, i: usize, mut cap_source: f64, mut cap_sink: f64) {
        debug_assert!(cap_source >= 0.0 && cap_sink >= 0.0);
        let delta = self.nodes[i].tr_cap;
        if delta > 0.0 {
            cap_source += delta;
        } else {
            cap_sink -= delta;
        }
        self.flow += cap_source.min(cap_sink);
        self.nodes[i].tr_cap = cap_source - cap_sink;
    }

    /// Adds the arc pair `i → j` (capacity `cap`) and `j → i` (`rev_cap`).
    pub fn add_edge(&mut self, i: usize, j: usize, cap: f64, rev_cap: f64) {
        debug_assert!(i != j && cap >= 0.0 && rev_cap >= 0.0);
        let a = self.arcs.len();
        self.arcs.push(Arc {
            head: j,
            next: self.nodes[i].first,
            r_cap: cap,
        });
        self.arcs.push(Arc {
            head: i,
            next: self.nodes[j].first,
            r_cap: rev_cap,
        });
        self.nodes[i].first = a;
        self.nodes[j].first = a + 1;
    }

    fn set_active(&mut self, i: usize) {
        if !self.in_active[i] {
            self.in_active[i] = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            self.in_active[i] = false;
            if self.nodes[i].parent != NONE {
                return Some(i);
            }
        }
        None
    }

    fn set_orphan_front(&mut self, i: usize) {
        self.nodes[i].parent = ORPHAN;
        self.orphans.push_front(i);
    }

    fn set_orphan_rear(&mut self, i: usize) {
        self.nodes[i].parent = ORPHAN;
        self.orphans.push_back(i);
    }

    /// Computes the maximum flow. The minimum cut is then available through
    /// [`FlowNetwork::side`].
    pub fn max_flow(&mut self) -> f64 {
        if self.solved {
            return self.flow;
        }
        for i in 0..self.nodes.len() {
            let n = &mut self.nodes[i];
            n.ts = 0;
            if n.tr_cap > 0.0 {
                n.is_sink = false;
                n.parent = TERMINAL;
                n.dist = 1;
                self.set_active(i);
            } else if n.tr_cap < 0.0 {
                n.is_sink = true;
                n.parent = TERMINAL;
                n.dist = 1;
                self.set_active(i);
            } else {
                n.parent = NONE;
            }
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current.take() {
                Some(i) => {
                    self.in_active[i] = false;
                    if self.nodes[i].parent == NONE {
                        None
                    } else {
                        Some(i)
                    }
                }
                None => None,
            };
            let i = match i.or_else(|| self.next_active()) {
                Some(i) => i,
                None => break,
            };

            let middle = self.grow(i);
            self.time += 1;

            if let Some(a) = middle {
                // keep growing from the same node next round
                self.in_active[i] = true;
                current = Some(i);
                self.augment(a);
                while let Some(o) = self.orphans.pop_front() {
                    if self.nodes[o].is_sink {
                        self.process_sink_orphan(o);
                    } else {
                        self.process_source_orphan(o);
                    }
                }
            }
        }
        self.solved = true;
        self.flow
    }

    /// Grows the tree of `i`; returns the source→sink arc joining the trees.
    fn grow(&mut self, i: usize) -> Option<usize> {
        let (ts, dist, is_sink) = {
            let n = &self.nodes[i];
            (n.ts, n.dist, n.is_sink)
        };
        let mut a = self.nodes[i].first;
        while a != NONE {
            let next = self.arcs[a].next;
            let cap = if is_sink { self.arcs[sister(a)].r_cap } else { self.arcs[a].r_cap };
            if cap > 0.0 {
                let j = self.arcs[a].head;
                if self.nodes[j].parent == NONE {
                    let nj = &mut self.nodes[j];
                    nj.is_sink = is_sink;
                    nj.parent = sister(a);
                    nj.ts = ts;
                    nj.dist = dist + 1;
                    self.set_active(j);
                } else if self.nodes[j].is_sink != is_sink {
                    return Some(if is_sink { sister(a) } else { a });
                } else if self.nodes[j].ts <= ts && self.nodes[j].dist > dist {
                    let nj = &mut self.nodes[j];
                    nj.parent = sister(a);
                    nj.ts = ts;
                    nj.dist = dist + 1;
                }
            }
            a = next;
        }
        None
    }

    fn augment(&mut self, middle: usize) {
        // bottleneck
        let mut bottleneck = self.arcs[middle].r_cap;
        let mut i = self.arcs[sister(middle)].head;
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[sister(a)].r_cap);
            i = self.arcs[a].head;
        }
        bottleneck = bottleneck.min(self.nodes[i].tr_cap);
        let mut i = self.arcs[middle].head;
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[a].r_cap);
            i = self.arcs[a].head;
        }
        bottleneck = bottleneck.min(-self.nodes[i].tr_cap);

        // push
        self.arcs[sister(middle)].r_cap += bottleneck;
        self.arcs[middle].r_cap -= bottleneck;

        let mut i = self.arcs[sister(middle)].head;
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                break;
            }
            self.arcs[a].r_cap += bottleneck;
            self.arcs[sister(a)].r_cap -= bottleneck;
            if self.arcs[sister(a)].r_cap <= 0.0 {
                self.arcs[sister(a)].r_cap = 0.0;
                self.set_orphan_front(i);
            }
            i = self.arcs[a].head;
        }
        self.nodes[i].tr_cap -= bottleneck;
        if self.nodes[i].tr_cap <= 0.0 {
            self.nodes[i].tr_cap = 0.0;
            self.set_orphan_front(i);
        }

        let mut i = self.arcs[middle].head;
        loop {
            let a = self.nodes[i].parent;
            if a == TERMINAL {
                break;
            }
            self.arcs[sister(a)].r_cap += bottleneck;
            self.arcs[a].r_cap -= bottleneck;
            if self.arcs[a].r_cap <= 0.0 {
                self.arcs[a].r_cap = 0.0;
                self.set_orphan_front(i);
            }
            i = self.arcs[a].head;
        }
        self.nodes[i].tr_cap += bottleneck;
        if self.nodes[i].tr_cap >= 0.0 {
            self.nodes[i].tr_cap = 0.0;
            self.set_orphan_front(i);
        }

        self.flow += bottleneck;
    }

    /// Distance from `j` to its terminal, or `None` if its path hits an
    /// orphan. Stamps visited nodes with the current time.
    fn origin_distance(&mut self, mut j: usize) -> Option<u32> {
        let mut d: u32 = 0;
        loop {
            if self.nodes[j].ts == self.time {
                return Some(d + self.nodes[j].dist);
            }
            let a = self.nodes[j].parent;
            d += 1;
            if a == TERMINAL {
                self.nodes[j].ts = self.time;
                self.nodes[j].dist = 1;
                return Some(d);
            }
            if a == ORPHAN {
                return None;
            }
            j = self.arcs[a].head;
        }
    }

    fn process_orphan(&mut self, i: usize, sink_tree: bool) {
        let mut best_arc = NONE;
        let mut best_dist = INFINITE_DIST;

        let mut a0 = self.nodes[i].first;
        while a0 != NONE {
            // residual capacity toward i from the candidate parent
            let cap = if sink_tree { self.arcs[a0].r_cap } else { self.arcs[sister(a0)].r_cap };
            let j = self.arcs[a0].head;
            if cap > 0.0 && self.nodes[j].is_sink == sink_tree && self.nodes[j].parent != NONE {
                if let Some(mut d) = self.origin_distance(j) {
                    if d < best_dist {
                        best_arc = a0;
                        best_dist = d;
                    }
                    let mut j = j;
                    while self.nodes[j].ts != self.time {
                        self.nodes[j].ts = self.time;
                        self.nodes[j].dist = d;
                        d -= 1;
                        j = self.arcs[self.nodes[j].parent].head;
                    }
                }
            }
            a0 = self.arcs[a0].next;
        }

        self.nodes[i].parent = best_arc;
        if best_arc != NONE {
            self.nodes[i].ts = self.time;
            self.nodes[i].dist = best_dist + 1;
            return;
        }

        // i becomes free; its children become orphans
        let mut a0 = self.nodes[i].first;
        while a0 != NONE {
            let j = self.arcs[a0].head;
            let a = self.nodes[j].parent;
            if self.nodes[j].is_sink == sink_tree && a != NONE {
                let cap = if sink_tree { self.arcs[a0].r_cap } else { self.arcs[sister(a0)].r_cap };
                if cap > 0.0 {
                    self.set_active(j);
                }
                if a != TERMINAL && a != ORPHAN && self.arcs[a].head == i {
                    self.set_orphan_rear(j);
                }
            }
            a0 = self.arcs[a0].next;
        }
    }

    fn process_source_orphan(&mut self, i: usize) {
        self.process_orphan(i, false);
    }

    fn process_sink_orphan(&mut self, i: usize) {
        self.process_orphan(i, true);
    }

    /// Side of the minimum cut a node falls on. Nodes reachable from
    /// neither tree are reported on the source side.
    pub fn side(&self, i: usize) -> Side {
        let n = &self.nodes[i];
        if n.parent != NONE && n.is_sink {
            Side::Sink
        } else {
            Side::Source
        }
    }
}

/// Maximum flow value and the source/sink side of each node.
pub fn max_flow(net: &mut FlowNetwork) -> (f64, Vec<Side>) {
    let flow = net.max_flow();
    let sides = (0..net.node_count()).map(|i| net.side(i)).collect();
    (flow, sides)
}
