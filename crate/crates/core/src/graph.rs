//! Shortest paths and reachability on sub-networks of an instance.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::Instance;

pub(crate) const NO_EDGE: usize = usize::MAX;

pub struct ShortestPaths {
    pub dist: Vec<f64>,
    /// Edge used to reach each node, `usize::MAX` for the source and for
    /// unreached nodes.
    pub pred: Vec<usize>,
}

impl ShortestPaths {
    /// Node sequence from the source to `t`, if reached.
    pub fn path_to(&self, inst: &Instance, t: usize) -> Option<Vec<usize>> {
        if !self.dist[t].is_finite() {
            return None;
        }
        let mut path = vec![t];
        let mut cur = t;
        while self.pred[cur] != NO_EDGE {
            cur = inst.edges[self.pred[cur]].other(cur);
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq, PartialOrd)]
struct Key(f64, usize);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Dijkstra from `source` over the edges accepted by `edge_ok`.
pub fn dijkstra(inst: &Instance, source: usize, edge_ok: &dyn Fn(usize) -> bool) -> ShortestPaths {
    let n = inst.nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_EDGE; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse(Key(0.0, source)));
    while let Some(Reverse(Key(d, i))) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        for &k in inst.incident(i) {
            if !edge_ok(k) {
                continue;
            }
            let j = inst.edges[k].other(i);
            let nd = d + inst.edges[k].length;
            if nd < dist[j] {
                dist[j] = nd;
                pred[j] = k;
                heap.push(Reverse(Key(nd, j)));
            }
        }
    }
    ShortestPaths { dist, pred }
}

/// Nodes reachable from `source` over accepted edges (depth-first).
pub fn component(inst: &Instance, source: usize, edge_ok: &dyn Fn(usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; inst.nodes.len()];
    let mut stack = vec![source];
    seen[source] = true;
    while let Some(i) = stack.pop() {
        for &k in inst.incident(i) {
            let j = inst.edges[k].other(i);
            if edge_ok(k) && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

pub fn is_connected(inst: &Instance) -> bool {
    inst.nodes.is_empty() || component(inst, 0, &|_| true).iter().all(|&b| b)
}
