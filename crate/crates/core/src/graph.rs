//! Graph snapshots with opinions, and the read interface used by counting.

use crate::patterns::Opinion;

/// Read access to an opinion-labelled simple graph.
pub trait GraphView {
    fn vertex_count(&self) -> usize;
    fn opinion(&self, v: usize) -> Opinion;
    fn has_edge(&self, u: usize, v: usize) -> bool;

    /// Pushes into `out` every vertex holding `opinion` that is adjacent to
    /// `anchor` (or every such vertex if there is no anchor). The opinion
    /// filter comes first so lazily generated graphs are probed as little as
    /// possible.
    fn candidates(&self, anchor: Option<usize>, opinion: Opinion, out: &mut Vec<usize>) {
        out.clear();
        for w in 0..self.vertex_count() {
            if self.opinion(w) == opinion && anchor.is_none_or(|a| a != w && self.has_edge(a, w)) {
                out.push(w);
            }
        }
    }
}

/// A single change to a graph state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change {
    Opinion { v: usize, to: Opinion },
    Edge { u: usize, v: usize, active: bool },
}

impl Change {
    /// Tie-break key for simultaneous changes: opinions before edges, then by
    /// smallest index.
    pub fn order_key(&self) -> (u8, usize, usize) {
        match *self {
            Change::Opinion { v, .. } => (0, v, 0),
            Change::Edge { u, v, .. } => (1, u.min(v), u.max(v)),
        }
    }
}

/// A timestamped change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub change: Change,
}

pub(crate) fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| a.change.order_key().cmp(&b.change.order_key()))
    });
}

/// Snapshot of `G_n(t)`: opinions plus a symmetric bitset adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphState {
    opinions: Vec<Opinion>,
    words: usize,
    rows: Vec<u64>,
}

impl GraphState {
    /// Edgeless graph with the given opinions.
    pub fn new(opinions: Vec<Opinion>) -> Self {
        let n = opinions.len();
        let words = n.div_ceil(64).max(1);
        Self {
            opinions,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn from_edges(opinions: Vec<Opinion>, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(opinions);
        for &(u, v) in edges {
            g.set_edge(u, v, true);
        }
        g
    }

    pub fn opinions(&self) -> &[Opinion] {
        &self.opinions
    }

    pub fn set_opinion(&mut self, v: usize, o: Opinion) {
        self.opinions[v] = o;
    }

    pub fn set_edge(&mut self, u: usize, v: usize, active: bool) {
        assert!(u != v, "self-loop ({u}, {v})");
        let (wu, bu) = (u / 64, u % 64);
        let (wv, bv) = (v / 64, v % 64);
        if active {
            self.rows[u * self.words + wv] |= 1 << bv;
            self.rows[v * self.words + wu] |= 1 << bu;
        } else {
            self.rows[u * self.words + wv] &= !(1 << bv);
            self.rows[v * self.words + wu] &= !(1 << bu);
        }
    }

    pub fn apply(&mut self, change: &Change) {
        match *change {
            Change::Opinion { v, to } => self.set_opinion(v, to),
            Change::Edge { u, v, active } => self.set_edge(u, v, active),
        }
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let row = &self.rows[v * self.words..(v + 1) * self.words];
        row.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v * self.words..(v + 1) * self.words]
            .iter()
            .map(|b| b.count_ones() as usize)
            .sum()
    }

    pub fn edge_count(&self) -> usize {
        (0..self.opinions.len()).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// Active edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.opinions.len() {
            out.extend(self.neighbors(u).filter(|&v| v > u).map(|v| (u, v)));
        }
        out
    }
}

impl GraphView for GraphState {
    fn vertex_count(&self) -> usize {
        self.opinions.len()
    }

    #[inline]
    fn opinion(&self, v: usize) -> Opinion {
        self.opinions[v]
    }

    #[inline]
    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] & (1 << (v % 64)) != 0
    }

    fn candidates(&self, anchor: Option<usize>, opinion: Opinion, out: &mut Vec<usize>) {
        out.clear();
        match anchor {
            Some(a) => out.extend(self.neighbors(a).filter(|&w| self.opinions[w] == opinion)),
            None => out.extend((0..self.opinions.len()).filter(|&w| self.opinions[w] == opinion)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Opinion::{Minus as M, Plus as P};

    #[test]
    fn edges_are_symmetric_and_removable() {
        let mut g = GraphState::new(vec![P; 70]);
        g.set_edge(3, 66, true);
        g.set_edge(0, 1, true);
        assert!(g.has_edge(66, 3) && g.has_edge(3, 66));
        assert_eq!(g.edges(), vec![(0, 1), (3, 66)]);
        assert_eq!(g.neighbors(3).collect::<Vec<_>>(), vec![66]);
        g.set_edge(66, 3, false);
        assert!(!g.has_edge(3, 66));
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn candidates_filter_by_opinion() {
        let g = GraphState::from_edges(vec![P, M, P, P], &[(0, 1), (0, 2)]);
        let mut out = Vec::new();
        g.candidates(Some(0), P, &mut out);
        assert_eq!(out, vec![2]);
        g.candidates(None, P, &mut out);
        assert_eq!(out, vec![0, 2, 3]);
    }
}
