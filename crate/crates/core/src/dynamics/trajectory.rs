use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;

use super::edge::{sample_edge_history, EdgeHistory};
use super::params::OneWayParams;
use super::path::{simulate_opinion_path, OpinionPath};
use super::Trajectory;
use crate::error::Result;
use crate::graph::{sort_events, Change, Event, GraphState, GraphView};
use crate::patterns::Opinion;
use crate::rng::ReplicationSeed;

/// Above this many vertices edge histories live in a hash map instead of a
/// dense per-pair table.
const DENSE_EDGE_LIMIT: usize = 1024;

enum EdgeStore {
    Dense(Vec<OnceCell<EdgeHistory>>),
    Sparse(RefCell<HashMap<(usize, usize), EdgeHistory>>),
}

/// One realization of the one-way model.
///
/// Opinion paths are sampled up front. Each edge's full ring sequence is
/// sampled from its own stream the first time the edge is touched and then
/// cached, so the realization does not depend on which edges are queried or
/// in what order. Not `Sync`: one trajectory belongs to one worker.
pub struct OneWayTrajectory {
    params: OneWayParams,
    seed: ReplicationSeed,
    paths: Vec<OpinionPath>,
    edges: EdgeStore,
}

impl std::fmt::Debug for OneWayTrajectory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OneWayTrajectory")
            .field("params", &self.params)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

#[inline]
fn pair_index(n: usize, u: usize, v: usize) -> usize {
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

pub fn build_one_way_trajectory(params: &OneWayParams, seed: ReplicationSeed) -> Result<OneWayTrajectory> {
    params.validate()?;
    let paths = (0..params.n)
        .map(|v| simulate_opinion_path(params, &mut seed.vertex(v)))
        .collect();
    Ok(OneWayTrajectory::from_paths(*params, seed, paths))
}

impl OneWayTrajectory {
    /// Builds a trajectory around given opinion paths; edges are still drawn
    /// from the seed's edge streams.
    pub fn from_paths(params: OneWayParams, seed: ReplicationSeed, paths: Vec<OpinionPath>) -> Self {
        let n = paths.len();
        let edges = if n <= DENSE_EDGE_LIMIT {
            EdgeStore::Dense((0..n * n.saturating_sub(1) / 2).map(|_| OnceCell::new()).collect())
        } else {
            EdgeStore::Sparse(RefCell::new(HashMap::new()))
        };
        Self {
            params: OneWayParams { n, ..params },
            seed,
            paths,
            edges,
        }
    }

    pub fn params(&self) -> &OneWayParams {
        &self.params
    }

    pub fn path(&self, v: usize) -> &OpinionPath {
        &self.paths[v]
    }

    pub fn paths(&self) -> &[OpinionPath] {
        &self.paths
    }

    fn generate(&self, u: usize, v: usize) -> EdgeHistory {
        sample_edge_history(&self.params, &self.paths[u], &self.paths[v], &mut self.seed.edge(u, v))
    }

    /// Runs `f` on the history of edge `{u, v}`, generating it if needed.
    pub fn with_edge<T>(&self, u: usize, v: usize, f: impl FnOnce(&EdgeHistory) -> T) -> T {
        assert!(u != v, "no self-loops");
        let (a, b) = (u.min(v), u.max(v));
        match &self.edges {
            EdgeStore::Dense(cells) => {
                let cell = &cells[pair_index(self.paths.len(), a, b)];
                f(cell.get_or_init(|| self.generate(a, b)))
            }
            EdgeStore::Sparse(map) => {
                if let Some(h) = map.borrow().get(&(a, b)) {
                    return f(h);
                }
                let h = self.generate(a, b);
                let out = f(&h);
                map.borrow_mut().insert((a, b), h);
                out
            }
        }
    }

    #[inline]
    pub fn edge_active(&self, u: usize, v: usize, t: f64) -> bool {
        self.with_edge(u, v, |h| h.active_at(t))
    }

    /// Lazy view of `G_n(t)`: edges are generated only when probed.
    pub fn view_at(&self, t: f64) -> Result<OneWayView<'_>> {
        self.check_time(t)?;
        Ok(OneWayView {
            traj: self,
            t,
            opinions: self.paths.iter().map(|p| p.opinion_at(t)).collect(),
        })
    }
}

impl Trajectory for OneWayTrajectory {
    fn vertex_count(&self) -> usize {
        self.paths.len()
    }

    fn horizon(&self) -> f64 {
        self.params.horizon
    }

    fn initial_state(&self) -> GraphState {
        self.materialize(0.0)
    }

    fn events(&self) -> Vec<Event> {
        let n = self.paths.len();
        let mut events = Vec::new();
        for (v, path) in self.paths.iter().enumerate() {
            let mut o = path.initial;
            for &f in &path.flips {
                o = o.flip();
                events.push(Event {
                    time: f,
                    change: Change::Opinion { v, to: o },
                });
            }
        }
        for u in 0..n {
            for v in u + 1..n {
                self.with_edge(u, v, |h| {
                    events.extend(h.changes().map(|(time, active)| Event {
                        time,
                        change: Change::Edge { u, v, active },
                    }))
                });
            }
        }
        sort_events(&mut events);
        events
    }

    fn state_at(&self, t: f64) -> Result<GraphState> {
        self.check_time(t)?;
        Ok(self.materialize(t))
    }
}

impl OneWayTrajectory {
    fn materialize(&self, t: f64) -> GraphState {
        let n = self.paths.len();
        let mut g = GraphState::new(self.paths.iter().map(|p| p.opinion_at(t)).collect());
        for u in 0..n {
            for v in u + 1..n {
                if self.edge_active(u, v, t) {
                    g.set_edge(u, v, true);
                }
            }
        }
        g
    }
}

/// `G_n(t)` of a one-way trajectory, read lazily.
pub struct OneWayView<'a> {
    traj: &'a OneWayTrajectory,
    t: f64,
    opinions: Vec<Opinion>,
}

impl OneWayView<'_> {
    pub fn time(&self) -> f64 {
        self.t
    }
}

impl GraphView for OneWayView<'_> {
    fn vertex_count(&self) -> usize {
        self.opinions.len()
    }

    #[inline]
    fn opinion(&self, v: usize) -> Opinion {
        self.opinions[v]
    }

    #[inline]
    fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.traj.edge_active(u, v, self.t)
    }
}
