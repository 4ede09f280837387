use rand::Rng;
use rand_distr::Exp1;

use super::params::TwoWayParams;
use super::Trajectory;
use crate::error::Result;
use crate::graph::{Change, Event, GraphState, GraphView};
use crate::patterns::Opinion;
use crate::rng::{ReplicationSeed, StreamRng};

/// Event-driven simulator of the two-way model.
///
/// All clocks are merged into one Poisson stream of constant total rate
/// `beta n + n(n-1)/2`: each event is a vertex clock with probability
/// `beta n / total` (uniform vertex) and otherwise an edge clock (uniform
/// pair). Because the total rate never changes this is exact and needs no
/// event queue. Neighbour lists with a position table give O(1) uniform
/// neighbour picks and O(1) edge toggles.
pub struct TwoWayEngine {
    params: TwoWayParams,
    rng: StreamRng,
    opinions: Vec<Opinion>,
    adjacent: Vec<bool>,
    neighbors: Vec<Vec<u32>>,
    position: Vec<u32>,
    now: f64,
    next_event: f64,
    total_rate: f64,
    vertex_rate: f64,
}

impl TwoWayEngine {
    /// Draws the initial state from the replication stream: opinions in
    /// vertex order, then edges in lexicographic pair order.
    pub fn new(params: &TwoWayParams, seed: ReplicationSeed) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let mut rng = seed.stream();
        let opinions: Vec<Opinion> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < params.q0 {
                    Opinion::Plus
                } else {
                    Opinion::Minus
                }
            })
            .collect();
        let vertex_rate = params.beta * n as f64;
        let total_rate = vertex_rate + (n * (n - 1) / 2) as f64;
        let mut engine = Self {
            params: *params,
            rng,
            opinions,
            adjacent: vec![false; n * n],
            neighbors: vec![Vec::new(); n],
            position: vec![0; n * n],
            now: 0.0,
            next_event: f64::INFINITY,
            total_rate,
            vertex_rate,
        };
        for u in 0..n {
            for v in u + 1..n {
                if engine.rng.random::<f64>() < params.p0 {
                    engine.toggle(u, v);
                }
            }
        }
        engine.next_event = engine.draw_gap();
        Ok(engine)
    }

    fn draw_gap(&mut self) -> f64 {
        if self.total_rate > 0.0 {
            let e: f64 = self.rng.sample(Exp1);
            e / self.total_rate
        } else {
            f64::INFINITY
        }
    }

    fn toggle(&mut self, u: usize, v: usize) {
        let n = self.params.n;
        if self.adjacent[u * n + v] {
            self.adjacent[u * n + v] = false;
            self.adjacent[v * n + u] = false;
            self.detach(u, v);
            self.detach(v, u);
        } else {
            self.adjacent[u * n + v] = true;
            self.adjacent[v * n + u] = true;
            self.position[u * n + v] = self.neighbors[u].len() as u32;
            self.neighbors[u].push(v as u32);
            self.position[v * n + u] = self.neighbors[v].len() as u32;
            self.neighbors[v].push(u as u32);
        }
    }

    fn detach(&mut self, u: usize, v: usize) {
        let n = self.params.n;
        let i = self.position[u * n + v] as usize;
        let list = &mut self.neighbors[u];
        list.swap_remove(i);
        if let Some(&moved) = list.get(i) {
            self.position[u * n + moved as usize] = i as u32;
        }
    }

    pub fn params(&self) -> &TwoWayParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.now
    }

    pub fn opinions(&self) -> &[Opinion] {
        &self.opinions
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// Processes every event up to and including time `t`, reporting the
    /// effective changes. An isolated vertex whose clock rings keeps its
    /// opinion.
    pub fn advance_to(&mut self, t: f64, mut on_change: impl FnMut(f64, Change)) {
        let n = self.params.n;
        while self.next_event <= t {
            let time = self.next_event;
            if self.rng.random::<f64>() * self.total_rate < self.vertex_rate {
                let v = self.rng.random_range(0..n);
                let deg = self.neighbors[v].len();
                if deg > 0 {
                    let w = self.neighbors[v][self.rng.random_range(0..deg)] as usize;
                    let to = self.opinions[w];
                    if to != self.opinions[v] {
                        self.opinions[v] = to;
                        on_change(time, Change::Opinion { v, to });
                    }
                }
            } else {
                let u = self.rng.random_range(0..n);
                let mut v = self.rng.random_range(0..n - 1);
                if v >= u {
                    v += 1;
                }
                let p = self.params.ring_probability(self.opinions[u], self.opinions[v]);
                let active = self.rng.random::<f64>() < p;
                if active != self.adjacent[u * n + v] {
                    self.toggle(u, v);
                    on_change(
                        time,
                        Change::Edge {
                            u: u.min(v),
                            v: u.max(v),
                            active,
                        },
                    );
                }
            }
            self.next_event = time + self.draw_gap();
        }
        self.now = self.now.max(t);
    }

    pub fn snapshot(&self) -> GraphState {
        let mut g = GraphState::new(self.opinions.clone());
        for (u, list) in self.neighbors.iter().enumerate() {
            for &v in list {
                if (v as usize) > u {
                    g.set_edge(u, v as usize, true);
                }
            }
        }
        g
    }
}

impl GraphView for TwoWayEngine {
    fn vertex_count(&self) -> usize {
        self.params.n
    }

    #[inline]
    fn opinion(&self, v: usize) -> Opinion {
        self.opinions[v]
    }

    #[inline]
    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacent[u * self.params.n + v]
    }

    fn candidates(&self, anchor: Option<usize>, opinion: Opinion, out: &mut Vec<usize>) {
        out.clear();
        match anchor {
            Some(a) => out.extend(
                self.neighbors[a]
                    .iter()
                    .map(|&w| w as usize)
                    .filter(|&w| self.opinions[w] == opinion),
            ),
            None => out.extend((0..self.params.n).filter(|&w| self.opinions[w] == opinion)),
        }
    }
}

/// Recorded realization of the two-way model: initial state plus the log of
/// effective changes.
#[derive(Debug, Clone)]
pub struct TwoWayTrajectory {
    params: TwoWayParams,
    initial: GraphState,
    events: Vec<Event>,
}

pub fn simulate_two_way(params: &TwoWayParams, seed: ReplicationSeed) -> Result<TwoWayTrajectory> {
    let mut engine = TwoWayEngine::new(params, seed)?;
    let initial = engine.snapshot();
    let mut events = Vec::new();
    engine.advance_to(params.horizon, |time, change| events.push(Event { time, change }));
    Ok(TwoWayTrajectory {
        params: *params,
        initial,
        events,
    })
}

impl TwoWayTrajectory {
    pub fn params(&self) -> &TwoWayParams {
        &self.params
    }

    pub fn event_log(&self) -> &[Event] {
        &self.events
    }
}

impl Trajectory for TwoWayTrajectory {
    fn vertex_count(&self) -> usize {
        self.params.n
    }

    fn horizon(&self) -> f64 {
        self.params.horizon
    }

    fn initial_state(&self) -> GraphState {
        self.initial.clone()
    }

    fn events(&self) -> Vec<Event> {
        self.events.clone()
    }

    fn state_at(&self, t: f64) -> Result<GraphState> {
        self.check_time(t)?;
        let mut g = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            g.apply(&e.change);
        }
        Ok(g)
    }
}
