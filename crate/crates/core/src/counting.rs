//! Subgraph indicators and voter-pattern counts `X_n(t)`.
//!
//! Counts are obtained by enumerating injective, opinion-preserving maps of
//! the pattern into the graph (edges of the pattern must be active, non-edges
//! are unconstrained) and dividing by the automorphism count.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
pub use crate::graph::{Change, Event, GraphState, GraphView};
use crate::patterns::{automorphism_count, enumerate_labeled_copies, LabeledVoterGraph, VoterPattern, MAX_LABEL_SET};

/// Patterns up to this size are updated event by event; larger ones are
/// recounted at each checkpoint.
pub const INCREMENTAL_MAX_VERTICES: usize = 4;

/// Search order for one choice of pre-assigned pattern vertices.
#[derive(Debug, Clone)]
struct Plan {
    /// Pattern vertices in the order they are assigned; the fixed ones first.
    order: Vec<usize>,
    /// For each position, earlier positions adjacent in the pattern.
    back: Vec<Vec<usize>>,
    fixed: usize,
}

impl Plan {
    fn new(h: &VoterPattern, fixed: &[usize]) -> Self {
        let v = h.vertex_count();
        let mut order: Vec<usize> = fixed.to_vec();
        let mut placed = vec![false; v];
        for &a in fixed {
            placed[a] = true;
        }
        while order.len() < v {
            let next = (0..v)
                .filter(|&a| !placed[a])
                .max_by_key(|&a| {
                    let linked = order.iter().filter(|&&b| h.has_edge(a, b)).count();
                    (linked, h.degree(a), std::cmp::Reverse(a))
                })
                .expect("an unplaced vertex remains");
            placed[next] = true;
            order.push(next);
        }
        let back = (0..v)
            .map(|i| (0..i).filter(|&j| h.has_edge(order[i], order[j])).collect())
            .collect();
        Self {
            order,
            back,
            fixed: fixed.len(),
        }
    }
}

struct Search<'a, G: GraphView + ?Sized> {
    g: &'a G,
    h: &'a VoterPattern,
    plan: &'a Plan,
    image: Vec<usize>,
    buffers: Vec<Vec<usize>>,
}

impl<G: GraphView + ?Sized> Search<'_, G> {
    fn run(&mut self, depth: usize) -> u64 {
        if depth == self.plan.order.len() {
            return 1;
        }
        let a = self.plan.order[depth];
        let back = &self.plan.back[depth];
        let anchor = back.first().map(|&j| self.image[j]);
        let mut buf = std::mem::take(&mut self.buffers[depth]);
        self.g.candidates(anchor, self.h.opinion(a), &mut buf);
        let mut total = 0;
        for &w in &buf {
            if self.image[..depth].contains(&w) {
                continue;
            }
            if back.iter().skip(1).any(|&j| !self.g.has_edge(self.image[j], w)) {
                continue;
            }
            self.image[depth] = w;
            total += self.run(depth + 1);
        }
        self.buffers[depth] = buf;
        total
    }
}

fn count_embeddings<G: GraphView + ?Sized>(g: &G, h: &VoterPattern, plan: &Plan, fixed_images: &[usize]) -> u64 {
    debug_assert_eq!(plan.fixed, fixed_images.len());
    let v = h.vertex_count();
    if v > g.vertex_count() {
        return 0;
    }
    let mut image = vec![usize::MAX; v];
    for (i, &x) in fixed_images.iter().enumerate() {
        if g.opinion(x) != h.opinion(plan.order[i]) || image[..i].contains(&x) {
            return 0;
        }
        if plan.back[i].iter().any(|&j| !g.has_edge(image[j], x)) {
            return 0;
        }
        image[i] = x;
    }
    let mut search = Search {
        g,
        h,
        plan,
        image,
        buffers: vec![Vec::new(); v],
    };
    search.run(plan.fixed)
}

/// A pattern with its automorphism count and search plans precomputed.
#[derive(Debug, Clone)]
pub struct PatternCounter {
    pattern: VoterPattern,
    automorphisms: u64,
    plan: Plan,
}

impl PatternCounter {
    pub fn new(pattern: &VoterPattern) -> Result<Self> {
        Ok(Self {
            automorphisms: automorphism_count(pattern)?,
            plan: Plan::new(pattern, &[]),
            pattern: pattern.clone(),
        })
    }

    pub fn pattern(&self) -> &VoterPattern {
        &self.pattern
    }

    pub fn automorphisms(&self) -> u64 {
        self.automorphisms
    }

    /// Number of opinion-preserving injective maps of the pattern into `g`.
    pub fn embeddings<G: GraphView + ?Sized>(&self, g: &G) -> u64 {
        count_embeddings(g, &self.pattern, &self.plan, &[])
    }

    pub fn count<G: GraphView + ?Sized>(&self, g: &G) -> u64 {
        let e = self.embeddings(g);
        assert!(
            e.is_multiple_of(self.automorphisms),
            "embedding count {e} not divisible by |Aut| = {} for {}",
            self.automorphisms,
            self.pattern
        );
        e / self.automorphisms
    }
}

/// `X(t)`: number of labeled copies of `h` present in `g`.
pub fn count_pattern<G: GraphView + ?Sized>(g: &G, h: &VoterPattern) -> Result<u64> {
    Ok(PatternCounter::new(h)?.count(g))
}

fn check_labels<G: GraphView + ?Sized>(h: &LabeledVoterGraph, g: &G) -> Result<()> {
    let n = g.vertex_count();
    match h.labels().iter().find(|&&l| l >= n) {
        Some(&label) => Err(Error::LabelOutOfRange { label, n }),
        None => Ok(()),
    }
}

/// Indicator that `h` is a labeled subgraph of `g`: all its edges active and
/// all its opinions matched.
pub fn indicator<G: GraphView + ?Sized>(h: &LabeledVoterGraph, g: &G) -> Result<bool> {
    check_labels(h, g)?;
    Ok(h.vertices().all(|(l, o)| g.opinion(l) == o) && h.edges().iter().all(|&(u, v)| g.has_edge(u, v)))
}

/// Literal sum of indicators over every labeled copy on `[n]`.
pub fn count_bruteforce<G: GraphView + ?Sized>(g: &G, h: &VoterPattern) -> Result<u64> {
    let n = g.vertex_count();
    if n > MAX_LABEL_SET {
        return Err(Error::SizeLimit {
            what: "brute-force vertex count",
            actual: n,
            limit: MAX_LABEL_SET,
        });
    }
    let labels: Vec<usize> = (0..n).collect();
    let mut total = 0;
    for copy in enumerate_labeled_copies(&labels, h)? {
        total += indicator(&copy, g)? as u64;
    }
    Ok(total)
}

/// Counts of several patterns at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountVector {
    pub time: f64,
    pub patterns: Vec<VoterPattern>,
    pub values: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// Recount every pattern from scratch at every checkpoint.
    Full,
    /// Update small patterns event by event between checkpoints.
    Incremental,
}

/// Keeps the count of one small pattern in sync with a mutating graph.
#[derive(Debug, Clone)]
pub struct IncrementalCount {
    counter: PatternCounter,
    /// One plan per pattern edge `(a, b)`, rooted at `a` then `b`.
    edge_plans: Vec<Plan>,
    /// One plan per pattern vertex, rooted at it.
    vertex_plans: Vec<Plan>,
    value: u64,
}

impl IncrementalCount {
    pub fn new(pattern: &VoterPattern, g: &GraphState) -> Result<Self> {
        if pattern.vertex_count() > INCREMENTAL_MAX_VERTICES {
            return Err(Error::SizeLimit {
                what: "incremental pattern vertex count",
                actual: pattern.vertex_count(),
                limit: INCREMENTAL_MAX_VERTICES,
            });
        }
        let counter = PatternCounter::new(pattern)?;
        let value = counter.count(g);
        Ok(Self {
            edge_plans: pattern
                .edges()
                .iter()
                .map(|&(a, b)| Plan::new(pattern, &[a, b]))
                .collect(),
            vertex_plans: (0..pattern.vertex_count()).map(|a| Plan::new(pattern, &[a])).collect(),
            counter,
            value,
        })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Embeddings sending some pattern edge onto `{u, v}`. Injectivity means
    /// at most one pattern edge can land there, so the sum has no overlaps.
    fn through_edge(&self, g: &GraphState, u: usize, v: usize) -> u64 {
        let h = &self.counter.pattern;
        self.edge_plans
            .iter()
            .map(|plan| count_embeddings(g, h, plan, &[u, v]) + count_embeddings(g, h, plan, &[v, u]))
            .sum()
    }

    fn through_vertex(&self, g: &GraphState, v: usize) -> u64 {
        let h = &self.counter.pattern;
        self.vertex_plans
            .iter()
            .map(|plan| count_embeddings(g, h, plan, &[v]))
            .sum()
    }

    fn to_count(&self, embeddings: u64) -> u64 {
        let aut = self.counter.automorphisms;
        assert!(
            embeddings.is_multiple_of(aut),
            "delta {embeddings} not divisible by |Aut| = {aut}"
        );
        embeddings / aut
    }

    /// Adjusts the count for `change`, which must not yet be applied to `g`.
    fn before(&mut self, g: &GraphState, change: &Change) {
        match *change {
            Change::Edge { u, v, active: false } if g.has_edge(u, v) => {
                self.value -= self.to_count(self.through_edge(g, u, v));
            }
            Change::Opinion { v, .. } => {
                self.value -= self.to_count(self.through_vertex(g, v));
            }
            _ => {}
        }
    }

    /// Adjusts the count for `change`, which has just been applied to `g`.
    fn after(&mut self, g: &GraphState, change: &Change) {
        match *change {
            Change::Edge { u, v, active: true } => {
                self.value += self.to_count(self.through_edge(g, u, v));
            }
            Change::Opinion { v, .. } => {
                self.value += self.to_count(self.through_vertex(g, v));
            }
            _ => {}
        }
    }
}

/// A graph state together with counts that follow it through changes.
#[derive(Debug, Clone)]
pub struct IncrementalCounter {
    state: GraphState,
    tracked: Vec<IncrementalCount>,
}

impl IncrementalCounter {
    pub fn new(state: GraphState, patterns: &[VoterPattern]) -> Result<Self> {
        let tracked = patterns
            .iter()
            .map(|h| IncrementalCount::new(h, &state))
            .collect::<Result<_>>()?;
        Ok(Self { state, tracked })
    }

    pub fn state(&self) -> &GraphState {
        &self.state
    }

    pub fn values(&self) -> Vec<u64> {
        self.tracked.iter().map(|c| c.value()).collect()
    }

    pub fn apply(&mut self, change: &Change) {
        let redundant = match *change {
            Change::Edge { u, v, active } => self.state.has_edge(u, v) == active,
            Change::Opinion { v, to } => self.state.opinion(v) == to,
        };
        if redundant {
            return;
        }
        for c in &mut self.tracked {
            c.before(&self.state, change);
        }
        self.state.apply(change);
        for c in &mut self.tracked {
            c.after(&self.state, change);
        }
    }
}

fn check_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedTimes);
    }
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(Error::TimeOutOfRange { time: t, horizon });
    }
    Ok(())
}

/// One count vector per checkpoint time.
pub fn counts_along_trajectory<T: Trajectory + ?Sized>(
    traj: &T,
    patterns: &[VoterPattern],
    times: &[f64],
    mode: CountMode,
) -> Result<Vec<CountVector>> {
    check_times(times, traj.horizon())?;
    let counters = patterns.iter().map(PatternCounter::new).collect::<Result<Vec<_>>>()?;
    let vector = |time: f64, values: Vec<u64>| CountVector {
        time,
        patterns: patterns.to_vec(),
        values,
    };
    match mode {
        CountMode::Full => times
            .iter()
            .map(|&t| {
                let g = traj.state_at(t)?;
                Ok(vector(t, counters.iter().map(|c| c.count(&g)).collect()))
            })
            .collect(),
        CountMode::Incremental => {
            let small: Vec<usize> = (0..patterns.len())
                .filter(|&i| patterns[i].vertex_count() <= INCREMENTAL_MAX_VERTICES)
                .collect();
            let small_patterns: Vec<VoterPattern> = small.iter().map(|&i| patterns[i].clone()).collect();
            let mut inc = IncrementalCounter::new(traj.initial_state(), &small_patterns)?;
            let events = traj.events();
            let mut next = 0;
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                while next < events.len() && events[next].time <= t {
                    inc.apply(&events[next].change);
                    next += 1;
                }
                let tracked = inc.values();
                let mut values = Vec::with_capacity(patterns.len());
                let mut k = 0;
                for (i, c) in counters.iter().enumerate() {
                    if small.get(k) == Some(&i) {
                        values.push(tracked[k]);
                        k += 1;
                    } else {
                        values.push(c.count(inc.state()));
                    }
                }
                out.push(vector(t, values));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::Opinion::{self, Minus as M, Plus as P};

    fn edge(a: Opinion, b: Opinion) -> VoterPattern {
        VoterPattern::edge(a, b)
    }

    #[test]
    fn indicator_examples() {
        let h = LabeledVoterGraph::place(&edge(P, P), &[1, 2]).unwrap();
        let g = GraphState::from_edges(vec![M, P, P], &[(1, 2)]);
        assert!(indicator(&h, &g).unwrap());
        let g = GraphState::from_edges(vec![M, P, M], &[(1, 2)]);
        assert!(!indicator(&h, &g).unwrap());
        let g = GraphState::from_edges(vec![M, P, P], &[]);
        assert!(!indicator(&h, &g).unwrap());
        let far = LabeledVoterGraph::place(&edge(P, P), &[1, 7]).unwrap();
        assert_eq!(indicator(&far, &g), Err(Error::LabelOutOfRange { label: 7, n: 3 }));
    }

    #[test]
    fn count_examples() {
        let full = GraphState::from_edges(vec![P, P, P], &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(count_pattern(&full, &edge(P, P)).unwrap(), 3);
        // vertices 1, 2, 3 named 0, 1, 2
        let g = GraphState::from_edges(vec![P, P, M], &[(0, 1), (0, 2)]);
        assert_eq!(count_pattern(&g, &edge(P, M)).unwrap(), 1);
        let tri = VoterPattern::new(vec![P; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(count_pattern(&full, &tri).unwrap(), 1);
        let big = VoterPattern::new(vec![P; 4], &[]).unwrap();
        assert_eq!(count_pattern(&full, &big).unwrap(), 0);
    }

    #[test]
    fn bruteforce_examples() {
        let g = GraphState::new(vec![P, M, P, P]);
        assert_eq!(count_bruteforce(&g, &edge(P, P)).unwrap(), 0);
        assert_eq!(count_bruteforce(&g, &VoterPattern::vertex(P)).unwrap(), 3);
        assert!(count_bruteforce(&GraphState::new(vec![P; 13]), &edge(P, P)).is_err());
    }

    #[test]
    fn incremental_follows_changes() {
        let patterns = vec![
            edge(P, P),
            edge(P, M),
            "V=3; opinions=+-+; edges=0-1,1-2".parse().unwrap(),
            VoterPattern::new(vec![P, P, M], &[(0, 1), (1, 2), (0, 2)]).unwrap(),
        ];
        let start = GraphState::from_edges(vec![P, M, P, P, M], &[(0, 1), (1, 2)]);
        let mut inc = IncrementalCounter::new(start, &patterns).unwrap();
        let changes = [
            Change::Edge {
                u: 0,
                v: 2,
                active: true,
            },
            Change::Opinion { v: 2, to: M },
            Change::Edge {
                u: 1,
                v: 3,
                active: true,
            },
            Change::Edge {
                u: 0,
                v: 1,
                active: false,
            },
            Change::Opinion { v: 1, to: P },
            Change::Edge {
                u: 0,
                v: 1,
                active: false,
            },
        ];
        for c in &changes {
            inc.apply(c);
            let want: Vec<u64> = patterns
                .iter()
                .map(|h| count_pattern(inc.state(), h).unwrap())
                .collect();
            assert_eq!(inc.values(), want);
        }
    }

    #[test]
    fn unsorted_times_are_rejected() {
        use crate::dynamics::{build_one_way_trajectory, OneWayParams};
        use crate::rng::MasterSeed;
        let params = OneWayParams {
            n: 5,
            horizon: 1.0,
            ..Default::default()
        };
        let traj = build_one_way_trajectory(&params, MasterSeed(0).replication(0)).unwrap();
        let pats = [edge(P, P)];
        assert_eq!(
            counts_along_trajectory(&traj, &pats, &[0.5, 0.2], CountMode::Full),
            Err(Error::UnsortedTimes)
        );
        assert!(counts_along_trajectory(&traj, &pats, &[0.5, 2.0], CountMode::Full).is_err());
    }
}
