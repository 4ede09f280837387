//! Exact continuous-time simulation of the one-way and two-way models.

mod edge;
mod params;
mod path;
mod trajectory;
mod two_way;

pub(crate) use edge::graphon_value;
pub use edge::{conditional_edge_prob, sample_edge_history, EdgeHistory};
pub use params::{ring_probability, OneWayParams, TwoWayParams, MAX_HORIZON};
pub use path::{
    analytic_p_plus, marginal, simulate_opinion_path, transition_probability, vertex_type, vertex_type_checked,
    OpinionPath,
};
pub use trajectory::{build_one_way_trajectory, OneWayTrajectory, OneWayView};
pub use two_way::{simulate_two_way, TwoWayEngine, TwoWayTrajectory};

use crate::error::{Error, Result};
use crate::graph::{Event, GraphState};

/// A realization of `G_n(t)` on `[0, T]`.
pub trait Trajectory {
    fn vertex_count(&self) -> usize;
    fn horizon(&self) -> f64;
    fn initial_state(&self) -> GraphState;
    /// Every effective change in time order (ties by change kind, then index).
    fn events(&self) -> Vec<Event>;
    fn state_at(&self, t: f64) -> Result<GraphState>;

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.horizon()).contains(&t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                time: t,
                horizon: self.horizon(),
            })
        }
    }
}

/// Alias kept for readers looking for the snapshot query by name.
pub fn query_state<T: Trajectory + ?Sized>(traj: &T, t: f64) -> Result<GraphState> {
    traj.state_at(t)
}
