//! Empirical checks of the type-indexed edge probability and the type
//! densities.

use serde::{Deserialize, Serialize};

use super::oracle::graphon_h;
use super::McConfig;
use crate::dynamics::{build_one_way_trajectory, simulate_opinion_path, vertex_type, OneWayParams};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::patterns::Opinion;
use crate::rng::MasterSeed;
use crate::stats::{mean_and_se, EstimateWithError};

/// One cell of the type grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub row: usize,
    pub col: usize,
    pub u_mid: f64,
    pub v_mid: f64,
    pub samples: usize,
    /// Edge-active frequency, absent when the cell is skipped.
    pub empirical: Option<f64>,
    pub reference: f64,
    /// Binomial SE of the frequency at the reference probability.
    pub std_error: f64,
    /// `|empirical - reference| / std_error`.
    pub z: Option<f64>,
    pub skipped: bool,
    pub passes: bool,
}

/// Binned comparison of edge activity against the limiting edge probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphonGrid {
    pub t: f64,
    pub grid: usize,
    pub pairs: usize,
    pub cell_width: f64,
    /// Largest deviation of the reference inside one cell from its midpoint.
    pub allowance: f64,
    pub cells: Vec<GridCell>,
}

impl GraphonGrid {
    pub fn passes(&self) -> bool {
        self.cells.iter().all(|c| c.passes)
    }

    pub fn checked_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.skipped).count()
    }

    /// CSV with one row per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,u_mid,v_mid,samples,empirical,reference,std_error,z,skipped,passes\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                c.row,
                c.col,
                c.u_mid,
                c.v_mid,
                c.samples,
                opt(c.empirical),
                c.reference,
                c.std_error,
                opt(c.z),
                c.skipped,
                c.passes
            ));
        }
        out
    }
}

fn bin(y: f64, width: f64, grid: usize) -> usize {
    ((y / width) as usize).min(grid - 1)
}

/// Simulates `mc.replications` independent vertex pairs up to `t`, bins them
/// by their types and compares each cell's edge frequency with the reference
/// at the cell midpoint. A cell passes when the gap is at most
/// `se_multiplier` SEs plus the in-cell variation of the reference; cells
/// with fewer than `min_cell_count` pairs are skipped.
pub fn graphon_grid_check(
    t: f64,
    params: &OneWayParams,
    mc: &McConfig,
    grid: usize,
    min_cell_count: usize,
    se_multiplier: f64,
) -> Result<GraphonGrid> {
    mc.check()?;
    if t <= 0.0 || grid == 0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "need t > 0 and a non-empty grid".into(),
        });
    }
    let sys = OneWayParams {
        n: 2,
        horizon: t,
        ..*params
    };
    sys.validate()?;
    let master = MasterSeed(mc.seed);
    let draws = map_indexed(mc.replications, mc.workers, |r| {
        let traj = build_one_way_trajectory(&sys, master.replication(r as u64)).expect("validated parameters");
        (
            vertex_type(traj.path(0), 0.0, t),
            vertex_type(traj.path(1), 0.0, t),
            traj.edge_active(0, 1, t),
        )
    });
    let width = (1.0 - (-t).exp()) / grid as f64;
    let mut hits = vec![(0usize, 0usize); grid * grid];
    for &(u, v, active) in &draws {
        let cell = &mut hits[bin(u, width, grid) * grid + bin(v, width, grid)];
        cell.0 += 1;
        cell.1 += active as usize;
    }
    let allowance = (params.pi_plus - params.pi_minus).abs() / 2.0 * width;
    let mut cells = Vec::with_capacity(grid * grid);
    for row in 0..grid {
        for col in 0..grid {
            let (samples, active) = hits[row * grid + col];
            let u_mid = (row as f64 + 0.5) * width;
            let v_mid = (col as f64 + 0.5) * width;
            let reference = graphon_h(t, u_mid, v_mid, params)?;
            let std_error = (reference * (1.0 - reference) / samples.max(1) as f64).sqrt();
            let skipped = samples < min_cell_count;
            let empirical = (!skipped).then(|| active as f64 / samples as f64);
            let gap = empirical.map(|e| (e - reference).abs());
            let z = gap.map(|g| {
                if std_error > 0.0 {
                    g / std_error
                } else {
                    f64::INFINITY * g
                }
            });
            let passes = gap.is_none_or(|g| g <= se_multiplier * std_error + allowance);
            cells.push(GridCell {
                row,
                col,
                u_mid,
                v_mid,
                samples,
                empirical,
                reference,
                std_error,
                z,
                skipped,
                passes,
            });
        }
    }
    Ok(GraphonGrid {
        t,
        grid,
        pairs: mc.replications,
        cell_width: width,
        allowance,
        cells,
    })
}

/// Histogram estimates of the joint law of (opinion, type) at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDensity {
    pub t: f64,
    pub bin_width: f64,
    /// Density of `(+, type)` per bin.
    pub plus: Vec<f64>,
    /// Density of `(-, type)` per bin.
    pub minus: Vec<f64>,
    /// `P(opinion + at t)`, the integral of `plus`.
    pub plus_mass: EstimateWithError,
}

/// Simulates single-vertex opinion paths and bins `(opinion, type)` at `t`
/// over `[0, 1 - e^{-t}]`; the two histograms together integrate to 1.
pub fn estimate_type_density(t: f64, params: &OneWayParams, mc: &McConfig, bins: usize) -> Result<TypeDensity> {
    mc.check()?;
    if bins < 10 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "need at least 10 bins".into(),
        });
    }
    if t <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: "types are degenerate at t = 0".into(),
        });
    }
    params.validate()?;
    let master = MasterSeed(mc.seed);
    let draws = map_indexed(mc.replications, mc.workers, |r| {
        let path = simulate_opinion_path(params, &mut master.replication(r as u64).vertex(0));
        (path.opinion_at(t), vertex_type(&path, 0.0, t))
    });
    let width = (1.0 - (-t).exp()) / bins as f64;
    let mut plus = vec![0.0; bins];
    let mut minus = vec![0.0; bins];
    let unit = 1.0 / (mc.replications as f64 * width);
    for &(o, y) in &draws {
        let hist = if o == Opinion::Plus { &mut plus } else { &mut minus };
        hist[bin(y, width, bins)] += unit;
    }
    let indicators: Vec<f64> = draws.iter().map(|(o, _)| o.is_plus() as u8 as f64).collect();
    Ok(TypeDensity {
        t,
        bin_width: width,
        plus,
        minus,
        plus_mass: mean_and_se(&indicators)?,
    })
}
