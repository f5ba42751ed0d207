//! Built-in analytic field pairs and grid-refinement tables for `d_E`.

use std::f64::consts::TAU;
use std::str::FromStr;
use std::sync::Arc;

use crate::cone::ConePoint;
use crate::error::{GeomError, Result};
use crate::fields::{ebin_distance, DiscreteManifold, MetricField};
use crate::spd::SpdMatrix;

/// Coarsest grid side used by [`convergence_table`].
pub const BASE_SIDE: usize = 16;

/// Deltas at or below this fraction of `d_E` count as converged.
pub const ROUNDOFF_REL: f64 = 1e-12;

/// Analytic pairs on the flat unit 2-torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalyticPair {
    /// `I` against `4I`; `d_E = 2√2` at every resolution.
    Constant,
    /// `I` against `(2 + sin 2πx) I`.
    Sin,
}

impl AnalyticPair {
    pub const ALL: [AnalyticPair; 2] = [AnalyticPair::Constant, AnalyticPair::Sin];

    pub fn name(self) -> &'static str {
        match self {
            AnalyticPair::Constant => "constant",
            AnalyticPair::Sin => "sin",
        }
    }

    /// Both fields on the `side × side` Euclidean torus.
    pub fn fields(self, side: usize) -> Result<(MetricField, MetricField)> {
        let man = Arc::new(DiscreteManifold::torus_euclidean(&[side, side])?);
        let id = ConePoint::from_spd(&SpdMatrix::identity(2)?);
        let f = MetricField::constant(Arc::clone(&man), &id)?;
        let g = match self {
            AnalyticPair::Constant => {
                MetricField::constant(man, &ConePoint::from_spd(&SpdMatrix::scaled_identity(2, 4.0)?))?
            }
            AnalyticPair::Sin => MetricField::from_fn(Arc::clone(&man), |v| {
                let x = man.grid().expect("torus").position(v);
                let c = 2.0 + (TAU * x[0]).sin();
                Ok(ConePoint::from_spd(&SpdMatrix::scaled_identity(2, c)?))
            })?,
        };
        Ok((f, g))
    }

    pub fn distance(self, side: usize) -> Result<f64> {
        let (f, g) = self.fields(side)?;
        ebin_distance(&f, &g)
    }
}

impl FromStr for AnalyticPair {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self> {
        AnalyticPair::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| GeomError::InvalidInput(format!("unknown analytic pair '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub side: usize,
    pub distance: f64,
    /// `|d_E(N) − d_E(N/2)|`; `None` on the first level.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn final_relative_delta(&self) -> f64 {
        let last = self.rows.last().expect("at least two levels");
        last.delta.unwrap_or(0.0) / last.distance.abs().max(f64::MIN_POSITIVE)
    }

    /// The last delta does not exceed the one before it, or both sit at the
    /// round-off floor.
    pub fn is_settling(&self) -> bool {
        let k = self.rows.len();
        if k < 3 {
            return true;
        }
        let floor = ROUNDOFF_REL * self.rows[k - 1].distance.abs();
        let (prev, last) = (self.rows[k - 2].delta.unwrap_or(0.0), self.rows[k - 1].delta.unwrap_or(0.0));
        last <= prev || last <= floor
    }
}

/// `d_E` on grids of side `16, 32, …, 16·2^(levels−1)`.
pub fn convergence_table(pair: AnalyticPair, levels: usize) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(GeomError::InvalidInput(format!("need at least 2 levels, got {levels}")));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for k in 0..levels {
        let side = BASE_SIDE << k;
        let distance = pair.distance(side)?;
        let delta = rows.last().map(|r| (distance - r.distance).abs());
        rows.push(ConvergenceRow { side, distance, delta });
    }
    Ok(ConvergenceTable { rows })
}
