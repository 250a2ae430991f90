//! The black-box objective: target T of the existing stations plus a set of
//! new ones, evaluated on the digital twin. Every evaluation counts as one
//! twin query.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::feasible::Candidate;
use crate::radiomap::{
    metrics_of_field, FieldSolver, Metrics, DEFAULT_ALPHA_WEIGHT, DEFAULT_RTH_DBM,
};
use crate::scene::{BaseStation, Scene, DEFAULT_TX_POWER_DBM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSettings {
    pub alpha_weight: f64,
    pub r_th: f64,
    /// Transmit power given to every new station.
    pub tx_power: f64,
    pub antenna_gain: f64,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        Self {
            alpha_weight: DEFAULT_ALPHA_WEIGHT,
            r_th: DEFAULT_RTH_DBM,
            tx_power: DEFAULT_TX_POWER_DBM,
            antenna_gain: 0.0,
        }
    }
}

/// Best-RSRP field of a committed station set.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(pub Vec<f64>);

pub struct Objective<'a> {
    solver: FieldSolver<'a>,
    existing: Vec<BaseStation>,
    settings: ObjectiveSettings,
    queries: AtomicUsize,
}

impl<'a> Objective<'a> {
    pub fn new(solver: FieldSolver<'a>, scene: &Scene, settings: ObjectiveSettings) -> Self {
        Self {
            solver,
            existing: scene.existing_bs.clone(),
            settings,
            queries: AtomicUsize::new(0),
        }
    }

    pub fn settings(&self) -> &ObjectiveSettings {
        &self.settings
    }

    pub fn queries(&self) -> usize {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn station(&self, c: &Candidate) -> BaseStation {
        BaseStation::new(
            c.x,
            c.y,
            c.z,
            self.settings.tx_power,
            self.settings.antenna_gain,
        )
    }

    pub fn candidate_field(&self, c: &Candidate) -> Vec<f64> {
        self.solver.field(&self.station(c))
    }

    /// Field of the existing stations plus `committed`, not counted as a
    /// query. Empty sets give −∞ everywhere.
    pub fn base_field(&self, committed: &[Candidate]) -> Field {
        let mut best = vec![f64::NEG_INFINITY; self.solver.grid().len()];
        let mut serving = vec![0usize; best.len()];
        let stations = self
            .existing
            .iter()
            .copied()
            .chain(committed.iter().map(|c| self.station(c)));
        for (i, bs) in stations.enumerate() {
            FieldSolver::merge_into(&mut best, &mut serving, &self.solver.field(&bs), i);
        }
        Field(best)
    }

    pub fn metrics(&self, field: &Field) -> Metrics {
        metrics_of_field(
            &field.0,
            self.solver.noise_floor(),
            self.settings.alpha_weight,
            self.settings.r_th,
        )
    }

    /// One twin query: metrics of `base ∪ extra`, plus the merged field.
    pub fn evaluate(&self, base: &Field, extra: &[Candidate]) -> (Metrics, Field) {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut merged = base.0.clone();
        for c in extra {
            let f = self.candidate_field(c);
            for (m, v) in merged.iter_mut().zip(f) {
                if v > *m {
                    *m = v;
                }
            }
        }
        let field = Field(merged);
        (self.metrics(&field), field)
    }
}
