//! Incremental base-station placement: one station at a time, each chosen by
//! a GP + Expected Improvement loop over a discrete candidate set, plus the
//! random-sampling and exhaustive-search baselines.

pub mod acquisition;
pub mod gp;
mod objective;

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use acquisition::{expected_improvement, DEFAULT_XI};
pub use gp::{GpModel, DEFAULT_JITTER, LENGTH_SCALE_GRID};
pub use objective::{Field, Objective, ObjectiveSettings};

use crate::error::{Error, Result};
use crate::feasible::Candidate;
use crate::geometry::Rect;
use crate::radiomap::Metrics;
use crate::scene::{BaseStation, Scene};

pub const DEFAULT_Q_INIT: usize = 10;
pub const DEFAULT_Q_BO: usize = 30;
pub const DEFAULT_RS_GROUPS: usize = 100;
pub const DEFAULT_ES_STEP_M: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub q_init: usize,
    pub q_bo: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            q_init: DEFAULT_Q_INIT,
            q_bo: DEFAULT_Q_BO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoSettings {
    pub xi: f64,
    pub jitter: f64,
}

impl Default for BoSettings {
    fn default() -> Self {
        Self {
            xi: DEFAULT_XI,
            jitter: DEFAULT_JITTER,
        }
    }
}

/// Candidate sites in a planning problem, with existing-station sites removed
/// and GP inputs normalized to the unit square.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub sites: Vec<Candidate>,
    pub inputs: Vec<Vec<f64>>,
}

impl CandidateSet {
    pub fn new(scene: &Scene, candidates: Vec<Candidate>) -> Result<Self> {
        let sites: Vec<Candidate> = candidates
            .into_iter()
            .filter(|c| {
                !scene
                    .existing_bs
                    .iter()
                    .any(|b| (b.x - c.x).abs() < 1e-9 && (b.y - c.y).abs() < 1e-9)
            })
            .collect();
        if sites.is_empty() {
            return Err(Error::Planning("no feasible candidates".into()));
        }
        let inputs = sites.iter().map(|c| normalize(&scene.region, c)).collect();
        Ok(Self { sites, inputs })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
}

fn normalize(region: &Rect, c: &Candidate) -> Vec<f64> {
    vec![
        (c.x - region.xmin) / region.width(),
        (c.y - region.ymin) / region.height(),
    ]
}

/// Observations and commitments of the per-station search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlannerState {
    /// `(candidate index, T)` evaluated for the station being placed.
    pub observations: Vec<(usize, f64)>,
    pub t_best: f64,
    /// Candidate indices already committed, in order.
    pub committed: Vec<usize>,
    pub queries: usize,
}

impl PlannerState {
    pub fn new() -> Self {
        Self {
            t_best: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    pub fn observe(&mut self, candidate: usize, t: f64) {
        self.observations.push((candidate, t));
        self.queries += 1;
        if t > self.t_best {
            self.t_best = t;
        }
    }

    /// Best observation; ties go to the lowest candidate index.
    pub fn incumbent(&self) -> Option<(usize, f64)> {
        self.observations.iter().copied().fold(
            None,
            |best: Option<(usize, f64)>, (c, t)| match best {
                Some((bc, bt)) if bt > t || (bt == t && bc <= c) => Some((bc, bt)),
                _ => Some((c, t)),
            },
        )
    }

    fn excluded(&self, n: usize) -> Vec<bool> {
        let mut ex = vec![false; n];
        for &c in &self.committed {
            ex[c] = true;
        }
        for &(c, _) in &self.observations {
            ex[c] = true;
        }
        ex
    }

    fn start_station(&mut self) {
        self.observations.clear();
        self.t_best = f64::NEG_INFINITY;
    }
}

/// Candidate with the highest EI among those neither committed nor already
/// observed; ties go to the lowest index.
pub fn select_next(
    model: &GpModel,
    candidates: &CandidateSet,
    state: &PlannerState,
    xi: f64,
) -> Result<usize> {
    let excluded = state.excluded(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in candidates.inputs.iter().enumerate() {
        if excluded[i] {
            continue;
        }
        let ei = model.expected_improvement(x, state.t_best, xi);
        if best.is_none_or(|(_, b)| ei > b) {
            best = Some((i, ei));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Planning("no unselected candidates left".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Candidate indices added on top of the committed set.
    pub candidates: Vec<usize>,
    pub target: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Bo,
    Exhaustive,
    Random,
}

/// Search trace for one committed station (or for the single RS round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationTrace {
    pub step: usize,
    pub evaluations: Vec<Evaluation>,
    /// Running best T after each evaluation.
    pub incumbent: Vec<f64>,
    pub committed: Vec<usize>,
    pub metrics_after: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub method: String,
    pub selected: Vec<BaseStation>,
    pub selected_candidates: Vec<usize>,
    pub num_candidates: usize,
    pub traces: Vec<StationTrace>,
    /// Metrics of the existing stations alone, when there are any.
    pub initial_metrics: Option<Metrics>,
    pub metrics: Metrics,
    pub drt_queries: usize,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl PlanReport {
    /// Per-evaluation trace rows:
    /// `step,eval,phase,candidates,x,y,target,incumbent`.
    pub fn write_trace_csv(
        &self,
        path: impl AsRef<std::path::Path>,
        candidates: &CandidateSet,
    ) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "step",
            "eval",
            "phase",
            "candidates",
            "x",
            "y",
            "target",
            "incumbent",
        ])?;
        for tr in &self.traces {
            for (i, (ev, inc)) in tr.evaluations.iter().zip(&tr.incumbent).enumerate() {
                let ids: Vec<String> = ev.candidates.iter().map(|c| c.to_string()).collect();
                let (x, y) = match ev.candidates.as_slice() {
                    [c] => (
                        candidates.sites[*c].x.to_string(),
                        candidates.sites[*c].y.to_string(),
                    ),
                    _ => (String::new(), String::new()),
                };
                w.write_record([
                    tr.step.to_string(),
                    i.to_string(),
                    serde_json::to_value(ev.phase)
                        .expect("phase")
                        .as_str()
                        .unwrap_or("")
                        .to_string(),
                    ids.join(";"),
                    x,
                    y,
                    ev.target.to_string(),
                    inc.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn running_max(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    values
        .into_iter()
        .map(|v| {
            best = best.max(v);
            best
        })
        .collect()
}

fn initial_metrics(objective: &Objective<'_>, scene: &Scene) -> Option<Metrics> {
    (!scene.existing_bs.is_empty()).then(|| objective.metrics(&objective.base_field(&[])))
}

/// Places `n_new` stations one at a time. For each, a fresh GP is seeded with
/// `q_init` random evaluations, its length scale chosen by marginal
/// likelihood and frozen, then `q_bo` EI-driven evaluations follow; the best
/// observed candidate is committed.
pub fn plan(
    objective: &Objective<'_>,
    scene: &Scene,
    candidates: &CandidateSet,
    n_new: usize,
    budget: Budget,
    bo: BoSettings,
    seed: u64,
) -> Result<PlanReport> {
    if n_new == 0 {
        return Err(Error::Argument(
            "number of new stations must be >= 1".into(),
        ));
    }
    if candidates.len() < n_new {
        return Err(Error::Planning(format!(
            "{} candidates cannot host {n_new} new stations",
            candidates.len()
        )));
    }
    let start = Instant::now();
    let queries_before = objective.queries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = PlannerState::new();
    let mut base = objective.base_field(&[]);
    let mut traces = Vec::with_capacity(n_new);

    for step in 0..n_new {
        state.start_station();
        let available: Vec<usize> = (0..candidates.len())
            .filter(|c| !state.committed.contains(c))
            .collect();
        let budget_n = (budget.q_init + budget.q_bo).min(available.len());
        let n_init = budget.q_init.clamp(1, budget_n);

        let mut evaluations = Vec::with_capacity(budget_n);
        let mut best_field: Option<(usize, f64, Field)> = None;
        let mut record = |state: &mut PlannerState, c: usize, phase: Phase| {
            let (m, field) = objective.evaluate(&base, &[candidates.sites[c]]);
            state.observe(c, m.target);
            evaluations.push(Evaluation {
                candidates: vec![c],
                target: m.target,
                phase,
            });
            let better = match &best_field {
                None => true,
                Some((bc, bt, _)) => m.target > *bt || (m.target == *bt && c < *bc),
            };
            if better {
                best_field = Some((c, m.target, field));
            }
        };

        for i in index::sample(&mut rng, available.len(), n_init) {
            record(&mut state, available[i], Phase::Init);
        }

        let mut length_scale = None;
        if budget_n > n_init {
            let (xs, ys) = training_set(&state, candidates);
            let ls = GpModel::fit_best_length_scale(&xs, &ys, &LENGTH_SCALE_GRID, bo.jitter)?
                .length_scale();
            length_scale = Some(ls);
            for _ in n_init..budget_n {
                let (xs, ys) = training_set(&state, candidates);
                let model = GpModel::fit(&xs, &ys, ls, bo.jitter)?;
                let next = select_next(&model, candidates, &state, bo.xi)?;
                record(&mut state, next, Phase::Bo);
            }
        }

        let (chosen, _, field) = best_field.expect("at least one evaluation per station");
        base = field;
        state.committed.push(chosen);
        traces.push(StationTrace {
            step: step + 1,
            incumbent: running_max(evaluations.iter().map(|e| e.target)),
            evaluations,
            committed: vec![chosen],
            metrics_after: objective.metrics(&base),
            length_scale,
        });
    }

    Ok(finish_report(
        "bayesian",
        objective,
        scene,
        candidates,
        state.committed,
        traces,
        objective.queries() - queries_before,
        start,
    ))
}

fn training_set(state: &PlannerState, candidates: &CandidateSet) -> (Vec<Vec<f64>>, Vec<f64>) {
    state
        .observations
        .iter()
        .map(|&(c, t)| (candidates.inputs[c].clone(), t))
        .unzip()
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    method: &str,
    objective: &Objective<'_>,
    scene: &Scene,
    candidates: &CandidateSet,
    selected_candidates: Vec<usize>,
    traces: Vec<StationTrace>,
    drt_queries: usize,
    start: Instant,
) -> PlanReport {
    let sites: Vec<Candidate> = selected_candidates
        .iter()
        .map(|&c| candidates.sites[c])
        .collect();
    let metrics = objective.metrics(&objective.base_field(&sites));
    PlanReport {
        method: method.to_string(),
        selected: sites.iter().map(|c| objective.station(c)).collect(),
        selected_candidates,
        num_candidates: candidates.len(),
        traces,
        initial_metrics: initial_metrics(objective, scene),
        metrics,
        drt_queries,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Samples `n_groups` groups of `n_new` distinct candidates and keeps the
/// group with the largest T (first on ties).
pub fn baseline_random(
    objective: &Objective<'_>,
    scene: &Scene,
    candidates: &CandidateSet,
    n_new: usize,
    n_groups: usize,
    seed: u64,
) -> Result<PlanReport> {
    if n_groups == 0 {
        return Err(Error::Argument(
            "random sampling needs at least one group".into(),
        ));
    }
    if n_new == 0 {
        return Err(Error::Argument(
            "number of new stations must be >= 1".into(),
        ));
    }
    if candidates.len() < n_new {
        return Err(Error::Planning(format!(
            "{} candidates cannot host {n_new} new stations",
            candidates.len()
        )));
    }
    let start = Instant::now();
    let queries_before = objective.queries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = objective.base_field(&[]);
    let mut evaluations = Vec::with_capacity(n_groups);
    let mut best: Option<(usize, f64)> = None;
    for g in 0..n_groups {
        let group: Vec<usize> = index::sample(&mut rng, candidates.len(), n_new).into_vec();
        let sites: Vec<Candidate> = group.iter().map(|&c| candidates.sites[c]).collect();
        let (m, _) = objective.evaluate(&base, &sites);
        if best.is_none_or(|(_, bt)| m.target > bt) {
            best = Some((g, m.target));
        }
        evaluations.push(Evaluation {
            candidates: group,
            target: m.target,
            phase: Phase::Random,
        });
    }
    let (g, _) = best.expect("n_groups >= 1");
    let chosen = evaluations[g].candidates.clone();
    let sites: Vec<Candidate> = chosen.iter().map(|&c| candidates.sites[c]).collect();
    let trace = StationTrace {
        step: 1,
        incumbent: running_max(evaluations.iter().map(|e| e.target)),
        evaluations,
        committed: chosen.clone(),
        metrics_after: objective.metrics(&objective.base_field(&sites)),
        length_scale: None,
    };
    Ok(finish_report(
        "random_sampling",
        objective,
        scene,
        candidates,
        chosen,
        vec![trace],
        objective.queries() - queries_before,
        start,
    ))
}

/// Greedy exhaustive search: for each new station, evaluates every remaining
/// candidate on top of the committed set and commits the best (lowest index
/// on ties).
pub fn baseline_exhaustive(
    objective: &Objective<'_>,
    scene: &Scene,
    candidates: &CandidateSet,
    n_new: usize,
) -> Result<PlanReport> {
    if n_new == 0 {
        return Err(Error::Argument(
            "number of new stations must be >= 1".into(),
        ));
    }
    if candidates.len() < n_new {
        return Err(Error::Planning(format!(
            "{} candidates cannot host {n_new} new stations",
            candidates.len()
        )));
    }
    let start = Instant::now();
    let queries_before = objective.queries();
    let mut base = objective.base_field(&[]);
    let mut committed: Vec<usize> = Vec::with_capacity(n_new);
    let mut traces = Vec::with_capacity(n_new);
    for step in 0..n_new {
        let mut evaluations = Vec::new();
        let mut best: Option<(usize, f64, Field)> = None;
        for c in 0..candidates.len() {
            if committed.contains(&c) {
                continue;
            }
            let (m, field) = objective.evaluate(&base, &[candidates.sites[c]]);
            evaluations.push(Evaluation {
                candidates: vec![c],
                target: m.target,
                phase: Phase::Exhaustive,
            });
            if best.as_ref().is_none_or(|(_, bt, _)| m.target > *bt) {
                best = Some((c, m.target, field));
            }
        }
        let (chosen, _, field) = best.expect("candidates remain");
        base = field;
        committed.push(chosen);
        traces.push(StationTrace {
            step: step + 1,
            incumbent: running_max(evaluations.iter().map(|e| e.target)),
            evaluations,
            committed: vec![chosen],
            metrics_after: objective.metrics(&base),
            length_scale: None,
        });
    }
    Ok(finish_report(
        "exhaustive_search",
        objective,
        scene,
        candidates,
        committed,
        traces,
        objective.queries() - queries_before,
        start,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incumbent_ties_prefer_lowest_index() {
        let mut s = PlannerState::new();
        s.observe(5, 2.0);
        s.observe(3, 2.0);
        s.observe(7, 1.0);
        assert_eq!(s.incumbent(), Some((3, 2.0)));
        assert_eq!(s.t_best, 2.0);
        assert_eq!(s.queries, 3);
    }

    #[test]
    fn running_max_is_monotone() {
        assert_eq!(running_max([1.0, 3.0, 2.0, 4.0]), vec![1.0, 3.0, 3.0, 4.0]);
    }
}
