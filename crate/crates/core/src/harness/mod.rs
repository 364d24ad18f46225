//! Seeded Monte-Carlo experiment engine.
//!
//! A plan names a sweep kind, the parameter axes, a realization count, a
//! master seed, and integrator settings. Running it produces one row per
//! (axes point, realization) plus an aggregate table with per-point means
//! and standard deviations. Realizations execute concurrently; rows are
//! sorted by key before aggregation, so results are independent of
//! execution order.
//!
//! Seeding: every row derives its seed as
//! `derive(master_seed, [kind, instance_index, realization])`, where the
//! instance index runs over the *instance axes* only (network size and
//! disorder strength; ring connectivity for the census). Scan axes such as
//! the embedding strength, looping, or the feedback rate therefore reuse
//! identical graphs, frequencies, and initial conditions, which is what
//! makes paired comparisons along those axes meaningful.

mod analysis;
mod csv;
mod run;

pub use analysis::{eta_threshold, fit_linear, kuramoto_vs_sl};
pub use csv::{write_aggregate_csv, write_rows_csv};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dynamics::{Method, SimConfig};
use crate::error::{Error, Result};

/// Number of trailing recorded samples compared by the phase RMSE.
pub const ETA_WINDOW: usize = 200;

/// What a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// Coherence order parameters of uniform-FM graphs (complete, or their
    /// triad embeddings when a `j_c` axis is present).
    CoherenceSweep,
    /// Phase RMSE between a complete graph and its triad under shared draws.
    EtaSweep,
    /// XY energy error of triad dynamics against a basin-hopping reference.
    XyErrorSweep,
    /// Winding-number census over ring networks.
    TwistedCensus,
    /// Feedback-pumped triad error and amplitude homogeneity.
    FeedbackSweep,
    /// Stuart-Landau vs Kuramoto energy comparison on random graphs.
    KuramotoComparison,
}

impl PlanKind {
    pub(crate) fn tag(self) -> u64 {
        match self {
            PlanKind::CoherenceSweep => 1,
            PlanKind::EtaSweep => 2,
            PlanKind::XyErrorSweep => 3,
            PlanKind::TwistedCensus => 4,
            PlanKind::FeedbackSweep => 5,
            PlanKind::KuramotoComparison => 6,
        }
    }
}

/// Sweep axes; absent axes take per-kind defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axes {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub looped: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbor_count: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
}

pub const PLAN_FORMAT_VERSION: u32 = 1;

/// A complete sweep description; serializable as the plan JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub format_version: u32,
    pub kind: PlanKind,
    pub axes: Axes,
    pub realizations: usize,
    pub master_seed: u64,
    pub sim: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl ExperimentPlan {
    pub fn from_json(text: &str) -> Result<Self> {
        let plan: ExperimentPlan =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serialization cannot fail")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != PLAN_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported format_version {}, expected {PLAN_FORMAT_VERSION}",
                self.format_version
            )));
        }
        if self.realizations < 1 {
            return Err(Error::Schema("realizations must be >= 1".into()));
        }
        self.sim.validate()?;
        let a = &self.axes;

        let require = |name: &str, present: bool| -> Result<()> {
            if present {
                Ok(())
            } else {
                Err(Error::Schema(format!(
                    "axes.{name} is required for {:?}",
                    self.kind
                )))
            }
        };
        let forbid = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::Schema(format!(
                    "axes.{name} is not used by {:?}",
                    self.kind
                )))
            } else {
                Ok(())
            }
        };
        let non_empty = |name: &str, len: Option<usize>| -> Result<()> {
            if len == Some(0) {
                Err(Error::Schema(format!("axes.{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        for (name, len) in [
            ("epsilon", a.epsilon.as_ref().map(Vec::len)),
            ("j", a.j.as_ref().map(Vec::len)),
            ("j_c", a.j_c.as_ref().map(Vec::len)),
            ("looped", a.looped.as_ref().map(Vec::len)),
            ("n", a.n.as_ref().map(Vec::len)),
            ("neighbor_count", a.neighbor_count.as_ref().map(Vec::len)),
            ("sigma", a.sigma.as_ref().map(Vec::len)),
        ] {
            non_empty(name, len)?;
        }

        match self.kind {
            PlanKind::CoherenceSweep => {
                require("n", a.n.is_some())?;
                require("j", a.j.is_some())?;
                require("sigma", a.sigma.is_some())?;
                forbid("epsilon", a.epsilon.is_some())?;
                forbid("neighbor_count", a.neighbor_count.is_some())?;
                if a.looped.is_some() && a.j_c.is_none() {
                    return Err(Error::Schema(
                        "axes.looped requires axes.j_c (triad mode)".into(),
                    ));
                }
            }
            PlanKind::EtaSweep => {
                require("n", a.n.is_some())?;
                require("sigma", a.sigma.is_some())?;
                require("j_c", a.j_c.is_some())?;
                forbid("epsilon", a.epsilon.is_some())?;
                forbid("neighbor_count", a.neighbor_count.is_some())?;
                if self.sim.method != Method::FixedRk4 {
                    return Err(Error::Schema(
                        "eta_sweep requires sim.method = fixed_rk4 so paired runs share a time grid"
                            .into(),
                    ));
                }
                let steps = (self.sim.t_end / self.sim.dt).ceil() as usize;
                let records = steps / self.sim.record_stride + 1;
                if records < ETA_WINDOW {
                    return Err(Error::Schema(format!(
                        "eta_sweep needs at least {ETA_WINDOW} recorded samples, got {records}; \
                         lower record_stride or raise t_end"
                    )));
                }
            }
            PlanKind::XyErrorSweep => {
                require("n", a.n.is_some())?;
                require("j_c", a.j_c.is_some())?;
                forbid("j", a.j.is_some())?;
                forbid("epsilon", a.epsilon.is_some())?;
                forbid("neighbor_count", a.neighbor_count.is_some())?;
            }
            PlanKind::TwistedCensus => {
                require("n", a.n.is_some())?;
                require("neighbor_count", a.neighbor_count.is_some())?;
                forbid("j_c", a.j_c.is_some())?;
                forbid("sigma", a.sigma.is_some())?;
                forbid("epsilon", a.epsilon.is_some())?;
                forbid("looped", a.looped.is_some())?;
                for &n in a.n.as_ref().unwrap() {
                    for &k in a.neighbor_count.as_ref().unwrap() {
                        let spec = crate::graphs::RingSpec {
                            n_vertices: n,
                            neighbor_count: k,
                            coupling: 1.0,
                        };
                        spec.validate()
                            .map_err(|e| Error::Schema(e.to_string()))?;
                    }
                }
            }
            PlanKind::FeedbackSweep => {
                require("n", a.n.is_some())?;
                require("epsilon", a.epsilon.is_some())?;
                forbid("j", a.j.is_some())?;
                forbid("looped", a.looped.is_some())?;
                forbid("neighbor_count", a.neighbor_count.is_some())?;
            }
            PlanKind::KuramotoComparison => {
                require("n", a.n.is_some())?;
                forbid("epsilon", a.epsilon.is_some())?;
                forbid("j", a.j.is_some())?;
                forbid("j_c", a.j_c.is_some())?;
                forbid("looped", a.looped.is_some())?;
                forbid("neighbor_count", a.neighbor_count.is_some())?;
                forbid("sigma", a.sigma.is_some())?;
            }
        }

        let needs_triads = matches!(
            self.kind,
            PlanKind::EtaSweep | PlanKind::XyErrorSweep | PlanKind::FeedbackSweep
        ) || (self.kind == PlanKind::CoherenceSweep && a.j_c.is_some());
        if let Some(ns) = &a.n {
            let floor = if needs_triads || self.kind == PlanKind::TwistedCensus {
                3
            } else {
                2
            };
            for &n in ns {
                if n < floor {
                    return Err(Error::Schema(format!(
                        "axes.n entries must be >= {floor} for {:?}, got {n}",
                        self.kind
                    )));
                }
            }
        }
        if let Some(jcs) = &a.j_c {
            if jcs.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Schema("axes.j_c entries must be positive".into()));
            }
        }
        if let Some(sigmas) = &a.sigma {
            if sigmas.iter().any(|&v| v < 0.0) {
                return Err(Error::Schema(
                    "axes.sigma entries must be non-negative".into(),
                ));
            }
        }
        if let Some(eps) = &a.epsilon {
            if eps.iter().any(|&v| v < 0.0) {
                return Err(Error::Schema(
                    "axes.epsilon entries must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// Which axes were spelled out in the plan, in column (alphabetical)
    /// order; these become the leading CSV columns.
    pub(crate) fn explicit_axes(&self) -> Vec<AxisName> {
        let a = &self.axes;
        let mut out = Vec::new();
        if a.epsilon.is_some() {
            out.push(AxisName::Epsilon);
        }
        if a.j.is_some() {
            out.push(AxisName::J);
        }
        if a.j_c.is_some() {
            out.push(AxisName::JC);
        }
        if a.looped.is_some() {
            out.push(AxisName::Looped);
        }
        if a.n.is_some() {
            out.push(AxisName::N);
        }
        if a.neighbor_count.is_some() {
            out.push(AxisName::NeighborCount);
        }
        if a.sigma.is_some() {
            out.push(AxisName::Sigma);
        }
        out
    }

    /// Metric columns this plan produces, in column (alphabetical) order.
    pub fn metric_columns(&self) -> Vec<&'static str> {
        match self.kind {
            PlanKind::CoherenceSweep => {
                if self.axes.j_c.is_some() {
                    vec!["r_inter", "r_intra", "runtime_s"]
                } else {
                    vec!["r_complete", "runtime_s"]
                }
            }
            PlanKind::EtaSweep => vec!["eta", "runtime_s"],
            PlanKind::XyErrorSweep => vec![
                "e_bh",
                "e_emb",
                "e_unemb",
                "err_emb",
                "err_unemb",
                "runtime_s",
            ],
            PlanKind::TwistedCensus => vec!["abs_ell", "ell", "runtime_s"],
            PlanKind::FeedbackSweep => vec![
                "e_bh",
                "e_unemb",
                "err_unemb",
                "rho_spread_complete",
                "rho_spread_triad",
                "runtime_s",
            ],
            PlanKind::KuramotoComparison => vec!["e_km", "e_sl", "ediff_half", "runtime_s"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum AxisName {
    Epsilon,
    J,
    JC,
    Looped,
    N,
    NeighborCount,
    Sigma,
}

impl AxisName {
    pub(crate) fn header(self) -> &'static str {
        match self {
            AxisName::Epsilon => "epsilon",
            AxisName::J => "j",
            AxisName::JC => "j_c",
            AxisName::Looped => "looped",
            AxisName::N => "n",
            AxisName::NeighborCount => "neighbor_count",
            AxisName::Sigma => "sigma",
        }
    }
}

/// One fully resolved grid point. Defaults fill the axes a plan leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxesPoint {
    pub epsilon: f64,
    pub j: f64,
    pub j_c: f64,
    pub looped: bool,
    pub n: usize,
    pub neighbor_count: usize,
    pub sigma: f64,
    /// Row-major index over the full grid (alphabetical axis order).
    pub flat_index: usize,
    /// Row-major index over the instance axes only; rows sharing it reuse
    /// the same random draws.
    pub seed_index: usize,
}

impl AxesPoint {
    pub(crate) fn axis_value(&self, axis: AxisName) -> String {
        match axis {
            AxisName::Epsilon => format!("{}", self.epsilon),
            AxisName::J => format!("{}", self.j),
            AxisName::JC => format!("{}", self.j_c),
            AxisName::Looped => format!("{}", self.looped),
            AxisName::N => format!("{}", self.n),
            AxisName::NeighborCount => format!("{}", self.neighbor_count),
            AxisName::Sigma => format!("{}", self.sigma),
        }
    }
}

pub(crate) struct Grid {
    epsilon: Vec<f64>,
    j: Vec<f64>,
    j_c: Vec<f64>,
    looped: Vec<bool>,
    n: Vec<usize>,
    neighbor_count: Vec<usize>,
    sigma: Vec<f64>,
    kind: PlanKind,
}

impl Grid {
    pub(crate) fn resolve(plan: &ExperimentPlan) -> Self {
        let a = &plan.axes;
        let default_j_c = match plan.kind {
            PlanKind::FeedbackSweep => 20.0,
            _ => 10.0,
        };
        Self {
            epsilon: a.epsilon.clone().unwrap_or_else(|| vec![0.0]),
            j: a.j.clone().unwrap_or_else(|| vec![1.0]),
            j_c: a.j_c.clone().unwrap_or_else(|| vec![default_j_c]),
            looped: a.looped.clone().unwrap_or_else(|| vec![false]),
            n: a.n.clone().expect("validated: n axis required"),
            neighbor_count: a.neighbor_count.clone().unwrap_or_else(|| vec![1]),
            sigma: a.sigma.clone().unwrap_or_else(|| vec![0.0]),
            kind: plan.kind,
        }
    }

    fn seed_index(&self, n_idx: usize, k_idx: usize, sigma_idx: usize) -> usize {
        match self.kind {
            PlanKind::TwistedCensus => n_idx * self.neighbor_count.len() + k_idx,
            PlanKind::KuramotoComparison => n_idx,
            _ => n_idx * self.sigma.len() + sigma_idx,
        }
    }

    pub(crate) fn n_seed_points(&self) -> usize {
        match self.kind {
            PlanKind::TwistedCensus => self.n.len() * self.neighbor_count.len(),
            PlanKind::KuramotoComparison => self.n.len(),
            _ => self.n.len() * self.sigma.len(),
        }
    }

    /// All grid points in row-major order over the alphabetical axis list.
    pub(crate) fn points(&self) -> Vec<AxesPoint> {
        let mut out = Vec::new();
        let mut flat = 0;
        for &epsilon in &self.epsilon {
            for &j in &self.j {
                for &j_c in &self.j_c {
                    for &looped in &self.looped {
                        for (n_idx, &n) in self.n.iter().enumerate() {
                            for (k_idx, &neighbor_count) in
                                self.neighbor_count.iter().enumerate()
                            {
                                for (s_idx, &sigma) in self.sigma.iter().enumerate() {
                                    out.push(AxesPoint {
                                        epsilon,
                                        j,
                                        j_c,
                                        looped,
                                        n,
                                        neighbor_count,
                                        sigma,
                                        flat_index: flat,
                                        seed_index: self.seed_index(n_idx, k_idx, s_idx),
                                    });
                                    flat += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// One (axes point, realization) result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: AxesPoint,
    pub realization: usize,
    /// The instance seed all random draws of this row derive from.
    pub seed: u64,
    pub failed: bool,
    pub metrics: BTreeMap<&'static str, f64>,
}

/// Per-point aggregate over realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub point: AxesPoint,
    pub realizations: usize,
    pub failed: usize,
    /// Metric name -> (mean, sample standard deviation) over non-failed rows.
    pub stats: BTreeMap<&'static str, (f64, f64)>,
}

/// Full sweep output.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub aggregate: Vec<AggregateRow>,
}

impl SweepResult {
    /// Mean of one metric at the single aggregate row matching `select`.
    pub fn mean_where<F>(&self, metric: &str, select: F) -> Option<f64>
    where
        F: Fn(&AxesPoint) -> bool,
    {
        self.aggregate
            .iter()
            .find(|agg| select(&agg.point))
            .and_then(|agg| agg.stats.get(metric).map(|&(mean, _)| mean))
    }
}

pub use run::run_plan;

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / (values.len() - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_plan(kind: PlanKind) -> ExperimentPlan {
        ExperimentPlan {
            format_version: 1,
            kind,
            axes: Axes::default(),
            realizations: 2,
            master_seed: 1,
            sim: SimConfig::default(),
            output_path: None,
        }
    }

    #[test]
    fn plan_json_rejects_unknown_keys_by_name() {
        let text = r#"{
            "format_version": 1,
            "kind": "coherence_sweep",
            "axes": {"n": [5], "j": [1.0], "sigma": [1.0], "bogus": [1]},
            "realizations": 2,
            "master_seed": 1,
            "sim": {"dt": 0.01, "t_end": 10.0, "method": "adaptive_rk45",
                    "abs_tol": 1e-8, "rel_tol": 1e-8, "record_stride": 1,
                    "steady_tol": 1e-6, "init_amplitude": 1e-3}
        }"#;
        match ExperimentPlan::from_json(text) {
            Err(Error::Schema(msg)) => assert!(msg.contains("bogus"), "message was {msg}"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn plan_round_trips_through_json() {
        let mut plan = base_plan(PlanKind::EtaSweep);
        plan.axes.n = Some(vec![5, 10]);
        plan.axes.sigma = Some(vec![0.2]);
        plan.axes.j_c = Some(vec![1.0, 2.0]);
        plan.sim.method = Method::FixedRk4;
        plan.sim.t_end = 50.0;
        plan.sim.dt = 0.01;
        plan.sim.record_stride = 10;
        plan.validate().unwrap();
        let text = plan.to_json();
        let back = ExperimentPlan::from_json(&text).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn validation_requires_and_forbids_axes_per_kind() {
        let plan = base_plan(PlanKind::CoherenceSweep);
        assert!(matches!(plan.validate(), Err(Error::Schema(_))));

        let mut plan = base_plan(PlanKind::CoherenceSweep);
        plan.axes.n = Some(vec![5]);
        plan.axes.j = Some(vec![1.0]);
        plan.axes.sigma = Some(vec![1.0]);
        plan.validate().unwrap();
        plan.axes.epsilon = Some(vec![0.1]);
        match plan.validate() {
            Err(Error::Schema(msg)) => assert!(msg.contains("epsilon")),
            other => panic!("expected schema error, got {other:?}"),
        }

        let mut plan = base_plan(PlanKind::KuramotoComparison);
        plan.axes.n = Some(vec![4]);
        plan.validate().unwrap();
        plan.axes.sigma = Some(vec![0.0]);
        assert!(plan.validate().is_err());
    }

    #[test]
    fn validation_rejects_empty_axes_and_bad_values() {
        let mut plan = base_plan(PlanKind::TwistedCensus);
        plan.axes.n = Some(vec![10]);
        plan.axes.neighbor_count = Some(vec![]);
        assert!(plan.validate().is_err());
        plan.axes.neighbor_count = Some(vec![7]); // out of range for n = 10
        assert!(plan.validate().is_err());
        plan.axes.neighbor_count = Some(vec![2]);
        plan.validate().unwrap();
    }

    #[test]
    fn eta_plan_requires_fixed_step_and_enough_records() {
        let mut plan = base_plan(PlanKind::EtaSweep);
        plan.axes.n = Some(vec![5]);
        plan.axes.sigma = Some(vec![0.5]);
        plan.axes.j_c = Some(vec![2.0]);
        assert!(plan.validate().is_err(), "adaptive method must be rejected");
        plan.sim.method = Method::FixedRk4;
        plan.sim.t_end = 1.0;
        plan.sim.dt = 0.01;
        plan.sim.record_stride = 1;
        assert!(plan.validate().is_err(), "too few records must be rejected");
        plan.sim.t_end = 50.0;
        plan.sim.record_stride = 10;
        plan.validate().unwrap();
    }

    #[test]
    fn grid_enumerates_in_alphabetical_row_major_order() {
        let mut plan = base_plan(PlanKind::CoherenceSweep);
        plan.axes.n = Some(vec![5, 10]);
        plan.axes.j = Some(vec![0.5, 1.0]);
        plan.axes.sigma = Some(vec![0.2, 1.0]);
        let grid = Grid::resolve(&plan);
        let points = grid.points();
        assert_eq!(points.len(), 8);
        // j varies slowest (alphabetically before n and sigma), sigma fastest.
        assert_eq!((points[0].j, points[0].n, points[0].sigma), (0.5, 5, 0.2));
        assert_eq!((points[1].j, points[1].n, points[1].sigma), (0.5, 5, 1.0));
        assert_eq!((points[2].j, points[2].n, points[2].sigma), (0.5, 10, 0.2));
        assert_eq!((points[4].j, points[4].n, points[4].sigma), (1.0, 5, 0.2));
        for (k, p) in points.iter().enumerate() {
            assert_eq!(p.flat_index, k);
        }
    }

    #[test]
    fn seed_index_ignores_scan_axes() {
        let mut plan = base_plan(PlanKind::EtaSweep);
        plan.axes.n = Some(vec![5, 10]);
        plan.axes.sigma = Some(vec![0.2, 0.5]);
        plan.axes.j_c = Some(vec![1.0, 5.0, 10.0]);
        let grid = Grid::resolve(&plan);
        let points = grid.points();
        assert_eq!(points.len(), 12);
        assert_eq!(grid.n_seed_points(), 4);
        for p in &points {
            let expect = match (p.n, p.sigma) {
                (5, s) if s == 0.2 => 0,
                (5, _) => 1,
                (10, s) if s == 0.2 => 2,
                _ => 3,
            };
            assert_eq!(p.seed_index, expect, "point {p:?}");
        }
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-12);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let (m1, s1) = mean_std(&[7.0]);
        assert_eq!((m1, s1), (7.0, 0.0));
    }
}
