//! Model B: the flat, mathematically minimal representation, and the
//! reduction pipeline that derives it from Model A form.
//!
//! The pipeline flattens container boundaries, drops the explicit
//! information-transport subgraphs, contracts degree-2 balance nodes to a
//! fixpoint and greedily merges admissible sequential generating units,
//! composing their conversion curves. Every step is logged and the log is
//! replayable: applying it to the Model A base graph reproduces the Model B
//! base graph exactly.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model_a::{ModelAGraph, INFO_RESOURCE_PREFIX};
use crate::net::{
    ArcDef, ArcId, NetworkGraph, NodeId, NodeKind, PiecewiseLinear, PwlError, ResourceId,
    UnitParams, BREAKPOINT_EPS,
};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("curve domains do not compose: first maps into [{got_lo}, {got_hi}], second accepts [{want_lo}, {want_hi}]")]
    DomainMismatch { got_lo: f64, got_hi: f64, want_lo: f64, want_hi: f64 },
    #[error("invalid conversion curve: {0}")]
    InvalidCurve(#[from] PwlError),
    #[error("node {node} is not contractible: {detail}")]
    NotContractible { node: NodeId, detail: String },
    #[error("units {first} and {second} are not mergeable: {detail}")]
    NotMergeable { first: NodeId, second: NodeId, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    FlattenContainer,
    DropInfoSubgraph,
    ContractBalance,
    MergeUnits,
}

/// One replayable reduction step. Arc payloads carry full definitions so the
/// log doubles as a certificate of what was removed and created.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionStep {
    pub kind: ReductionKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub container: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<u8>,
    /// For merges: (upstream unit, downstream unit, surviving node id).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge: Option<(NodeId, NodeId, NodeId)>,
    pub removed_nodes: Vec<NodeId>,
    pub removed_arcs: Vec<ArcDef>,
    pub added_arcs: Vec<ArcDef>,
}

impl ReductionStep {
    fn new(kind: ReductionKind) -> Self {
        Self {
            kind,
            container: None,
            objective: None,
            merge: None,
            removed_nodes: Vec::new(),
            removed_arcs: Vec::new(),
            added_arcs: Vec::new(),
        }
    }
}

/// The flat representation plus the evidence of how it was derived.
#[derive(Debug, Clone, Serialize)]
pub struct ModelBGraph {
    pub base: NetworkGraph,
    /// Surviving merged node id → ordered constituent unit ids.
    pub merged_units: BTreeMap<NodeId, Vec<NodeId>>,
    pub contraction_log: Vec<ReductionStep>,
}

impl ModelBGraph {
    /// Number of conversion curves eliminated by merging (the μ of the size
    /// accounting): each admissible pairwise merge eliminates exactly one.
    pub fn eliminated_curves(&self) -> usize {
        self.contraction_log
            .iter()
            .filter(|s| s.kind == ReductionKind::MergeUnits)
            .count()
    }

    /// Plain degree-2 balance contractions outside container boundaries.
    pub fn plain_contractions(&self) -> usize {
        self.contraction_log
            .iter()
            .filter(|s| s.kind == ReductionKind::ContractBalance)
            .count()
    }
}

/// Composition ψ∘φ of two conversion curves: the single curve equivalent to
/// applying `phi` then `psi`.
///
/// Breakpoints are the images of φ's breakpoints under ψ together with the
/// preimages of ψ's breakpoints under φ, sorted by source value with
/// coincident points removed.
pub fn compose_pwl(
    phi: &PiecewiseLinear,
    psi: &PiecewiseLinear,
) -> Result<PiecewiseLinear, ReduceError> {
    phi.validate()?;
    psi.validate()?;
    let (range_lo, range_hi) = phi.range();
    let (dom_lo, dom_hi) = psi.domain();
    if range_lo < dom_lo - BREAKPOINT_EPS || range_hi > dom_hi + BREAKPOINT_EPS {
        return Err(ReduceError::DomainMismatch {
            got_lo: range_lo,
            got_hi: range_hi,
            want_lo: dom_lo,
            want_hi: dom_hi,
        });
    }

    let mut points: Vec<(f64, f64)> = Vec::with_capacity(phi.source.len() + psi.source.len());
    for (&x, &y) in phi.source.iter().zip(&phi.target) {
        points.push((x, psi.eval(y).expect("range checked against psi domain")));
    }
    for (&y_bar, &z) in psi.source.iter().zip(&psi.target) {
        if y_bar >= range_lo - BREAKPOINT_EPS && y_bar <= range_hi + BREAKPOINT_EPS {
            points.push((phi.eval_inverse(y_bar).expect("inside phi range"), z));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut source = Vec::with_capacity(points.len());
    let mut target = Vec::with_capacity(points.len());
    for (x, z) in points {
        if let Some(&last) = source.last() {
            if x - last <= BREAKPOINT_EPS {
                continue;
            }
        }
        source.push(x);
        target.push(z);
    }
    PiecewiseLinear::new(source, target).map_err(ReduceError::InvalidCurve)
}

/// Contracts a degree-2 balance node: `u → v → w` becomes `u → w`.
pub fn contract_balance(
    g: &NetworkGraph,
    v: &str,
) -> Result<(NetworkGraph, ReductionStep), ReduceError> {
    let step = contraction_step(g, v)?;
    let mut out = g.clone();
    apply_step(&mut out, &step);
    Ok((out, step))
}

fn contraction_step(g: &NetworkGraph, v: &str) -> Result<ReductionStep, ReduceError> {
    let fail = |detail: &str| ReduceError::NotContractible {
        node: v.to_string(),
        detail: detail.to_string(),
    };
    match g.node(v) {
        Some(NodeKind::Balance) => {}
        Some(_) => return Err(fail("not a balance node")),
        None => return Err(fail("no such node")),
    }
    let ins: Vec<&ArcDef> = g.in_arcs(v).collect();
    let outs: Vec<&ArcDef> = g.out_arcs(v).collect();
    if ins.len() != 1 || outs.len() != 1 {
        return Err(fail(&format!("degree must be (1, 1), found ({}, {})", ins.len(), outs.len())));
    }
    let (inc, out) = (ins[0], outs[0]);
    if inc.resource != out.resource {
        return Err(fail("incident arcs carry different resources"));
    }
    if inc.tail == out.head {
        return Err(fail("contraction would create a self-loop"));
    }
    let mut step = ReductionStep::new(ReductionKind::ContractBalance);
    step.removed_nodes.push(v.to_string());
    step.removed_arcs.push(inc.clone());
    step.removed_arcs.push(out.clone());
    step.added_arcs.push(ArcDef {
        id: format!("{}+{}", inc.id, out.id),
        tail: inc.tail.clone(),
        head: out.head.clone(),
        resource: inc.resource.clone(),
    });
    Ok(step)
}

/// Checks the §3.2 chain pattern and produces the merged unit parameters:
/// composed conversion curves, elementwise-max minimum times, conservatively
/// mapped ramp limits and summed startup costs.
fn merged_params(
    g: &NetworkGraph,
    v: &str,
    w: &str,
) -> Result<UnitParams, ReduceError> {
    let fail = |detail: String| ReduceError::NotMergeable {
        first: v.to_string(),
        second: w.to_string(),
        detail,
    };
    let pv = match g.node(v) {
        Some(NodeKind::GeneratingUnit(p)) => p,
        _ => return Err(fail("first node is not a generating unit".into())),
    };
    let pw = match g.node(w) {
        Some(NodeKind::GeneratingUnit(p)) => p,
        _ => return Err(fail("second node is not a generating unit".into())),
    };
    if pv.conversions.len() != 1 {
        return Err(fail("first unit must have exactly one conversion".into()));
    }
    let ((r_in, r_mid), phi) = pv.conversions.iter().next().expect("len checked");
    let outs: Vec<&ArcDef> = g.out_arcs(v).collect();
    if outs.len() != 1 || outs[0].head != w {
        return Err(fail("first unit's sole output must feed the second".into()));
    }
    if outs[0].resource != *r_mid {
        return Err(fail("connecting arc does not carry the conversion output".into()));
    }
    let w_ins: Vec<&ArcDef> = g.in_arcs(w).collect();
    if w_ins.len() != 1 {
        return Err(fail("second unit has additional external inputs".into()));
    }
    if pw.conversions.is_empty() || pw.conversions.keys().any(|(src, _)| src != r_mid) {
        return Err(fail("second unit does not consume the connecting resource".into()));
    }

    let mut conversions = BTreeMap::new();
    let mut psi_min_slope = f64::INFINITY;
    for ((_, r_out), psi) in &pw.conversions {
        let composed = compose_pwl(phi, psi).map_err(|e| fail(e.to_string()))?;
        psi_min_slope = psi_min_slope.min(psi.min_slope());
        conversions.insert((r_in.clone(), r_out.clone()), composed);
    }

    // The binding ramp limit expressed in the merged unit's output units: the
    // upstream limit maps through the weakest slope of the downstream curve,
    // the weaker of the two is eliminated.
    let map_ramp = |a_v: Option<f64>, a_w: Option<f64>| -> Option<f64> {
        match (a_v, a_w) {
            (None, None) => None,
            (Some(a), None) => Some(a * psi_min_slope),
            (None, Some(b)) => Some(b),
            (Some(a), Some(b)) => Some(b.min(a * psi_min_slope)),
        }
    };

    Ok(UnitParams {
        conversions,
        min_up_steps: pv.min_up_steps.max(pw.min_up_steps),
        min_down_steps: pv.min_down_steps.max(pw.min_down_steps),
        ramp_up: map_ramp(pv.ramp_up, pw.ramp_up),
        ramp_down: map_ramp(pv.ramp_down, pw.ramp_down),
        startup_cost: pv.startup_cost + pw.startup_cost,
        initial_status: pv.initial_status && pw.initial_status,
        subcomponents: vec![],
    })
}

/// Merges the sequential unit pair `(v, w)` into a single unit that inherits
/// v's input arcs and w's output arcs.
pub fn merge_units(
    g: &NetworkGraph,
    v: &str,
    w: &str,
) -> Result<(NetworkGraph, ReductionStep), ReduceError> {
    let step = merge_step(g, v, w)?;
    let mut out = g.clone();
    apply_step(&mut out, &step);
    Ok((out, step))
}

fn merge_step(g: &NetworkGraph, v: &str, w: &str) -> Result<ReductionStep, ReduceError> {
    merged_params(g, v, w)?;
    let mut survivor = format!("{v}+{w}");
    while g.nodes.contains_key(&survivor) {
        survivor.push('\'');
    }
    let mut step = ReductionStep::new(ReductionKind::MergeUnits);
    step.merge = Some((v.to_string(), w.to_string(), survivor.clone()));
    step.removed_nodes.push(v.to_string());
    step.removed_nodes.push(w.to_string());
    for arc in &g.arcs {
        if arc.head == v {
            step.removed_arcs.push(arc.clone());
            step.added_arcs.push(ArcDef { head: survivor.clone(), ..arc.clone() });
        } else if arc.tail == v && arc.head == w {
            step.removed_arcs.push(arc.clone());
        } else if arc.tail == w {
            step.removed_arcs.push(arc.clone());
            step.added_arcs.push(ArcDef { tail: survivor.clone(), ..arc.clone() });
        }
    }
    Ok(step)
}

/// Applies one logged step to a graph. `flatten` itself goes through this
/// function, so replaying a log performs byte-for-byte the same mutations.
pub fn apply_step(g: &mut NetworkGraph, step: &ReductionStep) {
    if step.kind == ReductionKind::MergeUnits {
        let (v, w, survivor) = step.merge.as_ref().expect("merge step carries the pair");
        let params = merged_params(g, v, w).expect("replayed merge must stay admissible");
        g.nodes.insert(survivor.clone(), NodeKind::GeneratingUnit(params));
    }
    for node in &step.removed_nodes {
        g.nodes.remove(node);
    }
    let removed: std::collections::BTreeSet<&ArcId> =
        step.removed_arcs.iter().map(|a| &a.id).collect();
    g.arcs.retain(|a| !removed.contains(&a.id));
    g.arcs.extend(step.added_arcs.iter().cloned());
    if let Some(container) = &step.container {
        g.containers.remove(container);
    }
    if let Some(objective) = step.objective {
        g.resources.remove(&format!("{INFO_RESOURCE_PREFIX}{objective}"));
    }
}

/// Replays a contraction log against a Model A base graph.
pub fn replay(base: &NetworkGraph, log: &[ReductionStep]) -> NetworkGraph {
    let mut g = base.clone();
    for step in log {
        apply_step(&mut g, step);
    }
    g
}

/// Units that admit a merge with their unique successor, per the chain
/// pattern: single conversion, sole output arc into a unit with no other
/// inputs consuming exactly the connecting resource.
fn admissible_successor(g: &NetworkGraph, v: &str) -> Option<NodeId> {
    let outs: Vec<&ArcDef> = g.out_arcs(v).collect();
    if outs.len() != 1 {
        return None;
    }
    let w = outs[0].head.clone();
    merged_params(g, v, &w).ok().map(|_| w)
}

/// Deterministic processing order: Kahn's algorithm with lowest-id tie
/// breaking; nodes on cycles are appended by id once the queue stalls.
fn topological_node_order(g: &NetworkGraph) -> Vec<NodeId> {
    let mut indegree: BTreeMap<&NodeId, usize> = g.nodes.keys().map(|n| (n, 0)).collect();
    for arc in &g.arcs {
        if let Some(d) = indegree.get_mut(&arc.head) {
            *d += 1;
        }
    }
    let mut order = Vec::with_capacity(g.nodes.len());
    let mut remaining: BTreeMap<&NodeId, usize> = indegree;
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .find(|(_, d)| **d == 0)
            .map(|(n, _)| (*n).clone())
            .or_else(|| remaining.keys().next().map(|n| (*n).clone()))
            .expect("nonempty");
        remaining.remove(&next);
        for arc in g.out_arcs(&next) {
            if let Some(d) = remaining.get_mut(&arc.head) {
                *d = d.saturating_sub(1);
            }
        }
        order.push(next);
    }
    order
}

/// Full reduction pipeline from a built Model A graph to Model B form.
pub fn flatten(ma: &ModelAGraph) -> Result<ModelBGraph, ReduceError> {
    let mut g = ma.base.clone();
    let mut log: Vec<ReductionStep> = Vec::new();
    let mut push = |g: &mut NetworkGraph, step: ReductionStep, log: &mut Vec<ReductionStep>| {
        apply_step(g, &step);
        log.push(step);
    };

    // Containers: contract both boundary balances, recorded as one step.
    for cid in ma.base.containers.keys() {
        let first = contraction_step(&g, &format!("{cid}.in"))?;
        apply_step(&mut g, &first);
        let second = contraction_step(&g, &format!("{cid}.out"))?;
        apply_step(&mut g, &second);
        let mut step = ReductionStep::new(ReductionKind::FlattenContainer);
        step.container = Some(cid.clone());
        step.removed_nodes.extend(first.removed_nodes);
        step.removed_nodes.extend(second.removed_nodes);
        step.removed_arcs.extend(first.removed_arcs);
        step.removed_arcs.extend(second.removed_arcs);
        step.added_arcs.extend(first.added_arcs);
        step.added_arcs.extend(second.added_arcs);
        g.containers.remove(cid);
        log.push(step);
    }

    // Information transport: remove each G_ω wholesale.
    for (k, sub) in &ma.info_subgraphs {
        let mut step = ReductionStep::new(ReductionKind::DropInfoSubgraph);
        step.objective = Some(*k);
        step.removed_nodes.extend(sub.nodes.iter().cloned());
        step.removed_arcs
            .extend(g.arcs.iter().filter(|a| sub.arcs.contains(&a.id)).cloned());
        push(&mut g, step, &mut log);
    }

    // Degree-2 balance contraction to a fixpoint, lowest id first.
    loop {
        let candidate = g
            .nodes
            .iter()
            .filter(|(_, k)| matches!(k, NodeKind::Balance))
            .map(|(id, _)| id.clone())
            .find(|id| contraction_step(&g, id).is_ok());
        match candidate {
            Some(v) => {
                let step = contraction_step(&g, &v)?;
                push(&mut g, step, &mut log);
            }
            None => break,
        }
    }

    // Greedy sequential-unit merging in topological order.
    let mut merged_units: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    loop {
        let order = topological_node_order(&g);
        let candidate = order
            .iter()
            .filter(|n| matches!(g.node(n), Some(NodeKind::GeneratingUnit(_))))
            .find_map(|v| admissible_successor(&g, v).map(|w| (v.clone(), w)));
        match candidate {
            Some((v, w)) => {
                let step = merge_step(&g, &v, &w)?;
                let (_, _, survivor) = step.merge.clone().expect("merge step");
                let mut constituents = merged_units.remove(&v).unwrap_or_else(|| vec![v.clone()]);
                constituents.extend(merged_units.remove(&w).unwrap_or_else(|| vec![w.clone()]));
                merged_units.insert(survivor, constituents);
                push(&mut g, step, &mut log);
            }
            None => break,
        }
    }

    debug_assert!(g.containers.is_empty());
    debug_assert!(!g.nodes.values().any(|k| matches!(k, NodeKind::Objective { .. })));
    debug_assert!(!g
        .resources
        .values()
        .any(|k| matches!(k, crate::net::ResourceKind::Information)));

    Ok(ModelBGraph { base: g, merged_units, contraction_log: log })
}

/// Check that a merged unit's curve equals the composition of its
/// constituents at `samples` uniform points; returns the largest deviation.
pub fn composition_error(
    merged: &PiecewiseLinear,
    phi: &PiecewiseLinear,
    psi: &PiecewiseLinear,
    samples: usize,
) -> f64 {
    let (lo, hi) = phi.domain();
    let mut worst = 0.0f64;
    for i in 0..=samples {
        let x = lo + (hi - lo) * (i as f64) / (samples as f64);
        let direct = merged.eval(x).expect("inside domain");
        let sequential = psi.eval(phi.eval(x).expect("inside domain")).expect("inside range");
        worst = worst.max((direct - sequential).abs());
    }
    worst
}

/// Resource consumed by a unit (the single conversion source), if unique.
pub fn sole_input(params: &UnitParams) -> Option<&ResourceId> {
    let inputs = params.input_resources();
    if inputs.len() == 1 {
        Some(inputs[0])
    } else {
        None
    }
}

#[cfg(test)]
mod tests;
