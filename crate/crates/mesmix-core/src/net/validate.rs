//! Instance validation. A total function: violations are data, not errors.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use super::{
    ArcId, NetworkGraph, NodeId, NodeKind, PwlError, ResourceId, ResourceKind, UnitParams,
};

/// One invariant violation, carrying the offending ids and a reason code.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "code")]
pub enum Violation {
    #[error("grid invalid: {detail}")]
    GridInvalid { detail: String },
    #[error("arc {arc} references missing node {node}")]
    MissingEndpoint { arc: ArcId, node: NodeId },
    #[error("arc {arc} references missing resource {resource}")]
    MissingResource { arc: ArcId, resource: ResourceId },
    #[error("arc {arc} is a self-loop")]
    SelfLoop { arc: ArcId },
    #[error("duplicate arc id {arc}")]
    DuplicateArcId { arc: ArcId },
    #[error("node {node}: conversion source series not strictly increasing")]
    NonIncreasingSource { node: NodeId },
    #[error("node {node}: conversion target series not strictly increasing")]
    NonIncreasingTarget { node: NodeId },
    #[error("node {node}: invalid conversion curve: {detail}")]
    CurveInvalid { node: NodeId, detail: String },
    #[error("node {node}: series length {got}, expected {expected} steps")]
    SeriesLength { node: NodeId, expected: usize, got: usize },
    #[error("node {node}: {detail}")]
    BadParameter { node: NodeId, detail: String },
    #[error("node {node} references missing resource {resource}")]
    NodeResourceMissing { node: NodeId, resource: ResourceId },
    #[error("information resource {resource} is not allowed in instance graphs")]
    InformationResource { resource: ResourceId },
    #[error("objective node {node} is not allowed in instance graphs")]
    ObjectiveNodeInInstance { node: NodeId },
    #[error("container {container} references missing member {member}")]
    ContainerMemberMissing { container: NodeId, member: NodeId },
    #[error("node {node} belongs to more than one container")]
    ContainerOverlap { node: NodeId },
    #[error("container {container}: {detail}")]
    ContainerBoundary { container: NodeId, detail: String },
    #[error("demand node {node} cannot reach any producer of its resource")]
    UnreachableDemand { node: NodeId },
}

/// Checks every type invariant of the instance data model plus demand
/// connectivity. Returns the empty list iff the instance is valid; the result
/// is independent of node/arc insertion order.
pub fn validate_instance(g: &NetworkGraph) -> Vec<Violation> {
    validate_graph(g, false)
}

/// Shared validation core. Built Model A graphs legitimately contain
/// information resources and objective nodes; instances do not.
pub(crate) fn validate_graph(g: &NetworkGraph, allow_information: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    let steps = g.grid.step_count;

    if steps < 1 {
        out.push(Violation::GridInvalid { detail: "step_count must be >= 1".into() });
    }
    if !(g.grid.step_hours > 0.0 && g.grid.step_hours.is_finite()) {
        out.push(Violation::GridInvalid { detail: "step_hours must be positive".into() });
    }

    if !allow_information {
        for (rid, kind) in &g.resources {
            if *kind == ResourceKind::Information {
                out.push(Violation::InformationResource { resource: rid.clone() });
            }
        }
    }

    for (nid, kind) in &g.nodes {
        match kind {
            NodeKind::GeneratingUnit(p) => validate_unit(g, nid, p, &mut out),
            NodeKind::Storage(p) => {
                check_resource(g, nid, &p.resource, &mut out);
                let ok_eff = |v: f64| v > 0.0 && v <= 1.0;
                if !ok_eff(p.loss) || !ok_eff(p.load_eff) || !ok_eff(p.unload_eff) {
                    out.push(Violation::BadParameter {
                        node: nid.clone(),
                        detail: "loss/load/unload coefficients must lie in (0, 1]".into(),
                    });
                }
                if !(p.level_min <= p.initial_level
                    && p.initial_level <= p.level_max
                    && p.level_min.is_finite()
                    && p.level_max.is_finite())
                {
                    out.push(Violation::BadParameter {
                        node: nid.clone(),
                        detail: "requires finite level_min <= initial_level <= level_max".into(),
                    });
                }
            }
            NodeKind::Market(p) => {
                check_resource(g, nid, &p.resource, &mut out);
                for series in [&p.buy_price, &p.sell_price] {
                    if series.len() != steps {
                        out.push(Violation::SeriesLength {
                            node: nid.clone(),
                            expected: steps,
                            got: series.len(),
                        });
                    }
                }
                if p.emission_factor < 0.0 || !p.emission_factor.is_finite() {
                    out.push(Violation::BadParameter {
                        node: nid.clone(),
                        detail: "emission_factor must be finite and nonnegative".into(),
                    });
                }
            }
            NodeKind::Demand(p) => {
                check_resource(g, nid, &p.resource, &mut out);
                if p.demand.len() != steps {
                    out.push(Violation::SeriesLength {
                        node: nid.clone(),
                        expected: steps,
                        got: p.demand.len(),
                    });
                }
            }
            NodeKind::Balance => {}
            NodeKind::Objective { objective_index } => {
                if !allow_information {
                    out.push(Violation::ObjectiveNodeInInstance { node: nid.clone() });
                } else if !(1..=3).contains(objective_index) {
                    out.push(Violation::BadParameter {
                        node: nid.clone(),
                        detail: "objective_index must be 1..=3".into(),
                    });
                }
            }
        }
    }

    let mut seen_arc_ids = BTreeSet::new();
    for arc in &g.arcs {
        if !seen_arc_ids.insert(&arc.id) {
            out.push(Violation::DuplicateArcId { arc: arc.id.clone() });
        }
        for end in [&arc.tail, &arc.head] {
            if !g.nodes.contains_key(end) {
                out.push(Violation::MissingEndpoint { arc: arc.id.clone(), node: end.clone() });
            }
        }
        match g.resources.get(&arc.resource) {
            None => out.push(Violation::MissingResource {
                arc: arc.id.clone(),
                resource: arc.resource.clone(),
            }),
            Some(ResourceKind::Information) if !allow_information => {
                out.push(Violation::InformationResource { resource: arc.resource.clone() })
            }
            _ => {}
        }
        if arc.tail == arc.head {
            out.push(Violation::SelfLoop { arc: arc.id.clone() });
        }
    }

    validate_containers(g, &mut out);

    for (nid, kind) in &g.nodes {
        if let NodeKind::Demand(p) = kind {
            if g.resources.contains_key(&p.resource) && !demand_reaches_producer(g, nid, &p.resource)
            {
                out.push(Violation::UnreachableDemand { node: nid.clone() });
            }
        }
    }

    // Canonical order: the violation multiset must not depend on insertion order.
    out.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    out
}

fn check_resource(g: &NetworkGraph, node: &str, resource: &ResourceId, out: &mut Vec<Violation>) {
    if !g.resources.contains_key(resource) {
        out.push(Violation::NodeResourceMissing {
            node: node.to_string(),
            resource: resource.clone(),
        });
    }
}

fn validate_unit(g: &NetworkGraph, nid: &str, p: &UnitParams, out: &mut Vec<Violation>) {
    let has_stages = !p.subcomponents.is_empty();
    if has_stages {
        if !p.conversions.is_empty() {
            out.push(Violation::BadParameter {
                node: nid.to_string(),
                detail: "a staged unit must not declare its own conversions".into(),
            });
        }
        if p.subcomponents.len() < 2 {
            out.push(Violation::BadParameter {
                node: nid.to_string(),
                detail: "a staged unit needs at least two stages".into(),
            });
        }
        for (i, stage) in p.subcomponents.iter().enumerate() {
            if !stage.subcomponents.is_empty() {
                out.push(Violation::BadParameter {
                    node: nid.to_string(),
                    detail: format!("stage {i} must not nest further subcomponents"),
                });
            }
            validate_unit_curves(g, nid, stage, out);
        }
        // Interior stages feed exactly one resource into the next stage.
        for i in 0..p.subcomponents.len().saturating_sub(1) {
            let cur = &p.subcomponents[i];
            let next = &p.subcomponents[i + 1];
            let cur_outs = cur.output_resources();
            if cur_outs.len() != 1 || cur.conversions.len() != 1 {
                out.push(Violation::BadParameter {
                    node: nid.to_string(),
                    detail: format!("stage {i} must have exactly one conversion"),
                });
                continue;
            }
            let mid = cur_outs[0];
            if next.input_resources() != vec![mid] {
                out.push(Violation::BadParameter {
                    node: nid.to_string(),
                    detail: format!("stage {} must consume exactly {mid}", i + 1),
                });
            }
        }
    } else if p.conversions.is_empty() {
        out.push(Violation::BadParameter {
            node: nid.to_string(),
            detail: "a generating unit needs at least one conversion".into(),
        });
    }
    validate_unit_curves(g, nid, p, out);
}

fn validate_unit_curves(g: &NetworkGraph, nid: &str, p: &UnitParams, out: &mut Vec<Violation>) {
    for ((from, to), curve) in &p.conversions {
        check_resource(g, nid, from, out);
        check_resource(g, nid, to, out);
        match curve.validate() {
            Ok(()) => {}
            Err(PwlError::NonIncreasingSource(_)) => {
                out.push(Violation::NonIncreasingSource { node: nid.to_string() })
            }
            Err(PwlError::NonIncreasingTarget(_)) => {
                out.push(Violation::NonIncreasingTarget { node: nid.to_string() })
            }
            Err(e) => out.push(Violation::CurveInvalid {
                node: nid.to_string(),
                detail: e.to_string(),
            }),
        }
    }
    for ramp in [p.ramp_up, p.ramp_down].into_iter().flatten() {
        if ramp < 0.0 || ramp.is_nan() {
            out.push(Violation::BadParameter {
                node: nid.to_string(),
                detail: "ramp limits must be nonnegative".into(),
            });
        }
    }
    if p.startup_cost < 0.0 || !p.startup_cost.is_finite() {
        out.push(Violation::BadParameter {
            node: nid.to_string(),
            detail: "startup_cost must be finite and nonnegative".into(),
        });
    }
}

fn validate_containers(g: &NetworkGraph, out: &mut Vec<Violation>) {
    let mut membership: BTreeMap<&NodeId, usize> = BTreeMap::new();
    for (cid, c) in &g.containers {
        if c.members.is_empty() {
            out.push(Violation::ContainerBoundary {
                container: cid.clone(),
                detail: "container has no members".into(),
            });
        }
        for m in &c.members {
            if !g.nodes.contains_key(m) {
                out.push(Violation::ContainerMemberMissing {
                    container: cid.clone(),
                    member: m.clone(),
                });
            }
            *membership.entry(m).or_insert(0) += 1;
        }
        let inbound = g
            .arcs
            .iter()
            .filter(|a| !c.members.contains(&a.tail) && c.members.contains(&a.head))
            .count();
        let outbound = g
            .arcs
            .iter()
            .filter(|a| c.members.contains(&a.tail) && !c.members.contains(&a.head))
            .count();
        if inbound != 1 || outbound != 1 {
            out.push(Violation::ContainerBoundary {
                container: cid.clone(),
                detail: format!(
                    "needs exactly one inbound and one outbound crossing arc (found {inbound}/{outbound})"
                ),
            });
        }
    }
    for (node, count) in membership {
        if count > 1 {
            out.push(Violation::ContainerOverlap { node: node.clone() });
        }
    }
}

/// Backward reachability from a demand node along arcs of its resource to
/// some producer (unit outputting it, storage or market of that resource).
fn demand_reaches_producer(g: &NetworkGraph, demand: &str, resource: &ResourceId) -> bool {
    let mut queue: VecDeque<&str> = VecDeque::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    queue.push_back(demand);
    seen.insert(demand);
    while let Some(node) = queue.pop_front() {
        for arc in g.arcs.iter().filter(|a| a.head == node && &a.resource == resource) {
            let tail = arc.tail.as_str();
            if !seen.insert(tail) {
                continue;
            }
            match g.nodes.get(tail) {
                Some(NodeKind::GeneratingUnit(p)) => {
                    if p.output_resources().contains(&resource)
                        || p.subcomponents
                            .last()
                            .is_some_and(|s| s.output_resources().contains(&resource))
                    {
                        return true;
                    }
                }
                Some(NodeKind::Storage(p)) if &p.resource == resource => return true,
                Some(NodeKind::Market(p)) if &p.resource == resource => return true,
                _ => {}
            }
            queue.push_back(tail);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{ArcDef, DemandParams, TimeGrid};

    fn grid() -> TimeGrid {
        TimeGrid::new(1, 1.0)
    }

    #[test]
    fn empty_graph_is_vacuously_valid() {
        let g = NetworkGraph::empty(grid());
        assert!(validate_instance(&g).is_empty());
    }

    #[test]
    fn arc_to_missing_node() {
        let mut g = NetworkGraph::empty(grid());
        g.resources.insert("heat".into(), ResourceKind::Heat);
        g.nodes.insert("d".into(), NodeKind::Demand(DemandParams {
            resource: "heat".into(),
            demand: vec![0.0],
        }));
        g.arcs.push(ArcDef {
            id: "a0".into(),
            tail: "X".into(),
            head: "d".into(),
            resource: "heat".into(),
        });
        let vs = validate_instance(&g);
        assert!(vs.iter().any(
            |v| matches!(v, Violation::MissingEndpoint { node, .. } if node == "X")
        ));
    }

    #[test]
    fn non_increasing_source_reported_per_node() {
        let mut g = NetworkGraph::empty(grid());
        g.resources.insert("gas".into(), ResourceKind::Fuel);
        g.resources.insert("heat".into(), ResourceKind::Heat);
        let mut conversions = ConversionMapHelper::new();
        conversions.insert(
            ("gas".into(), "heat".into()),
            crate::net::PiecewiseLinear {
                source: vec![0.0, 5.0, 5.0],
                target: vec![0.0, 1.0, 2.0],
            },
        );
        g.nodes.insert(
            "u".into(),
            NodeKind::GeneratingUnit(UnitParams {
                conversions,
                min_up_steps: 0,
                min_down_steps: 0,
                ramp_up: None,
                ramp_down: None,
                startup_cost: 0.0,
                initial_status: false,
                subcomponents: vec![],
            }),
        );
        let vs = validate_instance(&g);
        assert!(vs
            .iter()
            .any(|v| matches!(v, Violation::NonIncreasingSource { node } if node == "u")));
    }

    type ConversionMapHelper = std::collections::BTreeMap<(String, String), crate::net::PiecewiseLinear>;

    #[test]
    fn order_independence() {
        let mut g1 = NetworkGraph::empty(grid());
        g1.resources.insert("heat".into(), ResourceKind::Heat);
        g1.nodes.insert("d".into(), NodeKind::Demand(DemandParams {
            resource: "heat".into(),
            demand: vec![1.0],
        }));
        let mut g2 = g1.clone();
        for (i, (tail, head)) in [("X", "d"), ("Y", "d")].iter().enumerate() {
            g1.arcs.push(ArcDef {
                id: format!("a{i}"),
                tail: tail.to_string(),
                head: head.to_string(),
                resource: "heat".into(),
            });
        }
        for (i, (tail, head)) in [("Y", "d"), ("X", "d")].iter().enumerate() {
            g2.arcs.push(ArcDef {
                id: format!("a{}", 1 - i),
                tail: tail.to_string(),
                head: head.to_string(),
                resource: "heat".into(),
            });
        }
        assert_eq!(validate_instance(&g1), validate_instance(&g2));
    }
}
