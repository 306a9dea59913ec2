//! Model A: the readability-oriented representation.
//!
//! Containers become explicit boundary balance pairs, declared subcomponent
//! chains are expanded into individual stage nodes, every objective gets an
//! explicit information-transport subgraph, and nodes expose fixed typed
//! ports so each arc is encoded by an out-port variable of its tail and an
//! in-port variable of its head.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::net::validate::validate_graph;
use crate::net::{
    ArcDef, ArcId, NetworkGraph, NodeId, NodeKind, ResourceId, ResourceKind, UnitParams,
    Violation,
};

pub const INFO_RESOURCE_PREFIX: &str = "information.";
pub const OBJECTIVE_COUNT: u8 = 3;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("instance is invalid ({} violations)", .0.len())]
    InvalidInstance(Vec<Violation>),
    #[error("node {node}: port template mismatch: {detail}")]
    TemplateMismatch { node: NodeId, detail: String },
    #[error("generated id {id} collides with an existing id")]
    IdCollision { id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    In,
    Out,
}

/// A fixed, typed attachment point of a node for one arc.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Port {
    pub owner: NodeId,
    pub direction: PortDirection,
    pub resource: ResourceId,
    pub slot: u32,
}

/// The information-transport subgraph G_ω feeding one objective node.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InfoSubgraph {
    pub nodes: BTreeSet<NodeId>,
    pub arcs: BTreeSet<ArcId>,
}

/// Which end of an arc a port flow descriptor refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcEnd {
    TailOut,
    HeadIn,
}

/// Descriptor of one port flow variable: the flow on `arc` at time `t` seen
/// from the tail's out-port or the head's in-port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortFlowVar {
    pub arc: ArcId,
    pub end: ArcEnd,
    pub t: usize,
}

/// The built Model A graph: expanded base network, port table, arc-to-port
/// bindings and the per-objective information subgraphs.
#[derive(Debug, Clone, Serialize)]
pub struct ModelAGraph {
    pub base: NetworkGraph,
    pub ports: Vec<Port>,
    /// arc id → (index of tail out-port, index of head in-port).
    pub port_bindings: BTreeMap<ArcId, (usize, usize)>,
    pub info_subgraphs: BTreeMap<u8, InfoSubgraph>,
    /// Extra nodes contributed by subcomponent expansion, Σ(stages − 1).
    pub subcomponent_extra: usize,
    /// Expanded stage node → (declared unit, stage index starting at 1).
    pub stage_origin: BTreeMap<NodeId, (NodeId, usize)>,
}

impl ModelAGraph {
    /// Exactly two flow descriptors per arc per time step.
    pub fn enumerate_port_variables(&self) -> Vec<PortFlowVar> {
        let mut out = Vec::with_capacity(2 * self.base.arcs.len() * self.base.grid.step_count);
        for t in 0..self.base.grid.step_count {
            for arc in &self.base.arcs {
                out.push(PortFlowVar { arc: arc.id.clone(), end: ArcEnd::TailOut, t });
                out.push(PortFlowVar { arc: arc.id.clone(), end: ArcEnd::HeadIn, t });
            }
        }
        out
    }

    /// Total node count of G_ω subgraphs.
    pub fn info_node_count(&self) -> usize {
        self.info_subgraphs.values().map(|s| s.nodes.len()).sum()
    }

    /// Total arc count of G_ω subgraphs.
    pub fn info_arc_count(&self) -> usize {
        self.info_subgraphs.values().map(|s| s.arcs.len()).sum()
    }

    /// Balance nodes inside G_ω subgraphs (the aggregators).
    pub fn info_balance_count(&self) -> usize {
        self.info_subgraphs
            .values()
            .flat_map(|s| s.nodes.iter())
            .filter(|n| matches!(self.base.nodes.get(*n), Some(NodeKind::Balance)))
            .count()
    }

    pub fn is_info_arc(&self, arc: &ArcId) -> bool {
        self.info_subgraphs.values().any(|s| s.arcs.contains(arc))
    }
}

/// Builds the full Model A graph: validation, subcomponent expansion,
/// container boundaries, information transport, port instantiation.
pub fn build_model_a(g: &NetworkGraph) -> Result<ModelAGraph, BuildError> {
    let violations = crate::net::validate_instance(g);
    if !violations.is_empty() {
        return Err(BuildError::InvalidInstance(violations));
    }
    let mut base = g.clone();
    let (subcomponent_extra, stage_origin) = expand_subcomponents(&mut base)?;
    wrap_containers(&mut base)?;
    let info_subgraphs = generate_information_transport(&mut base)?;

    debug_assert!(
        validate_graph(&base, true).is_empty(),
        "built Model A base graph violates instance invariants"
    );

    let mut ma = ModelAGraph {
        base,
        ports: Vec::new(),
        port_bindings: BTreeMap::new(),
        info_subgraphs,
        subcomponent_extra,
        stage_origin,
    };
    bind_ports(&mut ma)?;
    check_templates(&ma)?;
    Ok(ma)
}

/// Port/binding construction without containers being wrapped or information
/// transport being generated. Used to compile an already-flat graph in the
/// node-focused style, e.g. for the flow-variable ratio checks.
pub fn lift_flat(g: &NetworkGraph) -> Result<ModelAGraph, BuildError> {
    let mut ma = ModelAGraph {
        base: g.clone(),
        ports: Vec::new(),
        port_bindings: BTreeMap::new(),
        info_subgraphs: BTreeMap::new(),
        subcomponent_extra: 0,
        stage_origin: BTreeMap::new(),
    };
    bind_ports(&mut ma)?;
    Ok(ma)
}

fn fresh_id(base: &NetworkGraph, candidate: String) -> Result<String, BuildError> {
    if base.nodes.contains_key(&candidate)
        || base.containers.contains_key(&candidate)
        || base.arcs.iter().any(|a| a.id == candidate)
    {
        return Err(BuildError::IdCollision { id: candidate });
    }
    Ok(candidate)
}

/// Replaces each staged unit by its chain of stage nodes. The first stage
/// inherits the unit's in-arcs, the last stage its out-arcs.
fn expand_subcomponents(
    base: &mut NetworkGraph,
) -> Result<(usize, BTreeMap<NodeId, (NodeId, usize)>), BuildError> {
    let staged: Vec<NodeId> = base
        .units()
        .filter(|(_, p)| !p.subcomponents.is_empty())
        .map(|(id, _)| id.clone())
        .collect();
    let mut extra = 0usize;
    let mut origin = BTreeMap::new();

    for uid in staged {
        let params = match base.nodes.remove(&uid) {
            Some(NodeKind::GeneratingUnit(p)) => p,
            _ => unreachable!("staged id collected from units"),
        };
        let k = params.subcomponents.len();
        let stage_ids: Vec<NodeId> = (1..=k).map(|i| format!("{uid}.s{i}")).collect();
        for id in &stage_ids {
            fresh_id(base, id.clone())?;
        }
        for (i, stage) in params.subcomponents.iter().enumerate() {
            let mut stage_params = stage.clone();
            stage_params.subcomponents = Vec::new();
            base.nodes.insert(stage_ids[i].clone(), NodeKind::GeneratingUnit(stage_params));
            origin.insert(stage_ids[i].clone(), (uid.clone(), i + 1));
        }
        for arc in base.arcs.iter_mut() {
            if arc.head == uid {
                arc.head = stage_ids[0].clone();
            }
            if arc.tail == uid {
                arc.tail = stage_ids[k - 1].clone();
            }
        }
        for i in 0..k - 1 {
            let mid = params.subcomponents[i]
                .output_resources()
                .first()
                .map(|r| (*r).clone())
                .ok_or_else(|| BuildError::TemplateMismatch {
                    node: uid.clone(),
                    detail: format!("stage {} has no output resource", i + 1),
                })?;
            let id = fresh_id(base, format!("{uid}.chain{}", i + 1))?;
            base.arcs.push(ArcDef {
                id,
                tail: stage_ids[i].clone(),
                head: stage_ids[i + 1].clone(),
                resource: mid,
            });
        }
        for c in base.containers.values_mut() {
            if c.members.remove(&uid) {
                c.members.extend(stage_ids.iter().cloned());
            }
        }
        extra += k - 1;
    }
    Ok((extra, origin))
}

/// Wraps every container with its two boundary balance nodes and two arcs.
fn wrap_containers(base: &mut NetworkGraph) -> Result<(), BuildError> {
    let container_ids: Vec<NodeId> = base.containers.keys().cloned().collect();
    for cid in container_ids {
        let members = base.containers[&cid].members.clone();
        let inbound: Vec<usize> = base
            .arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| !members.contains(&a.tail) && members.contains(&a.head))
            .map(|(i, _)| i)
            .collect();
        let outbound: Vec<usize> = base
            .arcs
            .iter()
            .enumerate()
            .filter(|(_, a)| members.contains(&a.tail) && !members.contains(&a.head))
            .map(|(i, _)| i)
            .collect();
        if inbound.len() != 1 || outbound.len() != 1 {
            return Err(BuildError::TemplateMismatch {
                node: cid.clone(),
                detail: format!(
                    "container needs exactly one crossing arc per direction (found {}/{})",
                    inbound.len(),
                    outbound.len()
                ),
            });
        }
        let bb_in = fresh_id(base, format!("{cid}.in"))?;
        let bb_out = fresh_id(base, format!("{cid}.out"))?;
        base.nodes.insert(bb_in.clone(), NodeKind::Balance);
        base.nodes.insert(bb_out.clone(), NodeKind::Balance);

        // Inbound: outside → bb_in (keeps the original id) plus bb_in → inner.
        let inner_head = base.arcs[inbound[0]].head.clone();
        let resource_in = base.arcs[inbound[0]].resource.clone();
        base.arcs[inbound[0]].head = bb_in.clone();
        let id = fresh_id(base, format!("{cid}.in.arc"))?;
        base.arcs.push(ArcDef { id, tail: bb_in.clone(), head: inner_head, resource: resource_in });

        // Outbound: inner → bb_out plus bb_out → outside (keeps the original id).
        let inner_tail = base.arcs[outbound[0]].tail.clone();
        let resource_out = base.arcs[outbound[0]].resource.clone();
        base.arcs[outbound[0]].tail = bb_out.clone();
        let id = fresh_id(base, format!("{cid}.out.arc"))?;
        base.arcs.push(ArcDef { id, tail: inner_tail, head: bb_out.clone(), resource: resource_out });

        // Boundary balances belong to the container they delimit.
        let c = base.containers.get_mut(&cid).unwrap();
        c.members.insert(bb_in);
        c.members.insert(bb_out);
    }
    Ok(())
}

/// Objective contributors by index: markets feed costs (1) and emissions (2),
/// units feed startup costs (1), CHP plants feed produced heat (3).
fn contributors(base: &NetworkGraph, objective: u8) -> Vec<NodeId> {
    let mut out = Vec::new();
    for (nid, kind) in &base.nodes {
        let contributes = match (objective, kind) {
            (1, NodeKind::Market(_)) => true,
            (1, NodeKind::GeneratingUnit(p)) => p.startup_cost > 0.0,
            (2, NodeKind::Market(p)) => p.emission_factor > 0.0,
            (3, NodeKind::GeneratingUnit(p)) => base.is_chp(p),
            _ => false,
        };
        if contributes {
            out.push(nid.clone());
        }
    }
    out
}

/// Adds one information resource, one aggregation balance, one objective node
/// and the information arcs per objective.
fn generate_information_transport(
    base: &mut NetworkGraph,
) -> Result<BTreeMap<u8, InfoSubgraph>, BuildError> {
    let mut subgraphs = BTreeMap::new();
    for k in 1..=OBJECTIVE_COUNT {
        let resource = format!("{INFO_RESOURCE_PREFIX}{k}");
        base.resources.insert(resource.clone(), ResourceKind::Information);

        let agg = fresh_id(base, format!("objective.{k}.agg"))?;
        let obj = fresh_id(base, format!("objective.{k}"))?;
        base.nodes.insert(agg.clone(), NodeKind::Balance);
        base.nodes.insert(obj.clone(), NodeKind::Objective { objective_index: k });

        let mut sub = InfoSubgraph::default();
        sub.nodes.insert(agg.clone());
        sub.nodes.insert(obj.clone());

        for source in contributors(base, k) {
            let id = fresh_id(base, format!("info.{k}.{source}"))?;
            base.arcs.push(ArcDef {
                id: id.clone(),
                tail: source,
                head: agg.clone(),
                resource: resource.clone(),
            });
            sub.arcs.insert(id);
        }
        let id = fresh_id(base, format!("info.{k}.sum"))?;
        base.arcs.push(ArcDef {
            id: id.clone(),
            tail: agg.clone(),
            head: obj.clone(),
            resource: resource.clone(),
        });
        sub.arcs.insert(id);
        subgraphs.insert(k, sub);
    }
    Ok(subgraphs)
}

/// Creates the out-port of the tail and the in-port of the head for every
/// arc, assigning slots per (owner, direction, resource).
fn bind_ports(ma: &mut ModelAGraph) -> Result<(), BuildError> {
    let mut slot_counter: BTreeMap<(NodeId, PortDirection, ResourceId), u32> = BTreeMap::new();
    let mut next_port =
        |ports: &mut Vec<Port>, owner: &NodeId, dir: PortDirection, res: &ResourceId| -> usize {
            let slot = slot_counter
                .entry((owner.clone(), dir, res.clone()))
                .and_modify(|s| *s += 1)
                .or_insert(0);
            ports.push(Port {
                owner: owner.clone(),
                direction: dir,
                resource: res.clone(),
                slot: *slot,
            });
            ports.len() - 1
        };
    for arc in &ma.base.arcs {
        let out_port = next_port(&mut ma.ports, &arc.tail, PortDirection::Out, &arc.resource);
        let in_port = next_port(&mut ma.ports, &arc.head, PortDirection::In, &arc.resource);
        ma.port_bindings.insert(arc.id.clone(), (out_port, in_port));
    }
    Ok(())
}

/// Verifies the fixed-port discipline: units and storages carry exactly one
/// arc per templated commodity port; foreign resources are rejected.
fn check_templates(ma: &ModelAGraph) -> Result<(), BuildError> {
    let base = &ma.base;
    let is_info =
        |r: &ResourceId| matches!(base.resources.get(r), Some(ResourceKind::Information));
    for (nid, kind) in &base.nodes {
        let ins: Vec<&ArcDef> = base.in_arcs(nid).collect();
        let outs: Vec<&ArcDef> = base.out_arcs(nid).collect();
        let mismatch = |detail: String| {
            Err(BuildError::TemplateMismatch { node: nid.clone(), detail })
        };
        match kind {
            NodeKind::GeneratingUnit(p) => {
                for r in p.input_resources() {
                    let n = ins.iter().filter(|a| &a.resource == r).count();
                    if n != 1 {
                        return mismatch(format!("expected exactly one {r} input arc, found {n}"));
                    }
                }
                for r in p.output_resources() {
                    let n = outs.iter().filter(|a| &a.resource == r).count();
                    if n != 1 {
                        return mismatch(format!("expected exactly one {r} output arc, found {n}"));
                    }
                }
                if let Some(a) = ins.iter().find(|a| !p.conversions.keys().any(|(i, _)| *i == a.resource)) {
                    return mismatch(format!("unexpected input arc of resource {}", a.resource));
                }
                if let Some(a) = outs.iter().find(|a| {
                    !is_info(&a.resource) && !p.conversions.keys().any(|(_, o)| *o == a.resource)
                }) {
                    return mismatch(format!("unexpected output arc of resource {}", a.resource));
                }
            }
            NodeKind::Storage(p) => {
                let n_in = ins.iter().filter(|a| a.resource == p.resource).count();
                let n_out =
                    outs.iter().filter(|a| a.resource == p.resource && !is_info(&a.resource)).count();
                if n_in != 1 || n_out != 1 {
                    return mismatch(format!(
                        "storage needs exactly one {0} input and one {0} output arc (found {1}/{2})",
                        p.resource, n_in, n_out
                    ));
                }
                if ins.iter().any(|a| a.resource != p.resource)
                    || outs.iter().any(|a| a.resource != p.resource && !is_info(&a.resource))
                {
                    return mismatch("storage arcs must carry its resource".into());
                }
            }
            NodeKind::Market(p) => {
                if ins
                    .iter()
                    .chain(outs.iter())
                    .any(|a| a.resource != p.resource && !is_info(&a.resource))
                {
                    return mismatch("market arcs must carry its resource".into());
                }
            }
            NodeKind::Demand(p) => {
                if !outs.is_empty() {
                    return mismatch("demand nodes have no output arcs".into());
                }
                if ins.iter().any(|a| a.resource != p.resource) {
                    return mismatch("demand arcs must carry its resource".into());
                }
            }
            NodeKind::Balance => {}
            NodeKind::Objective { .. } => {
                if !outs.is_empty() || ins.iter().any(|a| !is_info(&a.resource)) {
                    return mismatch("objective nodes accept information inputs only".into());
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
