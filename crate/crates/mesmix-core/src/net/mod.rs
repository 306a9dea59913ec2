//! Shared domain vocabulary: resources, time discretization, node kinds,
//! arcs, containers and the instance-level network graph both model builders
//! consume.

pub mod pwl;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use pwl::{PiecewiseLinear, PwlError, BREAKPOINT_EPS};
pub use validate::{validate_instance, Violation};

pub type NodeId = String;
pub type ResourceId = String;
pub type ArcId = String;

/// What a resource physically is. Information resources exist only in built
/// Model A graphs, never in instance data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Fuel,
    Heat,
    Power,
    Information,
}

/// Uniform time discretization for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub step_count: usize,
    pub step_hours: f64,
}

impl TimeGrid {
    pub fn new(step_count: usize, step_hours: f64) -> Self {
        Self { step_count, step_hours }
    }
}

/// Conversion table of a generating unit: one curve per (input, output) pair.
pub type ConversionMap = BTreeMap<(ResourceId, ResourceId), PiecewiseLinear>;

/// Generating-unit parameters. `subcomponents` declares a sequential stage
/// chain that Model A expands into individual nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitParams {
    pub conversions: ConversionMap,
    #[serde(default)]
    pub min_up_steps: u32,
    #[serde(default)]
    pub min_down_steps: u32,
    /// Maximum output increase per step; `None` means unconstrained.
    #[serde(default)]
    pub ramp_up: Option<f64>,
    /// Maximum output decrease per step; `None` means unconstrained.
    #[serde(default)]
    pub ramp_down: Option<f64>,
    #[serde(default)]
    pub startup_cost: f64,
    #[serde(default)]
    pub initial_status: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subcomponents: Vec<UnitParams>,
}

impl UnitParams {
    /// Distinct input resources of the conversion table, sorted.
    pub fn input_resources(&self) -> Vec<&ResourceId> {
        let set: BTreeSet<&ResourceId> = self.conversions.keys().map(|(a, _)| a).collect();
        set.into_iter().collect()
    }

    /// Distinct output resources of the conversion table, sorted.
    pub fn output_resources(&self) -> Vec<&ResourceId> {
        let set: BTreeSet<&ResourceId> = self.conversions.keys().map(|(_, b)| b).collect();
        set.into_iter().collect()
    }

    /// A unit needs commitment machinery (status/change binaries, activation,
    /// min up/down windows, big-M coupling) only when some technical
    /// parameter actually binds; anything else compiles as a pure converter.
    pub fn is_committable(&self) -> bool {
        self.startup_cost > 0.0
            || self.min_up_steps >= 2
            || self.min_down_steps >= 2
            || self.conversions.values().any(|c| c.source[0] > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub resource: ResourceId,
    /// Per-step retention coefficient applied to the carried-over level.
    pub loss: f64,
    pub load_eff: f64,
    pub unload_eff: f64,
    pub level_min: f64,
    pub level_max: f64,
    pub initial_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub resource: ResourceId,
    pub buy_price: Vec<f64>,
    pub sell_price: Vec<f64>,
    #[serde(default)]
    pub emission_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandParams {
    pub resource: ResourceId,
    pub demand: Vec<f64>,
}

/// Node taxonomy of the instance data model. Balance nodes carry no
/// parameters; objective nodes exist only in built Model A graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    GeneratingUnit(UnitParams),
    Storage(StorageParams),
    Market(MarketParams),
    Demand(DemandParams),
    Balance,
    Objective { objective_index: u8 },
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::GeneratingUnit(_) => "generating_unit",
            NodeKind::Storage(_) => "storage",
            NodeKind::Market(_) => "market",
            NodeKind::Demand(_) => "demand",
            NodeKind::Balance => "balance",
            NodeKind::Objective { .. } => "objective",
        }
    }
}

/// A directed arc carrying one resource.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcDef {
    pub id: ArcId,
    pub tail: NodeId,
    pub head: NodeId,
    pub resource: ResourceId,
}

/// Model A hierarchy element: a named group of nodes hidden behind one
/// boundary input and one boundary output arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerDef {
    pub members: BTreeSet<NodeId>,
}

/// Per-variable-family capacity window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyBounds {
    pub min: f64,
    pub max: f64,
}

impl FamilyBounds {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }
}

/// Capacity windows for the flow, purchase and sale variable families.
/// Storage level windows live on the storage nodes themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub flow: FamilyBounds,
    pub purchase: FamilyBounds,
    pub sale: FamilyBounds,
}

impl Bounds {
    pub fn uniform(flow_max: f64, purchase_max: f64, sale_max: f64) -> Self {
        Self {
            flow: FamilyBounds::new(0.0, flow_max),
            purchase: FamilyBounds::new(0.0, purchase_max),
            sale: FamilyBounds::new(0.0, sale_max),
        }
    }
}

/// Typed directed graph of energy components and resource arcs, with an
/// optional container hierarchy. Immutable after construction; reductions
/// produce new graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkGraph {
    pub resources: BTreeMap<ResourceId, ResourceKind>,
    pub nodes: BTreeMap<NodeId, NodeKind>,
    pub arcs: Vec<ArcDef>,
    pub containers: BTreeMap<NodeId, ContainerDef>,
    pub grid: TimeGrid,
}

impl NetworkGraph {
    pub fn empty(grid: TimeGrid) -> Self {
        Self {
            resources: BTreeMap::new(),
            nodes: BTreeMap::new(),
            arcs: Vec::new(),
            containers: BTreeMap::new(),
            grid,
        }
    }

    pub fn node(&self, id: &str) -> Option<&NodeKind> {
        self.nodes.get(id)
    }

    pub fn arc(&self, id: &str) -> Option<&ArcDef> {
        self.arcs.iter().find(|a| a.id == id)
    }

    pub fn in_arcs<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a ArcDef> {
        self.arcs.iter().filter(move |a| a.head == node)
    }

    pub fn out_arcs<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a ArcDef> {
        self.arcs.iter().filter(move |a| a.tail == node)
    }

    pub fn units(&self) -> impl Iterator<Item = (&NodeId, &UnitParams)> {
        self.nodes.iter().filter_map(|(id, kind)| match kind {
            NodeKind::GeneratingUnit(p) => Some((id, p)),
            _ => None,
        })
    }

    pub fn storages(&self) -> impl Iterator<Item = (&NodeId, &StorageParams)> {
        self.nodes.iter().filter_map(|(id, kind)| match kind {
            NodeKind::Storage(p) => Some((id, p)),
            _ => None,
        })
    }

    pub fn markets(&self) -> impl Iterator<Item = (&NodeId, &MarketParams)> {
        self.nodes.iter().filter_map(|(id, kind)| match kind {
            NodeKind::Market(p) => Some((id, p)),
            _ => None,
        })
    }

    pub fn demands(&self) -> impl Iterator<Item = (&NodeId, &DemandParams)> {
        self.nodes.iter().filter_map(|(id, kind)| match kind {
            NodeKind::Demand(p) => Some((id, p)),
            _ => None,
        })
    }

    /// Container that `node` belongs to, if any.
    pub fn container_of(&self, node: &str) -> Option<&NodeId> {
        self.containers
            .iter()
            .find(|(_, c)| c.members.contains(node))
            .map(|(id, _)| id)
    }

    /// A unit is a combined heat-and-power plant when its conversion table
    /// targets both a heat-kind and a power-kind resource.
    pub fn is_chp(&self, params: &UnitParams) -> bool {
        let mut has_heat = false;
        let mut has_power = false;
        for (_, out) in params.conversions.keys() {
            match self.resources.get(out) {
                Some(ResourceKind::Heat) => has_heat = true,
                Some(ResourceKind::Power) => has_power = true,
                _ => {}
            }
        }
        has_heat && has_power
    }

    /// Heat-kind output resources of a unit, sorted.
    pub fn heat_outputs(&self, params: &UnitParams) -> Vec<ResourceId> {
        let set: BTreeSet<ResourceId> = params
            .conversions
            .keys()
            .filter(|(_, out)| matches!(self.resources.get(out), Some(ResourceKind::Heat)))
            .map(|(_, out)| out.clone())
            .collect();
        set.into_iter().collect()
    }
}
