//! Small construction helpers shared by the test suites and the instance
//! generators. Not part of the stable API surface.
#![doc(hidden)]

use std::collections::BTreeMap;

use crate::net::{
    ArcDef, Bounds, ContainerDef, DemandParams, MarketParams, NetworkGraph, NodeId, NodeKind,
    PiecewiseLinear, ResourceId, ResourceKind, StorageParams, TimeGrid, UnitParams,
};

#[derive(Debug, Clone)]
pub struct GraphBuilder {
    graph: NetworkGraph,
    arc_counter: usize,
}

impl GraphBuilder {
    pub fn new(step_count: usize, step_hours: f64) -> Self {
        Self {
            graph: NetworkGraph::empty(TimeGrid::new(step_count, step_hours)),
            arc_counter: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.graph.grid.step_count
    }

    pub fn resource(mut self, id: &str, kind: ResourceKind) -> Self {
        self.graph.resources.insert(id.into(), kind);
        self
    }

    pub fn node(mut self, id: &str, kind: NodeKind) -> Self {
        self.graph.nodes.insert(id.into(), kind);
        self
    }

    pub fn balance(self, id: &str) -> Self {
        self.node(id, NodeKind::Balance)
    }

    pub fn demand(self, id: &str, resource: &str, series: Vec<f64>) -> Self {
        self.node(id, NodeKind::Demand(DemandParams { resource: resource.into(), demand: series }))
    }

    pub fn market(self, id: &str, resource: &str, buy: f64, sell: f64, emission: f64) -> Self {
        let steps = self.steps();
        self.node(
            id,
            NodeKind::Market(MarketParams {
                resource: resource.into(),
                buy_price: vec![buy; steps],
                sell_price: vec![sell; steps],
                emission_factor: emission,
            }),
        )
    }

    pub fn storage(self, id: &str, resource: &str, level_max: f64, initial: f64) -> Self {
        self.node(
            id,
            NodeKind::Storage(StorageParams {
                resource: resource.into(),
                loss: 1.0,
                load_eff: 1.0,
                unload_eff: 1.0,
                level_min: 0.0,
                level_max,
                initial_level: initial,
            }),
        )
    }

    pub fn arc(mut self, tail: &str, head: &str, resource: &str) -> Self {
        let id = format!("a{}", self.arc_counter);
        self.arc_counter += 1;
        self.graph.arcs.push(ArcDef {
            id,
            tail: tail.into(),
            head: head.into(),
            resource: resource.into(),
        });
        self
    }

    pub fn container(mut self, id: &str, members: &[&str]) -> Self {
        self.graph.containers.insert(
            id.into(),
            ContainerDef { members: members.iter().map(|m| m.to_string()).collect() },
        );
        self
    }

    pub fn build(self) -> NetworkGraph {
        self.graph
    }
}

/// A plain converter unit with a single conversion curve.
pub fn converter(from: &str, to: &str, curve: PiecewiseLinear) -> UnitParams {
    let mut conversions: BTreeMap<(ResourceId, ResourceId), PiecewiseLinear> = BTreeMap::new();
    conversions.insert((from.into(), to.into()), curve);
    UnitParams {
        conversions,
        min_up_steps: 0,
        min_down_steps: 0,
        ramp_up: None,
        ramp_down: None,
        startup_cost: 0.0,
        initial_status: false,
        subcomponents: vec![],
    }
}

/// A committable unit: startup cost, minimum times and initial status.
pub fn committable(
    from: &str,
    to: &str,
    curve: PiecewiseLinear,
    startup_cost: f64,
    min_up: u32,
    min_down: u32,
) -> UnitParams {
    UnitParams {
        startup_cost,
        min_up_steps: min_up,
        min_down_steps: min_down,
        initial_status: true,
        ..converter(from, to, curve)
    }
}

/// A shell unit declared as a chain of stages.
pub fn staged(stages: Vec<UnitParams>) -> UnitParams {
    UnitParams {
        conversions: BTreeMap::new(),
        min_up_steps: 0,
        min_down_steps: 0,
        ramp_up: None,
        ramp_down: None,
        startup_cost: 0.0,
        initial_status: false,
        subcomponents: stages,
    }
}

pub fn line(x1: f64, y1: f64) -> PiecewiseLinear {
    PiecewiseLinear::linear(0.0, x1, 0.0, y1).unwrap()
}

pub fn default_bounds() -> Bounds {
    Bounds::uniform(1000.0, 1000.0, 1000.0)
}

/// Single market feeding a single demand through one arc — the smallest
/// meaningful instance.
pub fn market_demand_instance(steps: usize, demand: f64) -> NetworkGraph {
    GraphBuilder::new(steps, 1.0)
        .resource("heat", ResourceKind::Heat)
        .market("m", "heat", 10.0, 1.0, 0.3)
        .demand("d", "heat", vec![demand; steps])
        .arc("m", "d", "heat")
        .build()
}

/// Market → unit → demand with a given conversion slope and unit parameters.
pub fn unit_line_instance(steps: usize, demand: f64, unit: UnitParams) -> NetworkGraph {
    GraphBuilder::new(steps, 1.0)
        .resource("gas", ResourceKind::Fuel)
        .resource("heat", ResourceKind::Heat)
        .market("m", "gas", 1.0, 0.0, 0.2)
        .node("u", NodeKind::GeneratingUnit(unit))
        .demand("d", "heat", vec![demand; steps])
        .arc("m", "u", "gas")
        .arc("u", "d", "heat")
        .build()
}

pub fn node_id(s: &str) -> NodeId {
    s.to_string()
}
