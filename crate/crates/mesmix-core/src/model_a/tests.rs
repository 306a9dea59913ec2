use super::*;
use crate::net::ResourceKind;
use crate::testing::*;

#[test]
fn market_demand_gets_objective_machinery() {
    let g = market_demand_instance(2, 5.0);
    let ma = build_model_a(&g).unwrap();
    // 2 base nodes plus, per objective, one aggregation balance and one
    // objective node.
    assert_eq!(ma.base.nodes.len(), 2 + 6);
    assert_eq!(ma.info_node_count(), 6);
    assert_eq!(ma.info_balance_count(), 3);
    // Base arc plus: market feeds costs and emissions, each subgraph carries
    // its aggregation arc.
    let f1 = &ma.info_subgraphs[&1];
    let f2 = &ma.info_subgraphs[&2];
    let f3 = &ma.info_subgraphs[&3];
    assert_eq!(f1.arcs.len(), 2);
    assert_eq!(f2.arcs.len(), 2);
    assert_eq!(f3.arcs.len(), 1);
    assert_eq!(ma.base.arcs.len(), 1 + 5);
    assert!(f1.arcs.contains("info.1.m"));
    assert!(f2.arcs.contains("info.2.m"));
}

#[test]
fn every_arc_binds_matching_ports() {
    let g = market_demand_instance(2, 5.0);
    let ma = build_model_a(&g).unwrap();
    for arc in &ma.base.arcs {
        let (out_p, in_p) = ma.port_bindings[&arc.id];
        assert_eq!(ma.ports[out_p].direction, PortDirection::Out);
        assert_eq!(ma.ports[in_p].direction, PortDirection::In);
        assert_eq!(ma.ports[out_p].resource, arc.resource);
        assert_eq!(ma.ports[in_p].resource, arc.resource);
        assert_eq!(ma.ports[out_p].owner, arc.tail);
        assert_eq!(ma.ports[in_p].owner, arc.head);
    }
}

#[test]
fn container_adds_two_nodes_and_two_arcs() {
    let plain = unit_line_instance(2, 4.0, converter("gas", "heat", line(10.0, 8.0)));
    let wrapped = {
        let mut g = plain.clone();
        g.containers.insert(
            "site".into(),
            crate::net::ContainerDef { members: std::iter::once("u".to_string()).collect() },
        );
        g
    };
    let ma_plain = build_model_a(&plain).unwrap();
    let ma_wrapped = build_model_a(&wrapped).unwrap();
    assert_eq!(ma_wrapped.base.nodes.len(), ma_plain.base.nodes.len() + 2);
    assert_eq!(ma_wrapped.base.arcs.len(), ma_plain.base.arcs.len() + 2);
    assert!(matches!(ma_wrapped.base.nodes.get("site.in"), Some(NodeKind::Balance)));
    assert!(matches!(ma_wrapped.base.nodes.get("site.out"), Some(NodeKind::Balance)));
}

#[test]
fn chp_missing_power_arc_is_template_mismatch() {
    let mut chp = converter("gas", "heat", line(10.0, 4.0));
    chp.conversions.insert(("gas".into(), "power".into()), line(10.0, 3.0));
    let g = GraphBuilder::new(1, 1.0)
        .resource("gas", ResourceKind::Fuel)
        .resource("heat", ResourceKind::Heat)
        .resource("power", ResourceKind::Power)
        .market("m", "gas", 1.0, 0.0, 0.2)
        .node("u", NodeKind::GeneratingUnit(chp))
        .demand("d", "heat", vec![1.0])
        .arc("m", "u", "gas")
        .arc("u", "d", "heat")
        .build();
    assert!(matches!(
        build_model_a(&g),
        Err(BuildError::TemplateMismatch { node, .. }) if node == "u"
    ));
}

#[test]
fn two_inputs_on_one_port_is_template_mismatch() {
    let g = GraphBuilder::new(1, 1.0)
        .resource("gas", ResourceKind::Fuel)
        .resource("heat", ResourceKind::Heat)
        .market("m1", "gas", 1.0, 0.0, 0.2)
        .market("m2", "gas", 1.0, 0.0, 0.2)
        .node("u", NodeKind::GeneratingUnit(converter("gas", "heat", line(10.0, 8.0))))
        .demand("d", "heat", vec![1.0])
        .arc("m1", "u", "gas")
        .arc("m2", "u", "gas")
        .arc("u", "d", "heat")
        .build();
    assert!(matches!(
        build_model_a(&g),
        Err(BuildError::TemplateMismatch { node, .. }) if node == "u"
    ));
}

#[test]
fn port_variable_counts() {
    let g = market_demand_instance(3, 1.0);
    let ma = lift_flat(&g).unwrap();
    assert_eq!(ma.enumerate_port_variables().len(), 6);

    let empty = lift_flat(&crate::net::NetworkGraph::empty(crate::net::TimeGrid::new(3, 1.0)))
        .unwrap();
    assert!(empty.enumerate_port_variables().is_empty());

    // A 171-arc chain mirrors the arc count of the study's readable model.
    let mut b = GraphBuilder::new(1, 1.0)
        .resource("heat", ResourceKind::Heat)
        .market("m", "heat", 1.0, 0.0, 0.0)
        .demand("d", "heat", vec![1.0]);
    let mut prev = "m".to_string();
    for i in 0..170 {
        let id = format!("b{i}");
        b = b.balance(&id).arc(&prev, &id, "heat");
        prev = id;
    }
    let g = b.arc(&prev, "d", "heat").build();
    assert_eq!(g.arcs.len(), 171);
    let ma = lift_flat(&g).unwrap();
    assert_eq!(ma.enumerate_port_variables().len(), 342);
}

#[test]
fn stage_expansion_builds_a_chain() {
    let unit = staged(vec![
        converter("gas", "steam", line(10.0, 9.0)),
        committable("steam", "heat", line(9.0, 8.0), 5.0, 2, 2),
    ]);
    let g = GraphBuilder::new(2, 1.0)
        .resource("gas", ResourceKind::Fuel)
        .resource("steam", ResourceKind::Fuel)
        .resource("heat", ResourceKind::Heat)
        .market("m", "gas", 1.0, 0.0, 0.2)
        .node("u", NodeKind::GeneratingUnit(unit))
        .demand("d", "heat", vec![4.0; 2])
        .arc("m", "u", "gas")
        .arc("u", "d", "heat")
        .container("site", &["u"])
        .build();
    let ma = build_model_a(&g).unwrap();
    assert!(ma.base.nodes.contains_key("u.s1"));
    assert!(ma.base.nodes.contains_key("u.s2"));
    assert!(!ma.base.nodes.contains_key("u"));
    assert_eq!(ma.subcomponent_extra, 1);
    assert_eq!(ma.stage_origin["u.s1"], ("u".to_string(), 1));
    let chain = ma.base.arcs.iter().find(|a| a.id == "u.chain1").unwrap();
    assert_eq!((chain.tail.as_str(), chain.head.as_str()), ("u.s1", "u.s2"));
    assert_eq!(chain.resource, "steam");
    // Container membership follows the expansion, boundary balances join it.
    let members = &ma.base.containers["site"].members;
    assert!(members.contains("u.s1") && members.contains("u.s2"));
    assert!(members.contains("site.in") && members.contains("site.out"));
}

#[test]
fn build_is_deterministic() {
    let unit = staged(vec![
        converter("gas", "steam", line(10.0, 9.0)),
        converter("steam", "heat", line(9.0, 8.0)),
    ]);
    let g = GraphBuilder::new(2, 1.0)
        .resource("gas", ResourceKind::Fuel)
        .resource("steam", ResourceKind::Fuel)
        .resource("heat", ResourceKind::Heat)
        .market("m", "gas", 1.0, 0.0, 0.2)
        .node("u", NodeKind::GeneratingUnit(unit))
        .demand("d", "heat", vec![4.0; 2])
        .arc("m", "u", "gas")
        .arc("u", "d", "heat")
        .build();
    let ma1 = build_model_a(&g).unwrap();
    let ma2 = build_model_a(&g).unwrap();
    assert_eq!(ma1.base, ma2.base);
    assert_eq!(ma1.ports, ma2.ports);
    assert_eq!(ma1.port_bindings, ma2.port_bindings);
}
