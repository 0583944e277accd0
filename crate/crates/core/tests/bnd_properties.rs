use std::collections::BTreeSet;

use netforge_core::bnd::{
    extract_channel_fragment, list_channels, parse_bnd, parse_bnd_value, serialize_bnd,
    validate_structure, BndModel, Edge, EdgeKind, PropertyValue, Severity, Verdict, Vertex,
    VertexKind,
};
use netforge_core::sim::load_case_study;
use proptest::prelude::*;

const LAB: &str = include_str!("../../../bundles/examples/lab.bnd.json");

fn prop_value() -> impl Strategy<Value = PropertyValue> {
    prop_oneof![
        any::<bool>().prop_map(PropertyValue::Bool),
        any::<i64>().prop_map(PropertyValue::Int),
        "[ -~]{0,12}".prop_map(PropertyValue::Str),
        "\\PC{0,6}".prop_map(PropertyValue::Str),
    ]
}

fn props() -> impl Strategy<Value = Vec<(String, PropertyValue)>> {
    proptest::collection::vec(("[a-z_]{1,8}", prop_value()), 0..4)
}

prop_compose! {
    fn model()(
        vertices in proptest::collection::vec(
            (proptest::sample::select(VertexKind::ALL.to_vec()), props()), 0..12)
    )(
        edges in proptest::collection::vec(
            (proptest::sample::select(EdgeKind::ALL.to_vec()),
             0..vertices.len().max(1), 0..vertices.len().max(1), props()),
            if vertices.is_empty() { 0..1 } else { 0..16 }),
        vertices in Just(vertices),
    ) -> BndModel {
        let vs: Vec<Vertex> = vertices
            .into_iter()
            .enumerate()
            .map(|(i, (kind, ps))| {
                ps.into_iter().fold(Vertex::new(format!("v {i}"), kind), |v, (k, p)| v.with_prop(&k, p))
            })
            .collect();
        let es: Vec<Edge> = edges
            .into_iter()
            .filter(|_| !vs.is_empty())
            .enumerate()
            .map(|(i, (kind, a, b, ps))| {
                ps.into_iter().fold(
                    Edge::new(format!("e{i}"), kind, vs[a].id.clone(), vs[b].id.clone()),
                    |e, (k, p)| e.with_prop(&k, p),
                )
            })
            .collect();
        BndModel::new(vs, es).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn serialize_parse_round_trip(m in model()) {
        let text = serialize_bnd(&m);
        prop_assert_eq!(parse_bnd(&text).unwrap(), m.clone());
        prop_assert_eq!(parse_bnd_value(&m.to_json_value()).unwrap(), m);
    }
}

/// Fragments of distinct channels share no node, and every node wired to
/// exactly one channel appears in exactly that channel's fragment.
fn assert_partition(name: &str, m: &BndModel) {
    let mut seen = BTreeSet::new();
    for ch in list_channels(m) {
        let f = extract_channel_fragment(m, &ch).unwrap();
        for b in &f.bnodes {
            assert!(seen.insert(b.id.clone()), "{name}: {} in two fragments", b.id);
            let host = f.host_of(&b.id).unwrap_or_else(|| panic!("{name}: {} has no host", b.id));
            assert_eq!(host.kind, VertexKind::ComputeNode);
        }
        for e in &f.edges {
            assert!(m.edges().contains(e), "{name}: foreign edge {}", e.id);
        }
    }
    let all: BTreeSet<String> = m.vertices_of(VertexKind::BNode).map(|v| v.id.clone()).collect();
    assert_eq!(seen, all, "{name}: fragments do not cover every node");
}

#[test]
fn fragments_partition_bundled_models() {
    assert_partition("lab", &parse_bnd(LAB).unwrap());
    for e in load_case_study() {
        assert_partition(&e.id, &e.request.model);
    }
}

#[test]
fn lab_model_is_clean() {
    let r = validate_structure(&parse_bnd(LAB).unwrap());
    assert!(!r.has_errors(), "{:?}", r.findings);
    assert_eq!(r.count(Severity::Warning), 0, "{:?}", r.findings);
}

#[test]
fn armv7_miner_mutation_is_a_warning() {
    let m = parse_bnd(LAB).unwrap();
    let (mut vs, es) = m.into_parts();
    for v in &mut vs {
        if v.id == "BNode 1-2" {
            *v = v.clone().with_prop("node_type", "mining");
        }
    }
    let r = validate_structure(&BndModel::new(vs, es).unwrap());
    assert_eq!(r.verdict, Verdict::Warnings, "{:?}", r.findings);
    assert!(r
        .findings
        .iter()
        .any(|f| f.severity == Severity::Warning && f.entities.iter().any(|e| e == "BNode 1-2")));
}
