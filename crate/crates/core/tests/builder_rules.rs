mod common;

use gicdc::blockers::BlockerScenario;
use gicdc::builder::{build, decompose_transformer, line_dc_resistance, BuilderConfig};
use gicdc::coupling::{FieldSource, UniformField};
use gicdc::model::{
    BranchOrigin, Element, NodeRole, Transformer, TransformerKind, WindingGrounding, WindingResistances,
};
use gicdc::solver::run;
use proptest::prelude::*;

fn two_winding(kind: TransformerKind, high: f64, low: f64) -> Transformer {
    Transformer {
        id: 1,
        kind,
        high_bus: 1,
        low_bus: 2,
        tertiary_bus: None,
        winding_r: WindingResistances {
            high: Some(high),
            low: Some(low),
            tertiary: None,
            series: Some(high),
            common: Some(low),
        },
        grounded: WindingGrounding {
            high: true,
            low: true,
            tertiary: false,
            common: true,
        },
        k_factor: None,
        mva_base: 100.0,
        implicit_gsu_for: None,
    }
}

#[test]
fn fixture_network_shape() {
    let case = common::fixture_case();
    let built = build(&case, &BuilderConfig::default()).unwrap();
    assert_eq!(built.network.nodes.len(), 17);
    assert_eq!(built.network.branches.len(), 41);
    assert!(built.map.duplicate_branch().is_none());
    let stars = built
        .network
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Star)
        .count();
    assert_eq!(stars, 1);
}

#[test]
fn build_is_deterministic() {
    let case = common::fixture_case();
    let a = build(&case, &BuilderConfig::default()).unwrap();
    let b = build(&case, &BuilderConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn line_resistance_from_per_unit() {
    // 0.02 pu on 100 MVA at 500 kV: Z_base = 2500 ohm, divided over three phases.
    let r = line_dc_resistance(0.02, 500.0, 100.0).unwrap();
    assert!((r - 0.02 * 2500.0 / 3.0).abs() < 1e-12);
    assert!(line_dc_resistance(0.02, 0.0, 100.0).is_err());
    assert!(line_dc_resistance(0.02, 500.0, -1.0).is_err());
}

#[test]
fn open_line_is_omitted() {
    let case = common::fixture_case();
    let built = build(&case, &BuilderConfig::default()).unwrap();
    assert!(!built
        .network
        .branches
        .iter()
        .any(|b| b.parent == Element::Line(8)));
    assert!(built
        .network
        .branches
        .iter()
        .any(|b| b.parent == Element::Line(1)));
}

#[test]
fn step_up_ids_follow_case_transformers() {
    let case = common::fixture_case();
    let built = build(&case, &BuilderConfig::default()).unwrap();
    let max_case = case.transformers.iter().map(|t| t.id).max().unwrap();
    let gsus: Vec<&Transformer> = built
        .transformers
        .iter()
        .filter(|t| t.is_implicit_gsu())
        .collect();
    let in_service = case.generators.iter().filter(|g| g.in_service).count();
    assert_eq!(gsus.len(), in_service);
    for (k, t) in gsus.iter().enumerate() {
        assert_eq!(t.id, max_case + 1 + k as u32);
        assert_eq!(t.kind, TransformerKind::DeltaGwye);
        assert_eq!(t.high_bus, t.low_bus);
    }
    let gsu_branches = built
        .network
        .branches
        .iter()
        .filter(|b| b.origin == BranchOrigin::Gsu)
        .count();
    assert_eq!(gsu_branches, in_service);
}

#[test]
fn implicit_grounds_barely_move_the_answer() {
    let mut case = common::fixture_case();
    // Bus 43 only reaches ground through its idle generator's step-up.
    for g in &mut case.generators {
        g.in_service = true;
    }
    let field = FieldSource::Uniform(UniformField::new(1.0, 45.0).unwrap());
    let with = run(&case, &BuilderConfig::default(), &field, &BlockerScenario::none()).unwrap();
    let cfg = BuilderConfig {
        implicit_grounds: false,
        ..BuilderConfig::default()
    };
    let without = run(&case, &cfg, &field, &BlockerScenario::none()).unwrap();
    let (a, b) = (with.total_qloss(), without.total_qloss());
    assert!((a - b).abs() / b < 1e-3, "{a} vs {b}");
}

proptest! {
    #[test]
    fn winding_branches_are_one_third(high in 1e-3f64..10.0, low in 1e-3f64..10.0) {
        let xf = two_winding(TransformerKind::GwyeGwye, high, low);
        let d = decompose_transformer(&xf, 1, &BuilderConfig::default()).unwrap();
        let mut rs: Vec<(BranchOrigin, f64)> = d.branches.iter().map(|b| (b.origin, b.resistance)).collect();
        rs.sort_by_key(|x| x.0);
        prop_assert_eq!(rs, vec![(BranchOrigin::WindingHigh, high / 3.0), (BranchOrigin::WindingLow, low / 3.0)]);
    }

    #[test]
    fn auto_windings_are_one_third(series in 1e-3f64..10.0, common in 1e-3f64..10.0) {
        let xf = two_winding(TransformerKind::AutoGwye, series, common);
        let d = decompose_transformer(&xf, 1, &BuilderConfig::default()).unwrap();
        let s = d.branches.iter().find(|b| b.origin == BranchOrigin::Series).unwrap();
        let c = d.branches.iter().find(|b| b.origin == BranchOrigin::Common).unwrap();
        prop_assert_eq!(s.resistance, series / 3.0);
        prop_assert_eq!(c.resistance, common / 3.0);
    }

    #[test]
    fn delta_sides_emit_nothing(r in 1e-3f64..10.0) {
        for kind in [TransformerKind::DeltaGwye, TransformerKind::GwyeDelta] {
            let xf = two_winding(kind, r, r);
            let d = decompose_transformer(&xf, 1, &BuilderConfig::default()).unwrap();
            prop_assert_eq!(d.branches.len(), 1);
            for b in &d.branches {
                let origin_ok = match kind {
                    TransformerKind::DeltaGwye => b.origin == BranchOrigin::WindingLow,
                    _ => b.origin == BranchOrigin::WindingHigh,
                };
                prop_assert!(origin_ok);
            }
        }
    }

    #[test]
    fn line_order_does_not_change_the_network(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let case = common::fixture_case();
        let mut shuffled = case.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        shuffled.lines.shuffle(&mut rng);
        shuffled.transformers.shuffle(&mut rng);
        shuffled.buses.shuffle(&mut rng);
        let a = build(&case, &BuilderConfig::default()).unwrap();
        let b = build(&shuffled, &BuilderConfig::default()).unwrap();
        prop_assert_eq!(a.network, b.network);
    }
}
