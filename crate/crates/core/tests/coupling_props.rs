mod common;

use std::collections::BTreeMap;

use gicdc::builder::{build, BuilderConfig};
use gicdc::coupling::{
    branch_voltage, couple, displacement, FieldSource, Geodesy, LineVoltageTable, UniformField,
};
use gicdc::model::BranchOrigin;
use gicdc::Error;
use proptest::prelude::*;

fn fixture_network() -> (gicdc::model::AcCase, gicdc::model::GmdNetwork) {
    let case = common::fixture_case();
    let built = build(&case, &BuilderConfig::default()).unwrap();
    (case, built.network)
}

fn table(entries: &[(u32, f64)]) -> FieldSource {
    FieldSource::Table(LineVoltageTable {
        label: "t".into(),
        volts: entries.iter().copied().collect::<BTreeMap<_, _>>(),
    })
}

#[test]
fn only_lines_receive_emf() {
    let (case, net) = fixture_network();
    let field = FieldSource::Uniform(UniformField::new(5.0, 30.0).unwrap());
    let coupled = couple(&net, &field, &case).unwrap().network;
    for b in &coupled.branches {
        if b.origin == BranchOrigin::Line {
            assert!(b.induced_voltage != 0.0, "line branch {} has no EMF", b.id);
        } else {
            assert_eq!(b.induced_voltage, 0.0, "{:?} branch {} has EMF", b.origin, b.id);
        }
    }
}

#[test]
fn reference_latitude_is_mean_of_line_midpoints() {
    let (case, net) = fixture_network();
    let mids: Vec<f64> = case
        .lines
        .iter()
        .filter(|l| {
            net.branches
                .iter()
                .any(|b| b.origin == BranchOrigin::Line && b.parent == gicdc::model::Element::Line(l.id))
        })
        .map(|l| {
            let lat = |bus| case.bus_coords(case.bus(bus).unwrap()).0;
            0.5 * (lat(l.from_bus) + lat(l.to_bus))
        })
        .collect();
    let want = mids.iter().sum::<f64>() / mids.len() as f64;
    assert!((net.reference_latitude - want).abs() < 1e-9);
}

#[test]
fn table_values_are_taken_verbatim() {
    let (case, net) = fixture_network();
    let coupled = couple(&net, &table(&[(1, 12.5), (2, -3.0)]), &case).unwrap();
    let emf = |line| {
        coupled
            .network
            .branches
            .iter()
            .find(|b| b.parent == gicdc::model::Element::Line(line))
            .unwrap()
            .induced_voltage
    };
    assert_eq!(emf(1), 12.5);
    assert_eq!(emf(2), -3.0);
    assert_eq!(emf(3), 0.0);
    assert!(coupled.warnings.iter().any(|w| w.subject == "line 3"));
}

#[test]
fn unknown_table_line_is_an_error() {
    let (case, net) = fixture_network();
    assert!(matches!(
        couple(&net, &table(&[(999, 1.0)]), &case),
        Err(Error::UnknownLine(999))
    ));
}

#[test]
fn one_degree_north_and_east() {
    // Independent values: 110.574 km per degree of latitude; 113.320 km per
    // degree of longitude at the equator, scaled by cos(latitude).
    let geo = Geodesy { mean_latitude: 45.0 };
    let (de, dn) = displacement((10.0, 45.0), (10.0, 46.0), geo);
    assert_eq!(de, 0.0);
    assert!((dn - 110.574).abs() < 1e-9);
    let (de, _) = displacement((10.0, 45.0), (11.0, 45.0), geo);
    assert!((de - 113.320 * 0.5f64.sqrt()).abs() < 1e-9);
}

proptest! {
    #[test]
    fn voltage_is_linear_in_magnitude(
        de in -1e3f64..1e3, dn in -1e3f64..1e3, mag in 0.0f64..50.0, bearing in 0.0f64..360.0, alpha in 0.0f64..20.0,
    ) {
        let f = UniformField::new(mag, bearing).unwrap();
        let v1 = branch_voltage((de, dn), f);
        let va = branch_voltage((de, dn), f.scaled(alpha).unwrap());
        prop_assert!((va - alpha * v1).abs() <= 1e-9 * (alpha * mag * (de.abs() + dn.abs())).max(1e-12));
    }

    #[test]
    fn reversal_negates(de in -1e3f64..1e3, dn in -1e3f64..1e3, mag in 0.0f64..50.0, bearing in 0.0f64..360.0) {
        let f = UniformField::new(mag, bearing).unwrap();
        let v = branch_voltage((de, dn), f);
        let r = branch_voltage((de, dn), f.reversed());
        prop_assert!((v + r).abs() <= 1e-9 * (mag * (de.abs() + dn.abs())).max(1e-12));
    }

    #[test]
    fn reversing_a_branch_negates_its_voltage(
        a in (-180.0f64..180.0, -80.0f64..80.0), b in (-180.0f64..180.0, -80.0f64..80.0),
        lat in -80.0f64..80.0, bearing in 0.0f64..360.0,
    ) {
        let geo = Geodesy { mean_latitude: lat };
        let f = UniformField::new(1.0, bearing).unwrap();
        let fwd = branch_voltage(displacement(a, b, geo), f);
        let back = branch_voltage(displacement(b, a, geo), f);
        prop_assert_eq!(fwd, -back);
    }

    #[test]
    fn closed_polygon_has_zero_displacement(
        pts in prop::collection::vec((-180.0f64..180.0, -80.0f64..80.0), 3..12), lat in -80.0f64..80.0,
    ) {
        let geo = Geodesy { mean_latitude: lat };
        let (mut se, mut sn) = (0.0, 0.0);
        for i in 0..pts.len() {
            let (de, dn) = displacement(pts[i], pts[(i + 1) % pts.len()], geo);
            se += de;
            sn += dn;
        }
        prop_assert!(se.abs() <= 1e-9 && sn.abs() <= 1e-9);
    }
}
