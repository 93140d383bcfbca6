#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gicdc::model::{
    AcCase, BranchId, BranchOrigin, Element, GmdBranch, GmdBus, GmdNetwork, NodeId, NodeRole, Terminal,
};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_case() -> AcCase {
    gicdc::io::parse_case(&fixture("four_substation.case")).expect("fixture parses")
}

pub fn nonuniform_table() -> gicdc::coupling::LineVoltageTable {
    gicdc::io::parse_line_voltages(&fixture("four_substation_nonuniform.csv")).expect("table parses")
}

/// Node voltages by straightforward nodal analysis and Gaussian elimination
/// with partial pivoting. Remote earth and solidly grounded nodes are at 0 V.
/// Every node must have a resistive path to one of them.
pub fn oracle_voltages(net: &GmdNetwork) -> Vec<f64> {
    let n = net.nodes.len();
    let pos = |id: NodeId| net.nodes.iter().position(|x| x.id == id).unwrap();
    let fixed: Vec<bool> = net.nodes.iter().map(|x| x.solid_ground).collect();
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for b in &net.branches {
        let i = pos(b.from);
        let j = match b.to {
            Terminal::Node(t) => Some(pos(t)),
            Terminal::Earth => None,
        };
        let g = 1.0 / b.resistance;
        // Current leaving i through b: g (V_i - V_j + E).
        a[i][i] += g;
        a[i][n] -= g * b.induced_voltage;
        if let Some(j) = j {
            a[i][j] -= g;
            a[j][j] += g;
            a[j][i] -= g;
            a[j][n] += g * b.induced_voltage;
        }
    }
    // A node held at 0 V contributes nothing to other rows; its own row
    // becomes V_i = 0.
    for i in (0..n).filter(|&i| fixed[i]) {
        for row in a.iter_mut() {
            row[i] = 0.0;
        }
        a[i] = vec![0.0; n + 1];
        a[i][i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        assert!(p.abs() > 0.0, "oracle: singular system");
        for r in 0..n {
            if r != col {
                let f = a[r][col] / p;
                if f != 0.0 {
                    for k in col..=n {
                        a[r][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Random network of `n` nodes: a random spanning tree plus extra edges,
/// random resistances over six decades, random EMFs on some branches and
/// at least one earth tie.
pub fn random_network(rng: &mut impl Rng, n: usize) -> GmdNetwork {
    let nodes: Vec<GmdBus> = (1..=n as u32)
        .map(|i| GmdBus {
            id: NodeId(i),
            role: if i % 3 == 0 {
                NodeRole::SubstationGround
            } else {
                NodeRole::BusImage
            },
            source: i,
            lat: 0.0,
            lon: 0.0,
            solid_ground: false,
        })
        .collect();
    let mut branches = Vec::new();
    let mut push = |from: u32, to: Terminal, rng: &mut dyn rand::RngCore| {
        let id = branches.len() as u32 + 1;
        let resistance = 10f64.powf(rng.gen_range(-3.0..3.0));
        let induced_voltage = if rng.gen_bool(0.5) {
            rng.gen_range(-500.0..500.0)
        } else {
            0.0
        };
        branches.push(GmdBranch {
            id: BranchId(id),
            from: NodeId(from),
            to,
            resistance,
            induced_voltage,
            origin: BranchOrigin::Line,
            parent: Element::Line(id),
        });
    };
    for i in 2..=n as u32 {
        let j = rng.gen_range(1..i);
        push(i, Terminal::Node(NodeId(j)), rng);
    }
    for _ in 0..rng.gen_range(0..=n) {
        let i = rng.gen_range(1..=n as u32);
        let j = rng.gen_range(1..=n as u32);
        if i != j {
            push(i, Terminal::Node(NodeId(j)), rng);
        }
    }
    let ties = rng.gen_range(1..=3.min(n));
    for _ in 0..ties {
        let i = rng.gen_range(1..=n as u32);
        push(i, Terminal::Earth, rng);
    }
    GmdNetwork {
        nodes,
        branches,
        reference_latitude: 0.0,
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
