//! DC network solution, effective transformer GIC and reactive loss.

pub mod assemble;
pub mod linear;

pub use assemble::{assemble, ConductanceSystem};
pub use linear::{solve, solve_with, LinearSolution, Method};

use crate::blockers::{self, BlockerScenario};
use crate::builder::{build, BuilderConfig, BuiltNetwork};
use crate::coupling::{couple, FieldSource};
use crate::error::{Error, Result};
use crate::model::{
    AcCase, BranchId, Diagnostic, GmdNetwork, NodeId, Terminal, Transformer, TransformerIndexMap,
    TransformerKind, TransformerTerminals,
};

/// Node voltages and branch currents, aligned with `network.nodes` and
/// `network.branches`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution {
    pub node_voltage: Vec<f64>,
    pub branch_current: Vec<f64>,
    pub condition_estimate: f64,
}

pub fn solve_network(network: &GmdNetwork) -> Result<NetworkSolution> {
    solve_network_with(network, Method::Auto)
}

pub fn solve_network_with(network: &GmdNetwork, method: Method) -> Result<NetworkSolution> {
    let sys = assemble(network)?;
    let sol = solve_with(&sys, method)?;
    let node_voltage: Vec<f64> = sys
        .index
        .iter()
        .map(|i| i.map_or(0.0, |i| sol.v[i] + sol.v_lo[i]))
        .collect();
    // Currents come from the refined double-double voltages; differencing
    // rounded kV-level potentials across micro-ohm branches would lose them.
    let branch_current = sys
        .branches
        .iter()
        .map(|b| {
            let (hi, lo) = linear::branch_current_dd(b, &sol.v, &sol.v_lo);
            hi + lo
        })
        .collect();
    Ok(NetworkSolution {
        node_voltage,
        branch_current,
        condition_estimate: sol.condition_estimate,
    })
}

/// `I = (V_from - V_to + EMF) / R`, remote earth at 0 V.
pub fn branch_currents(network: &GmdNetwork, node_voltage: &[f64]) -> Vec<f64> {
    let voltage = |id: NodeId| {
        network
            .nodes
            .binary_search_by_key(&id, |n| n.id)
            .map_or(0.0, |i| node_voltage[i])
    };
    network
        .branches
        .iter()
        .map(|b| {
            let to = match b.to {
                Terminal::Node(t) => voltage(t),
                Terminal::Earth => 0.0,
            };
            (voltage(b.from) - to + b.induced_voltage) / b.resistance
        })
        .collect()
}

/// Net current leaving each node through its branches.
pub fn kcl_residuals(network: &GmdNetwork, branch_current: &[f64]) -> Vec<f64> {
    let mut sum = vec![0.0; network.nodes.len()];
    let pos = |id: NodeId| network.nodes.binary_search_by_key(&id, |n| n.id).ok();
    for (b, i) in network.branches.iter().zip(branch_current) {
        if let Some(f) = pos(b.from) {
            sum[f] += i;
        }
        if let Some(t) = b.to.node().and_then(pos) {
            sum[t] -= i;
        }
    }
    sum
}

/// Three-phase base current on the high side, in amperes.
pub fn base_current(mva_base: f64, kv_high: f64) -> f64 {
    mva_base * 1e6 / (3f64.sqrt() * kv_high * 1e3)
}

/// Reactive loss in MVAr from per-unit effective GIC.
pub fn qloss(k: f64, effective_gic_pu: f64, v_pu: f64, i_base: f64) -> f64 {
    k * effective_gic_pu * v_pu.abs() * i_base
}

/// Per-phase effective current in amperes. Winding branch currents are
/// three-phase totals; windings without a branch carry no DC.
///
/// Separate-winding units refer each winding current to the high side by
/// its voltage ratio. Autotransformers combine series and common currents
/// as `((a - 1) I_s + I_c) / a`.
pub fn effective_gic_amps(
    xf: &Transformer,
    terminals: &TransformerTerminals,
    case: &AcCase,
    network: &GmdNetwork,
    branch_current: &[f64],
) -> Result<f64> {
    let current = |b: Option<BranchId>| -> Result<f64> {
        match b {
            None => Ok(0.0),
            Some(id) => network
                .branches
                .binary_search_by_key(&id, |br| br.id)
                .map(|i| branch_current[i] / 3.0)
                .map_err(|_| Error::Mapping {
                    transformer: xf.id,
                    branch: id.0,
                }),
        }
    };
    let kv = |bus: u32| case.bus(bus).map_or(f64::NAN, |b| b.nominal_kv);
    let kv_h = kv(xf.high_bus);

    if xf.is_implicit_gsu() {
        return Ok(current(terminals.gsu_branch)?.abs());
    }
    let eff = match xf.kind {
        TransformerKind::AutoGwye | TransformerKind::ThreeWindingAuto => {
            let a = kv_h / kv(xf.low_bus);
            let i_s = current(terminals.series_branch)?;
            let i_c = current(terminals.common_branch)?;
            ((a - 1.0) * i_s + i_c) / a
        }
        _ => {
            let mut sum = current(terminals.high_branch)?;
            sum += current(terminals.low_branch)? * kv(xf.low_bus) / kv_h;
            if let Some(t) = xf.tertiary_bus {
                sum += current(terminals.tertiary_branch)? * kv(t) / kv_h;
            }
            sum
        }
    };
    Ok(eff.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformerResult {
    pub transformer: u32,
    pub effective_gic_amps: f64,
    pub effective_gic_pu: f64,
    pub base_current: f64,
    pub qloss_mvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub field_label: String,
    pub scenario_label: String,
    /// Network after blocker edits and coupling.
    pub network: GmdNetwork,
    pub map: TransformerIndexMap,
    pub node_voltage: Vec<f64>,
    pub branch_current: Vec<f64>,
    /// Case transformers only; implicit step-ups are not reported.
    pub transformers: Vec<TransformerResult>,
    pub condition_estimate: f64,
    pub warnings: Vec<Diagnostic>,
    pub notes: Vec<String>,
}

impl SolveResult {
    pub fn total_qloss(&self) -> f64 {
        self.transformers.iter().map(|t| t.qloss_mvar).sum()
    }

    pub fn transformer(&self, id: u32) -> Option<&TransformerResult> {
        self.transformers.iter().find(|t| t.transformer == id)
    }

    pub fn current(&self, branch: BranchId) -> Option<f64> {
        let i = self
            .network
            .branches
            .binary_search_by_key(&branch, |b| b.id)
            .ok()?;
        Some(self.branch_current[i])
    }

    pub fn voltage(&self, node: NodeId) -> Option<f64> {
        let i = self.network.nodes.binary_search_by_key(&node, |n| n.id).ok()?;
        Some(self.node_voltage[i])
    }
}

pub fn run(
    case: &AcCase,
    cfg: &BuilderConfig,
    source: &FieldSource,
    scenario: &BlockerScenario,
) -> Result<SolveResult> {
    let built = build(case, cfg)?;
    run_built(&built, case, source, scenario)
}

/// As [`run`], reusing an already built network.
pub fn run_built(
    built: &BuiltNetwork,
    case: &AcCase,
    source: &FieldSource,
    scenario: &BlockerScenario,
) -> Result<SolveResult> {
    let applied = blockers::apply(&built.network, &built.map, case, scenario)?;
    let coupled = couple(&applied.network, source, case)?;
    let sol = solve_network(&coupled.network)?;

    let mut transformers = Vec::new();
    for xf in built.transformers.iter().filter(|t| !t.is_implicit_gsu()) {
        let terminals = applied.map.get(xf.id).ok_or(Error::Mapping {
            transformer: xf.id,
            branch: 0,
        })?;
        let amps = effective_gic_amps(xf, terminals, case, &coupled.network, &sol.branch_current)?;
        let high = case.bus(xf.high_bus).expect("validated case");
        let i_base = base_current(xf.mva_base, high.nominal_kv);
        let pu = amps / i_base;
        transformers.push(TransformerResult {
            transformer: xf.id,
            effective_gic_amps: amps,
            effective_gic_pu: pu,
            base_current: i_base,
            qloss_mvar: qloss(xf.k(), pu, high.voltage_pu(), i_base),
        });
    }

    let mut warnings = built.diagnostics.clone();
    warnings.extend(coupled.warnings);
    Ok(SolveResult {
        field_label: source.label(),
        scenario_label: scenario.label(),
        network: coupled.network,
        map: applied.map,
        node_voltage: sol.node_voltage,
        branch_current: sol.branch_current,
        transformers,
        condition_estimate: sol.condition_estimate,
        warnings,
        notes: applied.notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BranchOrigin, Element, GmdBranch, GmdBus, NodeRole};

    fn node(id: u32, role: NodeRole) -> GmdBus {
        GmdBus {
            id: NodeId(id),
            role,
            source: id,
            lat: 0.0,
            lon: 0.0,
            solid_ground: false,
        }
    }

    fn branch(id: u32, from: u32, to: Terminal, r: f64, emf: f64) -> GmdBranch {
        GmdBranch {
            id: BranchId(id),
            from: NodeId(from),
            to,
            resistance: r,
            induced_voltage: emf,
            origin: BranchOrigin::Line,
            parent: Element::Line(id),
        }
    }

    fn two_node() -> GmdNetwork {
        GmdNetwork {
            nodes: vec![node(1, NodeRole::BusImage), node(2, NodeRole::BusImage)],
            branches: vec![
                branch(1, 1, Terminal::Node(NodeId(2)), 1.0, 5.0),
                branch(2, 1, Terminal::Earth, 1.0, 0.0),
                branch(3, 2, Terminal::Earth, 1.0, 0.0),
            ],
            reference_latitude: 0.0,
        }
    }

    #[test]
    fn assemble_two_node_example() {
        let sys = assemble(&two_node()).unwrap();
        let g = linear::dense(&sys.g);
        assert_eq!(g, nalgebra::dmatrix![2.0, -1.0; -1.0, 2.0]);
        assert_eq!(sys.j, nalgebra::dvector![-5.0, 5.0]);
    }

    #[test]
    fn series_loop_current() {
        let net = two_node();
        let sol = solve_network(&net).unwrap();
        assert!((sol.node_voltage[0] + 5.0 / 3.0).abs() < 1e-14);
        assert!((sol.branch_current[0] - 5.0 / 3.0).abs() < 1e-14);
        assert!(kcl_residuals(&net, &sol.branch_current)
            .iter()
            .all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn assembly_rejects_bad_resistance() {
        let mut net = two_node();
        net.branches[1].resistance = 0.0;
        assert!(matches!(assemble(&net), Err(Error::Assembly { branch: 2, .. })));
        net.branches[1].resistance = -1.0;
        assert!(matches!(assemble(&net), Err(Error::Assembly { branch: 2, .. })));
    }

    #[test]
    fn floating_island_without_ground_is_singular() {
        let mut net = two_node();
        net.branches.truncate(1);
        match assemble(&net) {
            Err(Error::SingularSystem { isolated, .. }) => {
                assert_eq!(isolated, vec![vec![NodeId(1), NodeId(2)]])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn floating_island_with_station_ground_is_pinned() {
        let mut net = two_node();
        net.nodes[1].role = NodeRole::SubstationGround;
        net.branches.truncate(1);
        let sol = solve_network(&net).unwrap();
        // A lone EMF in an open path drives no current.
        assert_eq!(sol.branch_current, vec![0.0]);
        assert_eq!(sol.node_voltage, vec![-5.0, 0.0]);
    }

    #[test]
    fn solid_ground_is_reference() {
        let mut net = two_node();
        net.nodes[1].solid_ground = true;
        let sol = solve_network(&net).unwrap();
        assert_eq!(sol.node_voltage[1], 0.0);
        // Loop of branch 1 and branch 2 through earth: 5 V over 2 ohm.
        assert!((sol.branch_current[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn base_current_and_qloss() {
        let ib = base_current(100.0, 345.0);
        assert!((ib - 167.348).abs() < 1e-3);
        assert_eq!(qloss(1.2, 0.0, 1.0, ib), 0.0);
        assert_eq!(qloss(0.0, 0.5, 1.0, ib), 0.0);
        assert!((qloss(1.0, 0.5, 1.0, 200.0) - 100.0).abs() < 1e-12);
    }
}
