//! Nodal conductance assembly with remote earth as the eliminated reference.

use nalgebra::DVector;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};
use crate::model::{GmdNetwork, NodeId, NodeRole, Terminal};

/// A branch in matrix coordinates. `None` ends are at 0 V (remote earth or
/// a node held at the reference).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemBranch {
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub conductance: f64,
    pub emf: f64,
}

/// `G V = J` over the unknown node voltages. Nodes held at 0 V (solidly
/// grounded stations and pins of floating islands) are not unknowns.
#[derive(Debug, Clone)]
pub struct ConductanceSystem {
    /// Node of each unknown, in matrix order.
    pub unknowns: Vec<NodeId>,
    /// Matrix index per node position in `network.nodes`, `None` if held at 0 V.
    pub index: Vec<Option<usize>>,
    pub pinned: Vec<NodeId>,
    /// Branches `G` and `J` were assembled from.
    pub branches: Vec<SystemBranch>,
    pub g: CscMatrix<f64>,
    pub j: DVector<f64>,
}

impl ConductanceSystem {
    /// Assemble `G` and `J` for `n` unknowns.
    pub fn from_branches(n: usize, branches: Vec<SystemBranch>) -> Self {
        let mut coo = CooMatrix::new(n, n);
        let mut j = DVector::zeros(n);
        for b in &branches {
            let g = b.conductance;
            let injection = b.emf * g;
            if let Some(f) = b.from {
                coo.push(f, f, g);
                j[f] -= injection;
            }
            if let Some(t) = b.to {
                coo.push(t, t, g);
                j[t] += injection;
            }
            if let (Some(f), Some(t)) = (b.from, b.to) {
                coo.push(f, t, -g);
                coo.push(t, f, -g);
            }
        }
        ConductanceSystem {
            unknowns: (1..=n as u32).map(NodeId).collect(),
            index: (0..n).map(Some).collect(),
            pinned: Vec::new(),
            branches,
            g: CscMatrix::from(&coo),
            j,
        }
    }

    pub fn dim(&self) -> usize {
        self.unknowns.len()
    }
}

/// Connected components of the node graph, earth excluded. Each component
/// lists node positions in ascending order.
pub fn components(network: &GmdNetwork) -> Vec<Vec<usize>> {
    let n = network.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for b in &network.branches {
        let (Some(a), Some(z)) = (
            position(network, b.from),
            b.to.node().and_then(|t| position(network, t)),
        ) else {
            continue;
        };
        let (ra, rz) = (find(&mut parent, a), find(&mut parent, z));
        if ra != rz {
            parent[ra.max(rz)] = ra.min(rz);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn position(network: &GmdNetwork, id: NodeId) -> Option<usize> {
    network.nodes.binary_search_by_key(&id, |n| n.id).ok()
}

/// Nodes held at 0 V. A solidly grounded station is tied to remote earth
/// directly. An island with no path to earth has an undetermined common
/// potential; it is fixed by holding its lowest-id station ground at 0 V,
/// which leaves every branch current unchanged.
pub fn reference_nodes(network: &GmdNetwork) -> Result<Vec<usize>> {
    let mut earthed = vec![false; network.nodes.len()];
    for (i, node) in network.nodes.iter().enumerate() {
        earthed[i] = node.solid_ground;
    }
    for b in &network.branches {
        if b.to == Terminal::Earth {
            if let Some(i) = position(network, b.from) {
                earthed[i] = true;
            }
        }
    }
    let mut pinned: Vec<usize> = (0..network.nodes.len())
        .filter(|&i| network.nodes[i].solid_ground)
        .collect();
    let mut isolated = Vec::new();
    for comp in components(network) {
        if comp.iter().any(|&i| earthed[i]) {
            continue;
        }
        match comp
            .iter()
            .find(|&&i| network.nodes[i].role == NodeRole::SubstationGround)
        {
            Some(&g) => pinned.push(g),
            None => isolated.push(comp.iter().map(|&i| network.nodes[i].id).collect()),
        }
    }
    if !isolated.is_empty() {
        return Err(Error::SingularSystem {
            isolated,
            condition_estimate: None,
        });
    }
    pinned.sort_unstable();
    Ok(pinned)
}

pub fn assemble(network: &GmdNetwork) -> Result<ConductanceSystem> {
    for b in &network.branches {
        if !(b.resistance > 0.0 && b.resistance.is_finite()) {
            return Err(Error::Assembly {
                branch: b.id.0,
                reason: format!("resistance {} ohm must be finite and > 0", b.resistance),
            });
        }
        if !b.induced_voltage.is_finite() {
            return Err(Error::Assembly {
                branch: b.id.0,
                reason: "induced voltage is not finite".into(),
            });
        }
        if position(network, b.from).is_none() || b.to.node().is_some_and(|t| position(network, t).is_none())
        {
            return Err(Error::Assembly {
                branch: b.id.0,
                reason: "endpoint is not a network node".into(),
            });
        }
        if b.to == Terminal::Node(b.from) {
            return Err(Error::Assembly {
                branch: b.id.0,
                reason: "branch is a self-loop".into(),
            });
        }
    }

    let pinned = reference_nodes(network)?;
    let mut index = vec![None; network.nodes.len()];
    let mut unknowns = Vec::new();
    let mut p = pinned.iter().peekable();
    for (i, node) in network.nodes.iter().enumerate() {
        if p.peek() == Some(&&i) {
            p.next();
            continue;
        }
        index[i] = Some(unknowns.len());
        unknowns.push(node.id);
    }

    let branches = network
        .branches
        .iter()
        .map(|b| SystemBranch {
            from: index[position(network, b.from).expect("checked above")],
            to: b
                .to
                .node()
                .and_then(|t| index[position(network, t).expect("checked above")]),
            conductance: 1.0 / b.resistance,
            emf: b.induced_voltage,
        })
        .collect();
    let sys = ConductanceSystem::from_branches(unknowns.len(), branches);
    Ok(ConductanceSystem {
        unknowns,
        index,
        pinned: pinned.iter().map(|&i| network.nodes[i].id).collect(),
        ..sys
    })
}
