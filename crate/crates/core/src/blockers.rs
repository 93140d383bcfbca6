//! Blocking-device scenarios as topology edits on the DC network.

use std::collections::BTreeSet;
use std::fmt;

use crate::builder::{build, BuilderConfig};
use crate::coupling::FieldSource;
use crate::error::{Error, Result};
use crate::model::{AcCase, BranchId, BranchOrigin, Element, GmdNetwork, NodeRole, TransformerIndexMap};
use crate::solver::{run_built, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockerKind {
    None,
    Neutral,
    Substation,
    SeriesCap,
}

impl BlockerKind {
    pub const ALL: [BlockerKind; 4] = [
        BlockerKind::None,
        BlockerKind::Neutral,
        BlockerKind::Substation,
        BlockerKind::SeriesCap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BlockerKind::None => "NONE",
            BlockerKind::Neutral => "NEUTRAL",
            BlockerKind::Substation => "SUBSTATION",
            BlockerKind::SeriesCap => "SERIES_CAP",
        }
    }

    /// Accepts the CLI spellings as well as the labels.
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "none" => Some(BlockerKind::None),
            "neutral" => Some(BlockerKind::Neutral),
            "substation" => Some(BlockerKind::Substation),
            "seriescap" => Some(BlockerKind::SeriesCap),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Locations {
    All,
    Ids(BTreeSet<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockerScenario {
    pub kind: BlockerKind,
    /// Transformers for neutral blockers, substations for substation
    /// blockers, lines for series capacitors.
    pub locations: Locations,
}

impl BlockerScenario {
    pub fn none() -> Self {
        BlockerScenario {
            kind: BlockerKind::None,
            locations: Locations::All,
        }
    }

    pub fn all(kind: BlockerKind) -> Self {
        BlockerScenario {
            kind,
            locations: Locations::All,
        }
    }

    pub fn at(kind: BlockerKind, ids: impl IntoIterator<Item = u32>) -> Self {
        BlockerScenario {
            kind,
            locations: Locations::Ids(ids.into_iter().collect()),
        }
    }

    /// `NONE`, `NEUTRAL@ALL`, `SUBSTATION@1+4`, ...
    pub fn label(&self) -> String {
        if self.kind == BlockerKind::None {
            return "NONE".to_string();
        }
        match &self.locations {
            Locations::All => format!("{}@ALL", self.kind.as_str()),
            Locations::Ids(ids) => {
                let ids: Vec<String> = ids.iter().map(u32::to_string).collect();
                format!("{}@{}", self.kind.as_str(), ids.join("+"))
            }
        }
    }

    fn covers(&self, id: u32) -> bool {
        match &self.locations {
            Locations::All => true,
            Locations::Ids(ids) => ids.contains(&id),
        }
    }
}

impl fmt::Display for BlockerScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub network: GmdNetwork,
    pub map: TransformerIndexMap,
    pub notes: Vec<String>,
}

/// Apply `scenario` to an uncoupled network. Blocked paths are removed
/// outright; implicit bus grounds are never touched. Removed branches are
/// also cleared from `map`.
pub fn apply(
    network: &GmdNetwork,
    map: &TransformerIndexMap,
    case: &AcCase,
    scenario: &BlockerScenario,
) -> Result<Applied> {
    let mut out = Applied {
        network: network.clone(),
        map: map.clone(),
        notes: Vec::new(),
    };
    if let Locations::Ids(ids) = &scenario.locations {
        for &id in ids {
            let known = match scenario.kind {
                BlockerKind::None => true,
                BlockerKind::Neutral => map.get(id).is_some(),
                BlockerKind::Substation => case.substation(id).is_some(),
                BlockerKind::SeriesCap => case.line(id).is_some(),
            };
            if !known {
                let what = match scenario.kind {
                    BlockerKind::Neutral => "transformer",
                    BlockerKind::Substation => "substation",
                    _ => "line",
                };
                return Err(Error::Scenario(format!(
                    "unknown {what} {id} in {}",
                    scenario.label()
                )));
            }
        }
    }

    let mut removed: BTreeSet<BranchId> = BTreeSet::new();
    match scenario.kind {
        BlockerKind::None => {}
        BlockerKind::Neutral => {
            for (&id, t) in &map.entries {
                if scenario.covers(id) {
                    removed.extend(
                        [
                            t.high_branch,
                            t.low_branch,
                            t.tertiary_branch,
                            t.common_branch,
                            t.common_guard_branch,
                            t.gsu_branch,
                        ]
                        .into_iter()
                        .flatten(),
                    );
                }
            }
        }
        BlockerKind::Substation => {
            for b in &network.branches {
                if let (BranchOrigin::SubstationGroundTie, Element::Substation(s)) = (b.origin, b.parent) {
                    if scenario.covers(s) {
                        removed.insert(b.id);
                    }
                }
            }
            for node in &mut out.network.nodes {
                if node.role == NodeRole::SubstationGround && scenario.covers(node.source) {
                    node.solid_ground = false;
                }
            }
        }
        BlockerKind::SeriesCap => {
            for b in &network.branches {
                if let (true, Element::Line(l)) = (b.origin.is_line(), b.parent) {
                    if scenario.covers(l) {
                        removed.insert(b.id);
                    }
                }
            }
            out.notes.push(format!(
                "{}: series capacitors add line reactance and shift AC phase angles; AC effects are not modeled",
                scenario.label()
            ));
        }
    }

    out.network.branches.retain(|b| !removed.contains(&b.id));
    for t in out.map.entries.values_mut() {
        t.retain_branches(|b| !removed.contains(&b));
    }
    Ok(out)
}

/// One result per (field, scenario) pair, fields outermost.
pub fn scenario_matrix(
    case: &AcCase,
    cfg: &BuilderConfig,
    fields: &[FieldSource],
    scenarios: &[BlockerScenario],
) -> Result<Vec<SolveResult>> {
    if fields.is_empty() || scenarios.is_empty() {
        return Ok(Vec::new());
    }
    let built = build(case, cfg)?;
    let mut rows = Vec::with_capacity(fields.len() * scenarios.len());
    for field in fields {
        for scenario in scenarios {
            rows.push(run_built(&built, case, field, scenario)?);
        }
    }
    Ok(rows)
}

/// The four 100% placement scenarios, unblocked first.
pub fn standard_scenarios() -> Vec<BlockerScenario> {
    BlockerKind::ALL
        .iter()
        .map(|&k| BlockerScenario::all(k))
        .collect()
}
