//! Construction of the DC-equivalent (GMD) network from an AC case.
//!
//! The builder works on symbolic node keys first so that node and branch
//! numbering is a pure function of the case, then resolves keys to ids.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    validate_case, AcCase, BranchId, BranchOrigin, Diagnostic, Element, GmdBranch, GmdBus, GmdNetwork,
    NodeId, NodeRole, SeriesCapMode, Terminal, Transformer, TransformerIndexMap, TransformerKind,
    TransformerTerminals, WindingGrounding, WindingResistances,
};

/// Implicit step-up winding resistance by generator-bus nominal kV.
pub const DEFAULT_GSU_TABLE: [(f64, f64); 7] = [
    (765.0, 1.089e-6),
    (500.0, 1.667e-6),
    (345.0, 2.416e-6),
    (230.0, 3.623e-6),
    (161.0, 5.176e-6),
    (138.0, 6.039e-6),
    (115.0, 7.246e-6),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BuilderConfig {
    /// Bus-to-station-ground branch added for every bus.
    pub implicit_ground_r: f64,
    /// Resistance given to lines whose DC resistance computes to zero.
    pub cap_bypass_r: f64,
    /// Star-to-low tie inside a three-winding autotransformer.
    pub star_tie_r: f64,
    /// Low-to-ground guard inside a three-winding autotransformer.
    pub common_guard_r: f64,
    pub gsu_min_kv: f64,
    /// (nominal kV, ohms), strictly decreasing in kV.
    pub gsu_table: Vec<(f64, f64)>,
    pub implicit_grounds: bool,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            implicit_ground_r: 25_000.0,
            cap_bypass_r: 0.005,
            star_tie_r: 1e-6,
            common_guard_r: 1e6,
            gsu_min_kv: 30.0,
            gsu_table: DEFAULT_GSU_TABLE.to_vec(),
            implicit_grounds: true,
        }
    }
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("implicit_ground_r", self.implicit_ground_r),
            ("cap_bypass_r", self.cap_bypass_r),
            ("star_tie_r", self.star_tie_r),
            ("common_guard_r", self.common_guard_r),
        ];
        let mut bad: Vec<Diagnostic> = positive
            .iter()
            .filter(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(name, v)| Diagnostic::error("builder config", format!("{name} = {v} must be > 0")))
            .collect();
        for w in self.gsu_table.windows(2) {
            if w[0].0 <= w[1].0 {
                bad.push(Diagnostic::error(
                    "builder config",
                    "gsu_table kV keys must be strictly decreasing",
                ));
                break;
            }
        }
        if self.gsu_table.iter().any(|(_, r)| !(*r > 0.0)) {
            bad.push(Diagnostic::error(
                "builder config",
                "gsu_table resistances must be > 0",
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidCase(bad))
        }
    }

    pub fn gsu_resistance(&self, nominal_kv: f64) -> Option<f64> {
        self.gsu_table
            .iter()
            .find(|(kv, _)| *kv == nominal_kv)
            .map(|(_, r)| *r)
    }
}

/// Common-mode DC resistance of a line in ohms: `r_pu * kV^2 / (3 * MVA)`.
pub fn line_dc_resistance(r_pu: f64, kv_ll: f64, mva_3ph: f64) -> Result<f64> {
    if !(kv_ll > 0.0 && mva_3ph > 0.0) {
        return Err(Error::InvalidBase {
            kv: kv_ll,
            mva: mva_3ph,
        });
    }
    Ok(r_pu * kv_ll * kv_ll / (3.0 * mva_3ph))
}

/// Symbolic DC node identity, ordered by (source id, role).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKey {
    Bus(u32),
    Ground(u32),
    Star(u32),
}

impl NodeKey {
    fn sort_key(self) -> (u32, u8) {
        match self {
            NodeKey::Bus(i) => (i, 0),
            NodeKey::Ground(i) => (i, 1),
            NodeKey::Star(i) => (i, 2),
        }
    }

    pub fn role(self) -> NodeRole {
        match self {
            NodeKey::Bus(_) => NodeRole::BusImage,
            NodeKey::Ground(_) => NodeRole::SubstationGround,
            NodeKey::Star(_) => NodeRole::Star,
        }
    }

    pub fn source(self) -> u32 {
        self.sort_key().0
    }
}

impl PartialOrd for NodeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for NodeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingSlot {
    High,
    Low,
    Tertiary,
    Series,
    Common,
    StarTie,
    CommonGuard,
    Gsu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftBranch {
    pub from: NodeKey,
    /// `None` is remote earth.
    pub to: Option<NodeKey>,
    pub resistance: f64,
    pub origin: BranchOrigin,
    pub parent: Element,
    /// Owning transformer and the terminal this branch represents.
    pub owner: Option<(u32, WindingSlot)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DraftNode {
    pub lat: f64,
    pub lon: f64,
    /// Substation the node belongs to (bus images and grounds).
    pub substation: Option<u32>,
    pub solid_ground: bool,
}

/// Network under construction, addressed by symbolic keys.
#[derive(Debug, Clone, Default)]
pub struct NetworkDraft {
    pub nodes: BTreeMap<NodeKey, DraftNode>,
    pub branches: Vec<DraftBranch>,
    substation_coords: BTreeMap<u32, (f64, f64)>,
}

impl NetworkDraft {
    pub fn from_case_buses(case: &AcCase) -> Self {
        let mut draft = NetworkDraft {
            substation_coords: case.substations.iter().map(|s| (s.id, (s.lat, s.lon))).collect(),
            ..Default::default()
        };
        for bus in &case.buses {
            let (lat, lon) = case.bus_coords(bus);
            draft.nodes.insert(
                NodeKey::Bus(bus.id),
                DraftNode {
                    lat,
                    lon,
                    substation: Some(bus.substation_id),
                    solid_ground: false,
                },
            );
        }
        draft
    }

    fn ensure_ground(&mut self, substation: u32) {
        let (lat, lon) = self
            .substation_coords
            .get(&substation)
            .copied()
            .unwrap_or((0.0, 0.0));
        self.nodes
            .entry(NodeKey::Ground(substation))
            .or_insert(DraftNode {
                lat,
                lon,
                substation: Some(substation),
                solid_ground: false,
            });
    }

    fn push(&mut self, branch: DraftBranch) {
        for key in [Some(branch.from), branch.to].into_iter().flatten() {
            if let NodeKey::Ground(s) = key {
                self.ensure_ground(s);
            }
        }
        self.branches.push(branch);
    }

    /// Resolve keys to sequential ids. Nodes are numbered in key order and
    /// branches in insertion order.
    pub fn finish(self, reference_latitude: f64) -> (GmdNetwork, BTreeMap<NodeKey, NodeId>) {
        let ids: BTreeMap<NodeKey, NodeId> = self
            .nodes
            .keys()
            .enumerate()
            .map(|(i, k)| (*k, NodeId(i as u32 + 1)))
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|(k, n)| GmdBus {
                id: ids[k],
                role: k.role(),
                source: k.source(),
                lat: n.lat,
                lon: n.lon,
                solid_ground: n.solid_ground,
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| GmdBranch {
                id: BranchId(i as u32 + 1),
                from: ids[&b.from],
                to: b.to.map_or(Terminal::Earth, |k| Terminal::Node(ids[&k])),
                resistance: b.resistance,
                induced_voltage: 0.0,
                origin: b.origin,
                parent: b.parent,
            })
            .collect();
        (
            GmdNetwork {
                nodes,
                branches,
                reference_latitude,
            },
            ids,
        )
    }
}

/// Branches (and the star node, if any) representing one transformer.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub star: Option<NodeKey>,
    pub branches: Vec<DraftBranch>,
}

fn winding(xf: &Transformer, name: &str, r: Option<f64>) -> Result<f64> {
    match r {
        Some(r) if r > 0.0 => Ok(r),
        Some(r) => Err(Error::IncompleteTransformer {
            transformer: xf.id,
            reason: format!("{name} winding resistance {r} must be > 0"),
        }),
        None => Err(Error::IncompleteTransformer {
            transformer: xf.id,
            reason: format!("{name} winding resistance is missing"),
        }),
    }
}

/// Split a transformer into DC branches. Only windings with a DC path
/// produce branches: grounded wye windings to the station ground, and the
/// series winding of autotransformers between their terminals. Winding
/// resistances are per phase and divided by three for the parallel phases.
pub fn decompose_transformer(
    xf: &Transformer,
    substation: u32,
    cfg: &BuilderConfig,
) -> Result<Decomposition> {
    let ground = NodeKey::Ground(substation);
    let high = NodeKey::Bus(xf.high_bus);
    let low = NodeKey::Bus(xf.low_bus);
    let parent = Element::Transformer(xf.id);
    let mut branches = Vec::new();
    let mut star = None;

    let mut emit = |from, to, resistance, origin, slot, parent| {
        branches.push(DraftBranch {
            from,
            to: Some(to),
            resistance,
            origin,
            parent,
            owner: Some((xf.id, slot)),
        })
    };

    if let Some(gen) = xf.implicit_gsu_for {
        let r = winding(xf, "step-up", xf.winding_r.low)?;
        emit(
            low,
            ground,
            r,
            BranchOrigin::Gsu,
            WindingSlot::Gsu,
            Element::Generator(gen),
        );
        return Ok(Decomposition { star, branches });
    }

    let g = &xf.grounded;
    let w = &xf.winding_r;
    match xf.kind {
        TransformerKind::GwyeGwye | TransformerKind::DeltaGwye | TransformerKind::GwyeDelta => {
            let high_wye = xf.kind != TransformerKind::DeltaGwye;
            let low_wye = xf.kind != TransformerKind::GwyeDelta;
            if high_wye && g.high {
                let r = winding(xf, "high", w.high)?;
                emit(
                    high,
                    ground,
                    r / 3.0,
                    BranchOrigin::WindingHigh,
                    WindingSlot::High,
                    parent,
                );
            }
            if low_wye && g.low {
                let r = winding(xf, "low", w.low)?;
                emit(
                    low,
                    ground,
                    r / 3.0,
                    BranchOrigin::WindingLow,
                    WindingSlot::Low,
                    parent,
                );
            }
        }
        TransformerKind::AutoGwye => {
            let rs = winding(xf, "series", w.series)?;
            emit(
                high,
                low,
                rs / 3.0,
                BranchOrigin::Series,
                WindingSlot::Series,
                parent,
            );
            if g.common {
                let rc = winding(xf, "common", w.common)?;
                emit(
                    low,
                    ground,
                    rc / 3.0,
                    BranchOrigin::Common,
                    WindingSlot::Common,
                    parent,
                );
            }
        }
        TransformerKind::ThreeWinding => {
            let tertiary = xf
                .tertiary_bus
                .map(NodeKey::Bus)
                .ok_or_else(|| Error::IncompleteTransformer {
                    transformer: xf.id,
                    reason: "three-winding transformer without tertiary bus".into(),
                })?;
            let legs = [
                (
                    g.high,
                    high,
                    "high",
                    w.high,
                    BranchOrigin::WindingHigh,
                    WindingSlot::High,
                ),
                (
                    g.low,
                    low,
                    "low",
                    w.low,
                    BranchOrigin::WindingLow,
                    WindingSlot::Low,
                ),
                (
                    g.tertiary,
                    tertiary,
                    "tertiary",
                    w.tertiary,
                    BranchOrigin::WindingTertiary,
                    WindingSlot::Tertiary,
                ),
            ];
            for (grounded, node, name, r, origin, slot) in legs {
                if grounded {
                    let r = winding(xf, name, r)?;
                    emit(node, ground, r / 3.0, origin, slot, parent);
                }
            }
        }
        TransformerKind::ThreeWindingAuto => {
            if xf.tertiary_bus.is_none() {
                return Err(Error::IncompleteTransformer {
                    transformer: xf.id,
                    reason: "three-winding transformer without tertiary bus".into(),
                });
            }
            let sigma = NodeKey::Star(xf.id);
            star = Some(sigma);
            let rs = winding(xf, "series", w.series)?;
            emit(
                high,
                sigma,
                rs / 3.0,
                BranchOrigin::Series,
                WindingSlot::Series,
                parent,
            );
            emit(
                sigma,
                low,
                cfg.star_tie_r,
                BranchOrigin::StarTie,
                WindingSlot::StarTie,
                parent,
            );
            if g.common {
                let rc = winding(xf, "common", w.common)?;
                emit(
                    sigma,
                    ground,
                    rc / 3.0,
                    BranchOrigin::Common,
                    WindingSlot::Common,
                    parent,
                );
                emit(
                    low,
                    ground,
                    cfg.common_guard_r,
                    BranchOrigin::CommonGuard,
                    WindingSlot::CommonGuard,
                    parent,
                );
            }
        }
    }
    Ok(Decomposition { star, branches })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GsuOutcome {
    pub transformers: Vec<Transformer>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Synthesize a delta/grounded-wye step-up for every in-service generator on
/// a bus at or above `gsu_min_kv`. Ids continue after the largest case
/// transformer id, in generator-id order.
pub fn add_implicit_gsus(case: &AcCase, cfg: &BuilderConfig) -> GsuOutcome {
    let mut out = GsuOutcome::default();
    let mut next_id = case.transformers.iter().map(|t| t.id).max().unwrap_or(0) + 1;
    let mut gens: Vec<_> = case.generators.iter().collect();
    gens.sort_by_key(|g| g.id);
    for gen in gens {
        if !gen.in_service {
            continue;
        }
        let Some(bus) = case.bus(gen.bus) else { continue };
        if bus.nominal_kv < cfg.gsu_min_kv {
            continue;
        }
        let Some(r) = cfg.gsu_resistance(bus.nominal_kv) else {
            out.diagnostics.push(Diagnostic::warning(
                format!("generator {}", gen.id),
                format!(
                    "no implicit step-up entry for {} kV; step-up skipped",
                    bus.nominal_kv
                ),
            ));
            continue;
        };
        out.transformers.push(Transformer {
            id: next_id,
            kind: TransformerKind::DeltaGwye,
            high_bus: bus.id,
            low_bus: bus.id,
            tertiary_bus: None,
            winding_r: WindingResistances {
                low: Some(r),
                ..Default::default()
            },
            grounded: WindingGrounding {
                low: true,
                ..Default::default()
            },
            k_factor: None,
            mva_base: 100.0,
            implicit_gsu_for: Some(gen.id),
        });
        next_id += 1;
    }
    out
}

/// Tie every bus image to its station ground, creating ground nodes as
/// needed. Returns the branches that were added.
pub fn add_implicit_grounds(draft: &mut NetworkDraft, cfg: &BuilderConfig) -> Vec<DraftBranch> {
    let buses: Vec<(u32, u32)> = draft
        .nodes
        .iter()
        .filter_map(|(k, n)| match (k, n.substation) {
            (NodeKey::Bus(b), Some(s)) => Some((*b, s)),
            _ => None,
        })
        .collect();
    let mut added = Vec::with_capacity(buses.len());
    for (bus, sub) in buses {
        let branch = DraftBranch {
            from: NodeKey::Bus(bus),
            to: Some(NodeKey::Ground(sub)),
            resistance: cfg.implicit_ground_r,
            origin: BranchOrigin::ImplicitGround,
            parent: Element::Bus(bus),
            owner: None,
        };
        draft.push(branch.clone());
        added.push(branch);
    }
    added
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmitReason {
    OutOfService,
    OpenCapacitor,
    ClosedCapacitor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineDc {
    Branch { resistance: f64, origin: BranchOrigin },
    Omitted(OmitReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineTreatment {
    pub line: u32,
    pub dc: LineDc,
}

/// Decide the DC representation of every line. Open and closed series
/// capacitors block DC; a zero computed resistance is taken to be a
/// bypassed capacitor and gets `cap_bypass_r`.
pub fn apply_series_cap_modes(case: &AcCase, cfg: &BuilderConfig) -> Result<Vec<LineTreatment>> {
    let mut lines: Vec<_> = case.lines.iter().collect();
    lines.sort_by_key(|l| l.id);
    lines
        .into_iter()
        .map(|line| {
            let dc = if !line.in_service {
                LineDc::Omitted(OmitReason::OutOfService)
            } else {
                match line.series_cap_mode {
                    SeriesCapMode::Open => LineDc::Omitted(OmitReason::OpenCapacitor),
                    SeriesCapMode::Closed => LineDc::Omitted(OmitReason::ClosedCapacitor),
                    SeriesCapMode::None | SeriesCapMode::Bypassed => {
                        let kv = case.bus(line.from_bus).map_or(0.0, |b| b.nominal_kv);
                        let r = line_dc_resistance(line.r_pu, kv, line.mva_base)?;
                        if r == 0.0 {
                            LineDc::Branch {
                                resistance: cfg.cap_bypass_r,
                                origin: BranchOrigin::CapBypass,
                            }
                        } else {
                            LineDc::Branch {
                                resistance: r,
                                origin: BranchOrigin::Line,
                            }
                        }
                    }
                }
            };
            Ok(LineTreatment { line: line.id, dc })
        })
        .collect()
}

/// Output of [`build`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltNetwork {
    pub network: GmdNetwork,
    pub map: TransformerIndexMap,
    /// Case transformers followed by implicit step-ups.
    pub transformers: Vec<Transformer>,
    pub diagnostics: Vec<Diagnostic>,
}

impl BuiltNetwork {
    pub fn transformer(&self, id: u32) -> Option<&Transformer> {
        self.transformers.iter().find(|t| t.id == id)
    }
}

pub fn build(case: &AcCase, cfg: &BuilderConfig) -> Result<BuiltNetwork> {
    cfg.validate()?;
    let mut diagnostics = validate_case(case);
    if diagnostics.iter().any(Diagnostic::is_error) {
        diagnostics.retain(Diagnostic::is_error);
        return Err(Error::InvalidCase(diagnostics));
    }

    let bus_station: BTreeMap<u32, u32> = case.buses.iter().map(|b| (b.id, b.substation_id)).collect();
    let mut draft = NetworkDraft::from_case_buses(case);

    for t in apply_series_cap_modes(case, cfg)? {
        if let LineDc::Branch { resistance, origin } = t.dc {
            let line = case.line(t.line).expect("treatment refers to a case line");
            draft.push(DraftBranch {
                from: NodeKey::Bus(line.from_bus),
                to: Some(NodeKey::Bus(line.to_bus)),
                resistance,
                origin,
                parent: Element::Line(line.id),
                owner: None,
            });
        }
    }

    let gsus = add_implicit_gsus(case, cfg);
    diagnostics.extend(gsus.diagnostics.iter().cloned());
    let mut transformers: Vec<Transformer> = case.transformers.clone();
    transformers.sort_by_key(|t| t.id);
    transformers.extend(gsus.transformers);

    let mut stations = BTreeMap::new();
    for xf in &transformers {
        let sub = bus_station[&xf.high_bus];
        stations.insert(xf.id, sub);
        let dec = decompose_transformer(xf, sub, cfg)?;
        if let Some(star) = dec.star {
            let (lat, lon) = case.bus_coords(case.bus(xf.high_bus).expect("validated bus"));
            draft.nodes.insert(
                star,
                DraftNode {
                    lat,
                    lon,
                    substation: None,
                    solid_ground: false,
                },
            );
        }
        for b in dec.branches {
            draft.push(b);
        }
    }

    if cfg.implicit_grounds {
        add_implicit_grounds(&mut draft, cfg);
    }

    let grounds: Vec<u32> = draft
        .nodes
        .keys()
        .filter_map(|k| match k {
            NodeKey::Ground(s) => Some(*s),
            _ => None,
        })
        .collect();
    for sub in grounds {
        match case.substation(sub).and_then(|s| s.grounding_resistance) {
            Some(r) if r > 0.0 => draft.push(DraftBranch {
                from: NodeKey::Ground(sub),
                to: None,
                resistance: r,
                origin: BranchOrigin::SubstationGroundTie,
                parent: Element::Substation(sub),
                owner: None,
            }),
            Some(_) => {
                if let Some(n) = draft.nodes.get_mut(&NodeKey::Ground(sub)) {
                    n.solid_ground = true;
                }
            }
            None => {}
        }
    }

    let reference_latitude = mean_line_latitude(&draft);
    let owners: Vec<Option<(u32, WindingSlot)>> = draft.branches.iter().map(|b| b.owner).collect();
    let (network, ids) = draft.finish(reference_latitude);

    let mut map = TransformerIndexMap::default();
    for xf in &transformers {
        let sub = stations[&xf.id];
        map.entries.insert(
            xf.id,
            TransformerTerminals {
                high_bus: xf.high_bus,
                low_bus: xf.low_bus,
                tertiary_bus: xf.tertiary_bus,
                high_node: ids.get(&NodeKey::Bus(xf.high_bus)).copied(),
                low_node: ids.get(&NodeKey::Bus(xf.low_bus)).copied(),
                tertiary_node: xf.tertiary_bus.and_then(|t| ids.get(&NodeKey::Bus(t)).copied()),
                star_node: ids.get(&NodeKey::Star(xf.id)).copied(),
                ground_node: ids.get(&NodeKey::Ground(sub)).copied(),
                ..Default::default()
            },
        );
    }
    for (branch, owner) in network.branches.iter().zip(owners) {
        let Some((xf, slot)) = owner else { continue };
        let entry = map.entries.get_mut(&xf).expect("entry created above");
        let field = match slot {
            WindingSlot::High => &mut entry.high_branch,
            WindingSlot::Low => &mut entry.low_branch,
            WindingSlot::Tertiary => &mut entry.tertiary_branch,
            WindingSlot::Series => &mut entry.series_branch,
            WindingSlot::Common => &mut entry.common_branch,
            WindingSlot::StarTie => &mut entry.star_tie_branch,
            WindingSlot::CommonGuard => &mut entry.common_guard_branch,
            WindingSlot::Gsu => &mut entry.gsu_branch,
        };
        *field = Some(branch.id);
    }

    Ok(BuiltNetwork {
        network,
        map,
        transformers,
        diagnostics,
    })
}

fn mean_line_latitude(draft: &NetworkDraft) -> f64 {
    let mids: Vec<f64> = draft
        .branches
        .iter()
        .filter(|b| b.origin == BranchOrigin::Line)
        .filter_map(|b| {
            let a = draft.nodes.get(&b.from)?;
            let z = draft.nodes.get(&b.to?)?;
            Some(0.5 * (a.lat + z.lat))
        })
        .collect();
    if mids.is_empty() {
        0.0
    } else {
        mids.iter().sum::<f64>() / mids.len() as f64
    }
}
