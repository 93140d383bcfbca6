//! Domain types for the AC input case and the derived DC (GMD) network.
//!
//! AC element ids are opaque positive integers; table order carries no meaning.
//! DC node and branch ids are assigned by the builder in a deterministic order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct Substation {
    pub id: u32,
    pub lat: f64,
    pub lon: f64,
    /// Resistance from the station ground to remote earth. `None` means the
    /// station ground has no earth tie; `Some(0.0)` is a solid ground.
    pub grounding_resistance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcBus {
    pub id: u32,
    pub nominal_kv: f64,
    pub substation_id: u32,
    pub lat: Option<f64>,
    pub lon: Option<f64>,
    /// AC voltage magnitude in per-unit, used for reactive loss. Defaults to 1.0.
    pub v_pu: Option<f64>,
}

impl AcBus {
    pub fn voltage_pu(&self) -> f64 {
        self.v_pu.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesCapMode {
    None,
    Open,
    Closed,
    Bypassed,
}

impl SeriesCapMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesCapMode::None => "NONE",
            SeriesCapMode::Open => "OPEN",
            SeriesCapMode::Closed => "CLOSED",
            SeriesCapMode::Bypassed => "BYPASSED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NONE" | "" => Some(SeriesCapMode::None),
            "OPEN" => Some(SeriesCapMode::Open),
            "CLOSED" => Some(SeriesCapMode::Closed),
            "BYPASSED" => Some(SeriesCapMode::Bypassed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcLine {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    /// Positive-sequence resistance in per-unit on `mva_base` and the from-bus kV.
    pub r_pu: f64,
    pub mva_base: f64,
    pub series_cap_mode: SeriesCapMode,
    pub in_service: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformerKind {
    GwyeGwye,
    DeltaGwye,
    GwyeDelta,
    AutoGwye,
    ThreeWinding,
    ThreeWindingAuto,
}

impl TransformerKind {
    pub const ALL: [TransformerKind; 6] = [
        TransformerKind::GwyeGwye,
        TransformerKind::DeltaGwye,
        TransformerKind::GwyeDelta,
        TransformerKind::AutoGwye,
        TransformerKind::ThreeWinding,
        TransformerKind::ThreeWindingAuto,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformerKind::GwyeGwye => "GWYE_GWYE",
            TransformerKind::DeltaGwye => "DELTA_GWYE",
            TransformerKind::GwyeDelta => "GWYE_DELTA",
            TransformerKind::AutoGwye => "AUTO_GWYE",
            TransformerKind::ThreeWinding => "THREE_WINDING",
            TransformerKind::ThreeWindingAuto => "THREE_WINDING_AUTO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_uppercase();
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_three_winding(self) -> bool {
        matches!(
            self,
            TransformerKind::ThreeWinding | TransformerKind::ThreeWindingAuto
        )
    }

    pub fn is_auto(self) -> bool {
        matches!(
            self,
            TransformerKind::AutoGwye | TransformerKind::ThreeWindingAuto
        )
    }
}

/// Per-phase winding resistances in ohms. Which entries are meaningful depends
/// on the transformer kind: two-winding and three-winding units use
/// high/low/tertiary, autotransformers use series/common.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindingResistances {
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub tertiary: Option<f64>,
    pub series: Option<f64>,
    pub common: Option<f64>,
}

impl WindingResistances {
    pub fn values(&self) -> [(&'static str, Option<f64>); 5] {
        [
            ("high", self.high),
            ("low", self.low),
            ("tertiary", self.tertiary),
            ("series", self.series),
            ("common", self.common),
        ]
    }
}

/// Which windings have their neutral tied to the station ground. For
/// autotransformers `common` is the neutral end of the common winding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindingGrounding {
    pub high: bool,
    pub low: bool,
    pub tertiary: bool,
    pub common: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transformer {
    pub id: u32,
    pub kind: TransformerKind,
    pub high_bus: u32,
    pub low_bus: u32,
    pub tertiary_bus: Option<u32>,
    pub winding_r: WindingResistances,
    pub grounded: WindingGrounding,
    /// Reactive loss constant; absent means no reported loss.
    pub k_factor: Option<f64>,
    pub mva_base: f64,
    /// Generator this unit was synthesized for, when it is an implicit step-up.
    pub implicit_gsu_for: Option<u32>,
}

impl Transformer {
    pub fn is_implicit_gsu(&self) -> bool {
        self.implicit_gsu_for.is_some()
    }

    pub fn k(&self) -> f64 {
        self.k_factor.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: u32,
    pub bus: u32,
    pub in_service: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcCase {
    pub substations: Vec<Substation>,
    pub buses: Vec<AcBus>,
    pub lines: Vec<AcLine>,
    pub transformers: Vec<Transformer>,
    pub generators: Vec<Generator>,
}

impl AcCase {
    pub fn substation(&self, id: u32) -> Option<&Substation> {
        self.substations.iter().find(|s| s.id == id)
    }

    pub fn bus(&self, id: u32) -> Option<&AcBus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn line(&self, id: u32) -> Option<&AcLine> {
        self.lines.iter().find(|l| l.id == id)
    }

    pub fn transformer(&self, id: u32) -> Option<&Transformer> {
        self.transformers.iter().find(|t| t.id == id)
    }

    /// Bus coordinates as (lat, lon), falling back to the owning substation.
    pub fn bus_coords(&self, bus: &AcBus) -> (f64, f64) {
        let sub = self.substation(bus.substation_id);
        let lat = bus.lat.or(sub.map(|s| s.lat)).unwrap_or(0.0);
        let lon = bus.lon.or(sub.map(|s| s.lon)).unwrap_or(0.0);
        (lat, lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BranchId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for BranchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRole {
    BusImage,
    SubstationGround,
    Star,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::BusImage => "BUS_IMAGE",
            NodeRole::SubstationGround => "SUBSTATION_GROUND",
            NodeRole::Star => "STAR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmdBus {
    pub id: NodeId,
    pub role: NodeRole,
    /// AC bus id, substation id, or transformer id, depending on `role`.
    pub source: u32,
    pub lat: f64,
    pub lon: f64,
    /// Held at remote-earth potential (a zero-ohm station ground).
    pub solid_ground: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Terminal {
    Node(NodeId),
    Earth,
}

impl Terminal {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Terminal::Node(n) => Some(n),
            Terminal::Earth => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BranchOrigin {
    Line,
    WindingHigh,
    WindingLow,
    WindingTertiary,
    Series,
    Common,
    StarTie,
    CommonGuard,
    Gsu,
    ImplicitGround,
    CapBypass,
    SubstationGroundTie,
}

impl BranchOrigin {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchOrigin::Line => "LINE",
            BranchOrigin::WindingHigh => "XF_WINDING_HIGH",
            BranchOrigin::WindingLow => "XF_WINDING_LOW",
            BranchOrigin::WindingTertiary => "XF_WINDING_TERTIARY",
            BranchOrigin::Series => "XF_SERIES",
            BranchOrigin::Common => "XF_COMMON",
            BranchOrigin::StarTie => "XF_STAR_TIE",
            BranchOrigin::CommonGuard => "XF_COMMON_GUARD",
            BranchOrigin::Gsu => "GSU",
            BranchOrigin::ImplicitGround => "IMPLICIT_GROUND",
            BranchOrigin::CapBypass => "CAP_BYPASS",
            BranchOrigin::SubstationGroundTie => "SUBSTATION_GROUND_TIE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use BranchOrigin::*;
        [
            Line,
            WindingHigh,
            WindingLow,
            WindingTertiary,
            Series,
            Common,
            StarTie,
            CommonGuard,
            Gsu,
            ImplicitGround,
            CapBypass,
            SubstationGroundTie,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
    }

    /// Branches that model a physical winding and follow the divide-by-three rule.
    pub fn is_winding(self) -> bool {
        matches!(
            self,
            BranchOrigin::WindingHigh
                | BranchOrigin::WindingLow
                | BranchOrigin::WindingTertiary
                | BranchOrigin::Series
                | BranchOrigin::Common
        )
    }

    pub fn is_line(self) -> bool {
        matches!(self, BranchOrigin::Line | BranchOrigin::CapBypass)
    }
}

/// The AC element a DC branch was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Line(u32),
    Transformer(u32),
    Generator(u32),
    Bus(u32),
    Substation(u32),
}

impl Element {
    pub fn id(self) -> u32 {
        match self {
            Element::Line(i)
            | Element::Transformer(i)
            | Element::Generator(i)
            | Element::Bus(i)
            | Element::Substation(i) => i,
        }
    }

    pub fn kind_str(self) -> &'static str {
        match self {
            Element::Line(_) => "line",
            Element::Transformer(_) => "transformer",
            Element::Generator(_) => "generator",
            Element::Bus(_) => "bus",
            Element::Substation(_) => "substation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmdBranch {
    pub id: BranchId,
    pub from: NodeId,
    pub to: Terminal,
    pub resistance: f64,
    /// Series EMF in volts, positive driving current from `from` to `to`.
    pub induced_voltage: f64,
    pub origin: BranchOrigin,
    pub parent: Element,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GmdNetwork {
    pub nodes: Vec<GmdBus>,
    pub branches: Vec<GmdBranch>,
    /// Mean latitude (degrees) of the line midpoints at construction time.
    pub reference_latitude: f64,
}

impl GmdNetwork {
    pub fn node(&self, id: NodeId) -> Option<&GmdBus> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut GmdBus> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &mut self.nodes[i])
    }

    pub fn branch(&self, id: BranchId) -> Option<&GmdBranch> {
        self.branches
            .binary_search_by_key(&id, |b| b.id)
            .ok()
            .map(|i| &self.branches[i])
    }

    pub fn find_node(&self, role: NodeRole, source: u32) -> Option<&GmdBus> {
        self.nodes.iter().find(|n| n.role == role && n.source == source)
    }

    pub fn branches_with(&self, origin: BranchOrigin) -> impl Iterator<Item = &GmdBranch> {
        self.branches.iter().filter(move |b| b.origin == origin)
    }
}

/// DC nodes and branches belonging to one transformer. Series and common
/// windings terminate on the high, low, star and ground nodes, so they have
/// no dedicated nodes of their own.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransformerTerminals {
    pub high_bus: u32,
    pub low_bus: u32,
    pub tertiary_bus: Option<u32>,
    pub high_node: Option<NodeId>,
    pub low_node: Option<NodeId>,
    pub tertiary_node: Option<NodeId>,
    pub star_node: Option<NodeId>,
    pub ground_node: Option<NodeId>,
    pub high_branch: Option<BranchId>,
    pub low_branch: Option<BranchId>,
    pub tertiary_branch: Option<BranchId>,
    pub series_branch: Option<BranchId>,
    pub common_branch: Option<BranchId>,
    pub star_tie_branch: Option<BranchId>,
    pub common_guard_branch: Option<BranchId>,
    pub gsu_branch: Option<BranchId>,
}

impl TransformerTerminals {
    pub fn branches(&self) -> impl Iterator<Item = BranchId> + '_ {
        [
            self.high_branch,
            self.low_branch,
            self.tertiary_branch,
            self.series_branch,
            self.common_branch,
            self.star_tie_branch,
            self.common_guard_branch,
            self.gsu_branch,
        ]
        .into_iter()
        .flatten()
    }

    /// Drop every reference to a branch that is no longer in the network.
    pub fn retain_branches(&mut self, keep: impl Fn(BranchId) -> bool) {
        for slot in [
            &mut self.high_branch,
            &mut self.low_branch,
            &mut self.tertiary_branch,
            &mut self.series_branch,
            &mut self.common_branch,
            &mut self.star_tie_branch,
            &mut self.common_guard_branch,
            &mut self.gsu_branch,
        ] {
            if let Some(b) = *slot {
                if !keep(b) {
                    *slot = None;
                }
            }
        }
    }
}

/// Per-transformer AC bus → DC node → DC branch mapping, keyed by transformer id.
/// Includes implicit generator step-ups.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransformerIndexMap {
    pub entries: BTreeMap<u32, TransformerTerminals>,
}

impl TransformerIndexMap {
    pub fn get(&self, transformer: u32) -> Option<&TransformerTerminals> {
        self.entries.get(&transformer)
    }

    /// Returns the first branch claimed by two transformer terminals, if any.
    pub fn duplicate_branch(&self) -> Option<BranchId> {
        let mut seen = BTreeSet::new();
        self.entries
            .values()
            .flat_map(|e| e.branches())
            .find(|b| !seen.insert(*b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn warning(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.subject, self.message)
    }
}

/// Check every structural invariant of the case. Errors make the case
/// unusable; warnings (missing K-factors, cross-substation transformers)
/// are informational.
pub fn validate_case(case: &AcCase) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    check_unique(&mut out, "substation", case.substations.iter().map(|s| s.id));
    check_unique(&mut out, "bus", case.buses.iter().map(|b| b.id));
    check_unique(&mut out, "line", case.lines.iter().map(|l| l.id));
    check_unique(&mut out, "transformer", case.transformers.iter().map(|t| t.id));
    check_unique(&mut out, "generator", case.generators.iter().map(|g| g.id));

    let subs: BTreeSet<u32> = case.substations.iter().map(|s| s.id).collect();
    let buses: BTreeMap<u32, &AcBus> = case.buses.iter().map(|b| (b.id, b)).collect();

    for s in &case.substations {
        let subj = format!("substation {}", s.id);
        if !(-90.0..=90.0).contains(&s.lat) {
            out.push(Diagnostic::error(
                &subj,
                format!("latitude {} outside [-90, 90]", s.lat),
            ));
        }
        if !s.lon.is_finite() {
            out.push(Diagnostic::error(&subj, "longitude is not finite"));
        }
        if let Some(r) = s.grounding_resistance {
            if !(r >= 0.0 && r.is_finite()) {
                out.push(Diagnostic::error(
                    &subj,
                    format!("grounding resistance {r} must be >= 0"),
                ));
            }
        }
    }

    for b in &case.buses {
        let subj = format!("bus {}", b.id);
        if !(b.nominal_kv > 0.0 && b.nominal_kv.is_finite()) {
            out.push(Diagnostic::error(
                &subj,
                format!("nominal kV {} must be > 0", b.nominal_kv),
            ));
        }
        if !subs.contains(&b.substation_id) {
            out.push(Diagnostic::error(
                &subj,
                format!("unknown substation {}", b.substation_id),
            ));
        }
        if let Some(lat) = b.lat {
            if !(-90.0..=90.0).contains(&lat) {
                out.push(Diagnostic::error(
                    &subj,
                    format!("latitude {lat} outside [-90, 90]"),
                ));
            }
        }
        if b.lat.is_some() != b.lon.is_some() {
            out.push(Diagnostic::error(
                &subj,
                "latitude and longitude must be given together",
            ));
        }
        if let Some(v) = b.v_pu {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Diagnostic::error(&subj, format!("voltage {v} pu must be > 0")));
            }
        }
    }

    for l in &case.lines {
        let subj = format!("line {}", l.id);
        if l.from_bus == l.to_bus {
            out.push(Diagnostic::error(
                &subj,
                format!("from and to bus are both {}", l.from_bus),
            ));
        }
        for end in [l.from_bus, l.to_bus] {
            if !buses.contains_key(&end) {
                out.push(Diagnostic::error(&subj, format!("unknown bus {end}")));
            }
        }
        if !(l.r_pu >= 0.0 && l.r_pu.is_finite()) {
            out.push(Diagnostic::error(&subj, format!("r_pu {} must be >= 0", l.r_pu)));
        }
        if !(l.mva_base > 0.0 && l.mva_base.is_finite()) {
            out.push(Diagnostic::error(
                &subj,
                format!("MVA base {} must be > 0", l.mva_base),
            ));
        }
    }

    for t in &case.transformers {
        let subj = format!("transformer {}", t.id);
        let mut ends = vec![t.high_bus, t.low_bus];
        ends.extend(t.tertiary_bus);
        for end in &ends {
            if !buses.contains_key(end) {
                out.push(Diagnostic::error(&subj, format!("unknown bus {end}")));
            }
        }
        if t.high_bus == t.low_bus {
            out.push(Diagnostic::error(&subj, "high and low bus are the same"));
        }
        match (t.kind.is_three_winding(), t.tertiary_bus) {
            (true, None) => out.push(Diagnostic::error(
                &subj,
                format!("{} requires a tertiary bus", t.kind.as_str()),
            )),
            (false, Some(_)) => out.push(Diagnostic::error(
                &subj,
                format!("{} must not have a tertiary bus", t.kind.as_str()),
            )),
            _ => {}
        }
        for (name, r) in t.winding_r.values() {
            if let Some(r) = r {
                if !(r >= 0.0 && r.is_finite()) {
                    out.push(Diagnostic::error(
                        &subj,
                        format!("{name} winding resistance {r} must be >= 0"),
                    ));
                }
            }
        }
        if !(t.mva_base > 0.0 && t.mva_base.is_finite()) {
            out.push(Diagnostic::error(
                &subj,
                format!("MVA base {} must be > 0", t.mva_base),
            ));
        }
        match t.k_factor {
            Some(k) if !(k >= 0.0 && k.is_finite()) => {
                out.push(Diagnostic::error(&subj, format!("k_factor {k} must be >= 0")))
            }
            None if !t.is_implicit_gsu() => out.push(Diagnostic::warning(
                &subj,
                "k_factor absent; reactive loss will be reported as 0",
            )),
            _ => {}
        }
        let stations: BTreeSet<u32> = ends
            .iter()
            .filter_map(|b| buses.get(b).map(|b| b.substation_id))
            .collect();
        if stations.len() > 1 {
            out.push(Diagnostic::warning(
                &subj,
                "terminals span several substations; the high-side station ground is used",
            ));
        }
    }

    for g in &case.generators {
        if !buses.contains_key(&g.bus) {
            out.push(Diagnostic::error(
                format!("generator {}", g.id),
                format!("unknown bus {}", g.bus),
            ));
        }
    }

    out
}

fn check_unique(out: &mut Vec<Diagnostic>, what: &str, ids: impl Iterator<Item = u32>) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id == 0 {
            out.push(Diagnostic::error(format!("{what} {id}"), "ids must be positive"));
        }
        if !seen.insert(id) {
            out.push(Diagnostic::error(format!("{what} {id}"), "duplicate id"));
        }
    }
}
