//! Induced line voltages from a uniform geoelectric field or a per-line table.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{AcCase, BranchOrigin, Diagnostic, Element, GmdNetwork};

/// Kilometres per degree of latitude.
pub const KM_PER_DEG_LAT: f64 = 110.574;
/// Kilometres per degree of longitude at the equator.
pub const KM_PER_DEG_LON_EQUATOR: f64 = 113.320;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    /// V/km.
    pub magnitude: f64,
    /// Degrees clockwise from North, in `[0, 360)`.
    pub bearing: f64,
}

impl UniformField {
    /// Bearings outside `[0, 360)` are wrapped.
    pub fn new(magnitude: f64, bearing: f64) -> Result<Self> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(Error::InvalidField(format!(
                "magnitude {magnitude} V/km must be finite and >= 0"
            )));
        }
        if !bearing.is_finite() {
            return Err(Error::InvalidField(format!("bearing {bearing} is not finite")));
        }
        let mut bearing = bearing.rem_euclid(360.0);
        if bearing >= 360.0 {
            bearing = 0.0;
        }
        Ok(UniformField { magnitude, bearing })
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        UniformField::new(self.magnitude * factor, self.bearing)
    }

    pub fn reversed(self) -> Self {
        UniformField::new(self.magnitude, self.bearing + 180.0).expect("valid field stays valid")
    }
}

impl fmt::Display for UniformField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uniform {} V/km @ {} deg", self.magnitude, self.bearing)
    }
}

/// Induced voltage per AC line id, in volts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineVoltageTable {
    pub label: String,
    pub volts: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Uniform(UniformField),
    Table(LineVoltageTable),
}

impl FieldSource {
    pub fn label(&self) -> String {
        match self {
            FieldSource::Uniform(f) => f.to_string(),
            FieldSource::Table(t) if t.label.is_empty() => "line-voltage table".to_string(),
            FieldSource::Table(t) => t.label.clone(),
        }
    }
}

/// Flat-earth distance scales around a fixed reference latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodesy {
    pub mean_latitude: f64,
}

impl Geodesy {
    pub fn km_per_deg_lat(&self) -> f64 {
        KM_PER_DEG_LAT
    }

    pub fn km_per_deg_lon(&self) -> f64 {
        KM_PER_DEG_LON_EQUATOR * self.mean_latitude.to_radians().cos()
    }
}

/// Eastward and northward displacement in km from `p1` to `p2`, both given
/// as (lon, lat) in degrees.
pub fn displacement(p1: (f64, f64), p2: (f64, f64), geo: Geodesy) -> (f64, f64) {
    let d_e = geo.km_per_deg_lon() * (p2.0 - p1.0);
    let d_n = geo.km_per_deg_lat() * (p2.1 - p1.1);
    (d_e, d_n)
}

/// Voltage in volts induced along displacement `d = (d_e, d_n)` km.
pub fn branch_voltage(d: (f64, f64), field: UniformField) -> f64 {
    let theta = field.bearing.to_radians();
    field.magnitude * (d.1 * theta.cos() + d.0 * theta.sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupled {
    pub network: GmdNetwork,
    pub warnings: Vec<Diagnostic>,
}

/// Return a copy of `network` with line EMFs set from `source`. Every other
/// branch is given zero EMF.
pub fn couple(network: &GmdNetwork, source: &FieldSource, case: &AcCase) -> Result<Coupled> {
    let mut out = network.clone();
    let mut warnings = Vec::new();

    if let FieldSource::Table(table) = source {
        if let Some(&id) = table.volts.keys().find(|id| case.line(**id).is_none()) {
            return Err(Error::UnknownLine(id));
        }
    }

    let geo = Geodesy {
        mean_latitude: network.reference_latitude,
    };
    let coords: BTreeMap<_, _> = network.nodes.iter().map(|n| (n.id, (n.lon, n.lat))).collect();

    for branch in &mut out.branches {
        branch.induced_voltage = 0.0;
        if branch.origin != BranchOrigin::Line {
            continue;
        }
        let Element::Line(line) = branch.parent else {
            continue;
        };
        branch.induced_voltage = match source {
            FieldSource::Uniform(field) => {
                let to = branch.to.node().ok_or_else(|| Error::Assembly {
                    branch: branch.id.0,
                    reason: "line branch terminates at earth".into(),
                })?;
                let d = displacement(coords[&branch.from], coords[&to], geo);
                branch_voltage(d, *field)
            }
            FieldSource::Table(table) => match table.volts.get(&line) {
                Some(v) => *v,
                None => {
                    warnings.push(Diagnostic::warning(
                        format!("line {line}"),
                        "no induced voltage in table; using 0 V",
                    ));
                    0.0
                }
            },
        };
    }
    Ok(Coupled {
        network: out,
        warnings,
    })
}
