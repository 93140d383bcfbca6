//! Sectioned comma-delimited case files.
//!
//! ```text
//! # comment
//! [SUBSTATION]
//! id,lat,lon,grounding_resistance_ohm
//! 1,46.8,-71.2,0.2
//! ```
//!
//! Every section starts with its canonical header row. Optional fields are
//! left blank.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    validate_case, AcBus, AcCase, AcLine, Diagnostic, Generator, SeriesCapMode, Substation, Transformer,
    TransformerKind, WindingGrounding, WindingResistances,
};

pub const SUBSTATION_COLUMNS: [&str; 4] = ["id", "lat", "lon", "grounding_resistance_ohm"];
pub const BUS_COLUMNS: [&str; 6] = ["id", "nominal_kv", "substation_id", "lat", "lon", "v_pu"];
pub const LINE_COLUMNS: [&str; 7] = [
    "id",
    "from_bus",
    "to_bus",
    "r_pu",
    "mva_base",
    "series_cap_mode",
    "status",
];
pub const TRANSFORMER_COLUMNS: [&str; 16] = [
    "id",
    "kind",
    "high_bus",
    "low_bus",
    "tertiary_bus",
    "r_high_ohm",
    "r_low_ohm",
    "r_tertiary_ohm",
    "r_series_ohm",
    "r_common_ohm",
    "gnd_high",
    "gnd_low",
    "gnd_tertiary",
    "gnd_common",
    "k_factor",
    "mva_base",
];
pub const GENERATOR_COLUMNS: [&str; 3] = ["id", "bus", "status"];

const DEFAULT_TRANSFORMER_MVA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Substation,
    Bus,
    Line,
    Transformer,
    Generator,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name.trim().to_ascii_uppercase().as_str() {
            "SUBSTATION" => Some(Section::Substation),
            "BUS" => Some(Section::Bus),
            "LINE" => Some(Section::Line),
            "TRANSFORMER" => Some(Section::Transformer),
            "GENERATOR" => Some(Section::Generator),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::Substation => "SUBSTATION",
            Section::Bus => "BUS",
            Section::Line => "LINE",
            Section::Transformer => "TRANSFORMER",
            Section::Generator => "GENERATOR",
        }
    }

    fn columns(self) -> &'static [&'static str] {
        match self {
            Section::Substation => &SUBSTATION_COLUMNS,
            Section::Bus => &BUS_COLUMNS,
            Section::Line => &LINE_COLUMNS,
            Section::Transformer => &TRANSFORMER_COLUMNS,
            Section::Generator => &GENERATOR_COLUMNS,
        }
    }
}

pub fn parse_case(path: &Path) -> Result<AcCase> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_case_str(&text, &path.display().to_string())
}

struct Row<'a> {
    origin: &'a str,
    section: Section,
    line: usize,
    fields: Vec<&'a str>,
}

impl Row<'_> {
    fn err(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.to_string(),
            section: self.section.name().to_string(),
            line: self.line,
            column: column + 1,
            message: message.into(),
        }
    }

    fn name(&self, c: usize) -> &'static str {
        self.section.columns()[c]
    }

    fn id(&self, c: usize) -> Result<u32> {
        self.fields[c].parse().map_err(|_| {
            self.err(
                c,
                format!(
                    "{} {:?} is not a non-negative integer",
                    self.name(c),
                    self.fields[c]
                ),
            )
        })
    }

    fn opt_id(&self, c: usize) -> Result<Option<u32>> {
        if self.fields[c].is_empty() {
            Ok(None)
        } else {
            self.id(c).map(Some)
        }
    }

    fn num(&self, c: usize) -> Result<f64> {
        self.opt_num(c)?
            .ok_or_else(|| self.err(c, format!("{} is required", self.name(c))))
    }

    fn opt_num(&self, c: usize) -> Result<Option<f64>> {
        let raw = self.fields[c];
        if raw.is_empty() {
            return Ok(None);
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(self.err(c, format!("{} {raw:?} is not a finite number", self.name(c)))),
        }
    }

    fn flag(&self, c: usize) -> Result<bool> {
        match self.fields[c].to_ascii_lowercase().as_str() {
            "1" | "true" | "y" | "yes" => Ok(true),
            "0" | "false" | "n" | "no" => Ok(false),
            raw => Err(self.err(c, format!("{} {raw:?} is not a 0/1 flag", self.name(c)))),
        }
    }
}

/// Parse and validate case text. `origin` names the source in messages.
pub fn parse_case_str(text: &str, origin: &str) -> Result<AcCase> {
    let mut case = AcCase::default();
    let mut current: Option<Section> = None;
    let mut awaiting_header = false;
    let mut seen_sections: BTreeMap<Section, usize> = BTreeMap::new();
    let mut ids: BTreeMap<(Section, u32), usize> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let section = Section::parse(name).ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                section: name.trim().to_string(),
                line,
                column: 1,
                message: format!("unknown section [{}]", name.trim()),
            })?;
            if let Some(first) = seen_sections.insert(section, line) {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    section: section.name().to_string(),
                    line,
                    column: 1,
                    message: format!("section repeated (first on line {first})"),
                });
            }
            current = Some(section);
            awaiting_header = true;
            continue;
        }
        let Some(section) = current else {
            return Err(Error::Parse {
                path: origin.to_string(),
                section: String::new(),
                line,
                column: 1,
                message: "data before the first section header".into(),
            });
        };
        let row = Row {
            origin,
            section,
            line,
            fields: content.split(',').map(str::trim).collect(),
        };
        let columns = section.columns();
        if awaiting_header {
            for (c, want) in columns.iter().enumerate() {
                match row.fields.get(c) {
                    Some(got) if got.eq_ignore_ascii_case(want) => {}
                    Some(got) => {
                        return Err(row.err(c, format!("expected header column {want:?}, found {got:?}")))
                    }
                    None => return Err(row.err(c, format!("header is missing column {want:?}"))),
                }
            }
            if row.fields.len() > columns.len() {
                return Err(row.err(columns.len(), "unexpected extra header column"));
            }
            awaiting_header = false;
            continue;
        }
        if row.fields.len() != columns.len() {
            return Err(row.err(
                row.fields.len().min(columns.len()),
                format!("expected {} fields, found {}", columns.len(), row.fields.len()),
            ));
        }
        let id = row.id(0)?;
        if let Some(first) = ids.insert((section, id), line) {
            return Err(row.err(
                0,
                format!(
                    "duplicate {} id {id} (lines {first} and {line})",
                    section.name().to_ascii_lowercase()
                ),
            ));
        }
        match section {
            Section::Substation => case.substations.push(Substation {
                id,
                lat: row.num(1)?,
                lon: row.num(2)?,
                grounding_resistance: row.opt_num(3)?,
            }),
            Section::Bus => case.buses.push(AcBus {
                id,
                nominal_kv: row.num(1)?,
                substation_id: row.id(2)?,
                lat: row.opt_num(3)?,
                lon: row.opt_num(4)?,
                v_pu: row.opt_num(5)?,
            }),
            Section::Line => {
                let mode = SeriesCapMode::parse(row.fields[5])
                    .ok_or_else(|| row.err(5, format!("unknown series_cap_mode {:?}", row.fields[5])))?;
                case.lines.push(AcLine {
                    id,
                    from_bus: row.id(1)?,
                    to_bus: row.id(2)?,
                    r_pu: row.num(3)?,
                    mva_base: row.num(4)?,
                    series_cap_mode: mode,
                    in_service: row.flag(6)?,
                });
            }
            Section::Transformer => {
                let kind = TransformerKind::parse(row.fields[1])
                    .ok_or_else(|| row.err(1, format!("unknown transformer kind {:?}", row.fields[1])))?;
                case.transformers.push(Transformer {
                    id,
                    kind,
                    high_bus: row.id(2)?,
                    low_bus: row.id(3)?,
                    tertiary_bus: row.opt_id(4)?,
                    winding_r: WindingResistances {
                        high: row.opt_num(5)?,
                        low: row.opt_num(6)?,
                        tertiary: row.opt_num(7)?,
                        series: row.opt_num(8)?,
                        common: row.opt_num(9)?,
                    },
                    grounded: WindingGrounding {
                        high: row.flag(10)?,
                        low: row.flag(11)?,
                        tertiary: row.flag(12)?,
                        common: row.flag(13)?,
                    },
                    k_factor: row.opt_num(14)?,
                    mva_base: row.opt_num(15)?.unwrap_or(DEFAULT_TRANSFORMER_MVA),
                    implicit_gsu_for: None,
                });
            }
            Section::Generator => case.generators.push(Generator {
                id,
                bus: row.id(1)?,
                in_service: row.flag(2)?,
            }),
        }
    }
    if awaiting_header {
        let (section, line) = seen_sections
            .iter()
            .max_by_key(|(_, l)| **l)
            .expect("a section was opened");
        return Err(Error::Parse {
            path: origin.to_string(),
            section: section.name().to_string(),
            line: *line,
            column: 1,
            message: "section has no header row".into(),
        });
    }

    let errors: Vec<Diagnostic> = validate_case(&case)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if errors.is_empty() {
        Ok(case)
    } else {
        Err(Error::InvalidCase(errors))
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Serialize a case. Numbers use the shortest exact representation, so
/// parsing the output reproduces the case.
pub fn write_case(case: &AcCase) -> String {
    let mut out = String::new();
    let header = |out: &mut String, s: Section| {
        let _ = writeln!(out, "[{}]\n{}", s.name(), s.columns().join(","));
    };

    header(&mut out, Section::Substation);
    for s in &case.substations {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.id,
            s.lat,
            s.lon,
            opt(s.grounding_resistance)
        );
    }
    out.push('\n');
    header(&mut out, Section::Bus);
    for b in &case.buses {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            b.id,
            b.nominal_kv,
            b.substation_id,
            opt(b.lat),
            opt(b.lon),
            opt(b.v_pu)
        );
    }
    out.push('\n');
    header(&mut out, Section::Line);
    for l in &case.lines {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            l.id,
            l.from_bus,
            l.to_bus,
            l.r_pu,
            l.mva_base,
            l.series_cap_mode.as_str(),
            flag(l.in_service)
        );
    }
    out.push('\n');
    header(&mut out, Section::Transformer);
    for t in case.transformers.iter().filter(|t| !t.is_implicit_gsu()) {
        let w = &t.winding_r;
        let g = &t.grounded;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.id,
            t.kind.as_str(),
            t.high_bus,
            t.low_bus,
            opt(t.tertiary_bus),
            opt(w.high),
            opt(w.low),
            opt(w.tertiary),
            opt(w.series),
            opt(w.common),
            flag(g.high),
            flag(g.low),
            flag(g.tertiary),
            flag(g.common),
            opt(t.k_factor),
            t.mva_base
        );
    }
    out.push('\n');
    header(&mut out, Section::Generator);
    for g in &case.generators {
        let _ = writeln!(out, "{},{},{}", g.id, g.bus, flag(g.in_service));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::two_bus_case;

    const MINIMAL: &str = "\
# two buses, one line
[SUBSTATION]
id,lat,lon,grounding_resistance_ohm
1,40.0,-100.0,0.5
2,41.0,-100.0,   # no grounding data

[BUS]
id,nominal_kv,substation_id,lat,lon,v_pu
1,345,1,,,
2,345,2,,,1.02

[LINE]
id,from_bus,to_bus,r_pu,mva_base,series_cap_mode,status
1,1,2,0.001,100,NONE,1
";

    #[test]
    fn minimal_case() {
        let case = parse_case_str(MINIMAL, "minimal").unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.substations[1].grounding_resistance, None);
        assert_eq!(case.buses[1].v_pu, Some(1.02));
        assert!(case.transformers.is_empty());
    }

    #[test]
    fn round_trip() {
        let case = parse_case_str(MINIMAL, "minimal").unwrap();
        let again = parse_case_str(&write_case(&case), "written").unwrap();
        assert_eq!(case, again);
        let case = two_bus_case();
        assert_eq!(parse_case_str(&write_case(&case), "written").unwrap(), case);
    }

    #[test]
    fn duplicate_id_names_both_lines() {
        let text = MINIMAL.replace("2,345,2,,,1.02", "1,345,2,,,1.02");
        let err = parse_case_str(&text, "dup").unwrap_err().to_string();
        assert!(err.contains("duplicate bus id 1"), "{err}");
        assert!(err.contains("lines 9 and 10"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let bad = [
            "[NOPE]\nid\n",
            "1,2,3\n",
            "[BUS]\nid,kv\n",
            "[BUS]\n",
            "[GENERATOR]\nid,bus,status\n1,2\n",
            "[GENERATOR]\nid,bus,status\n1,2,maybe\n",
            "[GENERATOR]\nid,bus,status\n[GENERATOR]\nid,bus,status\n",
            "[SUBSTATION]\nid,lat,lon,grounding_resistance_ohm\n1,abc,0,\n",
            "[SUBSTATION]\nid,lat,lon,grounding_resistance_ohm\n-1,0,0,\n",
            "[SUBSTATION]\nid,lat,lon,grounding_resistance_ohm\n1,inf,0,\n",
        ];
        for text in bad {
            assert!(parse_case_str(text, "bad").is_err(), "{text}");
        }
    }

    #[test]
    fn row_errors_carry_position() {
        let text = "[SUBSTATION]\nid,lat,lon,grounding_resistance_ohm\n1,0,x,\n";
        match parse_case_str(text, "p") {
            Err(Error::Parse {
                line: 3,
                column: 3,
                section,
                ..
            }) => assert_eq!(section, "SUBSTATION"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_are_diagnostics() {
        let text = MINIMAL.replace("1,1,2,0.001", "1,1,9,0.001");
        assert!(matches!(parse_case_str(&text, "s"), Err(Error::InvalidCase(_))));
    }
}
