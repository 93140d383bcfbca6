//! Per-line induced voltage tables (`LineID`, `GICInducedDCVolt` columns).

use std::path::Path;

use crate::coupling::LineVoltageTable;
use crate::error::{Error, Result};

pub const LINE_ID_COLUMN: &str = "LineID";
pub const VOLTAGE_COLUMN: &str = "GICInducedDCVolt";

pub fn parse_line_voltages(path: &Path) -> Result<LineVoltageTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = parse_line_voltages_str(&text, &path.display().to_string())?;
    table.label = path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Ok(table)
}

/// Extra columns are ignored. Unknown line ids are accepted here and
/// rejected when the table is coupled to a case.
pub fn parse_line_voltages_str(text: &str, origin: &str) -> Result<LineVoltageTable> {
    let format_err = |message: String| Error::Format {
        path: origin.to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| format_err(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format_err(format!("missing {name} column")))
    };
    let id_col = column(LINE_ID_COLUMN)?;
    let v_col = column(VOLTAGE_COLUMN)?;

    let mut table = LineVoltageTable::default();
    let mut first_seen = std::collections::BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| format_err(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |column: usize, message: String| Error::Parse {
            path: origin.to_string(),
            section: "line voltages".to_string(),
            line,
            column: column + 1,
            message,
        };
        let raw_id = record.get(id_col).unwrap_or("");
        let id: u32 = raw_id
            .parse()
            .map_err(|_| parse_err(id_col, format!("invalid {LINE_ID_COLUMN} {raw_id:?}")))?;
        let raw_v = record.get(v_col).unwrap_or("");
        let volts: f64 = raw_v
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(v_col, format!("invalid voltage {raw_v:?}")))?;
        if let Some(prev) = first_seen.insert(id, line) {
            return Err(parse_err(
                id_col,
                format!("duplicate {LINE_ID_COLUMN} {id} (first on line {prev})"),
            ));
        }
        table.volts.insert(id, volts);
    }
    Ok(table)
}
