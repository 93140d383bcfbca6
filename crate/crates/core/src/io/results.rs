//! Result tables and network dumps. All output is byte-deterministic.

use std::path::{Path, PathBuf};

use super::format::fmt_g;
use crate::error::{Error, Result};
use crate::model::{GmdNetwork, Terminal};
use crate::solver::SolveResult;

pub const RESULTS_FILE: &str = "results.csv";
pub const BRANCHES_FILE: &str = "branches.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const NOTES_FILE: &str = "notes.csv";
pub const CHART_FILE: &str = "qloss_chart.csv";

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("writing to memory cannot fail")
}

fn record<I, T>(w: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    w.write_record(fields).expect("writing to memory cannot fail");
}

fn save(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Per-transformer rows: field, scenario, transformer id, effective GIC
/// (per-unit) and Qloss (MVAr).
pub fn results_table(results: &[SolveResult]) -> Vec<u8> {
    let mut w = writer();
    record(
        &mut w,
        [
            "field_label",
            "scenario_label",
            "transformer_id",
            "effective_gic_pu",
            "qloss_mvar",
        ],
    );
    for r in results {
        for t in &r.transformers {
            record(
                &mut w,
                [
                    r.field_label.clone(),
                    r.scenario_label.clone(),
                    t.transformer.to_string(),
                    fmt_g(t.effective_gic_pu),
                    fmt_g(t.qloss_mvar),
                ],
            );
        }
    }
    finish(w)
}

pub fn branches_table(results: &[SolveResult]) -> Vec<u8> {
    let mut w = writer();
    record(
        &mut w,
        [
            "field_label",
            "scenario_label",
            "branch_id",
            "origin",
            "I_dc_amps",
        ],
    );
    for r in results {
        for (b, i) in r.network.branches.iter().zip(&r.branch_current) {
            record(
                &mut w,
                [
                    r.field_label.clone(),
                    r.scenario_label.clone(),
                    b.id.0.to_string(),
                    b.origin.as_str().to_string(),
                    fmt_g(*i),
                ],
            );
        }
    }
    finish(w)
}

pub fn runs_table(results: &[SolveResult]) -> Vec<u8> {
    let mut w = writer();
    record(
        &mut w,
        [
            "field_label",
            "scenario_label",
            "nodes",
            "branches",
            "condition_estimate",
            "total_qloss_mvar",
        ],
    );
    for r in results {
        record(
            &mut w,
            [
                r.field_label.clone(),
                r.scenario_label.clone(),
                r.network.nodes.len().to_string(),
                r.network.branches.len().to_string(),
                fmt_g(r.condition_estimate),
                fmt_g(r.total_qloss()),
            ],
        );
    }
    finish(w)
}

pub fn notes_table(results: &[SolveResult]) -> Vec<u8> {
    let mut w = writer();
    record(
        &mut w,
        ["field_label", "scenario_label", "kind", "subject", "message"],
    );
    for r in results {
        for d in &r.warnings {
            let kind = if d.is_error() { "error" } else { "warning" };
            record(
                &mut w,
                [&r.field_label, &r.scenario_label, kind, &d.subject, &d.message],
            );
        }
        for n in &r.notes {
            record(
                &mut w,
                [
                    r.field_label.as_str(),
                    r.scenario_label.as_str(),
                    "note",
                    "",
                    n.as_str(),
                ],
            );
        }
    }
    finish(w)
}

/// Qloss per transformer with one column per scenario, one row block per field.
pub fn chart_table(results: &[SolveResult]) -> Vec<u8> {
    let mut fields: Vec<&str> = Vec::new();
    let mut scenarios: Vec<&str> = Vec::new();
    for r in results {
        if !fields.contains(&r.field_label.as_str()) {
            fields.push(&r.field_label);
        }
        if !scenarios.contains(&r.scenario_label.as_str()) {
            scenarios.push(&r.scenario_label);
        }
    }
    let mut w = writer();
    let mut header = vec!["field_label".to_string(), "transformer_id".to_string()];
    header.extend(scenarios.iter().map(|s| format!("{s} qloss_mvar")));
    record(&mut w, &header);
    for field in fields {
        let rows: Vec<&SolveResult> = results.iter().filter(|r| r.field_label == field).collect();
        let mut ids: Vec<u32> = rows
            .iter()
            .flat_map(|r| r.transformers.iter().map(|t| t.transformer))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            let mut line = vec![field.to_string(), id.to_string()];
            for s in &scenarios {
                let q = rows
                    .iter()
                    .find(|r| r.scenario_label == *s)
                    .and_then(|r| r.transformer(id))
                    .map_or_else(String::new, |t| fmt_g(t.qloss_mvar));
                line.push(q);
            }
            record(&mut w, &line);
        }
    }
    finish(w)
}

/// Write results, branch currents, run metadata and notes into `out_dir`.
pub fn write_results(results: &[SolveResult], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    Ok(vec![
        save(&out_dir.join(RESULTS_FILE), &results_table(results))?,
        save(&out_dir.join(BRANCHES_FILE), &branches_table(results))?,
        save(&out_dir.join(RUNS_FILE), &runs_table(results))?,
        save(&out_dir.join(NOTES_FILE), &notes_table(results))?,
    ])
}

pub fn write_chart(results: &[SolveResult], out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    save(&out_dir.join(CHART_FILE), &chart_table(results))
}

/// `[NODE]` and `[BRANCH]` tables of a DC network.
pub fn network_dump(network: &GmdNetwork) -> String {
    let mut out = String::from("[NODE]\nnode_id,role,source_id,lat,lon,solid_ground\n");
    for n in &network.nodes {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n.id,
            n.role.as_str(),
            n.source,
            fmt_g(n.lat),
            fmt_g(n.lon),
            u8::from(n.solid_ground)
        ));
    }
    out.push_str("\n[BRANCH]\nbranch_id,from_node,to_node,resistance_ohm,induced_voltage_v,origin,parent_kind,parent_id\n");
    for b in &network.branches {
        let to = match b.to {
            Terminal::Node(t) => t.to_string(),
            Terminal::Earth => "EARTH".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            b.id,
            b.from,
            to,
            fmt_g(b.resistance),
            fmt_g(b.induced_voltage),
            b.origin.as_str(),
            b.parent.kind_str(),
            b.parent.id()
        ));
    }
    out
}

pub fn write_network(network: &GmdNetwork, path: &Path) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save(path, network_dump(network).as_bytes())
}
