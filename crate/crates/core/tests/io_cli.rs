mod common;

use std::path::Path;
use std::process::Command;

use gicdc::cli::{cli_main, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use gicdc::io::{parse_case, parse_case_str, parse_line_voltages_str, write_case};
use gicdc::Error;
use proptest::prelude::*;

fn fixture_arg() -> String {
    common::fixture("four_substation.case")
        .to_string_lossy()
        .into_owned()
}

fn cli(args: &[&str]) -> i32 {
    cli_main(std::iter::once("gicdc").chain(args.iter().copied()))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn fixture_contents() {
    let case = common::fixture_case();
    assert_eq!(case.substations.len(), 4);
    assert_eq!(case.buses.len(), 12);
    assert_eq!(case.lines.len(), 8);
    assert_eq!(case.transformers.len(), 7);
    assert_eq!(case.generators.len(), 4);
    assert!(case.substations.iter().all(|s| s.grounding_resistance.is_some()));
}

#[test]
fn case_round_trips() {
    let case = common::fixture_case();
    let text = write_case(&case);
    let again = parse_case_str(&text, "round-trip").unwrap();
    assert_eq!(again, case);
    assert_eq!(write_case(&again), text);
}

#[test]
fn parse_errors_carry_location() {
    let text = std::fs::read_to_string(common::fixture("four_substation.case")).unwrap();
    let broken = text.replacen("11,500,1,,,1.02", "11,five hundred,1,,,1.02", 1);
    match parse_case_str(&broken, "broken.case") {
        Err(Error::Parse {
            path, section, line, ..
        }) => {
            assert_eq!(path, "broken.case");
            assert_eq!(section, "BUS");
            assert_eq!(line, 14);
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(
        parse_case(Path::new("/nonexistent/x.case")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn line_volt_table_columns() {
    let t = parse_line_voltages_str("LineID,FromBus,ToBus,GICInducedDCVolt\n1,11,31,12.5\n", "lv").unwrap();
    assert_eq!(t.volts[&1], 12.5);
    assert!(matches!(
        parse_line_voltages_str("LineID,Volts\n1,2\n", "lv"),
        Err(Error::Format { .. })
    ));
    assert!(parse_line_voltages_str("LineID,GICInducedDCVolt\n1,2\n1,3\n", "lv").is_err());
}

#[test]
fn exit_codes() {
    let out = tempfile::tempdir().unwrap();
    let out_arg = out.path().to_string_lossy().into_owned();
    let case = fixture_arg();
    assert_eq!(cli(&["--help"]), EXIT_OK);
    assert_eq!(cli(&["solve", &case, "--out", &out_arg]), EXIT_USAGE);
    assert_eq!(
        cli(&[
            "solve",
            &case,
            "--uniform-field",
            "1",
            "90",
            "--line-volts",
            "x.csv",
            "--out",
            &out_arg
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        cli(&[
            "solve",
            &case,
            "--uniform-field",
            "1",
            "90",
            "--blocker",
            "bogus",
            "--out",
            &out_arg
        ]),
        EXIT_USAGE
    );
    assert_eq!(
        cli(&[
            "solve",
            &case,
            "--uniform-field",
            "1",
            "90",
            "--blocker",
            "neutral",
            "--locations",
            "999",
            "--out",
            &out_arg
        ]),
        EXIT_DATA
    );
    assert_eq!(
        cli(&[
            "solve",
            "/nonexistent.case",
            "--uniform-field",
            "1",
            "90",
            "--out",
            &out_arg
        ]),
        EXIT_DATA
    );
    assert_eq!(
        cli(&["solve", &case, "--uniform-field", "-1", "90", "--out", &out_arg]),
        EXIT_DATA
    );
    assert_eq!(
        cli(&[
            "solve",
            &case,
            "--uniform-field",
            "1",
            "90",
            "--blocker",
            "substation",
            "--locations",
            "1,3",
            "--out",
            &out_arg
        ]),
        EXIT_OK
    );
    let runs = String::from_utf8(read(out.path(), "runs.csv")).unwrap();
    assert!(runs.contains("SUBSTATION@1+3"));
}

#[test]
fn binary_reports_totals() {
    let out = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_gicdc"))
        .args([
            "compare-blockers",
            &fixture_arg(),
            "--uniform-field",
            "1",
            "90",
            "--out",
        ])
        .arg(out.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    let stdout = String::from_utf8(status.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.contains("total Qloss")).count(), 4);
    let bad = Command::new(env!("CARGO_BIN_EXE_gicdc"))
        .args(["build-dc", "/nonexistent.case"])
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(EXIT_DATA));
}

#[test]
fn comparison_output_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let lv = common::fixture("four_substation_nonuniform.csv")
        .to_string_lossy()
        .into_owned();
    for dir in [&a, &b] {
        let d = dir.path().to_string_lossy().into_owned();
        assert_eq!(
            cli(&[
                "compare-blockers",
                &fixture_arg(),
                "--line-volts",
                &lv,
                "--out",
                &d
            ]),
            EXIT_OK
        );
    }
    for name in [
        "results.csv",
        "branches.csv",
        "runs.csv",
        "notes.csv",
        "qloss_chart.csv",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let results = String::from_utf8(read(a.path(), "results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4 * 7);
    assert!(results
        .lines()
        .skip(1)
        .all(|l| l.starts_with("four_substation_nonuniform,")));
}

#[test]
fn build_dc_writes_a_dump() {
    let out = tempfile::tempdir().unwrap();
    let path = out.path().join("net.txt");
    assert_eq!(
        cli(&["build-dc", &fixture_arg(), "--out", &path.to_string_lossy()]),
        EXIT_OK
    );
    let dump = std::fs::read_to_string(&path).unwrap();
    assert!(dump.contains("[NODE]") && dump.contains("[BRANCH]"));
}

proptest! {
    #[test]
    fn case_parser_is_total(text in "\\PC{0,400}") {
        let _ = parse_case_str(&text, "fuzz");
    }

    #[test]
    fn case_parser_survives_line_mutation(idx in 0usize..60, junk in "[ -~]{0,30}") {
        let text = std::fs::read_to_string(common::fixture("four_substation.case")).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let i = idx % lines.len();
        lines[i] = &junk;
        let _ = parse_case_str(&lines.join("\n"), "fuzz");
    }

    #[test]
    fn line_volt_parser_is_total(text in "\\PC{0,200}") {
        let _ = parse_line_voltages_str(&text, "fuzz");
    }
}
