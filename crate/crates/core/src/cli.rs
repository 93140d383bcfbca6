//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::blockers::{scenario_matrix, standard_scenarios, BlockerKind, BlockerScenario, Locations};
use crate::builder::{build, BuilderConfig};
use crate::coupling::{FieldSource, UniformField};
use crate::error::Result;
use crate::io;
use crate::solver::SolveResult;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gicdc",
    version,
    about = "GIC analysis on DC-equivalent power networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump the DC-equivalent network of a case.
    BuildDc {
        case: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one blocker scenario.
    Solve {
        case: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum, default_value_t = BlockerArg::None)]
        blocker: BlockerArg,
        /// Comma-separated element ids, or ALL.
        #[arg(long, value_delimiter = ',')]
        locations: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve all four scenarios at full placement and write a comparison.
    CompareBlockers {
        case: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct FieldArgs {
    /// Uniform field magnitude (V/km) and bearing (degrees clockwise from North).
    #[arg(long, num_args = 2, value_names = ["MAG", "BEARING"], allow_negative_numbers = true)]
    uniform_field: Option<Vec<f64>>,
    /// CSV with LineID and GICInducedDCVolt columns.
    #[arg(long)]
    line_volts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BlockerArg {
    None,
    Neutral,
    Substation,
    Seriescap,
}

impl From<BlockerArg> for BlockerKind {
    fn from(b: BlockerArg) -> Self {
        match b {
            BlockerArg::None => BlockerKind::None,
            BlockerArg::Neutral => BlockerKind::Neutral,
            BlockerArg::Substation => BlockerKind::Substation,
            BlockerArg::Seriescap => BlockerKind::SeriesCap,
        }
    }
}

impl FieldArgs {
    fn source(&self) -> Result<FieldSource> {
        if let Some(path) = &self.line_volts {
            return Ok(FieldSource::Table(io::parse_line_voltages(path)?));
        }
        let v = self.uniform_field.as_deref().unwrap_or_default();
        Ok(FieldSource::Uniform(UniformField::new(v[0], v[1])?))
    }
}

fn parse_locations(raw: &[String]) -> std::result::Result<Locations, String> {
    if raw.is_empty() || (raw.len() == 1 && raw[0].eq_ignore_ascii_case("all")) {
        return Ok(Locations::All);
    }
    raw.iter()
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| format!("invalid location id {s:?}"))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Locations::Ids)
}

/// Run the CLI. Returns 0 on success, 1 on usage errors and 2 on data errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::BuildDc { case, out } => build_dc(&case, out.as_deref()),
        Command::Solve {
            case,
            field,
            blocker,
            locations,
            out,
        } => {
            let locations = match parse_locations(&locations) {
                Ok(l) => l,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return EXIT_USAGE;
                }
            };
            let scenario = BlockerScenario {
                kind: blocker.into(),
                locations,
            };
            solve(&case, &field, &[scenario], &out, false)
        }
        Command::CompareBlockers { case, field, out } => {
            solve(&case, &field, &standard_scenarios(), &out, true)
        }
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DATA
        }
    }
}

fn build_dc(case: &Path, out: Option<&Path>) -> Result<()> {
    let case = io::parse_case(case)?;
    let built = build(&case, &BuilderConfig::default())?;
    for d in &built.diagnostics {
        eprintln!("{d}");
    }
    match out {
        Some(path) => {
            io::write_network(&built.network, path)?;
        }
        None => print!("{}", io::network_dump(&built.network)),
    }
    Ok(())
}

fn solve(
    case: &Path,
    field: &FieldArgs,
    scenarios: &[BlockerScenario],
    out: &Path,
    chart: bool,
) -> Result<()> {
    let case = io::parse_case(case)?;
    let source = field.source()?;
    let results = scenario_matrix(&case, &BuilderConfig::default(), &[source], scenarios)?;
    io::write_results(&results, out)?;
    if chart {
        io::write_chart(&results, out)?;
    }
    report(&results);
    Ok(())
}

fn report(results: &[SolveResult]) {
    if let Some(first) = results.first() {
        for d in &first.warnings {
            eprintln!("{d}");
        }
    }
    for r in results {
        println!(
            "{} | {}: total Qloss {} MVAr",
            r.field_label,
            r.scenario_label,
            io::fmt_g(r.total_qloss())
        );
    }
}
