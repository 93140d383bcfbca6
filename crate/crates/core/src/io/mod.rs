//! File formats: case files, line-voltage tables, result and network dumps.

pub mod case_file;
pub mod format;
pub mod line_volts;
pub mod results;

pub use case_file::{parse_case, parse_case_str, write_case};
pub use format::fmt_g;
pub use line_volts::{parse_line_voltages, parse_line_voltages_str};
pub use results::{network_dump, write_chart, write_network, write_results};
