//! The `supnil` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::chart_geometry::ParityFilter;
use crate::kernel_analysis::Space;
use crate::report::{parse_scenario, run, Analysis, Report, Scenario};

#[derive(Parser)]
#[command(
    name = "supnil",
    version,
    about = "Global vector fields and nildominance of supermanifolds over P^1"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Parity {
    Even,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analyses listed in a scenario.
    Analyze {
        scenario: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
        #[arg(long)]
        truncation_degree: Option<i64>,
        /// Highest leading degree in the lift tables.
        #[arg(long)]
        max_degree: Option<i64>,
    },
    /// Print the global-field table of the split model in one degree.
    Tables {
        scenario: PathBuf,
        #[arg(long)]
        degree: i64,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
    /// Common kernel of the global fields in a space of local derivations.
    Kernel {
        scenario: PathBuf,
        #[arg(long, default_value = "filtration>=2")]
        space: String,
        #[arg(long, value_enum, default_value = "even")]
        parity: Parity,
        #[arg(long, value_enum, default_value = "markdown")]
        format: Format,
    },
}

fn load(path: &PathBuf) -> Result<Scenario, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn render(r: &Report, format: Format) -> String {
    match format {
        Format::Markdown => r.to_markdown(),
        Format::Json => r.to_json() + "\n",
    }
}

fn execute(cli: Cli) -> Result<(String, Option<PathBuf>, bool), String> {
    let (report, out, format) = match cli.command {
        Command::Analyze {
            scenario,
            report,
            format,
            truncation_degree,
            max_degree,
        } => {
            let mut s = load(&scenario)?;
            if let Some(t) = truncation_degree {
                if t < 0 {
                    return Err("--truncation-degree must be >= 0".into());
                }
                s.options.truncation_degree = t;
            }
            if let Some(d) = max_degree {
                if d < 2 {
                    return Err("--max-degree must be >= 2".into());
                }
                s.options.max_lift_degree = Some(d);
            }
            (run(&s), report, format)
        }
        Command::Tables {
            scenario,
            degree,
            format,
        } => {
            let mut s = load(&scenario)?;
            let rank = s.model.spec.rank() as i64;
            if !(-1..=rank).contains(&degree) {
                return Err(format!("--degree must lie in -1..={rank}"));
            }
            s.analyses = [Analysis::GlobalFields].into();
            let mut r = run(&s);
            r.global_fields = vec![crate::report::TableSection {
                degree,
                rows: crate::chart_geometry::family_table(&s.model.spec, degree, ParityFilter::All),
            }];
            (r, None, format)
        }
        Command::Kernel {
            scenario,
            space,
            parity,
            format,
        } => {
            let mut s = load(&scenario)?;
            space.parse::<Space>().map_err(|e| e.to_string())?;
            s.options.kernel_space = space;
            s.options.kernel_parity = match parity {
                Parity::Even => ParityFilter::Even,
                Parity::All => ParityFilter::All,
            };
            s.analyses = [Analysis::Kernel].into();
            (run(&s), None, format)
        }
    };
    let inconclusive = report.is_inconclusive();
    Ok((render(&report, format), out, inconclusive))
}

/// Captured result of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CliOutput {
    pub stdout: String,
    pub stderr: String,
    /// 0 complete, 2 inconclusive sections present, 1 error.
    pub code: u8,
}

/// Runs the command line `args` (program name first); `--report` files are
/// written, everything else is returned.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                CliOutput {
                    stdout: text,
                    code,
                    ..CliOutput::default()
                }
            } else {
                CliOutput {
                    stderr: text,
                    code,
                    ..CliOutput::default()
                }
            };
        }
    };
    match execute(cli) {
        Ok((text, out, inconclusive)) => {
            let mut result = CliOutput::default();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &text) {
                        result.stderr = format!("error: {}: {e}\n", path.display());
                        result.code = 1;
                        return result;
                    }
                }
                None => result.stdout = text,
            }
            if inconclusive {
                result.stderr = "warning: some kernel sections are inconclusive\n".into();
                result.code = 2;
            }
            result
        }
        Err(e) => CliOutput {
            stderr: format!("error: {e}\n"),
            code: 1,
            ..CliOutput::default()
        },
    }
}
