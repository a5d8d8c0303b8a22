//! Command-line front end: `build`, `verify`, `trace`, `stats`.
//!
//! Exit codes: 0 success, 1 check or construction failure, 2 usage or I/O
//! error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dump;
use crate::engine::{
    self, render_trace, AssertLevel, EngineConfig, EngineError, EngineState, SnapshotPolicy,
};
use crate::verify::{verify_all, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hamel-forge",
    version,
    about = "Build and verify finite stages of a free family of Hamel-type bijections"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Number of generators.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub generators: u64,
    /// Largest letter count of the words the construction serves.
    #[arg(long = "max-word-letters", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_word_letters: u64,
    #[arg(long, default_value_t = 100)]
    pub stages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Injected starting points.
    #[arg(long = "seed-symbols", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seed_symbols: u64,
    #[arg(long, value_enum, default_value_t = SnapshotPolicy::All)]
    pub snapshots: SnapshotPolicy,
    #[arg(long = "assert-level", value_enum, default_value_t = AssertLevel::End)]
    pub assert_level: AssertLevel,
}

impl ConfigArgs {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            generators: self.generators as usize,
            max_letters: self.max_word_letters as usize,
            stages: self.stages,
            seed: self.seed,
            seed_symbols: self.seed_symbols,
            snapshots: self.snapshots,
            assert_level: self.assert_level,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the construction and write a state dump.
    Build {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify a dump, or a fresh build from the given configuration.
    Verify {
        /// Dump to verify; when absent the configuration is built in memory.
        dump: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Exit 0 when checks only warn.
        #[arg(long = "allow-warn")]
        allow_warn: bool,
    },
    /// Show what one stage of a fresh build did.
    Trace {
        /// Stage index.
        stage: usize,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Summarize a dump.
    Stats {
        dump: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Failure of a subcommand, already mapped to its exit code.
#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<EngineError> for CmdError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::InvalidConfig(_) | EngineError::InvalidRequirement { .. } => EXIT_USAGE,
            _ => EXIT_CHECK,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn emit(output: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<(), CmdError> {
    match &output.out {
        Some(p) => fs::write(p, text)
            .map_err(|e| CmdError::usage(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CmdError::usage(format!("cannot write output: {e}"))),
    }
}

pub fn load_dump(path: &Path) -> Result<EngineState, CmdError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::usage(format!("cannot read {}: {e}", path.display())))?;
    dump::load(&text).map_err(|e| CmdError::usage(format!("{}: {e}", path.display())))
}

/// Runs the construction for `config`.
pub fn cmd_build(config: &EngineConfig) -> Result<EngineState, CmdError> {
    Ok(engine::run(config)?)
}

pub fn render_state(state: &EngineState, format: Format) -> String {
    match format {
        Format::Text => dump::render_text(state),
        Format::Structured => dump::render_structured(state),
    }
}

/// Verification report plus the exit code it implies.
pub fn cmd_verify(state: &EngineState, allow_warn: bool) -> (Report, i32) {
    let report = verify_all(state, state.max_letters);
    let code = if report.any_fail() {
        EXIT_CHECK
    } else if report.all_pass() || allow_warn {
        EXIT_OK
    } else {
        EXIT_CHECK
    };
    (report, code)
}

pub fn cmd_trace(config: &EngineConfig, stage: usize) -> Result<String, CmdError> {
    let state = engine::run(config)?;
    render_trace(&state, stage).map_err(CmdError::usage)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub generators: usize,
    pub points_per_generator: Vec<usize>,
    pub total_points: usize,
    pub words: usize,
    pub stages: usize,
    /// `[run, skipped]` per step.
    pub step_i: [usize; 2],
    pub step_ii: [usize; 2],
    pub step_iii: [usize; 2],
    pub budget: usize,
    pub utilization_percent: f64,
    pub symbols: u64,
}

pub fn cmd_stats(state: &EngineState) -> Stats {
    let per: Vec<usize> = state.funcs.iter().map(|f| f.len()).collect();
    let total: usize = per.iter().sum();
    let mut steps = [[0usize; 2]; 3];
    let mut budget = 0;
    for rec in &state.log {
        for (i, s) in rec.skipped.iter().enumerate() {
            steps[i][usize::from(*s)] += 1;
        }
        budget += 2 * state.words[rec.req.word_idx].letter_count() + 2;
    }
    Stats {
        generators: state.generators,
        points_per_generator: per,
        total_points: total,
        words: state.words.len(),
        stages: state.log.len(),
        step_i: steps[0],
        step_ii: steps[1],
        step_iii: steps[2],
        budget,
        utilization_percent: if budget == 0 {
            0.0
        } else {
            100.0 * total as f64 / budget as f64
        },
        symbols: state.allocator.allocated(),
    }
}

impl std::fmt::Display for Stats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "generators {}", self.generators)?;
        let per: Vec<String> = self
            .points_per_generator
            .iter()
            .enumerate()
            .map(|(g, n)| format!("g{g}={n}"))
            .collect();
        writeln!(f, "points {} ({})", self.total_points, per.join(" "))?;
        writeln!(f, "words {}", self.words)?;
        writeln!(f, "stages {}", self.stages)?;
        for (name, [run, skip]) in [
            ("I", self.step_i),
            ("II", self.step_ii),
            ("III", self.step_iii),
        ] {
            writeln!(f, "step {name} run={run} skipped={skip}")?;
        }
        writeln!(
            f,
            "budget {} used {} ({:.1}%)",
            self.budget, self.total_points, self.utilization_percent
        )?;
        writeln!(f, "symbols {}", self.symbols)
    }
}

fn report_text(report: &Report, format: Format) -> String {
    match format {
        Format::Text => report.to_string(),
        Format::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CmdError> {
    match cli.command {
        Command::Build { config, output } => {
            let state = cmd_build(&config.engine_config())?;
            emit(&output, &render_state(&state, output.format), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            dump,
            config,
            output,
            allow_warn,
        } => {
            let state = match dump {
                Some(p) => load_dump(&p)?,
                None => cmd_build(&config.engine_config())?,
            };
            let (report, code) = cmd_verify(&state, allow_warn);
            emit(&output, &report_text(&report, output.format), stdout)?;
            Ok(code)
        }
        Command::Trace {
            stage,
            config,
            output,
        } => {
            let text = cmd_trace(&config.engine_config(), stage)?;
            emit(&output, &text, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Stats { dump, output } => {
            let stats = cmd_stats(&load_dump(&dump)?);
            let text = match output.format {
                Format::Text => stats.to_string(),
                Format::Structured => {
                    serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"
                }
            };
            emit(&output, &text, stdout)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn execute<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}
