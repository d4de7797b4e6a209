//! `tabula`: build, inspect and export tables from a CSV dataset and a
//! JSON layout file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tabula::ard::ard_to_csv_string;
use tabula::{
    as_ard_with, build_table_with, column_score, join_path, load_layout, parse_path, read_csv,
    render_text, BuildOptions, DataError, Dataset, LayoutFileError, RenderOptions, Schema,
    TableTree,
};

/// Exit status for command-line misuse (sysexits EX_USAGE).
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "tabula", version, about = "Declarative tables from CSV data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a table and write it as text or ARD CSV.
    Build {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Keep blank cells in ARD output.
        #[arg(long)]
        include_blanks: bool,
    },
    /// List row or column paths, one per line.
    Paths {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        dimension: Dimension,
    },
    /// Print one cell as "raw<TAB>formatted".
    Query {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        row: String,
        #[arg(long)]
        col: String,
    },
    /// Sort the children at a row path and print the table.
    Sort {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
        /// Row path whose children are reordered; `*` matches any facet.
        #[arg(long)]
        at: String,
        /// Column path to score by, optionally followed by a summary row name.
        #[arg(long)]
        by: String,
        #[arg(long)]
        desc: bool,
    },
    /// Drop subtables whose summary values are all zero and print the table.
    Prune {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
struct Input {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Schema sidecar (JSON) for --data.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Dataset used only for column counts.
    #[arg(long)]
    alt_counts: Option<PathBuf>,
    /// Schema sidecar for --alt-counts.
    #[arg(long, requires = "alt_counts")]
    alt_schema: Option<PathBuf>,
    /// Layout file (JSON array of directives).
    #[arg(long)]
    layout: PathBuf,
}

#[derive(Debug, Args)]
struct Output {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Separator character under the header.
    #[arg(long, default_value_t = '-')]
    hsep: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Ard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dimension {
    Rows,
    Cols,
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
enum Failure {
    /// Files that cannot be read or written.
    Io(String),
    /// Anything wrong with the inputs' content: ingest, schema, layout,
    /// build and path errors.
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Input(m) => m,
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<LayoutFileError> for Failure {
    fn from(e: LayoutFileError) -> Self {
        match e {
            LayoutFileError::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn load_data(path: &Path, schema: Option<&Path>) -> Result<Dataset, Failure> {
    let schema = schema.map(Schema::load).transpose()?;
    Ok(read_csv(path, schema.as_ref())?)
}

fn build(input: &Input, hsep: char) -> Result<TableTree, Failure> {
    let data = load_data(&input.data, input.schema.as_deref())?;
    let alt = input
        .alt_counts
        .as_deref()
        .map(|p| load_data(p, input.alt_schema.as_deref()))
        .transpose()?;
    let layout = load_layout(&input.layout)?;
    let options = BuildOptions {
        alt_counts: alt.as_ref(),
        hsep,
    };
    build_table_with(&layout, &data, &options).map_err(input_error)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(format!("cannot write to standard output: {e}")))
        }
    }
}

fn render(table: &TableTree) -> String {
    render_text(table, &RenderOptions::default())
}

/// Splits `--by` into a leaf column index and an optional summary row
/// name: the whole path if it names a leaf, else all but the last token.
fn sort_key(table: &TableTree, by: &str) -> Result<(usize, Option<String>), Failure> {
    let path = parse_path(by);
    let cols = table.columns();
    match cols.resolve_leaf(&path) {
        Ok(i) => Ok((i, None)),
        Err(whole) => {
            if let Some((stat, prefix)) = path.split_last() {
                if let Ok(i) = cols.resolve_leaf(prefix) {
                    return Ok((i, Some(stat.clone())));
                }
            }
            Err(input_error(whole))
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Build {
            input,
            output,
            format,
            include_blanks,
        } => {
            let table = build(&input, output.hsep)?;
            let text = match format {
                Format::Text => render(&table),
                Format::Ard => ard_to_csv_string(&as_ard_with(&table, include_blanks)),
            };
            emit(output.out.as_deref(), &text)
        }
        Command::Paths { input, dimension } => {
            let table = build(&input, '-')?;
            let paths = match dimension {
                Dimension::Rows => table.row_paths(),
                Dimension::Cols => table.col_paths(),
            };
            let text: String = paths.iter().map(|p| join_path(p) + "\n").collect();
            emit(None, &text)
        }
        Command::Query { input, row, col } => {
            let table = build(&input, '-')?;
            let cell = table
                .cell_at(&parse_path(&row), &parse_path(&col))
                .map_err(input_error)?;
            emit(None, &format!("{}\t{}\n", cell.value.to_raw_string(), cell.formatted()))
        }
        Command::Sort {
            input,
            output,
            at,
            by,
            desc,
        } => {
            let table = build(&input, output.hsep)?;
            let (col, stat) = sort_key(&table, &by)?;
            let sorted = table
                .sort_at_path(&parse_path(&at), column_score(col, stat), desc)
                .map_err(input_error)?;
            emit(output.out.as_deref(), &render(&sorted))
        }
        Command::Prune { input, output } => {
            let table = build(&input, output.hsep)?;
            emit(output.out.as_deref(), &render(&table.prune_zero()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tabula: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
