mod output;
mod session;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sirsql::compiler::CompileOptions;
use sirsql::{ErrorClass, LayerOptions};

use output::Format;
use session::{describe, Failure, Session};

#[derive(Parser, Debug)]
#[command(name = "sirsql", version, about = "Stored-and-inherited relations over SQLite")]
struct Cli {
    /// Database file; `:memory:` for a throwaway one.
    #[arg(long, env = "SIRSQL_KERNEL", global = true)]
    kernel: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Break dependency cycles by reading the other relation's base table.
    #[arg(long, global = true)]
    rewrite_to_base: bool,
    #[arg(long, global = true)]
    skip_redundant_full_view: bool,
    #[arg(long, global = true)]
    collapse_value_ies: bool,
    /// Refuse inserts that leave a join IE without a match.
    #[arg(long, global = true)]
    strict_integrity: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a script of schema and data statements.
    Apply { file: PathBuf },
    /// Run statements and print the result of the last.
    Query { sql: String },
    /// Print the kernel DDL behind a relation.
    Explain { relation: String },
    /// Normalize a dependency file into Create Table statements.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        heath_first: bool,
    },
    /// Look for join-attribute values matching more than one source row.
    Check { relation: String },
    /// Interactive shell; reads statements from stdin.
    Repl,
}

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Core(e) => match e.class() {
            ErrorClass::Parse => 3,
            ErrorClass::Semantic => 2,
            ErrorClass::Runtime => 1,
        },
        Failure::Schema(_) => 2,
        Failure::Io(_) | Failure::Findings => 1,
        Failure::Usage(_) => 2,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Command::Decompose { file, heath_first } = &cli.command {
        return session::decompose(&std::fs::read_to_string(file)?, *heath_first, &mut out);
    }
    let location = cli.kernel.as_deref().ok_or_else(|| Failure::Usage("no kernel location: pass --kernel or set SIRSQL_KERNEL".into()))?;
    let options = LayerOptions {
        compile: CompileOptions {
            skip_redundant_full_view: cli.skip_redundant_full_view,
            collapse_value_ies: cli.collapse_value_ies,
            rewrite_to_base: cli.rewrite_to_base,
        },
        strict_integrity: cli.strict_integrity,
    };
    let mut s = Session::open(location, options, cli.format)?;
    let r = match &cli.command {
        Command::Apply { file } => s.apply(&std::fs::read_to_string(file)?, &mut out),
        Command::Query { sql } => s.run(sql, &mut out),
        Command::Explain { relation } => s.explain(relation, &mut out),
        Command::Check { relation } => s.check(relation, &mut out),
        Command::Repl => s.repl(&mut io::stdin().lock(), &mut out, &mut io::stderr()),
        Command::Decompose { .. } => unreachable!(),
    };
    out.flush()?;
    r
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !matches!(f, Failure::Findings) {
                eprintln!("error: {}", describe(&f));
            }
            ExitCode::from(exit_code(&f))
        }
    }
}
