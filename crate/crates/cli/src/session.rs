use std::io::{self, BufRead, IsTerminal, Write};

use sirsql::kernel::SqliteKernel;
use sirsql::normalizer::{normalize, parse_problem, render_trace, to_sirsql, NormalizeOptions};
use sirsql::parser::parse_script;
use sirsql::{Error, LayerOptions, SirLayer, StatementResult};

use crate::output::{write_rows, Format};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A schema statement failed, whatever the cause.
    Schema(Error),
    Io(io::Error),
    /// Ran to completion but found something to report, such as violations.
    Findings,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome = Result<(), Failure>;

pub struct Session {
    layer: SirLayer<SqliteKernel>,
    format: Format,
}

impl Session {
    pub fn open(location: &str, options: LayerOptions, format: Format) -> Result<Self, Failure> {
        let kernel = SqliteKernel::open(location).map_err(Error::from)?;
        Ok(Session { layer: SirLayer::open(kernel, options)?, format })
    }

    /// Runs every statement of a script, reporting each, stopping at the first failure.
    pub fn apply(&mut self, text: &str, out: &mut dyn Write) -> Outcome {
        let script = parse_script(text).map_err(Error::from)?;
        for (i, s) in script.iter().enumerate() {
            let before = self.object_names()?;
            let result = self.layer.execute(&s.statement).map_err(|e| schema_failure(e, s.statement.is_ddl()))?;
            let label = s.text.split_whitespace().collect::<Vec<_>>().join(" ");
            let label: String = if label.chars().count() > 60 { label.chars().take(57).chain("...".chars()).collect() } else { label };
            match result {
                StatementResult::Schema { statements, notes } => {
                    let created: Vec<String> = self.object_names()?.into_iter().filter(|n| !before.contains(n)).collect();
                    write!(out, "{}: {label}: {} kernel statement{}", i + 1, statements.len(), plural(statements.len()))?;
                    if !created.is_empty() {
                        write!(out, ", created {}", created.join(", "))?;
                    }
                    writeln!(out)?;
                    for n in notes {
                        writeln!(out, "   note: {n}")?;
                    }
                }
                StatementResult::Affected(n) => writeln!(out, "{}: {label}: {n} row{} affected", i + 1, plural(n))?,
                StatementResult::Rows(r) => {
                    writeln!(out, "{}: {label}", i + 1)?;
                    write_rows(out, &r, self.format)?;
                }
            }
        }
        let objects = self.object_names()?;
        if !script.is_empty() {
            writeln!(out, "{} statement{} applied; kernel objects: {}", script.len(), plural(script.len()), objects.join(", "))?;
        }
        Ok(())
    }

    fn object_names(&mut self) -> Result<Vec<String>, Failure> {
        Ok(self.layer.kernel_objects()?.into_iter().map(|o| o.name).collect())
    }

    /// Runs statements and prints what the last one returned.
    pub fn run(&mut self, sql: &str, out: &mut dyn Write) -> Outcome {
        let script = parse_script(sql).map_err(Error::from)?;
        let mut last = StatementResult::Affected(0);
        for s in &script {
            last = self.layer.execute(&s.statement).map_err(|e| schema_failure(e, s.statement.is_ddl()))?;
        }
        match last {
            StatementResult::Rows(r) => write_rows(out, &r, self.format)?,
            StatementResult::Affected(n) => writeln!(out, "{n} row{} affected", plural(n))?,
            StatementResult::Schema { statements, notes } => {
                for s in statements {
                    writeln!(out, "{s};")?;
                }
                for n in notes {
                    writeln!(out, "-- note: {n}")?;
                }
            }
        }
        Ok(())
    }

    pub fn explain(&self, relation: &str, out: &mut dyn Write) -> Outcome {
        for s in self.layer.explain(relation)? {
            writeln!(out, "{s};")?;
        }
        Ok(())
    }

    pub fn check(&mut self, relation: &str, out: &mut dyn Write) -> Outcome {
        let violations = self.layer.check(relation)?;
        if violations.is_empty() {
            writeln!(out, "ok")?;
            return Ok(());
        }
        for v in &violations {
            let key: Vec<String> = v.attrs.iter().zip(&v.keys).map(|(a, k)| format!("{a} = {}", k.to_sql())).collect();
            writeln!(out, "{}: {} matches {} rows", v.ie, key.join(", "), v.count)?;
        }
        Err(Failure::Findings)
    }

    pub fn schema(&self, out: &mut dyn Write) -> Outcome {
        for e in self.layer.catalog().entries() {
            writeln!(out, "{};", e.definition_text().map_err(Error::from)?)?;
        }
        Ok(())
    }

    /// Reads statements and dot-commands until end of input.
    pub fn repl(&mut self, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
        let interactive = io::stdin().is_terminal();
        let mut pending = String::new();
        let mut failed = false;
        loop {
            if interactive {
                write!(out, "{}", if pending.is_empty() { "sirsql> " } else { "   ...> " })?;
                out.flush()?;
            }
            let mut line = String::new();
            if input.read_line(&mut line)? == 0 {
                break;
            }
            let t = line.trim();
            if pending.is_empty() && t.starts_with('.') {
                let (cmd, arg) = t.split_once(char::is_whitespace).map(|(c, a)| (c, a.trim())).unwrap_or((t, ""));
                let r = match cmd {
                    ".quit" | ".exit" => break,
                    ".explain" => self.explain(arg, out),
                    ".check" => self.check(arg, out),
                    ".schema" => self.schema(out),
                    ".help" => writeln!(out, ".explain REL | .check REL | .schema | .quit").map_err(Failure::from),
                    other => Err(Failure::Usage(format!("unknown command {other}"))),
                };
                failed |= report(r, err)?;
                continue;
            }
            pending.push_str(&line);
            if t.ends_with(';') {
                let sql = std::mem::take(&mut pending);
                failed |= report(self.run(&sql, out), err)?;
            }
        }
        if !pending.trim().is_empty() {
            failed |= report(self.run(&pending, out), err)?;
        }
        if failed {
            Err(Failure::Findings)
        } else {
            Ok(())
        }
    }
}

/// Prints a command's error and says whether there was one.
fn report(r: Outcome, err: &mut dyn Write) -> Result<bool, Failure> {
    match r {
        Ok(()) => Ok(false),
        Err(Failure::Findings) => Ok(true),
        Err(Failure::Io(e)) => Err(Failure::Io(e)),
        Err(e) => {
            writeln!(err, "error: {}", describe(&e))?;
            Ok(true)
        }
    }
}

pub fn describe(f: &Failure) -> String {
    match f {
        Failure::Core(e) | Failure::Schema(e) => e.to_string(),
        Failure::Io(e) => e.to_string(),
        Failure::Findings => "violations found".into(),
        Failure::Usage(m) => m.clone(),
    }
}

fn schema_failure(e: Error, ddl: bool) -> Failure {
    if ddl {
        Failure::Schema(e)
    } else {
        Failure::Core(e)
    }
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

/// Normalizes a dependency file into Create Table statements, trace first as comments.
pub fn decompose(text: &str, heath_first: bool, out: &mut dyn Write) -> Outcome {
    let p = parse_problem(text)?;
    let result = normalize(&p.universe, &p.universal(), &p.fds, &p.mvds, NormalizeOptions { heath_first })?;
    if result.trace.is_empty() {
        writeln!(out, "-- {} is already in 4NF", p.relation)?;
    }
    for l in render_trace(&p.universe, &result.trace).lines() {
        writeln!(out, "-- {l}")?;
    }
    write!(out, "{}", to_sirsql(&p.universe, &result.drafts))?;
    Ok(())
}
