//! Line-oriented command language shared by the interactive prompt and
//! script mode. Reports are `key<TAB>value` lines.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::engine::{Engine, EngineError};
use crate::rules::AnalyticFn;
use crate::syntax::{parse_type_sexp, render_term};

pub const HELP: &str = "\
commands:
  load <file>                           insert every declaration in a concrete-syntax file
  insert <name> := <term>;              insert declarations given inline
  def-class <name> <type-sexp>          declare a class, e.g. def-class trans (recordty ((amount (numty))))
  find-members                          type new terms and classify them
  members <class>                       list a class's members
  run-analytic <name>                   run a registered analytic
  def-nearest-analytic <name> <in> <out> <k> <class>
                                        register an analytic returning the members of <class>
                                        within <k> containment steps of each input member
  same_as <a> <b>                       declare two concepts synonymous
  is_a <child> <parent>                 add an is-a edge
  nearest <k> <term> <class>            members of <class> within <k> steps of <term>
  contains <term> | contained-by <term> containment neighbours
  stats                                 collection sizes
  help | quit
";

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Load(String),
    Insert(String),
    DefClass(String, String),
    FindMembers,
    Members(String),
    RunAnalytic(String),
    DefNearestAnalytic {
        name: String,
        input: String,
        output: String,
        k: usize,
        class: String,
    },
    SameAs(String, String),
    IsA(String, String),
    Nearest(usize, String, String),
    Contains(String),
    ContainedBy(String),
    Stats,
    Help,
    Quit,
    Noop,
    /// Anything unparseable; carries the reason.
    Unknown(String),
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
        s[1..s.len() - 1].to_string()
    } else {
        s.to_string()
    }
}

/// Splits on whitespace, keeping double-quoted words together.
fn words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for c in s.chars() {
        match c {
            '"' => {
                quoted = !quoted;
                cur.push(c);
            }
            c if c.is_whitespace() && !quoted => {
                if !cur.is_empty() {
                    out.push(unquote(&std::mem::take(&mut cur)));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(unquote(&cur));
    }
    out
}

impl Command {
    /// Never fails: anything unrecognised becomes [`Command::Unknown`].
    pub fn parse(line: &str) -> Command {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("//") {
            return Command::Noop;
        }
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        let args = words(rest);
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(Command::Unknown(format!("{head} takes {n} argument(s), got {}", args.len())))
            }
        };
        let number = |s: &str| s.parse::<usize>().map_err(|_| Command::Unknown(format!("not a count: {s}")));
        let parsed = (|| -> Result<Command, Command> {
            Ok(match head {
                "load" => {
                    if rest.is_empty() {
                        return Err(Command::Unknown("load needs a file".into()));
                    }
                    Command::Load(unquote(rest))
                }
                "insert" => Command::Insert(rest.to_string()),
                "def-class" | "def_class" => {
                    let Some((name, ty)) = rest.split_once(char::is_whitespace) else {
                        return Err(Command::Unknown("def-class needs a name and a type".into()));
                    };
                    Command::DefClass(unquote(name), ty.trim().to_string())
                }
                "find-members" | "find_members" => {
                    arity(0)?;
                    Command::FindMembers
                }
                "members" => {
                    arity(1)?;
                    Command::Members(args[0].clone())
                }
                "run-analytic" | "run_analytic" => {
                    arity(1)?;
                    Command::RunAnalytic(args[0].clone())
                }
                "def-nearest-analytic" | "def_nearest_analytic" => {
                    arity(5)?;
                    Command::DefNearestAnalytic {
                        name: args[0].clone(),
                        input: args[1].clone(),
                        output: args[2].clone(),
                        k: number(&args[3])?,
                        class: args[4].clone(),
                    }
                }
                "same_as" | "same-as" => {
                    arity(2)?;
                    Command::SameAs(args[0].clone(), args[1].clone())
                }
                "is_a" | "is-a" => {
                    arity(2)?;
                    Command::IsA(args[0].clone(), args[1].clone())
                }
                "nearest" => {
                    arity(3)?;
                    Command::Nearest(number(&args[0])?, args[1].clone(), args[2].clone())
                }
                "contains" => {
                    arity(1)?;
                    Command::Contains(args[0].clone())
                }
                "contained-by" | "contained_by" => {
                    arity(1)?;
                    Command::ContainedBy(args[0].clone())
                }
                "stats" => Command::Stats,
                "help" | "?" => Command::Help,
                "quit" | "exit" => Command::Quit,
                other => return Err(Command::Unknown(format!("unknown command: {other}"))),
            })
        })();
        parsed.unwrap_or_else(|e| e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Continue,
    Quit,
}

fn names_report(out: &mut String, key: &str, names: impl IntoIterator<Item = String>) {
    let mut n = 0;
    for name in names {
        let _ = writeln!(out, "{key}\t{name}");
        n += 1;
    }
    let _ = writeln!(out, "count\t{n}");
}

/// Executes one command, appending its report to `out`.
pub fn execute(engine: &mut Engine, cmd: &Command, timings: bool, out: &mut String) -> Result<Outcome, EngineError> {
    match cmd {
        Command::Noop => {}
        Command::Help => out.push_str(HELP),
        Command::Quit => return Ok(Outcome::Quit),
        Command::Unknown(why) => {
            let _ = writeln!(out, "error\t{why}");
            out.push_str(HELP);
        }
        Command::Load(path) => {
            let names = engine.load_file(path)?;
            let _ = writeln!(out, "loaded\t{}", names.len());
        }
        Command::Insert(text) => {
            for name in engine.load_str(text)? {
                let _ = writeln!(out, "inserted\t{name}");
            }
        }
        Command::DefClass(name, ty) => {
            let ty = parse_type_sexp(ty)?;
            engine.mk_kb_class(name, ty)?;
            let _ = writeln!(out, "class\t{name}");
        }
        Command::FindMembers => out.push_str(&engine.find_members()?.render(timings)),
        Command::Members(class) => {
            let members = engine.members(class)?;
            for m in members {
                let _ = writeln!(out, "member\t{}\t{}", m.name, render_term(&m.term));
            }
            let _ = writeln!(out, "count\t{}", members.len());
        }
        Command::RunAnalytic(name) => out.push_str(&engine.run_analytic(name)?.render(timings)),
        Command::DefNearestAnalytic {
            name,
            input,
            output,
            k,
            class,
        } => {
            let (k, class) = (*k, class.clone());
            let func: AnalyticFn = Arc::new(move |ctx, m| ctx.nearest_term(k, &m.name, &class));
            engine.mk_analytic(name, input, output, true, func)?;
            let _ = writeln!(out, "analytic\t{name}");
        }
        Command::SameAs(a, b) => {
            engine.same_as(a, b)?;
            let _ = writeln!(out, "same_as\t{a}\t{b}");
        }
        Command::IsA(a, b) => {
            engine.is_a(a, b)?;
            let _ = writeln!(out, "is_a\t{a}\t{b}");
        }
        Command::Nearest(k, start, class) => names_report(out, "nearest", engine.nearest(*k, start, class)?),
        Command::Contains(name) => names_report(out, "contains", engine.store().contains(name)?),
        Command::ContainedBy(name) => names_report(out, "contained_by", engine.store().contained_by(name)?),
        Command::Stats => {
            let s = engine.store();
            let _ = writeln!(out, "terms\t{}", s.term_names().len());
            let _ = writeln!(out, "untyped\t{}", s.untyped().len());
            let _ = writeln!(out, "typed\t{}", s.typed().len());
            let _ = writeln!(out, "classes\t{}", s.class_names().len());
            for c in s.class_names() {
                let _ = writeln!(out, "class.{c}\t{}", s.class(c).map_or(0, |k| k.len()));
            }
        }
    }
    Ok(Outcome::Continue)
}

/// Net bracket depth outside string literals; a command continues onto the
/// next line while this is positive.
fn depth(line: &str) -> i64 {
    let mut d = 0;
    let mut quoted = false;
    let mut escaped = false;
    for c in line.chars() {
        if quoted {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => quoted = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => quoted = true,
            '(' | '{' | '[' => d += 1,
            ')' | '}' | ']' => d -= 1,
            _ => {}
        }
    }
    d
}

/// Exit codes for script mode.
pub const EXIT_OK: i32 = 0;
pub const EXIT_COMMAND: i32 = 1;
pub const EXIT_CORRUPT: i32 = 2;

/// Runs commands from `input`. With `stop_on_error` (script mode) the first
/// failing command ends the run with a nonzero code; otherwise errors are
/// reported and the session continues. `prompt`, when given, is printed
/// before each command.
pub fn run<R: BufRead, W: Write>(
    engine: &mut Engine,
    input: R,
    output: &mut W,
    timings: bool,
    stop_on_error: bool,
    prompt: Option<&str>,
) -> std::io::Result<i32> {
    let mut pending = String::new();
    let mut open = 0;
    let mut status = EXIT_OK;
    if let Some(p) = prompt {
        write!(output, "{p}")?;
        output.flush()?;
    }
    for line in input.lines() {
        let line = line?;
        if !pending.is_empty() {
            pending.push('\n');
        }
        pending.push_str(&line);
        open += depth(&line);
        if open > 0 {
            continue;
        }
        let cmd = Command::parse(&std::mem::take(&mut pending));
        open = 0;
        let mut out = String::new();
        let result = execute(engine, &cmd, timings, &mut out);
        output.write_all(out.as_bytes())?;
        match result {
            Ok(Outcome::Quit) => return Ok(status),
            Ok(Outcome::Continue) if matches!(cmd, Command::Unknown(_)) => {
                if stop_on_error {
                    return Ok(EXIT_COMMAND);
                }
                status = EXIT_COMMAND;
            }
            Ok(Outcome::Continue) => {}
            Err(e) => {
                writeln!(output, "error\t{e}")?;
                let code = if e.is_corruption() { EXIT_CORRUPT } else { EXIT_COMMAND };
                if stop_on_error {
                    return Ok(code);
                }
                status = status.max(code);
            }
        }
        if let Some(p) = prompt {
            write!(output, "{p}")?;
        }
        output.flush()?;
    }
    if !pending.trim().is_empty() {
        writeln!(output, "error\tunterminated command at end of input")?;
        return Ok(EXIT_COMMAND);
    }
    Ok(status)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn script(engine: &mut Engine, src: &str) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(engine, src.as_bytes(), &mut out, false, true, None).unwrap();
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn parse_is_total() {
        assert_eq!(Command::parse(""), Command::Noop);
        assert_eq!(Command::parse("same-as dob \"birth_date\""), Command::SameAs("dob".into(), "birth_date".into()));
        assert_eq!(Command::parse("nearest 4 joe person"), Command::Nearest(4, "joe".into(), "person".into()));
        assert!(matches!(Command::parse("nearest four joe person"), Command::Unknown(_)));
        assert!(matches!(Command::parse("frobnicate"), Command::Unknown(_)));
        assert!(matches!(Command::parse("members"), Command::Unknown(_)));
    }

    #[test]
    fn fresh_store_stats_are_zero() {
        let (code, out) = script(&mut Engine::in_memory(), "stats\n");
        assert_eq!(code, 0);
        assert_eq!(out, "terms\t0\nuntyped\t0\ntyped\t0\nclasses\t0\n");
    }

    #[test]
    fn unknown_command_fails_script() {
        let (code, out) = script(&mut Engine::in_memory(), "stats\nbogus\nstats\n");
        assert_eq!(code, EXIT_COMMAND);
        assert!(out.contains("error\tunknown command: bogus"));
        assert_eq!(out.matches("terms\t").count(), 1);
    }

    #[test]
    fn multi_line_commands() {
        let src = "def-class person (recordty (\n  (name (strty))))\ninsert joe := {\"name\"=\"Joe\"};\nfind-members\nmembers person\n";
        let (code, out) = script(&mut Engine::in_memory(), src);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("member\tjoe\t(record ((name (str \"Joe\"))))"), "{out}");
    }

    #[test]
    fn command_errors_keep_interactive_session_alive() {
        let mut out = Vec::new();
        let code = run(&mut Engine::in_memory(), "members nope\nstats\n".as_bytes(), &mut out, false, false, Some("> ")).unwrap();
        let out = String::from_utf8(out).unwrap();
        assert_eq!(code, EXIT_COMMAND);
        assert!(out.contains("error\t"));
        assert!(out.contains("classes\t0"));
    }
}
