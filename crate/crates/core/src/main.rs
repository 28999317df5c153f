use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use pga::canonical::{canonicalize, seq_equal};
use pga::extraction::extract;
use pga::goto::{collapse_jump_chains, metrics, project_bounded, project_unbounded};
use pga::jumpfree::{compile, to_normal_form};
use pga::reproduce::{self, Config};
use pga::services::{apply_bank, RegisterBank, Reply, ServiceTable};
use pga::syntax::{parse, parse_unchecked, validate_dialect, Dialect, Term};
use pga::thread::{
    bisimilar, first_projection_difference, projection_depth_bound, simulate, ThreadSpec,
};

/// Instruction sequences: parsing, equality, behaviour extraction, services
/// and projections.
#[derive(Parser)]
#[command(name = "pga", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a program and print it back, or list dialect violations.
    Parse {
        file: PathBuf,
        /// pga, pgag or pgag:K
        #[arg(long, default_value = "pga")]
        dialect: Dialect,
    },
    /// Print the canonical form as `prefix || (period)*`.
    Normalize { file: PathBuf },
    /// Exit 0 iff both programs denote the same instruction sequence.
    Equal { first: PathBuf, second: PathBuf },
    /// Print the behaviour of a jump program as a thread spec.
    Extract { file: PathBuf },
    /// Extract, then let the thread use services.
    Use {
        file: PathBuf,
        /// Focus for the service given at the same position.
        #[arg(long)]
        focus: Vec<String>,
        /// br:true, br:false, br:blocked or @FILE with a service table.
        #[arg(long)]
        service: Vec<String>,
        /// Register manifest as written by compile-jumpfree, applied first.
        #[arg(long)]
        bank: Option<PathBuf>,
    },
    /// Compile a thread spec to a jump-free program over Boolean registers.
    CompileJumpfree {
        spec: PathBuf,
        /// Also write the register manifest to this file.
        #[arg(long)]
        bank_out: Option<PathBuf>,
    },
    /// Project a label/goto program to a jump program.
    Project {
        file: PathBuf,
        /// Use the bounded projection for labels in 1..=K.
        #[arg(long)]
        max_label: Option<usize>,
    },
    /// Replace jumps landing on jumps by single jumps.
    Collapse { file: PathBuf },
    /// Print instruction counts and maximal jump, label and goto indices.
    Metrics { file: PathBuf },
    /// Exit 0 iff both inputs (programs or thread specs) behave the same.
    Equiv {
        first: PathBuf,
        second: PathBuf,
        /// Read programs as label/goto programs and project them first.
        #[arg(long)]
        as_pgag: bool,
    },
    /// Run a program or thread spec against a sequence of replies.
    Simulate {
        file: PathBuf,
        /// Replies such as TTFT.
        #[arg(long, default_value = "")]
        replies: String,
    },
    /// Run the randomized reproduction suite.
    Reproduce {
        #[arg(long, env = "PGA_SEED", default_value_t = Config::default().seed)]
        seed: u64,
        /// Cases per criterion, at least each criterion's minimum.
        #[arg(long, env = "PGA_CASES")]
        cases: Option<usize>,
    },
}

/// A failed command: input problems exit 2, negative answers exit 1.
enum Failure {
    Input(anyhow::Error),
    Negative,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn read(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .context("reading stdin")?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_term(path: &Path, dialect: Dialect) -> Result<Term> {
    let text = read(path)?;
    parse(&text, dialect).with_context(|| format!("parsing {}", path.display()))
}

fn looks_like_spec(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with("//"))
        .is_some_and(|l| l.starts_with('X') && l.contains('='))
}

/// A thread spec file as is, or the behaviour of a program file.
fn read_behaviour(path: &Path, as_pgag: bool) -> Result<ThreadSpec> {
    let text = read(path)?;
    if looks_like_spec(&text) {
        return text
            .parse()
            .with_context(|| format!("parsing {}", path.display()));
    }
    let term = if as_pgag {
        project_unbounded(
            &parse(&text, Dialect::Pgag).with_context(|| format!("parsing {}", path.display()))?,
        )
    } else {
        parse(&text, Dialect::Pga).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(extract(&term)?)
}

fn service(spec: &str) -> Result<ServiceTable> {
    match spec.strip_prefix('@') {
        Some(file) => read(Path::new(file))?
            .parse()
            .with_context(|| format!("service table {file}")),
        None => Ok(ServiceTable::builtin(spec)?),
    }
}

/// `focus:initial` lines, initial one of T, F, B.
fn read_manifest(path: &Path) -> Result<RegisterBank> {
    let mut bank = RegisterBank::default();
    for (n, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        let (focus, initial) = line
            .rsplit_once(':')
            .ok_or_else(|| anyhow!("{}:{}: expected focus:T|F|B", path.display(), n + 1))?;
        let initial: Reply = initial
            .trim()
            .parse()
            .map_err(|e| anyhow!("{}:{}: {e}", path.display(), n + 1))?;
        bank.push(focus.trim(), pga::services::boolean_register(initial))?;
    }
    Ok(bank)
}

fn manifest(bank: &RegisterBank) -> String {
    bank.entries()
        .iter()
        .map(|(focus, svc)| format!("{focus}:{}\n", svc.initial_name()))
        .collect()
}

fn replies(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| match c {
            'T' | 't' | '1' => Ok(true),
            'F' | 'f' | '0' => Ok(false),
            other => bail!("reply `{other}` is not T or F"),
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Parse { file, dialect } => {
            let term = parse_unchecked(&read(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            let violations = validate_dialect(&term, dialect);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{v}");
                }
                return Err(Failure::Input(anyhow!(
                    "{} dialect violation(s)",
                    violations.len()
                )));
            }
            println!("{term}");
        }
        Command::Normalize { file } => {
            let term = parse_unchecked(&read(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            println!("{}", canonicalize(&term));
        }
        Command::Equal { first, second } => {
            let a = parse_unchecked(&read(&first)?)
                .with_context(|| format!("parsing {}", first.display()))?;
            let b = parse_unchecked(&read(&second)?)
                .with_context(|| format!("parsing {}", second.display()))?;
            if !seq_equal(&a, &b) {
                println!("different");
                return Err(Failure::Negative);
            }
            println!("equal");
        }
        Command::Extract { file } => {
            println!(
                "{}",
                extract(&read_term(&file, Dialect::Pga)?).map_err(anyhow::Error::from)?
            );
        }
        Command::Use {
            file,
            focus,
            service: services,
            bank,
        } => {
            if focus.len() != services.len() {
                return Err(Failure::Input(anyhow!(
                    "{} --focus but {} --service arguments",
                    focus.len(),
                    services.len()
                )));
            }
            let mut all = match &bank {
                Some(path) => read_manifest(path)?,
                None => RegisterBank::default(),
            };
            for (f, s) in focus.iter().zip(&services) {
                all.push(f.clone(), service(s)?)
                    .map_err(anyhow::Error::from)?;
            }
            let thread = read_behaviour(&file, false)?;
            println!("{}", apply_bank(&thread, &all));
        }
        Command::CompileJumpfree { spec, bank_out } => {
            let thread: ThreadSpec = read(&spec)?
                .parse()
                .with_context(|| format!("parsing {}", spec.display()))?;
            let nf = to_normal_form(&thread);
            pga::jumpfree::check_foci(&nf).map_err(anyhow::Error::from)?;
            let compiled = compile(&nf);
            println!("{}", compiled.program);
            let text = manifest(&compiled.bank);
            match bank_out {
                Some(path) => {
                    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
                }
                None => {
                    println!("// registers");
                    print!("{text}");
                }
            }
        }
        Command::Project { file, max_label } => {
            let projected = match max_label {
                Some(k) => project_bounded(&read_term(&file, Dialect::BoundedPgag(k))?, k),
                None => project_unbounded(&read_term(&file, Dialect::Pgag)?),
            };
            println!("{projected}");
        }
        Command::Collapse { file } => {
            println!("{}", collapse_jump_chains(&read_term(&file, Dialect::Pga)?));
        }
        Command::Metrics { file } => {
            let term = parse_unchecked(&read(&file)?)
                .with_context(|| format!("parsing {}", file.display()))?;
            let m = metrics(&term);
            println!("size {}", m.size);
            println!("prefix {}", m.prefix_len);
            println!("period {}", m.period_len);
            println!("max_jump {}", m.max_jump);
            println!("max_label {}", m.max_label);
            println!("max_goto {}", m.max_goto);
        }
        Command::Equiv {
            first,
            second,
            as_pgag,
        } => {
            let a = read_behaviour(&first, as_pgag)?;
            let b = read_behaviour(&second, as_pgag)?;
            if !bisimilar(&a, &b) {
                let depth = first_projection_difference(&a, &b, projection_depth_bound(&a, &b));
                match depth {
                    Some(n) => println!("not bisimilar: projections differ at depth {n}"),
                    None => println!("not bisimilar"),
                }
                return Err(Failure::Negative);
            }
            println!("bisimilar");
        }
        Command::Simulate {
            file,
            replies: given,
        } => {
            let thread = read_behaviour(&file, false)?;
            println!("{}", simulate(&thread, &replies(&given)?));
        }
        Command::Reproduce { seed, cases } => {
            let results = reproduce::run_all(&Config { seed, cases });
            for r in &results {
                println!("{r}");
            }
            let passed = results.iter().filter(|r| r.passed()).count();
            println!("{passed}/{} criteria passed", results.len());
            if passed != results.len() {
                return Err(Failure::Negative);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
