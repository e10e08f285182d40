use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use xqmft::bench::{run_bench, BenchSpec};
use xqmft::compile::compile;
use xqmft::compose::{compose, Mode};
use xqmft::corpus;
use xqmft::events::{build_forest, emit_forest, EventSink, EventSource, XmlEvent, XmlReader, XmlWriter};
use xqmft::gen::{generate_doc, GenSpec, Generator, Profile};
use xqmft::mft::{evaluate, parse_mft, print_mft, Mft};
use xqmft::optimize::{optimize, optimize_with_report};
use xqmft::query::{interpret, parse_query, Query};
use xqmft::stream::stream_run;

/// Compile MinXQuery to macro forest transducers and stream XML through them.
#[derive(Parser)]
#[command(name = "xqmft", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a query to a rule file.
    Compile {
        /// Query file, or `-` for stdin.
        query: PathBuf,
        /// Optimize the result.
        #[arg(long)]
        opt: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Optimize a rule file.
    Optimize {
        /// Rule file, or `-` for stdin.
        #[arg(default_value = "-")]
        rules: PathBuf,
        /// Print per-pass statistics to stderr.
        #[arg(long)]
        report: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Stream a document through a transducer.
    Run {
        #[command(flatten)]
        prog: Program,
        #[command(flatten)]
        input: Input,
        /// Print stream statistics to stderr.
        #[arg(long)]
        stats: bool,
        /// Run the compiled query without optimizing it.
        #[arg(long)]
        no_opt: bool,
    },
    /// Evaluate in memory (the reference semantics).
    Eval {
        #[command(flatten)]
        prog: Program,
        #[command(flatten)]
        input: Input,
        /// Interpret the query directly instead of compiling it.
        #[arg(long, conflicts_with = "rules")]
        interpret: bool,
        #[arg(long)]
        no_opt: bool,
    },
    /// Compose two rule files in pipeline order.
    Compose {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        /// Print size statistics to stderr.
        #[arg(long)]
        report: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a generated document.
    Gen {
        #[arg(long, default_value = "xmark-lite", value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
        size: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Stream corpus queries over generated documents.
    Bench {
        /// Comma-separated query ids; all nine by default.
        #[arg(long, value_delimiter = ',')]
        queries: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 100_000])]
        sizes: Vec<usize>,
        #[arg(long, default_value = "xmark-lite", value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the optimizer.
        #[arg(long)]
        no_opt: bool,
    },
}

#[derive(Args)]
#[group(multiple = false)]
struct Program {
    /// Rule file (`-` for stdin); the default when no program is given.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Query file, compiled and optimized.
    #[arg(long)]
    query: Option<PathBuf>,
    /// Built-in query by id (q01, q02, q04, q13, q16, q17, double, fourstar,
    /// deepdup, person, nested).
    #[arg(long)]
    corpus: Option<String>,
}

#[derive(Args)]
struct Input {
    /// XML input file, or `-` for stdin.
    #[arg(required_unless_present = "gen")]
    input: Option<PathBuf>,
    /// Generate the input instead of reading it.
    #[arg(long, value_parser = parse_profile, conflicts_with = "input")]
    gen: Option<Profile>,
    #[arg(long, default_value_t = 10_000, requires = "gen")]
    size: usize,
    #[arg(long, default_value_t = 0, requires = "gen")]
    seed: u64,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: xqmft::Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: xqmft::Error| e.to_string())
}

fn is_stdin(p: &Path) -> bool {
    p.as_os_str() == "-"
}

fn read_text(p: &Path) -> Result<String> {
    let mut s = String::new();
    if is_stdin(p) {
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
    } else {
        s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    }
    Ok(s)
}

fn writer(output: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_mft(p: &Path) -> Result<Mft> {
    parse_mft(&read_text(p)?).with_context(|| format!("parsing rules from {}", p.display()))
}

fn read_query(p: &Path) -> Result<Query> {
    parse_query(&read_text(p)?).with_context(|| format!("parsing query from {}", p.display()))
}

enum Loaded {
    Rules(Mft),
    Query(Query),
}

impl Program {
    fn load(&self) -> Result<Loaded> {
        if let Some(id) = &self.corpus {
            let q = corpus::query(id).with_context(|| format!("no built-in query `{id}`"))?;
            return Ok(Loaded::Query(q));
        }
        if let Some(p) = &self.query {
            return Ok(Loaded::Query(read_query(p)?));
        }
        let p = self.rules.clone().unwrap_or_else(|| PathBuf::from("-"));
        Ok(Loaded::Rules(read_mft(&p)?))
    }

    fn reads_stdin(&self) -> bool {
        self.corpus.is_none() && self.query.is_none() && self.rules.as_deref().map_or(true, is_stdin)
    }

    fn transducer(&self, no_opt: bool) -> Result<Mft> {
        match self.load()? {
            Loaded::Rules(m) => {
                if no_opt {
                    bail!("--no-opt applies to queries only; rule files run as given");
                }
                Ok(m)
            }
            Loaded::Query(q) => {
                let m = compile(&q)?;
                Ok(if no_opt { m } else { optimize(&m) })
            }
        }
    }
}

impl Input {
    fn source(&self, prog: &Program) -> Result<Box<dyn EventSource>> {
        if let Some(p) = self.gen {
            return Ok(Box::new(Generator::new(GenSpec::new(p, self.size, self.seed))));
        }
        let Some(path) = &self.input else { bail!("no input: give a file, `-`, or --gen") };
        let reader: Box<dyn BufRead> = if is_stdin(path) {
            if prog.reads_stdin() {
                bail!("rules and input cannot both come from stdin");
            }
            Box::new(BufReader::new(io::stdin()))
        } else {
            Box::new(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
        };
        Ok(Box::new(XmlReader::new(reader)))
    }
}

fn write_xml(out: &mut dyn Write, f: &xqmft::Forest) -> Result<()> {
    let mut w = XmlWriter::new(&mut *out);
    emit_forest(f, &mut w)?;
    w.event(&XmlEvent::Eof)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Compile { query, opt, output } => {
            let m = compile(&read_query(&query)?)?;
            let m = if opt { optimize(&m) } else { m };
            writer(&output)?.write_all(print_mft(&m).as_bytes())?;
        }
        Cmd::Optimize { rules, report, output } => {
            let (m, rep) = optimize_with_report(&read_mft(&rules)?);
            if report {
                eprintln!("{rep}");
            }
            writer(&output)?.write_all(print_mft(&m).as_bytes())?;
        }
        Cmd::Run { prog, input, stats, no_opt } => {
            let mut src = input.source(&prog)?;
            let m = prog.transducer(no_opt)?;
            let mut out = BufWriter::new(io::stdout().lock());
            let st = {
                let mut w = XmlWriter::new(&mut out);
                stream_run(&m, src.as_mut(), &mut w)?
            };
            writeln!(out)?;
            out.flush()?;
            if stats {
                eprintln!("{st}");
            }
        }
        Cmd::Eval { prog, input, interpret: direct, no_opt } => {
            let doc = build_forest(input.source(&prog)?.as_mut())?;
            let result = if direct {
                match prog.load()? {
                    Loaded::Query(q) => interpret(&q, &doc)?,
                    Loaded::Rules(_) => bail!("--interpret needs --query or --corpus"),
                }
            } else {
                evaluate(&prog.transducer(no_opt)?, &doc)?
            };
            let mut out = BufWriter::new(io::stdout().lock());
            write_xml(&mut out, &result)?;
            out.flush()?;
        }
        Cmd::Compose { first, second, mode, report, output } => {
            if is_stdin(&first) && is_stdin(&second) {
                bail!("only one operand can come from stdin");
            }
            let (m, rep) = compose(&read_mft(&first)?, &read_mft(&second)?, mode)?;
            if report {
                eprintln!("{rep}");
            }
            writer(&output)?.write_all(print_mft(&m).as_bytes())?;
        }
        Cmd::Gen { profile, size, seed, output } => {
            let mut out = writer(&output)?;
            {
                let mut w = XmlWriter::new(&mut out);
                generate_doc(GenSpec::new(profile, size as usize, seed), &mut w)?;
                w.event(&XmlEvent::Eof)?;
            }
            writeln!(out)?;
            out.flush()?;
        }
        Cmd::Bench { queries, sizes, profile, reps, seed, no_opt } => {
            let ids: Vec<String> = if queries.is_empty() {
                corpus::QUERIES.iter().map(|(id, _)| id.to_string()).collect()
            } else {
                queries
            };
            let mut out = io::stdout().lock();
            for id in &ids {
                for &size in &sizes {
                    let spec = BenchSpec { reps, seed, optimize: !no_opt, ..BenchSpec::new(id, profile, size) };
                    for r in run_bench(&[spec])? {
                        writeln!(out, "{r}")?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
