use clap::Parser;
use jjline_cli::cache::Cache;
use jjline_cli::config::{Format, Parsed};
use jjline_cli::record::Payload;
use jjline_cli::{emit, parse_config, run, CliError, Command, Context};
use std::path::PathBuf;

/// Exact diagonalization of a Josephson junction terminating a finite transmission line.
#[derive(Parser, Debug)]
#[command(name = "jjline", version)]
struct Args {
    command: Command,
    /// TOML run configuration. Optional for `verify`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `output.audit` with true.
    #[arg(long)]
    audit: bool,
    /// Overrides `output.cache` with false.
    #[arg(long)]
    no_cache: bool,
    /// Warn about unknown config keys instead of rejecting them.
    #[arg(long)]
    lenient: bool,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(args: &Args) -> Result<Parsed, CliError> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        None if args.command == Command::Verify => String::new(),
        None => return Err(CliError::Usage(format!("`{}` needs --config <path>", args.command.name()))),
    };
    let mut parsed = parse_config(&text, !args.lenient)?;
    let out = &mut parsed.config.output;
    if let Some(d) = &args.out {
        out.dir = d.display().to_string();
    }
    if let Some(f) = args.format {
        out.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    out.audit |= args.audit;
    out.cache &= !args.no_cache;
    parsed.config.validate()?;
    Ok(parsed)
}

fn main_inner(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let Parsed { config, warnings } = load(&args)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let dir = PathBuf::from(&config.output.dir);
    let cache = if config.output.cache { Cache::for_output(&dir) } else { Cache::disabled() };
    let ctx = Context { cache, audit: config.output.audit };
    let products = run(args.command, &config, &warnings, &ctx)?;
    let mut verify_failures = None;
    for p in &products {
        for path in emit::emit_results(&p.record, &p.stem, config.output.format, &dir)? {
            println!("{}", path.display());
        }
        if let Payload::Verify(outcomes) = &p.record.payload {
            for o in outcomes {
                eprintln!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed > 0 {
                verify_failures = Some(CliError::VerifyFailed { failed, total: outcomes.len() });
            }
        }
    }
    verify_failures.map_or(Ok(()), Err)
}

fn main() {
    let args = Args::parse();
    if let Err(e) = main_inner(args) {
        eprintln!("{}", serde_json::to_string(&e.record()).expect("error records serialize"));
        std::process::exit(e.exit_code());
    }
}
