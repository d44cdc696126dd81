mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dilemma::dataset::{self, ExportOptions, FieldMapping};
use dilemma::games::PggSpec;
use dilemma::report::{self, Format, ReportInputs};
use dilemma::runner::{self, Aggregate};
use dilemma::scenarios::{Catalog, Corpus, SampleClass};
use dilemma::stats::{self, Denominator, GroupBy, StarPolicy, Table1Options, Tail, ZTestOptions};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation; exit status 2.
    Usage(String),
    /// The requested operation failed; exit status 1.
    Domain(String),
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

#[derive(Parser)]
#[command(name = "dilemma", version, about = "Run and analyze social dilemma experiments on language model agents")]
struct Cli {
    /// Prompt corpus directory (defaults to the built-in corpus).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect the scenario catalog.
    #[command(subcommand)]
    Scenarios(ScenariosCmd),
    /// Query an agent on a set of scenarios.
    Run(RunArgs),
    /// Build or check alpaca fine-tuning data.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Statistics over trial logs.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Write plot data and tables for a set of logs.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleArg {
    In,
    OosGame,
    OosContext,
    OosBoth,
}

impl From<SampleArg> for SampleClass {
    fn from(s: SampleArg) -> Self {
        match s {
            SampleArg::In => SampleClass::InSample,
            SampleArg::OosGame => SampleClass::OoSGame,
            SampleArg::OosContext => SampleClass::OoSContext,
            SampleArg::OosBoth => SampleClass::OoSBoth,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Md,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
            FormatArg::Md => Format::Md,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Game,
    Context,
}

impl From<GroupArg> for GroupBy {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Game => GroupBy::Game,
            GroupArg::Context => GroupBy::Context,
        }
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum DenominatorArg {
    /// Parsed trials only.
    #[default]
    Parsed,
    /// All trials, invalid ones counted as non-cooperation.
    Initialized,
}

impl From<DenominatorArg> for Denominator {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::Parsed => Denominator::Parsed,
            DenominatorArg::Initialized => Denominator::Initialized,
        }
    }
}

#[derive(Clone, Copy, Default, ValueEnum)]
enum MappingArg {
    #[default]
    Split,
    Concat,
}

impl From<MappingArg> for FieldMapping {
    fn from(m: MappingArg) -> Self {
        match m {
            MappingArg::Split => FieldMapping::Split,
            MappingArg::Concat => FieldMapping::Concat,
        }
    }
}

#[derive(Subcommand)]
enum ScenariosCmd {
    /// Scenario keys, one per line unless --format is given.
    List {
        /// Sample classes to include; all of them when omitted.
        #[arg(long, value_enum)]
        sample: Vec<SampleArg>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Print the rendered system and user prompt of one scenario.
    Show { key: String },
    /// Write the built-in corpus to a directory for editing.
    ExportCorpus { dir: PathBuf },
}

#[derive(Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Resume the run described by this manifest.
    #[arg(long, conflicts_with_all = ["agent", "endpoint", "model", "scenarios", "sample", "out"])]
    pub resume: Option<PathBuf>,
    /// Baseline agent: fixed:C, rational:0.5, mixed-ne, table:0.7, table:key=p,...,*=p
    #[arg(long)]
    pub agent: Option<String>,
    /// Chat-completions endpoint URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Sampling temperature [default: 0.8].
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Ask for a motivation before the answer.
    #[arg(long)]
    pub motivation: bool,
    /// Accept lowercase c/d answers.
    #[arg(long)]
    pub case_insensitive: bool,
    /// Environment variable holding the bearer token.
    #[arg(long)]
    pub token_env: Option<String>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Comma-separated scenario keys.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Option<Vec<String>>,
    #[arg(long, value_enum, conflicts_with = "scenarios")]
    sample: Vec<SampleArg>,
    /// Trials per scenario [default: 300].
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    /// Extra attempts after an unparseable reply [default: 3].
    #[arg(long)]
    pub retry_limit: Option<u32>,
    /// Trial log path; the manifest goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pgg_players: Option<usize>,
    #[arg(long)]
    pub pgg_endowment: Option<f64>,
    #[arg(long)]
    pub pgg_multiplier: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

impl RunArgs {
    fn sample_slugs(&self) -> Vec<String> {
        self.sample.iter().map(|s| SampleClass::from(*s).slug().to_string()).collect()
    }
}

#[derive(Subcommand)]
enum DatasetCmd {
    /// Convert a trial log into alpaca records.
    Export {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        include_invalid: bool,
        #[arg(long, value_enum, default_value_t)]
        mapping: MappingArg,
        /// Write one record per line instead of a JSON array.
        #[arg(long)]
        jsonl: bool,
    },
    /// Check a dataset file; exits 1 if any record is defective.
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        mapping: MappingArg,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

#[derive(Args)]
struct TestArgs {
    /// Report two-sided p-values.
    #[arg(long)]
    two_sided: bool,
    /// Star p-values equal to a threshold (p <= 0.05 gets *).
    #[arg(long)]
    inclusive_stars: bool,
    #[arg(long, value_enum, default_value_t)]
    denominator: DenominatorArg,
}

impl TestArgs {
    fn options(&self) -> Table1Options {
        Table1Options {
            ztest: ZTestOptions {
                tail: if self.two_sided { Tail::TwoSided } else { Tail::OneSided },
                star_policy: StarPolicy {
                    inclusive: self.inclusive_stars,
                },
            },
            denominator: self.denominator.into(),
        }
    }
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Per-scenario cooperation counts.
    Aggregate {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Normal vs scaled-payoff z-tests with AVERAGE and MEDIAN rows.
    Ztest {
        #[arg(long)]
        normal: PathBuf,
        #[arg(long)]
        oos: PathBuf,
        #[command(flatten)]
        test: TestArgs,
        /// Append differences from the published table (Markdown only).
        #[arg(long)]
        annotate: bool,
        #[arg(long, value_enum, default_value = "md")]
        format: FormatArg,
    },
    /// Improvement of a fine-tuned student toward the teacher.
    Improvement {
        #[arg(long)]
        c70: PathBuf,
        #[arg(long)]
        c7: PathBuf,
        #[arg(long)]
        c7ft: PathBuf,
        /// Pool counts by game or context instead of per scenario.
        #[arg(long, value_enum)]
        group_by: Option<GroupArg>,
        /// Show values as percentages.
        #[arg(long)]
        percent: bool,
        #[arg(long, value_enum, default_value_t)]
        denominator: DenominatorArg,
        #[arg(long, value_enum, default_value = "md")]
        format: FormatArg,
    },
    /// Mean contribution and standard error for public good scenarios.
    Pgg {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value = "md")]
        format: FormatArg,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Log for the cooperation-rate bars.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, requires = "oos")]
    normal: Option<PathBuf>,
    #[arg(long, requires = "normal")]
    oos: Option<PathBuf>,
    #[arg(long, requires_all = ["c7", "c7ft"])]
    c70: Option<PathBuf>,
    #[arg(long, requires_all = ["c70", "c7ft"])]
    c7: Option<PathBuf>,
    #[arg(long, requires_all = ["c70", "c7"])]
    c7ft: Option<PathBuf>,
    #[command(flatten)]
    test: TestArgs,
    #[arg(long)]
    annotate: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn catalog(corpus: Option<&Path>, pgg: PggSpec<f64>) -> Result<Catalog, CliError> {
    let corpus = match corpus {
        Some(dir) => Corpus::load(dir),
        None => Corpus::builtin(),
    }
    .map_err(domain)?;
    Catalog::new(corpus, pgg).map_err(domain)
}

fn load(path: &Path) -> Result<Aggregate, CliError> {
    runner::aggregate(path).map_err(domain)
}

fn emit(text: &str) {
    print!("{text}");
}

fn scenarios(cmd: ScenariosCmd, corpus: Option<&Path>) -> Result<(), CliError> {
    let catalog = catalog(corpus, PggSpec::default())?;
    match cmd {
        ScenariosCmd::List { sample, format } => {
            let mut classes: Vec<SampleClass> = sample.into_iter().map(Into::into).collect();
            if classes.is_empty() {
                classes = SampleClass::ALL.to_vec();
            }
            let list = catalog.enumerate(&classes);
            match format.map(Format::from) {
                None => list.iter().for_each(|s| println!("{}", s.scenario_key)),
                Some(Format::Json) => emit(&report::to_json(&list)),
                Some(f) => {
                    let sep = if matches!(f, Format::Csv) { "," } else { " | " };
                    if matches!(f, Format::Md) {
                        println!("| key | context | game | sample |\n|---|---|---|---|");
                    } else {
                        println!("key,context,game,sample");
                    }
                    for s in list {
                        let cells = [
                            s.scenario_key.as_str(),
                            &s.context_id,
                            &s.game_id,
                            s.sample_class.slug(),
                        ];
                        if matches!(f, Format::Md) {
                            println!("| {} |", cells.join(sep));
                        } else {
                            println!("{}", cells.join(sep));
                        }
                    }
                }
            }
        }
        ScenariosCmd::Show { key } => {
            let bundle = catalog.render(&catalog.scenario(&key).map_err(domain)?).map_err(domain)?;
            println!("[system]\n{}\n\n[user]\n{}", bundle.system, bundle.user);
        }
        ScenariosCmd::ExportCorpus { dir } => {
            Corpus::write_builtin(&dir).map_err(domain)?;
            println!("wrote corpus to {}", dir.display());
        }
    }
    Ok(())
}

fn run(args: RunArgs, corpus: Option<&Path>) -> Result<(), CliError> {
    let manifest = if let Some(path) = &args.resume {
        runner::resume(path).map_err(domain)?
    } else {
        let config = config::merge(&args, corpus)?;
        runner::run(&config).map_err(domain)?
    };
    if let Some(FormatArg::Json) = args.format {
        emit(&report::to_json(&manifest));
        return Ok(());
    }
    println!(
        "{} trials over {} scenarios written to {}",
        manifest.total_trials(),
        manifest.counts.len(),
        manifest.config.output_path.display()
    );
    Ok(())
}

fn dataset(cmd: DatasetCmd, corpus: Option<&Path>) -> Result<(), CliError> {
    match cmd {
        DatasetCmd::Export {
            log,
            out,
            include_invalid,
            mapping,
            jsonl,
        } => {
            let pgg = runner::RunManifest::read(runner::manifest_path_for(&log))
                .map(|m| m.config.pgg)
                .unwrap_or_default();
            let catalog = catalog(corpus, pgg)?;
            let options = ExportOptions {
                include_invalid,
                mapping: mapping.into(),
                jsonl,
            };
            let summary = dataset::export_alpaca(&catalog, &log, &out, options).map_err(domain)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} records ({} prompts) written to {}; {} invalid trials skipped",
                summary.n_records,
                summary.n_prompts,
                out.display(),
                summary.n_skipped_invalid
            );
            Ok(())
        }
        DatasetCmd::Validate { file, mapping, format } => {
            let r = dataset::validate_alpaca(&file, mapping.into()).map_err(domain)?;
            if let Some(FormatArg::Json) = format {
                emit(&report::to_json(&r));
            } else {
                println!("{} records, {} defective", r.n_records, r.n_bad);
                for d in &r.reasons {
                    println!("record {}: {}", d.index, d.reasons.join("; "));
                }
            }
            if r.is_clean() {
                Ok(())
            } else {
                Err(CliError::Domain(format!("{} defective records", r.n_bad)))
            }
        }
    }
}

fn analyze(cmd: AnalyzeCmd) -> Result<(), CliError> {
    match cmd {
        AnalyzeCmd::Aggregate { log, format } => {
            let agg = load(&log)?;
            match format {
                Some(FormatArg::Json) | None => emit(&report::to_json(&agg)),
                Some(_) => {
                    println!("scenario,n_ok,n_coop,n_defect,n_invalid");
                    for (k, a) in &agg {
                        println!("{k},{},{},{},{}", a.n_ok, a.n_coop, a.n_defect, a.n_invalid);
                    }
                }
            }
        }
        AnalyzeCmd::Ztest {
            normal,
            oos,
            test,
            annotate,
            format,
        } => {
            let table = stats::table1_report(&load(&normal)?, &load(&oos)?, test.options()).map_err(domain)?;
            let format = Format::from(format);
            emit(&report::render_table1(&table, format));
            if annotate && format == Format::Md {
                println!();
                emit(&report::divergences_markdown(&report::compare_to_reference(
                    &table,
                    0.005 + 1e-9,
                )));
            }
        }
        AnalyzeCmd::Improvement {
            c70,
            c7,
            c7ft,
            group_by,
            percent,
            denominator,
            format,
        } => {
            let (a, b, c) = (load(&c70)?, load(&c7)?, load(&c7ft)?);
            let rows = match group_by {
                Some(g) => stats::improvement_groups(&a, &b, &c, g.into(), denominator.into()),
                None => stats::improvement_rows(&a, &b, &c, denominator.into()),
            }
            .map_err(domain)?;
            emit(&report::render_improvement(&rows, format.into(), percent));
        }
        AnalyzeCmd::Pgg { log, format } => {
            let rows = report::pgg_summaries(&load(&log)?).map_err(domain)?;
            emit(&report::render_pgg(&rows, format.into()));
        }
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<(), CliError> {
    let opt = |p: &Option<PathBuf>| p.as_deref().map(load).transpose();
    let inputs = ReportInputs {
        primary: opt(&args.log)?,
        comparison: match (opt(&args.normal)?, opt(&args.oos)?) {
            (Some(a), Some(b)) => Some((a, b)),
            _ => None,
        },
        improvement: match (opt(&args.c70)?, opt(&args.c7)?, opt(&args.c7ft)?) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            _ => None,
        },
        table_options: args.test.options(),
        annotate_reference: args.annotate,
    };
    if inputs.primary.is_none() && inputs.comparison.is_none() && inputs.improvement.is_none() {
        return Err(CliError::Usage("give --log, --normal/--oos or --c70/--c7/--c7ft".into()));
    }
    for path in report::write_report(&inputs, &args.out_dir).map_err(domain)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let corpus = cli.corpus.as_deref();
    let result = match cli.command {
        Command::Scenarios(cmd) => scenarios(cmd, corpus),
        Command::Run(args) => run(args, corpus),
        Command::Dataset(cmd) => dataset(cmd, corpus),
        Command::Analyze(cmd) => analyze(cmd),
        Command::Report(args) => report_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun with --help for usage.");
            ExitCode::from(2)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
