use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use indexmap::IndexMap;

use databias::cda::CdaMode;
use databias::corpus::load_corpus;
use databias::llm::{EndpointConfig, HttpBackend, LlmEndpoint, Transcript, TranscriptMode};
use databias::pipeline::{Pipeline, PipelineConfig, Stage};
use databias::prompts::PromptCatalog;
use databias::repbias::{cumulative_dr, sort_by_frequency, write_cumulative_csv, Tokenizer};
use databias::soct::{self, SoctConfig};
use databias::wordlist::{
    compute_frequencies, expand_completeness, filter_and_select, generate_raw, load_decisions, review_interactive,
    review_replay, AttributeSpec, FewShots, GenerationParams, Lexicon, SelectionMode, WordList,
};
use databias::{Error, Result};

#[derive(Parser)]
#[command(name = "databias", version, about = "Representation bias and stereotype analysis for text corpora")]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// record, replay or live.
    #[arg(long, global = true)]
    transcript: Option<TranscriptMode>,
    /// Transcript file used by record and replay.
    #[arg(long, global = true)]
    transcript_file: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and curate word lists.
    #[command(subcommand)]
    Wordlist(WordlistCmd),
    /// Segment the corpus, match word lists and report DR.
    Scan(RunArgs),
    /// Stereotype detection, assessment and filtering.
    #[command(subcommand)]
    Stereotype(StereotypeCmd),
    /// Counterfactual data augmentation.
    Cda(CdaArgs),
    /// Rebuild the debiased corpus and the final reports.
    Build(RunArgs),
    /// Print the summary of a run directory.
    Report(RunArgs),
    /// Occupation completion probe.
    Soct(SoctArgs),
    /// Run every stage, resuming where a previous run stopped.
    Run(RunCmd),
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Directory with one `<group>.json` word list per group.
    #[arg(long)]
    wordlists: Option<PathBuf>,
    #[arg(long)]
    attribute: Option<String>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunCmd {
    #[command(flatten)]
    run: RunArgs,
    /// Ignore stage stamps and start over.
    #[arg(long)]
    fresh: bool,
}

#[derive(Subcommand)]
enum StereotypeCmd {
    Detect(RunArgs),
    Assess(RunArgs),
    Filter {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

#[derive(Args)]
struct CdaArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    mode: Option<CdaMode>,
}

#[derive(Subcommand)]
enum WordlistCmd {
    /// Generate lists with an LLM, expand them and keep the most frequent.
    Gen {
        #[arg(long)]
        attribute: String,
        #[arg(long, value_delimiter = ',', required = true)]
        groups: Vec<String>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 50)]
        words_per_run: usize,
        #[arg(long, default_value_t = 100)]
        keep: usize,
        /// Keep generation order instead of ranking by corpus frequency.
        #[arg(long)]
        generation_order: bool,
        #[arg(long)]
        few_shots: Option<PathBuf>,
        /// Skip the plural and counterpart expansion.
        #[arg(long)]
        no_expand: bool,
        /// Corpus used for frequency filtering.
        #[arg(long)]
        corpus: PathBuf,
        /// Endpoint config (TOML); defaults to the generation endpoint of --config.
        #[arg(long)]
        endpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Review a list against the quality criteria.
    Review {
        list: PathBuf,
        /// Apply recorded decisions instead of asking.
        #[arg(long)]
        decisions: Option<PathBuf>,
        /// Where interactive decisions are appended.
        #[arg(long)]
        audit: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Word frequencies and the cumulative DR curve over a corpus.
    Freq {
        #[arg(long)]
        wordlists: PathBuf,
        #[arg(long)]
        attribute: String,
        #[arg(long)]
        corpus: PathBuf,
        /// Cumulative DR CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SoctArgs {
    /// Endpoint config (TOML).
    #[arg(long)]
    endpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Templates, one per line; the first half female-associated.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Gender word lists.
    #[arg(long)]
    wordlists: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn bundled_gender_lists() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/wordlists/gender")
}

fn pipeline_config(cli: &Cli, args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let need = |v: &Option<PathBuf>, flag: &str| {
                v.clone()
                    .ok_or_else(|| Error::InvalidConfig(format!("{flag} is required without --config")))
            };
            PipelineConfig::new(
                need(&args.corpus, "--corpus")?,
                need(&args.wordlists, "--wordlists")?,
                args.attribute
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig("--attribute is required without --config".into()))?,
                need(&args.out, "--out")?,
            )
        }
    };
    if let Some(c) = &args.corpus {
        cfg.corpus = c.clone();
    }
    if let Some(w) = &args.wordlists {
        cfg.wordlist_dir = w.clone();
    }
    if let Some(a) = &args.attribute {
        cfg.attribute = a.clone();
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.transcript {
        cfg.transcript.mode = m;
    }
    if let Some(t) = &cli.transcript_file {
        cfg.transcript.path = t.clone();
    }
    Ok(cfg)
}

/// Endpoint for commands outside the pipeline.
fn standalone_endpoint(cli: &Cli, endpoint: Option<&Path>) -> Result<LlmEndpoint> {
    let mode = cli.transcript.unwrap_or_default();
    let transcript_path = cli
        .transcript_file
        .clone()
        .unwrap_or_else(|| PathBuf::from("transcript.jsonl"));
    let transcript = || Transcript::open(&transcript_path).map(Arc::new);
    if mode == TranscriptMode::Replay {
        return Ok(LlmEndpoint::replay(transcript()?).with_parallelism(4));
    }
    let cfg = match endpoint {
        Some(p) => EndpointConfig::load(p)?,
        None => cli
            .config
            .as_ref()
            .map(PipelineConfig::load)
            .transpose()?
            .and_then(|c| c.llm.default)
            .ok_or_else(|| Error::InvalidConfig("--endpoint is required in record and live mode".into()))?,
    };
    let parallelism = cfg.parallelism;
    let backend = Arc::new(HttpBackend::new(cfg)?);
    let llm = match mode {
        TranscriptMode::Record => LlmEndpoint::record(backend, transcript()?),
        _ => LlmEndpoint::live(backend),
    };
    Ok(llm.with_parallelism(parallelism))
}

fn run_stages(cli: &Cli, args: &RunArgs, stages: &[Stage], edit: impl FnOnce(&mut PipelineConfig)) -> Result<()> {
    let mut cfg = pipeline_config(cli, args)?;
    edit(&mut cfg);
    let mut p = Pipeline::open(cfg)?;
    for &stage in stages {
        p.run_stage(stage)?;
        println!("{stage}: done");
    }
    Ok(())
}

fn wordlist(cli: &Cli, cmd: &WordlistCmd) -> Result<()> {
    match cmd {
        WordlistCmd::Gen {
            attribute,
            groups,
            runs,
            words_per_run,
            keep,
            generation_order,
            few_shots,
            no_expand,
            corpus,
            endpoint,
            out,
        } => {
            let spec = AttributeSpec::new(attribute.clone(), groups.clone())?;
            let mut params = GenerationParams::new(*runs, *words_per_run, *keep)?;
            params.seed = cli.seed.unwrap_or(0);
            if *generation_order {
                params.selection_mode = SelectionMode::Generation;
            }
            if let Some(f) = few_shots {
                params.few_shots = FewShots::load(f)?;
            }
            let llm = standalone_endpoint(cli, endpoint.as_deref())?;
            let catalog = PromptCatalog::default();
            let generated = generate_raw(&spec, &params, &llm, &catalog)?;
            let (lists, counterparts): (IndexMap<String, Vec<String>>, _) = if *no_expand {
                (generated.lists, Default::default())
            } else {
                let e = expand_completeness(&spec, &generated.lists, &llm, &catalog);
                (e.lists, e.counterparts)
            };
            let docs = load_corpus(corpus)?;
            let tokenizer = Tokenizer::default();
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            for (group, words) in lists {
                let mut list = WordList::new(attribute.clone(), group.clone(), words).normalized();
                list.counterpart = counterparts.get(&group).cloned().unwrap_or_default();
                let freqs = compute_frequencies(&list.entries, &docs, &tokenizer);
                let selected = filter_and_select(&list, &freqs, &params);
                let path = out.join(format!("{group}.json"));
                selected.save(&path)?;
                println!("{group}: {} entries -> {}", selected.entries.len(), path.display());
            }
            for w in generated.warnings {
                log::warn!("{w}");
            }
            Ok(())
        }
        WordlistCmd::Review {
            list,
            decisions,
            audit,
            out,
        } => {
            let wl = WordList::load(list)?;
            let reviewed = match decisions {
                Some(d) => review_replay(&wl, &load_decisions(d)?),
                None => {
                    let stdin = io::stdin();
                    let outcome = review_interactive(&wl, stdin.lock(), io::stdout(), audit.as_deref())?;
                    if outcome.aborted {
                        println!("review aborted; list left unchanged");
                        return Ok(());
                    }
                    outcome.list
                }
            };
            reviewed.save(out)?;
            println!("{} of {} entries kept", reviewed.entries.len(), wl.entries.len());
            Ok(())
        }
        WordlistCmd::Freq {
            wordlists,
            attribute,
            corpus,
            csv,
        } => {
            let lexicon = Lexicon::load_dir(wordlists, attribute, None)?;
            let docs = load_corpus(corpus)?;
            let words: Vec<String> = lexicon.lists.iter().flat_map(|l| l.entries.clone()).collect();
            let freqs = compute_frequencies(&words, &docs, &Tokenizer::default());
            for list in &lexicon.lists {
                println!("# {}", list.group);
                for w in sort_by_frequency(list, &freqs) {
                    println!("{w}\t{}", freqs.get(&w).copied().unwrap_or(0));
                }
            }
            if let Some(path) = csv {
                let series = cumulative_dr(&lexicon.lists, &freqs);
                let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
                write_cumulative_csv(BufWriter::new(file), &series).map_err(|e| Error::io(path, e))?;
            }
            Ok(())
        }
    }
}

fn soct_probe(cli: &Cli, args: &SoctArgs) -> Result<()> {
    let mut cfg = match &args.templates {
        Some(t) => SoctConfig::with_template_file(t)?,
        None => SoctConfig::default(),
    };
    cfg.runs_per_template = args.runs;
    cfg.seed = cli.seed.unwrap_or(0);
    let lists = args.wordlists.clone().unwrap_or_else(bundled_gender_lists);
    let lexicon = Lexicon::load_dir(&lists, "gender", None)?;
    let llm = standalone_endpoint(cli, args.endpoint.as_deref())?;
    let probe = soct::run_probe(&cfg, &llm)?;
    let report = soct::report(&probe, &cfg, &lexicon);
    let mut bytes = serde_json::to_vec_pretty(&report)?;
    bytes.push(b'\n');
    fs::write(&args.out, bytes).map_err(|e| Error::io(&args.out, e))?;
    println!(
        "first half DR {:.4} ({}), second half DR {:.4} ({}), {} unclassified",
        report.first_half.dr,
        report.first_half.direction,
        report.second_half.dr,
        report.second_half.direction,
        report.unclassified
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Wordlist(cmd) => wordlist(cli, cmd),
        Command::Scan(args) => {
            run_stages(cli, args, &[Stage::Segment, Stage::Match], |_| {})?;
            let p = Pipeline::open(pipeline_config(cli, args)?)?;
            print!("{}", p.summary().table());
            Ok(())
        }
        Command::Stereotype(StereotypeCmd::Detect(args)) => run_stages(cli, args, &[Stage::Detect], |_| {}),
        Command::Stereotype(StereotypeCmd::Assess(args)) => run_stages(cli, args, &[Stage::Assess], |_| {}),
        Command::Stereotype(StereotypeCmd::Filter { run, threshold }) => run_stages(cli, run, &[Stage::Filter], |c| {
            if let Some(t) = threshold {
                c.stereotype.threshold = *t;
            }
        }),
        Command::Cda(args) => run_stages(cli, &args.run, &[Stage::Cda], |c| {
            if let Some(m) = args.mode {
                c.cda.mode = m;
            }
        }),
        Command::Build(args) => run_stages(cli, args, &[Stage::Build], |_| {}),
        Command::Report(args) => {
            let p = Pipeline::open(pipeline_config(cli, args)?)?;
            print!("{}", p.summary().table());
            Ok(())
        }
        Command::Soct(args) => soct_probe(cli, args),
        Command::Run(cmd) => {
            let mut p = Pipeline::open(pipeline_config(cli, &cmd.run)?)?;
            let summary = p.run(!cmd.fresh)?;
            print!("{}", summary.table());
            println!("artifacts in {}", p.output_dir().display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
