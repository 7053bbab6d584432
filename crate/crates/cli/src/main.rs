use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use summation_core::embedding::load_vectors;
use summation_core::experiments::{
    mean_curve, parse_references, spearman, sweep, sweep_tsv, SweepAxis, FEATURE_SET_SIZES, QUERY_BUDGETS,
};
use summation_core::hierarchy::ExportOptions;
use summation_core::ingest::{extract_corpus, load_corpus, load_external_triples, Corpus, ExternalTriple, ExtractMode};
use summation_core::pipeline::{organize, personalize, summarize, Organized, OrganizeConfig, RunConfig};
use summation_core::preference::UtilityModel;
use summation_core::rouge::{eval_tsv_row, rouge_all, Variant, DEFAULT_WORD_LIMIT, EVAL_TSV_HEADER};
use summation_core::{SummarySelection, VectorStore};

#[derive(Parser)]
#[command(name = "summation", version, about = "Personalized concept-map summaries of document collections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract normalized triples from a corpus
    Ingest {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the concept hierarchy and export it as JSON
    Build {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        map: MapArgs,
        /// Include cluster centers in the export
        #[arg(long)]
        centers: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a utility model from simulated feedback against references
    Train {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce a summary from a trained model, or train one first from references
    Summarize {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        map: MapArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Output of `train`
        #[arg(long, conflicts_with = "references", required_unless_present = "references")]
        model: Option<PathBuf>,
        #[arg(long)]
        references: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a summary against references with ROUGE-1/2/L
    Eval {
        /// Summary JSON from `summarize`, or plain text
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Name for the cluster column; defaults to the summary file stem
        #[arg(long)]
        cluster: Option<String>,
        #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
        word_limit: usize,
    },
    /// ROUGE recall as the query budget grows
    BudgetSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',', default_values_t = QUERY_BUDGETS)]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        feature_set: usize,
        #[arg(long, default_value_t = 30)]
        runs: usize,
    },
    /// ROUGE recall for each feature-set size
    FeatureSweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long, value_delimiter = ',', default_values_t = FEATURE_SET_SIZES)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        query_budget: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Extractor {
    Heuristic,
    Preextracted,
}

#[derive(Args)]
struct Input {
    /// Corpus as JSON lines with id, title and text
    corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Extractor::Heuristic)]
    extract: Extractor,
    /// Pre-extracted triples, JSON lines
    #[arg(long)]
    triples: Option<PathBuf>,
}

impl Input {
    fn load(&self) -> Result<(Corpus, Vec<ExternalTriple>, ExtractMode)> {
        let corpus = load_corpus(&self.corpus)?;
        let external = match &self.triples {
            Some(p) => load_external_triples(p)?,
            None => Vec::new(),
        };
        let mode = match self.extract {
            Extractor::Heuristic => ExtractMode::Heuristic,
            Extractor::Preextracted if self.triples.is_none() => bail!("--extract preextracted needs --triples"),
            Extractor::Preextracted => ExtractMode::Preextracted,
        };
        Ok((corpus, external, mode))
    }
}

#[derive(Args)]
struct MapArgs {
    /// Evenness penalty weight for k-means
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 50)]
    k_max: usize,
    /// Cosine threshold for merging concepts
    #[arg(long, default_value_t = 0.9)]
    tau: f64,
    /// Word vectors in text format; trained on the corpus when absent
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl MapArgs {
    fn config(&self, mode: ExtractMode) -> Result<OrganizeConfig> {
        if self.k_min < 1 || self.k_min > self.k_max {
            bail!("need 1 <= --k-min <= --k-max");
        }
        if self.alpha.is_nan() || self.alpha < 0.0 {
            bail!("--alpha must be non-negative");
        }
        let mut config = OrganizeConfig { extract_mode: mode, tau: self.tau, seed: self.seed, ..OrganizeConfig::default() };
        config.hierarchy.alpha = self.alpha;
        config.hierarchy.k_min = self.k_min;
        config.hierarchy.k_max = self.k_max;
        Ok(config)
    }

    fn organize(&self, input: &Input) -> Result<Organized> {
        let (corpus, external, mode) = input.load()?;
        let vectors: Option<VectorStore> = match &self.vectors {
            Some(p) => Some(load_vectors(p)?),
            None => None,
        };
        Ok(organize(&corpus, &external, vectors.as_ref(), &self.config(mode)?)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 20)]
    query_budget: usize,
    #[arg(long, default_value_t = 10)]
    summary_budget: usize,
    /// Feature-set size: 2, 5, 8 or 10
    #[arg(long, default_value_t = 10)]
    feature_set: usize,
}

impl RunArgs {
    fn config(&self, seed: u64) -> RunConfig {
        RunConfig {
            query_budget: self.query_budget,
            summary_budget: self.summary_budget,
            feature_set: self.feature_set,
            seed,
            ..RunConfig::default()
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    corpus: PathBuf,
    #[arg(long)]
    references: PathBuf,
    #[arg(long, default_value_t = 10)]
    summary_budget: usize,
    /// First seed; run i uses seed + i
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_WORD_LIMIT)]
    word_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn references(path: &Path) -> Result<Vec<Vec<String>>> {
    let refs = parse_references(&read(path)?);
    if refs.is_empty() {
        bail!("{}: no reference summaries", path.display());
    }
    Ok(refs)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: serde_json::Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn run_sweep(axis: SweepAxis, args: &SweepArgs, values: &[usize], runs: usize, base: RunConfig) -> Result<()> {
    if runs == 0 || values.is_empty() {
        bail!("nothing to sweep");
    }
    let corpus = load_corpus(&args.corpus)?;
    let refs = references(&args.references)?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| args.seed.wrapping_add(i)).collect();
    let base = RunConfig { summary_budget: args.summary_budget, ..base };
    let points = sweep(axis, &corpus, &refs, values, &seeds, &OrganizeConfig::default(), &base, Some(args.word_limit))?;
    emit(args.out.as_deref(), &sweep_tsv(axis, &points))?;
    let curve = mean_curve(&points, values, Variant::R1);
    for (v, r) in values.iter().zip(&curve) {
        eprintln!("{}={v}\tmean R1 recall {r:.4}", axis.name());
    }
    let xs: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    eprintln!("spearman {:.4}", spearman(&xs, &curve));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, out } => {
            let (corpus, external, mode) = input.load()?;
            let (triples, stats) = extract_corpus(&corpus.sentences(), mode, &external)?;
            let mut text = String::new();
            for t in &triples {
                text.push_str(&serde_json::to_string(t)?);
                text.push('\n');
            }
            emit(out.as_deref(), &text)?;
            eprintln!("{}", serde_json::to_string(&stats)?);
        }
        Command::Build { input, map, centers, out } => {
            let org = map.organize(&input)?;
            emit(out.as_deref(), &pretty(serde_json::to_value(org.export(ExportOptions { include_centers: centers }))?)?)?;
            eprintln!("{} documents, {} concepts", org.num_documents, org.concepts.len());
        }
        Command::Train { input, map, run, references: refs, out } => {
            let org = map.organize(&input)?;
            let refs = references(&refs)?;
            let oracle = org.oracle(&refs);
            let result = personalize(&org, &run.config(map.seed), |p| oracle.respond(p))?;
            let doc = json!({ "feature_set": run.feature_set, "model": result.model, "preferences": result.records });
            emit(out.as_deref(), &pretty(doc)?)?;
        }
        Command::Summarize { input, map, run, model, references: refs, out } => {
            let org = map.organize(&input)?;
            let config = run.config(map.seed);
            let summary: SummarySelection = match (model, refs) {
                (Some(path), _) => {
                    let doc: serde_json::Value = serde_json::from_str(&read(&path)?).context("parsing model")?;
                    let model: UtilityModel = serde_json::from_value(doc["model"].clone()).context("parsing model")?;
                    let features = org.features(model.schema.len())?;
                    summarize(&org, &features, &model, &config)?.2
                }
                (None, Some(path)) => {
                    let oracle = org.oracle(&references(&path)?);
                    personalize(&org, &config, |p| oracle.respond(p))?.summary
                }
                (None, None) => unreachable!("clap requires one of --model or --references"),
            };
            emit(out.as_deref(), &pretty(serde_json::to_value(&summary)?)?)?;
        }
        Command::Eval { summary, references: refs, cluster, word_limit } => {
            let text = read(&summary)?;
            let tokens = match serde_json::from_str::<SummarySelection>(&text) {
                Ok(sel) => sel.tokens(),
                Err(_) => summation_core::ingest::tokenize(&text),
            };
            let refs = references(&refs)?;
            let name = cluster
                .unwrap_or_else(|| summary.file_stem().map_or_else(|| "summary".into(), |s| s.to_string_lossy().into_owned()));
            let mut out = format!("{EVAL_TSV_HEADER}\n");
            for score in rouge_all(&tokens, &refs, Some(word_limit)) {
                out.push_str(&eval_tsv_row(&name, &score));
                out.push('\n');
            }
            print!("{out}");
        }
        Command::BudgetSweep { sweep, budgets, feature_set, runs } => {
            run_sweep(SweepAxis::QueryBudget, &sweep, &budgets, runs, RunConfig { feature_set, ..RunConfig::default() })?;
        }
        Command::FeatureSweep { sweep, sizes, query_budget, runs } => {
            run_sweep(SweepAxis::FeatureSet, &sweep, &sizes, runs, RunConfig { query_budget, ..RunConfig::default() })?;
        }
    }
    Ok(())
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain().map(|c| c.to_string()) {
        if !out.contains(&cause) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&cause);
        }
    }
    out
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
