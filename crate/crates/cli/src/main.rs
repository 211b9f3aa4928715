//! `pct`: generate datasets, solve theories, train and evaluate predictors.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pct_core::constraints::{augment, query_id, read_augmented, write_augmented, AugmentedInstance};
use pct_core::datagen::{
    generate_split, read_instances, write_instances, DepthProfile, FactRecord, GenConfig, Instance, RuleRecord,
    TrainingSet,
};
use pct_core::inference::{derive_closure, solve, NetworkKind, ProofRecord, DEFAULT_WORLD_CAP};
use pct_core::metrics::{evaluate, read_predictions, write_predictions};
use pct_core::rules::{Atom, Fact, Rule, Theory};
use pct_core::trainer::{load_predictor, predict, save_predictor, train, LossKind, TrainConfig};
use pct_core::{Predictor, Vocabulary};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "pct", version, about = "Probabilistic reasoning over textual rules")]
struct Cli {
    /// Vocabulary file (`predicate arity phrase` per line); defaults to the builtin one.
    #[arg(long, global = true)]
    vocabulary: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic split as JSON lines.
    Generate(GenerateArgs),
    /// Extract intermediate queries and step constraints for a dataset.
    Augment {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute gold probability, depth, network kind and proof for each record.
    Solve {
        /// JSON lines with at least `id`, `query`, `facts` and `rules`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest number of switches enumerated exactly.
        #[arg(long, default_value_t = DEFAULT_WORLD_CAP)]
        cap: usize,
    },
    /// Train a predictor, optionally with step constraints.
    Train(TrainArgs),
    /// Write predictions for every question (and every augmented query).
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        augmented: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions: per-depth BA, CA and CS table.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        augmented: Option<PathBuf>,
        /// Also write the report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    RuletakerPro,
    Rulebert,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    M1,
    M2,
    M3,
    Mmax,
}

impl From<Profile> for TrainingSet {
    fn from(p: Profile) -> Self {
        match p {
            Profile::M1 => TrainingSet::M1,
            Profile::M2 => TrainingSet::M2,
            Profile::M3 => TrainingSet::M3,
            Profile::Mmax => TrainingSet::Mmax,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "ruletaker-pro")]
    dataset: Dataset,
    /// Depth distribution of the tabulated training set.
    #[arg(long, value_enum, default_value = "mmax")]
    profile: Profile,
    /// Multiply every cell count by this factor.
    #[arg(long, conflicts_with = "total")]
    scale: Option<f64>,
    /// Rescale proportionally to exactly this many instances.
    #[arg(long)]
    total: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leave rule sentences out of the rendered context.
    #[arg(long)]
    no_rules_in_text: bool,
    #[arg(long, default_value_t = 0.2)]
    complex_fraction: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loss {
    Ce,
    Mse,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Augmented file for the training set; computed on the fly if omitted.
    #[arg(long)]
    augmented: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "ce")]
    loss: Loss,
    /// Enable the constraint term after warm-up.
    #[arg(long)]
    pct: bool,
    #[arg(long, default_value_t = 0.1)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.9)]
    decay: f64,
    #[arg(long, default_value_t = 10)]
    warmup: usize,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64")]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Serialized predictor.
    #[arg(long)]
    model: PathBuf,
    /// JSON training report; printed to stdout if omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Minimal solve input; extra fields of full dataset records are ignored.
#[derive(Deserialize)]
struct Problem {
    id: String,
    query: Atom,
    #[serde(default)]
    facts: Vec<FactRecord>,
    #[serde(default)]
    rules: Vec<RuleRecord>,
}

#[derive(Serialize)]
struct Solved {
    id: String,
    query: Atom,
    gold_prob: f64,
    depth: Option<usize>,
    kind: NetworkKind,
    proof: Vec<ProofRecord>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load_data(path: &Path) -> Result<Vec<Instance>> {
    read_instances(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn load_augmented(path: &Path) -> Result<Vec<AugmentedInstance>> {
    read_augmented(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn generate(args: GenerateArgs, vocab: Vocabulary) -> Result<()> {
    let table = DepthProfile::ruletaker_pro(args.profile.into());
    let profile = match (args.scale, args.total) {
        (Some(f), _) => table.scaled(f),
        (None, Some(n)) => table.scaled_to_total(n),
        (None, None) => table,
    };
    let mut cfg = match args.dataset {
        Dataset::RuletakerPro => GenConfig::ruletaker_pro(profile, args.seed),
        Dataset::Rulebert => GenConfig::rulebert(profile, args.seed),
    };
    cfg.vocabulary = vocab;
    cfg.include_rules_in_text = !args.no_rules_in_text;
    cfg.complex_fraction = args.complex_fraction;
    let split = generate_split(&cfg)?;
    emit(args.out.as_deref(), &write_instances(&split, &cfg.vocabulary)?)?;
    eprintln!("generated {} instances", split.len());
    Ok(())
}

fn solve_records(data: &Path, out: Option<&Path>, cap: usize) -> Result<()> {
    let mut text = String::new();
    for (i, line) in read(data)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let p: Problem = serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
        let facts = p.facts.iter().map(|f| Fact::uncertain(f.atom.clone(), f.prob)).collect::<Result<Vec<_>, _>>()?;
        let rules = p
            .rules
            .iter()
            .map(|r| Rule::from_parts(r.premises.clone(), r.conclusion.clone(), r.prob, r.adverb))
            .collect::<Result<Vec<_>, _>>()?;
        let theory = Theory::new(facts, rules).with_context(|| format!("record {}", p.id))?;
        let s = solve(&theory, &derive_closure(&theory), &p.query, cap).with_context(|| format!("record {}", p.id))?;
        let solved =
            Solved { id: p.id, query: p.query, gold_prob: s.gold_prob, depth: s.depth, kind: s.kind, proof: s.proof };
        text.push_str(&serde_json::to_string(&solved)?);
        text.push('\n');
    }
    emit(out, &text)
}

fn train_model(args: TrainArgs, vocab: Vocabulary) -> Result<()> {
    let data = load_data(&args.train)?;
    let augmented = match &args.augmented {
        Some(path) => load_augmented(path)?,
        None if args.pct => augment(&data, &vocab)?,
        None => Vec::new(),
    };
    let cfg = TrainConfig {
        loss: match args.loss {
            Loss::Ce => LossKind::Ce,
            Loss::Mse => LossKind::Mse,
        },
        pct: args.pct,
        hidden: args.hidden,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        warmup_epochs: args.warmup,
        epochs: args.epochs,
        alpha0: args.alpha0,
        decay: args.decay,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (predictor, report) = train::<f64>(&cfg, &data, &augmented, vocab)?;
    fs::write(&args.model, save_predictor(&predictor)).with_context(|| format!("writing {}", args.model.display()))?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    emit(args.report.as_deref(), &json)
}

fn predict_all(model: &Path, data: &Path, augmented: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let predictor: Predictor = load_predictor(&read(model)?).with_context(|| format!("loading {}", model.display()))?;
    let data = load_data(data)?;
    let augmented = augmented.map(load_augmented).transpose()?.unwrap_or_default();
    let by_id: BTreeMap<&str, &Instance> = data.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut preds = BTreeMap::new();
    for inst in &data {
        preds.insert(inst.id.clone(), predict(&predictor, inst, &inst.hypothesis));
    }
    for aug in &augmented {
        let Some(inst) = by_id.get(aug.base_id.as_str()) else {
            bail!("augmented record {} has no instance in the dataset", aug.base_id);
        };
        for (k, q) in aug.queries.iter().enumerate() {
            preds.insert(query_id(&aug.base_id, k), predict(&predictor, inst, &q.atom));
        }
    }
    emit(out, &write_predictions(&preds))
}

fn evaluate_predictions(predictions: &Path, data: &Path, augmented: Option<&Path>, json: Option<&Path>) -> Result<()> {
    let preds = read_predictions(&read(predictions)?)?;
    let data = load_data(data)?;
    let augmented = augmented.map(load_augmented).transpose()?.unwrap_or_default();
    let report = evaluate(&preds, &data, &augmented)?;
    if let Some(path) = json {
        fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    print!("{report}");
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let vocab = match &cli.vocabulary {
        Some(path) => Vocabulary::parse(&read(path)?)?,
        None => Vocabulary::builtin(),
    };
    match cli.command {
        Command::Generate(args) => generate(args, vocab),
        Command::Augment { data, out } => {
            let data = load_data(&data)?;
            emit(out.as_deref(), &write_augmented(&augment(&data, &vocab)?))
        }
        Command::Solve { data, out, cap } => solve_records(&data, out.as_deref(), cap),
        Command::Train(args) => train_model(args, vocab),
        Command::Predict { model, data, augmented, out } => {
            predict_all(&model, &data, augmented.as_deref(), out.as_deref())
        }
        Command::Evaluate { predictions, data, augmented, json } => {
            evaluate_predictions(&predictions, &data, augmented.as_deref(), json.as_deref())
        }
    }
}
