//! Command-line driver: train, predict, eval, synth, baseline.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use genvector::predictor::CandidateSet;
use genvector::sampler::run_inference;
use genvector::{eval, io, synth, DefaultScalar, Hyperparameters, NormalGammaPrior};

#[derive(Parser)]
#[command(
    name = "genvector",
    version,
    about = "Multi-modal Bayesian embedding topic model: link users to ranked knowledge concepts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a corpus and pretrained embeddings.
    Train(TrainArgs),
    /// Rank top-k concepts per user from a trained model.
    Predict(PredictArgs),
    /// Compute precision@k of a prediction file against a truth file.
    Eval(EvalArgs),
    /// Generate a synthetic corpus, embeddings, and truth sets.
    Synth(SynthArgs),
    /// Frequency baseline: rank document concepts by occurrence count.
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one JSON record {"user":..,"concepts":[..]} per line.
    #[arg(long)]
    corpus: PathBuf,
    /// User embeddings in word2vec text format, keyed by user id.
    #[arg(long)]
    user_emb: PathBuf,
    /// Concept embeddings in word2vec text format.
    #[arg(long)]
    concept_emb: PathBuf,
    /// Number of latent topics.
    #[arg(long)]
    topics: usize,
    /// Symmetric Dirichlet concentration.
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    /// Laplace smoothing constant.
    #[arg(long, default_value_t = 1.0)]
    laplace: f64,
    /// Burn-in outer iterations (no read-outs or embedding updates).
    #[arg(long, default_value_t = 20)]
    burn_in: usize,
    /// Total outer iterations.
    #[arg(long, default_value_t = 60)]
    max_iter: usize,
    /// Gibbs sweeps per outer iteration.
    #[arg(long, default_value_t = 5)]
    latent_iters: usize,
    /// Sweeps between parameter read-outs.
    #[arg(long, default_value_t = 5)]
    readout_period: usize,
    /// Gradient-ascent step size for embedding updates.
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Ascent steps per embedding update.
    #[arg(long, default_value_t = 1)]
    embed_steps: usize,
    /// Freeze the input embeddings (no gradient updates).
    #[arg(long)]
    no_embed_updates: bool,
    /// Normal-gamma prior shape alpha0 (both modalities).
    #[arg(long, default_value_t = 1e3)]
    alpha0: f64,
    /// Normal-gamma prior rate beta0.
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    /// Normal-gamma prior pseudo-count kappa0.
    #[arg(long, default_value_t = 1e-5)]
    kappa0: f64,
    /// Normal-gamma prior location mu0.
    #[arg(long, default_value_t = 0.0)]
    mu0: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sampler worker threads; 1 = exact deterministic mode.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output model snapshot path.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV trace of post-burn-in log-likelihood over time.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Rank every vocabulary concept instead of only document concepts.
    #[arg(long)]
    full_vocab: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction file produced by `predict` or `baseline`.
    #[arg(long)]
    pred: PathBuf,
    /// Truth file: one JSON record per user with the relevant concepts.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    topics: usize,
    #[arg(long)]
    vocab: usize,
    #[arg(long, default_value_t = 50)]
    tokens_per_doc: usize,
    #[arg(long, default_value_t = 8)]
    user_dim: usize,
    #[arg(long, default_value_t = 8)]
    concept_dim: usize,
    /// Minimum distance between topic means, in component-sigma units.
    #[arg(long, default_value_t = 4.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.25)]
    dirichlet_alpha: f64,
    /// True precisions are Gamma(shape, rate) draws.
    #[arg(long, default_value_t = 100.0)]
    lambda_shape: f64,
    #[arg(long, default_value_t = 100.0)]
    lambda_rate: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out_corpus: PathBuf,
    #[arg(long)]
    out_user_emb: PathBuf,
    #[arg(long)]
    out_concept_emb: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> genvector::Result<()> {
    match cli.command {
        Command::Train(args) => train(args),
        Command::Predict(args) => predict(args),
        Command::Eval(args) => eval_cmd(args),
        Command::Synth(args) => synth_cmd(args),
        Command::Baseline(args) => baseline(args),
    }
}

fn train(args: TrainArgs) -> genvector::Result<()> {
    let corpus = io::load_corpus(&args.corpus)?;
    let user = io::load_embeddings::<DefaultScalar>(&args.user_emb, corpus.users())?;
    let concept = io::load_embeddings::<DefaultScalar>(&args.concept_emb, corpus.vocab().names())?;
    let embeddings = genvector::EmbeddingStore::new(user, concept);

    let tau = NormalGammaPrior::new(args.alpha0, args.beta0, args.kappa0, args.mu0)?;
    let hyper = Hyperparameters {
        tau_r: tau,
        tau_k: tau,
        alpha: args.alpha,
        laplace_l: args.laplace,
        num_topics: args.topics,
        burn_in: args.burn_in,
        max_iter: args.max_iter,
        latent_iters: args.latent_iters,
        readout_period: args.readout_period,
        embed_lr: args.lr,
        embed_steps: args.embed_steps,
        embed_updates: !args.no_embed_updates,
        seed: args.seed,
    };

    eprintln!(
        "training: {} users, {} tokens, vocab {}, {} topics, {} threads",
        corpus.num_users(),
        corpus.num_tokens(),
        corpus.vocab().len(),
        args.topics,
        args.threads
    );
    let model = run_inference(corpus, embeddings, hyper, args.threads)?;
    io::save_model(&model, &args.out)?;
    if let Some(trace_path) = &args.trace {
        let mut out = BufWriter::new(File::create(trace_path)?);
        io::write_trace(&model.trace, &mut out)?;
    }
    if let Some(last) = model.trace.last() {
        eprintln!(
            "done in {:.2}s, final log-likelihood {:.4}",
            last.seconds, last.log_likelihood
        );
    }
    Ok(())
}

fn predict(args: PredictArgs) -> genvector::Result<()> {
    let model = io::load_model::<DefaultScalar>(&args.model)?;
    let candidates = if args.full_vocab {
        CandidateSet::FullVocab
    } else {
        CandidateSet::DocConcepts
    };
    let skg = model.build_skg(args.top_k, candidates)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    io::write_predictions(&model.corpus, &skg, &mut out)?;
    Ok(())
}

fn eval_cmd(args: EvalArgs) -> genvector::Result<()> {
    let pred = io::read_predictions(BufReader::new(File::open(&args.pred)?))?;
    let truth_rows = io::read_truth(BufReader::new(File::open(&args.truth)?))?;
    let truth_by_user: HashMap<&str, &Vec<String>> = truth_rows
        .iter()
        .map(|(u, concepts)| (u.as_str(), concepts))
        .collect();

    // Intern concept names so the index-based metric can run.
    let mut table: HashMap<String, usize> = HashMap::new();
    fn intern(name: &str, table: &mut HashMap<String, usize>) -> usize {
        if let Some(&i) = table.get(name) {
            return i;
        }
        let i = table.len();
        table.insert(name.to_string(), i);
        i
    }
    let mut per_user = Vec::with_capacity(pred.len());
    let mut truth_sets = Vec::with_capacity(pred.len());
    for (user, ranking) in &pred {
        per_user.push(
            ranking
                .iter()
                .map(|(c, s)| (intern(c, &mut table), *s))
                .collect::<Vec<_>>(),
        );
        let t = truth_by_user
            .get(user.as_str())
            .map(|concepts| {
                concepts
                    .iter()
                    .map(|c| intern(c, &mut table))
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        truth_sets.push(t);
    }
    let skg = genvector::SocialKnowledgeGraph { per_user };
    let p = eval::precision_at_k(&skg, &truth_sets, args.k)?;
    println!("precision@{} = {:.6}", args.k, p);
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> genvector::Result<()> {
    let config = synth::SyntheticConfig::<DefaultScalar> {
        num_users: args.users,
        num_topics: args.topics,
        vocab_size: args.vocab,
        tokens_per_doc: args.tokens_per_doc,
        user_dim: args.user_dim,
        concept_dim: args.concept_dim,
        topic_mean_separation: args.separation,
        dirichlet_alpha: args.dirichlet_alpha,
        lambda_shape: args.lambda_shape,
        lambda_rate: args.lambda_rate,
        seed: args.seed,
    };
    let (corpus, embeddings, truth) = synth::generate_synthetic(&config)?;
    io::save_corpus(&corpus, &args.out_corpus)?;
    io::save_embeddings(&args.out_user_emb, corpus.users(), &embeddings.user)?;
    io::save_embeddings(
        &args.out_concept_emb,
        corpus.vocab().names(),
        &embeddings.concept,
    )?;
    let relevant_names: Vec<Vec<String>> = truth
        .relevant
        .iter()
        .map(|ws| {
            ws.iter()
                .map(|&w| corpus.vocab().name(w).to_string())
                .collect()
        })
        .collect();
    let mut out = BufWriter::new(File::create(&args.out_truth)?);
    io::write_truth(corpus.users(), &relevant_names, &mut out)?;
    eprintln!(
        "wrote {} users over {} concepts to {}",
        corpus.num_users(),
        corpus.vocab().len(),
        args.out_corpus.display()
    );
    Ok(())
}

fn baseline(args: BaselineArgs) -> genvector::Result<()> {
    let corpus = io::load_corpus(&args.corpus)?;
    let skg = eval::frequency_baseline::<DefaultScalar>(&corpus, args.top_k)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    io::write_predictions(&corpus, &skg, &mut out)?;
    Ok(())
}
