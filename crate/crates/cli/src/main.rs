//! `docgroup`: fit topics, build the group/criterion graph, and query it.

mod output;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use docgroup::analytics::{
    build_similarity_graph, entropy_ranking, louvain_cluster, top_k_similar, topic_trend, Measure,
    SimilarityGraph, SortOrder, DEFAULT_XI,
};
use docgroup::corpus::{
    assign_groups, criteria_from_labels, load_corpus, read_labels, Corpus, CriteriaFamily,
    GroupKey, TokenizerConfig,
};
use docgroup::eval::{average_precision, mean_average_precision, RelevanceJudgments};
use docgroup::graph::{build_bipartite, BipartiteGraph, Side, WeightMode};
use docgroup::pairs::{blocked_pairs, BlockingStrategy, GroupPairSelection, PairInputs};
use docgroup::topics::{derive_criteria, fit_lda, topic_top_words, DocTopics, LdaParams};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "docgroup",
    version,
    about = "Compare groups of documents through a weighted bipartite graph"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit LDA on a JSON-lines corpus and write θ (`doc_id,t1..tK`).
    Fit(FitArgs),
    /// Build the group/criterion graph from a corpus plus θ or labels.
    Build(BuildArgs),
    /// Rank the nodes of one side by entropy.
    Entropy(EntropyArgs),
    /// Similar groups for one node, or the thresholded similarity graph.
    Sim(SimArgs),
    /// Louvain clusters of the similarity graph.
    Cluster(ClusterArgs),
    /// Yearly weight and share of one criterion.
    Trend(TrendArgs),
    /// Rank similar document pairs, optionally with blocking.
    Pairs(PairsArgs),
    /// Mean average precision of similarity rankings against judgments.
    EvalMap(EvalMapArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Tsv,
    Dot,
    Json,
}

/// `--format` for subcommands that emit tables.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    Group,
    Year,
}

impl From<GroupBy> for GroupKey {
    fn from(g: GroupBy) -> Self {
        match g {
            GroupBy::Group => GroupKey::Group,
            GroupBy::Year => GroupKey::Year,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    None,
    #[value(name = "same_criterion", alias = "same-criterion")]
    SameCriterion,
    #[value(name = "similar_groups", alias = "similar-groups")]
    SimilarGroups,
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Seed {
    #[arg(long, env = "DOCGROUP_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GraphOptions {
    #[arg(long, value_enum, default_value = "group")]
    group_key: GroupBy,
    #[arg(long, default_value = "doc_count")]
    weight_mode: WeightMode,
    /// Criteria from a `doc_id,criterion_id` CSV instead of θ argmax.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    /// Document-topic prior; defaults to 5/K.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[command(flatten)]
    seed: Seed,
    /// Also write the topic-word matrix here.
    #[arg(long)]
    topic_word: Option<PathBuf>,
    /// Number of top words per topic in JSON output.
    #[arg(long, default_value_t = 10)]
    top_words: usize,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "tsv")]
    format: Format,
    /// θ CSV aligned with the corpus.
    #[arg(long, required_unless_present = "labels")]
    theta: Option<PathBuf>,
    #[command(flatten)]
    graph: GraphOptions,
}

#[derive(Args)]
struct EntropyArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long, default_value = "P")]
    side: Side,
    #[arg(long, default_value = "desc")]
    order: SortOrder,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Group to rank others against; omit with `--format tsv` to emit the
    /// similarity graph.
    #[arg(long)]
    node: Option<String>,
    #[arg(long, default_value = "cosine")]
    measure: Measure,
    #[arg(long, default_value_t = 10)]
    top_n: usize,
    #[arg(long, default_value_t = DEFAULT_XI)]
    xi: f64,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Threshold used when the input is a bipartite graph.
    #[arg(long, default_value_t = DEFAULT_XI)]
    xi: f64,
    #[arg(long, default_value = "cosine")]
    measure: Measure,
    #[command(flatten)]
    seed: Seed,
}

#[derive(Args)]
struct TrendArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Criterion node, e.g. `t3`.
    #[arg(long)]
    topic: String,
}

#[derive(Args)]
struct PairsArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    theta: PathBuf,
    #[arg(long, value_enum, default_value = "same_criterion")]
    strategy: Strategy,
    #[arg(long, default_value_t = 10)]
    top_n: usize,
    #[arg(long, default_value_t = 0.0)]
    min_score: f64,
    #[command(flatten)]
    graph: GraphOptions,
    /// Group similarity threshold for `similar_groups`.
    #[arg(long, default_value_t = DEFAULT_XI)]
    xi: f64,
    #[arg(long, default_value = "cosine")]
    measure: Measure,
    /// Use the k most similar group pairs instead of the threshold.
    #[arg(long)]
    group_top_k: Option<usize>,
    #[arg(long)]
    include_same_group: bool,
}

#[derive(Args)]
struct EvalMapArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// `query_node,relevant_node` CSV.
    #[arg(long)]
    judgments: PathBuf,
    #[arg(long, default_value = "cosine")]
    measure: Measure,
    /// Ranking cutoff n.
    #[arg(long, default_value_t = 10)]
    top_n: usize,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Build(a) => build(a),
        Command::Entropy(a) => entropy(a),
        Command::Sim(a) => sim(a),
        Command::Cluster(a) => cluster(a),
        Command::Trend(a) => trend(a),
        Command::Pairs(a) => pairs(a),
        Command::EvalMap(a) => eval_map(a),
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    let corpus = load_corpus(output::open(path)?, &TokenizerConfig::default())
        .with_context(|| format!("loading corpus {}", path.display()))?;
    log::info!(
        "corpus: {} documents, {} with tokens, {} terms",
        corpus.len(),
        corpus.modelable_count(),
        corpus.vocabulary().len()
    );
    Ok(corpus)
}

fn read_theta(path: &Path) -> Result<DocTopics> {
    DocTopics::read_csv(output::open(path)?)
        .with_context(|| format!("reading θ {}", path.display()))
}

fn read_graph(path: &Path) -> Result<BipartiteGraph> {
    BipartiteGraph::read_tsv(output::open(path)?)
        .with_context(|| format!("reading graph {}", path.display()))
}

fn criteria_for(
    corpus: &Corpus,
    theta: Option<&DocTopics>,
    labels: Option<&Path>,
) -> Result<CriteriaFamily> {
    if let Some(path) = labels {
        let labels = read_labels(output::open(path)?)
            .with_context(|| format!("reading labels {}", path.display()))?;
        return Ok(criteria_from_labels(
            corpus,
            labels.iter().map(|(d, c)| (d.as_str(), c.as_str())),
        )?);
    }
    let theta = theta.context("either θ or --labels is required")?;
    Ok(derive_criteria(theta, corpus)?)
}

fn fit(a: FitArgs) -> Result<()> {
    let corpus = read_corpus(&a.io.input)?;
    let params = LdaParams {
        k: a.k,
        iterations: a.iterations,
        alpha: a.alpha,
        beta: a.beta,
        seed: a.seed.seed,
    };
    let model = fit_lda(&corpus, &params)?;
    if let Some(path) = &a.topic_word {
        output::emit(Some(path), |out| Ok(model.write_topic_word_csv(out)?))?;
    }
    output::emit(a.io.output.as_deref(), |out| match a.format {
        TableFormat::Json => {
            let docs: Vec<_> = model
                .doc_topics
                .doc_ids()
                .iter()
                .zip(model.doc_topics.rows())
                .map(|(id, row)| json!({ "doc_id": id, "theta": row }))
                .collect();
            let topics = (1..=model.num_topics())
                .map(|t| {
                    let label = topic_top_words(&model, t, a.top_words)?;
                    Ok(json!({ "topic_id": label.topic_id, "top_words": label.top_words }))
                })
                .collect::<Result<Vec<_>>>()?;
            output::json(
                out,
                &json!({
                    "k": model.num_topics(),
                    "alpha": model.alpha,
                    "beta": model.beta,
                    "iterations": model.iterations,
                    "seed": model.seed,
                    "documents": docs,
                    "topics": topics,
                }),
            )
        }
        TableFormat::Csv => Ok(model.doc_topics.write_csv(out)?),
    })
}

fn build(a: BuildArgs) -> Result<()> {
    let corpus = read_corpus(&a.io.input)?;
    let theta = a.theta.as_deref().map(read_theta).transpose()?;
    let criteria = criteria_for(&corpus, theta.as_ref(), a.graph.labels.as_deref())?;
    let groups = assign_groups(&corpus, a.graph.group_key.into())?;
    let modeled: usize = criteria.criteria().values().map(|d| d.len()).sum();
    log::info!(
        "{} groups over {} documents; {} documents carry a criterion",
        groups.len(),
        corpus.len(),
        modeled
    );
    if !criteria.is_partition() {
        log::warn!("criteria do not partition the modelable documents");
    }
    let graph = build_bipartite(&groups, &criteria, a.graph.weight_mode, &corpus)?;
    log::info!(
        "graph: {} group nodes, {} criterion nodes, {} edges",
        graph.p_nodes().len(),
        graph.c_nodes().len(),
        graph.edge_count()
    );
    output::emit(a.io.output.as_deref(), |out| match a.format {
        Format::Tsv => Ok(graph.write_tsv(out)?),
        Format::Dot => Ok(graph.write_dot(out)?),
        Format::Json => {
            let edges: Vec<_> = graph
                .edges()
                .map(|(p, c, w)| json!({ "group": p, "criterion": c, "weight": w }))
                .collect();
            output::json(
                out,
                &json!({
                    "weight_mode": graph.weight_mode().to_string(),
                    "groups": graph.p_nodes(),
                    "criteria": graph.c_nodes(),
                    "edges": edges,
                }),
            )
        }
        Format::Csv => bail!("build writes tsv, dot or json"),
    })
}

fn entropy(a: EntropyArgs) -> Result<()> {
    let graph = read_graph(&a.io.input)?;
    let ranked = entropy_ranking(&graph, a.side, a.order)?;
    output::emit(a.io.output.as_deref(), |out| {
        if a.format == TableFormat::Json {
            let rows: Vec<_> = ranked
                .iter()
                .map(|(n, h)| json!({ "node": n, "entropy": h }))
                .collect();
            return output::json(
                out,
                &json!({ "weight_mode": graph.weight_mode().to_string(), "nodes": rows }),
            );
        }
        writeln!(out, "#weight_mode={}", graph.weight_mode())?;
        write_scores(out, "entropy", &ranked)
    })
}

fn write_scores(out: &mut dyn Write, column: &str, rows: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", column])?;
    for (n, s) in rows {
        w.write_record([n.as_str(), &s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn sim(a: SimArgs) -> Result<()> {
    let graph = read_graph(&a.io.input)?;
    match (&a.node, a.format) {
        (None, Format::Tsv) => {
            let sg = build_similarity_graph(&graph, a.xi, a.measure)?;
            log::info!(
                "similarity graph: {} nodes, {} edges above {}",
                sg.len(),
                sg.edge_count(),
                a.xi
            );
            output::emit(a.io.output.as_deref(), |out| Ok(sg.write_tsv(out)?))
        }
        (None, _) => bail!("--node is required unless --format tsv is given"),
        (Some(_), Format::Tsv | Format::Dot) => bail!("a node ranking is written as csv or json"),
        (Some(node), format) => {
            let ranked = top_k_similar(&graph, node, a.top_n, a.measure)?;
            output::emit(a.io.output.as_deref(), |out| {
                if format == Format::Json {
                    let rows: Vec<_> = ranked
                        .iter()
                        .map(|(n, s)| json!({ "node": n, "score": s }))
                        .collect();
                    return output::json(out, &json!({ "query": node, "similar": rows }));
                }
                write_scores(out, "score", &ranked)
            })
        }
    }
}

/// Accepts a similarity-graph TSV as is, or thresholds a bipartite graph.
fn similarity_input(path: &Path, xi: f64, measure: Measure) -> Result<SimilarityGraph> {
    let mut first = String::new();
    output::open(path)?.read_line(&mut first)?;
    if first.trim_end() == "#weight_mode=similarity" {
        return SimilarityGraph::read_tsv(output::open(path)?)
            .with_context(|| format!("reading similarity graph {}", path.display()));
    }
    Ok(build_similarity_graph(&read_graph(path)?, xi, measure)?)
}

fn cluster(a: ClusterArgs) -> Result<()> {
    let sg = similarity_input(&a.io.input, a.xi, a.measure)?;
    let clustering = louvain_cluster(&sg, a.seed.seed);
    log::info!(
        "{} clusters, modularity {:.4}",
        clustering.num_clusters(),
        clustering.modularity
    );
    output::emit(a.io.output.as_deref(), |out| {
        if a.format == TableFormat::Json {
            let members = clustering.members();
            return output::json(
                out,
                &json!({ "modularity": clustering.modularity, "clusters": members }),
            );
        }
        Ok(clustering.write_csv(out)?)
    })
}

fn trend(a: TrendArgs) -> Result<()> {
    let graph = read_graph(&a.io.input)?;
    let series = topic_trend(&graph, &a.topic)?;
    output::emit(a.io.output.as_deref(), |out| {
        if a.format == TableFormat::Json {
            let points: Vec<_> = series
                .points
                .iter()
                .map(|p| json!({ "year": p.year, "weight": p.weight, "proportion": p.proportion }))
                .collect();
            return output::json(
                out,
                &json!({ "criterion": series.criterion, "points": points }),
            );
        }
        Ok(series.write_csv(out)?)
    })
}

fn pairs(a: PairsArgs) -> Result<()> {
    let corpus = read_corpus(&a.io.input)?;
    let theta = read_theta(&a.theta)?;
    let criteria = criteria_for(&corpus, Some(&theta), a.graph.labels.as_deref())?;
    let groups = assign_groups(&corpus, a.graph.group_key.into())?;
    let strategy = match a.strategy {
        Strategy::None => BlockingStrategy::None,
        Strategy::SameCriterion => BlockingStrategy::SameCriterion,
        Strategy::SimilarGroups => BlockingStrategy::SimilarGroups {
            selection: match a.group_top_k {
                Some(k) => GroupPairSelection::TopK(k),
                None => GroupPairSelection::Threshold(a.xi),
            },
            include_same_group: a.include_same_group,
        },
    };
    let group_similarity = match strategy {
        BlockingStrategy::SimilarGroups { .. } => {
            let graph = build_bipartite(&groups, &criteria, a.graph.weight_mode, &corpus)?;
            Some(build_similarity_graph(&graph, a.xi, a.measure)?)
        }
        _ => None,
    };
    let inputs = PairInputs {
        theta: &theta,
        corpus: &corpus,
        groups: &groups,
        criteria: &criteria,
        group_similarity: group_similarity.as_ref(),
    };
    let ranking = blocked_pairs(&inputs, strategy, a.top_n, a.min_score)?;
    let n = theta.len();
    log::info!(
        "scored {} candidate pairs of {} possible",
        ranking.candidates,
        n * n.saturating_sub(1) / 2
    );
    output::emit(a.io.output.as_deref(), |out| {
        if a.format == TableFormat::Json {
            let rows: Vec<_> = ranking
                .pairs
                .iter()
                .map(|p| json!({ "doc_a": p.doc_a, "doc_b": p.doc_b, "score": p.score, "block": p.block }))
                .collect();
            return output::json(
                out,
                &json!({ "candidates": ranking.candidates, "pairs": rows }),
            );
        }
        Ok(ranking.write_csv(out)?)
    })
}

fn eval_map(a: EvalMapArgs) -> Result<()> {
    let graph = read_graph(&a.io.input)?;
    let judgments = RelevanceJudgments::read_csv(output::open(&a.judgments)?)
        .with_context(|| format!("reading judgments {}", a.judgments.display()))?;
    if judgments.is_empty() {
        bail!("judgments file has no queries");
    }
    for node in judgments.nodes() {
        if !graph.p_nodes().iter().any(|p| p == node) {
            bail!("judged node `{node}` is not a group in the graph");
        }
    }
    let mut rankings = BTreeMap::new();
    let mut per_query = BTreeMap::new();
    for query in judgments.queries() {
        let ranking: Vec<String> = top_k_similar(&graph, query, a.top_n, a.measure)?
            .into_iter()
            .map(|(n, _)| n)
            .collect();
        let relevant = judgments.relevant(query).expect("listed query");
        per_query.insert(
            query.to_string(),
            average_precision(&ranking, relevant, a.top_n)?,
        );
        rankings.insert(query.to_string(), ranking);
    }
    let map = mean_average_precision(&rankings, &judgments, a.top_n)?;
    log::info!(
        "MAP@{} = {map:.4} over {} queries",
        a.top_n,
        per_query.len()
    );
    output::emit(a.io.output.as_deref(), |out| {
        if a.format == TableFormat::Json {
            return output::json(
                out,
                &json!({ "n": a.top_n, "map": map, "queries": per_query }),
            );
        }
        writeln!(out, "#map={map}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["query", "average_precision"])?;
        for (q, ap) in &per_query {
            w.write_record([q.as_str(), &ap.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })
}
