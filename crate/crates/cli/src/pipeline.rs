//! Mode drivers: everything a CLI subcommand does between parsing the
//! config and writing files. Inputs are resolved and validated before any
//! output file is created; outputs are accumulated in memory and flushed at
//! the end, so failed runs leave nothing half-written. All emitted files
//! are byte-deterministic for a fixed seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use hinforge_core::fed::{partition_by_hash, run_simulation, SimConfig, WorkerProfile};
use hinforge_core::graph::{HeterogeneousGraph, MetaPath, MetaPathAdjacency, NodeId};
use hinforge_core::influence::{
    centrality, nac_influence, topk_intersection, CentralityKind, InfluenceScores, Projection,
};
use hinforge_core::io;
use hinforge_core::model::{
    checkpoint_to_bytes, embed_all, load_checkpoint, predict, AttentionSnapshot,
    CheckpointHeader, Hyperparams, ModelInputs, ModelParams,
};
use hinforge_core::rng::{derive_seed, hash_unit};
use hinforge_core::synth::gen_synthetic;
use hinforge_core::team::{f1_scores, identify_teams, nmi, prefilter_graph, TeamPartition};

use crate::baselines::{degree_features, majority_baseline, LogisticBaseline};
use crate::config::{RunConfig, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Gen,
    Train,
    Embed,
    Influence,
    Teams,
    Eval,
    FedTrain,
    Sensitivity,
}

impl Mode {
    fn name(&self) -> &'static str {
        match self {
            Mode::Gen => "gen",
            Mode::Train => "train",
            Mode::Embed => "embed",
            Mode::Influence => "influence",
            Mode::Teams => "teams",
            Mode::Eval => "eval",
            Mode::FedTrain => "fedtrain",
            Mode::Sensitivity => "sensitivity",
        }
    }
}

pub fn run(mode: Mode, cfg: &RunConfig) -> Result<()> {
    match mode {
        Mode::Gen => run_gen(cfg),
        Mode::Train => run_train(cfg),
        Mode::Embed => run_embed(cfg),
        Mode::Influence => run_influence(cfg),
        Mode::Teams => run_teams(cfg, false),
        Mode::Eval => run_teams(cfg, true),
        Mode::FedTrain => run_fedtrain(cfg),
        Mode::Sensitivity => run_sensitivity(cfg),
    }
}

/// Deferred output set: nothing touches the filesystem until `flush`.
struct Outputs {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
    metrics: BTreeMap<String, f64>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn add(&mut self, name: &str, content: String) {
        self.files.push((self.dir.join(name), content.into_bytes()));
    }

    fn add_bytes(&mut self, name: &str, content: Vec<u8>) {
        self.files.push((self.dir.join(name), content));
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    fn flush(mut self, mode: Mode, cfg: &RunConfig) -> Result<()> {
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            mode: mode.name().to_string(),
            seed: cfg.seed,
            metrics: std::mem::take(&mut self.metrics),
            files: self
                .files
                .iter()
                .map(|(p, _)| p.file_name().unwrap().to_string_lossy().into_owned())
                .collect(),
            config: cfg.clone(),
        };
        let manifest_json = serde_json::to_string_pretty(&manifest)?;
        std::fs::create_dir_all(&self.dir)
            .with_context(|| format!("cannot create output dir {}", self.dir.display()))?;
        for (path, content) in &self.files {
            std::fs::write(path, content)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        std::fs::write(self.dir.join("manifest.json"), manifest_json + "\n")?;
        Ok(())
    }
}

#[derive(serde::Serialize)]
struct Manifest {
    schema_version: u32,
    mode: String,
    seed: u64,
    metrics: BTreeMap<String, f64>,
    files: Vec<String>,
    config: RunConfig,
}

// ---------------------------------------------------------------- gen ----

fn run_gen(cfg: &RunConfig) -> Result<()> {
    let planted_cfg = cfg.synthetic.planted(derive_seed(cfg.seed, "graph-gen"));
    let planted = gen_synthetic(&planted_cfg).context("synthetic generation failed")?;

    let mut out = Outputs::new(&cfg.output.dir);
    out.metric("authors", planted.labels.len() as f64);
    out.metric("teams", planted.truth.len() as f64);
    out.metric("nodes", planted.graph.node_count() as f64);
    out.metric("edges", planted.graph.edges().len() as f64);

    out.add("graph.tsv", io::render_graph(&planted.graph));
    out.add("truth.tsv", io::render_truth(&planted.truth));
    out.add("labels.tsv", io::render_label_sidecar(&planted.labels));
    out.flush(Mode::Gen, cfg)
}

// ------------------------------------------------------------- shared ----

struct Prepared {
    graph: HeterogeneousGraph,
    inputs: ModelInputs,
    hyper: Hyperparams,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let path = cfg
        .graph
        .path
        .as_ref()
        .context("config error: graph.path is required for this mode")?;
    if !path.exists() {
        bail!("config error: graph.path {} does not exist", path.display());
    }
    let graph = io::read_graph(path)?;
    let inputs = build_inputs(&graph, cfg)?;
    let hyper = cfg.model.hyperparams(cfg.seed);
    Ok(Prepared {
        graph,
        inputs,
        hyper,
    })
}

fn build_inputs(graph: &HeterogeneousGraph, cfg: &RunConfig) -> Result<ModelInputs> {
    let mut adjacencies = Vec::new();
    for names in &cfg.meta_paths.paths {
        let path = MetaPath::from_type_names(graph, names)
            .with_context(|| format!("config error: meta_paths.paths entry {names:?}"))?;
        if graph.node_type_name(path.start_type()) != cfg.meta_paths.target_type {
            bail!(
                "config error: meta-path {names:?} does not start at target type {}",
                cfg.meta_paths.target_type
            );
        }
        adjacencies.push(MetaPathAdjacency::build(graph, &path));
    }
    Ok(ModelInputs::new(graph, adjacencies)?)
}

/// Deterministic 60/20/20-style split of the labeled positions by hashed
/// node id.
fn split_positions(inputs: &ModelInputs, cfg: &RunConfig) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let seed = derive_seed(cfg.seed, "split");
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for pos in inputs.labeled_positions() {
        let u = hash_unit(seed, u64::from(inputs.nodes[pos]));
        if u < cfg.split.train_fraction {
            train.push(pos);
        } else if u < cfg.split.train_fraction + cfg.split.val_fraction {
            val.push(pos);
        } else {
            test.push(pos);
        }
    }
    (train, val, test)
}

/// Loads the configured checkpoint or trains from scratch on the train
/// split. Returns the parameters and, when trained, the per-step losses.
fn obtain_params(
    cfg: &RunConfig,
    inputs: &ModelInputs,
    hyper: &Hyperparams,
    train_positions: &[usize],
) -> Result<(ModelParams, Option<Vec<f64>>)> {
    if let Some(ckpt) = &cfg.graph.checkpoint {
        let (params, header) = load_checkpoint(ckpt)?;
        if header.node_count != inputs.node_count()
            || header.path_count != inputs.path_count()
            || header.embed_dim != hyper.embed_dim
        {
            bail!(
                "checkpoint {} does not match the configured model/graph shapes",
                ckpt.display()
            );
        }
        return Ok((params, None));
    }
    if train_positions.is_empty() {
        bail!("config error: no labeled nodes fall into the training split");
    }
    let clamped = clamp_batch(hyper, train_positions.len());
    let (params, losses) =
        hinforge_core::model::train(inputs, &clamped, train_positions.to_vec())?;
    Ok((params, Some(losses)))
}

fn clamp_batch(hyper: &Hyperparams, train_len: usize) -> Hyperparams {
    if hyper.batch_size > train_len {
        eprintln!(
            "warning: batch_size {} exceeds the {} labeled training nodes; clamping to full batch",
            hyper.batch_size, train_len
        );
        Hyperparams {
            batch_size: train_len,
            ..hyper.clone()
        }
    } else {
        hyper.clone()
    }
}

fn checkpoint_header(inputs: &ModelInputs, hyper: &Hyperparams) -> CheckpointHeader {
    CheckpointHeader {
        embed_dim: hyper.embed_dim,
        semantic_dim: hyper.semantic_dim,
        path_count: inputs.path_count(),
        node_count: inputs.node_count(),
        label_count: inputs.num_labels,
        seed: hyper.seed,
    }
}

fn labels_of(inputs: &ModelInputs, positions: &[usize]) -> Vec<u16> {
    positions
        .iter()
        .map(|&p| inputs.labels[p].expect("labeled position"))
        .collect()
}

// -------------------------------------------------------------- train ----

fn run_train(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let (train_pos, val_pos, test_pos) = split_positions(&prepared.inputs, cfg);
    let (params, losses) = obtain_params(cfg, &prepared.inputs, &prepared.hyper, &train_pos)?;

    let mut out = Outputs::new(&cfg.output.dir);
    let mut metrics_tsv = String::from("model\tsplit\tmicro_f1\tmacro_f1\n");

    let eval_split = |name: &str,
                          positions: &[usize],
                          out: &mut Outputs,
                          tsv: &mut String|
     -> Result<()> {
        if positions.is_empty() {
            return Ok(());
        }
        let truth = labels_of(&prepared.inputs, positions);

        let preds = predict(&prepared.inputs, &params, positions)?;
        let (micro, macro_) = f1_scores(&preds, &truth)?;
        writeln!(tsv, "ahine\t{name}\t{micro}\t{macro_}").unwrap();
        out.metric(&format!("ahine_{name}_micro_f1"), micro);
        out.metric(&format!("ahine_{name}_macro_f1"), macro_);

        let majority = majority_baseline(&labels_of(&prepared.inputs, &train_pos), prepared.inputs.num_labels);
        let maj_preds = vec![majority; positions.len()];
        let (micro, macro_) = f1_scores(&maj_preds, &truth)?;
        writeln!(tsv, "majority\t{name}\t{micro}\t{macro_}").unwrap();
        out.metric(&format!("majority_{name}_micro_f1"), micro);

        let mask: Vec<bool> = (0..prepared.inputs.node_count())
            .map(|p| train_pos.contains(&p))
            .collect();
        let features = degree_features(&prepared.graph, &prepared.inputs.nodes, &mask);
        let train_features: Vec<Vec<f64>> =
            train_pos.iter().map(|&p| features[p].clone()).collect();
        let model = LogisticBaseline::fit(
            &train_features,
            &labels_of(&prepared.inputs, &train_pos),
            prepared.inputs.num_labels,
            300,
            0.5,
        );
        let split_features: Vec<Vec<f64>> =
            positions.iter().map(|&p| features[p].clone()).collect();
        let (micro, macro_) = f1_scores(&model.predict(&split_features), &truth)?;
        writeln!(tsv, "degree_logistic\t{name}\t{micro}\t{macro_}").unwrap();
        out.metric(&format!("degree_logistic_{name}_micro_f1"), micro);
        Ok(())
    };

    eval_split("val", &val_pos, &mut out, &mut metrics_tsv)?;
    eval_split("test", &test_pos, &mut out, &mut metrics_tsv)?;
    out.add("metrics.tsv", metrics_tsv);

    if let Some(losses) = losses {
        let mut curve = String::from("step\tloss\n");
        for (i, l) in losses.iter().enumerate() {
            writeln!(curve, "{i}\t{l}").unwrap();
        }
        out.add("loss_curve.tsv", curve);
    }

    out.add_bytes(
        "params.ckpt",
        checkpoint_to_bytes(&params, &checkpoint_header(&prepared.inputs, &prepared.hyper))?,
    );
    out.metric("train_nodes", train_pos.len() as f64);
    out.metric("val_nodes", val_pos.len() as f64);
    out.metric("test_nodes", test_pos.len() as f64);
    out.flush(Mode::Train, cfg)
}

// -------------------------------------------------------------- embed ----

fn run_embed(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let (train_pos, _, _) = split_positions(&prepared.inputs, cfg);
    let (params, _) = obtain_params(cfg, &prepared.inputs, &prepared.hyper, &train_pos)?;
    let (table, _) = embed_all(&prepared.inputs, &params, &prepared.hyper)?;

    let mut out = Outputs::new(&cfg.output.dir);
    out.add("embeddings.tsv", io::render_embeddings(&table));
    let labels: Vec<(NodeId, u16)> = prepared
        .inputs
        .nodes
        .iter()
        .zip(&prepared.inputs.labels)
        .filter_map(|(&n, l)| l.map(|l| (n, l)))
        .collect();
    out.add("embedding_labels.tsv", io::render_label_sidecar(&labels));
    out.metric("embedded_nodes", table.nodes.len() as f64);
    out.metric("embed_dim", table.embed_dim as f64);
    out.flush(Mode::Embed, cfg)
}

// ---------------------------------------------------------- influence ----

fn run_influence(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let (train_pos, _, _) = split_positions(&prepared.inputs, cfg);
    let (params, _) = obtain_params(cfg, &prepared.inputs, &prepared.hyper, &train_pos)?;
    let (_, snapshot) = embed_all(&prepared.inputs, &params, &prepared.hyper)?;

    let scores = compute_influence_suite(&prepared.inputs, &snapshot)?;
    let mut out = Outputs::new(&cfg.output.dir);
    out.add("influence.tsv", influence_table(&prepared.inputs, &scores));
    let intersection = intersection_table(&scores, &mut out.metrics)?;
    out.add("intersection.tsv", intersection);
    out.flush(Mode::Influence, cfg)
}

pub struct InfluenceSuite {
    pub nac: InfluenceScores,
    pub dc: InfluenceScores,
    pub bc: InfluenceScores,
    pub cc: InfluenceScores,
    pub ec: InfluenceScores,
}

/// NAC plus the four centrality baselines on the first meta-path's
/// co-occurrence projection (the co-authorship path by convention).
pub fn compute_influence_suite(
    inputs: &ModelInputs,
    snapshot: &AttentionSnapshot,
) -> Result<InfluenceSuite> {
    let nac = nac_influence(inputs, snapshot);
    let projection = Projection::from_adjacency(&inputs.adjacencies()[0]);
    Ok(InfluenceSuite {
        nac,
        dc: centrality(&projection, CentralityKind::Degree)?,
        bc: centrality(&projection, CentralityKind::Betweenness)?,
        cc: centrality(&projection, CentralityKind::Closeness)?,
        ec: centrality(&projection, CentralityKind::Eigenvector)?,
    })
}

fn influence_table(inputs: &ModelInputs, s: &InfluenceSuite) -> String {
    let mut tsv = String::from("node_id\tnac\tdc\tbc\tcc\tec\n");
    for &node in &inputs.nodes {
        writeln!(
            tsv,
            "{node}\t{}\t{}\t{}\t{}\t{}",
            s.nac.score_of(node).unwrap(),
            s.dc.score_of(node).unwrap(),
            s.bc.score_of(node).unwrap(),
            s.cc.score_of(node).unwrap(),
            s.ec.score_of(node).unwrap(),
        )
        .unwrap();
    }
    tsv
}

fn intersection_table(
    s: &InfluenceSuite,
    metrics: &mut BTreeMap<String, f64>,
) -> Result<String> {
    let mut tsv = String::from("k\tsub_dc\tsub_bc\tsub_cc\tsub_ec\n");
    for k in [5usize, 10, 15, 20, 25] {
        if k > s.nac.len() {
            continue;
        }
        let dc = topk_intersection(&s.nac, &s.dc, k)?;
        let bc = topk_intersection(&s.nac, &s.bc, k)?;
        let cc = topk_intersection(&s.nac, &s.cc, k)?;
        let ec = topk_intersection(&s.nac, &s.ec, k)?;
        writeln!(tsv, "{k}\t{dc}\t{bc}\t{cc}\t{ec}").unwrap();
        metrics.insert(format!("sub_dc_k{k}"), dc);
        metrics.insert(format!("sub_bc_k{k}"), bc);
        metrics.insert(format!("sub_cc_k{k}"), cc);
        metrics.insert(format!("sub_ec_k{k}"), ec);
    }
    Ok(tsv)
}

// -------------------------------------------------------------- teams ----

fn run_teams(cfg: &RunConfig, eval_only: bool) -> Result<()> {
    let path = cfg
        .graph
        .path
        .as_ref()
        .context("config error: graph.path is required for this mode")?;
    if !path.exists() {
        bail!("config error: graph.path {} does not exist", path.display());
    }
    let graph = io::read_graph(path)?;
    let truth_rows = match &cfg.graph.truth {
        Some(p) => Some(io::read_truth(p)?),
        None if eval_only => bail!("config error: eval requires graph.truth"),
        None => None,
    };

    let result = identify_on_graph(cfg, &graph)?;

    let mut out = Outputs::new(&cfg.output.dir);
    if !eval_only {
        out.add("teams.tsv", team_report(&graph, &result));
        out.add("team_summary.tsv", team_summary(&result.partition));
    }
    out.metric("teams", result.partition.teams.len() as f64);
    out.metric("residual", result.partition.residual.len() as f64);
    out.metric("retained_authors", result.retained_authors as f64);

    if let Some(rows) = truth_rows {
        let tsv = nmi_report(&result, &rows, &mut out.metrics)?;
        out.add("nmi.tsv", tsv);
    }
    out.flush(if eval_only { Mode::Eval } else { Mode::Teams }, cfg)
}

pub struct TeamsResult {
    /// Teams with members translated back to original node ids.
    pub partition: TeamPartition,
    pub retained_authors: usize,
    /// original id of each retained author (filtered-graph order).
    pub universe: Vec<NodeId>,
}

/// The whole identification pipeline: prefilter, retrain on the filtered
/// graph, embed, score influence, extract teams, translate ids back.
pub fn identify_on_graph(cfg: &RunConfig, graph: &HeterogeneousGraph) -> Result<TeamsResult> {
    let author_type = graph
        .node_type_id(&cfg.meta_paths.target_type)
        .with_context(|| {
            format!(
                "config error: target type {:?} not in graph",
                cfg.meta_paths.target_type
            )
        })?;
    let identify_cfg = cfg.identify.to_core();
    let (filtered, remap) = prefilter_graph(graph, author_type, &identify_cfg)?;
    let reverse: BTreeMap<NodeId, NodeId> = remap
        .iter()
        .enumerate()
        .filter_map(|(old, new)| new.map(|n| (n, old as NodeId)))
        .collect();

    let inputs = build_inputs(&filtered, cfg)?;
    let hyper = cfg.model.hyperparams(cfg.seed);
    let (train_pos, _, _) = split_positions(&inputs, cfg);
    let (params, _) = obtain_params(cfg, &inputs, &hyper, &train_pos)?;
    let (table, snapshot) = embed_all(&inputs, &params, &hyper)?;
    let influence = nac_influence(&inputs, &snapshot);
    let partition = identify_teams(&inputs, &table, &influence, &snapshot, &identify_cfg)?;

    // Translate back to original ids for reporting and evaluation.
    let tr = |id: NodeId| reverse[&id];
    let partition = TeamPartition {
        teams: partition
            .teams
            .into_iter()
            .map(|t| hinforge_core::team::Team {
                leader: tr(t.leader),
                core_members: t.core_members.iter().map(|&m| tr(m)).collect(),
                non_core_members: t.non_core_members.iter().map(|&m| tr(m)).collect(),
            })
            .collect(),
        residual: partition.residual.iter().map(|&m| tr(m)).collect(),
    };
    let universe: Vec<NodeId> = inputs.nodes.iter().map(|&n| tr(n)).collect();
    Ok(TeamsResult {
        retained_authors: universe.len(),
        partition,
        universe,
    })
}

fn team_report(graph: &HeterogeneousGraph, result: &TeamsResult) -> String {
    let mut tsv = String::from("team_id\trole\tnode_id\tdisplay_name\n");
    let name = |id: NodeId| {
        graph
            .node(id)
            .display_name
            .clone()
            .unwrap_or_else(|| format!("node{id}"))
    };
    for (tid, team) in result.partition.teams.iter().enumerate() {
        writeln!(tsv, "{tid}\tleader\t{}\t{}", team.leader, name(team.leader)).unwrap();
        for &m in &team.core_members {
            writeln!(tsv, "{tid}\tcore\t{m}\t{}", name(m)).unwrap();
        }
        for &m in &team.non_core_members {
            writeln!(tsv, "{tid}\tnon_core\t{m}\t{}", name(m)).unwrap();
        }
    }
    for &m in &result.partition.residual {
        writeln!(tsv, "-\tresidual\t{m}\t{}", name(m)).unwrap();
    }
    tsv
}

fn team_summary(partition: &TeamPartition) -> String {
    let mut tsv = String::from("team_id\tleader\tsize\tcore_members\tnon_core_members\n");
    for (tid, team) in partition.teams.iter().enumerate() {
        writeln!(
            tsv,
            "{tid}\t{}\t{}\t{}\t{}",
            team.leader,
            team.size(),
            team.core_members.len(),
            team.non_core_members.len()
        )
        .unwrap();
    }
    tsv
}

/// NMI of the full partition plus NMI over the top-K teams for
/// K in {5, 10, 15, 20}: the universe is the member set of those K teams
/// and the ground truth is restricted to it.
fn nmi_report(
    result: &TeamsResult,
    truth_rows: &[(NodeId, u32)],
    metrics: &mut BTreeMap<String, f64>,
) -> Result<String> {
    let truth_of: BTreeMap<NodeId, u32> = truth_rows.iter().copied().collect();
    let restrict = |universe: &[NodeId]| -> Vec<Vec<NodeId>> {
        let mut clusters: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
        for &node in universe {
            if let Some(&team) = truth_of.get(&node) {
                clusters.entry(team).or_default().push(node);
            }
        }
        clusters.into_values().collect()
    };

    let mut tsv = String::from("k\tnmi\n");
    // Full-partition score over every retained author present in the truth.
    let full_universe: Vec<NodeId> = result
        .universe
        .iter()
        .copied()
        .filter(|n| truth_of.contains_key(n))
        .collect();
    let full_truth = restrict(&full_universe);
    let keep = |members: &[NodeId]| -> Vec<NodeId> {
        members
            .iter()
            .copied()
            .filter(|n| truth_of.contains_key(n))
            .collect()
    };
    let full_pred: Vec<Vec<NodeId>> = result
        .partition
        .clusters()
        .into_iter()
        .map(|c| keep(&c))
        .filter(|c| !c.is_empty())
        .collect();
    let overall = nmi(&full_pred, &full_truth)?;
    writeln!(tsv, "all\t{overall}").unwrap();
    metrics.insert("nmi_all".to_string(), overall);

    for k in [5usize, 10, 15, 20] {
        let taken = result.partition.teams.iter().take(k);
        let pred: Vec<Vec<NodeId>> = taken
            .map(|t| keep(&t.members()))
            .filter(|c| !c.is_empty())
            .collect();
        if pred.is_empty() {
            continue;
        }
        let universe: Vec<NodeId> = pred.iter().flatten().copied().collect();
        let truth_k = restrict(&universe);
        let value = nmi(&pred, &truth_k)?;
        writeln!(tsv, "{k}\t{value}").unwrap();
        metrics.insert(format!("nmi_k{k}"), value);
    }
    Ok(tsv)
}

// ----------------------------------------------------------- fedtrain ----

fn run_fedtrain(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let (train_pos, val_pos, _) = split_positions(&prepared.inputs, cfg);
    if train_pos.is_empty() {
        bail!("config error: no labeled nodes fall into the training split");
    }
    let hyper = clamp_batch(&prepared.hyper, train_pos.len());
    let (records, params) = federated_run(cfg, &prepared.inputs, &hyper, &train_pos, &val_pos)?;

    let mut out = Outputs::new(&cfg.output.dir);
    let mut tsv = String::from("round\tworker_events\tglobal_loss\tval_micro_f1\n");
    for r in &records {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}",
            r.round, r.events, r.global_loss, r.val_micro_f1
        )
        .unwrap();
    }
    out.add("fed_rounds.tsv", tsv);
    if let Some(last) = records.last() {
        out.metric("final_global_loss", last.global_loss);
        out.metric("final_val_micro_f1", last.val_micro_f1);
    }
    out.add_bytes(
        "fed_params.ckpt",
        checkpoint_to_bytes(&params, &checkpoint_header(&prepared.inputs, &hyper))?,
    );
    out.flush(Mode::FedTrain, cfg)
}

fn federated_run(
    cfg: &RunConfig,
    inputs: &ModelInputs,
    hyper: &Hyperparams,
    train_pos: &[usize],
    val_pos: &[usize],
) -> Result<(Vec<hinforge_core::fed::RoundRecord>, ModelParams)> {
    let buckets = partition_by_hash(
        inputs,
        train_pos,
        cfg.fed.clients,
        derive_seed(cfg.seed, "partition"),
    );
    let speeds = cfg.worker_speeds();
    let profiles: Vec<WorkerProfile> = buckets
        .into_iter()
        .enumerate()
        .map(|(worker_id, positions)| WorkerProfile {
            worker_id,
            positions,
            round_period: speeds[worker_id],
        })
        .collect();
    if profiles.iter().any(|p| p.positions.is_empty()) {
        bail!(
            "config error: the hash partition left a worker without labeled nodes; \
             lower fed.clients or change the seed"
        );
    }
    let sim = SimConfig {
        alpha: cfg.fed.alpha,
        threshold: cfg.fed.threshold,
        rounds: cfg.fed.rounds,
        async_mode: cfg.fed.async_mode,
    };
    let (params, records) = run_simulation(inputs, hyper, &profiles, &sim, val_pos)
        .map_err(|e| anyhow::anyhow!("simulation failed: {e}"))?;
    Ok((records, params))
}

// -------------------------------------------------------- sensitivity ----

fn run_sensitivity(cfg: &RunConfig) -> Result<()> {
    let prepared = prepare(cfg)?;
    let (train_pos, val_pos, _) = split_positions(&prepared.inputs, cfg);
    if train_pos.is_empty() {
        bail!("config error: no labeled nodes fall into the training split");
    }

    let mut out = Outputs::new(&cfg.output.dir);
    for epochs in [1usize, 3, 5] {
        for batch in [64usize, 128, 256] {
            let hyper = clamp_batch(
                &Hyperparams {
                    epochs,
                    batch_size: batch,
                    seed: derive_seed(cfg.seed, &format!("cell-e{epochs}-B{batch}")),
                    ..prepared.hyper.clone()
                },
                train_pos.len(),
            );
            let (records, _) = federated_run(cfg, &prepared.inputs, &hyper, &train_pos, &val_pos)?;
            let mut tsv = String::from("round\tglobal_loss\tval_micro_f1\n");
            for r in &records {
                writeln!(tsv, "{}\t{}\t{}", r.round, r.global_loss, r.val_micro_f1).unwrap();
            }
            out.add(&format!("sensitivity_e{epochs}_B{batch}.tsv"), tsv);
            if let Some(last) = records.last() {
                out.metric(&format!("final_loss_e{epochs}_B{batch}"), last.global_loss);
                out.metric(
                    &format!("final_val_micro_f1_e{epochs}_B{batch}"),
                    last.val_micro_f1,
                );
            }
        }
    }
    out.flush(Mode::Sensitivity, cfg)
}
