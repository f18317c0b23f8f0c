//! Acceptance suite. One test per criterion; each prints a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`). Criteria
//! that drive the CLI use the compiled binary; numeric criteria run the
//! library in-process. Every tolerance is pinned here.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha12Rng};

use hinforge_core::autodiff::finite_difference_check;
use hinforge_core::fed::{run_simulation, ServerState, SimConfig, WorkerProfile};
use hinforge_core::graph::{
    GraphBuilder, HeterogeneousGraph, MetaPath, MetaPathAdjacency, NodeId,
};
use hinforge_core::model::{
    embed_all, ForwardPass, Hyperparams, ModelError, ModelInputs, ModelParams, TrainContext,
};
use hinforge_core::team::nmi;

/// The committed evaluation seeds for every seed-averaged criterion.
const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn out_root(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hinforge-acceptance-{name}"));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).ok();
    }
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hinforge")
}

/// Shared planted-generator settings (teams, sizes, p_in, p_out are the
/// pinned evaluation family; papers-per-team is the calibrated free knob).
fn config_toml(root: &Path, seed: u64, meta_paths: &str, model: &str, identify: &str) -> String {
    format!(
        r#"schema_version = 1
seed = {seed}

[graph]
path = "{root}/out/graph.tsv"
truth = "{root}/out/truth.tsv"

[meta_paths]
target_type = "author"
paths = {meta_paths}

[model]
{model}

[identify]
{identify}

[synthetic]
teams = 5
team_size = [8, 15]
papers_per_team = [5, 8]
p_in = 0.6
p_out = 0.02

[fed]
clients = 3
alpha = 0.5
threshold = 4
rounds = 3
speeds = [1, 1, 2]
async_mode = false

[output]
dir = "{root}/out"
"#,
        root = root.display(),
    )
}

const BOTH_PATHS: &str =
    r#"[["author","paper","author"], ["author","paper","venue","paper","author"]]"#;
const APA_ONLY: &str = r#"[["author","paper","author"]]"#;

const MODEL_DEFAULT: &str = "embed_dim = 8\nsemantic_dim = 4\nneighbor_cap = 10\nlearning_rate = 0.5\nepochs = 100\nbatch_size = 16";
const MODEL_FULL_NEIGHBORHOODS: &str = "embed_dim = 8\nsemantic_dim = 4\nneighbor_cap = 0\nlearning_rate = 0.5\nepochs = 100\nbatch_size = 16";

const IDENTIFY_OPEN: &str = "similar_count = 15\ninfluential_count = 10\nmin_publications = 0\nmin_coauthor_frequency = 0\nmax_teams = 0\nsingleton_teams = true";
const IDENTIFY_CALIBRATED: &str = "similar_count = 15\ninfluential_count = 10\nmin_publications = 1\nmin_coauthor_frequency = 3\nmax_teams = 0\nsingleton_teams = true";

fn run_cli(mode: &str, config: &Path) {
    let status = Command::new(bin())
        .args([mode, "--config"])
        .arg(config)
        .status()
        .expect("binary runs");
    assert!(status.success(), "hinforge {mode} failed");
}

fn manifest_metrics(out_dir: &Path) -> BTreeMap<String, f64> {
    let text = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["metrics"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_f64().unwrap()))
        .collect()
}

// =======================================================================
// Criterion 1: gradient correctness on a random 30-node instance.
// =======================================================================

/// Exactly 30 nodes: 13 authors, 13 papers, 4 venues; three label classes.
fn random_30_node_instance(seed: u64) -> (HeterogeneousGraph, ModelInputs) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    let author = b.intern_node_type("author");
    let paper = b.intern_node_type("paper");
    let venue = b.intern_node_type("venue");
    let writes = b.intern_edge_type("writes");
    let published_in = b.intern_edge_type("published_in");
    let labels: Vec<u16> = (0..3).map(|i| b.intern_label(&format!("c{i}"))).collect();
    for id in 0..13u32 {
        let label = labels[rng.gen_range(0..3)];
        b.add_node(id, author, Some(label), None);
    }
    for p in 0..13u32 {
        b.add_node(13 + p, paper, None, None);
    }
    for v in 0..4u32 {
        b.add_node(26 + v, venue, None, None);
    }
    for p in 0..13u32 {
        b.add_edge(rng.gen_range(0..13), 13 + p, writes);
        for a in 0..13u32 {
            if rng.gen_range(0.0..1.0) < 0.25 {
                b.add_edge(a, 13 + p, writes);
            }
        }
        b.add_edge(13 + p, 26 + rng.gen_range(0..4), published_in);
    }
    let g = b.freeze().unwrap();
    let apa = MetaPath::from_type_names(&g, &["author", "paper", "author"]).unwrap();
    let apvpa =
        MetaPath::from_type_names(&g, &["author", "paper", "venue", "paper", "author"]).unwrap();
    let adjacencies = vec![
        MetaPathAdjacency::build(&g, &apa),
        MetaPathAdjacency::build(&g, &apvpa),
    ];
    let inputs = ModelInputs::new(&g, adjacencies).unwrap();
    (g, inputs)
}

fn full_batch(inputs: &ModelInputs) -> Vec<(usize, Vec<Vec<usize>>)> {
    inputs
        .labeled_positions()
        .into_iter()
        .map(|pos| {
            (
                pos,
                (0..inputs.path_count())
                    .map(|pi| inputs.neighbors_of(pi, pos).to_vec())
                    .collect(),
            )
        })
        .collect()
}

#[test]
fn acceptance_01_gradient_correctness() {
    let start = Instant::now();
    let (graph, inputs) = random_30_node_instance(20240901);
    assert_eq!(graph.node_count(), 30);
    let hyper = Hyperparams {
        embed_dim: 8,
        semantic_dim: 4,
        neighbor_cap: None,
        learning_rate: 0.1,
        epochs: 1,
        batch_size: 32,
        seed: 7,
    };
    let params = ModelParams::init(&inputs, &hyper);
    let batch = full_batch(&inputs);

    params.zero_grad();
    let mut pass = ForwardPass::new(&inputs, &params);
    let loss = pass.batch_loss(&batch).unwrap();
    pass.tape.backward(&loss).unwrap();

    let named = params.named_tensors();
    let report = finite_difference_check::<_, ModelError>(
        &named,
        || {
            let mut pass = ForwardPass::new(&inputs, &params);
            Ok(pass.batch_loss(&batch)?.scalar_value())
        },
        1e-5,
    )
    .unwrap();
    let elapsed = start.elapsed();

    let pass1 = report.max_rel_err < 1e-4;
    let pass2 = elapsed.as_secs() < 60;
    println!(
        "criterion 1 (gradient correctness): {} — max rel err {:.3e} over {} entries (tol 1e-4), runtime {:.1?} (< 60 s)",
        if pass1 && pass2 { "PASS" } else { "FAIL" },
        report.max_rel_err,
        report.entries_checked,
        elapsed,
    );
    assert!(pass1, "max relative error {:?}", report);
    assert!(pass2, "runtime {elapsed:?} exceeded 60 s");
}

// =======================================================================
// Criterion 2: attention normalization over 1000 random instances.
// =======================================================================

fn random_small_inputs(rng: &mut ChaCha12Rng) -> ModelInputs {
    let authors = rng.gen_range(3..=7u32);
    let papers = rng.gen_range(2..=5u32);
    let mut b = GraphBuilder::new();
    let author = b.intern_node_type("author");
    let paper = b.intern_node_type("paper");
    let writes = b.intern_edge_type("writes");
    let l0 = b.intern_label("c0");
    let l1 = b.intern_label("c1");
    for id in 0..authors {
        b.add_node(id, author, Some(if id % 2 == 0 { l0 } else { l1 }), None);
    }
    for p in 0..papers {
        b.add_node(authors + p, paper, None, None);
    }
    b.add_edge(0, authors, writes);
    for a in 0..authors {
        for p in 0..papers {
            if (a, p) != (0, 0) && rng.gen_range(0.0..1.0) < 0.55 {
                b.add_edge(a, authors + p, writes);
            }
        }
    }
    let g = b.freeze().unwrap();
    let apa = MetaPath::from_type_names(&g, &["author", "paper", "author"]).unwrap();
    ModelInputs::new(&g, vec![MetaPathAdjacency::build(&g, &apa)]).unwrap()
}

#[test]
fn acceptance_02_attention_normalization() {
    let mut rng = ChaCha12Rng::seed_from_u64(8899);
    let mut checked_rows = 0usize;
    for case in 0..1000 {
        let inputs = random_small_inputs(&mut rng);
        let hyper = Hyperparams {
            embed_dim: 4,
            semantic_dim: 3,
            neighbor_cap: None,
            learning_rate: 0.1,
            epochs: 1,
            batch_size: 8,
            seed: case,
        };
        let params = ModelParams::init(&inputs, &hyper);
        // Parameter magnitudes up to 1e3.
        for (_, t) in params.named_tensors() {
            let vals: Vec<f64> = (0..t.len()).map(|_| rng.gen_range(-1e3..1e3)).collect();
            t.set_values(&vals);
        }
        let (table, snapshot) = embed_all(&inputs, &params, &hyper)
            .unwrap_or_else(|e| panic!("case {case}: forward failed: {e}"));
        for rows in &snapshot.rows {
            for row in rows {
                if row.is_empty() {
                    continue;
                }
                let sum: f64 = row.iter().map(|(_, c)| c).sum();
                assert!(
                    (sum - 1.0).abs() < 1e-9 && sum.is_finite(),
                    "case {case}: node-level coefficients sum to {sum}"
                );
                assert!(row.iter().all(|(_, c)| c.is_finite() && *c >= 0.0));
                checked_rows += 1;
            }
        }
        for weights in &table.path_weights {
            let sum: f64 = weights.iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-9,
                "case {case}: semantic weights sum to {sum}"
            );
            assert!(weights.iter().all(|w| w.is_finite()));
        }
    }
    println!(
        "criterion 2 (attention normalization): PASS — 1000 random instances, {checked_rows} attention rows, sums within 1e-9, no NaN at magnitudes up to 1e3"
    );
}

// =======================================================================
// Criterion 3: oracle equivalence.
// =======================================================================

mod oracle {
    use super::*;

    pub struct PlainParams {
        pub w_f: Vec<Vec<Vec<f64>>>,
        pub w_c: Vec<Vec<Vec<f64>>>,
        pub w_p: Vec<Vec<f64>>,
        pub b_p: Vec<f64>,
        pub prefs: Vec<Vec<f64>>,
        pub w_cls: Vec<Vec<f64>>,
        pub b_cls: Vec<f64>,
    }

    pub fn extract(params: &ModelParams, paths: usize) -> PlainParams {
        let grab = |t: &hinforge_core::autodiff::Tensor| -> Vec<Vec<f64>> {
            let (rows, cols) = t.shape();
            let flat = t.to_vec();
            (0..rows)
                .map(|r| flat[r * cols..(r + 1) * cols].to_vec())
                .collect()
        };
        PlainParams {
            w_f: (0..paths).map(|i| grab(&params.per_path[i].w_f)).collect(),
            w_c: (0..paths).map(|i| grab(&params.per_path[i].w_c)).collect(),
            w_p: grab(&params.w_p),
            b_p: params.b_p.to_vec(),
            prefs: grab(&params.prefs),
            w_cls: grab(&params.w_cls),
            b_cls: params.b_cls.to_vec(),
        }
    }

    fn vec_mat(row: &[f64], m: &[Vec<f64>]) -> Vec<f64> {
        let cols = m[0].len();
        let mut out = vec![0.0; cols];
        for (x, mrow) in row.iter().zip(m) {
            for (o, v) in out.iter_mut().zip(mrow) {
                *o += x * v;
            }
        }
        out
    }

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na < 1e-12 || nb < 1e-12 {
            0.0
        } else {
            dot / (na * nb)
        }
    }

    fn softmax(x: &[f64]) -> Vec<f64> {
        let exps: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    pub struct Forward {
        pub fused: Vec<f64>,
        pub gamma: Vec<f64>,
        pub probs: Vec<f64>,
    }

    pub fn node_forward(inputs: &ModelInputs, p: &PlainParams, pos: usize) -> Forward {
        let m = inputs.path_count();
        let d = p.w_c[0][0].len();
        let mut per_path = Vec::with_capacity(m);
        for pi in 0..m {
            let z_i = vec_mat(inputs.adjacency_row(pi, pos), &p.w_f[pi]);
            let neighbors = inputs.neighbors_of(pi, pos);
            let agg = if neighbors.is_empty() {
                vec![0.0; d]
            } else {
                let z_js: Vec<Vec<f64>> = neighbors
                    .iter()
                    .map(|&j| vec_mat(inputs.adjacency_row(pi, j), &p.w_f[pi]))
                    .collect();
                let scores: Vec<f64> = z_js.iter().map(|z| cosine(&z_i, z)).collect();
                let coeffs = softmax(&scores);
                let mut acc = vec![0.0; z_i.len()];
                for (c, z) in coeffs.iter().zip(&z_js) {
                    for (a, v) in acc.iter_mut().zip(z) {
                        *a += c * v;
                    }
                }
                acc.into_iter().map(|v| v.max(0.0)).collect()
            };
            let spliced: Vec<f64> = agg.iter().chain(&z_i).copied().collect();
            per_path.push(vec_mat(&spliced, &p.w_c[pi]));
        }
        let scores: Vec<f64> = per_path
            .iter()
            .map(|h| {
                let lin = vec_mat(h, &p.w_p);
                let t: Vec<f64> = lin.iter().zip(&p.b_p).map(|(x, b)| (x + b).tanh()).collect();
                cosine(&p.prefs[pos], &t)
            })
            .collect();
        let gamma = softmax(&scores);
        let mut fused = vec![0.0; per_path[0].len()];
        for (g, h) in gamma.iter().zip(&per_path) {
            for (f, v) in fused.iter_mut().zip(h) {
                *f += g * v;
            }
        }
        let logits: Vec<f64> = vec_mat(&fused, &p.w_cls)
            .iter()
            .zip(&p.b_cls)
            .map(|(x, b)| x + b)
            .collect();
        Forward {
            fused,
            gamma,
            probs: softmax(&logits),
        }
    }

    /// Recursive enumeration of path instances.
    pub fn brute_counts(
        g: &HeterogeneousGraph,
        path: &MetaPath,
    ) -> Vec<BTreeMap<NodeId, u64>> {
        fn extend(
            g: &HeterogeneousGraph,
            path: &MetaPath,
            start: NodeId,
            current: NodeId,
            step: usize,
            weight: u64,
            tally: &mut BTreeMap<NodeId, u64>,
        ) {
            if step == path.node_types().len() - 1 {
                if current != start {
                    *tally.entry(current).or_insert(0) += weight;
                }
                return;
            }
            let a = path.node_types()[step];
            let bty = path.node_types()[step + 1];
            let pair = if a <= bty { (a, bty) } else { (bty, a) };
            let et = (0..g.edge_type_names().len())
                .map(|i| hinforge_core::graph::EdgeTypeId(i as u16))
                .find(|&et| g.edge_schema(et) == Some(pair))
                .unwrap();
            for &(nbr, mult) in g.neighbors(current, et) {
                if g.node_type_of(nbr) != bty || nbr == start {
                    continue;
                }
                extend(g, path, start, nbr, step + 1, weight * u64::from(mult), tally);
            }
        }
        g.nodes_of_type(path.start_type())
            .iter()
            .map(|&s| {
                let mut tally = BTreeMap::new();
                extend(g, path, s, s, 0, 1, &mut tally);
                tally
            })
            .collect()
    }

    /// Entropy-formula NMI.
    pub fn entropy_nmi(a: &[Vec<NodeId>], b: &[Vec<NodeId>]) -> f64 {
        let n: usize = a.iter().map(Vec::len).sum();
        let nf = n as f64;
        let label = |cl: &[Vec<NodeId>], id: NodeId| cl.iter().position(|c| c.contains(&id)).unwrap();
        let mut counts = vec![vec![0u64; b.len()]; a.len()];
        for &id in a.iter().flatten() {
            counts[label(a, id)][label(b, id)] += 1;
        }
        let joint: Vec<Vec<f64>> = counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / nf).collect())
            .collect();
        let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let pb: Vec<f64> = (0..b.len()).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
        let mut mi = 0.0;
        for (i, row) in joint.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                if p > 0.0 {
                    mi += p * (p / (pa[i] * pb[j])).ln();
                }
            }
        }
        let h = |d: &[f64]| -> f64 {
            -d.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
        };
        let denom = h(&pa) + h(&pb);
        if denom == 0.0 {
            return 1.0; // only reached for equal trivial partitions here
        }
        2.0 * mi / denom
    }
}

#[test]
fn acceptance_03_oracle_equivalence() {
    // (a) Forward + loss vs the straight-line oracle on a 10-node graph.
    let mut b = GraphBuilder::new();
    let author = b.intern_node_type("author");
    let paper = b.intern_node_type("paper");
    let venue = b.intern_node_type("venue");
    let writes = b.intern_edge_type("writes");
    let published_in = b.intern_edge_type("published_in");
    let red = b.intern_label("red");
    let blue = b.intern_label("blue");
    for id in 0..4 {
        b.add_node(id, author, Some(if id < 2 { red } else { blue }), None);
    }
    for id in 4..8 {
        b.add_node(id, paper, None, None);
    }
    b.add_node(8, venue, None, None);
    b.add_node(9, venue, None, None);
    for (a, p) in [(0, 4), (1, 4), (0, 5), (1, 5), (2, 6), (3, 6), (1, 7), (2, 7)] {
        b.add_edge(a, p, writes);
    }
    for (p, v) in [(4, 8), (5, 8), (7, 8), (6, 9)] {
        b.add_edge(p, v, published_in);
    }
    let g = b.freeze().unwrap();
    let apa = MetaPath::from_type_names(&g, &["author", "paper", "author"]).unwrap();
    let apvpa =
        MetaPath::from_type_names(&g, &["author", "paper", "venue", "paper", "author"]).unwrap();
    let inputs = ModelInputs::new(
        &g,
        vec![
            MetaPathAdjacency::build(&g, &apa),
            MetaPathAdjacency::build(&g, &apvpa),
        ],
    )
    .unwrap();
    let hyper = Hyperparams {
        embed_dim: 6,
        semantic_dim: 4,
        neighbor_cap: None,
        learning_rate: 0.1,
        epochs: 1,
        batch_size: 8,
        seed: 99,
    };
    let params = ModelParams::init(&inputs, &hyper);
    let plain = oracle::extract(&params, inputs.path_count());
    let (table, _) = embed_all(&inputs, &params, &hyper).unwrap();
    let mut max_forward_err = 0.0f64;
    for pos in 0..inputs.node_count() {
        let ofwd = oracle::node_forward(&inputs, &plain, pos);
        for (x, y) in table.fused[pos].iter().zip(&ofwd.fused) {
            max_forward_err = max_forward_err.max((x - y).abs());
        }
        for (x, y) in table.path_weights[pos].iter().zip(&ofwd.gamma) {
            max_forward_err = max_forward_err.max((x - y).abs());
        }
        let mut pass = ForwardPass::new(&inputs, &params);
        let samples: Vec<Vec<usize>> = (0..inputs.path_count())
            .map(|pi| inputs.neighbors_of(pi, pos).to_vec())
            .collect();
        let fwd = pass.node_forward(pos, &samples).unwrap();
        let probs = pass.classify(&fwd.fused).unwrap().to_vec();
        for (x, y) in probs.iter().zip(&ofwd.probs) {
            max_forward_err = max_forward_err.max((x - y).abs());
        }
    }
    let batch = full_batch(&inputs);
    let mut pass = ForwardPass::new(&inputs, &params);
    let loss = pass.batch_loss(&batch).unwrap().scalar_value();
    let oracle_loss: f64 = inputs
        .labeled_positions()
        .iter()
        .map(|&pos| {
            let fwd = oracle::node_forward(&inputs, &plain, pos);
            -fwd.probs[inputs.labels[pos].unwrap() as usize].ln()
        })
        .sum();
    max_forward_err = max_forward_err.max((loss - oracle_loss).abs());
    assert!(
        max_forward_err < 1e-12,
        "forward/loss oracle deviation {max_forward_err}"
    );

    // (b) Path-instance counts vs recursive enumeration (exact).
    let mut rng = ChaCha12Rng::seed_from_u64(777);
    let mut graphs_checked = 0;
    for _ in 0..50 {
        let gi = random_small_graph_with_venues(&mut rng);
        for names in [
            vec!["author", "paper", "author"],
            vec!["author", "paper", "venue", "paper", "author"],
        ] {
            let path = MetaPath::from_type_names(&gi, &names).unwrap();
            let expected = oracle::brute_counts(&gi, &path);
            let adj = MetaPathAdjacency::build(&gi, &path);
            for (pos, want) in expected.iter().enumerate() {
                let got: BTreeMap<NodeId, u64> = adj
                    .row(pos)
                    .iter()
                    .map(|e| (e.node, e.raw_count as u64))
                    .collect();
                assert_eq!(&got, want, "path counts diverged");
            }
        }
        graphs_checked += 1;
    }

    // (c) NMI vs the entropy oracle within 1e-10.
    let mut max_nmi_err = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=30usize);
        let a = random_partition(&mut rng, n, 5);
        let bpart = random_partition(&mut rng, n, 5);
        let got = nmi(&a, &bpart).unwrap();
        let want = oracle::entropy_nmi(&a, &bpart);
        max_nmi_err = max_nmi_err.max((got - want).abs());
    }
    assert!(max_nmi_err < 1e-10, "NMI oracle deviation {max_nmi_err}");

    // (d) Centralities vs brute force within 1e-8.
    let max_centrality_err = centrality_oracle_sweep(&mut rng, 40);
    assert!(
        max_centrality_err < 1e-8,
        "centrality oracle deviation {max_centrality_err}"
    );

    println!(
        "criterion 3 (oracle equivalence): PASS — forward/loss <= {max_forward_err:.2e} (tol 1e-12), path counts exact on {graphs_checked} graphs, NMI <= {max_nmi_err:.2e} (tol 1e-10), centralities <= {max_centrality_err:.2e} (tol 1e-8)"
    );
}

fn random_small_graph_with_venues(rng: &mut ChaCha12Rng) -> HeterogeneousGraph {
    let authors = rng.gen_range(2..=5u32);
    let papers = rng.gen_range(1..=4u32);
    let venues = rng.gen_range(1..=2u32);
    let mut b = GraphBuilder::new();
    let author = b.intern_node_type("author");
    let paper = b.intern_node_type("paper");
    let venue = b.intern_node_type("venue");
    let writes = b.intern_edge_type("writes");
    let published_in = b.intern_edge_type("published_in");
    for id in 0..authors {
        b.add_node(id, author, None, None);
    }
    for p in 0..papers {
        b.add_node(authors + p, paper, None, None);
    }
    for v in 0..venues {
        b.add_node(authors + papers + v, venue, None, None);
    }
    b.add_edge(0, authors, writes);
    for a in 0..authors {
        for p in 0..papers {
            if (a, p) != (0, 0) && rng.gen_range(0.0..1.0) < 0.5 {
                b.add_edge(a, authors + p, writes);
            }
        }
    }
    for p in 0..papers {
        b.add_edge(authors + p, authors + papers + rng.gen_range(0..venues), published_in);
    }
    b.freeze().unwrap()
}

fn random_partition(rng: &mut ChaCha12Rng, n: usize, max_clusters: usize) -> Vec<Vec<NodeId>> {
    let k = rng.gen_range(1..=max_clusters);
    let mut clusters = vec![Vec::new(); k];
    for id in 0..n as NodeId {
        clusters[rng.gen_range(0..k)].push(id);
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

/// Brute-force BC (path enumeration), CC (BFS sums), EC (dense symmetric
/// eigendecomposition) against the implementation on random projections.
fn centrality_oracle_sweep(rng: &mut ChaCha12Rng, cases: usize) -> f64 {
    use hinforge_core::influence::{centrality, CentralityKind, Projection};
    use std::collections::VecDeque;

    let mut max_err = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(2..=12usize);
        let mut neighbors = vec![Vec::new(); n];
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_range(0.0..1.0) < 0.4 {
                    neighbors[a].push(b);
                    neighbors[b].push(a);
                }
            }
        }
        let p = Projection {
            nodes: (0..n as NodeId).collect(),
            neighbors: neighbors.clone(),
        };

        let bfs = |src: usize| -> Vec<Option<u32>> {
            let mut dist = vec![None; n];
            dist[src] = Some(0);
            let mut q = VecDeque::from([src]);
            while let Some(v) = q.pop_front() {
                for &w in &neighbors[v] {
                    if dist[w].is_none() {
                        dist[w] = Some(dist[v].unwrap() + 1);
                        q.push_back(w);
                    }
                }
            }
            dist
        };

        // Betweenness by shortest-path enumeration.
        fn count_paths(
            neighbors: &[Vec<usize>],
            dist: &[Option<u32>],
            current: usize,
            target: usize,
            via: usize,
            passed: bool,
        ) -> (u64, u64) {
            if current == target {
                return (1, u64::from(passed));
            }
            let mut total = 0;
            let mut through = 0;
            for &w in &neighbors[current] {
                if dist[w] == Some(dist[current].unwrap() + 1)
                    && dist[w].unwrap() <= dist[target].unwrap()
                {
                    let (t, th) = count_paths(neighbors, dist, w, target, via, passed || w == via);
                    total += t;
                    through += th;
                }
            }
            (total, through)
        }
        let mut bc_want = vec![0.0f64; n];
        for s in 0..n {
            let dist = bfs(s);
            for t in (s + 1)..n {
                if dist[t].is_none() {
                    continue;
                }
                for via in 0..n {
                    if via == s || via == t {
                        continue;
                    }
                    let (total, through) = count_paths(&neighbors, &dist, s, t, via, false);
                    if total > 0 {
                        bc_want[via] += through as f64 / total as f64;
                    }
                }
            }
        }
        if n > 2 {
            let scale = 2.0 / ((n - 1) as f64 * (n - 2) as f64);
            for v in bc_want.iter_mut() {
                *v *= scale;
            }
        }
        let bc_got = centrality(&p, CentralityKind::Betweenness).unwrap();
        for (pos, want) in bc_want.iter().enumerate() {
            max_err = max_err.max((bc_got.score_of(pos as NodeId).unwrap() - want).abs());
        }

        // Harmonic closeness.
        let cc_got = centrality(&p, CentralityKind::Closeness).unwrap();
        for v in 0..n {
            let dist = bfs(v);
            let want: f64 = (0..n)
                .filter(|&w| w != v)
                .filter_map(|w| dist[w].map(|d| 1.0 / f64::from(d)))
                .sum::<f64>()
                / (n - 1).max(1) as f64;
            max_err = max_err.max((cc_got.score_of(v as NodeId).unwrap() - want).abs());
        }

        // Eigenvector via dense symmetric eigendecomposition.
        let mut comp_id = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for v in 0..n {
            if comp_id[v] != usize::MAX {
                continue;
            }
            let mut q = VecDeque::from([v]);
            comp_id[v] = comps.len();
            let mut members = vec![];
            while let Some(x) = q.pop_front() {
                members.push(x);
                for &w in &neighbors[x] {
                    if comp_id[w] == usize::MAX {
                        comp_id[w] = comps.len();
                        q.push_back(w);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        let comp = comps
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
            .unwrap();
        let m = comp.len();
        let mut ec_want = vec![0.0f64; n];
        if m == 1 {
            ec_want[comp[0]] = 1.0;
        } else {
            let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
            for (i, &v) in comp.iter().enumerate() {
                for &w in &neighbors[v] {
                    if let Some(j) = comp.iter().position(|&x| x == w) {
                        a[(i, j)] = 1.0;
                    }
                }
            }
            let eig = nalgebra::SymmetricEigen::new(a);
            let (top, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
                .unwrap();
            let mut vec: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
            if vec.iter().sum::<f64>() < 0.0 {
                for v in vec.iter_mut() {
                    *v = -*v;
                }
            }
            let norm = vec.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (i, &v) in comp.iter().enumerate() {
                ec_want[v] = (vec[i] / norm).max(0.0);
            }
        }
        let ec_got = centrality(&p, CentralityKind::Eigenvector).unwrap();
        for (pos, want) in ec_want.iter().enumerate() {
            max_err = max_err.max((ec_got.score_of(pos as NodeId).unwrap() - want).abs());
        }
    }
    max_err
}

// =======================================================================
// Criterion 4: aggregation algebra.
// =======================================================================

#[test]
fn acceptance_04_aggregation_algebra() {
    // Zero-gap case equals the arithmetic mean within 1e-12.
    let mut s = ServerState::new(3, 0.9, 4);
    for (id, v) in [(0, 1.0), (1, 5.0), (2, 12.0)] {
        s.submit_update(hinforge_core::fed::ClientUpdate {
            worker_id: id,
            parameters: vec![v, -v],
            trained_from_version: 1,
        })
        .unwrap();
    }
    let (w, _) = s.aggregate().unwrap();
    assert!((w[0] - 6.0).abs() < 1e-12 && (w[1] + 6.0).abs() < 1e-12);

    // alpha = 1, gaps {0, 1}: normalized weights (2/3, 1/3) within 1e-12.
    let mut s = ServerState::new(2, 1.0, 4);
    for id in 0..2 {
        s.submit_update(hinforge_core::fed::ClientUpdate {
            worker_id: id,
            parameters: vec![0.0],
            trained_from_version: 1,
        })
        .unwrap();
    }
    s.aggregate().unwrap();
    s.submit_update(hinforge_core::fed::ClientUpdate {
        worker_id: 0,
        parameters: vec![3.0],
        trained_from_version: 2,
    })
    .unwrap();
    let coeffs = s.normalized_coefficients().unwrap();
    assert!((coeffs[0] - 2.0 / 3.0).abs() < 1e-12);
    assert!((coeffs[1] - 1.0 / 3.0).abs() < 1e-12);

    // Coefficients positive and summing to 1 across random gap vectors.
    let mut rng = ChaCha12Rng::seed_from_u64(4141);
    for _ in 0..200 {
        let n = rng.gen_range(1..=6usize);
        let alpha = rng.gen_range(0.0..3.0);
        let mut s = ServerState::new(n, alpha, 4);
        for id in 0..n {
            s.submit_update(hinforge_core::fed::ClientUpdate {
                worker_id: id,
                parameters: vec![0.0],
                trained_from_version: 1,
            })
            .unwrap();
        }
        for _ in 0..rng.gen_range(0..6) {
            s.aggregate().unwrap();
            let resubmit = rng.gen_range(0..n);
            s.submit_update(hinforge_core::fed::ClientUpdate {
                worker_id: resubmit,
                parameters: vec![0.0],
                trained_from_version: s.version_latest(),
            })
            .unwrap();
        }
        let coeffs = s.normalized_coefficients().unwrap();
        let sum: f64 = coeffs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(coeffs.iter().all(|&c| c > 0.0));
    }

    // C = 1 federated run is trajectory-identical to centralized training.
    let (_, inputs) = random_30_node_instance(515151);
    let hyper = Hyperparams {
        embed_dim: 4,
        semantic_dim: 3,
        neighbor_cap: Some(5),
        learning_rate: 0.3,
        epochs: 2,
        batch_size: 8,
        seed: 61,
    };
    let labeled = inputs.labeled_positions();
    let profiles = vec![WorkerProfile {
        worker_id: 0,
        positions: labeled.clone(),
        round_period: 1,
    }];
    let sim = SimConfig {
        alpha: 0.5,
        threshold: 4,
        rounds: 4,
        async_mode: false,
    };
    let (fed_params, _) = run_simulation(&inputs, &hyper, &profiles, &sim, &[]).unwrap();
    let mut ctx = TrainContext::new(
        &inputs,
        hyper.clone(),
        ModelParams::init(&inputs, &hyper),
        labeled,
        "worker-0",
        false,
    )
    .unwrap();
    ctx.run_epochs(8).unwrap();
    let a = fed_params.flatten();
    let b = ctx.params.flatten();
    assert_eq!(a.len(), b.len());
    let identical = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
    assert!(identical, "C=1 trajectory diverged from centralized training");

    println!(
        "criterion 4 (aggregation algebra): PASS — zero-gap mean 1e-12, (2/3, 1/3) staleness weights 1e-12, coefficients positive/normalized over 200 random gap vectors, C=1 bit-identical to centralized"
    );
}

// =======================================================================
// Criterion 5: planted-team recovery.
// =======================================================================

#[test]
fn acceptance_05_planted_team_recovery() {
    let root = out_root("c5");
    let mut nmis = Vec::new();
    for &seed in &SEEDS {
        let started = Instant::now();
        let cfg_path = root.join(format!("cfg-{seed}.toml"));
        // Teams run on the co-authorship meta-path with the calibrated
        // co-author frequency threshold.
        std::fs::write(
            &cfg_path,
            config_toml(&root, seed, APA_ONLY, MODEL_DEFAULT, IDENTIFY_CALIBRATED),
        )
        .unwrap();
        run_cli("gen", &cfg_path);
        run_cli("eval", &cfg_path);
        let metrics = manifest_metrics(&root.join("out"));
        nmis.push(metrics["nmi_all"]);
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs() < 120,
            "seed {seed} took {elapsed:?} (budget 2 min)"
        );
    }
    let mean = nmis.iter().sum::<f64>() / nmis.len() as f64;
    let passed = mean >= 0.80;
    println!(
        "criterion 5 (planted-team recovery): {} — mean NMI {:.3} over seeds {:?} (threshold 0.80), per-seed {:?}",
        if passed { "PASS" } else { "FAIL" },
        mean,
        SEEDS,
        nmis.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
    );
    assert!(passed, "mean NMI {mean:.3} below 0.80: {nmis:?}");
}

// =======================================================================
// Criterion 6: classification ordering against the weak baselines.
// =======================================================================

#[test]
fn acceptance_06_classification_ordering() {
    let root = out_root("c6");
    let (mut ahine, mut majority, mut logistic) = (Vec::new(), Vec::new(), Vec::new());
    for &seed in &SEEDS {
        let cfg_path = root.join(format!("cfg-{seed}.toml"));
        std::fs::write(
            &cfg_path,
            config_toml(&root, seed, BOTH_PATHS, MODEL_DEFAULT, IDENTIFY_OPEN),
        )
        .unwrap();
        run_cli("gen", &cfg_path);
        run_cli("train", &cfg_path);
        let metrics = manifest_metrics(&root.join("out"));
        ahine.push(metrics["ahine_test_micro_f1"]);
        majority.push(metrics["majority_test_micro_f1"]);
        logistic.push(metrics["degree_logistic_test_micro_f1"]);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, m, l) = (mean(&ahine), mean(&majority), mean(&logistic));
    let passed = a >= m + 0.10 && a >= l + 0.10;
    println!(
        "criterion 6 (classification ordering): {} — test micro-F1 means over seeds {:?}: ahine {:.3}, majority {:.3}, degree-logistic {:.3} (margins {:.3}/{:.3}, required 0.10)",
        if passed { "PASS" } else { "FAIL" },
        SEEDS,
        a,
        m,
        l,
        a - m,
        a - l,
    );
    assert!(passed, "margins too small: ahine {a}, majority {m}, logistic {l}");
}

// =======================================================================
// Criterion 7: influence sanity.
// =======================================================================

#[test]
fn acceptance_07_influence_sanity() {
    let root = out_root("c7");
    let mut ec_wins = 0usize;
    let mut leader_hits = Vec::new();
    for &seed in &SEEDS {
        let cfg_path = root.join(format!("cfg-{seed}.toml"));
        std::fs::write(
            &cfg_path,
            config_toml(&root, seed, BOTH_PATHS, MODEL_FULL_NEIGHBORHOODS, IDENTIFY_OPEN),
        )
        .unwrap();
        run_cli("gen", &cfg_path);
        run_cli("influence", &cfg_path);
        let metrics = manifest_metrics(&root.join("out"));
        if metrics["sub_ec_k10"] >= metrics["sub_cc_k10"] {
            ec_wins += 1;
        }
        leader_hits.push(count_leader_hits(&root.join("out")));
    }

    let clause1 = ec_wins >= 4;
    let per_seed_ok = leader_hits.iter().filter(|&&h| h >= 3).count();
    let clause2 = per_seed_ok >= 4;
    println!(
        "criterion 7 (influence sanity): {} — EC>=CC on {ec_wins}/5 seeds (need >= 4) {}; NAC top-5 planted-leader hits per seed {:?}, >= 3 on {per_seed_ok}/5 seeds (need >= 4) {}",
        if clause1 && clause2 { "PASS" } else { "FAIL" },
        if clause1 { "[ok]" } else { "[failed]" },
        leader_hits,
        if clause2 { "[ok]" } else { "[failed]" },
    );
    assert!(clause1, "EC>=CC held on only {ec_wins}/5 seeds");
    assert!(
        clause2,
        "NAC top-5 contained >= 3 planted leaders on only {per_seed_ok}/5 seeds ({leader_hits:?}); \
         the highest-degree member is weakly identified in this planted family — see the run notes"
    );
}

/// Planted leaders are the highest-degree member per planted team on the
/// co-authorship projection (ties to the ascending node id); counts how
/// many land in the NAC top-5.
fn count_leader_hits(out_dir: &Path) -> usize {
    let graph = hinforge_core::io::read_graph(&out_dir.join("graph.tsv")).unwrap();
    let truth = hinforge_core::io::read_truth(&out_dir.join("truth.tsv")).unwrap();
    let apa = MetaPath::from_type_names(&graph, &["author", "paper", "author"]).unwrap();
    let adj = MetaPathAdjacency::build(&graph, &apa);
    let degree_of = |node: NodeId| -> usize {
        adj.start_position(node).map(|p| adj.row(p).len()).unwrap_or(0)
    };
    let mut teams: BTreeMap<u32, Vec<NodeId>> = BTreeMap::new();
    for (node, team) in truth {
        teams.entry(team).or_default().push(node);
    }
    let leaders: BTreeSet<NodeId> = teams
        .values()
        .map(|members| {
            members
                .iter()
                .copied()
                .max_by(|&a, &b| degree_of(a).cmp(&degree_of(b)).then(b.cmp(&a)))
                .unwrap()
        })
        .collect();

    let text = std::fs::read_to_string(out_dir.join("influence.tsv")).unwrap();
    let mut nac: Vec<(f64, NodeId)> = text
        .lines()
        .skip(1)
        .map(|line| {
            let mut f = line.split('\t');
            let node: NodeId = f.next().unwrap().parse().unwrap();
            let score: f64 = f.next().unwrap().parse().unwrap();
            (score, node)
        })
        .collect();
    nac.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    nac.iter()
        .take(5)
        .filter(|(_, n)| leaders.contains(n))
        .count()
}

// =======================================================================
// Criterion 8: determinism and formats.
// =======================================================================

#[test]
fn acceptance_08_determinism_and_formats() {
    let root = out_root("c8");
    let cfg_path = root.join("cfg.toml");
    std::fs::write(
        &cfg_path,
        config_toml(&root, 42, BOTH_PATHS, MODEL_DEFAULT, IDENTIFY_CALIBRATED),
    )
    .unwrap();
    let out_dir = root.join("out");

    let modes = [
        "gen",
        "train",
        "embed",
        "influence",
        "teams",
        "eval",
        "fedtrain",
        "sensitivity",
    ];
    // gen must run first so the graph exists for the rest.
    run_cli("gen", &cfg_path);
    let mut checked_files = 0usize;
    for mode in modes {
        run_cli(mode, &cfg_path);
        let first: BTreeMap<String, Vec<u8>> = snapshot_dir(&out_dir);
        run_cli(mode, &cfg_path);
        let second = snapshot_dir(&out_dir);
        assert_eq!(
            first.keys().collect::<Vec<_>>(),
            second.keys().collect::<Vec<_>>(),
            "{mode}: file sets differ between runs"
        );
        for (name, bytes) in &first {
            assert_eq!(
                bytes,
                &second[name],
                "{mode}: {name} differs between identically-seeded runs"
            );
        }
        checked_files += first.len();
    }

    // Checkpoint round-trips bit-exactly.
    let (params, header) = hinforge_core::model::load_checkpoint(&out_dir.join("params.ckpt")).unwrap();
    let rewritten = hinforge_core::model::checkpoint_to_bytes(&params, &header).unwrap();
    let original = std::fs::read(out_dir.join("params.ckpt")).unwrap();
    assert_eq!(original, rewritten, "checkpoint round-trip not bit-exact");

    // Embedding TSV round-trips exactly (value-level).
    let rows = hinforge_core::io::read_embeddings(&out_dir.join("embeddings.tsv")).unwrap();
    let text = std::fs::read_to_string(out_dir.join("embeddings.tsv")).unwrap();
    for (line, (node, values)) in text.lines().skip(1).zip(&rows) {
        let mut rendered = node.to_string();
        for v in values {
            rendered.push('\t');
            rendered.push_str(&format!("{v}"));
        }
        assert_eq!(line, rendered, "embedding row lost precision");
    }

    println!(
        "criterion 8 (determinism & formats): PASS — {} files byte-identical across re-runs of {} modes; checkpoint and embedding TSV round-trip exactly",
        checked_files,
        modes.len(),
    );
}

fn snapshot_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                std::fs::read(entry.path()).unwrap(),
            );
        }
    }
    out
}

// =======================================================================
// Criterion 9: sensitivity harness.
// =======================================================================

#[test]
fn acceptance_09_sensitivity_harness() {
    let root = out_root("c9");
    let cfg_path = root.join("cfg.toml");
    std::fs::write(
        &cfg_path,
        config_toml(&root, 42, BOTH_PATHS, MODEL_DEFAULT, IDENTIFY_OPEN),
    )
    .unwrap();
    run_cli("gen", &cfg_path);
    run_cli("sensitivity", &cfg_path);

    let out_dir = root.join("out");
    let mut curves = 0usize;
    for epochs in [1usize, 3, 5] {
        for batch in [64usize, 128, 256] {
            let path = out_dir.join(format!("sensitivity_e{epochs}_B{batch}.tsv"));
            assert!(path.exists(), "missing curve file {}", path.display());
            let text = std::fs::read_to_string(&path).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some("round\tglobal_loss\tval_micro_f1"));
            let mut rows = 0;
            for line in lines {
                let fields: Vec<&str> = line.split('\t').collect();
                assert_eq!(fields.len(), 3, "bad row in {}", path.display());
                let loss: f64 = fields[1].parse().unwrap();
                let f1: f64 = fields[2].parse().unwrap();
                assert!(loss.is_finite());
                assert!(f1.is_finite());
                rows += 1;
            }
            assert!(rows >= 1, "empty curve {}", path.display());
            curves += 1;
        }
    }
    assert_eq!(curves, 9);
    println!(
        "criterion 9 (sensitivity harness): PASS — 9 loss/F1 curves emitted for the {{1,3,5}} x {{64,128,256}} grid"
    );
}
