//! Deterministic in-process federation loop.
//!
//! Workers are simulated training contexts over disjoint labeled-node
//! partitions of one shared frozen graph. The default schedule is
//! round-based with a barrier at each aggregation; the asynchronous mode
//! aggregates per arrival instead. Slow workers participate only every
//! `round_period`-th round. Before the first round every worker's initial
//! parameters are registered with the server so the staleness record is
//! fully populated from the start.

use serde::{Deserialize, Serialize};

use crate::model::{
    mean_loss, predict, Hyperparams, ModelError, ModelInputs, ModelParams, TrainContext,
};
use crate::rng::hash_unit;
use crate::team::f1_scores;

use super::{ClientUpdate, FedError, ServerState, SyncDecision};

/// A simulated worker: its labeled-node partition and how often it
/// participates (1 = every round, 2 = every second round, ...).
#[derive(Debug, Clone)]
pub struct WorkerProfile {
    pub worker_id: usize,
    pub positions: Vec<usize>,
    pub round_period: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub alpha: f64,
    pub threshold: u64,
    pub rounds: usize,
    /// Aggregate per arrival instead of per round barrier.
    pub async_mode: bool,
}

/// One simulation round: what happened, plus global-model metrics evaluated
/// after the round's final aggregation.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub round: usize,
    pub events: String,
    pub global_loss: f64,
    pub val_micro_f1: f64,
}

/// Splits labeled positions into `count` buckets by seeded hash of the node
/// id; depends only on (seed, node_id), never on iteration order.
pub fn partition_by_hash(
    inputs: &ModelInputs,
    positions: &[usize],
    count: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let mut buckets = vec![Vec::new(); count];
    for &pos in positions {
        let u = hash_unit(seed, u64::from(inputs.nodes[pos]));
        let b = ((u * count as f64) as usize).min(count - 1);
        buckets[b].push(pos);
    }
    buckets
}

#[derive(Debug)]
pub enum SimError {
    Fed(FedError),
    Model(ModelError),
}

impl std::fmt::Display for SimError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimError::Fed(e) => write!(f, "{e}"),
            SimError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<FedError> for SimError {
    fn from(e: FedError) -> Self {
        SimError::Fed(e)
    }
}

impl From<ModelError> for SimError {
    fn from(e: ModelError) -> Self {
        SimError::Model(e)
    }
}

/// Runs the federation and returns the final global parameters plus
/// per-round metric records. Deterministic given the seed in `hyper`.
pub fn run_simulation(
    inputs: &ModelInputs,
    hyper: &Hyperparams,
    profiles: &[WorkerProfile],
    sim: &SimConfig,
    val_positions: &[usize],
) -> Result<(ModelParams, Vec<RoundRecord>), SimError> {
    validate_profiles(inputs, profiles)?;
    if sim.rounds == 0 {
        return Err(FedError::InvalidConfig("rounds must be >= 1").into());
    }

    let mut server = ServerState::new(profiles.len(), sim.alpha, sim.threshold);
    let mut workers: Vec<TrainContext> = profiles
        .iter()
        .map(|p| {
            TrainContext::new(
                inputs,
                hyper.clone(),
                ModelParams::init(inputs, hyper),
                p.positions.clone(),
                &format!("worker-{}", p.worker_id),
                false,
            )
        })
        .collect::<Result<_, _>>()?;

    // Register initial weights so every staleness record is populated.
    for (id, w) in workers.iter().enumerate() {
        server.submit_update(ClientUpdate {
            worker_id: id,
            parameters: w.params.flatten(),
            trained_from_version: server.version_latest(),
        })?;
    }

    let all_train: Vec<usize> = {
        let mut v: Vec<usize> = profiles.iter().flat_map(|p| p.positions.clone()).collect();
        v.sort_unstable();
        v
    };
    let eval_params = ModelParams::init(inputs, hyper);
    let mut global = eval_params.flatten();

    let mut records = Vec::with_capacity(sim.rounds);
    for round in 1..=sim.rounds {
        let mut events: Vec<String> = Vec::new();
        let active: Vec<usize> = profiles
            .iter()
            .filter(|p| (round as u32 - 1) % p.round_period == 0)
            .map(|p| p.worker_id)
            .collect();

        if sim.async_mode {
            for &id in &active {
                let trained_from = server.version_latest();
                workers[id].run_epochs(hyper.epochs)?;
                events.push(format!("train({id})"));
                server.submit_update(ClientUpdate {
                    worker_id: id,
                    parameters: workers[id].params.flatten(),
                    trained_from_version: trained_from,
                })?;
                let (agg, version) = server.aggregate()?;
                events.push(format!("agg(v{version})"));
                match server.post_aggregate_sync() {
                    SyncDecision::BroadcastAll => {
                        events.push("bcast".to_string());
                        for w in workers.iter_mut() {
                            w.params.unflatten(&agg);
                        }
                    }
                    SyncDecision::SendToSubmitter(w) => {
                        events.push(format!("send({w})"));
                        workers[w].params.unflatten(&agg);
                    }
                }
                global = agg;
            }
        } else {
            for &id in &active {
                let trained_from = server.version_latest();
                workers[id].run_epochs(hyper.epochs)?;
                events.push(format!("train({id})"));
                server.submit_update(ClientUpdate {
                    worker_id: id,
                    parameters: workers[id].params.flatten(),
                    trained_from_version: trained_from,
                })?;
            }
            if !active.is_empty() {
                let (agg, version) = server.aggregate()?;
                events.push(format!("agg(v{version})"));
                match server.post_aggregate_sync() {
                    SyncDecision::BroadcastAll => {
                        events.push("bcast".to_string());
                        for w in workers.iter_mut() {
                            w.params.unflatten(&agg);
                        }
                    }
                    SyncDecision::SendToSubmitter(_) => {
                        // Round barrier: every submitter of this round
                        // receives the reply.
                        events.push(format!(
                            "send({})",
                            active
                                .iter()
                                .map(|i| i.to_string())
                                .collect::<Vec<_>>()
                                .join(",")
                        ));
                        for &id in &active {
                            workers[id].params.unflatten(&agg);
                        }
                    }
                }
                global = agg;
            }
        }

        eval_params.unflatten(&global);
        let global_loss = mean_loss(inputs, &eval_params, &all_train)?;
        let val_micro_f1 = if val_positions.is_empty() {
            f64::NAN
        } else {
            let preds = predict(inputs, &eval_params, val_positions)?;
            let truth: Vec<u16> = val_positions
                .iter()
                .map(|&p| inputs.labels[p].unwrap())
                .collect();
            let (micro, _) = f1_scores(&preds, &truth).expect("equal lengths");
            micro
        };
        records.push(RoundRecord {
            round,
            events: events.join(";"),
            global_loss,
            val_micro_f1,
        });
    }

    eval_params.unflatten(&global);
    Ok((eval_params, records))
}

fn validate_profiles(inputs: &ModelInputs, profiles: &[WorkerProfile]) -> Result<(), FedError> {
    if profiles.is_empty() {
        return Err(FedError::InvalidConfig("at least one worker required"));
    }
    let mut seen = vec![false; inputs.node_count()];
    for (i, p) in profiles.iter().enumerate() {
        if p.worker_id != i {
            return Err(FedError::InvalidConfig("worker ids must be dense 0..C"));
        }
        if p.round_period == 0 {
            return Err(FedError::InvalidConfig("round_period must be >= 1"));
        }
        if p.positions.is_empty() {
            return Err(FedError::InvalidPartition);
        }
        for &pos in &p.positions {
            if pos >= seen.len() || seen[pos] || inputs.labels[pos].is_none() {
                return Err(FedError::InvalidPartition);
            }
            seen[pos] = true;
        }
    }
    Ok(())
}
