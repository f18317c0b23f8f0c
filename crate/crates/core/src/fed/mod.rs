//! Simulated parameter server with staleness-weighted versioned
//! aggregation.
//!
//! The server keeps, per worker, the latest submitted flattened parameter
//! vector and the version it was credited against. Aggregation weights each
//! worker by `(gap + 1)^(-alpha)` where `gap = version_latest - credited
//! version`, normalizes the coefficients to sum to 1, then advances
//! `version_latest` by exactly 1. After each aggregation the server either
//! broadcasts to everyone (some gap exceeded the threshold, strictly) or
//! sends only to the submitter that triggered it.

mod sim;

pub use sim::{partition_by_hash, run_simulation, RoundRecord, SimConfig, SimError, WorkerProfile};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FedError {
    #[error("worker {0} is not registered (worker count {1})")]
    UnknownWorker(usize, usize),
    #[error("update length {got} does not match server shape {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("worker {0} has not submitted yet; aggregation needs every worker")]
    MissingWorkerUpdate(usize),
    #[error("partitions must cover every labeled node exactly once")]
    InvalidPartition,
    #[error("simulation config: {0}")]
    InvalidConfig(&'static str),
}

/// A worker's submission: its id, flattened parameters, and the
/// `version_latest` value it trained from.
#[derive(Debug, Clone)]
pub struct ClientUpdate {
    pub worker_id: usize,
    pub parameters: Vec<f64>,
    pub trained_from_version: u64,
}

/// Which workers receive parameters after an aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncDecision {
    /// Some version gap exceeded the threshold: push latest weights to all.
    BroadcastAll,
    /// Within the gap budget: reply only to the triggering submitter.
    SendToSubmitter(usize),
}

#[derive(Debug, Clone)]
pub struct ServerState {
    weights: Vec<Option<Vec<f64>>>,
    versions: Vec<u64>,
    version_latest: u64,
    threshold: u64,
    alpha: f64,
    dim: Option<usize>,
    /// (max gap, submitter) snapshot taken by the most recent aggregation.
    last_aggregation: Option<(u64, usize)>,
    last_submitter: Option<usize>,
}

impl ServerState {
    pub fn new(worker_count: usize, alpha: f64, threshold: u64) -> Self {
        Self {
            weights: vec![None; worker_count],
            versions: vec![0; worker_count],
            version_latest: 1,
            threshold,
            alpha,
            dim: None,
            last_aggregation: None,
            last_submitter: None,
        }
    }

    pub fn worker_count(&self) -> usize {
        self.weights.len()
    }

    pub fn version_latest(&self) -> u64 {
        self.version_latest
    }

    pub fn version_of(&self, worker: usize) -> u64 {
        self.versions[worker]
    }

    /// Overwrites the worker's stored vector (no blending) and credits it
    /// against the current `version_latest`.
    pub fn submit_update(&mut self, update: ClientUpdate) -> Result<(), FedError> {
        let n = self.weights.len();
        if update.worker_id >= n {
            return Err(FedError::UnknownWorker(update.worker_id, n));
        }
        if let Some(dim) = self.dim {
            if update.parameters.len() != dim {
                return Err(FedError::ShapeMismatch {
                    expected: dim,
                    got: update.parameters.len(),
                });
            }
        } else {
            self.dim = Some(update.parameters.len());
        }
        self.weights[update.worker_id] = Some(update.parameters);
        self.versions[update.worker_id] = self.version_latest;
        self.last_submitter = Some(update.worker_id);
        Ok(())
    }

    /// Staleness coefficients `(gap + 1)^(-alpha)`, normalized to sum to 1,
    /// in ascending worker order. Exposed for inspection and tests.
    pub fn normalized_coefficients(&self) -> Result<Vec<f64>, FedError> {
        let mut raw = Vec::with_capacity(self.weights.len());
        for (i, w) in self.weights.iter().enumerate() {
            if w.is_none() {
                return Err(FedError::MissingWorkerUpdate(i));
            }
            let gap = self.version_latest - self.versions[i];
            raw.push(((gap + 1) as f64).powf(-self.alpha));
        }
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|c| c / total).collect())
    }

    /// Staleness-weighted normalized aggregate; advances `version_latest`
    /// by 1 and snapshots the sync decision inputs. Summation runs in fixed
    /// ascending worker order.
    pub fn aggregate(&mut self) -> Result<(Vec<f64>, u64), FedError> {
        let coeffs = self.normalized_coefficients()?;
        let dim = self.dim.expect("coefficients imply submissions");
        let mut out = vec![0.0; dim];
        for (i, coeff) in coeffs.iter().enumerate() {
            let w = self.weights[i].as_ref().unwrap();
            for (o, v) in out.iter_mut().zip(w) {
                *o += coeff * v;
            }
        }
        let max_gap = self
            .versions
            .iter()
            .map(|&v| self.version_latest - v)
            .max()
            .unwrap_or(0);
        self.last_aggregation = Some((max_gap, self.last_submitter.unwrap_or(0)));
        self.version_latest += 1;
        Ok((out, self.version_latest))
    }

    /// Sync policy of the aggregation that just completed. Gap comparison is
    /// strict: broadcast only when the gap exceeds the threshold.
    pub fn post_aggregate_sync(&self) -> SyncDecision {
        let (max_gap, submitter) = self
            .last_aggregation
            .expect("post_aggregate_sync requires a completed aggregation");
        if max_gap > self.threshold {
            SyncDecision::BroadcastAll
        } else {
            SyncDecision::SendToSubmitter(submitter)
        }
    }
}
