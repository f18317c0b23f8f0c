//! Mini-batch SGD training.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha12Rng;

use crate::rng::stream_rng;

use super::{ForwardPass, Hyperparams, ModelError, ModelInputs, ModelParams};

/// One training context: parameters, the sampling/shuffling rng stream, and
/// the labeled positions it trains on. Federated workers hold one context
/// each and keep it across rounds; centralized training uses a single
/// context for the whole schedule.
pub struct TrainContext<'a> {
    inputs: &'a ModelInputs,
    hyper: Hyperparams,
    pub params: ModelParams,
    rng: ChaCha12Rng,
    train_positions: Vec<usize>,
    /// Mean per-node loss of every optimization step taken so far.
    pub step_losses: Vec<f64>,
}

impl<'a> TrainContext<'a> {
    /// `rng_label` names the sampling sub-stream (workers use distinct
    /// labels so their draws are independent).
    pub fn new(
        inputs: &'a ModelInputs,
        hyper: Hyperparams,
        params: ModelParams,
        train_positions: Vec<usize>,
        rng_label: &str,
        strict_class_coverage: bool,
    ) -> Result<Self, ModelError> {
        hyper.validate()?;
        if train_positions.is_empty() {
            return Err(ModelError::EmptyTrainingSet);
        }
        for &pos in &train_positions {
            if inputs.labels[pos].is_none() {
                return Err(ModelError::UnlabeledNodeInBatch(inputs.nodes[pos]));
            }
        }
        let mut covered = vec![false; inputs.num_labels];
        for &pos in &train_positions {
            covered[inputs.labels[pos].unwrap() as usize] = true;
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            if strict_class_coverage {
                return Err(ModelError::ClassMissingFromTrainingSet(missing as u16));
            }
            eprintln!("warning: class {missing} has no labeled node in the training set");
        }
        let rng = stream_rng(hyper.seed, rng_label);
        Ok(Self {
            inputs,
            hyper,
            params,
            rng,
            train_positions,
            step_losses: Vec::new(),
        })
    }

    /// Uniform neighbor sample without replacement under every meta-path;
    /// all neighbors when the cap covers the neighborhood (no rng draw).
    fn draw_samples(&mut self, pos: usize) -> Vec<Vec<usize>> {
        let cap = self.hyper.neighbor_cap;
        (0..self.inputs.path_count())
            .map(|pi| {
                let nbrs = self.inputs.neighbors_of(pi, pos);
                match cap {
                    Some(s) if nbrs.len() > s => {
                        rand::seq::index::sample(&mut self.rng, nbrs.len(), s)
                            .iter()
                            .map(|i| nbrs[i])
                            .collect()
                    }
                    _ => nbrs.to_vec(),
                }
            })
            .collect()
    }

    /// Runs `epochs` epochs of mini-batch SGD. Batches are re-shuffled and
    /// neighbor samples redrawn every step; gradients are averaged over the
    /// batch (the loss itself is the batch sum).
    pub fn run_epochs(&mut self, epochs: usize) -> Result<(), ModelError> {
        for _ in 0..epochs {
            let mut order = self.train_positions.clone();
            order.shuffle(&mut self.rng);
            let mut start = 0;
            while start < order.len() {
                let end = (start + self.hyper.batch_size).min(order.len());
                // The shuffle decides membership only; within a batch nodes
                // run in ascending position so summation order is stable.
                let mut members = order[start..end].to_vec();
                members.sort_unstable();
                let batch: Vec<(usize, Vec<Vec<usize>>)> = members
                    .iter()
                    .map(|&pos| (pos, self.draw_samples(pos)))
                    .collect();
                let batch_len = batch.len();

                let mut pass = ForwardPass::new(self.inputs, &self.params);
                let loss = pass.batch_loss(&batch)?;
                self.params.zero_grad();
                pass.tape.backward(&loss)?;
                self.params
                    .sgd_step(self.hyper.learning_rate / batch_len as f64);
                self.step_losses.push(loss.scalar_value() / batch_len as f64);
                start = end;
            }
        }
        Ok(())
    }
}

/// Centralized training: seeded init, `hyper.epochs` epochs over the given
/// labeled positions. Returns the trained parameters and the per-step mean
/// loss curve. Fully deterministic given the seed.
pub fn train(
    inputs: &ModelInputs,
    hyper: &Hyperparams,
    train_positions: Vec<usize>,
) -> Result<(ModelParams, Vec<f64>), ModelError> {
    let params = ModelParams::init(inputs, hyper);
    let mut ctx = TrainContext::new(
        inputs,
        hyper.clone(),
        params,
        train_positions,
        "train",
        false,
    )?;
    ctx.run_epochs(hyper.epochs)?;
    Ok((ctx.params, ctx.step_losses))
}
