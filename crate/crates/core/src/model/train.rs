use log::debug;
use ndarray::ArrayView1;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cmlp::{evaluate, ActiveInputs};
use super::{penalty, prox_gsgl, CmlpBank, CmlpWeights, LaggedDesign, TrainConfig};
use crate::error::{Error, Result};
use crate::preprocess::TrialDataset;
use crate::rng;

/// Result of training one target network.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub weights: CmlpWeights,
    /// Penalized objective before each update, then once more after the last.
    pub objective: Vec<f64>,
    pub final_loss: f64,
    pub r2: Option<f64>,
}

fn init(config: &TrainConfig, target: usize, p: usize) -> CmlpWeights {
    let (h, k) = (config.hidden_units, config.max_lag);
    let mut rng = rng::stream(config.seed, target as u64);
    let mut m = CmlpWeights::zeros(target, h, p, k);
    let a1 = 1.0 / ((p * k) as f64).sqrt();
    let a2 = 1.0 / (h as f64).sqrt();
    m.w1.mapv_inplace(|_| rng.gen_range(-a1..a1));
    m.w2.mapv_inplace(|_| rng.gen_range(-a2..a2));
    m
}

pub(crate) fn r2(predictions: ArrayView1<'_, f64>, targets: ArrayView1<'_, f64>) -> Option<f64> {
    let mean = targets.mean()?;
    let sst: f64 = targets.iter().map(|y| (y - mean).powi(2)).sum();
    if !(sst > 0.0) {
        return None;
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(p, y)| (p - y).powi(2)).sum();
    Some(1.0 - sse / sst)
}

/// Proximal gradient training of the network for channel `target` on a prebuilt design.
pub fn ista_train_on(design: &LaggedDesign, config: &TrainConfig, target: usize) -> Result<TrainedModel> {
    config.validate()?;
    let p = design.n_channels();
    if design.max_lag != config.max_lag {
        return Err(Error::Config(format!(
            "design built for {} lags, config asks for {}",
            design.max_lag, config.max_lag
        )));
    }
    if target >= p {
        return Err(Error::Input(format!(
            "target channel {target} out of range for {p} channels"
        )));
    }
    let step = config.learning_rate;
    let threshold = step * config.lambda;
    let mut model = init(config, target, p);
    let mut active: Option<ActiveInputs> = None;
    let mut objective = Vec::with_capacity(config.iterations + 1);

    for iteration in 0..config.iterations {
        let ev = evaluate(&model, design, active.as_ref(), config.loss, true);
        if !ev.loss.is_finite() {
            return Err(Error::Diverged {
                target,
                iteration,
                step,
            });
        }
        objective.push(ev.loss + config.lambda * penalty(&model.w1));
        let g = ev.grad.expect("gradient requested");
        model.w1.scaled_add(-step, &g.w1);
        model.b1.scaled_add(-step, &g.b1);
        model.w2.scaled_add(-step, &g.w2);
        model.b2 -= step * g.b2;
        prox_gsgl(&mut model.w1, threshold)?;

        active = match ActiveInputs::columns_of(&model) {
            None => None,
            Some(cols) if active.as_ref().is_some_and(|a| a.columns == cols) => active,
            Some(cols) => Some(ActiveInputs::gather(design, cols)),
        };
    }

    let ev = evaluate(&model, design, active.as_ref(), config.loss, false);
    if !ev.loss.is_finite() {
        return Err(Error::Diverged {
            target,
            iteration: config.iterations,
            step,
        });
    }
    objective.push(ev.loss + config.lambda * penalty(&model.w1));
    let r2 = r2(ev.predictions.view(), design.targets.column(target));
    debug!("model {target}: loss {:.3e}, r2 {:?}", ev.loss, r2);
    Ok(TrainedModel {
        weights: model,
        objective,
        final_loss: ev.loss,
        r2,
    })
}

/// Trains the network for channel `target`; deterministic in `config.seed`.
pub fn ista_train(dataset: &TrialDataset, config: &TrainConfig, target: usize) -> Result<TrainedModel> {
    let design = LaggedDesign::new(dataset, config.max_lag)?;
    ista_train_on(&design, config, target)
}

/// Trains every target network on a shared design, in parallel on the current rayon pool.
pub fn train_bank_on(design: &LaggedDesign, config: &TrainConfig) -> Result<(CmlpBank, Vec<TrainedModel>)> {
    let p = design.n_channels();
    if p == 0 {
        return Err(Error::Config("cannot train a bank over zero channels".into()));
    }
    let results: Vec<Result<TrainedModel>> = (0..p)
        .into_par_iter()
        .map(|i| ista_train_on(design, config, i))
        .collect();
    let mut trained = Vec::with_capacity(p);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => trained.push(m),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Models(failures));
    }
    let bank = CmlpBank {
        models: trained.iter().map(|m| m.weights.clone()).collect(),
        config: config.clone(),
        final_loss: trained.iter().map(|m| m.final_loss).collect(),
        r2: trained.iter().map(|m| m.r2).collect(),
    };
    Ok((bank, trained))
}

pub fn train_bank(dataset: &TrialDataset, config: &TrainConfig) -> Result<CmlpBank> {
    if dataset.n_channels() == 0 {
        return Err(Error::Config("cannot train a bank over zero channels".into()));
    }
    let design = LaggedDesign::new(dataset, config.max_lag)?;
    Ok(train_bank_on(&design, config)?.0)
}

/// Coefficient of determination per target and averaged over defined targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct R2Report {
    pub per_model: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

pub fn r2_score(bank: &CmlpBank, dataset: &TrialDataset) -> Result<R2Report> {
    if bank.n_channels() != dataset.n_channels() {
        return Err(Error::Input(format!(
            "bank has {} models, dataset {} channels",
            bank.n_channels(),
            dataset.n_channels()
        )));
    }
    let design = LaggedDesign::new(dataset, bank.max_lag())?;
    let per_model: Vec<Option<f64>> = bank
        .models
        .iter()
        .map(|m| {
            let ev = evaluate(m, &design, None, bank.config.loss, false);
            r2(ev.predictions.view(), design.targets.column(m.target))
        })
        .collect();
    let present: Vec<f64> = per_model.iter().flatten().copied().collect();
    let mean = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
    Ok(R2Report { per_model, mean })
}
