use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::{CmlpWeights, LaggedDesign, LossReduction};
use crate::error::{Error, Result};
use crate::preprocess::TrialDataset;

/// First-layer weights as an (H, p*K) matrix.
fn w1_matrix(model: &CmlpWeights) -> Array2<f64> {
    let (h, p, k) = model.w1.dim();
    model
        .w1
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((h, p * k))
        .expect("standard layout")
}

/// Prediction for one window; `window[[k - 1, j]]` is channel `j` at `t - k`.
pub fn forward(model: &CmlpWeights, window: ArrayView2<'_, f64>) -> Result<f64> {
    let (hidden, p, max_lag) = model.w1.dim();
    if window.dim() != (max_lag, p) {
        return Err(Error::Input(format!(
            "window shape {:?} does not match ({max_lag} lags, {p} channels)",
            window.dim()
        )));
    }
    let mut out = model.b2;
    for h in 0..hidden {
        let mut z = model.b1[h];
        for j in 0..p {
            for k in 0..max_lag {
                z += model.w1[[h, j, k]] * window[[k, j]];
            }
        }
        out += model.w2[h] * z.max(0.0);
    }
    Ok(out)
}

/// Columns of the design that some hidden unit still reads, gathered once.
pub(crate) struct ActiveInputs {
    pub columns: Vec<usize>,
    pub inputs: Array2<f64>,
}

impl ActiveInputs {
    /// Nonzero columns of `w1`, or `None` when all are live.
    pub fn columns_of(model: &CmlpWeights) -> Option<Vec<usize>> {
        let (h, p, k) = model.w1.dim();
        let cols: Vec<usize> = (0..p * k)
            .filter(|&c| (0..h).any(|u| model.w1[[u, c / k, c % k]] != 0.0))
            .collect();
        (cols.len() < p * k).then_some(cols)
    }

    pub fn gather(design: &LaggedDesign, columns: Vec<usize>) -> Self {
        let inputs = design.inputs.select(Axis(1), &columns);
        ActiveInputs { columns, inputs }
    }
}

pub(crate) struct Evaluation {
    pub loss: f64,
    pub predictions: Array1<f64>,
    pub grad: Option<CmlpWeights>,
}

/// Loss (and optionally its gradient) of `model` over all design rows.
pub(crate) fn evaluate(
    model: &CmlpWeights,
    design: &LaggedDesign,
    active: Option<&ActiveInputs>,
    reduction: LossReduction,
    want_grad: bool,
) -> Evaluation {
    let (hidden, p, max_lag) = model.w1.dim();
    let n = design.n_samples();
    let y = design.targets.column(model.target);
    let w1 = w1_matrix(model);

    let mut pre = match active {
        Some(a) => a.inputs.dot(&w1.select(Axis(1), &a.columns).t()),
        None => design.inputs.dot(&w1.t()),
    };
    pre += &model.b1;
    let act = pre.mapv(|z| z.max(0.0));
    let predictions = act.dot(&model.w2) + model.b2;
    let resid = &predictions - &y;
    let sse = resid.dot(&resid);
    let scale = match reduction {
        LossReduction::Mean => 1.0 / n as f64,
        LossReduction::Sum => 1.0,
    };
    let loss = sse * scale;

    let grad = want_grad.then(|| {
        let d = resid * (2.0 * scale);
        let mut delta = Array2::zeros((n, hidden));
        Zip::from(delta.rows_mut())
            .and(pre.rows())
            .and(&d)
            .for_each(|mut row, z, &di| {
                Zip::from(&mut row).and(z).and(&model.w2).for_each(|o, &z, &w| {
                    if z > 0.0 {
                        *o = di * w;
                    }
                });
            });
        let gw1 = delta.t().dot(&design.inputs);
        CmlpWeights {
            target: model.target,
            w1: gw1
                .into_shape_with_order((hidden, p, max_lag))
                .expect("contiguous gradient"),
            b1: delta.sum_axis(Axis(0)),
            w2: act.t().dot(&d),
            b2: d.sum(),
        }
    });
    Evaluation {
        loss,
        predictions,
        grad,
    }
}

fn check_dims(model: &CmlpWeights, dataset: &TrialDataset) -> Result<LaggedDesign> {
    if model.n_channels() != dataset.n_channels() || model.target >= dataset.n_channels() {
        return Err(Error::Input(format!(
            "model for channel {} with {} inputs does not fit a dataset of {} channels",
            model.target,
            model.n_channels(),
            dataset.n_channels()
        )));
    }
    LaggedDesign::new(dataset, model.max_lag())
}

/// Mean squared one-step prediction error over all trials and `t` in `[K, T)`.
pub fn smooth_loss(model: &CmlpWeights, dataset: &TrialDataset) -> Result<f64> {
    let design = check_dims(model, dataset)?;
    Ok(evaluate(model, &design, None, LossReduction::Mean, false).loss)
}

/// Exact gradient of [`smooth_loss`]; the ReLU derivative at 0 is taken as 0.
pub fn gradient(model: &CmlpWeights, dataset: &TrialDataset) -> Result<CmlpWeights> {
    let design = check_dims(model, dataset)?;
    Ok(evaluate(model, &design, None, LossReduction::Mean, true)
        .grad
        .expect("gradient requested"))
}
