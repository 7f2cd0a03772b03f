//! Bidirectional LSTM regressor trained full-batch with adaptive moment
//! estimation.
//!
//! Each input row is reshaped into a short sequence, run through a forward
//! and a reverse LSTM chain, and the two final hidden states are
//! concatenated into a single affine output unit. Training minimizes mean
//! squared error on min-max-scaled targets plus an L2 penalty on weights
//! (biases excluded), with global gradient-norm clipping and a one-time
//! learning-rate drop.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{validate_predict, validate_training, ModelError, Regressor};
use crate::seeds;

/// How a flat feature row becomes a sequence.
///
/// `PerFeatureSteps` emits one step per original feature, with that
/// feature's decomposition modes as channels (35 columns → 7 steps × 5
/// channels); it requires the column count to be a multiple of 7.
/// `FlatSteps` walks the columns one scalar at a time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqLayout {
    PerFeatureSteps,
    FlatSteps,
}

impl SeqLayout {
    /// (steps, channels) for a row of `d` columns.
    fn dims(self, d: usize) -> Result<(usize, usize), ModelError> {
        match self {
            SeqLayout::PerFeatureSteps => {
                if !d.is_multiple_of(7) {
                    return Err(ModelError::Argument(format!(
                        "per-feature layout needs a multiple of 7 columns, got {d}"
                    )));
                }
                Ok((7, d / 7))
            }
            SeqLayout::FlatSteps => Ok((d, 1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilstmConfig {
    pub hidden_units: usize,
    pub initial_lr: f64,
    pub l2_coefficient: f64,
    pub max_epochs: usize,
    pub grad_clip_norm: f64,
    pub lr_drop_epoch: usize,
    pub lr_drop_factor: f64,
    pub seq_layout: SeqLayout,
    pub seed: u64,
}

impl Default for BilstmConfig {
    fn default() -> Self {
        BilstmConfig {
            hidden_units: 16,
            initial_lr: 1e-2,
            l2_coefficient: 1e-4,
            max_epochs: 500,
            grad_clip_norm: 1.0,
            lr_drop_epoch: 350,
            lr_drop_factor: 0.2,
            seq_layout: SeqLayout::PerFeatureSteps,
            seed: 0,
        }
    }
}

impl BilstmConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_units < 1 {
            return Err(ModelError::Argument(
                "hidden_units must be at least 1".into(),
            ));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(ModelError::Argument("initial_lr must be positive".into()));
        }
        if !(self.l2_coefficient >= 0.0 && self.l2_coefficient.is_finite()) {
            return Err(ModelError::Argument(
                "l2_coefficient must be non-negative".into(),
            ));
        }
        if self.grad_clip_norm <= 0.0 || self.grad_clip_norm.is_nan() {
            return Err(ModelError::Argument(
                "grad_clip_norm must be positive".into(),
            ));
        }
        if self.lr_drop_epoch > self.max_epochs {
            return Err(ModelError::Argument(format!(
                "lr_drop_epoch {} exceeds max_epochs {}",
                self.lr_drop_epoch, self.max_epochs
            )));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor.is_finite()) {
            return Err(ModelError::Argument(
                "lr_drop_factor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One LSTM cell's parameters, packed for single-matmul stepping.
///
/// `w` is (4H)×(H+I) over the concatenated `[h, x]` input with gate row
/// blocks ordered input, forget, candidate, output; `b` stacks the four
/// gate biases the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub hidden: usize,
    pub input: usize,
}

impl LstmCellParams {
    pub fn new(
        w: Array2<f64>,
        b: Array1<f64>,
        hidden: usize,
        input: usize,
    ) -> Result<Self, ModelError> {
        if hidden < 1 {
            return Err(ModelError::Argument(
                "hidden size must be at least 1".into(),
            ));
        }
        if w.dim() != (4 * hidden, hidden + input) {
            return Err(ModelError::Argument(format!(
                "gate weights are {:?}, expected ({}, {})",
                w.dim(),
                4 * hidden,
                hidden + input
            )));
        }
        if b.len() != 4 * hidden {
            return Err(ModelError::Argument(format!(
                "gate biases have length {}, expected {}",
                b.len(),
                4 * hidden
            )));
        }
        if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::Argument("non-finite cell parameter".into()));
        }
        Ok(LstmCellParams {
            w,
            b,
            hidden,
            input,
        })
    }

    /// Zero-valued parameters (useful as a fixture).
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmCellParams {
            w: Array2::zeros((4 * hidden, hidden + input)),
            b: Array1::zeros(4 * hidden),
            hidden,
            input,
        }
    }

    fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Advances one LSTM cell by a single step: gate activations from
/// `σ/tanh(W·[h,x]+b)`, then `c' = f⊙c + i⊙g` and `h' = o⊙tanh(c')`.
pub fn lstm_cell_step(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    p: &LstmCellParams,
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if x.len() != p.input || h.len() != p.hidden || c.len() != p.hidden {
        return Err(ModelError::Argument(format!(
            "state shapes ({}, {}, {}) do not match cell ({}, {})",
            x.len(),
            h.len(),
            c.len(),
            p.input,
            p.hidden
        )));
    }
    let xm = Array2::from_shape_vec((x.len(), 1), x.to_vec()).expect("shape");
    let hm = Array2::from_shape_vec((h.len(), 1), h.to_vec()).expect("shape");
    let cm = Array2::from_shape_vec((c.len(), 1), c.to_vec()).expect("shape");
    let step = batched_step(p, &hm, &cm, &xm);
    Ok((step.h_new.column(0).to_vec(), step.c_new.column(0).to_vec()))
}

/// Per-step activations kept for backpropagation through time.
struct StepCache {
    hx: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    c_prev: Array2<f64>,
    tanh_c: Array2<f64>,
    h_new: Array2<f64>,
    c_new: Array2<f64>,
}

/// One batched cell step over H×N state matrices and a C×N input.
fn batched_step(
    p: &LstmCellParams,
    h: &Array2<f64>,
    c: &Array2<f64>,
    x: &Array2<f64>,
) -> StepCache {
    let hh = p.hidden;
    let hx = concatenate(Axis(0), &[h.view(), x.view()]).expect("concat");
    let z = p.w.dot(&hx) + p.b.view().insert_axis(Axis(1));
    let i = z.slice(s![0..hh, ..]).mapv(sigmoid);
    let f = z.slice(s![hh..2 * hh, ..]).mapv(sigmoid);
    let g = z.slice(s![2 * hh..3 * hh, ..]).mapv(f64::tanh);
    let o = z.slice(s![3 * hh..4 * hh, ..]).mapv(sigmoid);
    let c_new = &f * c + &i * &g;
    let tanh_c = c_new.mapv(f64::tanh);
    let h_new = &o * &tanh_c;
    StepCache {
        hx,
        i,
        f,
        g,
        o,
        c_prev: c.clone(),
        tanh_c,
        h_new,
        c_new,
    }
}

/// Runs one chain over the sequence (reversed when `reverse`), returning
/// caches in processing order; the last cache holds the final state.
fn run_chain(p: &LstmCellParams, steps: &[Array2<f64>], reverse: bool, n: usize) -> Vec<StepCache> {
    let mut h = Array2::zeros((p.hidden, n));
    let mut c = Array2::zeros((p.hidden, n));
    let mut caches = Vec::with_capacity(steps.len());
    let order: Vec<usize> = if reverse {
        (0..steps.len()).rev().collect()
    } else {
        (0..steps.len()).collect()
    };
    for t in order {
        let cache = batched_step(p, &h, &c, &steps[t]);
        h = cache.h_new.clone();
        c = cache.c_new.clone();
        caches.push(cache);
    }
    caches
}

/// Backpropagates a gradient on the chain's final hidden state, returning
/// (dW, db) for the cell.
fn backward_chain(
    p: &LstmCellParams,
    caches: &[StepCache],
    dh_final: &Array2<f64>,
) -> (Array2<f64>, Array1<f64>) {
    let hh = p.hidden;
    let n = dh_final.ncols();
    let mut dw = Array2::zeros(p.w.dim());
    let mut db = Array1::zeros(p.b.len());
    let mut dh = dh_final.clone();
    let mut dc: Array2<f64> = Array2::zeros((hh, n));
    for cache in caches.iter().rev() {
        dc = dc + &dh * &cache.o * cache.tanh_c.mapv(|v| 1.0 - v * v);
        let d_o = &dh * &cache.tanh_c;
        let d_i = &dc * &cache.g;
        let d_g = &dc * &cache.i;
        let d_f = &dc * &cache.c_prev;
        let mut dz = Array2::zeros((4 * hh, n));
        dz.slice_mut(s![0..hh, ..])
            .assign(&(&d_i * &cache.i * cache.i.mapv(|v| 1.0 - v)));
        dz.slice_mut(s![hh..2 * hh, ..])
            .assign(&(&d_f * &cache.f * cache.f.mapv(|v| 1.0 - v)));
        dz.slice_mut(s![2 * hh..3 * hh, ..])
            .assign(&(&d_g * cache.g.mapv(|v| 1.0 - v * v)));
        dz.slice_mut(s![3 * hh..4 * hh, ..])
            .assign(&(&d_o * &cache.o * cache.o.mapv(|v| 1.0 - v)));
        dw = dw + dz.dot(&cache.hx.t());
        db = db + dz.sum_axis(Axis(1));
        let dhx = p.w.t().dot(&dz);
        dh = dhx.slice(s![0..hh, ..]).to_owned();
        dc = &dc * &cache.f;
    }
    (dw, db)
}

/// The full network: forward and reverse cells plus the affine head over
/// their concatenated final hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct BilstmNetwork {
    pub fwd: LstmCellParams,
    pub rev: LstmCellParams,
    pub w_out: Array1<f64>,
    pub b_out: f64,
    pub hidden: usize,
    pub channels: usize,
}

impl BilstmNetwork {
    /// Seeded initialization: orthogonal recurrent gate blocks, uniform
    /// `±1/√C` input blocks, forget bias 1 and other biases 0, uniform
    /// `±1/√(2H)` output weights.
    pub fn init(hidden: usize, channels: usize, seed: u64) -> BilstmNetwork {
        let mut rng = seeds::rng(seed);
        let cell = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut w = Array2::zeros((4 * hidden, hidden + channels));
            let bound = 1.0 / (channels as f64).sqrt();
            for gate in 0..4 {
                let q = orthogonal(hidden, rng);
                w.slice_mut(s![gate * hidden..(gate + 1) * hidden, 0..hidden])
                    .assign(&q);
                for r in gate * hidden..(gate + 1) * hidden {
                    for col in hidden..hidden + channels {
                        w[[r, col]] = rng.gen_range(-bound..bound);
                    }
                }
            }
            let mut b = Array1::zeros(4 * hidden);
            b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
            LstmCellParams {
                w,
                b,
                hidden,
                input: channels,
            }
        };
        let fwd = cell(&mut rng);
        let rev = cell(&mut rng);
        let out_bound = 1.0 / (2.0 * hidden as f64).sqrt();
        let w_out =
            Array1::from_iter((0..2 * hidden).map(|_| rng.gen_range(-out_bound..out_bound)));
        BilstmNetwork {
            fwd,
            rev,
            w_out,
            b_out: 0.0,
            hidden,
            channels,
        }
    }

    pub fn param_count(&self) -> usize {
        self.fwd.param_count() + self.rev.param_count() + self.w_out.len() + 1
    }

    /// Flattens all parameters as `[fwd.w, fwd.b, rev.w, rev.b, w_out,
    /// b_out]`, matrices in row-major order.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend(self.fwd.w.iter());
        v.extend(self.fwd.b.iter());
        v.extend(self.rev.w.iter());
        v.extend(self.rev.b.iter());
        v.extend(self.w_out.iter());
        v.push(self.b_out);
        v
    }

    /// Inverse of [`BilstmNetwork::param_vector`].
    pub fn set_param_vector(&mut self, v: &[f64]) -> Result<(), ModelError> {
        if v.len() != self.param_count() {
            return Err(ModelError::Argument(format!(
                "parameter vector has length {}, expected {}",
                v.len(),
                self.param_count()
            )));
        }
        let mut pos = 0;
        for dst in [&mut self.fwd, &mut self.rev] {
            for w in dst.w.iter_mut() {
                *w = v[pos];
                pos += 1;
            }
            for b in dst.b.iter_mut() {
                *b = v[pos];
                pos += 1;
            }
        }
        for w in self.w_out.iter_mut() {
            *w = v[pos];
            pos += 1;
        }
        self.b_out = v[pos];
        Ok(())
    }

    /// Predictions in scaled target units for a prepared sequence batch.
    fn forward(&self, steps: &[Array2<f64>], n: usize) -> Array1<f64> {
        let caches_f = run_chain(&self.fwd, steps, false, n);
        let caches_r = run_chain(&self.rev, steps, true, n);
        let concat = concatenate(
            Axis(0),
            &[
                caches_f.last().expect("nonempty").h_new.view(),
                caches_r.last().expect("nonempty").h_new.view(),
            ],
        )
        .expect("concat");
        self.w_out.dot(&concat) + self.b_out
    }

    /// Data-term loss (MSE in scaled units) and its gradient in
    /// `param_vector` layout; the L2 term is the caller's to add.
    pub fn loss_and_grad(&self, steps: &[Array2<f64>], y: &Array1<f64>) -> (f64, Vec<f64>) {
        let n = y.len();
        let caches_f = run_chain(&self.fwd, steps, false, n);
        let caches_r = run_chain(&self.rev, steps, true, n);
        let hh = self.hidden;
        let concat = concatenate(
            Axis(0),
            &[
                caches_f.last().expect("nonempty").h_new.view(),
                caches_r.last().expect("nonempty").h_new.view(),
            ],
        )
        .expect("concat");
        let yhat = self.w_out.dot(&concat) + self.b_out;
        let resid = &yhat - y;
        let mse = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;

        let dyhat = resid.mapv(|r| 2.0 * r / n as f64);
        let dw_out = concat.dot(&dyhat);
        let db_out = dyhat.sum();
        // d concat = w_out ⊗ dyhat, split into the two chains' final states.
        let dconcat = {
            let mut m = Array2::zeros((2 * hh, n));
            for r in 0..2 * hh {
                for col in 0..n {
                    m[[r, col]] = self.w_out[r] * dyhat[col];
                }
            }
            m
        };
        let (dwf, dbf) = backward_chain(
            &self.fwd,
            &caches_f,
            &dconcat.slice(s![0..hh, ..]).to_owned(),
        );
        let (dwr, dbr) = backward_chain(
            &self.rev,
            &caches_r,
            &dconcat.slice(s![hh..2 * hh, ..]).to_owned(),
        );

        let mut grad = Vec::with_capacity(self.param_count());
        grad.extend(dwf.iter());
        grad.extend(dbf.iter());
        grad.extend(dwr.iter());
        grad.extend(dbr.iter());
        grad.extend(dw_out.iter());
        grad.push(db_out);
        (mse, grad)
    }
}

/// Samples an H×H orthogonal matrix via Gram-Schmidt on Gaussian columns.
fn orthogonal(h: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Array2<f64> {
    loop {
        let mut a = Array2::zeros((h, h));
        for v in a.iter_mut() {
            *v = rng.sample::<f64, _>(StandardNormal);
        }
        let mut ok = true;
        for j in 0..h {
            for k in 0..j {
                let proj: f64 = (0..h).map(|r| a[[r, j]] * a[[r, k]]).sum();
                for r in 0..h {
                    a[[r, j]] -= proj * a[[r, k]];
                }
            }
            let norm: f64 = (0..h).map(|r| a[[r, j]] * a[[r, j]]).sum::<f64>().sqrt();
            if norm < 1e-12 {
                ok = false;
                break;
            }
            for r in 0..h {
                a[[r, j]] /= norm;
            }
        }
        if ok {
            return a;
        }
    }
}

#[derive(Debug, Clone)]
struct FittedBilstm {
    net: BilstmNetwork,
    y_min: f64,
    y_range: f64,
    n_features: usize,
    epoch_losses: Vec<f64>,
    grad_norms: Vec<f64>,
}

/// The trained regressor wrapper around [`BilstmNetwork`].
#[derive(Debug, Clone)]
pub struct BilstmRegressor {
    config: BilstmConfig,
    state: Option<FittedBilstm>,
}

impl BilstmRegressor {
    pub fn new(config: BilstmConfig) -> BilstmRegressor {
        BilstmRegressor {
            config,
            state: None,
        }
    }

    pub fn config(&self) -> &BilstmConfig {
        &self.config
    }

    /// Full training loss per epoch (MSE in scaled units plus L2 term);
    /// empty before `fit`.
    pub fn epoch_losses(&self) -> &[f64] {
        self.state.as_ref().map_or(&[], |s| &s.epoch_losses)
    }

    /// Post-clip global gradient norm per epoch; empty before `fit`.
    pub fn grad_norms(&self) -> &[f64] {
        self.state.as_ref().map_or(&[], |s| &s.grad_norms)
    }

    pub(crate) fn fitted_parts(&self) -> Option<(&BilstmNetwork, f64, f64, usize)> {
        self.state
            .as_ref()
            .map(|s| (&s.net, s.y_min, s.y_range, s.n_features))
    }

    pub(crate) fn restore(
        config: BilstmConfig,
        net: BilstmNetwork,
        y_min: f64,
        y_range: f64,
        n_features: usize,
    ) -> BilstmRegressor {
        BilstmRegressor {
            config,
            state: Some(FittedBilstm {
                net,
                y_min,
                y_range,
                n_features,
                epoch_losses: Vec::new(),
                grad_norms: Vec::new(),
            }),
        }
    }
}

/// Reshapes rows into T step matrices of shape C×N.
fn sequence_steps(x: &[Vec<f64>], t: usize, c: usize) -> Vec<Array2<f64>> {
    let n = x.len();
    (0..t)
        .map(|step| {
            let mut m = Array2::zeros((c, n));
            for (col, row) in x.iter().enumerate() {
                for ch in 0..c {
                    m[[ch, col]] = row[step * c + ch];
                }
            }
            m
        })
        .collect()
}

impl Regressor for BilstmRegressor {
    fn fit(&mut self, x: &[Vec<f64>], y: &[f64]) -> Result<(), ModelError> {
        self.config.validate()?;
        let d = validate_training(x, y)?;
        let n = x.len();
        if n < 4 {
            return Err(ModelError::TrainingData(format!(
                "needs at least 4 rows, got {n}"
            )));
        }
        let (t, c) = self.config.seq_layout.dims(d)?;
        let steps = sequence_steps(x, t, c);

        // Min-max scale targets to [0,1]; a zero range trains on all-zero
        // targets and predicts the constant back.
        let y_min = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let y_max = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let y_range = y_max - y_min;
        let y_scaled = Array1::from_iter(y.iter().map(|v| {
            if y_range == 0.0 {
                0.0
            } else {
                (v - y_min) / y_range
            }
        }));

        let mut net = BilstmNetwork::init(self.config.hidden_units, c, self.config.seed);
        let mut params = net.param_vector();
        let mut m = vec![0.0; params.len()];
        let mut v = vec![0.0; params.len()];
        let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);
        let l2 = self.config.l2_coefficient;
        let mut epoch_losses = Vec::with_capacity(self.config.max_epochs);
        let mut grad_norms = Vec::with_capacity(self.config.max_epochs);

        for epoch in 1..=self.config.max_epochs {
            let (mse, mut grad) = net.loss_and_grad(&steps, &y_scaled);
            let l2_term: f64 = l2
                * (net.fwd.w.iter().map(|w| w * w).sum::<f64>()
                    + net.rev.w.iter().map(|w| w * w).sum::<f64>()
                    + net.w_out.iter().map(|w| w * w).sum::<f64>());
            let loss = mse + l2_term;
            if !loss.is_finite() {
                return Err(ModelError::TrainingFailed { epoch });
            }
            epoch_losses.push(loss);
            if l2 > 0.0 {
                add_l2_grad(&mut grad, &net, l2);
            }

            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > self.config.grad_clip_norm {
                let scale = self.config.grad_clip_norm / norm;
                for g in &mut grad {
                    *g *= scale;
                }
            }
            grad_norms.push(grad.iter().map(|g| g * g).sum::<f64>().sqrt());

            let lr = if epoch > self.config.lr_drop_epoch {
                self.config.initial_lr * self.config.lr_drop_factor
            } else {
                self.config.initial_lr
            };
            let tcorr = epoch as f64;
            for ((p, g), (mi, vi)) in params
                .iter_mut()
                .zip(&grad)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let mhat = *mi / (1.0 - beta1.powf(tcorr));
                let vhat = *vi / (1.0 - beta2.powf(tcorr));
                *p -= lr * mhat / (vhat.sqrt() + eps);
            }
            net.set_param_vector(&params)?;
        }

        self.state = Some(FittedBilstm {
            net,
            y_min,
            y_range,
            n_features: d,
            epoch_losses,
            grad_norms,
        });
        Ok(())
    }

    fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        let state = self.state.as_ref().ok_or(ModelError::NotFitted)?;
        validate_predict(x, state.n_features)?;
        if x.is_empty() {
            return Ok(Vec::new());
        }
        let (t, c) = self.config.seq_layout.dims(state.n_features)?;
        let steps = sequence_steps(x, t, c);
        let scaled = state.net.forward(&steps, x.len());
        Ok(scaled
            .iter()
            .map(|s| s * state.y_range + state.y_min)
            .collect())
    }

    fn name(&self) -> &'static str {
        "BiLSTM"
    }
}

/// Adds `2·l2·w` for every weight entry (biases untouched) in
/// `param_vector` layout.
fn add_l2_grad(grad: &mut [f64], net: &BilstmNetwork, l2: f64) {
    let mut pos = 0;
    for cell in [&net.fwd, &net.rev] {
        for w in cell.w.iter() {
            grad[pos] += 2.0 * l2 * w;
            pos += 1;
        }
        pos += cell.b.len();
    }
    for w in net.w_out.iter() {
        grad[pos] += 2.0 * l2 * w;
        pos += 1;
    }
}
