//! Adversarial trajectory predictor.
//!
//! The generator encodes the observed displacements with an LSTM, mixes the
//! final hidden state with a noise vector and decodes future displacements
//! autoregressively. The discriminator scores a whole displacement sequence.
//! Both work on per-step deltas normalized by `field_size · delta_scale`, so
//! predictions are translation-equivariant by construction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Dense, Layout, Lstm, LstmCache, LstmState};
use super::trajectory::{ade_points, Point, TrajSplit, Trajectory};
use crate::error::{invalid, Result};
use crate::losses::{clamp_prob, PROB_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Generator,
    Discriminator,
}

/// Everything needed to interpret a flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    pub kind: NetKind,
    pub hidden: usize,
    pub embed: usize,
    /// Zero for the discriminator.
    pub noise_dim: usize,
    pub t_obs: usize,
    pub n_pred: usize,
    /// Pixel extent used to normalize coordinates to [0, 1].
    pub field_size: f64,
    /// Normalized displacement that maps to one network unit.
    pub delta_scale: f64,
}

impl NetShape {
    fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.embed == 0 {
            return Err(invalid("hidden and embedding sizes must be positive"));
        }
        if self.t_obs < 2 {
            return Err(invalid("at least two observed points are needed"));
        }
        if self.n_pred == 0 {
            return Err(invalid("n_pred must be positive"));
        }
        if !(self.field_size > 0.0 && self.delta_scale > 0.0) {
            return Err(invalid("field size and delta scale must be positive"));
        }
        if self.kind == NetKind::Generator && self.noise_dim == 0 {
            return Err(invalid("generator needs a noise dimension"));
        }
        Ok(())
    }

    /// Pixels per network displacement unit.
    fn unit(&self) -> f64 {
        self.field_size * self.delta_scale
    }

    fn param_len(&self) -> usize {
        match self.kind {
            NetKind::Generator => GenLayers::new(self).1,
            NetKind::Discriminator => DiscLayers::new(self).1,
        }
    }
}

/// Flat parameters plus the shape they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqNetParams {
    shape: NetShape,
    values: Vec<f64>,
}

impl SeqNetParams {
    pub fn zeros(shape: NetShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            values: vec![0.0; shape.param_len()],
            shape,
        })
    }

    /// Uniform initialization in ±1/√hidden.
    pub fn init(shape: NetShape, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(shape)?;
        let bound = 1.0 / (shape.hidden as f64).sqrt();
        for v in &mut p.values {
            *v = rng.random_range(-bound..bound);
        }
        Ok(p)
    }

    pub fn from_values(shape: NetShape, values: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if values.len() != shape.param_len() {
            return Err(invalid(format!(
                "expected {} parameters for this shape, got {}",
                shape.param_len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &NetShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn expect_kind(&self, kind: NetKind) -> Result<()> {
        if self.shape.kind != kind {
            return Err(invalid(format!(
                "expected {kind:?} parameters, got {:?}",
                self.shape.kind
            )));
        }
        Ok(())
    }
}

struct GenLayers {
    embed: Dense,
    enc: Lstm,
    mix: Dense,
    dec: Lstm,
    head: Dense,
}

impl GenLayers {
    fn new(s: &NetShape) -> (Self, usize) {
        let mut l = Layout::default();
        let layers = Self {
            embed: l.dense(s.embed, 2),
            enc: l.lstm(s.embed, s.hidden),
            mix: l.dense(s.hidden, s.hidden + s.noise_dim),
            dec: l.lstm(s.embed, s.hidden),
            head: l.dense(2, s.hidden),
        };
        (layers, l.len())
    }
}

struct DiscLayers {
    embed: Dense,
    lstm: Lstm,
    head: Dense,
}

impl DiscLayers {
    fn new(s: &NetShape) -> (Self, usize) {
        let mut l = Layout::default();
        let layers = Self {
            embed: l.dense(s.embed, 2),
            lstm: l.lstm(s.embed, s.hidden),
            head: l.dense(1, s.hidden),
        };
        (layers, l.len())
    }
}

fn scaled_deltas(points: &[Point], unit: f64) -> Vec<Point> {
    points
        .windows(2)
        .map(|w| [(w[1][0] - w[0][0]) / unit, (w[1][1] - w[0][1]) / unit])
        .collect()
}

struct GenCache {
    enc_inputs: Vec<Point>,
    enc_steps: Vec<LstmCache>,
    mix_in: Vec<f64>,
    h0: Vec<f64>,
    dec_inputs: Vec<Point>,
    dec_steps: Vec<LstmCache>,
    dec_hidden: Vec<Vec<f64>>,
}

/// Runs the generator on scaled observed deltas; returns scaled future deltas.
fn gen_forward(p: &SeqNetParams, obs: &[Point], z: &[f64]) -> (Vec<Point>, GenCache) {
    let s = &p.shape;
    let (net, _) = GenLayers::new(s);
    let v = &p.values;
    let mut state = LstmState::zeros(s.hidden);
    let mut enc_steps = Vec::with_capacity(obs.len());
    for u in obs {
        let e = net.embed.forward(v, u);
        let (next, cache) = net.enc.step(v, &e, &state);
        state = next;
        enc_steps.push(cache);
    }
    let mut mix_in = state.h.clone();
    mix_in.extend_from_slice(z);
    let h0: Vec<f64> = net
        .mix
        .forward(v, &mix_in)
        .into_iter()
        .map(f64::tanh)
        .collect();
    let mut dec_state = LstmState {
        h: h0.clone(),
        c: state.c,
    };
    let mut prev = obs[obs.len() - 1];
    let mut out = Vec::with_capacity(s.n_pred);
    let mut dec_inputs = Vec::with_capacity(s.n_pred);
    let mut dec_steps = Vec::with_capacity(s.n_pred);
    let mut dec_hidden = Vec::with_capacity(s.n_pred);
    for _ in 0..s.n_pred {
        let e = net.embed.forward(v, &prev);
        let (next, cache) = net.dec.step(v, &e, &dec_state);
        dec_state = next;
        let y = net.head.forward(v, &dec_state.h);
        let y = [y[0], y[1]];
        dec_inputs.push(prev);
        dec_steps.push(cache);
        dec_hidden.push(dec_state.h.clone());
        out.push(y);
        prev = y;
    }
    let cache = GenCache {
        enc_inputs: obs.to_vec(),
        enc_steps,
        mix_in,
        h0,
        dec_inputs,
        dec_steps,
        dec_hidden,
    };
    (out, cache)
}

/// Backpropagates dL/dy (scaled future deltas) into `grad`.
fn gen_backward(p: &SeqNetParams, cache: &GenCache, dy: &[Point], grad: &mut [f64]) {
    let s = &p.shape;
    let (net, _) = GenLayers::new(s);
    let v = &p.values;
    let hd = s.hidden;
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut carry = [0.0, 0.0];
    for k in (0..s.n_pred).rev() {
        let dyk = [dy[k][0] + carry[0], dy[k][1] + carry[1]];
        let mut dh = net.head.backward(v, grad, &cache.dec_hidden[k], &dyk);
        for (a, b) in dh.iter_mut().zip(&dh_next) {
            *a += b;
        }
        let (de, dh_prev, dc_prev) = net
            .dec
            .backward(v, grad, &cache.dec_steps[k], &dh, &dc_next);
        let d_in = net.embed.backward(v, grad, &cache.dec_inputs[k], &de);
        // Step k consumed y_{k-1}; step 0 consumed an observed delta.
        carry = [d_in[0], d_in[1]];
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    let dm: Vec<f64> = dh_next
        .iter()
        .zip(&cache.h0)
        .map(|(d, h)| d * (1.0 - h * h))
        .collect();
    let dmix = net.mix.backward(v, grad, &cache.mix_in, &dm);
    let mut dh = dmix[..hd].to_vec();
    let mut dc = dc_next;
    for j in (0..cache.enc_steps.len()).rev() {
        let (de, dh_prev, dc_prev) = net.enc.backward(v, grad, &cache.enc_steps[j], &dh, &dc);
        net.embed.backward(v, grad, &cache.enc_inputs[j], &de);
        dh = dh_prev;
        dc = dc_prev;
    }
}

struct DiscCache {
    inputs: Vec<Point>,
    steps: Vec<LstmCache>,
    h_last: Vec<f64>,
}

fn disc_forward(p: &SeqNetParams, deltas: &[Point]) -> (f64, DiscCache) {
    let s = &p.shape;
    let (net, _) = DiscLayers::new(s);
    let v = &p.values;
    let mut state = LstmState::zeros(s.hidden);
    let mut steps = Vec::with_capacity(deltas.len());
    for u in deltas {
        let e = net.embed.forward(v, u);
        let (next, cache) = net.lstm.step(v, &e, &state);
        state = next;
        steps.push(cache);
    }
    let logit = net.head.forward(v, &state.h)[0];
    let cache = DiscCache {
        inputs: deltas.to_vec(),
        steps,
        h_last: state.h,
    };
    (logit, cache)
}

/// Accumulates parameter gradients and returns dL/d(inputs).
fn disc_backward(p: &SeqNetParams, cache: &DiscCache, dlogit: f64, grad: &mut [f64]) -> Vec<Point> {
    let s = &p.shape;
    let (net, _) = DiscLayers::new(s);
    let v = &p.values;
    let mut dh = net.head.backward(v, grad, &cache.h_last, &[dlogit]);
    let mut dc = vec![0.0; s.hidden];
    let mut d_inputs = vec![[0.0, 0.0]; cache.inputs.len()];
    for j in (0..cache.steps.len()).rev() {
        let (de, dh_prev, dc_prev) = net.lstm.backward(v, grad, &cache.steps[j], &dh, &dc);
        let d = net.embed.backward(v, grad, &cache.inputs[j], &de);
        d_inputs[j] = [d[0], d[1]];
        dh = dh_prev;
        dc = dc_prev;
    }
    d_inputs
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Predicts the next `n_pred` centers after `observed`.
pub fn generator_forward(
    params: &SeqNetParams,
    observed: &Trajectory,
    noise: &[f64],
) -> Result<Trajectory> {
    params.expect_kind(NetKind::Generator)?;
    let s = params.shape;
    if observed.len() != s.t_obs {
        return Err(invalid(format!(
            "generator expects {} observed points, got {}",
            s.t_obs,
            observed.len()
        )));
    }
    if noise.len() != s.noise_dim {
        return Err(invalid(format!(
            "generator expects noise of length {}, got {}",
            s.noise_dim,
            noise.len()
        )));
    }
    let offsets = predicted_offsets(params, observed.points(), noise);
    let last = observed.last();
    let points = offsets
        .iter()
        .map(|o| [last[0] + o[0], last[1] + o[1]])
        .collect();
    Trajectory::contiguous(points, observed.last_frame() + 1)
}

/// Cumulative pixel displacement of each predicted point from the last observed one.
pub fn predicted_offsets(params: &SeqNetParams, observed: &[Point], noise: &[f64]) -> Vec<Point> {
    let unit = params.shape.unit();
    let (y, _) = gen_forward(params, &scaled_deltas(observed, unit), noise);
    let mut acc = [0.0, 0.0];
    y.iter()
        .map(|d| {
            acc = [acc[0] + d[0], acc[1] + d[1]];
            [acc[0] * unit, acc[1] * unit]
        })
        .collect()
}

pub fn discriminator_forward(params: &SeqNetParams, full_traj: &Trajectory) -> Result<f64> {
    params.expect_kind(NetKind::Discriminator)?;
    let s = params.shape;
    if full_traj.len() != s.t_obs + s.n_pred {
        return Err(invalid(format!(
            "discriminator expects {} points, got {}",
            s.t_obs + s.n_pred,
            full_traj.len()
        )));
    }
    let (logit, _) = disc_forward(params, &scaled_deltas(full_traj.points(), s.unit()));
    Ok(sigmoid(logit))
}

/// Non-saturating GAN losses from discriminator probabilities:
/// returns `(g_loss, d_loss)` with `g_loss = −mean ln D(fake)` and
/// `d_loss = −mean ln D(real) − mean ln(1 − D(fake))`.
pub fn gan_loss(d_real: &[f64], d_fake: &[f64]) -> Result<(f64, f64)> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(invalid("GAN loss needs non-empty probability batches"));
    }
    let nr = d_real.len() as f64;
    let nf = d_fake.len() as f64;
    let real: f64 = d_real.iter().map(|&p| -clamp_prob(p).ln()).sum::<f64>() / nr;
    let fake: f64 = d_fake
        .iter()
        .map(|&p| -(1.0 - clamp_prob(p)).ln())
        .sum::<f64>()
        / nf;
    let g: f64 = d_fake.iter().map(|&p| -clamp_prob(p).ln()).sum::<f64>() / nf;
    Ok((g, real + fake))
}

/// Gradients of [`gan_loss`] w.r.t. its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GanLossGrad {
    pub d_loss_wrt_real: Vec<f64>,
    pub d_loss_wrt_fake: Vec<f64>,
    pub g_loss_wrt_fake: Vec<f64>,
}

pub fn gan_loss_grad(d_real: &[f64], d_fake: &[f64]) -> Result<GanLossGrad> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(invalid("GAN loss needs non-empty probability batches"));
    }
    let nr = d_real.len() as f64;
    let nf = d_fake.len() as f64;
    let inside = |p: f64| (PROB_EPS..=1.0 - PROB_EPS).contains(&p);
    let gate = |p: f64, v: f64| if inside(p) { v } else { 0.0 };
    Ok(GanLossGrad {
        d_loss_wrt_real: d_real.iter().map(|&p| gate(p, -1.0 / (nr * p))).collect(),
        d_loss_wrt_fake: d_fake
            .iter()
            .map(|&p| gate(p, 1.0 / (nf * (1.0 - p))))
            .collect(),
        g_loss_wrt_fake: d_fake.iter().map(|&p| gate(p, -1.0 / (nf * p))).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanTrainConfig {
    pub lr_g: f64,
    pub lr_d: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub d_steps: usize,
    pub noise_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    pub t_obs: usize,
    pub n_pred: usize,
    pub field_size: f64,
    pub delta_scale: f64,
    /// Weight of the adversarial term in the generator objective.
    pub adv_weight: f64,
    /// Weight of the squared offset error term in the generator objective.
    pub l2_weight: f64,
    /// Global-norm gradient clip; zero disables clipping.
    pub grad_clip: f64,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        Self {
            lr_g: 0.02,
            lr_d: 0.01,
            momentum: 0.9,
            batch_size: 32,
            steps: 2000,
            d_steps: 1,
            noise_dim: 8,
            hidden: 32,
            seed: 7,
            t_obs: 4,
            n_pred: 2,
            field_size: 100.0,
            delta_scale: 0.02,
            adv_weight: 0.05,
            l2_weight: 1.0,
            grad_clip: 5.0,
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.steps == 0 || self.d_steps == 0 {
            return Err(invalid("batch size, steps and d_steps must be positive"));
        }
        if self.noise_dim == 0 || self.hidden == 0 || self.t_obs < 2 || self.n_pred == 0 {
            return Err(invalid(
                "noise_dim, hidden and n_pred must be positive and t_obs >= 2",
            ));
        }
        for (name, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be finite and non-negative")));
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid("momentum must lie in [0,1)"));
        }
        if !(self.field_size > 0.0 && self.delta_scale > 0.0) {
            return Err(invalid("field size and delta scale must be positive"));
        }
        if self.adv_weight < 0.0 || self.l2_weight < 0.0 || self.grad_clip < 0.0 {
            return Err(invalid("loss weights and clip must be non-negative"));
        }
        Ok(())
    }

    pub fn shape(&self, kind: NetKind) -> NetShape {
        NetShape {
            kind,
            hidden: self.hidden,
            embed: self.hidden,
            noise_dim: if kind == NetKind::Generator {
                self.noise_dim
            } else {
                0
            },
            t_obs: self.t_obs,
            n_pred: self.n_pred,
            field_size: self.field_size,
            delta_scale: self.delta_scale,
        }
    }
}

/// One training step's losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub step: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub l2_loss: f64,
}

/// Weights of the generator objective terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorWeights {
    pub adv: f64,
    pub l2: f64,
}

struct Sample {
    obs: Vec<Point>,
    future: Vec<Point>,
}

fn sample_of(split: &TrajSplit, unit: f64) -> Sample {
    let pts = split.full();
    let all = scaled_deltas(pts.points(), unit);
    let m = split.observed.len() - 1;
    Sample {
        obs: all[..m].to_vec(),
        future: all[m..].to_vec(),
    }
}

fn check_batch(
    g: &SeqNetParams,
    d: &SeqNetParams,
    batch: &[TrajSplit],
    noises: &[Vec<f64>],
) -> Result<()> {
    g.expect_kind(NetKind::Generator)?;
    d.expect_kind(NetKind::Discriminator)?;
    if batch.is_empty() || batch.len() != noises.len() {
        return Err(invalid(
            "batch and noise lists must be non-empty and equal in length",
        ));
    }
    let s = g.shape;
    for split in batch {
        if split.observed.len() != s.t_obs || split.future.len() != s.n_pred {
            return Err(invalid(format!(
                "split lengths {}+{} do not match t_obs={} n_pred={}",
                split.observed.len(),
                split.future.len(),
                s.t_obs,
                s.n_pred
            )));
        }
    }
    if noises.iter().any(|z| z.len() != s.noise_dim) {
        return Err(invalid(
            "noise vectors must match the generator noise dimension",
        ));
    }
    Ok(())
}

/// Discriminator objective on a batch and its gradient w.r.t. the discriminator parameters.
pub fn discriminator_loss_and_grad(
    g: &SeqNetParams,
    d: &SeqNetParams,
    batch: &[TrajSplit],
    noises: &[Vec<f64>],
) -> Result<(f64, Vec<f64>)> {
    check_batch(g, d, batch, noises)?;
    let unit = g.shape.unit();
    let mut grad = vec![0.0; d.values.len()];
    let mut d_real = Vec::with_capacity(batch.len());
    let mut d_fake = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for (split, z) in batch.iter().zip(noises) {
        let sample = sample_of(split, unit);
        let (fake_future, _) = gen_forward(g, &sample.obs, z);
        let real_seq: Vec<Point> = sample.obs.iter().chain(&sample.future).copied().collect();
        let fake_seq: Vec<Point> = sample.obs.iter().chain(&fake_future).copied().collect();
        let (lr, cr) = disc_forward(d, &real_seq);
        let (lf, cf) = disc_forward(d, &fake_seq);
        d_real.push(sigmoid(lr));
        d_fake.push(sigmoid(lf));
        caches.push((cr, cf));
    }
    let (_, loss) = gan_loss(&d_real, &d_fake)?;
    let lg = gan_loss_grad(&d_real, &d_fake)?;
    for (j, (cr, cf)) in caches.iter().enumerate() {
        let pr = d_real[j];
        let pf = d_fake[j];
        disc_backward(d, cr, lg.d_loss_wrt_real[j] * pr * (1.0 - pr), &mut grad);
        disc_backward(d, cf, lg.d_loss_wrt_fake[j] * pf * (1.0 - pf), &mut grad);
    }
    Ok((loss, grad))
}

/// Generator objective `adv·g_loss + l2·mean‖offset − true offset‖²` (in network
/// units) and its gradient w.r.t. the generator parameters.
pub fn generator_loss_and_grad(
    g: &SeqNetParams,
    d: &SeqNetParams,
    batch: &[TrajSplit],
    noises: &[Vec<f64>],
    weights: GeneratorWeights,
) -> Result<(f64, f64, Vec<f64>)> {
    check_batch(g, d, batch, noises)?;
    let unit = g.shape.unit();
    let n_pred = g.shape.n_pred;
    let b = batch.len() as f64;
    let mut grad = vec![0.0; g.values.len()];
    let mut d_scratch = vec![0.0; d.values.len()];
    let mut d_fake = Vec::with_capacity(batch.len());
    let mut l2_total = 0.0;
    let mut pending = Vec::with_capacity(batch.len());
    for (split, z) in batch.iter().zip(noises) {
        let sample = sample_of(split, unit);
        let (y, gcache) = gen_forward(g, &sample.obs, z);
        let fake_seq: Vec<Point> = sample.obs.iter().chain(&y).copied().collect();
        let (lf, dcache) = disc_forward(d, &fake_seq);
        d_fake.push(sigmoid(lf));

        // Offset error and its gradient w.r.t. each predicted delta.
        let mut acc = [0.0, 0.0];
        let mut acc_true = [0.0, 0.0];
        let mut d_off = Vec::with_capacity(n_pred);
        for k in 0..n_pred {
            acc = [acc[0] + y[k][0], acc[1] + y[k][1]];
            acc_true = [
                acc_true[0] + sample.future[k][0],
                acc_true[1] + sample.future[k][1],
            ];
            let e = [acc[0] - acc_true[0], acc[1] - acc_true[1]];
            l2_total += (e[0] * e[0] + e[1] * e[1]) / (n_pred as f64 * b);
            d_off.push([
                2.0 * e[0] / (n_pred as f64 * b),
                2.0 * e[1] / (n_pred as f64 * b),
            ]);
        }
        let mut dy_l2 = vec![[0.0, 0.0]; n_pred];
        let mut suffix = [0.0, 0.0];
        for k in (0..n_pred).rev() {
            suffix = [suffix[0] + d_off[k][0], suffix[1] + d_off[k][1]];
            dy_l2[k] = [weights.l2 * suffix[0], weights.l2 * suffix[1]];
        }
        pending.push((gcache, dcache, dy_l2, sample.obs.len()));
    }
    let real_dummy = vec![0.5; d_fake.len()];
    let (g_adv, _) = gan_loss(&real_dummy, &d_fake)?;
    let lg = gan_loss_grad(&real_dummy, &d_fake)?;
    for (j, (gcache, dcache, dy_l2, m)) in pending.iter().enumerate() {
        let pf = d_fake[j];
        let dlogit = weights.adv * lg.g_loss_wrt_fake[j] * pf * (1.0 - pf);
        let d_in = disc_backward(d, dcache, dlogit, &mut d_scratch);
        let dy: Vec<Point> = (0..n_pred)
            .map(|k| [dy_l2[k][0] + d_in[m + k][0], dy_l2[k][1] + d_in[m + k][1]])
            .collect();
        gen_backward(g, gcache, &dy, &mut grad);
    }
    let total = weights.adv * g_adv + weights.l2 * l2_total;
    Ok((total, l2_total, grad))
}

struct Sgd {
    lr: f64,
    momentum: f64,
    clip: f64,
    velocity: Vec<f64>,
}

impl Sgd {
    fn new(lr: f64, momentum: f64, clip: f64, n: usize) -> Self {
        Self {
            lr,
            momentum,
            clip,
            velocity: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = if self.clip > 0.0 && norm > self.clip {
            self.clip / norm
        } else {
            1.0
        };
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad) {
            *v = self.momentum * *v - self.lr * scale * g;
            *p += *v;
        }
    }
}

fn draw_noise(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Trained generator, discriminator and the per-step loss log.
#[derive(Debug, Clone)]
pub struct TrainedGan {
    pub generator: SeqNetParams,
    pub discriminator: SeqNetParams,
    pub log: Vec<TrainLogEntry>,
}

/// Alternating SGD: `d_steps` discriminator updates, then one generator update.
pub fn train_gan(data: &[TrajSplit], cfg: &GanTrainConfig) -> Result<TrainedGan> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(invalid("training data is empty"));
    }
    if let Some(bad) = data
        .iter()
        .position(|s| s.observed.len() != cfg.t_obs || s.future.len() != cfg.n_pred)
    {
        return Err(invalid(format!(
            "split {bad} has lengths {}+{}, expected {}+{}",
            data[bad].observed.len(),
            data[bad].future.len(),
            cfg.t_obs,
            cfg.n_pred
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut g = SeqNetParams::init(cfg.shape(NetKind::Generator), &mut rng)?;
    let mut d = SeqNetParams::init(cfg.shape(NetKind::Discriminator), &mut rng)?;
    let mut opt_g = Sgd::new(cfg.lr_g, cfg.momentum, cfg.grad_clip, g.values.len());
    let mut opt_d = Sgd::new(cfg.lr_d, cfg.momentum, cfg.grad_clip, d.values.len());
    let weights = GeneratorWeights {
        adv: cfg.adv_weight,
        l2: cfg.l2_weight,
    };
    let mut log = Vec::with_capacity(cfg.steps);
    let draw_batch = |rng: &mut ChaCha8Rng| -> (Vec<TrajSplit>, Vec<Vec<f64>>) {
        let batch: Vec<TrajSplit> = (0..cfg.batch_size)
            .map(|_| data[rng.random_range(0..data.len())].clone())
            .collect();
        let noises = (0..cfg.batch_size)
            .map(|_| draw_noise(rng, cfg.noise_dim))
            .collect();
        (batch, noises)
    };
    for step in 0..cfg.steps {
        let mut d_loss = 0.0;
        for _ in 0..cfg.d_steps {
            let (batch, noises) = draw_batch(&mut rng);
            let (loss, grad) = discriminator_loss_and_grad(&g, &d, &batch, &noises)?;
            opt_d.step(&mut d.values, &grad);
            d_loss = loss;
        }
        let (batch, noises) = draw_batch(&mut rng);
        let (g_loss, l2_loss, grad) = generator_loss_and_grad(&g, &d, &batch, &noises, weights)?;
        opt_g.step(&mut g.values, &grad);
        log.push(TrainLogEntry {
            step,
            d_loss,
            g_loss,
            l2_loss,
        });
    }
    Ok(TrainedGan {
        generator: g,
        discriminator: d,
        log,
    })
}

/// Mean ADE of generator predictions over `splits`, noise drawn from `rng`.
pub fn evaluate_ade(g: &SeqNetParams, splits: &[TrajSplit], rng: &mut impl Rng) -> Result<f64> {
    if splits.is_empty() {
        return Err(invalid("no splits to evaluate"));
    }
    let mut total = 0.0;
    for s in splits {
        let z = draw_noise(rng, g.shape.noise_dim);
        let pred = generator_forward(g, &s.observed, &z)?;
        total += ade_points(pred.points(), s.future.points())?;
    }
    Ok(total / splits.len() as f64)
}

pub(crate) fn sample_noise(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    draw_noise(rng, dim)
}
