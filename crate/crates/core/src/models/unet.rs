//! 1D encoder-decoder segmentation network trained with Dice loss.
//!
//! The encoder applies two conv-ReLU layers then a max pool per level,
//! doubling the filter count each time; the decoder mirrors it with nearest
//! upsampling and skip concatenations; a width-1 convolution plus sigmoid
//! emits one buzz probability per input sample. Training is minibatch Adam
//! on the Dice loss with the best-validation-epoch snapshot returned.
//!
//! Inputs are the four raw channels (three accelerometer axes and depth),
//! z-scored with training statistics held by the model.

use crate::data::WhaleRecord;
use crate::error::{Error, Result};
use crate::models::split::Fold;
use crate::nn::{
    concat_channels, conv1d_backward, conv1d_forward, dice_loss, maxpool1d, maxpool1d_backward,
    relu, relu_backward, sigmoid, sigmoid_backward, split_channels, upsample1d_backward,
    upsample1d_nearest, AdamState, Conv1d, Conv1dGrads, DiceAccumulator, Tensor3,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Channels fed to the network: ax, ay, az, depth.
pub const UNET_IN_CHANNELS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct UNetConfig {
    pub depth: usize,
    /// Filter count of the first convolution; doubles per level.
    pub base_filters: usize,
    pub kernel: usize,
    pub pool: usize,
    /// Training segment length in samples; must be divisible by pool^depth.
    pub segment_len: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig {
            depth: 4,
            base_filters: 4,
            kernel: 5,
            pool: 2,
            segment_len: 1600,
            batch_size: 8,
            learning_rate: 1e-3,
            max_epochs: 301,
            patience: 150,
            seed: 0,
        }
    }
}

impl UNetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.base_filters == 0 || self.batch_size == 0 {
            return Err(Error::Config("depth, filters and batch size must be positive".into()));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::Config(format!("kernel must be odd, got {}", self.kernel)));
        }
        if self.pool == 0 {
            return Err(Error::Config("pool factor must be positive".into()));
        }
        let divisor = self.pool.pow(self.depth as u32);
        if self.segment_len == 0 || self.segment_len % divisor != 0 {
            return Err(Error::Config(format!(
                "segment length {} is not divisible by pool^depth = {divisor}",
                self.segment_len
            )));
        }
        if !(self.learning_rate > 0.0) || self.max_epochs == 0 {
            return Err(Error::Config("learning rate and max epochs must be positive".into()));
        }
        Ok(())
    }

    /// The preliminary-experiment grid: filters and batch sizes in
    /// {2,4,8,16}, learning rates in {1e-2, 5e-3, 1e-3, 5e-4}.
    pub fn hyper_grid(&self) -> Vec<UNetConfig> {
        let mut grid = Vec::new();
        for &f in &[2usize, 4, 8, 16] {
            for &b in &[2usize, 4, 8, 16] {
                for &lr in &[1e-2, 5e-3, 1e-3, 5e-4] {
                    grid.push(UNetConfig {
                        base_filters: f,
                        batch_size: b,
                        learning_rate: lr,
                        ..self.clone()
                    });
                }
            }
        }
        grid
    }
}

/// Two convolutions applied back to back, each followed by ReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBlock {
    pub a: Conv1d,
    pub b: Conv1d,
}

/// Per-channel z-score statistics from the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UNetModel {
    pub cfg: UNetConfig,
    pub normalizer: Normalizer,
    pub enc: Vec<ConvBlock>,
    pub bottleneck: ConvBlock,
    /// Decoder blocks indexed by level (0 runs last, at full resolution).
    pub dec: Vec<ConvBlock>,
    pub head: Conv1d,
}

/// Per-epoch loss trace entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_dice: f64,
    pub val_dice: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: UNetModel,
    pub trace: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_dice: f64,
}

/// Builds a freshly initialized network from the config seed.
pub fn unet_build(cfg: &UNetConfig) -> Result<UNetModel> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let filters = |lvl: usize| cfg.base_filters << lvl;
    let mut enc = Vec::with_capacity(cfg.depth);
    for lvl in 0..cfg.depth {
        let in_ch = if lvl == 0 { UNET_IN_CHANNELS } else { filters(lvl - 1) };
        enc.push(ConvBlock {
            a: Conv1d::init(filters(lvl), in_ch, cfg.kernel, &mut rng)?,
            b: Conv1d::init(filters(lvl), filters(lvl), cfg.kernel, &mut rng)?,
        });
    }
    let bott_ch = filters(cfg.depth);
    let bottleneck = ConvBlock {
        a: Conv1d::init(bott_ch, filters(cfg.depth - 1), cfg.kernel, &mut rng)?,
        b: Conv1d::init(bott_ch, bott_ch, cfg.kernel, &mut rng)?,
    };
    let mut dec = Vec::with_capacity(cfg.depth);
    for lvl in 0..cfg.depth {
        let skip_ch = filters(lvl);
        let up_ch = filters(lvl + 1);
        dec.push(ConvBlock {
            a: Conv1d::init(filters(lvl), skip_ch + up_ch, cfg.kernel, &mut rng)?,
            b: Conv1d::init(filters(lvl), filters(lvl), cfg.kernel, &mut rng)?,
        });
    }
    let head = Conv1d::init(1, cfg.base_filters, 1, &mut rng)?;
    Ok(UNetModel {
        cfg: cfg.clone(),
        normalizer: Normalizer {
            mean: vec![0.0; UNET_IN_CHANNELS],
            std: vec![1.0; UNET_IN_CHANNELS],
        },
        enc,
        bottleneck,
        dec,
        head,
    })
}

struct BlockCache {
    x_a: Tensor3,
    z_a: Tensor3,
    x_b: Tensor3,
    z_b: Tensor3,
    out: Tensor3,
}

pub struct ForwardCache {
    enc: Vec<BlockCache>,
    pool_argmax: Vec<Vec<u32>>,
    pool_in_len: Vec<usize>,
    bottleneck: BlockCache,
    dec: Vec<BlockCache>,
    head_in: Tensor3,
    probs: Tensor3,
}

/// Gradients for every parameter tensor, shaped like the model.
pub struct UNetGrads {
    enc: Vec<(Conv1dGrads, Conv1dGrads)>,
    bottleneck: (Conv1dGrads, Conv1dGrads),
    dec: Vec<(Conv1dGrads, Conv1dGrads)>,
    head: Conv1dGrads,
}

fn run_block(block: &ConvBlock, x: Tensor3) -> Result<BlockCache> {
    let z_a = conv1d_forward(&x, &block.a)?;
    let x_b = relu(&z_a)?;
    let z_b = conv1d_forward(&x_b, &block.b)?;
    let out = relu(&z_b)?;
    Ok(BlockCache { x_a: x, z_a, x_b, z_b, out })
}

fn block_backward(
    block: &ConvBlock,
    cache: &BlockCache,
    grad_out: &Tensor3,
) -> Result<(Tensor3, (Conv1dGrads, Conv1dGrads))> {
    let g_zb = relu_backward(&cache.z_b, grad_out);
    let (g_xb, g_b) = conv1d_backward(&cache.x_b, &block.b, &g_zb)?;
    let g_za = relu_backward(&cache.z_a, &g_xb);
    let (g_xa, g_a) = conv1d_backward(&cache.x_a, &block.a, &g_za)?;
    Ok((g_xa, (g_a, g_b)))
}

impl UNetModel {
    /// Forward pass keeping every intermediate needed for the backward.
    pub fn forward_cached(&self, x: &Tensor3) -> Result<ForwardCache> {
        if x.channels != UNET_IN_CHANNELS {
            return Err(Error::Shape(format!(
                "expected {UNET_IN_CHANNELS} input channels, got {}",
                x.channels
            )));
        }
        let mut enc_caches = Vec::with_capacity(self.cfg.depth);
        let mut pool_argmax = Vec::with_capacity(self.cfg.depth);
        let mut pool_in_len = Vec::with_capacity(self.cfg.depth);
        let mut h = x.clone();
        for block in &self.enc {
            let cache = run_block(block, h)?;
            let (pooled, argmax) = maxpool1d(&cache.out, self.cfg.pool)?;
            pool_in_len.push(cache.out.len);
            pool_argmax.push(argmax);
            enc_caches.push(cache);
            h = pooled;
        }
        let bottleneck = run_block(&self.bottleneck, h)?;
        let mut h = bottleneck.out.clone();
        let mut dec_caches: Vec<Option<BlockCache>> = (0..self.cfg.depth).map(|_| None).collect();
        for lvl in (0..self.cfg.depth).rev() {
            let up = upsample1d_nearest(&h, self.cfg.pool)?;
            let cat = concat_channels(&enc_caches[lvl].out, &up)?;
            let cache = run_block(&self.dec[lvl], cat)?;
            h = cache.out.clone();
            dec_caches[lvl] = Some(cache);
        }
        let head_in = h;
        let logits = conv1d_forward(&head_in, &self.head)?;
        let probs = sigmoid(&logits)?;
        Ok(ForwardCache {
            enc: enc_caches,
            pool_argmax,
            pool_in_len,
            bottleneck,
            dec: dec_caches.into_iter().map(Option::unwrap).collect(),
            head_in,
            probs,
        })
    }

    /// Probabilities only.
    pub fn forward(&self, x: &Tensor3) -> Result<Tensor3> {
        Ok(self.forward_cached(x)?.probs)
    }

    /// Backward pass from the gradient on the probabilities.
    pub fn backward(&self, cache: &ForwardCache, grad_probs: &Tensor3) -> Result<UNetGrads> {
        let g_logits = sigmoid_backward(&cache.probs, grad_probs);
        let (mut g, head_grads) = conv1d_backward(&cache.head_in, &self.head, &g_logits)?;

        let depth = self.cfg.depth;
        let mut dec_grads: Vec<Option<(Conv1dGrads, Conv1dGrads)>> =
            (0..depth).map(|_| None).collect();
        let mut skip_grads: Vec<Option<Tensor3>> = (0..depth).map(|_| None).collect();
        for lvl in 0..depth {
            let (g_cat, grads) = block_backward(&self.dec[lvl], &cache.dec[lvl], &g)?;
            dec_grads[lvl] = Some(grads);
            let skip_ch = cache.enc[lvl].out.channels;
            let (g_skip, g_up) = split_channels(&g_cat, skip_ch)?;
            skip_grads[lvl] = Some(g_skip);
            g = upsample1d_backward(&g_up, self.cfg.pool)?;
        }

        let (mut g, bott_grads) = block_backward(&self.bottleneck, &cache.bottleneck, &g)?;

        let mut enc_grads: Vec<Option<(Conv1dGrads, Conv1dGrads)>> =
            (0..depth).map(|_| None).collect();
        for lvl in (0..depth).rev() {
            let mut g_out =
                maxpool1d_backward(&g, &cache.pool_argmax[lvl], cache.pool_in_len[lvl])?;
            let g_skip = skip_grads[lvl].take().unwrap();
            for (a, b) in g_out.data.iter_mut().zip(&g_skip.data) {
                *a += b;
            }
            let (g_in, grads) = block_backward(&self.enc[lvl], &cache.enc[lvl], &g_out)?;
            enc_grads[lvl] = Some(grads);
            g = g_in;
        }

        Ok(UNetGrads {
            enc: enc_grads.into_iter().map(Option::unwrap).collect(),
            bottleneck: bott_grads,
            dec: dec_grads.into_iter().map(Option::unwrap).collect(),
            head: head_grads,
        })
    }

    /// Parameter buffers in a fixed order (paired with [`UNetGrads::flat`]).
    pub fn param_buffers(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for block in self.enc.iter_mut() {
            out.push(block.a.weights.as_mut_slice());
            out.push(block.a.bias.as_mut_slice());
            out.push(block.b.weights.as_mut_slice());
            out.push(block.b.bias.as_mut_slice());
        }
        out.push(self.bottleneck.a.weights.as_mut_slice());
        out.push(self.bottleneck.a.bias.as_mut_slice());
        out.push(self.bottleneck.b.weights.as_mut_slice());
        out.push(self.bottleneck.b.bias.as_mut_slice());
        for block in self.dec.iter_mut() {
            out.push(block.a.weights.as_mut_slice());
            out.push(block.a.bias.as_mut_slice());
            out.push(block.b.weights.as_mut_slice());
            out.push(block.b.bias.as_mut_slice());
        }
        out.push(self.head.weights.as_mut_slice());
        out.push(self.head.bias.as_mut_slice());
        out
    }

    pub fn param_shapes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut push = |b: &ConvBlock| {
            out.push(b.a.weights.len());
            out.push(b.a.bias.len());
            out.push(b.b.weights.len());
            out.push(b.b.bias.len());
        };
        for block in &self.enc {
            push(block);
        }
        push(&self.bottleneck);
        for block in &self.dec {
            push(block);
        }
        out.push(self.head.weights.len());
        out.push(self.head.bias.len());
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes().iter().sum()
    }

    /// Per-sample buzz probabilities for a whole record. The record is cut
    /// into segment-length chunks; a shorter tail is covered by one final
    /// overlapping chunk (or zero padding when the record is shorter than
    /// one segment).
    pub fn predict_record(&self, record: &WhaleRecord) -> Result<Vec<f64>> {
        let n = record.len();
        let seg = self.cfg.segment_len;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut starts: Vec<usize> = (0..n / seg).map(|k| k * seg).collect();
        if n % seg != 0 && n > seg {
            starts.push(n - seg);
        }
        let mut probs = vec![0.0; n];
        if n < seg {
            let x = self.record_tensor(record, &[0], n.min(seg))?;
            // zero-padded tail: pad with the channel mean in z-scored space
            let mut full = Tensor3::zeros(1, UNET_IN_CHANNELS, seg);
            for c in 0..UNET_IN_CHANNELS {
                full.row_mut(0, c)[..n].copy_from_slice(&x.row(0, c)[..n]);
            }
            let out = self.forward(&full)?;
            probs.copy_from_slice(&out.row(0, 0)[..n]);
            return Ok(probs);
        }
        for chunk in starts.chunks(self.cfg.batch_size.max(1)) {
            let x = self.record_tensor(record, chunk, seg)?;
            let out = self.forward(&x)?;
            for (b, &s) in chunk.iter().enumerate() {
                probs[s..s + seg].copy_from_slice(out.row(b, 0));
            }
        }
        Ok(probs)
    }

    /// Z-scored input tensor for the given segment starts.
    fn record_tensor(&self, record: &WhaleRecord, starts: &[usize], seg: usize) -> Result<Tensor3> {
        let mut x = Tensor3::zeros(starts.len(), UNET_IN_CHANNELS, seg);
        for (b, &s) in starts.iter().enumerate() {
            let end = (s + seg).min(record.len());
            for (c, chan) in [&record.ax, &record.ay, &record.az, &record.depth]
                .iter()
                .enumerate()
            {
                let (m, sd) = (self.normalizer.mean[c], self.normalizer.std[c]);
                let row = x.row_mut(b, c);
                for (t, &v) in chan[s..end].iter().enumerate() {
                    row[t] = (v - m) / sd;
                }
            }
        }
        Ok(x)
    }
}

/// One training segment: a record index and its start sample.
#[derive(Debug, Clone, Copy)]
struct SegmentRef {
    whale: usize,
    start: usize,
}

fn collect_segments(spans: &[crate::models::split::Span], seg: usize) -> Vec<SegmentRef> {
    let mut out = Vec::new();
    for span in spans {
        let mut s = span.start;
        while s + seg <= span.end {
            out.push(SegmentRef { whale: span.whale, start: s });
            s += seg;
        }
    }
    out
}

fn fit_normalizer(records: &[WhaleRecord], segments: &[SegmentRef], seg: usize) -> Normalizer {
    let mut mean = vec![0.0; UNET_IN_CHANNELS];
    let mut count = 0usize;
    for segref in segments {
        let rec = &records[segref.whale];
        for (c, chan) in [&rec.ax, &rec.ay, &rec.az, &rec.depth].iter().enumerate() {
            mean[c] += chan[segref.start..segref.start + seg].iter().sum::<f64>();
        }
        count += seg;
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut var = vec![0.0; UNET_IN_CHANNELS];
    for segref in segments {
        let rec = &records[segref.whale];
        for (c, chan) in [&rec.ax, &rec.ay, &rec.az, &rec.depth].iter().enumerate() {
            var[c] += chan[segref.start..segref.start + seg]
                .iter()
                .map(|v| (v - mean[c]) * (v - mean[c]))
                .sum::<f64>();
        }
    }
    let std = var
        .iter()
        .map(|v| {
            let s = (v / count as f64).sqrt();
            if s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    Normalizer { mean, std }
}

fn batch_tensors(
    records: &[WhaleRecord],
    segments: &[SegmentRef],
    norm: &Normalizer,
    seg: usize,
) -> (Tensor3, Vec<u8>) {
    let mut x = Tensor3::zeros(segments.len(), UNET_IN_CHANNELS, seg);
    let mut y = Vec::with_capacity(segments.len() * seg);
    for (b, segref) in segments.iter().enumerate() {
        let rec = &records[segref.whale];
        let s = segref.start;
        for (c, chan) in [&rec.ax, &rec.ay, &rec.az, &rec.depth].iter().enumerate() {
            let (m, sd) = (norm.mean[c], norm.std[c]);
            let row = x.row_mut(b, c);
            for (t, &v) in chan[s..s + seg].iter().enumerate() {
                row[t] = (v - m) / sd;
            }
        }
        y.extend_from_slice(&rec.buzz[s..s + seg]);
    }
    (x, y)
}

/// Trains on the fold's train spans, selecting the epoch with the lowest
/// validation Dice; stops early after `patience` epochs without
/// improvement. Single-threaded and bit-reproducible for a fixed seed.
pub fn unet_train(records: &[WhaleRecord], fold: &Fold, cfg: &UNetConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let seg = cfg.segment_len;
    let train_segs = collect_segments(&fold.train, seg);
    let val_segs = collect_segments(&fold.val, seg);
    if train_segs.is_empty() {
        return Err(Error::Config(format!(
            "training spans yield no {seg}-sample segments"
        )));
    }
    if val_segs.is_empty() {
        return Err(Error::Config(
            "validation spans yield no segments; epoch selection needs them".into(),
        ));
    }

    let mut model = unet_build(cfg)?;
    model.normalizer = fit_normalizer(records, &train_segs, seg);
    let mut adam = AdamState::new(cfg.learning_rate, &model.param_shapes());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed_5eed_5eed);

    let mut order: Vec<usize> = (0..train_segs.len()).collect();
    let mut trace = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut snapshot: Option<UNetModel> = None;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let segs: Vec<SegmentRef> = chunk.iter().map(|&i| train_segs[i]).collect();
            let (x, y) = batch_tensors(records, &segs, &model.normalizer, seg);
            let mut step = || -> Result<f64> {
                let cache = model.forward_cached(&x)?;
                let (loss, grad) = dice_loss(&cache.probs.data, &y)?;
                let grad_probs = Tensor3 {
                    batch: cache.probs.batch,
                    channels: 1,
                    len: cache.probs.len,
                    data: grad,
                };
                let grads = model.backward(&cache, &grad_probs)?;
                let flat = grads.flat();
                let mut bufs = model.param_buffers();
                adam.step(&mut bufs, &flat)?;
                Ok(loss)
            };
            let loss = step().map_err(|e| Error::Training {
                epoch,
                batch: batch_idx,
                source: Box::new(e),
            })?;
            loss_sum += loss;
            batches += 1;
        }
        let train_dice = loss_sum / batches as f64;

        let mut acc = DiceAccumulator::default();
        for chunk in val_segs.chunks(cfg.batch_size) {
            let (x, y) = batch_tensors(records, chunk, &model.normalizer, seg);
            let probs = model.forward(&x)?;
            acc.update(&probs.data, &y);
        }
        let val_dice = acc.value();
        trace.push(EpochStats { epoch, train_dice, val_dice });

        if val_dice < best_val {
            best_val = val_dice;
            best_epoch = epoch;
            snapshot = Some(model.clone());
        }
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }

    Ok(TrainOutcome {
        model: snapshot.expect("at least one epoch ran"),
        trace,
        best_epoch,
        best_val_dice: best_val,
    })
}

impl UNetGrads {
    /// Gradient slices in the same order as [`UNetModel::param_buffers`].
    pub fn flat(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (a, b) in &self.enc {
            out.push(&a.weights);
            out.push(&a.bias);
            out.push(&b.weights);
            out.push(&b.bias);
        }
        out.push(&self.bottleneck.0.weights);
        out.push(&self.bottleneck.0.bias);
        out.push(&self.bottleneck.1.weights);
        out.push(&self.bottleneck.1.bias);
        for (a, b) in &self.dec {
            out.push(&a.weights);
            out.push(&a.bias);
            out.push(&b.weights);
            out.push(&b.bias);
        }
        out.push(&self.head.weights);
        out.push(&self.head.bias);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> UNetConfig {
        UNetConfig {
            depth: 2,
            base_filters: 2,
            kernel: 3,
            pool: 2,
            segment_len: 16,
            batch_size: 2,
            learning_rate: 1e-2,
            max_epochs: 3,
            patience: 150,
            seed: 5,
        }
    }

    #[test]
    fn output_shape_is_one_probability_per_sample() {
        let cfg = UNetConfig { segment_len: 1600, ..UNetConfig::default() };
        let model = unet_build(&cfg).unwrap();
        let x = Tensor3::zeros(3, UNET_IN_CHANNELS, 1600);
        let probs = model.forward(&x).unwrap();
        assert_eq!(probs.shape(), (3, 1, 1600));
        assert!(probs.data.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn divisibility_violation_is_config_error() {
        let cfg = UNetConfig { segment_len: 1000, ..UNetConfig::default() };
        assert!(matches!(unet_build(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn doubling_filters_roughly_quadruples_params() {
        let small = unet_build(&UNetConfig { base_filters: 4, ..UNetConfig::default() }).unwrap();
        let large = unet_build(&UNetConfig { base_filters: 8, ..UNetConfig::default() }).unwrap();
        let ratio = large.param_count() as f64 / small.param_count() as f64;
        assert!((3.5..=4.05).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_input_gives_constant_interior_probability() {
        let cfg = UNetConfig { segment_len: 512, ..UNetConfig::default() };
        let model = unet_build(&cfg).unwrap();
        let x = Tensor3::zeros(1, UNET_IN_CHANNELS, 512);
        let probs = model.forward(&x).unwrap();
        let mid = probs.row(0, 0)[256];
        for t in 200..312 {
            assert!(
                (probs.row(0, 0)[t] - mid).abs() < 1e-12,
                "position {t} differs: {} vs {mid}",
                probs.row(0, 0)[t]
            );
        }
    }

    #[test]
    fn whole_network_gradient_matches_finite_differences() {
        let cfg = tiny_cfg();
        let mut model = unet_build(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = Tensor3::from_vec(
            1,
            UNET_IN_CHANNELS,
            16,
            (0..64).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let y: Vec<u8> = (0..16).map(|i| (i % 5 == 0) as u8).collect();

        let cache = model.forward_cached(&x).unwrap();
        let (_, grad) = dice_loss(&cache.probs.data, &y).unwrap();
        let grad_probs = Tensor3::from_vec(1, 1, 16, grad).unwrap();
        let grads = model.backward(&cache, &grad_probs).unwrap();
        let flat: Vec<Vec<f64>> = grads.flat().iter().map(|g| g.to_vec()).collect();

        let loss_of = |m: &UNetModel| -> f64 {
            let p = m.forward(&x).unwrap();
            dice_loss(&p.data, &y).unwrap().0
        };
        let h = 1e-6;
        let shapes = model.param_shapes();
        for (ti, &len) in shapes.iter().enumerate() {
            for i in (0..len).step_by(3) {
                let base = {
                    let mut bufs = model.param_buffers();
                    let old = bufs[ti][i];
                    bufs[ti][i] = old + h;
                    old
                };
                let up = loss_of(&model);
                {
                    let mut bufs = model.param_buffers();
                    bufs[ti][i] = base - h;
                }
                let dn = loss_of(&model);
                {
                    let mut bufs = model.param_buffers();
                    bufs[ti][i] = base;
                }
                let fd = (up - dn) / (2.0 * h);
                let analytic = flat[ti][i];
                let denom = analytic.abs().max(fd.abs()).max(1e-6);
                assert!(
                    ((analytic - fd) / denom).abs() < 1e-4,
                    "tensor {ti} index {i}: analytic {analytic}, fd {fd}"
                );
            }
        }
    }

    #[test]
    fn training_on_planted_signal_reduces_validation_loss() {
        // two short synthetic whales with a blatant variance signature
        let recs: Vec<WhaleRecord> = (0..2)
            .map(|i| {
                crate::synth::synth_generate(&crate::synth::SynthConfig {
                    duration_s: 600.0,
                    dive_rate_per_hour: 20.0,
                    buzz_rate_per_bottom_minute: 4.0,
                    seed: 40 + i,
                    ..Default::default()
                })
                .unwrap()
            })
            .collect();
        let plan = crate::models::split::split(&recs, crate::models::split::SplitMode::Chrono602020)
            .unwrap();
        let cfg = UNetConfig {
            depth: 3,
            base_filters: 4,
            segment_len: 800,
            batch_size: 8,
            learning_rate: 5e-3,
            max_epochs: 8,
            seed: 1,
            ..UNetConfig::default()
        };
        let out = unet_train(&recs, &plan.folds[0], &cfg).unwrap();
        assert_eq!(out.best_val_dice, out.trace.iter().map(|e| e.val_dice).fold(f64::INFINITY, f64::min));
        let first = out.trace.first().unwrap().val_dice;
        let best = out.best_val_dice;
        assert!(best < first, "no improvement: first {first}, best {best}");
    }

    #[test]
    fn training_is_bit_reproducible() {
        let rec = crate::synth::synth_generate(&crate::synth::SynthConfig {
            duration_s: 300.0,
            dive_rate_per_hour: 24.0,
            buzz_rate_per_bottom_minute: 4.0,
            seed: 50,
            ..Default::default()
        })
        .unwrap();
        let recs = vec![rec];
        let plan = crate::models::split::split(&recs, crate::models::split::SplitMode::Chrono602020)
            .unwrap();
        let cfg = UNetConfig {
            depth: 2,
            base_filters: 2,
            segment_len: 400,
            batch_size: 4,
            max_epochs: 3,
            seed: 2,
            ..UNetConfig::default()
        };
        let a = unet_train(&recs, &plan.folds[0], &cfg).unwrap();
        let b = unet_train(&recs, &plan.folds[0], &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.trace, b.trace);
    }
}
