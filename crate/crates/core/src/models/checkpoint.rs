//! Versioned binary checkpoint container for the three model kinds.
//!
//! Layout (little endian):
//!   magic `BZSG` | version u16 | kind u8 | kind-specific body
//!
//! kind 1, logistic: n_features u32, weights n x f64, intercept f64.
//! kind 2, forest: seed u64, balanced u8, n_features u32, n_trees u32,
//!   then per tree n_nodes u32 and nodes as
//!   (feature i32, threshold f64, left u32, right u32, p1 f64).
//! kind 3, unet: depth/base_filters/kernel/pool/segment_len/batch u32 each,
//!   learning_rate f64, max_epochs u32, patience u32, seed u64, normalizer
//!   mean/std (4 + 4) x f64, then every convolution in parameter order as
//!   (out u32, in u32, kernel u32, weights, bias).
//!
//! Loading checks the magic, version, kind and every declared length, so a
//! truncated or corrupt file fails cleanly without yielding a partial model.

use super::forest::{ForestModel, Tree, TreeNode};
use super::logreg::LogisticModel;
use super::unet::{unet_build, UNetConfig, UNetModel};
use crate::error::{Error, Result};
use crate::nn::Conv1d;
use std::fs;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"BZSG";
pub const VERSION: u16 = 1;

/// Any of the three detectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logistic(LogisticModel),
    Forest(ForestModel),
    UNet(UNetModel),
}

impl Model {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logreg",
            Model::Forest(_) => "forest",
            Model::UNet(_) => "unet",
        }
    }
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Writer {
        Writer { buf: Vec::new() }
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!(
                "truncated: wanted {n} bytes at offset {}, file has {}",
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after the model body",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode(model: &Model) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(&MAGIC);
    w.u16(VERSION);
    match model {
        Model::Logistic(m) => {
            w.u8(1);
            w.u32(m.weights.len() as u32);
            w.f64s(&m.weights);
            w.f64(m.intercept);
        }
        Model::Forest(m) => {
            w.u8(2);
            w.u64(m.seed);
            w.u8(m.balanced as u8);
            w.u32(m.n_features as u32);
            w.u32(m.trees.len() as u32);
            for tree in &m.trees {
                w.u32(tree.nodes.len() as u32);
                for n in &tree.nodes {
                    w.i32(n.feature);
                    w.f64(n.threshold);
                    w.u32(n.left);
                    w.u32(n.right);
                    w.f64(n.p1);
                }
            }
        }
        Model::UNet(m) => {
            w.u8(3);
            let c = &m.cfg;
            w.u32(c.depth as u32);
            w.u32(c.base_filters as u32);
            w.u32(c.kernel as u32);
            w.u32(c.pool as u32);
            w.u32(c.segment_len as u32);
            w.u32(c.batch_size as u32);
            w.f64(c.learning_rate);
            w.u32(c.max_epochs as u32);
            w.u32(c.patience as u32);
            w.u64(c.seed);
            w.f64s(&m.normalizer.mean);
            w.f64s(&m.normalizer.std);
            for conv in unet_convs(m) {
                w.u32(conv.out_ch as u32);
                w.u32(conv.in_ch as u32);
                w.u32(conv.kernel as u32);
                w.f64s(&conv.weights);
                w.f64s(&conv.bias);
            }
        }
    }
    w.buf
}

fn unet_convs(m: &UNetModel) -> Vec<&Conv1d> {
    let mut out = Vec::new();
    for b in &m.enc {
        out.push(&b.a);
        out.push(&b.b);
    }
    out.push(&m.bottleneck.a);
    out.push(&m.bottleneck.b);
    for b in &m.dec {
        out.push(&b.a);
        out.push(&b.b);
    }
    out.push(&m.head);
    out
}

fn unet_convs_mut(m: &mut UNetModel) -> Vec<&mut Conv1d> {
    let mut out: Vec<&mut Conv1d> = Vec::new();
    for b in m.enc.iter_mut() {
        out.push(&mut b.a);
        out.push(&mut b.b);
    }
    out.push(&mut m.bottleneck.a);
    out.push(&mut m.bottleneck.b);
    for b in m.dec.iter_mut() {
        out.push(&mut b.a);
        out.push(&mut b.b);
    }
    out.push(&mut m.head);
    out
}

pub fn decode(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic, not a model checkpoint".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "checkpoint version {version} unsupported (expected {VERSION})"
        )));
    }
    let model = match r.u8()? {
        1 => {
            let n = r.u32()? as usize;
            let weights = r.f64s(n)?;
            let intercept = r.f64()?;
            Model::Logistic(LogisticModel { weights, intercept })
        }
        2 => {
            let seed = r.u64()?;
            let balanced = r.u8()? != 0;
            let n_features = r.u32()? as usize;
            let n_trees = r.u32()? as usize;
            let mut trees = Vec::with_capacity(n_trees);
            for _ in 0..n_trees {
                let n_nodes = r.u32()? as usize;
                let mut nodes = Vec::with_capacity(n_nodes);
                for _ in 0..n_nodes {
                    nodes.push(TreeNode {
                        feature: r.i32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                        p1: r.f64()?,
                    });
                }
                for n in &nodes {
                    if n.feature >= 0
                        && (n.left as usize >= nodes.len()
                            || n.right as usize >= nodes.len()
                            || n.feature as usize >= n_features)
                    {
                        return Err(Error::Format("tree node points outside its tree".into()));
                    }
                }
                trees.push(Tree { nodes });
            }
            Model::Forest(ForestModel { trees, seed, balanced, n_features })
        }
        3 => {
            let cfg = UNetConfig {
                depth: r.u32()? as usize,
                base_filters: r.u32()? as usize,
                kernel: r.u32()? as usize,
                pool: r.u32()? as usize,
                segment_len: r.u32()? as usize,
                batch_size: r.u32()? as usize,
                learning_rate: r.f64()?,
                max_epochs: r.u32()? as usize,
                patience: r.u32()? as usize,
                seed: r.u64()?,
            };
            let mut model = unet_build(&cfg)?;
            model.normalizer.mean = r.f64s(model.normalizer.mean.len())?;
            model.normalizer.std = r.f64s(model.normalizer.std.len())?;
            for conv in unet_convs_mut(&mut model) {
                let (out_ch, in_ch, kernel) =
                    (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
                if (out_ch, in_ch, kernel) != (conv.out_ch, conv.in_ch, conv.kernel) {
                    return Err(Error::Format(format!(
                        "conv shape ({out_ch}, {in_ch}, {kernel}) does not match the config's \
                         ({}, {}, {})",
                        conv.out_ch, conv.in_ch, conv.kernel
                    )));
                }
                conv.weights = r.f64s(conv.weights.len())?;
                conv.bias = r.f64s(conv.bias.len())?;
            }
            Model::UNet(model)
        }
        k => return Err(Error::Format(format!("unknown model kind tag {k}"))),
    };
    r.finish()?;
    Ok(model)
}

pub fn checkpoint_save(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, encode(model))?;
    Ok(())
}

pub fn checkpoint_load(path: &Path) -> Result<Model> {
    let bytes = fs::read(path)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::forest::{rf_fit, RfConfig};
    use crate::models::logreg::logreg_fit;
    use crate::nn::Tensor3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn logistic_roundtrip_is_exact() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let labels: Vec<u8> = (0..50).map(|i| (i >= 25) as u8).collect();
        let model = Model::Logistic(logreg_fit(&rows, &labels).unwrap());
        let back = decode(&encode(&model)).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn forest_roundtrip_preserves_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<u8> = rows.iter().map(|r| (r[0] > 0.0) as u8).collect();
        let forest = rf_fit(&rows, &labels, &RfConfig { n_trees: 5, seed: 4, ..Default::default() }).unwrap();
        let model = Model::Forest(forest.clone());
        let back = decode(&encode(&model)).unwrap();
        let Model::Forest(loaded) = &back else { panic!("wrong kind") };
        for row in rows.iter().take(25) {
            assert_eq!(forest.predict_proba(row), loaded.predict_proba(row));
        }
    }

    #[test]
    fn unet_roundtrip_preserves_forward_outputs() {
        let cfg = UNetConfig {
            depth: 2,
            base_filters: 2,
            segment_len: 32,
            seed: 9,
            ..UNetConfig::default()
        };
        let net = unet_build(&cfg).unwrap();
        let model = Model::UNet(net.clone());
        let back = decode(&encode(&model)).unwrap();
        let Model::UNet(loaded) = &back else { panic!("wrong kind") };
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let x = Tensor3::from_vec(
            2,
            4,
            32,
            (0..256).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        assert_eq!(net.forward(&x).unwrap().data, loaded.forward(&x).unwrap().data);
    }

    #[test]
    fn truncated_file_fails_cleanly() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| (i >= 10) as u8).collect();
        let bytes = encode(&Model::Logistic(logreg_fit(&rows, &labels).unwrap()));
        for cut in [0, 3, 5, 7, bytes.len() - 1] {
            let err = decode(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "cut {cut}: {err}");
        }
    }

    #[test]
    fn bad_magic_and_version_are_rejected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| (i >= 10) as u8).collect();
        let mut bytes = encode(&Model::Logistic(logreg_fit(&rows, &labels).unwrap()));
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(decode(&wrong_magic).is_err());
        bytes[4] = 99; // version
        assert!(decode(&bytes).is_err());
    }
}
