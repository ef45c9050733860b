//! Versioned binary form of a trained MLP.
//!
//! Little-endian throughout:
//!
//! ```text
//! "HCMM" | version: u32 = 1 | activation: u8 (0 relu, 1 tanh) | layers: u32
//! per layer          inputs: u32 | outputs: u32
//! per layer          weights: outputs × inputs f64, row-major | bias: outputs f64
//! standardizer       dim: u32 | means: dim f64 | stds: dim f64
//! ```

use hushcam_core::classify::{Activation, Dense, MlpModel, MlpNetwork, Standardizer};

pub const MODEL_MAGIC: [u8; 4] = *b"HCMM";
pub const MODEL_VERSION: u32 = 1;

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend(x.to_le_bytes());
    }
}

pub fn encode_mlp(model: &MlpModel) -> Vec<u8> {
    let net = &model.network;
    let mut out = Vec::new();
    out.extend(MODEL_MAGIC);
    out.extend(MODEL_VERSION.to_le_bytes());
    out.push(match net.activation {
        Activation::Relu => 0,
        Activation::Tanh => 1,
    });
    out.extend((net.layers.len() as u32).to_le_bytes());
    for l in &net.layers {
        out.extend((l.inputs as u32).to_le_bytes());
        out.extend((l.outputs as u32).to_le_bytes());
    }
    for l in &net.layers {
        put_f64s(&mut out, &l.weights);
        put_f64s(&mut out, &l.bias);
    }
    let s = &model.standardizer;
    out.extend((s.dim() as u32).to_le_bytes());
    put_f64s(&mut out, s.means());
    put_f64s(&mut out, s.stds());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, String> {
        let raw = self.take(n.checked_mul(8).ok_or("length overflow")?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn decode_mlp(bytes: &[u8]) -> Result<MlpModel, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err("not a model file".into());
    }
    let version = r.u32()?;
    if version != MODEL_VERSION as usize {
        return Err(format!("unsupported model version {version}"));
    }
    let activation = match r.take(1)?[0] {
        0 => Activation::Relu,
        1 => Activation::Tanh,
        a => return Err(format!("unknown activation code {a}")),
    };
    let count = r.u32()?;
    let shapes = (0..count)
        .map(|_| Ok((r.u32()?, r.u32()?)))
        .collect::<Result<Vec<_>, String>>()?;
    for w in shapes.windows(2) {
        if w[0].1 != w[1].0 {
            return Err(format!("layer widths {} and {} do not chain", w[0].1, w[1].0));
        }
    }
    let mut layers = Vec::with_capacity(count);
    for (inputs, outputs) in shapes {
        let weights = r.f64s(inputs * outputs)?;
        let bias = r.f64s(outputs)?;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    let dim = r.u32()?;
    if layers.first().is_some_and(|l| l.inputs != dim) {
        return Err(format!("standardizer width {dim} does not match the first layer"));
    }
    let means = r.f64s(dim)?;
    let stds = r.f64s(dim)?;
    if r.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - r.pos));
    }
    Ok(MlpModel {
        network: MlpNetwork { layers, activation },
        standardizer: Standardizer::new(means, stds).map_err(|e| e.to_string())?,
    })
}
