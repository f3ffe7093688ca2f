//! Versioned binary checkpoint container.
//!
//! All integers and floats are little-endian; tensor values are always stored
//! as `f64` regardless of the in-memory scalar width.
//!
//! ```text
//! magic        4 bytes  "BIOG"
//! version      u16      currently 1
//! head         u8       0 = linear, 1 = ridge
//! input rank   u8       followed by `rank` u32 extents
//! layer count  u32
//! per layer:
//!   kind       u8       0 = conv, 1 = pool, 2 = dense
//!   fan_out    u32
//!   kernel     u32
//!   stride     u32
//!   padding    u32
//!   activation u8       0 = relu, 1 = tanh, 2 = identity, 3 = triangle
//!   conv/dense only:
//!     weights  tensor
//!     bias     tensor
//!     has_mask u8       then a mask tensor if 1
//! has_readout  u8       then, if 1: lambda f64, readout weights tensor
//!
//! tensor:      rank u8, `rank` u32 extents, product(extents) f64 values
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::credit::RidgeClassifier;
use crate::error::{Error, Result};
use crate::network::model::{HeadKind, LayerParams, Network};
use crate::network::spec::{LayerKind, LayerSpec};
use crate::numerics::{ActivationKind, Tensor};
use crate::Real;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BIOG";
pub const CHECKPOINT_VERSION: u16 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_tensor(w: &mut impl Write, t: &Tensor) -> Result<()> {
    w.write_all(&[t.ndim() as u8])?;
    for &d in t.shape() {
        put_u32(w, d)?;
    }
    for &v in t.data() {
        w.write_all(&(v as f64).to_le_bytes())?;
    }
    Ok(())
}

pub fn write_checkpoint(net: &Network, w: &mut impl Write) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&[match net.head {
        HeadKind::Linear => 0,
        HeadKind::Ridge => 1,
    }])?;
    w.write_all(&[net.input_shape.len() as u8])?;
    for &d in &net.input_shape {
        put_u32(w, d)?;
    }
    put_u32(w, net.specs.len())?;
    for (spec, params) in net.specs.iter().zip(&net.params) {
        w.write_all(&[match spec.kind {
            LayerKind::Conv => 0,
            LayerKind::Pool => 1,
            LayerKind::Dense => 2,
        }])?;
        put_u32(w, spec.fan_out)?;
        put_u32(w, spec.kernel)?;
        put_u32(w, spec.stride)?;
        put_u32(w, spec.padding)?;
        w.write_all(&[spec.activation.code()])?;
        if let Some(p) = params {
            put_tensor(w, &p.weights)?;
            put_tensor(w, &p.bias)?;
            match &p.mask {
                Some(m) => {
                    w.write_all(&[1])?;
                    put_tensor(w, m)?;
                }
                None => w.write_all(&[0])?,
            }
        }
    }
    match &net.readout {
        Some(r) => {
            w.write_all(&[1])?;
            w.write_all(&(r.lambda as f64).to_le_bytes())?;
            put_tensor(w, &r.weights)?;
        }
        None => w.write_all(&[0])?,
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Checkpoint(format!("truncated while reading {what}")))?;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.bytes(what)?) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn tensor(&mut self, what: &str) -> Result<Tensor> {
        let rank = self.u8(what)? as usize;
        let shape = (0..rank).map(|_| self.u32(what)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let data = (0..n)
            .map(|_| self.f64(what).map(|v| v as Real))
            .collect::<Result<Vec<_>>>()?;
        Tensor::new(shape, data)
    }
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Network> {
    let mut r = Reader { inner: r };
    if &r.bytes::<4>("magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic bytes (expected BIOG)".into()));
    }
    let version = u16::from_le_bytes(r.bytes("version")?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let head = match r.u8("head")? {
        0 => HeadKind::Linear,
        1 => HeadKind::Ridge,
        other => return Err(Error::Checkpoint(format!("unknown head kind {other}"))),
    };
    let rank = r.u8("input rank")? as usize;
    let input_shape = (0..rank).map(|_| r.u32("input shape")).collect::<Result<Vec<_>>>()?;
    let count = r.u32("layer count")?;
    let mut specs = Vec::with_capacity(count);
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let kind = match r.u8("layer kind")? {
            0 => LayerKind::Conv,
            1 => LayerKind::Pool,
            2 => LayerKind::Dense,
            other => return Err(Error::Checkpoint(format!("layer {i}: unknown kind {other}"))),
        };
        let spec = LayerSpec {
            kind,
            fan_out: r.u32("fan_out")?,
            kernel: r.u32("kernel")?,
            stride: r.u32("stride")?,
            padding: r.u32("padding")?,
            activation: ActivationKind::from_code(r.u8("activation")?)
                .map_err(|e| Error::Checkpoint(format!("layer {i}: {e}")))?,
        };
        let p = if kind.has_params() {
            let weights = r.tensor("weights")?;
            let bias = r.tensor("bias")?;
            let mask = match r.u8("mask flag")? {
                0 => None,
                _ => Some(r.tensor("mask")?),
            };
            Some(LayerParams { weights, bias, mask })
        } else {
            None
        };
        specs.push(spec);
        params.push(p);
    }
    let readout = match r.u8("readout flag")? {
        0 => None,
        _ => {
            let lambda = r.f64("ridge lambda")? as Real;
            let weights = r.tensor("readout weights")?;
            Some(RidgeClassifier { weights, lambda })
        }
    };
    let net = Network {
        input_shape,
        specs,
        params,
        head,
        readout,
    };
    // Reject files whose parameter tensors disagree with their own topology.
    let shapes = net.shapes().map_err(|e| Error::Checkpoint(e.to_string()))?;
    for (i, (spec, p)) in net.specs.iter().zip(&net.params).enumerate() {
        if let (Some(expected), Some(p)) = (spec.weight_shape(&shapes[i]), p) {
            if p.weights.shape() != expected.as_slice() || p.bias.len() != spec.fan_out {
                return Err(Error::Checkpoint(format!("layer {i}: parameter shapes disagree with topology")));
            }
        }
    }
    Ok(net)
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    read_checkpoint(&mut BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, conv_stack};

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_checkpoint(&mut &b"NOPE\x01\x00"[..]), Err(Error::Checkpoint(_))));
        let net = build_network(&[4], vec![LayerSpec::dense(2, ActivationKind::Identity)], HeadKind::Linear, 0).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&net, &mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(read_checkpoint(&mut bytes.as_slice()), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn header_layout() {
        let net = build_network(&[3, 8, 8], conv_stack(&[2], 3, ActivationKind::Relu, Some(3)), HeadKind::Linear, 0).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&net, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"BIOG");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 3);
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
    }
}
