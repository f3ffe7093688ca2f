//! Affine, convolution and pooling primitives with explicit caches.
//!
//! Convolution uses the cross-correlation convention (no kernel flip) and is
//! computed as a matrix product against the im2col unrolling of the input.

use crate::error::{Error, Result};
use crate::numerics::tensor::{gemm, gemm_nt, gemm_tn};
use crate::numerics::Tensor;
use crate::Real;

/// `weights[m×n] · input + bias`. The input may have any shape holding `n` values.
pub fn affine(weights: &Tensor, input: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let [m, n] = weights.shape() else {
        return Err(Error::Dimension(format!(
            "affine weights must be 2-D, got {:?}",
            weights.shape()
        )));
    };
    let (m, n) = (*m, *n);
    if input.len() != n {
        return Err(Error::shapes("affine weights vs input", weights.shape(), input.shape()));
    }
    if bias.len() != m {
        return Err(Error::shapes("affine weights vs bias", weights.shape(), bias.shape()));
    }
    let w = weights.data();
    let x = input.data();
    let out = (0..m)
        .map(|j| {
            let row = &w[j * n..(j + 1) * n];
            row.iter().zip(x).map(|(a, b)| a * b).sum::<Real>() + bias.data()[j]
        })
        .collect();
    Tensor::new(vec![m], out)
}

/// `matrix[n×m] · error[m]`, summing in column order.
pub fn matvec(matrix: &Tensor, error: &Tensor) -> Result<Tensor> {
    let [n, m] = matrix.shape() else {
        return Err(Error::Dimension(format!("matvec needs a 2-D matrix, got {:?}", matrix.shape())));
    };
    let (n, m) = (*n, *m);
    if error.len() != m {
        return Err(Error::shapes("matvec", matrix.shape(), error.shape()));
    }
    let b = matrix.data();
    let e = error.data();
    let out = (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..m {
                acc += b[k * m + j] * e[j];
            }
            acc
        })
        .collect();
    Tensor::new(vec![n], out)
}

/// `weights[m×n]ᵀ · error[m]`. Summation order matches [`matvec`] on the
/// explicit transpose, so both routes give bit-identical results.
pub fn transpose_matvec(weights: &Tensor, error: &Tensor) -> Result<Tensor> {
    let [m, n] = weights.shape() else {
        return Err(Error::Dimension(format!(
            "transpose_matvec needs a 2-D matrix, got {:?}",
            weights.shape()
        )));
    };
    let (m, n) = (*m, *n);
    if error.len() != m {
        return Err(Error::shapes("transpose_matvec", weights.shape(), error.shape()));
    }
    let w = weights.data();
    let e = error.data();
    let out = (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for j in 0..m {
                acc += w[j * n + k] * e[j];
            }
            acc
        })
        .collect();
    Tensor::new(vec![n], out)
}

/// Outer product `error[m] · inputᵀ[n]`.
pub fn outer(error: &Tensor, input: &Tensor) -> Tensor {
    let (m, n) = (error.len(), input.len());
    let mut out = Vec::with_capacity(m * n);
    for &e in error.data() {
        out.extend(input.data().iter().map(|&z| e * z));
    }
    Tensor::new(vec![m, n], out).expect("outer product shape")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_height: usize,
    pub out_width: usize,
}

impl ConvGeometry {
    pub fn new(input: [usize; 3], kernel: usize, stride: usize, padding: usize) -> Result<Self> {
        let [channels, height, width] = input;
        if stride == 0 {
            return Err(Error::Dimension("convolution stride must be at least 1".into()));
        }
        if kernel == 0 || kernel > height + 2 * padding || kernel > width + 2 * padding {
            return Err(Error::Dimension(format!(
                "kernel {kernel}×{kernel} does not fit input {height}×{width} with padding {padding}"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            kernel,
            stride,
            padding,
            out_height: (height + 2 * padding - kernel) / stride + 1,
            out_width: (width + 2 * padding - kernel) / stride + 1,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    pub fn sites(&self) -> usize {
        self.out_height * self.out_width
    }

    /// Input offset feeding `(row r of the unrolled patch, output site s)`,
    /// or `None` when it falls in the zero padding.
    #[inline]
    fn source(&self, r: usize, s: usize) -> Option<usize> {
        let kk = self.kernel * self.kernel;
        let c = r / kk;
        let ki = (r % kk) / self.kernel;
        let kj = r % self.kernel;
        let oy = s / self.out_width;
        let ox = s % self.out_width;
        let y = (oy * self.stride + ki) as isize - self.padding as isize;
        let x = (ox * self.stride + kj) as isize - self.padding as isize;
        if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
            None
        } else {
            Some((c * self.height + y as usize) * self.width + x as usize)
        }
    }
}

/// Unrolls a `C×H×W` input into a `(C·k·k) × (H'·W')` patch matrix.
pub fn im2col(input: &Tensor, geom: &ConvGeometry) -> Result<Tensor> {
    let expected = [geom.channels, geom.height, geom.width];
    if input.shape() != expected {
        return Err(Error::shapes("im2col input vs geometry", input.shape(), &expected));
    }
    let (rows, sites) = (geom.patch_len(), geom.sites());
    let src = input.data();
    let mut cols = vec![0.0; rows * sites];
    for r in 0..rows {
        for s in 0..sites {
            if let Some(i) = geom.source(r, s) {
                cols[r * sites + s] = src[i];
            }
        }
    }
    Tensor::new(vec![rows, sites], cols)
}

/// Adjoint of [`im2col`]: scatters patch-matrix gradients back onto the input.
pub fn col2im(cols: &Tensor, geom: &ConvGeometry) -> Tensor {
    let (rows, sites) = (geom.patch_len(), geom.sites());
    let mut out = Tensor::zeros(&[geom.channels, geom.height, geom.width]);
    let dst = out.data_mut();
    let c = cols.data();
    for r in 0..rows {
        for s in 0..sites {
            if let Some(i) = geom.source(r, s) {
                dst[i] += c[r * sites + s];
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ConvCache {
    pub geometry: ConvGeometry,
    pub filters: usize,
    /// im2col unrolling of the forward input.
    pub cols: Tensor,
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input_error: Tensor,
    pub kernel_grad: Tensor,
    pub bias_grad: Tensor,
}

fn kernel_dims(kernels: &Tensor) -> Result<(usize, usize, usize)> {
    match kernels.shape() {
        [f, c, k1, k2] if k1 == k2 => Ok((*f, *c, *k1)),
        other => Err(Error::Dimension(format!(
            "kernels must be F×C×k×k, got {other:?}"
        ))),
    }
}

pub fn conv2d_forward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    stride: usize,
    padding: usize,
) -> Result<(Tensor, ConvCache)> {
    let (filters, channels, k) = kernel_dims(kernels)?;
    let [c, h, w] = input.shape() else {
        return Err(Error::Dimension(format!(
            "convolution input must be C×H×W, got {:?}",
            input.shape()
        )));
    };
    if *c != channels {
        return Err(Error::shapes("conv input vs kernels", input.shape(), kernels.shape()));
    }
    if bias.len() != filters {
        return Err(Error::shapes("conv kernels vs bias", kernels.shape(), bias.shape()));
    }
    let geometry = ConvGeometry::new([*c, *h, *w], k, stride, padding)?;
    let cols = im2col(input, &geometry)?;
    let sites = geometry.sites();
    let mut out = vec![0.0; filters * sites];
    for (f, row) in out.chunks_exact_mut(sites).enumerate() {
        row.fill(bias.data()[f]);
    }
    gemm(kernels.data(), cols.data(), &mut out, filters, geometry.patch_len(), sites);
    let output = Tensor::new(vec![filters, geometry.out_height, geometry.out_width], out)?;
    Ok((
        output,
        ConvCache {
            geometry,
            filters,
            cols,
        },
    ))
}

fn check_error(cache: &ConvCache, output_error: &Tensor) -> Result<()> {
    let g = &cache.geometry;
    let expected = [cache.filters, g.out_height, g.out_width];
    if output_error.shape() != expected {
        return Err(Error::shapes("conv cache vs output error", &expected, output_error.shape()));
    }
    Ok(())
}

/// Error with respect to the input, routed through `kernels` (the forward
/// kernels for exact gradients, or a fixed feedback tensor of the same shape).
pub fn conv2d_input_error(cache: &ConvCache, kernels: &Tensor, output_error: &Tensor) -> Result<Tensor> {
    check_error(cache, output_error)?;
    let g = &cache.geometry;
    let expected = [cache.filters, g.channels, g.kernel, g.kernel];
    if kernels.shape() != expected {
        return Err(Error::shapes("conv cache vs kernels", &expected, kernels.shape()));
    }
    let mut dcols = vec![0.0; g.patch_len() * g.sites()];
    gemm_tn(kernels.data(), output_error.data(), &mut dcols, cache.filters, g.patch_len(), g.sites());
    let dcols = Tensor::new(vec![g.patch_len(), g.sites()], dcols)?;
    Ok(col2im(&dcols, g))
}

/// Kernel and bias gradients for the given output error.
pub fn conv2d_param_grads(cache: &ConvCache, output_error: &Tensor) -> Result<(Tensor, Tensor)> {
    check_error(cache, output_error)?;
    let g = &cache.geometry;
    let mut kgrad = vec![0.0; cache.filters * g.patch_len()];
    gemm_nt(output_error.data(), cache.cols.data(), &mut kgrad, cache.filters, g.sites(), g.patch_len());
    let bgrad: Vec<Real> = output_error
        .data()
        .chunks_exact(g.sites())
        .map(|row| row.iter().sum())
        .collect();
    Ok((
        Tensor::new(vec![cache.filters, g.channels, g.kernel, g.kernel], kgrad)?,
        Tensor::new(vec![cache.filters], bgrad)?,
    ))
}

pub fn conv2d_backward(cache: &ConvCache, kernels: &Tensor, output_error: &Tensor) -> Result<ConvGrads> {
    let input_error = conv2d_input_error(cache, kernels, output_error)?;
    let (kernel_grad, bias_grad) = conv2d_param_grads(cache, output_error)?;
    Ok(ConvGrads {
        input_error,
        kernel_grad,
        bias_grad,
    })
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    pub input_shape: [usize; 3],
    /// Flat input offset of the maximum for every output element.
    pub argmax: Vec<usize>,
}

/// Max pooling over `window×window` regions. Ties resolve to the first
/// position in row-major scan order.
pub fn maxpool2d(input: &Tensor, window: usize, stride: usize) -> Result<(Tensor, PoolCache)> {
    let [c, h, w] = *input.shape() else {
        return Err(Error::Dimension(format!(
            "pool input must be C×H×W, got {:?}",
            input.shape()
        )));
    };
    if window == 0 || stride == 0 || window > h || window > w {
        return Err(Error::Dimension(format!(
            "pool window {window} (stride {stride}) does not fit input {h}×{w}"
        )));
    }
    let oh = (h - window) / stride + 1;
    let ow = (w - window) / stride + 1;
    let src = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = (ch * h + oy * stride) * w + ox * stride;
                for dy in 0..window {
                    for dx in 0..window {
                        let i = (ch * h + oy * stride + dy) * w + ox * stride + dx;
                        if src[i] > src[best] {
                            best = i;
                        }
                    }
                }
                out.push(src[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        Tensor::new(vec![c, oh, ow], out)?,
        PoolCache {
            input_shape: [c, h, w],
            argmax,
        },
    ))
}

pub fn maxpool2d_backward(cache: &PoolCache, output_error: &Tensor) -> Result<Tensor> {
    if output_error.len() != cache.argmax.len() {
        return Err(Error::Dimension(format!(
            "pool cache holds {} outputs but error has shape {:?}",
            cache.argmax.len(),
            output_error.shape()
        )));
    }
    let mut out = Tensor::zeros(&cache.input_shape);
    let dst = out.data_mut();
    for (&i, &e) in cache.argmax.iter().zip(output_error.data()) {
        dst[i] += e;
    }
    Ok(out)
}
