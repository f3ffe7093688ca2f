//! First-layer filter grids as binary PPM (P6) images.

use biolearn::network::{LayerKind, Network};
use biolearn::numerics::Tensor;
use biolearn::Real;

/// Grey level of a filter whose values are all equal.
pub const DEGENERATE_GRAY: u8 = 128;

/// Tiles `F×C×k×k` kernels into a grid of `⌈√F⌉` columns, row-major by
/// filter index, with 1-pixel black borders between and around tiles.
///
/// Each filter is min-max scaled to 0–255 on its own. Three-channel filters
/// render as RGB; any other channel count renders the channel mean as grey.
pub fn render_filter_grid(kernels: &Tensor) -> Result<Vec<u8>, String> {
    let &[f, c, kh, kw] = kernels.shape() else {
        return Err(format!("expected F×C×k×k kernels, got {:?}", kernels.shape()));
    };
    if f == 0 {
        return Err("no filters to render".into());
    }
    let cols = (1..=f).find(|c| c * c >= f).expect("f ≥ 1");
    let rows = f.div_ceil(cols);
    let width = cols * (kw + 1) + 1;
    let height = rows * (kh + 1) + 1;
    let mut pixels = vec![0u8; width * height * 3];
    let per_filter = c * kh * kw;
    for (n, filter) in kernels.data().chunks_exact(per_filter).enumerate() {
        let lo = filter.iter().copied().fold(Real::INFINITY, Real::min);
        let hi = filter.iter().copied().fold(Real::NEG_INFINITY, Real::max);
        let scale = |v: Real| -> u8 {
            if hi > lo {
                (255.0 * (v - lo) / (hi - lo)).round() as u8
            } else {
                DEGENERATE_GRAY
            }
        };
        let top = (n / cols) * (kh + 1) + 1;
        let left = (n % cols) * (kw + 1) + 1;
        for y in 0..kh {
            for x in 0..kw {
                let at = |ch: usize| filter[ch * kh * kw + y * kw + x];
                let rgb = if c == 3 {
                    [scale(at(0)), scale(at(1)), scale(at(2))]
                } else {
                    let mean = (0..c).map(at).sum::<Real>() / c as Real;
                    let g = if hi > lo { scale(mean) } else { DEGENERATE_GRAY };
                    [g, g, g]
                };
                let offset = ((top + y) * width + left + x) * 3;
                pixels[offset..offset + 3].copy_from_slice(&rgb);
            }
        }
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    Ok(out)
}

/// Renders the first layer of `net`, which must be convolutional.
pub fn render_first_layer(net: &Network) -> Result<Vec<u8>, String> {
    match (net.specs.first().map(|s| s.kind), net.layer(0)) {
        (Some(LayerKind::Conv), Some(p)) => render_filter_grid(&p.weights),
        _ => Err("no conv filters to render".into()),
    }
}
