//! Layer topology, parameter initialization, the cached forward pass and
//! sparsity masks.

mod checkpoint;
mod model;
mod spec;

pub use checkpoint::{read_checkpoint, write_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    apply_masks, build_network, forward, make_mask, ForwardCache, HeadKind, LayerCache, LayerParams, Network,
};
pub use spec::{conv_stack, LayerKind, LayerSpec, PAPER_FILTERS};
