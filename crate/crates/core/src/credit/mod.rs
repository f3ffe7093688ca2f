//! Credit assignment: backprop, feedback alignment, direct feedback
//! alignment, local Hebbian rules and the ridge readout.

mod backward;
mod feedback;
mod hebbian;
mod loss;
mod ridge;
mod rule;
mod update;

pub use backward::{bp_backward, dfa_backward, fa_backward, layer_gradients, ErrorSignal};
pub use feedback::{FeedbackMatrices, FeedbackMode};
pub use hebbian::{apply_weight_decay, hebbian_train_layer};
pub use loss::{cross_entropy, loss_grad_softmax_ce, one_hot, softmax};
pub use ridge::{ridge_fit, ridge_predict, RidgeClassifier};
pub use rule::{RuleKind, UpdateRule};
pub use update::{hebbian_vanilla_update, instar_update, kwta_triangle, weight_update_from_error};
