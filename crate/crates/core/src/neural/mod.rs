//! Share network for largest unanimous mechanisms and its training.
//!
//! The network maps a coalition bit vector to a share vector: a softmax over
//! the members, padded with ones. Gradients are computed by hand in reverse
//! mode and validated with [`gradient_check`].

mod cost;
mod gradcheck;
mod network;
mod train;

pub use cost::{
    batch_cost, monotonicity_penalty, penalty_pairs, porf_cost, porf_expected, prepare_batch, sample_batch,
    sigmoid_cost, sigmoid_expected, simulate, BatchElement, CostKind, CostValue, PreparedBatch, Simulation,
    EXHAUSTIVE_PENALTY_AGENTS, SAMPLED_PENALTY_PAIRS,
};
pub use gradcheck::{gradient_check, GradientCheck, GRADIENT_FLOOR};
pub use network::{
    layer_dims, network_to_schedule, parameter_count, NetworkParams, HIDDEN_LAYERS, HIDDEN_WIDTH, INIT_BIAS,
    MASK_CONSTANT,
};
pub use train::{
    evaluate_network, init_target, initial_params, supervise, supervision_loss, train, Adam, HistoryEntry, Init,
    SupervisionReport, TrainConfig, TrainOutcome, FEASIBLE_PENALTY,
};
