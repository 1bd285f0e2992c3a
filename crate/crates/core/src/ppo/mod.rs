//! Proximal policy optimization with a masked discrete actor and a value critic.

mod config;
mod loss;
mod policy;
mod rollout;
mod train;

pub use config::PpoConfig;
pub use loss::{clipped_surrogate, ppo_loss, ppo_loss_and_grads, LossComponents, Minibatch};
pub use policy::{
    actor_spec, argmax_masked, build_networks, critic_spec, masked_softmax, sample_index, ActionMask,
    ActorCritic, Policy,
};
pub use rollout::{
    collect_rollout, compute_returns_advantages, discounted_returns, mean_std, EpisodeRecord,
    RolloutBuffer, Runner, Transition,
};
pub use train::{
    clip_gradients, evaluate, minibatch, summarize, train, train_with, update, EvalSummary,
    Optimizers, TrainLogRow, TrainOutcome, TRAIN_LOG_HEADER,
};
