//! Small dense/convolutional network engine in `f64`.

mod adam;
mod forward;
mod gradcheck;
mod loss;
mod params;
mod spec;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use forward::{backward, forward, sigmoid, softmax, ForwardCache};
pub use gradcheck::{gradient_check, gradient_check_subset, LossFn};
pub use loss::cross_entropy;
pub use params::{stored_spec_description, LayerParams, Parameters};
pub use spec::{Activation, Layer, NetworkSpec};
pub use tensor::Tensor;
