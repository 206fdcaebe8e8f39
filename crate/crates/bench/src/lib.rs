//! Benchmark fixtures.

use std::sync::Arc;

use pipeflow_core::fem::{Discretization, Family};
use pipeflow_core::mesh::{generate_pipe, PipeSpec};

/// Taylor–Hood discretization of the `[0, 4] × [-1, 1]` channel.
pub fn channel(h: f64) -> Discretization {
    let mesh = generate_pipe(&PipeSpec::channel(0.0, 4.0, 1.0, h)).expect("channel mesh");
    Discretization::taylor_hood(Arc::new(mesh), Family::P1)
}
