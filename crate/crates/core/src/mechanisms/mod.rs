//! Privatization mechanisms and samplers.
//!
//! Every mechanism can be materialized as a dense [`Channel`] for audits.
//! The Hadamard-Response mechanisms also sample directly from their
//! structure, which is what the simulation paths use at large `k`.
//!
//! [`Channel`]: crate::channel::Channel

mod binary;
mod hadamard_response;
mod sampling;

pub use binary::{binary_optimal_channel, mangat, warner, BinaryMechanismParams};
pub use hadamard_response::{
    bsldp_hr_channel, hlldp_hr_channel, BsHadamardResponse, BsHrLayout, HlHadamardResponse, HlHrLayout,
};
pub use sampling::{privatize_all, sample_output, ChannelSampler, Privatizer};

/// Bits needed to index `output_size` symbols.
pub fn message_bits(output_size: usize) -> u32 {
    output_size.next_power_of_two().trailing_zeros()
}

pub(crate) fn check_eps(eps: f64) -> crate::Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(crate::error::invalid(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}
