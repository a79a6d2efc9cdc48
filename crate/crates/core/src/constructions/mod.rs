//! Constructive pieces of the lower-bound argument: parity killer states,
//! the depth-1 refuter, and the amplitude equation systems.

mod appendix_b;
mod depth1;
mod killer;

pub use appendix_b::{
    check_appendix_b, generate_appendix_b_instance, AppendixBCase, AppendixBReport, AppendixBValues, Residual,
};
pub use depth1::{refute_depth1, Depth1Outcome, Depth1Witness};
pub use killer::{kill_parity_depth2, kill_parity_state, kill_parity_state_n, DepthTwoKiller, KillerStateCertificate};
