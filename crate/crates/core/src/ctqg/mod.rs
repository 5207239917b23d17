//! Reversible-logic synthesis: registers, arithmetic, comparisons and
//! controlled blocks lowered to NOT, CNOT and Toffoli gates.

pub mod ancilla;
pub mod arith;
pub mod circuit;
pub mod compile;
pub mod control;
pub mod synth;

pub use ancilla::AncillaManager;
pub use arith::{adder_carry_gates, adder_gates, controlled_adder_plan, subtractor_gates};
pub use circuit::{
    simulate_gates, simulate_reversible, CountingSink, GateCounts, GateSink, Line, Register,
    RevCircuit, RevGate,
};
pub use compile::{
    compile_ctqg_module, compile_ctqg_streaming, netlist_text, simulate, to_flat_module,
    write_netlist,
};
pub use control::{controlize, decompose_multi_control, Mcx};
