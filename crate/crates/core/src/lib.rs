// SPDX-License-Identifier: Apache-2.0

//! Clock- and reset-domain-crossing verification: netlist elaboration,
//! domain analysis, synchronizer recognition, structural rules,
//! metastability-injection simulation, crossing coverage and
//! SystemVerilog checker generation.

pub mod analysis;
pub mod checks;
pub mod codegen;
pub mod corpus;
pub mod coverage;
pub mod domains;
pub mod elaborate;
pub mod frontend;
pub mod msi;
pub mod netlist;
pub mod pairs;
pub mod sync;
