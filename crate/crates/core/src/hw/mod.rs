//! Software model of the fixed-point hardware dataflow.
//!
//! [`fixed`] holds the word formats and arithmetic, [`pipeline`] runs the
//! grouping stages bit-accurately and [`ledger`] accounts cycles and block
//! memory per stage.

pub mod fixed;
pub mod ledger;
pub mod pipeline;

pub use fixed::{dequantize, mac_weighted_sum, quantize, FixedFormat, FixedMap, MacResult};
pub use ledger::{resource_report, stage_costs, HwProfile, ResourceReport, Stage, StageCost};
pub use pipeline::{run_hw_pipeline, HwRun};
