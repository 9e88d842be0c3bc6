//! Experiment harness around the robust-MDP core: file formats, flat
//! key=value configuration, and the Algorithm-1 pipeline driver used by
//! the `rmdp` binary.

pub mod config;
pub mod formats;
pub mod pipeline;
