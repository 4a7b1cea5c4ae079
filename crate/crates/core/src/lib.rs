//! Generate contest test suites from LLM-written testlib bundles, then
//! measure what they catch by re-judging a corpus of accepted solutions
//! against both the original suite and the generated one.
//!
//! The pieces, in pipeline order:
//!
//! - [`prompt`] renders the generation prompt, parses the model's answer
//!   into a [`prompt::GeneratorBundle`] and lints it.
//! - [`llm`] calls the model with record/replay caching and cost tracking.
//! - [`forge`] compiles, runs and validates the bundle into a
//!   [`model::TestSuite`] with expected outputs.
//! - [`sandbox`] runs untrusted programs under CPU, memory and output limits.
//! - [`judge`] turns runs into verdicts.
//! - [`diffeval`] compares two suites' verdicts into per-problem rows,
//!   failure-rate buckets and verdict histograms.
//! - [`exchange`] moves suites in and out of judge-platform archives and
//!   talks to a remote judge.
//!
//! [`workspace`] and [`pipeline`] tie these to a config file and a problem
//! directory layout. [`fixtures`] checks the bundled example corpus.

pub mod diffeval;
pub mod exchange;
pub mod fixtures;
pub mod forge;
pub mod judge;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod prompt;
pub mod sandbox;
pub mod toolchain;
pub mod workspace;
