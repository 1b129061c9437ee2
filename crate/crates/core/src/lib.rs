//! Streaming quality assessment of Linked Data dumps.
//!
//! Four quality metrics are computed over an N-Triples stream, each in an
//! exhaustive variant and an approximate one backed by a stream sketch:
//!
//! | metric                          | sketch                          |
//! |---------------------------------|---------------------------------|
//! | dereferenceability              | two-level reservoir sampling    |
//! | links to external data providers| reservoir sampling              |
//! | extensional conciseness         | stable Bloom filter             |
//! | clustering coefficient          | random-walk estimator           |

pub mod deref;
pub mod graph;
pub mod metrics;
pub mod ntriples;
pub mod sketches;
