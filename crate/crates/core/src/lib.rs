//! Collaborative, timecoded video annotation.
//!
//! - [`model`]: projects, posts, comments, tags, filtering.
//! - [`syntax`]: timecodes, post headers, the `.travisgo` file, export.
//! - [`protocol`]: join codes, op envelopes, sequencing, replica folding.
//! - [`relay`]: the in-memory WebSocket relay and its client.
//! - [`sim`]: in-process multi-client convergence simulator.

pub mod cli;
pub mod model;
pub mod protocol;
pub mod relay;
pub mod sim;
pub mod syntax;

pub use model::{Category, FilterSet, ModelError, Post, Project, Tag, Username};
pub use syntax::{SyntaxError, Timecode};
