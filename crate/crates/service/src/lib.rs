//! Participant-side review service: import chat exports, review and edit
//! the extracted metadata, and submit exactly what was previewed.
//!
//! [`session::ReviewSession`] holds the state, [`http`] exposes it on the
//! loopback interface and [`cli`] drives it from the command line.

pub mod cli;
pub mod http;
pub mod session;
pub mod store;
pub mod submit;

pub use session::{ChatState, Importer, ReviewSession, SessionError};
pub use submit::{Dispatcher, Receipt, Target};
