//! Test support: synthetic export corpora, payload leak scanning and a mock
//! HTTP server. Not part of the shipped tool.

pub mod corpus;
pub mod mock_http;
pub mod privacy;
pub mod url_table;
