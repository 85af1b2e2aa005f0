//! Event-centric gender bias analysis over biography corpora.
//!
//! The pipeline runs in five stages, each living in its own module:
//!
//! 1. [`corpus`] loads the JSONL corpus, splits sections into sentences and
//!    reports per-occupation statistics.
//! 2. [`detect`] finds event triggers (built-in lexicon or external
//!    annotations), lemmatizes them and builds per-gender frequency tables.
//! 3. [`rank`] scores every event with the odds ratio and extracts the
//!    top-k male and female events.
//! 4. [`calibrate`] generates name/pronoun-substituted instances from
//!    verified template sentences, measures per-gender detection recall and
//!    corrects frequencies before re-ranking.
//! 5. [`weat`] and [`analyze`] score the extracted events against gendered
//!    attribute words and check that they are frequent within their tables.

pub mod analyze;
pub mod calibrate;
pub mod corpus;
pub mod detect;
pub mod rank;
pub mod resources;
pub mod weat;

mod error;
pub use error::LineDiagnostic;
mod gender;

pub use error::{Error, Result};
pub use gender::Gender;
