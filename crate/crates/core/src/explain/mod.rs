//! Why did the model rank this patient high?
//!
//! Three complementary lenses, all operating on the *raw* register so
//! encoded feature blocks move as one unit:
//!
//! * [`pfi`] — permutation feature importance: how much does a rank
//!   metric drop when one column's values are shuffled across patients?
//! * [`ale`] — accumulated local effects: how does the score move as one
//!   numeric feature sweeps its observed range, holding each patient's
//!   other features fixed?
//! * [`local_surrogate`] — a weighted linear fit around a single patient:
//!   which features push this score up or down, and by how much?
//!
//! Every entry point takes the scorer as a closure over frames — a fitted
//! [`Pipeline`](crate::harness::Pipeline), a bare model, or any black box
//! — so the explanations never depend on model internals.

mod ale;
mod pfi;
mod surrogate;

pub use ale::{ale, ALECurve};
pub use pfi::{pfi, FeatureImportance, ImportanceReport};
pub use surrogate::{local_surrogate, SurrogateExplanation};
