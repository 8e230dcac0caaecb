//! Train/test split generators, data-availability sweeps and the synthetic
//! planted-weight world.

mod splits;
mod sweeps;
mod synth;

pub use splits::{parse_split_csv, random_split, size_split, Split};
pub use sweeps::{model_sweep, question_sweep};
pub use synth::{synth_generate, SynthConfig, SynthWorld};
