//! Random labeled rooted trees with a prescribed degree sequence.

pub mod codec;
pub mod enumeration;
pub mod lab;
pub mod samplers;
pub mod transforms;
pub mod verify;
pub mod trees;
pub mod weights;

pub use codec::{CodeIter, CodecError, ConstructionTrace, SequenceCode};
pub use trees::{DegreeSequence, Label, LabeledRootedTree, PartialTree, TreeError};
pub use weights::{TiltResult, WeightSequence};
