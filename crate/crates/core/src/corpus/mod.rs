//! Demonstrations, annotations, alignments and dataset I/O.

pub mod action;
pub mod alignment;
pub mod dataset;
pub mod demo;
pub mod entity;
pub mod instruction;
pub mod observation;

pub use action::{Action, ActionKind, MalformedAction};
pub use alignment::{
    binomial, count_alignments, enumerate_alignments, seg_of_alignment, Alignment,
    AlignmentError, Enumeration, Segmentation,
};
pub use dataset::{
    annotated_count, build_inventory, split_annotated, Dataset, DatasetError, DatasetHeader,
};
pub use demo::{DemoError, Demonstration, EvalAccess, Step};
pub use entity::{Entity, Object, Receptacle, UnknownEntity};
pub use instruction::{grammar_instantiations, Goal, GoalView, Instruction, SubtaskCategory};
pub use observation::{flags, CellCode, Observation};
