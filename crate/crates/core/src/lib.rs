//! Compiler from resource-aware POWL process models to BPMN 2.0
//! collaboration diagrams.
//!
//! The pipeline is:
//!
//! 1. [`dsl::parse`] reads the textual model into a [`PowlModel`].
//! 2. [`transform::compile`] translates control flow, assigns every flow node
//!    to a pool and lane, and replaces cross-pool sequence flows by message
//!    events and message flows.
//! 3. [`layout::layout`] places pools, lanes and nodes and routes edges.
//! 4. [`xml::serialize`] writes BPMN 2.0 XML with diagram interchange.
//!
//! [`semantics`] holds the bounded trace semantics used to check that the
//! translation preserves behaviour.

pub mod dsl;
pub mod layout;
pub mod model;
pub mod relation;
pub mod sample;
pub mod semantics;
pub mod transform;
pub mod xml;

pub use model::{PowlModel, ResourceContext, ValidationReport};
pub use transform::CollaborationSkeleton;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{} parse error(s); first: {}", .0.len(), .0[0])]
    Parse(Vec<dsl::ParseError>),
    #[error(transparent)]
    Transform(#[from] transform::TransformError),
    #[error(transparent)]
    Serialize(#[from] xml::SerializeError),
}

/// Compiled artifacts for one model.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub model: PowlModel,
    pub skeleton: CollaborationSkeleton,
    pub diagram: layout::Diagram,
    pub xml: String,
}

/// Text to BPMN XML in one call.
pub fn compile_source(text: &str) -> Result<Compiled, Error> {
    let model = dsl::parse(text).map_err(Error::Parse)?;
    compile_model(model)
}

pub fn compile_model(model: PowlModel) -> Result<Compiled, Error> {
    let skeleton = transform::compile(&model)?;
    let diagram = layout::layout(&skeleton);
    let xml = xml::serialize(&skeleton, &diagram)?;
    Ok(Compiled {
        model,
        skeleton,
        diagram,
        xml,
    })
}
