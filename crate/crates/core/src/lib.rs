//! Conversational querying and modification of 3D scenes for blind and
//! low-vision users.

pub mod color;
pub mod gateway;
pub mod harness;
pub mod prompt;
pub mod scene;
pub mod scenefile;
pub mod scope;
pub mod session;
pub mod sml;
pub mod ssg;
