//! A version-3 Z-machine whose text output and line input are handed to a
//! host program instead of a terminal.
//!
//! ```
//! use std::sync::Arc;
//! use zmachine::{fixture, MachineState, Status, StoryImage};
//!
//! let story = Arc::new(StoryImage::load(&fixture::hello_story()).unwrap());
//! let mut vm = MachineState::new(story, 0);
//! assert_eq!(vm.run_until_input().unwrap(), "You are in a box.");
//! assert_eq!(vm.status(), Status::AwaitingInput);
//! ```

pub mod asm;
pub mod disasm;
mod error;
pub mod fixture;
pub mod instruction;
mod snapshot;
mod story;
pub mod text;
mod vm;

pub use error::{Result, ZError};
pub use instruction::{decode, Branch, BranchTarget, Form, Instruction, Opcode, Operand, OperandCount};
pub use snapshot::Snapshot;
pub use story::{offset, Header, Memory, StoryImage, HEADER_LEN};
pub use vm::{Frame, MachineState, ReadRequest, Status, DEFAULT_STEP_LIMIT};

/// Loads and validates a story file.
pub fn load_story(bytes: &[u8]) -> Result<StoryImage> {
    StoryImage::load(bytes)
}
