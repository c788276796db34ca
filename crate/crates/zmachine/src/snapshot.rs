//! Deep copies of machine state, used for restarts and side-effect-free probes.

use rand_chacha::ChaCha8Rng;

use crate::vm::{Frame, MachineState, ReadRequest, Status, Stream3};

/// Everything mutable in a [`MachineState`]; the story image is shared and
/// not copied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    dynamic: Vec<u8>,
    stack: Vec<u16>,
    frames: Vec<Frame>,
    pc: usize,
    rng: ChaCha8Rng,
    status: Status,
    read: Option<ReadRequest>,
    screen_enabled: bool,
    upper_window: bool,
    stream3: Vec<Stream3>,
}

const MAGIC: &[u8; 4] = b"ZSNP";

impl Snapshot {
    /// Serialized size independent of memory, stack and frames: magic, pc,
    /// status, pending read, window flags, RNG state (seed, stream, position)
    /// and the four length prefixes.
    pub const FIXED_OVERHEAD: usize = 4 + 4 + 1 + 5 + 2 + (32 + 8 + 16) + 4 * 4;
    /// Per-frame size excluding locals.
    pub const FRAME_OVERHEAD: usize = 4 + 2 + 4 + 1;

    pub(crate) fn capture(state: &MachineState) -> Snapshot {
        Snapshot {
            dynamic: state.dynamic.clone(),
            stack: state.stack.clone(),
            frames: state.frames.clone(),
            pc: state.pc,
            rng: state.rng.clone(),
            status: state.status,
            read: state.read,
            screen_enabled: state.screen_enabled,
            upper_window: state.upper_window,
            stream3: state.stream3.clone(),
        }
    }

    pub(crate) fn apply(&self, state: &mut MachineState) {
        state.dynamic.clone_from(&self.dynamic);
        state.stack.clone_from(&self.stack);
        state.frames.clone_from(&self.frames);
        state.pc = self.pc;
        state.rng = self.rng.clone();
        state.status = self.status;
        state.read = self.read;
        state.screen_enabled = self.screen_enabled;
        state.upper_window = self.upper_window;
        state.stream3.clone_from(&self.stream3);
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Canonical byte encoding; equal snapshots encode identically.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.pc as u32).to_be_bytes());
        out.push(match self.status {
            Status::Running => 0,
            Status::AwaitingInput => 1,
            Status::Halted => 2,
        });
        match self.read {
            Some(r) => {
                out.push(1);
                out.extend_from_slice(&r.text_buffer.to_be_bytes());
                out.extend_from_slice(&r.parse_buffer.to_be_bytes());
            }
            None => out.extend_from_slice(&[0; 5]),
        }
        out.push(self.screen_enabled as u8);
        out.push(self.upper_window as u8);
        out.extend_from_slice(&self.rng.get_seed());
        out.extend_from_slice(&self.rng.get_stream().to_be_bytes());
        out.extend_from_slice(&self.rng.get_word_pos().to_be_bytes());

        out.extend_from_slice(&(self.dynamic.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.dynamic);
        out.extend_from_slice(&(self.stack.len() as u32).to_be_bytes());
        for w in &self.stack {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.extend_from_slice(&(self.frames.len() as u32).to_be_bytes());
        for f in &self.frames {
            out.extend_from_slice(&(f.return_pc as u32).to_be_bytes());
            out.push(f.store.is_some() as u8);
            out.push(f.store.unwrap_or(0));
            out.extend_from_slice(&(f.stack_base as u32).to_be_bytes());
            out.push(f.locals.len() as u8);
            for l in &f.locals {
                out.extend_from_slice(&l.to_be_bytes());
            }
        }
        out.extend_from_slice(&(self.stream3.len() as u32).to_be_bytes());
        for s in &self.stream3 {
            out.extend_from_slice(&s.table.to_be_bytes());
            out.extend_from_slice(&(s.data.len() as u32).to_be_bytes());
            out.extend_from_slice(&s.data);
        }
        out
    }

    pub fn byte_len(&self) -> usize {
        Self::FIXED_OVERHEAD
            + self.dynamic.len()
            + 2 * self.stack.len()
            + self
                .frames
                .iter()
                .map(|f| Self::FRAME_OVERHEAD + 2 * f.locals.len())
                .sum::<usize>()
            + self.stream3.iter().map(|s| 6 + s.data.len()).sum::<usize>()
    }
}
