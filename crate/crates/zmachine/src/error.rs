use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZError {
    #[error("unsupported story version {0} (only version 3 is accepted)")]
    UnsupportedVersion(u8),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("illegal opcode {opcode:#04x} ({kind}) at {addr:#07x}")]
    IllegalOpcode { addr: usize, kind: &'static str, opcode: u8 },
    #[error("truncated instruction at {addr:#07x}")]
    TruncatedInstruction { addr: usize },
    #[error("unterminated z-string")]
    UnterminatedString,
    #[error("execution fault at {pc:#07x}: {reason}")]
    ExecutionFault { pc: usize, reason: String },
    #[error("runaway program: {steps} instructions without requesting input")]
    RunawayProgram { steps: u64 },
    #[error("machine is not awaiting input")]
    NotAwaitingInput,
}

pub type Result<T> = std::result::Result<T, ZError>;
