//! Linear-sweep disassembly for the `zdump` command.

use crate::instruction::{self, Instruction};
use crate::story::StoryImage;

/// Decodes up to `limit` instructions starting at the story's initial PC.
/// Sweeping stops at the first byte sequence that does not decode; the
/// returned error message describes it.
pub fn disassemble(story: &StoryImage, limit: usize) -> (Vec<Instruction>, Option<String>) {
    let mut out = Vec::new();
    let mut at = story.header().initial_pc as usize;
    while out.len() < limit && at < story.len() {
        match instruction::decode(story, at) {
            Ok(ins) => {
                at = ins.next_addr();
                out.push(ins);
            }
            Err(e) => return (out, Some(e.to_string())),
        }
    }
    (out, None)
}

/// One line per instruction, in `ADDR: MNEMONIC operands -> store ?branch`
/// form.
pub fn listing(story: &StoryImage, limit: usize) -> String {
    let (instructions, stop) = disassemble(story, limit);
    let mut s = String::new();
    for ins in &instructions {
        s.push_str(&ins.to_string());
        s.push('\n');
    }
    if let Some(reason) = stop {
        s.push_str(&format!("; stopped: {reason}\n"));
    }
    s
}
