//! The running machine: execution loop, variables, objects, and line input.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ZError};
use crate::instruction::{self, BranchTarget, Instruction, Opcode, Operand};
use crate::snapshot::Snapshot;
use crate::story::{Memory, StoryImage};
use crate::text;

/// Instruction ceiling per `run_until_input` call.
pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;
pub const MAX_LOCALS: usize = 15;

const OBJECT_ENTRY_LEN: usize = 9;
const PROPERTY_DEFAULTS_LEN: usize = 31 * 2;
const MAX_OBJECT: u16 = 255;
const MAX_STREAM3_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    AwaitingInput,
    Halted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub return_pc: usize,
    pub locals: Vec<u16>,
    pub store: Option<u8>,
    /// Evaluation-stack depth when the routine was entered.
    pub stack_base: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadRequest {
    pub text_buffer: u16,
    pub parse_buffer: u16,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Stream3 {
    pub table: u16,
    pub data: Vec<u8>,
}

/// Full mutable state of one machine run over a shared story image.
#[derive(Debug, Clone)]
pub struct MachineState {
    story: Arc<StoryImage>,
    pub(crate) dynamic: Vec<u8>,
    pub(crate) stack: Vec<u16>,
    pub(crate) frames: Vec<Frame>,
    pub(crate) pc: usize,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) status: Status,
    pub(crate) read: Option<ReadRequest>,
    pub(crate) screen_enabled: bool,
    pub(crate) upper_window: bool,
    pub(crate) stream3: Vec<Stream3>,
    seed: u64,
    output: String,
    step_limit: u64,
    fault: Option<ZError>,
}

fn fault<T>(pc: usize, reason: impl Into<String>) -> Result<T> {
    Err(ZError::ExecutionFault {
        pc,
        reason: reason.into(),
    })
}

impl MachineState {
    pub fn new(story: Arc<StoryImage>, seed: u64) -> MachineState {
        let dynamic = story.bytes()[..story.dynamic_len()].to_vec();
        let pc = story.header().initial_pc as usize;
        MachineState {
            story,
            dynamic,
            stack: Vec::new(),
            frames: Vec::new(),
            pc,
            rng: ChaCha8Rng::seed_from_u64(seed),
            status: Status::Running,
            read: None,
            screen_enabled: true,
            upper_window: false,
            stream3: Vec::new(),
            seed,
            output: String::new(),
            step_limit: DEFAULT_STEP_LIMIT,
            fault: None,
        }
    }

    pub fn story(&self) -> &Arc<StoryImage> {
        &self.story
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stack(&self) -> &[u16] {
        &self.stack
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn dynamic_memory(&self) -> &[u8] {
        &self.dynamic
    }

    pub fn pending_read(&self) -> Option<ReadRequest> {
        self.read
    }

    /// The fault that halted the machine, if any.
    pub fn fault(&self) -> Option<&ZError> {
        self.fault.as_ref()
    }

    pub fn set_step_limit(&mut self, limit: u64) {
        self.step_limit = limit;
    }

    /// Value of global variable `index` (0-based; the v3 status line reads
    /// globals 0..=2 as location, score, turns).
    pub fn global(&self, index: u8) -> u16 {
        let addr = self.story.header().globals as usize + 2 * index as usize;
        self.word(addr).unwrap_or(0)
    }

    pub fn decode(&self, addr: usize) -> Result<Instruction> {
        instruction::decode(self, addr)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot::capture(self)
    }

    pub fn restore(&mut self, snap: &Snapshot) {
        snap.apply(self);
        self.output.clear();
        self.fault = None;
    }

    /// Executes until the story asks for input, quits, or faults. All text
    /// printed on the way is returned as the narration.
    pub fn run_until_input(&mut self) -> Result<String> {
        let mut sink = String::new();
        self.run_into(&mut sink)?;
        Ok(sink)
    }

    /// Like [`run_until_input`](Self::run_until_input) but appends narration to
    /// `sink`, which keeps any partial output when the run fails.
    pub fn run_into(&mut self, sink: &mut String) -> Result<()> {
        if self.status != Status::Running {
            return fault(self.pc, format!("machine is {:?}", self.status));
        }
        let mut steps = 0u64;
        let result = loop {
            if self.status != Status::Running {
                break Ok(());
            }
            if steps >= self.step_limit {
                break Err(ZError::RunawayProgram { steps });
            }
            steps += 1;
            if let Err(e) = self.step() {
                break Err(e);
            }
        };
        sink.push_str(&std::mem::take(&mut self.output));
        if let Err(e) = &result {
            self.status = Status::Halted;
            self.fault = Some(e.clone());
        }
        result
    }

    /// Supplies a line of player input to a pending read.
    pub fn feed_input(&mut self, line: &str) -> Result<()> {
        if self.status != Status::AwaitingInput {
            return Err(ZError::NotAwaitingInput);
        }
        let req = self.read.take().ok_or(ZError::NotAwaitingInput)?;
        let text_buf = req.text_buffer as usize;
        let parse_buf = req.parse_buffer as usize;
        let capacity = self.byte(text_buf).unwrap_or(0).saturating_sub(1) as usize;

        let typed: Vec<u8> = line
            .chars()
            .map(|c| c.to_ascii_lowercase())
            .filter(|c| c.is_ascii() && !c.is_ascii_control())
            .map(|c| c as u8)
            .take(capacity)
            .collect();
        for (i, &b) in typed.iter().enumerate() {
            self.write_byte(text_buf + 1 + i, b)?;
        }
        self.write_byte(text_buf + 1 + typed.len(), 0)?;

        if parse_buf != 0 {
            self.tokenise(&typed, parse_buf)?;
        }
        self.status = Status::Running;
        Ok(())
    }

    fn tokenise(&mut self, typed: &[u8], parse_buf: usize) -> Result<()> {
        let separators = self.word_separators();
        let mut tokens: Vec<(usize, usize)> = Vec::new();
        let mut start: Option<usize> = None;
        for (i, &b) in typed.iter().enumerate() {
            if b == b' ' {
                if let Some(s) = start.take() {
                    tokens.push((s, i));
                }
            } else if separators.contains(&b) {
                if let Some(s) = start.take() {
                    tokens.push((s, i));
                }
                tokens.push((i, i + 1));
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            tokens.push((s, typed.len()));
        }

        let max_words = self.byte(parse_buf).unwrap_or(0) as usize;
        tokens.truncate(max_words);
        self.write_byte(parse_buf + 1, tokens.len() as u8)?;
        for (n, &(s, e)) in tokens.iter().enumerate() {
            let word = std::str::from_utf8(&typed[s..e]).unwrap_or("");
            let entry = self.lookup_dictionary(word);
            let at = parse_buf + 2 + 4 * n;
            self.write_word(at, entry)?;
            self.write_byte(at + 2, (e - s) as u8)?;
            self.write_byte(at + 3, (s + 1) as u8)?;
        }
        Ok(())
    }

    fn word_separators(&self) -> Vec<u8> {
        let dict = self.story.header().dictionary as usize;
        if dict == 0 {
            return Vec::new();
        }
        let n = self.byte(dict).unwrap_or(0) as usize;
        (0..n).filter_map(|i| self.byte(dict + 1 + i)).collect()
    }

    /// Byte address of the dictionary entry for `word`, or 0 when absent.
    pub fn lookup_dictionary(&self, word: &str) -> u16 {
        let dict = self.story.header().dictionary as usize;
        if dict == 0 {
            return 0;
        }
        let n_sep = self.byte(dict).unwrap_or(0) as usize;
        let entry_len = self.byte(dict + 1 + n_sep).unwrap_or(0) as usize;
        let count = self.word(dict + 2 + n_sep).unwrap_or(0) as i16;
        let first = dict + 4 + n_sep;
        let key = text::encode_dict_word(word);
        for i in 0..count.unsigned_abs() as usize {
            let at = first + i * entry_len;
            if self.word(at) == Some(key[0]) && self.word(at + 2) == Some(key[1]) {
                return at as u16;
            }
        }
        0
    }

    // ---- memory ----

    pub(crate) fn write_byte(&mut self, addr: usize, value: u8) -> Result<()> {
        match self.dynamic.get_mut(addr) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => fault(
                self.pc,
                format!("write to {addr:#06x} at or above static memory"),
            ),
        }
    }

    pub(crate) fn write_word(&mut self, addr: usize, value: u16) -> Result<()> {
        let [hi, lo] = value.to_be_bytes();
        self.write_byte(addr, hi)?;
        self.write_byte(addr + 1, lo)
    }

    fn read_byte(&self, addr: usize) -> Result<u8> {
        match self.byte(addr) {
            Some(b) => Ok(b),
            None => fault(self.pc, format!("read beyond memory at {addr:#06x}")),
        }
    }

    fn read_word(&self, addr: usize) -> Result<u16> {
        match self.word(addr) {
            Some(w) => Ok(w),
            None => fault(self.pc, format!("read beyond memory at {addr:#06x}")),
        }
    }

    // ---- stack and variables ----

    fn frame_base(&self) -> usize {
        self.frames.last().map_or(0, |f| f.stack_base)
    }

    fn push(&mut self, value: u16) -> Result<()> {
        if self.stack.len() >= 0xFFFF {
            return fault(self.pc, "stack overflow");
        }
        self.stack.push(value);
        Ok(())
    }

    fn pop(&mut self) -> Result<u16> {
        if self.stack.len() <= self.frame_base() {
            return fault(self.pc, "stack underflow");
        }
        Ok(self.stack.pop().unwrap_or(0))
    }

    fn peek(&self) -> Result<u16> {
        if self.stack.len() <= self.frame_base() {
            return fault(self.pc, "stack underflow");
        }
        Ok(*self.stack.last().unwrap_or(&0))
    }

    fn local_slot(&mut self, var: u8) -> Result<&mut u16> {
        let pc = self.pc;
        match self.frames.last_mut() {
            Some(frame) => match frame.locals.get_mut(var as usize - 1) {
                Some(slot) => Ok(slot),
                None => fault(pc, format!("local {var} not defined in routine")),
            },
            None => fault(pc, format!("local {var} referenced outside a routine")),
        }
    }

    fn global_addr(&self, var: u8) -> usize {
        self.story.header().globals as usize + 2 * (var as usize - 16)
    }

    fn read_var(&mut self, var: u8) -> Result<u16> {
        match var {
            0 => self.pop(),
            1..=15 => Ok(*self.local_slot(var)?),
            _ => self.read_word(self.global_addr(var)),
        }
    }

    fn write_var(&mut self, var: u8, value: u16) -> Result<()> {
        match var {
            0 => self.push(value),
            1..=15 => {
                *self.local_slot(var)? = value;
                Ok(())
            }
            _ => self.write_word(self.global_addr(var), value),
        }
    }

    /// Indirect variable reads leave the stack in place.
    fn read_var_indirect(&mut self, var: u8) -> Result<u16> {
        if var == 0 {
            self.peek()
        } else {
            self.read_var(var)
        }
    }

    fn write_var_indirect(&mut self, var: u8, value: u16) -> Result<()> {
        if var == 0 {
            self.pop()?;
        }
        self.write_var(var, value)
    }

    fn operand_value(&mut self, op: Operand) -> Result<u16> {
        match op {
            Operand::Large(v) => Ok(v),
            Operand::Small(v) => Ok(v as u16),
            Operand::Variable(v) => self.read_var(v),
        }
    }

    // ---- output ----

    fn print(&mut self, s: &str) {
        if let Some(stream) = self.stream3.last_mut() {
            stream.data.extend(s.chars().map(|c| match c {
                '\n' => 13,
                c if c.is_ascii() => c as u8,
                _ => b'?',
            }));
            return;
        }
        if self.screen_enabled && !self.upper_window {
            self.output.push_str(s);
        }
    }

    fn print_zstring_at(&mut self, addr: usize) -> Result<()> {
        match text::decode_at(self, addr) {
            Ok((s, _)) => {
                self.print(&s);
                Ok(())
            }
            Err(e) => fault(self.pc, format!("bad string at {addr:#06x}: {e}")),
        }
    }

    // ---- objects ----

    fn object_addr(&self, obj: u16) -> Result<usize> {
        if obj == 0 || obj > MAX_OBJECT {
            return fault(self.pc, format!("invalid object {obj}"));
        }
        Ok(self.story.header().object_table as usize
            + PROPERTY_DEFAULTS_LEN
            + (obj as usize - 1) * OBJECT_ENTRY_LEN)
    }

    fn relative(&self, obj: u16, offset: usize) -> Result<u16> {
        if obj == 0 {
            return Ok(0);
        }
        Ok(self.read_byte(self.object_addr(obj)? + offset)? as u16)
    }

    fn set_relative(&mut self, obj: u16, offset: usize, value: u16) -> Result<()> {
        let addr = self.object_addr(obj)? + offset;
        self.write_byte(addr, value as u8)
    }

    pub fn parent(&self, obj: u16) -> Result<u16> {
        self.relative(obj, 4)
    }

    pub fn sibling(&self, obj: u16) -> Result<u16> {
        self.relative(obj, 5)
    }

    pub fn child(&self, obj: u16) -> Result<u16> {
        self.relative(obj, 6)
    }

    fn attr_location(&self, obj: u16, attr: u16) -> Result<(usize, u8)> {
        if attr > 31 {
            return fault(self.pc, format!("attribute {attr} out of range"));
        }
        let addr = self.object_addr(obj)? + attr as usize / 8;
        Ok((addr, 0x80 >> (attr % 8)))
    }

    pub fn test_attr(&self, obj: u16, attr: u16) -> Result<bool> {
        if obj == 0 {
            return Ok(false);
        }
        let (addr, mask) = self.attr_location(obj, attr)?;
        Ok(self.read_byte(addr)? & mask != 0)
    }

    fn set_attr(&mut self, obj: u16, attr: u16, on: bool) -> Result<()> {
        if obj == 0 {
            return Ok(());
        }
        let (addr, mask) = self.attr_location(obj, attr)?;
        let b = self.read_byte(addr)?;
        self.write_byte(addr, if on { b | mask } else { b & !mask })
    }

    fn remove_obj(&mut self, obj: u16) -> Result<()> {
        if obj == 0 {
            return Ok(());
        }
        let parent = self.parent(obj)?;
        if parent != 0 {
            let next = self.sibling(obj)?;
            let first = self.child(parent)?;
            if first == obj {
                self.set_relative(parent, 6, next)?;
            } else {
                let mut cur = first;
                let mut guard = 0;
                while cur != 0 {
                    let sib = self.sibling(cur)?;
                    if sib == obj {
                        self.set_relative(cur, 5, next)?;
                        break;
                    }
                    cur = sib;
                    guard += 1;
                    if guard > MAX_OBJECT {
                        return fault(self.pc, "object tree cycle");
                    }
                }
            }
        }
        self.set_relative(obj, 4, 0)?;
        self.set_relative(obj, 5, 0)
    }

    fn insert_obj(&mut self, obj: u16, dest: u16) -> Result<()> {
        if obj == 0 {
            return Ok(());
        }
        self.remove_obj(obj)?;
        if dest == 0 {
            return Ok(());
        }
        let first = self.child(dest)?;
        self.set_relative(obj, 4, dest)?;
        self.set_relative(obj, 5, first)?;
        self.set_relative(dest, 6, obj)
    }

    fn property_table(&self, obj: u16) -> Result<usize> {
        let addr = self.object_addr(obj)?;
        Ok(self.read_word(addr + 7)? as usize)
    }

    /// Short name of an object, decoded from its property table header.
    pub fn object_name(&self, obj: u16) -> Result<String> {
        let table = self.property_table(obj)?;
        if self.read_byte(table)? == 0 {
            return Ok(String::new());
        }
        match text::decode_at(self, table + 1) {
            Ok((s, _)) => Ok(s),
            Err(e) => fault(self.pc, format!("bad object name: {e}")),
        }
    }

    fn first_property(&self, obj: u16) -> Result<usize> {
        let table = self.property_table(obj)?;
        let name_words = self.read_byte(table)? as usize;
        Ok(table + 1 + 2 * name_words)
    }

    /// (number, data address, data length) for each property, in table order.
    fn properties(&self, obj: u16) -> Result<Vec<(u16, usize, usize)>> {
        let mut at = self.first_property(obj)?;
        let mut out = Vec::new();
        loop {
            let size = self.read_byte(at)?;
            if size == 0 {
                break;
            }
            let number = (size & 0x1F) as u16;
            let len = (size >> 5) as usize + 1;
            out.push((number, at + 1, len));
            at += 1 + len;
            if out.len() > 64 {
                return fault(self.pc, "unterminated property table");
            }
        }
        Ok(out)
    }

    fn find_property(&self, obj: u16, prop: u16) -> Result<Option<(usize, usize)>> {
        Ok(self
            .properties(obj)?
            .into_iter()
            .find(|&(n, _, _)| n == prop)
            .map(|(_, a, l)| (a, l)))
    }

    fn get_prop(&self, obj: u16, prop: u16) -> Result<u16> {
        if !(1..=31).contains(&prop) {
            return fault(self.pc, format!("property {prop} out of range"));
        }
        match self.find_property(obj, prop)? {
            Some((addr, 1)) => Ok(self.read_byte(addr)? as u16),
            Some((addr, 2)) => self.read_word(addr),
            Some((_, len)) => fault(self.pc, format!("get_prop on {len}-byte property {prop}")),
            None => {
                let defaults = self.story.header().object_table as usize;
                self.read_word(defaults + 2 * (prop as usize - 1))
            }
        }
    }

    fn put_prop(&mut self, obj: u16, prop: u16, value: u16) -> Result<()> {
        match self.find_property(obj, prop)? {
            Some((addr, 1)) => self.write_byte(addr, value as u8),
            Some((addr, 2)) => self.write_word(addr, value),
            Some((_, len)) => fault(self.pc, format!("put_prop on {len}-byte property {prop}")),
            None => fault(self.pc, format!("object {obj} has no property {prop}")),
        }
    }

    fn get_next_prop(&self, obj: u16, prop: u16) -> Result<u16> {
        let props = self.properties(obj)?;
        if prop == 0 {
            return Ok(props.first().map_or(0, |p| p.0));
        }
        match props.iter().position(|p| p.0 == prop) {
            Some(i) => Ok(props.get(i + 1).map_or(0, |p| p.0)),
            None => fault(self.pc, format!("object {obj} has no property {prop}")),
        }
    }

    fn prop_len(&self, addr: u16) -> Result<u16> {
        if addr == 0 {
            return Ok(0);
        }
        let size = self.read_byte(addr as usize - 1)?;
        Ok((size >> 5) as u16 + 1)
    }

    // ---- control flow ----

    fn call(&mut self, packed: u16, args: &[u16], store: Option<u8>, return_pc: usize) -> Result<()> {
        if packed == 0 {
            if let Some(var) = store {
                self.write_var(var, 0)?;
            }
            self.pc = return_pc;
            return Ok(());
        }
        let addr = packed as usize * 2;
        let n_locals = self.read_byte(addr)? as usize;
        if n_locals > MAX_LOCALS {
            return fault(self.pc, format!("routine at {addr:#06x} declares {n_locals} locals"));
        }
        let mut locals = Vec::with_capacity(n_locals);
        for i in 0..n_locals {
            locals.push(self.read_word(addr + 1 + 2 * i)?);
        }
        for (slot, &arg) in locals.iter_mut().zip(args) {
            *slot = arg;
        }
        if self.frames.len() >= 1024 {
            return fault(self.pc, "call depth exceeded");
        }
        self.frames.push(Frame {
            return_pc,
            locals,
            store,
            stack_base: self.stack.len(),
        });
        self.pc = addr + 1 + 2 * n_locals;
        Ok(())
    }

    fn ret(&mut self, value: u16) -> Result<()> {
        let frame = match self.frames.pop() {
            Some(f) => f,
            None => return fault(self.pc, "return from the main routine"),
        };
        self.stack.truncate(frame.stack_base);
        self.pc = frame.return_pc;
        if let Some(var) = frame.store {
            self.write_var(var, value)?;
        }
        Ok(())
    }

    fn branch(&mut self, ins: &Instruction, condition: bool) -> Result<()> {
        let Some(branch) = ins.branch else {
            return Ok(());
        };
        if condition != branch.on_true {
            return Ok(());
        }
        match branch.target {
            BranchTarget::ReturnFalse => self.ret(0),
            BranchTarget::ReturnTrue => self.ret(1),
            BranchTarget::Address(a) => {
                self.pc = a;
                Ok(())
            }
        }
    }

    fn store(&mut self, ins: &Instruction, value: u16) -> Result<()> {
        match ins.store {
            Some(var) => self.write_var(var, value),
            None => Ok(()),
        }
    }

    fn restart(&mut self) {
        let fresh = MachineState::new(self.story.clone(), self.seed);
        self.dynamic = fresh.dynamic;
        self.stack.clear();
        self.frames.clear();
        self.pc = fresh.pc;
        self.read = None;
        self.screen_enabled = true;
        self.upper_window = false;
        self.stream3.clear();
    }

    fn close_stream3(&mut self) -> Result<()> {
        if let Some(stream) = self.stream3.pop() {
            let table = stream.table as usize;
            self.write_word(table, stream.data.len() as u16)?;
            for (i, b) in stream.data.iter().enumerate() {
                self.write_byte(table + 2 + i, *b)?;
            }
        }
        Ok(())
    }

    /// Decodes and executes one instruction.
    pub fn step(&mut self) -> Result<()> {
        let ins = match self.decode(self.pc) {
            Ok(ins) => ins,
            Err(e) => return fault(self.pc, e.to_string()),
        };
        let next = ins.next_addr();
        let pc = self.pc;
        self.pc = next;

        let mut args = [0u16; 4];
        let n = ins.operands.len();
        // Indirect-variable opcodes take a variable number, not its value.
        let by_reference = matches!(
            ins.opcode,
            Opcode::Inc
                | Opcode::Dec
                | Opcode::IncChk
                | Opcode::DecChk
                | Opcode::Load
                | Opcode::Store
                | Opcode::Pull
        );
        for (i, op) in ins.operands.iter().enumerate() {
            args[i] = if by_reference && i == 0 {
                match *op {
                    Operand::Variable(v) => self.read_var(v)?,
                    Operand::Small(v) => v as u16,
                    Operand::Large(v) => v,
                }
            } else {
                self.operand_value(*op)?
            };
        }
        let a = args[0];
        let b = args[1];
        let sa = a as i16;
        let sb = b as i16;

        match ins.opcode {
            Opcode::Je => {
                let hit = args[1..n].iter().any(|&x| x == a);
                self.branch(&ins, hit)?;
            }
            Opcode::Jl => self.branch(&ins, sa < sb)?,
            Opcode::Jg => self.branch(&ins, sa > sb)?,
            Opcode::DecChk | Opcode::IncChk => {
                let var = a as u8;
                let cur = self.read_var_indirect(var)? as i16;
                let new = if ins.opcode == Opcode::IncChk {
                    cur.wrapping_add(1)
                } else {
                    cur.wrapping_sub(1)
                };
                self.write_var_indirect(var, new as u16)?;
                let cond = if ins.opcode == Opcode::IncChk {
                    new > sb
                } else {
                    new < sb
                };
                self.branch(&ins, cond)?;
            }
            Opcode::Jin => {
                let parent = self.parent(a)?;
                self.branch(&ins, parent == b)?;
            }
            Opcode::Test => self.branch(&ins, a & b == b)?,
            Opcode::Or => self.store(&ins, a | b)?,
            Opcode::And => self.store(&ins, a & b)?,
            Opcode::TestAttr => {
                let set = self.test_attr(a, b)?;
                self.branch(&ins, set)?;
            }
            Opcode::SetAttr => self.set_attr(a, b, true)?,
            Opcode::ClearAttr => self.set_attr(a, b, false)?,
            Opcode::Store => self.write_var_indirect(a as u8, b)?,
            Opcode::InsertObj => self.insert_obj(a, b)?,
            Opcode::Loadw => {
                let v = self.read_word(a as usize + 2 * b as usize)?;
                self.store(&ins, v)?;
            }
            Opcode::Loadb => {
                let v = self.read_byte(a as usize + b as usize)?;
                self.store(&ins, v as u16)?;
            }
            Opcode::GetProp => {
                let v = self.get_prop(a, b)?;
                self.store(&ins, v)?;
            }
            Opcode::GetPropAddr => {
                let v = self.find_property(a, b)?.map_or(0, |(addr, _)| addr as u16);
                self.store(&ins, v)?;
            }
            Opcode::GetNextProp => {
                let v = self.get_next_prop(a, b)?;
                self.store(&ins, v)?;
            }
            Opcode::Add => self.store(&ins, sa.wrapping_add(sb) as u16)?,
            Opcode::Sub => self.store(&ins, sa.wrapping_sub(sb) as u16)?,
            Opcode::Mul => self.store(&ins, sa.wrapping_mul(sb) as u16)?,
            Opcode::Div | Opcode::Mod => {
                if sb == 0 {
                    return fault(pc, "division by zero");
                }
                let v = if ins.opcode == Opcode::Div {
                    sa.wrapping_div(sb)
                } else {
                    sa.wrapping_rem(sb)
                };
                self.store(&ins, v as u16)?;
            }

            Opcode::Jz => self.branch(&ins, a == 0)?,
            Opcode::GetSibling | Opcode::GetChild => {
                let v = if ins.opcode == Opcode::GetSibling {
                    self.sibling(a)?
                } else {
                    self.child(a)?
                };
                self.store(&ins, v)?;
                self.branch(&ins, v != 0)?;
            }
            Opcode::GetParent => {
                let v = self.parent(a)?;
                self.store(&ins, v)?;
            }
            Opcode::GetPropLen => {
                let v = self.prop_len(a)?;
                self.store(&ins, v)?;
            }
            Opcode::Inc | Opcode::Dec => {
                let var = a as u8;
                let cur = self.read_var_indirect(var)? as i16;
                let new = if ins.opcode == Opcode::Inc {
                    cur.wrapping_add(1)
                } else {
                    cur.wrapping_sub(1)
                };
                self.write_var_indirect(var, new as u16)?;
            }
            Opcode::PrintAddr => self.print_zstring_at(a as usize)?,
            Opcode::RemoveObj => self.remove_obj(a)?,
            Opcode::PrintObj => {
                let name = self.object_name(a)?;
                self.print(&name);
            }
            Opcode::Ret => self.ret(a)?,
            Opcode::Jump => {
                let dest = next as i64 + sa as i64 - 2;
                if dest < 0 || dest as usize >= self.story.len() {
                    return fault(pc, format!("jump outside memory to {dest:#x}"));
                }
                self.pc = dest as usize;
            }
            Opcode::PrintPaddr => self.print_zstring_at(a as usize * 2)?,
            Opcode::Load => {
                let v = self.read_var_indirect(a as u8)?;
                self.store(&ins, v)?;
            }
            Opcode::Not => self.store(&ins, !a)?,

            Opcode::Rtrue => self.ret(1)?,
            Opcode::Rfalse => self.ret(0)?,
            Opcode::Print => {
                if let Some(t) = &ins.text {
                    self.print(t);
                }
            }
            Opcode::PrintRet => {
                if let Some(t) = &ins.text {
                    self.print(t);
                }
                self.print("\n");
                self.ret(1)?;
            }
            Opcode::Nop => {}
            // Disk saves are not offered; report failure.
            Opcode::Save | Opcode::Restore => self.branch(&ins, false)?,
            Opcode::Restart => self.restart(),
            Opcode::RetPopped => {
                let v = self.pop()?;
                self.ret(v)?;
            }
            Opcode::Pop => {
                self.pop()?;
            }
            Opcode::Quit => self.status = Status::Halted,
            Opcode::NewLine => self.print("\n"),
            Opcode::ShowStatus => {}
            Opcode::Verify => {
                let ok = self.story.compute_checksum() == self.story.header().checksum;
                self.branch(&ins, ok)?;
            }
            Opcode::Piracy => self.branch(&ins, true)?,

            Opcode::Call => self.call(a, &args[1..n.max(1)], ins.store, next)?,
            Opcode::Storew => self.write_word(a as usize + 2 * b as usize, args[2])?,
            Opcode::Storeb => self.write_byte(a as usize + b as usize, args[2] as u8)?,
            Opcode::PutProp => self.put_prop(a, b, args[2])?,
            Opcode::Sread => {
                self.read = Some(ReadRequest {
                    text_buffer: a,
                    parse_buffer: b,
                });
                self.status = Status::AwaitingInput;
            }
            Opcode::PrintChar => {
                if let Some(c) = text::zscii_to_char(a) {
                    self.print(&c.to_string());
                }
            }
            Opcode::PrintNum => self.print(&sa.to_string()),
            Opcode::Random => {
                let v = if sa > 0 {
                    self.rng.gen_range(1..=sa as u16)
                } else {
                    let seed = if sa < 0 {
                        sa.unsigned_abs() as u64
                    } else {
                        self.rng.gen::<u64>()
                    };
                    self.rng = ChaCha8Rng::seed_from_u64(seed);
                    0
                };
                self.store(&ins, v)?;
            }
            Opcode::Push => self.push(a)?,
            Opcode::Pull => {
                let v = self.pop()?;
                self.write_var_indirect(a as u8, v)?;
            }
            Opcode::SplitWindow => {}
            Opcode::SetWindow => self.upper_window = a == 1,
            Opcode::OutputStream => match sa {
                1 => self.screen_enabled = true,
                -1 => self.screen_enabled = false,
                3 => {
                    if self.stream3.len() >= MAX_STREAM3_DEPTH {
                        return fault(pc, "output stream 3 nested too deeply");
                    }
                    self.stream3.push(Stream3 {
                        table: b,
                        data: Vec::new(),
                    });
                }
                -3 => self.close_stream3()?,
                _ => {}
            },
            Opcode::InputStream => {}
            Opcode::SoundEffect => {
                log::warn!("sound_effect at {pc:#06x} ignored");
            }
        }
        Ok(())
    }
}

impl Memory for MachineState {
    fn byte(&self, addr: usize) -> Option<u8> {
        if addr < self.dynamic.len() {
            Some(self.dynamic[addr])
        } else {
            self.story.bytes().get(addr).copied()
        }
    }

    fn abbreviations(&self) -> usize {
        self.story.header().abbreviations as usize
    }
}
