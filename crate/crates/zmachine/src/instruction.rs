//! Instruction forms, the version-3 opcode table, and a side-effect-free decoder.

use std::fmt;

use crate::error::{Result, ZError};
use crate::story::Memory;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Long,
    Short,
    Variable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperandCount {
    Op0,
    Op1,
    Op2,
    Var,
}

impl OperandCount {
    fn label(self) -> &'static str {
        match self {
            OperandCount::Op0 => "0OP",
            OperandCount::Op1 => "1OP",
            OperandCount::Op2 => "2OP",
            OperandCount::Var => "VAR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Large(u16),
    Small(u8),
    /// 0 = stack, 1..=15 locals, 16..=255 globals.
    Variable(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchTarget {
    ReturnFalse,
    ReturnTrue,
    /// Absolute byte address.
    Address(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Branch {
    /// Branch when the condition evaluates to this value.
    pub on_true: bool,
    pub target: BranchTarget,
}

macro_rules! opcodes {
    ($($variant:ident = ($count:ident, $num:expr, $name:expr, $store:expr, $branch:expr, $text:expr)),* $(,)?) => {
        /// Every opcode legal in version 3.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Opcode {
            $($variant),*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant),*];

            pub fn lookup(count: OperandCount, number: u8) -> Option<Opcode> {
                match (count, number) {
                    $((OperandCount::$count, $num) => Some(Opcode::$variant),)*
                    _ => None,
                }
            }

            pub fn count(self) -> OperandCount {
                match self { $(Opcode::$variant => OperandCount::$count),* }
            }

            pub fn number(self) -> u8 {
                match self { $(Opcode::$variant => $num),* }
            }

            pub fn mnemonic(self) -> &'static str {
                match self { $(Opcode::$variant => $name),* }
            }

            pub fn stores(self) -> bool {
                match self { $(Opcode::$variant => $store),* }
            }

            pub fn branches(self) -> bool {
                match self { $(Opcode::$variant => $branch),* }
            }

            pub fn has_text(self) -> bool {
                match self { $(Opcode::$variant => $text),* }
            }
        }
    };
}

opcodes! {
    Je = (Op2, 1, "je", false, true, false),
    Jl = (Op2, 2, "jl", false, true, false),
    Jg = (Op2, 3, "jg", false, true, false),
    DecChk = (Op2, 4, "dec_chk", false, true, false),
    IncChk = (Op2, 5, "inc_chk", false, true, false),
    Jin = (Op2, 6, "jin", false, true, false),
    Test = (Op2, 7, "test", false, true, false),
    Or = (Op2, 8, "or", true, false, false),
    And = (Op2, 9, "and", true, false, false),
    TestAttr = (Op2, 10, "test_attr", false, true, false),
    SetAttr = (Op2, 11, "set_attr", false, false, false),
    ClearAttr = (Op2, 12, "clear_attr", false, false, false),
    Store = (Op2, 13, "store", false, false, false),
    InsertObj = (Op2, 14, "insert_obj", false, false, false),
    Loadw = (Op2, 15, "loadw", true, false, false),
    Loadb = (Op2, 16, "loadb", true, false, false),
    GetProp = (Op2, 17, "get_prop", true, false, false),
    GetPropAddr = (Op2, 18, "get_prop_addr", true, false, false),
    GetNextProp = (Op2, 19, "get_next_prop", true, false, false),
    Add = (Op2, 20, "add", true, false, false),
    Sub = (Op2, 21, "sub", true, false, false),
    Mul = (Op2, 22, "mul", true, false, false),
    Div = (Op2, 23, "div", true, false, false),
    Mod = (Op2, 24, "mod", true, false, false),

    Jz = (Op1, 0, "jz", false, true, false),
    GetSibling = (Op1, 1, "get_sibling", true, true, false),
    GetChild = (Op1, 2, "get_child", true, true, false),
    GetParent = (Op1, 3, "get_parent", true, false, false),
    GetPropLen = (Op1, 4, "get_prop_len", true, false, false),
    Inc = (Op1, 5, "inc", false, false, false),
    Dec = (Op1, 6, "dec", false, false, false),
    PrintAddr = (Op1, 7, "print_addr", false, false, false),
    RemoveObj = (Op1, 9, "remove_obj", false, false, false),
    PrintObj = (Op1, 10, "print_obj", false, false, false),
    Ret = (Op1, 11, "ret", false, false, false),
    Jump = (Op1, 12, "jump", false, false, false),
    PrintPaddr = (Op1, 13, "print_paddr", false, false, false),
    Load = (Op1, 14, "load", true, false, false),
    Not = (Op1, 15, "not", true, false, false),

    Rtrue = (Op0, 0, "rtrue", false, false, false),
    Rfalse = (Op0, 1, "rfalse", false, false, false),
    Print = (Op0, 2, "print", false, false, true),
    PrintRet = (Op0, 3, "print_ret", false, false, true),
    Nop = (Op0, 4, "nop", false, false, false),
    Save = (Op0, 5, "save", false, true, false),
    Restore = (Op0, 6, "restore", false, true, false),
    Restart = (Op0, 7, "restart", false, false, false),
    RetPopped = (Op0, 8, "ret_popped", false, false, false),
    Pop = (Op0, 9, "pop", false, false, false),
    Quit = (Op0, 10, "quit", false, false, false),
    NewLine = (Op0, 11, "new_line", false, false, false),
    ShowStatus = (Op0, 12, "show_status", false, false, false),
    Verify = (Op0, 13, "verify", false, true, false),
    Piracy = (Op0, 15, "piracy", false, true, false),

    Call = (Var, 0, "call", true, false, false),
    Storew = (Var, 1, "storew", false, false, false),
    Storeb = (Var, 2, "storeb", false, false, false),
    PutProp = (Var, 3, "put_prop", false, false, false),
    Sread = (Var, 4, "sread", false, false, false),
    PrintChar = (Var, 5, "print_char", false, false, false),
    PrintNum = (Var, 6, "print_num", false, false, false),
    Random = (Var, 7, "random", true, false, false),
    Push = (Var, 8, "push", false, false, false),
    Pull = (Var, 9, "pull", false, false, false),
    SplitWindow = (Var, 10, "split_window", false, false, false),
    SetWindow = (Var, 11, "set_window", false, false, false),
    OutputStream = (Var, 19, "output_stream", false, false, false),
    InputStream = (Var, 20, "input_stream", false, false, false),
    SoundEffect = (Var, 21, "sound_effect", false, false, false),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub addr: usize,
    pub form: Form,
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
    pub store: Option<u8>,
    pub branch: Option<Branch>,
    pub text: Option<String>,
    /// Encoded length in bytes.
    pub length: usize,
}

impl Instruction {
    pub fn count(&self) -> OperandCount {
        self.opcode.count()
    }

    pub fn next_addr(&self) -> usize {
        self.addr + self.length
    }
}

struct Cursor<'a, M: Memory + ?Sized> {
    mem: &'a M,
    start: usize,
    at: usize,
}

impl<M: Memory + ?Sized> Cursor<'_, M> {
    fn byte(&mut self) -> Result<u8> {
        let b = self
            .mem
            .byte(self.at)
            .ok_or(ZError::TruncatedInstruction { addr: self.start })?;
        self.at += 1;
        Ok(b)
    }

    fn word(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes([self.byte()?, self.byte()?]))
    }

    fn operand(&mut self, kind: u8) -> Result<Option<Operand>> {
        Ok(match kind & 0b11 {
            0b00 => Some(Operand::Large(self.word()?)),
            0b01 => Some(Operand::Small(self.byte()?)),
            0b10 => Some(Operand::Variable(self.byte()?)),
            _ => None,
        })
    }
}

fn illegal(addr: usize, count: OperandCount, opcode: u8) -> ZError {
    ZError::IllegalOpcode {
        addr,
        kind: count.label(),
        opcode,
    }
}

/// Decodes the instruction at `addr` without touching machine state.
pub fn decode<M: Memory + ?Sized>(mem: &M, addr: usize) -> Result<Instruction> {
    let mut cur = Cursor {
        mem,
        start: addr,
        at: addr,
    };
    let first = cur.byte()?;
    let mut operands = Vec::with_capacity(4);

    let (form, opcode) = match first >> 6 {
        0b11 => {
            let count = if first & 0x20 == 0 {
                OperandCount::Op2
            } else {
                OperandCount::Var
            };
            let number = first & 0x1F;
            let opcode = Opcode::lookup(count, number).ok_or(illegal(addr, count, number))?;
            let types = cur.byte()?;
            for shift in [6, 4, 2, 0] {
                match cur.operand(types >> shift)? {
                    Some(op) => operands.push(op),
                    None => break,
                }
            }
            if count == OperandCount::Op2 {
                let ok = if opcode == Opcode::Je {
                    operands.len() >= 2
                } else {
                    operands.len() == 2
                };
                if !ok {
                    return Err(illegal(addr, count, number));
                }
            }
            (Form::Variable, opcode)
        }
        0b10 => {
            let kind = (first >> 4) & 0b11;
            let count = if kind == 0b11 {
                OperandCount::Op0
            } else {
                OperandCount::Op1
            };
            let number = first & 0x0F;
            let opcode = Opcode::lookup(count, number).ok_or(illegal(addr, count, number))?;
            if let Some(op) = cur.operand(kind)? {
                operands.push(op);
            }
            (Form::Short, opcode)
        }
        _ => {
            let number = first & 0x1F;
            let opcode = Opcode::lookup(OperandCount::Op2, number)
                .ok_or(illegal(addr, OperandCount::Op2, number))?;
            for bit in [0x40, 0x20] {
                let b = cur.byte()?;
                operands.push(if first & bit == 0 {
                    Operand::Small(b)
                } else {
                    Operand::Variable(b)
                });
            }
            (Form::Long, opcode)
        }
    };

    let store = if opcode.stores() {
        Some(cur.byte()?)
    } else {
        None
    };

    let branch = if opcode.branches() {
        let b1 = cur.byte()?;
        let on_true = b1 & 0x80 != 0;
        let offset: i32 = if b1 & 0x40 != 0 {
            (b1 & 0x3F) as i32
        } else {
            let b2 = cur.byte()?;
            let raw = (((b1 & 0x3F) as u16) << 8) | b2 as u16;
            // 14-bit two's complement
            ((raw << 2) as i16 >> 2) as i32
        };
        let target = match offset {
            0 => BranchTarget::ReturnFalse,
            1 => BranchTarget::ReturnTrue,
            off => {
                let dest = cur.at as i64 + off as i64 - 2;
                if dest < 0 {
                    return Err(ZError::TruncatedInstruction { addr });
                }
                BranchTarget::Address(dest as usize)
            }
        };
        Some(Branch { on_true, target })
    } else {
        None
    };

    let text = if opcode.has_text() {
        let (s, end) = text::decode_at(mem, cur.at).map_err(|e| match e {
            ZError::UnterminatedString => ZError::TruncatedInstruction { addr },
            other => other,
        })?;
        cur.at = end;
        Some(s)
    } else {
        None
    };

    Ok(Instruction {
        addr,
        form,
        opcode,
        operands,
        store,
        branch,
        text,
        length: cur.at - addr,
    })
}

pub(crate) fn variable_name(var: u8) -> String {
    match var {
        0 => "sp".to_string(),
        1..=15 => format!("L{:02}", var),
        _ => format!("G{:02x}", var - 16),
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Operand::Large(v) => write!(f, "#{v:04x}"),
            Operand::Small(v) => write!(f, "#{v:02x}"),
            Operand::Variable(v) => f.write_str(&variable_name(v)),
        }
    }
}

impl fmt::Display for Instruction {
    /// `ADDR: MNEMONIC operands -> store ?branch`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:05x}: {}", self.addr, self.opcode.mnemonic().to_uppercase())?;
        if let (Opcode::Jump, [Operand::Large(off)]) = (self.opcode, self.operands.as_slice()) {
            let dest = self.next_addr() as i64 + *off as i16 as i64 - 2;
            write!(f, " {dest:05x}")?;
        } else {
            for (i, op) in self.operands.iter().enumerate() {
                write!(f, "{}{op}", if i == 0 { " " } else { "," })?;
            }
        }
        if let Some(text) = &self.text {
            write!(f, " {text:?}")?;
        }
        if let Some(var) = self.store {
            write!(f, " -> {}", variable_name(var))?;
        }
        if let Some(branch) = &self.branch {
            let sense = if branch.on_true { "" } else { "~" };
            match branch.target {
                BranchTarget::ReturnFalse => write!(f, " ?{sense}rfalse")?,
                BranchTarget::ReturnTrue => write!(f, " ?{sense}rtrue")?,
                BranchTarget::Address(a) => write!(f, " ?{sense}{a:05x}")?,
            }
        }
        Ok(())
    }
}
