//! A small assembler for building version-3 story images in tests and
//! fixtures.
//!
//! Layout is two-phase: a [`StoryBuilder`] declares the data tables
//! (abbreviations, objects, globals, arrays, dictionary), and
//! [`StoryBuilder::assemble`] fixes their addresses and returns an
//! [`Assembler`] for the code, which always starts at the high-memory base
//! and is entered at its first byte.

use std::collections::{BTreeMap, HashMap};

use crate::instruction::{Opcode, OperandCount};
use crate::story::offset;
use crate::text;

const ABBREV_ENTRIES: usize = 96;
const GLOBAL_COUNT: usize = 240;
const DICT_ENTRY_LEN: u8 = 7;

#[derive(Debug, Clone)]
pub struct ObjectDef {
    name: String,
    attributes: u32,
    parent: u8,
    properties: BTreeMap<u8, Vec<u8>>,
}

impl ObjectDef {
    pub fn new(name: &str) -> ObjectDef {
        ObjectDef {
            name: name.to_string(),
            attributes: 0,
            parent: 0,
            properties: BTreeMap::new(),
        }
    }

    /// Parent object number; sibling and child links are derived from
    /// declaration order.
    pub fn parent(mut self, parent: u8) -> Self {
        self.parent = parent;
        self
    }

    pub fn attr(mut self, attr: u8) -> Self {
        assert!(attr < 32);
        self.attributes |= 0x8000_0000 >> attr;
        self
    }

    pub fn prop(mut self, number: u8, data: &[u8]) -> Self {
        assert!((1..=31).contains(&number) && (1..=8).contains(&data.len()));
        self.properties.insert(number, data.to_vec());
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct StoryBuilder {
    flags1: u8,
    abbreviations: Vec<String>,
    dictionary: Vec<String>,
    separators: Vec<u8>,
    objects: Vec<ObjectDef>,
    defaults: [u16; 31],
    globals: Vec<u16>,
    arrays: Vec<(String, Vec<u8>)>,
}

impl StoryBuilder {
    pub fn new() -> StoryBuilder {
        StoryBuilder {
            globals: vec![0; GLOBAL_COUNT],
            ..Default::default()
        }
    }

    pub fn flags1(mut self, flags: u8) -> Self {
        self.flags1 = flags;
        self
    }

    pub fn abbreviation(mut self, text: &str) -> Self {
        assert!(self.abbreviations.len() < ABBREV_ENTRIES);
        self.abbreviations.push(text.to_string());
        self
    }

    pub fn words(mut self, words: &[&str]) -> Self {
        self.dictionary.extend(words.iter().map(|w| w.to_lowercase()));
        self
    }

    pub fn separators(mut self, seps: &[u8]) -> Self {
        self.separators.extend_from_slice(seps);
        self
    }

    pub fn object(mut self, obj: ObjectDef) -> Self {
        self.objects.push(obj);
        self
    }

    pub fn property_default(mut self, number: u8, value: u16) -> Self {
        self.defaults[number as usize - 1] = value;
        self
    }

    /// Initial value of global `index` (0-based).
    pub fn global(mut self, index: u8, value: u16) -> Self {
        self.globals[index as usize] = value;
        self
    }

    pub fn array(mut self, name: &str, bytes: &[u8]) -> Self {
        self.arrays.push((name.to_string(), bytes.to_vec()));
        self
    }

    /// Text buffer accepting up to `letters` characters.
    pub fn text_buffer(self, name: &str, letters: u8) -> Self {
        let mut bytes = vec![0u8; letters as usize + 2];
        bytes[0] = letters + 1;
        self.array(name, &bytes)
    }

    pub fn parse_buffer(self, name: &str, max_words: u8) -> Self {
        let mut bytes = vec![0u8; 2 + 4 * max_words as usize];
        bytes[0] = max_words;
        self.array(name, &bytes)
    }

    /// Lays out all data tables and returns an assembler positioned at the
    /// start of code.
    pub fn assemble(self) -> Assembler {
        let mut img = vec![0u8; 0x40];
        let abbrevs = self.abbreviations.clone();

        // Abbreviation table then the strings it points at.
        let abbrev_table = img.len();
        img.resize(abbrev_table + 2 * ABBREV_ENTRIES, 0);
        for (i, a) in self.abbreviations.iter().enumerate() {
            align(&mut img);
            let at = img.len();
            put_words(&mut img, &text::encode_text(a));
            set_word(&mut img, abbrev_table + 2 * i, (at / 2) as u16);
        }

        align(&mut img);
        let object_table = img.len();
        for d in self.defaults {
            img.extend_from_slice(&d.to_be_bytes());
        }
        let entries_at = img.len();
        img.resize(entries_at + 9 * self.objects.len(), 0);
        for (i, obj) in self.objects.iter().enumerate() {
            let num = i as u8 + 1;
            let e = entries_at + 9 * i;
            img[e..e + 4].copy_from_slice(&obj.attributes.to_be_bytes());
            img[e + 4] = obj.parent;
            let sibling = self.objects[i + 1..]
                .iter()
                .position(|o| o.parent == obj.parent && obj.parent != 0)
                .map_or(0, |p| i as u8 + 2 + p as u8);
            img[e + 5] = sibling;
            let child = self
                .objects
                .iter()
                .position(|o| o.parent == num)
                .map_or(0, |p| p as u8 + 1);
            img[e + 6] = child;
            let props_at = img.len();
            set_word(&mut img, e + 7, props_at as u16);
            let name = text::encode_text(&obj.name);
            img.push(name.len() as u8);
            put_words(&mut img, &name);
            for (&n, data) in obj.properties.iter().rev() {
                img.push(((data.len() as u8 - 1) << 5) | n);
                img.extend_from_slice(data);
            }
            img.push(0);
        }

        align(&mut img);
        let globals = img.len();
        for g in &self.globals {
            img.extend_from_slice(&g.to_be_bytes());
        }

        let mut arrays = HashMap::new();
        for (name, bytes) in &self.arrays {
            align(&mut img);
            arrays.insert(name.clone(), img.len() as u16);
            img.extend_from_slice(bytes);
        }

        align(&mut img);
        let static_base = img.len();

        let dictionary = img.len();
        img.push(self.separators.len() as u8);
        img.extend_from_slice(&self.separators);
        img.push(DICT_ENTRY_LEN);
        let mut keyed: Vec<([u16; 2], String)> = self
            .dictionary
            .iter()
            .map(|w| (text::encode_dict_word(w), w.clone()))
            .collect();
        keyed.sort();
        keyed.dedup_by(|a, b| a.0 == b.0);
        img.extend_from_slice(&(keyed.len() as u16).to_be_bytes());
        let mut dict = HashMap::new();
        for (key, word) in keyed {
            dict.insert(word, img.len() as u16);
            put_words(&mut img, &key);
            img.extend_from_slice(&[0, 0, 0]);
        }

        align(&mut img);
        let code_base = img.len();

        img[offset::VERSION] = 3;
        img[offset::FLAGS1] = self.flags1;
        set_word(&mut img, offset::RELEASE, 1);
        set_word(&mut img, offset::HIGH_MEMORY, code_base as u16);
        set_word(&mut img, offset::INITIAL_PC, code_base as u16);
        set_word(&mut img, offset::DICTIONARY, dictionary as u16);
        set_word(&mut img, offset::OBJECT_TABLE, object_table as u16);
        set_word(&mut img, offset::GLOBALS, globals as u16);
        set_word(&mut img, offset::STATIC_BASE, static_base as u16);
        set_word(&mut img, offset::ABBREVIATIONS, abbrev_table as u16);
        img[offset::SERIAL..offset::SERIAL + 6].copy_from_slice(b"000000");

        Assembler {
            img,
            abbreviations: abbrevs,
            labels: HashMap::new(),
            fixups: Vec::new(),
            strings: Vec::new(),
            arrays,
            dict,
        }
    }
}

fn align(img: &mut Vec<u8>) {
    if img.len() % 2 == 1 {
        img.push(0);
    }
}

fn put_words(img: &mut Vec<u8>, words: &[u16]) {
    for w in words {
        img.extend_from_slice(&w.to_be_bytes());
    }
}

fn set_word(img: &mut [u8], at: usize, value: u16) {
    img[at..at + 2].copy_from_slice(&value.to_be_bytes());
}

/// An instruction operand as written in assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    /// Constant; encoded small when it fits in a byte.
    Num(u16),
    /// Constant always encoded as a large (two-byte) operand.
    Wide(u16),
    /// Variable number: 0 stack, 1-15 locals, 16+ globals.
    Var(u8),
    /// Packed address of a routine or string label.
    Packed(String),
}

pub const SP: Arg = Arg::Var(0);

pub fn local(n: u8) -> Arg {
    assert!((1..=15).contains(&n));
    Arg::Var(n)
}

pub fn global(n: u8) -> Arg {
    Arg::Var(n + 16)
}

pub fn global_var(n: u8) -> u8 {
    n + 16
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Label(String),
    ReturnTrue,
    ReturnFalse,
}

impl From<&str> for Target {
    fn from(label: &str) -> Target {
        Target::Label(label.to_string())
    }
}

#[derive(Debug)]
enum Fixup {
    /// 14-bit branch offset stored at `at`, relative to `at + 2`.
    Branch { at: usize, label: String },
    /// Jump operand at `at`; the instruction ends at `at + 2`.
    Jump { at: usize, label: String },
    Packed { at: usize, label: String },
}

pub struct Assembler {
    img: Vec<u8>,
    abbreviations: Vec<String>,
    labels: HashMap<String, usize>,
    fixups: Vec<Fixup>,
    strings: Vec<(String, String)>,
    arrays: HashMap<String, u16>,
    dict: HashMap<String, u16>,
}

impl Assembler {
    pub fn here(&self) -> usize {
        self.img.len()
    }

    /// Address of a dictionary entry; panics on unknown words.
    pub fn dict(&self, word: &str) -> u16 {
        *self
            .dict
            .get(&word.to_lowercase())
            .unwrap_or_else(|| panic!("word {word:?} not in dictionary"))
    }

    pub fn addr(&self, array: &str) -> u16 {
        *self
            .arrays
            .get(array)
            .unwrap_or_else(|| panic!("no array named {array:?}"))
    }

    pub fn label(&mut self, name: &str) -> &mut Self {
        let prev = self.labels.insert(name.to_string(), self.img.len());
        assert!(prev.is_none(), "duplicate label {name:?}");
        self
    }

    /// Starts a routine: even-aligned header with initial local values.
    pub fn routine(&mut self, name: &str, locals: &[u16]) -> &mut Self {
        assert!(locals.len() <= 15);
        align(&mut self.img);
        self.label(name);
        self.img.push(locals.len() as u8);
        put_words(&mut self.img, locals);
        self
    }

    /// Declares a string placed after the code, addressable with
    /// `Arg::Packed(name)`.
    pub fn string(&mut self, name: &str, text: &str) -> &mut Self {
        self.strings.push((name.to_string(), text.to_string()));
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.img.extend_from_slice(bytes);
        self
    }

    fn encode_with_abbreviations(&self, s: &str) -> Vec<u16> {
        let mut zchars = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let best = self
                .abbreviations
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_empty() && rest.starts_with(a.as_str()))
                .max_by_key(|(_, a)| a.len());
            if let Some((i, a)) = best {
                zchars.push(1 + (i / 32) as u8);
                zchars.push((i % 32) as u8);
                rest = &rest[a.len()..];
            } else {
                let c = rest.chars().next().unwrap_or(' ');
                zchars.extend(text::to_zchars(&c.to_string()));
                rest = &rest[c.len_utf8()..];
            }
        }
        text::pack_zchars(&zchars)
    }

    fn operand_type(arg: &Arg) -> u8 {
        match arg {
            Arg::Num(v) if *v <= 0xFF => 0b01,
            Arg::Num(_) | Arg::Wide(_) | Arg::Packed(_) => 0b00,
            Arg::Var(_) => 0b10,
        }
    }

    fn put_operand(&mut self, arg: &Arg) {
        match arg {
            Arg::Num(v) if *v <= 0xFF => self.img.push(*v as u8),
            Arg::Num(v) | Arg::Wide(v) => self.img.extend_from_slice(&v.to_be_bytes()),
            Arg::Var(v) => self.img.push(*v),
            Arg::Packed(label) => {
                self.fixups.push(Fixup::Packed {
                    at: self.img.len(),
                    label: label.clone(),
                });
                self.img.extend_from_slice(&[0, 0]);
            }
        }
    }

    /// Emits any instruction. Form is chosen automatically: long for 2OP
    /// with two byte-sized operands, short for 0OP/1OP, variable otherwise.
    pub fn emit(
        &mut self,
        opcode: Opcode,
        args: &[Arg],
        store: Option<u8>,
        branch: Option<(bool, Target)>,
    ) -> &mut Self {
        assert_eq!(opcode.stores(), store.is_some(), "{opcode:?} store mismatch");
        assert_eq!(opcode.branches(), branch.is_some(), "{opcode:?} branch mismatch");
        let number = opcode.number();
        match opcode.count() {
            OperandCount::Op0 => {
                assert!(args.is_empty());
                self.img.push(0xB0 | number);
            }
            OperandCount::Op1 => {
                assert_eq!(args.len(), 1);
                self.img.push(0x80 | (Self::operand_type(&args[0]) << 4) | number);
                self.put_operand(&args[0]);
            }
            OperandCount::Op2 => {
                let long = args.len() == 2
                    && args.iter().all(|a| matches!(Self::operand_type(a), 0b01 | 0b10));
                if long {
                    let mut b = number;
                    if matches!(args[0], Arg::Var(_)) {
                        b |= 0x40;
                    }
                    if matches!(args[1], Arg::Var(_)) {
                        b |= 0x20;
                    }
                    self.img.push(b);
                    self.put_operand(&args[0]);
                    self.put_operand(&args[1]);
                } else {
                    self.variable_form(0xC0 | number, args);
                }
            }
            OperandCount::Var => self.variable_form(0xE0 | number, args),
        }
        if let Some(var) = store {
            self.img.push(var);
        }
        if let Some((on_true, target)) = branch {
            let sense = if on_true { 0x80 } else { 0 };
            match target {
                Target::ReturnFalse => self.img.push(sense | 0x40),
                Target::ReturnTrue => self.img.push(sense | 0x41),
                Target::Label(label) => {
                    self.fixups.push(Fixup::Branch {
                        at: self.img.len(),
                        label,
                    });
                    self.img.extend_from_slice(&[sense, 0]);
                }
            }
        }
        self
    }

    fn variable_form(&mut self, first: u8, args: &[Arg]) {
        assert!(args.len() <= 4);
        self.img.push(first);
        let mut types = 0xFFu8;
        for (i, a) in args.iter().enumerate() {
            let shift = 6 - 2 * i;
            types &= !(0b11 << shift);
            types |= Self::operand_type(a) << shift;
        }
        self.img.push(types);
        for a in args {
            self.put_operand(a);
        }
    }

    pub fn op(&mut self, opcode: Opcode, args: &[Arg]) -> &mut Self {
        self.emit(opcode, args, None, None)
    }

    pub fn op_store(&mut self, opcode: Opcode, args: &[Arg], store: u8) -> &mut Self {
        self.emit(opcode, args, Some(store), None)
    }

    pub fn op_branch(
        &mut self,
        opcode: Opcode,
        args: &[Arg],
        on_true: bool,
        target: impl Into<Target>,
    ) -> &mut Self {
        self.emit(opcode, args, None, Some((on_true, target.into())))
    }

    pub fn print(&mut self, s: &str) -> &mut Self {
        self.img.push(0xB0 | Opcode::Print.number());
        let words = self.encode_with_abbreviations(s);
        put_words(&mut self.img, &words);
        self
    }

    pub fn print_ret(&mut self, s: &str) -> &mut Self {
        self.img.push(0xB0 | Opcode::PrintRet.number());
        let words = self.encode_with_abbreviations(s);
        put_words(&mut self.img, &words);
        self
    }

    pub fn jump(&mut self, label: &str) -> &mut Self {
        self.img.push(0x80 | Opcode::Jump.number());
        self.fixups.push(Fixup::Jump {
            at: self.img.len(),
            label: label.to_string(),
        });
        self.img.extend_from_slice(&[0, 0]);
        self
    }

    fn resolve(&self, label: &str) -> usize {
        *self
            .labels
            .get(label)
            .unwrap_or_else(|| panic!("undefined label {label:?}"))
    }

    /// Places pending strings, patches every reference, and returns the
    /// finished story bytes with length and checksum filled in.
    pub fn finish(mut self) -> Vec<u8> {
        for (name, s) in std::mem::take(&mut self.strings) {
            align(&mut self.img);
            self.label(&name);
            let words = self.encode_with_abbreviations(&s);
            put_words(&mut self.img, &words);
        }
        for fix in std::mem::take(&mut self.fixups) {
            match fix {
                Fixup::Branch { at, label } => {
                    let off = self.resolve(&label) as i64 - (at as i64 + 2) + 2;
                    assert!((-8192..8192).contains(&off), "branch to {label} out of range");
                    let raw = (off as u16) & 0x3FFF;
                    self.img[at] |= (raw >> 8) as u8;
                    self.img[at + 1] = raw as u8;
                }
                Fixup::Jump { at, label } => {
                    let off = self.resolve(&label) as i64 - (at as i64 + 2) + 2;
                    set_word(&mut self.img, at, off as i16 as u16);
                }
                Fixup::Packed { at, label } => {
                    let addr = self.resolve(&label);
                    assert!(addr % 2 == 0, "packed label {label} is odd");
                    set_word(&mut self.img, at, (addr / 2) as u16);
                }
            }
        }
        align(&mut self.img);
        let len = self.img.len();
        set_word(&mut self.img, offset::FILE_LENGTH, (len / 2) as u16);
        let checksum = self.img[0x40..]
            .iter()
            .fold(0u16, |acc, &b| acc.wrapping_add(b as u16));
        set_word(&mut self.img, offset::CHECKSUM, checksum);
        self.img
    }
}
