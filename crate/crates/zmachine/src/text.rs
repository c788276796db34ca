//! Z-text: packed 5-bit z-characters, the three alphabets, and abbreviations.

use crate::error::{Result, ZError};
use crate::story::Memory;

const A0: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";
const A1: &[u8; 26] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ";
/// Alphabet 2 from z-char 8 onwards (6 is the ZSCII escape, 7 is newline).
const A2_TAIL: &[u8; 24] = b"0123456789.,!?_#'\"/\\-:()";

pub const PAD: u8 = 5;
const END_BIT: u16 = 0x8000;
/// Dictionary words are 6 z-chars (two words) in version 3.
pub const DICT_ZCHARS: usize = 6;

/// Splits one packed word into its three z-chars.
pub fn unpack(word: u16) -> [u8; 3] {
    [
        ((word >> 10) & 0x1F) as u8,
        ((word >> 5) & 0x1F) as u8,
        (word & 0x1F) as u8,
    ]
}

fn pack(zchars: &[u8]) -> u16 {
    ((zchars[0] as u16) << 10) | ((zchars[1] as u16) << 5) | zchars[2] as u16
}

/// Maps an output ZSCII code to a char. Codes outside the printable range
/// degrade to `?`.
pub fn zscii_to_char(code: u16) -> Option<char> {
    match code {
        0 => None,
        13 => Some('\n'),
        32..=126 => Some(code as u8 as char),
        _ => Some('?'),
    }
}

#[derive(Clone, Copy)]
enum Pending {
    None,
    Abbrev(u8),
    EscapeHigh,
    EscapeLow(u8),
}

fn decode_zchars<M: Memory + ?Sized>(
    zchars: &[u8],
    mem: &M,
    allow_abbrev: bool,
    out: &mut String,
) -> Result<()> {
    let mut alphabet = 0u8;
    let mut pending = Pending::None;
    for &z in zchars {
        match pending {
            Pending::Abbrev(bank) => {
                pending = Pending::None;
                let index = 32 * (bank as usize - 1) + z as usize;
                let entry = mem.abbreviations() + 2 * index;
                let word = mem.word(entry).ok_or(ZError::UnterminatedString)?;
                let (text, _) = decode_at_inner(mem, word as usize * 2, false)?;
                out.push_str(&text);
                continue;
            }
            Pending::EscapeHigh => {
                pending = Pending::EscapeLow(z);
                continue;
            }
            Pending::EscapeLow(high) => {
                pending = Pending::None;
                let code = ((high as u16) << 5) | z as u16;
                if let Some(c) = zscii_to_char(code) {
                    out.push(c);
                }
                continue;
            }
            Pending::None => {}
        }
        let current = alphabet;
        alphabet = 0;
        match z {
            0 => out.push(' '),
            1..=3 => {
                // Nested abbreviations are illegal; drop them.
                if allow_abbrev {
                    pending = Pending::Abbrev(z);
                }
            }
            4 => alphabet = 1,
            5 => alphabet = 2,
            6 if current == 2 => pending = Pending::EscapeHigh,
            7 if current == 2 => out.push('\n'),
            _ => {
                let i = z as usize - 6;
                let c = match current {
                    0 => A0[i],
                    1 => A1[i],
                    _ => A2_TAIL[i - 2],
                };
                out.push(c as char);
            }
        }
    }
    Ok(())
}

/// Decodes a sequence of packed words. The sequence must contain a word with
/// the end bit set; anything after it is ignored.
pub fn decode_words<M: Memory + ?Sized>(words: &[u16], mem: &M) -> Result<String> {
    let end = words
        .iter()
        .position(|w| w & END_BIT != 0)
        .ok_or(ZError::UnterminatedString)?;
    let zchars: Vec<u8> = words[..=end].iter().flat_map(|&w| unpack(w)).collect();
    let mut out = String::new();
    decode_zchars(&zchars, mem, true, &mut out)?;
    Ok(out)
}

fn decode_at_inner<M: Memory + ?Sized>(
    mem: &M,
    addr: usize,
    allow_abbrev: bool,
) -> Result<(String, usize)> {
    let mut zchars = Vec::new();
    let mut at = addr;
    loop {
        let word = mem.word(at).ok_or(ZError::UnterminatedString)?;
        zchars.extend_from_slice(&unpack(word));
        at += 2;
        if word & END_BIT != 0 {
            break;
        }
    }
    let mut out = String::new();
    decode_zchars(&zchars, mem, allow_abbrev, &mut out)?;
    Ok((out, at))
}

/// Decodes the string stored at `addr`, returning it with the address just
/// past its final word.
pub fn decode_at<M: Memory + ?Sized>(mem: &M, addr: usize) -> Result<(String, usize)> {
    decode_at_inner(mem, addr, true)
}

fn push_char_zchars(c: char, out: &mut Vec<u8>) {
    if c == ' ' {
        out.push(0);
    } else if let Some(i) = A0.iter().position(|&a| a == c as u8) {
        out.push(6 + i as u8);
    } else if let Some(i) = A1.iter().position(|&a| a == c as u8) {
        out.extend_from_slice(&[4, 6 + i as u8]);
    } else if c == '\n' {
        out.extend_from_slice(&[5, 7]);
    } else if let Some(i) = A2_TAIL.iter().position(|&a| a == c as u8) {
        out.extend_from_slice(&[5, 8 + i as u8]);
    } else {
        let code = if c.is_ascii() { c as u16 } else { b'?' as u16 };
        out.extend_from_slice(&[5, 6, (code >> 5) as u8 & 0x1F, code as u8 & 0x1F]);
    }
}

/// Converts text to z-chars without packing. Upper-case letters use a single
/// A1 shift.
pub fn to_zchars(text: &str) -> Vec<u8> {
    let mut out = Vec::new();
    for c in text.chars() {
        push_char_zchars(c, &mut out);
    }
    out
}

/// Packs z-chars into words, padding the final word and setting its end bit.
pub fn pack_zchars(zchars: &[u8]) -> Vec<u16> {
    let mut padded = zchars.to_vec();
    while padded.is_empty() || padded.len() % 3 != 0 {
        padded.push(PAD);
    }
    let mut words: Vec<u16> = padded.chunks(3).map(pack).collect();
    if let Some(last) = words.last_mut() {
        *last |= END_BIT;
    }
    words
}

/// Encodes arbitrary text as a terminated z-string.
pub fn encode_text(text: &str) -> Vec<u16> {
    pack_zchars(&to_zchars(text))
}

/// Version-3 dictionary key: the lower-cased word as exactly six z-chars,
/// truncated or padded with z-char 5, in two words.
pub fn encode_dict_word(word: &str) -> [u16; 2] {
    let mut zchars = Vec::new();
    for c in word.chars() {
        push_char_zchars(c.to_ascii_lowercase(), &mut zchars);
        if zchars.len() >= DICT_ZCHARS {
            break;
        }
    }
    zchars.truncate(DICT_ZCHARS);
    zchars.resize(DICT_ZCHARS, PAD);
    [pack(&zchars[0..3]), pack(&zchars[3..6]) | END_BIT]
}
