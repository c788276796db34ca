//! Story file loading and header access.

use crate::error::{Result, ZError};

pub const HEADER_LEN: usize = 64;

/// Byte offsets of the version-3 header fields.
pub mod offset {
    pub const VERSION: usize = 0x00;
    pub const FLAGS1: usize = 0x01;
    pub const RELEASE: usize = 0x02;
    pub const HIGH_MEMORY: usize = 0x04;
    pub const INITIAL_PC: usize = 0x06;
    pub const DICTIONARY: usize = 0x08;
    pub const OBJECT_TABLE: usize = 0x0A;
    pub const GLOBALS: usize = 0x0C;
    pub const STATIC_BASE: usize = 0x0E;
    pub const FLAGS2: usize = 0x10;
    pub const SERIAL: usize = 0x12;
    pub const ABBREVIATIONS: usize = 0x18;
    pub const FILE_LENGTH: usize = 0x1A;
    pub const CHECKSUM: usize = 0x1C;
}

/// Flags 1, bit 1: set for "hours:minutes" games, clear for score/turns games.
pub const FLAGS1_TIME_GAME: u8 = 0x02;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub flags1: u8,
    pub release: u16,
    pub high_memory: u16,
    pub initial_pc: u16,
    pub dictionary: u16,
    pub object_table: u16,
    pub globals: u16,
    pub static_base: u16,
    pub flags2: u16,
    pub abbreviations: u16,
    /// Declared length in bytes (already scaled from the packed header value).
    pub file_length: usize,
    pub checksum: u16,
}

impl Header {
    /// Score/turns game, as opposed to a time game.
    pub fn is_score_game(&self) -> bool {
        self.flags1 & FLAGS1_TIME_GAME == 0
    }
}

/// An immutable, validated version-3 story image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryImage {
    bytes: Box<[u8]>,
    header: Header,
}

fn word_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([bytes[at], bytes[at + 1]])
}

impl StoryImage {
    /// Parses and validates a story file.
    pub fn load(bytes: &[u8]) -> Result<StoryImage> {
        if bytes.is_empty() {
            return Err(ZError::MalformedHeader("empty story file".into()));
        }
        let version = bytes[offset::VERSION];
        if version != 3 {
            return Err(ZError::UnsupportedVersion(version));
        }
        if bytes.len() < HEADER_LEN {
            return Err(ZError::MalformedHeader(format!(
                "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        let len = bytes.len();
        let header = Header {
            version,
            flags1: bytes[offset::FLAGS1],
            release: word_at(bytes, offset::RELEASE),
            high_memory: word_at(bytes, offset::HIGH_MEMORY),
            initial_pc: word_at(bytes, offset::INITIAL_PC),
            dictionary: word_at(bytes, offset::DICTIONARY),
            object_table: word_at(bytes, offset::OBJECT_TABLE),
            globals: word_at(bytes, offset::GLOBALS),
            static_base: word_at(bytes, offset::STATIC_BASE),
            flags2: word_at(bytes, offset::FLAGS2),
            abbreviations: word_at(bytes, offset::ABBREVIATIONS),
            file_length: word_at(bytes, offset::FILE_LENGTH) as usize * 2,
            checksum: word_at(bytes, offset::CHECKSUM),
        };

        let static_base = header.static_base as usize;
        if static_base < HEADER_LEN || static_base > len {
            return Err(ZError::MalformedHeader(format!(
                "static memory base {static_base:#06x} outside {HEADER_LEN}..={len:#06x}"
            )));
        }
        let tables = [
            ("initial pc", header.initial_pc),
            ("dictionary", header.dictionary),
            ("object table", header.object_table),
            ("globals", header.globals),
            ("abbreviations", header.abbreviations),
            ("high memory", header.high_memory),
        ];
        for (name, addr) in tables {
            if addr as usize >= len {
                return Err(ZError::MalformedHeader(format!(
                    "{name} address {addr:#06x} beyond file length {len:#06x}"
                )));
            }
        }
        if header.file_length > len {
            return Err(ZError::MalformedHeader(format!(
                "declared length {:#x} exceeds actual length {len:#x}",
                header.file_length
            )));
        }
        Ok(StoryImage {
            bytes: bytes.into(),
            header,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    /// Length used for checksums: the declared length, or the real one when the
    /// header leaves it zero.
    pub fn checked_length(&self) -> usize {
        if self.header.file_length == 0 {
            self.bytes.len()
        } else {
            self.header.file_length
        }
    }

    /// Sum of all bytes after the header, modulo 2^16.
    pub fn compute_checksum(&self) -> u16 {
        self.bytes[HEADER_LEN..self.checked_length()]
            .iter()
            .fold(0u16, |acc, &b| acc.wrapping_add(b as u16))
    }

    pub fn dynamic_len(&self) -> usize {
        self.header.static_base as usize
    }
}

/// Read-only byte access shared by the story image and the running machine.
pub trait Memory {
    fn byte(&self, addr: usize) -> Option<u8>;
    /// Byte address of the abbreviations table.
    fn abbreviations(&self) -> usize;

    fn word(&self, addr: usize) -> Option<u16> {
        Some(u16::from_be_bytes([self.byte(addr)?, self.byte(addr + 1)?]))
    }
}

impl Memory for StoryImage {
    fn byte(&self, addr: usize) -> Option<u8> {
        self.bytes.get(addr).copied()
    }

    fn abbreviations(&self) -> usize {
        self.header.abbreviations as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> Vec<u8> {
        let mut b = vec![0u8; 64];
        b[0] = 3;
        b[offset::STATIC_BASE] = 0;
        b[offset::STATIC_BASE + 1] = 64;
        b
    }

    #[test]
    fn minimal_header_loads() {
        let story = StoryImage::load(&minimal()).unwrap();
        assert_eq!(story.header().version, 3);
        assert_eq!(story.dynamic_len(), 64);
        assert!(story.header().is_score_game());
    }

    #[test]
    fn other_versions_are_rejected() {
        let mut b = minimal();
        b[0] = 8;
        assert_eq!(StoryImage::load(&b), Err(ZError::UnsupportedVersion(8)));
        b[0] = 5;
        assert_eq!(StoryImage::load(&b), Err(ZError::UnsupportedVersion(5)));
    }

    #[test]
    fn static_base_beyond_file_is_malformed() {
        let mut b = minimal();
        b.resize(1024, 0);
        b[offset::STATIC_BASE] = 0xFF;
        b[offset::STATIC_BASE + 1] = 0xFF;
        assert!(matches!(
            StoryImage::load(&b),
            Err(ZError::MalformedHeader(_))
        ));
    }

    #[test]
    fn short_and_empty_files_are_malformed() {
        assert!(matches!(
            StoryImage::load(&[3, 0, 0]),
            Err(ZError::MalformedHeader(_))
        ));
        assert!(matches!(StoryImage::load(&[]), Err(ZError::MalformedHeader(_))));
    }

    #[test]
    fn table_address_out_of_bounds_is_malformed() {
        let mut b = minimal();
        b[offset::DICTIONARY] = 0x01;
        assert!(matches!(
            StoryImage::load(&b),
            Err(ZError::MalformedHeader(m)) if m.contains("dictionary")
        ));
    }
}
