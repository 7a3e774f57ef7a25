//! Harvard instruction/data memories and the console device.
//!
//! Instruction and data memories occupy separate address spaces, both based at
//! zero. Loads and stores only ever see data memory plus the console byte at
//! [`CONSOLE_ADDR`]; instruction memory is read-only to the running program.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{ImageError, MemError};

pub const CONSOLE_ADDR: u32 = 0xF000_0000;
pub const DEFAULT_MEM_BYTES: usize = 32 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Width {
    Byte,
    Half,
    Word,
}

impl Width {
    pub fn bytes(self) -> u32 {
        match self {
            Width::Byte => 1,
            Width::Half => 2,
            Width::Word => 4,
        }
    }

    fn mask(self) -> u32 {
        match self {
            Width::Byte => 0xff,
            Width::Half => 0xffff,
            Width::Word => 0xffff_ffff,
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Width::Byte => "byte",
            Width::Half => "halfword",
            Width::Word => "word",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Imem,
    Dmem,
}

/// A memory image: consecutive words placed from `origin`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MemImage {
    pub origin: u32,
    pub words: Vec<u32>,
}

impl MemImage {
    pub fn new(origin: u32, words: Vec<u32>) -> Self {
        MemImage { origin, words }
    }

    /// Parses the text form: one 8-hex-digit word per line, most significant
    /// nibble first. Blank lines and `//` comments are ignored.
    pub fn parse_hex(text: &str) -> Result<Self, ImageError> {
        let mut words = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split("//").next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.len() != 8 || !line.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(ImageError::Parse {
                    line: i + 1,
                    msg: format!("expected 8 hex digits, found `{line}`"),
                });
            }
            // Validated above.
            words.push(u32::from_str_radix(line, 16).unwrap());
        }
        Ok(MemImage { origin: 0, words })
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.words.len() * 9);
        for w in &self.words {
            s.push_str(&format!("{w:08x}\n"));
        }
        s
    }

    /// Raw little-endian binary (a flat `objcopy -O binary` dump).
    pub fn from_bin(bytes: &[u8]) -> Result<Self, ImageError> {
        if !bytes.len().is_multiple_of(4) {
            return Err(ImageError::RawLength(bytes.len()));
        }
        let words =
            bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(MemImage { origin: 0, words })
    }

    pub fn to_bin(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    /// Reads a file, choosing the raw loader for `.bin` and the hex loader otherwise.
    pub fn load(path: &Path) -> Result<Self, ImageError> {
        if path.extension().is_some_and(|e| e == "bin") {
            Self::from_bin(&std::fs::read(path)?)
        } else {
            Self::parse_hex(&std::fs::read_to_string(path)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemSystem {
    imem: Vec<u32>,
    dmem: Vec<u32>,
    console: Vec<u8>,
    echo: bool,
}

impl Default for MemSystem {
    fn default() -> Self {
        MemSystem::new(DEFAULT_MEM_BYTES, DEFAULT_MEM_BYTES).expect("default sizes are valid")
    }
}

fn check_size(bytes: usize) -> Result<usize, ImageError> {
    if bytes < 4 || !bytes.is_power_of_two() {
        return Err(ImageError::BadSize(bytes));
    }
    Ok(bytes / 4)
}

impl MemSystem {
    /// Zero-filled memories of the given byte sizes (powers of two).
    pub fn new(imem_bytes: usize, dmem_bytes: usize) -> Result<Self, ImageError> {
        Ok(MemSystem {
            imem: vec![0; check_size(imem_bytes)?],
            dmem: vec![0; check_size(dmem_bytes)?],
            console: Vec::new(),
            echo: false,
        })
    }

    pub fn with_images(
        imem_bytes: usize,
        dmem_bytes: usize,
        imem: &MemImage,
        dmem: &MemImage,
    ) -> Result<Self, ImageError> {
        let mut m = MemSystem::new(imem_bytes, dmem_bytes)?;
        m.load_image(imem, Target::Imem)?;
        m.load_image(dmem, Target::Dmem)?;
        Ok(m)
    }

    /// Echo console output to stdout as it is written.
    pub fn set_echo(&mut self, echo: bool) {
        self.echo = echo;
    }

    pub fn load_image(&mut self, image: &MemImage, target: Target) -> Result<(), ImageError> {
        if !image.origin.is_multiple_of(4) {
            return Err(ImageError::MisalignedOrigin(image.origin));
        }
        let mem = match target {
            Target::Imem => &mut self.imem,
            Target::Dmem => &mut self.dmem,
        };
        let start = (image.origin / 4) as usize;
        let end = start.checked_add(image.words.len()).filter(|&e| e <= mem.len());
        match end {
            Some(end) => {
                mem[start..end].copy_from_slice(&image.words);
                Ok(())
            }
            None => Err(ImageError::TooLarge { words: start + image.words.len(), capacity: mem.len() }),
        }
    }

    pub fn imem_bytes(&self) -> usize {
        self.imem.len() * 4
    }

    pub fn dmem_bytes(&self) -> usize {
        self.dmem.len() * 4
    }

    pub fn read_instr(&self, pc: u32) -> Result<u32, MemError> {
        if !pc.is_multiple_of(4) {
            return Err(MemError::Misaligned { addr: pc, width: Width::Word });
        }
        self.imem.get((pc / 4) as usize).copied().ok_or(MemError::OutOfRange { addr: pc })
    }

    fn data_index(&self, addr: u32, width: Width) -> Result<usize, MemError> {
        if addr == CONSOLE_ADDR {
            return Err(MemError::Console { addr });
        }
        if !addr.is_multiple_of(width.bytes()) {
            return Err(MemError::Misaligned { addr, width });
        }
        let idx = (addr / 4) as usize;
        if idx >= self.dmem.len() {
            return Err(MemError::OutOfRange { addr });
        }
        Ok(idx)
    }

    /// The whole aligned word containing `addr`, after checking the access
    /// for `width`. This is what the pipeline's memory stage reads before the
    /// align/extend unit.
    pub fn read_data_word(&self, addr: u32, width: Width) -> Result<u32, MemError> {
        self.data_index(addr, width).map(|i| self.dmem[i])
    }

    /// Zero-extended little-endian read of `width` bytes.
    pub fn read_data(&self, addr: u32, width: Width) -> Result<u32, MemError> {
        let word = self.read_data_word(addr, width)?;
        Ok((word >> ((addr & 3) * 8)) & width.mask())
    }

    pub fn write_data(&mut self, addr: u32, width: Width, value: u32) -> Result<(), MemError> {
        if addr == CONSOLE_ADDR {
            if width != Width::Byte {
                return Err(MemError::Console { addr });
            }
            let byte = value as u8;
            self.console.push(byte);
            if self.echo {
                let mut out = std::io::stdout().lock();
                let _ = out.write_all(&[byte]);
                let _ = out.flush();
            }
            return Ok(());
        }
        let idx = self.data_index(addr, width)?;
        let shift = (addr & 3) * 8;
        let mask = width.mask() << shift;
        self.dmem[idx] = (self.dmem[idx] & !mask) | ((value << shift) & mask);
        Ok(())
    }

    pub fn console(&self) -> &[u8] {
        &self.console
    }

    pub fn imem_words(&self) -> &[u32] {
        &self.imem
    }

    pub fn dmem_words(&self) -> &[u32] {
        &self.dmem
    }
}
