use crate::error::{invalid, Result};

/// Cyclic redundancy check over bit sequences, MSB-first, non-reflected.
///
/// The CRC occupies the last `width` bits of a protected payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CrcSpec {
    pub width: u32,
    /// Generator polynomial without the leading `x^width` term.
    pub polynomial: u64,
    pub init: u64,
    pub xorout: u64,
}

impl Default for CrcSpec {
    /// CRC-16 with generator x^16 + x^12 + x^5 + 1.
    fn default() -> Self {
        CrcSpec::crc16()
    }
}

impl CrcSpec {
    pub const fn crc16() -> Self {
        CrcSpec {
            width: 16,
            polynomial: 0x1021,
            init: 0,
            xorout: 0,
        }
    }

    /// x^8 + x^2 + x + 1
    pub const fn crc8() -> Self {
        CrcSpec {
            width: 8,
            polynomial: 0x07,
            init: 0,
            xorout: 0,
        }
    }

    /// x^4 + x + 1
    pub const fn crc4() -> Self {
        CrcSpec {
            width: 4,
            polynomial: 0x3,
            init: 0,
            xorout: 0,
        }
    }

    pub fn new(width: u32, polynomial: u64) -> Result<Self> {
        if width == 0 || width > 63 || polynomial >> width != 0 {
            return invalid(format!("unsupported CRC width {width} / polynomial {polynomial:#x}"));
        }
        Ok(CrcSpec {
            width,
            polynomial,
            init: 0,
            xorout: 0,
        })
    }

    /// Standard spec for a width, if one is built in.
    pub fn for_width(width: u32) -> Result<Self> {
        match width {
            4 => Ok(Self::crc4()),
            8 => Ok(Self::crc8()),
            16 => Ok(Self::crc16()),
            w => invalid(format!("no built-in CRC of width {w}")),
        }
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    fn mask(&self) -> u64 {
        (1u64 << self.width) - 1
    }

    /// Register value after shifting in `bits`.
    pub fn remainder(&self, bits: &[u8]) -> u64 {
        let top = self.width - 1;
        let mut reg = self.init & self.mask();
        for &b in bits {
            let feedback = ((reg >> top) & 1) ^ u64::from(b & 1);
            reg = (reg << 1) & self.mask();
            if feedback == 1 {
                reg ^= self.polynomial;
            }
        }
        reg ^ self.xorout
    }

    fn crc_bits(&self, bits: &[u8]) -> impl Iterator<Item = u8> {
        let r = self.remainder(bits);
        let w = self.width;
        (0..w).rev().map(move |i| ((r >> i) & 1) as u8)
    }

    /// Returns `payload` followed by its CRC.
    pub fn attach(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.is_empty() {
            return invalid("CRC payload must hold at least one bit");
        }
        let mut out = payload.to_vec();
        out.extend(self.crc_bits(payload));
        Ok(out)
    }

    /// Verifies a message whose last `width` bits are the CRC of the rest.
    pub fn check(&self, message: &[u8]) -> bool {
        let w = self.width();
        if message.len() <= w {
            return false;
        }
        let (payload, tail) = message.split_at(message.len() - w);
        self.crc_bits(payload).zip(tail).all(|(a, &b)| a == b)
    }
}
