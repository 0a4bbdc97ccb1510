//! Basis container formats.
//!
//! Binary layout: magic "OPCS", format version u16, side u16, pattern
//! count u32, ordering-kind u8, swap-mode u8 (all integers little-endian),
//! then each pattern bit-packed row-major, one bit per pixel (1 = +1,
//! 0 = -1), MSB first, each row padded to a byte boundary.

use std::io::{Read, Write};

use crate::basis::{basis_from_parts, OrderingKind, Pattern, PatternBasis, SwapMode};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"OPCS";
pub const FORMAT_VERSION: u16 = 1;

fn kind_code(kind: OrderingKind) -> u8 {
    match kind {
        OrderingKind::Origami => 0,
        OrderingKind::RandomPm1 => 1,
        OrderingKind::HadamardNatural => 2,
        OrderingKind::CdSortedHadamard => 3,
    }
}

fn kind_from_code(code: u8) -> Result<OrderingKind> {
    Ok(match code {
        0 => OrderingKind::Origami,
        1 => OrderingKind::RandomPm1,
        2 => OrderingKind::HadamardNatural,
        3 => OrderingKind::CdSortedHadamard,
        _ => return Err(Error::Format(format!("unknown ordering kind code {code}"))),
    })
}

fn swap_code(mode: SwapMode) -> u8 {
    match mode {
        SwapMode::PostReorder => 0,
        SwapMode::Interleaved => 1,
    }
}

fn swap_from_code(code: u8) -> Result<SwapMode> {
    Ok(match code {
        0 => SwapMode::PostReorder,
        1 => SwapMode::Interleaved,
        _ => return Err(Error::Format(format!("unknown swap mode code {code}"))),
    })
}

pub(crate) fn write_header<W: Write>(
    w: &mut W,
    side: usize,
    count: usize,
    kind: OrderingKind,
    swap_mode: SwapMode,
) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&u16::try_from(side).map_err(|_| {
        Error::InvalidDimension(format!("side {side} exceeds u16 header field"))
    })?
    .to_le_bytes())?;
    w.write_all(&u32::try_from(count).map_err(|_| {
        Error::InvalidArgument(format!("pattern count {count} exceeds u32 header field"))
    })?
    .to_le_bytes())?;
    w.write_all(&[kind_code(kind), swap_code(swap_mode)])?;
    Ok(())
}

pub(crate) struct Header {
    pub side: usize,
    pub count: usize,
    pub kind: OrderingKind,
    pub swap_mode: SwapMode,
}

pub(crate) fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut buf = [0u8; 14];
    r.read_exact(&mut buf)?;
    if buf[..4] != MAGIC {
        return Err(Error::Format("bad magic; not an OPCS container".into()));
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    Ok(Header {
        side: u16::from_le_bytes([buf[6], buf[7]]) as usize,
        count: u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]) as usize,
        kind: kind_from_code(buf[12])?,
        swap_mode: swap_from_code(buf[13])?,
    })
}

/// Bit-packs one row-major bitmap (`bits[i]` true = 1 bit), each row
/// padded to a whole byte, MSB first.
pub(crate) fn pack_rows(bits: impl Iterator<Item = bool>, side: usize) -> Vec<u8> {
    let row_bytes = side.div_ceil(8);
    let mut out = vec![0u8; row_bytes * side];
    for (i, bit) in bits.enumerate() {
        debug_assert!(i < side * side);
        let (r, c) = (i / side, i % side);
        if bit {
            out[r * row_bytes + c / 8] |= 0x80 >> (c % 8);
        }
    }
    out
}

pub(crate) fn unpack_rows(bytes: &[u8], side: usize) -> Vec<bool> {
    let row_bytes = side.div_ceil(8);
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            out.push(bytes[r * row_bytes + c / 8] & (0x80 >> (c % 8)) != 0);
        }
    }
    out
}

pub(crate) fn pattern_bytes(side: usize) -> usize {
    side.div_ceil(8) * side
}

/// Serializes a basis to the binary container.
pub fn write_basis<W: Write>(w: &mut W, basis: &PatternBasis) -> Result<()> {
    write_header(w, basis.side(), basis.len(), basis.kind(), basis.swap_mode())?;
    for pat in basis.patterns() {
        let packed = pack_rows(pat.values().iter().map(|&v| v == 1), basis.side());
        w.write_all(&packed)?;
    }
    Ok(())
}

/// Reads a basis from the binary container.
pub fn read_basis<R: Read>(r: &mut R) -> Result<PatternBasis> {
    let h = read_header(r)?;
    if h.side == 0 || !h.side.is_power_of_two() {
        return Err(Error::Format(format!("stored side {} is not a power of two", h.side)));
    }
    let nbytes = pattern_bytes(h.side);
    let mut patterns = Vec::with_capacity(h.count);
    let mut buf = vec![0u8; nbytes];
    for _ in 0..h.count {
        r.read_exact(&mut buf)?;
        let values: Vec<i8> = unpack_rows(&buf, h.side)
            .into_iter()
            .map(|b| if b { 1 } else { -1 })
            .collect();
        patterns.push(Pattern::from_values(h.side, values)?);
    }
    Ok(basis_from_parts(h.side, patterns, h.kind, h.swap_mode))
}

/// Plain-text export: one pattern per block, rows of space-separated
/// +1/-1, blank line between patterns.
pub fn write_basis_text<W: Write>(w: &mut W, basis: &PatternBasis) -> Result<()> {
    let side = basis.side();
    for (k, pat) in basis.patterns().iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        for r in 0..side {
            let row: Vec<&str> = (0..side)
                .map(|c| if pat.get(r, c) == 1 { "+1" } else { "-1" })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{generate_baseline, generate_origami, BaselineKind};

    #[test]
    fn binary_roundtrip_origami() {
        let basis = generate_origami(8, SwapMode::PostReorder).unwrap();
        let mut buf = Vec::new();
        write_basis(&mut buf, &basis).unwrap();
        let back = read_basis(&mut buf.as_slice()).unwrap();
        assert_eq!(back.patterns(), basis.patterns());
        assert_eq!(back.kind(), basis.kind());
        assert_eq!(back.swap_mode(), basis.swap_mode());
        assert_eq!(back.swap_ids(), basis.swap_ids());
    }

    #[test]
    fn binary_roundtrip_random() {
        let basis = generate_baseline(4, BaselineKind::RandomPm1, 99).unwrap();
        let mut buf = Vec::new();
        write_basis(&mut buf, &basis).unwrap();
        let back = read_basis(&mut buf.as_slice()).unwrap();
        assert_eq!(back.patterns(), basis.patterns());
    }

    #[test]
    fn header_is_fixed_layout() {
        let basis = generate_origami(2, SwapMode::Interleaved).unwrap();
        let mut buf = Vec::new();
        write_basis(&mut buf, &basis).unwrap();
        assert_eq!(&buf[..4], b"OPCS");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), FORMAT_VERSION);
        assert_eq!(u16::from_le_bytes([buf[6], buf[7]]), 2);
        assert_eq!(u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]), 4);
        assert_eq!(buf[12], 0); // origami
        assert_eq!(buf[13], 1); // interleaved
        // 4 patterns of side 2: one byte per row, two rows each
        assert_eq!(buf.len(), 14 + 4 * 2);
    }

    #[test]
    fn bad_magic_rejected() {
        let err = read_basis(&mut &b"NOPE\x01\x00\x02\x00\x04\x00\x00\x00\x00\x00"[..]);
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn bad_kind_code_rejected() {
        let err = read_basis(&mut &b"OPCS\x01\x00\x02\x00\x04\x00\x00\x00\x09\x00"[..]);
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn text_export_shape() {
        let basis = generate_origami(2, SwapMode::PostReorder).unwrap();
        let mut buf = Vec::new();
        write_basis_text(&mut buf, &basis).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let blocks: Vec<&str> = text.trim_end().split("\n\n").collect();
        assert_eq!(blocks.len(), 4);
        assert_eq!(blocks[0], "+1 +1\n+1 +1");
        assert_eq!(blocks[3], "+1 -1\n-1 +1");
    }
}
