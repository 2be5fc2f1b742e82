//! Little-endian primitives for the binary sketch and state files.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub(crate) fn put_u64<W: Write>(out: &mut W, v: u64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64<W: Write>(out: &mut W, v: f64) -> Result<()> {
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_usize<W: Write>(out: &mut W, v: usize) -> Result<()> {
    put_u64(out, v as u64)
}

pub(crate) fn get_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn get_f64<R: Read>(input: &mut R) -> Result<f64> {
    Ok(f64::from_bits(get_u64(input)?))
}

/// Reads a length or count, rejecting values above `limit` so a corrupt
/// header cannot trigger a huge allocation.
pub(crate) fn get_len<R: Read>(input: &mut R, limit: usize) -> Result<usize> {
    let v = get_u64(input)?;
    if v > limit as u64 {
        return Err(Error::Format(format!("length {v} exceeds limit {limit}")));
    }
    Ok(v as usize)
}

pub(crate) fn put_magic<W: Write>(out: &mut W, magic: &[u8; 8], version: u32) -> Result<()> {
    out.write_all(magic)?;
    out.write_all(&version.to_le_bytes())?;
    Ok(())
}

pub(crate) fn check_magic<R: Read>(input: &mut R, magic: &[u8; 8], version: u32) -> Result<()> {
    let mut buf = [0u8; 12];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::VersionMismatch("file too short for header".into()))?;
    if &buf[..8] != magic {
        return Err(Error::VersionMismatch("bad magic bytes".into()));
    }
    let found = u32::from_le_bytes(buf[8..].try_into().expect("4 bytes"));
    if found != version {
        return Err(Error::VersionMismatch(format!("expected version {version}, found {found}")));
    }
    Ok(())
}

pub(crate) fn expect_eof<R: Read>(input: &mut R) -> Result<()> {
    let mut probe = [0u8; 1];
    match input.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes after payload".into())),
    }
}
