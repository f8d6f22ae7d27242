//! Binary table dumps: magic, format version, dimensions, then little-endian f64 payload.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const TABLE_FORMAT_VERSION: u32 = 1;

pub(crate) fn write_table<W: Write>(mut out: W, magic: &[u8; 4], dims: &[u64], data: &[f64]) -> Result<()> {
    out.write_all(magic)?;
    out.write_all(&TABLE_FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        out.write_all(&d.to_le_bytes())?;
    }
    out.write_all(&(data.len() as u64).to_le_bytes())?;
    for v in data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_table<R: Read>(mut input: R, magic: &[u8; 4]) -> Result<(Vec<u64>, Vec<f64>)> {
    let mut tag = [0u8; 4];
    input.read_exact(&mut tag)?;
    if &tag != magic {
        return Err(Error::Format(format!("bad magic {tag:?}, expected {magic:?}")));
    }
    let version = read_u32(&mut input)?;
    if version != TABLE_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported table version {version}")));
    }
    let ndims = read_u32(&mut input)? as usize;
    if ndims > 8 {
        return Err(Error::Format(format!("implausible dimension count {ndims}")));
    }
    let dims = (0..ndims).map(|_| read_u64(&mut input)).collect::<Result<Vec<_>>>()?;
    let len = read_u64(&mut input)? as usize;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!("payload has {} bytes, header says {} values", bytes.len(), len)));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((dims, data))
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let data = [0.1, -0.0, f64::MIN_POSITIVE, 1.0 / 3.0, 5e-324];
        let mut buf = Vec::new();
        write_table(&mut buf, b"TEST", &[5, 1], &data).unwrap();
        let (dims, back) = read_table(&buf[..], b"TEST").unwrap();
        assert_eq!(dims, vec![5, 1]);
        assert!(data.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert!(read_table(&buf[..], b"NOPE").is_err());
        assert!(read_table(&buf[..buf.len() - 1], b"TEST").is_err());
    }
}
