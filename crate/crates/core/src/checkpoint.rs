//! Binary parameter checkpoints: `ICCN1`, then per tensor a u64 name length,
//! the UTF-8 name, a u64 rank, u64 dims and f64 values, all little-endian.

use crate::error::{Error, Result};
use crate::nn::ParamSet;
use crate::tensor::Tensor;
use std::path::Path;

pub const MAGIC: &[u8; 5] = b"ICCN1";

pub fn to_bytes(params: &ParamSet) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in params.iter() {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u64).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn parse_err(offset: usize, record: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        record: record.to_string(),
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(parse_err(0, "<header>", "missing ICCN1 magic"));
    }
    let mut pos = MAGIC.len();
    let mut out = Vec::new();
    let take = |pos: &mut usize, n: usize, what: &str, rec: &str| -> Result<&[u8]> {
        let s = bytes
            .get(*pos..pos.saturating_add(n))
            .ok_or_else(|| parse_err(*pos, rec, format!("truncated {what}")))?;
        *pos += n;
        Ok(s)
    };
    let u64_at = |pos: &mut usize, what: &str, rec: &str| -> Result<u64> {
        Ok(u64::from_le_bytes(take(pos, 8, what, rec)?.try_into().unwrap()))
    };
    while pos < bytes.len() {
        let rec = format!("#{}", out.len());
        let len = u64_at(&mut pos, "name length", &rec)? as usize;
        let name_bytes = take(&mut pos, len, "name", &rec)?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| parse_err(pos - len, &rec, "tensor name is not UTF-8"))?
            .to_string();
        let rank = u64_at(&mut pos, "rank", &name)? as usize;
        if rank > 8 {
            return Err(parse_err(pos - 8, &name, format!("implausible rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u64_at(&mut pos, "dimension", &name)? as usize);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|c| c.checked_mul(8))
            .ok_or_else(|| parse_err(pos, &name, "tensor size overflows"))?;
        let payload = take(&mut pos, count, "payload", &name)?;
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor::new(shape, data)?));
    }
    Ok(out)
}

pub fn save(params: &ParamSet, path: &Path) -> Result<()> {
    crate::artifact::write_atomic(path, &to_bytes(params))
}

pub fn load(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::data(format!("cannot read checkpoint `{}`: {e}", path.display())))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn sample() -> ParamSet {
        let mut rng = SeededRng::new(4);
        let mut p = ParamSet::new();
        p.add_uniform("a.weight", &[3, 2], 2, &mut rng);
        p.add_uniform("a.bias", &[3], 2, &mut rng);
        p.add("s", Tensor::scalar(f64::MIN_POSITIVE));
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let p = sample();
        let entries = from_bytes(&to_bytes(&p)).unwrap();
        let mut q = sample();
        for t in q.tensors_mut() {
            *t = Tensor::zeros(t.shape());
        }
        q.load_from(&entries).unwrap();
        assert_eq!(to_bytes(&p), to_bytes(&q));
    }

    #[test]
    fn layout_matches_format() {
        let mut p = ParamSet::new();
        p.add("w", Tensor::vector(vec![1.5]));
        let b = to_bytes(&p);
        let mut expect = b"ICCN1".to_vec();
        expect.extend_from_slice(&1u64.to_le_bytes());
        expect.push(b'w');
        expect.extend_from_slice(&1u64.to_le_bytes());
        expect.extend_from_slice(&1u64.to_le_bytes());
        expect.extend_from_slice(&1.5f64.to_le_bytes());
        assert_eq!(b, expect);
    }

    #[test]
    fn truncation_and_bad_magic() {
        let b = to_bytes(&sample());
        assert!(matches!(from_bytes(&b[..b.len() - 1]), Err(Error::Parse { .. })));
        assert!(matches!(from_bytes(b"ICCN2"), Err(Error::Parse { .. })));
        assert!(from_bytes(MAGIC).unwrap().is_empty());
    }
}
