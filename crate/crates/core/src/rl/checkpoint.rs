//! Binary checkpoints and learning-curve CSV.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "OSCK" | version u32 | fnv1a64(config json) u64 | json len u64 | json
//! | group count u64 | per group: name len u64, name, value count u64, f64s
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::net::{Net, NetConfig};
use super::CurvePoint;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"OSCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn encode_checkpoint(net: &Net) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(&net.config).map_err(|e| Error::Internal(format!("config json: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&fnv1a64(&json).to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let groups = net.named_groups();
    out.extend_from_slice(&(groups.len() as u64).to_le_bytes());
    for (name, values) in groups {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Data(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n)
            .ok()
            .filter(|&n| n <= self.bytes.len())
            .ok_or_else(|| Error::Data(format!("implausible length {n} in checkpoint")))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Net> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Data("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let hash = c.u64()?;
    let n = c.len()?;
    let json = c.take(n)?;
    if fnv1a64(json) != hash {
        return Err(Error::Data("checkpoint config hash mismatch".into()));
    }
    let config: NetConfig = serde_json::from_slice(json).map_err(|e| Error::Data(format!("checkpoint config: {e}")))?;
    let groups = c.len()?;
    let mut params = Vec::new();
    for _ in 0..groups {
        let n = c.len()?;
        c.take(n)?;
        let count = c.len()?;
        for _ in 0..count {
            params.push(f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes")));
        }
    }
    if c.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint".into()));
    }
    Net::from_params(config, params)
}

pub fn save_checkpoint(net: &Net, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(net)?;
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Net> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_checkpoint(&bytes)
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("step,mean_reward\n");
    for p in curve {
        out.push_str(&format!("{},{}\n", p.step, p.mean_reward));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::net::PolicyHead;

    #[test]
    fn round_trip_and_corruption() {
        let mut config = NetConfig::new(7, 3, PolicyHead::Hybrid);
        config.value_scale = 4.0;
        let net = Net::new(config, 11).unwrap();
        let bytes = encode_checkpoint(&net).unwrap();
        assert_eq!(decode_checkpoint(&bytes).unwrap(), net);
        let mut bad = bytes.clone();
        bad[20] ^= 1;
        assert!(decode_checkpoint(&bad).is_err());
        assert!(decode_checkpoint(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn fnv_reference() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
