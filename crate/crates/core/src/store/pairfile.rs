//! Binary pair file and CSV export.
//!
//! Layout (all integers little-endian):
//!
//! | field          | size                                   |
//! |----------------|----------------------------------------|
//! | magic `DBMP`   | 4                                      |
//! | version        | u32                                    |
//! | value kind     | u8 (0 = u32 symbols, 1 = f64 reals)    |
//! | seed           | u64                                    |
//! | m, n           | u64, u64                               |
//! | spec length    | u32, then that many bytes of JSON      |
//! | DB1 entries    | n*m values, row-major                  |
//! | DB2 entries    | n*m values, row-major                  |
//! | theta1         | n x u32                                |
//! | truth marker   | `TRTH`                                 |
//! | theta2         | n x u32                                |
//! | checksum       | SHA-256 of every preceding byte        |
//!
//! Everything before the truth marker is the attacker's view; theta2 is the
//! withheld ground truth.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::database::{CorrelatedPair, Entries, LabeledDatabase, UnlabeledDatabase};
use super::StoreError;
use crate::process::JointProcessSpec;

pub const MAGIC: &[u8; 4] = b"DBMP";
pub const TRUTH_MARKER: &[u8; 4] = b"TRTH";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;
/// magic + version + kind + seed + m + n + spec length
const HEADER_LEN: usize = 4 + 4 + 1 + 8 + 8 + 8 + 4;

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn encode(pair: &CorrelatedPair) -> Vec<u8> {
    let (m, n) = (pair.m(), pair.n());
    let spec_json = serde_json::to_vec(&pair.spec).expect("spec serialization is infallible");
    let value_bytes = match pair.db1.base().entries() {
        Entries::Symbols(_) => 4,
        Entries::Reals(_) => 8,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + spec_json.len() + 2 * n * m * value_bytes + 8 * n + 40);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(if value_bytes == 4 { 0 } else { 1 });
    out.extend_from_slice(&pair.seed.to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(spec_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec_json);
    for db in [&pair.db1, &pair.db2] {
        match db.base().entries() {
            Entries::Symbols(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Entries::Reals(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }
    let put_theta = |out: &mut Vec<u8>, theta: &[usize]| {
        theta
            .iter()
            .for_each(|&t| out.extend_from_slice(&(t as u32).to_le_bytes()));
    };
    put_theta(&mut out, pair.db1.theta());
    out.extend_from_slice(TRUTH_MARKER);
    put_theta(&mut out, pair.db2.theta());
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);
    out
}

pub fn save_pair(pair: &CorrelatedPair, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let bytes = encode(pair);
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&bytes).map_err(|e| io_err(path, e))?;
    file.sync_all().map_err(|e| io_err(path, e))
}

/// A loaded pair file with the ground-truth labeling of DB2 withheld.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackerView {
    pub db1: LabeledDatabase,
    pub db2: UnlabeledDatabase,
    pub spec: JointProcessSpec,
    pub seed: u64,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(len).ok_or(StoreError::Truncated)?;
        let slice = self.bytes.get(self.pos..end).ok_or(StoreError::Truncated)?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

struct Decoded {
    view: AttackerView,
    theta2: Vec<usize>,
}

fn decode(bytes: &[u8]) -> Result<Decoded, StoreError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(StoreError::BadMagic);
    }
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(StoreError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let kind = cur.take(1)?[0];
    let value_bytes = match kind {
        0 => 4u128,
        1 => 8u128,
        other => return Err(StoreError::Invalid(format!("unknown value kind {other}"))),
    };
    let seed = cur.u64()?;
    let m = cur.u64()?;
    let n = cur.u64()?;
    let spec_len = cur.u32()? as u128;

    let expected_len = HEADER_LEN as u128
        + spec_len
        + 2 * (n as u128) * (m as u128) * value_bytes
        + 8 * n as u128
        + 4
        + CHECKSUM_LEN as u128;
    if (bytes.len() as u128) < expected_len {
        return Err(StoreError::Truncated);
    }
    if (bytes.len() as u128) > expected_len {
        return Err(StoreError::Invalid(format!(
            "{} trailing bytes after the checksum",
            bytes.len() as u128 - expected_len
        )));
    }
    let body_len = bytes.len() - CHECKSUM_LEN;
    if Sha256::digest(&bytes[..body_len]).as_slice() != &bytes[body_len..] {
        return Err(StoreError::ChecksumMismatch);
    }

    let (m, n) = (m as usize, n as usize);
    let spec: JointProcessSpec = serde_json::from_slice(cur.take(spec_len as usize)?)
        .map_err(|e| StoreError::Invalid(format!("embedded spec: {e}")))?;
    let spec_id = spec.id();
    let read_entries = |cur: &mut Cursor<'_>| -> Result<Entries, StoreError> {
        let raw = cur.take(n * m * value_bytes as usize)?;
        Ok(if kind == 0 {
            Entries::Symbols(raw.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
        } else {
            Entries::Reals(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
        })
    };
    let e1 = read_entries(&mut cur)?;
    let e2 = read_entries(&mut cur)?;
    let read_theta = |cur: &mut Cursor<'_>| -> Result<Vec<usize>, StoreError> {
        (0..n).map(|_| cur.u32().map(|t| t as usize)).collect()
    };
    let theta1 = read_theta(&mut cur)?;
    if cur.take(4)? != TRUTH_MARKER {
        return Err(StoreError::Invalid("missing ground-truth section marker".into()));
    }
    let theta2 = read_theta(&mut cur)?;

    let db1 = LabeledDatabase::new(UnlabeledDatabase::new(m, n, e1, spec_id.clone())?, theta1)?;
    let db2 = UnlabeledDatabase::new(m, n, e2, spec_id)?;
    super::database::check_permutation(&theta2, n)?;
    Ok(Decoded {
        view: AttackerView { db1, db2, spec, seed },
        theta2,
    })
}

fn read(path: &Path) -> Result<Decoded, StoreError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    decode(&bytes)
}

/// Loads a pair including the ground-truth labeling of DB2.
pub fn load_pair(path: impl AsRef<Path>) -> Result<CorrelatedPair, StoreError> {
    let Decoded { view, theta2 } = read(path.as_ref())?;
    let pair = CorrelatedPair {
        db1: view.db1,
        db2: LabeledDatabase::new(view.db2, theta2)?,
        spec: view.spec,
        seed: view.seed,
    };
    pair.validate()?;
    Ok(pair)
}

/// Loads a pair with the ground-truth labeling of DB2 dropped.
pub fn load_attacker_view(path: impl AsRef<Path>) -> Result<AttackerView, StoreError> {
    let pair = load_pair(path)?;
    let (db2, _) = pair.db2.into_parts();
    Ok(AttackerView {
        db1: pair.db1,
        db2,
        spec: pair.spec,
        seed: pair.seed,
    })
}

/// Writes one entry per row: `database,position,label,v0..v{m-1}`. DB2
/// labels are left empty unless `include_truth` is set.
pub fn export_csv(pair: &CorrelatedPair, path: impl AsRef<Path>, include_truth: bool) -> Result<(), StoreError> {
    let path = path.as_ref();
    let csv_err = |e: csv::Error| StoreError::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["database".to_string(), "position".into(), "label".into()];
    header.extend((0..pair.m()).map(|k| format!("v{k}")));
    writer.write_record(&header).map_err(csv_err)?;
    for (which, db) in [(1, &pair.db1), (2, &pair.db2)] {
        for i in 0..pair.n() {
            let mut record = vec![which.to_string(), i.to_string()];
            record.push(if which == 1 || include_truth {
                db.theta()[i].to_string()
            } else {
                String::new()
            });
            let range = i * pair.m()..(i + 1) * pair.m();
            match db.base().entries() {
                Entries::Symbols(v) => record.extend(v[range].iter().map(u32::to_string)),
                Entries::Reals(v) => record.extend(v[range].iter().map(f64::to_string)),
            }
            writer.write_record(&record).map_err(csv_err)?;
        }
    }
    writer.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::ProcessModel;
    use crate::store::{generate_correlated_pair, GenerateOptions};

    fn sample_bytes() -> Vec<u8> {
        let model = ProcessModel::new(JointProcessSpec::IidDiscrete {
            alphabet_size_1: 2,
            alphabet_size_2: 2,
            joint_pmf: vec![0.45, 0.05, 0.05, 0.45],
        })
        .unwrap();
        let pair = generate_correlated_pair(&model, 8, 5, 3, &GenerateOptions::default()).unwrap();
        encode(&pair)
    }

    #[test]
    fn each_corruption_has_its_own_error() {
        let good = sample_bytes();
        assert!(decode(&good).is_ok());

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(StoreError::BadMagic)));

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(decode(&bad), Err(StoreError::VersionMismatch { found: 9, .. })));

        let bad = &good[..good.len() - 1];
        assert!(matches!(decode(bad), Err(StoreError::Truncated)));
        assert!(matches!(decode(&good[..10]), Err(StoreError::Truncated)));

        let mut bad = good.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0xff;
        assert!(matches!(decode(&bad), Err(StoreError::ChecksumMismatch)));

        // a payload flip is caught by the checksum too
        let mut bad = good.clone();
        bad[HEADER_LEN + 60] ^= 1;
        assert!(matches!(decode(&bad), Err(StoreError::ChecksumMismatch)));
    }
}
