//! Single-file binary model container.
//!
//! ```text
//! "STPL"                         magic, 4 bytes
//! u32 LE                         format version
//! u64 LE + bytes                 UTF-8 JSON metadata
//! u64 LE                         matrix count
//!   u32 LE + bytes               matrix name
//!   u64 LE, u64 LE               rows, cols
//!   rows*cols f64 LE             values, row-major
//! u32 LE                         CRC-32 of every preceding byte
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backward::BackwardModel;
use crate::data::{NormStats, SourceFormat};
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::fusion::{FusionClassifier, FusionSelection};
use crate::linalg::{Activation, DataMatrix};
use crate::synergy::{Aggregation, ElementaryModel, SynergeticModel, SynergyConfig};

pub const MAGIC: &[u8; 4] = b"STPL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Metadata {
    class_names: Vec<String>,
    norm: NormStats,
    aggregation: Aggregation,
    source: Option<SourceFormat>,
    config: SynergyConfig,
    members: Vec<MemberMetadata>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MemberMetadata {
    subsystem_seed: u64,
    forward_depth: usize,
    forward_activation: Activation,
    backward_depth: usize,
    backward_activation: Activation,
    fusion_activation: Activation,
    fusion_sel: FusionSelection,
}

fn matrix_names(i: usize, forward_depth: usize, backward_depth: usize) -> Vec<String> {
    let mut names = Vec::new();
    names.extend((0..forward_depth).map(|k| format!("member{i}.forward.encoder{k}")));
    names.push(format!("member{i}.forward.output"));
    names.extend((0..backward_depth).map(|k| format!("member{i}.backward.hidden{k}")));
    names.push(format!("member{i}.backward.output"));
    names.push(format!("member{i}.fusion.expansion"));
    names.push(format!("member{i}.fusion.output"));
    names
}

pub fn to_bytes(m: &SynergeticModel) -> Result<Vec<u8>> {
    let members = m
        .members
        .iter()
        .map(|e| MemberMetadata {
            subsystem_seed: e.subsystem_seed,
            forward_depth: e.forward.depth(),
            forward_activation: e.forward.activation,
            backward_depth: e.backward.depth(),
            backward_activation: e.backward.activation,
            fusion_activation: e.classifier.activation,
            fusion_sel: e.fusion_sel.clone(),
        })
        .collect();
    let meta = Metadata {
        class_names: m.class_names.clone(),
        norm: m.norm.clone(),
        aggregation: m.aggregation,
        source: m.source.clone(),
        config: m.config.clone(),
        members,
    };
    let meta_json = serde_json::to_vec(&meta)?;

    let mut matrices: Vec<(String, &DataMatrix)> = Vec::new();
    for (i, e) in m.members.iter().enumerate() {
        let names = matrix_names(i, e.forward.depth(), e.backward.depth());
        let values = e
            .forward
            .encoder_weights
            .iter()
            .chain([&e.forward.output_weight])
            .chain(&e.backward.hidden_weights)
            .chain([
                &e.backward.output_weight,
                &e.classifier.expansion_weight,
                &e.classifier.output_weight,
            ]);
        matrices.extend(names.into_iter().zip(values));
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta_json);
    out.extend_from_slice(&(matrices.len() as u64).to_le_bytes());
    for (name, mat) in matrices {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(mat.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(mat.cols() as u64).to_le_bytes());
        for v in mat.to_row_major() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: u64) -> Result<&'a [u8]> {
        let avail = (self.bytes.len() - self.pos) as u64;
        if n > avail {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                needed: n,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n as usize];
        self.pos += n as usize;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<SynergeticModel> {
    let found = &bytes[..bytes.len().min(4)];
    if found != MAGIC {
        return Err(Error::BadMagic {
            offset: 0,
            expected: MAGIC.to_vec(),
            found: found.to_vec(),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            offset: 4,
            needed: 4,
        });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    const MIN_LEN: usize = 4 + 4 + 8 + 8 + 4;
    if bytes.len() < MIN_LEN {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            needed: (MIN_LEN - bytes.len()) as u64,
        });
    }
    let body_len = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_len..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(Error::Checksum {
            offset: body_len as u64,
            stored,
            computed,
        });
    }

    let mut r = Reader {
        bytes: &bytes[..body_len],
        pos: 8,
    };
    let meta_len = r.u64()?;
    let meta_offset = r.offset();
    let meta: Metadata = serde_json::from_slice(r.take(meta_len)?).map_err(|e| Error::Format {
        offset: meta_offset,
        message: format!("metadata: {e}"),
    })?;

    let count = r.u64()?;
    let mut matrices: BTreeMap<String, DataMatrix> = BTreeMap::new();
    for _ in 0..count {
        let name_offset = r.offset();
        let name_len = r.u32()?;
        let name = std::str::from_utf8(r.take(name_len as u64)?)
            .map_err(|_| Error::Format {
                offset: name_offset,
                message: "matrix name is not UTF-8".into(),
            })?
            .to_owned();
        let shape_offset = r.offset();
        let rows = r.u64()?;
        let cols = r.u64()?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Format {
                offset: shape_offset,
                message: format!("shape {rows} x {cols} overflows"),
            })?;
        let values_offset = r.offset();
        let raw = r.take(n)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let mat =
            DataMatrix::from_row_major(rows as usize, cols as usize, values).map_err(|e| {
                Error::Format {
                    offset: values_offset,
                    message: format!("matrix `{name}`: {e}"),
                }
            })?;
        if matrices.insert(name.clone(), mat).is_some() {
            return Err(Error::Format {
                offset: name_offset,
                message: format!("duplicate matrix `{name}`"),
            });
        }
    }
    if r.pos != body_len {
        return Err(Error::Format {
            offset: r.offset(),
            message: format!("{} trailing bytes", body_len - r.pos),
        });
    }

    let end = r.offset();
    let format_err = |message: String| Error::Format {
        offset: end,
        message,
    };
    let mut members = Vec::with_capacity(meta.members.len());
    for (i, mm) in meta.members.iter().enumerate() {
        let mut take = |name: String| {
            matrices
                .remove(&name)
                .ok_or_else(|| format_err(format!("missing matrix `{name}`")))
        };
        let mut names = matrix_names(i, mm.forward_depth, mm.backward_depth).into_iter();
        let mut next = || take(names.next().expect("name list matches layout"));
        let encoders = (0..mm.forward_depth)
            .map(|_| next())
            .collect::<Result<Vec<_>>>()?;
        let forward = ForwardModel::new(encoders, mm.forward_activation, next()?)?;
        let hidden = (0..mm.backward_depth)
            .map(|_| next())
            .collect::<Result<Vec<_>>>()?;
        let backward = BackwardModel::new(hidden, mm.backward_activation, next()?)?;
        let expansion = next()?;
        let classifier = FusionClassifier::new(expansion, mm.fusion_activation, next()?)?;
        members.push(ElementaryModel {
            forward,
            backward,
            fusion_sel: mm.fusion_sel.clone(),
            classifier,
            subsystem_seed: mm.subsystem_seed,
        });
    }
    if let Some(extra) = matrices.keys().next() {
        return Err(format_err(format!("unexpected matrix `{extra}`")));
    }
    let model = SynergeticModel {
        members,
        aggregation: meta.aggregation,
        norm: meta.norm,
        class_names: meta.class_names,
        source: meta.source,
        config: meta.config,
    };
    model.check()?;
    Ok(model)
}

pub fn save(m: &SynergeticModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_bytes(m)?)?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<SynergeticModel> {
    from_bytes(&std::fs::read(path)?)
}
