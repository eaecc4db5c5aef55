//! Flat little-endian `f64` blob plus a text manifest.
//!
//! ```text
//! encoder-checkpoint 1
//! n_ops 4 d_encoder 16 heads 2
//! adam_step 0
//! w_in 4 16 0
//! ...
//! ```
//! Each tensor line is `name rows cols byte_offset`. Adam moments, when
//! present, follow as `adam.m/<name>` and `adam.v/<name>`.

use super::network::{AdamMoments, EncoderWeights};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &str = "encoder-checkpoint 1";

pub fn write_checkpoint(w: &EncoderWeights) -> (String, Vec<u8>) {
    let names = w.tensor_names();
    let mut entries: Vec<(String, &Matrix)> = names.iter().cloned().zip(w.tensors()).collect();
    if let Some(adam) = &w.adam {
        entries.extend(names.iter().map(|n| format!("adam.m/{n}")).zip(&adam.m));
        entries.extend(names.iter().map(|n| format!("adam.v/{n}")).zip(&adam.v));
    }
    let mut manifest = format!(
        "{MAGIC}\nn_ops {} d_encoder {} heads {}\nadam_step {}\n",
        w.n_ops,
        w.d_encoder,
        w.heads,
        w.adam.as_ref().map_or(0, |a| a.step)
    );
    let mut blob = Vec::new();
    for (name, m) in entries {
        manifest.push_str(&format!("{name} {} {} {}\n", m.rows(), m.cols(), blob.len()));
        for v in m.as_slice() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    (manifest, blob)
}

/// Restores weights into `template`, which fixes the expected shapes.
pub fn read_checkpoint(template: &EncoderWeights, manifest: &str, blob: &[u8]) -> Result<EncoderWeights> {
    let bad = |m: String| Error::Checkpoint(m);
    let mut lines = manifest.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(bad("missing header".into()));
    }
    let dims = lines.next().ok_or_else(|| bad("missing dimensions".into()))?;
    let expected_dims = format!(
        "n_ops {} d_encoder {} heads {}",
        template.n_ops, template.d_encoder, template.heads
    );
    if dims.trim() != expected_dims {
        return Err(bad(format!("dimension line {dims:?} does not match {expected_dims:?}")));
    }
    let adam_step: u64 = lines
        .next()
        .and_then(|l| l.strip_prefix("adam_step "))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("missing adam_step".into()))?;

    let mut tensors = std::collections::HashMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let [name, rows, cols, off] = f[..] else {
            return Err(bad(format!("malformed line {line:?}")));
        };
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad number in {line:?}")));
        let (rows, cols, off) = (parse(rows)?, parse(cols)?, parse(off)?);
        let end = off + rows * cols * 8;
        let bytes = blob
            .get(off..end)
            .ok_or_else(|| bad(format!("tensor {name} runs past the blob")))?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.insert(name.to_string(), Matrix::from_vec(rows, cols, data)?);
    }

    let mut out = template.clone();
    let names = template.tensor_names();
    let has_adam = names.iter().any(|n| tensors.contains_key(&format!("adam.m/{n}")));
    let mut take = |name: &str, like: &Matrix| -> Result<Matrix> {
        let m = tensors
            .remove(name)
            .ok_or_else(|| bad(format!("missing tensor {name}")))?;
        if m.shape() != like.shape() {
            return Err(bad(format!(
                "tensor {name} has shape {:?}, expected {:?}",
                m.shape(),
                like.shape()
            )));
        }
        Ok(m)
    };
    let restored: Vec<Matrix> = names
        .iter()
        .zip(template.tensors())
        .map(|(n, t)| take(n, t))
        .collect::<Result<_>>()?;
    for (dst, src) in out.tensors_mut().into_iter().zip(restored) {
        *dst = src;
    }
    out.adam = if has_adam {
        let like = template.tensors();
        let mut m = Vec::with_capacity(names.len());
        let mut v = Vec::with_capacity(names.len());
        for (n, t) in names.iter().zip(&like) {
            m.push(take(&format!("adam.m/{n}"), t)?);
            v.push(take(&format!("adam.v/{n}"), t)?);
        }
        Some(AdamMoments { step: adam_step, m, v })
    } else {
        None
    };
    if let Some(extra) = tensors.keys().next() {
        return Err(bad(format!("unexpected tensor {extra}")));
    }
    Ok(out)
}
