//! CIFAR-10 binary batch parser with channel-norm relabeling.
//!
//! Record layout is 1 label byte followed by 3072 pixel bytes in channel-major
//! order (R, G, B planes of 32×32). The original label is discarded; the new
//! label is +1 iff the R plane has strictly larger ℓ2 norm than the G plane
//! (ties map to −1). Pixels are rescaled to [0,1] and mean-centered per
//! coordinate across the parsed set.

use std::io::Read;
use std::path::Path;

use super::LabeledSet;
use crate::algebra::Vector;

pub const CIFAR_DIM: usize = 3 * 32 * 32;
pub const CIFAR_RECORD_BYTES: usize = 1 + CIFAR_DIM;
const PLANE: usize = 32 * 32;

#[derive(Debug, thiserror::Error)]
pub enum CifarError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("truncated record at byte offset {offset}: {got} trailing bytes, record size is {CIFAR_RECORD_BYTES}")]
    Truncated { offset: usize, got: usize },
    #[error("empty file")]
    Empty,
}

/// Parse a binary batch from a reader and relabel by channel norm.
pub fn parse_channel_norm<R: Read>(mut input: R) -> Result<LabeledSet, CifarError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.is_empty() {
        return Err(CifarError::Empty);
    }
    let rem = bytes.len() % CIFAR_RECORD_BYTES;
    if rem != 0 {
        return Err(CifarError::Truncated {
            offset: bytes.len() - rem,
            got: rem,
        });
    }
    let n = bytes.len() / CIFAR_RECORD_BYTES;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut mean = Vector::zeros(CIFAR_DIM);
    for rec in bytes.chunks_exact(CIFAR_RECORD_BYTES) {
        let pixels = &rec[1..]; // original label byte discarded
        let norm_sq = |plane: usize| -> f64 {
            pixels[plane * PLANE..(plane + 1) * PLANE]
                .iter()
                .map(|&p| {
                    let v = p as f64;
                    v * v
                })
                .sum()
        };
        labels.push(if norm_sq(0) > norm_sq(1) { 1.0 } else { -1.0 });
        let x = Vector::from_fn(CIFAR_DIM, |i, _| pixels[i] as f64 / 255.0);
        mean += &x;
        points.push(x);
    }
    mean /= n as f64;
    for x in &mut points {
        *x -= &mean;
    }
    Ok(LabeledSet::new(points, labels, 0))
}

/// File-path front end; `cifar_channel_norm("data_batch_1.bin")`.
pub fn cifar_channel_norm<P: AsRef<Path>>(path: P) -> Result<LabeledSet, CifarError> {
    parse_channel_norm(std::fs::File::open(path)?)
}

#[cfg(test)]
pub(crate) fn synthetic_record(label: u8, r: u8, g: u8, b: u8) -> Vec<u8> {
    let mut rec = vec![label];
    rec.extend(std::iter::repeat(r).take(PLANE));
    rec.extend(std::iter::repeat(g).take(PLANE));
    rec.extend(std::iter::repeat(b).take(PLANE));
    rec
}
