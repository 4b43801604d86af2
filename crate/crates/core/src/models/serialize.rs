//! Flat binary checkpoint format for weights.
//!
//! Header: magic `EQW1`, model kind, geometry; payload: little-endian 64-bit
//! reals in declaration order (FC layers row-major in order; CNN filter,
//! head, bias).

use std::io::{Read, Write};
use std::path::Path;

use super::{Activation, ModelError, ModelGeometry, ParamWeights, PoolKind};

const MAGIC: &[u8; 4] = b"EQW1";

fn act_code(a: Activation) -> u8 {
    match a {
        Activation::Quadratic => 0,
        Activation::Relu => 1,
        Activation::Identity => 2,
    }
}

fn act_from(code: u8) -> Result<Activation, ModelError> {
    Ok(match code {
        0 => Activation::Quadratic,
        1 => Activation::Relu,
        2 => Activation::Identity,
        c => return Err(ModelError::BadFormat(format!("unknown activation code {c}"))),
    })
}

fn pool_code(p: PoolKind) -> u8 {
    match p {
        PoolKind::SumOfSquares => 0,
        PoolKind::Sum => 1,
    }
}

fn pool_from(code: u8) -> Result<PoolKind, ModelError> {
    Ok(match code {
        0 => PoolKind::SumOfSquares,
        1 => PoolKind::Sum,
        c => return Err(ModelError::BadFormat(format!("unknown pool code {c}"))),
    })
}

pub fn write_weights<W: Write>(mut out: W, w: &ParamWeights) -> Result<(), ModelError> {
    out.write_all(MAGIC)?;
    match w.geometry() {
        ModelGeometry::Fc { dims, activation } => {
            out.write_all(&[0u8, act_code(activation)])?;
            out.write_all(&(dims.len() as u32).to_le_bytes())?;
            for d in &dims {
                out.write_all(&(*d as u32).to_le_bytes())?;
            }
        }
        ModelGeometry::Cnn { d, dprime, r, k, pool } => {
            out.write_all(&[1u8, pool_code(pool)])?;
            for v in [d, dprime, r, k] {
                out.write_all(&(v as u32).to_le_bytes())?;
            }
        }
    }
    for v in w.to_flat() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_weights<R: Read>(mut input: R) -> Result<ParamWeights, ModelError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::BadFormat("bad magic".into()));
    }
    let mut hdr = [0u8; 2];
    input.read_exact(&mut hdr)?;
    let geom = match hdr[0] {
        0 => {
            let activation = act_from(hdr[1])?;
            let n = read_u32(&mut input)? as usize;
            if n < 2 {
                return Err(ModelError::BadFormat("FC needs at least two dims".into()));
            }
            let mut dims = Vec::with_capacity(n);
            for _ in 0..n {
                dims.push(read_u32(&mut input)? as usize);
            }
            ModelGeometry::fc(dims, activation)?
        }
        1 => {
            let pool = pool_from(hdr[1])?;
            let d = read_u32(&mut input)? as usize;
            let _dprime = read_u32(&mut input)? as usize;
            let r = read_u32(&mut input)? as usize;
            let k = read_u32(&mut input)? as usize;
            ModelGeometry::cnn(d, r, k, pool)?
        }
        c => return Err(ModelError::BadFormat(format!("unknown model kind {c}"))),
    };
    let n = geom.num_params();
    let mut theta = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut b)?;
        theta.push(f64::from_le_bytes(b));
    }
    ParamWeights::from_flat(&geom, &theta)
}

pub fn save_weights<P: AsRef<Path>>(path: P, w: &ParamWeights) -> Result<(), ModelError> {
    write_weights(std::io::BufWriter::new(std::fs::File::create(path)?), w)
}

pub fn load_weights<P: AsRef<Path>>(path: P) -> Result<ParamWeights, ModelError> {
    read_weights(std::io::BufReader::new(std::fs::File::open(path)?))
}
