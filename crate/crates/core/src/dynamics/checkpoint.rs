use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{make_grid, Grid, ScalarField, VectorField};

use super::params::Params;
use super::state::State;

const MAGIC: &[u8; 4] = b"MPF1";
const VERSION: u32 = 1;

/// Header fields of a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointInfo {
    pub version: u32,
    pub n: u32,
    pub length: f64,
    pub params: Params,
    pub t: f64,
}

/// Little-endian binary dump of the grid, parameters and state coefficients.
pub fn write_checkpoint<W: Write>(mut w: W, state: &State, params: &Params) -> Result<()> {
    let g = state.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    for v in [g.length(), params.nu, params.nu_r, params.alpha, state.t] {
        w.write_all(&v.to_le_bytes())?;
    }
    for f in [&state.u.x, &state.u.y, &state.omega] {
        for c in f.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_checkpoint_info<R: Read>(mut r: R) -> Result<CheckpointInfo> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)?;
    let length = read_f64(&mut r)?;
    let params = Params {
        nu: read_f64(&mut r)?,
        nu_r: read_f64(&mut r)?,
        alpha: read_f64(&mut r)?,
    };
    let t = read_f64(&mut r)?;
    Ok(CheckpointInfo {
        version,
        n,
        length,
        params,
        t,
    })
}

fn read_block<R: Read>(r: &mut R, grid: &Arc<Grid>) -> Result<ScalarField> {
    let mut coeffs = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(r)?;
        let im = read_f64(r)?;
        coeffs.push(Complex64::new(re, im));
    }
    ScalarField::from_exact_coeffs(grid, coeffs)
        .map_err(|e| Error::Checkpoint(format!("corrupt coefficient block: {e}")))
}

/// Inverse of [`write_checkpoint`]; the state round-trips bit for bit.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(State, Params)> {
    let info = read_checkpoint_info(&mut r)?;
    info.params
        .validate()
        .map_err(|e| Error::Checkpoint(format!("invalid parameters: {e}")))?;
    let grid = make_grid(info.n as usize, info.length)
        .map_err(|e| Error::Checkpoint(format!("invalid grid: {e}")))?;
    let x = read_block(&mut r, &grid)?;
    let y = read_block(&mut r, &grid)?;
    let omega = read_block(&mut r, &grid)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    let state = State {
        u: VectorField { x, y },
        omega,
        t: info.t,
    };
    Ok((state, info.params))
}
