use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

use super::ensemble::ParticleEnsemble;

const MAGIC: &[u8; 4] = b"MVSE";
const VERSION: u32 = 1;

/// Writes a complete ensemble as a header followed by knot-major
/// little-endian `f64` states. Integrals are not stored.
pub fn write_binary(ens: &ParticleEnsemble, mut w: impl Write) -> Result<()> {
    if !ens.is_complete() {
        return Err(Error::domain("only complete ensembles can be written"));
    }
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u64::<LittleEndian>(ens.particles as u64)?;
    w.write_u64::<LittleEndian>(ens.grid.steps() as u64)?;
    w.write_u64::<LittleEndian>(ens.dim as u64)?;
    w.write_f64::<LittleEndian>(ens.grid.horizon())?;
    w.write_u64::<LittleEndian>(ens.seed)?;
    w.write_u64::<LittleEndian>(ens.noise_stride as u64)?;
    let id = ens.model_id.as_bytes();
    w.write_u32::<LittleEndian>(id.len() as u32)?;
    w.write_all(id)?;
    for v in ens.states() {
        w.write_f64::<LittleEndian>(*v)?;
    }
    Ok(())
}

pub fn read_binary(mut r: impl Read) -> Result<ParticleEnsemble> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config("not an ensemble file"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Unsupported(format!("ensemble file version {version}")));
    }
    let particles = to_usize(r.read_u64::<LittleEndian>()?)?;
    let steps = to_usize(r.read_u64::<LittleEndian>()?)?;
    let dim = to_usize(r.read_u64::<LittleEndian>()?)?;
    let horizon = r.read_f64::<LittleEndian>()?;
    let seed = r.read_u64::<LittleEndian>()?;
    let noise_stride = to_usize(r.read_u64::<LittleEndian>()?)?;
    let id_len = r.read_u32::<LittleEndian>()? as usize;
    let mut id = vec![0u8; id_len];
    r.read_exact(&mut id)?;
    let model_id = String::from_utf8(id).map_err(|_| Error::config("model id is not UTF-8"))?;
    let grid = TimeGrid::new(horizon, steps)?;
    if particles == 0 || dim == 0 {
        return Err(Error::config("ensemble header has zero particles or dimension"));
    }
    let len = particles
        .checked_mul(dim)
        .and_then(|w| w.checked_mul(steps + 1))
        .ok_or_else(|| Error::Resource("ensemble size overflows".into()))?;
    let mut states = vec![0.0; len];
    r.read_f64_into::<LittleEndian>(&mut states)?;
    Ok(ParticleEnsemble {
        particles,
        dim,
        grid,
        seed,
        noise_stride,
        model_id,
        states,
        filled: steps + 1,
        particle_integrals: Vec::new(),
        measure_integrals: Vec::new(),
    })
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Resource(format!("{v} does not fit in usize")))
}

/// One row per `(particle, knot)`: `particle,knot,t,x0,..,x{d-1}`.
pub fn write_csv(ens: &ParticleEnsemble, mut w: impl Write) -> Result<()> {
    write!(w, "particle,knot,t")?;
    for j in 0..ens.dim {
        write!(w, ",x{j}")?;
    }
    writeln!(w)?;
    for i in 0..ens.particles {
        for m in 0..ens.filled {
            write!(w, "{i},{m},{}", ens.grid.knot(m))?;
            for v in ens.state(i, m) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
