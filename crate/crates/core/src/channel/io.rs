//! Binary cube format: little-endian `u32` header `M, L_rx, N, P`, then
//! `f64` real/imaginary pairs in `[m][l_rx][n][p]` order with `p` fastest.

use super::IfCube;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use std::io::{self, Read, Write};

pub fn write_cube<W: Write>(cube: &IfCube, mut out: W) -> io::Result<()> {
    for dim in [cube.m(), cube.l_rx(), cube.n(), cube.p()] {
        out.write_u32::<LittleEndian>(dim as u32)?;
    }
    for m in 0..cube.m() {
        for r in 0..cube.l_rx() {
            for n in 0..cube.n() {
                for p in 0..cube.p() {
                    let z = cube.at(m, r, n, p);
                    out.write_f64::<LittleEndian>(z.re)?;
                    out.write_f64::<LittleEndian>(z.im)?;
                }
            }
        }
    }
    out.flush()
}

pub fn read_cube<R: Read>(mut input: R) -> io::Result<IfCube> {
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = input.read_u32::<LittleEndian>()? as usize;
    }
    let [m_n, l_rx, n_n, p_n] = dims;
    let mut cube = IfCube::zeros(m_n, l_rx, n_n, p_n);
    for m in 0..m_n {
        for r in 0..l_rx {
            for n in 0..n_n {
                for p in 0..p_n {
                    let re = input.read_f64::<LittleEndian>()?;
                    let im = input.read_f64::<LittleEndian>()?;
                    cube.data[[m, r, p, n]] = Complex64::new(re, im);
                }
            }
        }
    }
    Ok(cube)
}
