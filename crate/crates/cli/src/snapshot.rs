//! State snapshots: a small text header followed by raw little-endian f64
//! samples of the five real-space components, row-major with the first grid
//! axis outermost. The header is self-describing so a snapshot can be read
//! back without the config that produced it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use oldroyd2d::{
    Fft2d, GridSpec, Representation, ScalarField, State, SymTensorField, VectorField,
};

pub const MAGIC: &str = "oldroyd2d-snapshot v1";
const FIELDS: &str = "u1,u2,tau11,tau12,tau22";
const ENCODING: &str = "f64-le-rowmajor";

pub fn write_snapshot(path: &Path, state: &State, grid: &GridSpec, fft: &Fft2d) -> Result<(), String> {
    let file = File::create(path)
        .map_err(|e| format!("cannot create snapshot '{}': {e}", path.display()))?;
    let mut w = BufWriter::new(file);
    let header = format!(
        "{MAGIC}\nn = {}\nlength = {:?}\nt = {:?}\nfields = {FIELDS}\nencoding = {ENCODING}\nend-header\n",
        grid.n, grid.box_length, state.t
    );
    let io = |e: std::io::Error| format!("snapshot write failed: {e}");
    w.write_all(header.as_bytes()).map_err(io)?;
    let u = state.u.to_real(fft);
    let tau = state.tau.to_real(fft);
    for comp in [&u.c1, &u.c2, &tau.c11, &tau.c12, &tau.c22] {
        for v in comp.data.iter() {
            w.write_all(&v.re.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[derive(Debug)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub state: State,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, String> {
    let file = File::open(path)
        .map_err(|e| format!("cannot open snapshot '{}': {e}", path.display()))?;
    let mut r = BufReader::new(file);

    let mut header = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)
            .map_err(|_| "snapshot truncated inside header".to_string())?;
        header.push(byte[0]);
        if header.ends_with(b"end-header\n") {
            break;
        }
        if header.len() > 4096 {
            return Err("snapshot header too long or missing end-header".to_string());
        }
    }
    let header = String::from_utf8(header).map_err(|_| "snapshot header is not UTF-8".to_string())?;
    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(format!("not a snapshot file (expected '{MAGIC}' first line)"));
    }
    let mut n = None;
    let mut length = None;
    let mut t = None;
    for line in lines {
        if line == "end-header" {
            break;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("bad snapshot header line '{line}'"));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|e| format!("bad n: {e}"))?),
            "length" => length = Some(value.parse::<f64>().map_err(|e| format!("bad length: {e}"))?),
            "t" => t = Some(value.parse::<f64>().map_err(|e| format!("bad t: {e}"))?),
            "fields" => {
                if value != FIELDS {
                    return Err(format!("unsupported field list '{value}'"));
                }
            }
            "encoding" => {
                if value != ENCODING {
                    return Err(format!("unsupported encoding '{value}'"));
                }
            }
            other => return Err(format!("unknown snapshot header key '{other}'")),
        }
    }
    let n = n.ok_or("snapshot header missing n")?;
    let length = length.ok_or("snapshot header missing length")?;
    let t = t.ok_or("snapshot header missing t")?;
    let grid = GridSpec::new(n, length).map_err(|e| format!("snapshot grid: {e}"))?;

    let mut component = || -> Result<ScalarField, String> {
        let mut data = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        let mut buf = [0u8; 8];
        for v in data.iter_mut() {
            r.read_exact(&mut buf)
                .map_err(|_| "snapshot truncated inside data".to_string())?;
            v.re = f64::from_le_bytes(buf);
        }
        Ok(ScalarField {
            data,
            repr: Representation::Real,
        })
    };
    let u = VectorField {
        c1: component()?,
        c2: component()?,
    };
    let tau = SymTensorField {
        c11: component()?,
        c12: component()?,
        c22: component()?,
    };
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| format!("read: {e}"))? != 0 {
        return Err("snapshot has trailing bytes after field data".to_string());
    }
    Ok(Snapshot {
        grid,
        state: State { t, u, tau },
    })
}
