//! File formats: the binary SQM1 matrix container, a plain-CSV import path,
//! and serialization of low-rank descriptions so experiments can resume from
//! a saved subsample.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::dense::DenseMatrix;
use crate::error::{Result, SqError};
use crate::lowrank::LowRankDescription;
use crate::sq::SqMatrix;

const MATRIX_MAGIC: &[u8; 4] = b"SQM1";
const DESC_MAGIC: &[u8; 4] = b"SQD1";

/// Write a matrix: magic "SQM1", u64 LE rows, u64 LE cols, then row-major
/// f64 LE entries. Vectors are stored with rows = 1.
pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&(a.rows() as u64).to_le_bytes())?;
    w.write_all(&(a.cols() as u64).to_le_bytes())?;
    for &x in a.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector(path: &Path, x: &[f64]) -> Result<()> {
    let m = DenseMatrix::from_vec(1, x.len(), x.to_vec())?;
    write_matrix(path, &m)
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(SqError::Format(format!(
            "bad magic {:?} (expected SQM1)",
            magic
        )));
    }
    let rows = read_u64(&mut r)? as usize;
    let cols = read_u64(&mut r)? as usize;
    if rows == 0 || cols == 0 {
        return Err(SqError::Format("zero dimension".into()));
    }
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| SqError::Format("dimension overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        data.push(read_f64(&mut r)?);
    }
    DenseMatrix::from_vec(rows, cols, data)
}

/// Read a vector: a 1×n or n×1 SQM1 file.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.rows() != 1 && m.cols() != 1 {
        return Err(SqError::Format(format!(
            "expected a vector, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.data().to_vec())
}

/// Plain numeric CSV: one row per line, comma-separated, no header.
pub fn read_csv_matrix(path: &Path) -> Result<DenseMatrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| {
                    SqError::Format(format!("line {}: {e} in {tok:?}", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(SqError::Format(format!(
                    "line {}: {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SqError::Format("empty CSV".into()));
    }
    DenseMatrix::from_rows(&rows)
}

/// Load a matrix by extension: `.csv` as plain CSV, anything else as SQM1.
pub fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    if path.extension().and_then(|e| e.to_str()) == Some("csv") {
        read_csv_matrix(path)
    } else {
        read_matrix(path)
    }
}

/// Serialize a low-rank description: magic "SQD1", u64 q, u64 ℓ, f64
/// Frobenius norm, then the q row indices (u64), q column indices (u64),
/// ℓ singular values (f64), and the q×ℓ `Û` block row-major (f64), all LE.
/// The source matrix is not embedded; `read_description` rebinds a handle.
pub fn write_description(path: &Path, desc: &LowRankDescription) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DESC_MAGIC)?;
    w.write_all(&(desc.q as u64).to_le_bytes())?;
    w.write_all(&(desc.rank() as u64).to_le_bytes())?;
    w.write_all(&desc.frobenius.to_le_bytes())?;
    for &i in &desc.row_indices {
        w.write_all(&(i as u64).to_le_bytes())?;
    }
    for &j in &desc.col_indices {
        w.write_all(&(j as u64).to_le_bytes())?;
    }
    for &s in &desc.sigma_hat {
        w.write_all(&s.to_le_bytes())?;
    }
    for &x in desc.u_hat.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Rebind a serialized description to its source matrix. Validates that the
/// stored Frobenius norm and index ranges match the supplied matrix.
pub fn read_description(path: &Path, a: Arc<SqMatrix>) -> Result<LowRankDescription> {
    use crate::sq::SqMatrixAccess;
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DESC_MAGIC {
        return Err(SqError::Format(format!(
            "bad magic {:?} (expected SQD1)",
            magic
        )));
    }
    let q = read_u64(&mut r)? as usize;
    let l = read_u64(&mut r)? as usize;
    let fro = read_f64(&mut r)?;
    if (fro - a.true_frobenius()).abs() > 1e-9 * fro.max(1.0) {
        return Err(SqError::Format(
            "description does not match this matrix (Frobenius norm differs)".into(),
        ));
    }
    let mut row_indices = Vec::with_capacity(q);
    for _ in 0..q {
        let i = read_u64(&mut r)? as usize;
        if i < 1 || i > a.rows() {
            return Err(SqError::Format(format!("row index {i} out of range")));
        }
        row_indices.push(i);
    }
    let mut col_indices = Vec::with_capacity(q);
    for _ in 0..q {
        let j = read_u64(&mut r)? as usize;
        if j < 1 || j > a.cols() {
            return Err(SqError::Format(format!("column index {j} out of range")));
        }
        col_indices.push(j);
    }
    let mut sigma_hat = Vec::with_capacity(l);
    for _ in 0..l {
        sigma_hat.push(read_f64(&mut r)?);
    }
    let mut u_data = Vec::with_capacity(q * l);
    for _ in 0..q * l {
        u_data.push(read_f64(&mut r)?);
    }
    let u_hat = if l == 0 {
        DenseMatrix::zeros(q, 0)
    } else {
        DenseMatrix::from_vec(q, l, u_data)?
    };
    Ok(LowRankDescription {
        a,
        frobenius: fro,
        q,
        row_indices,
        col_indices,
        u_hat,
        sigma_hat,
    })
}
