//! On-disk formats shared between the library and the CLI.
//!
//! All binary payloads are little-endian 64-bit floats. Writes go through a
//! temp-file-then-rename so an interrupted run never leaves a truncated
//! artifact that parses as valid.
//!
//! * Vector sets (datasets, dictionaries, representations): magic
//!   `LINFDATA`, u32 version, u64 dim, u64 count, then `count` vectors of
//!   `dim` floats.
//! * Encoder models: magic `LINFMODL`, u32 version, u64 input dim n, u64
//!   code dim N, u64 stages K, then W (N×n), S_2 … S_K (N×N each),
//!   b_1 … b_K (N each), λ (N), every matrix row-major.
//! * Codes: one lowercase hex-packed code per line, bit 0 in the most
//!   significant bit of the first byte.
//! * Labels: `index,label` CSV lines covering every index exactly once.
//! * Pairs: `i,j,similar` CSV lines with `similar` ∈ {0, 1}.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::hashing::HashCode;

const DATA_MAGIC: &[u8; 8] = b"LINFDATA";
const MODEL_MAGIC: &[u8; 8] = b"LINFMODL";
const FORMAT_VERSION: u32 = 1;

/// Writes `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let directory = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(directory).map_err(|e| Error::io(directory, e))?;
    let mut temp = tempfile_in(directory)?;
    temp.1
        .write_all(bytes)
        .and_then(|_| temp.1.sync_all())
        .map_err(|e| Error::io(&temp.0, e))?;
    drop(temp.1);
    fs::rename(&temp.0, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn tempfile_in(directory: &Path) -> Result<(std::path::PathBuf, fs::File)> {
    for attempt in 0..1000 {
        let candidate = directory.join(format!(
            ".tmp-{}-{attempt}",
            std::process::id()
        ));
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&candidate)
        {
            Ok(file) => return Ok((candidate, file)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(candidate, e)),
        }
    }
    Err(Error::io(
        directory,
        std::io::Error::other("could not create a temp file"),
    ))
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.offset + len > self.bytes.len() {
            return Err(Error::parse(self.path, "file is truncated"));
        }
        let slice = &self.bytes[self.offset..self.offset + len];
        self.offset += len;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<()> {
        if self.offset != self.bytes.len() {
            return Err(Error::parse(
                self.path,
                format!("{} trailing bytes", self.bytes.len() - self.offset),
            ));
        }
        Ok(())
    }
}

fn check_magic(reader: &mut Reader<'_>, magic: &[u8; 8], what: &str) -> Result<()> {
    if reader.take(8)? != magic {
        return Err(Error::parse(reader.path, format!("not a {what} file")));
    }
    let version = reader.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::parse(
            reader.path,
            format!("unsupported {what} version {version}"),
        ));
    }
    Ok(())
}

/// Writes a set of vectors stored as the columns of `vectors`.
pub fn write_vectors(path: &Path, vectors: &DMatrix<f64>) -> Result<()> {
    let mut bytes =
        Vec::with_capacity(20 + 8 * vectors.nrows() * vectors.ncols());
    bytes.extend_from_slice(DATA_MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(vectors.nrows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(vectors.ncols() as u64).to_le_bytes());
    for m in 0..vectors.ncols() {
        for i in 0..vectors.nrows() {
            bytes.extend_from_slice(&vectors[(i, m)].to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

/// Reads a vector set into a dim×count matrix.
pub fn read_vectors(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Reader {
        path,
        bytes: &bytes,
        offset: 0,
    };
    check_magic(&mut reader, DATA_MAGIC, "vector-set")?;
    let dim = reader.u64()? as usize;
    let count = reader.u64()? as usize;
    if dim == 0 {
        return Err(Error::parse(path, "vector dimension is zero"));
    }
    let mut vectors = DMatrix::zeros(dim, count);
    for m in 0..count {
        for i in 0..dim {
            vectors[(i, m)] = reader.f64()?;
        }
    }
    reader.finish()?;
    Ok(vectors)
}

fn push_matrix_row_major(bytes: &mut Vec<u8>, matrix: &DMatrix<f64>) {
    for r in 0..matrix.nrows() {
        for c in 0..matrix.ncols() {
            bytes.extend_from_slice(&matrix[(r, c)].to_le_bytes());
        }
    }
}

fn read_matrix_row_major(reader: &mut Reader<'_>, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let mut matrix = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            matrix[(r, c)] = reader.f64()?;
        }
    }
    Ok(matrix)
}

/// Serializes encoder parameters.
pub fn write_model(path: &Path, params: &EncoderParams) -> Result<()> {
    let n = params.input_dim();
    let code = params.code_dim();
    let stages = params.stages();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MODEL_MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    bytes.extend_from_slice(&(code as u64).to_le_bytes());
    bytes.extend_from_slice(&(stages as u64).to_le_bytes());
    push_matrix_row_major(&mut bytes, params.input_weight());
    for s in params.couplings() {
        push_matrix_row_major(&mut bytes, s);
    }
    for b in params.biases() {
        for i in 0..b.len() {
            bytes.extend_from_slice(&b[i].to_le_bytes());
        }
    }
    for i in 0..code {
        bytes.extend_from_slice(&params.lambda()[i].to_le_bytes());
    }
    write_atomic(path, &bytes)
}

/// Deserializes encoder parameters.
pub fn read_model(path: &Path) -> Result<EncoderParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = Reader {
        path,
        bytes: &bytes,
        offset: 0,
    };
    check_magic(&mut reader, MODEL_MAGIC, "encoder-model")?;
    let n = reader.u64()? as usize;
    let code = reader.u64()? as usize;
    let stages = reader.u64()? as usize;
    if stages == 0 {
        return Err(Error::parse(path, "model has zero stages"));
    }
    let w = read_matrix_row_major(&mut reader, code, n)?;
    let mut s = Vec::with_capacity(stages - 1);
    for _ in 1..stages {
        s.push(read_matrix_row_major(&mut reader, code, code)?);
    }
    let mut b = Vec::with_capacity(stages);
    for _ in 0..stages {
        let mut bias = DVector::zeros(code);
        for i in 0..code {
            bias[i] = reader.f64()?;
        }
        b.push(bias);
    }
    let mut lambda = DVector::zeros(code);
    for i in 0..code {
        lambda[i] = reader.f64()?;
    }
    reader.finish()?;
    EncoderParams::new(w, s, b, lambda)
        .map_err(|e| Error::parse(path, format!("invalid model contents: {e}")))
}

/// Writes one hex-packed code per line.
pub fn write_codes(path: &Path, codes: &[HashCode]) -> Result<()> {
    let mut text = String::new();
    for code in codes {
        text.push_str(&code.to_hex());
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Reads hex codes; `bits` fixes the code length, otherwise full bytes are
/// assumed.
pub fn read_codes(path: &Path, bits: Option<usize>) -> Result<Vec<HashCode>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|line| !line.trim().is_empty())
        .map(|line| {
            HashCode::from_hex(line, bits).map_err(|e| Error::parse(path, e.to_string()))
        })
        .collect()
}

/// Writes `index,label` lines in index order.
pub fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut text = String::new();
    for (index, label) in labels.iter().enumerate() {
        text.push_str(&format!("{index},{label}\n"));
    }
    write_atomic(path, text.as_bytes())
}

/// Reads a label file that must cover indices 0..count exactly once.
pub fn read_labels(path: &Path, count: usize) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = vec![None; count];
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (index, label) = line.split_once(',').ok_or_else(|| {
            Error::parse(path, format!("line {}: expected index,label", line_no + 1))
        })?;
        let index: usize = index.trim().parse().map_err(|_| {
            Error::parse(path, format!("line {}: bad index {index:?}", line_no + 1))
        })?;
        let label: i64 = label.trim().parse().map_err(|_| {
            Error::parse(path, format!("line {}: bad label {label:?}", line_no + 1))
        })?;
        if index >= count {
            return Err(Error::parse(
                path,
                format!("label index {index} out of range 0..{count}"),
            ));
        }
        if labels[index].replace(label).is_some() {
            return Err(Error::parse(path, format!("duplicate label for {index}")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(index, label)| {
            label.ok_or_else(|| Error::parse(path, format!("missing label for index {index}")))
        })
        .collect()
}

/// Writes `i,j,similar` lines.
pub fn write_pairs(path: &Path, pairs: &[(usize, usize, bool)]) -> Result<()> {
    let mut text = String::new();
    for &(a, b, similar) in pairs {
        text.push_str(&format!("{a},{b},{}\n", u8::from(similar)));
    }
    write_atomic(path, text.as_bytes())
}

pub fn read_pairs(path: &Path) -> Result<Vec<(usize, usize, bool)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                format!("line {}: expected i,j,similar", line_no + 1),
            ));
        }
        let a: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, format!("line {}: bad index", line_no + 1)))?;
        let b: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, format!("line {}: bad index", line_no + 1)))?;
        let similar = match fields[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    path,
                    format!("line {}: similar flag must be 0 or 1, got {other:?}", line_no + 1),
                ))
            }
        };
        pairs.push((a, b, similar));
    }
    Ok(pairs)
}

/// Writes `epoch,mean_loss` lines with a header.
pub fn write_loss_history(path: &Path, history: &[f64]) -> Result<()> {
    let mut text = String::from("epoch,mean_loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        text.push_str(&format!("{},{}\n", epoch + 1, loss));
    }
    write_atomic(path, text.as_bytes())
}
