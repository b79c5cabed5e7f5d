use std::fs;
use std::path::Path;

use super::SparseSymmetricMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Storage {
    Symmetric,
    General,
}

/// Read a Matrix Market `coordinate real` file (`symmetric` or `general`).
///
/// Symmetric storage is mirrored; general storage must already be symmetric
/// to `1e-12` relative. Indices in the file are 1-based.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSymmetricMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let fmt_err = |line: usize, message: String| Error::Format { path: path.to_path_buf(), line, message };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines.next().ok_or_else(|| fmt_err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(fmt_err(hline, format!("bad header {header:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("{} storage", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(Error::UnsupportedFormat(format!("{other} field"))),
    }
    let storage = match tokens[4].as_str() {
        "symmetric" => Storage::Symmetric,
        "general" => Storage::General,
        other => return Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(fmt_err(lno, "size line needs `rows cols nnz`".into()));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|e| fmt_err(lno, format!("{s:?}: {e}")));
                let (rows, cols, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if rows != cols {
                    return Err(fmt_err(lno, format!("matrix is {rows}x{cols}, not square")));
                }
                size = Some((rows, nnz));
                triplets.reserve(nnz * if storage == Storage::Symmetric { 2 } else { 1 });
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(fmt_err(lno, format!("expected `row col value`, got {line:?}")));
                }
                let idx = |s: &str| -> Result<usize> {
                    let k = s.parse::<usize>().map_err(|e| fmt_err(lno, format!("{s:?}: {e}")))?;
                    if k == 0 || k > n {
                        return Err(fmt_err(lno, format!("index {k} outside 1..={n}")));
                    }
                    Ok(k - 1)
                };
                let (i, j) = (idx(fields[0])?, idx(fields[1])?);
                let v = fields[2].parse::<f64>().map_err(|e| fmt_err(lno, format!("{:?}: {e}", fields[2])))?;
                triplets.push((i, j, v));
                if storage == Storage::Symmetric && i != j {
                    triplets.push((j, i, v));
                }
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| fmt_err(hline, "missing size line".into()))?;
    let stored = match storage {
        Storage::Symmetric => triplets.iter().filter(|t| t.0 >= t.1).count(),
        Storage::General => triplets.len(),
    };
    if stored != nnz {
        return Err(fmt_err(hline, format!("header announces {nnz} entries, found {stored}")));
    }
    SparseSymmetricMatrix::from_triplets(n, triplets)
}
