//! Matrix Market reader/writer (real `coordinate` and `array` formats) and a
//! plain one-value-per-line vector format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{MatrixHandle, Storage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::MatrixMarket {
        line,
        reason: reason.into(),
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry)> {
    let words: Vec<String> = line
        .split_whitespace()
        .map(|w| w.to_ascii_lowercase())
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'",
        ));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    match words[3].as_str() {
        "real" | "double" | "integer" => {}
        "pattern" => return Err(parse_err(1, "pattern matrices carry no values")),
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    Ok((layout, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what}")))
}

/// Read a Matrix Market file. Coordinate files produce CSR storage, array
/// files dense storage. Symmetric files are expanded to general form.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixHandle> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header = match lines.next() {
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
        None => return Err(parse_err(1, "empty file")),
    };
    let (layout, symmetry) = parse_header(&header)?;

    let mut data = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        data.push((n + 1, trimmed.to_string()));
    }
    let mut data = data.into_iter();
    let (size_line, size) = data
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))?;
    let mut tok = size.split_whitespace();
    let rows: usize = parse_num(tok.next(), size_line, "row count")?;
    let cols: usize = parse_num(tok.next(), size_line, "column count")?;
    if symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }

    match layout {
        Layout::Coordinate => {
            let declared: usize = parse_num(tok.next(), size_line, "entry count")?;
            let mut triplets = Vec::with_capacity(declared);
            let mut count = 0usize;
            for (n, line) in data {
                count += 1;
                if count > declared {
                    return Err(parse_err(
                        n,
                        format!("more entries than the declared {declared}"),
                    ));
                }
                let mut t = line.split_whitespace();
                let i: usize = parse_num(t.next(), n, "row index")?;
                let j: usize = parse_num(t.next(), n, "column index")?;
                let v: f64 = parse_num(t.next(), n, "value")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(
                        n,
                        format!("index ({i}, {j}) outside {rows}x{cols}"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => triplets.push((j - 1, i - 1, v)),
                        Symmetry::SkewSymmetric => triplets.push((j - 1, i - 1, -v)),
                    }
                }
            }
            if count < declared {
                return Err(parse_err(
                    size_line,
                    format!("declared {declared} entries, found {count}"),
                ));
            }
            MatrixHandle::from_triplets(rows, cols, triplets)
        }
        Layout::Array => {
            // Column-major; symmetric variants list the lower triangle only.
            let mut values = vec![0.0; rows * cols];
            let slots: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..cols)
                    .flat_map(|j| (0..rows).map(move |i| (i, j)))
                    .collect(),
                Symmetry::Symmetric => (0..cols)
                    .flat_map(|j| (j..rows).map(move |i| (i, j)))
                    .collect(),
                Symmetry::SkewSymmetric => (0..cols)
                    .flat_map(|j| (j + 1..rows).map(move |i| (i, j)))
                    .collect(),
            };
            let mut slot = slots.iter();
            let mut last_line = size_line;
            for (n, line) in data {
                last_line = n;
                for tokn in line.split_whitespace() {
                    let &(i, j) = slot
                        .next()
                        .ok_or_else(|| parse_err(n, "more values than the declared size"))?;
                    let v: f64 = parse_num(Some(tokn), n, "value")?;
                    values[i * cols + j] = v;
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => values[j * cols + i] = v,
                        Symmetry::SkewSymmetric => values[j * cols + i] = -v,
                    }
                }
            }
            if slot.next().is_some() {
                return Err(parse_err(last_line, "fewer values than the declared size"));
            }
            MatrixHandle::dense(rows, cols, values)
        }
    }
}

/// Write a matrix in Matrix Market form: dense storage as `array`, CSR
/// storage as `coordinate`. Values use the shortest round-trip representation.
pub fn write_matrix_market(a: &MatrixHandle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    match a.storage() {
        Storage::Dense { values } => {
            writeln!(w, "%%MatrixMarket matrix array real general").map_err(io)?;
            writeln!(w, "{} {}", a.rows(), a.cols()).map_err(io)?;
            for j in 0..a.cols() {
                for i in 0..a.rows() {
                    writeln!(w, "{:e}", values[i * a.cols() + j]).map_err(io)?;
                }
            }
        }
        Storage::Csr { rows, .. } => {
            writeln!(w, "%%MatrixMarket matrix coordinate real general").map_err(io)?;
            writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz()).map_err(io)?;
            for i in 0..a.rows() {
                for k in rows.offsets[i]..rows.offsets[i + 1] {
                    writeln!(w, "{} {} {:e}", i + 1, rows.indices[k] + 1, rows.values[k])
                        .map_err(io)?;
                }
            }
        }
    }
    w.flush().map_err(io)
}

/// Write a vector as one value per line.
pub fn write_vector(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for x in v {
        writeln!(w, "{x:e}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a vector written by [`write_vector`]. Blank lines and `%`/`#`
/// comments are skipped.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let v: f64 = parse_num(Some(t), n + 1, "vector value")?;
        if !v.is_finite() {
            return Err(parse_err(n + 1, "non-finite value"));
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn dense_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = MatrixHandle::dense(3, 2, vec![0.1, -2.5, 1e-300, 3.0, 7.123456789012345, 0.0])
            .unwrap();
        let p = dir.path().join("a.mtx");
        write_matrix_market(&a, &p).unwrap();
        let b = read_matrix_market(&p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sparse_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = MatrixHandle::from_triplets(3, 4, vec![(2, 3, 1.0 / 3.0), (0, 1, -2.0)]).unwrap();
        let p = dir.path().join("a.mtx");
        write_matrix_market(&a, &p).unwrap();
        assert_eq!(read_matrix_market(&p).unwrap(), a);
    }

    #[test]
    fn empty_coordinate_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "e.mtx",
            "%%MatrixMarket matrix coordinate real general\n% comment\n3 2 0\n",
        );
        let a = read_matrix_market(&p).unwrap();
        assert_eq!((a.rows(), a.cols(), a.nnz()), (3, 2, 0));
        assert_eq!(a.col_norms_sq(), &[0.0, 0.0]);
    }

    #[test]
    fn pattern_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "p.mtx",
            "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n",
        );
        assert!(matches!(
            read_matrix_market(&p),
            Err(Error::MatrixMarket { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_header_and_overflow() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "h.mtx",
            "%%MatrixMarket tensor coordinate real general\n1 1 0\n",
        );
        assert!(read_matrix_market(&p).is_err());
        let p = write(
            &dir,
            "o.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 2.0\n",
        );
        assert!(matches!(
            read_matrix_market(&p),
            Err(Error::MatrixMarket { line: 4, .. })
        ));
        let p = write(
            &dir,
            "u.mtx",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
        );
        assert!(read_matrix_market(&p).is_err());
    }

    #[test]
    fn symmetric_expands() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "s.mtx",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4.0\n2 1 1.5\n",
        );
        let a = read_matrix_market(&p).unwrap();
        assert_eq!(a.get(0, 1), 1.5);
        assert_eq!(a.get(1, 0), 1.5);
        let p = write(
            &dir,
            "sa.mtx",
            "%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n",
        );
        let a = read_matrix_market(&p).unwrap();
        assert_eq!(a.to_dense_values(), vec![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.txt");
        let v = vec![1.0, -0.1, 1e-17, 123456.789];
        write_vector(&v, &p).unwrap();
        assert_eq!(read_vector(&p).unwrap(), v);
    }
}
