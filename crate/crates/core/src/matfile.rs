//! Plain-text sidecar format for complex matrices.
//!
//! ```text
//! # comments start with '#'
//! dim 4
//! blocks 2
//! 1.0 0.0
//! 0.25 -0.5
//! ...
//! ```
//!
//! After the header come `blocks · dim · dim` lines holding one complex
//! entry each as `re im`, row-major within a block, blocks in order.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use crate::error::{Result, TdmError};
use crate::linalg::CMatrix;

fn header_value<'a>(
    tokens: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<usize> {
    let (line, text) = tokens
        .next()
        .ok_or_else(|| TdmError::MatrixFormat(format!("missing '{key}' header")))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse().map_err(|_| {
            TdmError::MatrixFormat(format!("line {line}: '{key}' expects an integer, got '{v}'"))
        }),
        _ => Err(TdmError::MatrixFormat(format!(
            "line {line}: expected '{key} <n>', got '{text}'"
        ))),
    }
}

/// Reads all blocks from a sidecar stream.
pub fn read_blocks<R: Read>(reader: R) -> Result<Vec<CMatrix>> {
    let lines: Vec<(usize, String)> = BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)))
        .collect::<std::io::Result<_>>()?;
    let mut content = lines
        .iter()
        .map(|(i, l)| (*i, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let dim = header_value(&mut content, "dim")?;
    let blocks = header_value(&mut content, "blocks")?;
    if dim == 0 || blocks == 0 {
        return Err(TdmError::MatrixFormat("dim and blocks must be positive".into()));
    }
    let mut out = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let mut m = CMatrix::zeros(dim, dim);
        for idx in 0..dim * dim {
            let (line, text) = content.next().ok_or_else(|| {
                TdmError::MatrixFormat(format!(
                    "expected {} entries, file ends in block {} at entry {idx}",
                    blocks * dim * dim,
                    b + 1
                ))
            })?;
            let mut parts = text.split_whitespace();
            let (re, im) = match (parts.next(), parts.next(), parts.next()) {
                (Some(re), Some(im), None) => (re.parse::<f64>(), im.parse::<f64>()),
                _ => {
                    return Err(TdmError::MatrixFormat(format!(
                        "line {line}: expected 're im', got '{text}'"
                    )))
                }
            };
            match (re, im) {
                (Ok(re), Ok(im)) if re.is_finite() && im.is_finite() => {
                    m[(idx / dim, idx % dim)] = Complex64::new(re, im);
                }
                _ => {
                    return Err(TdmError::MatrixFormat(format!(
                        "line {line}: '{text}' is not a finite complex pair"
                    )))
                }
            }
        }
        out.push(m);
    }
    if let Some((line, _)) = content.next() {
        return Err(TdmError::MatrixFormat(format!("line {line}: trailing data after last block")));
    }
    Ok(out)
}

/// Writes blocks of equal dimension in the sidecar format.
pub fn write_blocks<W: Write>(mut writer: W, blocks: &[CMatrix]) -> Result<()> {
    let dim = blocks.first().map_or(0, |b| b.nrows());
    if blocks.iter().any(|b| b.nrows() != dim || b.ncols() != dim) {
        return Err(TdmError::InvalidArgument("blocks must be square and equal-sized".into()));
    }
    let mut text = format!("dim {dim}\nblocks {}\n", blocks.len());
    for b in blocks {
        for i in 0..dim {
            for j in 0..dim {
                let z = b[(i, j)];
                writeln!(text, "{:e} {:e}", z.re, z.im).expect("write to String");
            }
        }
    }
    writer.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut a = CMatrix::identity(2, 2);
        a[(0, 1)] = Complex64::new(0.5, -0.25);
        a[(1, 0)] = Complex64::new(0.5, 0.25);
        let b = CMatrix::identity(2, 2) * Complex64::new(3.0, 0.0);
        let mut buf = Vec::new();
        write_blocks(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_blocks(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# sidecar\n\ndim 1\nblocks 1\n# entry\n2.0 0.0\n";
        let m = read_blocks(text.as_bytes()).unwrap();
        assert_eq!(m[0][(0, 0)], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn short_file_is_an_error() {
        let err = read_blocks("dim 2\nblocks 1\n1 0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("expected 4 entries"), "{err}");
    }

    #[test]
    fn bad_pair_reports_line() {
        let err = read_blocks("dim 1\nblocks 1\n1.0 x\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn missing_header() {
        assert!(read_blocks("blocks 1\n".as_bytes()).is_err());
    }
}
