//! Coordinate-format file I/O building distributed matrices at either
//! index width.
//!
//! Two formats are accepted: Matrix Market coordinate files whose header is
//! exactly `%%MatrixMarket matrix coordinate real general` (with optional
//! `%` comment lines before the size line), and raw whitespace-separated
//! `i j v` triples with no header. Indices in either format are 1-based.
//!
//! Rank 0 performs all file access; contents reach the other ranks through
//! broadcasts. The `gid_offset` parameter shifts every global index at map
//! construction time — it is never encoded in files, so the same file can
//! be read back at either width or offset.

use crate::block_map::{uniform_map_for_width, BlockMap};
use crate::comm::Comm;
use crate::crs_matrix::CrsMatrix;
use crate::distribution::{CommPlan, PlanDirection};
use crate::error::{Error, Result};
use crate::index::IndexWidth;
use crate::row_matrix::RowMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const MM_HEADER: [&str; 5] = ["%%MatrixMarket", "matrix", "coordinate", "real", "general"];

/// Result of a counting pass over a coordinate file.
#[derive(Debug, Clone)]
pub struct CoordinateCounts {
    pub rows: i64,
    pub cols: i64,
    pub nnz: i64,
    pub nonzeros_per_row: Vec<i64>,
}

#[derive(Debug)]
struct ParsedCoordinate {
    rows: i64,
    cols: i64,
    /// 1-based (row, col, value) triples in file order.
    entries: Vec<(i64, i64, f64)>,
}

fn parse_int(token: &str, line: usize) -> Result<i64> {
    token.parse::<i64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer, found {token:?}"),
    })
}

fn parse_value(token: &str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected a real value, found {token:?}"),
    })
}

fn parse_entry_line(text: &str, line: usize) -> Result<(i64, i64, f64)> {
    let mut it = text.split_whitespace();
    let (i, j, v) = match (it.next(), it.next(), it.next()) {
        (Some(i), Some(j), Some(v)) => (i, j, v),
        _ => {
            return Err(Error::Parse {
                line,
                message: "expected \"row col value\"".into(),
            })
        }
    };
    if it.next().is_some() {
        return Err(Error::Parse {
            line,
            message: "trailing tokens after \"row col value\"".into(),
        });
    }
    Ok((parse_int(i, line)?, parse_int(j, line)?, parse_value(v, line)?))
}

/// Parses either accepted format. Rank-local.
fn parse_coordinate_file(path: &Path) -> Result<ParsedCoordinate> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let (first_no, first) = match lines.next() {
        Some((n, l)) => (n + 1, l?),
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    };

    if first.starts_with("%%") {
        // Matrix Market: validate the header token for token.
        let tokens: Vec<&str> = first.split_whitespace().collect();
        if tokens != MM_HEADER {
            return Err(Error::Parse {
                line: first_no,
                message: format!(
                    "header must be \"{}\", found {first:?}",
                    MM_HEADER.join(" ")
                ),
            });
        }
        // Comments, then the size line.
        let (size_no, size_line) = loop {
            match lines.next() {
                Some((n, l)) => {
                    let l = l?;
                    if l.starts_with('%') || l.trim().is_empty() {
                        continue;
                    }
                    break (n + 1, l);
                }
                None => {
                    return Err(Error::Parse {
                        line: first_no + 1,
                        message: "missing size line".into(),
                    })
                }
            }
        };
        let tokens: Vec<&str> = size_line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line: size_no,
                message: "size line must be \"rows cols nnz\"".into(),
            });
        }
        let rows = parse_int(tokens[0], size_no)?;
        let cols = parse_int(tokens[1], size_no)?;
        let nnz = parse_int(tokens[2], size_no)?;
        if rows < 0 || cols < 0 || nnz < 0 {
            return Err(Error::Parse {
                line: size_no,
                message: "size line entries must be nonnegative".into(),
            });
        }

        let mut entries = Vec::with_capacity(nnz as usize);
        let mut last_no = size_no;
        for (n, l) in lines {
            let line_no = n + 1;
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            if entries.len() == nnz as usize {
                return Err(Error::Parse {
                    line: line_no,
                    message: "more data lines than the stated entry count".into(),
                });
            }
            let (i, j, v) = parse_entry_line(&l, line_no)?;
            if i < 1 || i > rows || j < 1 || j > cols {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("index ({i}, {j}) outside {rows} x {cols}"),
                });
            }
            entries.push((i, j, v));
            last_no = line_no;
        }
        if entries.len() != nnz as usize {
            return Err(Error::Parse {
                line: last_no,
                message: format!("expected {nnz} data lines, found {}", entries.len()),
            });
        }
        Ok(ParsedCoordinate { rows, cols, entries })
    } else {
        // Raw triples: dimensions are inferred.
        let mut entries = Vec::new();
        let mut rows = 0i64;
        let mut cols = 0i64;
        for (n, l) in std::iter::once((first_no - 1, Ok(first))).chain(lines) {
            let line_no = n + 1;
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let (i, j, v) = parse_entry_line(&l, line_no)?;
            if i < 1 || j < 1 {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("triple indices are 1-based, found ({i}, {j})"),
                });
            }
            rows = rows.max(i);
            cols = cols.max(j);
            entries.push((i, j, v));
        }
        Ok(ParsedCoordinate { rows, cols, entries })
    }
}

/// Broadcast-backed parse: rank 0 reads, every rank gets the result or an
/// agreed failure.
fn parse_on_root(path: &Path, comm: &Comm) -> Result<ParsedCoordinate> {
    let parsed = if comm.rank() == 0 {
        Some(parse_coordinate_file(path))
    } else {
        None
    };
    let header = match &parsed {
        Some(Ok(p)) => [1, p.rows, p.cols, p.entries.len() as i64],
        Some(Err(_)) => [0, 0, 0, 0],
        None => [0; 4],
    };
    let header = comm.broadcast(&header, 0)?;
    if header[0] == 0 {
        return Err(match parsed {
            Some(Err(e)) => e,
            _ => Error::Contract("the reading rank failed to parse the file".into()),
        });
    }
    let (rows, cols, nnz) = (header[1], header[2], header[3]);
    let (mut is, mut js, mut vs) = match parsed {
        Some(Ok(p)) => {
            let is = p.entries.iter().map(|e| e.0).collect();
            let js = p.entries.iter().map(|e| e.1).collect();
            let vs = p.entries.iter().map(|e| e.2).collect();
            (is, js, vs)
        }
        _ => (
            vec![0i64; nnz as usize],
            vec![0i64; nnz as usize],
            vec![0f64; nnz as usize],
        ),
    };
    is = comm.broadcast(&is, 0)?;
    js = comm.broadcast(&js, 0)?;
    vs = comm.broadcast(&vs, 0)?;
    Ok(ParsedCoordinate {
        rows,
        cols,
        entries: is
            .into_iter()
            .zip(js)
            .zip(vs)
            .map(|((i, j), v)| (i, j, v))
            .collect(),
    })
}

/// Counting pass: dimensions, entry count and per-row entry counts.
/// Collective; rank 0 reads the file.
pub fn count_entries(path: &Path, comm: &Comm) -> Result<CoordinateCounts> {
    let parsed = parse_on_root(path, comm)?;
    let mut per_row = vec![0i64; parsed.rows as usize];
    for &(i, _, _) in &parsed.entries {
        per_row[(i - 1) as usize] += 1;
    }
    Ok(CoordinateCounts {
        rows: parsed.rows,
        cols: parsed.cols,
        nnz: parsed.entries.len() as i64,
        nonzeros_per_row: per_row,
    })
}

/// Reads a coordinate file into a fill-completed matrix over a uniform row
/// map `[gid_offset, gid_offset + rows)` at the requested width. Collective.
pub fn read_coordinate_file(
    path: &Path,
    comm: &Comm,
    width: IndexWidth,
    gid_offset: i64,
) -> Result<(BlockMap, CrsMatrix)> {
    let parsed = parse_on_root(path, comm)?;
    if width == IndexWidth::I32 {
        let extent = gid_offset + parsed.rows.max(parsed.cols) - 1;
        if i32::try_from(gid_offset).is_err() || i32::try_from(extent).is_err() {
            return Err(Error::WidthRange { value: extent });
        }
    }
    let map = uniform_map_for_width(width, parsed.rows, gid_offset, comm)?;
    let mut matrix = CrsMatrix::new(&map)?;
    for &(i, j, v) in &parsed.entries {
        let row = gid_offset + i - 1;
        if map.lid_internal(row) >= 0 {
            matrix.insert_internal(row, &[gid_offset + j - 1], &[v])?;
        }
    }
    matrix.fill_complete(&map, &map)?;
    Ok((map, matrix))
}

/// Writes a fill-completed matrix as a Matrix Market coordinate file,
/// 1-based, ordered by (row, column). The map's index base (the read-time
/// offset) is subtracted out, so files are interchangeable between widths
/// and offsets. Collective; rank 0 writes.
pub fn write_coordinate_file(matrix: &CrsMatrix, path: &Path) -> Result<()> {
    if !matrix.filled() {
        return Err(Error::Lifecycle(
            "writing requires a fill-completed matrix".into(),
        ));
    }
    let comm = matrix.row_map().comm().clone();
    let row_base = matrix.row_map().index_base64();
    let col_base = matrix
        .domain_map()
        .expect("filled matrix has a domain map")
        .index_base64();

    // Ship every local entry to rank 0 as (row, col, value).
    let rows = matrix.row_map().num_my_elements();
    let mut max_len = 0usize;
    for lid in 0..rows {
        max_len = max_len.max(matrix.graph().row_len(lid));
    }
    let mut cols = vec![0i64; max_len];
    let mut vals = vec![0f64; max_len];
    let mut payload = Vec::new();
    let mut count = 0usize;
    for lid in 0..rows {
        let row_gid = matrix.row_map().gid64(lid);
        let n = matrix.extract_global_row_values(row_gid, &mut cols, &mut vals)?;
        for k in 0..n {
            payload.extend_from_slice(&(row_gid - row_base + 1).to_le_bytes());
            payload.extend_from_slice(&(cols[k] - col_base + 1).to_le_bytes());
            payload.extend_from_slice(&vals[k].to_le_bytes());
            count += 1;
        }
    }
    let (plan, _) = CommPlan::create_from_sends(&comm, &vec![0i32; count], true)?;
    let received = plan.execute(PlanDirection::Forward, 24, &payload)?;

    let mut status = 1i64;
    let mut outcome: Result<()> = Ok(());
    if comm.rank() == 0 {
        let mut triples: Vec<(i64, i64, f64)> = received
            .chunks_exact(24)
            .map(|c| {
                (
                    i64::from_le_bytes(c[0..8].try_into().expect("row field")),
                    i64::from_le_bytes(c[8..16].try_into().expect("col field")),
                    f64::from_le_bytes(c[16..24].try_into().expect("value field")),
                )
            })
            .collect();
        triples.sort_by_key(|&(i, j, _)| (i, j));
        outcome = write_triples(matrix, path, &triples);
        if outcome.is_err() {
            status = 0;
        }
    }
    let verdict = comm.broadcast(&[status], 0)?;
    if verdict[0] == 0 && comm.rank() != 0 {
        return Err(Error::Contract("the writing rank failed".into()));
    }
    outcome
}

fn write_triples(matrix: &CrsMatrix, path: &Path, triples: &[(i64, i64, f64)]) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{}", MM_HEADER.join(" "))?;
    writeln!(
        out,
        "{} {} {}",
        matrix.num_global_rows64()?,
        matrix.num_global_cols64()?,
        matrix.num_global_nonzeros64()?
    )?;
    for &(i, j, v) in triples {
        writeln!(out, "{i} {j} {v}")?;
    }
    out.flush()?;
    Ok(())
}
