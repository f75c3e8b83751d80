//! Text formats.
//!
//! Edge lists hold one `i j [weight]` arc per line with 1-indexed nodes;
//! blank lines and `#` comments are ignored. A `# nodes: N` comment pins the
//! node count (otherwise the largest label is used) and `# undirected` marks
//! the arcs as symmetric. Matrices are dense CSV, one row per line. Per-node
//! vectors accept one value per line or a single comma-separated line.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};

use crate::dynamics::csv_err;
use crate::error::{Error, Result};
use crate::netgen::InfluenceGraph;

pub fn write_edge_list<W: Write>(g: &InfluenceGraph, mut out: W) -> Result<()> {
    writeln!(out, "# nodes: {}", g.n())?;
    if !g.is_directed() {
        writeln!(out, "# undirected")?;
    }
    for (i, j, w) in g.arcs() {
        if !g.is_directed() && i > j {
            continue;
        }
        if w == 1.0 {
            writeln!(out, "{} {}", i + 1, j + 1)?;
        } else {
            writeln!(out, "{} {} {}", i + 1, j + 1, w)?;
        }
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<InfluenceGraph> {
    let mut declared_n = None;
    let mut undirected = false;
    let mut arcs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(n) = comment.strip_prefix("nodes:") {
                declared_n = Some(n.trim().parse::<usize>().map_err(|e| {
                    Error::Parse(format!("line {}: bad node count: {e}", lineno + 1))
                })?);
            } else if comment == "undirected" {
                undirected = true;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::Parse(format!(
                "line {}: expected `i j [weight]`, got `{line}`",
                lineno + 1
            )));
        }
        let label = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad node `{s}`: {e}", lineno + 1)))?;
            if v == 0 {
                return Err(Error::Parse(format!("line {}: nodes are 1-indexed", lineno + 1)));
            }
            Ok(v - 1)
        };
        let weight = match fields.get(2) {
            Some(w) => w
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: bad weight `{w}`: {e}", lineno + 1)))?,
            None => 1.0,
        };
        arcs.push((label(fields[0])?, label(fields[1])?, weight));
    }
    let max_label = arcs.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let n = declared_n.unwrap_or(max_label);
    let mut g = InfluenceGraph::new(n, !undirected)?;
    for (i, j, w) in arcs {
        g.add_edge(i, j, w)?;
    }
    Ok(g)
}

pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.row_iter() {
        wtr.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: std::io::Read>(input: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("bad entry `{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(k) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("row {} has {} entries, expected {ncols}", k + 1, rows[k].len())));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

pub fn read_vector<R: BufRead>(input: R) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for line in input.lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        for field in line.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            values.push(
                field
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad value `{field}`: {e}")))?,
            );
        }
    }
    Ok(DVector::from_vec(values))
}
