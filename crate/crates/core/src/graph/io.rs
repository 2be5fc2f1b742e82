//! Plain-text edge-list and label files.
//!
//! Graph: header `n d edge_count`, then one `u v` line per edge with
//! `u < v`, sorted lexicographically, 0-indexed. Partition: one label per
//! line, vertex order.

use std::io::{BufRead, Write};

use super::{Graph, Partition};
use crate::error::{Error, Result};

pub fn write_graph<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "{} {} {}", graph.n(), graph.d(), graph.edge_count())?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_fields<const N: usize>(line: &str, lineno: usize) -> Result<[usize; N]> {
    let mut fields = [0usize; N];
    let mut parts = line.split_whitespace();
    for f in fields.iter_mut() {
        *f = parts
            .next()
            .ok_or_else(|| Error::Format(format!("line {lineno}: expected {N} fields")))?
            .parse()
            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
    }
    if parts.next().is_some() {
        return Err(Error::Format(format!("line {lineno}: trailing fields")));
    }
    Ok(fields)
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Graph> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(l) => !l.trim().is_empty(),
        Err(_) => true,
    });
    let (_, header) = lines.next().ok_or_else(|| Error::Format("empty graph file".into()))?;
    let [n, d, edge_count] = parse_fields::<3>(&header?, 1)?;
    let mut edges = Vec::with_capacity(edge_count);
    let mut prev: Option<(usize, usize)> = None;
    for (i, line) in lines {
        let [u, v] = parse_fields::<2>(&line?, i + 1)?;
        if u >= v {
            return Err(Error::Format(format!("line {}: expected u < v", i + 1)));
        }
        if prev.is_some_and(|p| p >= (u, v)) {
            return Err(Error::Format(format!("line {}: edges not sorted", i + 1)));
        }
        prev = Some((u, v));
        edges.push((u, v));
    }
    if edges.len() != edge_count {
        return Err(Error::Format(format!(
            "header declares {edge_count} edges, found {}",
            edges.len()
        )));
    }
    Graph::from_edges(n, edges, Some(d))
}

pub fn write_partition<W: Write>(partition: &Partition, mut out: W) -> Result<()> {
    for &l in partition.labels() {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads labels; `k` defaults to one more than the largest label.
pub fn read_partition<R: BufRead>(input: R, k: Option<usize>) -> Result<Partition> {
    let mut labels = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let [l] = parse_fields::<1>(line, i + 1)?;
        labels.push(l);
    }
    let k = k.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Partition::new(k, labels)
}
