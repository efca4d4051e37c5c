//! Edge lists, node attribute tables and partially observed graphs on disk.
//!
//! Edge list: header `source,target`, one undirected edge per row, arbitrary
//! string labels, duplicates (in either direction) collapse to one edge.
//!
//! Attribute table: header `node,<col>,...`, one row per node. When present
//! it fixes the vertex order and may add isolates. Without it vertices are
//! numbered by first appearance in the edge list.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use netmiss_core::graph::{DyadState, MissMask, PartialGraph};
use netmiss_core::{Graph, NodeData};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] netmiss_core::Error),
}

impl DataError {
    fn parse(path: &Path, line: u64, message: impl Into<String>) -> Self {
        DataError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    fn schema(path: &Path, message: impl Into<String>) -> Self {
        DataError::Schema { path: path.to_path_buf(), message: message.into() }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Declared attribute column types. Undeclared tables are typed by content:
/// a column is numeric when every cell parses as a finite number.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AttrSchema {
    pub numeric: Vec<String>,
    pub categorical: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub graph: Graph,
    pub data: NodeData,
    /// External label of every vertex index.
    pub labels: Vec<String>,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| DataError::io(path, e))
}

fn record_line(r: &csv::StringRecord) -> u64 {
    r.position().map_or(0, |p| p.line())
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            DataError::parse(path, line, format!("expected {expected_len} fields, found {len}"))
        }
        _ => DataError::parse(path, line, e.to_string()),
    }
}

/// Raw edge rows as label pairs, in file order.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() != 2 || &header[0] != "source" || &header[1] != "target" {
        return Err(DataError::parse(path, 1, "header must be `source,target`"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let (a, b) = (&rec[0], &rec[1]);
        if a.is_empty() || b.is_empty() {
            return Err(DataError::parse(path, line, "empty node label"));
        }
        if a == b {
            return Err(DataError::parse(path, line, format!("self-loop on `{a}`")));
        }
        rows.push((a.to_string(), b.to_string()));
    }
    Ok(rows)
}

struct AttrTable {
    columns: Vec<String>,
    rows: Vec<(u64, String, Vec<String>)>,
}

fn parse_attr_table(text: &str, path: &Path) -> Result<AttrTable> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() || &header[0] != "node" {
        return Err(DataError::parse(path, 1, "header must start with `node`"));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let cells: Vec<String> = rec.iter().skip(1).map(str::to_string).collect();
        if let Some(k) = cells.iter().position(String::is_empty) {
            return Err(DataError::parse(path, line, format!("empty value in column `{}`", columns[k])));
        }
        rows.push((line, rec[0].to_string(), cells));
    }
    Ok(AttrTable { columns, rows })
}

/// Builds a network from edge-list text and optional attribute text.
pub fn network_from_text(
    edges: &str,
    edge_path: &Path,
    attrs: Option<(&str, &Path)>,
    schema: Option<&AttrSchema>,
) -> Result<Network> {
    let rows = parse_edge_list(edges, edge_path)?;
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let table = match attrs {
        Some((text, path)) => Some((parse_attr_table(text, path)?, path)),
        None => None,
    };
    if let Some((t, path)) = &table {
        for (line, label, _) in &t.rows {
            if index.insert(label.clone(), labels.len()).is_some() {
                return Err(DataError::parse(path, *line, format!("duplicate node `{label}`")));
            }
            labels.push(label.clone());
        }
        for (a, b) in &rows {
            for l in [a, b] {
                if !index.contains_key(l) {
                    return Err(DataError::schema(path, format!("no attribute row for node `{l}`")));
                }
            }
        }
    } else {
        for (a, b) in &rows {
            for l in [a, b] {
                if !index.contains_key(l) {
                    index.insert(l.clone(), labels.len());
                    labels.push(l.clone());
                }
            }
        }
    }
    let n = labels.len();
    let graph = Graph::from_edges(n, rows.iter().map(|(a, b)| (index[a], index[b])))?;
    let mut data = NodeData::new(n);
    if let Some((t, path)) = table {
        fill_attributes(&mut data, &t, path, schema)?;
    }
    Ok(Network { graph, data, labels })
}

fn fill_attributes(data: &mut NodeData, t: &AttrTable, path: &Path, schema: Option<&AttrSchema>) -> Result<()> {
    if let Some(s) = schema {
        for name in s.numeric.iter().chain(&s.categorical) {
            if !t.columns.contains(name) {
                return Err(DataError::schema(path, format!("declared column `{name}` not found")));
            }
        }
        if let Some(c) = t.columns.iter().find(|c| !s.numeric.contains(c) && !s.categorical.contains(c)) {
            return Err(DataError::schema(path, format!("column `{c}` not declared numeric or categorical")));
        }
    }
    for (k, name) in t.columns.iter().enumerate() {
        let cells: Vec<(u64, &str)> = t.rows.iter().map(|(line, _, cells)| (*line, cells[k].as_str())).collect();
        let numeric = match schema {
            Some(s) => s.numeric.contains(name),
            None => cells.iter().all(|(_, v)| v.parse::<f64>().is_ok_and(f64::is_finite)),
        };
        if numeric {
            let mut values = Vec::with_capacity(cells.len());
            for (line, v) in cells {
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => values.push(x),
                    _ => {
                        return Err(DataError::parse(
                            path,
                            line,
                            format!("column `{name}`: `{v}` is not a finite number"),
                        ))
                    }
                }
            }
            data.add_numeric(name.clone(), values)?;
        } else {
            data.add_categorical(name.clone(), cells.iter().map(|(_, v)| v.to_string()).collect())?;
        }
    }
    Ok(())
}

/// Reads an edge list and optional attribute table.
pub fn load_network(edge_path: &Path, attr_path: Option<&Path>, schema: Option<&AttrSchema>) -> Result<Network> {
    let edges = read_text(edge_path)?;
    let attrs = match attr_path {
        Some(p) => Some((read_text(p)?, p)),
        None => None,
    };
    network_from_text(&edges, edge_path, attrs.as_ref().map(|(t, p)| (t.as_str(), *p)), schema)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    f.write_all(contents).map_err(|e| DataError::io(path, e))
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Writes the edge list and the attribute table (always, so isolates and
/// vertex order survive a reload).
pub fn save_network(net: &Network, edge_path: &Path, attr_path: &Path) -> Result<()> {
    let l = &net.labels;
    write_file(
        edge_path,
        &csv_bytes(&["source", "target"], net.graph.edges().map(|(i, j)| vec![l[i].clone(), l[j].clone()])),
    )?;
    let numeric: Vec<(&str, &[f64])> = net.data.numeric_columns().collect();
    let categorical: Vec<(&str, &[String])> = net.data.categorical_columns().collect();
    let mut header = vec!["node"];
    header.extend(numeric.iter().map(|c| c.0));
    header.extend(categorical.iter().map(|c| c.0));
    let rows = (0..net.graph.n()).map(|i| {
        let mut row = vec![l[i].clone()];
        row.extend(numeric.iter().map(|c| c.1[i].to_string()));
        row.extend(categorical.iter().map(|c| c.1[i].clone()));
        row
    });
    write_file(attr_path, &csv_bytes(&header, rows))
}

/// Sidecar mapping vertex indices to external labels.
pub fn write_label_map(path: &Path, labels: &[String]) -> Result<()> {
    write_file(
        path,
        &csv_bytes(&["index", "label"], labels.iter().enumerate().map(|(i, l)| vec![i.to_string(), l.clone()])),
    )
}

/// Writes present and missing dyads of `p` as `source,target,state` with
/// state `1` or `NA`; absent dyads are implicit.
pub fn write_partial(path: &Path, p: &PartialGraph, labels: &[String]) -> Result<()> {
    let mut rows = Vec::new();
    for (i, j) in netmiss_core::graph::dyads(p.n()) {
        let state = match p.state(i, j) {
            DyadState::Absent => continue,
            DyadState::Present => "1",
            DyadState::Missing => "NA",
        };
        rows.push(vec![labels[i].clone(), labels[j].clone(), state.to_string()]);
    }
    write_file(path, &csv_bytes(&["source", "target", "state"], rows))
}

/// Writes the missing dyads of `d` as `source,target`.
pub fn write_mask(path: &Path, d: &MissMask, labels: &[String]) -> Result<()> {
    let rows = netmiss_core::graph::dyads(d.n())
        .filter(|&(i, j)| d.is_missing(i, j))
        .map(|(i, j)| vec![labels[i].clone(), labels[j].clone()]);
    write_file(path, &csv_bytes(&["source", "target"], rows))
}

/// Reads a file written by [`write_partial`] over the vertex set `labels`.
pub fn read_partial(path: &Path, labels: &[String]) -> Result<PartialGraph> {
    let text = read_text(path)?;
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut rdr = csv_reader(&text);
    let mut states = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        let node = |k: usize| {
            index
                .get(&rec[k])
                .copied()
                .ok_or_else(|| DataError::parse(path, line, format!("unknown node `{}`", &rec[k])))
        };
        let (i, j) = (node(0)?, node(1)?);
        let s = match &rec[2] {
            "1" => DyadState::Present,
            "NA" => DyadState::Missing,
            "0" => DyadState::Absent,
            other => return Err(DataError::parse(path, line, format!("state `{other}` is not 0, 1 or NA"))),
        };
        states.push(((i, j), s));
    }
    Ok(PartialGraph::from_states(labels.len(), states)?)
}

pub(crate) fn write_bytes(path: &Path, contents: &[u8]) -> Result<()> {
    write_file(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn dedup_and_undirected() {
        let net = network_from_text("source,target\na,b\nb,a\nb,c\n", p(), None, None).unwrap();
        assert_eq!(net.graph.n(), 3);
        assert_eq!(net.graph.edge_count(), 2);
        assert_eq!(net.labels, ["a", "b", "c"]);
    }

    #[test]
    fn self_loop_line() {
        let err = network_from_text("source,target\na,b\na,a\n", p(), None, None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn ragged_row_line() {
        let err = network_from_text("source,target\na,b\nb,c,d\n", p(), None, None).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn attribute_rows_fix_order_and_add_isolates() {
        let attrs = "node,age,town\nc,30,x\nb,41,y\na,22,x\nd,50,z\n";
        let net = network_from_text("source,target\na,b\nb,c\n", p(), Some((attrs, p())), None).unwrap();
        assert_eq!(net.labels, ["c", "b", "a", "d"]);
        assert_eq!(net.data.numeric("age").unwrap(), [30.0, 41.0, 22.0, 50.0]);
        assert_eq!(net.data.categorical("town").unwrap()[3], "z");
        assert_eq!(net.graph.degree(3), 0);
    }

    #[test]
    fn missing_attribute_row_names_node() {
        let attrs = "node,age\na,1\nb,2\n";
        let err = network_from_text("source,target\na,b\nb,c\n", p(), Some((attrs, p())), None).unwrap_err();
        assert!(err.to_string().contains("`c`"), "{err}");
    }

    #[test]
    fn schema_enforced() {
        let attrs = "node,age\na,old\nb,2\n";
        let schema = AttrSchema { numeric: vec!["age".into()], categorical: vec![] };
        let err = network_from_text("source,target\na,b\n", p(), Some((attrs, p())), Some(&schema)).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 2, .. }), "{err}");
    }
}
