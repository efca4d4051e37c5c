use netmiss::io::{load_network, read_partial, save_network, write_mask, write_partial, AttrSchema, DataError};
use netmiss::output::{fmt_f64, provenance, records_csv, records_header};
use netmiss_core::graph::{apply_mask, dyads};
use netmiss_core::missmodels::{gen_independent, MissModel};
use std::fs;

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn save_and_reload_keeps_graph_labels_and_attributes() {
    let dir = tempfile::tempdir().unwrap();
    let edges = write(dir.path(), "e.csv", "source,target\nann,bob\nbob,cy\ncy,ann\ndee,bob\n");
    let attrs =
        write(dir.path(), "a.csv", "node,age,team\nann,31,red\nbob,40,blue\ncy,22,red\ndee,35,blue\neve,50,red\n");
    let schema = AttrSchema { numeric: vec!["age".into()], categorical: vec!["team".into()] };
    let net = load_network(&edges, Some(&attrs), Some(&schema)).unwrap();
    assert_eq!(net.graph.n(), 5);
    assert_eq!(net.graph.edge_count(), 4);
    let (e2, a2) = (dir.path().join("out/e.csv"), dir.path().join("out/a.csv"));
    save_network(&net, &e2, &a2).unwrap();
    let again = load_network(&e2, Some(&a2), Some(&schema)).unwrap();
    assert_eq!(again, net);
    // without a schema the columns are typed by content
    assert_eq!(load_network(&e2, Some(&a2), None).unwrap(), net);
}

#[test]
fn malformed_inputs_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad_row = write(dir.path(), "e.csv", "source,target\na,b,c\n");
    assert!(matches!(load_network(&bad_row, None, None), Err(DataError::Parse { .. })));
    let loop_row = write(dir.path(), "l.csv", "source,target\na,a\n");
    assert!(load_network(&loop_row, None, None).is_err());
    let edges = write(dir.path(), "ok.csv", "source,target\na,b\n");
    let attrs = write(dir.path(), "a.csv", "node,age\na,1\n");
    assert!(load_network(&edges, Some(&attrs), None).is_err(), "vertex b has no attribute row");
    let missing = dir.path().join("nope.csv");
    assert!(matches!(load_network(&missing, None, None), Err(DataError::Io { .. })));
}

#[test]
fn partial_network_round_trip() {
    let n = 12;
    let x = netmiss_core::fixtures::clustered(n, 3).unwrap();
    let d = gen_independent(&MissModel::HomBernoulli { p: 0.3 }, n, 1, Some(0.3), None).unwrap();
    let p = apply_mask(&x, &d).unwrap();
    let labels: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("partial.csv");
    write_partial(&path, &p, &labels).unwrap();
    assert_eq!(read_partial(&path, &labels).unwrap(), p);
    let mask = dir.path().join("mask.csv");
    write_mask(&mask, &d, &labels).unwrap();
    let rows = fs::read_to_string(&mask).unwrap().lines().count() - 1;
    assert_eq!(rows, d.missing_count());
    assert_eq!(dyads(n).filter(|&(i, j)| d.is_missing(i, j)).count(), rows);
}

#[test]
fn empty_records_give_header_only() {
    let labels = vec!["edges".to_string(), "gwesp".to_string()];
    let text = records_csv(&[], &labels, None, "abc", 3);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), provenance("abc", 3).trim_end());
    assert_eq!(lines.next().unwrap(), records_header(&labels).join(","));
    assert!(lines.next().is_none());
}

#[test]
fn records_header_is_stable() {
    let h = records_header(&["edges".to_string()]);
    assert_eq!(
        h.join(","),
        "network,model,assumption,fraction,representation,replicate,seed,missing_count,input_missing,\
observed_edges,method,converged,failure,failure_code,iterations,min_ess,cov_condition,acceptance_rate,\
centralisation,theta:edges,se:edges,mcse:edges,rbias:edges,rse:edges,mvz:edges"
    );
    assert_eq!(fmt_f64(f64::NAN), "NA");
    assert_eq!(fmt_f64(0.25), "0.25");
}
