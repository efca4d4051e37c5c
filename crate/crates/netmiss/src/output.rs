//! CSV tables and SVG plots. Every file starts with a provenance comment
//! line naming the configuration hash and the base seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use netmiss_core::estimate::{EstimationResult, FailureKind};
use netmiss_core::experiment::{relative_metrics, Band, FailureCount, RunRecord, SweepTable};

/// Shared first line of every output file.
pub fn provenance(hash: &str, seed: u64) -> String {
    format!("# netmiss config={hash} seed={seed}\n")
}

/// Shortest round-trip decimal; `NA` for NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "Inf".into()
        } else {
            "-Inf".into()
        }
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), fmt_f64)
}

fn failure_label(f: Option<FailureKind>) -> &'static str {
    f.map_or("", FailureKind::label)
}

fn failure_code(f: Option<FailureKind>) -> String {
    f.map_or(String::new(), |k| k.code().to_string())
}

fn csv_with_header(hash: &str, seed: u64, header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    provenance(hash, seed) + &body
}

const RECORD_COLUMNS: [&str; 19] = [
    "network",
    "model",
    "assumption",
    "fraction",
    "representation",
    "replicate",
    "seed",
    "missing_count",
    "input_missing",
    "observed_edges",
    "method",
    "converged",
    "failure",
    "failure_code",
    "iterations",
    "min_ess",
    "cov_condition",
    "acceptance_rate",
    "centralisation",
];

const PER_TERM: [&str; 6] = ["theta", "se", "mcse", "rbias", "rse", "mvz"];

pub fn records_header(labels: &[String]) -> Vec<String> {
    let mut h: Vec<String> = RECORD_COLUMNS.iter().map(|s| s.to_string()).collect();
    for prefix in PER_TERM {
        h.extend(labels.iter().map(|l| format!("{prefix}:{l}")));
    }
    h
}

/// One row per replicate; relative metrics are `NA` without a converged baseline.
pub fn records_csv(
    records: &[RunRecord],
    labels: &[String],
    baseline: Option<&EstimationResult>,
    hash: &str,
    seed: u64,
) -> String {
    let p = labels.len();
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let res = &r.result;
            let rel = baseline.and_then(|b| relative_metrics(res, b));
            let mut row = vec![
                r.network.clone(),
                r.model.clone(),
                r.assumption.label().to_string(),
                fmt_f64(r.fraction),
                r.representation.label().to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                r.missing_count.to_string(),
                r.input_missing.to_string(),
                r.observed_edges.to_string(),
                res.method.label().to_string(),
                res.converged.to_string(),
                failure_label(res.failure).to_string(),
                failure_code(res.failure),
                res.n_iterations.to_string(),
                fmt_f64(res.diagnostics.min_ess()),
                fmt_f64(res.diagnostics.cov_condition),
                fmt_f64(res.diagnostics.acceptance_rate),
                fmt_f64(r.centralisation),
            ];
            row.extend(res.theta_hat.iter().map(|x| fmt_f64(*x)));
            row.extend(res.se.iter().map(|x| fmt_f64(*x)));
            row.extend(res.mc_se.iter().map(|x| fmt_f64(*x)));
            match &rel {
                Some(m) => {
                    row.extend(m.rbias.iter().map(|x| fmt_opt(*x)));
                    row.extend(m.rse.iter().map(|x| fmt_opt(*x)));
                }
                None => row.extend((0..2 * p).map(|_| "NA".to_string())),
            }
            row.extend(r.mean_value_zero.iter().map(|x| fmt_f64(*x)));
            row
        })
        .collect();
    csv_with_header(hash, seed, &records_header(labels), &rows)
}

/// Failure counts by model, fraction and representation, with the share of
/// each failure mode.
pub fn failure_csv(records: &[RunRecord], hash: &str, seed: u64) -> String {
    let header: Vec<String> =
        ["model", "assumption", "fraction", "representation", "total", "failures", "rate", "a", "b", "c", "non_finite"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    type Key = (String, String, u64, &'static str);
    let mut groups: BTreeMap<(usize, Key), (FailureCount, [usize; 4])> = BTreeMap::new();
    let mut first_seen: BTreeMap<Key, usize> = BTreeMap::new();
    for r in records {
        let key: Key =
            (r.model.clone(), r.assumption.label().to_string(), r.fraction.to_bits(), r.representation.label());
        let next = first_seen.len();
        let order = *first_seen.entry(key.clone()).or_insert(next);
        let (count, modes) = groups.entry((order, key)).or_default();
        count.total += 1;
        if let Some(k) = r.result.failure {
            count.failures += 1;
            modes[match k {
                FailureKind::EssNotReached => 0,
                FailureKind::ExcessiveCorrelation => 1,
                FailureKind::NonPositiveDefiniteInfo => 2,
                FailureKind::NonFiniteMle => 3,
            }] += 1;
        }
    }
    let rows: Vec<Vec<String>> = groups
        .into_iter()
        .map(|((_, (model, assumption, fraction, rep)), (count, modes))| {
            let mut row = vec![
                model,
                assumption,
                fmt_f64(f64::from_bits(fraction)),
                rep.to_string(),
                count.total.to_string(),
                count.failures.to_string(),
                fmt_f64(count.rate()),
            ];
            row.extend(modes.iter().map(|m| m.to_string()));
            row
        })
        .collect();
    csv_with_header(hash, seed, &header, &rows)
}

/// Complete-data fit, one row per term.
pub fn baseline_csv(fit: &EstimationResult, hash: &str, seed: u64) -> String {
    let header: Vec<String> =
        ["term", "theta", "se", "mcse", "converged", "failure"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = (0..fit.labels.len())
        .map(|k| {
            vec![
                fit.labels[k].clone(),
                fmt_f64(fit.theta_hat[k]),
                fmt_f64(fit.se[k]),
                fmt_f64(fit.mc_se[k]),
                fit.converged.to_string(),
                failure_label(fit.failure).to_string(),
            ]
        })
        .collect();
    csv_with_header(hash, seed, &header, &rows)
}

/// Long format: one row per level and summarised quantity.
pub fn sweep_csv(table: &SweepTable, hash: &str, seed: u64) -> String {
    let header: Vec<String> =
        ["param", "level", "assumption", "fraction", "replicates", "failures", "quantity", "mean", "lo", "hi", "count"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let mut rows = Vec::new();
    for lv in &table.levels {
        let mut push = |quantity: String, b: &Band| {
            rows.push(vec![
                table.param.label().to_string(),
                fmt_f64(lv.level),
                lv.assumption.label().to_string(),
                fmt_f64(table.fraction),
                lv.replicates.to_string(),
                lv.failures.to_string(),
                quantity,
                fmt_f64(b.mean),
                fmt_f64(b.lo),
                fmt_f64(b.hi),
                b.count.to_string(),
            ]);
        };
        for (l, b) in table.labels.iter().zip(&lv.estimate) {
            push(format!("theta:{l}"), b);
        }
        for (l, b) in table.labels.iter().zip(&lv.mean_value_zero) {
            push(format!("mvz:{l}"), b);
        }
        push("observed_edges".into(), &lv.observed_edges);
        push("centralisation".into(), &lv.centralisation);
    }
    csv_with_header(hash, seed, &header, &rows)
}

/// One line of a plot with optional interval band.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, lo, hi)`; `lo`/`hi` may be NaN.
    pub points: Vec<(f64, f64, f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 70.0;
const MR: f64 = 170.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const COLOURS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Line plot with shaded bands and an optional dashed reference line.
pub fn line_plot(
    title: &str,
    x_label: &str,
    series: &[Series],
    reference: Option<f64>,
    hash: &str,
    seed: u64,
) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1) = range(pts().map(|p| p.0));
    let (y0, y1) = range(pts().flat_map(|p| [p.1, p.2, p.3]).chain(reference));
    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
    let mut s = String::new();
    let _ = writeln!(s, "<!-- {} -->", provenance(hash, seed).trim_start_matches("# ").trim_end());
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (bx0, bx1, by0, by1) = (ML, W - MR, MT, H - MB);
    let _ = writeln!(
        s,
        r#"<rect x="{bx0}" y="{by0}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        bx1 - bx0,
        by1 - by0
    );
    for k in 0..=4 {
        let yv = y0 + (y1 - y0) * k as f64 / 4.0;
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#, ML - 6.0, sy(yv) + 4.0, yv);
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#, sx(xv), H - MB + 16.0, xv);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (bx0 + bx1) / 2.0,
        H - 10.0,
        escape(x_label)
    );
    if let Some(r) = reference.filter(|r| r.is_finite()) {
        let _ = writeln!(
            s,
            r##"<line x1="{bx0:.2}" y1="{y:.2}" x2="{bx1:.2}" y2="{y:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
            y = sy(r)
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let colour = COLOURS[k % COLOURS.len()];
        let band: Vec<_> = ser.points.iter().filter(|p| p.2.is_finite() && p.3.is_finite()).collect();
        if band.len() > 1 {
            let mut d = String::new();
            for p in &band {
                let _ = write!(d, "{:.2},{:.2} ", sx(p.0), sy(p.3));
            }
            for p in band.iter().rev() {
                let _ = write!(d, "{:.2},{:.2} ", sx(p.0), sy(p.2));
            }
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{colour}" fill-opacity="0.15" stroke="none"/>"#,
                d.trim_end()
            );
        }
        let line: Vec<String> =
            ser.points.iter().filter(|p| p.1.is_finite()).map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        if !line.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                line.join(" ")
            );
            for pt in &line {
                let (cx, cy) = pt.split_once(',').expect("formatted pair");
                let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{colour}"/>"#);
            }
        }
        let ly = MT + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{colour}"/>"#,
            W - MR + 12.0,
            ly - 10.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, W - MR + 30.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

/// File-name friendly version of a term label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

/// Sweep plots: one per estimated parameter with the baseline as reference,
/// then companion plots of the zero-imputed statistics, observed edges and
/// centralisation. Returns `(file stem, svg)` pairs.
pub fn sweep_plots(table: &SweepTable, baseline: &[f64], hash: &str, seed: u64) -> Vec<(String, String)> {
    let x_label = format!("{} level", table.param.label());
    let series = |name: &str, pick: &dyn Fn(&netmiss_core::experiment::SweepLevel) -> Band| Series {
        name: name.to_string(),
        points: table
            .levels
            .iter()
            .map(|lv| {
                let b = pick(lv);
                (lv.level, b.mean, b.lo, b.hi)
            })
            .collect(),
    };
    let mut out = Vec::new();
    for (k, label) in table.labels.iter().enumerate() {
        let s = series("estimate", &|lv| lv.estimate[k]);
        out.push((
            format!("sweep_theta_{}", slug(label)),
            line_plot(&format!("{label}: estimate by level"), &x_label, &[s], baseline.get(k).copied(), hash, seed),
        ));
    }
    for (k, label) in table.labels.iter().enumerate() {
        let s = series("zero-imputed", &|lv| lv.mean_value_zero[k]);
        out.push((
            format!("sweep_mvz_{}", slug(label)),
            line_plot(&format!("{label}: zero-imputed statistic"), &x_label, &[s], None, hash, seed),
        ));
    }
    out.push((
        "sweep_observed_edges".into(),
        line_plot("Observed edges", &x_label, &[series("observed edges", &|lv| lv.observed_edges)], None, hash, seed),
    ));
    out.push((
        "sweep_centralisation".into(),
        line_plot(
            "Degree centralisation",
            &x_label,
            &[series("centralisation", &|lv| lv.centralisation)],
            None,
            hash,
            seed,
        ),
    ));
    out
}

/// Experiment plots: per parameter, mean estimate against the missing
/// fraction for every model and representation, over converged replicates.
pub fn experiment_plots(
    records: &[RunRecord],
    labels: &[String],
    baseline: Option<&[f64]>,
    hash: &str,
    seed: u64,
) -> Vec<(String, String)> {
    if records.is_empty() {
        return Vec::new();
    }
    let mut keys: Vec<(String, &'static str)> = Vec::new();
    for r in records {
        let k = (r.model.clone(), r.representation.label());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut out = Vec::new();
    for (t, label) in labels.iter().enumerate() {
        let mut series = Vec::new();
        for (model, rep) in &keys {
            let mut fractions: Vec<f64> = Vec::new();
            for r in records.iter().filter(|r| &r.model == model && r.representation.label() == *rep) {
                if !fractions.contains(&r.fraction) {
                    fractions.push(r.fraction);
                }
            }
            fractions.sort_by(f64::total_cmp);
            let points = fractions
                .iter()
                .map(|f| {
                    let vals: Vec<f64> = records
                        .iter()
                        .filter(|r| {
                            &r.model == model
                                && r.representation.label() == *rep
                                && r.fraction == *f
                                && r.result.converged
                        })
                        .map(|r| r.result.theta_hat[t])
                        .collect();
                    let b = Band::from_values(&vals);
                    (*f, b.mean, b.lo, b.hi)
                })
                .collect();
            series.push(Series { name: format!("{model} ({rep})"), points });
        }
        out.push((
            format!("experiment_theta_{}", slug(label)),
            line_plot(
                &format!("{label}: estimate by missing fraction"),
                "missing fraction",
                &series,
                baseline.and_then(|b| b.get(t).copied()),
                hash,
                seed,
            ),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_f64(f64::NAN), "NA");
        assert_eq!(fmt_f64(0.35), "0.35");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(f64::INFINITY), "Inf");
    }

    #[test]
    fn empty_records_header_only() {
        let labels = vec!["edges".to_string(), "gwesp(0.693)".to_string()];
        let text = records_csv(&[], &labels, None, "abc", 7);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "# netmiss config=abc seed=7");
        assert!(lines[1].starts_with("network,model,assumption,fraction,"));
        assert!(lines[1].ends_with("mvz:edges,mvz:gwesp(0.693)"));
    }

    #[test]
    fn plot_is_well_formed() {
        let s = Series { name: "a<b".into(), points: vec![(0.0, 1.0, 0.5, 1.5), (1.0, 2.0, f64::NAN, f64::NAN)] };
        let svg = line_plot("t", "x", &[s], Some(1.2), "h", 1);
        assert!(svg.starts_with("<!-- netmiss config=h seed=1 -->"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
