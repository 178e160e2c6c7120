//! Static HTML index linking the per-stage artifacts.

use std::fmt::Write as _;

use crate::casestudy::PipelineReport;

pub(crate) fn html_index(report: &PipelineReport) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>{} diagnostics</title>\
         <style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}\
         td,th{{border:1px solid #ccc;padding:4px 10px}}img{{max-width:480px;margin:6px}}</style>\
         </head><body><h1>{} diagnostics</h1>",
        report.pipeline, report.pipeline
    );
    let _ = write!(
        out,
        "<p>input: <code>{}</code> (hash <code>{}</code>), {} rows ingested</p>",
        report.dataset_path, report.dataset_hash, report.n_ingested
    );
    if !report.notes.is_empty() {
        out.push_str("<ul>");
        for n in &report.notes {
            let _ = write!(out, "<li>{n}</li>");
        }
        out.push_str("</ul>");
    }
    if !report.cleaning.is_empty() {
        out.push_str("<h2>Cleaning</h2><ul>");
        for c in &report.cleaning {
            let _ = write!(
                out,
                "<li><code>{}</code>: removed rows {:?}</li>",
                c.rule, c.removed_rows
            );
        }
        out.push_str("</ul>");
    }
    out.push_str(
        "<h2>Stages</h2><table><tr><th>stage</th><th>AIC</th><th>dispersion</th>\
         <th>Fn-Fn sup dev</th><th>rows skipped</th></tr>",
    );
    for s in &report.stages {
        let _ = write!(
            out,
            "<tr><td>{}</td><td>{}</td><td>{}</td><td>{:.4}</td><td>{}</td></tr>",
            s.name,
            s.aic.map_or("-".into(), |a| format!("{a:.1}")),
            s.dispersion.map_or("-".into(), |d| format!("{d:.3}")),
            s.fnfn_sup_dev,
            s.rows_skipped
        );
    }
    out.push_str("</table>");
    for s in &report.stages {
        let _ = write!(out, "<h2>{}</h2>", s.name);
        for a in &s.artifacts {
            if a.ends_with(".svg") {
                let _ = write!(out, "<a href=\"{a}\"><img src=\"{a}\" alt=\"{a}\"/></a>");
            }
        }
        out.push_str("<p>");
        for a in &s.artifacts {
            if !a.ends_with(".svg") {
                let _ = write!(out, "<a href=\"{a}\">{a}</a> ");
            }
        }
        out.push_str("</p>");
    }
    out.push_str("</body></html>\n");
    out
}
