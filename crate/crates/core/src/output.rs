//! CSV and SVG emission for sweeps and tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::commitment::CommitmentSolution;
use crate::error::{Error, Result};
use crate::welfare::SweepResult;

pub const SWEEP_HEADER: &str = "rho,sigma,exists,theta_hat,tau,tau_hat,V,AR,U,alpha,beta";
pub const COMMIT_COLUMNS: &str = "tau_hat_star,theta_hat_star,Vbar";

/// Full-precision decimal form; parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Sweep table, optionally with commitment columns (one entry per row).
pub fn sweep_csv(sweep: &SweepResult, commit: Option<&[Option<CommitmentSolution>]>) -> String {
    let mut out = String::from(SWEEP_HEADER);
    if commit.is_some() {
        out.push(',');
        out.push_str(COMMIT_COLUMNS);
    }
    out.push('\n');
    for (i, row) in sweep.rows.iter().enumerate() {
        let _ = write!(out, "{},{}", fmt_num(row.rho), fmt_num(row.sigma));
        match (&row.equilibrium, &row.welfare) {
            (Some(eq), Some(w)) => {
                let _ = write!(
                    out,
                    ",1,{},{},{},{},{},{},{},{}",
                    fmt_num(eq.theta_hat),
                    fmt_num(eq.tau.to_f64()),
                    fmt_num(eq.tau_hat.to_f64()),
                    fmt_num(w.principal),
                    fmt_num(w.approval_rate),
                    fmt_num(w.agent),
                    fmt_num(w.type_one),
                    fmt_num(w.type_two)
                );
            }
            _ => out.push_str(",0,,,,,,,,"),
        }
        if let Some(c) = commit {
            let s = c.get(i).and_then(|s| s.as_ref());
            let _ = write!(
                out,
                ",{},{},{}",
                opt(s.map(|s| s.tau_hat)),
                opt(s.map(|s| s.theta_hat)),
                opt(s.map(|s| s.value))
            );
        }
        out.push('\n');
    }
    out
}

/// One parsed sweep row. Numeric fields after `exists` are `None` when empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub rho: f64,
    pub sigma: f64,
    pub exists: bool,
    pub theta_hat: Option<f64>,
    pub tau: Option<f64>,
    pub tau_hat: Option<f64>,
    pub v: Option<f64>,
    pub ar: Option<f64>,
    pub u: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Trailing commitment columns, if present.
    pub extra: Vec<Option<f64>>,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, h)| h)
        .ok_or(Error::Csv { line: 1, msg: "empty file".into() })?;
    let width = if header == SWEEP_HEADER {
        11
    } else if header == format!("{SWEEP_HEADER},{COMMIT_COLUMNS}") {
        14
    } else {
        return Err(Error::Csv { line: 1, msg: format!("unexpected header `{header}`") });
    };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(Error::Csv {
                line: n,
                msg: format!("expected {width} fields, found {}", cells.len()),
            });
        }
        let field = |i: usize| -> Result<Option<f64>> {
            if cells[i].is_empty() {
                return Ok(None);
            }
            cells[i].parse().map(Some).map_err(|_| Error::Csv {
                line: n,
                msg: format!("bad number `{}` in column {}", cells[i], i + 1),
            })
        };
        let need = |i: usize| field(i)?.ok_or(Error::Csv { line: n, msg: format!("column {} is empty", i + 1) });
        let exists = match cells[2] {
            "1" => true,
            "0" => false,
            other => return Err(Error::Csv { line: n, msg: format!("exists flag `{other}`") }),
        };
        rows.push(CsvRow {
            rho: need(0)?,
            sigma: need(1)?,
            exists,
            theta_hat: field(3)?,
            tau: field(4)?,
            tau_hat: field(5)?,
            v: field(6)?,
            ar: field(7)?,
            u: field(8)?,
            alpha: field(9)?,
            beta: field(10)?,
            extra: (11..width).map(field).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

/// Plain numeric table with a header line.
pub fn table_csv(header: &[&str], rows: &[Vec<Option<f64>>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| opt(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// Line chart against `log10(x)`. Missing values break the line.
pub fn svg_chart(title: &str, x: &[f64], series: &[(&str, Vec<Option<f64>>)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let (x0, x1) = lx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ys = series.iter().flat_map(|s| s.1.iter().flatten().copied());
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let xspan = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |v: f64| pad + (v - x0) / xspan * (w - 2.0 * pad);
    let py = |v: f64| h - pad - (v - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, w / 2.0);
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - pad, w - pad, h - pad);
    let _ = writeln!(s, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">log10 rho</text>"#, w / 2.0, h - 10.0);
    for (v, anchor, xx) in [(x0, "start", pad), (x1, "end", w - pad)] {
        let _ = writeln!(s, r#"<text x="{xx}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, h - pad + 15.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.4}</text>"#, pad - 4.0, py(v) + 4.0);
    }
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segment = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, seg.join(" "));
            }
            seg.clear();
        };
        for (xv, yv) in lx.iter().zip(ys) {
            match yv {
                Some(y) => segment.push(format!("{:.2},{:.2}", px(*xv), py(*y))),
                None => flush(&mut segment, &mut s),
            }
        }
        flush(&mut segment, &mut s);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{name}</text>"#,
            w - pad - 60.0,
            pad + 15.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Chart of `V`, `AR` and `U` for a sweep.
pub fn sweep_svg(title: &str, sweep: &SweepResult) -> String {
    svg_chart(
        title,
        &sweep.rhos(),
        &[
            ("V", sweep.column(|w| w.principal)),
            ("AR", sweep.column(|w| w.approval_rate)),
            ("U", sweep.column(|w| w.agent)),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Environment;
    use crate::equilibrium::Model;
    use crate::exec::Execution;
    use crate::noise::NoiseModel;

    fn sweep() -> SweepResult {
        let m = Model::new(
            Environment::uniform_affine(5.0, 15.0, 11.0).unwrap(),
            NoiseModel::normal(),
        )
        .unwrap();
        m.sweep(&[0.1, 0.5, 2.0], Execution::Sequential).unwrap()
    }

    #[test]
    fn header_and_missing_rows() {
        let text = sweep_csv(&sweep(), None);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SWEEP_HEADER));
        let first = lines.next().unwrap();
        assert!(first.ends_with(",0,,,,,,,,"), "{first}");
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sweep();
        let rows = parse_sweep_csv(&sweep_csv(&s, None)).unwrap();
        assert_eq!(rows.len(), 3);
        for (r, orig) in rows.iter().zip(&s.rows) {
            assert_eq!(r.rho, orig.rho);
            assert_eq!(r.exists, orig.exists());
            if let Some(w) = &orig.welfare {
                assert_eq!(r.v, Some(w.principal));
                assert_eq!(r.beta, Some(w.type_two));
                assert_eq!(r.theta_hat, Some(orig.equilibrium.as_ref().unwrap().theta_hat));
            }
        }
    }

    #[test]
    fn commit_columns_appended() {
        let s = sweep();
        let text = sweep_csv(&s, Some(&[None, None, None]));
        assert!(text.starts_with(&format!("{SWEEP_HEADER},{COMMIT_COLUMNS}\n")));
        let rows = parse_sweep_csv(&text).unwrap();
        assert_eq!(rows[2].extra, vec![None, None, None]);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let bad = format!("{SWEEP_HEADER}\n1,2,1,x,,,,,,,\n");
        assert!(matches!(parse_sweep_csv(&bad), Err(Error::Csv { line: 2, .. })));
        assert!(parse_sweep_csv("a,b\n").is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let svg = sweep_svg("t", &sweep());
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }
}
