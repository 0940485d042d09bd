//! Document builders and writers. Every document carries both a JSON value
//! (stable, alphabetically ordered keys; shortest round-trip numbers) and a
//! CSV rendering (comma separated, header row, LF line endings), so repeated
//! runs with the same configuration produce byte-identical files.

use doublewell::bounds::{BoundsReport, JEnvelopeDetail, VerifiedQuantities};
use doublewell::iterate_even::EvenSolution;
use doublewell::oracle::OracleResult;
use doublewell::plus_odd::{OddSolution, PlusSolution};
use doublewell::quadrature::GridFn;
use doublewell::series::{GrowthDiagnostics, RatioTag, SeriesTable};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

pub struct Document {
    json: Value,
    csv: String,
}

pub fn emit(path: &Option<PathBuf>, csv: bool, doc: &Document) -> doublewell::Result<()> {
    let body = if csv {
        doc.csv.clone()
    } else {
        let mut s = serde_json::to_string_pretty(&doc.json).expect("serialization cannot fail");
        s.push('\n');
        s
    };
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)?;
            f.write_all(body.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

fn table_csv(header_meta: &str, columns: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(header_meta);
    out.push('\n');
    out.push_str(columns);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn solution_rows(fns: &[&GridFn], stride: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let grid = fns[0].grid();
    let n = grid.len();
    let mut xs = Vec::new();
    let mut rows = Vec::new();
    let mut i = 0;
    while i < n {
        let mut row = vec![grid.nodes()[i]];
        for f in fns {
            row.push(f.value_at(i));
        }
        xs.push(grid.nodes()[i]);
        rows.push(row);
        if i == n - 1 {
            break;
        }
        i = (i + stride).min(n - 1);
    }
    (xs, rows)
}

fn trial_values(psi: &GridFn, factor: &GridFn) -> GridFn {
    // trial = psi / factor, reconstructed for the table
    let grid = psi.grid().clone();
    let vals: Vec<f64> = (0..grid.len())
        .map(|i| {
            let f = factor.value_at(i);
            if f != 0.0 {
                psi.value_at(i) / f
            } else {
                0.0
            }
        })
        .collect();
    GridFn::from_values(grid, vals).expect("same grid")
}

pub fn even_document(sol: &EvenSolution, stride: usize) -> Document {
    let trial = trial_values(&sol.psi, &sol.f);
    let (_, rows) = solution_rows(&[&trial, &sol.f, &sol.psi], stride);
    let json = json!({
        "g": sol.params.g,
        "E_ev": sol.energy,
        "energy_shift": sol.energy_shift,
        "converged": sol.trace.converged,
        "iterations": sol.trace.n_iters,
        "regime_warning": sol.trace.regime_warning,
        "trace": {
            "shifts": sol.trace.shifts,
            "sup_diffs": sol.trace.sup_diffs,
        },
        "table": rows_json(&rows, &["x", "trial", "f", "psi"]),
    });
    let meta = format!(
        "# g={} E_ev={} shift={} iterations={} converged={}",
        sol.params.g, sol.energy, sol.energy_shift, sol.trace.n_iters, sol.trace.converged
    );
    Document {
        json,
        csv: table_csv(&meta, "x,trial,f,psi", &rows),
    }
}

pub fn plus_document(sol: &PlusSolution, stride: usize) -> Document {
    let trial = trial_values(&sol.psi_plus, &sol.f_plus);
    let (_, rows) = solution_rows(&[&trial, &sol.f_plus, &sol.psi_plus], stride);
    let json = json!({
        "g": sol.params.g,
        "E_plus": sol.energy,
        "energy_shift": sol.energy_shift,
        "converged": sol.trace.converged,
        "iterations": sol.trace.n_iters,
        "regime_warning": sol.trace.regime_warning,
        "trace": {
            "shifts": sol.trace.shifts,
            "sup_diffs": sol.trace.sup_diffs,
        },
        "table": rows_json(&rows, &["x", "trial", "f", "psi"]),
    });
    let meta = format!(
        "# g={} E_plus={} shift={} iterations={} converged={}",
        sol.params.g, sol.energy, sol.energy_shift, sol.trace.n_iters, sol.trace.converged
    );
    Document {
        json,
        csv: table_csv(&meta, "x,trial,f,psi", &rows),
    }
}

pub fn odd_document(sol: &OddSolution, stride: usize) -> Document {
    let (_, rows) = solution_rows(&[&sol.chi, &sol.k, &sol.psi_od], stride);
    let json = json!({
        "g": sol.plus.params.g,
        "E_od": sol.energy,
        "E_plus": sol.plus.energy,
        "delta_od": sol.delta_od,
        "gamma": sol.gamma,
        "ln_gamma": sol.ln_gamma,
        "converged": sol.trace.converged,
        "iterations": sol.trace.n_iters,
        "regime_warning": sol.trace.regime_warning,
        "trace": {
            "shifts": sol.trace.shifts,
            "sup_diffs": sol.trace.sup_diffs,
        },
        "table": rows_json(&rows, &["x", "trial", "k", "psi"]),
    });
    let meta = format!(
        "# g={} E_od={} delta_od={} gamma={} iterations={} converged={}",
        sol.plus.params.g,
        sol.energy,
        sol.delta_od,
        sol.gamma,
        sol.trace.n_iters,
        sol.trace.converged
    );
    Document {
        json,
        csv: table_csv(&meta, "x,trial,k,psi", &rows),
    }
}

fn rows_json(rows: &[Vec<f64>], names: &[&str]) -> Value {
    json!({
        "columns": names,
        "rows": rows,
    })
}

pub fn bounds_document(
    report: &BoundsReport,
    quantities: Option<&VerifiedQuantities>,
    envelope: Option<&JEnvelopeDetail>,
) -> Document {
    let json = json!({
        "report": report,
        "quantities": quantities,
        "tail_envelope": envelope,
    });
    let mut csv = String::from("name,anchor,lower,upper,computed,satisfied,regime_warning\n");
    for e in &report.entries {
        let opt = |v: Option<f64>| v.map(|v| format!("{v}")).unwrap_or_default();
        let sat = e.satisfied.map(|s| s.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},\"{}\",{},{},{},{},{}\n",
            e.name,
            e.anchor,
            opt(e.lower),
            opt(e.upper),
            opt(e.computed),
            sat,
            e.regime_warning
        ));
    }
    Document { json, csv }
}

pub fn series_document(
    table: &SeriesTable,
    ratios: &[(usize, f64, RatioTag)],
    growth: &GrowthDiagnostics,
    truncation: Option<(f64, usize)>,
) -> Document {
    let mut csv = String::from("kind,m,l,value,tag\n");
    let mut alpha_json = Vec::new();
    for m in 1..=table.m_max() {
        let row = table.alpha_row(m).expect("in range");
        let mut row_json = Vec::new();
        for (l, a) in row.iter().enumerate() {
            csv.push_str(&format!("alpha,{m},{l},{a},\n"));
            row_json.push(a.to_string());
        }
        alpha_json.push(row_json);
    }
    let mut e_json = Vec::new();
    for m in 1..=table.m_max() {
        let e = table.e(m).expect("in range");
        csv.push_str(&format!("e,{m},,{e},\n"));
        e_json.push(e.to_string());
    }
    for (m, r, tag) in ratios {
        csv.push_str(&format!("ratio,{m},,{r},{}\n", tag.as_str()));
    }
    for (m, r) in &growth.step_ratios {
        csv.push_str(&format!("growth_ratio,{m},,{r},\n"));
    }
    for (m, p) in &growth.prefactors {
        csv.push_str(&format!("prefactor,{m},,{p},\n"));
    }
    if let Some((g, m)) = truncation {
        csv.push_str(&format!("truncation,{m},,{g},\n"));
    }
    let json = json!({
        "m_max": table.m_max(),
        "alpha": alpha_json,
        "e": e_json,
        "reference_ratios": ratios
            .iter()
            .map(|(m, r, tag)| json!({"m": m, "ratio": r, "tag": tag.as_str()}))
            .collect::<Vec<_>>(),
        "growth_ratios": growth.step_ratios,
        "prefactors": growth.prefactors,
        "truncation": truncation.map(|(g, m)| json!({"g": g, "m": m})),
    });
    Document { json, csv }
}

pub fn oracle_document(levels: &OracleResult) -> Document {
    let json = json!({ "oracle": levels });
    let csv = format!(
        "level,raw,extrapolated\neven,{},{}\nplus,{},{}\nodd,{},{}\n",
        levels.e_even,
        levels.e_even_extrap,
        levels.e_plus,
        levels.e_plus_extrap,
        levels.e_odd,
        levels.e_odd_extrap
    );
    Document { json, csv }
}

pub fn compare_document(even: &EvenSolution, odd: &OddSolution, levels: &OracleResult) -> Document {
    let rows = [
        ("E_ev", even.energy, levels.e_even_extrap),
        ("E_plus", odd.plus.energy, levels.e_plus_extrap),
        ("E_od", odd.energy, levels.e_odd_extrap),
    ];
    let mut csv = String::from("level,iterative,oracle,difference\n");
    for (name, it, or) in rows {
        csv.push_str(&format!("{name},{it},{or},{}\n", it - or));
    }
    let json = json!({
        "g": even.params.g,
        "iterative": {
            "E_ev": even.energy,
            "E_plus": odd.plus.energy,
            "E_od": odd.energy,
        },
        "oracle": {
            "E_ev": levels.e_even_extrap,
            "E_plus": levels.e_plus_extrap,
            "E_od": levels.e_odd_extrap,
            "raw": {
                "E_ev": levels.e_even,
                "E_plus": levels.e_plus,
                "E_od": levels.e_odd,
            },
            "mesh_warning": levels.mesh_warning,
        },
        "difference": {
            "E_ev": even.energy - levels.e_even_extrap,
            "E_plus": odd.plus.energy - levels.e_plus_extrap,
            "E_od": odd.energy - levels.e_odd_extrap,
        },
    });
    Document { json, csv }
}
