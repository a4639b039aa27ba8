use std::fmt::Write;

use super::{LinearProgram, Sense};

/// Renders `p` in the CPLEX LP text format.
pub fn write_lp_format(p: &LinearProgram) -> String {
    let var = |j: usize| -> String {
        match p.var_names.get(&j) {
            Some(n) => sanitize(n),
            None => format!("x{j}"),
        }
    };
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let mut any = false;
    for (j, &c) in p.cost.iter().enumerate() {
        if c != 0.0 {
            write!(out, " {} {}", signed(c), var(j)).unwrap();
            any = true;
        }
    }
    if !any {
        out.push_str(" 0 x0");
    }
    out.push_str("\nSubject To\n");
    for (i, row) in p.rows.iter().enumerate() {
        let name = p.row_names.get(&i).map(|n| sanitize(n)).unwrap_or_else(|| format!("r{i}"));
        write!(out, " {name}:").unwrap();
        if row.coeffs.is_empty() {
            out.push_str(" 0 x0");
        }
        for &(j, a) in &row.coeffs {
            write!(out, " {} {}", signed(a), var(j)).unwrap();
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {}", row.rhs).unwrap();
    }
    out.push_str("Bounds\n");
    for j in 0..p.num_vars() {
        let (lo, hi) = (p.lower[j], p.upper[j]);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " {} free", var(j)),
            _ if lo == hi => writeln!(out, " {} = {}", var(j), lo),
            (true, true) => writeln!(out, " {} <= {} <= {}", lo, var(j), hi),
            (true, false) => writeln!(out, " {} >= {}", var(j), lo),
            (false, true) => writeln!(out, " -inf <= {} <= {}", var(j), hi),
        }
        .unwrap();
    }
    out.push_str("End\n");
    out
}

fn signed(v: f64) -> String {
    if v < 0.0 {
        format!("- {}", -v)
    } else {
        format!("+ {v}")
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect()
}
