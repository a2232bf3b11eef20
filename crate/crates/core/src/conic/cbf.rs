//! Plain-text dump in the Conic Benchmark Format (CBF, version 3), readable by
//! MOSEK, SCS, Clarabel and other external solvers for cross-checking.

use std::fmt::Write;

use super::{ConeKind, ConicProgram};

pub fn to_cbf(prog: &ConicProgram) -> String {
    let mut out = String::new();
    let n = prog.n_vars();
    let m = prog.total_rows();
    writeln!(out, "VER\n3\n").unwrap();
    writeln!(out, "OBJSENSE\nMIN\n").unwrap();
    writeln!(out, "VAR\n{n} 1\nF {n}\n").unwrap();

    writeln!(out, "CON\n{m} {}", prog.blocks().len()).unwrap();
    for block in prog.blocks() {
        let tag = match block.kind {
            ConeKind::Nonneg => "L+",
            ConeKind::Soc => "Q",
        };
        writeln!(out, "{tag} {}", block.dim()).unwrap();
    }
    out.push('\n');

    let obj: Vec<(usize, f64)> = prog
        .objective()
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, c)| *c != 0.0)
        .collect();
    writeln!(out, "OBJACOORD\n{}", obj.len()).unwrap();
    for (j, c) in obj {
        writeln!(out, "{j} {c:e}").unwrap();
    }
    out.push('\n');

    let mut acoord = Vec::new();
    let mut bcoord = Vec::new();
    let mut row = 0;
    for block in prog.blocks() {
        for r in &block.rows {
            for &(j, a) in &r.terms {
                if a != 0.0 {
                    acoord.push((row, j, a));
                }
            }
            if r.constant != 0.0 {
                bcoord.push((row, r.constant));
            }
            row += 1;
        }
    }
    writeln!(out, "ACOORD\n{}", acoord.len()).unwrap();
    for (i, j, a) in acoord {
        writeln!(out, "{i} {j} {a:e}").unwrap();
    }
    out.push('\n');
    writeln!(out, "BCOORD\n{}", bcoord.len()).unwrap();
    for (i, b) in bcoord {
        writeln!(out, "{i} {b:e}").unwrap();
    }
    out
}
