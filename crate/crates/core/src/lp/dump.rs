use std::fmt::Write;

use super::{LinearProgram, Relation, Sense, VarBound};

fn term(out: &mut String, first: &mut bool, coef: f64, name: &str) {
    if coef == 0.0 {
        return;
    }
    let sign = if coef < 0.0 { "-" } else { "+" };
    if *first {
        if coef < 0.0 {
            out.push_str("- ");
        }
    } else {
        let _ = write!(out, " {sign} ");
    }
    let _ = write!(out, "{:?} {name}", coef.abs());
    *first = false;
}

/// Writes the program in CPLEX LP format, for cross-checking with external solvers.
pub fn to_lp_format(lp: &LinearProgram) -> String {
    let names: Vec<String> = match &lp.var_names {
        Some(n) => n.iter().map(|s| s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()).collect(),
        None => (0..lp.num_cols()).map(|j| format!("x{j}")).collect(),
    };
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj: ");
    let mut first = true;
    for (c, name) in lp.cost.iter().zip(&names) {
        term(&mut out, &mut first, *c, name);
    }
    if first {
        out.push_str("0 ");
        out.push_str(names.first().map(String::as_str).unwrap_or("x0"));
    }
    out.push_str("\nSubject To\n");
    for i in 0..lp.num_rows() {
        let _ = write!(out, " r{i}: ");
        let mut first = true;
        for (a, name) in lp.row(i).iter().zip(&names) {
            term(&mut out, &mut first, *a, name);
        }
        if first {
            let _ = write!(out, "0 {}", names.first().map(String::as_str).unwrap_or("x0"));
        }
        let rel = match lp.relation(i) {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {:?}", lp.rhs()[i]);
    }
    let free: Vec<&String> = names.iter().zip(&lp.bounds).filter(|(_, b)| **b == VarBound::Free).map(|(n, _)| n).collect();
    if !free.is_empty() {
        out.push_str("Bounds\n");
        for name in free {
            let _ = writeln!(out, " {name} free");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, -2.0], vec![VarBound::NonNegative, VarBound::Free]);
        lp.add_row(vec![1.0, 1.0], Relation::Le, 3.0);
        let text = to_lp_format(&lp);
        assert_eq!(text, "Maximize\n obj: 1.0 x0 - 2.0 x1\nSubject To\n r0: 1.0 x0 + 1.0 x1 <= 3.0\nBounds\n x1 free\nEnd\n");
    }
}
