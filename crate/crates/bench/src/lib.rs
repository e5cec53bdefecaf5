//! Fixtures shared by the benchmarks.

use varbound::problem::ProblemFile;
use varbound::VariationalProblem;

pub fn bundled(name: &str) -> ProblemFile {
    let text = match name {
        "poincare" => include_str!("../../cli/data/poincare.toml"),
        "double_well" => include_str!("../../cli/data/double_well.toml"),
        "convex" => include_str!("../../cli/data/convex.toml"),
        "well_1d" => include_str!("../../cli/data/well_1d.toml"),
        other => panic!("no bundled problem {other}"),
    };
    ProblemFile::parse(text).expect("bundled problems parse")
}

pub fn problem(name: &str) -> (ProblemFile, VariationalProblem<f64>) {
    let pf = bundled(name);
    let p = pf.build::<f64>().expect("bundled problems build");
    (pf, p)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_build() {
        for name in ["poincare", "double_well", "convex", "well_1d"] {
            super::problem(name);
        }
    }
}
